//! Small dense matrices and the certificate computations built on them.

mod cert;
mod expm;
mod matrix;
mod rank;

pub use cert::{
    certify_decay, fit_decay, fit_growth, is_schur, spectral_radius, weighted_norm,
    DecayCertificate, GrowthCertificate, SCAN_CAP, SCHUR_TOL,
};
pub use expm::discretize_zoh;
pub use matrix::{vec_add, vec_inf_norm, vec_sub, Matrix};
pub use rank::{check_observable, controllability_index, krylov_blocks, rank, RANK_TOL};

pub fn inf_norm(m: &Matrix) -> f64 {
    m.inf_norm()
}
