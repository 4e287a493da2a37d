//! Uniform box quantizer with a moving center and range.

use serde::Serialize;

use crate::error::{Error, Result};

const FRAME_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QuantizerSpec {
    levels: u64,
    dims: usize,
    /// `levels^dims`, the largest valid index.
    cells: u64,
}

impl QuantizerSpec {
    pub fn new(levels: u64, dims: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Domain(format!("need at least 2 levels, got {levels}")));
        }
        if dims == 0 {
            return Err(Error::Domain("output dimension must be positive".into()));
        }
        let cells = u32::try_from(dims)
            .ok()
            .and_then(|d| levels.checked_pow(d))
            .ok_or(Error::IndexOverflow { levels, dims })?;
        Ok(QuantizerSpec { levels, dims, cells })
    }

    pub fn levels(&self) -> u64 {
        self.levels
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn max_index(&self) -> u64 {
        self.cells
    }
}

/// The hypercube `‖y − center‖∞ ≤ range`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationFrame {
    pub center: Vec<f64>,
    pub range: f64,
}

/// Index in `1..=levels^dims` of the cell containing `y`; axis `i` is base-`levels` digit `i`.
pub fn encode(spec: &QuantizerSpec, frame: &QuantizationFrame, y: &[f64]) -> Result<u64> {
    check_dims(spec, frame, y.len())?;
    let e = frame.range;
    let n = spec.levels;
    let mut index = 0u64;
    let mut place = 1u64;
    for (yi, ci) in y.iter().zip(&frame.center) {
        let d = yi - ci;
        if !d.is_finite() {
            return Err(Error::NonFinite("quantizer input"));
        }
        if d.abs() > e * (1.0 + FRAME_SLACK) {
            return Err(Error::OutOfRange {
                distance: d.abs(),
                range: e,
            });
        }
        let bin = if e == 0.0 {
            n / 2
        } else {
            let raw = ((d + e) * n as f64 / (2.0 * e)).floor();
            raw.clamp(0.0, (n - 1) as f64) as u64
        };
        index += bin * place;
        place = place.wrapping_mul(n);
    }
    Ok(index + 1)
}

/// Cell midpoint for an index produced by [`encode`].
pub fn decode(spec: &QuantizerSpec, frame: &QuantizationFrame, index: u64) -> Result<Vec<f64>> {
    check_dims(spec, frame, spec.dims)?;
    if index == 0 || index > spec.cells {
        return Err(Error::BadIndex {
            index,
            max: spec.cells,
        });
    }
    let e = frame.range;
    let n = spec.levels;
    let mut rest = index - 1;
    Ok(frame
        .center
        .iter()
        .map(|c| {
            let bin = rest % n;
            rest /= n;
            if e == 0.0 {
                *c
            } else {
                // Offset from the center, so the middle cell of an odd N decodes exactly.
                c + ((2 * bin + 1) as f64 - n as f64) * e / n as f64
            }
        })
        .collect())
}

fn check_dims(spec: &QuantizerSpec, frame: &QuantizationFrame, len: usize) -> Result<()> {
    if frame.center.len() != spec.dims || len != spec.dims {
        return Err(Error::Dimension(format!(
            "quantizer expects {} outputs, got center {} and input {}",
            spec.dims,
            frame.center.len(),
            len
        )));
    }
    if !(frame.range >= 0.0 && frame.range.is_finite()) {
        return Err(Error::Domain(format!("quantizer range {}", frame.range)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(center: Vec<f64>, range: f64) -> QuantizationFrame {
        QuantizationFrame { center, range }
    }

    #[test]
    fn center_maps_to_middle() {
        let spec = QuantizerSpec::new(3, 2).unwrap();
        let f = frame(vec![0.4, -2.0], 1.5);
        let i = encode(&spec, &f, &[0.4, -2.0]).unwrap();
        assert_eq!(i, 1 + 1 + 3);
        let q = decode(&spec, &f, i).unwrap();
        assert!((q[0] - 0.4).abs() < 1e-15 && q[1] == -2.0, "{q:?}");
    }

    #[test]
    fn two_levels() {
        let spec = QuantizerSpec::new(2, 1).unwrap();
        let f = frame(vec![0.0], 1.0);
        let i = encode(&spec, &f, &[0.5]).unwrap();
        assert_eq!(i, 2);
        assert_eq!(decode(&spec, &f, i).unwrap(), vec![0.5]);
    }

    #[test]
    fn upper_face_clamps() {
        let spec = QuantizerSpec::new(5, 1).unwrap();
        let f = frame(vec![1.0], 2.0);
        assert_eq!(encode(&spec, &f, &[3.0]).unwrap(), 5);
        assert_eq!(encode(&spec, &f, &[-1.0]).unwrap(), 1);
    }

    #[test]
    fn zero_range_collapses() {
        let spec = QuantizerSpec::new(4, 2).unwrap();
        let f = frame(vec![1.0, 2.0], 0.0);
        let i = encode(&spec, &f, &[1.0, 2.0]).unwrap();
        for j in 1..=spec.max_index() {
            assert_eq!(decode(&spec, &f, j).unwrap(), vec![1.0, 2.0]);
        }
        assert!(i >= 1 && i <= spec.max_index());
        assert!(encode(&spec, &f, &[1.0, 2.1]).is_err());
    }

    #[test]
    fn errors() {
        let spec = QuantizerSpec::new(3, 1).unwrap();
        let f = frame(vec![0.0], 1.0);
        assert!(matches!(
            encode(&spec, &f, &[1.1]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(encode(&spec, &f, &[1.0 + 1e-12]).is_ok());
        assert!(matches!(decode(&spec, &f, 0), Err(Error::BadIndex { .. })));
        assert!(matches!(decode(&spec, &f, 4), Err(Error::BadIndex { .. })));
        assert!(QuantizerSpec::new(1, 1).is_err());
        assert!(matches!(
            QuantizerSpec::new(101, 10),
            Err(Error::IndexOverflow { .. })
        ));
    }
}
