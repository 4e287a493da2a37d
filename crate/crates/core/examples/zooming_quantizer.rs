//! Encode and decode a 2-D output with a zooming uniform quantizer.
//!
//! The frame is a box of half-width `range` around a center; each axis is split into N
//! cells and the index packs the per-axis cells. Shrinking the range (zooming in) keeps
//! the relative error at 1/N while the absolute error falls.

use selftrig::matops::{vec_inf_norm, vec_sub};
use selftrig::quantizer::{decode, encode, QuantizationFrame, QuantizerSpec};

fn main() -> selftrig::Result<()> {
    let spec = QuantizerSpec::new(11, 2)?;
    let y = [0.42, -0.137];
    let mut frame = QuantizationFrame { center: vec![0.0, 0.0], range: 1.0 };

    println!("{:>10} {:>8} {:>24} {:>10}", "range", "index", "decoded", "error");
    for _ in 0..5 {
        let index = encode(&spec, &frame, &y)?;
        let q = decode(&spec, &frame, index)?;
        let err = vec_inf_norm(&vec_sub(&y, &q));
        println!("{:>10.4} {:>8} {:>24} {:>10.2e}", frame.range, index, format!("{q:.5?}"), err);
        assert!(err <= frame.range / spec.levels() as f64 + 1e-15);
        // Zoom around the decoded value.
        frame = QuantizationFrame { center: q, range: frame.range / 4.0 };
    }

    let outside = QuantizationFrame { center: vec![0.0, 0.0], range: 0.1 };
    match encode(&spec, &outside, &y) {
        Err(e) => println!("outside the frame: {e}"),
        Ok(i) => unreachable!("encoded {i}"),
    }
    Ok(())
}
