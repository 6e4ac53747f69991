//! Binary propagator dumps for debugging.
//!
//! Each record is little-endian: `u64` dimension, `f64` time, then `d*d`
//! `(re, im)` pairs of `f64` in row-major order. Records are concatenated.
//! Not a stable format.

use std::io::{Read, Write};

use ddkit_core::propagation::Snapshot;
use ddkit_core::{CMat, Complex64};

pub fn write_snapshot(mut w: impl Write, time: f64, m: &CMat) -> std::io::Result<()> {
    let d = m.nrows();
    w.write_all(&(d as u64).to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_snapshots(mut w: impl Write, snaps: &[Snapshot]) -> std::io::Result<()> {
    for s in snaps {
        write_snapshot(&mut w, s.time, &s.matrix)?;
    }
    Ok(())
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads all records until end of input.
pub fn read_snapshots(mut r: impl Read) -> std::io::Result<Vec<(f64, CMat)>> {
    let mut out = Vec::new();
    loop {
        let mut b = [0u8; 8];
        match r.read_exact(&mut b) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(out),
            Err(e) => return Err(e),
        }
        let d = u64::from_le_bytes(b) as usize;
        if d == 0 || d > 1 << 16 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("implausible dimension {d}"),
            ));
        }
        let time = read_f64(&mut r)?;
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        out.push((time, m));
    }
}
