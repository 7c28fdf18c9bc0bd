//! Point enumeration in a ball.
//!
//! Integer coordinates are bounded by `|m_i + w_i| ≤ R ‖row_i(B⁻¹)‖` with
//! `w = B⁻¹ c`, which contains every point of the translated lattice in the
//! ball; the box is then filtered by distance.

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;

/// Default cap on the number of enumerated points.
pub const DEFAULT_MAX_POINTS: usize = 10_000_000;

/// Visits every point `p + center` (`p ∈ L`) with `|p + center| ≤ radius`, in a
/// fixed lexicographic order of integer coordinates. The callback receives the
/// integer coordinates, the Cartesian position and the squared norm.
/// Returns the number of visited points.
pub fn visit_ball<F>(
    lattice: &Lattice,
    center: &[f64],
    radius: f64,
    max_points: usize,
    mut visit: F,
) -> Result<usize>
where
    F: FnMut(&[i64], &[f64], f64),
{
    let d = lattice.dim();
    if center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: center.len(),
        });
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid("radius", "must be positive and finite"));
    }
    let w = lattice.coordinates(center);
    let rows = lattice.inverse_row_norms();
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    for i in 0..d {
        let span = radius * rows[i];
        lo[i] = (-w[i] - span).ceil() as i64;
        hi[i] = (-w[i] + span).floor() as i64;
        if lo[i] > hi[i] {
            return Ok(0);
        }
    }
    let cols = lattice.columns();
    let r2 = radius * radius;
    let mut m = lo.clone();
    let mut pos = vec![0.0; d];
    let mut count = 0usize;

    // Odometer over the box; the innermost coordinate is the last one.
    'outer: loop {
        for i in 0..d {
            pos[i] = center[i];
            for j in 0..d {
                pos[i] += m[j] as f64 * cols[j][i];
            }
        }
        let n2: f64 = pos.iter().map(|v| v * v).sum();
        if n2 <= r2 {
            count += 1;
            if count > max_points {
                return Err(Error::CapExceeded {
                    cap: max_points,
                    partial: None,
                });
            }
            visit(&m, &pos, n2);
        }
        let mut k = d;
        loop {
            if k == 0 {
                break 'outer;
            }
            k -= 1;
            if m[k] < hi[k] {
                m[k] += 1;
                break;
            }
            m[k] = lo[k];
        }
    }
    Ok(count)
}

/// All points `p + center` of the translated lattice inside the closed ball.
pub fn enumerate(
    lattice: &Lattice,
    center: &[f64],
    radius: f64,
    max_points: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    visit_ball(lattice, center, radius, max_points, |_, p, _| out.push(p.to_vec()))?;
    Ok(out)
}
