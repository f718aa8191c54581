//! One-dimensional reference problems: the twisted ring and the separated
//! radial equation on a disc.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use super::operator::{BoundaryCondition, HermitianOperator};
use crate::error::{Error, Result};

pub const MIN_RING_POINTS: usize = 8;
pub const MIN_RADIAL_CELLS: usize = 64;

/// Closed-form lowest eigenvalue of the `m`-point ring with uniform link
/// phase `h/m`: `min_n (2/Δθ²)(1 − cos((n − h/2π)Δθ))`, `Δθ = 2π/m`.
pub fn lambda_1d_twisted(h: f64, m: usize) -> Result<f64> {
    if m < MIN_RING_POINTS {
        return Err(Error::ResolutionInsufficient(format!(
            "ring needs at least {MIN_RING_POINTS} points, got {m}"
        )));
    }
    let dtheta = 2.0 * PI / m as f64;
    let t = h / (2.0 * PI);
    let value = [t.floor(), t.ceil()]
        .iter()
        .map(|n| 2.0 / (dtheta * dtheta) * (1.0 - ((n - t) * dtheta).cos()))
        .fold(f64::INFINITY, f64::min);
    Ok(value)
}

/// The ring operator itself, for checking [`lambda_1d_twisted`] against a
/// direct solve.
pub fn twisted_ring_operator(h: f64, m: usize) -> Result<HermitianOperator> {
    if m < MIN_RING_POINTS {
        return Err(Error::ResolutionInsufficient(format!(
            "ring needs at least {MIN_RING_POINTS} points, got {m}"
        )));
    }
    let dtheta = 2.0 * PI / m as f64;
    let inv = 1.0 / (dtheta * dtheta);
    let theta = h / m as f64;
    let mut upper: Vec<_> = (0..m - 1)
        .map(|k| (k, k + 1, -Complex64::from_polar(inv, -theta)))
        .collect();
    // closing link m-1 -> 0, stored from the row-0 side
    upper.push((0, m - 1, -Complex64::from_polar(inv, theta)));
    HermitianOperator::from_upper(
        dtheta,
        BoundaryCondition::NeumannNatural,
        vec![2.0 * inv; m],
        &upper,
    )
}

/// Lowest eigenvalue over angular modes `m ∈ modes` of
/// `−u'' − u'/r + ((m − h/2π)/r)² u = λu` on `(0, radius)` with a Neumann
/// condition at `radius`.
///
/// Writing `u = r^ν v` with `ν = |m − h/2π|` removes the singular behavior at
/// the origin: `v` is smooth and minimizes
/// `(∫ r^{2ν+1} v'² dr + ν R^{2ν} v(R)²) / ∫ r^{2ν+1} v² dr`.
/// That quotient is discretized with `n_r` linear elements (exact element
/// integrals, lumped mass) and the tridiagonal problem is solved by
/// Sturm-sequence bisection.
pub fn lambda_disc_radial_oracle(
    h: f64,
    radius: f64,
    modes: RangeInclusive<i64>,
    n_r: usize,
) -> Result<f64> {
    if n_r < MIN_RADIAL_CELLS {
        return Err(Error::ResolutionInsufficient(format!(
            "radial oracle needs at least {MIN_RADIAL_CELLS} cells, got {n_r}"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let t = h / (2.0 * PI);
    let (lo, hi) = (t.floor() as i64, t.ceil() as i64);
    if !(modes.contains(&lo) && modes.contains(&hi)) {
        return Err(Error::InvalidArgument(format!(
            "mode range {modes:?} must contain {lo} and {hi}"
        )));
    }
    Ok(modes
        .map(|m| radial_mode_eigenvalue((m as f64 - t).abs(), radius, n_r))
        .fold(f64::INFINITY, f64::min))
}

/// Default mode window: the five integers around `h/2π`.
pub fn default_modes(h: f64) -> RangeInclusive<i64> {
    let c = (h / (2.0 * PI)).round() as i64;
    c - 2..=c + 2
}

fn radial_mode_eigenvalue(nu: f64, radius: f64, n_r: usize) -> f64 {
    let dr = radius / n_r as f64;
    let p = 2.0 * nu + 1.0;
    let moment = |q: f64, a: f64, b: f64| (b.powf(q + 1.0) - a.powf(q + 1.0)) / (q + 1.0);
    let mut stiff_diag = vec![0.0; n_r + 1];
    let mut stiff_off = vec![0.0; n_r];
    let mut mass = vec![0.0; n_r + 1];
    for e in 0..n_r {
        let (a, b) = (e as f64 * dr, (e + 1) as f64 * dr);
        let k = moment(p, a, b) / (dr * dr);
        stiff_diag[e] += k;
        stiff_diag[e + 1] += k;
        stiff_off[e] = -k;
        let (i0, i1) = (moment(p, a, b), moment(p + 1.0, a, b));
        mass[e] += (b * i0 - i1) / dr;
        mass[e + 1] += (i1 - a * i0) / dr;
    }
    stiff_diag[n_r] += nu * radius.powf(2.0 * nu);
    let diag: Vec<f64> = (0..=n_r).map(|k| stiff_diag[k] / mass[k]).collect();
    let off: Vec<f64> = (0..n_r)
        .map(|k| stiff_off[k] / (mass[k] * mass[k + 1]).sqrt())
        .collect();
    lowest_tridiagonal(&diag, &off)
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection on the
/// Sturm count.
fn lowest_tridiagonal(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            q = diag[i] - x - if i > 0 { b2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (diag[i].abs() + x.abs()).max(1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigen::lowest_eigenpair;

    #[test]
    fn ring_closed_form_values() {
        assert_eq!(lambda_1d_twisted(0.0, 32).unwrap(), 0.0);
        let v = lambda_1d_twisted(PI, 1 << 14).unwrap();
        assert!((v - 0.25).abs() < 1e-6);
        assert!(lambda_1d_twisted(1.0, 4).is_err());
    }

    #[test]
    fn ring_operator_matches_closed_form() {
        for &h in &[0.3, 1.3, PI, 5.0, -2.2] {
            let op = twisted_ring_operator(h, 24).unwrap();
            let r = lowest_eigenpair(&op, 1e-11).unwrap();
            assert!((r.value - lambda_1d_twisted(h, 24).unwrap()).abs() < 1e-10, "h = {h}");
        }
    }

    #[test]
    fn radial_zero_modes() {
        assert!(lambda_disc_radial_oracle(0.0, 1.0, -2..=2, 128).unwrap().abs() < 1e-9);
        assert!(lambda_disc_radial_oracle(2.0 * PI, 1.0, -1..=3, 128).unwrap().abs() < 1e-9);
    }

    #[test]
    fn radial_half_flux_root() {
        // ν = ½: the Neumann condition on r^{-1/2} sin(√λ r) gives tan x = 2x
        let mut x: f64 = 1.1;
        for _ in 0..50 {
            x -= (x.tan() - 2.0 * x) / (1.0 / x.cos().powi(2) - 2.0);
        }
        let v = lambda_disc_radial_oracle(PI, 1.0, default_modes(PI), 1024).unwrap();
        assert!((v - x * x).abs() / (x * x) < 1e-3, "{v} vs {}", x * x);
    }

    #[test]
    fn radial_scales_with_radius() {
        let a = lambda_disc_radial_oracle(1.0, 1.0, -2..=2, 256).unwrap();
        let b = lambda_disc_radial_oracle(1.0, 2.0, -2..=2, 256).unwrap();
        assert!((a - 4.0 * b).abs() < 1e-9 * a);
    }

    #[test]
    fn radial_rejects_bad_input() {
        assert!(lambda_disc_radial_oracle(PI, 1.0, 0..=1, 32).is_err());
        assert!(lambda_disc_radial_oracle(PI, 1.0, 1..=2, 128).is_err());
    }
}
