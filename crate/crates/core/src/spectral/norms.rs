//! Grid-quadrature `L^p` norms and the dissipation functional
//! `∫ |∇(|f|^{p/2})|² dx`.

use num_complex::Complex64;

use super::fft;
use super::field::{ScalarField, VectorField};
use super::grid::GridSpec;
use crate::error::{Result, SnseError};

/// How a vector field's `L^p` norm combines its components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// `(Σ_j ∫ |u_j|^p)^{1/p}`; for `p = ∞` the largest component sup.
    Componentwise,
    /// `(∫ |u|^p)^{1/p}` with the pointwise Euclidean magnitude.
    Magnitude,
}

/// Accepts `p ≥ 1` (finite) and `p = ∞`.
pub fn check_exponent(p: f64) -> Result<()> {
    if p == f64::INFINITY || (p.is_finite() && p >= 1.0) {
        Ok(())
    } else {
        Err(SnseError::UnsupportedExponent(p))
    }
}

#[inline]
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    match p as u32 {
        2 if p == 2.0 => a * a,
        3 if p == 3.0 => a * a * a,
        6 if p == 6.0 => {
            let c = a * a * a;
            c * c
        }
        9 if p == 9.0 => {
            let c = a * a * a;
            c * c * c
        }
        18 if p == 18.0 => {
            let c = a * a * a;
            let c = c * c * c;
            c * c
        }
        _ => a.powf(p),
    }
}

/// `|u|^p` from the squared magnitude `s = |u|²`.
#[inline]
fn magnitude_pow(s: f64, p: f64) -> f64 {
    match p as u32 {
        2 if p == 2.0 => s,
        3 if p == 3.0 => s * s.sqrt(),
        6 if p == 6.0 => s * s * s,
        _ => s.powf(0.5 * p),
    }
}

/// `∫ |f|^p` by the uniform grid sum (no exponent validation).
pub fn integral_abs_pow(grid: &GridSpec, values: &[f64], p: f64) -> f64 {
    grid.cell_volume() * values.iter().map(|&v| abs_pow(v, p)).sum::<f64>()
}

/// `L^p` norm of grid samples. `p` must already be validated.
pub fn lp_norm_values(grid: &GridSpec, values: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    integral_abs_pow(grid, values, p).powf(1.0 / p)
}

pub fn magnitude_lp_values(grid: &GridSpec, parts: [&[f64]; 3], p: f64) -> f64 {
    let [a, b, c] = parts;
    if p == f64::INFINITY {
        let s = a
            .iter()
            .zip(b)
            .zip(c)
            .map(|((x, y), z)| x * x + y * y + z * z)
            .fold(0.0, f64::max);
        return s.sqrt();
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| magnitude_pow(x * x + y * y + z * z, p))
        .sum();
    (grid.cell_volume() * sum).powf(1.0 / p)
}

pub fn componentwise_lp_values(grid: &GridSpec, parts: [&[f64]; 3], p: f64) -> f64 {
    if p == f64::INFINITY {
        return parts
            .iter()
            .map(|v| lp_norm_values(grid, v, p))
            .fold(0.0, f64::max);
    }
    let total: f64 = parts.iter().map(|v| integral_abs_pow(grid, v, p)).sum();
    total.powf(1.0 / p)
}

pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm_values(f.grid(), &f.values(), p))
}

pub fn vector_lp_norm(u: &VectorField, p: f64, mode: NormMode) -> Result<f64> {
    check_exponent(p)?;
    let [a, b, c] = u.values();
    let parts = [a.as_slice(), b.as_slice(), c.as_slice()];
    Ok(match mode {
        NormMode::Componentwise => componentwise_lp_values(u.grid(), parts, p),
        NormMode::Magnitude => magnitude_lp_values(u.grid(), parts, p),
    })
}

/// `∫ |∇(|f|^{p/2})|²` through the chain rule `(p/2)² ∫ |f|^{p−2} |∇f|²`,
/// with `∇f` spectral. Exact up to quadrature for band-limited `f`, which
/// avoids differentiating the kinks of `|f|^{p/2}` on the grid.
pub fn dissipation_values(grid: &GridSpec, values: &[f64], p: f64) -> f64 {
    let n = grid.n();
    let c = fft::forward_real(n, values);
    let deriv = |axis: usize| -> Vec<Complex64> {
        (0..grid.len())
            .map(|idx| {
                let i = [idx % n, (idx / n) % n, idx / (n * n)][axis];
                c[idx] * Complex64::new(0.0, grid.derivative_wavenumber(i))
            })
            .collect()
    };
    let (gx, gy) = fft::inverse_real_pair(n, &deriv(0), &deriv(1));
    let gz = fft::inverse_real(n, &deriv(2));
    let weight = |v: f64| -> f64 {
        let a = v.abs();
        if p == 2.0 {
            1.0
        } else if p == 3.0 {
            a
        } else if p == 6.0 {
            a * a * a * a
        } else {
            a.powf(p - 2.0)
        }
    };
    let mut acc = 0.0;
    for idx in 0..grid.len() {
        acc += weight(values[idx]) * (gx[idx] * gx[idx] + gy[idx] * gy[idx] + gz[idx] * gz[idx]);
    }
    0.25 * p * p * acc * grid.cell_volume()
}

pub fn dissipation(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(SnseError::UnsupportedExponent(p));
    }
    Ok(dissipation_values(f.grid(), &f.values(), p))
}

/// Componentwise sum `Σ_j ∫ |∇(|u_j|^{p/2})|²`.
pub fn vector_dissipation(u: &VectorField, p: f64) -> Result<f64> {
    let mut total = 0.0;
    for c in u.components() {
        total += dissipation(c, p)?;
    }
    Ok(total)
}

/// `‖f‖_{3p}^p / ∫|∇(|f|^{p/2})|²` for a mean-zero, nonzero `f`.
pub fn interp_ratio(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(SnseError::UnsupportedExponent(p));
    }
    let values = f.values();
    let grid = f.grid();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let l2 = lp_norm_values(grid, &values, 2.0);
    let tol = 1e-10 * l2;
    if mean.abs() > tol {
        return Err(SnseError::NonZeroMean { mean, tol });
    }
    let dissip = dissipation_values(grid, &values, p);
    if dissip <= 0.0 {
        return Err(crate::error::invalid("f", "zero field has no dissipation"));
    }
    Ok(integral_abs_pow(grid, &values, 3.0 * p).powf(1.0 / 3.0) / dissip)
}
