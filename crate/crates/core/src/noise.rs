//! Truncated cylindrical Wiener noise and the linear multiplicative noise
//! operator `σ(t, u) e_m = ε_σ c_m 𝒫₀(ρ_m * u)`.
//!
//! Each shape kernel is `ρ_m(x) = Π_j (1 + cos(x_j − a_{m,j}))² / (3π)`:
//! nonnegative, unit mass, and supported on `|k_j| ≤ 2` in Fourier space.
//! Convolution with a nonnegative unit-mass kernel is an `L^p` contraction
//! (also for the grid quadrature, since the kernel is band-limited), so for
//! divergence-free inputs the root-sum-square over modes is at most
//! `ε_σ (Σ c_m²)^{1/2} ‖u‖_p ≤ ε_σ ‖u‖_p`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::{self, Domain};
use crate::spectral::field::ensure_same_grid;
use crate::spectral::{vector_lp_norm, GridSpec, NormMode, ScalarField, VectorField};

/// Highest per-axis wavenumber of any shape kernel.
const KERNEL_BAND: i64 = 2;

/// `ζ(2) = π²/6`, so that `Σ_{m≥1} c_m² = 1` for `c_m = m^{-1}/√ζ(2)`.
const ZETA2: f64 = PI * PI / 6.0;

#[derive(Clone, Debug)]
pub struct NoiseBasis {
    grid: GridSpec,
    eps_sigma: f64,
    weights: Vec<f64>,
    shifts: Vec<[f64; 3]>,
    /// Flat indices of modes with `|k_j| ≤ 2`, the only ones the noise touches.
    support: Vec<usize>,
    /// `symbols[s][m]`: Fourier multiplier of `ρ_m` at `support[s]`.
    symbols: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseDescription {
    pub mode_count: usize,
    pub eps_sigma: f64,
    pub weight_rule: &'static str,
    pub kernel_rule: &'static str,
}

/// One-dimensional multiplier of `(1 + cos(x − a))² / (3π)`.
fn axis_symbol(k: i64, a: f64) -> Complex64 {
    let amp = match k.abs() {
        0 => 1.0,
        1 => 2.0 / 3.0,
        2 => 1.0 / 6.0,
        _ => return Complex64::default(),
    };
    Complex64::from_polar(amp, -(k as f64) * a)
}

fn shift(m: usize) -> [f64; 3] {
    // Kronecker sequence: well spread, distinct for every m
    const ALPHA: [f64; 3] = [0.618_033_988_749_894_9, 0.414_213_562_373_095_1, 0.732_050_807_568_877_2];
    ALPHA.map(|a| 2.0 * PI * ((m as f64 + 1.0) * a).fract())
}

impl NoiseBasis {
    /// `mode_count = 0` gives `σ ≡ 0`.
    pub fn new(grid: &GridSpec, mode_count: usize, eps_sigma: f64) -> Result<Self> {
        if !(eps_sigma > 0.0 && eps_sigma <= 1.0) {
            return Err(invalid("eps_sigma", format!("must lie in (0, 1], got {eps_sigma}")));
        }
        let weights: Vec<f64> = (1..=mode_count).map(|m| 1.0 / (m as f64 * ZETA2.sqrt())).collect();
        let shifts: Vec<[f64; 3]> = (0..mode_count).map(shift).collect();
        let mut support = Vec::new();
        let mut symbols = Vec::new();
        for idx in 0..grid.len() {
            let k = grid.mode(idx);
            if k.iter().any(|c| c.abs() > KERNEL_BAND) {
                continue;
            }
            support.push(idx);
            symbols.push(
                shifts
                    .iter()
                    .map(|a| axis_symbol(k[0], a[0]) * axis_symbol(k[1], a[1]) * axis_symbol(k[2], a[2]))
                    .collect(),
            );
        }
        Ok(Self {
            grid: grid.clone(),
            eps_sigma,
            weights,
            shifts,
            support,
            symbols,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mode_count(&self) -> usize {
        self.weights.len()
    }

    pub fn eps_sigma(&self) -> f64 {
        self.eps_sigma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ_{m > M} c_m²` for this basis's `M`.
    pub fn tail_weight(&self) -> f64 {
        let head: f64 = self.weights.iter().map(|c| c * c).sum();
        (1.0 - head).max(0.0)
    }

    /// Physical samples of `ρ_m`.
    pub fn shape_kernel(&self, m: usize) -> ScalarField {
        let a = self.shifts[m];
        ScalarField::from_fn(&self.grid, |x| {
            (0..3).map(|j| (1.0 + (x[j] - a[j]).cos()).powi(2)).product::<f64>() / (3.0 * PI).powi(3)
        })
    }

    pub fn describe(&self) -> NoiseDescription {
        NoiseDescription {
            mode_count: self.mode_count(),
            eps_sigma: self.eps_sigma,
            weight_rule: "c_m = 1/(m*sqrt(pi^2/6))",
            kernel_rule: "rho_m(x) = prod_j (1+cos(x_j-a_mj))^2/(3*pi), a_m = 2*pi*frac((m+1)*alpha), alpha = (golden-1, sqrt2-1, sqrt3-1)",
        }
    }

    /// Nonzero Fourier coefficients of `factor · Σ_m σ(u) e_m ΔW_m` as
    /// `(flat index, value)` pairs; `u` is spectral.
    pub fn increment(&self, u: [&[Complex64]; 3], dw: &[f64], factor: f64) -> Vec<(usize, [Complex64; 3])> {
        if self.is_zero() || factor == 0.0 {
            return Vec::new();
        }
        debug_assert_eq!(dw.len(), self.mode_count());
        let scale = self.eps_sigma * factor;
        let mut out = Vec::with_capacity(self.support.len());
        for (s, &idx) in self.support.iter().enumerate() {
            if idx == 0 {
                continue;
            }
            let mult: Complex64 = self.symbols[s]
                .iter()
                .zip(&self.weights)
                .zip(dw)
                .map(|((r, c), w)| r * (c * w))
                .sum::<Complex64>()
                * scale;
            out.push((idx, project_mode(&self.grid, idx, [u[0][idx] * mult, u[1][idx] * mult, u[2][idx] * mult])));
        }
        out
    }

    /// Adds `factor · Σ_m σ(u) e_m ΔW_m` to `out`, all spectral.
    pub fn accumulate(&self, u: [&[Complex64]; 3], dw: &[f64], factor: f64, out: [&mut [Complex64]; 3]) {
        let [o0, o1, o2] = out;
        for (idx, v) in self.increment(u, dw, factor) {
            o0[idx] += v[0];
            o1[idx] += v[1];
            o2[idx] += v[2];
        }
    }
}

/// Leray projection of a single Fourier coefficient.
fn project_mode(grid: &GridSpec, idx: usize, v: [Complex64; 3]) -> [Complex64; 3] {
    let [a, b, c] = grid.unflatten(idx);
    let k = [
        grid.derivative_wavenumber(a),
        grid.derivative_wavenumber(b),
        grid.derivative_wavenumber(c),
    ];
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return v;
    }
    let dot = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
    [v[0] - dot * k[0], v[1] - dot * k[1], v[2] - dot * k[2]]
}

/// `σ(t, u) e_m` for every retained mode; spectral outputs.
pub fn sigma_apply(basis: &NoiseBasis, _t: f64, u: &VectorField) -> Result<Vec<VectorField>> {
    ensure_same_grid(basis.grid(), u.grid())?;
    let coeffs = u.coefficients();
    let len = basis.grid.len();
    (0..basis.mode_count())
        .map(|m| {
            let mut parts = [vec![Complex64::default(); len], vec![Complex64::default(); len], vec![Complex64::default(); len]];
            let c = basis.eps_sigma * basis.weights[m];
            for (s, &idx) in basis.support.iter().enumerate() {
                if idx == 0 {
                    continue;
                }
                let r = basis.symbols[s][m] * c;
                let v = project_mode(&basis.grid, idx, [coeffs[0][idx] * r, coeffs[1][idx] * r, coeffs[2][idx] * r]);
                for j in 0..3 {
                    parts[j][idx] = v[j];
                }
            }
            VectorField::from_spectral(&basis.grid, parts)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WienerIncrements {
    pub seed: u64,
    pub realization: u64,
    pub step: u64,
    pub dt: f64,
    pub draws: Vec<f64>,
}

/// `M` independent `N(0, dt)` draws from the stream keyed by
/// `(seed, realization, step)`, consumed in mode order.
pub fn sample_increments(seed: u64, realization: u64, step: u64, dt: f64, mode_count: usize) -> Result<WienerIncrements> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let mut rng = rng::stream(seed, realization, Domain::Wiener, step);
    let sd = dt.sqrt();
    let draws = (0..mode_count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * sd
        })
        .collect();
    Ok(WienerIncrements {
        seed,
        realization,
        step,
        dt,
        draws,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub max_ratio: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Root-sum-square over modes of `‖σ(u) e_m‖_p`, magnitude mode.
pub fn sigma_norm(basis: &NoiseBasis, u: &VectorField, p: f64) -> Result<f64> {
    let outs = sigma_apply(basis, 0.0, u)?;
    let mut acc = 0.0;
    for o in &outs {
        acc += vector_lp_norm(o, p, NormMode::Magnitude)?.powi(2);
    }
    Ok(acc.sqrt())
}

/// Largest `‖σ(u₁) − σ(u₂)‖ / ‖u₁ − u₂‖_p` over the corpus; coincident
/// pairs are skipped.
pub fn lipschitz_report(basis: &NoiseBasis, pairs: &[(VectorField, VectorField)], p: f64) -> Result<LipschitzReport> {
    if pairs.is_empty() {
        return Err(crate::error::SnseError::Empty("Lipschitz corpus"));
    }
    let mut report = LipschitzReport {
        max_ratio: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for (a, b) in pairs {
        let diff = a.sub(b)?;
        let denom = vector_lp_norm(&diff, p, NormMode::Magnitude)?;
        if denom == 0.0 {
            report.skipped += 1;
            log::debug!("skipping coincident pair in Lipschitz corpus");
            continue;
        }
        // σ is linear, so σ(u₁) − σ(u₂) = σ(u₁ − u₂)
        let num = sigma_norm(basis, &diff, p)?;
        report.max_ratio = report.max_ratio.max(num / denom);
        report.evaluated += 1;
    }
    Ok(report)
}

/// Random divergence-free, mean-zero field pairs for the Lipschitz sweep.
pub fn lipschitz_corpus(grid: &GridSpec, count: usize, seed: u64) -> Vec<(VectorField, VectorField)> {
    (0..count as u64)
        .map(|i| {
            let a = crate::initial_data::random_band_field(grid, 1.0, seed, 2 * i, None);
            let b = crate::initial_data::random_band_field(grid, 0.5 + (i % 5) as f64 * 0.3, seed, 2 * i + 1, Some(3));
            (a, b)
        })
        .collect()
}
