//! Test fields, periodic mollification, and the splitting of initial data
//! into a geometrically decaying sequence of smooth levels.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{self, Domain};
use crate::spectral::norms::{magnitude_lp_values, NormMode};
use crate::spectral::ops::{divergence_coeffs, leray_in_place};
use crate::spectral::{GridSpec, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    TaylorGreen,
    RandomBand,
    SingleMode,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::TaylorGreen => "taylor-green",
            FieldKind::RandomBand => "random-band",
            FieldKind::SingleMode => "single-mode",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "taylor-green" => Some(FieldKind::TaylorGreen),
            "random-band" => Some(FieldKind::RandomBand),
            "single-mode" => Some(FieldKind::SingleMode),
            _ => None,
        }
    }
}

/// Divergence-free, mean-zero test field.
///
/// * `taylor-green`: `a (sin x cos y cos z, −cos x sin y cos z, 0)`
/// * `single-mode`: `(a sin y, 0, 0)`
/// * `random-band`: Gaussian coefficients on the dealiased band with
///   amplitude `(1 + |k|²)^{-1}`, Leray-projected and scaled to RMS `a`.
pub fn make_test_field(grid: &GridSpec, kind: FieldKind, amplitude: f64, seed: u64) -> Result<VectorField> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude", format!("must be positive, got {amplitude}")));
    }
    Ok(match kind {
        FieldKind::TaylorGreen => VectorField::from_fn(grid, |x| {
            [
                amplitude * x[0].sin() * x[1].cos() * x[2].cos(),
                -amplitude * x[0].cos() * x[1].sin() * x[2].cos(),
                0.0,
            ]
        }),
        FieldKind::SingleMode => VectorField::from_fn(grid, |x| [amplitude * x[1].sin(), 0.0, 0.0]),
        FieldKind::RandomBand => random_band_field(grid, amplitude, seed, 0, None),
    })
}

/// Random divergence-free field keyed by `(seed, realization)`.
///
/// `max_mode` restricts to `|k_j| ≤ max_mode` on every axis; by default the
/// whole dealiased band is used.
pub fn random_band_field(
    grid: &GridSpec,
    rms: f64,
    seed: u64,
    realization: u64,
    max_mode: Option<i64>,
) -> VectorField {
    let mut rng = rng::stream(seed, realization, Domain::InitialData, 0);
    let len = grid.len();
    let mut raw: [Vec<Complex64>; 3] = [vec![], vec![], vec![]];
    for part in raw.iter_mut() {
        *part = (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
    }
    let mask = grid.dealias_mask();
    let mut parts: [Vec<Complex64>; 3] = [vec![Complex64::default(); len], vec![Complex64::default(); len], vec![Complex64::default(); len]];
    for idx in 1..len {
        let k = grid.mode(idx);
        let in_band = mask[idx] && max_mode.is_none_or(|m| k.iter().all(|c| c.abs() <= m));
        if !in_band {
            continue;
        }
        let partner = grid.mode_index([-k[0], -k[1], -k[2]]);
        let weight = 1.0 / (1.0 + grid.k_squared(idx));
        for j in 0..3 {
            // Hermitian symmetrization keeps the field real
            parts[j][idx] = (raw[j][idx] + raw[j][partner].conj()) * (0.5 * weight);
        }
    }
    {
        let [a, b, c] = &mut parts;
        leray_in_place(grid, [a, b, c]);
    }
    let u = VectorField::from_spectral(grid, parts).expect("lengths match grid");
    let energy: f64 = u
        .values()
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / len as f64;
    if energy == 0.0 {
        return u;
    }
    u.scaled(rms / energy.sqrt())
}

/// L³ norm in magnitude mode.
pub fn l3(u: &VectorField) -> f64 {
    let [a, b, c] = u.values();
    magnitude_lp_values(u.grid(), [&a, &b, &c], 3.0)
}

fn l6(u: &VectorField) -> f64 {
    let [a, b, c] = u.values();
    magnitude_lp_values(u.grid(), [&a, &b, &c], 6.0)
}

/// Rescales `u` so that its magnitude-mode L³ norm equals `target`.
pub fn normalize_l3(u: &VectorField, target: f64) -> VectorField {
    let current = l3(u);
    if current == 0.0 {
        return u.clone();
    }
    u.scaled(target / current)
}

#[inline]
fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

const RADIAL_NODES: usize = 1200;

/// Trapezoid nodes on `[0, 1]` with weights for `t² b(t)`; the integrand is
/// even and flat at `t = 1`, so the rule converges faster than any power.
fn radial_rule() -> &'static (Vec<f64>, Vec<f64>, f64) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>, f64)> = OnceLock::new();
    RULE.get_or_init(|| {
        let h = 1.0 / RADIAL_NODES as f64;
        let mut nodes = Vec::with_capacity(RADIAL_NODES);
        let mut weights = Vec::with_capacity(RADIAL_NODES);
        for i in 0..RADIAL_NODES {
            let t = i as f64 * h;
            let w = if i == 0 { 0.5 * h } else { h };
            nodes.push(t);
            weights.push(w * t * t * bump(t));
        }
        let total = weights.iter().sum();
        (nodes, weights, total)
    })
}

/// Fourier multiplier of the unit-mass radial bump of radius `delta` at
/// wavenumber magnitude `s`: `∫ρ_δ(x) e^{-ik·x} dx` with `|k| = s`.
pub fn mollifier_symbol(delta: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let (nodes, weights, total) = radial_rule();
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(weights) {
        let x = s * delta * t;
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        acc += w * sinc;
    }
    acc / total
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < PI) {
        return Err(invalid("delta", format!("need 0 < delta < π, got {delta}")));
    }
    Ok(())
}

/// Grid-sampled, periodized mollifier `c·exp(−1/(1−r²/δ²))` normalized so
/// that the grid quadrature of the kernel is exactly one.
pub fn mollifier_kernel(delta: f64, grid: &GridSpec) -> Result<ScalarField> {
    check_delta(delta)?;
    let h = grid.spacing();
    if delta < 4.0 * h {
        return Err(invalid(
            "delta",
            format!("{delta} is below the resolvable minimum 4h = {}", 4.0 * h),
        ));
    }
    let period = grid.length();
    let wrap = |x: f64| if x > 0.5 * period { x - period } else { x };
    let mut values: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let p = grid.point(idx);
            let r2 = p.iter().map(|&c| wrap(c).powi(2)).sum::<f64>();
            bump((r2 / (delta * delta)).sqrt())
        })
        .collect();
    let mass: f64 = values.iter().sum::<f64>() * grid.cell_volume();
    for v in values.iter_mut() {
        *v /= mass;
    }
    ScalarField::from_physical(grid, values)
}

/// Periodic convolution `(ρ * f)(x) = ∫ ρ(y) f(x − y) dy` via the FFT.
pub fn convolve(kernel: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    crate::spectral::field::ensure_same_grid(kernel.grid(), f.grid())?;
    let vol = kernel.grid().volume();
    let a = kernel.coefficients();
    let b = f.coefficients();
    let c = a.iter().zip(b.iter()).map(|(x, y)| x * y * vol).collect();
    ScalarField::from_spectral(f.grid(), c)
}

/// Per-mode multiplier table for one `delta`, keyed by integer `|k|²`.
fn multiplier_table(grid: &GridSpec, delta: f64) -> Vec<f64> {
    let mut cache: HashMap<u64, f64> = HashMap::new();
    (0..grid.len())
        .map(|idx| {
            let k2 = grid.k_squared(idx);
            *cache
                .entry(k2 as u64)
                .or_insert_with(|| mollifier_symbol(delta, k2.sqrt()))
        })
        .collect()
}

fn apply_multiplier(parts: &[Vec<Complex64>; 3], table: &[f64]) -> [Vec<Complex64>; 3] {
    [0, 1, 2].map(|j| parts[j].iter().zip(table).map(|(c, m)| c * m).collect())
}

/// Convolution with the radius-`delta` bump, applied as the exact Fourier
/// multiplier of the continuous kernel. Commutes with the Leray projection
/// and preserves zero mean. Output is spectral.
pub fn mollify(u: &VectorField, delta: f64) -> Result<VectorField> {
    check_delta(delta)?;
    let table = multiplier_table(u.grid(), delta);
    VectorField::from_spectral(u.grid(), apply_multiplier(&u.coefficients(), &table))
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub levels: Vec<VectorField>,
    /// `‖u₀ − Σ_{j≤k} v₀^(j)‖₃` after each level.
    pub tail_errors: Vec<f64>,
    /// Mollifier radius used for each level.
    pub deltas: Vec<f64>,
    pub eps0: f64,
    /// Set when some level stopped at the halving limit before reaching its tolerance.
    pub truncated: bool,
}

impl DecompositionResult {
    pub fn k_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_norm(&self, k: usize, p: f64) -> f64 {
        crate::spectral::vector_lp_norm(&self.levels[k], p, NormMode::Magnitude).expect("valid exponent")
    }

    /// `Σ_{j≤k} v₀^(j)`.
    pub fn partial_sum(&self, k: usize) -> VectorField {
        let mut acc = self.levels[0].clone();
        for level in &self.levels[1..=k] {
            acc = acc.add(level).expect("levels share a grid");
        }
        acc
    }
}

/// Target for `‖r_k‖₃` at level `k`.
///
/// The per-step tolerance `ε₀/2^{k+4}` alone gives the tail bound but not
/// `‖v₀^(k)‖₃ ≤ ε₀/4^k` beyond `k = 2`; capping the residual at
/// `ε₀/(2·4^{k+1})` makes the next level satisfy it as well.
pub fn level_tolerance(eps0: f64, k: usize) -> f64 {
    let a = eps0 / 2f64.powi(k as i32 + 4);
    let b = eps0 / (2.0 * 4f64.powi(k as i32 + 1));
    a.min(b)
}

const MAX_HALVINGS: usize = 60;

/// Splits `u0` into levels `v₀^(0..=k_max)`: level 0 mollifies `u0`, level
/// `k` mollifies the residual `u0 − Σ_{j<k} v₀^(j)`. The radius starts at
/// `π/4` and is halved until the residual after the level meets
/// [`level_tolerance`]; later levels start from the previous radius.
pub fn decompose(u0: &VectorField, eps0: f64, k_max: usize) -> Result<DecompositionResult> {
    if !(eps0 >= 0.0 && eps0.is_finite()) {
        return Err(invalid("eps0", format!("must be finite and nonnegative, got {eps0}")));
    }
    let grid = u0.grid().clone();
    let norm0 = l3(u0);
    if norm0 > eps0 * (1.0 + 1e-12) {
        return Err(invalid("u0", format!("‖u0‖₃ = {norm0:e} exceeds eps0 = {eps0:e}")));
    }
    let coeffs = u0.coefficients();
    if coeffs.iter().any(|c| c[0].norm() > 1e-12 * (1.0 + norm0)) {
        return Err(invalid("u0", "field does not have zero mean"));
    }
    let div = divergence_coeffs(&grid, [&coeffs[0], &coeffs[1], &coeffs[2]]);
    let div_max = div.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = coeffs.iter().flat_map(|c| c.iter()).map(|c| c.norm()).fold(0.0, f64::max);
    if div_max > 1e-10 * scale.max(f64::MIN_POSITIVE) * grid.n() as f64 {
        return Err(invalid("u0", format!("field is not divergence-free (max |k·û| = {div_max:e})")));
    }

    let mut residual = coeffs.clone();
    let mut partial = [
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
    ];
    let mut delta = PI / 4.0;
    let mut levels = Vec::with_capacity(k_max + 1);
    let mut tail_errors = Vec::with_capacity(k_max + 1);
    let mut deltas = Vec::with_capacity(k_max + 1);
    let mut truncated = false;

    for k in 0..=k_max {
        let target = level_tolerance(eps0, k);
        let mut halvings = 0;
        let level = loop {
            let table = multiplier_table(&grid, delta);
            let candidate = apply_multiplier(&residual, &table);
            let left: [Vec<Complex64>; 3] =
                [0, 1, 2].map(|j| residual[j].iter().zip(&candidate[j]).map(|(r, c)| r - c).collect());
            let err = l3(&VectorField::from_spectral(&grid, left)?);
            if err <= target {
                break candidate;
            }
            if halvings == MAX_HALVINGS {
                truncated = true;
                break candidate;
            }
            delta *= 0.5;
            halvings += 1;
        };
        for j in 0..3 {
            for idx in 0..grid.len() {
                residual[j][idx] -= level[j][idx];
                partial[j][idx] += level[j][idx];
            }
        }
        let tail: [Vec<Complex64>; 3] =
            [0, 1, 2].map(|j| coeffs[j].iter().zip(&partial[j]).map(|(a, b)| a - b).collect());
        tail_errors.push(l3(&VectorField::from_spectral(&grid, tail)?));
        deltas.push(delta);
        levels.push(VectorField::from_spectral(&grid, level)?);
    }
    Ok(DecompositionResult {
        levels,
        tail_errors,
        deltas,
        eps0,
        truncated,
    })
}

/// `‖v₀^(k)‖₆` for every level; the per-level `𝕄_k` bounds.
pub fn level_sup6(result: &DecompositionResult) -> Vec<f64> {
    result.levels.iter().map(l6).collect()
}
