//! Integrating-factor Euler–Maruyama time stepping: the stochastic heat
//! equation, the direct SNSE, the cutoff cascade and the Picard scheme.
//!
//! Every stepper advances Fourier coefficients by
//! `û ← e^{−|k|² dt} (û + dt·R̂ + Σ_m ĝ_m ΔW_m)` with the drift `R` and the
//! noise coefficients `g_m` evaluated at the start of the step.

mod cascade;
mod kernel;
mod picard;

use num_complex::Complex64;

use crate::error::{invalid, Result, SnseError};
use crate::noise::{sample_increments, NoiseBasis, WienerIncrements};
use crate::spectral::field::ensure_same_grid;
use crate::spectral::{GridSpec, VectorField};

pub use cascade::{
    residual_vs_direct, run_cascade, cascade_step, CascadeOptions, CascadeState, LevelNorms, LevelSample,
    ResidualSeries, StepReport,
};
pub use picard::{picard_solve, PicardReport, PicardSetup};

pub(crate) use kernel::{flux_rhs, physical, Decay};

pub const DEFAULT_BLOWUP_BOUND: f64 = 1e6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive and finite, got {dt}")));
    }
    Ok(())
}

/// One step of `∂_t u = Δu + ∇·f + g Ẇ` per component: `flux[j]` is the
/// vector field whose divergence drives component `j`, and `g[m]` is the
/// noise coefficient of Wiener direction `m`. No projection is applied.
pub fn heat_step(
    u: &VectorField,
    flux: Option<&[VectorField; 3]>,
    g: &[VectorField],
    dw: &WienerIncrements,
    dt: f64,
) -> Result<VectorField> {
    check_dt(dt)?;
    let grid = u.grid().clone();
    if !g.is_empty() && g.len() != dw.draws.len() {
        return Err(SnseError::Length {
            context: "noise coefficients",
            expected: dw.draws.len(),
            found: g.len(),
        });
    }
    let mut parts = u.coefficients();
    if let Some(f) = flux {
        for (j, fj) in f.iter().enumerate() {
            ensure_same_grid(&grid, fj.grid())?;
            let c = fj.coefficients();
            for idx in 0..grid.len() {
                let [a, b, l] = grid.unflatten(idx);
                let kdotf = c[0][idx] * grid.derivative_wavenumber(a)
                    + c[1][idx] * grid.derivative_wavenumber(b)
                    + c[2][idx] * grid.derivative_wavenumber(l);
                parts[j][idx] += I * kdotf * dt;
            }
        }
    }
    for (gm, w) in g.iter().zip(&dw.draws) {
        ensure_same_grid(&grid, gm.grid())?;
        let c = gm.coefficients();
        for j in 0..3 {
            for (p, q) in parts[j].iter_mut().zip(&c[j]) {
                *p += q * w;
            }
        }
    }
    Decay::new(&grid, dt).apply(&mut parts);
    finite_or_halt(&grid, parts, 0)
}

fn finite_or_halt(grid: &GridSpec, parts: [Vec<Complex64>; 3], step: usize) -> Result<VectorField> {
    if parts.iter().flatten().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(SnseError::BlowUp {
            step,
            sup: f64::INFINITY,
            bound: DEFAULT_BLOWUP_BOUND,
        });
    }
    VectorField::from_spectral(grid, parts)
}

/// One step of the SNSE `∂_t u − Δu + 𝒫∇·(u⊗u) = σ(u) Ẇ`.
pub fn snse_step(u: &VectorField, basis: &NoiseBasis, dw: &WienerIncrements, dt: f64) -> Result<VectorField> {
    check_dt(dt)?;
    let grid = u.grid().clone();
    ensure_same_grid(&grid, basis.grid())?;
    let decay = Decay::new(&grid, dt);
    let mut parts = u.coefficients();
    let phys = physical(&grid, &parts);
    let rhs = flux_rhs(&grid, &phys, None, 1.0, 0.0);
    let noise = basis.increment([&parts[0], &parts[1], &parts[2]], &dw.draws, 1.0);
    kernel::combine(&mut parts, rhs.as_ref(), &noise, dt);
    decay.apply(&mut parts);
    finite_or_halt(&grid, parts, dw.step as usize)
}

/// Direct SNSE trajectory sampled at every step.
#[derive(Clone, Debug)]
pub struct DirectRun {
    pub times: Vec<f64>,
    pub norm3: Vec<f64>,
    pub norm6: Vec<f64>,
    pub final_state: VectorField,
}

/// Runs `steps` SNSE steps from `u0` on the Wiener path keyed by
/// `(seed, realization)`.
pub fn simulate_direct(
    u0: &VectorField,
    basis: &NoiseBasis,
    seed: u64,
    realization: u64,
    dt: f64,
    steps: usize,
    blowup_bound: f64,
) -> Result<DirectRun> {
    check_dt(dt)?;
    let grid = u0.grid().clone();
    ensure_same_grid(&grid, basis.grid())?;
    let decay = Decay::new(&grid, dt);
    let mut parts = u0.coefficients();
    for p in parts.iter_mut() {
        crate::spectral::ops::dealias_in_place(&grid, p);
    }
    let mut run = DirectRun {
        times: Vec::with_capacity(steps + 1),
        norm3: Vec::with_capacity(steps + 1),
        norm6: Vec::with_capacity(steps + 1),
        final_state: u0.clone(),
    };
    for n in 0..=steps {
        let phys = physical(&grid, &parts);
        let (n3, n6, sup) = kernel::norms(&grid, &phys);
        if !(sup <= blowup_bound) {
            return Err(SnseError::BlowUp {
                step: n,
                sup,
                bound: blowup_bound,
            });
        }
        run.times.push(n as f64 * dt);
        run.norm3.push(n3);
        run.norm6.push(n6);
        if n == steps {
            break;
        }
        let dw = sample_increments(seed, realization, n as u64, dt, basis.mode_count())?;
        let rhs = flux_rhs(&grid, &phys, None, 1.0, 0.0);
        let noise = basis.increment([&parts[0], &parts[1], &parts[2]], &dw.draws, 1.0);
        kernel::combine(&mut parts, rhs.as_ref(), &noise, dt);
        decay.apply(&mut parts);
    }
    run.final_state = VectorField::from_spectral(&grid, parts)?;
    Ok(run)
}
