//! The cutoff cascade: level `k` evolves
//! `∂_t v − Δv = −ψ²φ² 𝒫∇·(v⊗v) − ψ²φ²ζ 𝒫∇·(w⊗v + v⊗w) + ψ²φ²ζ σ(v) Ẇ`
//! with `w = u^(k−1)`, using `σ(u^(k)) − σ(u^(k−1)) = σ(v^(k))` for the
//! linear noise operator.

use num_complex::Complex64;

use super::kernel::{self, combine, flux_rhs, physical, Decay, Physical, Spectral};
use crate::cutoffs::{evaluate, CutoffParams, LevelCutoffs};
use crate::error::{Result, SnseError};
use crate::initial_data::DecompositionResult;
use crate::noise::{sample_increments, NoiseBasis, WienerIncrements};
use crate::spectral::field::ensure_same_grid;
use crate::spectral::norms::{dissipation_values, magnitude_lp_values};
use crate::spectral::ops::dealias_in_place;
use crate::spectral::{GridSpec, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelNorms {
    pub norm3: f64,
    pub norm6: f64,
    pub sup: f64,
}

/// Levels `v^(k)`, partial sums `u^(k)`, and the clock.
#[derive(Clone, Debug)]
pub struct CascadeState {
    grid: GridSpec,
    levels: Vec<Spectral>,
    partial: Vec<Spectral>,
    phys: Vec<Physical>,
    norms: Vec<LevelNorms>,
    t: f64,
    step: u64,
}

fn zeros(len: usize) -> Spectral {
    [vec![Complex64::default(); len], vec![Complex64::default(); len], vec![Complex64::default(); len]]
}

impl CascadeState {
    /// Starts from the given level data, truncated to the dealiased band.
    pub fn new(levels: &[VectorField]) -> Result<Self> {
        let first = levels.first().ok_or(SnseError::Empty("cascade levels"))?;
        let grid = first.grid().clone();
        let mut spec = Vec::with_capacity(levels.len());
        for v in levels {
            ensure_same_grid(&grid, v.grid())?;
            let mut parts = v.coefficients();
            for p in parts.iter_mut() {
                dealias_in_place(&grid, p);
            }
            spec.push(parts);
        }
        let mut state = Self {
            grid,
            partial: Vec::new(),
            levels: spec,
            phys: Vec::new(),
            norms: Vec::new(),
            t: 0.0,
            step: 0,
        };
        state.partial = state.summed();
        state.refresh();
        Ok(state)
    }

    pub fn from_decomposition(d: &DecompositionResult) -> Result<Self> {
        Self::new(&d.levels)
    }

    fn summed(&self) -> Vec<Spectral> {
        let len = self.grid.len();
        let mut acc = zeros(len);
        let mut out = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            for j in 0..3 {
                for (a, b) in acc[j].iter_mut().zip(&level[j]) {
                    *a += b;
                }
            }
            out.push(acc.clone());
        }
        out
    }

    fn refresh(&mut self) {
        self.phys = self.levels.iter().map(|l| physical(&self.grid, l)).collect();
        self.norms = self
            .phys
            .iter()
            .map(|p| {
                let (norm3, norm6, sup) = kernel::norms(&self.grid, p);
                LevelNorms { norm3, norm6, sup }
            })
            .collect();
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn k_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn norms(&self) -> &[LevelNorms] {
        &self.norms
    }

    pub fn level(&self, k: usize) -> VectorField {
        VectorField::from_spectral(&self.grid, self.levels[k].clone()).expect("level on state grid")
    }

    /// `u^(k)`, maintained incrementally.
    pub fn partial_sum(&self, k: usize) -> VectorField {
        VectorField::from_spectral(&self.grid, self.partial[k].clone()).expect("sum on state grid")
    }

    /// `u^(k_max)`.
    pub fn cascade_sum(&self) -> VectorField {
        self.partial_sum(self.k_max())
    }

    /// `u^(k_max)` summed afresh from the levels.
    pub fn recompute_sum(&self) -> VectorField {
        let s = self.summed().pop().expect("at least one level");
        VectorField::from_spectral(&self.grid, s).expect("sum on state grid")
    }

    /// Largest coefficient gap between the incremental and recomputed partial sums.
    pub fn sum_audit(&self) -> f64 {
        let fresh = self.summed();
        let mut worst: f64 = 0.0;
        for (a, b) in fresh.iter().zip(&self.partial) {
            for j in 0..3 {
                for (x, y) in a[j].iter().zip(&b[j]) {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        worst
    }

    /// Physical samples of `u^(k_max)`.
    pub fn sum_physical(&self) -> [Vec<f64>; 3] {
        let len = self.grid.len();
        let mut out = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for p in &self.phys {
            for j in 0..3 {
                for (o, v) in out[j].iter_mut().zip(&p[j]) {
                    *o += v;
                }
            }
        }
        out
    }

    /// `Σ_j ∫ |∇(|v_j|^{p/2})|²` for level `k`.
    pub fn level_dissipation(&self, k: usize, p: f64) -> f64 {
        self.phys[k].iter().map(|c| dissipation_values(&self.grid, c, p)).sum()
    }

    pub fn cutoffs(&self, params: &CutoffParams) -> Vec<LevelCutoffs> {
        let pairs: Vec<(f64, f64)> = self.norms.iter().map(|n| (n.norm3, n.norm6)).collect();
        evaluate(params, &pairs)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CascadeOptions {
    /// Replaces the evaluated cutoffs when set (one entry per level).
    pub forced: Option<Vec<LevelCutoffs>>,
    pub record_dissipation: bool,
    pub blowup_bound: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct StepReport {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub pre: Vec<LevelNorms>,
    pub post: Vec<LevelNorms>,
    pub cutoffs: Vec<LevelCutoffs>,
    /// `(seed, realization, step)` of the Wiener increment.
    pub noise_key: (u64, u64, u64),
}

/// Advances every level by one step, in order `k = 0..=k_max`, with
/// start-of-step cutoffs and start-of-step `u^(k−1)`.
pub fn cascade_step(
    state: &mut CascadeState,
    params: &CutoffParams,
    basis: &NoiseBasis,
    dw: &WienerIncrements,
    dt: f64,
    opts: &CascadeOptions,
) -> Result<StepReport> {
    step_with(state, params, basis, dw, &Decay::new(&state.grid, dt), dt, opts)
}

fn step_with(
    state: &mut CascadeState,
    params: &CutoffParams,
    basis: &NoiseBasis,
    dw: &WienerIncrements,
    decay: &Decay,
    dt: f64,
    opts: &CascadeOptions,
) -> Result<StepReport> {
    let grid = state.grid.clone();
    ensure_same_grid(&grid, basis.grid())?;
    let cut = match &opts.forced {
        Some(f) => f.clone(),
        None => state.cutoffs(params),
    };
    let pre = state.norms.clone();
    let len = grid.len();
    let mut w: Physical = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for k in 0..=state.k_max() {
        let c = cut[k];
        let (a, b) = (c.own(), c.coupled());
        let rhs = flux_rhs(&grid, &state.phys[k], (k > 0).then_some(&w), a, b);
        let level = &state.levels[k];
        let noise = basis.increment([&level[0], &level[1], &level[2]], &dw.draws, b);
        let mut next = level.clone();
        combine(&mut next, rhs.as_ref(), &noise, dt);
        decay.apply(&mut next);
        for j in 0..3 {
            for (x, v) in w[j].iter_mut().zip(&state.phys[k][j]) {
                *x += v;
            }
        }
        let delta: Spectral = [0, 1, 2].map(|j| next[j].iter().zip(&state.levels[k][j]).map(|(a, b)| a - b).collect());
        for sum in state.partial[k..].iter_mut() {
            for j in 0..3 {
                for (s, d) in sum[j].iter_mut().zip(&delta[j]) {
                    *s += d;
                }
            }
        }
        state.levels[k] = next;
    }
    state.refresh();
    state.t = (state.step + 1) as f64 * dt;
    state.step += 1;
    let bound = opts.blowup_bound.unwrap_or(super::DEFAULT_BLOWUP_BOUND);
    for n in &state.norms {
        if !(n.sup <= bound) {
            return Err(SnseError::BlowUp {
                step: state.step as usize,
                sup: n.sup,
                bound,
            });
        }
    }
    Ok(StepReport {
        step: dw.step,
        t: state.t,
        dt,
        pre,
        post: state.norms.clone(),
        cutoffs: cut,
        noise_key: (dw.seed, dw.realization, dw.step),
    })
}

/// One row of the norm series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSample {
    pub t: f64,
    pub level: usize,
    pub norm3: f64,
    pub norm6: f64,
    pub dissip3: Option<f64>,
    pub dissip6: Option<f64>,
    pub psi: f64,
    pub phi: f64,
    pub zeta: f64,
}

fn samples(state: &CascadeState, cut: &[LevelCutoffs], record_dissipation: bool) -> Vec<LevelSample> {
    state
        .norms
        .iter()
        .zip(cut)
        .enumerate()
        .map(|(k, (n, c))| LevelSample {
            t: state.t,
            level: k,
            norm3: n.norm3,
            norm6: n.norm6,
            dissip3: record_dissipation.then(|| state.level_dissipation(k, 3.0)),
            dissip6: record_dissipation.then(|| state.level_dissipation(k, 6.0)),
            psi: c.psi,
            phi: c.phi,
            zeta: c.zeta,
        })
        .collect()
}

/// Runs `steps` cascade steps on the Wiener path keyed by `(seed,
/// realization)`. `observe` sees the state at every step boundary,
/// including `t = 0` and the final time; samples are returned per instant.
#[allow(clippy::too_many_arguments)]
pub fn run_cascade<F>(
    state: &mut CascadeState,
    params: &CutoffParams,
    basis: &NoiseBasis,
    seed: u64,
    realization: u64,
    dt: f64,
    steps: usize,
    opts: &CascadeOptions,
    mut observe: F,
) -> Result<Vec<LevelSample>>
where
    F: FnMut(&CascadeState, &[LevelCutoffs]) -> Result<()>,
{
    super::check_dt(dt)?;
    let decay = Decay::new(&state.grid, dt);
    let mut out = Vec::with_capacity((steps + 1) * (state.k_max() + 1));
    for n in 0..=steps {
        let cut = match &opts.forced {
            Some(f) => f.clone(),
            None => state.cutoffs(params),
        };
        out.extend(samples(state, &cut, opts.record_dissipation));
        observe(state, &cut)?;
        if n == steps {
            break;
        }
        let dw = sample_increments(seed, realization, state.step, dt, basis.mode_count())?;
        step_with(state, params, basis, &dw, &decay, dt, opts)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    /// `‖u^(K)(t) − u_direct(t)‖₃`, magnitude mode.
    pub residual: Vec<f64>,
    /// Set when the blow-up guard cut the run short.
    pub truncated: bool,
}

impl ResidualSeries {
    pub fn max(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }
}

/// Runs the cascade and the direct SNSE side by side on one Wiener path,
/// the direct run starting from `Σ_{j≤K} v₀^(j)`.
#[allow(clippy::too_many_arguments)]
pub fn residual_vs_direct(
    levels: &[VectorField],
    params: &CutoffParams,
    basis: &NoiseBasis,
    seed: u64,
    realization: u64,
    dt: f64,
    steps: usize,
    opts: &CascadeOptions,
) -> Result<ResidualSeries> {
    let mut state = CascadeState::new(levels)?;
    let grid = state.grid.clone();
    let decay = Decay::new(&grid, dt);
    let mut direct = state.partial[state.k_max()].clone();
    let mut series = ResidualSeries {
        times: Vec::with_capacity(steps + 1),
        residual: Vec::with_capacity(steps + 1),
        truncated: false,
    };
    let bound = opts.blowup_bound.unwrap_or(super::DEFAULT_BLOWUP_BOUND);
    let result = run_cascade(&mut state, params, basis, seed, realization, dt, steps, opts, |s, _| {
        let ours = s.sum_physical();
        let theirs = physical(&grid, &direct);
        let diff: [Vec<f64>; 3] = [0, 1, 2].map(|j| ours[j].iter().zip(&theirs[j]).map(|(a, b)| a - b).collect());
        series.times.push(s.time());
        series
            .residual
            .push(magnitude_lp_values(&grid, [&diff[0], &diff[1], &diff[2]], 3.0));
        let sup = magnitude_lp_values(&grid, [&theirs[0], &theirs[1], &theirs[2]], f64::INFINITY);
        if !(sup <= bound) {
            return Err(SnseError::BlowUp {
                step: s.step_index() as usize,
                sup,
                bound,
            });
        }
        if (s.step_index() as usize) < steps {
            let dw = sample_increments(seed, realization, s.step_index(), dt, basis.mode_count())?;
            let rhs = flux_rhs(&grid, &theirs, None, 1.0, 0.0);
            let noise = basis.increment([&direct[0], &direct[1], &direct[2]], &dw.draws, 1.0);
            combine(&mut direct, rhs.as_ref(), &noise, dt);
            decay.apply(&mut direct);
        }
        Ok(())
    });
    match result {
        Ok(_) => Ok(series),
        Err(SnseError::BlowUp { .. }) => {
            series.truncated = true;
            Ok(series)
        }
        Err(e) => Err(e),
    }
}
