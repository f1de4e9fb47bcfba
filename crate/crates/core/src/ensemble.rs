//! Single realizations of the construction and Monte Carlo aggregation of
//! hitting probabilities and energy bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::cutoffs::{level_caps, CutoffParams, LevelCutoffs};
use crate::error::{invalid, Result, SnseError};
use crate::initial_data::{decompose, level_sup6, make_test_field, normalize_l3, random_band_field, DecompositionResult, FieldKind};
use crate::integrator::{run_cascade, CascadeOptions, CascadeState, LevelSample};
use crate::noise::NoiseBasis;
use crate::spectral::norms::{dissipation_values, integral_abs_pow};
use crate::spectral::{GridSpec, VectorField};
use crate::stopping::{HitDetector, StoppingRecord};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Initial data with `‖u₀‖₃ = eps0` for one realization.
pub fn initial_field(grid: &GridSpec, kind: FieldKind, eps0: f64, seed: u64, realization: u64) -> Result<VectorField> {
    if eps0 == 0.0 {
        return Ok(VectorField::zeros(grid));
    }
    let shape = match kind {
        FieldKind::RandomBand => random_band_field(grid, 1.0, seed, realization, None),
        other => make_test_field(grid, other, 1.0, seed)?,
    };
    Ok(normalize_l3(&shape, eps0))
}

/// Everything a realization needs besides the Wiener path.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub decomposition: DecompositionResult,
    pub params: CutoffParams,
}

pub fn prepare(cfg: &RunConfig, eps0: f64, realization: u64) -> Result<Prepared> {
    let grid = GridSpec::new(cfg.grid_n)?;
    let u0 = initial_field(&grid, cfg.data_kind, eps0, cfg.seed, realization)?;
    let decomposition = decompose(&u0, eps0, cfg.k_max)?;
    if decomposition.truncated {
        log::warn!("decomposition of realization {realization} stopped at the halving limit");
    }
    let bounds = level_sup6(&decomposition);
    let params = CutoffParams::new(cfg.eps_bar_for(eps0), level_caps(&bounds, cfg.cap_base, cfg.cap_growth));
    params.validate(eps0, &bounds)?;
    Ok(Prepared { decomposition, params })
}

/// Per-realization results, enough to rebuild every ensemble statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub realization: u64,
    pub eps0: f64,
    pub valid: bool,
    pub tau: Option<f64>,
    /// `sup_{t ≤ τ∧T} Σ_j ‖u_j‖₃³ + Σ_{t_n < τ∧T} dt Σ_j ∫|∇(|u_j|^{3/2})|²` for `u = u^(K)`.
    pub energy_lhs: f64,
    /// `max_t ‖v^(k)‖₃` per level (empty for invalid realizations).
    pub level_max3: Vec<f64>,
    /// `sup_t ‖v^(k)‖₃ ≥ ε̄/2^k` per level.
    pub level_hit: Vec<bool>,
    /// `max_t ‖v^(k)‖₃ > (ε̄/2^{k−1})(1 + 10 dt)` per level.
    pub ceiling_violation: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct RealizationOutcome {
    pub summary: RealizationSummary,
    pub record: Option<StoppingRecord>,
    pub samples: Vec<LevelSample>,
    pub final_levels: Vec<VectorField>,
}

#[derive(Clone, Debug, Default)]
pub struct RealizationOptions {
    /// Keep the full norm series (with dissipation) in the outcome.
    pub keep_series: bool,
    pub forced: Option<Vec<LevelCutoffs>>,
}

/// Decompose, evolve the cascade to the horizon (levels keep running after
/// hits), detect hitting times and accumulate the energy functional.
pub fn run_realization(cfg: &RunConfig, eps0: f64, realization: u64, opts: &RealizationOptions) -> Result<RealizationOutcome> {
    let prep = prepare(cfg, eps0, realization)?;
    let grid = GridSpec::new(cfg.grid_n)?;
    let basis = NoiseBasis::new(&grid, cfg.mode_count, cfg.eps_sigma)?;
    let mut state = CascadeState::from_decomposition(&prep.decomposition)?;
    let levels = state.k_max() + 1;
    let steps = cfg.steps();
    let dt = cfg.dt;
    let horizon = steps as f64 * dt;
    let mut detector = HitDetector::new(&prep.params, levels);
    let mut sup_energy: f64 = 0.0;
    let mut dissip_sum = 0.0;
    let mut level_max3 = vec![0.0f64; levels];
    let mut stopped = false;
    let copts = CascadeOptions {
        forced: opts.forced.clone(),
        record_dissipation: opts.keep_series,
        blowup_bound: Some(cfg.blowup_bound),
    };
    let run = run_cascade(&mut state, &prep.params, &basis, cfg.seed, realization, dt, steps, &copts, |s, _| {
        let norms = s.norms();
        for (m, n) in level_max3.iter_mut().zip(norms) {
            *m = m.max(n.norm3);
        }
        if stopped {
            return Ok(());
        }
        detector.observe(s.time(), norms.iter().map(|n| (n.norm3, n.norm6)));
        let u = s.sum_physical();
        let cubed: f64 = u.iter().map(|c| integral_abs_pow(&grid, c, 3.0)).sum();
        sup_energy = sup_energy.max(cubed);
        if detector.tau().is_some() || s.step_index() as usize >= steps {
            stopped = true;
            return Ok(());
        }
        dissip_sum += dt * u.iter().map(|c| dissipation_values(&grid, c, 3.0)).sum::<f64>();
        Ok(())
    });
    let thresholds: Vec<f64> = (0..levels).map(|k| prep.params.l3_threshold(k)).collect();
    let mut summary = RealizationSummary {
        realization,
        eps0,
        valid: true,
        tau: None,
        energy_lhs: 0.0,
        level_max3: Vec::new(),
        level_hit: Vec::new(),
        ceiling_violation: Vec::new(),
    };
    match run {
        Ok(samples) => {
            let record = detector.record();
            summary.tau = record.tau.filter(|&t| t <= horizon * (1.0 + 1e-12));
            summary.energy_lhs = sup_energy + dissip_sum;
            summary.level_hit = level_max3.iter().zip(&thresholds).map(|(m, t)| m >= t).collect();
            summary.ceiling_violation = level_max3
                .iter()
                .zip(&thresholds)
                .map(|(m, t)| *m > 2.0 * t * (1.0 + 10.0 * dt))
                .collect();
            summary.level_max3 = level_max3;
            let final_levels = (0..levels).map(|k| state.level(k)).collect();
            Ok(RealizationOutcome {
                summary,
                record: Some(record),
                samples: if opts.keep_series { samples } else { Vec::new() },
                final_levels,
            })
        }
        Err(SnseError::BlowUp { step, sup, bound }) => {
            log::warn!("realization {realization} blew up at step {step} (sup {sup:e} > {bound:e})");
            summary.valid = false;
            Ok(RealizationOutcome {
                summary,
                record: None,
                samples: Vec::new(),
                final_levels: Vec::new(),
            })
        }
        Err(e) => Err(e),
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Aggregate over realizations sharing `eps0`, kept sorted by realization id
/// so that merging is order-independent.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub eps0: f64,
    pub horizon: f64,
    pub summaries: Vec<RealizationSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub eps0: f64,
    pub n: usize,
    pub n_invalid: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub energy_lhs_mean: f64,
    pub energy_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelRow {
    pub k: usize,
    pub p_hat_level: f64,
    pub ceiling_violations: usize,
}

impl EnsembleStats {
    pub fn new(eps0: f64, horizon: f64, mut summaries: Vec<RealizationSummary>) -> Result<Self> {
        summaries.sort_by_key(|s| s.realization);
        if summaries.windows(2).any(|w| w[0].realization == w[1].realization) {
            return Err(invalid("summaries", "duplicate realization ids"));
        }
        if summaries.iter().any(|s| s.eps0 != eps0) {
            return Err(invalid("summaries", "realizations with a different eps0"));
        }
        Ok(Self { eps0, horizon, summaries })
    }

    /// Union of two ensembles over disjoint realization ids.
    pub fn merge(&self, other: &EnsembleStats) -> Result<Self> {
        if self.eps0 != other.eps0 || self.horizon != other.horizon {
            return Err(invalid("ensemble", "cannot merge runs with different eps0 or horizon"));
        }
        let mut all = self.summaries.clone();
        all.extend(other.summaries.iter().cloned());
        Self::new(self.eps0, self.horizon, all)
    }

    fn valid(&self) -> impl Iterator<Item = &RealizationSummary> {
        self.summaries.iter().filter(|s| s.valid)
    }

    pub fn n(&self) -> usize {
        self.summaries.len()
    }

    pub fn n_invalid(&self) -> usize {
        self.summaries.iter().filter(|s| !s.valid).count()
    }

    /// `P̂(τ < T)` over valid realizations, with its Wilson interval.
    pub fn hit_probability(&self) -> (f64, f64, f64) {
        let n = self.n() - self.n_invalid();
        let hits = self.valid().filter(|s| s.tau.is_some_and(|t| t < self.horizon)).count();
        let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let (lo, hi) = wilson_interval(hits, n);
        (p, lo, hi)
    }

    pub fn energy_mean(&self) -> f64 {
        let n = self.n() - self.n_invalid();
        if n == 0 {
            return 0.0;
        }
        self.valid().map(|s| s.energy_lhs).sum::<f64>() / n as f64
    }

    /// `Ê[LHS] / ε₀³`, reported as 0 for zero data.
    pub fn energy_ratio(&self) -> f64 {
        if self.eps0 == 0.0 {
            0.0
        } else {
            self.energy_mean() / self.eps0.powi(3)
        }
    }

    pub fn summary_row(&self) -> SummaryRow {
        let (p_hat, ci_lo, ci_hi) = self.hit_probability();
        SummaryRow {
            eps0: self.eps0,
            n: self.n(),
            n_invalid: self.n_invalid(),
            p_hat,
            ci_lo,
            ci_hi,
            energy_lhs_mean: self.energy_mean(),
            energy_ratio: self.energy_ratio(),
        }
    }

    pub fn level_rows(&self) -> Vec<LevelRow> {
        let levels = self.valid().map(|s| s.level_hit.len()).max().unwrap_or(0);
        let n = (self.n() - self.n_invalid()).max(1) as f64;
        (0..levels)
            .map(|k| LevelRow {
                k,
                p_hat_level: self.valid().filter(|s| s.level_hit[k]).count() as f64 / n,
                ceiling_violations: self.valid().filter(|s| s.ceiling_violation[k]).count(),
            })
            .collect()
    }
}

/// Runs realizations `first..first + n` (in parallel on the current rayon
/// pool) and aggregates them.
pub fn run_ensemble(cfg: &RunConfig, eps0: f64, first: u64, n: usize) -> Result<EnsembleStats> {
    if n == 0 {
        return Err(invalid("n", "need at least one realization"));
    }
    let opts = RealizationOptions::default();
    let summaries: Vec<RealizationSummary> = (first..first + n as u64)
        .into_par_iter()
        .map(|r| run_realization(cfg, eps0, r, &opts).map(|o| o.summary))
        .collect::<Result<_>>()?;
    let stats = EnsembleStats::new(eps0, cfg.steps() as f64 * cfg.dt, summaries)?;
    if stats.n_invalid() == stats.n() {
        return Err(SnseError::AllInvalid(stats.n()));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(id: u64, tau: Option<f64>, energy: f64) -> RealizationSummary {
        RealizationSummary {
            realization: id,
            eps0: 1e-3,
            valid: true,
            tau,
            energy_lhs: energy,
            level_max3: vec![0.0],
            level_hit: vec![tau.is_some()],
            ceiling_violation: vec![false],
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0, 10), (3, 10), (10, 10), (17, 200)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
        // reference value for 0 of 200
        let (lo, hi) = wilson_interval(0, 200);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.018_845).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn single_realization_stats() {
        let s = EnsembleStats::new(1e-3, 1.0, vec![summary(4, Some(0.5), 2e-9)]).unwrap();
        let row = s.summary_row();
        assert_eq!(row.p_hat, 1.0);
        assert_eq!(row.energy_lhs_mean, 2e-9);
        assert!((row.energy_ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_independent() {
        let a = EnsembleStats::new(1e-3, 1.0, vec![summary(0, None, 1.0), summary(2, Some(0.1), 2.0)]).unwrap();
        let b = EnsembleStats::new(1e-3, 1.0, vec![summary(1, None, 3.0)]).unwrap();
        let ab = a.merge(&b).unwrap();
        let ba = b.merge(&a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.n(), 3);
        assert!(a.merge(&a).is_err());
    }

    #[test]
    fn invalid_realizations_counted_separately() {
        let mut bad = summary(1, None, 0.0);
        bad.valid = false;
        let s = EnsembleStats::new(1e-3, 1.0, vec![summary(0, Some(0.2), 1.0), bad]).unwrap();
        let row = s.summary_row();
        assert_eq!(row.n, 2);
        assert_eq!(row.n_invalid, 1);
        assert_eq!(row.p_hat, 1.0);
    }
}
