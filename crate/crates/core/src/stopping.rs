//! First hitting times of the level thresholds.
//!
//! `τ_k` is the first grid time with `‖v^(k)‖₃ ≥ ε̄/2^k`, `σ_k` the first
//! with `‖v^(k)‖₆ ≥ M_k`; `τ^k` is the minimum of both over levels `≤ k`
//! and `τ` the minimum over all levels. Absent crossings are `None`.

use crate::cutoffs::CutoffParams;
use crate::error::{invalid, Result, SnseError};
use crate::integrator::LevelSample;

/// Per-level norm histories on the uniform grid `t_n = n·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSeries {
    pub dt: f64,
    pub norm3: Vec<Vec<f64>>,
    pub norm6: Vec<Vec<f64>>,
}

impl NormSeries {
    pub fn new(dt: f64, norm3: Vec<Vec<f64>>, norm6: Vec<Vec<f64>>) -> Self {
        Self { dt, norm3, norm6 }
    }

    /// Regroups rows of a cascade run (ordered by time, then level).
    pub fn from_samples(dt: f64, samples: &[LevelSample]) -> Self {
        let levels = samples.iter().map(|s| s.level + 1).max().unwrap_or(0);
        let mut norm3 = vec![Vec::new(); levels];
        let mut norm6 = vec![Vec::new(); levels];
        for s in samples {
            norm3[s.level].push(s.norm3);
            norm6[s.level].push(s.norm6);
        }
        Self { dt, norm3, norm6 }
    }

    pub fn levels(&self) -> usize {
        self.norm3.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoppingRecord {
    pub tau_k: Vec<Option<f64>>,
    pub sigma_k: Vec<Option<f64>>,
    pub tau_up_to_k: Vec<Option<f64>>,
    pub tau: Option<f64>,
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Streaming form of [`detect_hits`]: feed one instant at a time.
#[derive(Clone, Debug)]
pub struct HitDetector {
    l3_thresholds: Vec<f64>,
    caps: Vec<f64>,
    tau_k: Vec<Option<f64>>,
    sigma_k: Vec<Option<f64>>,
}

impl HitDetector {
    pub fn new(params: &CutoffParams, levels: usize) -> Self {
        Self {
            l3_thresholds: (0..levels).map(|k| params.l3_threshold(k)).collect(),
            caps: (0..levels).map(|k| params.cap(k)).collect(),
            tau_k: vec![None; levels],
            sigma_k: vec![None; levels],
        }
    }

    /// Records level norms `(‖·‖₃, ‖·‖₆)` at time `t`.
    pub fn observe(&mut self, t: f64, norms: impl IntoIterator<Item = (f64, f64)>) {
        for (k, (n3, n6)) in norms.into_iter().enumerate() {
            if self.tau_k[k].is_none() && n3 >= self.l3_thresholds[k] {
                self.tau_k[k] = Some(t);
            }
            if self.sigma_k[k].is_none() && n6 >= self.caps[k] {
                self.sigma_k[k] = Some(t);
            }
        }
    }

    /// Current `τ`.
    pub fn tau(&self) -> Option<f64> {
        self.tau_k.iter().chain(&self.sigma_k).fold(None, |acc, &x| min_opt(acc, x))
    }

    pub fn record(&self) -> StoppingRecord {
        let mut tau_up_to_k = Vec::with_capacity(self.tau_k.len());
        let mut acc = None;
        for (t, s) in self.tau_k.iter().zip(&self.sigma_k) {
            acc = min_opt(acc, min_opt(*t, *s));
            tau_up_to_k.push(acc);
        }
        StoppingRecord {
            tau_k: self.tau_k.clone(),
            sigma_k: self.sigma_k.clone(),
            tau_up_to_k,
            tau: acc,
        }
    }
}

/// First-crossing times within `[0, horizon]`.
pub fn detect_hits(series: &NormSeries, params: &CutoffParams, horizon: f64) -> Result<StoppingRecord> {
    if series.levels() == 0 || series.norm3.iter().any(|s| s.is_empty()) {
        return Err(SnseError::Empty("norm series"));
    }
    if series.norm6.len() != series.levels() || params.level_caps.len() < series.levels() {
        return Err(invalid("series", "level counts of the series and the cutoffs disagree"));
    }
    let mut det = HitDetector::new(params, series.levels());
    let len = series.norm3[0].len();
    for n in 0..len {
        let t = n as f64 * series.dt;
        // tolerance keeps t = horizon when horizon/dt is not exactly representable
        if t > horizon * (1.0 + 1e-12) {
            break;
        }
        det.observe(t, (0..series.levels()).map(|k| (series.norm3[k][n], series.norm6[k][n])));
    }
    Ok(det.record())
}
