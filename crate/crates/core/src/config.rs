//! Run configuration: a flat dotted-key document parsed strictly.
//!
//! ```toml
//! grid.n = 16
//! time.dt = 1e-3
//! time.horizon = 1.0
//! data.eps0 = 1e-3
//! ```
//!
//! Unknown keys, wrong types and constraint violations are all collected
//! and reported together.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cutoffs::default_eps_bar;
use crate::error::{Result, SnseError};
use crate::initial_data::FieldKind;

pub const MAX_STEPS: f64 = 1e7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid_n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub blowup_bound: f64,
    pub k_max: usize,
    pub data_kind: FieldKind,
    pub eps0: f64,
    pub eps_bar: Option<f64>,
    pub cap_base: f64,
    pub cap_growth: f64,
    pub mode_count: usize,
    pub eps_sigma: f64,
    pub ensemble_n: usize,
    pub ensemble_first: u64,
    pub eps0_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub output_dir: String,
    pub snapshot_every: usize,
    pub picard_level: usize,
    pub picard_t_star: f64,
    pub picard_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: 16,
            dt: 1e-3,
            horizon: 1.0,
            blowup_bound: crate::integrator::DEFAULT_BLOWUP_BOUND,
            k_max: 3,
            data_kind: FieldKind::RandomBand,
            eps0: 0.0,
            eps_bar: None,
            cap_base: 10.0,
            cap_growth: 2.0,
            mode_count: 8,
            eps_sigma: 0.5,
            ensemble_n: 1,
            ensemble_first: 0,
            eps0_grid: None,
            seed: 0,
            output_dir: "out".into(),
            snapshot_every: 0,
            picard_level: 0,
            picard_t_star: 0.1,
            picard_iters: 8,
        }
    }
}

const KEYS: &[&str] = &[
    "grid.n",
    "time.dt",
    "time.horizon",
    "time.blowup_bound",
    "cascade.k_max",
    "data.kind",
    "data.eps0",
    "cutoff.eps_bar",
    "cutoff.cap_rule",
    "noise.mode_count",
    "noise.eps_sigma",
    "ensemble.n",
    "ensemble.first",
    "ensemble.eps0_grid",
    "seed",
    "output.dir",
    "snapshot.every",
    "picard.level",
    "picard.t_star",
    "picard.iters",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

struct Reader {
    map: BTreeMap<String, toml::Value>,
    errors: Vec<String>,
}

impl Reader {
    fn float(&mut self, key: &str, default: f64) -> f64 {
        match self.map.get(key) {
            None => default,
            Some(v) => as_f64(v).unwrap_or_else(|| {
                self.errors.push(format!("{key}: expected a number"));
                default
            }),
        }
    }

    fn opt_float(&mut self, key: &str) -> Option<f64> {
        let v = self.map.get(key)?;
        let parsed = as_f64(v);
        if parsed.is_none() {
            self.errors.push(format!("{key}: expected a number"));
        }
        parsed
    }

    fn uint(&mut self, key: &str, default: u64) -> u64 {
        match self.map.get(key) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => {
                self.errors.push(format!("{key}: expected a nonnegative integer"));
                default
            }
        }
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        match self.map.get(key) {
            None => default.to_string(),
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => {
                self.errors.push(format!("{key}: expected a string"));
                default.to_string()
            }
        }
    }

    fn floats(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.map.get(key)? {
            toml::Value::Array(items) => {
                let parsed: Option<Vec<f64>> = items.iter().map(as_f64).collect();
                if parsed.is_none() {
                    self.errors.push(format!("{key}: expected an array of numbers"));
                }
                parsed
            }
            _ => {
                self.errors.push(format!("{key}: expected an array of numbers"));
                None
            }
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| SnseError::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut map = BTreeMap::new();
    flatten("", &table, &mut map);
    let mut r = Reader { map, errors: Vec::new() };
    for key in r.map.keys() {
        if !KEYS.contains(&key.as_str()) {
            r.errors.push(format!("{key}: unknown key"));
        }
    }

    let d = RunConfig::default();
    let grid_n = r.uint("grid.n", d.grid_n as u64) as usize;
    let dt = r.float("time.dt", d.dt);
    let horizon = r.float("time.horizon", d.horizon);
    let blowup_bound = r.float("time.blowup_bound", d.blowup_bound);
    let k_max = r.uint("cascade.k_max", d.k_max as u64) as usize;
    let kind_text = r.string("data.kind", d.data_kind.as_str());
    let data_kind = FieldKind::parse(&kind_text).unwrap_or_else(|| {
        r.errors
            .push(format!("data.kind: unknown kind `{kind_text}` (taylor-green, random-band, single-mode)"));
        d.data_kind
    });
    let eps0 = match r.opt_float("data.eps0") {
        Some(v) => v,
        None => {
            if !r.map.contains_key("data.eps0") {
                r.errors.push("data.eps0: required key is missing".into());
            }
            d.eps0
        }
    };
    let eps_bar = r.opt_float("cutoff.eps_bar");
    let (cap_base, cap_growth) = match r.floats("cutoff.cap_rule") {
        None => (d.cap_base, d.cap_growth),
        Some(v) if v.len() == 2 => (v[0], v[1]),
        Some(_) => {
            r.errors.push("cutoff.cap_rule: expected [base, growth]".into());
            (d.cap_base, d.cap_growth)
        }
    };
    let mode_count = r.uint("noise.mode_count", d.mode_count as u64) as usize;
    let eps_sigma = r.float("noise.eps_sigma", d.eps_sigma);
    let ensemble_n = r.uint("ensemble.n", d.ensemble_n as u64) as usize;
    let ensemble_first = r.uint("ensemble.first", d.ensemble_first);
    let eps0_grid = r.floats("ensemble.eps0_grid");
    let seed = r.uint("seed", d.seed);
    let output_dir = r.string("output.dir", &d.output_dir);
    let snapshot_every = r.uint("snapshot.every", d.snapshot_every as u64) as usize;
    let picard_level = r.uint("picard.level", d.picard_level as u64) as usize;
    let picard_t_star = r.float("picard.t_star", d.picard_t_star);
    let picard_iters = r.uint("picard.iters", d.picard_iters as u64) as usize;

    let cfg = RunConfig {
        grid_n,
        dt,
        horizon,
        blowup_bound,
        k_max,
        data_kind,
        eps0,
        eps_bar,
        cap_base,
        cap_growth,
        mode_count,
        eps_sigma,
        ensemble_n,
        ensemble_first,
        eps0_grid,
        seed,
        output_dir,
        snapshot_every,
        picard_level,
        picard_t_star,
        picard_iters,
    };
    let mut errors = r.errors;
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(SnseError::Config(errors))
    }
}

impl RunConfig {
    /// Constraint violations, each naming the rule it breaks.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.grid_n < 8 || !self.grid_n.is_power_of_two() {
            v.push(format!("grid.n = {}: must be a power of two, at least 8", self.grid_n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            v.push(format!("time.dt = {}: must be positive", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            v.push(format!("time.horizon = {}: must be positive", self.horizon));
        }
        if self.dt > 0.0 && self.horizon / self.dt > MAX_STEPS {
            v.push(format!("time.horizon / time.dt = {:e}: at most 1e7 steps", self.horizon / self.dt));
        }
        if !(self.blowup_bound > 0.0) {
            v.push("time.blowup_bound: must be positive".into());
        }
        if self.k_max > 40 {
            v.push(format!("cascade.k_max = {}: at most 40", self.k_max));
        }
        let eps0s: Vec<f64> = match &self.eps0_grid {
            Some(g) if g.is_empty() => {
                v.push("ensemble.eps0_grid: must not be empty".into());
                vec![]
            }
            Some(g) => g.clone(),
            None => vec![self.eps0],
        };
        for &e in &eps0s {
            if !(e >= 0.0 && e.is_finite()) {
                v.push(format!("eps0 = {e}: must be finite and nonnegative"));
                continue;
            }
            let bar = self.eps_bar.unwrap_or_else(|| default_eps_bar(e));
            if !(bar > 2.0 * e) {
                v.push(format!("eps_bar must exceed 2*eps0 (eps_bar = {bar}, eps0 = {e})"));
            }
            if !(bar < 1.0) {
                v.push(format!("eps_bar must be below 1 (eps_bar = {bar})"));
            }
        }
        if !(self.cap_base > 0.0 && self.cap_base.is_finite()) {
            v.push("cutoff.cap_rule: base must be positive".into());
        }
        if !(self.cap_growth > 1.0 && self.cap_growth.is_finite()) {
            v.push("cutoff.cap_rule: growth must exceed 1 so that M_k increases".into());
        }
        if !(self.eps_sigma > 0.0 && self.eps_sigma <= 1.0) {
            v.push(format!("noise.eps_sigma = {}: must lie in (0, 1]", self.eps_sigma));
        }
        if self.ensemble_n < 1 {
            v.push("ensemble.n: must be at least 1".into());
        }
        if self.picard_level > self.k_max {
            v.push(format!("picard.level = {} exceeds cascade.k_max = {}", self.picard_level, self.k_max));
        }
        if !(self.picard_t_star > 0.0) {
            v.push("picard.t_star: must be positive".into());
        }
        if self.picard_iters < 2 {
            v.push("picard.iters: must be at least 2".into());
        }
        v
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// The `eps0` values an ensemble run sweeps.
    pub fn eps0_values(&self) -> Vec<f64> {
        self.eps0_grid.clone().unwrap_or_else(|| vec![self.eps0])
    }

    pub fn eps_bar_for(&self, eps0: f64) -> f64 {
        self.eps_bar.unwrap_or_else(|| default_eps_bar(eps0))
    }

    /// Canonical JSON echo (fields in declaration order, defaults filled).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(SnseError::Config(e)) => e,
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("data.eps0 = 1e-3").unwrap();
        assert_eq!(c.eps0, 1e-3);
        assert_eq!(c.grid_n, 16);
        assert_eq!(c.k_max, 3);
        assert_eq!(c.steps(), 1000);
        assert_eq!(c.eps_bar_for(c.eps0), 8e-3);
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = parse_config("data.eps0 = 0.01\ngrid.n = 32\n").unwrap();
        let b = parse_config("[data]\neps0 = 0.01\n[grid]\nn = 32\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn eps_bar_not_above_twice_eps0_rejected() {
        let e = errors("data.eps0 = 0.01\ncutoff.eps_bar = 0.01");
        assert!(e.iter().any(|m| m.contains("eps_bar must exceed 2*eps0")), "{e:?}");
    }

    #[test]
    fn zero_dt_rejected() {
        let e = errors("data.eps0 = 0.01\ntime.dt = 0");
        assert!(e.iter().any(|m| m.starts_with("time.dt")), "{e:?}");
    }

    #[test]
    fn unknown_and_missing_keys_reported_together() {
        let e = errors("grid.m = 3\nnoise.eps_sigma = 2.0");
        assert!(e.iter().any(|m| m.contains("grid.m: unknown key")));
        assert!(e.iter().any(|m| m.contains("data.eps0: required")));
        assert!(e.iter().any(|m| m.contains("eps_sigma")));
    }

    #[test]
    fn too_many_steps_rejected() {
        let e = errors("data.eps0 = 0.01\ntime.dt = 1e-8\ntime.horizon = 1.0");
        assert!(e.iter().any(|m| m.contains("1e7")), "{e:?}");
    }

    #[test]
    fn bad_kind_and_grid() {
        let e = errors("data.eps0 = 0.01\ndata.kind = \"vortex\"\ngrid.n = 12");
        assert_eq!(e.len(), 2, "{e:?}");
    }
}
