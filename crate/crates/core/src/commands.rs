//! Subcommands: each reads a validated config, writes its tables and
//! snapshots into one output directory and finishes with a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::ensemble::{initial_field, prepare, run_ensemble, EnsembleStats, RealizationSummary};
use crate::error::{invalid, Result, SnseError};
use crate::initial_data::decompose;
use crate::integrator::{picard_solve, run_cascade, simulate_direct, CascadeOptions, CascadeState, PicardSetup};
use crate::io::{num, opt_num, write_csv, write_field, RunManifest};
use crate::noise::NoiseBasis;
use crate::spectral::GridSpec;
use crate::stopping::{detect_hits, NormSeries};
use crate::verify::run_checks;

pub const REALIZATIONS_FILE: &str = "realizations.json";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Decompose,
    Simulate,
    Cascade,
    Picard,
    Ensemble,
    /// Combines the realization files of several ensemble directories.
    Merge(Vec<PathBuf>),
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Simulate => "simulate",
            Command::Cascade => "cascade",
            Command::Picard => "picard",
            Command::Ensemble => "ensemble",
            Command::Merge(_) => "merge",
            Command::Verify => "verify",
        }
    }
}

/// What a command produced; `ok` is false only when `verify` found a failing check.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub ok: bool,
}

/// Runs `cmd` with outputs in `out`, then writes the manifest.
pub fn run_command(cmd: &Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    let grid = GridSpec::new(cfg.grid_n)?;
    let basis = NoiseBasis::new(&grid, cfg.mode_count, cfg.eps_sigma)?;
    let realizations = match cmd {
        Command::Ensemble => (cfg.ensemble_first..cfg.ensemble_first + cfg.ensemble_n as u64).collect(),
        Command::Merge(_) | Command::Verify => Vec::new(),
        _ => vec![cfg.ensemble_first],
    };
    let mut manifest = RunManifest::new(cmd.name(), cfg, realizations, basis.describe());
    let outcome = match cmd {
        Command::Decompose => decompose_cmd(cfg, out)?,
        Command::Simulate => simulate_cmd(cfg, &basis, out)?,
        Command::Cascade => cascade_cmd(cfg, &basis, out)?,
        Command::Picard => picard_cmd(cfg, &basis, out)?,
        Command::Ensemble => ensemble_cmd(cfg, out)?,
        Command::Merge(dirs) => {
            let (outcome, ids) = merge_cmd(cfg, dirs, out)?;
            manifest.realizations = ids;
            outcome
        }
        Command::Verify => verify_cmd(cfg, out)?,
    };
    manifest.finish(out, &outcome.files)?;
    Ok(outcome)
}

fn decompose_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let grid = GridSpec::new(cfg.grid_n)?;
    let u0 = initial_field(&grid, cfg.data_kind, cfg.eps0, cfg.seed, cfg.ensemble_first)?;
    let d = decompose(&u0, cfg.eps0, cfg.k_max)?;
    let mut files = vec![out.join("decompose.csv"), out.join("u0.snse")];
    write_csv(
        &files[0],
        &["k", "norm3", "norm6", "tail_error"],
        (0..=d.k_max()).map(|k| {
            vec![
                k.to_string(),
                num(d.level_norm(k, 3.0)),
                num(d.level_norm(k, 6.0)),
                num(d.tail_errors[k]),
            ]
        }),
    )?;
    write_field(&files[1], &u0)?;
    for (k, level) in d.levels.iter().enumerate() {
        let p = out.join(format!("level_{k}.snse"));
        write_field(&p, level)?;
        files.push(p);
    }
    Ok(Outcome { files, ok: true })
}

fn simulate_cmd(cfg: &RunConfig, basis: &NoiseBasis, out: &Path) -> Result<Outcome> {
    let grid = GridSpec::new(cfg.grid_n)?;
    let u0 = initial_field(&grid, cfg.data_kind, cfg.eps0, cfg.seed, cfg.ensemble_first)?;
    let run = simulate_direct(&u0, basis, cfg.seed, cfg.ensemble_first, cfg.dt, cfg.steps(), cfg.blowup_bound)?;
    let files = vec![out.join("simulate.csv"), out.join("final.snse")];
    write_csv(
        &files[0],
        &["t", "norm3", "norm6"],
        (0..run.times.len()).map(|n| vec![num(run.times[n]), num(run.norm3[n]), num(run.norm6[n])]),
    )?;
    write_field(&files[1], &run.final_state)?;
    Ok(Outcome { files, ok: true })
}

fn cascade_cmd(cfg: &RunConfig, basis: &NoiseBasis, out: &Path) -> Result<Outcome> {
    let prep = prepare(cfg, cfg.eps0, cfg.ensemble_first)?;
    let mut state = CascadeState::from_decomposition(&prep.decomposition)?;
    let opts = CascadeOptions {
        forced: None,
        record_dissipation: true,
        blowup_bound: Some(cfg.blowup_bound),
    };
    let mut files = Vec::new();
    let snap_dir = out.join("snapshots");
    let every = cfg.snapshot_every;
    if every > 0 {
        fs::create_dir_all(&snap_dir)?;
    }
    let samples = run_cascade(
        &mut state,
        &prep.params,
        basis,
        cfg.seed,
        cfg.ensemble_first,
        cfg.dt,
        cfg.steps(),
        &opts,
        |s, _| {
            let n = s.step_index() as usize;
            if every > 0 && n.is_multiple_of(every) {
                for k in 0..=s.k_max() {
                    let p = snap_dir.join(format!("step_{n:08}_level_{k}.snse"));
                    write_field(&p, &s.level(k))?;
                    files.push(p);
                }
            }
            Ok(())
        },
    )?;
    let series_path = out.join("series.csv");
    write_csv(
        &series_path,
        &["t", "level", "norm3", "norm6", "dissip3", "dissip6", "psi", "phi", "zeta"],
        samples.iter().map(|s| {
            vec![
                num(s.t),
                s.level.to_string(),
                num(s.norm3),
                num(s.norm6),
                s.dissip3.map_or_else(String::new, num),
                s.dissip6.map_or_else(String::new, num),
                num(s.psi),
                num(s.phi),
                num(s.zeta),
            ]
        }),
    )?;
    let cutoffs_path = out.join("cutoffs.csv");
    write_csv(
        &cutoffs_path,
        &["t", "k", "psi", "phi", "zeta"],
        samples
            .iter()
            .map(|s| vec![num(s.t), s.level.to_string(), num(s.psi), num(s.phi), num(s.zeta)]),
    )?;
    let series = NormSeries::from_samples(cfg.dt, &samples);
    let record = detect_hits(&series, &prep.params, cfg.steps() as f64 * cfg.dt)?;
    let stopping_path = out.join("stopping.csv");
    write_csv(
        &stopping_path,
        &["k", "tau_k", "sigma_k", "tau_up_to_k"],
        (0..record.tau_k.len()).map(|k| {
            vec![
                k.to_string(),
                opt_num(record.tau_k[k]),
                opt_num(record.sigma_k[k]),
                opt_num(record.tau_up_to_k[k]),
            ]
        }),
    )?;
    files.extend([series_path, cutoffs_path, stopping_path]);
    for k in 0..=state.k_max() {
        let p = out.join(format!("final_level_{k}.snse"));
        write_field(&p, &state.level(k))?;
        files.push(p);
    }
    Ok(Outcome { files, ok: true })
}

fn picard_cmd(cfg: &RunConfig, basis: &NoiseBasis, out: &Path) -> Result<Outcome> {
    let prep = prepare(cfg, cfg.eps0, cfg.ensemble_first)?;
    let report = picard_solve(&PicardSetup {
        levels: &prep.decomposition.levels[..=cfg.picard_level],
        params: &prep.params,
        basis,
        seed: cfg.seed,
        realization: cfg.ensemble_first,
        dt: cfg.dt,
        t_star: cfg.picard_t_star,
        iters: cfg.picard_iters,
        forced_cutoff: None,
    })?;
    let path = out.join("picard.csv");
    write_csv(
        &path,
        &["j", "d", "ratio"],
        report.d.iter().enumerate().map(|(j, dj)| {
            let ratio = if j == 0 { String::new() } else { num(report.ratios[j - 1]) };
            vec![j.to_string(), num(*dj), ratio]
        }),
    )?;
    Ok(Outcome { files: vec![path], ok: true })
}

/// Per-realization results of an ensemble directory, the input to `merge`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleFile {
    /// Hash of the config with the realization range and output dir blanked.
    pub compat_hash: String,
    pub horizon: f64,
    pub runs: Vec<EnsembleRun>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub eps0: f64,
    pub summaries: Vec<RealizationSummary>,
}

pub fn compat_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.ensemble_n = 1;
    c.ensemble_first = 0;
    c.output_dir = String::new();
    c.hash()
}

fn write_ensemble_tables(stats: &[EnsembleStats], out: &Path) -> Result<Vec<PathBuf>> {
    let summary = out.join("summary.csv");
    write_csv(
        &summary,
        &["eps0", "n", "n_invalid", "p_hat", "ci_lo", "ci_hi", "energy_lhs_mean", "energy_ratio"],
        stats.iter().map(|s| {
            let r = s.summary_row();
            vec![
                num(r.eps0),
                r.n.to_string(),
                r.n_invalid.to_string(),
                num(r.p_hat),
                num(r.ci_lo),
                num(r.ci_hi),
                num(r.energy_lhs_mean),
                num(r.energy_ratio),
            ]
        }),
    )?;
    let mut files = vec![summary];
    for (i, s) in stats.iter().enumerate() {
        let p = out.join(format!("levels_{i}.csv"));
        write_csv(
            &p,
            &["k", "p_hat_level", "ceiling_violations"],
            s.level_rows()
                .into_iter()
                .map(|r| vec![r.k.to_string(), num(r.p_hat_level), r.ceiling_violations.to_string()]),
        )?;
        files.push(p);
    }
    Ok(files)
}

fn write_ensemble_file(file: &EnsembleFile, out: &Path) -> Result<PathBuf> {
    let p = out.join(REALIZATIONS_FILE);
    fs::write(&p, serde_json::to_string_pretty(file).expect("summaries serialize") + "\n")?;
    Ok(p)
}

fn ensemble_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let horizon = cfg.steps() as f64 * cfg.dt;
    let stats: Vec<EnsembleStats> = cfg
        .eps0_values()
        .into_iter()
        .map(|eps0| run_ensemble(cfg, eps0, cfg.ensemble_first, cfg.ensemble_n))
        .collect::<Result<_>>()?;
    let mut files = write_ensemble_tables(&stats, out)?;
    let file = EnsembleFile {
        compat_hash: compat_hash(cfg),
        horizon,
        runs: stats
            .iter()
            .map(|s| EnsembleRun {
                eps0: s.eps0,
                summaries: s.summaries.clone(),
            })
            .collect(),
    };
    files.push(write_ensemble_file(&file, out)?);
    Ok(Outcome { files, ok: true })
}

pub fn read_ensemble_file(dir: &Path) -> Result<EnsembleFile> {
    let text = fs::read_to_string(dir.join(REALIZATIONS_FILE))?;
    serde_json::from_str(&text).map_err(|e| SnseError::Format(format!("{}: {e}", dir.display())))
}

fn merge_cmd(cfg: &RunConfig, dirs: &[PathBuf], out: &Path) -> Result<(Outcome, Vec<u64>)> {
    if dirs.is_empty() {
        return Err(SnseError::Empty("merge inputs"));
    }
    let expected = compat_hash(cfg);
    let mut merged: Option<Vec<EnsembleStats>> = None;
    for dir in dirs {
        let file = read_ensemble_file(dir)?;
        if file.compat_hash != expected {
            return Err(invalid("merge", format!("{} was produced by a different configuration", dir.display())));
        }
        let stats: Vec<EnsembleStats> = file
            .runs
            .into_iter()
            .map(|r| EnsembleStats::new(r.eps0, file.horizon, r.summaries))
            .collect::<Result<_>>()?;
        merged = Some(match merged {
            None => stats,
            Some(prev) => {
                if prev.len() != stats.len() {
                    return Err(invalid("merge", "inputs sweep different eps0 grids"));
                }
                prev.iter().zip(&stats).map(|(a, b)| a.merge(b)).collect::<Result<_>>()?
            }
        });
    }
    let stats = merged.expect("at least one input");
    let mut files = write_ensemble_tables(&stats, out)?;
    let file = EnsembleFile {
        compat_hash: expected,
        horizon: stats[0].horizon,
        runs: stats
            .iter()
            .map(|s| EnsembleRun {
                eps0: s.eps0,
                summaries: s.summaries.clone(),
            })
            .collect(),
    };
    files.push(write_ensemble_file(&file, out)?);
    let ids = stats[0].summaries.iter().map(|s| s.realization).collect();
    Ok((Outcome { files, ok: true }, ids))
}

fn verify_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let checks = run_checks(cfg)?;
    let path = out.join("verify.csv");
    write_csv(
        &path,
        &["check", "measured", "tolerance", "pass"],
        checks
            .iter()
            .map(|c| vec![c.name.to_string(), num(c.measured), num(c.tolerance), c.pass.to_string()]),
    )?;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        log::info!("{status} {} measured {:e} tolerance {:e}", c.name, c.measured, c.tolerance);
    }
    Ok(Outcome {
        files: vec![path],
        ok: checks.iter().all(|c| c.pass),
    })
}
