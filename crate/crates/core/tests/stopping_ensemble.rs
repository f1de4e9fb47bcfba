use snse_core::config::{parse_config, RunConfig};
use snse_core::cutoffs::CutoffParams;
use snse_core::ensemble::*;
use snse_core::integrator::{run_cascade, CascadeOptions, CascadeState};
use snse_core::noise::NoiseBasis;
use snse_core::stopping::*;
use snse_core::SnseError;

fn short_config(eps0: f64) -> RunConfig {
    parse_config(&format!("data.eps0 = {eps0}\ntime.horizon = 0.05\ncascade.k_max = 2")).unwrap()
}

#[test]
fn hitting_times_match_a_direct_scan() {
    let cfg = short_config(0.02);
    let prep = prepare(&cfg, 0.02, 0).unwrap();
    let basis = NoiseBasis::new(prep.decomposition.levels[0].grid(), 8, 0.5).unwrap();
    let mut state = CascadeState::from_decomposition(&prep.decomposition).unwrap();
    let samples = run_cascade(&mut state, &prep.params, &basis, 0, 0, 1e-3, 50, &CascadeOptions::default(), |_, _| Ok(())).unwrap();
    let series = NormSeries::from_samples(1e-3, &samples);
    assert_eq!(series.levels(), 3);
    // thresholds inside the observed range so that every level crosses
    let eps_bar = 1.5 * series.norm3[0].iter().cloned().fold(f64::INFINITY, f64::min);
    let caps: Vec<f64> = (0..3).map(|k| series.norm6[k][25] * (1.0 + k as f64 * 1e-9)).collect();
    let params = CutoffParams::new(eps_bar, caps.clone());
    let rec = detect_hits(&series, &params, 0.05).unwrap();
    for k in 0..3 {
        let thr = eps_bar / 2f64.powi(k as i32);
        let first3 = series.norm3[k].iter().position(|&v| v >= thr).map(|n| n as f64 * 1e-3);
        let first6 = series.norm6[k].iter().position(|&v| v >= caps[k]).map(|n| n as f64 * 1e-3);
        assert_eq!(rec.tau_k[k], first3);
        assert_eq!(rec.sigma_k[k], first6);
    }
    for w in rec.tau_up_to_k.windows(2) {
        assert!(w[1].unwrap_or(f64::INFINITY) <= w[0].unwrap_or(f64::INFINITY));
    }
    let tau = rec.tau.unwrap();
    assert!(rec.tau_up_to_k.iter().all(|t| tau <= t.unwrap_or(f64::INFINITY)));
    assert!(((tau / 1e-3).round() * 1e-3 - tau).abs() < 1e-15);
}

#[test]
fn zero_data_never_hits() {
    let cfg = short_config(0.0);
    let out = run_realization(&cfg, 0.0, 0, &RealizationOptions::default()).unwrap();
    assert!(out.summary.valid);
    assert_eq!(out.summary.tau, None);
    assert_eq!(out.summary.energy_lhs, 0.0);
    assert!(out.final_levels.iter().all(|l| l.sup_abs() == 0.0));
}

#[test]
fn realizations_are_reproducible() {
    let cfg = short_config(0.01);
    let opts = RealizationOptions {
        keep_series: true,
        ..Default::default()
    };
    let a = run_realization(&cfg, 0.01, 3, &opts).unwrap();
    let b = run_realization(&cfg, 0.01, 3, &opts).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.record, b.record);
    assert_eq!(a.samples, b.samples);
    assert!(a.summary.energy_lhs > 0.0);
    assert_eq!(a.samples.len(), 51 * 3);
}

#[test]
fn eps_bar_below_twice_eps0_rejected_before_running() {
    let e = parse_config("data.eps0 = 0.01\ncutoff.eps_bar = 0.015").unwrap_err();
    assert!(e.to_string().contains("eps_bar must exceed 2*eps0"));
}

#[test]
fn ensemble_split_and_merge_matches_single_run() {
    let cfg = short_config(0.01);
    let all = run_ensemble(&cfg, 0.01, 0, 6).unwrap();
    let a = run_ensemble(&cfg, 0.01, 0, 2).unwrap();
    let b = run_ensemble(&cfg, 0.01, 2, 4).unwrap();
    assert_eq!(b.merge(&a).unwrap(), all);
    assert_eq!(all.summary_row(), a.merge(&b).unwrap().summary_row());
    let row = all.summary_row();
    assert!((0.0..=1.0).contains(&row.p_hat));
    assert!(row.ci_lo <= row.p_hat && row.p_hat <= row.ci_hi);
    assert!(all.level_rows().iter().all(|r| r.ceiling_violations == 0));
}

#[test]
fn blown_up_realizations_are_excluded_and_counted() {
    let mut cfg = short_config(0.01);
    cfg.blowup_bound = 1e-9;
    let out = run_realization(&cfg, 0.01, 0, &RealizationOptions::default()).unwrap();
    assert!(!out.summary.valid);
    assert!(matches!(run_ensemble(&cfg, 0.01, 0, 2), Err(SnseError::AllInvalid(2))));
    assert!(run_ensemble(&cfg, 0.01, 0, 0).is_err());
}

#[test]
fn energy_ratio_is_zero_for_zero_data() {
    let cfg = short_config(0.0);
    let s = run_ensemble(&cfg, 0.0, 0, 2).unwrap();
    assert_eq!(s.energy_ratio(), 0.0);
    assert_eq!(s.hit_probability().0, 0.0);
}
