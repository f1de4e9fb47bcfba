//! Quick invariant checks of every module, each with its measured value.

use crate::config::RunConfig;
use crate::cutoffs::{theta, CutoffParams};
use crate::error::Result;
use crate::initial_data::{decompose, level_tolerance, normalize_l3, random_band_field};
use crate::integrator::heat_step;
use crate::noise::{lipschitz_corpus, lipschitz_report, sample_increments, sigma_apply, NoiseBasis};
use crate::spectral::ops::inner_product;
use crate::spectral::{
    divergence, fft, gradient, interp_ratio, leray_project, vector_lp_norm, GridSpec, NormMode, ScalarField,
    VectorField,
};
use crate::stopping::{detect_hits, NormSeries};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Check {
    Check {
        name,
        measured,
        tolerance,
        pass: measured <= tolerance,
    }
}

fn sup(u: &VectorField) -> f64 {
    u.sup_abs()
}

fn sup_diff(a: &VectorField, b: &VectorField) -> f64 {
    sup(&a.sub(b).expect("same grid"))
}

pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let grid = GridSpec::new(cfg.grid_n)?;
    let seed = cfg.seed;
    let fields: Vec<VectorField> = (0..8)
        .map(|r| {
            let f = random_band_field(&grid, 1.0, seed, r, None);
            // add a gradient part so the projector has something to remove
            let phi = ScalarField::from_fn(&grid, |x| (x[0] + 2.0 * x[1]).sin() * (r as f64 + 1.0).cos() + x[2].cos());
            f.add(&gradient(&phi)).expect("same grid")
        })
        .collect();
    let mut out = Vec::new();

    let mut roundtrip: f64 = 0.0;
    for u in &fields {
        for c in u.components() {
            let v = c.values();
            let back = fft::inverse_real(grid.n(), &fft::forward_real(grid.n(), &v));
            roundtrip = roundtrip.max(v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    out.push(at_most("fft_round_trip", roundtrip, 1e-12));

    let (mut idem, mut div, mut sym): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, u) in fields.iter().enumerate() {
        let p = leray_project(u);
        idem = idem.max(sup_diff(&leray_project(&p), &p) / sup(u).max(1.0));
        div = div.max(divergence(&p).values().iter().map(|x| x.abs()).fold(0.0, f64::max));
        let w = &fields[(i + 1) % fields.len()];
        let lhs = inner_product(&p, w);
        let rhs = inner_product(u, &leray_project(w));
        sym = sym.max((lhs - rhs).abs());
    }
    out.push(at_most("leray_idempotent", idem, 1e-12));
    out.push(at_most("leray_divergence", div, 1e-12));
    out.push(at_most("leray_symmetric", sym, 1e-10));
    let phi = ScalarField::from_fn(&grid, |x| (x[0] - x[2]).cos() + (2.0 * x[1]).sin());
    out.push(at_most("leray_annihilates_gradients", sup(&leray_project(&gradient(&phi))), 1e-12));

    // heat step on a single mode decays by exp(-|k|² dt)
    let dt = cfg.dt;
    let mode = VectorField::from_fn(&grid, |x| [0.0, (x[0] + x[2]).sin(), 0.0]);
    let dw = sample_increments(seed, 0, 0, dt, 0)?;
    let stepped = heat_step(&mode, None, &[], &dw, dt)?;
    let expected = mode.scaled((-2.0 * dt).exp());
    out.push(at_most("heat_single_mode_decay", sup_diff(&stepped, &expected), 1e-14));

    let basis = NoiseBasis::new(&grid, cfg.mode_count.max(1), cfg.eps_sigma)?;
    let zero_out = sigma_apply(&basis, 0.0, &VectorField::zeros(&grid))?;
    out.push(at_most("sigma_of_zero", zero_out.iter().map(sup).fold(0.0, f64::max), 0.0));
    let mut sigma_div: f64 = 0.0;
    for u in &fields {
        for s in sigma_apply(&basis, 0.0, u)? {
            sigma_div = sigma_div.max(divergence(&s).values().iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
    }
    out.push(at_most("sigma_divergence_free", sigma_div, 1e-12));
    let corpus = lipschitz_corpus(&grid, 10, seed);
    for (name, p) in [("sigma_lipschitz_l3", 3.0), ("sigma_lipschitz_l6", 6.0)] {
        out.push(at_most(name, lipschitz_report(&basis, &corpus, p)?.max_ratio, cfg.eps_sigma));
    }

    let eps0 = 0.01;
    let u0 = normalize_l3(&random_band_field(&grid, 1.0, seed, 100, None), eps0);
    let d = decompose(&u0, eps0, 3)?;
    let mut worst: f64 = d.level_norm(0, 3.0) / (2.0 * eps0);
    for k in 1..=d.k_max() {
        worst = worst.max(d.level_norm(k, 3.0) / (eps0 / 4f64.powi(k as i32)));
    }
    for (k, t) in d.tail_errors.iter().enumerate() {
        worst = worst.max(t / (eps0 / 2f64.powi(k as i32 + 3)));
        worst = worst.max(t / level_tolerance(eps0, k) / (1.0 + 1e-10));
    }
    out.push(at_most("decomposition_bounds", worst, 1.0));

    let mut theta_err: f64 = (theta(1.0) - 1.0).abs().max(theta(2.0)).max(theta(0.0) - 1.0);
    let mut prev = 1.0;
    for i in 0..=200 {
        let t = theta(1.0 + i as f64 / 200.0);
        theta_err = theta_err.max(t - prev);
        prev = t;
    }
    out.push(at_most("cutoff_profile", theta_err, 0.0));

    let params = CutoffParams::new(0.08, vec![10.0, 20.0]);
    let mut series = NormSeries::new(0.1, vec![vec![0.0; 10]; 2], vec![vec![0.0; 10]; 2]);
    series.norm3[1][7] = 0.05;
    let tau = detect_hits(&series, &params, 1.0)?.tau.unwrap_or(f64::INFINITY);
    out.push(at_most("first_crossing_time", (tau - 0.7).abs(), 1e-15));

    let mut ratio_max: f64 = 0.0;
    for u in &fields {
        for p in [2.0, 3.0, 6.0] {
            ratio_max = ratio_max.max(interp_ratio(u.component(0), p)?);
        }
    }
    out.push(Check {
        name: "interp_ratio_finite",
        measured: ratio_max,
        tolerance: f64::INFINITY,
        pass: ratio_max.is_finite(),
    });

    let norm_check = fields
        .iter()
        .map(|u| {
            let a = vector_lp_norm(u, 3.0, NormMode::Magnitude).expect("p = 3");
            let b = vector_lp_norm(&u.scaled(-2.0), 3.0, NormMode::Magnitude).expect("p = 3");
            (b - 2.0 * a).abs() / a
        })
        .fold(0.0, f64::max);
    out.push(at_most("norm_homogeneity", norm_check, 1e-13));
    Ok(out)
}
