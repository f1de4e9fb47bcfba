use std::f64::consts::PI;

use snse_core::initial_data::*;
use snse_core::spectral::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n).unwrap()
}

fn max_abs(f: &ScalarField) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn kernel_mass_and_concentration() {
    let g = grid(32);
    let mut last_max = 0.0;
    for delta in [2.5, 1.6, 1.0, 0.8] {
        let k = mollifier_kernel(delta, &g).unwrap();
        let mass: f64 = k.values().iter().sum::<f64>() * g.cell_volume();
        assert!((mass - 1.0).abs() < 1e-10);
        assert!(k.values().iter().all(|&v| v >= 0.0));
        let peak = max_abs(&k);
        assert!(peak > last_max, "smaller delta must concentrate");
        last_max = peak;
    }
}

#[test]
fn kernel_rejects_unresolved_radius() {
    let g = grid(16);
    assert!(mollifier_kernel(0.5, &g).is_err());
    assert!(mollifier_kernel(3.5, &g).is_err());
}

#[test]
fn convolution_preserves_constants() {
    let g = grid(16);
    let k = mollifier_kernel(2.0, &g).unwrap();
    let c = ScalarField::from_fn(&g, |_| 3.25);
    let out = convolve(&k, &c).unwrap();
    assert!(out.values().iter().all(|v| (v - 3.25).abs() < 1e-12));
}

#[test]
fn mollify_keeps_divergence_free_and_commutes_with_projection() {
    let g = grid(16);
    let u = random_band_field(&g, 1.0, 5, 0, None);
    let m = mollify(&u, 0.6).unwrap();
    assert!(max_abs(&divergence(&m)) <= 1e-12);
    let w = VectorField::from_fn(&g, |x| [x[1].sin() + (x[0] + x[2]).cos(), (2.0 * x[0]).sin(), x[0].cos() * x[1].sin()]);
    let a = mollify(&leray_project(&w), 0.6).unwrap();
    let b = leray_project(&mollify(&w, 0.6).unwrap());
    assert!(a.sub(&b).unwrap().sup_abs() <= 1e-12);
    assert_eq!(mollify(&VectorField::zeros(&g), 0.6).unwrap().sup_abs(), 0.0);
}

#[test]
fn mollify_error_is_second_order_in_delta() {
    let g = grid(16);
    let u = random_band_field(&g, 1.0, 3, 0, Some(2));
    let rel = |d: f64| l3(&mollify(&u, d).unwrap().sub(&u).unwrap()) / l3(&u);
    let (a, b) = (rel(0.2), rel(0.1));
    assert!((a / b - 4.0).abs() < 0.1, "ratio {}", a / b);
    assert!(rel(0.05) <= 1e-3);
}

#[test]
fn mollifier_symbol_oracle() {
    // symbol of the normalized bump by direct 3D-radial quadrature,
    // ∫₀¹ e^{-1/(1-r²)} r² sinc(s r) dr / ∫₀¹ e^{-1/(1-r²)} r² dr, midpoint rule
    let oracle = |s: f64| {
        let n = 200_000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let r = (i as f64 + 0.5) / n as f64;
            let w = (-1.0 / (1.0 - r * r)).exp() * r * r;
            let x = s * r;
            num += w * x.sin() / x;
            den += w;
        }
        num / den
    };
    for s in [0.5, 1.7, 4.0, 9.3] {
        assert!((mollifier_symbol(1.0, s) - oracle(s)).abs() < 1e-9, "s={s}");
    }
    assert!((mollifier_symbol(0.5, 4.0) - mollifier_symbol(1.0, 2.0)).abs() < 1e-15);
}

fn check_decomposition(u0: &VectorField, eps0: f64, k_max: usize) {
    let d = decompose(u0, eps0, k_max).unwrap();
    assert!(!d.truncated);
    assert_eq!(d.levels.len(), k_max + 1);
    assert!(d.level_norm(0, 3.0) <= 2.0 * eps0);
    for k in 1..=k_max {
        assert!(d.level_norm(k, 3.0) <= eps0 / 4f64.powi(k as i32), "level {k}");
    }
    for (k, t) in d.tail_errors.iter().enumerate() {
        assert!(*t <= eps0 / 2f64.powi(k as i32 + 3), "tail {k}");
    }
    for w in d.tail_errors.windows(2) {
        assert!(w[1] <= w[0]);
    }
    for level in &d.levels {
        assert!(max_abs(&divergence(level)) <= 1e-12);
        for c in level.components() {
            assert!(c.mean().abs() <= 1e-14);
        }
    }
    let direct = l3(&u0.sub(&d.partial_sum(k_max)).unwrap());
    assert!((direct - d.tail_errors[k_max]).abs() <= 1e-12 * eps0);
}

#[test]
fn decomposition_invariants_on_random_data() {
    let g = grid(16);
    for r in 0..5 {
        let u0 = normalize_l3(&random_band_field(&g, 1.0, 11, r, None), 0.01);
        check_decomposition(&u0, 0.01, 5);
    }
}

#[test]
fn decomposition_of_structured_data() {
    let g = grid(16);
    for kind in [FieldKind::TaylorGreen, FieldKind::SingleMode] {
        let u0 = normalize_l3(&make_test_field(&g, kind, 1.0, 0).unwrap(), 0.02);
        check_decomposition(&u0, 0.02, 3);
    }
}

#[test]
fn band_limited_data_lands_in_level_zero() {
    let g = grid(16);
    let u0 = normalize_l3(&random_band_field(&g, 1.0, 2, 0, Some(2)), 0.01);
    let d = decompose(&u0, 0.01, 3).unwrap();
    assert!(l3(&d.levels[0].sub(&u0).unwrap()) <= level_tolerance(0.01, 0));
    for k in 1..=3 {
        assert!(d.level_norm(k, 3.0) <= 0.01 / 4f64.powi(k as i32));
    }
}

#[test]
fn zero_data_gives_zero_levels() {
    let g = grid(16);
    let d = decompose(&VectorField::zeros(&g), 0.01, 4).unwrap();
    assert!(d.levels.iter().all(|l| l.sup_abs() == 0.0));
    assert!(d.tail_errors.iter().all(|&t| t == 0.0));
}

#[test]
fn test_fields_match_formulas() {
    let g = grid(16);
    let a = 0.7;
    let tg = make_test_field(&g, FieldKind::TaylorGreen, a, 0).unwrap();
    assert!(max_abs(&divergence(&tg)) <= 1e-13);
    let p = g.point(g.index(3, 5, 7));
    let v = tg.values();
    let idx = g.index(3, 5, 7);
    assert!((v[0][idx] - a * p[0].sin() * p[1].cos() * p[2].cos()).abs() < 1e-15);
    assert!((v[1][idx] + a * p[0].cos() * p[1].sin() * p[2].cos()).abs() < 1e-15);

    let sm = make_test_field(&g, FieldKind::SingleMode, a, 0).unwrap();
    let l2 = vector_lp_norm(&sm, 2.0, NormMode::Magnitude).unwrap();
    assert!((l2 - a * (2.0 * PI).powf(1.5) / 2f64.sqrt()).abs() < 1e-12);

    let r1 = make_test_field(&g, FieldKind::RandomBand, 1.0, 9).unwrap();
    let r2 = make_test_field(&g, FieldKind::RandomBand, 1.0, 9).unwrap();
    assert_eq!(r1.values(), r2.values());
    assert!(make_test_field(&g, FieldKind::TaylorGreen, 0.0, 0).is_err());
}
