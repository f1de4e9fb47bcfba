#![allow(dead_code)]

use snse_core::integrator::heat_step;
use snse_core::noise::sample_increments;
use snse_core::spectral::ops::inner_product;
use snse_core::spectral::*;

/// Smooth data on the unit shell `|k_j| ≤ 1`, plus a weak smooth flux.
pub fn audit_data(grid: &GridSpec) -> (VectorField, [VectorField; 3]) {
    let u = VectorField::from_fn(grid, |x| {
        [
            x[1].sin() + 0.5 * (x[1] + x[2]).cos(),
            x[2].cos() - 0.3 * (x[0] - x[2]).sin(),
            0.7 * x[0].sin(),
        ]
    });
    let f = [0, 1, 2].map(|j| {
        let s = 0.05 * (j as f64 + 1.0);
        VectorField::from_fn(grid, move |x| [s * x[1].cos(), -s * (x[0] + x[2]).sin(), s * x[0].cos()])
    });
    (u, f)
}

/// `(‖u₁‖² − ‖u₀‖² + 2dt‖∇u₀‖² + 2dt Σ_j (f_j, ∇u_{0,j})) / ‖u₀‖²` for one
/// deterministic heat step.
pub fn heat_energy_residual(u: &VectorField, f: &[VectorField; 3], dt: f64) -> f64 {
    let dw = sample_increments(0, 0, 0, dt, 0).unwrap();
    let next = heat_step(u, Some(f), &[], &dw, dt).unwrap();
    let e0 = inner_product(u, u);
    let e1 = inner_product(&next, &next);
    let mut grad_sq = 0.0;
    let mut coupling = 0.0;
    for j in 0..3 {
        let g = gradient(u.component(j));
        grad_sq += inner_product(&g, &g);
        coupling += inner_product(&f[j], &g);
    }
    (e1 - e0 + 2.0 * dt * grad_sq + 2.0 * dt * coupling) / e0
}
