//! Fourier-multiplier operators: Leray projection, derivatives, dealiasing.

use num_complex::Complex64;

use super::field::{ScalarField, VectorField};
use super::grid::GridSpec;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Applies `δ_jl − k_j k_l/|k|²` mode by mode and zeroes the mean mode.
pub fn leray_in_place(grid: &GridSpec, parts: [&mut [Complex64]; 3]) {
    let [a, b, c] = parts;
    let w = grid.wavenumbers();
    let n = grid.n();
    assert!(a.len() == grid.len() && b.len() == grid.len() && c.len() == grid.len());
    let mut idx = 0;
    for &kz in w.iter().take(n) {
        for &ky in w.iter().take(n) {
            for &kx in w.iter().take(n) {
                let k2 = kx * kx + ky * ky + kz * kz;
                if k2 == 0.0 {
                    a[idx] = Complex64::default();
                    b[idx] = Complex64::default();
                    c[idx] = Complex64::default();
                } else {
                    let dot = (a[idx] * kx + b[idx] * ky + c[idx] * kz) / k2;
                    a[idx] -= dot * kx;
                    b[idx] -= dot * ky;
                    c[idx] -= dot * kz;
                }
                idx += 1;
            }
        }
    }
}

/// Leray projection composed with the mean-zero projection. Output is spectral.
pub fn leray_project(u: &VectorField) -> VectorField {
    let grid = u.grid().clone();
    let [mut a, mut b, mut c] = u.coefficients();
    leray_in_place(&grid, [&mut a, &mut b, &mut c]);
    VectorField::from_spectral(&grid, [a, b, c]).expect("lengths match grid")
}

/// Zeroes the `k = 0` coefficient of every component.
pub fn mean_zero(u: &VectorField) -> VectorField {
    let grid = u.grid().clone();
    let mut parts = u.coefficients();
    for p in parts.iter_mut() {
        p[0] = Complex64::default();
    }
    VectorField::from_spectral(&grid, parts).expect("lengths match grid")
}

/// Spectral divergence `i k · û` (Nyquist wavenumbers treated as zero).
pub fn divergence_coeffs(grid: &GridSpec, parts: [&[Complex64]; 3]) -> Vec<Complex64> {
    let n = grid.n();
    let mut out = vec![Complex64::default(); grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let (i, j, l) = (idx % n, (idx / n) % n, idx / (n * n));
        let k = [
            grid.derivative_wavenumber(i),
            grid.derivative_wavenumber(j),
            grid.derivative_wavenumber(l),
        ];
        *o = I * (parts[0][idx] * k[0] + parts[1][idx] * k[1] + parts[2][idx] * k[2]);
    }
    out
}

pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = u.grid();
    let [a, b, c] = u.coefficients();
    ScalarField::from_spectral(grid, divergence_coeffs(grid, [&a, &b, &c])).expect("lengths match grid")
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let n = grid.n();
    let c = f.coefficients();
    let mut parts = [
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
        vec![Complex64::default(); grid.len()],
    ];
    for idx in 0..grid.len() {
        let (i, j, l) = (idx % n, (idx / n) % n, idx / (n * n));
        let ik = I * c[idx];
        parts[0][idx] = ik * grid.derivative_wavenumber(i);
        parts[1][idx] = ik * grid.derivative_wavenumber(j);
        parts[2][idx] = ik * grid.derivative_wavenumber(l);
    }
    VectorField::from_spectral(grid, parts).expect("lengths match grid")
}

/// Laplacian as the multiplier `−|k|²`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let c: Vec<Complex64> = f
        .coefficients()
        .iter()
        .enumerate()
        .map(|(idx, z)| z * -grid.k_squared(idx))
        .collect();
    ScalarField::from_spectral(grid, c).expect("lengths match grid")
}

pub fn dealias_in_place(grid: &GridSpec, coeffs: &mut [Complex64]) {
    for (c, keep) in coeffs.iter_mut().zip(grid.dealias_mask()) {
        if !keep {
            *c = Complex64::default();
        }
    }
}

/// 2/3-rule truncation. Output is spectral.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let mut c = f.coefficients().into_owned();
    dealias_in_place(f.grid(), &mut c);
    ScalarField::from_spectral(f.grid(), c).expect("lengths match grid")
}

pub fn dealias_vector(u: &VectorField) -> VectorField {
    let [a, b, c] = u.components().clone().map(|s| dealias(&s));
    VectorField::new([a, b, c]).expect("components share a grid")
}

/// `L²` inner product `Σ_j ∫ u_j w_j` computed by Parseval.
pub fn inner_product(u: &VectorField, w: &VectorField) -> f64 {
    let vol = u.grid().volume();
    let a = u.coefficients();
    let b = w.coefficients();
    let mut acc = 0.0;
    for j in 0..3 {
        acc += a[j].iter().zip(&b[j]).map(|(x, y)| (x * y.conj()).re).sum::<f64>();
    }
    acc * vol
}
