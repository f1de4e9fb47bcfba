//! Shared pieces of every stepper: the integrating factor, dealiased
//! physical samples, and the conservative nonlinear drift.

use num_complex::Complex64;

use crate::spectral::fft;
use crate::spectral::norms::magnitude_lp_values;
use crate::spectral::ops::leray_in_place;
use crate::spectral::GridSpec;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub(crate) type Spectral = [Vec<Complex64>; 3];
pub(crate) type Physical = [Vec<f64>; 3];

/// `e^{−|k|² dt}` per mode.
#[derive(Clone, Debug)]
pub(crate) struct Decay(Vec<f64>);

impl Decay {
    pub(crate) fn new(grid: &GridSpec, dt: f64) -> Self {
        Self((0..grid.len()).map(|idx| (-grid.k_squared(idx) * dt).exp()).collect())
    }

    pub(crate) fn apply(&self, parts: &mut Spectral) {
        for p in parts.iter_mut() {
            for (c, d) in p.iter_mut().zip(&self.0) {
                *c *= d;
            }
        }
    }
}

/// Physical samples of the 2/3-truncated field.
pub(crate) fn physical(grid: &GridSpec, parts: &Spectral) -> Physical {
    let mask = grid.dealias_mask();
    let masked = parts.clone().map(|mut p| {
        for (c, keep) in p.iter_mut().zip(mask) {
            if !keep {
                *c = Complex64::default();
            }
        }
        p
    });
    let (a, b) = fft::inverse_real_pair(grid.n(), &masked[0], &masked[1]);
    [a, b, fft::inverse_real(grid.n(), &masked[2])]
}

/// `(‖u‖₃, ‖u‖₆, ‖u‖_∞)` in magnitude mode.
pub(crate) fn norms(grid: &GridSpec, phys: &Physical) -> (f64, f64, f64) {
    let parts = [phys[0].as_slice(), phys[1].as_slice(), phys[2].as_slice()];
    (
        magnitude_lp_values(grid, parts, 3.0),
        magnitude_lp_values(grid, parts, 6.0),
        magnitude_lp_values(grid, parts, f64::INFINITY),
    )
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// `−𝒫 ∇·T` with `T_lm = a d_l d_m + b (w_l d_m + d_l w_m)`, dealiased.
/// Returns `None` when both coefficients vanish.
pub(crate) fn flux_rhs(grid: &GridSpec, d: &Physical, w: Option<&Physical>, a: f64, b: f64) -> Option<Spectral> {
    let b = if w.is_some() { b } else { 0.0 };
    if a == 0.0 && b == 0.0 {
        return None;
    }
    let n = grid.n();
    let len = grid.len();
    let mask = grid.dealias_mask();
    let products: Vec<Vec<f64>> = PAIRS
        .iter()
        .map(|&(l, m)| match w {
            Some(w) if b != 0.0 => d[l]
                .iter()
                .zip(&d[m])
                .zip(w[l].iter().zip(&w[m]))
                .map(|((dl, dm), (wl, wm))| a * dl * dm + b * (wl * dm + dl * wm))
                .collect(),
            _ => d[l].iter().zip(&d[m]).map(|(dl, dm)| a * dl * dm).collect(),
        })
        .collect();
    let mut tensor: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); len]; 6];
    for pair in 0..3 {
        let (lo, hi) = tensor.split_at_mut(2 * pair + 1);
        fft::forward_real_pair(n, &products[2 * pair], &products[2 * pair + 1], &mut lo[2 * pair], &mut hi[0]);
    }
    for c in tensor.iter_mut() {
        for (x, keep) in c.iter_mut().zip(mask) {
            if !keep {
                *x = Complex64::default();
            }
        }
    }
    let kd: Vec<f64> = (0..n).map(|i| grid.derivative_wavenumber(i)).collect();
    let [txx, tyy, tzz, txy, txz, tyz] = [0, 1, 2, 3, 4, 5].map(|s| &tensor[s]);
    let mut out: Spectral = [vec![Complex64::default(); len], vec![Complex64::default(); len], vec![Complex64::default(); len]];
    let [ox, oy, oz] = &mut out;
    let mut idx = 0;
    for &kz in &kd {
        for &ky in &kd {
            for &kx in &kd {
                if mask[idx] {
                    ox[idx] = -I * (txx[idx] * kx + txy[idx] * ky + txz[idx] * kz);
                    oy[idx] = -I * (txy[idx] * kx + tyy[idx] * ky + tyz[idx] * kz);
                    oz[idx] = -I * (txz[idx] * kx + tyz[idx] * ky + tzz[idx] * kz);
                }
                idx += 1;
            }
        }
    }
    {
        let [x, y, z] = &mut out;
        leray_in_place(grid, [x, y, z]);
    }
    Some(out)
}

/// `parts += dt·rhs + noise`.
pub(crate) fn combine(parts: &mut Spectral, rhs: Option<&Spectral>, noise: &[(usize, [Complex64; 3])], dt: f64) {
    if let Some(r) = rhs {
        for j in 0..3 {
            for (p, q) in parts[j].iter_mut().zip(&r[j]) {
                *p += q * dt;
            }
        }
    }
    for (idx, v) in noise {
        for j in 0..3 {
            parts[j][*idx] += v[j];
        }
    }
}
