//! Three-dimensional complex FFTs built from batched 1D transforms.
//!
//! Forward transforms are normalized by `1/n³` so that a coefficient is the
//! Fourier average `(2π)^{-3} ∫ f e^{-ik·x} dx`; the inverse is the plain sum.
//! Plans are cached per grid size and shared across threads.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Plan {
    static CACHE: OnceLock<RwLock<HashMap<usize, Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = cache.read().expect("fft plan cache poisoned").get(&n) {
        return p.clone();
    }
    let mut guard = cache.write().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Plan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

thread_local! {
    static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Cycles axes so the second axis becomes the fastest one:
/// `dst[a1 + n a2 + n² a0] = src[a0 + n a1 + n² a2]`, i.e. the transpose of
/// the `n² × n` row-major matrix `src`.
fn rotate(n: usize, src: &[Complex64], dst: &mut [Complex64]) {
    let rows = n * n;
    assert!(src.len() == rows * n && dst.len() == rows * n);
    const TILE: usize = 8;
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c in 0..n {
            for r in r0..r1 {
                // SAFETY: r < rows and c < n, so both indices are below rows·n,
                // the asserted length of both buffers.
                unsafe {
                    *dst.get_unchecked_mut(r + rows * c) = *src.get_unchecked(c + n * r);
                }
            }
        }
    }
}

fn transform(n: usize, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
    let len = n * n * n;
    assert_eq!(data.len(), len, "buffer length does not match grid");
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (tmp, scratch) = &mut *guard;
        tmp.resize(len, Complex64::default());
        let need = fft.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::default());
        }
        // three passes ping-ponging between `data` and `tmp`
        fft.process_with_scratch(data, &mut scratch[..need]);
        rotate(n, data, tmp);
        fft.process_with_scratch(tmp, &mut scratch[..need]);
        rotate(n, tmp, data);
        fft.process_with_scratch(data, &mut scratch[..need]);
        rotate(n, data, tmp);
        data.copy_from_slice(tmp);
    });
}

/// In-place forward transform with `1/n³` normalization.
pub fn forward(n: usize, data: &mut [Complex64]) {
    let p = plan(n);
    transform(n, data, &p.forward);
    let scale = 1.0 / (n * n * n) as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

/// In-place inverse transform (unnormalized sum over modes).
pub fn inverse(n: usize, data: &mut [Complex64]) {
    let p = plan(n);
    transform(n, data, &p.inverse);
}

/// Forward transform of real samples into a fresh coefficient buffer.
pub fn forward_real(n: usize, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(n, &mut buf);
    buf
}

/// Forward transform of real samples into `out`.
pub fn forward_real_into(n: usize, values: &[f64], out: &mut [Complex64]) {
    for (o, &v) in out.iter_mut().zip(values) {
        *o = Complex64::new(v, 0.0);
    }
    forward(n, out);
}

/// Inverse transform keeping the real part (input assumed Hermitian).
pub fn inverse_real(n: usize, coeffs: &[Complex64]) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    inverse_real_into(n, coeffs, &mut out);
    out
}

pub fn inverse_real_into(n: usize, coeffs: &[Complex64], out: &mut [f64]) {
    let mut buf = coeffs.to_vec();
    inverse(n, &mut buf);
    for (o, c) in out.iter_mut().zip(&buf) {
        *o = c.re;
    }
}

/// Inverse transforms of two Hermitian spectra with one complex FFT.
pub fn inverse_real_pair(n: usize, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + I * y).collect();
    inverse(n, &mut buf);
    (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
}

/// Flat index of the mode `−k` for the mode stored at `idx`.
#[inline]
pub fn conjugate_index(n: usize, idx: usize) -> usize {
    let (i, j, l) = (idx % n, (idx / n) % n, idx / (n * n));
    let neg = |c: usize| (n - c) % n;
    neg(i) + n * (neg(j) + n * neg(l))
}

/// Forward transforms of two real arrays with one complex FFT.
pub fn forward_real_pair(n: usize, x: &[f64], y: &[f64], out_x: &mut [Complex64], out_y: &mut [Complex64]) {
    let mut z: Vec<Complex64> = x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect();
    forward(n, &mut z);
    let neg = |c: usize| if c == 0 { 0 } else { n - c };
    let mut idx = 0;
    for l in 0..n {
        for j in 0..n {
            let row = n * (neg(j) + n * neg(l));
            for i in 0..n {
                let zc = z[row + neg(i)].conj();
                let zk = z[idx];
                out_x[idx] = (zk + zc) * 0.5;
                // (zk − zc) / 2i
                let d = zk - zc;
                out_y[idx] = Complex64::new(0.5 * d.im, -0.5 * d.re);
                idx += 1;
            }
        }
    }
}
