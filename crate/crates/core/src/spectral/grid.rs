use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, SnseError};

/// Uniform periodic grid on `[0, 2π)³` with `n` points per axis.
///
/// Flat indices are row-major with x fastest: `idx = i + n * (j + n * l)`.
/// Spectral index `i` corresponds to the integer wavenumber `i` for
/// `i < n/2` and `i - n` otherwise, so wavenumbers lie in `[-n/2, n/2)`.
#[derive(Clone, Debug)]
pub struct GridSpec {
    n: usize,
    wavenumbers: Arc<[f64]>,
    dealias_mask: Arc<[bool]>,
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for GridSpec {}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(SnseError::InvalidGrid(format!(
                "n={n}: need a power of two with n >= 8"
            )));
        }
        let wavenumbers: Arc<[f64]> = (0..n).map(|i| wavenumber(n, i) as f64).collect();
        let keep: Vec<bool> = (0..n).map(|i| 3 * wavenumber(n, i).unsigned_abs() < n as u64).collect();
        let mut mask = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for j in 0..n {
                for i in 0..n {
                    mask.push(keep[i] && keep[j] && keep[l]);
                }
            }
        }
        Ok(Self {
            n,
            wavenumbers,
            dealias_mask: mask.into(),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points (and spectral modes).
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Domain edge length.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Quadrature weight of one grid cell, `(2π/n)³`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(3)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        i + self.n * (j + self.n * l)
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    /// Integer wavenumber vector of the spectral mode at flat index `idx`.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let [i, j, l] = self.unflatten(idx);
        [wavenumber(self.n, i), wavenumber(self.n, j), wavenumber(self.n, l)]
    }

    /// Flat spectral index of the integer wavenumber `k` (components taken mod n).
    pub fn mode_index(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |c: i64| c.rem_euclid(n) as usize;
        self.index(w(k[0]), w(k[1]), w(k[2]))
    }

    /// Per-axis wavenumbers as floats, indexed by the axis position.
    #[inline]
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Wavenumber for differentiation: zero on the unpaired Nyquist index.
    #[inline]
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumbers[i]
        }
    }

    /// `true` iff every `|k_j| < n/3`.
    #[inline]
    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias_mask
    }

    /// Physical coordinate of the grid point at flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let [i, j, l] = self.unflatten(idx);
        [i as f64 * h, j as f64 * h, l as f64 * h]
    }

    /// `|k|²` of the mode at flat index `idx`.
    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let [i, j, l] = self.unflatten(idx);
        let w = &self.wavenumbers;
        w[i] * w[i] + w[j] * w[j] + w[l] * w[l]
    }
}

#[inline]
fn wavenumber(n: usize, i: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
