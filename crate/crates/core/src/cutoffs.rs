//! The smooth cutoff `θ` and the level cutoffs `ψ_k`, `φ_k`, `ζ_{k−1}`.

use crate::error::{invalid, Result};

#[inline]
fn h(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        (-1.0 / r).exp()
    }
}

/// Smooth, nonincreasing; `1` on `[0, 1]`, `0` on `[2, ∞)`.
pub fn theta(x: f64) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    if x >= 2.0 {
        return 0.0;
    }
    let r = (2.0 - x) / (x - 1.0);
    let a = h(r);
    let b = h(1.0 / r);
    a / (a + b)
}

/// `ψ_k = θ(‖v^(k)‖₆ / M_k)`.
pub fn psi(norm6: f64, cap: f64) -> f64 {
    theta(norm6 / cap)
}

/// `φ_k = θ(2^k ‖v^(k)‖₃ / ε̄)`.
pub fn phi(norm3: f64, k: usize, eps_bar: f64) -> f64 {
    theta(2f64.powi(k as i32) * norm3 / eps_bar)
}

/// `ζ_{k−1} = Π_{i<k} ψ_i`, which is `1` for `k = 0`.
pub fn zeta(lower_psi: &[f64]) -> f64 {
    lower_psi.iter().product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffParams {
    pub eps_bar: f64,
    /// `M_k` per level, strictly increasing.
    pub level_caps: Vec<f64>,
}

/// Default `ε̄ = min(0.5, 8ε₀)`; for zero data, where every positive `ε̄`
/// qualifies, `0.5`.
pub fn default_eps_bar(eps0: f64) -> f64 {
    if eps0 == 0.0 {
        0.5
    } else {
        (8.0 * eps0).min(0.5)
    }
}

/// `M_k = base · max(𝕄_k, 1) · growth^k`, bumped where needed so the
/// sequence is strictly increasing.
pub fn level_caps(level_norm6: &[f64], base: f64, growth: f64) -> Vec<f64> {
    let mut caps: Vec<f64> = Vec::with_capacity(level_norm6.len());
    for (k, &m) in level_norm6.iter().enumerate() {
        let mut cap = base * m.max(1.0) * growth.powi(k as i32);
        if let Some(&prev) = caps.last() {
            if cap <= prev {
                cap = prev * growth.max(1.0 + 1e-9);
            }
        }
        caps.push(cap);
    }
    caps
}

impl CutoffParams {
    pub fn new(eps_bar: f64, level_caps: Vec<f64>) -> Self {
        Self { eps_bar, level_caps }
    }

    /// Checks `ε̄ ∈ (2ε₀, 1)` and that `M_k` is positive, strictly increasing
    /// and above the data bounds `𝕄_k`.
    pub fn validate(&self, eps0: f64, level_norm6: &[f64]) -> Result<()> {
        if !(self.eps_bar > 2.0 * eps0 && self.eps_bar < 1.0) {
            return Err(invalid(
                "eps_bar",
                format!("eps_bar must exceed 2*eps0 and stay below 1 (eps_bar = {}, eps0 = {eps0})", self.eps_bar),
            ));
        }
        if self.level_caps.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(invalid("level_caps", "caps must be positive and finite"));
        }
        if self.level_caps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("level_caps", "caps must be strictly increasing"));
        }
        for (k, (&cap, &m)) in self.level_caps.iter().zip(level_norm6).enumerate() {
            if cap <= m {
                return Err(invalid("level_caps", format!("M_{k} = {cap} does not exceed the level bound {m}")));
            }
        }
        Ok(())
    }

    pub fn cap(&self, k: usize) -> f64 {
        self.level_caps[k]
    }

    /// `ε̄ / 2^k`, the `L³` stopping threshold of level `k`.
    pub fn l3_threshold(&self, k: usize) -> f64 {
        self.eps_bar / 2f64.powi(k as i32)
    }
}

/// Cutoff values for one level at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelCutoffs {
    pub psi: f64,
    pub phi: f64,
    pub zeta: f64,
}

impl LevelCutoffs {
    pub const ONE: Self = Self {
        psi: 1.0,
        phi: 1.0,
        zeta: 1.0,
    };

    /// Coefficient `ψ²φ²` of the self-interaction.
    pub fn own(&self) -> f64 {
        let a = self.psi * self.phi;
        a * a
    }

    /// Coefficient `ψ²φ²ζ` of the coupling and noise terms.
    pub fn coupled(&self) -> f64 {
        self.own() * self.zeta
    }
}

/// Evaluates `ψ_k, φ_k, ζ_{k−1}` for every level from its `(‖·‖₃, ‖·‖₆)`.
pub fn evaluate(params: &CutoffParams, norms: &[(f64, f64)]) -> Vec<LevelCutoffs> {
    let mut out = Vec::with_capacity(norms.len());
    let mut zeta_acc = 1.0;
    for (k, &(n3, n6)) in norms.iter().enumerate() {
        let c = LevelCutoffs {
            psi: psi(n6, params.cap(k)),
            phi: phi(n3, k, params.eps_bar),
            zeta: zeta_acc,
        };
        zeta_acc *= c.psi;
        out.push(c);
    }
    out
}
