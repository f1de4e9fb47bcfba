//! Picard iteration for one cascade level with the lower levels frozen.
//!
//! Iterate `V^(j)` solves a forced heat equation whose nonlinearity and
//! noise are built from `V^(j−1)` and the frozen `w = u^(k−1)`, truncated by
//! `ψ_j ψ_{j−1} φ_j φ_{j−1}` (and `ζ_{k−1}` on the coupling and noise
//! terms), with `V^(−1) ≡ 0`.

use super::kernel::{self, combine, flux_rhs, physical, Decay, Physical, Spectral};
use super::cascade::{run_cascade, CascadeOptions, CascadeState};
use crate::cutoffs::{phi, psi, CutoffParams};
use crate::error::{invalid, Result};
use crate::noise::{sample_increments, NoiseBasis};
use crate::spectral::norms::magnitude_lp_values;
use crate::spectral::ops::dealias_in_place;
use crate::spectral::VectorField;

#[derive(Clone, Debug)]
pub struct PicardSetup<'a> {
    /// Initial levels `v₀^(0..=k)`; the last one is iterated.
    pub levels: &'a [VectorField],
    pub params: &'a CutoffParams,
    pub basis: &'a NoiseBasis,
    pub seed: u64,
    pub realization: u64,
    pub dt: f64,
    pub t_star: f64,
    /// Number of iterates `V^(0), …, V^(J−1)`.
    pub iters: usize,
    /// Forces every truncation product to this value when set.
    pub forced_cutoff: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    pub level: usize,
    pub steps: usize,
    /// `d_j = max_n ‖V^(j+1)_n − V^(j)_n‖₆`.
    pub d: Vec<f64>,
    /// `d_{j+1} / d_j` (NaN where `d_j = 0`).
    pub ratios: Vec<f64>,
    /// `d_j` increased while still above the roundoff floor.
    pub nonmonotone: bool,
    /// Final-time value of every iterate.
    pub finals: Vec<VectorField>,
}

struct Iterate {
    phys: Vec<Physical>,
    norms: Vec<(f64, f64)>,
}

fn spectral(grid: &crate::spectral::GridSpec, phys: &Physical) -> Spectral {
    [0, 1, 2].map(|j| crate::spectral::fft::forward_real(grid.n(), &phys[j]))
}

pub fn picard_solve(setup: &PicardSetup) -> Result<PicardReport> {
    let k = setup
        .levels
        .len()
        .checked_sub(1)
        .ok_or(crate::error::SnseError::Empty("Picard levels"))?;
    if !(setup.t_star > 0.0) {
        return Err(invalid("t_star", "must be positive"));
    }
    if setup.iters < 2 {
        return Err(invalid("iters", "need at least two iterates"));
    }
    super::check_dt(setup.dt)?;
    let steps = (setup.t_star / setup.dt).round().max(1.0) as usize;
    let grid = setup.levels[k].grid().clone();
    let len = grid.len();
    let cap = setup.params.cap(k);
    let eps_bar = setup.params.eps_bar;

    // frozen lower-level trajectory w = u^(k−1) and ζ_{k−1}
    let mut w_traj: Vec<Option<Physical>> = Vec::with_capacity(steps + 1);
    let mut zeta_traj: Vec<f64> = Vec::with_capacity(steps + 1);
    if k == 0 {
        w_traj.resize(steps + 1, None);
        zeta_traj.resize(steps + 1, 1.0);
    } else {
        let mut lower = CascadeState::new(&setup.levels[..k])?;
        let opts = CascadeOptions::default();
        run_cascade(
            &mut lower,
            setup.params,
            setup.basis,
            setup.seed,
            setup.realization,
            setup.dt,
            steps,
            &opts,
            |s, cut| {
                w_traj.push(Some(s.sum_physical()));
                zeta_traj.push(cut.iter().map(|c| c.psi).product());
                Ok(())
            },
        )?;
    }

    let decay = Decay::new(&grid, setup.dt);
    let mut start = setup.levels[k].coefficients();
    for p in start.iter_mut() {
        dealias_in_place(&grid, p);
    }
    let zero_phys: Physical = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let zero_spec: Spectral = [
        vec![Default::default(); len],
        vec![Default::default(); len],
        vec![Default::default(); len],
    ];
    let draws: Vec<Vec<f64>> = (0..steps)
        .map(|n| sample_increments(setup.seed, setup.realization, n as u64, setup.dt, setup.basis.mode_count()).map(|d| d.draws))
        .collect::<Result<_>>()?;

    let mut prev: Option<Iterate> = None;
    let mut d: Vec<f64> = Vec::with_capacity(setup.iters - 1);
    let mut scale: f64 = 0.0;
    let mut finals = Vec::with_capacity(setup.iters);
    for j in 0..setup.iters {
        let mut cur = start.clone();
        let mut it = Iterate {
            phys: Vec::with_capacity(steps + 1),
            norms: Vec::with_capacity(steps + 1),
        };
        let mut gap: f64 = 0.0;
        for n in 0..=steps {
            let phys = physical(&grid, &cur);
            let (n3, n6, _) = kernel::norms(&grid, &phys);
            if j == 0 {
                scale = scale.max(n6);
            }
            if let Some(p) = &prev {
                let diff: [Vec<f64>; 3] =
                    [0, 1, 2].map(|c| phys[c].iter().zip(&p.phys[n][c]).map(|(a, b)| a - b).collect());
                gap = gap.max(magnitude_lp_values(&grid, [&diff[0], &diff[1], &diff[2]], 6.0));
            }
            if n < steps {
                let (prev_phys, prev_spec, prev_norms) = match &prev {
                    Some(p) => (&p.phys[n], spectral(&grid, &p.phys[n]), p.norms[n]),
                    None => (&zero_phys, zero_spec.clone(), (0.0, 0.0)),
                };
                let a = match setup.forced_cutoff {
                    Some(v) => v,
                    None => {
                        psi(n6, cap) * psi(prev_norms.1, cap) * phi(n3, k, eps_bar) * phi(prev_norms.0, k, eps_bar)
                    }
                };
                let b = a * zeta_traj[n];
                let rhs = flux_rhs(&grid, prev_phys, w_traj[n].as_ref(), a, b);
                let noise = setup
                    .basis
                    .increment([&prev_spec[0], &prev_spec[1], &prev_spec[2]], &draws[n], b);
                combine(&mut cur, rhs.as_ref(), &noise, setup.dt);
                decay.apply(&mut cur);
            }
            it.norms.push((n3, n6));
            it.phys.push(phys);
        }
        if prev.is_some() {
            d.push(gap);
        }
        finals.push(VectorField::from_spectral(&grid, cur)?);
        prev = Some(it);
        log::debug!("Picard iterate {j} done");
    }

    let ratios: Vec<f64> = d
        .windows(2)
        .map(|w| if w[0] == 0.0 { f64::NAN } else { w[1] / w[0] })
        .collect();
    let floor = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let nonmonotone = d.windows(2).any(|w| w[0] > floor && w[1] > w[0]);
    if nonmonotone {
        log::warn!("Picard differences are not monotone; t_star may be too large");
    }
    Ok(PicardReport {
        level: k,
        steps,
        d,
        ratios,
        nonmonotone,
        finals,
    })
}
