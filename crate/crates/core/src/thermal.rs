//! Fully-connected XXZ model `H = (g/N)(J_x^2 + J_y^2) + (g_z/N) J_z^2 + h J_z`
//! and its Gibbs states.
//!
//! `H` is diagonal in the Schur basis: with `J_x^2 + J_y^2 = J^2 - J_z^2`,
//! `E(J, Jz) = g J(J+1)/N - (g - g_z) Jz^2/N + h Jz`, degenerate over the
//! `mu_J` copies of each irrep.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blocks::{ln_multiplicities, m_index, sectors, BlockDiagonalState, MomentSummary, SectorIndex};
use crate::dense;
use crate::error::{domain, Error, Result};
use crate::ssi::Symmetry;

/// Couplings and particle number of the XXZ Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    pub g: f64,
    pub g_z: f64,
    pub h: f64,
    pub n: u32,
}

impl XxzParams {
    pub fn new(g: f64, g_z: f64, h: f64, n: u32) -> Result<Self> {
        if n < 2 {
            return domain(format!("the model needs N >= 2, got {n}"));
        }
        if !(g.is_finite() && g_z.is_finite() && h.is_finite()) {
            return domain("couplings must be finite");
        }
        Ok(XxzParams { g, g_z, h, n })
    }

    /// Isotropic Heisenberg model `g = g_z`, `h = 0`.
    pub fn xxx(g: f64, n: u32) -> Result<Self> {
        Self::new(g, g, 0.0, n)
    }

    /// `g_z = 0`.
    pub fn xx(g: f64, h: f64, n: u32) -> Result<Self> {
        Self::new(g, 0.0, h, n)
    }

    /// Symmetry of every Gibbs state of this Hamiltonian.
    pub fn symmetry(&self) -> Symmetry {
        if self.g == self.g_z && self.h == 0.0 {
            Symmetry::Isotropic
        } else {
            Symmetry::Axial
        }
    }
}

/// A Gibbs state together with its log partition function.
#[derive(Debug, Clone)]
pub struct ThermalPoint {
    pub params: XxzParams,
    /// `0.0` marks the ground-state limit.
    pub temperature: f64,
    pub log_z: f64,
    pub state: BlockDiagonalState,
}

#[inline]
fn energy_unchecked(p: &XxzParams, j: f64, m: f64) -> f64 {
    let n = p.n as f64;
    p.g * j * (j + 1.0) / n - (p.g - p.g_z) * m * m / n + p.h * m
}

pub fn sector_energy(params: &XxzParams, two_j: u32, two_jz: i32) -> Result<f64> {
    SectorIndex::new(params.n, two_j)?;
    m_index(two_j, two_jz)?;
    Ok(energy_unchecked(params, two_j as f64 / 2.0, two_jz as f64 / 2.0))
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("temperature must be positive and finite, got {t}"));
    }
    Ok(())
}

/// Calls `f(slot, m_index, j, m, ln_mu)` for every cell.
fn for_each_cell(n: u32, mut f: impl FnMut(usize, usize, f64, f64, f64)) {
    let ln_mu = ln_multiplicities(n);
    for s in sectors(n) {
        let j = s.j();
        for i in 0..s.dim() {
            let m = i as f64 - j;
            f(s.slot(), i, j, m, ln_mu[s.slot()]);
        }
    }
}

/// Lowest sector energy.
pub fn ground_energy(params: &XxzParams) -> f64 {
    let mut e_min = f64::INFINITY;
    for_each_cell(params.n, |_, _, j, m, _| {
        e_min = e_min.min(energy_unchecked(params, j, m));
    });
    e_min
}

/// Largest `ln mu - (E - E_min)/T` over all cells, used to shift log-sum-exp.
fn max_log_weight(params: &XxzParams, e_min: f64, temperature: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for_each_cell(params.n, |_, _, j, m, ln_mu| {
        best = best.max(ln_mu - (energy_unchecked(params, j, m) - e_min) / temperature);
    });
    best
}

fn ground_tol(e_min: f64) -> f64 {
    1e-12 * e_min.abs().max(1.0)
}

/// `ln Z` by log-sum-exp over all cells, weighted by multiplicity.
pub fn partition_function(params: &XxzParams, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let e_min = ground_energy(params);
    let shift = max_log_weight(params, e_min, temperature);
    let mut sum = 0.0;
    for_each_cell(params.n, |_, _, j, m, ln_mu| {
        let e = energy_unchecked(params, j, m);
        sum += (ln_mu - (e - e_min) / temperature - shift).exp();
    });
    Ok(sum.ln() + shift - e_min / temperature)
}

/// Gibbs state in block form. `temperature == 0.0` gives the uniform mixture
/// of all ground cells.
///
/// Fails with a capability error when the per-multiplet coefficients underflow
/// double precision (roughly `N > 1000` near infinite temperature); use
/// [`thermal_moments`] for such sizes.
pub fn gibbs_blocks(params: &XxzParams, temperature: f64) -> Result<ThermalPoint> {
    let n = params.n;
    let e_min = ground_energy(params);
    let mut alpha: Vec<Vec<f64>> = sectors(n).map(|s| vec![0.0; s.dim()]).collect();
    let log_z;
    if temperature == 0.0 {
        let tol = ground_tol(e_min);
        let mu = crate::blocks::multiplicities_f64(n);
        let mut degeneracy = 0.0;
        for_each_cell(n, |slot, _, j, m, _| {
            if energy_unchecked(params, j, m) - e_min <= tol {
                degeneracy += mu[slot];
            }
        });
        for_each_cell(n, |slot, i, j, m, _| {
            if energy_unchecked(params, j, m) - e_min <= tol {
                alpha[slot][i] = 1.0 / degeneracy;
            }
        });
        log_z = f64::NEG_INFINITY;
    } else {
        check_temperature(temperature)?;
        let shift = max_log_weight(params, e_min, temperature);
        let mut shifted = 0.0;
        for_each_cell(n, |_, _, j, m, ln_mu| {
            shifted += (ln_mu - (energy_unchecked(params, j, m) - e_min) / temperature - shift).exp();
        });
        let ln_shifted = shifted.ln() + shift;
        for_each_cell(n, |slot, i, j, m, _| {
            let e = energy_unchecked(params, j, m);
            alpha[slot][i] = (-(e - e_min) / temperature - ln_shifted).exp();
        });
        log_z = ln_shifted - e_min / temperature;
    }
    let state = BlockDiagonalState::new(n, alpha).map_err(|e| match e {
        Error::Domain(msg) => Error::Capability(format!(
            "Gibbs coefficients for N = {n} are not representable in double precision ({msg})"
        )),
        other => other,
    })?;
    Ok(ThermalPoint {
        params: *params,
        temperature,
        log_z,
        state,
    })
}

/// Thermal moments computed directly in the log domain, without materializing
/// per-multiplet coefficients. Works for any `N` (the weights are cell
/// probabilities `mu_J exp(-E/T) / Z`, which never all underflow).
///
/// Returns `(ln Z, moments)`; `ln Z` is `-inf` in the ground-state limit.
pub fn thermal_moments(params: &XxzParams, temperature: f64) -> Result<(f64, MomentSummary)> {
    let n = params.n;
    let e_min = ground_energy(params);
    let ground = temperature == 0.0;
    if !ground {
        check_temperature(temperature)?;
    }
    let tol = ground_tol(e_min);
    let shift = if ground {
        let mut best = f64::NEG_INFINITY;
        for_each_cell(n, |_, _, j, m, ln_mu| {
            if energy_unchecked(params, j, m) - e_min <= tol {
                best = best.max(ln_mu);
            }
        });
        best
    } else {
        max_log_weight(params, e_min, temperature)
    };
    let (mut z, mut jz, mut jz2, mut j2) = (0.0, 0.0, 0.0, 0.0);
    for_each_cell(n, |_, _, j, m, ln_mu| {
        let de = energy_unchecked(params, j, m) - e_min;
        let w = if ground {
            if de <= tol {
                (ln_mu - shift).exp()
            } else {
                0.0
            }
        } else {
            (ln_mu - de / temperature - shift).exp()
        };
        if w == 0.0 {
            return;
        }
        z += w;
        jz += w * m;
        jz2 += w * m * m;
        j2 += w * j * (j + 1.0);
    });
    // E(J, Jz) = E(J, -Jz) at zero field; cancel the rounding left in the sum
    let jz = if params.h == 0.0 { 0.0 } else { jz };
    let (jz, jz2, j2) = (jz / z, jz2 / z, j2 / z);
    let perp = 0.5 * (j2 - jz2);
    let log_z = if ground {
        f64::NEG_INFINITY
    } else {
        z.ln() + shift - e_min / temperature
    };
    Ok((
        log_z,
        MomentSummary {
            n,
            mean: [0.0, 0.0, jz],
            second: [[perp, 0.0, 0.0], [0.0, perp, 0.0], [0.0, 0.0, jz2]],
        },
    ))
}

/// `<H>` from moments.
pub fn mean_energy(params: &XxzParams, m: &MomentSummary) -> f64 {
    let n = params.n as f64;
    params.g / n * (m.second[0][0] + m.second[1][1]) + params.g_z / n * m.second[2][2]
        + params.h * m.mean[2]
}

/// Dense `2^N x 2^N` Hamiltonian assembled from collective operators, using
/// `J_x^2 + J_y^2 = (J_+ J_- + J_- J_+) / 2`.
pub fn dense_hamiltonian(params: &XxzParams, n_max: u32) -> Result<DMatrix<f64>> {
    if params.n > n_max {
        return Err(Error::Capability(format!(
            "dense Hamiltonian for N = {} exceeds the dense limit {n_max}",
            params.n
        )));
    }
    let (jp, jz) = dense::raising_and_jz(params.n);
    let jm = jp.transpose();
    let n = params.n as f64;
    let perp = (&jp * &jm + &jm * &jp) * 0.5;
    Ok(perp * (params.g / n) + &jz * &jz * (params.g_z / n) + jz * params.h)
}

/// Large-`N` XXX lower bound `max{0, 1 - 6T/(4T + 2g)}`.
pub fn asymptotic_xxx_bound(g: f64, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if !(g > 0.0) {
        return domain("the XXX asymptote needs g > 0");
    }
    Ok((1.0 - 6.0 * temperature / (4.0 * temperature + 2.0 * g)).max(0.0))
}

/// Large-`N` XX (`g = 1`, `g_z = h = 0`) lower bound `max{0, 1 - 4T/(2T + 1)}`.
pub fn asymptotic_xx_bound(temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok((1.0 - 4.0 * temperature / (2.0 * temperature + 1.0)).max(0.0))
}
