//! Block-diagonal representation of permutation- and z-rotation-invariant states.
//!
//! An `N`-qubit state that commutes with all particle permutations and with
//! `exp(-i phi J_z)` decomposes over the Schur-Weyl sectors as
//! `sum_{J,Jz} alpha_{J,Jz} |J,Jz><J,Jz| (x) 1_{mu_J}`. Only the coefficients
//! `alpha` are stored; the multiplicity index is never materialized here.
//!
//! Sectors are addressed by `two_j = 2J`, so odd `N` (half-integer `J`) is exact.
//! Within a sector, coefficients are stored with `Jz` ascending from `-J` to `+J`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Trace tolerance for a valid state.
pub const TRACE_TOL: f64 = 1e-12;
/// States whose trace is off by less than this are silently renormalized.
pub const RENORM_TOL: f64 = 1e-9;
/// Coefficients below this are flushed to zero.
pub const FLUSH_BELOW: f64 = 1e-300;
/// Cells with `alpha_sigma` below this (relative to the largest cell) carry no support.
pub const ZERO_SUPPORT_REL: f64 = 1e-15;

/// A spin sector `J` of an `N`-qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorIndex {
    n: u32,
    two_j: u32,
}

impl SectorIndex {
    pub fn new(n: u32, two_j: u32) -> Result<Self> {
        if n == 0 {
            return domain("particle count must be positive");
        }
        if two_j > n || !(n - two_j).is_multiple_of(2) {
            return domain(format!("2J = {two_j} is not a spin sector of N = {n}"));
        }
        Ok(SectorIndex { n, two_j })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// `J (J + 1)`.
    pub fn casimir(&self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }

    /// Position of this sector in a [`BlockDiagonalState`].
    pub fn slot(&self) -> usize {
        ((self.two_j - self.n % 2) / 2) as usize
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }
}

/// All sectors of `N` qubits, smallest `J` first.
pub fn sectors(n: u32) -> impl Iterator<Item = SectorIndex> {
    (n % 2..=n)
        .step_by(2)
        .map(move |two_j| SectorIndex { n, two_j })
}

fn binomial_u128(n: u32, k: u32) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        // acc * (n - k + i) is divisible by i after the multiplication
        acc = acc.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    Some(acc)
}

/// Multiplicity `mu_J = C(N, N/2 - J) - C(N, N/2 - J - 1)` of the spin-`J` irrep.
///
/// Exact in integer arithmetic; fails with a capability error once the value
/// no longer fits in 128 bits (around `N = 130`). Use [`ln_multiplicity`] beyond.
pub fn multiplicity(n: u32, two_j: u32) -> Result<u128> {
    let s = SectorIndex::new(n, two_j)?;
    let a = (s.n - s.two_j) / 2;
    let hi = binomial_u128(n, a);
    let lo = if a == 0 { Some(0) } else { binomial_u128(n, a - 1) };
    match (hi, lo) {
        (Some(hi), Some(lo)) => Ok(hi - lo),
        _ => Err(Error::Capability(format!(
            "multiplicity for N = {n} overflows 128-bit integers"
        ))),
    }
}

/// Table of `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `ln mu_J` for every sector of `N`, indexed by slot.
///
/// Uses `mu_J = C(N, a) (2J + 1) / (N/2 + J + 1)` with `a = N/2 - J`, which
/// avoids the cancellation of the difference form.
pub fn ln_multiplicities(n: u32) -> Vec<f64> {
    let lf = ln_factorials(n);
    sectors(n)
        .map(|s| {
            let a = ((n - s.two_j) / 2) as usize;
            let ln_binom = lf[n as usize] - lf[a] - lf[n as usize - a];
            ln_binom + ((s.two_j + 1) as f64).ln() - (((n + s.two_j) / 2 + 1) as f64).ln()
        })
        .collect()
}

pub fn ln_multiplicity(n: u32, two_j: u32) -> Result<f64> {
    let s = SectorIndex::new(n, two_j)?;
    Ok(ln_multiplicities(n)[s.slot()])
}

/// Multiplicities as floats: exact integers while they fit, `exp(ln mu)` after.
pub fn multiplicities_f64(n: u32) -> Vec<f64> {
    let ln_mu = ln_multiplicities(n);
    sectors(n)
        .zip(ln_mu)
        .map(|(s, l)| match multiplicity(n, s.two_j) {
            Ok(m) => m as f64,
            Err(_) => l.exp(),
        })
        .collect()
}

/// A permutation- and z-rotation-invariant density matrix in block form.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonalState {
    n: u32,
    alpha: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl BlockDiagonalState {
    /// Builds a state from per-sector coefficient vectors (slot order, `Jz` ascending).
    ///
    /// Tiny negatives (above `-1e-14`) and values below [`FLUSH_BELOW`] are set to
    /// zero. A trace within [`RENORM_TOL`] of one is renormalized; anything
    /// further off is rejected.
    pub fn new(n: u32, alpha: Vec<Vec<f64>>) -> Result<Self> {
        let state = Self::from_raw(n, alpha)?;
        state.into_normalized()
    }

    /// Same shape checks as [`new`](Self::new) but no trace requirement.
    /// Used for intermediate, unnormalized operators such as residuals.
    pub fn from_raw(n: u32, mut alpha: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return domain("particle count must be positive");
        }
        let count = sectors(n).count();
        if alpha.len() != count {
            return domain(format!(
                "N = {n} has {count} sectors, got {} coefficient vectors",
                alpha.len()
            ));
        }
        for (s, a) in sectors(n).zip(alpha.iter_mut()) {
            if a.len() != s.dim() {
                return domain(format!(
                    "sector 2J = {} needs {} coefficients, got {}",
                    s.two_j,
                    s.dim(),
                    a.len()
                ));
            }
            for v in a.iter_mut() {
                if !v.is_finite() {
                    return domain("non-finite coefficient");
                }
                if *v < 0.0 {
                    if *v < -1e-14 {
                        return domain(format!("negative coefficient {v:e}"));
                    }
                    *v = 0.0;
                }
                if *v < FLUSH_BELOW {
                    *v = 0.0;
                }
            }
        }
        Ok(BlockDiagonalState {
            n,
            alpha,
            mu: multiplicities_f64(n),
        })
    }

    fn into_normalized(mut self) -> Result<Self> {
        let tr = self.trace();
        if !tr.is_finite() || (tr - 1.0).abs() > RENORM_TOL {
            return domain(format!("trace {tr} is not one"));
        }
        if (tr - 1.0).abs() > 0.0 {
            for a in self.alpha.iter_mut() {
                for v in a.iter_mut() {
                    *v /= tr;
                }
            }
        }
        Ok(self)
    }

    /// All-zero coefficient table (not a state).
    pub fn zeros(n: u32) -> Self {
        let alpha = sectors(n).map(|s| vec![0.0; s.dim()]).collect();
        BlockDiagonalState {
            n,
            alpha,
            mu: multiplicities_f64(n),
        }
    }

    /// `1 / 2^N`.
    pub fn maximally_mixed(n: u32) -> Self {
        let v = 0.5f64.powi(n as i32);
        let alpha = sectors(n).map(|s| vec![v; s.dim()]).collect();
        BlockDiagonalState {
            n,
            alpha,
            mu: multiplicities_f64(n),
        }
    }

    /// The state `|J,Jz><J,Jz| (x) 1_{mu_J} / mu_J`.
    pub fn basis_cell(n: u32, two_j: u32, two_m: i32) -> Result<Self> {
        let s = SectorIndex::new(n, two_j)?;
        let idx = m_index(two_j, two_m)?;
        let mut out = Self::zeros(n);
        out.alpha[s.slot()][idx] = 1.0 / out.mu[s.slot()];
        Ok(out)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub(crate) fn alpha_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.alpha
    }

    /// Multiplicities per slot (as floats).
    pub fn multiplicities(&self) -> &[f64] {
        &self.mu
    }

    pub fn sector(&self, two_j: u32) -> Result<&[f64]> {
        let s = SectorIndex::new(self.n, two_j)?;
        Ok(&self.alpha[s.slot()])
    }

    pub fn get(&self, two_j: u32, two_m: i32) -> Result<f64> {
        let s = SectorIndex::new(self.n, two_j)?;
        Ok(self.alpha[s.slot()][m_index(two_j, two_m)?])
    }

    /// `sum_J mu_J sum_Jz alpha_{J,Jz}`.
    pub fn trace(&self) -> f64 {
        self.alpha
            .iter()
            .zip(&self.mu)
            .map(|(a, mu)| mu * a.iter().sum::<f64>())
            .sum()
    }

    /// Iterates `(two_j, two_m, mu_J, alpha)` over all cells.
    pub fn cells(&self) -> impl Iterator<Item = (u32, i32, f64, f64)> + '_ {
        sectors(self.n)
            .zip(self.alpha.iter().zip(&self.mu))
            .flat_map(|(s, (a, &mu))| {
                a.iter().enumerate().map(move |(i, &v)| {
                    (s.two_j, 2 * i as i32 - s.two_j as i32, mu, v)
                })
            })
    }

    /// Flattened coefficients in cell order (slot-major, `Jz` ascending).
    pub fn flat(&self) -> Vec<f64> {
        self.alpha.iter().flatten().copied().collect()
    }

    /// Flattened multiplicities aligned with [`flat`](Self::flat).
    pub fn flat_weights(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.mu)
            .flat_map(|(a, &mu)| std::iter::repeat_n(mu, a.len()))
            .collect()
    }

    /// Inverse of [`flat`](Self::flat) without trace normalization.
    pub fn from_flat_raw(n: u32, flat: &[f64]) -> Result<Self> {
        let mut alpha = Vec::new();
        let mut off = 0;
        for s in sectors(n) {
            let end = off + s.dim();
            if end > flat.len() {
                return domain("flat coefficient vector too short");
            }
            alpha.push(flat[off..end].to_vec());
            off = end;
        }
        if off != flat.len() {
            return domain("flat coefficient vector too long");
        }
        Self::from_raw(n, alpha)
    }

    pub fn from_flat(n: u32, flat: &[f64]) -> Result<Self> {
        Self::from_flat_raw(n, flat)?.into_normalized()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StateWire::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: StateWire = serde_json::from_str(s)?;
        wire.try_into()
    }
}

/// Index of `two_m` inside a sector of size `two_j + 1`.
pub fn m_index(two_j: u32, two_m: i32) -> Result<usize> {
    let tj = two_j as i32;
    if two_m.abs() > tj || (tj - two_m) % 2 != 0 {
        return domain(format!("2Jz = {two_m} is not in sector 2J = {two_j}"));
    }
    Ok(((two_m + tj) / 2) as usize)
}

#[derive(Serialize, Deserialize)]
struct SectorWire {
    #[serde(rename = "twoJ")]
    two_j: u32,
    alpha: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct StateWire {
    #[serde(rename = "N")]
    n: u32,
    sectors: Vec<SectorWire>,
}

impl From<&BlockDiagonalState> for StateWire {
    fn from(s: &BlockDiagonalState) -> Self {
        StateWire {
            n: s.n,
            sectors: sectors(s.n)
                .zip(&s.alpha)
                .map(|(sec, a)| SectorWire {
                    two_j: sec.two_j,
                    alpha: a.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<StateWire> for BlockDiagonalState {
    type Error = Error;

    fn try_from(w: StateWire) -> Result<Self> {
        let mut alpha: Vec<Option<Vec<f64>>> = sectors(w.n).map(|_| None).collect();
        for sw in w.sectors {
            let s = SectorIndex::new(w.n, sw.two_j)?;
            if alpha[s.slot()].replace(sw.alpha).is_some() {
                return domain(format!("sector 2J = {} listed twice", sw.two_j));
            }
        }
        let alpha = sectors(w.n)
            .zip(alpha)
            .map(|(s, a)| a.unwrap_or_else(|| vec![0.0; s.dim()]))
            .collect();
        BlockDiagonalState::new(w.n, alpha)
    }
}

impl Serialize for BlockDiagonalState {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        StateWire::from(self).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for BlockDiagonalState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let wire = StateWire::deserialize(de)?;
        wire.try_into().map_err(serde::de::Error::custom)
    }
}

/// First moments and symmetrized second moments of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: u32,
    /// `<J_x>, <J_y>, <J_z>`.
    pub mean: [f64; 3],
    /// `(1/2) <J_k J_l + J_l J_k>`.
    pub second: [[f64; 3]; 3],
}

impl MomentSummary {
    /// `<J^2>`.
    pub fn total_spin_squared(&self) -> f64 {
        self.second[0][0] + self.second[1][1] + self.second[2][2]
    }

    /// Rotates the moment frame: `mean -> R mean`, `second -> R second R^T`.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> MomentSummary {
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                mean[i] += r[i][k] * self.mean[k];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        acc += r[i][k] * self.second[k][l] * r[j][l];
                    }
                }
                second[i][j] = acc;
            }
        }
        MomentSummary {
            n: self.n,
            mean,
            second,
        }
    }
}

/// Collective-spin moments of a block-diagonal state.
///
/// z-rotation invariance forces `<J_x> = <J_y> = 0` and kills all off-diagonal
/// second moments; the Casimir fixes `<J_x^2> + <J_y^2> = <J^2> - <J_z^2>`.
pub fn moments_from_blocks(state: &BlockDiagonalState) -> MomentSummary {
    let mut jz = 0.0;
    let mut jz2 = 0.0;
    let mut j2 = 0.0;
    for (s, (a, &mu)) in sectors(state.n).zip(state.alpha.iter().zip(&state.mu)) {
        let j = s.j();
        let dim = a.len();
        // pair Jz with -Jz so that symmetric sectors give <J_z> = 0 exactly
        for k in 0..dim / 2 {
            let m = j - k as f64;
            let (lo, hi) = (a[k], a[dim - 1 - k]);
            jz += mu * m * (hi - lo);
            jz2 += mu * m * m * (hi + lo);
        }
        let total: f64 = a.iter().sum();
        j2 += mu * total * j * (j + 1.0);
    }
    let perp = 0.5 * (j2 - jz2);
    MomentSummary {
        n: state.n,
        mean: [0.0, 0.0, jz],
        second: [[perp, 0.0, 0.0], [0.0, perp, 0.0], [0.0, 0.0, jz2]],
    }
}

fn same_n(a: &BlockDiagonalState, b: &BlockDiagonalState) -> Result<()> {
    if a.n != b.n {
        return domain(format!("particle counts differ: {} vs {}", a.n, b.n));
    }
    Ok(())
}

/// Convex combination of states.
pub fn mix(states: &[BlockDiagonalState], weights: &[f64]) -> Result<BlockDiagonalState> {
    if states.is_empty() || states.len() != weights.len() {
        return domain("mix needs one weight per state and at least one state");
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return domain("mixing weights must be nonnegative");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > TRACE_TOL {
        return domain(format!("mixing weights sum to {total}, not one"));
    }
    let mut out = BlockDiagonalState::zeros(states[0].n);
    for (s, &w) in states.iter().zip(weights) {
        same_n(&out, s)?;
        for (o, a) in out.alpha.iter_mut().zip(&s.alpha) {
            for (ov, av) in o.iter_mut().zip(a) {
                *ov += w * av;
            }
        }
    }
    BlockDiagonalState::new(out.n, out.alpha)
}

/// `tr (a - b)^2` of the full `2^N x 2^N` matrices, computed blockwise.
pub fn two_norm_distance(a: &BlockDiagonalState, b: &BlockDiagonalState) -> Result<f64> {
    same_n(a, b)?;
    Ok(a.alpha
        .iter()
        .zip(&b.alpha)
        .zip(&a.mu)
        .map(|((x, y), mu)| {
            mu * x
                .iter()
                .zip(y)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
        })
        .sum())
}

/// Smallest `t` such that `rho - (1 - t) sigma >= 0`.
///
/// Both operators are diagonal in the same basis, so the minimum is the
/// worst cellwise ratio: `t = 1 - min_{cells} alpha_rho / alpha_sigma`, over
/// cells where `sigma` has support. Cells with `alpha_sigma` below
/// [`ZERO_SUPPORT_REL`] times the largest `alpha_sigma` are skipped.
pub fn bsa_mixing_parameter(rho: &BlockDiagonalState, sigma: &BlockDiagonalState) -> Result<f64> {
    same_n(rho, sigma)?;
    let max_sigma = sigma.flat().into_iter().fold(0.0, f64::max);
    if max_sigma <= 0.0 {
        return domain("sigma has no support");
    }
    let cut = ZERO_SUPPORT_REL * max_sigma;
    let mut min_ratio = f64::INFINITY;
    for (r, s) in rho.alpha.iter().flatten().zip(sigma.alpha.iter().flatten()) {
        if *s > cut {
            min_ratio = min_ratio.min(r / s);
        }
    }
    Ok((1.0 - min_ratio).clamp(0.0, 1.0))
}

/// The remainder `nu = (rho - (1 - t) sigma) / t` as raw coefficients (not validated).
pub fn remainder(rho: &BlockDiagonalState, sigma: &BlockDiagonalState, t: f64) -> Result<Vec<f64>> {
    same_n(rho, sigma)?;
    if t <= 0.0 {
        return domain("remainder undefined for t = 0");
    }
    Ok(rho
        .flat()
        .iter()
        .zip(sigma.flat())
        .map(|(r, s)| (r - (1.0 - t) * s) / t)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n2_singlet() -> BlockDiagonalState {
        BlockDiagonalState::basis_cell(2, 0, 0).unwrap()
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(4, 4).unwrap(), 1);
        assert_eq!(multiplicity(4, 0).unwrap(), 2);
        assert_eq!(multiplicity(8, 0).unwrap(), 14);
        assert_eq!(multiplicity(5, 1).unwrap(), 5);
        assert!(multiplicity(4, 1).is_err());
        assert!(multiplicity(4, 6).is_err());
    }

    #[test]
    fn multiplicities_fill_hilbert_space() {
        for n in 1..=40u32 {
            let total: u128 = sectors(n)
                .map(|s| multiplicity(n, s.two_j()).unwrap() * (s.two_j() as u128 + 1))
                .sum();
            assert_eq!(total, 1u128 << n);
        }
    }

    #[test]
    fn ln_multiplicity_matches_exact() {
        for n in [6u32, 31, 100] {
            for (s, l) in sectors(n).zip(ln_multiplicities(n)) {
                let exact = multiplicity(n, s.two_j()).unwrap() as f64;
                assert!((l - exact.ln()).abs() < 1e-11 * exact.ln().abs().max(1.0));
            }
        }
    }

    #[test]
    fn moments_examples() {
        let m = moments_from_blocks(&n2_singlet());
        assert_eq!(m.mean, [0.0; 3]);
        assert_eq!(m.second, [[0.0; 3]; 3]);

        let mixed = BlockDiagonalState::maximally_mixed(2);
        let m = moments_from_blocks(&mixed);
        assert!((m.mean[2]).abs() < 1e-15);
        assert!((m.second[2][2] - 0.5).abs() < 1e-15);
        assert!((m.second[0][0] - 0.5).abs() < 1e-15);

        let dicke = BlockDiagonalState::basis_cell(4, 4, 0).unwrap();
        let m = moments_from_blocks(&dicke);
        assert_eq!(m.second[2][2], 0.0);
        assert_eq!(m.second[0][0], 3.0);
        assert_eq!(m.second[1][1], 3.0);
    }

    #[test]
    fn mix_examples() {
        let a = BlockDiagonalState::basis_cell(2, 0, 0).unwrap();
        let b = BlockDiagonalState::basis_cell(2, 2, 2).unwrap();
        assert_eq!(mix(&[a.clone()], &[1.0]).unwrap(), a);
        assert_eq!(mix(&[a.clone(), a.clone()], &[0.5, 0.5]).unwrap(), a);
        let m = mix(&[a.clone(), b.clone()], &[0.25, 0.75]).unwrap();
        assert_eq!(m.get(0, 0).unwrap(), 0.25);
        assert_eq!(m.get(2, 2).unwrap(), 0.75);
        let c = BlockDiagonalState::maximally_mixed(3);
        assert!(mix(&[a, c], &[0.5, 0.5]).is_err());
        assert!(mix(&[b], &[0.9]).is_err());
    }

    #[test]
    fn two_norm_examples() {
        let s = n2_singlet();
        let t = BlockDiagonalState::basis_cell(2, 2, 0).unwrap();
        assert_eq!(two_norm_distance(&s, &s).unwrap(), 0.0);
        assert_eq!(two_norm_distance(&s, &t).unwrap(), 2.0);
        assert_eq!(two_norm_distance(&t, &s).unwrap(), 2.0);
        assert!(two_norm_distance(&s, &BlockDiagonalState::maximally_mixed(3)).is_err());
    }

    #[test]
    fn bsa_examples() {
        let mixed = BlockDiagonalState::maximally_mixed(4);
        assert_eq!(bsa_mixing_parameter(&mixed, &mixed).unwrap(), 0.0);
        // pure-like cell in a low-J sector against a sigma without support there
        let rho = BlockDiagonalState::basis_cell(4, 0, 0).unwrap();
        let sigma = BlockDiagonalState::basis_cell(4, 4, 2).unwrap();
        assert_eq!(bsa_mixing_parameter(&rho, &sigma).unwrap(), 1.0);
        assert!(bsa_mixing_parameter(&rho, &BlockDiagonalState::zeros(4)).is_err());
    }

    #[test]
    fn bsa_is_minimal() {
        let singlet = n2_singlet();
        let trip = BlockDiagonalState::new(2, vec![vec![0.0], vec![1.0 / 3.0; 3]]).unwrap();
        let rho = mix(&[singlet, trip.clone()], &[0.5, 0.5]).unwrap();
        let t = bsa_mixing_parameter(&rho, &trip).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        let tp = t - 1e-6;
        let neg = rho
            .flat()
            .iter()
            .zip(trip.flat())
            .any(|(r, s)| r - (1.0 - tp) * s < 0.0);
        assert!(neg);
    }

    #[test]
    fn validation() {
        assert!(BlockDiagonalState::new(2, vec![vec![0.5], vec![0.1, 0.1, 0.1]]).is_err());
        assert!(BlockDiagonalState::new(2, vec![vec![1.0], vec![0.0, 0.0]]).is_err());
        assert!(BlockDiagonalState::new(2, vec![vec![1.1], vec![-0.1, 0.0, 0.0]]).is_err());
        let s = BlockDiagonalState::new(2, vec![vec![1.0 + 5e-10], vec![0.0; 3]]).unwrap();
        assert_eq!(s.trace(), 1.0);
    }

    #[test]
    fn json_shape() {
        let s = BlockDiagonalState::maximally_mixed(3);
        let js = s.to_json().unwrap();
        assert!(js.starts_with("{\"N\":3,\"sectors\":[{\"twoJ\":1,\"alpha\":["));
        assert_eq!(BlockDiagonalState::from_json(&js).unwrap(), s);
    }
}
