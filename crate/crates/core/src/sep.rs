//! Upper bounds on the BSA from explicit separable ensembles.
//!
//! A separable `sigma` is kept as a convex mixture of symmetrized product
//! states. Two ansatz families are provided: the simple one (products of
//! `J_z` eigenstates rotated about `J_y`, fixed library, one weight fit) and
//! the full one, which grows the ensemble by see-saw optimization of the
//! product state with the largest overlap with the residual `rho - sigma`.
//! Either way `t_bsa` is read off the final `sigma` cellwise, so every number
//! reported here is backed by a re-derivable certificate.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{bsa_mixing_parameter, mix, two_norm_distance, BlockDiagonalState};
use crate::error::{domain, Error, Result};
use crate::schur::{
    bloch_from_qubit, jz_product_state_blocks, qubit_from_bloch, rotate_and_twirl,
    symmetrize_product_state, SchurBasis,
};
use crate::ssi::SsiResult;

type C = Complex64;

/// How a member state is generated; enough to rebuild its blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Descriptor {
    /// `K` spins up, the rest down, rotated by `theta` about `J_y`.
    SimpleAnsatz {
        #[serde(rename = "K")]
        k: u32,
        theta: f64,
    },
    /// One unit Bloch vector per particle.
    GeneralProduct { bloch: Vec<[f64; 3]> },
}

impl Descriptor {
    /// Permutation + z-rotation twirl of the described product state.
    ///
    /// General products need the Schur basis of matching `N`.
    pub fn realize(&self, n: u32, basis: Option<&SchurBasis>) -> Result<BlockDiagonalState> {
        match self {
            Descriptor::SimpleAnsatz { k, theta } => {
                Ok(rotate_and_twirl(&jz_product_state_blocks(n, *k)?, *theta))
            }
            Descriptor::GeneralProduct { bloch } => match basis {
                Some(b) if b.n() == n => symmetrize_product_state(bloch, b),
                _ => Err(Error::Capability(format!(
                    "a general product member of N = {n} needs the Schur basis"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub weight: f64,
    pub blocks: BlockDiagonalState,
    pub descriptor: Descriptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    BallReached,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct UpperBoundReport {
    pub t_bsa: f64,
    /// `tr(rho - sigma)^2`.
    pub residual_two_norm: f64,
    pub sigma: BlockDiagonalState,
    pub ensemble: Vec<EnsembleMember>,
    pub iterations: usize,
    pub termination: Termination,
    pub seed: Option<u64>,
    /// Residual after each weight fit, starting with the initial `sigma`.
    pub residual_history: Vec<f64>,
}

/// Folds `(K, theta)` to a canonical representative. Twirled members are
/// unchanged by `theta -> -theta` and by `(K, theta) -> (N - K, pi - theta)`.
fn canonical(n: u32, k: u32, theta: f64) -> (u32, f64) {
    use std::f64::consts::PI;
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t = 2.0 * PI - t;
    }
    let (mut k, mut t) = (k, t);
    if 2 * k > n || (2 * k == n && t > PI / 2.0) {
        k = n - k;
        t = PI - t;
    }
    (k, t)
}

/// `points` uniform angles covering `[0, pi]`.
pub fn default_theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| std::f64::consts::PI * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// All `K` up to `N = 32`; about 33 evenly strided values (ends included) above.
pub fn default_k_set(n: u32) -> Vec<u32> {
    if n <= 32 {
        return (0..=n).collect();
    }
    let stride = n.div_ceil(32) as usize;
    let mut ks: Vec<u32> = (0..=n).step_by(stride).collect();
    if ks.last() != Some(&n) {
        ks.push(n);
    }
    ks
}

/// Rotated `J_z`-product members with unit weight, deduplicated.
pub fn simple_ansatz_library(n: u32, k_set: &[u32], theta_grid: &[f64]) -> Result<Vec<EnsembleMember>> {
    if k_set.is_empty() || theta_grid.is_empty() {
        return domain("the simple ansatz needs nonempty K and theta grids");
    }
    let mut seen = HashSet::new();
    let mut keys = Vec::new();
    for &k in k_set {
        if k > n {
            return domain(format!("up-spin count {k} exceeds N = {n}"));
        }
        for &theta in theta_grid {
            let (ck, ct) = canonical(n, k, theta);
            if seen.insert((ck, (ct * 1e12).round() as i64)) {
                keys.push((k, theta));
            }
        }
    }
    keys.into_par_iter()
        .map(|(k, theta)| {
            let descriptor = Descriptor::SimpleAnsatz { k, theta };
            Ok(EnsembleMember {
                weight: 1.0,
                blocks: descriptor.realize(n, None)?,
                descriptor,
            })
        })
        .collect()
}

/// Outcome of a simplex-constrained least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Refit {
    pub weights: Vec<f64>,
    /// `tr(rho - sum_i w_i sigma_i)^2`.
    pub distance: f64,
    /// All members coincide, so the returned vertex is arbitrary.
    pub degenerate: bool,
}

/// Weights minimizing the two-norm distance to `target` over the probability
/// simplex.
///
/// Primal active-set method: the equality-constrained subproblem on the free
/// set is solved through its KKT system (pseudo-inverse, so linearly dependent
/// members are fine), and variables enter by most negative multiplier. The
/// result satisfies the KKT conditions to rounding. `start` seeds the method
/// with a feasible point and must lie on the simplex.
pub fn refit_weights(
    target: &BlockDiagonalState,
    members: &[BlockDiagonalState],
    start: Option<&[f64]>,
) -> Result<Refit> {
    let m = members.len();
    if m == 0 {
        return domain("cannot fit weights of an empty ensemble");
    }
    if members.iter().any(|s| s.n() != target.n()) {
        return domain("ensemble members and target have different N");
    }
    let sqrt_mu = target.flat_weights().iter().map(|w| w.sqrt()).collect::<Vec<_>>();
    let cells = sqrt_mu.len();
    let mut a = DMatrix::<f64>::zeros(cells, m);
    for (c, s) in members.iter().enumerate() {
        for (r, v) in s.flat().into_iter().enumerate() {
            a[(r, c)] = v * sqrt_mu[r];
        }
    }
    let b = DVector::from_iterator(cells, target.flat().into_iter().zip(&sqrt_mu).map(|(v, w)| v * w));
    let g = a.transpose() * &a;
    let c = a.transpose() * &b;
    let scale = g.diagonal().max().max(1e-300);
    let kkt_tol = 1e-13 * scale;

    let degenerate = (1..m).all(|i| (a.column(i) - a.column(0)).amax() == 0.0);
    let mut w = match start {
        Some(s) if s.len() == m => s.to_vec(),
        Some(_) => return domain("start weights have the wrong length"),
        None => {
            // best single vertex
            let best = (0..m)
                .min_by(|&i, &j| {
                    let di = (a.column(i) - &b).norm_squared();
                    let dj = (a.column(j) - &b).norm_squared();
                    di.total_cmp(&dj)
                })
                .unwrap();
            let mut w = vec![0.0; m];
            w[best] = 1.0;
            w
        }
    };
    let mut free: Vec<bool> = w.iter().map(|&v| v > 0.0).collect();
    if !free.iter().any(|&f| f) {
        return domain("start weights are not on the simplex");
    }

    for _ in 0..(20 * m + 100) {
        let idx: Vec<usize> = (0..m).filter(|&i| free[i]).collect();
        let z = solve_equality_qp(&g, &c, &idx)?;
        if z.iter().all(|&v| v > 0.0) {
            for (&i, &v) in idx.iter().zip(&z) {
                w[i] = v;
            }
            let wv = DVector::from_column_slice(&w);
            let grad = &g * &wv - &c;
            let mean_free = idx.iter().map(|&i| grad[i]).sum::<f64>() / idx.len() as f64;
            let entering = (0..m)
                .filter(|&j| !free[j])
                .map(|j| (j, grad[j] - mean_free))
                .min_by(|x, y| x.1.total_cmp(&y.1));
            match entering {
                Some((j, lambda)) if lambda < -kkt_tol => free[j] = true,
                _ => break,
            }
        } else {
            // move toward z until the first free weight hits zero
            let mut step = 1.0f64;
            for (&i, &zi) in idx.iter().zip(&z) {
                if zi <= 0.0 {
                    let s = w[i] / (w[i] - zi);
                    step = step.min(s);
                }
            }
            for (&i, &zi) in idx.iter().zip(&z) {
                w[i] += step * (zi - w[i]);
                if w[i] <= 1e-15 || (zi <= 0.0 && w[i] / (w[i] - zi).max(1e-300) <= 0.0) {
                    w[i] = 0.0;
                    free[i] = false;
                }
            }
            // the blocking variable leaves even if rounding kept it tiny
            if let Some((&i, _)) = idx
                .iter()
                .zip(&z)
                .filter(|(_, &zi)| zi <= 0.0)
                .min_by(|x, y| x.0.cmp(y.0))
                .filter(|(&i, _)| free[i] && w[i] < 1e-12)
            {
                w[i] = 0.0;
                free[i] = false;
            }
            if !free.iter().any(|&f| f) {
                return Err(Error::Integrity("weight fit lost every free variable".into()));
            }
        }
    }
    for v in w.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    let wv = DVector::from_column_slice(&w);
    let distance = (&a * wv - &b).norm_squared();
    Ok(Refit {
        weights: w,
        distance,
        degenerate,
    })
}

/// Minimizes `w^T G w / 2 - c^T w` over `w_idx` with `sum w = 1`, other weights zero.
fn solve_equality_qp(g: &DMatrix<f64>, c: &DVector<f64>, idx: &[usize]) -> Result<Vec<f64>> {
    let p = idx.len();
    let mut k = DMatrix::<f64>::zeros(p + 1, p + 1);
    let mut rhs = DVector::<f64>::zeros(p + 1);
    for (r, &i) in idx.iter().enumerate() {
        for (s, &j) in idx.iter().enumerate() {
            k[(r, s)] = g[(i, j)];
        }
        k[(r, p)] = 1.0;
        k[(p, r)] = 1.0;
        rhs[r] = c[i];
    }
    rhs[p] = 1.0;
    let eps = 1e-13 * k.amax().max(1.0);
    let sol = k
        .svd(true, true)
        .solve(&rhs, eps)
        .map_err(|e| Error::Integrity(format!("weight-fit KKT solve failed: {e}")))?;
    Ok(sol.iter().take(p).copied().collect())
}

/// Best product state found by the see-saw iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSearch {
    pub descriptor: Descriptor,
    /// `<Psi| R |Psi>` of the returned state.
    pub overlap: f64,
    /// Overlap after each single-particle update.
    pub history: Vec<f64>,
}

fn random_bloch<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Real symmetric `R` applied to a complex vector.
fn apply(r: &DMatrix<f64>, v: &[C]) -> Vec<C> {
    let re = DVector::from_iterator(v.len(), v.iter().map(|x| x.re));
    let im = DVector::from_iterator(v.len(), v.iter().map(|x| x.im));
    let (a, b) = (r * re, r * im);
    a.iter().zip(b.iter()).map(|(&x, &y)| C::new(x, y)).collect()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Product vector with particle `p` replaced by basis state `bit`.
fn with_site(qubits: &[[C; 2]], p: usize, bit: usize) -> Vec<C> {
    let n = qubits.len();
    let shift = n - 1 - p;
    let mut out = vec![C::new(0.0, 0.0); 1 << n];
    for (idx, amp) in out.iter_mut().enumerate() {
        if (idx >> shift) & 1 != bit {
            continue;
        }
        let mut v = C::new(1.0, 0.0);
        for (q, s) in qubits.iter().enumerate() {
            if q != p {
                v *= s[(idx >> (n - 1 - q)) & 1];
            }
        }
        *amp = v;
    }
    out
}

/// Top eigenpair of a 2x2 Hermitian matrix `[[a, b], [conj(b), d]]`.
fn top_eigen(a: f64, b: C, d: f64) -> (f64, [C; 2]) {
    let half = 0.5 * (a - d);
    let lambda = 0.5 * (a + d) + (half * half + b.norm_sqr()).sqrt();
    let v = if b.norm() > 1e-300 {
        [b, C::new(lambda - a, 0.0)]
    } else if a >= d {
        [C::new(1.0, 0.0), C::new(0.0, 0.0)]
    } else {
        [C::new(0.0, 0.0), C::new(1.0, 0.0)]
    };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (lambda, [v[0] / norm, v[1] / norm])
}

/// Maximizes `<Psi|R|Psi>` over product states by cyclic single-particle
/// updates, starting from a random product drawn with `seed`.
///
/// Each update replaces one particle by the top eigenvector of the 2x2
/// effective matrix obtained by contracting `R` with the other particles, so
/// the overlap never decreases. Stops when a full sweep gains less than
/// `1e-10` or after `max_sweeps`.
pub fn seesaw_best_product(residual: &DMatrix<f64>, seed: u64, max_sweeps: usize) -> Result<ProductSearch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    seesaw_with_rng(residual, &mut rng, max_sweeps)
}

fn seesaw_with_rng<R: Rng>(residual: &DMatrix<f64>, rng: &mut R, max_sweeps: usize) -> Result<ProductSearch> {
    let dim = residual.nrows();
    if dim < 2 || !dim.is_power_of_two() || residual.ncols() != dim {
        return domain("residual must be square with power-of-two dimension");
    }
    let asym = (residual - residual.transpose()).amax();
    if asym > 1e-12 * residual.amax().max(1.0) {
        return domain(format!("residual is not Hermitian (asymmetry {asym:e})"));
    }
    let n = dim.trailing_zeros() as usize;
    let mut qubits: Vec<[C; 2]> = (0..n).map(|_| qubit_from_bloch(random_bloch(rng))).collect();
    let mut history = Vec::new();
    let mut overlap = f64::NEG_INFINITY;
    for _ in 0..max_sweeps {
        let before = overlap;
        for p in 0..n {
            let phi0 = with_site(&qubits, p, 0);
            let phi1 = with_site(&qubits, p, 1);
            let r1 = apply(residual, &phi1);
            let r0 = apply(residual, &phi0);
            let a = dot(&phi0, &r0).re;
            let d = dot(&phi1, &r1).re;
            let b = dot(&phi0, &r1);
            let (lambda, v) = top_eigen(a, b, d);
            // rounding can make the new value dip by ~1e-16; keep the ledger monotone
            overlap = lambda.max(overlap);
            qubits[p] = v;
            history.push(overlap);
        }
        if overlap - before < 1e-10 {
            break;
        }
    }
    let bloch = qubits.iter().map(|&q| bloch_from_qubit(q)).collect();
    Ok(ProductSearch {
        descriptor: Descriptor::GeneralProduct { bloch },
        overlap,
        history,
    })
}

fn mix_members(n: u32, members: &[EnsembleMember]) -> Result<BlockDiagonalState> {
    let states: Vec<BlockDiagonalState> = members.iter().map(|m| m.blocks.clone()).collect();
    let weights: Vec<f64> = members.iter().map(|m| m.weight).collect();
    let sigma = mix(&states, &weights)?;
    debug_assert_eq!(sigma.n(), n);
    Ok(sigma)
}

/// Drops members below `1e-12` and renormalizes the rest.
fn prune(members: &mut Vec<EnsembleMember>) {
    members.retain(|m| m.weight >= 1e-12);
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for m in members.iter_mut() {
        m.weight /= total;
    }
}

/// Simple ansatz: fixed library, one weight fit, optionally followed by
/// [`lp_polish`] over the same library.
pub fn upper_bound_simple(
    target: &BlockDiagonalState,
    k_set: &[u32],
    theta_grid: &[f64],
    polish: bool,
) -> Result<UpperBoundReport> {
    let n = target.n();
    let library = simple_ansatz_library(n, k_set, theta_grid)?;
    let mut members = library.clone();
    let blocks: Vec<BlockDiagonalState> = members.iter().map(|m| m.blocks.clone()).collect();
    let fit = refit_weights(target, &blocks, None)?;
    for (m, w) in members.iter_mut().zip(&fit.weights) {
        m.weight = *w;
    }
    prune(&mut members);
    let mut sigma = mix_members(n, &members)?;
    let residual = two_norm_distance(target, &sigma)?;
    let mut t_bsa = bsa_mixing_parameter(target, &sigma)?;
    let mut residual_two_norm = residual;
    if polish {
        if let Some(polished) = lp_polish(target, &library)? {
            let s = mix_members(n, &polished)?;
            let t = bsa_mixing_parameter(target, &s)?;
            if t < t_bsa {
                t_bsa = t;
                residual_two_norm = two_norm_distance(target, &s)?;
                sigma = s;
                members = polished;
            }
        }
    }
    Ok(UpperBoundReport {
        t_bsa,
        residual_two_norm,
        sigma,
        ensemble: members,
        iterations: 1,
        termination: Termination::Converged,
        seed: None,
        residual_history: vec![residual],
    })
}

/// Members `SimpleAnsatz{K, 0}` with weights `C(N,K)/2^N`: the maximally mixed state.
pub fn maximally_mixed_ensemble(n: u32) -> Result<Vec<EnsembleMember>> {
    let lf = crate::blocks::ln_factorials(n);
    (0..=n)
        .map(|k| {
            let descriptor = Descriptor::SimpleAnsatz { k, theta: 0.0 };
            let ln_w = lf[n as usize] - lf[k as usize] - lf[(n - k) as usize] - n as f64 * std::f64::consts::LN_2;
            Ok(EnsembleMember {
                weight: ln_w.exp(),
                blocks: descriptor.realize(n, None)?,
                descriptor,
            })
        })
        .collect()
}

/// Settings of the full see-saw ansatz.
#[derive(Debug, Clone)]
pub struct FullOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_outer: usize,
    pub max_sweeps: usize,
    /// Stop once `tr(rho - sigma)^2` falls below this.
    pub residual_tol: f64,
    /// Stop once no product state improves on `sigma` by more than this.
    pub gap_tol: f64,
    /// Separable-ball radius (Frobenius, normalized states); `None` disables the test.
    pub ball_radius: Option<f64>,
    /// Initial ensemble; the maximally mixed state when absent.
    pub warm_start: Option<Vec<EnsembleMember>>,
    /// Finish with [`lp_polish`] over every member generated during the run.
    pub polish: bool,
}

impl Default for FullOptions {
    fn default() -> Self {
        FullOptions {
            restarts: 8,
            seed: 0,
            max_outer: 200,
            max_sweeps: 200,
            residual_tol: 1e-14,
            gap_tol: 1e-12,
            ball_radius: None,
            warm_start: None,
            polish: true,
        }
    }
}

/// Full ansatz: grow the ensemble one see-saw product at a time.
///
/// Each outer step forms the dense residual `rho - sigma`, runs the see-saw
/// from `restarts` seeded random products in parallel, appends the best
/// product (symmetrized) and refits all weights. The reported state is the one
/// with the lowest `t_bsa` seen along the way.
pub fn upper_bound_full(
    target: &BlockDiagonalState,
    basis: &SchurBasis,
    opts: &FullOptions,
) -> Result<UpperBoundReport> {
    let n = target.n();
    if basis.n() != n {
        return domain("Schur basis and target have different N");
    }
    if opts.restarts == 0 {
        return domain("the see-saw needs at least one restart");
    }
    let mut members = match &opts.warm_start {
        Some(ws) => {
            if ws.iter().any(|m| m.blocks.n() != n) {
                return domain("warm start has a different N");
            }
            ws.clone()
        }
        None => maximally_mixed_ensemble(n)?,
    };
    prune(&mut members);
    let mut archive = members.clone();
    let mut sigma = mix_members(n, &members)?;
    let mut residual = two_norm_distance(target, &sigma)?;
    let mut history = vec![residual];
    let mut best = (bsa_mixing_parameter(target, &sigma)?, residual, sigma.clone(), members.clone());
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    for outer in 0..opts.max_outer {
        if residual < opts.residual_tol {
            termination = Termination::Converged;
            break;
        }
        if let Some(r) = opts.ball_radius {
            if separable_ball_check(target, &sigma, r)? {
                termination = Termination::BallReached;
                break;
            }
        }
        iterations = outer + 1;
        let diff: Vec<Vec<f64>> = target
            .alpha()
            .iter()
            .zip(sigma.alpha())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let dense = basis.dense_from_alpha(&diff)?;
        // tr((rho - sigma) sigma): the overlap sigma itself already achieves
        let baseline: f64 = diff
            .iter()
            .zip(sigma.alpha())
            .zip(sigma.multiplicities())
            .map(|((d, s), mu)| mu * d.iter().zip(s).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        let searches: Vec<ProductSearch> = (0..opts.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(((outer as u64) << 32) | r as u64);
                seesaw_with_rng(&dense, &mut rng, opts.max_sweeps)
            })
            .collect::<Result<_>>()?;
        let found = searches
            .into_iter()
            .reduce(|a, b| if b.overlap > a.overlap { b } else { a })
            .expect("at least one restart");
        if found.overlap - baseline <= opts.gap_tol {
            termination = Termination::Converged;
            break;
        }
        let blocks = found.descriptor.realize(n, Some(basis))?;
        let member = EnsembleMember {
            weight: 0.0,
            blocks,
            descriptor: found.descriptor,
        };
        archive.push(member.clone());
        members.push(member);
        let states: Vec<BlockDiagonalState> = members.iter().map(|m| m.blocks.clone()).collect();
        let start: Vec<f64> = members.iter().map(|m| m.weight).collect();
        let fit = refit_weights(target, &states, Some(&start))?;
        for (m, w) in members.iter_mut().zip(&fit.weights) {
            m.weight = *w;
        }
        prune(&mut members);
        sigma = mix_members(n, &members)?;
        residual = two_norm_distance(target, &sigma)?;
        history.push(residual);
        let t = bsa_mixing_parameter(target, &sigma)?;
        if t < best.0 {
            best = (t, residual, sigma.clone(), members.clone());
        }
    }
    if opts.polish {
        if let Some(polished) = lp_polish(target, &archive)? {
            let sigma = mix_members(n, &polished)?;
            let t = bsa_mixing_parameter(target, &sigma)?;
            if t < best.0 {
                best = (t, two_norm_distance(target, &sigma)?, sigma, polished);
            }
        }
    }
    let (t_bsa, residual_two_norm, sigma, ensemble) = best;
    Ok(UpperBoundReport {
        t_bsa,
        residual_two_norm,
        sigma,
        ensemble,
        iterations,
        termination,
        seed: Some(opts.seed),
        residual_history: history,
    })
}

/// Re-weights `candidates` to minimize `t` directly.
///
/// Solves the linear program `max sum_i v_i` subject to
/// `sum_i v_i sigma_i <= rho` cellwise and `v >= 0`; the normalized `v` then
/// gives `t = 1 - sum_i v_i`. Members with support where `rho` has none are
/// excluded up front. Returns the members with positive weight, or `None`
/// when no candidate fits under `rho`. The caller recomputes `t` from the
/// mixture, so solver rounding can never make a reported bound unsound.
pub fn lp_polish(target: &BlockDiagonalState, candidates: &[EnsembleMember]) -> Result<Option<Vec<EnsembleMember>>> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let rho = target.flat();
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    let empty = |v: f64, max: f64| v <= crate::blocks::ZERO_SUPPORT_REL * max;
    let usable: Vec<(usize, Vec<f64>)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let mut f = m.blocks.flat();
            let max = f.iter().copied().fold(0.0, f64::max);
            for v in f.iter_mut() {
                if empty(*v, max) {
                    *v = 0.0;
                }
            }
            let fits = f.iter().zip(&rho).all(|(&s, &r)| s == 0.0 || !empty(r, rho_max));
            fits.then_some((i, f))
        })
        .collect();
    if usable.is_empty() {
        return Ok(None);
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = usable.iter().map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for (c, &r) in rho.iter().enumerate() {
        if empty(r, rho_max) {
            continue;
        }
        // rows scaled by 1/rho so every right-hand side is one
        let row: Vec<_> = usable
            .iter()
            .zip(&vars)
            .filter(|((_, f), _)| f[c] != 0.0)
            .map(|((_, f), &v)| (v, f[c] / r))
            .collect();
        if !row.is_empty() {
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, 1.0);
        }
    }
    let solution = match lp.solve() {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    let Some(solution) = solution.solution() else {
        return Ok(None);
    };
    let v: Vec<f64> = vars.iter().map(|&x| solution.var_value(x).max(0.0)).collect();
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Ok(None);
    }
    let picked: Vec<EnsembleMember> = usable
        .iter()
        .zip(&v)
        .filter(|(_, &w)| w / total >= 1e-12)
        .map(|((i, _), &w)| EnsembleMember {
            weight: w,
            ..candidates[*i].clone()
        })
        .collect();
    let mut picked = picked;
    prune(&mut picked);
    Ok(Some(picked))
}

/// Radius of a Frobenius ball of separable states around `1/2^N`.
///
/// Writing `rho = (1 + sum_P c_P P)/2^N` over nontrivial Pauli strings, each
/// `(1 +- P)/2^N` is a mixture of products, so `sum |c_P| <= 1` certifies
/// separability; Cauchy-Schwarz turns that into
/// `||rho - 1/2^N||_2 <= (2^N (4^N - 1))^{-1/2}`. This is a factor of about two
/// below the best known multiqubit radius, which keeps it on the safe side.
pub fn separable_ball_radius(n: u32) -> f64 {
    let d = 2f64.powi(n as i32);
    1.0 / (d * (d * d - 1.0)).sqrt()
}

/// True when `rho` is certified separable: for some `lambda` in `[t, 1]` the
/// remainder `(rho - (1 - lambda) sigma)/lambda`, which is a state, lies in the
/// ball of the given radius. The distance is quadratic in `1/lambda`, so the
/// best `lambda` is found in closed form.
pub fn separable_ball_check(target: &BlockDiagonalState, sigma: &BlockDiagonalState, radius: f64) -> Result<bool> {
    let t = bsa_mixing_parameter(target, sigma)?;
    if t == 0.0 {
        // rho >= sigma cellwise with equal traces, so rho = sigma
        return Ok(true);
    }
    let d = 2f64.powi(target.n() as i32);
    let w = target.flat_weights();
    let (r, s) = (target.flat(), sigma.flat());
    let (mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0);
    for ((mu, x), y) in w.iter().zip(&r).zip(&s) {
        let a = x - y;
        let b = y - 1.0 / d;
        aa += mu * a * a;
        ab += mu * a * b;
        bb += mu * b * b;
    }
    let u = if aa > 0.0 { (-ab / aa).clamp(1.0, 1.0 / t) } else { 1.0 };
    let dist2 = (aa * u * u + 2.0 * ab * u + bb).max(0.0);
    Ok(dist2.sqrt() <= radius)
}

/// Lower and upper bound of one target side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

/// Pairs the bounds; a lower bound above the upper one is a bug.
pub fn sandwich_report(lower: &SsiResult, upper: &UpperBoundReport) -> Result<Sandwich> {
    if lower.lower_bound > upper.t_bsa + 1e-9 {
        return Err(Error::Integrity(format!(
            "lower bound {} exceeds upper bound {}",
            lower.lower_bound, upper.t_bsa
        )));
    }
    Ok(Sandwich {
        lower: lower.lower_bound,
        upper: upper.t_bsa,
        gap: upper.t_bsa - lower.lower_bound,
    })
}

/// Serializable form of a report: enough for a third party to rebuild `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "N")]
    pub n: u32,
    pub seed: Option<u64>,
    pub t_bsa: f64,
    pub residual_two_norm: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub members: Vec<CertifiedMember>,
    pub sigma: BlockDiagonalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedMember {
    pub weight: f64,
    pub descriptor: Descriptor,
}

impl UpperBoundReport {
    pub fn certificate(&self) -> Certificate {
        Certificate {
            n: self.sigma.n(),
            seed: self.seed,
            t_bsa: self.t_bsa,
            residual_two_norm: self.residual_two_norm,
            termination: self.termination,
            iterations: self.iterations,
            members: self
                .ensemble
                .iter()
                .map(|m| CertifiedMember {
                    weight: m.weight,
                    descriptor: m.descriptor.clone(),
                })
                .collect(),
            sigma: self.sigma.clone(),
        }
    }
}

/// Independent re-check of a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// Largest cellwise difference between the rebuilt and the recorded `sigma`.
    pub sigma_error: f64,
    /// `t_bsa` recomputed from the rebuilt `sigma`.
    pub t_bsa: f64,
    /// Smallest cell of `rho - (1 - t) sigma` at the recorded `t`.
    pub min_remainder: f64,
}

/// Rebuilds every member from its descriptor, mixes, and recomputes `t_bsa`.
pub fn verify_certificate(
    cert: &Certificate,
    target: &BlockDiagonalState,
    basis: Option<&SchurBasis>,
) -> Result<Verification> {
    if cert.n != target.n() {
        return domain("certificate and target have different N");
    }
    if cert.members.is_empty() {
        return Err(Error::Integrity("certificate has no members".into()));
    }
    if cert.members.iter().any(|m| !(m.weight >= 0.0)) {
        return Err(Error::Integrity("certificate has a negative weight".into()));
    }
    let states = cert
        .members
        .iter()
        .map(|m| m.descriptor.realize(cert.n, basis))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = cert.members.iter().map(|m| m.weight).collect();
    let sigma = mix(&states, &weights).map_err(|e| Error::Integrity(format!("bad weights: {e}")))?;
    let sigma_error = sigma
        .flat()
        .iter()
        .zip(cert.sigma.flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let keep = 1.0 - cert.t_bsa;
    let min_remainder = target
        .flat()
        .iter()
        .zip(sigma.flat())
        .map(|(r, s)| r - keep * s)
        .fold(f64::INFINITY, f64::min);
    Ok(Verification {
        sigma_error,
        t_bsa: bsa_mixing_parameter(target, &sigma)?,
        min_remainder,
    })
}
