//! Independent cross-checks against dense matrices and closed-form limits.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use squeezent::blocks::{bsa_mixing_parameter, mix, moments_from_blocks, BlockDiagonalState};
use squeezent::dense::to_complex;
use squeezent::schur::{
    build_schur_basis, jz_product_state_blocks, product_vector, qubit_from_bloch, symmetrize_product_state,
};
use squeezent::sweep::lower_point;
use squeezent::thermal::{ground_energy, gibbs_blocks, mean_energy, sector_energy, thermal_moments, XxzParams};

fn random_bloch<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Applies a qubit permutation to a computational-basis index (bit N-1-p is particle p).
fn permute_index(idx: usize, perm: &[usize], n: usize) -> usize {
    let mut out = 0;
    for (p, &q) in perm.iter().enumerate() {
        let bit = (idx >> (n - 1 - p)) & 1;
        out |= bit << (n - 1 - q);
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn twirl_of_random_product_state_matches_blocks() {
    let n = 4usize;
    let basis = build_schur_basis(n as u32, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let bloch: Vec<[f64; 3]> = (0..n).map(|_| random_bloch(&mut rng)).collect();
        let qubits: Vec<[C; 2]> = bloch.iter().map(|&b| qubit_from_bloch(b)).collect();
        let psi = product_vector(&qubits);
        let dim = 1 << n;
        let rho = DMatrix::<C>::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj());
        let perms = permutations(n);
        assert_eq!(perms.len(), 24);
        let mut perm_avg = DMatrix::<C>::zeros(dim, dim);
        for p in &perms {
            for i in 0..dim {
                for j in 0..dim {
                    perm_avg[(permute_index(i, p, n), permute_index(j, p, n))] += rho[(i, j)];
                }
            }
        }
        perm_avg /= C::new(perms.len() as f64, 0.0);
        // a uniform grid of M > N angles averages exp(i phi (m - m')) exactly
        let m_angles = 2 * n + 3;
        let twirled = DMatrix::<C>::from_fn(dim, dim, |i, j| {
            let two_mi = n as i32 - 2 * i.count_ones() as i32;
            let two_mj = n as i32 - 2 * j.count_ones() as i32;
            let avg: C = (0..m_angles)
                .map(|k| {
                    let phi = std::f64::consts::TAU * k as f64 / m_angles as f64;
                    C::from_polar(1.0, 0.5 * phi * (two_mi - two_mj) as f64)
                })
                .sum::<C>()
                / m_angles as f64;
            perm_avg[(i, j)] * avg
        });
        let blocks = symmetrize_product_state(&bloch, &basis).unwrap();
        let expected = to_complex(&basis.dense_from_blocks(&blocks).unwrap());
        let err = (twirled - expected).camax();
        assert!(err < 1e-8, "twirl mismatch {err:e}");
    }
}

#[test]
fn jz_products_match_symmetrization() {
    for n in 1..=6u32 {
        let basis = build_schur_basis(n, 10).unwrap();
        for k in 0..=n {
            let bloch: Vec<[f64; 3]> = (0..n)
                .map(|p| if p < k { [0.0, 0.0, 1.0] } else { [0.0, 0.0, -1.0] })
                .collect();
            let a = symmetrize_product_state(&bloch, &basis).unwrap();
            let b = jz_product_state_blocks(n, k).unwrap();
            for (x, y) in a.flat().iter().zip(b.flat()) {
                assert!((x - y).abs() < 1e-12, "N={n} K={k}");
            }
        }
    }
}

#[test]
fn two_qubit_mixing_parameter_matches_dense_scan() {
    // rho = singlet/2 + (triplet mixture)/2 against the uniform triplet mixture
    let basis = build_schur_basis(2, 10).unwrap();
    let singlet = BlockDiagonalState::basis_cell(2, 0, 0).unwrap();
    let triplet = BlockDiagonalState::new(2, vec![vec![0.0], vec![1.0 / 3.0; 3]]).unwrap();
    let rho = mix(&[singlet, triplet.clone()], &[0.5, 0.5]).unwrap();
    let t = bsa_mixing_parameter(&rho, &triplet).unwrap();
    let rho_d = basis.dense_from_blocks(&rho).unwrap();
    let sigma_d = basis.dense_from_blocks(&triplet).unwrap();
    let steps = 100_000;
    let scan = (0..=steps)
        .map(|i| i as f64 / steps as f64)
        .find(|&s| {
            let m = &rho_d - &sigma_d * (1.0 - s);
            m.symmetric_eigenvalues().min() >= -1e-12
        })
        .unwrap();
    assert!((t - scan).abs() <= 1.0 / steps as f64, "closed form {t}, scan {scan}");
    assert!((t - 0.5).abs() < 1e-12);
}

#[test]
fn energy_identity_and_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(2..40);
        let p = XxzParams::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), n)
            .unwrap();
        let ts: Vec<f64> = (1..=30).map(|i| 0.05 * i as f64).collect();
        let mut prev: Option<(f64, f64)> = None;
        for &t in &ts {
            let g = gibbs_blocks(&p, t).unwrap();
            let direct: f64 = g
                .state
                .cells()
                .map(|(two_j, two_m, mu, a)| mu * a * sector_energy(&p, two_j, two_m).unwrap())
                .sum();
            let m = moments_from_blocks(&g.state);
            let e = mean_energy(&p, &m);
            assert!((direct - e).abs() < 1e-10 * (1.0 + e.abs()));
            if let Some((lz, e0)) = prev {
                // d ln Z / d(1/T) = -<H>: ln Z falls with 1/T only for a nonnegative spectrum
                if ground_energy(&p) >= 0.0 {
                    assert!(g.log_z >= lz - 1e-12);
                }
                assert!(e >= e0 - 1e-10);
            }
            let db = 1e-5;
            let beta = 1.0 / t;
            let up = gibbs_blocks(&p, 1.0 / (beta + db)).unwrap().log_z;
            let down = gibbs_blocks(&p, 1.0 / (beta - db)).unwrap().log_z;
            assert!(((up - down) / (2.0 * db) + e).abs() < 1e-5 * (1.0 + e.abs()));
            prev = Some((g.log_z, e));
        }
        let zero_field = XxzParams { h: 0.0, ..p };
        let (_, m) = thermal_moments(&zero_field, 0.3).unwrap();
        assert_eq!(m.mean[2], 0.0);
    }
}

/// Large-N limit of the XX (g = 1, g_z = h = 0) bound. With `J = a sqrt(N)` and
/// `Jz = b sqrt(N)` the Gibbs weight becomes `a exp(-2 a^2) exp(-(a^2 - b^2)/T)`
/// on `|b| <= a`, and the bound is `1 - 2 <a^2>`.
fn xx_continuum_bound(t: f64) -> f64 {
    let (na, ns) = (3000, 3000);
    let a_max = 5.0;
    let simpson = |k: usize, n: usize| if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
    let (mut z, mut a2) = (0.0, 0.0);
    for i in 0..=na {
        let a = a_max * i as f64 / na as f64;
        // b = a s, s in [-1, 1]; the integrand is even in s
        let mut inner = 0.0;
        for k in 0..=ns {
            let s = k as f64 / ns as f64;
            inner += simpson(k, ns) * (-(a * a) * (1.0 - s * s) / t).exp();
        }
        inner *= 2.0 * a / (3.0 * ns as f64);
        let w = simpson(i, na) * a * (-2.0 * a * a).exp() * inner;
        z += w;
        a2 += w * a * a;
    }
    (1.0 - 2.0 * a2 / z).max(0.0)
}

#[test]
fn xx_curve_approaches_continuum_limit() {
    let p = XxzParams::xx(1.0, 0.0, 2000).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=8 {
        let t = 0.05 + 0.05 * i as f64;
        let numeric = lower_point(&p, t).unwrap().lower_bound();
        let limit = xx_continuum_bound(t);
        worst = worst.max((numeric - limit).abs());
    }
    assert!(worst < 0.02, "N = 2000 deviates from the continuum limit by {worst}");
    // the limit is half of 1 - 4T/(2T+1) and vanishes at T = 1/2
    for t in [0.1, 0.25, 0.4] {
        let half = 0.5 * (1.0 - 4.0 * t / (2.0 * t + 1.0));
        assert!((xx_continuum_bound(t) - half).abs() < 1e-4, "T = {t}");
    }
    assert!(xx_continuum_bound(0.5) < 1e-4);
}
