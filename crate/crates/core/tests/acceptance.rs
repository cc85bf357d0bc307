//! Acceptance criteria. Each test prints one `criterion k: PASS|FAIL` line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use squeezent::blocks::{moments_from_blocks, two_norm_distance, BlockDiagonalState};
use squeezent::dense::{gibbs_dense, moments_dense, to_complex};
use squeezent::schur::build_schur_basis;
use squeezent::sep::{
    default_k_set, default_theta_grid, sandwich_report, upper_bound_full, upper_bound_simple, verify_certificate,
    Descriptor, FullOptions,
};
use squeezent::ssi::{evaluate_inequality_set, ssi_parameter, ssi_parameter_with};
use squeezent::sweep::{entanglement_threshold, lower_point};
use squeezent::thermal::{asymptotic_xx_bound, dense_hamiltonian, gibbs_blocks, XxzParams};

/// Prints the verdict line, then fails the test if the criterion does not hold.
fn verdict(k: u32, ok: bool, detail: &str) {
    println!("criterion {k}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {k} failed: {detail}");
}

const BISECTION_TOL: f64 = 1e-7;

fn threshold(p: &XxzParams) -> f64 {
    entanglement_threshold(p, 1e-3, 5.0, BISECTION_TOL)
        .unwrap()
        .expect("bound is positive somewhere")
        .t_star
}

#[test]
fn criterion_01_singlet_and_dicke_extremal() {
    let mut worst: f64 = 0.0;
    let mut ks_ok = true;
    for n in [2u32, 4, 8, 20] {
        let singlet = ssi_parameter(&moments_from_blocks(&BlockDiagonalState::basis_cell(n, 0, 0).unwrap()));
        let dicke = ssi_parameter(&moments_from_blocks(&BlockDiagonalState::basis_cell(n, n, 0).unwrap()));
        ks_ok &= singlet.k == 0 && dicke.k == 2;
        worst = worst.max((singlet.lower_bound - 1.0).abs()).max((dicke.lower_bound - 1.0).abs());
    }
    verdict(1, ks_ok && worst <= 1e-10, &format!("max |bound - 1| = {worst:e}, K = 0 / 2: {ks_ok}"));
}

#[test]
fn criterion_02_two_qubit_threshold() {
    let t = threshold(&XxzParams::xxx(1.0, 2).unwrap());
    let err = (t - 1.0 / 3f64.ln()).abs();
    verdict(2, err <= 1e-6, &format!("T* = {t:.9}, 1/ln 3 = {:.9}", 1.0 / 3f64.ln()));
}

#[test]
fn criterion_03_xxx_threshold_approaches_g() {
    let ns = [50u32, 100, 200, 1000];
    let ts: Vec<f64> = ns.iter().map(|&n| threshold(&XxzParams::xxx(1.0, n).unwrap())).collect();
    let increasing = ts.windows(2).all(|w| w[1] > w[0]);
    let close = (ts[3] - 1.0).abs() <= 0.05;
    let list: Vec<String> = ns.iter().zip(&ts).map(|(n, t)| format!("N={n}: {t:.6}")).collect();
    verdict(3, increasing && close, &list.join(", "));
}

#[test]
fn criterion_04_xx_threshold_and_curve() {
    let t1000 = threshold(&XxzParams::xx(1.0, 0.0, 1000).unwrap());
    let threshold_ok = (t1000 - 0.5).abs() <= 0.025;
    let p = XxzParams::xx(1.0, 0.0, 2000).unwrap();
    let mut worst: (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..=40 {
        let t = 0.05 + 0.01 * i as f64;
        let numeric = lower_point(&p, t).unwrap().lower_bound();
        let formula = asymptotic_xx_bound(t).unwrap();
        let dev = (numeric - formula).abs();
        if dev > worst.0 {
            worst = (dev, t, numeric, formula);
        }
    }
    let curve_ok = worst.0 <= 0.01;
    let at_half = lower_point(&p, 0.5).unwrap().lower_bound();
    verdict(
        4,
        threshold_ok && curve_ok,
        &format!(
            "N=1000 T* = {t1000:.6} ({}); N=2000 curve max deviation {:.4} at T = {:.2} \
             (numeric {:.5} vs closed form {:.5}); bound at T = 0.5: {at_half:.2e}",
            if threshold_ok { "ok" } else { "off" },
            worst.0,
            worst.1,
            worst.2,
            worst.3
        ),
    );
}

#[test]
fn criterion_05_three_qubit_bounds_coincide() {
    let basis = build_schur_basis(3, 10).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let t = 0.05 + (1.2 - 0.05) * i as f64 / 19.0;
        let p = XxzParams::xxx(1.0, 3).unwrap();
        let target = gibbs_blocks(&p, t).unwrap().state;
        let lower = ssi_parameter_with(&moments_from_blocks(&target), p.symmetry());
        let upper = upper_bound_full(&target, &basis, &FullOptions::default()).unwrap();
        let s = sandwich_report(&lower, &upper).unwrap();
        worst = worst.max(s.gap);
    }
    verdict(5, worst <= 0.01, &format!("max upper - lower = {worst:.3e} on 20 points"));
}

#[test]
fn criterion_06_ground_state_bounds() {
    let xxx = lower_point(&XxzParams::xxx(1.0, 8).unwrap(), 0.0).unwrap();
    let a_ok = xxx.lower_bound() == 1.0 && (xxx.ssi.xi + 4.0).abs() <= 1e-12;
    let xx = lower_point(&XxzParams::xx(1.0, 0.0, 8).unwrap(), 0.0).unwrap();
    let b_ok = xx.lower_bound() < 1.0;
    let degenerate = lower_point(&XxzParams::xx(1.0, -1.0 / 8.0, 8).unwrap(), 0.0).unwrap();
    let large = lower_point(&XxzParams::xx(1.0, 0.0, 200).unwrap(), 0.01).unwrap();
    verdict(
        6,
        a_ok && b_ok,
        &format!(
            "XXX N=8: bound {} xi {}; XX h=0 N=8 T=0: bound {} (needs < 1); \
             for reference XX N=8 at |h| = g/N: {:.4}, XX N=200 T=0.01: {:.4}",
            xxx.lower_bound(),
            xxx.ssi.xi,
            xx.lower_bound(),
            degenerate.lower_bound(),
            large.lower_bound()
        ),
    );
}

#[test]
fn criterion_07_ferromagnetic_reentrance() {
    let n = 8u32;
    // large-N transition of the ferromagnetic model (|g| = 1); for N = 8 the
    // ground state is already polarized above the level crossing at (N-1)/N
    let h_crit = 1.0;
    let cold = [0.0, 1e-3, 5e-3, 1e-2];
    let warm: Vec<f64> = (0..120).map(|i| (0.01f64.ln() + (1.0f64 / 0.01).ln() * i as f64 / 119.0).exp()).collect();
    let mut window = Vec::new();
    for i in 1..=60 {
        let h = h_crit + 0.005 * i as f64;
        let p = XxzParams::new(-1.0, 0.0, h, n).unwrap();
        if !cold.iter().all(|&t| lower_point(&p, t).unwrap().lower_bound() == 0.0) {
            continue;
        }
        let best = warm
            .iter()
            .map(|&t| (t, lower_point(&p, t).unwrap().lower_bound()))
            .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if best.1 > 0.0 {
            window.push((h, best.0, best.1));
        }
    }
    // regression fixture recorded from the scan
    let fixture = XxzParams::new(-1.0, 0.0, 1.05, n).unwrap();
    let fixture_ok = cold.iter().all(|&t| lower_point(&fixture, t).unwrap().lower_bound() == 0.0)
        && (lower_point(&fixture, 0.1633).unwrap().lower_bound() - 0.01545).abs() < 1e-4;
    let found = window.first().copied();
    let slightly_above = found.is_some_and(|(h, _, _)| h - h_crit <= 0.05);
    let detail = match (found, window.last()) {
        (Some(f), Some(l)) => format!(
            "reentrance for h in [{:.3}, {:.3}]; first at h = {:.3}: bound 0 for T <= 0.01, {:.4} at T = {:.4}; \
             fixture (h = 1.05, T = 0.1633) {}",
            f.0,
            l.0,
            f.0,
            f.2,
            f.1,
            if fixture_ok { "holds" } else { "broken" }
        ),
        _ => "no reentrance window found".into(),
    };
    verdict(7, slightly_above && fixture_ok, &detail);
}

#[test]
fn criterion_08_dense_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut k_mismatch = 0;
    for n in 2..=6u32 {
        let basis = build_schur_basis(n, 10).unwrap();
        let mut previous: Option<(BlockDiagonalState, nalgebra::DMatrix<f64>)> = None;
        for _ in 0..50 {
            let p = XxzParams::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-1.5..1.5),
                n,
            )
            .unwrap();
            let t = rng.gen_range(0.05..4.0);
            let blocks = gibbs_blocks(&p, t).unwrap();
            let (rho, log_z) = gibbs_dense(&dense_hamiltonian(&p, 10).unwrap(), t).unwrap();
            worst = worst.max((blocks.log_z - log_z).abs());
            let projected = basis.blocks_from_dense(&rho).unwrap();
            for (x, y) in blocks.state.flat().iter().zip(projected.iter().flatten()) {
                worst = worst.max((x - y).abs());
            }
            let mb = moments_from_blocks(&blocks.state);
            let md = moments_dense(&to_complex(&rho)).unwrap();
            for k in 0..3 {
                worst = worst.max((mb.mean[k] - md.mean[k]).abs());
                for l in 0..3 {
                    worst = worst.max((mb.second[k][l] - md.second[k][l]).abs());
                }
            }
            let (sb, sd) = (ssi_parameter(&mb), ssi_parameter(&md));
            worst = worst.max((sb.xi - sd.xi).abs()).max((sb.lower_bound - sd.lower_bound).abs());
            if sb.k != sd.k {
                k_mismatch += 1;
            }
            if let Some((prev_b, prev_d)) = &previous {
                let diff = &rho - prev_d;
                let dense_dist = diff.iter().map(|v| v * v).sum::<f64>();
                worst = worst.max((two_norm_distance(&blocks.state, prev_b).unwrap() - dense_dist).abs());
            }
            previous = Some((blocks.state, rho));
        }
    }
    verdict(
        8,
        worst <= 1e-10 && k_mismatch == 0,
        &format!("250 draws, max deviation {worst:.2e}, K mismatches {k_mismatch}"),
    );
}

#[test]
fn criterion_09_certificate_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let bases: Vec<_> = (2..=6u32).map(|n| build_schur_basis(n, 10).unwrap()).collect();
    let (mut sigma_err, mut t_err, mut min_rem, mut sandwich_bad): (f64, f64, f64, usize) = (0.0, 0.0, f64::INFINITY, 0);
    let mut full_runs = 0;
    for run in 0..100u64 {
        let n = rng.gen_range(2..=6u32);
        let p = XxzParams::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-1.0..1.0),
            n,
        )
        .unwrap();
        let t = rng.gen_range(0.02..2.0);
        let target = gibbs_blocks(&p, t).unwrap().state;
        let basis = &bases[(n - 2) as usize];
        let report = if run % 2 == 0 {
            full_runs += 1;
            let opts = FullOptions { restarts: 3, seed: run, max_outer: 60, ..FullOptions::default() };
            upper_bound_full(&target, basis, &opts).unwrap()
        } else {
            upper_bound_simple(&target, &default_k_set(n), &default_theta_grid(24), run % 4 == 1).unwrap()
        };
        let cert = report.certificate();
        let v = verify_certificate(&cert, &target, Some(basis)).unwrap();
        sigma_err = sigma_err.max(v.sigma_error);
        t_err = t_err.max((v.t_bsa - cert.t_bsa).abs());
        if cert.t_bsa > 0.0 {
            min_rem = min_rem.min(v.min_remainder);
        }
        let m = moments_from_blocks(&target);
        for lower in [ssi_parameter(&m), ssi_parameter_with(&m, p.symmetry())] {
            if sandwich_report(&lower, &report).is_err() {
                sandwich_bad += 1;
            }
        }
    }
    let ok = sigma_err <= 1e-10 && t_err <= 1e-10 && min_rem >= -1e-10 && sandwich_bad == 0;
    verdict(
        9,
        ok,
        &format!(
            "100 runs ({full_runs} full): sigma rebuild error {sigma_err:.2e}, t recompute error {t_err:.2e}, \
             smallest remainder cell {min_rem:.2e}, sandwich violations {sandwich_bad}"
        ),
    );
}

#[test]
fn criterion_10_witness_validity_on_separable_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ns: Vec<u32> = (2..=10).chain([200]).collect();
    let (mut worst, mut positive) = (f64::INFINITY, 0usize);
    let total = 10_000;
    for _ in 0..total {
        let n = ns[rng.gen_range(0..ns.len())];
        let d = Descriptor::SimpleAnsatz { k: rng.gen_range(0..=n), theta: rng.gen_range(0.0..std::f64::consts::PI) };
        let m = moments_from_blocks(&d.realize(n, None).unwrap());
        worst = worst.min(evaluate_inequality_set(&m).min());
        if ssi_parameter(&m).lower_bound != 0.0 {
            positive += 1;
        }
    }
    verdict(
        10,
        worst >= -1e-10 && positive == 0,
        &format!("{total} states, smallest facet value {worst:.3e}, nonzero bounds {positive}"),
    );
}
