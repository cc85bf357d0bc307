//! Dense `2^N`-dimensional operators for small registers.
//!
//! These routines build collective spin operators directly from single-site
//! Pauli matrices and never use the sector formulas, so they serve as the
//! independent reference for the block-diagonal code paths.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::blocks::MomentSummary;
use crate::error::{domain, Result};

type C = Complex64;

const fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Single-qubit spin operators `j_k = sigma_k / 2` in the `(up, down)` basis.
pub const SPIN_HALF: [[[C; 2]; 2]; 3] = [
    [[c(0.0, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]],
    [[c(0.0, 0.0), c(0.0, -0.5)], [c(0.0, 0.5), c(0.0, 0.0)]],
    [[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-0.5, 0.0)]],
];

/// `sum_p op^(p)` on `N` qubits.
pub fn single_site_sum(n: u32, op: &[[C; 2]; 2]) -> DMatrix<C> {
    let dim = 1usize << n;
    let mut out = DMatrix::<C>::zeros(dim, dim);
    for col in 0..dim {
        for p in 0..n {
            let shift = n - 1 - p;
            let b = (col >> shift) & 1;
            for (b_out, row_op) in op.iter().enumerate() {
                let v = row_op[b];
                if v != C::new(0.0, 0.0) {
                    let row = (col & !(1 << shift)) | (b_out << shift);
                    out[(row, col)] += v;
                }
            }
        }
    }
    out
}

/// Collective spin components `J_x, J_y, J_z`.
pub fn collective_spin(n: u32) -> [DMatrix<C>; 3] {
    [
        single_site_sum(n, &SPIN_HALF[0]),
        single_site_sum(n, &SPIN_HALF[1]),
        single_site_sum(n, &SPIN_HALF[2]),
    ]
}

/// Real collective operators `(J_+, J_z)`; `J_- = J_+^T`.
pub fn raising_and_jz(n: u32) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = 1usize << n;
    let mut jp = DMatrix::<f64>::zeros(dim, dim);
    let mut jz = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim {
        for p in 0..n {
            let shift = n - 1 - p;
            if (col >> shift) & 1 == 1 {
                // down -> up
                jp[(col & !(1 << shift), col)] += 1.0;
                jz[(col, col)] -= 0.5;
            } else {
                jz[(col, col)] += 0.5;
            }
        }
    }
    (jp, jz)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C> {
    m.map(|v| C::new(v, 0.0))
}

/// Collective-spin moments of a dense density matrix.
pub fn moments_dense(rho: &DMatrix<C>) -> Result<MomentSummary> {
    let dim = rho.nrows();
    if dim == 0 || !dim.is_power_of_two() || rho.ncols() != dim {
        return domain("density matrix must be square with power-of-two dimension");
    }
    let n = dim.trailing_zeros();
    let ops = collective_spin(n);
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for k in 0..3 {
        mean[k] = (rho * &ops[k]).trace().re;
        for l in 0..3 {
            let sym = &ops[k] * &ops[l] + &ops[l] * &ops[k];
            second[k][l] = 0.5 * (rho * sym).trace().re;
        }
    }
    Ok(MomentSummary { n, mean, second })
}

/// Gibbs state `exp(-H/T) / Z` of a real symmetric Hamiltonian, with `ln Z`.
pub fn gibbs_dense(h: &DMatrix<f64>, temperature: f64) -> Result<(DMatrix<f64>, f64)> {
    if !(temperature > 0.0) {
        return domain("temperature must be positive");
    }
    let eig = SymmetricEigen::new(h.clone());
    let e_min = eig.eigenvalues.min();
    let w = eig.eigenvalues.map(|e| (-(e - e_min) / temperature).exp());
    let z: f64 = w.sum();
    let v = &eig.eigenvectors;
    let rho = v * DMatrix::from_diagonal(&(w / z)) * v.transpose();
    Ok((rho, z.ln() - e_min / temperature))
}

/// Random mixed state: `A A^dag / tr` with Gaussian-ish complex entries.
pub fn random_state<R: Rng>(n: u32, rank: usize, rng: &mut R) -> DMatrix<C> {
    let dim = 1usize << n;
    let a = DMatrix::<C>::from_fn(dim, rank.max(1), |_, _| {
        C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    rho / C::new(tr, 0.0)
}
