//! Generalized spin-squeezing inequalities and the BSA lower bound they certify.
//!
//! With the covariance matrix `Gamma` and
//! `X = Gamma + <{J_k, J_l}>/(2(N-1)) - N^2/(4(N-1)) 1`, the optimal inequality
//! for a state subtracts the `K` positive eigenvalues of `X`:
//! `xi = tr Gamma - sum_{lambda > 0} lambda - N/2`. Dividing by the most
//! negative value the selected facet can reach (`B_K`) turns the violation
//! into a lower bound on the BSA.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::blocks::MomentSummary;

/// Left-hand sides of the four inequality families, evaluated along the
/// principal axes of `X` (axis order follows [`SsiResult::x_eigenvalues`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacetValues {
    /// `sum_k (Delta J_k)^2 - N/2`.
    pub total_variance: f64,
    /// Entry `m`: `(Delta J_k)^2 + (Delta J_l)^2 - <J_m^2>/(N-1) - N(N-2)/(4(N-1))`.
    pub pair: [f64; 3],
    /// Entry `k`: `(Delta J_k)^2 - (<J_l^2> + <J_m^2>)/(N-1) + N/(2(N-1))`.
    pub single: [f64; 3],
    /// `N(N+2)/4 - sum_k <J_k^2>`.
    pub total_spin: f64,
}

impl FacetValues {
    pub fn min(&self) -> f64 {
        self.pair
            .iter()
            .chain(&self.single)
            .fold(self.total_variance.min(self.total_spin), |a, &b| a.min(b))
    }

    /// Largest facet violation, each family normalized by its extremal value.
    pub fn normalized_violation(&self, n: u32) -> f64 {
        let mut best = 0.0f64;
        let b0 = normalization(n, 0);
        let b1 = normalization(n, 1);
        let b2 = normalization(n, 2);
        if b0 > 0.0 {
            best = best.max(-self.total_variance / b0);
        }
        if b1 > 0.0 {
            for v in self.pair {
                best = best.max(-v / b1);
            }
        }
        if b2 > 0.0 {
            for v in self.single {
                best = best.max(-v / b2);
            }
        }
        best
    }
}

/// Outcome of the optimal spin-squeezing inequality for one moment summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsiResult {
    /// Number of positive eigenvalues of `X`.
    #[serde(rename = "K")]
    pub k: u8,
    pub xi: f64,
    #[serde(rename = "B_K")]
    pub b_k: f64,
    pub lower_bound: f64,
    /// Eigenvalues of `X`, ascending.
    pub x_eigenvalues: [f64; 3],
    pub facet_values: FacetValues,
}

fn to_matrix(a: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

/// `Gamma_kl = <{J_k, J_l}>/2 - <J_k><J_l>`.
pub fn gamma_matrix(m: &MomentSummary) -> Matrix3<f64> {
    Matrix3::from_fn(|k, l| m.second[k][l] - m.mean[k] * m.mean[l])
}

/// `X = Gamma + <{J_k, J_l}>/(2(N-1)) - N^2/(4(N-1)) delta_kl`.
///
/// # Panics
/// If `N < 2`.
pub fn x_matrix(m: &MomentSummary) -> Matrix3<f64> {
    assert!(m.n >= 2, "X is undefined for N < 2");
    let n = m.n as f64;
    gamma_matrix(m) + to_matrix(&m.second) / (n - 1.0)
        - Matrix3::identity() * (n * n / (4.0 * (n - 1.0)))
}

/// `B_K = N/2 - K N^2/(4(N-1)) + K(K-1) N(N+2)/(8(N-1))`.
pub fn normalization(n: u32, k: u8) -> f64 {
    let n = n as f64;
    let k = k as f64;
    n / 2.0 - k * n * n / (4.0 * (n - 1.0)) + n * (n + 2.0) / (8.0 * (n - 1.0)) * k * (k - 1.0)
}

/// Symmetry shared by the target state and, after twirling, by the remainder
/// of its best decomposition. Restricting the remainder tightens the
/// normalization for odd `N`; for even `N` all three choices coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    /// No assumption: the closed-form `B_K`.
    #[default]
    General,
    /// Permutations and rotations about `z`.
    Axial,
    /// Permutations and all collective rotations.
    Isotropic,
}

/// Facet values `(i)`, `(ii)` and `(iii)` with `z` distinguished, for the
/// normalized cell state `|J,m><J,m| (x) 1/mu_J`.
fn cell_facets(n: f64, j: f64, m: f64) -> [f64; 3] {
    let casimir = j * (j + 1.0);
    [
        casimir - m * m - n / 2.0,
        casimir - m * m - m * m / (n - 1.0) - n * (n - 2.0) / (4.0 * (n - 1.0)),
        -(casimir - m * m) / (n - 1.0) + n / (2.0 * (n - 1.0)),
    ]
}

/// Largest violation of the `K`-facet over states with the given symmetry.
///
/// For [`Symmetry::Axial`] the facets are concave in the state, so the
/// minimum sits on an extreme point, i.e. a single `(J, Jz)` cell. For
/// [`Symmetry::Isotropic`] only `K = 0` occurs and the minimum is
/// `min_J J(J+1) - N/2`.
pub fn normalization_for(n: u32, k: u8, symmetry: Symmetry) -> f64 {
    match (symmetry, k) {
        (Symmetry::General, _) | (_, 3..) => normalization(n, k),
        (Symmetry::Isotropic, 0) => {
            let j_min = (n % 2) as f64 / 2.0;
            n as f64 / 2.0 - j_min * (j_min + 1.0)
        }
        _ => {
            let nf = n as f64;
            let mut lowest = f64::INFINITY;
            for two_j in (n % 2..=n).step_by(2) {
                let j = two_j as f64 / 2.0;
                for i in 0..=two_j {
                    let m = i as f64 - j;
                    lowest = lowest.min(cell_facets(nf, j, m)[k as usize]);
                }
            }
            (-lowest).max(0.0)
        }
    }
}

/// `xi` above `-1e-12 N^2` is treated as rounding noise around zero.
pub fn xi_tolerance(n: u32) -> f64 {
    1e-12 * (n as f64).powi(2).max(1.0)
}

/// Eigenvalues at or below `1e-10 N^2` count as non-positive.
pub fn zero_tolerance(n: u32) -> f64 {
    1e-10 * (n as f64) * (n as f64)
}

fn sorted_eigen(x: Matrix3<f64>) -> ([f64; 3], Matrix3<f64>) {
    let eig = SymmetricEigen::new(x);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    let vecs = Matrix3::from_fn(|i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

fn facets_in_frame(m: &MomentSummary) -> FacetValues {
    let n = m.n as f64;
    let var: [f64; 3] = std::array::from_fn(|k| m.second[k][k] - m.mean[k] * m.mean[k]);
    let sq: [f64; 3] = std::array::from_fn(|k| m.second[k][k]);
    let others = |k: usize| [(k + 1) % 3, (k + 2) % 3];
    FacetValues {
        total_variance: var.iter().sum::<f64>() - n / 2.0,
        pair: std::array::from_fn(|mm| {
            let [k, l] = others(mm);
            var[k] + var[l] - sq[mm] / (n - 1.0) - n * (n - 2.0) / (4.0 * (n - 1.0))
        }),
        single: std::array::from_fn(|k| {
            let [l, mm] = others(k);
            var[k] - (sq[l] + sq[mm]) / (n - 1.0) + n / (2.0 * (n - 1.0))
        }),
        total_spin: n * (n + 2.0) / 4.0 - sq.iter().sum::<f64>(),
    }
}

/// Left-hand sides of every inequality family along the principal axes of `X`.
pub fn evaluate_inequality_set(m: &MomentSummary) -> FacetValues {
    let (_, vecs) = sorted_eigen(x_matrix(m));
    let r: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| vecs[(j, i)]));
    facets_in_frame(&m.rotated(&r))
}

/// The optimal spin-squeezing parameter and the BSA lower bound it implies,
/// normalized by the closed-form `B_K`.
pub fn ssi_parameter(m: &MomentSummary) -> SsiResult {
    ssi_parameter_with(m, Symmetry::General)
}

/// As [`ssi_parameter`], with `B_K` taken over remainders of the given symmetry.
/// The caller vouches that the state has that symmetry.
pub fn ssi_parameter_with(m: &MomentSummary, symmetry: Symmetry) -> SsiResult {
    let x = x_matrix(m);
    let (vals, vecs) = sorted_eigen(x);
    let eps = zero_tolerance(m.n);
    let positive: Vec<f64> = vals.iter().copied().filter(|&v| v > eps).collect();
    let k = positive.len() as u8;
    let n = m.n as f64;
    let xi = gamma_matrix(m).trace() - positive.iter().sum::<f64>() - n / 2.0;
    let b_k = normalization_for(m.n, k, symmetry);
    // K = 3 is the total-spin facet, which no state violates
    let lower_bound = if k == 3 || b_k <= 0.0 || xi >= -xi_tolerance(m.n) {
        0.0
    } else {
        (-xi / b_k).max(0.0)
    };
    let r: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| vecs[(j, i)]));
    SsiResult {
        k,
        xi,
        b_k,
        lower_bound,
        x_eigenvalues: vals,
        facet_values: facets_in_frame(&m.rotated(&r)),
    }
}
