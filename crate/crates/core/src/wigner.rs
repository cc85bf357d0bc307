//! Wigner small-d matrices `d^J_{m',m}(theta) = <J,m'| exp(-i theta J_y) |J,m>`.
//!
//! `J_y` is tridiagonal with imaginary off-diagonals; conjugating by
//! `diag(i^m)` turns it into a real symmetric tridiagonal matrix `T`. With
//! `T = V diag(lambda) V^T` the rotation is
//! `d_{m',m} = Re[ i^(m'-m) sum_k V_{m'k} V_{mk} exp(-i theta lambda_k) ]`.
//! No factorials appear, so the construction is stable for large `J`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, SymmetricEigen};
use once_cell::sync::Lazy;

/// Spectral decomposition of the real form of `J_y` for one spin.
#[derive(Debug)]
pub(crate) struct YGenerator {
    /// Row index: `Jz` ascending; column index: eigenvalue ascending.
    vecs: DMatrix<f64>,
    lambdas: Vec<f64>,
}

static GENERATORS: Lazy<RwLock<HashMap<u32, Arc<YGenerator>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

fn build_generator(two_j: u32) -> YGenerator {
    let dim = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    let mut t = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim - 1 {
        let m = i as f64 - j;
        let c = (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();
        t[(i + 1, i)] = -0.5 * c;
        t[(i, i + 1)] = -0.5 * c;
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::<f64>::zeros(dim, dim);
    for (k, &src) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(src));
    }
    // the spectrum of J_y is exactly -J..J
    let lambdas = (0..dim).map(|k| k as f64 - j).collect();
    YGenerator { vecs, lambdas }
}

pub(crate) fn generator(two_j: u32) -> Arc<YGenerator> {
    if let Some(g) = GENERATORS.read().unwrap().get(&two_j) {
        return g.clone();
    }
    let g = Arc::new(build_generator(two_j));
    GENERATORS
        .write()
        .unwrap()
        .entry(two_j)
        .or_insert(g)
        .clone()
}

#[inline]
fn phase_select(p: i64, c: f64, s: f64) -> f64 {
    match p.rem_euclid(4) {
        0 => c,
        1 => s,
        2 => -c,
        _ => -s,
    }
}

impl YGenerator {
    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Column `col` of `d^J(theta)`.
    pub(crate) fn column(&self, theta: f64, col: usize) -> Vec<f64> {
        let dim = self.dim();
        let (cw, sw): (Vec<f64>, Vec<f64>) = (0..dim)
            .map(|k| {
                let v = self.vecs[(col, k)];
                let (s, c) = (theta * self.lambdas[k]).sin_cos();
                (v * c, -v * s)
            })
            .unzip();
        (0..dim)
            .map(|row| {
                let mut c = 0.0;
                let mut s = 0.0;
                for k in 0..dim {
                    let v = self.vecs[(row, k)];
                    c += v * cw[k];
                    s += v * sw[k];
                }
                // exp(-i theta lambda) = cos - i sin; c, s hold the real and
                // negated imaginary parts
                phase_select(row as i64 - col as i64, c, -s)
            })
            .collect()
    }
}

/// `d^J(theta)` as a dense matrix (rows and columns `Jz` ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerD {
    pub two_j: u32,
    pub theta: f64,
    pub d: DMatrix<f64>,
}

impl WignerD {
    /// `d^J_{m',m}` addressed by `2m'` and `2m`.
    pub fn get(&self, two_m_row: i32, two_m_col: i32) -> f64 {
        let tj = self.two_j as i32;
        let r = ((two_m_row + tj) / 2) as usize;
        let c = ((two_m_col + tj) / 2) as usize;
        self.d[(r, c)]
    }
}

pub fn wigner_d(two_j: u32, theta: f64) -> WignerD {
    let g = generator(two_j);
    let dim = g.dim();
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim {
        let c = g.column(theta, col);
        for (row, v) in c.into_iter().enumerate() {
            d[(row, col)] = v;
        }
    }
    WignerD { two_j, theta, d }
}
