//! Schur-Weyl kernels: symmetrized `J_z`-product states, rotations inside spin
//! sectors, and an explicit Schur basis for small registers.
//!
//! Computational-basis convention used by every dense routine in the crate:
//! particle `p` (0-based) is bit `N - 1 - p` of the basis index, and bit value
//! `0` is spin up (`j_z = +1/2`).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::blocks::{ln_factorials, m_index, sectors, BlockDiagonalState, SectorIndex};
use crate::error::{domain, Error, Result};
use crate::wigner;

/// Symmetrized `|up>^K |down>^(N-K)`: `alpha_{J,Mz} = 1 / C(N,K)` for `J >= |Mz|`.
pub fn jz_product_state_blocks(n: u32, k: u32) -> Result<BlockDiagonalState> {
    if n == 0 {
        return domain("particle count must be positive");
    }
    if k > n {
        return domain(format!("up-spin count {k} exceeds N = {n}"));
    }
    let two_mz = 2 * k as i32 - n as i32;
    let lf = ln_factorials(n);
    let inv_binom = (lf[k as usize] + lf[(n - k) as usize] - lf[n as usize]).exp();
    let mut alpha: Vec<Vec<f64>> = sectors(n).map(|s| vec![0.0; s.dim()]).collect();
    for s in sectors(n) {
        if s.two_j() as i32 >= two_mz.abs() {
            alpha[s.slot()][m_index(s.two_j(), two_mz)?] = inv_binom;
        }
    }
    BlockDiagonalState::new(n, alpha)
}

/// Rotates every sector by `exp(-i theta J_y)` and twirls over z-rotations:
/// `alpha'_{J,m} = sum_{m'} (d^J_{m,m'}(theta))^2 alpha_{J,m'}`.
pub fn rotate_and_twirl(state: &BlockDiagonalState, theta: f64) -> BlockDiagonalState {
    if theta == 0.0 {
        return state.clone();
    }
    let mut out = BlockDiagonalState::zeros(state.n());
    for (s, a) in sectors(state.n()).zip(state.alpha()) {
        if a.iter().all(|&v| v == 0.0) {
            continue;
        }
        let g = wigner::generator(s.two_j());
        let target = &mut out.alpha_mut()[s.slot()];
        for (col, &v) in a.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (t, d) in target.iter_mut().zip(g.column(theta, col)) {
                *t += d * d * v;
            }
        }
    }
    // rows of d are unit vectors, so the trace is unchanged up to rounding
    BlockDiagonalState::new(out.n(), out.alpha().to_vec())
        .expect("rotation preserves trace and positivity")
}

/// Orthonormal vectors spanning one `(J, Jz)` cell, restricted to the
/// fixed-weight subspace they live in.
#[derive(Debug, Clone)]
struct CellVectors {
    two_j: u32,
    /// `dim(weight subspace) x mu_J`.
    vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct WeightBlock {
    /// Computational-basis indices with this number of up spins, ascending.
    indices: Vec<usize>,
    cells: Vec<CellVectors>,
}

/// Explicit Schur basis `|J, Jz, i_J>` of `N` qubits, grouped by `Jz`.
#[derive(Debug, Clone)]
pub struct SchurBasis {
    n: u32,
    /// Indexed by the number of up spins `k`, i.e. `2 Jz = 2k - N`.
    blocks: Vec<WeightBlock>,
}

pub(crate) fn up_count(n: u32, idx: usize) -> u32 {
    n - idx.count_ones()
}

fn weight_indices(n: u32) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n as usize + 1];
    for idx in 0..(1usize << n) {
        out[up_count(n, idx) as usize].push(idx);
    }
    out
}

/// Eigenvalue clustering tolerance when assigning `J(J+1)` labels.
pub const CASIMIR_TOL: f64 = 1e-8;

/// Builds the Schur basis by diagonalizing `J^2` in every fixed-`Jz` subspace.
///
/// On a fixed weight, `J^2 = 3N/4 - N(N-1)/4 + sum_{i<j} SWAP_ij`, so its
/// matrix is assembled from transpositions alone.
pub fn build_schur_basis(n: u32, n_max: u32) -> Result<SchurBasis> {
    if n == 0 {
        return domain("particle count must be positive");
    }
    if n > n_max {
        return Err(Error::Capability(format!(
            "Schur basis for N = {n} exceeds the dense limit {n_max}"
        )));
    }
    let nf = n as f64;
    let offset = 0.75 * nf - 0.25 * nf * (nf - 1.0);
    let mut position = vec![0usize; 1 << n];
    let mut blocks = Vec::with_capacity(n as usize + 1);
    for (k, indices) in weight_indices(n).into_iter().enumerate() {
        for (p, &idx) in indices.iter().enumerate() {
            position[idx] = p;
        }
        let dim = indices.len();
        let mut j2 = DMatrix::<f64>::zeros(dim, dim);
        for (col, &idx) in indices.iter().enumerate() {
            j2[(col, col)] += offset;
            for a in 0..n {
                for b in a + 1..n {
                    let ba = (idx >> a) & 1;
                    let bb = (idx >> b) & 1;
                    if ba == bb {
                        j2[(col, col)] += 1.0;
                    } else {
                        let swapped = idx ^ (1 << a) ^ (1 << b);
                        j2[(position[swapped], col)] += 1.0;
                    }
                }
            }
        }
        let eig = SymmetricEigen::new(j2);
        let two_mz = 2 * k as i32 - n as i32;
        let mut cells = Vec::new();
        for s in sectors(n) {
            if (s.two_j() as i32) < two_mz.abs() {
                continue;
            }
            let target = s.casimir();
            let cols: Vec<usize> = (0..dim)
                .filter(|&c| (eig.eigenvalues[c] - target).abs() < CASIMIR_TOL)
                .collect();
            let mu = crate::blocks::multiplicity(n, s.two_j())? as usize;
            if cols.len() != mu {
                return Err(Error::Integrity(format!(
                    "N = {n}, 2J = {}, 2Jz = {two_mz}: found {} eigenvectors, expected {mu}",
                    s.two_j(),
                    cols.len()
                )));
            }
            let mut vectors = DMatrix::<f64>::zeros(dim, mu);
            for (i, &c) in cols.iter().enumerate() {
                vectors.set_column(i, &eig.eigenvectors.column(c));
            }
            cells.push(CellVectors {
                two_j: s.two_j(),
                vectors,
            });
        }
        blocks.push(WeightBlock { indices, cells });
    }
    let basis = SchurBasis { n, blocks };
    basis.check_completeness(1e-10)?;
    Ok(basis)
}

impl SchurBasis {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn cell(&self, two_j: u32, two_m: i32) -> Result<(&WeightBlock, &CellVectors)> {
        SectorIndex::new(self.n, two_j)?;
        m_index(two_j, two_m)?;
        let k = ((two_m + self.n as i32) / 2) as usize;
        let block = &self.blocks[k];
        let cell = block
            .cells
            .iter()
            .find(|c| c.two_j == two_j)
            .ok_or_else(|| Error::Integrity(format!("missing cell 2J = {two_j}, 2Jz = {two_m}")))?;
        Ok((block, cell))
    }

    /// Dense projector `P_{J,Jz} = sum_i |J,Jz,i><J,Jz,i|`.
    pub fn projector(&self, two_j: u32, two_m: i32) -> Result<DMatrix<f64>> {
        let (block, cell) = self.cell(two_j, two_m)?;
        let local = &cell.vectors * cell.vectors.transpose();
        let mut p = DMatrix::<f64>::zeros(self.dim(), self.dim());
        for (a, &ia) in block.indices.iter().enumerate() {
            for (b, &ib) in block.indices.iter().enumerate() {
                p[(ia, ib)] = local[(a, b)];
            }
        }
        Ok(p)
    }

    /// Number of basis vectors in the `(J, Jz)` cell.
    pub fn cell_rank(&self, two_j: u32, two_m: i32) -> Result<usize> {
        Ok(self.cell(two_j, two_m)?.1.vectors.ncols())
    }

    /// Checks that the vectors of every weight block form an orthogonal matrix,
    /// which is equivalent to `sum P = 1` together with `P^2 = P`.
    pub fn check_completeness(&self, tol: f64) -> Result<()> {
        let expected = weight_indices(self.n);
        if self.blocks.len() != expected.len() {
            return Err(Error::Integrity("wrong number of weight blocks".into()));
        }
        for (k, (block, idx)) in self.blocks.iter().zip(&expected).enumerate() {
            if &block.indices != idx {
                return Err(Error::Integrity(format!("weight block {k} has wrong support")));
            }
            let dim = idx.len();
            let cols: usize = block.cells.iter().map(|c| c.vectors.ncols()).sum();
            if cols != dim || block.cells.iter().any(|c| c.vectors.nrows() != dim) {
                return Err(Error::Integrity(format!(
                    "weight block {k}: {cols} vectors for a {dim}-dimensional subspace"
                )));
            }
            let mut q = DMatrix::<f64>::zeros(dim, dim);
            let mut off = 0;
            for c in &block.cells {
                q.columns_mut(off, c.vectors.ncols()).copy_from(&c.vectors);
                off += c.vectors.ncols();
            }
            let err = (q.transpose() * &q - DMatrix::<f64>::identity(dim, dim)).amax();
            if !(err <= tol) {
                return Err(Error::Integrity(format!(
                    "weight block {k}: basis not orthonormal (error {err:e})"
                )));
            }
        }
        Ok(())
    }

    /// `<psi| P_{J,Jz} |psi>` for every cell, in [`BlockDiagonalState`] layout.
    pub fn cell_overlaps(&self, psi: &[Complex64]) -> Result<Vec<Vec<f64>>> {
        if psi.len() != self.dim() {
            return domain("state vector has the wrong dimension");
        }
        let mut out: Vec<Vec<f64>> = sectors(self.n).map(|s| vec![0.0; s.dim()]).collect();
        for (k, block) in self.blocks.iter().enumerate() {
            let two_m = 2 * k as i32 - self.n as i32;
            let re: Vec<f64> = block.indices.iter().map(|&i| psi[i].re).collect();
            let im: Vec<f64> = block.indices.iter().map(|&i| psi[i].im).collect();
            for cell in &block.cells {
                let mut acc = 0.0;
                for col in cell.vectors.column_iter() {
                    let mut r = 0.0;
                    let mut i = 0.0;
                    for ((v, x), y) in col.iter().zip(&re).zip(&im) {
                        r += v * x;
                        i += v * y;
                    }
                    acc += r * r + i * i;
                }
                let s = SectorIndex::new(self.n, cell.two_j)?;
                out[s.slot()][m_index(cell.two_j, two_m)?] = acc;
            }
        }
        Ok(out)
    }

    /// Dense `2^N x 2^N` matrix of a block-diagonal operator (state or residual).
    pub fn dense_from_blocks(&self, state: &BlockDiagonalState) -> Result<DMatrix<f64>> {
        if state.n() != self.n {
            return domain("basis and state particle counts differ");
        }
        self.dense_from_alpha(state.alpha())
    }

    /// Dense matrix of `sum alpha_{J,Jz} P_{J,Jz}` for arbitrary real (possibly
    /// negative) coefficients in block layout.
    pub fn dense_from_alpha(&self, alpha: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if alpha.len() != sectors(self.n).count()
            || sectors(self.n).zip(alpha).any(|(s, a)| a.len() != s.dim())
        {
            return domain("coefficient table does not match the basis");
        }
        let mut out = DMatrix::<f64>::zeros(self.dim(), self.dim());
        for (k, block) in self.blocks.iter().enumerate() {
            let two_m = 2 * k as i32 - self.n as i32;
            let dim = block.indices.len();
            let mut local = DMatrix::<f64>::zeros(dim, dim);
            for cell in &block.cells {
                let s = SectorIndex::new(self.n, cell.two_j)?;
                let a = alpha[s.slot()][m_index(cell.two_j, two_m)?];
                if a != 0.0 {
                    local += (&cell.vectors * cell.vectors.transpose()) * a;
                }
            }
            for (x, &ix) in block.indices.iter().enumerate() {
                for (y, &iy) in block.indices.iter().enumerate() {
                    out[(ix, iy)] = local[(x, y)];
                }
            }
        }
        Ok(out)
    }

    /// Projects a dense operator onto the block algebra: `alpha = tr(P rho) / mu`.
    ///
    /// This is the permutation + z-rotation twirl of `rho` read out in block form.
    pub fn blocks_from_dense(&self, rho: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return domain("dense operator has the wrong dimension");
        }
        let mut out: Vec<Vec<f64>> = sectors(self.n).map(|s| vec![0.0; s.dim()]).collect();
        for (k, block) in self.blocks.iter().enumerate() {
            let two_m = 2 * k as i32 - self.n as i32;
            let dim = block.indices.len();
            let local = DMatrix::<f64>::from_fn(dim, dim, |a, b| {
                rho[(block.indices[a], block.indices[b])]
            });
            for cell in &block.cells {
                let v = &cell.vectors;
                let tr = (v.transpose() * &local * v).trace();
                let s = SectorIndex::new(self.n, cell.two_j)?;
                out[s.slot()][m_index(cell.two_j, two_m)?] = tr / v.ncols() as f64;
            }
        }
        Ok(out)
    }

    const MAGIC: &'static [u8; 8] = b"SQZSCHUR";
    const VERSION: u32 = 1;

    /// Writes the basis in a small versioned binary format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(Self::MAGIC);
        buf.extend_from_slice(&Self::VERSION.to_le_bytes());
        buf.extend_from_slice(&self.n.to_le_bytes());
        for block in &self.blocks {
            buf.extend_from_slice(&(block.cells.len() as u32).to_le_bytes());
            for cell in &block.cells {
                buf.extend_from_slice(&cell.two_j.to_le_bytes());
                buf.extend_from_slice(&(cell.vectors.nrows() as u32).to_le_bytes());
                buf.extend_from_slice(&(cell.vectors.ncols() as u32).to_le_bytes());
                for v in cell.vectors.iter() {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    /// Reads a basis written by [`save`](Self::save) and re-validates completeness.
    pub fn load(path: &Path, n_max: u32) -> Result<SchurBasis> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let mut r = ByteReader { buf: &buf, pos: 0 };
        if r.take(8)? != Self::MAGIC {
            return Err(Error::Integrity("not a Schur basis cache".into()));
        }
        let version = r.u32()?;
        if version != Self::VERSION {
            return Err(Error::Integrity(format!("unsupported cache version {version}")));
        }
        let n = r.u32()?;
        if n == 0 || n > n_max {
            return Err(Error::Capability(format!("cached N = {n} outside 1..={n_max}")));
        }
        let mut blocks = Vec::new();
        for indices in weight_indices(n) {
            let ncells = r.u32()? as usize;
            let mut cells = Vec::with_capacity(ncells);
            for _ in 0..ncells {
                let two_j = r.u32()?;
                let rows = r.u32()? as usize;
                let cols = r.u32()? as usize;
                if rows > indices.len() || cols > indices.len() {
                    return Err(Error::Integrity("cell dimensions out of range".into()));
                }
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows * cols {
                    data.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
                }
                cells.push(CellVectors {
                    two_j,
                    vectors: DMatrix::from_vec(rows, cols, data),
                });
            }
            blocks.push(WeightBlock { indices, cells });
        }
        if r.pos != buf.len() {
            return Err(Error::Integrity("trailing bytes in cache".into()));
        }
        let basis = SchurBasis { n, blocks };
        basis.check_completeness(1e-10)?;
        Ok(basis)
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.buf.len() {
            return Err(Error::Integrity("truncated cache".into()));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Single-qubit pure state `(up, down)` amplitudes for a unit Bloch vector.
pub fn qubit_from_bloch(b: [f64; 3]) -> [Complex64; 2] {
    let z = b[2].clamp(-1.0, 1.0);
    let theta = z.acos();
    let phi = b[1].atan2(b[0]);
    [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// Bloch vector of a (not necessarily normalized) qubit state.
pub fn bloch_from_qubit(q: [Complex64; 2]) -> [f64; 3] {
    let norm = q[0].norm_sqr() + q[1].norm_sqr();
    let c = q[0].conj() * q[1];
    [
        2.0 * c.re / norm,
        2.0 * c.im / norm,
        (q[0].norm_sqr() - q[1].norm_sqr()) / norm,
    ]
}

/// Dense vector of a product state `phi_0 (x) ... (x) phi_{N-1}`.
pub fn product_vector(qubits: &[[Complex64; 2]]) -> Vec<Complex64> {
    let n = qubits.len();
    let mut out = vec![Complex64::new(1.0, 0.0); 1 << n];
    for (idx, amp) in out.iter_mut().enumerate() {
        for (p, q) in qubits.iter().enumerate() {
            *amp *= q[(idx >> (n - 1 - p)) & 1];
        }
    }
    out
}

/// Permutation + z-rotation twirl of a pure product state given by Bloch vectors.
pub fn symmetrize_product_state(bloch: &[[f64; 3]], basis: &SchurBasis) -> Result<BlockDiagonalState> {
    if bloch.len() != basis.n() as usize {
        return domain(format!(
            "{} single-qubit states for a basis of N = {}",
            bloch.len(),
            basis.n()
        ));
    }
    for b in bloch {
        let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return domain(format!("Bloch vector of length {norm} is not a pure state"));
        }
    }
    let qubits: Vec<[Complex64; 2]> = bloch.iter().map(|&b| qubit_from_bloch(b)).collect();
    let psi = product_vector(&qubits);
    let mut alpha = basis.cell_overlaps(&psi)?;
    let mu = crate::blocks::multiplicities_f64(basis.n());
    for (a, m) in alpha.iter_mut().zip(mu) {
        for v in a.iter_mut() {
            *v /= m;
        }
    }
    BlockDiagonalState::new(basis.n(), alpha)
}
