//! Sparse Hermitian operators in a fixed Fock basis.
//!
//! All couplings of the Bose-Hubbard Hamiltonian are real in the Fock basis,
//! so operators are stored as real symmetric CSR matrices; complex arithmetic
//! enters only during propagation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{Basis, FockState};
use crate::lattice::{DisorderConvention, LatticeGraph};
use crate::{Error, Result};

/// Row-compressed real sparse matrix with a Hermitian flag.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Build from per-row (column, value) entry lists. Rows are sorted by
    /// column; duplicate columns within a row are summed.
    pub fn from_rows(dim: usize, mut rows: Vec<Vec<(usize, f64)>>, hermitian: bool) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut v = row[k].1;
                let mut k2 = k + 1;
                while k2 < row.len() && row[k2].0 == col {
                    v += row[k2].1;
                    k2 += 1;
                }
                if v != 0.0 {
                    col_idx.push(col);
                    values.push(v);
                }
                k = k2;
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            hermitian,
        }
    }

    pub fn diagonal(dim: usize, diag: &[f64]) -> Self {
        assert_eq!(diag.len(), dim);
        let rows = diag.iter().map(|&v| vec![(0usize, v)]).collect::<Vec<_>>();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.into_iter().map(|(_, v)| (i, v)).collect())
            .collect();
        SparseOperator::from_rows(dim, rows, true)
    }

    pub fn identity(dim: usize) -> Self {
        SparseOperator::diagonal(dim, &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Iterate the nonzero entries of one row.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// y = A·x for a real vector.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "operator dim {} vs vector len {}",
                self.dim,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// y = A·x for a complex vector (A real).
    pub fn apply_complex(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "operator dim {} vs vector len {}",
                self.dim,
                x.len()
            )));
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for i in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// ⟨x|A|x⟩ for a Hermitian operator; returns the real part after checking
    /// the imaginary residue is at rounding level.
    pub fn expectation(&self, x: &[Complex64]) -> Result<f64> {
        if !self.hermitian {
            return Err(Error::Domain(
                "expectation value requires a Hermitian operator".into(),
            ));
        }
        let y = self.apply_complex(x)?;
        let val: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let scale = self.inf_norm() * x.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if val.im.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!(
                "expectation value has imaginary residue {:e}",
                val.im
            )));
        }
        Ok(val.re)
    }

    /// Max absolute row sum; an upper bound for the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                self.row(i).map(|(_, v)| v.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Mean of the diagonal, used to center the spectrum before propagation.
    pub fn diagonal_mean(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        (0..self.dim).map(|i| self.entry(i, i)).sum::<f64>() / self.dim as f64
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Coordinate-list text dump `row col value`, 0-based, one entry per line.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                out.push_str(&format!("{i} {j} {v:.17e}\n"));
            }
        }
        out
    }
}

/// Diagonal energy of one Fock state (rad/s), including disorder terms under
/// the graph's convention.
pub fn diagonal_energy(graph: &LatticeGraph, state: &FockState) -> f64 {
    let mut e = 0.0;
    for (site, &n) in graph.sites.iter().zip(state.occupations()) {
        let n = n as f64;
        let pair = n * (n - 1.0);
        e += (site.omega + site.delta_omega) * n - site.u * pair / 2.0;
        e += match graph.convention {
            DisorderConvention::HalfNegative => -site.delta_u * pair / 2.0,
            DisorderConvention::PlainPositive => site.delta_u * pair,
        };
    }
    e
}

/// Full Bose-Hubbard Hamiltonian of `graph` in `basis` (rad/s, ħ = 1).
pub fn build_hamiltonian(graph: &LatticeGraph, basis: &Basis) -> Result<SparseOperator> {
    if graph.len() != basis.sites() {
        return Err(Error::Dimension(format!(
            "graph has {} sites, basis has {}",
            graph.len(),
            basis.sites()
        )));
    }
    let dim = basis.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (i, state) in basis.states().iter().enumerate() {
        rows[i].push((i, diagonal_energy(graph, state)));
        for &(a, b, j) in &graph.edges {
            for (from, to) in [(a, b), (b, a)] {
                if let Some((target, amp)) = basis.hop(state, from, to) {
                    let t = basis.rank(&target).expect("hop stays in the basis");
                    rows[i].push((t, j * amp));
                }
            }
        }
    }
    Ok(SparseOperator::from_rows(dim, rows, true))
}

/// Diagonal occupation operator n_site.
pub fn local_number(basis: &Basis, site: usize) -> Result<SparseOperator> {
    if site >= basis.sites() {
        return Err(Error::Dimension(format!(
            "site {site} out of range for {} sites",
            basis.sites()
        )));
    }
    let diag: Vec<f64> = basis
        .states()
        .iter()
        .map(|s| s.occupations()[site] as f64)
        .collect();
    Ok(SparseOperator::diagonal(basis.len(), &diag))
}

/// Total number operator; N·identity on a fixed-N basis.
pub fn total_number(basis: &Basis) -> SparseOperator {
    let diag = vec![basis.bosons() as f64; basis.len()];
    SparseOperator::diagonal(basis.len(), &diag)
}
