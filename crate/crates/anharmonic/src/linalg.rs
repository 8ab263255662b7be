//! Small dense linear-algebra helpers shared by the oracle, the perturbation
//! engine and the effective models.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Column k is the eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with eigenpairs sorted ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> EigenPairs {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    EigenPairs { values, vectors }
}

/// Propagate `psi0` under a real symmetric matrix `h` (angular units, ħ = 1)
/// to every instant in `times`, via full eigendecomposition:
/// ψ(t) = Σ_k e^{−i ε_k t} ⟨ε_k|ψ0⟩ |ε_k⟩.
pub fn dense_propagate(
    h: &DMatrix<f64>,
    psi0: &[Complex64],
    times: &[f64],
) -> Vec<Vec<Complex64>> {
    let eig = symmetric_eigen(h);
    let n = h.nrows();
    assert_eq!(psi0.len(), n);
    // coefficients c_k = <eps_k | psi0>
    let re = DVector::from_iterator(n, psi0.iter().map(|z| z.re));
    let im = DVector::from_iterator(n, psi0.iter().map(|z| z.im));
    let c_re = eig.vectors.transpose() * re;
    let c_im = eig.vectors.transpose() * im;
    times
        .iter()
        .map(|&t| {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for k in 0..n {
                let phase = Complex64::from_polar(1.0, -eig.values[k] * t);
                let ck = Complex64::new(c_re[k], c_im[k]) * phase;
                let col = eig.vectors.column(k);
                for (o, v) in out.iter_mut().zip(col.iter()) {
                    *o += ck * v;
                }
            }
            out
        })
        .collect()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
