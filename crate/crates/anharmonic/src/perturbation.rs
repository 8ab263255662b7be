//! High-order degenerate perturbation engine for anharmonicity manifolds.
//!
//! The projected problem on a manifold with anharmonicity A reads
//!
//! ```text
//! H_A(E) = ħUA + Σ_m K_m(E),
//! K_m(E) = P (H_J + H_D) [W(E) (H_J + H_D)]^{m−1} P,
//! W(E)   = [Q (E − H_U) Q]^{−1},
//! ```
//!
//! with P/Q the projectors onto the manifold and its complement and H_D the
//! diagonal disorder part (which drops out of the boundary slots of K_m
//! because it cannot leave the manifold). Expanding `E = E₀ + ΔE` gives
//! `W(E) = Σ_k (−ΔE)^k W₀^{k+1}`; ΔE is a scalar per degenerate subspace, so
//! the k-th expansion term carries the formal orders of the energy
//! corrections collected in it. The n-th order Hamiltonian is
//! `H_A^(n) = Σ_{m≤n} K_m^{(n−m)}`, evaluated matrix-free: diagonal W weights
//! on the complement alternating with sparse hop applications, with an
//! order-budget ledger per chain component.
//!
//! [`resolve_manifold`] then runs the recursive eigen-split: diagonalize
//! `H_A^(n)` within each still-degenerate subspace, cluster the eigenvalues,
//! and recurse until all degeneracy is lifted or `n_max` is reached.

use nalgebra::DMatrix;

use crate::fock::{manifold, Basis, FockState, Manifold};
use crate::hamiltonian::{diagonal_energy, SparseOperator};
use crate::lattice::LatticeGraph;
use crate::linalg::symmetric_eigen;
use crate::{Error, Result};

pub const DEFAULT_N_MAX: usize = 6;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Manifold-projected perturbation problem.
#[derive(Debug, Clone)]
pub struct ProjectedProblem {
    manifold: Manifold,
    member_states: Vec<FockState>,
    dim_full: usize,
    /// full index → manifold position (usize::MAX outside)
    position: Vec<usize>,
    /// pure hopping operator H_J (no diagonal)
    hop: SparseOperator,
    /// diagonal disorder Hamiltonian H_D (δω and δU terms)
    disorder_diag: Vec<f64>,
    has_disorder: bool,
    /// W₀ weights: 1/(ħUA − ħU A(s)) on the complement, 0 on the manifold
    w0: Vec<f64>,
    /// unperturbed interaction diagonal ħU A(s)
    hu_diag: Vec<f64>,
    /// ħUA of the manifold (interaction frame)
    e0_interaction: f64,
    /// constant ω N offset added back to reported absolute energies
    omega_offset: f64,
    u_base: f64,
    j_char: f64,
}

impl ProjectedProblem {
    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn member_states(&self) -> &[FockState] {
        &self.member_states
    }

    pub fn dim(&self) -> usize {
        self.manifold.len()
    }

    pub fn complement_dim(&self) -> usize {
        self.dim_full - self.manifold.len()
    }

    /// Zeroth-order energy ħUA + ωN (rad/s).
    pub fn e0(&self) -> f64 {
        self.e0_interaction + self.omega_offset
    }

    /// W₀ weight of a complement state.
    pub fn w0_weight(&self, state: &FockState) -> Result<f64> {
        let basis = Basis::enumerate(state.sites(), state.total_bosons())?;
        let idx = basis.rank(state)?;
        Ok(self.w0[idx])
    }

    pub fn disorder_diagonal(&self, full_index: usize) -> f64 {
        self.disorder_diag[full_index]
    }

    pub fn has_disorder(&self) -> bool {
        self.has_disorder
    }

    /// Characteristic magnitude ħU (J/U)^n of an order-n matrix element.
    pub fn order_scale(&self, n: usize) -> f64 {
        if self.u_base == 0.0 {
            return 0.0;
        }
        self.u_base.abs() * (self.j_char / self.u_base).abs().powi(n as i32)
    }

    fn apply_h1(&self, v: &[f64]) -> Vec<f64> {
        let mut y = self.hop.apply(v).expect("dimension fixed at build");
        if self.has_disorder {
            for (yi, (vi, di)) in y.iter_mut().zip(v.iter().zip(&self.disorder_diag)) {
                *yi += di * vi;
            }
        }
        y
    }

    fn lift(&self, v: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.dim_full];
        for (pos, &member) in self.manifold.members.iter().enumerate() {
            full[member] = v[pos];
        }
        full
    }

    fn project(&self, full: &[f64]) -> Vec<f64> {
        self.manifold
            .members
            .iter()
            .map(|&member| full[member])
            .collect()
    }

    /// Diagonal W expansion terms W^[p] for p = 0..=p_max, given the energy
    /// history (E^(1), E^(2), …) of the current subspace.
    fn w_expansion(&self, history: &[f64], p_max: usize) -> Vec<Vec<f64>> {
        let dim = self.dim_full;
        let mut terms = vec![vec![0.0; dim]; p_max + 1];
        terms[0].copy_from_slice(&self.w0);
        if p_max == 0 {
            return terms;
        }
        // ΔE(x) = Σ_j history[j−1] x^j as a truncated polynomial
        let mut delta = vec![0.0; p_max + 1];
        for (j, &e) in history.iter().enumerate() {
            if j + 1 <= p_max {
                delta[j + 1] = e;
            }
        }
        // powers of W₀ on the complement
        let mut w0_pow = vec![self.w0.clone()];
        for k in 1..=p_max {
            let next: Vec<f64> = w0_pow[k - 1]
                .iter()
                .zip(&self.w0)
                .map(|(a, b)| a * b)
                .collect();
            w0_pow.push(next);
        }
        // W(E) = Σ_k (−ΔE)^k W₀^{k+1}; collect by formal order p
        let mut delta_pow = delta.clone(); // ΔE^1
        for k in 1..=p_max {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for p in k..=p_max {
                let c = sign * delta_pow[p];
                if c != 0.0 {
                    for (t, w) in terms[p].iter_mut().zip(&w0_pow[k]) {
                        *t += c * w;
                    }
                }
            }
            if k < p_max {
                delta_pow = poly_mul(&delta_pow, &delta, p_max);
            }
        }
        terms
    }

    /// Apply H_A^(n) = Σ_{m=1}^{n} K_m^{(n−m)} to a manifold-coordinate
    /// vector, with the subspace's energy history driving the W expansion.
    fn order_apply(&self, history: &[f64], n: usize, v: &[f64]) -> Result<Vec<f64>> {
        if n == 0 {
            return Ok(v.to_vec());
        }
        if history.len() < n - 1 {
            return Err(Error::Sequencing(format!(
                "order {n} needs {} previous energies, got {}",
                n - 1,
                history.len()
            )));
        }
        let w = self.w_expansion(&history[..n - 1], n.saturating_sub(1));
        let mut y = vec![0.0; self.dim()];
        // chain[q] holds the total-order-q component of H1 (W H1)^{m−1} v
        let mut chain: Vec<Option<Vec<f64>>> = vec![None; n + 1];
        chain[1] = Some(self.apply_h1(&self.lift(v)));
        if n == 1 {
            let proj = self.project(chain[1].as_ref().unwrap());
            for (yi, p) in y.iter_mut().zip(proj) {
                *yi += p;
            }
            return Ok(y);
        }
        for m in 2..=n {
            let mut next: Vec<Option<Vec<f64>>> = vec![None; n + 1];
            for q_before in (m - 1)..=(n - 1) {
                let mut acc: Option<Vec<f64>> = None;
                for p in 0..=(q_before - (m - 1)) {
                    if let Some(c) = &chain[q_before - p] {
                        let acc = acc.get_or_insert_with(|| vec![0.0; self.dim_full]);
                        for (a, (wi, ci)) in acc.iter_mut().zip(w[p].iter().zip(c)) {
                            *a += wi * ci;
                        }
                    }
                }
                if let Some(a) = acc {
                    next[q_before + 1] = Some(self.apply_h1(&a));
                }
            }
            chain = next;
            if let Some(c) = &chain[n] {
                let proj = self.project(c);
                for (yi, p) in y.iter_mut().zip(proj) {
                    *yi += p;
                }
            }
        }
        Ok(y)
    }

    /// Order-n matrix element ⟨bra| K_n^{(0)} |ket⟩ between manifold Fock
    /// states, with the zeroth-order W weights.
    pub fn extract_coupling(&self, bra: &FockState, ket: &FockState, n: usize) -> Result<f64> {
        let bra_pos = self.member_position(bra)?;
        let ket_pos = self.member_position(ket)?;
        let mut v = vec![0.0; self.dim()];
        v[ket_pos] = 1.0;
        let zeros = vec![0.0; n.saturating_sub(1)];
        let y = self.order_apply(&zeros, n, &v)?;
        Ok(y[bra_pos])
    }

    fn member_position(&self, state: &FockState) -> Result<usize> {
        let found = self.member_states.iter().position(|s| s == state);
        found.ok_or_else(|| Error::Membership(format!("{state} is not in the manifold")))
    }
}

fn poly_mul(a: &[f64], b: &[f64], deg_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; deg_max + 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j > deg_max {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Build the projected problem for the manifold with anharmonicity `a`.
pub fn build_projected(basis: &Basis, graph: &LatticeGraph, a: i64) -> Result<ProjectedProblem> {
    if graph.len() != basis.sites() {
        return Err(Error::Dimension(format!(
            "graph has {} sites, basis has {}",
            graph.len(),
            basis.sites()
        )));
    }
    let mf = manifold(basis, a);
    if mf.is_empty() {
        return Err(Error::Manifold(format!(
            "no states with anharmonicity {a} in this basis"
        )));
    }
    let (omega, u) = graph.uniform_base()?;
    let dim = basis.len();

    // pure hopping operator, no diagonal
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (i, state) in basis.states().iter().enumerate() {
        for &(ea, eb, j) in &graph.edges {
            for (from, to) in [(ea, eb), (eb, ea)] {
                if let Some((target, amp)) = basis.hop(state, from, to) {
                    let t = basis.rank(&target).expect("hop stays in basis");
                    rows[i].push((t, j * amp));
                }
            }
        }
    }
    let hop = SparseOperator::from_rows(dim, rows, true);

    let n_total = basis.bosons() as f64;
    let mut disorder_diag = vec![0.0; dim];
    let mut hu_diag = vec![0.0; dim];
    for (i, state) in basis.states().iter().enumerate() {
        let a_s = state.anharmonicity() as f64;
        hu_diag[i] = u * a_s;
        disorder_diag[i] = diagonal_energy(graph, state) - (omega * n_total + u * a_s);
    }
    let has_disorder = disorder_diag.iter().any(|&d| d.abs() > 0.0);

    let e0_interaction = u * a as f64;
    let mut position = vec![usize::MAX; dim];
    for (pos, &member) in mf.members.iter().enumerate() {
        position[member] = pos;
    }
    let mut w0 = vec![0.0; dim];
    for (i, w) in w0.iter_mut().enumerate() {
        if position[i] == usize::MAX {
            *w = 1.0 / (e0_interaction - hu_diag[i]);
        }
    }
    let member_states = mf.members.iter().map(|&i| basis.state(i).clone()).collect();
    let j_char = graph
        .edges
        .iter()
        .map(|&(_, _, j)| j.abs())
        .fold(0.0, f64::max);

    Ok(ProjectedProblem {
        manifold: mf,
        member_states,
        dim_full: dim,
        position,
        hop,
        disorder_diag,
        has_disorder,
        w0,
        hu_diag,
        e0_interaction,
        omega_offset: omega * n_total,
        u_base: u,
        j_char,
    })
}

/// The n-th order Hamiltonian projected onto an orthonormal `subspace`
/// (vectors in manifold coordinates), given the subspace's energy history
/// E^(1..n−1).
pub fn order_hamiltonian(
    problem: &ProjectedProblem,
    subspace: &[Vec<f64>],
    n: usize,
    energy_history: &[f64],
) -> Result<DMatrix<f64>> {
    let k = subspace.len();
    let mut m = DMatrix::zeros(k, k);
    for (col, v) in subspace.iter().enumerate() {
        let y = problem.order_apply(energy_history, n, v)?;
        for (row, u) in subspace.iter().enumerate() {
            m[(row, col)] = u.iter().zip(&y).map(|(a, b)| a * b).sum();
        }
    }
    // symmetric up to rounding; the composition sum is closed under reversal
    let mt = m.transpose();
    Ok((m + mt) * 0.5)
}

/// One subspace in the recursive degeneracy resolution.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Order at which this subspace was isolated (0 for the root).
    pub order: usize,
    /// Energy attached at that order: E₀ for the root, E^(order) otherwise.
    pub energy: f64,
    /// Orthonormal basis vectors of the subspace, in manifold coordinates.
    pub basis: Vec<Vec<f64>>,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Result of [`resolve_manifold`].
#[derive(Debug, Clone)]
pub struct DegeneracyTree {
    pub root: TreeNode,
    pub n_max: usize,
    pub cluster_tol: f64,
}

/// A resolved (or degenerate-at-n_max) leaf.
#[derive(Debug, Clone)]
pub struct Leaf {
    /// Zeroth-order eigenvectors spanning the leaf (manifold coordinates).
    pub vectors: Vec<Vec<f64>>,
    /// (order, E^(order)) corrections along the path, root first.
    pub energies: Vec<(usize, f64)>,
    /// Absolute energy: E₀ plus all corrections through the leaf's order.
    pub total_energy: f64,
    /// True when the degeneracy was fully lifted (dim 1).
    pub resolved: bool,
}

impl DegeneracyTree {
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        collect_leaves(&self.root, &mut path, &mut out);
        out
    }

    /// Structured text dump: one line per node.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        dump_node(&self.root, 0, &mut out);
        out
    }
}

fn collect_leaves(node: &TreeNode, path: &mut Vec<(usize, f64)>, out: &mut Vec<Leaf>) {
    path.push((node.order, node.energy));
    if node.is_leaf() {
        out.push(Leaf {
            vectors: node.basis.clone(),
            energies: path.clone(),
            total_energy: path.iter().map(|&(_, e)| e).sum(),
            resolved: node.dim() == 1,
        });
    } else {
        for child in &node.children {
            collect_leaves(child, path, out);
        }
    }
    path.pop();
}

fn dump_node(node: &TreeNode, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    out.push_str(&format!(
        "{indent}node order={} dim={} energy_MHz={:.9}\n",
        node.order,
        node.dim(),
        crate::units::to_mhz(node.energy)
    ));
    for child in &node.children {
        dump_node(child, depth + 1, out);
    }
}

/// Recursive order-by-order resolution of a manifold.
///
/// At each node the next-order Hamiltonian is diagonalized within the
/// subspace; eigenvalues closer than `cluster_tol` times the order's
/// characteristic scale ħU (J/U)^n form one cluster. Clusters of dimension 1
/// are resolved leaves; unresolved clusters recurse until `n_max`, where they
/// remain as degenerate leaves.
pub fn resolve_manifold(
    problem: &ProjectedProblem,
    n_max: usize,
    cluster_tol: f64,
) -> Result<DegeneracyTree> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let d = problem.dim();
    let mut root = TreeNode {
        order: 0,
        energy: problem.e0(),
        basis: (0..d)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                v
            })
            .collect(),
        children: Vec::new(),
    };
    let mut history = Vec::new();
    resolve_node(problem, &mut root, &mut history, 1, n_max, cluster_tol)?;
    Ok(DegeneracyTree {
        root,
        n_max,
        cluster_tol,
    })
}

fn resolve_node(
    problem: &ProjectedProblem,
    node: &mut TreeNode,
    history: &mut Vec<f64>,
    n: usize,
    n_max: usize,
    cluster_tol: f64,
) -> Result<()> {
    if node.dim() <= 1 || n > n_max {
        return Ok(());
    }
    let m = order_hamiltonian(problem, &node.basis, n, history)?;
    let eig = symmetric_eigen(&m);
    let tol = cluster_tol * problem.order_scale(n);
    let k = node.dim();

    // group sorted eigenvalues into clusters
    let mut clusters: Vec<(usize, usize)> = Vec::new(); // [start, end)
    let mut start = 0;
    for i in 1..k {
        if eig.values[i] - eig.values[i - 1] > tol {
            clusters.push((start, i));
            start = i;
        }
    }
    clusters.push((start, k));

    for &(lo, hi) in &clusters {
        let e_n = eig.values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        // child basis: rotate the parent vectors by the eigenvector columns
        let basis: Vec<Vec<f64>> = (lo..hi)
            .map(|col| {
                let mut v = vec![0.0; problem.dim()];
                for (i, parent) in node.basis.iter().enumerate() {
                    let c = eig.vectors[(i, col)];
                    for (vi, pi) in v.iter_mut().zip(parent) {
                        *vi += c * pi;
                    }
                }
                v
            })
            .collect();
        let mut child = TreeNode {
            order: n,
            energy: e_n,
            basis,
            children: Vec::new(),
        };
        history.push(e_n);
        resolve_node(problem, &mut child, history, n + 1, n_max, cluster_tol)?;
        history.pop();
        node.children.push(child);
    }
    Ok(())
}

/// Effective Hamiltonian Σ_leaves E |E⁰⟩⟨E⁰| on the manifold (absolute
/// energies, rad/s). Degenerate leaves contribute their common energy times
/// the subspace projector.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    /// Manifold member ranks into the parent basis.
    pub members: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

pub fn effective_hamiltonian(tree: &DegeneracyTree, problem: &ProjectedProblem) -> EffectiveHamiltonian {
    let d = problem.dim();
    let mut m = DMatrix::zeros(d, d);
    for leaf in tree.leaves() {
        for v in &leaf.vectors {
            for i in 0..d {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    m[(i, j)] += leaf.total_energy * v[i] * v[j];
                }
            }
        }
    }
    EffectiveHamiltonian {
        members: problem.manifold.members.clone(),
        matrix: m,
    }
}

impl EffectiveHamiltonian {
    /// Coordinate-list text dump `row col value`, 0-based.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    out.push_str(&format!("{i} {j} {v:.17e}\n"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NonlinearOptions {
    /// Truncation of the K_m series.
    pub m_cut: usize,
    pub max_iter: usize,
    pub tol_rel: f64,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        NonlinearOptions {
            m_cut: 2 * DEFAULT_N_MAX,
            max_iter: 200,
            tol_rel: 1e-13,
        }
    }
}

/// Self-consistent solve of the exact projected problem H_A(E) ψ = E ψ.
///
/// For each sorted eigenvalue index the energy is iterated through
/// `E ← λ_k(H_A(E))`, with the K series truncated at `m_cut`. Returns
/// converged absolute energies (rad/s). Serves as an oracle against full
/// dense diagonalization.
pub fn nonlinear_projected_solve(
    problem: &ProjectedProblem,
    opts: &NonlinearOptions,
) -> Result<Vec<f64>> {
    let d = problem.dim();
    if d > 500 {
        return Err(Error::Capacity(format!(
            "nonlinear solve limited to manifolds of dim 500, got {d}"
        )));
    }
    let scale = problem.u_base.abs().max(problem.j_char);
    let mut energies = Vec::with_capacity(d);
    for k in 0..d {
        let mut e = problem.e0_interaction;
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let m = projected_matrix_at(problem, e, opts.m_cut);
            let eig = symmetric_eigen(&m);
            let next = eig.values[k];
            if (next - e).abs() <= opts.tol_rel * scale.max(next.abs()) {
                e = next;
                converged = true;
                break;
            }
            e = next;
        }
        if !converged {
            return Err(Error::Convergence(format!(
                "nonlinear projected solve did not converge for eigenvalue {k} \
                 after {} iterations",
                opts.max_iter
            )));
        }
        energies.push(e + problem.omega_offset);
    }
    Ok(energies)
}

/// Dense H_A(E) − here with exact scalar E in the resolvent weights.
fn projected_matrix_at(problem: &ProjectedProblem, e: f64, m_cut: usize) -> DMatrix<f64> {
    let d = problem.dim();
    let dim = problem.dim_full;
    // W(E) on the complement
    let w: Vec<f64> = (0..dim)
        .map(|s| {
            if problem.position[s] == usize::MAX {
                1.0 / (e - problem.hu_diag[s])
            } else {
                0.0
            }
        })
        .collect();
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut v = vec![0.0; d];
        v[col] = 1.0;
        let mut c = problem.apply_h1(&problem.lift(&v));
        let mut acc = problem.project(&c);
        for _ in 2..=m_cut {
            let damped: Vec<f64> = c.iter().zip(&w).map(|(ci, wi)| ci * wi).collect();
            c = problem.apply_h1(&damped);
            for (a, p) in acc.iter_mut().zip(problem.project(&c)) {
                *a += p;
            }
        }
        for row in 0..d {
            m[(row, col)] = acc[row];
        }
        m[(col, col)] += problem.e0_interaction;
    }
    let mt = m.transpose();
    (m + mt) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effmodels;
    use crate::hamiltonian::build_hamiltonian;
    use crate::lattice::{apply_tuning, build_chain, sample_disorder, DisorderSpec, TuningRule};
    use crate::units::mhz;

    const J_MHZ: f64 = 10.0;
    const U_MHZ: f64 = 250.0;

    fn chain_problem(l: usize, n: u32, a: i64) -> ProjectedProblem {
        let g = build_chain(l, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(l, n).unwrap();
        build_projected(&b, &g, a).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn projected_dimensions() {
        let p = chain_problem(4, 3, -3);
        assert_eq!(p.dim(), 4);
        assert_eq!(p.complement_dim(), 16);
    }

    #[test]
    fn w0_weight_of_complement_state() {
        let p = chain_problem(4, 3, -3);
        let u = mhz(U_MHZ);
        let w = p.w0_weight(&FockState::new(vec![2, 1, 0, 0])).unwrap();
        assert!(rel_err(w, -1.0 / (2.0 * u)) < 1e-14);
    }

    #[test]
    fn empty_manifold_is_an_error() {
        let g = build_chain(4, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(4, 3).unwrap();
        match build_projected(&b, &g, -17) {
            Err(Error::Manifold(_)) => {}
            other => panic!("expected manifold error, got {other:?}"),
        }
    }

    #[test]
    fn clean_graph_has_no_disorder_diagonal() {
        let p = chain_problem(4, 3, -3);
        assert!(!p.has_disorder());
        for i in 0..20 {
            assert_eq!(p.disorder_diagonal(i), 0.0);
        }
    }

    #[test]
    fn first_order_vanishes_for_single_stack() {
        let p = chain_problem(4, 3, -3);
        let basis: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut v = vec![0.0; 4];
                v[i] = 1.0;
                v
            })
            .collect();
        let m = order_hamiltonian(&p, &basis, 1, &[]).unwrap();
        assert!(m.amax() == 0.0);
    }

    #[test]
    fn odd_orders_vanish_below_n() {
        for n in [3u32, 4, 5] {
            let a = -((n as i64) * (n as i64 - 1) / 2);
            let p = chain_problem(4, n, a);
            let basis: Vec<Vec<f64>> = (0..p.dim())
                .map(|i| {
                    let mut v = vec![0.0; p.dim()];
                    v[i] = 1.0;
                    v
                })
                .collect();
            for order in (1..n as usize).step_by(2) {
                let history = vec![0.0; order.saturating_sub(1)];
                let m = order_hamiltonian(&p, &basis, order, &history).unwrap();
                assert!(
                    m.amax() <= 1e-12 * p.order_scale(order),
                    "order {order} should vanish for N = {n}"
                );
            }
        }
    }

    #[test]
    fn second_order_diagonal_single_stack() {
        // N = 3: bulk −3 (J/U)² U, edge −1.5 (J/U)² U
        let p = chain_problem(4, 3, -3);
        let basis: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                let mut v = vec![0.0; 4];
                v[i] = 1.0;
                v
            })
            .collect();
        let m = order_hamiltonian(&p, &basis, 2, &[0.0]).unwrap();
        let u = mhz(U_MHZ);
        let r = mhz(J_MHZ) / u;
        let edge = -1.5 * r * r * u;
        let bulk = -3.0 * r * r * u;
        // members are ordered |3000>, |0300>, |0030>, |0003>
        assert!(rel_err(m[(0, 0)], edge) < 1e-12);
        assert!(rel_err(m[(1, 1)], bulk) < 1e-12);
        assert!(rel_err(m[(2, 2)], bulk) < 1e-12);
        assert!(rel_err(m[(3, 3)], edge) < 1e-12);
    }

    #[test]
    fn third_order_stack_hopping_matches_closed_form() {
        let p = chain_problem(4, 3, -3);
        let bra = FockState::stack(4, 2, 3);
        let ket = FockState::stack(4, 1, 3);
        let c = p.extract_coupling(&bra, &ket, 3).unwrap();
        let u = mhz(U_MHZ);
        let j = mhz(J_MHZ);
        let want = 1.5 * (j / u) * (j / u) * j;
        assert!(rel_err(c, want) < 1e-10);
        // and against the rate module
        assert!(rel_err(c, effmodels::tilde_j(3, j, u)) < 1e-10);
    }

    #[test]
    fn extract_coupling_rejects_outside_states() {
        let p = chain_problem(4, 3, -3);
        let outside = FockState::new(vec![2, 1, 0, 0]);
        let inside = FockState::stack(4, 0, 3);
        assert!(p.extract_coupling(&outside, &inside, 2).is_err());
    }

    #[test]
    fn resolve_single_stack_tree_structure() {
        let p = chain_problem(4, 3, -3);
        let tree = resolve_manifold(&p, 3, DEFAULT_CLUSTER_TOL).unwrap();
        // order 1 keeps everything together, order 2 splits edge/bulk
        let first = &tree.root.children[0];
        assert_eq!(first.order, 1);
        assert_eq!(first.dim(), 4);
        assert_eq!(first.children.len(), 2);
        let mut dims: Vec<usize> = first.children.iter().map(|c| c.dim()).collect();
        dims.sort_unstable();
        assert_eq!(dims, vec![2, 2]);

        // the bulk pair (higher index cluster energy −3u₂ is the lower one)
        let bulk = first
            .children
            .iter()
            .find(|c| c.dim() == 2 && !c.children.is_empty())
            .expect("bulk pair splits at third order");
        assert_eq!(bulk.children.len(), 2);
        let e: Vec<f64> = bulk.children.iter().map(|c| c.energy).collect();
        let gap = (e[0] - e[1]).abs();
        let jt = effmodels::tilde_j(3, mhz(J_MHZ), mhz(U_MHZ));
        assert!(rel_err(gap, 2.0 * jt.abs()) < 1e-10);
    }

    #[test]
    fn resolve_first_order_blocks_stack_boson() {
        // manifold |N_a, 1_b> on L = 4 with N = 4: first-order eigenvalues
        // are the one-boson energies of the left/right sub-chains
        let l = 4;
        let n = 4u32;
        let g = build_chain(l, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(l, n + 1).unwrap();
        let a = -((n as i64) * (n as i64 - 1) / 2);
        let p = build_projected(&b, &g, a).unwrap();
        assert_eq!(p.dim(), l * (l - 1));
        let basis: Vec<Vec<f64>> = (0..p.dim())
            .map(|i| {
                let mut v = vec![0.0; p.dim()];
                v[i] = 1.0;
                v
            })
            .collect();
        let m = order_hamiltonian(&p, &basis, 1, &[]).unwrap();
        let eig = symmetric_eigen(&m);
        let mut want: Vec<f64> = Vec::new();
        let j = mhz(J_MHZ);
        for stack_site in 1..=l {
            for (len, side) in [(stack_site - 1, "left"), (l - stack_site, "right")] {
                let _ = side;
                for k in 1..=len {
                    want.push(2.0 * j * (std::f64::consts::PI * k as f64 / (len as f64 + 1.0)).cos());
                }
            }
        }
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(eig.values.len(), want.len());
        for (have, want) in eig.values.iter().zip(&want) {
            assert!((have - want).abs() < 1e-9 * j.abs());
        }
    }

    #[test]
    fn tree_leaves_orthonormal_and_complete() {
        let p = chain_problem(5, 3, -3);
        let tree = resolve_manifold(&p, 4, DEFAULT_CLUSTER_TOL).unwrap();
        let leaves = tree.leaves();
        let mut all: Vec<&Vec<f64>> = Vec::new();
        for leaf in &leaves {
            for v in &leaf.vectors {
                all.push(v);
            }
        }
        assert_eq!(all.len(), p.dim());
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn effective_hamiltonian_one_boson_is_tridiagonal() {
        let l = 5;
        let g = build_chain(l, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(l, 1).unwrap();
        let p = build_projected(&b, &g, 0).unwrap();
        let tree = resolve_manifold(&p, 1, DEFAULT_CLUSTER_TOL).unwrap();
        let eff = effective_hamiltonian(&tree, &p);
        // spectra agree with the dense one-boson Hamiltonian
        let h = build_hamiltonian(&g, &b).unwrap();
        let dense = symmetric_eigen(&h.to_dense());
        let model = symmetric_eigen(&eff.matrix);
        for (a, b) in model.values.iter().zip(&dense.values) {
            assert!((a - b).abs() < 1e-9 * mhz(J_MHZ));
        }
    }

    #[test]
    fn effective_hamiltonian_dim_one_manifold() {
        let g = build_chain(1, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(1, 7).unwrap();
        let p = build_projected(&b, &g, -21).unwrap();
        let tree = resolve_manifold(&p, 2, DEFAULT_CLUSTER_TOL).unwrap();
        let eff = effective_hamiltonian(&tree, &p);
        assert_eq!(eff.matrix.nrows(), 1);
        assert!(rel_err(eff.matrix[(0, 0)], -21.0 * mhz(U_MHZ)) < 1e-12);
    }

    #[test]
    fn nonlinear_solve_exact_for_one_boson() {
        let l = 4;
        let g = build_chain(l, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(l, 1).unwrap();
        let p = build_projected(&b, &g, 0).unwrap();
        let opts = NonlinearOptions::default();
        let energies = nonlinear_projected_solve(&p, &opts).unwrap();
        let (e_exact, _) = effmodels::one_boson_solution(l, mhz(J_MHZ), 0.0);
        let mut want = e_exact;
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (have, want) in energies.iter().zip(&want) {
            assert!((have - want).abs() <= 1e-12 * mhz(J_MHZ).abs() + 1e-9);
        }
    }

    #[test]
    fn nonlinear_solve_matches_dense_for_doublons() {
        let l = 4;
        let g = build_chain(l, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(l, 2).unwrap();
        let p = build_projected(&b, &g, -1).unwrap();
        let energies = nonlinear_projected_solve(&p, &NonlinearOptions::default()).unwrap();
        let h = build_hamiltonian(&g, &b).unwrap();
        let dense = symmetric_eigen(&h.to_dense());
        let u = mhz(U_MHZ);
        let tol = 10.0 * (mhz(J_MHZ) / u).powi(3) * u;
        for (k, e) in energies.iter().enumerate() {
            assert!(
                (e - dense.values[k]).abs() < tol,
                "eigenvalue {k}: {} vs {}",
                e,
                dense.values[k]
            );
        }
    }

    #[test]
    fn nonlinear_solve_zero_hopping_returns_e0() {
        let g = build_chain(4, 0.0, mhz(U_MHZ), 0.0).unwrap();
        let b = Basis::enumerate(4, 3).unwrap();
        let p = build_projected(&b, &g, -3).unwrap();
        let energies = nonlinear_projected_solve(&p, &NonlinearOptions::default()).unwrap();
        for e in energies {
            assert!(rel_err(e, -3.0 * mhz(U_MHZ)) < 1e-14);
        }
    }

    #[test]
    fn single_stack_tuning_makes_manifold_diagonal_constant() {
        let g = build_chain(6, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let spec = DisorderSpec {
            d_u: mhz(5.0),
            seed: 17,
            ..Default::default()
        };
        let g = sample_disorder(&g, &spec).unwrap();
        let g = apply_tuning(&g, &TuningRule::SingleStack { n: 3 }).unwrap();
        let b = Basis::enumerate(6, 3).unwrap();
        let p = build_projected(&b, &g, -3).unwrap();
        let diags: Vec<f64> = p
            .manifold()
            .members
            .iter()
            .map(|&i| p.disorder_diagonal(i))
            .collect();
        for d in &diags {
            assert!(
                (d - diags[0]).abs() <= 1e-12 * mhz(U_MHZ),
                "tuned stack diagonal not constant: {diags:?}"
            );
        }
    }

    #[test]
    fn two_stack_pair_tuning_degenerates_the_pair() {
        let n = 3u32;
        let m = 2u32;
        let (site_a, site_b) = (1usize, 3usize);
        let g = build_chain(5, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let spec = DisorderSpec {
            d_u: mhz(5.0),
            seed: 23,
            ..Default::default()
        };
        let g = sample_disorder(&g, &spec).unwrap();
        let g = apply_tuning(
            &g,
            &TuningRule::TwoStackPair {
                n,
                m,
                site_a,
                site_b,
            },
        )
        .unwrap();
        let b = Basis::enumerate(5, n + m).unwrap();
        let a = -((n as i64) * (n as i64 - 1) / 2) - (m as i64) * (m as i64 - 1) / 2;
        let p = build_projected(&b, &g, a).unwrap();
        let mut nm = vec![0u32; 5];
        nm[site_a] = n;
        nm[site_b] = m;
        let mut mn = vec![0u32; 5];
        mn[site_a] = m;
        mn[site_b] = n;
        let i1 = b.rank(&FockState::new(nm)).unwrap();
        let i2 = b.rank(&FockState::new(mn)).unwrap();
        let d1 = p.disorder_diagonal(i1);
        let d2 = p.disorder_diagonal(i2);
        assert!(
            (d1 - d2).abs() <= 1e-12 * mhz(U_MHZ),
            "pair not degenerate: {d1} vs {d2}"
        );
    }

    #[test]
    fn exchange_pair_tuning_clears_relevant_subspace() {
        let l = 6;
        let n = 4u32;
        let g = build_chain(l, mhz(J_MHZ), mhz(U_MHZ), 0.0).unwrap();
        let spec = DisorderSpec {
            d_u: mhz(5.0),
            seed: 29,
            ..Default::default()
        };
        let g = sample_disorder(&g, &spec).unwrap();
        let g = apply_tuning(&g, &TuningRule::ExchangePair { n }).unwrap();
        let b = Basis::enumerate(l, n + 1).unwrap();
        let a = -((n as i64) * (n as i64 - 1) / 2);
        let p = build_projected(&b, &g, a).unwrap();
        // stack on either central site, boson anywhere on the other side
        let (ca, cb) = (l / 2 - 1, l / 2);
        for (stack, boson_side) in [(cb, 0..cb), (ca, cb..l)] {
            for boson in boson_side {
                if boson == stack {
                    continue;
                }
                let mut occ = vec![0u32; l];
                occ[stack] = n;
                occ[boson] = 1;
                let idx = b.rank(&FockState::new(occ)).unwrap();
                assert!(
                    p.disorder_diagonal(idx).abs() <= 1e-12 * mhz(U_MHZ),
                    "disorder not cleared on stack={stack}, boson={boson}"
                );
            }
        }
    }

    #[test]
    fn tree_dump_contains_nodes() {
        let p = chain_problem(4, 3, -3);
        let tree = resolve_manifold(&p, 3, DEFAULT_CLUSTER_TOL).unwrap();
        let text = tree.to_text();
        assert!(text.contains("node order=0 dim=4"));
        assert!(text.lines().count() >= 4);
    }
}
