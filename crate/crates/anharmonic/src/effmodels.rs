//! Closed-form quasiparticle rates and reduced effective models.
//!
//! A stack of N bosons on one site moves as a single quasiparticle with
//! hopping rate J̃ ∝ (J/U)^{N−1} J and feels boundary wells ω̃ built from the
//! even-order self-energy differences. Stack-boson and stack-stack sectors
//! add nearest-neighbor interaction V, tunneling T and exchange Ξ channels.
//! Every rate here is an explicit rational expression in N, M times a power
//! of J/U; the perturbation engine reproduces each one numerically.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::dense_propagate;
use crate::units::to_mhz;
use crate::{Error, Result};

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Effective stack hopping rate J̃ = (−1)^{N−1} N/(N−1)! (J/U)^{N−1} J.
pub fn tilde_j(n: u32, j: f64, u: f64) -> f64 {
    assert!(n >= 1);
    let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    sign * n as f64 / factorial(n - 1) * (j / u).powi(n as i32 - 1) * j
}

/// Boundary-well difference ω̃_d − ω̃_{d+1} = N/(N−1)^{2d−1} (J/U)^{2d−1} J.
///
/// A single boson (N = 1) sees a flat chain, so the difference is zero.
pub fn tilde_omega_diff(n: u32, d: u32, j: f64, u: f64) -> f64 {
    assert!(d >= 1);
    if n <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    nf / (nf - 1.0).powi(2 * d as i32 - 1) * (j / u).powi(2 * d as i32 - 1) * j
}

/// Edge self-energy offset at order 2n: ΔE^{(2n)} = ħU N/(N−1)^{2n−1} (J/U)^{2n}.
pub fn delta_e_2n(n: u32, order_half: u32, j: f64, u: f64) -> f64 {
    // algebraically identical to the boundary-well difference at d = order_half
    tilde_omega_diff(n, order_half, j, u)
}

/// Stack-boson nearest-neighbor interaction
/// V = −(2N/(N−2) − (N+1)/N − N/(N−1)) (J/U) J; the first term is dropped at
/// N = 2, where the intermediate state it would count lies inside the
/// manifold.
pub fn v_stack_boson(n: u32, j: f64, u: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("V needs a stack of size N >= 2".into()));
    }
    let nf = n as f64;
    let first = if n == 2 { 0.0 } else { 2.0 * nf / (nf - 2.0) };
    Ok(-(first - (nf + 1.0) / nf - nf / (nf - 1.0)) * (j / u) * j)
}

/// Tunneling rate of a boson through a stack: T = −(1/(N(N−1))) (J/U) J.
pub fn t_stack_boson(n: u32, j: f64, u: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("T needs a stack of size N >= 2".into()));
    }
    let nf = n as f64;
    Ok(-1.0 / (nf * (nf - 1.0)) * (j / u) * j)
}

/// Stack-boson exchange rate Ξ = (−1)^N N(N−1)/(N−2)! (J/U)^{N−2} J.
pub fn xi_stack_boson(n: u32, j: f64, u: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("Ξ needs a stack of size N >= 2".into()));
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let nf = n as f64;
    Ok(sign * nf * (nf - 1.0) / factorial(n - 2) * (j / u).powi(n as i32 - 2) * j)
}

/// Equal-stack interaction at distance d:
/// V_d = 2N³/(N−1)^{2d−1} (1 − (d−1)/N · (2N−1)/(2N−3)) (J/U)^{2d−1} J.
pub fn v_ell_equal(n: u32, d: u32, j: f64, u: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("V_ℓ needs stacks of size N >= 2".into()));
    }
    assert!(d >= 1);
    let nf = n as f64;
    let df = d as f64;
    let shape = 1.0 - (df - 1.0) / nf * (2.0 * nf - 1.0) / (2.0 * nf - 3.0);
    Ok(2.0 * nf.powi(3) / (nf - 1.0).powi(2 * d as i32 - 1) * shape * (j / u).powi(2 * d as i32 - 1)
        * j)
}

/// Exchange rate of an N-stack and an (N−1)-stack at distance d:
/// Ξ_d = (−1)^{d−1} N/(N−1)^{d−1} (J/U)^{d−1} J.
pub fn xi_ell_adjacent_sizes(n: u32, d: u32, j: f64, u: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("Ξ_ℓ needs N >= 2".into()));
    }
    assert!(d >= 1);
    let sign = if (d - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let nf = n as f64;
    Ok(sign * nf / (nf - 1.0).powi(d as i32 - 1) * (j / u).powi(d as i32 - 1) * j)
}

/// Nearest-neighbor exchange of stacks of sizes N > M:
/// Ξ₁ = (−1)^{N−M−1} C(N,M) (N−M)²/(N−M)! (J/U)^{N−M−1} J.
pub fn xi1_general(n: u32, m: u32, j: f64, u: f64) -> Result<f64> {
    if m >= n {
        return Err(Error::Domain("Ξ₁ needs M < N".into()));
    }
    let diff = n - m;
    let sign = if (diff - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * binom(n, m) * (diff as f64).powi(2) / factorial(diff) * (j / u).powi(diff as i32 - 1)
        * j)
}

/// General two-stack interaction at distance d (sizes N > M, symmetrized):
/// the leading even-order energy difference between separations d and d + 1.
pub fn v_n_general(n: u32, m: u32, d: u32, j: f64, u: f64) -> Result<f64> {
    if m < 2 || m >= n {
        return Err(Error::Domain("V_n needs 2 <= M < N".into()));
    }
    assert!(d >= 1);
    let term = |a: f64, b: f64| -> f64 {
        a * b * (a - 1.0) * (a - 3.0 * b + 1.0)
            / ((a + b - 3.0) * (a - b) * (a - b + 1.0) * (b - 1.0).powi(2 * d as i32 - 1))
    };
    let nf = n as f64;
    let mf = m as f64;
    Ok((term(nf, mf) + term(mf, nf)) * (j / u).powi(2 * d as i32) * u)
}

/// Exchange oscillation rate of the central stack-boson pair for the k-th
/// boson mode on an even chain: Ω_k = 4(−1)^{k+1}/(L/2+1) sin²(πk/(L/2+1)) Ξ.
pub fn omega_k(l: usize, k: u32, n: u32, j: f64, u: f64) -> Result<f64> {
    if l % 2 != 0 {
        return Err(Error::Domain("Ω_k is defined for even chain lengths".into()));
    }
    let half = l as f64 / 2.0 + 1.0;
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let s = (std::f64::consts::PI * k as f64 / half).sin();
    Ok(4.0 * sign / half * s * s * xi_stack_boson(n, j, u)?)
}

/// Named rates with MHz rendering.
#[derive(Debug, Clone, Default)]
pub struct RateSet {
    pub entries: Vec<(String, f64)>,
}

impl RateSet {
    pub fn push(&mut self, name: &str, value: f64) {
        self.entries.push((name.to_string(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    /// Flat `name_MHz = value` listing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.entries {
            out.push_str(&format!("{name}_MHz = {:.9e}\n", to_mhz(*value)));
        }
        out
    }
}

/// Single-quasiparticle rates: J̃ and the leading boundary-well differences.
pub fn stack_rates(n: u32, j: f64, u: f64) -> Result<RateSet> {
    if n < 1 || u <= 0.0 {
        return Err(Error::Domain("stack rates need N >= 1 and U > 0".into()));
    }
    let mut set = RateSet::default();
    set.push("tilde_J", tilde_j(n, j, u));
    for d in 1..=2u32 {
        set.push(
            &format!("tilde_omega_diff_{d}"),
            tilde_omega_diff(n, d, j, u),
        );
        set.push(&format!("DeltaE2n_{d}"), delta_e_2n(n, d, j, u));
    }
    Ok(set)
}

/// Stack-boson sector rates V, T, Ξ.
pub fn stack_boson_rates(n: u32, j: f64, u: f64) -> Result<RateSet> {
    let mut set = RateSet::default();
    set.push("V", v_stack_boson(n, j, u)?);
    set.push("T", t_stack_boson(n, j, u)?);
    set.push("Xi", xi_stack_boson(n, j, u)?);
    Ok(set)
}

/// Two-stack sector rates, dispatched on the size difference.
pub fn two_stack_rates(n: u32, m: u32, j: f64, u: f64) -> Result<RateSet> {
    if m < 2 || m > n {
        return Err(Error::Domain(
            "two-stack rates need 2 <= M <= N; use the stack-boson rates for M = 1".into(),
        ));
    }
    let mut set = RateSet::default();
    if m == n {
        for d in 1..=2u32 {
            set.push(&format!("V_ell_{d}"), v_ell_equal(n, d, j, u)?);
        }
    } else if m == n - 1 {
        for d in 1..=2u32 {
            set.push(&format!("Xi_ell_{d}"), xi_ell_adjacent_sizes(n, d, j, u)?);
        }
        set.push("Xi1", xi1_general(n, m, j, u)?);
    } else {
        set.push("V_n_1", v_n_general(n, m, 1, j, u)?);
        set.push("Xi1", xi1_general(n, m, j, u)?);
    }
    Ok(set)
}

/// Reduced Hermitian model on labelled quasiparticle coordinates.
///
/// Each coordinate is a sparse occupation pattern `(site, bosons)`; the
/// hard-core constraint between quasiparticles is realized by excluding
/// coinciding-site coordinates from the space.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub sites: usize,
    pub coords: Vec<Vec<(usize, u32)>>,
    pub matrix: DMatrix<f64>,
    pub rates: RateSet,
    /// Set when the closed-form terms are known to miss mid-order phase
    /// corrections (central stack-boson exchange with N > 3); the zeroth-order
    /// states are still correct.
    pub incomplete_energies: bool,
}

impl EffectiveModel {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate index whose occupation pattern matches `occ` exactly.
    pub fn coord_of_occupations(&self, occ: &[u32]) -> Option<usize> {
        self.coords.iter().position(|coord| {
            let mut probe = vec![0u32; self.sites];
            for &(site, n) in coord {
                probe[site] += n;
            }
            probe == occ
        })
    }

    /// Per-site occupations of a model state.
    pub fn site_occupations(&self, psi: &[Complex64]) -> Vec<f64> {
        let mut occ = vec![0.0; self.sites];
        for (amp, coord) in psi.iter().zip(&self.coords) {
            let p = amp.norm_sqr();
            for &(site, n) in coord {
                occ[site] += p * n as f64;
            }
        }
        occ
    }

    /// Evolve the coordinate basis state `coord0` and return per-site
    /// occupations at each time (seconds).
    pub fn evolve_occupations(&self, coord0: usize, times: &[f64]) -> Vec<Vec<f64>> {
        let mut psi0 = vec![Complex64::new(0.0, 0.0); self.dim()];
        psi0[coord0] = Complex64::new(1.0, 0.0);
        dense_propagate(&self.matrix, &psi0, times)
            .iter()
            .map(|psi| self.site_occupations(psi))
            .collect()
    }
}

/// Boundary-well diagonal ω̃ at 0-based site `s` of an L-site chain:
/// accumulated differences from the nearest boundary, truncated at the
/// hopping order (differences of order 2d ≤ N kept).
fn boundary_well(l: usize, s: usize, n: u32, j: f64, u: f64) -> f64 {
    let d = (s + 1).min(l - s) as u32;
    let d_max = n / 2;
    (d..=d_max).map(|dd| tilde_omega_diff(n, dd, j, u)).sum()
}

/// Single-stack effective model: L×L tridiagonal with hopping J̃ and
/// boundary wells ω̃.
pub fn build_single_stack_model(l: usize, n: u32, j: f64, u: f64) -> Result<EffectiveModel> {
    if l == 0 || n < 1 {
        return Err(Error::Domain("model needs L >= 1 and N >= 1".into()));
    }
    let jt = tilde_j(n, j, u);
    let mut matrix = DMatrix::zeros(l, l);
    for s in 0..l {
        matrix[(s, s)] = boundary_well(l, s, n, j, u);
        if s + 1 < l {
            matrix[(s, s + 1)] = jt;
            matrix[(s + 1, s)] = jt;
        }
    }
    let rates = stack_rates(n, j, u)?;
    Ok(EffectiveModel {
        sites: l,
        coords: (0..l).map(|s| vec![(s, n)]).collect(),
        matrix,
        rates,
        incomplete_energies: false,
    })
}

/// Stack-boson effective model on coordinates (stack site, boson site).
///
/// Includes the free boson hopping J, the stack terms J̃ and ω̃, the
/// nearest-neighbor interaction V, the tunneling channel T and the exchange
/// channel Ξ. `stack_site0` (0-based) selects the initial stack location and
/// only controls the `incomplete_energies` flag.
pub fn build_stack_boson_model(
    l: usize,
    n: u32,
    j: f64,
    u: f64,
    stack_site0: usize,
) -> Result<EffectiveModel> {
    if n < 2 {
        return Err(Error::Domain("stack-boson model needs N >= 2".into()));
    }
    if stack_site0 >= l {
        return Err(Error::Domain(format!(
            "stack site {stack_site0} outside chain of {l} sites"
        )));
    }
    let jt = tilde_j(n, j, u);
    let v = v_stack_boson(n, j, u)?;
    let t = t_stack_boson(n, j, u)?;
    let xi = xi_stack_boson(n, j, u)?;

    let mut coords = Vec::new();
    for sn in 0..l {
        for s1 in 0..l {
            if s1 != sn {
                coords.push((sn, s1));
            }
        }
    }
    let index = |sn: usize, s1: usize| coords.iter().position(|&c| c == (sn, s1)).unwrap();
    let dim = coords.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (i, &(sn, s1)) in coords.iter().enumerate() {
        let mut diag = boundary_well(l, sn, n, j, u);
        if sn.abs_diff(s1) == 1 {
            diag += v;
        }
        matrix[(i, i)] = diag;
        // boson hop
        if s1 > 0 && s1 - 1 != sn {
            let k = index(sn, s1 - 1);
            matrix[(i, k)] += j;
        }
        if s1 + 1 < l && s1 + 1 != sn {
            let k = index(sn, s1 + 1);
            matrix[(i, k)] += j;
        }
        // stack hop
        if sn > 0 && sn - 1 != s1 {
            let k = index(sn - 1, s1);
            matrix[(i, k)] += jt;
        }
        if sn + 1 < l && sn + 1 != s1 {
            let k = index(sn + 1, s1);
            matrix[(i, k)] += jt;
        }
        // tunneling through the stack
        if s1 + 2 == sn + 1 && sn + 1 < l {
            // s1 = sn − 1 → couple to s1' = sn + 1
            let k = index(sn, sn + 1);
            matrix[(i, k)] += t;
        }
        if s1 == sn + 1 && sn > 0 {
            let k = index(sn, sn - 1);
            matrix[(i, k)] += t;
        }
        // exchange with an adjacent boson
        if sn.abs_diff(s1) == 1 {
            let k = index(s1, sn);
            matrix[(i, k)] += xi;
        }
    }
    let mt = matrix.transpose();
    let matrix = (matrix + mt) * 0.5;

    let mut rates = stack_rates(n, j, u)?;
    for (name, value) in stack_boson_rates(n, j, u)?.entries {
        rates.entries.push((name, value));
    }
    let incomplete = l % 2 == 0 && stack_site0 == l / 2 && n > 3;
    Ok(EffectiveModel {
        sites: l,
        coords: coords.into_iter().map(|(sn, s1)| vec![(sn, n), (s1, 1)]).collect(),
        matrix,
        rates,
        incomplete_energies: incomplete,
    })
}

/// Two-stack effective model (sizes N ≥ M ≥ 2).
///
/// Equal sizes use unordered site pairs with the interaction V_d; adjacent
/// sizes (M = N − 1) use ordered pairs with the long-range exchange Ξ_d;
/// larger differences combine V_d with nearest-neighbor exchange Ξ₁.
pub fn build_two_stack_model(l: usize, n: u32, m: u32, j: f64, u: f64) -> Result<EffectiveModel> {
    if m < 2 || m > n {
        return Err(Error::Domain("two-stack model needs 2 <= M <= N".into()));
    }
    let jt_n = tilde_j(n, j, u);
    let rates = two_stack_rates(n, m, j, u)?;

    if m == n {
        let mut coords = Vec::new();
        for a in 0..l {
            for b in a + 1..l {
                coords.push((a, b));
            }
        }
        let index = |a: usize, b: usize| {
            let (a, b) = (a.min(b), a.max(b));
            coords.iter().position(|&c| c == (a, b)).unwrap()
        };
        let dim = coords.len();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (i, &(a, b)) in coords.iter().enumerate() {
            let d = (b - a) as u32;
            matrix[(i, i)] = boundary_well(l, a, n, j, u)
                + boundary_well(l, b, n, j, u)
                + v_ell_equal(n, d, j, u)?;
            for (from, other) in [(a, b), (b, a)] {
                if from > 0 && from - 1 != other {
                    let k = index(from - 1, other);
                    matrix[(i, k)] += jt_n;
                }
                if from + 1 < l && from + 1 != other {
                    let k = index(from + 1, other);
                    matrix[(i, k)] += jt_n;
                }
            }
        }
        let mt = matrix.transpose();
        let matrix = (matrix + mt) * 0.5;
        return Ok(EffectiveModel {
            sites: l,
            coords: coords
                .into_iter()
                .map(|(a, b)| vec![(a, n), (b, m)])
                .collect(),
            matrix,
            rates,
            incomplete_energies: false,
        });
    }

    // distinguishable stacks: ordered coordinates (site of N, site of M)
    let jt_m = tilde_j(m, j, u);
    let mut coords = Vec::new();
    for a in 0..l {
        for b in 0..l {
            if a != b {
                coords.push((a, b));
            }
        }
    }
    let index = |a: usize, b: usize| coords.iter().position(|&c| c == (a, b)).unwrap();
    let dim = coords.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (i, &(a, b)) in coords.iter().enumerate() {
        let d = a.abs_diff(b) as u32;
        let mut diag = boundary_well(l, a, n, j, u) + boundary_well(l, b, m, j, u);
        if m < n - 1 {
            diag += v_n_general(n, m, d, j, u)?;
        }
        matrix[(i, i)] = diag;
        // N-stack hops
        if a > 0 && a - 1 != b {
            matrix[(i, index(a - 1, b))] += jt_n;
        }
        if a + 1 < l && a + 1 != b {
            matrix[(i, index(a + 1, b))] += jt_n;
        }
        // M-stack hops
        if b > 0 && b - 1 != a {
            matrix[(i, index(a, b - 1))] += jt_m;
        }
        if b + 1 < l && b + 1 != a {
            matrix[(i, index(a, b + 1))] += jt_m;
        }
        // exchange
        if m == n - 1 {
            matrix[(i, index(b, a))] += xi_ell_adjacent_sizes(n, d, j, u)?;
        } else if d == 1 {
            matrix[(i, index(b, a))] += xi1_general(n, m, j, u)?;
        }
    }
    let mt = matrix.transpose();
    let matrix = (matrix + mt) * 0.5;
    Ok(EffectiveModel {
        sites: l,
        coords: coords
            .into_iter()
            .map(|(a, b)| vec![(a, n), (b, m)])
            .collect(),
        matrix,
        rates,
        incomplete_energies: false,
    })
}

/// Analytic one-boson solution of the uniform open chain:
/// ε_k = ω + 2J cos(πk/(L+1)) with sine-wave eigenvectors, k = 1..L.
pub fn one_boson_solution(l: usize, j: f64, omega: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let pi = std::f64::consts::PI;
    let norm = (2.0 / (l as f64 + 1.0)).sqrt();
    let energies = (1..=l)
        .map(|k| omega + 2.0 * j * (pi * k as f64 / (l as f64 + 1.0)).cos())
        .collect();
    let states = (1..=l)
        .map(|k| {
            (1..=l)
                .map(|site| norm * (pi * site as f64 * k as f64 / (l as f64 + 1.0)).sin())
                .collect()
        })
        .collect();
    (energies, states)
}

/// First-order block spectra of the stack-boson manifold for a stack at
/// 0-based `stack_site`: the boson moves in decoupled sub-chains to the left
/// (length `stack_site`) and right (length `l − stack_site − 1`).
#[derive(Debug, Clone)]
pub struct BlockSpectra {
    pub left_energies: Vec<f64>,
    pub left_states: Vec<Vec<f64>>,
    pub right_energies: Vec<f64>,
    pub right_states: Vec<Vec<f64>>,
}

pub fn first_order_blocks(l: usize, stack_site: usize, j: f64) -> Result<BlockSpectra> {
    if stack_site >= l {
        return Err(Error::Domain(format!(
            "stack site {stack_site} outside chain of {l} sites"
        )));
    }
    let (left_energies, left_states) = one_boson_solution(stack_site, j, 0.0);
    let (right_energies, right_states) = one_boson_solution(l - stack_site - 1, j, 0.0);
    Ok(BlockSpectra {
        left_energies,
        left_states,
        right_energies,
        right_states,
    })
}

/// First-order eigenspace category of a left-block mode `k_minus`
/// (1-based wavenumber) for a stack at 0-based `stack_site`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Resonant with a right-block mode of the same stack position; the two
    /// mix at second order (tunneling channel).
    I { k_plus: u32 },
    /// Resonant with a right-block mode of the stack shifted by one; mixing
    /// survives only in the central configuration (`mixes`).
    II { k_plus: u32, mixes: bool },
    /// Isolated; the block state is itself a zeroth-order eigenstate.
    III,
}

pub fn classify_category(k_minus: u32, stack_site: usize, l: usize) -> Result<Category> {
    let ell = stack_site + 1; // 1-based stack position
    if k_minus == 0 || k_minus as usize >= ell {
        return Err(Error::Domain(format!(
            "k_minus must lie in 1..{} for a stack at position {ell}",
            ell.saturating_sub(1)
        )));
    }
    let k = k_minus as usize;
    let num_i = k * (l - ell + 1);
    if num_i % ell == 0 {
        let k_plus = num_i / ell;
        if (1..=l - ell).contains(&k_plus) {
            return Ok(Category::I {
                k_plus: k_plus as u32,
            });
        }
    }
    let num_ii = k * (l - ell + 2);
    if num_ii % ell == 0 {
        let k_plus = num_ii / ell;
        if (1..=l - ell + 1).contains(&k_plus) {
            return Ok(Category::II {
                k_plus: k_plus as u32,
                mixes: l % 2 == 0 && ell == l / 2 + 1,
            });
        }
    }
    Ok(Category::III)
}

#[derive(Debug, Clone)]
pub struct RabiQuantities {
    /// Maximum boson transfer probability across the stack at second order.
    pub p_minus_to_plus: f64,
    /// Central-pair exchange oscillation rate for mode k (even chains).
    pub omega_k: Option<f64>,
    /// Maximum admixture of the resonant nontrivial three-site state for
    /// two stacks with M = (N+3)/2, when that closed form applies.
    pub p_nontrivial: Option<f64>,
}

/// Maximum transfer probability of the boson from the left to the right of a
/// stack at 0-based `stack_site`, via the two-level formula at second order.
pub fn rabi_p_minus_to_plus(l: usize, n: u32, stack_site: usize) -> f64 {
    let ell = (stack_site + 1) as f64;
    let lf = l as f64;
    let diff = (ell / (lf - ell + 1.0)).sqrt() - ((lf - ell + 1.0) / ell).sqrt();
    if diff == 0.0 {
        return 1.0;
    }
    if n == 2 {
        // the diagonal mismatch factor diverges
        return 0.0;
    }
    let nf = n as f64;
    let factor = nf * nf / (nf - 2.0) + 0.5;
    1.0 / (1.0 + diff * diff * factor * factor)
}

/// Maximum admixture of the nontrivial state for two stacks with
/// M = (N+3)/2, from the second-order matrix elements. Valid for odd N ≥ 3
/// except N = 5 (where the pair splits already at first order).
pub fn p_nontrivial(n: u32) -> Result<f64> {
    if n < 3 || n % 2 == 0 || n == 5 {
        return Err(Error::Domain(format!(
            "nontrivial-state admixture needs odd N >= 3, N != 5, got {n}"
        )));
    }
    let nf = n as f64;
    // all in units of −ħU (J/U)²
    let h_mm = nf * (nf + 5.0) / (nf - 5.0) - (nf * nf + 3.0 * nf + 3.0) / (nf - 1.0)
        + (nf + 3.0) / (nf + 1.0);
    let h_pp = (nf + 1.0) / nf + (5.0 * nf + 7.0) / (nf + 5.0) + 2.0 * (nf - 1.0) / (nf - 5.0)
        - (nf + 1.0) / (nf - 1.0);
    let h_pm = -2.0 * (nf + 3.0).sqrt() / (nf - 1.0);
    let x = (h_mm - h_pp) / (2.0 * h_pm.abs());
    Ok(1.0 / (1.0 + x * x))
}

/// Bundle of the transfer/exchange observables for one configuration.
pub fn rabi_quantities(
    l: usize,
    n: u32,
    stack_site: usize,
    k: u32,
    j: f64,
    u: f64,
) -> Result<RabiQuantities> {
    if stack_site >= l {
        return Err(Error::Domain(format!(
            "stack site {stack_site} outside chain of {l} sites"
        )));
    }
    Ok(RabiQuantities {
        p_minus_to_plus: rabi_p_minus_to_plus(l, n, stack_site),
        omega_k: omega_k(l, k, n, j, u).ok(),
        p_nontrivial: p_nontrivial(n).ok(),
    })
}
