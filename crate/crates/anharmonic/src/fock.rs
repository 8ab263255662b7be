//! Bosonic Fock basis at fixed total boson number.
//!
//! States are occupation-number vectors `|n_1 n_2 … n_L>` with `Σ n_l = N`,
//! ordered lexicographically descending so that `|N 0 … 0>` has rank 0.
//! Ranking is purely combinatorial (binomial tables, no hashing), which keeps
//! basis construction reproducible and O(L·N) per lookup.

use std::fmt;

use crate::{Error, Result};

/// Default cap on the basis dimension C(N+L−1, N).
pub const DEFAULT_DIM_CAP: u128 = 50_000_000;

/// Occupation-number vector over the lattice sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FockState {
    occ: Vec<u32>,
}

impl FockState {
    pub fn new(occ: Vec<u32>) -> Self {
        FockState { occ }
    }

    /// Place `n` bosons on `site` of an otherwise empty chain of `l` sites.
    pub fn stack(l: usize, site: usize, n: u32) -> Self {
        let mut occ = vec![0; l];
        occ[site] = n;
        FockState { occ }
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occ
    }

    pub fn sites(&self) -> usize {
        self.occ.len()
    }

    pub fn total_bosons(&self) -> u32 {
        self.occ.iter().sum()
    }

    /// Total anharmonicity A = −Σ_l n_l (n_l − 1) / 2.
    pub fn anharmonicity(&self) -> i64 {
        -self
            .occ
            .iter()
            .map(|&n| (n as i64) * (n as i64 - 1) / 2)
            .sum::<i64>()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.occ.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

/// Total anharmonicity of an occupation vector.
pub fn anharmonicity(state: &FockState) -> i64 {
    state.anharmonicity()
}

/// Hilbert-space dimension C(N+L−1, N) for `l` sites and `n` bosons.
pub fn dimension(l: usize, n: u32) -> u128 {
    binomial_u128(n as u128 + l as u128 - 1, n as u128)
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Complete Fock basis with `l` sites and `n` total bosons.
#[derive(Debug, Clone)]
pub struct Basis {
    sites: usize,
    bosons: u32,
    states: Vec<FockState>,
    // binom[a][b] = C(a, b), for a ≤ bosons + sites
    binom: Vec<Vec<u64>>,
}

impl Basis {
    /// Enumerate the full basis in descending lexicographic order, with the
    /// default dimension cap.
    pub fn enumerate(l: usize, n: u32) -> Result<Basis> {
        Basis::enumerate_capped(l, n, DEFAULT_DIM_CAP)
    }

    /// Enumerate with an explicit dimension cap.
    pub fn enumerate_capped(l: usize, n: u32, cap: u128) -> Result<Basis> {
        if l == 0 {
            return Err(Error::InvalidSize("basis needs at least one site".into()));
        }
        let dim = dimension(l, n);
        if dim > cap {
            return Err(Error::Capacity(format!(
                "basis dimension C({}, {}) = {} exceeds cap {}",
                n as usize + l - 1,
                n,
                dim,
                cap
            )));
        }
        let dim = dim as usize;
        let mut states = Vec::with_capacity(dim);
        let mut occ = vec![0u32; l];
        occ[0] = n;
        loop {
            states.push(FockState::new(occ.clone()));
            // descending-lex successor: decrement the rightmost nonzero among
            // the first L−1 sites and dump everything to its right onto the
            // next site
            let mut i = None;
            for k in (0..l - 1).rev() {
                if occ[k] > 0 {
                    i = Some(k);
                    break;
                }
            }
            let Some(i) = i else { break };
            let rest: u32 = occ[i + 1..].iter().sum();
            occ[i] -= 1;
            occ[i + 1] = rest + 1;
            for v in occ[i + 2..].iter_mut() {
                *v = 0;
            }
        }
        debug_assert_eq!(states.len(), dim);

        let rows = n as usize + l;
        let mut binom = vec![vec![0u64; rows]; rows];
        for a in 0..rows {
            binom[a][0] = 1;
            for b in 1..=a {
                binom[a][b] = binom[a - 1][b - 1] + if b <= a - 1 { binom[a - 1][b] } else { 0 };
            }
        }

        Ok(Basis {
            sites: l,
            bosons: n,
            states,
            binom,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn bosons(&self) -> u32 {
        self.bosons
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, rank: usize) -> &FockState {
        &self.states[rank]
    }

    fn c(&self, a: usize, b: usize) -> u64 {
        self.binom[a][b]
    }

    /// Combinatorial rank of `state` in the descending-lex ordering.
    pub fn rank(&self, state: &FockState) -> Result<usize> {
        if state.sites() != self.sites {
            return Err(Error::Membership(format!(
                "state has {} sites, basis has {}",
                state.sites(),
                self.sites
            )));
        }
        if state.total_bosons() != self.bosons {
            return Err(Error::Membership(format!(
                "state {} carries {} bosons, basis holds {}",
                state,
                state.total_bosons(),
                self.bosons
            )));
        }
        let occ = state.occupations();
        let mut rank: u64 = 0;
        let mut rem = self.bosons as usize;
        for site in 0..self.sites - 1 {
            let v = occ[site] as usize;
            let tail = self.sites - site - 1;
            if v < rem {
                // states with larger occupation at this site precede ours
                rank += self.c(rem - v - 1 + tail, rem - v - 1);
            }
            rem -= v;
        }
        Ok(rank as usize)
    }

    /// Inverse of [`Basis::rank`].
    pub fn unrank(&self, rank: usize) -> FockState {
        assert!(rank < self.len(), "rank {} out of range", rank);
        let mut r = rank as u64;
        let mut rem = self.bosons as usize;
        let mut occ = vec![0u32; self.sites];
        for site in 0..self.sites - 1 {
            let tail = self.sites - site - 1;
            let mut m = rem;
            loop {
                let block = self.c(rem - m + tail - 1, rem - m);
                if r < block {
                    occ[site] = m as u32;
                    rem -= m;
                    break;
                }
                r -= block;
                m -= 1;
            }
        }
        occ[self.sites - 1] = rem as u32;
        FockState::new(occ)
    }

    /// Apply a single-boson hop `from → to`, returning the target state and
    /// the bosonic matrix element factor √(n_from · (n_to + 1)).
    pub fn hop(&self, state: &FockState, from: usize, to: usize) -> Option<(FockState, f64)> {
        let occ = state.occupations();
        if occ[from] == 0 {
            return None;
        }
        let amp = ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
        let mut next = occ.to_vec();
        next[from] -= 1;
        next[to] += 1;
        Some((FockState::new(next), amp))
    }
}

/// Subspace of basis indices sharing one anharmonicity value.
#[derive(Debug, Clone)]
pub struct Manifold {
    pub anharmonicity: i64,
    /// Member ranks into the parent basis, ascending.
    pub members: Vec<usize>,
}

impl Manifold {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// All and only the states with anharmonicity `a`. May be empty.
pub fn manifold(basis: &Basis, a: i64) -> Manifold {
    let members = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.anharmonicity() == a)
        .map(|(i, _)| i)
        .collect();
    Manifold {
        anharmonicity: a,
        members,
    }
}

/// Structure report for the anharmonicity manifold of two stacks of sizes
/// `n ≥ m ≥ 2` on `l` sites (total bosons N + M).
#[derive(Debug, Clone)]
pub struct NontrivialReport {
    pub l: usize,
    pub n: u32,
    pub m: u32,
    pub anharmonicity: i64,
    pub manifold_dim: usize,
    pub trivial_count: usize,
    pub nontrivial_count: usize,
    /// Every nontrivial member occupies at least three sites.
    pub occupy_three_plus: bool,
    /// Every nontrivial member has maximum occupation ≥ N + 1.
    pub max_occ_at_least: bool,
    /// Every nontrivial member has second-highest occupation ≤ M − 2.
    pub second_occ_at_most: bool,
    /// Second-order coupling between nontrivial and trivial states is
    /// possible exactly when M = (N + 3)/2.
    pub second_order_coupling: bool,
}

/// Exhaustively classify the two-stack manifold of `|N_a, M_b>` states.
pub fn nontrivial_manifold_report(l: usize, n: u32, m: u32) -> Result<NontrivialReport> {
    if m < 2 || m > n {
        return Err(Error::Domain(format!(
            "need 2 <= M <= N, got N = {n}, M = {m}"
        )));
    }
    let basis = Basis::enumerate(l, n + m)?;
    let a = -((n as i64) * (n as i64 - 1) / 2) - (m as i64) * (m as i64 - 1) / 2;
    let mf = manifold(&basis, a);

    let mut trivial = 0usize;
    let mut nontrivial = 0usize;
    let mut occupy_three_plus = true;
    let mut max_occ_at_least = true;
    let mut second_occ_at_most = true;
    for &idx in &mf.members {
        let state = basis.state(idx);
        let mut occ: Vec<u32> = state
            .occupations()
            .iter()
            .copied()
            .filter(|&v| v > 0)
            .collect();
        occ.sort_unstable_by(|x, y| y.cmp(x));
        let is_trivial = occ.len() == 2 && occ[0] == n && occ[1] == m;
        if is_trivial {
            trivial += 1;
        } else {
            nontrivial += 1;
            occupy_three_plus &= occ.len() >= 3;
            max_occ_at_least &= occ[0] >= n + 1;
            second_occ_at_most &= occ.len() < 2 || occ[1] + 2 <= m;
        }
    }

    Ok(NontrivialReport {
        l,
        n,
        m,
        anharmonicity: a,
        manifold_dim: mf.len(),
        trivial_count: trivial,
        nontrivial_count: nontrivial,
        occupy_three_plus,
        max_occ_at_least,
        second_occ_at_most,
        second_order_coupling: 2 * m == n + 3,
    })
}
