//! Numerically exact unitary propagation.
//!
//! [`evolve_krylov_observe`] propagates a state with adaptive Lanczos
//! (Krylov-subspace) stepping: within each step the propagator is
//! approximated on a low-dimensional Krylov subspace, the local error is
//! estimated from the weight carried by the last basis vector, and the step
//! is halved until the estimate meets the tolerance. The spectrum is centered
//! by the diagonal mean before stepping, and the corresponding global phase
//! is restored afterwards, so results are directly comparable with
//! [`evolve_dense_oracle`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::Basis;
use crate::hamiltonian::SparseOperator;
use crate::lattice::LatticeGraph;
use crate::linalg::{dense_propagate, dot, norm, symmetric_eigen};
use crate::units::to_us;
use crate::{Error, Result};

/// Dense-oracle dimension cap.
pub const DENSE_ORACLE_CAP: usize = 2000;

/// Strictly increasing list of instants (seconds), starting at 0.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<TimeGrid> {
        if times.is_empty() || times[0] != 0.0 {
            return Err(Error::Domain("time grid must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("time grid must be strictly increasing".into()));
        }
        Ok(TimeGrid { times })
    }

    /// Uniform grid of `samples` points covering [0, t_max_us] microseconds.
    pub fn uniform_us(t_max_us: f64, samples: usize) -> Result<TimeGrid> {
        if t_max_us <= 0.0 || samples < 2 {
            return Err(Error::Domain(
                "need t_max > 0 and at least two samples".into(),
            ));
        }
        let t_max = t_max_us * 1e-6;
        let times = (0..samples)
            .map(|k| t_max * k as f64 / (samples - 1) as f64)
            .collect();
        TimeGrid::from_times(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Error budget for the whole propagation; each step receives the share
    /// proportional to its length, so the accumulated error stays near `tol`.
    pub tol: f64,
    /// Maximum Krylov subspace dimension.
    pub m_max: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-10,
            m_max: 30,
        }
    }
}

/// Observable time series on a grid, labelled per column.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times_us: Vec<f64>,
    pub labels: Vec<String>,
    /// values[k][c] is observable `c` at grid point `k`.
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let c = self.labels.iter().position(|l| l == label)?;
        Some(self.values.iter().map(|row| row[c]).collect())
    }

    /// CSV rendering: `t_us,<labels...>[,t_nat]`. The optional natural-unit
    /// time column counts periods of `natural_rate` (rad/s).
    pub fn to_csv(&self, natural_rate: Option<f64>) -> String {
        let mut out = String::new();
        out.push_str("t_us");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        if natural_rate.is_some() {
            out.push_str(",t_nat");
        }
        out.push('\n');
        for (k, t) in self.times_us.iter().enumerate() {
            out.push_str(&format!("{t:.6}"));
            for v in &self.values[k] {
                out.push_str(&format!(",{v:.9e}"));
            }
            if let Some(rate) = natural_rate {
                let t_nat = t * 1e-6 * rate.abs() / std::f64::consts::TAU;
                out.push_str(&format!(",{t_nat:.9e}"));
            }
            out.push('\n');
        }
        out
    }
}

// one adaptive Lanczos step of exp(-i (H - shift) tau) |psi>
struct Stepper<'a> {
    h: &'a SparseOperator,
    shift: f64,
    m_max: usize,
    breakdown: f64,
}

impl<'a> Stepper<'a> {
    fn apply_shifted(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = self.h.apply_complex(v).expect("dimension checked");
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= self.shift * vi;
        }
        w
    }

    /// Returns the propagated state and a local error estimate.
    fn step(&self, psi: &[Complex64], tau: f64) -> (Vec<Complex64>, f64) {
        let mut basis: Vec<Vec<Complex64>> = vec![psi.to_vec()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut beta_tail = 0.0;
        let mut happy = false;
        for j in 0..self.m_max {
            let mut w = self.apply_shifted(&basis[j]);
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            for (wi, vi) in w.iter_mut().zip(&basis[j]) {
                *wi -= alpha * vi;
            }
            if j > 0 {
                let beta = betas[j - 1];
                for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= beta * vi;
                }
            }
            // full reorthogonalization; subspaces are small
            for prev in &basis {
                let c = dot(prev, &w);
                for (wi, pi) in w.iter_mut().zip(prev) {
                    *wi -= c * pi;
                }
            }
            let beta = norm(&w);
            if beta <= self.breakdown {
                happy = true;
                break;
            }
            if j + 1 == self.m_max {
                beta_tail = beta;
                break;
            }
            betas.push(beta);
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            basis.push(w);
        }
        let m = basis.len();
        let tri = TridiagEigen::new(&alphas[..m], &betas[..m.saturating_sub(1)]);
        let y = tri.expm_column(tau);
        let err = if happy || m == 1 {
            if happy {
                0.0
            } else {
                // a single Krylov vector cannot represent the rotation
                1.0
            }
        } else {
            // in-space part: difference against the nested (m−1)-dimensional
            // solution; out-of-space part: the boundary weight integrated
            // over the step leaks at rate β_{m+1} (the φ₁-weighted estimate;
            // the endpoint weight alone can sit on an oscillation zero)
            let y_red =
                TridiagEigen::new(&alphas[..m - 1], &betas[..m - 2]).expm_column(tau);
            let mut e2 = 0.0;
            for k in 0..m {
                let red = if k < m - 1 {
                    y_red[k]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                e2 += (y[k] - red).norm_sqr();
            }
            let leakage = beta_tail * tau * tri.phi1_boundary_weight(tau);
            e2.sqrt().max(leakage)
        };
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (k, v) in basis.iter().enumerate() {
            let c = y[k];
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        (out, err)
    }
}

// eigendecomposition of the small symmetric tridiagonal Lanczos matrix
struct TridiagEigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl TridiagEigen {
    fn new(alphas: &[f64], betas: &[f64]) -> Self {
        let m = alphas.len();
        let mut t = DMatrix::zeros(m, m);
        for (i, &a) in alphas.iter().enumerate() {
            t[(i, i)] = a;
        }
        for (i, &b) in betas.iter().enumerate() {
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        let eig = symmetric_eigen(&t);
        TridiagEigen {
            values: eig.values,
            vectors: eig.vectors,
        }
    }

    /// exp(-i T tau) e_1.
    fn expm_column(&self, tau: f64) -> Vec<Complex64> {
        let m = self.values.len();
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let phase = Complex64::from_polar(1.0, -self.values[k] * tau);
            let weight = self.vectors[(0, k)];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += phase * weight * self.vectors[(i, k)];
            }
        }
        y
    }

    /// |e_m^T φ₁(-i T tau) e_1|: the step-averaged weight on the last basis
    /// vector, φ₁(z) = (e^z − 1)/z.
    fn phi1_boundary_weight(&self, tau: f64) -> f64 {
        let m = self.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..m {
            let z = Complex64::new(0.0, -self.values[k] * tau);
            let phi1 = if z.norm() < 1e-8 {
                Complex64::new(1.0, 0.0) + z * 0.5
            } else {
                (z.exp() - 1.0) / z
            };
            acc += self.vectors[(m - 1, k)] * self.vectors[(0, k)] * phi1;
        }
        acc.norm()
    }
}

/// Propagate `psi0` and hand each grid-point state to `observe`.
pub fn evolve_krylov_observe<F>(
    h: &SparseOperator,
    psi0: &[Complex64],
    grid: &TimeGrid,
    opts: &KrylovOptions,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[Complex64]),
{
    if !h.is_hermitian() {
        return Err(Error::Domain("propagation needs a Hermitian operator".into()));
    }
    if psi0.len() != h.dim() {
        return Err(Error::Dimension(format!(
            "state has dim {}, operator {}",
            psi0.len(),
            h.dim()
        )));
    }
    let n0 = norm(psi0);
    if (n0 - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization(format!(
            "initial norm is {n0}, expected 1 within 1e-12"
        )));
    }
    let shift = h.diagonal_mean();
    let scale = h.inf_norm() + shift.abs();
    let stepper = Stepper {
        h,
        shift,
        m_max: opts.m_max.max(1),
        breakdown: 1e-14 * scale.max(f64::MIN_POSITIVE),
    };
    let total = *grid.times().last().unwrap();
    let min_tau = (total * 1e-13).max(f64::MIN_POSITIVE);

    let mut psi = psi0.to_vec();
    observe(0, 0.0, &psi);
    let mut tau_pref = if grid.len() > 1 {
        grid.times()[1]
    } else {
        total
    };
    // proportional budgeting, floored where the two-size estimate bottoms
    // out in rounding noise (which grows with the subspace dimension)
    let noise_floor = 1e-14f64.max(opts.m_max as f64 * 1e-15);
    let budget = |tau: f64| (opts.tol * tau / total).max(noise_floor);
    // the estimate scales steeply with tau, so the controller moves gently
    let damp = 1.0 / (2.0 * opts.m_max.max(1) as f64);
    let trace = std::env::var_os("ANHARMONIC_TRACE").is_some();
    for k in 1..grid.len() {
        let target = grid.times()[k];
        let mut t = grid.times()[k - 1];
        let mut stat_steps = 0u64;
        let mut stat_rejects = 0u64;
        let mut stat_err_sum = 0.0f64;
        let mut stat_tau_max = 0.0f64;
        while target - t > 0.0 {
            let remaining = target - t;
            let final_step = tau_pref >= remaining;
            let tau = if final_step { remaining } else { tau_pref };
            let (cand, err) = stepper.step(&psi, tau);
            let b = budget(tau);
            if trace {
                if err <= b {
                    stat_steps += 1;
                    stat_err_sum += err;
                    stat_tau_max = stat_tau_max.max(tau);
                } else {
                    stat_rejects += 1;
                }
            }
            if err <= b {
                let phase = Complex64::from_polar(1.0, -shift * tau);
                psi = cand.into_iter().map(|z| z * phase).collect();
                // snap the closing step so the loop cannot stall on a
                // sub-ulp residual
                t = if final_step { target } else { t + tau };
                if !final_step {
                    // an artificially shortened closing step says nothing
                    // about the error at the preferred length
                    let ratio = if err > 0.0 { b / err } else { f64::INFINITY };
                    let grow = (0.9 * ratio.powf(damp)).clamp(1.0, 1.2);
                    tau_pref = (tau * grow).min(total);
                }
            } else {
                let shrink = (0.9 * (b / err).powf(damp)).clamp(0.25, 0.95);
                tau_pref = tau * shrink;
                if tau_pref < min_tau {
                    return Err(Error::Convergence(format!(
                        "Krylov step size collapsed below {min_tau:e} s \
                         (m_max = {}, tol = {:e})",
                        opts.m_max, opts.tol
                    )));
                }
            }
        }
        if trace {
            eprintln!(
                "[trace] interval {k}: {stat_steps} steps (+{stat_rejects} rejected), \
                 sum est = {stat_err_sum:.3e}, max tau = {stat_tau_max:.3e}"
            );
        }
        observe(k, target, &psi);
    }
    Ok(())
}

/// Propagate and collect the state at every grid point.
pub fn evolve_krylov(
    h: &SparseOperator,
    psi0: &[Complex64],
    grid: &TimeGrid,
    opts: &KrylovOptions,
) -> Result<Vec<Vec<Complex64>>> {
    let mut states = Vec::with_capacity(grid.len());
    evolve_krylov_observe(h, psi0, grid, opts, |_, _, psi| states.push(psi.to_vec()))?;
    Ok(states)
}

/// Exact propagation by dense eigendecomposition; the validation oracle.
pub fn evolve_dense_oracle(
    h: &SparseOperator,
    psi0: &[Complex64],
    grid: &TimeGrid,
) -> Result<Vec<Vec<Complex64>>> {
    if h.dim() > DENSE_ORACLE_CAP {
        return Err(Error::Capacity(format!(
            "dense oracle limited to dim {DENSE_ORACLE_CAP}, got {}",
            h.dim()
        )));
    }
    if psi0.len() != h.dim() {
        return Err(Error::Dimension(format!(
            "state has dim {}, operator {}",
            psi0.len(),
            h.dim()
        )));
    }
    Ok(dense_propagate(&h.to_dense(), psi0, grid.times()))
}

/// Per-site occupations ⟨n_l⟩(t) from stored states.
pub fn occupation_series(times: &[f64], states: &[Vec<Complex64>], basis: &Basis) -> TimeSeries {
    let l = basis.sites();
    let labels = (1..=l).map(|i| format!("n_{i}")).collect();
    let values = states
        .iter()
        .map(|psi| {
            let mut occ = vec![0.0; l];
            for (amp, state) in psi.iter().zip(basis.states()) {
                let p = amp.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                for (o, &n) in occ.iter_mut().zip(state.occupations()) {
                    *o += p * n as f64;
                }
            }
            occ
        })
        .collect();
    TimeSeries {
        times_us: times.iter().map(|&t| to_us(t)).collect(),
        labels,
        values,
    }
}

/// Occupations aggregated by Manhattan distance from `origin`:
/// ⟨n_d⟩(t) = Σ_{sites at distance d} ⟨n_site⟩(t).
pub fn manhattan_series(
    times: &[f64],
    states: &[Vec<Complex64>],
    basis: &Basis,
    graph: &LatticeGraph,
    origin: usize,
) -> Result<TimeSeries> {
    let l = basis.sites();
    let dist: Vec<usize> = (0..l)
        .map(|s| graph.manhattan(origin, s))
        .collect::<Result<_>>()?;
    let d_max = dist.iter().copied().max().unwrap_or(0);
    let site_series = occupation_series(times, states, basis);
    let values = site_series
        .values
        .iter()
        .map(|occ| {
            let mut agg = vec![0.0; d_max + 1];
            for (site, &d) in dist.iter().enumerate() {
                agg[d] += occ[site];
            }
            agg
        })
        .collect();
    Ok(TimeSeries {
        times_us: site_series.times_us,
        labels: (0..=d_max).map(|d| format!("n_d{d}")).collect(),
        values,
    })
}
