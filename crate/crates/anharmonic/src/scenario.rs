//! Scenario-driven simulation runner: configs, figure presets, CSV and
//! metadata output, and full-vs-effective comparison reports.
//!
//! A scenario is a single structured text document (TOML). Every run is
//! reproducible bit-for-bit from its config: disorder comes from a seeded
//! generator or explicit deviation lists, and assembly is deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effmodels::{
    build_single_stack_model, build_stack_boson_model, build_two_stack_model, t_stack_boson,
    tilde_j, xi_ell_adjacent_sizes, xi_stack_boson, EffectiveModel, RateSet,
};
use crate::evolution::{
    evolve_krylov, occupation_series, KrylovOptions, TimeGrid, TimeSeries,
};
use crate::fock::{manifold, Basis, FockState};
use crate::hamiltonian::build_hamiltonian;
use crate::lattice::{
    apply_tuning, build_chain, build_rectangle, sample_disorder, DisorderConvention, DisorderSpec,
    Geometry, LatticeGraph, TuningRule,
};
use crate::linalg::dense_propagate;
use crate::perturbation::{
    build_projected, effective_hamiltonian, resolve_manifold, DEFAULT_CLUSTER_TOL, DEFAULT_N_MAX,
};
use crate::units::{mhz, to_mhz, to_us};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// configuration document

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSection {
    pub geometry: String,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, rename = "Lx", skip_serializing_if = "Option::is_none")]
    pub lx: Option<usize>,
    #[serde(default, rename = "Ly", skip_serializing_if = "Option::is_none")]
    pub ly: Option<usize>,
    #[serde(rename = "J_MHz")]
    pub j_mhz: f64,
    #[serde(rename = "U_MHz")]
    pub u_mhz: f64,
    #[serde(default, rename = "omega_MHz")]
    pub omega_mhz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TuningSection {
    pub kind: String,
    #[serde(default, rename = "N")]
    pub n: u32,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// 1-based site indices for the two-stack pair rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_b: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct DisorderSection {
    #[serde(default, rename = "D_omega_MHz")]
    pub d_omega_mhz: f64,
    #[serde(default, rename = "D_U_MHz")]
    pub d_u_mhz: f64,
    #[serde(default, rename = "delta_omega_MHz", skip_serializing_if = "Option::is_none")]
    pub delta_omega_mhz: Option<Vec<f64>>,
    #[serde(default, rename = "delta_U_MHz", skip_serializing_if = "Option::is_none")]
    pub delta_u_mhz: Option<Vec<f64>>,
    #[serde(default)]
    pub convention: DisorderConvention,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSection {
    pub occupations: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSection {
    pub t_max_us: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSection {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    /// "auto" picks a closed-form model when the initial state matches one,
    /// "engine" forces the numeric perturbation engine.
    #[serde(default = "default_model_choice")]
    pub effective_model: String,
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

fn default_cluster_tol() -> f64 {
    DEFAULT_CLUSTER_TOL
}

fn default_model_choice() -> String {
    "auto".into()
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            n_max: default_n_max(),
            cluster_tol: default_cluster_tol(),
            effective_model: default_model_choice(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    /// Observable sets: "site" and/or "manhattan".
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default = "default_label")]
    pub label: String,
    /// Optional natural-unit time axis rate, MHz.
    #[serde(default, rename = "natural_rate_MHz", skip_serializing_if = "Option::is_none")]
    pub natural_rate_mhz: Option<f64>,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_observables() -> Vec<String> {
    vec!["site".into()]
}

fn default_label() -> String {
    "scenario".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
            observables: default_observables(),
            label: default_label(),
            natural_rate_mhz: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// "full", "effective" or "both".
    pub method: String,
    pub lattice: LatticeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderSection>,
    pub initial: InitialSection,
    pub time: TimeSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Build the (possibly disordered, possibly tuned) lattice graph.
    pub fn build_graph(&self) -> Result<LatticeGraph> {
        let lat = &self.lattice;
        let j = mhz(lat.j_mhz);
        let u = mhz(lat.u_mhz);
        let omega = mhz(lat.omega_mhz);
        let graph = match lat.geometry.as_str() {
            "chain" => {
                let l = lat
                    .l
                    .ok_or_else(|| Error::Config("lattice.L is required for a chain".into()))?;
                build_chain(l, j, u, omega)?
            }
            "rectangle" => {
                let lx = lat
                    .lx
                    .ok_or_else(|| Error::Config("lattice.Lx is required for a rectangle".into()))?;
                let ly = lat
                    .ly
                    .ok_or_else(|| Error::Config("lattice.Ly is required for a rectangle".into()))?;
                build_rectangle(lx, ly, j, u, omega)?
            }
            other => {
                return Err(Error::Config(format!(
                    "lattice.geometry must be \"chain\" or \"rectangle\", got {other:?}"
                )))
            }
        };
        let Some(dis) = &self.disorder else {
            return Ok(graph);
        };
        let spec = DisorderSpec {
            d_omega: mhz(dis.d_omega_mhz),
            d_u: mhz(dis.d_u_mhz),
            convention: dis.convention,
            seed: dis.seed,
            explicit_delta_omega: dis
                .delta_omega_mhz
                .as_ref()
                .map(|v| v.iter().map(|&x| mhz(x)).collect()),
            explicit_delta_u: dis
                .delta_u_mhz
                .as_ref()
                .map(|v| v.iter().map(|&x| mhz(x)).collect()),
        };
        let graph = sample_disorder(&graph, &spec)?;
        let Some(tuning) = &dis.tuning else {
            return Ok(graph);
        };
        let rule = match tuning.kind.as_str() {
            "none" => TuningRule::None,
            "single_stack" => TuningRule::SingleStack { n: tuning.n },
            "exchange_pair" => TuningRule::ExchangePair { n: tuning.n },
            "two_stack_pair" => TuningRule::TwoStackPair {
                n: tuning.n,
                m: tuning
                    .m
                    .ok_or_else(|| Error::Config("disorder.tuning.M is required".into()))?,
                site_a: tuning
                    .site_a
                    .ok_or_else(|| Error::Config("disorder.tuning.site_a is required".into()))?
                    .checked_sub(1)
                    .ok_or_else(|| Error::Config("disorder.tuning.site_a is 1-based".into()))?,
                site_b: tuning
                    .site_b
                    .ok_or_else(|| Error::Config("disorder.tuning.site_b is required".into()))?
                    .checked_sub(1)
                    .ok_or_else(|| Error::Config("disorder.tuning.site_b is 1-based".into()))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "disorder.tuning.kind {other:?} is not one of none, single_stack, \
                     exchange_pair, two_stack_pair"
                )))
            }
        };
        apply_tuning(&graph, &rule)
    }
}

// ---------------------------------------------------------------------------
// comparison report

/// Per-observable deviation and dominant-frequency comparison of two series
/// on identical grids.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub labels: Vec<String>,
    pub max_abs_dev: Vec<f64>,
    pub freq_full_mhz: Vec<f64>,
    pub freq_eff_mhz: Vec<f64>,
}

impl ComparisonReport {
    pub fn worst_deviation(&self) -> f64 {
        self.max_abs_dev.iter().copied().fold(0.0, f64::max)
    }
}

/// Compare two series sharing a time grid and observable labels.
pub fn compare(full: &TimeSeries, eff: &TimeSeries) -> Result<ComparisonReport> {
    if full.times_us.len() != eff.times_us.len()
        || full
            .times_us
            .iter()
            .zip(&eff.times_us)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1e-9))
    {
        return Err(Error::Dimension("time grids differ".into()));
    }
    if full.labels != eff.labels {
        return Err(Error::Dimension("observable labels differ".into()));
    }
    let n_obs = full.labels.len();
    let mut max_abs_dev = vec![0.0f64; n_obs];
    for (row_f, row_e) in full.values.iter().zip(&eff.values) {
        for c in 0..n_obs {
            max_abs_dev[c] = max_abs_dev[c].max((row_f[c] - row_e[c]).abs());
        }
    }
    let col = |series: &TimeSeries, c: usize| -> Vec<f64> {
        series.values.iter().map(|row| row[c]).collect()
    };
    let freq_full_mhz = (0..n_obs)
        .map(|c| dominant_frequency(&full.times_us, &col(full, c)))
        .collect();
    let freq_eff_mhz = (0..n_obs)
        .map(|c| dominant_frequency(&eff.times_us, &col(eff, c)))
        .collect();
    Ok(ComparisonReport {
        labels: full.labels.clone(),
        max_abs_dev,
        freq_full_mhz,
        freq_eff_mhz,
    })
}

/// Dominant oscillation frequency (MHz) of a uniformly sampled signal:
/// windowed discrete-transform power peak with parabolic refinement.
/// Returns 0 for signals with no oscillating content.
pub fn dominant_frequency(times_us: &[f64], values: &[f64]) -> f64 {
    let k = times_us.len();
    if k < 4 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let dt = (times_us[k - 1] - times_us[0]) / (k - 1) as f64;
    let f_nyq = 0.5 / dt;
    let window: Vec<f64> = (0..k)
        .map(|i| {
            let x = std::f64::consts::TAU * i as f64 / (k - 1) as f64;
            0.5 * (1.0 - x.cos())
        })
        .collect();
    let signal: Vec<f64> = values
        .iter()
        .zip(&window)
        .map(|(&v, &w)| (v - mean) * w)
        .collect();
    let rms = (signal.iter().map(|v| v * v).sum::<f64>() / k as f64).sqrt();
    if rms < 1e-12 {
        return 0.0;
    }
    let n_freq = 4096;
    let f_min = 1.0 / (2.0 * (times_us[k - 1] - times_us[0]));
    let power_at = |f: f64| -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &s) in signal.iter().enumerate() {
            let phase = std::f64::consts::TAU * f * times_us[i];
            re += s * phase.cos();
            im -= s * phase.sin();
        }
        re * re + im * im
    };
    let mut best = (0usize, 0.0f64);
    let freqs: Vec<f64> = (0..n_freq)
        .map(|i| f_min + (f_nyq - f_min) * i as f64 / (n_freq - 1) as f64)
        .collect();
    let powers: Vec<f64> = freqs.iter().map(|&f| power_at(f)).collect();
    for (i, &p) in powers.iter().enumerate() {
        if p > best.1 {
            best = (i, p);
        }
    }
    let i = best.0;
    if i == 0 || i + 1 >= n_freq {
        return freqs[i];
    }
    // parabolic interpolation of the peak
    let (pm, p0, pp) = (powers[i - 1], powers[i], powers[i + 1]);
    let denom = pm - 2.0 * p0 + pp;
    let shift = if denom.abs() > 0.0 {
        0.5 * (pm - pp) / denom
    } else {
        0.0
    };
    freqs[i] + shift * (freqs[1] - freqs[0])
}

// ---------------------------------------------------------------------------
// spectrum scan

#[derive(Debug, Clone)]
pub struct SpectrumScan {
    /// Eigenvalues ascending (rad/s).
    pub energies: Vec<f64>,
    /// Nearest anharmonicity band A per eigenvalue.
    pub nearest_band: Vec<i64>,
    pub manifold_sizes: BTreeMap<i64, usize>,
    pub u: f64,
}

pub fn spectrum_scan(l: usize, n: u32, j: f64, u: f64) -> Result<SpectrumScan> {
    let basis = Basis::enumerate_capped(l, n, 5000)?;
    let graph = build_chain(l, j, u, 0.0)?;
    let h = build_hamiltonian(&graph, &basis)?;
    let eig = crate::linalg::symmetric_eigen(&h.to_dense());
    let bands: Vec<i64> = {
        let mut values: Vec<i64> = basis.states().iter().map(|s| s.anharmonicity()).collect();
        values.sort_unstable();
        values.dedup();
        values
    };
    let mut manifold_sizes = BTreeMap::new();
    for &a in &bands {
        manifold_sizes.insert(a, manifold(&basis, a).len());
    }
    let nearest_band = eig
        .values
        .iter()
        .map(|&e| {
            *bands
                .iter()
                .min_by(|&&a, &&b| {
                    let da = (e - u * a as f64).abs();
                    let db = (e - u * b as f64).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
        })
        .collect();
    Ok(SpectrumScan {
        energies: eig.values,
        nearest_band,
        manifold_sizes,
        u,
    })
}

impl SpectrumScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,E_MHz,band_A,offset_MHz\n");
        for (k, (&e, &a)) in self.energies.iter().zip(&self.nearest_band).enumerate() {
            let offset = e - self.u * a as f64;
            out.push_str(&format!(
                "{k},{:.9e},{a},{:.9e}\n",
                to_mhz(e),
                to_mhz(offset)
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// scenario runner

#[derive(Debug, Clone, PartialEq, Eq)]
enum EffectiveKind {
    SingleStack { n: u32 },
    StackBoson { n: u32, stack_site: usize },
    TwoStack { n: u32, m: u32 },
    Engine,
}

impl EffectiveKind {
    fn name(&self) -> String {
        match self {
            EffectiveKind::SingleStack { .. } => "single_stack".into(),
            EffectiveKind::StackBoson { .. } => "stack_boson".into(),
            EffectiveKind::TwoStack { .. } => "two_stack".into(),
            EffectiveKind::Engine => "engine".into(),
        }
    }
}

fn classify_initial(graph: &LatticeGraph, occ: &[u32]) -> EffectiveKind {
    if graph.geometry != Geometry::Chain || graph.has_disorder() {
        return EffectiveKind::Engine;
    }
    let mut nonzero: Vec<(usize, u32)> = occ
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| (s, n))
        .collect();
    nonzero.sort_by(|a, b| b.1.cmp(&a.1));
    match nonzero.as_slice() {
        [(_, _n)] => EffectiveKind::SingleStack { n: nonzero[0].1 },
        [(sn, n), (_, 1)] if *n >= 2 => EffectiveKind::StackBoson {
            n: *n,
            stack_site: *sn,
        },
        [(_, n), (_, m)] if *m >= 2 => EffectiveKind::TwoStack { n: *n, m: *m },
        _ => EffectiveKind::Engine,
    }
}

/// Everything produced by one scenario run.
#[derive(Debug)]
pub struct ScenarioOutput {
    pub label: String,
    pub files: Vec<PathBuf>,
    pub full_site: Option<TimeSeries>,
    pub eff_site: Option<TimeSeries>,
    pub comparison: Option<ComparisonReport>,
    pub basis_dim: usize,
    pub manifold_dim: usize,
    pub effective_kind: Option<String>,
}

fn site_labels(graph: &LatticeGraph) -> Vec<String> {
    match graph.geometry {
        Geometry::Rectangle { lx, ly } => {
            let mut labels = Vec::with_capacity(lx * ly);
            for y in 0..ly {
                for x in 0..lx {
                    labels.push(format!("n_{}_{}", x + 1, y + 1));
                }
            }
            labels
        }
        _ => (1..=graph.len()).map(|i| format!("n_{i}")).collect(),
    }
}

fn aggregate_manhattan(
    site_series: &TimeSeries,
    graph: &LatticeGraph,
    origin: usize,
) -> Result<TimeSeries> {
    let l = graph.len();
    let dist: Vec<usize> = (0..l)
        .map(|s| graph.manhattan(origin, s))
        .collect::<Result<_>>()?;
    let d_max = dist.iter().copied().max().unwrap_or(0);
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
        times_us: site_series.times_us.clone(),
        labels: (0..=d_max).map(|d| format!("n_d{d}")).collect(),
        values,
    })
}

fn series_from_occupations(times: &[f64], occ: Vec<Vec<f64>>, labels: Vec<String>) -> TimeSeries {
    TimeSeries {
        times_us: times.iter().map(|&t| to_us(t)).collect(),
        labels,
        values: occ,
    }
}

#[derive(Serialize)]
struct ResultMeta {
    basis_dim: usize,
    manifold_dim: usize,
    wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    effective_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    effective_ignores_disorder: Option<bool>,
    rates: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct MetaDoc<'a> {
    config: &'a ScenarioConfig,
    result: ResultMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a ComparisonReport>,
}

/// Run one scenario: evolve, extract observables, write CSV series and the
/// metadata sidecar, and (for `method = "both"`) the comparison report.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    let started = Instant::now();
    match config.method.as_str() {
        "full" | "effective" | "both" => {}
        other => {
            return Err(Error::Config(format!(
                "method must be full, effective or both, got {other:?}"
            )))
        }
    }
    let graph = config.build_graph()?;
    let occ = &config.initial.occupations;
    if occ.len() != graph.len() {
        return Err(Error::Config(format!(
            "initial.occupations has {} entries for {} sites",
            occ.len(),
            graph.len()
        )));
    }
    let n_total: u32 = occ.iter().sum();
    if n_total == 0 {
        return Err(Error::Config("initial state must hold at least one boson".into()));
    }
    let basis = Basis::enumerate(graph.len(), n_total)?;
    let initial = FockState::new(occ.clone());
    let initial_rank = basis.rank(&initial)?;
    let a = initial.anharmonicity();
    let grid = TimeGrid::uniform_us(config.time.t_max_us, config.time.samples)?;
    let labels = site_labels(&graph);
    let origin = occ
        .iter()
        .enumerate()
        .max_by_key(|(_, &n)| n)
        .map(|(s, _)| s)
        .unwrap();
    let want_site = config.output.observables.iter().any(|o| o == "site");
    let want_manhattan = config.output.observables.iter().any(|o| o == "manhattan");
    if !want_site && !want_manhattan {
        return Err(Error::Config(
            "output.observables must include \"site\" and/or \"manhattan\"".into(),
        ));
    }

    let mut full_site: Option<TimeSeries> = None;
    if config.method != "effective" {
        let h = build_hamiltonian(&graph, &basis)?;
        let mut psi0 = vec![Complex64::new(0.0, 0.0); basis.len()];
        psi0[initial_rank] = Complex64::new(1.0, 0.0);
        // observables-only propagation: per-site occupations are recorded at
        // each grid point and the state vectors are discarded
        let l = graph.len();
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
        evolve_krylov_observe(&h, &psi0, &grid, &KrylovOptions::default(), |_, _, psi| {
            let mut occ = vec![0.0; l];
            for (amp, state) in psi.iter().zip(basis.states()) {
                let p = amp.norm_sqr();
                if p > 0.0 {
                    for (o, &n) in occ.iter_mut().zip(state.occupations()) {
                        *o += p * n as f64;
                    }
                }
            }
            values.push(occ);
        })?;
        full_site = Some(TimeSeries {
            times_us: grid.times().iter().map(|&t| to_us(t)).collect(),
            labels: labels.clone(),
            values,
        });
    }

    let mut eff_site: Option<TimeSeries> = None;
    let mut manifold_dim = manifold(&basis, a).len();
    let mut effective_kind: Option<String> = None;
    let mut rates = RateSet::default();
    if config.method != "full" {
        let kind = match config.perturbation.effective_model.as_str() {
            "auto" => classify_initial(&graph, occ),
            "engine" => EffectiveKind::Engine,
            other => {
                return Err(Error::Config(format!(
                    "perturbation.effective_model must be auto or engine, got {other:?}"
                )))
            }
        };
        effective_kind = Some(kind.name());
        let (j, u) = (mhz(config.lattice.j_mhz), mhz(config.lattice.u_mhz));
        let occupations: Vec<Vec<f64>> = match kind {
            EffectiveKind::Engine => {
                let problem = build_projected(&basis, &graph, a)?;
                manifold_dim = problem.dim();
                let tree = resolve_manifold(
                    &problem,
                    config.perturbation.n_max,
                    config.perturbation.cluster_tol,
                )?;
                let eff = effective_hamiltonian(&tree, &problem);
                let pos = eff
                    .members
                    .iter()
                    .position(|&m| m == initial_rank)
                    .expect("initial state lies in its own manifold");
                let mut psi0 = vec![Complex64::new(0.0, 0.0); eff.members.len()];
                psi0[pos] = Complex64::new(1.0, 0.0);
                let states = dense_propagate(&eff.matrix, &psi0, grid.times());
                states
                    .iter()
                    .map(|psi| {
                        let mut site_occ = vec![0.0; graph.len()];
                        for (amp, &member) in psi.iter().zip(&eff.members) {
                            let p = amp.norm_sqr();
                            for (o, &n) in
                                site_occ.iter_mut().zip(basis.state(member).occupations())
                            {
                                *o += p * n as f64;
                            }
                        }
                        site_occ
                    })
                    .collect()
            }
            ref closed => {
                let model: EffectiveModel = match *closed {
                    EffectiveKind::SingleStack { n } => {
                        build_single_stack_model(graph.len(), n, j, u)?
                    }
                    EffectiveKind::StackBoson { n, stack_site } => {
                        build_stack_boson_model(graph.len(), n, j, u, stack_site)?
                    }
                    EffectiveKind::TwoStack { n, m } => {
                        build_two_stack_model(graph.len(), n, m, j, u)?
                    }
                    EffectiveKind::Engine => unreachable!(),
                };
                manifold_dim = model.dim();
                rates = model.rates.clone();
                let coord0 = model.coord_of_occupations(occ).ok_or_else(|| {
                    Error::Membership(format!(
                        "initial state {initial} has no coordinate in the {} model",
                        kind.name()
                    ))
                })?;
                model.evolve_occupations(coord0, grid.times())
            }
        };
        eff_site = Some(series_from_occupations(
            grid.times(),
            occupations,
            labels.clone(),
        ));
    }

    let comparison = match (&full_site, &eff_site) {
        (Some(f), Some(e)) => Some(compare(f, e)?),
        _ => None,
    };

    // write outputs
    let dir = Path::new(&config.output.dir);
    fs::create_dir_all(dir)?;
    let label = &config.output.label;
    let natural = config.output.natural_rate_mhz.map(mhz);
    let mut files = Vec::new();
    let write = |name: String, content: String, files: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, content)?;
        files.push(path);
        Ok(())
    };
    for (tag, series) in [("full", &full_site), ("eff", &eff_site)] {
        if let Some(series) = series {
            if want_site {
                write(
                    format!("{label}_{tag}.csv"),
                    series.to_csv(natural),
                    &mut files,
                )?;
            }
            if want_manhattan {
                let agg = aggregate_manhattan(series, &graph, origin)?;
                write(
                    format!("{label}_{tag}_manhattan.csv"),
                    agg.to_csv(natural),
                    &mut files,
                )?;
            }
        }
    }
    let meta = MetaDoc {
        config,
        result: ResultMeta {
            basis_dim: basis.len(),
            manifold_dim,
            wall_time_s: started.elapsed().as_secs_f64(),
            effective_kind: effective_kind.clone(),
            effective_ignores_disorder: match (&effective_kind, graph.has_disorder()) {
                (Some(kind), true) if kind != "engine" => Some(true),
                _ => None,
            },
            rates: rates
                .entries
                .iter()
                .map(|(name, v)| (format!("{name}_MHz"), to_mhz(*v)))
                .collect(),
        },
        comparison: comparison.as_ref(),
    };
    let meta_text =
        toml::to_string_pretty(&meta).map_err(|e| Error::Config(format!("metadata: {e}")))?;
    write(format!("{label}_meta.toml"), meta_text, &mut files)?;

    Ok(ScenarioOutput {
        label: label.clone(),
        files,
        full_site,
        eff_site,
        comparison,
        basis_dim: basis.len(),
        manifold_dim,
        effective_kind,
    })
}

// ---------------------------------------------------------------------------
// presets

/// A named preset: either a batch of scenario configs or a spectrum scan.
pub enum Preset {
    Scenarios(Vec<ScenarioConfig>),
    Spectrum {
        l: usize,
        n: u32,
        j_mhz: f64,
        u_mhz: f64,
        label: String,
    },
}

pub const PRESET_NAMES: &[&str] = &[
    "fig1", "fig2ab", "fig2cd", "fig3ab", "fig3cd", "fig4ab", "fig4cd", "fig5a", "fig5b", "fig5c",
    "fig7a", "fig7b",
];

const APP_F_DELTA_U_MHZ: [f64; 6] = [1.59, -1.75, 4.62, -3.02, 3.81, 3.82];

fn chain_scenario(
    label: &str,
    l: usize,
    occupations: Vec<u32>,
    j_mhz: f64,
    u_mhz: f64,
    t_max_us: f64,
    samples: usize,
    natural_rate_mhz: Option<f64>,
) -> ScenarioConfig {
    ScenarioConfig {
        method: "both".into(),
        lattice: LatticeSection {
            geometry: "chain".into(),
            l: Some(l),
            lx: None,
            ly: None,
            j_mhz,
            u_mhz,
            omega_mhz: 0.0,
        },
        disorder: None,
        initial: InitialSection { occupations },
        time: TimeSection { t_max_us, samples },
        perturbation: PerturbationSection::default(),
        output: OutputSection {
            label: label.into(),
            natural_rate_mhz,
            ..Default::default()
        },
    }
}

/// Built-in presets mirroring the example simulations: J/2π = 10 MHz,
/// U/2π = 250 MHz (20 MHz for the spectrum scan).
pub fn preset(name: &str) -> Result<Preset> {
    let j = mhz(10.0);
    let u = mhz(250.0);
    let scenarios = match name {
        "fig1" => {
            return Ok(Preset::Spectrum {
                l: 6,
                n: 4,
                j_mhz: 20.0,
                u_mhz: 250.0,
                label: "fig1".into(),
            })
        }
        "fig2ab" => vec![chain_scenario(
            "fig2ab",
            4,
            vec![3, 0, 0, 0],
            10.0,
            250.0,
            50.0,
            501,
            Some(to_mhz(tilde_j(3, j, u).abs())),
        )],
        "fig2cd" => vec![chain_scenario(
            "fig2cd",
            4,
            vec![0, 3, 0, 0],
            10.0,
            250.0,
            50.0,
            501,
            Some(to_mhz(tilde_j(3, j, u).abs())),
        )],
        "fig3ab" => vec![chain_scenario(
            "fig3ab",
            3,
            vec![1, 4, 0],
            10.0,
            250.0,
            90.0,
            901,
            Some(to_mhz(t_stack_boson(4, j, u)?.abs())),
        )],
        "fig3cd" => vec![chain_scenario(
            "fig3cd",
            2,
            vec![4, 1],
            10.0,
            250.0,
            20.0,
            801,
            Some(to_mhz(xi_stack_boson(4, j, u)?.abs())),
        )],
        "fig4ab" => vec![chain_scenario(
            "fig4ab",
            6,
            vec![3, 0, 3, 0, 0, 0],
            10.0,
            250.0,
            90.0,
            601,
            Some(to_mhz(tilde_j(3, j, u).abs())),
        )],
        "fig4cd" => vec![chain_scenario(
            "fig4cd",
            6,
            vec![4, 0, 3, 0, 0, 0],
            10.0,
            250.0,
            6.0,
            601,
            Some(to_mhz(xi_ell_adjacent_sizes(4, 2, j, u)?.abs())),
        )],
        "fig5a" | "fig5b" | "fig5c" => {
            let (x, y, t_max, samples) = match name {
                "fig5a" => (0usize, 0usize, 50.0, 501),
                "fig5b" => (0, 1, 120.0, 601),
                _ => (1, 1, 250.0, 1001),
            };
            let mut occ = vec![0u32; 16];
            occ[y * 4 + x] = 3;
            vec![ScenarioConfig {
                method: "full".into(),
                lattice: LatticeSection {
                    geometry: "rectangle".into(),
                    l: None,
                    lx: Some(4),
                    ly: Some(4),
                    j_mhz: 10.0,
                    u_mhz: 250.0,
                    omega_mhz: 0.0,
                },
                disorder: None,
                initial: InitialSection { occupations: occ },
                time: TimeSection {
                    t_max_us: t_max,
                    samples,
                },
                perturbation: PerturbationSection::default(),
                output: OutputSection {
                    label: name.into(),
                    observables: vec!["site".into(), "manhattan".into()],
                    natural_rate_mhz: Some(to_mhz(tilde_j(3, j, u).abs())),
                    ..Default::default()
                },
            }]
        }
        "fig7a" | "fig7b" => {
            let occ = if name == "fig7a" {
                vec![0u32, 3, 0, 0, 0, 0]
            } else {
                vec![0u32, 3, 0, 0, 5, 0]
            };
            let mut runs = Vec::new();
            for variant in ["ideal", "untuned", "tuned"] {
                let mut cfg = chain_scenario(
                    &format!("{name}_{variant}"),
                    6,
                    occ.clone(),
                    10.0,
                    250.0,
                    50.0,
                    501,
                    Some(to_mhz(tilde_j(3, j, u).abs())),
                );
                cfg.method = "full".into();
                if variant != "ideal" {
                    cfg.disorder = Some(DisorderSection {
                        delta_u_mhz: Some(APP_F_DELTA_U_MHZ.to_vec()),
                        convention: DisorderConvention::PlainPositive,
                        tuning: (variant == "tuned").then(|| TuningSection {
                            kind: "single_stack".into(),
                            n: 3,
                            ..Default::default()
                        }),
                        ..Default::default()
                    });
                }
                runs.push(cfg);
            }
            runs
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(Preset::Scenarios(scenarios))
}

/// Run a preset into `out_dir`, returning the files written.
pub fn run_preset(name: &str, out_dir: &str) -> Result<Vec<PathBuf>> {
    match preset(name)? {
        Preset::Spectrum {
            l,
            n,
            j_mhz,
            u_mhz,
            label,
        } => {
            let scan = spectrum_scan(l, n, mhz(j_mhz), mhz(u_mhz))?;
            fs::create_dir_all(out_dir)?;
            let path = Path::new(out_dir).join(format!("{label}_spectrum.csv"));
            fs::write(&path, scan.to_csv())?;
            Ok(vec![path])
        }
        Preset::Scenarios(configs) => {
            let mut files = Vec::new();
            for mut config in configs {
                config.output.dir = out_dir.to_string();
                let out = run_scenario(&config)?;
                files.extend(out.files);
            }
            Ok(files)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_and_defaults() {
        let text = r#"
method = "both"

[lattice]
geometry = "chain"
L = 4
J_MHz = 10.0
U_MHz = 250.0

[initial]
occupations = [0, 3, 0, 0]

[time]
t_max_us = 50.0
samples = 101
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.lattice.l, Some(4));
        assert_eq!(cfg.perturbation.n_max, DEFAULT_N_MAX);
        assert_eq!(cfg.output.observables, vec!["site".to_string()]);
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back.initial.occupations, cfg.initial.occupations);
    }

    #[test]
    fn config_errors_carry_key_paths() {
        let text = r#"
method = "both"

[lattice]
geometry = "chain"
L = "four"
J_MHz = 10.0
U_MHz = 250.0

[initial]
occupations = [1]

[time]
t_max_us = 1.0
samples = 2
"#;
        match ScenarioConfig::from_toml(text) {
            Err(Error::Config(msg)) => assert!(msg.contains('L') || msg.contains("lattice")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn compare_identical_series_is_zero() {
        let series = TimeSeries {
            times_us: (0..64).map(|k| k as f64).collect(),
            labels: vec!["n_1".into()],
            values: (0..64).map(|k| vec![(0.3 * k as f64).sin()]).collect(),
        };
        let report = compare(&series, &series).unwrap();
        assert_eq!(report.worst_deviation(), 0.0);
        assert_eq!(report.freq_full_mhz, report.freq_eff_mhz);
    }

    #[test]
    fn compare_rejects_grid_mismatch() {
        let a = TimeSeries {
            times_us: vec![0.0, 1.0],
            labels: vec!["n_1".into()],
            values: vec![vec![0.0], vec![0.0]],
        };
        let mut b = a.clone();
        b.times_us[1] = 2.0;
        assert!(compare(&a, &b).is_err());
    }

    #[test]
    fn dominant_frequency_of_pure_tone() {
        let f0 = 0.048; // MHz
        let times: Vec<f64> = (0..501).map(|k| k as f64 * 0.1).collect(); // 50 us
        let values: Vec<f64> = times
            .iter()
            .map(|&t| 1.5 + 1.5 * (std::f64::consts::TAU * f0 * t).cos())
            .collect();
        let f = dominant_frequency(&times, &values);
        assert!(
            (f - f0).abs() / f0 < 0.02,
            "estimated {f} MHz, expected {f0} MHz"
        );
        // constant signal has no dominant tone
        let flat = vec![2.0; 501];
        assert_eq!(dominant_frequency(&times, &flat), 0.0);
    }

    #[test]
    fn spectrum_scan_zero_hopping_is_exact_bands() {
        let u = mhz(250.0);
        let scan = spectrum_scan(4, 3, 0.0, u).unwrap();
        for (&e, &a) in scan.energies.iter().zip(&scan.nearest_band) {
            assert!((e - u * a as f64).abs() < 1e-6 * u);
        }
        // multiplicities equal manifold sizes
        let mut seen: BTreeMap<i64, usize> = BTreeMap::new();
        for &a in &scan.nearest_band {
            *seen.entry(a).or_default() += 1;
        }
        assert_eq!(seen, scan.manifold_sizes);
    }

    #[test]
    fn spectrum_scan_two_site_one_boson() {
        let j = mhz(10.0);
        let scan = spectrum_scan(2, 1, j, mhz(250.0)).unwrap();
        assert!((scan.energies[0] + j).abs() < 1e-6);
        assert!((scan.energies[1] - j).abs() < 1e-6);
    }

    #[test]
    fn preset_names_all_resolve() {
        for name in PRESET_NAMES {
            assert!(preset(name).is_ok(), "preset {name} failed");
        }
        assert!(preset("fig99").is_err());
    }

    #[test]
    fn classify_initial_states() {
        let g = build_chain(4, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            classify_initial(&g, &[0, 3, 0, 0]),
            EffectiveKind::SingleStack { n: 3 }
        );
        assert_eq!(
            classify_initial(&g, &[1, 4, 0, 0]),
            EffectiveKind::StackBoson {
                n: 4,
                stack_site: 1
            }
        );
        assert_eq!(
            classify_initial(&g, &[3, 0, 3, 0]),
            EffectiveKind::TwoStack { n: 3, m: 3 }
        );
        assert_eq!(classify_initial(&g, &[1, 1, 1, 0]), EffectiveKind::Engine);
        let rect = build_rectangle(2, 2, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(classify_initial(&rect, &[3, 0, 0, 0]), EffectiveKind::Engine);
    }
}
