//! Array geometry, per-site model parameters, disorder sampling and
//! flux-tuning compensation rules.
//!
//! All frequencies are angular (rad/s). Site indices are 0-based in the API;
//! serialized documents and observable labels are 1-based.

use serde::{Deserialize, Serialize};

use crate::units::{mhz, to_mhz};
use crate::{Error, Result};

/// Per-site model parameters: on-site energy ω, attractive anharmonicity U,
/// and their disorder deviations δω, δU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteParams {
    pub omega: f64,
    pub u: f64,
    pub delta_omega: f64,
    pub delta_u: f64,
}

/// How the δU deviation enters the Hamiltonian.
///
/// `HalfNegative` keeps the interaction form `−Σ δU_l n(n−1)/2`, i.e. δU is a
/// deviation of the anharmonicity itself. `PlainPositive` adds
/// `+Σ δU_l n(n−1)` instead. Both appear in practice; the default is
/// `HalfNegative`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderConvention {
    #[default]
    HalfNegative,
    PlainPositive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    Chain,
    Rectangle { lx: usize, ly: usize },
    Custom,
}

impl Geometry {
    pub fn tag(&self) -> String {
        match self {
            Geometry::Chain => "chain".into(),
            Geometry::Rectangle { lx, ly } => format!("rectangle:{lx}x{ly}"),
            Geometry::Custom => "custom".into(),
        }
    }

    fn parse(tag: &str) -> Result<Geometry> {
        if tag == "chain" {
            return Ok(Geometry::Chain);
        }
        if tag == "custom" {
            return Ok(Geometry::Custom);
        }
        if let Some(dims) = tag.strip_prefix("rectangle:") {
            if let Some((a, b)) = dims.split_once('x') {
                let lx = a.parse().map_err(|_| bad_tag(tag))?;
                let ly = b.parse().map_err(|_| bad_tag(tag))?;
                return Ok(Geometry::Rectangle { lx, ly });
            }
        }
        Err(bad_tag(tag))
    }
}

fn bad_tag(tag: &str) -> Error {
    Error::Config(format!("unrecognized geometry tag {tag:?}"))
}

/// Sites, weighted hopping edges and geometry of one array.
#[derive(Debug, Clone)]
pub struct LatticeGraph {
    pub sites: Vec<SiteParams>,
    /// Undirected edges (a, b, J), stored once with a < b.
    pub edges: Vec<(usize, usize, f64)>,
    pub geometry: Geometry,
    pub convention: DisorderConvention,
}

impl LatticeGraph {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Lattice coordinates of a site, for geometries that have them.
    pub fn coord(&self, site: usize) -> Result<(usize, usize)> {
        match self.geometry {
            Geometry::Chain => Ok((site, 0)),
            Geometry::Rectangle { lx, .. } => Ok((site % lx, site / lx)),
            Geometry::Custom => Err(Error::Geometry(
                "custom geometry has no coordinate map".into(),
            )),
        }
    }

    /// Site index from rectangle coordinates (0-based).
    pub fn site_at(&self, x: usize, y: usize) -> Result<usize> {
        match self.geometry {
            Geometry::Chain => {
                if y != 0 {
                    return Err(Error::Geometry("chain has a single row".into()));
                }
                Ok(x)
            }
            Geometry::Rectangle { lx, ly } => {
                if x >= lx || y >= ly {
                    return Err(Error::Geometry(format!(
                        "coordinate ({x}, {y}) outside {lx}x{ly} rectangle"
                    )));
                }
                Ok(y * lx + x)
            }
            Geometry::Custom => Err(Error::Geometry(
                "custom geometry has no coordinate map".into(),
            )),
        }
    }

    /// Manhattan (geodesic) distance between two sites.
    pub fn manhattan(&self, a: usize, b: usize) -> Result<usize> {
        let (xa, ya) = self.coord(a)?;
        let (xb, yb) = self.coord(b)?;
        Ok(xa.abs_diff(xb) + ya.abs_diff(yb))
    }

    /// Uniform base frequencies, or an error if the sites disagree.
    pub fn uniform_base(&self) -> Result<(f64, f64)> {
        let omega = self.sites[0].omega;
        let u = self.sites[0].u;
        for s in &self.sites {
            if (s.omega - omega).abs() > 1e-9 * omega.abs().max(1.0)
                || (s.u - u).abs() > 1e-9 * u.abs().max(1.0)
            {
                return Err(Error::Domain(
                    "graph has non-uniform base parameters; put variations in the deviations"
                        .into(),
                ));
            }
        }
        Ok((omega, u))
    }

    pub fn has_disorder(&self) -> bool {
        self.sites
            .iter()
            .any(|s| s.delta_omega != 0.0 || s.delta_u != 0.0)
    }
}

/// Chain of `l` identical sites with nearest-neighbor hopping `j`.
pub fn build_chain(l: usize, j: f64, u: f64, omega: f64) -> Result<LatticeGraph> {
    if l == 0 {
        return Err(Error::InvalidSize("chain needs at least one site".into()));
    }
    if u <= 0.0 {
        return Err(Error::Domain("anharmonicity U must be positive".into()));
    }
    let site = SiteParams {
        omega,
        u,
        delta_omega: 0.0,
        delta_u: 0.0,
    };
    let edges = (0..l.saturating_sub(1)).map(|i| (i, i + 1, j)).collect();
    Ok(LatticeGraph {
        sites: vec![site; l],
        edges,
        geometry: Geometry::Chain,
        convention: DisorderConvention::default(),
    })
}

/// Rectangular `lx × ly` array with nearest-neighbor hopping `j`.
pub fn build_rectangle(lx: usize, ly: usize, j: f64, u: f64, omega: f64) -> Result<LatticeGraph> {
    if lx == 0 || ly == 0 {
        return Err(Error::InvalidSize(
            "rectangle needs nonzero dimensions".into(),
        ));
    }
    if u <= 0.0 {
        return Err(Error::Domain("anharmonicity U must be positive".into()));
    }
    let site = SiteParams {
        omega,
        u,
        delta_omega: 0.0,
        delta_u: 0.0,
    };
    let mut edges = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            let i = y * lx + x;
            if x + 1 < lx {
                edges.push((i, i + 1, j));
            }
            if y + 1 < ly {
                edges.push((i, i + lx, j));
            }
        }
    }
    Ok(LatticeGraph {
        sites: vec![site; lx * ly],
        edges,
        geometry: Geometry::Rectangle { lx, ly },
        convention: DisorderConvention::default(),
    })
}

/// Half-widths of the uniform disorder distributions, plus sign convention,
/// seed, and optional literal deviation lists that bypass sampling.
#[derive(Debug, Clone, Default)]
pub struct DisorderSpec {
    pub d_omega: f64,
    pub d_u: f64,
    pub convention: DisorderConvention,
    pub seed: u64,
    pub explicit_delta_omega: Option<Vec<f64>>,
    pub explicit_delta_u: Option<Vec<f64>>,
}

// splitmix64: tiny, stable, and bit-reproducible across platforms
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [−1, 1).
    fn next_symmetric(&mut self) -> f64 {
        let r = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * r - 1.0
    }
}

/// Draw per-site deviations δω ~ U[−D_ω, D_ω], δU ~ U[−D_U, D_U].
///
/// Pure function of `(graph, spec)`: the same seed yields a bit-identical
/// result. Explicit deviation lists in the spec override the sampling.
pub fn sample_disorder(graph: &LatticeGraph, spec: &DisorderSpec) -> Result<LatticeGraph> {
    if spec.d_omega < 0.0 || spec.d_u < 0.0 {
        return Err(Error::Domain("disorder half-widths must be >= 0".into()));
    }
    let l = graph.len();
    for list in [&spec.explicit_delta_omega, &spec.explicit_delta_u]
        .into_iter()
        .flatten()
    {
        if list.len() != l {
            return Err(Error::Dimension(format!(
                "explicit deviation list has {} entries for {} sites",
                list.len(),
                l
            )));
        }
    }
    let mut rng = SplitMix64(spec.seed);
    let mut out = graph.clone();
    out.convention = spec.convention;
    for (i, site) in out.sites.iter_mut().enumerate() {
        let sampled_omega = spec.d_omega * rng.next_symmetric();
        let sampled_u = spec.d_u * rng.next_symmetric();
        site.delta_omega = match &spec.explicit_delta_omega {
            Some(v) => v[i],
            None => sampled_omega,
        };
        site.delta_u = match &spec.explicit_delta_u {
            Some(v) => v[i],
            None => sampled_u,
        };
    }
    Ok(out)
}

/// Flux-tuning compensation rules: overwrite the δω deviations so that the
/// disorder Hamiltonian acts trivially on the targeted manifold subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TuningRule {
    None,
    /// Cancel the in-manifold disorder for a single N-stack.
    SingleStack { n: u32 },
    /// Cancel the in-manifold disorder for stack-boson exchange around the
    /// central pair (L/2, L/2 + 1). Requires an even chain length.
    ExchangePair { n: u32 },
    /// Make the two-stack pair `|N_a, M_b>`, `|M_a, N_b>` degenerate.
    TwoStackPair {
        n: u32,
        m: u32,
        site_a: usize,
        site_b: usize,
    },
}

/// Overwrite δω according to the tuning rule. The rule formulas are written
/// for the `HalfNegative` convention; under `PlainPositive` the deviations
/// enter the Hamiltonian with an extra factor −2, which is applied here.
pub fn apply_tuning(graph: &LatticeGraph, rule: &TuningRule) -> Result<LatticeGraph> {
    let l = graph.len();
    let eff = |du: f64| match graph.convention {
        DisorderConvention::HalfNegative => du,
        DisorderConvention::PlainPositive => -2.0 * du,
    };
    let mut out = graph.clone();
    match *rule {
        TuningRule::None => {}
        TuningRule::SingleStack { n } => {
            if n < 1 {
                return Err(Error::Rule("stack size must be >= 1".into()));
            }
            for site in out.sites.iter_mut() {
                site.delta_omega = eff(site.delta_u) * (n as f64 - 1.0) / 2.0;
            }
        }
        TuningRule::ExchangePair { n } => {
            if l % 2 != 0 || l < 2 {
                return Err(Error::Rule(format!(
                    "exchange-pair tuning needs an even chain length, got {l}"
                )));
            }
            let a = l / 2 - 1; // site L/2, 0-based
            let b = l / 2;
            let nf = n as f64;
            let du_a = eff(graph.sites[a].delta_u);
            let du_b = eff(graph.sites[b].delta_u);
            let left = nf / (2.0 * (nf + 1.0)) * (du_a * nf - du_b);
            let right = nf / (2.0 * (nf + 1.0)) * (du_b * nf - du_a);
            for (i, site) in out.sites.iter_mut().enumerate() {
                site.delta_omega = if i <= a { left } else { right };
            }
        }
        TuningRule::TwoStackPair {
            n,
            m,
            site_a,
            site_b,
        } => {
            if site_a >= l || site_b >= l || site_a == site_b {
                return Err(Error::Rule(format!(
                    "two-stack pair sites ({site_a}, {site_b}) invalid for {l} sites"
                )));
            }
            if m < 2 || m > n {
                return Err(Error::Rule(format!(
                    "two-stack pair needs 2 <= M <= N, got N = {n}, M = {m}"
                )));
            }
            let nf = n as f64;
            let mf = m as f64;
            let du_a = eff(graph.sites[site_a].delta_u);
            let du_b = eff(graph.sites[site_b].delta_u);
            let c_same = (nf * nf + mf * mf + nf * mf - nf - mf) / (2.0 * (nf + mf));
            let c_cross = nf * mf / (2.0 * (nf + mf));
            for (i, site) in out.sites.iter_mut().enumerate() {
                site.delta_omega = if i == site_a {
                    du_a * c_same - du_b * c_cross
                } else if i == site_b {
                    du_b * c_same - du_a * c_cross
                } else {
                    0.0
                };
            }
        }
    }
    Ok(out)
}

/// Effective disorder strength D = max{D_ω, (J/U)² D_U}.
pub fn effective_disorder_strength(d_omega: f64, d_u: f64, j: f64, u: f64) -> Result<f64> {
    if u == 0.0 {
        return Err(Error::Domain(
            "effective disorder strength needs U != 0".into(),
        ));
    }
    let ratio = j / u;
    Ok(d_omega.max(ratio * ratio * d_u))
}

// ---------------------------------------------------------------------------
// serialization (MHz-valued structured text)

#[derive(Serialize, Deserialize)]
struct SiteDoc {
    #[serde(rename = "omega_MHz")]
    omega_mhz: f64,
    #[serde(rename = "U_MHz")]
    u_mhz: f64,
    #[serde(rename = "dOmega_MHz")]
    d_omega_mhz: f64,
    #[serde(rename = "dU_MHz")]
    d_u_mhz: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    /// 1-based site indices.
    a: usize,
    b: usize,
    #[serde(rename = "J_MHz")]
    j_mhz: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    geometry: String,
    convention: DisorderConvention,
    sites: Vec<SiteDoc>,
    edges: Vec<EdgeDoc>,
}

impl LatticeGraph {
    /// Serialize to the structured text document (TOML, MHz values,
    /// 1-based edge indices).
    pub fn to_document(&self) -> String {
        let doc = GraphDoc {
            geometry: self.geometry.tag(),
            convention: self.convention,
            sites: self
                .sites
                .iter()
                .map(|s| SiteDoc {
                    omega_mhz: to_mhz(s.omega),
                    u_mhz: to_mhz(s.u),
                    d_omega_mhz: to_mhz(s.delta_omega),
                    d_u_mhz: to_mhz(s.delta_u),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, j)| EdgeDoc {
                    a: a + 1,
                    b: b + 1,
                    j_mhz: to_mhz(j),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("graph serialization cannot fail")
    }

    /// Parse a graph document produced by [`LatticeGraph::to_document`].
    pub fn from_document(text: &str) -> Result<LatticeGraph> {
        let doc: GraphDoc = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let geometry = Geometry::parse(&doc.geometry)?;
        let sites: Vec<SiteParams> = doc
            .sites
            .iter()
            .map(|s| SiteParams {
                omega: mhz(s.omega_mhz),
                u: mhz(s.u_mhz),
                delta_omega: mhz(s.d_omega_mhz),
                delta_u: mhz(s.d_u_mhz),
            })
            .collect();
        let mut edges = Vec::new();
        for e in &doc.edges {
            if e.a == 0 || e.b == 0 || e.a > sites.len() || e.b > sites.len() || e.a == e.b {
                return Err(Error::Config(format!(
                    "edge ({}, {}) out of range or degenerate",
                    e.a, e.b
                )));
            }
            let (a, b) = (e.a - 1, e.b - 1);
            edges.push((a.min(b), a.max(b), mhz(e.j_mhz)));
        }
        Ok(LatticeGraph {
            sites,
            edges,
            geometry,
            convention: doc.convention,
        })
    }
}
