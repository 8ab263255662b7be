//! Exact and effective dynamics of boson stacks in arrays of coupled
//! anharmonic oscillators (transmons).
//!
//! The array is modeled by the attractive Bose-Hubbard Hamiltonian
//!
//! ```text
//! H/ħ = Σ_<l,m> J a†_l a_m  −  Σ_l (U_l/2) n_l (n_l − 1)  +  Σ_l ω_l n_l
//! ```
//!
//! in the regime `J ≪ U`, where the total anharmonicity
//! `A = −Σ_l n_l(n_l−1)/2` is approximately conserved and the spectrum
//! organizes into well-separated bands. The crate provides
//!
//! - [`lattice`]: chain/rectangle/custom geometries, per-site parameters,
//!   disorder sampling and flux-tuning compensation rules,
//! - [`fock`]: fixed-boson-number Fock bases with combinatorial ranking and
//!   anharmonicity manifolds,
//! - [`hamiltonian`]: sparse Hermitian operators in a fixed Fock basis,
//! - [`evolution`]: numerically exact unitary propagation (adaptive Krylov
//!   subspace stepping) with a dense eigendecomposition oracle,
//! - [`perturbation`]: a high-order degenerate perturbation engine that
//!   resolves anharmonicity manifolds order by order and emits numeric
//!   effective Hamiltonians and individual coupling constants,
//! - [`effmodels`]: closed-form quasiparticle rates and reduced effective
//!   models (stack hopping, boundary wells, stack-boson tunneling/exchange,
//!   stack-stack interaction and exchange),
//! - [`scenario`]: scenario configs, figure presets, CSV/metadata output and
//!   full-vs-effective comparison reports.
//!
//! Frequencies are angular (rad/s) throughout the library; the CLI and the
//! config format speak MHz (cycles) and convert via 2π at the boundary.
//! `ħ = 1` everywhere.

pub mod units;
pub mod lattice;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod evolution;
pub mod perturbation;
pub mod effmodels;
pub mod scenario;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("not a member of the basis: {0}")]
    Membership(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported geometry: {0}")]
    Geometry(String),
    #[error("invalid tuning rule: {0}")]
    Rule(String),
    #[error("state not normalized: {0}")]
    Normalization(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("order sequencing: {0}")]
    Sequencing(String),
    #[error("empty manifold: {0}")]
    Manifold(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable process exit code per error category, used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::InvalidSize(_) | Error::Domain(_) | Error::Rule(_) => 3,
            Error::Capacity(_) => 4,
            Error::Membership(_) | Error::Dimension(_) | Error::Geometry(_) => 5,
            Error::Normalization(_) | Error::Convergence(_) | Error::Sequencing(_) => 6,
            Error::Manifold(_) => 7,
            Error::Io(_) => 8,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
