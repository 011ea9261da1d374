//! Stochastic point-vortex dynamics on the plane.
//!
//! The library simulates n point vortices whose Lagrangian trajectories are
//! perturbed by spatially correlated transport noise,
//!
//! ```text
//! d𝒙_α = u(𝒙_α) dt + Σ_i ξ_i(𝒙_α) ∘ dW^i_t ,
//! ```
//!
//! under several readings of the stochastic integral: deterministic, Itô,
//! Stratonovich, Stratonovich with a Wong–Zakai drift anomaly, a pure-area
//! process, Stratonovich with an explicit Lévy-area correction, and fractional
//! Brownian driving. Conserved-quantity diagnostics (impulses, Kirchhoff
//! energy, triangle shape) discriminate between the interpretations, and the
//! `homogenization` module extracts drift, diffusion, and area anomaly from a
//! fast Ornstein–Uhlenbeck system by Green–Kubo integration.

pub mod ensemble;
pub mod fields;
pub mod geometry;
pub mod homogenization;
pub mod integrators;
pub mod noise;

pub mod cli;

use thiserror::Error;

/// Crate-wide error type. Numerical routines return structured errors rather
/// than panicking so ensemble drivers can record per-member failures and keep
/// going.
#[derive(Debug, Error)]
pub enum Error {
    #[error("positions ({positions}) and strengths ({strengths}) differ in length")]
    LengthMismatch { positions: usize, strengths: usize },

    #[error("empty vortex configuration")]
    EmptyState,

    #[error("total vortex strength is zero; center of vorticity undefined")]
    ZeroTotalStrength,

    #[error("vortices {i} and {j} coincide; Hamiltonian undefined")]
    CoincidentVortices { i: usize, j: usize },

    #[error("nonpositive separation {sep}; Green's function undefined")]
    NonpositiveSeparation { sep: f64 },

    #[error("degenerate triangle side of length {len:e} (minimum {min:e})")]
    DegenerateSide { len: f64, min: f64 },

    #[error("trajectory blew up at step {step} (t = {t}): non-finite state component")]
    BlowUp { step: usize, t: f64 },

    #[error("driving path has {have} channels, integrator needs {need}")]
    ChannelMismatch { have: usize, need: usize },

    #[error("driving path provides {have} steps, integration needs {need}")]
    StepMismatch { have: usize, need: usize },

    #[error("method {method:?} needs Lévy areas but the driving path has none")]
    MissingAreas { method: String },

    #[error("circulant embedding is not positive semidefinite (min eigenvalue {min_eig:e}); cannot sample fBM at H = {hurst}")]
    NonPsdEmbedding { hurst: f64, min_eig: f64 },

    #[error("Hurst exponent {hurst} outside (1/3, 1)")]
    BadHurst { hurst: f64 },

    #[error("matrix is not antisymmetric: {context}")]
    NotAntisymmetric { context: String },

    #[error("matrix is not positive definite: {context}")]
    NotPositiveDefinite { context: String },

    #[error("fast-drift matrix has eigenvalue with non-positive real part {real_part}")]
    UnstableDrift { real_part: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
