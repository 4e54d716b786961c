//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Membrane displacement reached or exceeded the rest gap.
    #[error("gap closure: |x| = {x:.3e} m exceeds the rest gap {gap:.3e} m")]
    GapClosure { x: f64, gap: f64 },

    /// Frequencies must be strictly positive.
    #[error("non-positive frequency: {0} rad/s")]
    NonPositiveFrequency(f64),

    /// A parameter violated its domain (message names the offender).
    #[error("domain violation: {0}")]
    Domain(String),

    /// A neighbouring overtone branch sits within the isolation margin.
    #[error("overlapping modes: neighbour at {separation:.3e} rad/s is within {required:.3e} rad/s")]
    OverlappingModes { separation: f64, required: f64 },

    /// A least-squares fit failed to converge to a usable optimum.
    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),

    /// The residual function produced a non-finite value.
    #[error("non-finite residual at parameter vector {0:?}")]
    NonFiniteResidual(Vec<f64>),

    /// Finite-difference step is below the numerical noise floor.
    #[error("finite-difference step too small: h = {h:.3e} (h and h/2 disagree by {relative:.3e})")]
    StepTooSmall { h: f64, relative: f64 },

    /// Time-domain state exceeded the configured divergence bound.
    #[error("instability detected at t = {t:.3e} s: |state| = {magnitude:.3e} exceeds bound {bound:.3e}")]
    InstabilityDetected { t: f64, magnitude: f64, bound: f64 },

    /// Halving the step changes the final state beyond tolerance.
    #[error("integration step too large: halving dt changes the final state by {relative:.3e}")]
    StepTooLarge { relative: f64 },

    /// The analysed trace segment is not stationary.
    #[error("transient not settled: leading/trailing tooth spectra differ by {delta_db:.2} dB")]
    TransientNotSettled { delta_db: f64 },

    /// Sideband order outside the series truncation bound.
    #[error("sideband order |{n}| exceeds the truncation bound {bound}")]
    TruncationBound { n: i32, bound: i32 },

    /// Spectrum grid too coarse to resolve the feature of interest.
    #[error("grid too coarse: {points_across} points across the linewidth (need at least {required})")]
    GridTooCoarse { points_across: usize, required: usize },

    /// More than one dip found where a single resonance was expected.
    #[error("multiple dips detected ({0} candidates)")]
    MultiDipDetected(usize),

    /// Resonance feature indistinguishable from the background.
    #[error("background dominated: dip depth {depth:.3e} below {required:.3e}")]
    BackgroundDominated { depth: f64, required: f64 },

    /// Ringdown fitter requires a decaying envelope.
    #[error("trace envelope is not decaying")]
    NonDecayingTrace,

    /// Transparency window below the grid resolution.
    #[error("window unresolved: gamma_eff = {gamma_eff:.3e} rad/s below grid step {grid_step:.3e}")]
    WindowUnresolved { gamma_eff: f64, grid_step: f64 },

    /// Fit parameters not independently constrained by the data.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Scenario/parameter file could not be parsed.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
