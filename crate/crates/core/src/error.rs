use thiserror::Error;

/// Errors raised by the analytic solvers and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates a type invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The power amplifier would have to radiate more than its rated maximum.
    #[error("infeasible power: required output {required:.6e} exceeds the PA maximum {max:.6e}")]
    InfeasiblePower { required: f64, max: f64 },

    /// No finite antenna count satisfies the outage constraint.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A bracketed root search found no sign change.
    #[error("no root in [{lo}, {hi}]: {reason}")]
    NoRoot { lo: f64, hi: f64, reason: String },

    /// The integer search exceeded its upper bound.
    #[error("no antenna count up to {limit} satisfies the outage constraint")]
    SearchBound { limit: u32 },

    #[error("power schedule has {got} entries but the HARQ configuration has {expected} rounds")]
    ScheduleLength { expected: usize, got: usize },

    /// The requested channel model is not defined for this geometry.
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
}

pub type Result<T> = std::result::Result<T, Error>;
