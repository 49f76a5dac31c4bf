use thiserror::Error;

/// Errors raised by the solvers, the simulator and the pricing layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature order {0} outside 1..=200")]
    QuadratureOrder(usize),

    #[error("non-finite integrand value at x = {0}")]
    NonFiniteIntegrand(f64),

    #[error("non-finite objective value at x = {0}")]
    NonFiniteObjective(f64),

    #[error("{name} = {value} outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("ambiguous maximizer: scan maxima at {first} and {second} agree within 1e-9")]
    AmbiguousMaximum { first: f64, second: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("fixed-point iterate {0} left the safety bracket (0, X_MAX)")]
    LeftBracket(f64),

    #[error("boundary maximizer: {name} = {value} is within 1e-6 of the boundary of [0, 1]")]
    BoundaryMaximizer { name: &'static str, value: f64 },

    #[error("value function undefined: {0}")]
    UndefinedValue(String),

    #[error("ill-posed: λg(a*)/(λ+Rγ_M) = {0} ≥ 1")]
    IllPosed(f64),

    #[error("signal-insider gate violated: requires R > 1 and (μ−r)/(σ²R) in (0,1), got R = {risk_aversion}, (μ−r)/(σ²R) = {merton_fraction}")]
    SignalGate {
        risk_aversion: f64,
        merton_fraction: f64,
    },

    #[error("maximal-solution selection failed: A3 = {a3} exceeds A1 = {a1}")]
    MaximalSelection { a3: f64, a1: f64 },

    #[error("outer iteration for (h, A3) not monotone after damping (step {step})")]
    NonMonotone { step: usize },

    #[error("degenerate signal: v_eps = 0 reveals the jump exactly")]
    DegenerateSignal,

    #[error("wealth must be positive, got {0}")]
    NonPositiveWealth(f64),

    #[error("non-finite wealth at t = {0}")]
    NonFiniteWealth(f64),

    #[error("discount condition violated: {0}")]
    Discount(String),

    #[error("income stream fails the growth guard: {0}")]
    GrowthGuard(String),

    #[error("invalid simulation config: {0}")]
    SimConfig(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Usage and configuration problems, as opposed to model/domain failures.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::SimConfig(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
