//! Default numerical settings shared by the library and the command line.

/// Gauss–Hermite order used for every Gaussian expectation.
pub const RULE_ORDER: usize = 64;

/// Nodes of the signal-insider `η` grid.
pub const SIGNAL_GRID_SIZE: usize = 201;

/// Half-width of the `η` grid in standard deviations of `η ~ N(m, v + v_eps)`.
pub const SIGNAL_GRID_HALFWIDTH_SD: f64 = 6.0;

/// Relative sup-norm tolerance of the signal-insider outer iteration.
pub const SIGNAL_TOL: f64 = 1e-13;

/// Cap on signal-insider outer iterations.
pub const SIGNAL_MAX_OUTER: usize = 10_000;

/// Nodes of the tabulated `q̄(η)` used by the simulator.
pub const SIGNAL_TABLE_SIZE: usize = 2001;

/// Simulation time step in years.
pub const DT: f64 = 0.01;

/// Monte Carlo paths per price.
pub const N_PATHS: usize = 100_000;

/// Seed of the counter-based path generator.
pub const SEED: u64 = 20_240_601;

/// Target bound on the truncated tail when the horizon is not given.
pub const TAIL_TOL: f64 = 1e-4;

/// Environment variable holding the number of Monte Carlo worker threads.
pub const WORKERS_ENV: &str = "INFOVAL_WORKERS";
