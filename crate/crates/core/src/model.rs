//! Market, preference and signal constants, well-posedness checks and the
//! income-stream data model.
//!
//! The risky asset has cumulative return
//!
//! ```text
//! dR_t = μ dt + σ dW_t + ∫ (e^x − 1) n(dt, dx),   jumps at rate λ, sizes x ~ N(m, v)
//! ```
//!
//! and the agent has power utility `U(x) = x^{1−R} / (1−R)` with time
//! discount `ρ`. The signal insider observes `η = ξ + ε` with
//! `ε ~ N(0, v_eps)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All model constants. Rates are per year, time is in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub mu: f64,
    pub r: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub m: f64,
    pub v: f64,
    pub rho: f64,
    #[serde(rename = "R")]
    pub risk_aversion: f64,
    pub v_eps: f64,
}

impl ModelParams {
    /// Repository test fixture used throughout the test suite and the README.
    pub const CANON: ModelParams = ModelParams {
        mu: 0.10,
        r: 0.05,
        sigma: 0.20,
        lambda: 0.5,
        m: -0.05,
        v: 0.01,
        rho: 0.10,
        risk_aversion: 2.0,
        v_eps: 0.02,
    };

    /// Dual exponent `q = (1 − R)/R`.
    pub fn dual_exponent(&self) -> f64 {
        (1.0 - self.risk_aversion) / self.risk_aversion
    }

    /// Merton fraction `(μ − r)/(σ²R)`.
    pub fn merton_fraction(&self) -> f64 {
        (self.mu - self.r) / (self.sigma * self.sigma * self.risk_aversion)
    }

    /// Power utility `x^{1−R}/(1−R)`.
    pub fn utility(&self, x: f64) -> f64 {
        let one_minus_r = 1.0 - self.risk_aversion;
        x.powf(one_minus_r) / one_minus_r
    }

    /// Standard deviation of the signal `η ~ N(m, v + v_eps)`.
    pub fn signal_sd(&self) -> f64 {
        (self.v + self.v_eps).sqrt()
    }

    /// Parse a TOML document whose keys are exactly the field names
    /// (`mu, r, sigma, lambda, m, v, rho, R, v_eps`). An optional `[psi.<name>]`
    /// table section declares piecewise-linear Ψ functions; any other key is
    /// rejected.
    pub fn from_toml_str(text: &str) -> Result<(ModelParams, BTreeMap<String, Psi>)> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut psis = BTreeMap::new();
        if let Some(section) = table.remove("psi") {
            let section = section
                .as_table()
                .ok_or_else(|| Error::Config("`psi` must be a table of named tables".into()))?;
            for (name, entry) in section {
                let spec: PsiTableSpec = entry
                    .clone()
                    .try_into()
                    .map_err(|e: toml::de::Error| Error::Config(format!("psi.{name}: {e}")))?;
                let table = PiecewiseLinear::new(spec.x, spec.y, spec.bound)
                    .map_err(|e| Error::Config(format!("psi.{name}: {e}")))?;
                psis.insert(name.clone(), Psi::Table(Arc::new(table)));
            }
        }
        let params: ModelParams = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok((params, psis))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PsiTableSpec {
    x: Vec<f64>,
    y: Vec<f64>,
    bound: f64,
}

/// One named check inside a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckFlag {
    pub name: String,
    pub pass: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub flags: Vec<CheckFlag>,
    /// Conjunction of `flags`.
    pub overall: bool,
    /// Regime-specific preconditions that do not affect `overall`.
    pub advisories: Vec<CheckFlag>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckFlag> {
        self.flags.iter().filter(|f| !f.pass)
    }

    pub fn flag(&self, name: &str) -> Option<&CheckFlag> {
        self.flags
            .iter()
            .chain(self.advisories.iter())
            .find(|f| f.name == name)
    }

    /// Turn a failed report into an [`Error::InvalidParams`] listing every failed message.
    pub fn into_result(self) -> Result<()> {
        if self.overall {
            return Ok(());
        }
        let msgs: Vec<_> = self.failures().map(|f| f.message.clone()).collect();
        Err(Error::InvalidParams(msgs.join("; ")))
    }
}

fn flag(name: &str, pass: bool, message: String) -> CheckFlag {
    CheckFlag {
        name: name.to_string(),
        pass,
        message,
    }
}

pub fn validate_params(p: &ModelParams) -> ValidationReport {
    let mut flags = Vec::new();
    let fields = [
        ("mu", p.mu),
        ("r", p.r),
        ("sigma", p.sigma),
        ("lambda", p.lambda),
        ("m", p.m),
        ("v", p.v),
        ("rho", p.rho),
        ("R", p.risk_aversion),
        ("v_eps", p.v_eps),
    ];
    let non_finite: Vec<_> = fields
        .iter()
        .filter(|(_, x)| !x.is_finite())
        .map(|(n, _)| *n)
        .collect();
    flags.push(flag(
        "finite",
        non_finite.is_empty(),
        if non_finite.is_empty() {
            "all parameters finite".into()
        } else {
            format!("non-finite parameters: {}", non_finite.join(", "))
        },
    ));
    flags.push(flag(
        "no_arbitrage",
        p.sigma > 0.0,
        format!("no-arbitrage (NUPBR) requires σ > 0, got σ = {}", p.sigma),
    ));
    flags.push(flag(
        "riskless_rate",
        p.r > 0.0,
        format!("riskless rate must satisfy r > 0, got r = {}", p.r),
    ));
    flags.push(flag(
        "jump_variance",
        p.v > 0.0,
        format!("jump-size variance must satisfy v > 0, got v = {}", p.v),
    ));
    flags.push(flag(
        "jump_intensity",
        p.lambda >= 0.0,
        format!("jump intensity must satisfy λ ≥ 0, got λ = {}", p.lambda),
    ));
    flags.push(flag(
        "signal_noise",
        p.v_eps >= 0.0,
        format!("signal noise variance must satisfy v_eps ≥ 0, got v_eps = {}", p.v_eps),
    ));
    flags.push(flag(
        "discount",
        p.rho > 0.0,
        format!("time discount must satisfy ρ > 0, got ρ = {}", p.rho),
    ));
    let utility_ok = p.risk_aversion > 0.0 && p.risk_aversion != 1.0;
    flags.push(flag(
        "utility",
        utility_ok,
        format!(
            "power utility requires R > 0 and R ≠ 1, got R = {}",
            p.risk_aversion
        ),
    ));
    let finiteness = p.risk_aversion <= 1.0 || p.rho >= (1.0 - p.risk_aversion) * p.r;
    flags.push(flag(
        "finite_value",
        finiteness,
        format!(
            "for R > 1 the value function is finite when ρ ≥ (1−R)r; ρ = {}, (1−R)r = {}",
            p.rho,
            (1.0 - p.risk_aversion) * p.r
        ),
    ));

    let frac = p.merton_fraction();
    let gate = p.risk_aversion > 1.0 && frac > 0.0 && frac < 1.0;
    let advisories = vec![flag(
        "signal_insider_gate",
        gate,
        format!(
            "signal insider requires R > 1 and (μ−r)/(σ²R) in (0,1); R = {}, (μ−r)/(σ²R) = {}",
            p.risk_aversion, frac
        ),
    )];

    let overall = flags.iter().all(|f| f.pass);
    ValidationReport {
        flags,
        overall,
        advisories,
    }
}

/// Piecewise-linear Ψ given by a table, flat beyond its end points.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    bound: f64,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, bound: f64) -> std::result::Result<Self, String> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err("x and y must be non-empty and of equal length".into());
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err("x must be strictly increasing".into());
        }
        if !bound.is_finite() || ys.iter().any(|y| !y.is_finite() || y.abs() > bound) {
            return Err(format!("every |y| must be within the declared bound {bound}"));
        }
        Ok(Self { xs, ys, bound })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&xi| xi <= x) - 1;
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + w * (self.ys[i + 1] - self.ys[i])
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// A bounded function of the signal, as used by [`StreamKind::PostFirstJumpSignal`].
#[derive(Clone)]
pub enum Psi {
    Zero,
    One,
    Tanh,
    /// `1` for positive arguments, `0` otherwise.
    IndicatorPositive,
    Table(Arc<PiecewiseLinear>),
    Func {
        name: String,
        bound: f64,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Psi {
    /// Named functions reachable from the stream mini-language.
    pub fn by_name(name: &str) -> Option<Psi> {
        match name {
            "zero" => Some(Psi::Zero),
            "one" => Some(Psi::One),
            "tanh" => Some(Psi::Tanh),
            "indicator_pos" => Some(Psi::IndicatorPositive),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Psi::Zero => 0.0,
            Psi::One => 1.0,
            Psi::Tanh => x.tanh(),
            Psi::IndicatorPositive => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Psi::Table(t) => t.eval(x),
            Psi::Func { f, .. } => f(x),
        }
    }

    /// Declared bound `M_Ψ ≥ sup |Ψ|`.
    pub fn bound(&self) -> f64 {
        match self {
            Psi::Zero => 0.0,
            Psi::One | Psi::Tanh | Psi::IndicatorPositive => 1.0,
            Psi::Table(t) => t.bound(),
            Psi::Func { bound, .. } => *bound,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Psi::Zero => "zero",
            Psi::One => "one",
            Psi::Tanh => "tanh",
            Psi::IndicatorPositive => "indicator_pos",
            Psi::Table(_) => "table",
            Psi::Func { name, .. } => name,
        }
    }
}

impl fmt::Debug for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psi({})", self.name())
    }
}

/// What a custom payoff can see at time `t` of a simulated path.
#[derive(Debug, Clone, Copy)]
pub struct PathContext<'a> {
    pub t: f64,
    /// Jump times strictly before `t` (or at `t` for a right limit).
    pub jump_times: &'a [f64],
    pub jump_sizes: &'a [f64],
    /// Signal currently held about the next jump.
    pub signal: f64,
    /// Signal about the first jump, `η₀`.
    pub first_signal: f64,
}

pub type CustomPayoff = Arc<dyn Fn(f64, &PathContext<'_>) -> f64 + Send + Sync>;

/// A path functional with a declared exponential growth bound `|e_t| ≤ C e^{r′t}`.
#[derive(Clone)]
pub struct CustomStream {
    pub name: String,
    pub payoff: CustomPayoff,
    pub growth_constant: f64,
    pub growth_rate: f64,
}

#[derive(Clone)]
pub enum StreamKind {
    /// `e_t = level`.
    Constant(f64),
    /// `e_t = e^{rt} 1_{[0,T₁)}(t)`.
    ExpUntilFirstJump,
    /// `e_t = e^{(r−1)t} 1_{[T₁,∞)}(t) Ψ(η₀)`.
    PostFirstJumpSignal(Psi),
    Custom(CustomStream),
}

#[derive(Clone)]
pub struct IncomeStream {
    pub kind: StreamKind,
}

impl IncomeStream {
    pub fn constant(level: f64) -> Self {
        Self {
            kind: StreamKind::Constant(level),
        }
    }

    pub fn exp_until_first_jump() -> Self {
        Self {
            kind: StreamKind::ExpUntilFirstJump,
        }
    }

    pub fn post_first_jump_signal(psi: Psi) -> Self {
        Self {
            kind: StreamKind::PostFirstJumpSignal(psi),
        }
    }

    pub fn custom(stream: CustomStream) -> Self {
        Self {
            kind: StreamKind::Custom(stream),
        }
    }

    /// Value of the stream at `ctx.t`.
    #[inline]
    pub fn eval(&self, p: &ModelParams, ctx: &PathContext<'_>) -> f64 {
        match &self.kind {
            StreamKind::Constant(c) => *c,
            StreamKind::ExpUntilFirstJump => {
                if ctx.jump_times.is_empty() {
                    (p.r * ctx.t).exp()
                } else {
                    0.0
                }
            }
            StreamKind::PostFirstJumpSignal(psi) => {
                if ctx.jump_times.is_empty() {
                    0.0
                } else {
                    ((p.r - 1.0) * ctx.t).exp() * psi.eval(ctx.first_signal)
                }
            }
            StreamKind::Custom(c) => (c.payoff)(ctx.t, ctx),
        }
    }

    /// True when the stream vanishes from the first jump onwards.
    pub fn ends_at_first_jump(&self) -> bool {
        matches!(self.kind, StreamKind::ExpUntilFirstJump)
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            StreamKind::Constant(c) => *c == 0.0,
            StreamKind::PostFirstJumpSignal(psi) => matches!(psi, Psi::Zero),
            _ => false,
        }
    }

    /// Short descriptor in the CLI mini-language.
    pub fn describe(&self) -> String {
        match &self.kind {
            StreamKind::Constant(c) => format!("constant:{c}"),
            StreamKind::ExpUntilFirstJump => "exp_until_jump".into(),
            StreamKind::PostFirstJumpSignal(psi) => format!("post_jump_signal:{}", psi.name()),
            StreamKind::Custom(c) => format!("custom:{}", c.name),
        }
    }
}

impl fmt::Debug for IncomeStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IncomeStream({})", self.describe())
    }
}

/// Structural check of `|e_t| ≤ C e^{r′t}` with `r′ < r`.
///
/// `ExpUntilFirstJump` sits on the `r′ = r` boundary but terminates at `T₁`; it
/// is admitted here and the pricing layer checks `λ − α > 0` separately.
pub fn stream_growth_guard(e: &IncomeStream, p: &ModelParams) -> bool {
    match &e.kind {
        StreamKind::Constant(c) => c.is_finite(),
        StreamKind::ExpUntilFirstJump => true,
        StreamKind::PostFirstJumpSignal(psi) => psi.bound().is_finite() && p.r - 1.0 < p.r,
        StreamKind::Custom(c) => {
            c.growth_constant.is_finite()
                && c.growth_constant >= 0.0
                && c.growth_rate >= 0.0
                && c.growth_rate < p.r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canon_passes_validation() {
        let rep = validate_params(&ModelParams::CANON);
        assert!(rep.overall, "{:?}", rep);
        assert!(rep.flag("signal_insider_gate").unwrap().pass);
        assert!((ModelParams::CANON.merton_fraction() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn zero_sigma_fails_no_arbitrage() {
        let p = ModelParams {
            sigma: 0.0,
            ..ModelParams::CANON
        };
        let rep = validate_params(&p);
        assert!(!rep.overall);
        let f = rep.flag("no_arbitrage").unwrap();
        assert!(!f.pass);
        assert!(f.message.contains("no-arbitrage"));
    }

    #[test]
    fn log_utility_is_rejected() {
        let p = ModelParams {
            risk_aversion: 1.0,
            ..ModelParams::CANON
        };
        let rep = validate_params(&p);
        assert!(!rep.overall);
        assert!(!rep.flag("utility").unwrap().pass);
    }

    #[test]
    fn validation_is_deterministic() {
        let p = ModelParams {
            r: -1.0,
            ..ModelParams::CANON
        };
        assert_eq!(validate_params(&p), validate_params(&p));
    }

    #[test]
    fn growth_guard_examples() {
        let p = ModelParams::CANON;
        assert!(stream_growth_guard(&IncomeStream::constant(1.0), &p));
        assert!(stream_growth_guard(
            &IncomeStream::post_first_jump_signal(Psi::Tanh),
            &p
        ));
        assert!(stream_growth_guard(&IncomeStream::exp_until_first_jump(), &p));
        let fast = CustomStream {
            name: "fast".into(),
            payoff: Arc::new(|t, _| (0.06 * t).exp()),
            growth_constant: 1.0,
            growth_rate: 0.06,
        };
        assert!(!stream_growth_guard(&IncomeStream::custom(fast), &p));
        let slow = CustomStream {
            name: "slow".into(),
            payoff: Arc::new(|t, _| (0.01 * t).exp()),
            growth_constant: 1.0,
            growth_rate: 0.01,
        };
        assert!(stream_growth_guard(&IncomeStream::custom(slow), &p));
    }

    #[test]
    fn config_parsing_rejects_unknown_keys() {
        let good = "mu = 0.1\nr = 0.05\nsigma = 0.2\nlambda = 0.5\nm = -0.05\nv = 0.01\nrho = 0.1\nR = 2.0\nv_eps = 0.02\n";
        let (p, psis) = ModelParams::from_toml_str(good).unwrap();
        assert_eq!(p, ModelParams::CANON);
        assert!(psis.is_empty());

        let bad = format!("{good}kappa = 1.0\n");
        assert!(matches!(
            ModelParams::from_toml_str(&bad),
            Err(Error::Config(_))
        ));

        let missing = good.replace("v_eps = 0.02\n", "");
        assert!(ModelParams::from_toml_str(&missing).is_err());
    }

    #[test]
    fn config_psi_tables() {
        let text = "mu = 0.1\nr = 0.05\nsigma = 0.2\nlambda = 0.5\nm = -0.05\nv = 0.01\nrho = 0.1\nR = 2.0\nv_eps = 0.02\n\n[psi.ramp]\nx = [-1.0, 1.0]\ny = [0.0, 2.0]\nbound = 2.0\n";
        let (_, psis) = ModelParams::from_toml_str(text).unwrap();
        let ramp = &psis["ramp"];
        assert_eq!(ramp.bound(), 2.0);
        assert_eq!(ramp.eval(0.0), 1.0);
        assert_eq!(ramp.eval(5.0), 2.0);
        assert_eq!(ramp.eval(-5.0), 0.0);

        let over = text.replace("bound = 2.0", "bound = 1.0");
        assert!(ModelParams::from_toml_str(&over).is_err());
    }
}
