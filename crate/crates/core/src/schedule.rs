//! Power-law parameter schedules `γ(t) = t^-a`, `σ(t) = t^-b`, `ε(t) = t^-c`
//! and the exponent conditions that make the learner converge.
//!
//! Iterations are indexed from `t = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when an exponent combination sits on a boundary such as
/// `a + 2b + c = 1`. Inputs like `5/27` are not exact in binary, so a sum
/// within this distance of the boundary is treated as equal to it.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleExponents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for ScheduleExponents {
    /// `(5/9, 5/27, 1/27)`, a triple satisfying every condition.
    fn default() -> Self {
        Self {
            a: 5.0 / 9.0,
            b: 5.0 / 27.0,
            c: 1.0 / 27.0,
        }
    }
}

impl ScheduleExponents {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::usage(format!(
                    "exponent {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn at(&self, t: u64) -> Result<ScheduleState> {
        ScheduleState::new(*self, t)
    }
}

/// Parses `0.5`, `5/9` or `-3e-2` style numbers.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::usage(format!("not a number: '{s}'"));
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            num / den
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Exponents paired with an iteration index `t ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleState {
    exponents: ScheduleExponents,
    t: u64,
}

impl ScheduleState {
    pub fn new(exponents: ScheduleExponents, t: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::usage("schedules are indexed from t = 1"));
        }
        Ok(Self { exponents, t })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn gamma(&self) -> f64 {
        (self.t as f64).powf(-self.exponents.a)
    }

    pub fn sigma(&self) -> f64 {
        (self.t as f64).powf(-self.exponents.b)
    }

    pub fn epsilon(&self) -> f64 {
        (self.t as f64).powf(-self.exponents.c)
    }

    /// `β(t) = γ(t)·σ(t)²`.
    pub fn beta(&self) -> f64 {
        let s = self.sigma();
        self.gamma() * s * s
    }

    pub fn values(&self) -> ScheduleValues {
        let gamma = self.gamma();
        let sigma = self.sigma();
        ScheduleValues {
            gamma,
            sigma,
            epsilon: self.epsilon(),
            beta: gamma * sigma * sigma,
        }
    }
}

/// Snapshot of all four sequences at one `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleValues {
    pub gamma: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Clause {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Clause::A => "a",
            Clause::B => "b",
            Clause::C => "c",
            Clause::D => "d",
        };
        f.write_str(s)
    }
}

/// Which series or limit a check is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `∑ β(t) = ∞`
    BetaSumDiverges,
    /// `ε(t) → 0`
    EpsilonVanishes,
    /// `∑ (1 + 1/(βε))·|Δε|²/ε² < ∞`
    TikhonovDriftSummable,
    /// `∑ γ² < ∞`
    GammaSquaredSummable,
    /// `∑ β·σ < ∞`
    BetaSigmaSummable,
    /// `σ(t) → 0`
    SigmaVanishes,
    /// `∑ β·ε = ∞`
    BetaEpsilonSumDiverges,
}

impl Condition {
    pub fn describe(&self) -> &'static str {
        match self {
            Condition::BetaSumDiverges => "sum beta(t) = inf",
            Condition::EpsilonVanishes => "epsilon(t) -> 0",
            Condition::TikhonovDriftSummable => "sum (1 + 1/(beta eps)) |d eps|^2 / eps^2 < inf",
            Condition::GammaSquaredSummable => "sum gamma(t)^2 < inf",
            Condition::BetaSigmaSummable => "sum beta(t) sigma(t) < inf",
            Condition::SigmaVanishes => "sigma(t) -> 0",
            Condition::BetaEpsilonSumDiverges => "sum beta(t) epsilon(t) = inf",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Less,
    LessEq,
    Greater,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Less => "<",
            Relation::LessEq => "<=",
            Relation::Greater => ">",
        })
    }
}

/// One exponent inequality, e.g. `a + 2b + c < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub clause: Clause,
    pub condition: Condition,
    /// Left-hand side as an expression in the exponents.
    pub expression: &'static str,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub holds: bool,
}

impl ConditionCheck {
    fn new(
        clause: Clause,
        condition: Condition,
        expression: &'static str,
        value: f64,
        relation: Relation,
        bound: f64,
    ) -> Self {
        let holds = match relation {
            Relation::Less => value < bound - BOUNDARY_TOL,
            Relation::LessEq => value <= bound + BOUNDARY_TOL,
            Relation::Greater => value > bound + BOUNDARY_TOL,
        };
        Self {
            clause,
            condition,
            expression,
            value,
            relation,
            bound,
            holds,
        }
    }

    /// e.g. `a + 2b + c = 1.0000 (need < 1)`.
    pub fn inequality(&self) -> String {
        format!(
            "{} = {:.6} (need {} {})",
            self.expression, self.value, self.relation, self.bound
        )
    }
}

impl fmt::Display for ConditionCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}) {:<48} {}  {}",
            self.clause,
            self.condition.describe(),
            if self.holds { "PASS" } else { "FAIL" },
            self.inequality()
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleReport {
    pub exponents: ScheduleExponents,
    pub checks: Vec<ConditionCheck>,
}

impl ScheduleReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| !c.holds)
    }

    pub fn check(&self, condition: Condition) -> &ConditionCheck {
        self.checks
            .iter()
            .find(|c| c.condition == condition)
            .expect("every condition is checked")
    }
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.exponents;
        writeln!(f, "exponents a = {}, b = {}, c = {}", e.a, e.b, e.c)?;
        for check in &self.checks {
            writeln!(f, "{check}")?;
        }
        write!(
            f,
            "{}",
            if self.all_pass() {
                "all conditions hold"
            } else {
                "schedule rejected"
            }
        )
    }
}

/// Checks the power-law exponents against the four convergence conditions.
///
/// For `γ = t^-a`, `σ = t^-b`, `ε = t^-c` every condition reduces to a
/// p-series test:
///
/// * `β = t^-(a+2b)` diverges iff `a + 2b ≤ 1`; `ε → 0` iff `c > 0`.
/// * `|Δε|/ε ~ c/t` and `1/(βε) = t^(a+2b+c)`, so the drift series behaves
///   like `t^(a+2b+c-2)` and converges iff `a + 2b + c < 1`.
/// * `∑γ²` converges iff `a > 1/2`; `∑βσ = ∑t^-(a+3b)` iff `a + 3b > 1`.
/// * `σ → 0` iff `b > 0`; `∑βε` diverges iff `a + 2b + c ≤ 1`.
pub fn validate_exponents(e: &ScheduleExponents) -> Result<ScheduleReport> {
    let e = ScheduleExponents::new(e.a, e.b, e.c)?;
    let (a, b, c) = (e.a, e.b, e.c);
    use Clause::*;
    use Condition::*;
    use Relation::*;
    let checks = vec![
        ConditionCheck::new(A, BetaSumDiverges, "a + 2b", a + 2.0 * b, LessEq, 1.0),
        ConditionCheck::new(A, EpsilonVanishes, "c", c, Greater, 0.0),
        ConditionCheck::new(
            B,
            TikhonovDriftSummable,
            "a + 2b + c",
            a + 2.0 * b + c,
            Less,
            1.0,
        ),
        ConditionCheck::new(C, GammaSquaredSummable, "a", a, Greater, 0.5),
        ConditionCheck::new(C, BetaSigmaSummable, "a + 3b", a + 3.0 * b, Greater, 1.0),
        ConditionCheck::new(D, SigmaVanishes, "b", b, Greater, 0.0),
        ConditionCheck::new(
            D,
            BetaEpsilonSumDiverges,
            "a + 2b + c",
            a + 2.0 * b + c,
            LessEq,
            1.0,
        ),
    ];
    Ok(ScheduleReport {
        exponents: e,
        checks,
    })
}
