//! Payoff-based regularized learning.
//!
//! Each player keeps a Gaussian mixed strategy with mean `μ^i(t)` and common
//! standard deviation `σ(t)`. Every iteration all players sample an action,
//! observe only their own realized cost at the joint sample, and move the
//! mean:
//!
//! ```text
//! μ^i ← Proj_{A_i}[ μ^i − γσ² ( Ĵ_i (x^i − μ^i) / σ² + ε μ^i ) ]
//! ```
//!
//! Samples are played unprojected; costs are defined on all of `ℝ^{Nd}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BoxSet, ConvexSet, GameDefinition, JointAction, PlayerIndex};
use crate::schedule::{validate_exponents, ScheduleExponents, ScheduleState, ScheduleValues};

/// Which iterations are handed to the record sink. The last iteration of a
/// run is always emitted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Thinning {
    /// Every iteration up to `t = 10⁴`, every 10th after that.
    #[default]
    Default,
    /// Every `k`-th iteration (and `t = 1`).
    Every(u64),
}

impl Thinning {
    pub fn keeps(&self, t: u64, max_iters: u64) -> bool {
        if t == max_iters || t == 1 {
            return true;
        }
        match *self {
            Thinning::Default => t <= 10_000 || t.is_multiple_of(10),
            Thinning::Every(k) => k <= 1 || t.is_multiple_of(k),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LearnerConfig {
    pub game: GameDefinition,
    pub exponents: ScheduleExponents,
    pub mu0: JointAction,
    pub max_iters: u64,
    pub seed: u64,
    /// `false` drops the `ε(t)·μ` term (the unregularized baseline).
    pub regularized: bool,
    pub thinning: Thinning,
    /// Run even if the exponents fail validation.
    pub allow_invalid_schedule: bool,
}

impl LearnerConfig {
    pub fn new(game: GameDefinition, mu0: JointAction, seed: u64) -> Self {
        Self {
            game,
            exponents: ScheduleExponents::default(),
            mu0,
            max_iters: 5000,
            seed,
            regularized: true,
            thinning: Thinning::Default,
            allow_invalid_schedule: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.game.check_action(&self.mu0)?;
        if !self.mu0.is_finite() {
            return Err(Error::usage("initial means must be finite"));
        }
        if self.max_iters == 0 {
            return Err(Error::usage("max_iters must be at least 1"));
        }
        let report = validate_exponents(&self.exponents)?;
        if self.regularized && !self.allow_invalid_schedule {
            if let Some(fail) = report.first_failure() {
                return Err(Error::usage(format!(
                    "schedule exponents violate clause ({}) {}: {}",
                    fail.clause,
                    fail.condition.describe(),
                    fail.inequality()
                )));
            }
        }
        Ok(())
    }
}

/// Mutable state of one run: current means, iteration counter and RNG.
#[derive(Clone, Debug)]
pub struct LearnerState {
    mu: JointAction,
    t: u64,
    rng: ChaCha8Rng,
}

impl LearnerState {
    /// Fresh state at `t = 1` with means `mu0`.
    pub fn new(mu0: JointAction, seed: u64) -> Self {
        Self {
            mu: mu0,
            t: 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_config(config: &LearnerConfig) -> Self {
        Self::new(config.mu0.clone(), config.seed)
    }

    pub fn mu(&self) -> &JointAction {
        &self.mu
    }

    /// Index of the next iteration to run.
    pub fn t(&self) -> u64 {
        self.t
    }
}

/// Telemetry for one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: u64,
    /// Means after this iteration's update, `μ(t+1)`.
    pub mu: Vec<f64>,
    /// Joint action sampled at this iteration.
    pub x: Vec<f64>,
    /// `Ĵ_i(t) = J_i(x(t))` per player.
    pub payoff: Vec<f64>,
    pub gamma: f64,
    pub sigma: f64,
    pub epsilon: f64,
    /// `‖μ(t+1) − a*‖` when the game has a reference equilibrium.
    pub dist_to_ref: Option<f64>,
}

pub trait RecordSink {
    fn record(&mut self, record: &IterationRecord) -> Result<()>;
}

impl RecordSink for Vec<IterationRecord> {
    fn record(&mut self, record: &IterationRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _: &IterationRecord) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&IterationRecord) -> Result<()>> RecordSink for F {
    fn record(&mut self, record: &IterationRecord) -> Result<()> {
        self(record)
    }
}

/// Draws `x ~ N(μ, σ²I)` coordinatewise from the state's generator.
pub fn sample_actions(state: &mut LearnerState, sigma: f64) -> JointAction {
    let mut x = state.mu.clone();
    for v in x.as_mut_slice() {
        let z: f64 = StandardNormal.sample(&mut state.rng);
        *v += sigma * z;
    }
    x
}

/// Player `i`'s mean update. Sees its own mean, own sampled action, own
/// scalar payoff, the schedule and its own action set; nothing else.
fn update_own_mean(
    mean: &mut [f64],
    own_action: &[f64],
    own_payoff: f64,
    schedule: &ScheduleValues,
    epsilon: f64,
    set: &BoxSet,
) {
    let var = schedule.sigma * schedule.sigma;
    for (m, &x) in mean.iter_mut().zip(own_action) {
        let direction = own_payoff * (x - *m) / var + epsilon * *m;
        *m -= schedule.beta * direction;
    }
    set.project_in_place(mean);
}

/// One synchronous iteration: sample, evaluate payoffs, update every mean.
pub fn step(state: &mut LearnerState, config: &LearnerConfig) -> Result<IterationRecord> {
    let sigma = ScheduleState::new(config.exponents, state.t)?.sigma();
    let x = sample_actions(state, sigma);
    step_with_actions(state, config, x)
}

/// Like [`step`] but plays the given joint action instead of sampling one.
pub fn step_with_actions(
    state: &mut LearnerState,
    config: &LearnerConfig,
    x: JointAction,
) -> Result<IterationRecord> {
    let game = &config.game;
    game.check_action(&x)?;
    game.check_action(&state.mu)?;
    let schedule = ScheduleState::new(config.exponents, state.t)?.values();
    let epsilon = if config.regularized {
        schedule.epsilon
    } else {
        0.0
    };

    let mut payoff = Vec::with_capacity(game.n_players());
    for i in game.players() {
        let value = game.eval_cost(i, &x)?;
        if !value.is_finite() {
            return Err(Error::NonFinitePayoff {
                player: i.0,
                value,
                action: x.as_slice().to_vec(),
            });
        }
        payoff.push(value);
    }

    for i in game.players() {
        let PlayerIndex(idx) = i;
        update_own_mean(
            state.mu.player_mut(i),
            x.player(i),
            payoff[idx],
            &schedule,
            epsilon,
            game.action_set(i),
        );
    }

    let record = IterationRecord {
        t: state.t,
        mu: state.mu.as_slice().to_vec(),
        x: x.into_vec(),
        payoff,
        gamma: schedule.gamma,
        sigma: schedule.sigma,
        epsilon,
        dist_to_ref: game.reference_equilibrium().map(|r| state.mu.distance(r)),
    };
    state.t += 1;
    Ok(record)
}

/// Runs `max_iters` iterations from `mu0`, feeding thinned records to `sink`.
pub fn run(config: &LearnerConfig, sink: &mut dyn RecordSink) -> Result<LearnerState> {
    config.validate()?;
    let mut state = LearnerState::from_config(config);
    for _ in 0..config.max_iters {
        let record = step(&mut state, config)?;
        if config.thinning.keeps(record.t, config.max_iters) {
            sink.record(&record)?;
        }
    }
    Ok(state)
}
