//! Full-information reference solvers, used only to validate the learner.
//!
//! All three use the game's analytic mapping, which the payoff-based learner
//! never sees. They solve box-constrained monotone variational inequalities
//! with the extragradient method:
//!
//! ```text
//! ȳ = Proj[y − s F(y)],   y ← Proj[y − s F(ȳ)]
//! ```
//!
//! with `F = M` for Nash equilibria and `F = M + εI` for Tikhonov points.
//! Convergence is measured by the natural residual
//! `‖y − Proj[y − F(y)]‖`, which is zero exactly at solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::game::{distance, norm, GameDefinition, JointAction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Upper bound on the extragradient step; the solver also caps it by
    /// `0.9 / L` with `L` a sampled Lipschitz estimate.
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            step: 1.0,
            tol: 1e-10,
            max_iters: 1_000_000,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.tol > 0.0 && self.max_iters > 0) {
            return Err(Error::usage(
                "solver step, tol and max_iters must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VISolution {
    pub y: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Solution of `VI(A, M + εI)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TikhonovPoint {
    pub epsilon: f64,
    pub y: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Lipschitz constant of the game mapping estimated from random pairs in
/// the action sets (unbounded sides are sampled within unit distance of the
/// finite bound, or of the origin).
pub fn estimate_lipschitz(game: &GameDefinition, pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranges = Vec::with_capacity(game.joint_dim());
    for set in game.action_sets() {
        for (&lo, &hi) in set.lower().iter().zip(set.upper()) {
            let (lo, hi) = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (lo, hi),
                (true, false) => (lo, lo + 2.0),
                (false, true) => (hi - 2.0, hi),
                (false, false) => (-1.0, 1.0),
            };
            ranges.push((lo, hi));
        }
    }
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        ranges
            .iter()
            .map(|&(lo, hi)| {
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect()
    };
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let x = JointAction::new(game.dim(), draw(&mut rng))?;
        let y = JointAction::new(game.dim(), draw(&mut rng))?;
        let gap = x.distance(&y);
        if gap < 1e-12 {
            continue;
        }
        let mx = game.game_mapping(&x)?;
        let my = game.game_mapping(&y)?;
        best = best.max(distance(&mx, &my) / gap);
    }
    Ok(best)
}

/// Extragradient iteration on `F(y) = M(y) + εy` from `start`.
fn extragradient(
    game: &GameDefinition,
    epsilon: f64,
    start: &[f64],
    settings: &SolverSettings,
) -> Result<VISolution> {
    settings.validate()?;
    let lipschitz = estimate_lipschitz(game, 256, 0x5eed)? * 1.1 + epsilon;
    let step = if lipschitz > 0.0 {
        settings.step.min(0.9 / lipschitz)
    } else {
        settings.step
    };

    let dim = game.dim();
    let operator = |y: &[f64], out: &mut Vec<f64>| -> Result<()> {
        let a = JointAction::new(dim, y.to_vec())?;
        *out = game.game_mapping(&a)?;
        for (o, v) in out.iter_mut().zip(y) {
            *o += epsilon * v;
        }
        Ok(())
    };
    let natural_residual = |y: &[f64], fy: &[f64]| -> f64 {
        let mut p: Vec<f64> = y.iter().zip(fy).map(|(a, b)| a - b).collect();
        game.project_slice(&mut p);
        distance(y, &p)
    };

    let mut y = start.to_vec();
    game.project_slice(&mut y);
    let mut fy = Vec::new();
    let mut fbar = Vec::new();
    let mut ybar = vec![0.0; y.len()];
    let mut residual = f64::INFINITY;
    for iteration in 0..settings.max_iters {
        operator(&y, &mut fy)?;
        residual = natural_residual(&y, &fy);
        if !residual.is_finite() {
            break;
        }
        if residual <= settings.tol {
            return Ok(VISolution {
                y,
                residual,
                iterations: iteration,
            });
        }
        for ((b, a), f) in ybar.iter_mut().zip(&y).zip(&fy) {
            *b = a - step * f;
        }
        game.project_slice(&mut ybar);
        operator(&ybar, &mut fbar)?;
        for (a, f) in y.iter_mut().zip(&fbar) {
            *a -= step * f;
        }
        game.project_slice(&mut y);
    }
    Err(Error::Convergence {
        iterations: settings.max_iters,
        residual,
    })
}

/// A Nash equilibrium of a monotone game via extragradient, started from the
/// projection of the origin.
pub fn solve_vi(game: &GameDefinition, settings: &SolverSettings) -> Result<VISolution> {
    let start = vec![0.0; game.joint_dim()];
    extragradient(game, 0.0, &start, settings)
}

/// The unique solution `y(ε)` of `VI(A, M + εI)`.
pub fn solve_tikhonov(
    game: &GameDefinition,
    epsilon: f64,
    settings: &SolverSettings,
) -> Result<TikhonovPoint> {
    solve_tikhonov_from(game, epsilon, &vec![0.0; game.joint_dim()], settings)
}

/// [`solve_tikhonov`] warm-started at `start`.
pub fn solve_tikhonov_from(
    game: &GameDefinition,
    epsilon: f64,
    start: &[f64],
    settings: &SolverSettings,
) -> Result<TikhonovPoint> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::usage(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if start.len() != game.joint_dim() {
        return Err(Error::usage("warm start has the wrong dimension"));
    }
    let sol = extragradient(game, epsilon, start, settings)?;
    Ok(TikhonovPoint {
        epsilon,
        y: sol.y,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TikhonovPath {
    pub points: Vec<TikhonovPoint>,
    /// `max_t ‖y(ε_t)‖` over the computed path.
    pub max_norm: f64,
}

/// One step of the path-increment comparison
/// `‖y_t − y_{t−1}‖ ≤ M_y·|ε_{t−1} − ε_t| / ε_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IncrementCheck {
    pub step: usize,
    pub increment: f64,
    pub bound: f64,
}

impl IncrementCheck {
    pub fn holds(&self) -> bool {
        self.increment <= self.bound
    }
}

impl TikhonovPath {
    pub fn last(&self) -> &TikhonovPoint {
        self.points.last().expect("paths are non-empty")
    }

    pub fn increment_checks(&self) -> Vec<IncrementCheck> {
        self.points
            .windows(2)
            .enumerate()
            .map(|(k, w)| IncrementCheck {
                step: k + 1,
                increment: distance(&w[1].y, &w[0].y),
                bound: self.max_norm * (w[0].epsilon - w[1].epsilon).abs() / w[1].epsilon,
            })
            .collect()
    }
}

#[derive(Debug, Error)]
#[error("tikhonov path aborted after {} points: {error}", partial.len())]
pub struct PathFailure {
    pub partial: Vec<TikhonovPoint>,
    #[source]
    pub error: Error,
}

/// Solves along a strictly decreasing positive `ε` sequence, warm-starting
/// each solve at the previous point.
pub fn tikhonov_path(
    game: &GameDefinition,
    epsilons: &[f64],
    settings: &SolverSettings,
) -> std::result::Result<TikhonovPath, PathFailure> {
    let fail = |partial, error| PathFailure { partial, error };
    if epsilons.is_empty() {
        return Err(fail(Vec::new(), Error::usage("empty epsilon schedule")));
    }
    if epsilons.iter().any(|&e| !(e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(fail(
            Vec::new(),
            Error::usage("epsilon schedule must be positive and strictly decreasing"),
        ));
    }
    let mut points: Vec<TikhonovPoint> = Vec::with_capacity(epsilons.len());
    let mut start = vec![0.0; game.joint_dim()];
    for &eps in epsilons {
        match solve_tikhonov_from(game, eps, &start, settings) {
            Ok(p) => {
                start.clone_from(&p.y);
                points.push(p);
            }
            Err(e) => return Err(fail(points, e)),
        }
    }
    let max_norm = points.iter().map(|p| norm(&p.y)).fold(0.0, f64::max);
    Ok(TikhonovPath { points, max_norm })
}

/// Largest cost reduction any single player can obtain by deviating to one
/// of `grid_points` evenly spaced actions in its interval. Only for games
/// with one-dimensional bounded action sets.
pub fn max_unilateral_improvement(
    game: &GameDefinition,
    y: &JointAction,
    grid_points: usize,
) -> Result<f64> {
    game.check_action(y)?;
    if game.dim() != 1 || grid_points < 2 {
        return Err(Error::usage(
            "grid scan needs one-dimensional actions and at least 2 points",
        ));
    }
    let mut best: f64 = 0.0;
    for i in game.players() {
        let set = game.action_set(i);
        let (lo, hi) = (set.lower()[0], set.upper()[0]);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::usage("grid scan needs bounded action sets"));
        }
        let base = game.eval_cost(i, y)?;
        let mut dev = y.clone();
        for g in 0..grid_points {
            let v = lo + (hi - lo) * g as f64 / (grid_points - 1) as f64;
            dev.player_mut(i)[0] = v;
            best = best.max(base - game.eval_cost(i, &dev)?);
        }
    }
    Ok(best)
}
