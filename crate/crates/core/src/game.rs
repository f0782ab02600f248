//! Games, action sets and the game mapping.
//!
//! A game is `N` players, each choosing a `d`-dimensional action from a box.
//! Player `i` pays `J_i(a)` for the joint action `a`. The game mapping stacks
//! every player's partial gradient of its own cost with respect to its own
//! action; it is what the reference solvers and the diagnostics work with.
//! The learner only ever calls [`GameDefinition::eval_cost`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Cost evaluator `(player, flat joint action) -> J_i`.
pub type CostFn = dyn Fn(usize, &[f64]) -> f64 + Send + Sync;

/// Gradient evaluator writing `∂J_i/∂a^i` (length `d`) into the output slice.
pub type GradientFn = dyn Fn(usize, &[f64], &mut [f64]) + Send + Sync;

/// Names accepted by [`registry`].
pub const REGISTRY_NAMES: [&str; 3] = ["bilinear", "quadratic-strong", "shifted-sum"];

/// Player index in `[0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlayerIndex(pub usize);

impl fmt::Display for PlayerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A closed convex set with an exact Euclidean projection.
pub trait ConvexSet {
    fn dim(&self) -> usize;
    fn project_in_place(&self, v: &mut [f64]);
    fn contains(&self, v: &[f64], tol: f64) -> bool;

    fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        out
    }
}

/// Axis-aligned box, possibly unbounded on either side.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::usage(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan()
                || hi.is_nan()
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
                || lo > hi
            {
                return Err(Error::usage(format!(
                    "empty box in coordinate {k}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

impl ConvexSet for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project_in_place(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.lower.len());
        for ((x, &lo), &hi) in v.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(lo, hi);
        }
    }

    fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.lower.len()
            && v.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((&x, &lo), &hi)| x >= lo - tol && x <= hi + tol)
    }
}

/// Joint action of all players, stored player-major in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAction {
    dim: usize,
    values: Vec<f64>,
}

impl JointAction {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::usage(format!(
                "joint action of length {} is not a whole number of {dim}-dimensional actions",
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn zeros(n_players: usize, dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; n_players * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_players(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn player(&self, i: PlayerIndex) -> &[f64] {
        &self.values[i.0 * self.dim..(i.0 + 1) * self.dim]
    }

    pub fn player_mut(&mut self, i: PlayerIndex) -> &mut [f64] {
        &mut self.values[i.0 * self.dim..(i.0 + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn distance(&self, other: &JointAction) -> f64 {
        distance(&self.values, &other.values)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// An `N`-player convex game with box action sets.
///
/// Immutable once built; evaluators are `Send + Sync` so a definition can be
/// shared across replication workers.
#[derive(Clone)]
pub struct GameDefinition {
    name: String,
    n_players: usize,
    dim: usize,
    action_sets: Vec<BoxSet>,
    cost: Arc<CostFn>,
    gradient: Option<Arc<GradientFn>>,
    reference: Option<JointAction>,
    monotone: bool,
}

impl fmt::Debug for GameDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameDefinition")
            .field("name", &self.name)
            .field("n_players", &self.n_players)
            .field("dim", &self.dim)
            .field("action_sets", &self.action_sets)
            .field("has_gradient", &self.gradient.is_some())
            .field("reference", &self.reference)
            .field("monotone", &self.monotone)
            .finish()
    }
}

impl GameDefinition {
    pub fn new<F>(name: impl Into<String>, action_sets: Vec<BoxSet>, cost: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        let n_players = action_sets.len();
        if n_players == 0 {
            return Err(Error::usage("a game needs at least one player"));
        }
        let dim = action_sets[0].dim();
        if action_sets.iter().any(|s| s.dim() != dim) {
            return Err(Error::usage("all action sets must share one dimension"));
        }
        Ok(Self {
            name: name.into(),
            n_players,
            dim,
            action_sets,
            cost: Arc::new(cost),
            gradient: None,
            reference: None,
            monotone: false,
        })
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(usize, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_reference(mut self, reference: JointAction) -> Result<Self> {
        self.check_action(&reference)?;
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn with_monotone(mut self, monotone: bool) -> Self {
        self.monotone = monotone;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total joint dimension `N·d`.
    pub fn joint_dim(&self) -> usize {
        self.n_players * self.dim
    }

    pub fn players(&self) -> impl Iterator<Item = PlayerIndex> {
        (0..self.n_players).map(PlayerIndex)
    }

    pub fn action_set(&self, i: PlayerIndex) -> &BoxSet {
        &self.action_sets[i.0]
    }

    pub fn action_sets(&self) -> &[BoxSet] {
        &self.action_sets
    }

    pub fn reference_equilibrium(&self) -> Option<&JointAction> {
        self.reference.as_ref()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn check_action(&self, a: &JointAction) -> Result<()> {
        if a.dim() != self.dim || a.n_players() != self.n_players {
            return Err(Error::usage(format!(
                "joint action has {} players of dimension {}, game '{}' expects {} of dimension {}",
                a.n_players(),
                a.dim(),
                self.name,
                self.n_players,
                self.dim
            )));
        }
        Ok(())
    }

    fn check_player(&self, i: PlayerIndex) -> Result<()> {
        if i.0 >= self.n_players {
            return Err(Error::usage(format!(
                "player {i} out of range for {}-player game",
                self.n_players
            )));
        }
        Ok(())
    }

    /// `J_i(a)`. Defined on all of `ℝ^{Nd}`, not just the action sets.
    pub fn eval_cost(&self, i: PlayerIndex, a: &JointAction) -> Result<f64> {
        self.check_player(i)?;
        self.check_action(a)?;
        Ok((self.cost)(i.0, a.as_slice()))
    }

    /// Unchecked cost evaluation on a flat slice, for hot loops that have
    /// already validated dimensions.
    pub(crate) fn cost_raw(&self, i: usize, a: &[f64]) -> f64 {
        (self.cost)(i, a)
    }

    pub(crate) fn gradient_raw(&self) -> Result<&GradientFn> {
        self.gradient.as_deref().ok_or_else(|| {
            Error::Capability(format!("game '{}' has no analytic gradient", self.name))
        })
    }

    /// `M_i(a) = ∇_{a^i} J_i(a)` from the analytic gradient.
    pub fn player_mapping(&self, i: PlayerIndex, a: &JointAction) -> Result<Vec<f64>> {
        self.check_player(i)?;
        self.check_action(a)?;
        let grad = self.gradient_raw()?;
        let mut out = vec![0.0; self.dim];
        grad(i.0, a.as_slice(), &mut out);
        Ok(out)
    }

    /// Stacked game mapping `(M_1(a), …, M_N(a))` from the analytic gradient.
    pub fn game_mapping(&self, a: &JointAction) -> Result<Vec<f64>> {
        self.check_action(a)?;
        let grad = self.gradient_raw()?;
        let mut out = vec![0.0; self.joint_dim()];
        for (i, chunk) in out.chunks_mut(self.dim).enumerate() {
            grad(i, a.as_slice(), chunk);
        }
        Ok(out)
    }

    /// Central finite-difference game mapping. Diagnostics only.
    pub fn finite_difference_mapping(&self, a: &JointAction, step: f64) -> Result<Vec<f64>> {
        self.check_action(a)?;
        if !(step > 0.0) {
            return Err(Error::usage("finite-difference step must be positive"));
        }
        let mut x = a.as_slice().to_vec();
        let mut out = vec![0.0; self.joint_dim()];
        for i in 0..self.n_players {
            for k in 0..self.dim {
                let idx = i * self.dim + k;
                let orig = x[idx];
                x[idx] = orig + step;
                let plus = self.cost_raw(i, &x);
                x[idx] = orig - step;
                let minus = self.cost_raw(i, &x);
                x[idx] = orig;
                out[idx] = (plus - minus) / (2.0 * step);
            }
        }
        Ok(out)
    }

    /// Projects every player's block onto its own action set.
    pub fn project(&self, a: &JointAction) -> Result<JointAction> {
        self.check_action(a)?;
        let mut out = a.clone();
        self.project_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn project_in_place(&self, a: &mut JointAction) {
        for i in self.players() {
            self.action_sets[i.0].project_in_place(a.player_mut(i));
        }
    }

    pub(crate) fn project_slice(&self, v: &mut [f64]) {
        for (set, chunk) in self.action_sets.iter().zip(v.chunks_mut(self.dim)) {
            set.project_in_place(chunk);
        }
    }

    pub fn contains(&self, a: &JointAction, tol: f64) -> bool {
        a.dim() == self.dim
            && a.n_players() == self.n_players
            && self
                .players()
                .all(|i| self.action_sets[i.0].contains(a.player(i), tol))
    }
}

/// Projects `v` onto a box. Componentwise clamp.
pub fn project(set: &BoxSet, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != set.dim() {
        return Err(Error::usage(format!(
            "vector of length {} does not match box dimension {}",
            v.len(),
            set.dim()
        )));
    }
    Ok(set.project(v))
}

const QUAD_CENTERS: [f64; 2] = [0.3, -0.2];
const QUAD_COUPLING: f64 = 0.1;

/// Built-in games by name.
pub fn registry(name: &str) -> Result<GameDefinition> {
    let unit = || BoxSet::cube(1, -1.0, 1.0);
    match name {
        // J_1 = a1 a2, J_2 = -a1 a2. Skew-symmetric mapping, unique NE at 0.
        "bilinear" => GameDefinition::new("bilinear", vec![unit()?, unit()?], |i, a| {
            let p = a[0] * a[1];
            if i == 0 {
                p
            } else {
                -p
            }
        })?
        .with_gradient(|i, a, out| {
            out[0] = if i == 0 { a[1] } else { -a[0] };
        })
        .with_reference(JointAction::new(1, vec![0.0, 0.0])?)
        .map(|g| g.with_monotone(true)),

        // J_i = (a_i - c_i)^2 + 0.1 a_i a_{-i}. Strongly monotone.
        "quadratic-strong" => {
            // M(a) = H a - 2c with H = [[2, k], [k, 2]].
            let k = QUAD_COUPLING;
            let det = 4.0 - k * k;
            let rhs = [2.0 * QUAD_CENTERS[0], 2.0 * QUAD_CENTERS[1]];
            let star = vec![
                (2.0 * rhs[0] - k * rhs[1]) / det,
                (2.0 * rhs[1] - k * rhs[0]) / det,
            ];
            GameDefinition::new("quadratic-strong", vec![unit()?, unit()?], |i, a| {
                let own = a[i];
                let other = a[1 - i];
                let dev = own - QUAD_CENTERS[i];
                dev * dev + QUAD_COUPLING * own * other
            })?
            .with_gradient(|i, a, out| {
                out[0] = 2.0 * (a[i] - QUAD_CENTERS[i]) + QUAD_COUPLING * a[1 - i];
            })
            .with_reference(JointAction::new(1, star)?)
            .map(|g| g.with_monotone(true))
        }

        // J_i = a_i^2 / 2 + a1 a2 - a_i. Monotone, solution set a1 + a2 = 1;
        // the reference is its least-norm point.
        "shifted-sum" => GameDefinition::new("shifted-sum", vec![unit()?, unit()?], |i, a| {
            0.5 * a[i] * a[i] + a[0] * a[1] - a[i]
        })?
        .with_gradient(|_, a, out| {
            out[0] = a[0] + a[1] - 1.0;
        })
        .with_reference(JointAction::new(1, vec![0.5, 0.5])?)
        .map(|g| g.with_monotone(true)),

        other => Err(Error::usage(format!(
            "unknown game '{other}'; available: {}",
            REGISTRY_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ja(v: &[f64]) -> JointAction {
        JointAction::new(1, v.to_vec()).unwrap()
    }

    #[test]
    fn bilinear_costs() {
        let g = registry("bilinear").unwrap();
        assert_eq!(g.eval_cost(PlayerIndex(0), &ja(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(g.eval_cost(PlayerIndex(1), &ja(&[1.0, 1.0])).unwrap(), -1.0);
        assert_eq!(g.eval_cost(PlayerIndex(0), &ja(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn shifted_sum_cost_and_mapping() {
        let g = registry("shifted-sum").unwrap();
        let a = ja(&[0.5, 0.5]);
        assert!((g.eval_cost(PlayerIndex(0), &a).unwrap() - (-0.125)).abs() < 1e-15);
        assert_eq!(g.game_mapping(&a).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bilinear_mapping_values() {
        let g = registry("bilinear").unwrap();
        assert_eq!(g.game_mapping(&ja(&[1.0, 2.0])).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn quadratic_reference_is_stationary_and_feasible() {
        let g = registry("quadratic-strong").unwrap();
        let star = g.reference_equilibrium().unwrap();
        // 2x2 system by hand: 2a1 + 0.1a2 = 0.6, 0.1a1 + 2a2 = -0.4.
        let det = 2.0 * 2.0 - 0.1 * 0.1;
        let a1 = (0.6 * 2.0 - 0.1 * -0.4) / det;
        let a2 = (2.0 * -0.4 - 0.1 * 0.6) / det;
        assert!((star.as_slice()[0] - a1).abs() < 1e-15);
        assert!((star.as_slice()[1] - a2).abs() < 1e-15);
        let m = g.game_mapping(star).unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-14));
        assert!(g.contains(star, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let g = registry("bilinear").unwrap();
        let bad = JointAction::new(1, vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            g.eval_cost(PlayerIndex(0), &bad),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            g.eval_cost(PlayerIndex(2), &ja(&[0.0, 0.0])),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn missing_gradient_is_capability_error() {
        let g = GameDefinition::new(
            "const",
            vec![BoxSet::cube(1, -1.0, 1.0).unwrap()],
            |_, _| 3.0,
        )
        .unwrap();
        assert!(matches!(
            g.game_mapping(&ja(&[0.0])),
            Err(Error::Capability(_))
        ));
        // finite differences still work when asked for explicitly
        assert_eq!(
            g.finite_difference_mapping(&ja(&[0.2]), 1e-5).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn unknown_registry_name_lists_games() {
        let err = registry("rock-paper").unwrap_err().to_string();
        for name in REGISTRY_NAMES {
            assert!(err.contains(name), "{err}");
        }
    }

    #[test]
    fn projection_examples() {
        let sq = BoxSet::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(project(&sq, &[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
        assert_eq!(project(&sq, &[2.5, -3.0]).unwrap(), vec![1.0, -1.0]);
        let half = BoxSet::new(vec![0.0], vec![f64::INFINITY]).unwrap();
        assert_eq!(project(&half, &[-4.0]).unwrap(), vec![0.0]);
        assert!(project(&sq, &[1.0]).is_err());
    }

    #[test]
    fn empty_box_rejected() {
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxSet::new(vec![f64::INFINITY], vec![f64::INFINITY]).is_err());
        assert!(BoxSet::new(vec![], vec![]).is_err());
    }

    #[test]
    fn sampled_monotonicity_of_registry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in REGISTRY_NAMES {
            let g = registry(name).unwrap();
            assert!(g.is_monotone());
            for _ in 0..10_000 {
                let x = ja(&[rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]);
                let y = ja(&[rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]);
                let mx = g.game_mapping(&x).unwrap();
                let my = g.game_mapping(&y).unwrap();
                let inner: f64 = (0..2)
                    .map(|k| (mx[k] - my[k]) * (x.as_slice()[k] - y.as_slice()[k]))
                    .sum();
                assert!(inner >= -1e-9, "{name}: {inner}");
                if name == "bilinear" {
                    assert!(inner.abs() < 1e-15, "bilinear inner product {inner}");
                }
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in REGISTRY_NAMES {
            let g = registry(name).unwrap();
            for _ in 0..100 {
                let a = ja(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
                let exact = g.game_mapping(&a).unwrap();
                let fd = g.finite_difference_mapping(&a, 1e-5).unwrap();
                for (e, f) in exact.iter().zip(&fd) {
                    let rel = (e - f).abs() / e.abs().max(1.0);
                    assert!(rel < 1e-6, "{name}: {e} vs {f}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_nonexpansive(
            u in prop::collection::vec(-5.0f64..5.0, 3),
            v in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let set = BoxSet::new(vec![-1.0, 0.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY, 0.5]).unwrap();
            let pu = set.project(&u);
            let pv = set.project(&v);
            prop_assert_eq!(set.project(&pu), pu.clone());
            prop_assert!(set.contains(&pu, 0.0));
            prop_assert!(distance(&pu, &pv) <= distance(&u, &v) + 1e-12);
        }
    }
}
