//! Monte-Carlo estimators for the Gaussian-smoothed (mixed-strategy) costs
//!
//! ```text
//! J̃_i(μ, σ) = E[ J_i(x) ],   x ~ N(μ, σ²I)
//! ```
//!
//! and three independent routes to its gradient in the player's own mean:
//! the score-function estimator `E[J_i(x)(x^i − μ^i)/σ²]` (what the learner
//! samples), the mixed game mapping `E[M_i(x)]`, and central finite
//! differences of `J̃_i` with common random numbers.
//!
//! Every estimator is deterministic given the query seed and reports a
//! per-coordinate standard error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameDefinition, JointAction, PlayerIndex};

#[derive(Clone, Debug)]
pub struct SmoothedQuery<'a> {
    pub game: &'a GameDefinition,
    pub mu: JointAction,
    pub sigma: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl<'a> SmoothedQuery<'a> {
    pub fn new(
        game: &'a GameDefinition,
        mu: JointAction,
        sigma: f64,
        n_samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            game,
            mu,
            sigma,
            n_samples,
            seed,
        }
    }

    fn validate(&self, i: PlayerIndex) -> Result<()> {
        self.game.check_action(&self.mu)?;
        if i.0 >= self.game.n_players() {
            return Err(Error::usage(format!("player {i} out of range")));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::usage(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.n_samples < 2 {
            return Err(Error::usage("need at least 2 samples for a standard error"));
        }
        Ok(())
    }

    /// Calls `f` with `n_samples` draws of `(x, z)` where `x = μ + σz`.
    fn for_each_sample(&self, mut f: impl FnMut(&[f64], &[f64]) -> Result<()>) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mu = self.mu.as_slice();
        let mut z = vec![0.0; mu.len()];
        let mut x = vec![0.0; mu.len()];
        for _ in 0..self.n_samples {
            for ((zk, xk), &mk) in z.iter_mut().zip(x.iter_mut()).zip(mu) {
                *zk = StandardNormal.sample(&mut rng);
                *xk = mk + self.sigma * *zk;
            }
            f(&x, &z)?;
        }
        Ok(())
    }
}

/// Running mean and variance (Welford).
#[derive(Clone, Debug, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    fn standard_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Scalar Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ScoreMc,
    MixedMappingMc,
    FiniteDifference,
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub value: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub method: GradientMethod,
}

impl GradientEstimate {
    fn from_moments(moments: &[Moments], method: GradientMethod) -> Self {
        Self {
            value: moments.iter().map(|m| m.mean).collect(),
            standard_error: moments.iter().map(Moments::standard_error).collect(),
            method,
        }
    }

    /// Per coordinate: is `|a − b|` within `k` combined standard errors?
    pub fn agrees_with(&self, other: &GradientEstimate, k: f64) -> Vec<bool> {
        self.value
            .iter()
            .zip(&other.value)
            .zip(self.standard_error.iter().zip(&other.standard_error))
            .map(|((a, b), (sa, sb))| (a - b).abs() <= k * (sa * sa + sb * sb).sqrt())
            .collect()
    }
}

fn finite_or_err(player: usize, value: f64, x: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinitePayoff {
            player,
            value,
            action: x.to_vec(),
        })
    }
}

/// `J̃_i(μ, σ)` by plain Monte Carlo.
pub fn smoothed_cost(q: &SmoothedQuery<'_>, i: PlayerIndex) -> Result<Estimate> {
    q.validate(i)?;
    let mut m = Moments::default();
    q.for_each_sample(|x, _| {
        m.push(finite_or_err(i.0, q.game.cost_raw(i.0, x), x)?);
        Ok(())
    })?;
    Ok(Estimate {
        value: m.mean,
        standard_error: m.standard_error(),
    })
}

/// Score-function estimate of `∂J̃_i/∂μ^i`: mean of `J_i(x)(x^i − μ^i)/σ²`.
pub fn score_gradient(q: &SmoothedQuery<'_>, i: PlayerIndex) -> Result<GradientEstimate> {
    q.validate(i)?;
    let d = q.game.dim();
    let offset = i.0 * d;
    let mut moments = vec![Moments::default(); d];
    q.for_each_sample(|x, z| {
        let cost = finite_or_err(i.0, q.game.cost_raw(i.0, x), x)?;
        for (k, m) in moments.iter_mut().enumerate() {
            // (x − μ)/σ² = z/σ
            m.push(cost * z[offset + k] / q.sigma);
        }
        Ok(())
    })?;
    Ok(GradientEstimate::from_moments(
        &moments,
        GradientMethod::ScoreMc,
    ))
}

/// Mixed-strategy game mapping `E[M_i(x)]`. Needs analytic gradients.
pub fn mixed_mapping(q: &SmoothedQuery<'_>, i: PlayerIndex) -> Result<GradientEstimate> {
    q.validate(i)?;
    let grad = q.game.gradient_raw()?;
    let d = q.game.dim();
    let mut moments = vec![Moments::default(); d];
    let mut g = vec![0.0; d];
    q.for_each_sample(|x, _| {
        grad(i.0, x, &mut g);
        for (m, &v) in moments.iter_mut().zip(&g) {
            m.push(finite_or_err(i.0, v, x)?);
        }
        Ok(())
    })?;
    Ok(GradientEstimate::from_moments(
        &moments,
        GradientMethod::MixedMappingMc,
    ))
}

/// Central differences of `J̃_i` in `μ^i`, using the same normal draws on
/// both sides of each difference.
pub fn finite_difference_gradient(
    q: &SmoothedQuery<'_>,
    i: PlayerIndex,
    step: f64,
) -> Result<GradientEstimate> {
    q.validate(i)?;
    if !(step > 0.0) {
        return Err(Error::usage("finite-difference step must be positive"));
    }
    let d = q.game.dim();
    let offset = i.0 * d;
    let mut moments = vec![Moments::default(); d];
    let mut shifted = vec![0.0; q.game.joint_dim()];
    q.for_each_sample(|x, _| {
        shifted.copy_from_slice(x);
        for (k, m) in moments.iter_mut().enumerate() {
            let idx = offset + k;
            shifted[idx] = x[idx] + step;
            let plus = finite_or_err(i.0, q.game.cost_raw(i.0, &shifted), &shifted)?;
            shifted[idx] = x[idx] - step;
            let minus = finite_or_err(i.0, q.game.cost_raw(i.0, &shifted), &shifted)?;
            shifted[idx] = x[idx];
            m.push((plus - minus) / (2.0 * step));
        }
        Ok(())
    })?;
    Ok(GradientEstimate::from_moments(
        &moments,
        GradientMethod::FiniteDifference,
    ))
}

/// Unsmoothed `M_i(μ)` wrapped as an exact estimate.
pub fn analytic_mapping(
    game: &GameDefinition,
    mu: &JointAction,
    i: PlayerIndex,
) -> Result<GradientEstimate> {
    let value = game.player_mapping(i, mu)?;
    let standard_error = vec![0.0; value.len()];
    Ok(GradientEstimate {
        value,
        standard_error,
        method: GradientMethod::Analytic,
    })
}

/// Size of the smoothing bias and the score-estimator noise at one `σ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasVarianceReport {
    pub sigma: f64,
    /// `‖Q‖ = ‖E[M(x)] − M(μ)‖` over all players.
    pub q_norm: f64,
    /// Standard error of the `q_norm` estimate (norm of coordinate SEs).
    pub q_standard_error: f64,
    /// `E‖R‖² = E‖F − E F‖²` with `F_i = J_i(x)(x^i − μ^i)/σ²`, summed over players.
    pub r_second_moment: f64,
    pub n_samples: usize,
}

/// Measures bias and martingale noise at each `σ`. The same seed is reused
/// for every `σ`.
pub fn bias_report(
    game: &GameDefinition,
    mu: &JointAction,
    sigmas: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<BiasVarianceReport>> {
    let exact = game.game_mapping(mu)?;
    let d = game.dim();
    sigmas
        .iter()
        .map(|&sigma| {
            let q = SmoothedQuery::new(game, mu.clone(), sigma, n_samples, seed);
            let mut q_sq = 0.0;
            let mut se_sq = 0.0;
            let mut r2 = 0.0;
            for i in game.players() {
                let mixed = mixed_mapping(&q, i)?;
                for (k, (v, se)) in mixed.value.iter().zip(&mixed.standard_error).enumerate() {
                    q_sq += (v - exact[i.0 * d + k]).powi(2);
                    se_sq += se * se;
                }
                let score = score_gradient(&q, i)?;
                // SE² · n recovers the per-coordinate sample variance of F.
                r2 += score
                    .standard_error
                    .iter()
                    .map(|se| se * se * n_samples as f64)
                    .sum::<f64>();
            }
            Ok(BiasVarianceReport {
                sigma,
                q_norm: q_sq.sqrt(),
                q_standard_error: se_sq.sqrt(),
                r_second_moment: r2,
                n_samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{registry, BoxSet};

    fn ja(v: &[f64]) -> JointAction {
        JointAction::new(1, v.to_vec()).unwrap()
    }

    fn within(est: f64, se: f64, target: f64) -> bool {
        (est - target).abs() <= 3.0 * se
    }

    #[test]
    fn bilinear_smoothed_cost_is_product_of_means() {
        let g = registry("bilinear").unwrap();
        let q = SmoothedQuery::new(&g, ja(&[0.5, -0.5]), 0.2, 100_000, 1);
        let e = smoothed_cost(&q, PlayerIndex(0)).unwrap();
        assert!(within(e.value, e.standard_error, -0.25), "{e:?}");
    }

    #[test]
    fn quadratic_smoothing_adds_variance() {
        let g = registry("quadratic-strong").unwrap();
        let (m1, m2, s) = (0.4, -0.1, 0.3);
        let q = SmoothedQuery::new(&g, ja(&[m1, m2]), s, 100_000, 2);
        let e = smoothed_cost(&q, PlayerIndex(0)).unwrap();
        let exact = (m1 - 0.3f64).powi(2) + s * s + 0.1 * m1 * m2;
        assert!(within(e.value, e.standard_error, exact), "{e:?} vs {exact}");
    }

    #[test]
    fn vanishing_sigma_recovers_cost() {
        for name in crate::game::REGISTRY_NAMES {
            let g = registry(name).unwrap();
            let mu = ja(&[0.3, -0.6]);
            let q = SmoothedQuery::new(&g, mu.clone(), 1e-4, 1000, 3);
            for i in g.players() {
                let e = smoothed_cost(&q, i).unwrap();
                let exact = g.eval_cost(i, &mu).unwrap();
                assert!((e.value - exact).abs() <= 1e-3, "{name}");
                let mm = mixed_mapping(&q, i).unwrap();
                let m = g.player_mapping(i, &mu).unwrap();
                assert!((mm.value[0] - m[0]).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn bilinear_score_gradient_matches_other_mean() {
        let g = registry("bilinear").unwrap();
        let q = SmoothedQuery::new(&g, ja(&[0.5, -0.5]), 0.2, 100_000, 4);
        let s = score_gradient(&q, PlayerIndex(0)).unwrap();
        assert!(within(s.value[0], s.standard_error[0], -0.5), "{s:?}");
        let q2 = SmoothedQuery {
            seed: 5,
            ..q.clone()
        };
        let m = mixed_mapping(&q2, PlayerIndex(0)).unwrap();
        assert!(s.agrees_with(&m, 3.0)[0], "{s:?} {m:?}");
    }

    #[test]
    fn constant_cost_has_zero_score_gradient() {
        let g = GameDefinition::new(
            "const",
            vec![BoxSet::cube(2, -1.0, 1.0).unwrap()],
            |_, _| 7.0,
        )
        .unwrap();
        let q = SmoothedQuery::new(
            &g,
            JointAction::new(2, vec![0.2, 0.9]).unwrap(),
            0.5,
            50_000,
            6,
        );
        let s = score_gradient(&q, PlayerIndex(0)).unwrap();
        for k in 0..2 {
            assert!(within(s.value[k], s.standard_error[k], 0.0), "{s:?}");
        }
    }

    #[test]
    fn linear_mapping_mixed_mean() {
        // J_1 = a1^2/2 + 2 a1 a2 gives M_1(x) = x1 + 2 x2, so E[M_1] = μ1 + 2μ2.
        let sets = vec![
            BoxSet::cube(1, -1.0, 1.0).unwrap(),
            BoxSet::cube(1, -1.0, 1.0).unwrap(),
        ];
        let g = GameDefinition::new("lin", sets, |i, a| {
            if i == 0 {
                0.5 * a[0] * a[0] + 2.0 * a[0] * a[1]
            } else {
                0.0
            }
        })
        .unwrap()
        .with_gradient(|i, a, out| out[0] = if i == 0 { a[0] + 2.0 * a[1] } else { 0.0 });
        let q = SmoothedQuery::new(&g, ja(&[0.1, 0.4]), 0.7, 50_000, 8);
        let m = mixed_mapping(&q, PlayerIndex(0)).unwrap();
        assert!(within(m.value[0], m.standard_error[0], 0.9), "{m:?}");
    }

    #[test]
    fn finite_differences_agree_with_score() {
        let g = registry("shifted-sum").unwrap();
        let mu = ja(&[0.2, 0.7]);
        let q = SmoothedQuery::new(&g, mu.clone(), 0.3, 100_000, 10);
        let fd = finite_difference_gradient(&q, PlayerIndex(1), 1e-3).unwrap();
        let score = score_gradient(
            &SmoothedQuery {
                seed: 11,
                ..q.clone()
            },
            PlayerIndex(1),
        )
        .unwrap();
        assert!(fd.agrees_with(&score, 3.0)[0], "{fd:?} {score:?}");
    }

    #[test]
    fn martingale_term_has_zero_mean() {
        let g = registry("quadratic-strong").unwrap();
        let mu = ja(&[-0.4, 0.6]);
        let expected = score_gradient(
            &SmoothedQuery::new(&g, mu.clone(), 0.25, 100_000, 20),
            PlayerIndex(0),
        )
        .unwrap();
        let fresh = score_gradient(
            &SmoothedQuery::new(&g, mu, 0.25, 100_000, 21),
            PlayerIndex(0),
        )
        .unwrap();
        // mean of R = F − E F over fresh draws
        let r_mean = fresh.value[0] - expected.value[0];
        let se = (fresh.standard_error[0].powi(2) + expected.standard_error[0].powi(2)).sqrt();
        assert!(r_mean.abs() <= 3.0 * se, "{r_mean} vs {se}");
    }

    #[test]
    fn kinked_mapping_bias_scales_linearly() {
        // M_1(x) = max(x1, 0): at μ1 = 0 the smoothing bias is σ/√(2π).
        let sets = vec![BoxSet::cube(1, -1.0, 1.0).unwrap()];
        let g = GameDefinition::new("hinge", sets, |_, a| 0.5 * a[0].max(0.0).powi(2))
            .unwrap()
            .with_gradient(|_, a, out| out[0] = a[0].max(0.0));
        let sigmas = [0.4, 0.2, 0.1, 0.05];
        let reports = bias_report(&g, &ja(&[0.0]), &sigmas, 100_000, 30).unwrap();
        for r in &reports {
            let exact = r.sigma / (2.0 * std::f64::consts::PI).sqrt();
            assert!(
                (r.q_norm - exact).abs() <= 3.0 * r.q_standard_error,
                "{r:?}"
            );
        }
        let slope = crate::stats::log_log_slope(
            &reports.iter().map(|r| r.sigma).collect::<Vec<_>>(),
            &reports.iter().map(|r| r.q_norm).collect::<Vec<_>>(),
        );
        assert!((0.9..=1.1).contains(&slope), "slope {slope}");
    }

    #[test]
    fn capability_and_usage_errors() {
        let g = GameDefinition::new("c", vec![BoxSet::cube(1, -1.0, 1.0).unwrap()], |_, _| 1.0)
            .unwrap();
        let q = SmoothedQuery::new(&g, ja(&[0.0]), 0.1, 10, 0);
        assert!(matches!(
            mixed_mapping(&q, PlayerIndex(0)),
            Err(Error::Capability(_))
        ));
        let bad = SmoothedQuery {
            sigma: 0.0,
            ..q.clone()
        };
        assert!(matches!(
            score_gradient(&bad, PlayerIndex(0)),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            score_gradient(&q, PlayerIndex(3)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn non_finite_cost_sample_errors() {
        let g = GameDefinition::new("inf", vec![BoxSet::cube(1, -1.0, 1.0).unwrap()], |_, a| {
            1.0 / a[0].max(0.0)
        })
        .unwrap();
        let q = SmoothedQuery::new(&g, ja(&[-0.5]), 1.0, 1000, 0);
        assert!(matches!(
            smoothed_cost(&q, PlayerIndex(0)),
            Err(Error::NonFinitePayoff { .. })
        ));
    }

    #[test]
    fn estimators_are_deterministic() {
        let g = registry("bilinear").unwrap();
        let q = SmoothedQuery::new(&g, ja(&[0.1, 0.2]), 0.5, 1000, 99);
        assert_eq!(
            score_gradient(&q, PlayerIndex(1)).unwrap(),
            score_gradient(&q, PlayerIndex(1)).unwrap()
        );
    }
}
