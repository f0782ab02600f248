use monotone_nash::{registry, sample_actions, JointAction, LearnerState, PlayerIndex};

/// Mean and standard error of `J_i(x)(x^i − μ^i)/σ²` over draws from the
/// learner's own sampler, with `μ` frozen.
fn drift(game: &str, mu: &[f64], sigma: f64, i: usize, n: usize, seed: u64) -> (f64, f64) {
    let game = registry(game).unwrap();
    let mu = JointAction::new(1, mu.to_vec()).unwrap();
    let mut state = LearnerState::new(mu.clone(), seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let x = sample_actions(&mut state, sigma);
        let payoff = game.eval_cost(PlayerIndex(i), &x).unwrap();
        let f = payoff * (x.as_slice()[i] - mu.as_slice()[i]) / (sigma * sigma);
        sum += f;
        sum_sq += f * f;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn one_step_drift_is_smoothed_gradient() {
    let mu = [0.35, -0.7];
    for sigma in [0.1, 0.4] {
        // bilinear: d/dμ1 of μ1 μ2 and d/dμ2 of −μ1 μ2
        for (i, exact) in [(0, mu[1]), (1, -mu[0])] {
            let (m, se) = drift("bilinear", &mu, sigma, i, 100_000, 17 + i as u64);
            assert!(
                (m - exact).abs() <= 3.0 * se,
                "bilinear player {i} sigma {sigma}: {m} ± {se} vs {exact}"
            );
        }
        let c = [0.3, -0.2];
        for i in 0..2 {
            let exact = 2.0 * (mu[i] - c[i]) + 0.1 * mu[1 - i];
            let (m, se) = drift("quadratic-strong", &mu, sigma, i, 100_000, 29 + i as u64);
            assert!(
                (m - exact).abs() <= 3.0 * se,
                "quadratic player {i} sigma {sigma}: {m} ± {se} vs {exact}"
            );
        }
    }
}
