use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use monotone_nash::game::{registry, JointAction, PlayerIndex};
use monotone_nash::harness::simulate::uniform_initial_means;
use monotone_nash::harness::{
    plot_csv, run_experiment, write_outputs, ExperimentConfig, OutputFormat,
};
use monotone_nash::schedule::{parse_number, validate_exponents, ScheduleExponents};
use monotone_nash::smoothing::{
    finite_difference_gradient, mixed_mapping, score_gradient, GradientEstimate, SmoothedQuery,
};
use monotone_nash::solvers::{solve_tikhonov, solve_vi, tikhonov_path, SolverSettings};
use monotone_nash::stats::median;
use monotone_nash::Error;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(
    name = "monotone-nash",
    version,
    about = "Payoff-based Nash equilibrium learning in monotone games"
)]
struct Cli {
    /// Base seed (simulate) or estimator seed (verify-gradient).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (simulate) or JSON artifact path (solve).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run independent learner replications and write runs.csv + summary.csv.
    Simulate {
        /// `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. `--set max_iters=100`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Drop the regularization term.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        allow_invalid_schedule: bool,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long)]
        max_iters: Option<u64>,
    },
    /// Check schedule exponents a, b, c (decimals or fractions like 5/9).
    CheckSchedule {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
        #[arg(allow_hyphen_values = true)]
        c: String,
    },
    /// Solve a registry game with a full-information reference solver.
    Solve {
        game: String,
        mode: SolveMode,
        /// Regularization for `tikhonov` mode.
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Comma-separated decreasing epsilons for `path` mode.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 2_000_000)]
        max_iters: usize,
    },
    /// Compare score-function, mixed-mapping and finite-difference gradients.
    VerifyGradient {
        game: String,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Comma-separated joint mean; random points from the box if absent.
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        /// Number of random query points when --mu is absent.
        #[arg(long, default_value_t = 3)]
        queries: usize,
    },
    /// Render a runs.csv as an SVG chart.
    Plot { input: PathBuf, output: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolveMode {
    Vi,
    Tikhonov,
    Path,
}

/// Result of a subcommand: `Ok(true)` success, `Ok(false)` a check failed.
type Outcome = Result<bool, Error>;

fn simulate(
    cli: &Cli,
    config_path: &Option<PathBuf>,
    overrides: &[String],
    baseline: bool,
    allow_invalid: bool,
    replications: Option<u64>,
    max_iters: Option<u64>,
) -> Outcome {
    let mut config = match config_path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for o in overrides {
        config.apply_override(o)?;
    }
    if baseline {
        config.regularized = false;
    }
    if allow_invalid {
        config.allow_invalid_schedule = true;
    }
    if let Some(r) = replications {
        config.replications = r;
    }
    if let Some(m) = max_iters {
        config.max_iters = m;
    }
    if let Some(s) = cli.seed {
        config.base_seed = s;
    }
    if let Some(o) = &cli.out {
        config.output = o.clone();
    }
    config.validate()?;

    let outputs = run_experiment(&config)?;
    write_outputs(&config, &outputs, &config.output)?;
    if !cli.quiet {
        let finals: Vec<f64> = outputs
            .iter()
            .filter_map(|o| o.summary.final_dist)
            .collect();
        let hits = outputs
            .iter()
            .filter(|o| o.summary.first_hit_0p1.is_some())
            .count();
        let file = match config.format {
            OutputFormat::Csv => "runs.csv",
            OutputFormat::Json => "runs.json",
        };
        say!(
            "{} replications of '{}' ({} iterations, {})",
            outputs.len(),
            config.game,
            config.max_iters,
            if config.regularized {
                "regularized"
            } else {
                "baseline"
            }
        );
        say!("median final distance to reference: {:.6}", median(&finals));
        say!(
            "replications reaching distance <= 0.1: {hits}/{}",
            outputs.len()
        );
        say!(
            "wrote {} and summary.csv to {}",
            file,
            config.output.display()
        );
    }
    Ok(true)
}

fn check_schedule(cli: &Cli, a: &str, b: &str, c: &str) -> Outcome {
    let e = ScheduleExponents::new(parse_number(a)?, parse_number(b)?, parse_number(c)?)?;
    let report = validate_exponents(&e)?;
    if !cli.quiet {
        say!("{report}");
    }
    Ok(report.all_pass())
}

fn solve(
    cli: &Cli,
    game_name: &str,
    mode: SolveMode,
    epsilon: f64,
    epsilons: &Option<Vec<f64>>,
    tol: f64,
    max_iters: usize,
) -> Outcome {
    let game = registry(game_name)?;
    let settings = SolverSettings {
        tol,
        max_iters,
        ..SolverSettings::default()
    };
    let doc = match mode {
        SolveMode::Vi => {
            let sol = solve_vi(&game, &settings)?;
            if !cli.quiet {
                say!(
                    "vi solution {:?} (residual {:.3e}, {} iterations)",
                    sol.y,
                    sol.residual,
                    sol.iterations
                );
            }
            json!({ "game": game_name, "mode": "vi", "solution": sol })
        }
        SolveMode::Tikhonov => {
            let p = solve_tikhonov(&game, epsilon, &settings)?;
            if !cli.quiet {
                say!(
                    "tikhonov point at epsilon {}: {:?} (residual {:.3e}, {} iterations)",
                    p.epsilon,
                    p.y,
                    p.residual,
                    p.iterations
                );
            }
            json!({ "game": game_name, "mode": "tikhonov", "point": p })
        }
        SolveMode::Path => {
            let eps = epsilons
                .clone()
                .unwrap_or_else(|| (0..=4).map(|k| 10f64.powi(-k)).collect());
            let path = tikhonov_path(&game, &eps, &settings).map_err(|f| f.error)?;
            let checks = path.increment_checks();
            if !cli.quiet {
                for p in &path.points {
                    say!("epsilon {:<10e} y {:?}", p.epsilon, p.y);
                }
                say!("limit {:?}, max norm {:.6}", path.last().y, path.max_norm);
            }
            json!({ "game": game_name, "mode": "path", "path": path, "increment_checks": checks })
        }
    };
    let text = serde_json::to_string_pretty(&doc)?;
    match &cli.out {
        Some(path) => fs::write(path, text + "\n")?,
        None if !cli.quiet => say!("{text}"),
        None => {}
    }
    Ok(true)
}

fn verify_gradient(
    cli: &Cli,
    game_name: &str,
    sigma: f64,
    samples: usize,
    mu: &Option<String>,
    queries: usize,
) -> Outcome {
    let game = registry(game_name)?;
    let seed = cli.seed.unwrap_or(0);
    let points: Vec<JointAction> = match mu {
        Some(s) => {
            let v = s
                .split(',')
                .map(parse_number)
                .collect::<Result<Vec<_>, _>>()?;
            let a = JointAction::new(game.dim(), v)?;
            game.check_action(&a)?;
            vec![a]
        }
        None => (0..queries as u64)
            .map(|q| uniform_initial_means(&game, seed.wrapping_add(1000 + q)))
            .collect::<Result<_, _>>()?,
    };
    let mut all_ok = true;
    let show = |label: &str, g: &GradientEstimate| {
        if !cli.quiet {
            say!(
                "    {label:<16} {:+.6} ± {:.6}",
                g.value[0],
                g.standard_error[0]
            );
        }
    };
    for (n, mu) in points.iter().enumerate() {
        if !cli.quiet {
            say!("query {n}: mu = {:?}, sigma = {sigma}", mu.as_slice());
        }
        for i in game.players() {
            let base = seed
                .wrapping_mul(31)
                .wrapping_add(7 * n as u64 + 3 * i.0 as u64);
            let q = |s: u64| SmoothedQuery::new(&game, mu.clone(), sigma, samples, s);
            let score = score_gradient(&q(base), i)?;
            let mixed = mixed_mapping(&q(base.wrapping_add(1)), i)?;
            let fd = finite_difference_gradient(&q(base.wrapping_add(2)), i, 1e-3)?;
            if !cli.quiet {
                say!("  player {}", PlayerIndex(i.0));
            }
            show("score", &score);
            show("mixed mapping", &mixed);
            show("finite diff", &fd);
            let ok = score
                .agrees_with(&mixed, 3.0)
                .into_iter()
                .chain(score.agrees_with(&fd, 3.0))
                .all(|b| b);
            if !cli.quiet {
                say!(
                    "    {}",
                    if ok {
                        "agree within 3 SE"
                    } else {
                        "DISAGREE beyond 3 SE"
                    }
                );
            }
            all_ok &= ok;
        }
    }
    Ok(all_ok)
}

fn plot(input: &PathBuf, output: &PathBuf, quiet: bool) -> Outcome {
    let text = fs::read_to_string(input)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", input.display())))?;
    let svg = plot_csv(&text)?;
    fs::write(output, svg)?;
    if !quiet {
        say!("wrote {}", output.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate {
            config,
            overrides,
            baseline,
            allow_invalid_schedule,
            replications,
            max_iters,
        } => simulate(
            &cli,
            config,
            overrides,
            *baseline,
            *allow_invalid_schedule,
            *replications,
            *max_iters,
        ),
        Command::CheckSchedule { a, b, c } => check_schedule(&cli, a, b, c),
        Command::Solve {
            game,
            mode,
            epsilon,
            epsilons,
            tol,
            max_iters,
        } => solve(&cli, game, *mode, *epsilon, epsilons, *tol, *max_iters),
        Command::VerifyGradient {
            game,
            sigma,
            samples,
            mu,
            queries,
        } => verify_gradient(&cli, game, *sigma, *samples, mu, *queries),
        Command::Plot { input, output } => plot(input, output, cli.quiet),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
