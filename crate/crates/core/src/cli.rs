//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error (bad flags, unreadable or invalid config) |
//! | 2 | runtime failure during estimation or an experiment |
//! | 3 | an acceptance gate failed (`sweep --assert-slope`, `equivalence`) |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{generate_dataset, load_dataset_csv, save_dataset_csv, ManifoldSpec, OutcomeModel};
use crate::error::Error;
use crate::estimator::{AdjustmentKind, CateEstimator, EstimatorConfig, SchemeKind};
use crate::experiments::{
    run_ambient_invariance, run_coverage, run_double_robustness, run_mse_sweep, run_scheme_equivalence, write_csv,
    write_json, write_plot, ExperimentConfig, Regime,
};
use crate::forest::{ForestConfig, Honesty};
use crate::inference::{confidence_interval, estimate_nuisance, kernel_constants, sigma_hat, NuisanceOptions};
use crate::smoother::{
    default_adjustment_bandwidth, default_bandwidth, fit_adjustment, BandwidthRegime, KernelProfile, KernelSpec,
};

pub const THREADS_ENV: &str = "MANIFOLD_CATE_THREADS";

/// Tolerance around `-2/(m+2)` for `sweep --assert-slope`.
pub const SLOPE_TOLERANCE: f64 = 0.35;

#[derive(Debug, Parser)]
#[command(name = "manifold-cate", about = "Kernel-smoothed causal-forest CATE estimation on manifolds")]
pub struct Cli {
    /// Worker threads (default: MANIFOLD_CATE_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset and write it as CSV.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate tau(x) at one point and print it as JSON.
    Estimate(EstimateArgs),
    /// MSE sweep over the n grid with a log-log slope fit.
    Sweep {
        #[command(flatten)]
        io: ExperimentIo,
        /// Exit with code 3 unless the slope is within 0.35 of -2/(m+2)
        /// and the mean MSE strictly decreases.
        #[arg(long)]
        assert_slope: bool,
    },
    /// Empirical coverage of the CLT confidence intervals.
    Coverage {
        #[command(flatten)]
        io: ExperimentIo,
    },
    /// Double-robustness regimes (forest + zero, kNN + oracle).
    DrCheck {
        #[command(flatten)]
        io: ExperimentIo,
    },
    /// MSE across ambient dimensions for one intrinsic sample.
    Ambient {
        #[command(flatten)]
        io: ExperimentIo,
    },
    /// Weight-scheme pipeline against the direct forest estimator.
    Equivalence {
        #[command(flatten)]
        io: ExperimentIo,
    },
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
pub struct ExperimentIo {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeArg {
    Forest,
    Knn,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RegimeArg {
    Mse,
    Clt,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Dataset CSV with header x1..xd,d,y.
    #[arg(long)]
    pub data: PathBuf,
    /// Intrinsic dimension of the covariate support.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    /// Query point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Bandwidth; defaults to the regime's rate with c_h = 1.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value = "mse")]
    pub regime: RegimeArg,
    /// Also report a confidence interval at this level.
    #[arg(long)]
    pub ci: Option<f64>,
    #[arg(long, value_enum, default_value = "forest")]
    pub scheme: SchemeArg,
    /// Neighbours for the kNN scheme.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Trees per arm.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Grow honest (median-split) trees instead of extremely honest ones.
    #[arg(long)]
    pub honest: bool,
    #[arg(long, value_enum, default_value = "box")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KernelArg {
    Box,
    TruncatedGaussian,
}

/// Input of `generate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub manifold: ManifoldSpec,
    pub model: OutcomeModel,
    pub n: usize,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            manifold: ManifoldSpec::circle(3),
            model: OutcomeModel::default(),
            n: 1000,
            seed: 0,
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
    Gate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Payloads go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let threads = cli.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 2;
        }
    };
    let (mut payload, mut notes) = (Vec::new(), Vec::new());
    let outcome = pool.install(|| dispatch(cli.command, &mut payload, &mut notes));
    let _ = out.write_all(&payload);
    let _ = err.write_all(&notes);
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Gate(m)) => {
            let _ = writeln!(err, "gate failed: {m}");
            3
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(usage)
}

fn prepare_dir(dir: &Path) -> std::result::Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Version => {
            writeln!(out, "manifold-cate {}", env!("CARGO_PKG_VERSION")).map_err(Error::from)?;
        }
        Command::Generate { config, out: path } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
            let cfg: GenerateConfig = serde_json::from_str(&text).map_err(|e| usage(e.into()))?;
            let (data, _) = generate_dataset(&cfg.manifold, &cfg.model, cfg.n, cfg.seed).map_err(usage)?;
            save_dataset_csv(&data, &path)?;
            let (n1, n0) = data.arm_counts();
            writeln!(err, "wrote {} rows ({n1} treated, {n0} control) to {}", data.n(), path.display()).ok();
        }
        Command::Estimate(args) => estimate(args, out)?,
        Command::Sweep { io, assert_slope } => {
            let config = load_config(&io.config)?;
            prepare_dir(&io.out_dir)?;
            let result = run_mse_sweep(&config)?;
            let dir = &io.out_dir;
            write_csv(&dir.join("sweep_records.csv"), &result.records)?;
            write_csv(&dir.join("sweep_cells.csv"), &result.cells)?;
            let summary = json!({
                "mean_mse": result.mean_mse,
                "slope": result.slope,
                "target_slope": result.target_slope,
                "strictly_decreasing": result.strictly_decreasing(),
                "warnings": result.warnings,
                "config": result.config,
            });
            write_json(&dir.join("sweep_summary.json"), &summary)?;
            let pts: Vec<(f64, Option<f64>)> = result.mean_mse.iter().map(|&(n, m)| (n as f64, m)).collect();
            write_plot(&dir.join("plot_mse.csv"), ("n", "mean_mse"), &pts)?;
            for w in &result.warnings {
                writeln!(err, "warning: {w}").ok();
            }
            if assert_slope {
                let slope = result.slope.as_ref().map(|s| s.slope);
                let ok = slope.is_some_and(|s| (s - result.target_slope).abs() <= SLOPE_TOLERANCE)
                    && result.strictly_decreasing();
                if !ok {
                    return Err(Failure::Gate(format!(
                        "slope {slope:?} vs target {:.4} +- {SLOPE_TOLERANCE}, strictly decreasing: {}",
                        result.target_slope,
                        result.strictly_decreasing()
                    )));
                }
            }
        }
        Command::Coverage { io } => {
            let config = load_config(&io.config)?;
            prepare_dir(&io.out_dir)?;
            let result = run_coverage(&config)?;
            let dir = &io.out_dir;
            write_csv(&dir.join("coverage_records.csv"), &result.records)?;
            #[derive(Serialize)]
            struct Row {
                test_point: usize,
                tau: f64,
                coverage: Option<f64>,
                mean_half_width: Option<f64>,
                successes: usize,
                failures: usize,
            }
            let rows: Vec<Row> = result
                .points
                .iter()
                .map(|p| Row {
                    test_point: p.test_point,
                    tau: p.tau,
                    coverage: p.coverage,
                    mean_half_width: p.mean_half_width,
                    successes: p.successes,
                    failures: p.failures,
                })
                .collect();
            write_csv(&dir.join("coverage_points.csv"), &rows)?;
            let summary = json!({
                "n": result.n,
                "h": result.h,
                "h_nuisance": result.h_nuisance,
                "level": result.level,
                "points": result.points,
                "config": result.config,
            });
            write_json(&dir.join("coverage_summary.json"), &summary)?;
            let pts: Vec<(f64, Option<f64>)> = result.points.iter().map(|p| (p.test_point as f64, p.coverage)).collect();
            write_plot(&dir.join("plot_coverage.csv"), ("test_point", "coverage"), &pts)?;
        }
        Command::DrCheck { io } => {
            let config = load_config(&io.config)?;
            prepare_dir(&io.out_dir)?;
            let result = run_double_robustness(&config)?;
            let dir = &io.out_dir;
            write_csv(&dir.join("dr_records.csv"), &result.records)?;
            let summary = json!({ "regimes": result.summaries, "config": result.config });
            write_json(&dir.join("dr_summary.json"), &summary)?;
            for regime in Regime::ALL {
                let pts: Vec<(f64, Option<f64>)> = config
                    .n_grid
                    .iter()
                    .map(|&n| {
                        let errs: Vec<f64> = result
                            .records
                            .iter()
                            .filter(|r| r.regime == regime && r.n == n)
                            .filter_map(|r| r.max_abs_error)
                            .collect();
                        let mean = (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64);
                        (n as f64, mean)
                    })
                    .collect();
                write_plot(&dir.join(format!("plot_dr_{}.csv", regime.label())), ("n", "mean_max_abs_error"), &pts)?;
            }
        }
        Command::Ambient { io } => {
            let config = load_config(&io.config)?;
            prepare_dir(&io.out_dir)?;
            let result = run_ambient_invariance(&config)?;
            let dir = &io.out_dir;
            write_csv(&dir.join("ambient_records.csv"), &result.records)?;
            let summary = json!({
                "n": result.n,
                "mean_mse": result.mean_mse,
                "ratio": result.ratio,
                "config": result.config,
            });
            write_json(&dir.join("ambient_summary.json"), &summary)?;
            let pts: Vec<(f64, Option<f64>)> = result.mean_mse.iter().map(|&(d, m)| (d as f64, m)).collect();
            write_plot(&dir.join("plot_ambient.csv"), ("d", "mean_mse"), &pts)?;
        }
        Command::Equivalence { io } => {
            let config = load_config(&io.config)?;
            prepare_dir(&io.out_dir)?;
            let result = run_scheme_equivalence(&config)?;
            write_json(&io.out_dir.join("equivalence_summary.json"), &result)?;
            if !result.passed {
                return Err(Failure::Gate(format!(
                    "max gap {:.3e} exceeds {:.0e}",
                    result.max_gap, result.tolerance
                )));
            }
        }
    }
    Ok(())
}

fn estimate(args: EstimateArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let x: Vec<f64> = args
        .x
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("--x: {e}")))?;
    if let Some(level) = args.ci {
        if !(level > 0.0 && level < 1.0) {
            return Err(Failure::Usage(format!("--ci must lie in (0, 1), got {level}")));
        }
    }
    if let Some(h) = args.h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::Usage(format!("--h must be positive, got {h}")));
        }
    }
    let data = load_dataset_csv(&args.data).map_err(usage)?;
    if x.len() != data.dim() {
        return Err(Failure::Usage(format!("--x has {} coordinates, data has {}", x.len(), data.dim())));
    }
    let m = args.m as usize;
    let kernel = KernelSpec {
        profile: match args.kernel {
            KernelArg::Box => KernelProfile::Box,
            KernelArg::TruncatedGaussian => KernelProfile::TruncatedGaussian,
        },
    };
    let mut forest = ForestConfig::default().with_seed(args.seed);
    if let Some(b) = args.trees {
        forest = forest.with_trees(b);
    }
    if args.honest {
        forest = forest.with_honesty(Honesty::Honest);
    }
    let config = EstimatorConfig {
        m,
        kernel,
        h: args.h,
        regime: match args.regime {
            RegimeArg::Mse => BandwidthRegime::Mse,
            RegimeArg::Clt => BandwidthRegime::Clt,
        },
        c_h: 1.0,
        forest,
        scheme: match args.scheme {
            SchemeArg::Forest => SchemeKind::Forest,
            SchemeArg::Knn => SchemeKind::Knn { k: args.k },
        },
        adjustment: AdjustmentKind::Zero,
    };
    config.validate().map_err(usage)?;
    let n = data.n();
    let fit = CateEstimator::new(config).fit(&data, std::slice::from_ref(&x))?;
    let tau_hat = fit.values()?[0];
    let mut payload = json!({ "tau_hat": tau_hat, "h": fit.h, "n": n, "m": m });
    if let Some(level) = args.ci {
        let h_nu = default_bandwidth(n, m, BandwidthRegime::Mse, 1.0);
        let adj = fit_adjustment(&data, &kernel, default_adjustment_bandwidth(n, m))?;
        let nu = estimate_nuisance(&data, &adj, &kernel, h_nu, m, &x, &NuisanceOptions::default())?;
        let sigma = sigma_hat(&nu, &kernel_constants(&kernel, m));
        let ci = confidence_interval(tau_hat, sigma, n, fit.h, m, level)?;
        payload["ci"] = json!({
            "level": level,
            "lower": ci.lower(),
            "upper": ci.upper(),
            "half_width": ci.half_width,
            "sigma_hat": sigma,
            "variance_floored": nu.floored,
        });
    }
    writeln!(out, "{payload}").map_err(Error::from)?;
    Ok(())
}
