//! Experiment configuration, replication orchestration, CSV emission, and
//! the command-line interface.
//!
//! A TOML config describes one experiment: an instance family, a run block
//! (horizon, budget, baselines), and optional clustering/radius overrides.
//! Every replication `r` reseeds both the instance stream and the run
//! streams by XOR-ing `r` into the configured seeds, so replications are
//! independent and the whole experiment is reproducible bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::agent::{self, BaselineKind, RunConfig, RunTrace};
use crate::benchmark::oracle_opt;
use crate::cluster::{subset_size, ClusteringConfig};
use crate::env::{generate_instance, InstanceConfig};
use crate::error::{Error, Result};
use crate::estimate::RadiusConfig;
use crate::seeding::{stream, TAG_OPT_ORACLE};

fn default_baselines() -> Vec<BaselineKind> {
    BaselineKind::ALL.to_vec()
}
fn default_replications() -> usize {
    1
}
fn default_output_dir() -> String {
    "out".into()
}
fn default_n_mc_opt() -> usize {
    2000
}

/// The `[run]` table: horizon, budget (absolute or as a fraction of the
/// horizon, exactly one), seed, and which baselines to execute.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: usize,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub budget_fraction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_noop_in_argmax: bool,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<BaselineKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub run: RunSection,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub radius: RadiusConfig,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub t_grid: Option<Vec<usize>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_n_mc_opt")]
    pub n_mc_opt: usize,
}

impl ExperimentConfig {
    /// The horizons this experiment covers: the grid when present, otherwise
    /// the single configured horizon.
    pub fn horizons(&self) -> Vec<usize> {
        self.t_grid.clone().unwrap_or_else(|| vec![self.run.horizon])
    }

    pub fn budget_for(&self, horizon: usize) -> f64 {
        match (self.run.budget, self.run.budget_fraction) {
            (Some(b), _) => b,
            (None, Some(f)) => f * horizon as f64,
            (None, None) => f64::NAN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.clustering.validate()?;
        self.radius.validate()?;
        if self.replications == 0 {
            return Err(Error::Validation("replications must be positive".into()));
        }
        if self.n_mc_opt == 0 {
            return Err(Error::Validation("n_mc_opt must be positive".into()));
        }
        if self.run.horizon == 0 {
            return Err(Error::Validation("run.horizon must be positive".into()));
        }
        if self.run.baselines.is_empty() {
            return Err(Error::Validation("run.baselines must not be empty".into()));
        }
        for (i, b) in self.run.baselines.iter().enumerate() {
            if self.run.baselines[..i].contains(b) {
                return Err(Error::Validation(format!(
                    "baseline {} listed twice",
                    b.name()
                )));
            }
        }
        match (self.run.budget, self.run.budget_fraction) {
            (Some(_), Some(_)) => {
                return Err(Error::Validation(
                    "set exactly one of run.budget and run.budget_fraction, not both".into(),
                ));
            }
            (None, None) => {
                return Err(Error::Validation(
                    "set exactly one of run.budget and run.budget_fraction".into(),
                ));
            }
            (Some(b), None) if !(b > 0.0) => {
                return Err(Error::Validation(format!(
                    "run.budget must be positive, got {b}"
                )));
            }
            (None, Some(f)) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::Validation(format!(
                    "run.budget_fraction must lie in (0, 1], got {f}"
                )));
            }
            _ => {}
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() {
                return Err(Error::Validation("t_grid must not be empty".into()));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Validation(
                    "t_grid must be strictly increasing".into(),
                ));
            }
        }
        // Resolve the subset size per baseline and horizon and check the
        // exploration-phase preconditions up front.
        let weights = self.instance.proportion_weights();
        let p_min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        for &t in &self.horizons() {
            let budget = self.budget_for(t);
            if !(budget > 0.0) {
                return Err(Error::Validation(format!(
                    "budget resolves to {budget} at T = {t}"
                )));
            }
            if budget > t as f64 {
                return Err(Error::Validation(format!(
                    "budget {budget} exceeds horizon {t}; the dual payoff range requires B <= T"
                )));
            }
            for baseline in &self.run.baselines {
                let (clusters, pm) = match baseline {
                    BaselineKind::Random => continue,
                    BaselineKind::SingleClusterLcbwk => (1, 1.0),
                    _ => (self.instance.clusters, p_min),
                };
                let n_s = subset_size(
                    self.instance.arms,
                    pm,
                    clusters,
                    t,
                    self.clustering.delta,
                    self.clustering.coverage_constant,
                );
                let boundary = n_s * n_s;
                if budget <= boundary as f64 {
                    return Err(Error::Validation(format!(
                        "budget {budget} at T = {t} cannot cover exploration for {}; \
                         the run requires B > N_S T_0 = {boundary}",
                        baseline.name()
                    )));
                }
                if t <= boundary {
                    return Err(Error::Validation(format!(
                        "horizon {t} leaves no optimistic phase for {}; \
                         the run requires T > N_S T_0 = {boundary}",
                        baseline.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parse and validate an experiment config from a TOML file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// One summary.csv row.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub replication: usize,
    pub baseline: BaselineKind,
    pub horizon: usize,
    pub budget: f64,
    pub n_s: usize,
    pub t0: usize,
    pub t_omega: usize,
    pub total_reward: f64,
    pub opt_total: f64,
    pub opt_hat: f64,
    pub z: f64,
    pub regret: f64,
    pub eps_c_max: f64,
    pub wall_ms: u128,
}

impl SummaryRow {
    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.replication,
            self.baseline.name(),
            self.horizon,
            self.budget,
            self.n_s,
            self.t0,
            self.t_omega,
            self.total_reward,
            self.opt_total,
            self.opt_hat,
            self.z,
            self.regret,
            self.eps_c_max,
            self.wall_ms
        )
    }
}

pub const SUMMARY_HEADER: &str =
    "replication,baseline,T,B,N_S,T0,T_omega,total_reward,opt_total,opt_hat,Z,regret,eps_c_max,wall_ms";

/// Render one run trace as CSV: period, arm (-1 on no-op), cluster label,
/// reward, consumption coordinates, dual coordinates, and the chosen score.
pub fn trace_to_csv(trace: &RunTrace, resources: usize) -> String {
    let mut header = String::from("t,arm,cluster,reward");
    for j in 0..resources {
        let _ = write!(header, ",v_{j}");
    }
    for j in 0..resources {
        let _ = write!(header, ",theta_{j}");
    }
    header.push_str(",score");
    let mut out = header;
    out.push('\n');
    for rec in &trace.records {
        let _ = write!(out, "{},{},{},{}", rec.t, rec.arm, rec.cluster, rec.reward);
        for j in 0..resources {
            let _ = write!(out, ",{}", rec.consumption[j]);
        }
        for j in 0..resources {
            let _ = write!(out, ",{}", rec.theta[j]);
        }
        let _ = writeln!(out, ",{}", rec.score);
    }
    out
}

struct ReplicationOutput {
    rows: Vec<SummaryRow>,
    traces: Vec<(String, String)>,
}

fn run_replication(cfg: &ExperimentConfig, r: usize) -> Result<ReplicationOutput> {
    let mut inst_cfg = cfg.instance.clone();
    inst_cfg.seed = cfg.instance.seed ^ r as u64;
    let instance = generate_instance(&inst_cfg)?;
    let sweep = cfg.t_grid.is_some();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    // The per-period program value depends on the budget only through the
    // rate B/T, so it is cached by that rate across the horizon grid.
    let mut value_cache: Vec<(u64, f64)> = Vec::new();
    for &t in &cfg.horizons() {
        let budget = cfg.budget_for(t);
        let rate_key = (budget / t as f64).to_bits();
        let per_period = match value_cache.iter().find(|(k, _)| *k == rate_key) {
            Some(&(_, v)) => v,
            None => {
                let mut rng = stream(inst_cfg.seed, TAG_OPT_ORACLE);
                let v = oracle_opt(&instance, budget, t, cfg.n_mc_opt, &mut rng)? / t as f64;
                value_cache.push((rate_key, v));
                v
            }
        };
        let opt_total = per_period * t as f64;
        for &baseline in &cfg.run.baselines {
            let run_cfg = RunConfig {
                horizon: t,
                budget,
                baseline,
                allow_noop_in_argmax: cfg.run.allow_noop_in_argmax,
                seed: cfg.run.seed ^ r as u64,
                radius: cfg.radius.clone(),
                clustering: cfg.clustering.clone(),
            };
            let started = Instant::now();
            let trace = agent::run(&instance, &run_cfg)?;
            let wall_ms = started.elapsed().as_millis();
            let regret = opt_total - trace.total_reward;
            rows.push(SummaryRow {
                replication: r,
                baseline,
                horizon: t,
                budget,
                n_s: trace.n_s,
                t0: trace.t0,
                t_omega: trace.t_omega,
                total_reward: trace.total_reward,
                opt_total,
                opt_hat: trace.opt_hat,
                z: trace.z,
                regret,
                eps_c_max: trace.eps_c_max,
                wall_ms,
            });
            let name = if sweep {
                format!("trace_{}_{}_T{}.csv", baseline.name(), r, t)
            } else {
                format!("trace_{}_{}.csv", baseline.name(), r)
            };
            traces.push((name, trace_to_csv(&trace, instance.resources())));
        }
    }
    Ok(ReplicationOutput { rows, traces })
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BK_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::Config(format!("BK_THREADS must be a positive integer, got {v:?}"))
            })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Results of `run_experiment`: all summary rows (already written to disk)
/// and the paths that were produced.
pub struct ExperimentOutput {
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
    pub regret_curve_path: Option<PathBuf>,
}

fn sample_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run every replication of the experiment, write `summary.csv`, one trace
/// CSV per run, and (when a horizon grid is configured) `regret_curve.csv`
/// into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pool = worker_pool()?;
    let outputs: Vec<Result<ReplicationOutput>> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| run_replication(cfg, r))
            .collect()
    });
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for out in outputs {
        let out = out?;
        rows.extend(out.rows);
        traces.extend(out.traces);
    }

    let out_dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out_dir)?;
    let summary_path = out_dir.join("summary.csv");
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for row in &rows {
        summary.push_str(&row.to_csv_line());
        summary.push('\n');
    }
    fs::write(&summary_path, summary)?;
    for (name, content) in &traces {
        fs::write(out_dir.join(name), content)?;
    }

    let regret_curve_path = if cfg.t_grid.is_some() {
        let path = out_dir.join("regret_curve.csv");
        let mut text = String::from("baseline,T,mean_regret,stderr,mean_regret_over_T\n");
        for &baseline in &cfg.run.baselines {
            for &t in &cfg.horizons() {
                let regrets: Vec<f64> = rows
                    .iter()
                    .filter(|row| row.baseline == baseline && row.horizon == t)
                    .map(|row| row.regret)
                    .collect();
                let (mean, stderr) = sample_stats(&regrets);
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    baseline.name(),
                    t,
                    mean,
                    stderr,
                    mean / t as f64
                );
            }
        }
        fs::write(&path, text)?;
        Some(path)
    } else {
        None
    };

    Ok(ExperimentOutput {
        rows,
        summary_path,
        regret_curve_path,
    })
}

#[derive(Debug, Parser)]
#[command(
    name = "lcbwk",
    version,
    about = "Clustered linear contextual bandits with knapsacks: simulation, baselines, and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override both the instance seed and the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the configured experiment and write summary/trace CSVs.
    Simulate(CommonArgs),
    /// Print the benchmark quantities (OPT, its estimate, and Z).
    Oracle(CommonArgs),
    /// Run exploration and clustering only; print per-cluster error rates.
    ClusterEval(CommonArgs),
    /// Run the horizon grid (requires t_grid in the config).
    Sweep(CommonArgs),
    /// Run built-in invariant checks; exit 0 iff all pass.
    Selftest {
        /// Suppress per-check output.
        #[arg(long)]
        quiet: bool,
    },
}

fn load_with_overrides(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.instance.seed = seed;
        cfg.run.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn cmd_simulate(args: &CommonArgs) -> Result<()> {
    let cfg = load_with_overrides(args)?;
    let output = run_experiment(&cfg)?;
    if !args.quiet {
        println!(
            "wrote {} ({} rows)",
            output.summary_path.display(),
            output.rows.len()
        );
        if let Some(curve) = &output.regret_curve_path {
            println!("wrote {}", curve.display());
        }
    }
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    let cfg = load_with_overrides(args)?;
    if cfg.t_grid.is_none() {
        return Err(Error::Validation(
            "sweep requires t_grid in the config".into(),
        ));
    }
    cmd_simulate(args)
}

fn first_replication_run_config(
    cfg: &ExperimentConfig,
    baseline: BaselineKind,
) -> (InstanceConfig, RunConfig) {
    let inst_cfg = cfg.instance.clone();
    let horizon = cfg.horizons()[0];
    let run_cfg = RunConfig {
        horizon,
        budget: cfg.budget_for(horizon),
        baseline,
        allow_noop_in_argmax: cfg.run.allow_noop_in_argmax,
        seed: cfg.run.seed,
        radius: cfg.radius.clone(),
        clustering: cfg.clustering.clone(),
    };
    (inst_cfg, run_cfg)
}

fn cmd_oracle(args: &CommonArgs) -> Result<()> {
    let cfg = load_with_overrides(args)?;
    let (inst_cfg, run_cfg) = first_replication_run_config(&cfg, BaselineKind::ClusterLcbwk);
    let instance = generate_instance(&inst_cfg)?;
    let mut rng = stream(inst_cfg.seed, TAG_OPT_ORACLE);
    let opt_total = oracle_opt(
        &instance,
        run_cfg.budget,
        run_cfg.horizon,
        cfg.n_mc_opt,
        &mut rng,
    )?;
    let prepared = agent::prepare_run(&instance, &run_cfg)?;
    println!("opt_total = {opt_total}");
    println!("opt_hat = {}", prepared.prep.opt_hat);
    println!("Z = {}", prepared.z);
    Ok(())
}

fn cmd_cluster_eval(args: &CommonArgs) -> Result<()> {
    let cfg = load_with_overrides(args)?;
    let (inst_cfg, run_cfg) = first_replication_run_config(&cfg, BaselineKind::ClusterLcbwk);
    let instance = generate_instance(&inst_cfg)?;
    let prepared = agent::prepare_run(&instance, &run_cfg)?;
    println!("cluster,eps_c");
    for (c, eps) in prepared.prep.eps_c.iter().enumerate() {
        println!("{},{}", c + 1, eps);
    }
    let out_dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("clustering.json");
    let fit = prepared
        .prep
        .clustering
        .as_ref()
        .expect("the clustered pipeline always fits");
    fs::write(&path, serde_json::to_string_pretty(&fit.to_json())?)?;
    if !args.quiet {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn selftest_checks() -> Vec<(&'static str, Box<dyn Fn() -> Result<()> + Send>)> {
    use ndarray::{array, Array1, Array2};

    fn ensure(cond: bool, msg: &str) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(Error::Validation(msg.into()))
        }
    }

    vec![
        (
            "confidence radius frozen value",
            Box::new(|| {
                let params = RadiusConfig {
                    eps_hat: crate::estimate::EpsHatMode::Fixed(0.0),
                    ..RadiusConfig::default()
                }
                .resolve(1.0, 1)?;
                let want = 3.0 * (10.0f64.ln()).sqrt() + 1.0;
                ensure(
                    (params.reward_radius(1, 1) - want).abs() < 1e-12,
                    "radius mismatch",
                )
            }),
        ),
        (
            "simplex frozen optimum",
            Box::new(|| {
                let prob = crate::lp::LpProblem {
                    objective: array![1.0, 1.0],
                    rows: array![[1.0, 2.0]],
                    rhs: array![2.0],
                    upper: array![1.0, 1.0],
                };
                let sol = crate::lp::lp_solve(&prob)?;
                ensure((sol.value - 1.5).abs() < 1e-9, "LP optimum mismatch")
            }),
        ),
        (
            "dual weights stay on the simplex",
            Box::new(|| {
                let mut omd = crate::omd::OmdState::init(3, 400)?;
                let mut rng = stream(17, 0x42);
                for _ in 0..400 {
                    let payoff = Array1::from_iter(
                        (0..3).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0),
                    );
                    omd.step(&payoff)?;
                }
                let theta = omd.theta();
                ensure(
                    theta.iter().all(|&v| v >= 0.0) && theta.sum() <= 1.0 + 1e-9,
                    "dual left the simplex",
                )
            }),
        ),
        (
            "subset size and lambda schedule frozen values",
            Box::new(|| {
                ensure(subset_size(100, 0.5, 2, 16, 0.5, 1.0) == 10, "N_S mismatch")?;
                ensure(
                    (crate::cluster::default_lambda1(16, 0.5) - 0.25).abs() < 1e-15,
                    "lambda1 mismatch",
                )
            }),
        ),
        (
            "pacing constant frozen value",
            Box::new(|| {
                let z = crate::benchmark::compute_z(10.0, 4, 8, 5.0)?;
                ensure((z - 0.5).abs() < 1e-15, "Z mismatch")
            }),
        ),
        (
            "clustering objective hand value",
            Box::new(|| {
                let params = array![[0.0]];
                let centers = array![[0.0], [1.0]];
                let data = vec![crate::cluster::ArmData {
                    contexts: array![[1.0]],
                    rewards: array![1.0],
                }];
                let q = crate::cluster::classifier_lasso_objective(
                    &params, &centers, &data, 1.0, 1, 1,
                )?;
                ensure((q - 0.5).abs() < 1e-15, "objective mismatch")
            }),
        ),
        (
            "end-to-end run satisfies hard feasibility and determinism",
            Box::new(|| {
                let inst_cfg = InstanceConfig {
                    arms: 8,
                    clusters: 2,
                    context_dim: 2,
                    resources: 2,
                    separation: 0.5,
                    noise_half_width: 0.1,
                    proportions: crate::env::Proportions::Balanced,
                    context_distribution: crate::env::ContextDistribution::Uniform01,
                    seed: 5,
                };
                let instance = generate_instance(&inst_cfg)?;
                let run_cfg = RunConfig {
                    horizon: 150,
                    budget: 90.0,
                    baseline: BaselineKind::ClusterLcbwk,
                    allow_noop_in_argmax: false,
                    seed: 9,
                    radius: RadiusConfig::default(),
                    clustering: ClusteringConfig::default(),
                };
                let a = agent::run(&instance, &run_cfg)?;
                let b = agent::run(&instance, &run_cfg)?;
                agent::verify_budget_feasibility(&a)?;
                ensure(
                    agent::records_bitwise_equal(&a.records, &b.records),
                    "repeated runs diverged",
                )?;
                let _ = Array2::<f64>::zeros((1, 1));
                Ok(())
            }),
        ),
    ]
}

fn cmd_selftest(quiet: bool) -> Result<()> {
    let mut failures = 0;
    for (name, check) in selftest_checks() {
        match check() {
            Ok(()) => {
                if !quiet {
                    println!("ok   {name}");
                }
            }
            Err(e) => {
                failures += 1;
                eprintln!("FAIL {name}: {e}");
            }
        }
    }
    if failures > 0 {
        return Err(Error::Numerical(format!("{failures} selftest check(s) failed")));
    }
    if !quiet {
        println!("all selftest checks passed");
    }
    Ok(())
}

/// Parse arguments and dispatch. Returns the process exit code: 0 on
/// success, 1 for configuration/usage errors, 2 for runtime failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Oracle(args) => cmd_oracle(args),
        Cmd::ClusterEval(args) => cmd_cluster_eval(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Selftest { quiet } => cmd_selftest(*quiet),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
