//! Command-line front end: CSV ingestion, the two multivariate pipelines,
//! k sweeps and JSON output.
//!
//! Every subcommand prints one JSON document
//! `{"meta": {tool, version, command, seed, config}, "result": ...}`.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod ingest;
mod pipeline;

pub use ingest::*;
pub use pipeline::*;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clustering::{fmadogram_matrix, pam_cluster, silhouette, validate_blocks, BlockTolerances};
use crate::error::{Error, Result};
use crate::gpd_inference::{
    apply_bias_correction, fit_gpd_bayes, fit_gpd_mle, run_bias_study, BiasStudyConfig, GpdPrior, McmcConfig,
};
use crate::margins::{challenge_loss, exceedance_prob, return_level, GpdParams, LossSpec, LossVariant};
use crate::maxlinear::{cap_factor, failure_prob_approx, sample_max_linear, FailureRegion, MaxLinearModel};
use crate::oracle::{mc_failure_prob, DEFAULT_N_SIM};
use crate::tpdm::simplex_project;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tailrisk", version, about = "Extreme quantiles and joint tail probabilities")]
struct Cli {
    /// Write the JSON document here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a GPD to the excesses of a data column over a threshold.
    FitGpd(FitGpdArgs),
    /// Return level of a GPD tail.
    ReturnLevel(ReturnLevelArgs),
    /// Asymmetric quantile loss.
    Loss(LossArgs),
    /// Simulation study of the Bayesian fit's bias.
    BiasStudy(BiasStudyArgs),
    /// Three-variable joint-exceedance probabilities.
    Challenge3(ChallengeArgs),
    /// Clustered high-dimensional joint-exceedance probabilities.
    Challenge4(ChallengeArgs),
    /// Rerun a pipeline over a list of k.
    SweepK(SweepArgs),
    /// Draw from a max-linear model.
    Simulate(SimulateArgs),
    /// Monte Carlo probability of a failure region, next to the formula value.
    Oracle(OracleArgs),
    /// F-madogram distances and PAM clusters of the data columns.
    Cluster(ClusterArgs),
    /// Euclidean projection onto the unit simplex.
    Project(ProjectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum FitMethod {
    Mle,
    Bayes,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct FitGpdArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column name; defaults to the first column.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "mle")]
    method: FitMethod,
    #[arg(long, default_value_t = 4.0)]
    prior_sigma_shape: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_sigma_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    prior_xi_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_xi_sd: f64,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long, default_value_t = 2_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 0.15)]
    step_sigma: f64,
    #[arg(long, default_value_t = 0.12)]
    step_xi: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also report the return level for this many years.
    #[arg(long = "T")]
    years: Option<f64>,
    #[arg(long, default_value_t = 300.0)]
    per_year: f64,
    #[arg(long, value_enum, default_value = "drop-row")]
    missing: MissingPolicy,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct ReturnLevelArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    xi: f64,
    #[arg(long)]
    threshold: f64,
    /// Probability that an observation exceeds the threshold.
    #[arg(long)]
    zeta_u: f64,
    #[arg(long = "T")]
    years: f64,
    #[arg(long, default_value_t = 300.0)]
    per_year: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct LossArgs {
    #[arg(long = "true")]
    q_true: f64,
    #[arg(long = "estimate")]
    q_hat: f64,
    #[arg(long, value_enum, default_value = "as-printed")]
    variant: LossVariantArg,
}

#[derive(Debug, Clone, Copy, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum LossVariantArg {
    AsPrinted,
    Corrected,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct BiasStudyArgs {
    #[arg(long, default_value_t = 1000)]
    n_sim: usize,
    #[arg(long, default_value_t = 180)]
    n_points: usize,
    #[arg(long, default_value_t = 11.0)]
    sigma_lo: f64,
    #[arg(long, default_value_t = 18.0)]
    sigma_hi: f64,
    #[arg(long, default_value_t = -0.15)]
    xi_lo: f64,
    #[arg(long, default_value_t = 0.20)]
    xi_hi: f64,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long, default_value_t = 2_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep the proposal steps fixed instead of scaling them with n_points.
    #[arg(long)]
    fixed_steps: bool,
    /// Apply the corrections to a Bayesian fit of this data column.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    threshold: Option<f64>,
    #[arg(long = "T", default_value_t = 100.0)]
    years: f64,
    #[arg(long, default_value_t = 300.0)]
    per_year: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct ChallengeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "sparse")]
    estimator: Estimator,
    #[arg(long, default_value_t = 500)]
    k: usize,
    #[arg(long = "K", default_value_t = 5)]
    clusters: usize,
    #[arg(long, default_value_t = 50)]
    n_cp: usize,
    /// Tail index of the empirical estimator.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Input is already on the Fréchet scale.
    #[arg(long, conflicts_with = "rank_transform")]
    no_transform: bool,
    /// Input margins are unknown; transform through ranks.
    #[arg(long)]
    rank_transform: bool,
    #[arg(long, value_enum, default_value = "drop-row")]
    missing: MissingPolicy,
    #[arg(long, value_enum, default_value = "weighted")]
    median: MedianRule,
    /// Comma-separated column names to use; default all (first 3 for challenge3).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long, default_value_t = 6.0)]
    y: f64,
    #[arg(long, default_value_t = 7.0)]
    v: f64,
    #[arg(long, default_value_t = -(2f64.ln().ln()))]
    m: f64,
    #[arg(long, default_value_t = 1.0 / 300.0)]
    phi1: f64,
    #[arg(long, default_value_t = 12.0 / 300.0)]
    phi2: f64,
    /// Number of leading variables with the stricter first threshold.
    #[arg(long)]
    split: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    zero_tol: f64,
}

impl ChallengeArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            estimator: self.estimator,
            k: self.k,
            clusters: self.clusters,
            n_cp: self.n_cp,
            alpha: self.alpha,
            thresholds: Thresholds {
                y: self.y,
                v: self.v,
                m: self.m,
                phi1: self.phi1,
                phi2: self.phi2,
                split: self.split,
            },
            seed: self.seed,
            missing_policy: self.missing,
            transform: if self.no_transform {
                MarginTransform::None
            } else if self.rank_transform {
                MarginTransform::Rank
            } else {
                MarginTransform::Gumbel
            },
            median: self.median,
            zero_tol: self.zero_tol,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "3")]
    challenge: Challenge,
    /// Comma-separated values or `start:stop:step` (inclusive).
    #[arg(long)]
    k_list: String,
    /// Also write `k,p1,p2` rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    pipeline: ChallengeArgs,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    model_json: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the sample as CSV here; otherwise the rows go in the JSON result.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    model_json: PathBuf,
    #[arg(long)]
    region_json: PathBuf,
    #[arg(long, default_value_t = DEFAULT_N_SIM)]
    n_sim: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "K")]
    clusters: usize,
    #[arg(long, value_enum, default_value = "drop-row")]
    missing: MissingPolicy,
    /// Also write `variable,cluster` rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct ProjectArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    vector: Vec<f64>,
}

/// Region file `{"beta": [..], "u": [..], "l": [..] | null}`; the dimension
/// defaults to the model's.
#[derive(Debug, Deserialize)]
struct RegionFile {
    beta: Vec<usize>,
    u: Vec<f64>,
    #[serde(default)]
    l: Option<Vec<f64>>,
    #[serde(default)]
    dim: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn read_model(path: &PathBuf) -> Result<MaxLinearModel> {
    read_json(path)
}

/// Parses `250,300` or `250:750:50`.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("cannot parse k list {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let ks = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, c): (usize, usize, usize) = (
                start.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if c == 0 || a > b {
                return Err(bad());
            }
            (a..=b).step_by(c).collect()
        }
        [_] => s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<usize>>>()?,
        _ => return Err(bad()),
    };
    if ks.is_empty() || ks.contains(&0) {
        return Err(bad());
    }
    Ok(ks)
}

fn excesses_from(data: &[f64], threshold: f64) -> (Vec<f64>, f64) {
    let exc: Vec<f64> = data.iter().filter(|&&x| x > threshold).map(|&x| x - threshold).collect();
    (exc, exceedance_prob(data, threshold))
}

fn column_data(path: &PathBuf, column: Option<&str>, policy: MissingPolicy) -> Result<(Vec<f64>, usize)> {
    let schema = match column {
        Some(c) => Schema::Names(vec![c.to_string()]),
        None => Schema::Any,
    };
    let t = ingest_csv(path, &schema, policy)?;
    Ok((t.data.column(0).to_vec(), t.dropped_rows))
}

fn load_pipeline_data(args: &ChallengeArgs, three: bool, notices: &mut Vec<String>) -> Result<Ingested> {
    let schema = match &args.columns {
        Some(c) => Schema::Names(c.clone()),
        None => Schema::Any,
    };
    let mut t = ingest_csv(&args.data, &schema, args.missing)?;
    if three && args.columns.is_none() && t.data.ncols() > 3 {
        let extra: Vec<String> = t.columns[3..].to_vec();
        t.data = t.data.slice(ndarray::s![.., ..3]).to_owned();
        t.columns.truncate(3);
        t.ignored_columns.extend(extra);
    }
    if t.dropped_rows > 0 {
        notices.push(format!("dropped {} rows with missing values", t.dropped_rows));
    }
    if !t.ignored_columns.is_empty() {
        notices.push(format!("ignored columns {:?}", t.ignored_columns));
    }
    Ok(t)
}

fn run_pipeline(args: &ChallengeArgs, challenge: Challenge) -> Result<Value> {
    let mut notices = Vec::new();
    let t = load_pipeline_data(args, challenge == Challenge::Three, &mut notices)?;
    let mut res = run_challenge(challenge, t.data.view(), &args.config())?;
    notices.append(&mut res.diagnostics.notices);
    res.diagnostics.notices = notices;
    let mut v = serde_json::to_value(&res)?;
    v["columns"] = json!(t.columns);
    Ok(v)
}

fn execute(command: &Command) -> Result<(Value, Option<u64>, Value)> {
    let config = |a: &dyn erased::Echo| a.echo();
    Ok(match command {
        Command::FitGpd(a) => {
            let (data, dropped) = column_data(&a.data, a.column.as_deref(), a.missing)?;
            let (exc, zeta) = excesses_from(&data, a.threshold);
            let mut result = json!({
                "n": data.len(),
                "dropped_rows": dropped,
                "n_excesses": exc.len(),
                "zeta_u": zeta,
            });
            let (sigma, xi) = match a.method {
                FitMethod::Mle => {
                    let fit = fit_gpd_mle(&exc)?;
                    result["fit"] = serde_json::to_value(fit)?;
                    (fit.sigma, fit.xi)
                }
                FitMethod::Bayes => {
                    let prior = GpdPrior {
                        sigma_shape: a.prior_sigma_shape,
                        sigma_rate: a.prior_sigma_rate,
                        xi_mean: a.prior_xi_mean,
                        xi_sd: a.prior_xi_sd,
                    };
                    let mcmc = McmcConfig {
                        n_iter: a.iters,
                        burn_in: a.burn_in,
                        step_sigma: a.step_sigma,
                        step_xi: a.step_xi,
                        seed: a.seed,
                    };
                    let post = fit_gpd_bayes(&exc, &prior, &mcmc)?;
                    result["posterior"] = json!({
                        "mean_sigma": post.mean_sigma(),
                        "mean_xi": post.mean_xi(),
                        "sd_sigma": post.sd_sigma(),
                        "sd_xi": post.sd_xi(),
                        "acceptance_rate": post.acceptance_rate,
                        "draws": post.len(),
                    });
                    (post.mean_sigma(), post.mean_xi())
                }
            };
            if let Some(years) = a.years {
                let p = GpdParams::new(sigma, xi, a.threshold, zeta)?;
                result["return_level"] = json!(return_level(years, a.per_year, &p)?);
            }
            let seed = (a.method == FitMethod::Bayes).then_some(a.seed);
            (result, seed, config(a))
        }
        Command::ReturnLevel(a) => {
            let p = GpdParams::new(a.sigma, a.xi, a.threshold, a.zeta_u)?;
            (json!({ "return_level": return_level(a.years, a.per_year, &p)? }), None, config(a))
        }
        Command::Loss(a) => {
            let variant = match a.variant {
                LossVariantArg::AsPrinted => LossVariant::AsPrinted,
                LossVariantArg::Corrected => LossVariant::Corrected,
            };
            let loss = challenge_loss(a.q_true, a.q_hat, LossSpec { variant })?;
            (json!({ "loss": loss }), None, config(a))
        }
        Command::BiasStudy(a) => {
            let study_cfg = BiasStudyConfig {
                n_sim: a.n_sim,
                n_points: a.n_points,
                sigma_range: (a.sigma_lo, a.sigma_hi),
                xi_range: (a.xi_lo, a.xi_hi),
                prior: GpdPrior::default(),
                mcmc: McmcConfig {
                    n_iter: a.iters,
                    burn_in: a.burn_in,
                    seed: a.seed,
                    ..McmcConfig::default()
                },
                scale_steps: !a.fixed_steps,
            };
            let study = run_bias_study(&study_cfg)?;
            let mut result = serde_json::to_value(&study)?;
            if let Some(path) = &a.data {
                let threshold = a
                    .threshold
                    .ok_or_else(|| Error::InvalidInput("--data needs --threshold".into()))?;
                let (data, _) = column_data(path, None, MissingPolicy::DropRow)?;
                let (exc, zeta) = excesses_from(&data, threshold);
                let post = fit_gpd_bayes(&exc, &study_cfg.prior, &McmcConfig { seed: a.seed, ..study_cfg.mcmc })?;
                let corrected = apply_bias_correction(&post, &study, threshold, zeta, a.years, a.per_year)?;
                result["return_levels"] = json!({
                    "mean_raw": corrected.mean_raw,
                    "mean_shifted": corrected.mean_shifted,
                    "skipped": corrected.skipped,
                });
            }
            (result, Some(a.seed), config(a))
        }
        Command::Challenge3(a) => (run_pipeline(a, Challenge::Three)?, Some(a.seed), config(a)),
        Command::Challenge4(a) => (run_pipeline(a, Challenge::Four)?, Some(a.seed), config(a)),
        Command::SweepK(a) => {
            let ks = parse_k_list(&a.k_list)?;
            let mut notices = Vec::new();
            let t = load_pipeline_data(&a.pipeline, a.challenge == Challenge::Three, &mut notices)?;
            let table = k_sensitivity_sweep(a.challenge, t.data.view(), &a.pipeline.config(), &ks)?;
            if let Some(path) = &a.csv {
                table.write_csv(std::fs::File::create(path)?)?;
            }
            let mut v = serde_json::to_value(&table)?;
            v["notices"] = json!(notices);
            (v, Some(a.pipeline.seed), config(a))
        }
        Command::Simulate(a) => {
            let model = read_model(&a.model_json)?;
            let x = sample_max_linear(&model, a.n, a.seed);
            let header: Vec<String> = (0..model.dim()).map(|i| format!("x{i}")).collect();
            let result = match &a.csv {
                Some(path) => {
                    write_matrix_csv(std::fs::File::create(path)?, &header, &x)?;
                    json!({ "n": a.n, "d": model.dim(), "csv": path })
                }
                None => {
                    let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
                    json!({ "n": a.n, "d": model.dim(), "data": rows })
                }
            };
            (result, Some(a.seed), config(a))
        }
        Command::Oracle(a) => {
            let model = read_model(&a.model_json)?;
            let rf: RegionFile = read_json(&a.region_json)?;
            let region = FailureRegion::new(rf.dim.unwrap_or(model.dim()), rf.beta, rf.u, rf.l)?;
            let mc = mc_failure_prob(&model, &region, a.n_sim, a.seed)?;
            let formula = failure_prob_approx(&model, &region, 0.0)?;
            let cap = cap_factor(&model, &region)?;
            let result = json!({
                "monte_carlo": mc,
                "formula": formula,
                "cap_factor": cap,
                "formula_with_cap": formula.value * cap,
                "z_score": mc.z_score(formula.value * cap),
            });
            (result, Some(a.seed), config(a))
        }
        Command::Cluster(a) => {
            let t = ingest_csv(&a.data, &Schema::Any, a.missing)?;
            let dist = fmadogram_matrix(t.data.view())?;
            let part = pam_cluster(&dist, a.clusters)?;
            let blocks = if a.clusters >= 2 {
                Some(validate_blocks(&dist, &part, BlockTolerances::default())?)
            } else {
                None
            };
            if let Some(path) = &a.csv {
                part.write_csv(std::fs::File::create(path)?)?;
            }
            let result = json!({
                "columns": t.columns,
                "dropped_rows": t.dropped_rows,
                "distances": dist,
                "partition": part,
                "sizes": part.sizes(),
                "block_report": blocks,
                "silhouette": silhouette(&dist, &part),
            });
            (result, None, config(a))
        }
        Command::Project(a) => {
            if a.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("vector entries must be finite".into()));
            }
            (json!({ "projection": simplex_project(&a.vector) }), None, config(a))
        }
    })
}

mod erased {
    use serde_json::Value;

    pub trait Echo {
        fn echo(&self) -> Value;
    }

    impl<T: serde::Serialize> Echo for T {
        fn echo(&self) -> Value {
            serde_json::to_value(self).unwrap_or(Value::Null)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::FitGpd(_) => "fit-gpd",
        Command::ReturnLevel(_) => "return-level",
        Command::Loss(_) => "loss",
        Command::BiasStudy(_) => "bias-study",
        Command::Challenge3(_) => "challenge3",
        Command::Challenge4(_) => "challenge4",
        Command::SweepK(_) => "sweep-k",
        Command::Simulate(_) => "simulate",
        Command::Oracle(_) => "oracle",
        Command::Cluster(_) => "cluster",
        Command::Project(_) => "project",
    }
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

/// Parses `argv` (program name first), runs the subcommand and writes the
/// JSON document to `--out` or `out`; messages go to `err`. Returns the exit code.
pub fn run_cli<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let outcome = execute(&cli.command).and_then(|(result, seed, config)| {
        let doc = json!({
            "meta": {
                "tool": "tailrisk",
                "version": env!("CARGO_PKG_VERSION"),
                "command": command_name(&cli.command),
                "seed": seed,
                "config": config,
            },
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        match &cli.out {
            Some(path) => std::fs::write(path, text)?,
            None => out.write_all(text.as_bytes())?,
        }
        Ok(())
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn cli_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_cli(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("tailrisk").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn result(args: &[&str]) -> Value {
        let (code, out, err) = run(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<Value>(&out).unwrap()["result"].clone()
    }

    #[test]
    fn loss_command() {
        let r = result(&["loss", "--true", "196.6", "--estimate", "199.4"]);
        assert!((r["loss"].as_f64().unwrap() - 0.0834).abs() < 1e-12);
    }

    #[test]
    fn project_command() {
        let r = result(&["project", "--vector", "2,0"]);
        assert_eq!(r["projection"], json!([1.0, 0.0]));
        let r = result(&["project", "--vector", "-1,3"]);
        assert_eq!(r["projection"], json!([0.0, 1.0]));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["loss", "--bogus", "1"]).0, EXIT_USAGE);
        assert_eq!(run(&["nope"]).0, EXIT_USAGE);
        assert_eq!(run(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn data_errors_exit_two() {
        assert_eq!(run(&["loss", "--true", "-1", "--estimate", "1"]).0, EXIT_DATA);
        assert_eq!(run(&["challenge3", "--data", "/nonexistent.csv"]).0, EXIT_DATA);
    }

    #[test]
    fn numerical_errors_exit_three() {
        let e = Error::NonConvergence { iterations: 1, reason: "x".into() }.at("replicate", 0);
        assert_eq!(exit_code(&e), EXIT_NUMERICAL);
    }

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("250:750:250").unwrap(), vec![250, 500, 750]);
        assert_eq!(parse_k_list("10, 20").unwrap(), vec![10, 20]);
        assert!(parse_k_list("5:1:1").is_err());
        assert!(parse_k_list("0").is_err());
        assert!(parse_k_list("a").is_err());
    }

    #[test]
    fn meta_block() {
        let (_, out, _) = run(&["return-level", "--sigma", "10", "--xi", "0", "--threshold", "100", "--zeta-u", "0.01", "--T", "100"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["meta"]["command"], "return-level");
        assert_eq!(v["meta"]["config"]["years"], 100.0);
        let rl = v["result"]["return_level"].as_f64().unwrap();
        assert!((rl - (100.0 + 10.0 * (30000.0f64 * 0.01).ln())).abs() < 1e-9);
        let r = result(&["return-level", "--sigma", "10", "--xi", "-0.1", "--threshold", "100", "--zeta-u", "0.01", "--T", "100"]);
        assert!(r["return_level"].as_f64().unwrap() < rl);
    }
}
