use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use memsel::io::{load_labels, load_scores, load_token_records, write_scores_to};
use memsel::output::OutputSet;
use memsel::plot::{build_series, render_svg, series_csv, XAxis};
use memsel::report::{read_eval_csv, write_bias_csv, write_eval_csv, EstimateDoc, LevelSetDoc, SelectionDoc};
use memsel::runner::Runner;
use memsel_core::{
    estimate_for_pools, identify_pools, score_pool, EstimatorKind, EstimatorSpec, ScoreGenerator, Scorer,
    SplitSpec, SweepAxes, SynthSpec, TrialSource,
};

/// Identify training-data members among test samples with a controlled false discovery rate.
#[derive(Parser)]
#[command(name = "memsel", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one detection score per token record.
    Score(ScoreArgs),
    /// Select likely members of a test set against a non-member calibration set.
    Identify(IdentifyArgs),
    /// Estimate the member proportion of a test set.
    Estimate(EstimateArgs),
    /// Monte Carlo FDR and power over random splits of a labeled pool.
    Evaluate(EvaluateArgs),
    /// Like evaluate, over the product of several parameter axes.
    Sweep(SweepArgs),
    /// Like sweep, on synthetic two-component scores.
    Simulate(SimulateArgs),
    /// Turn an evaluation table into per-series CSV files and an SVG figure.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// Token-record file (JSON lines).
    records: PathBuf,
    /// perplexity[,norm] | min_k:K | zlib | m_entropy | renyi:G[,std] | max_renyi:K,G[,std]
    #[arg(long)]
    scorer: Scorer,
    /// Optional `{"id", "member"}` label file merged into the output.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    /// none | subtraction | moment
    #[arg(long, default_value = "none")]
    estimator: EstimatorKind,
    /// Tail fraction for the subtraction estimator.
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    /// Minimum relative gap between member and non-member means for the moment estimator.
    #[arg(long, default_value_t = 1e-8)]
    gap_tol: f64,
}

impl EstimatorArgs {
    fn spec(&self) -> anyhow::Result<EstimatorSpec> {
        let spec = EstimatorSpec { eta: self.eta, mean_gap_tolerance: self.gap_tol, ..EstimatorSpec::with_kind(self.estimator) };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct PairArgs {
    /// Calibration score file (non-members).
    #[arg(long)]
    cal: PathBuf,
    /// Test score file.
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Known-member score file; required by the moment estimator.
    #[arg(long)]
    members: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

impl PairArgs {
    fn check(&self) -> anyhow::Result<EstimatorSpec> {
        let spec = self.estimator.spec()?;
        if spec.kind == EstimatorKind::AdjustedMoment && self.members.is_none() {
            bail!(memsel_core::Error::MissingCalMembers);
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct IdentifyArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Target false discovery rate.
    #[arg(long)]
    alpha: f64,
    /// Also report the `score <= tau` baseline, which has no error guarantee.
    #[arg(long)]
    level_set_tau: Option<f64>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    pair: PairArgs,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Comma-separated target FDR levels.
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    /// Comma-separated member proportions for resampled test sets.
    #[arg(long, value_delimiter = ',')]
    pi_tests: Option<Vec<f64>>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = memsel_core::eval::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Evaluation table; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SweepExtra {
    /// Comma-separated calibration-to-test size ratios.
    #[arg(long, value_delimiter = ',')]
    rhos: Option<Vec<f64>>,
    /// Comma-separated tail fractions (subtraction estimator only).
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    /// Also write estimator bias and MSE per pi_test to this file.
    #[arg(long)]
    bias_mse: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fully labeled score file.
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    extra: SweepExtra,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    member_mean: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    nonmember_mean: f64,
    /// Standard deviation for both components unless overridden.
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    #[arg(long)]
    member_sd: Option<f64>,
    #[arg(long)]
    nonmember_sd: Option<f64>,
    /// Calibration size.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Test size.
    #[arg(long, default_value_t = 500)]
    m: usize,
    /// Member proportion of the test set.
    #[arg(long, default_value_t = 0.5)]
    pi: f64,
    /// Known-member calibration size; defaults to n.
    #[arg(long)]
    n_members: Option<usize>,
    /// gaussian | lognormal
    #[arg(long, default_value = "gaussian", value_parser = parse_generator)]
    generator: ScoreGenerator,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    extra: SweepExtra,
}

#[derive(Args)]
struct PlotArgs {
    /// Evaluation table.
    #[arg(long)]
    csv: PathBuf,
    /// Horizontal axis: alpha | pi-test | rho | eta
    #[arg(long, default_value = "alpha")]
    kind: XAxis,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_generator(s: &str) -> Result<ScoreGenerator, String> {
    match s {
        "gaussian" => Ok(ScoreGenerator::Gaussian),
        "lognormal" => Ok(ScoreGenerator::LogNormal),
        other => Err(format!("unknown generator {other:?} (expected gaussian or lognormal)")),
    }
}

fn cmd_score(a: &ScoreArgs) -> anyhow::Result<()> {
    let records = load_token_records(&a.records)?;
    let labels = a.labels.as_deref().map(load_labels).transpose()?;
    let pool = score_pool(&records, &a.scorer, labels.as_ref())?;
    let mut out = OutputSet::new();
    out.write(&a.out, |w| Ok(write_scores_to(w, &pool)?))?;
    out.commit();
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, doc: &T) -> anyhow::Result<()> {
    let mut out = OutputSet::new();
    out.write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, doc)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    out.commit();
    Ok(())
}

fn cmd_identify(a: &IdentifyArgs) -> anyhow::Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        bail!(memsel_core::Error::InvalidAlpha(a.alpha));
    }
    let spec = a.pair.check()?;
    let cal = load_scores(&a.pair.cal)?;
    let test = load_scores(&a.pair.test)?;
    let members = a.pair.members.as_deref().map(load_scores).transpose()?;
    let members = members.as_ref().filter(|_| spec.kind == EstimatorKind::AdjustedMoment);
    let result = identify_pools(&cal, &test, a.alpha, &spec, members)?;
    let mut doc = SelectionDoc::new(&result, spec.kind, &test);
    doc.level_set_baseline = a.level_set_tau.map(|tau| LevelSetDoc::new(&test, tau));
    write_json(&a.pair.out, &doc)?;
    println!("selected {} k_star {} pi_hat {}", result.selected.len(), result.k_star, result.estimate.pi_hat);
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs) -> anyhow::Result<()> {
    let spec = a.pair.check()?;
    let cal = load_scores(&a.pair.cal)?;
    let test = load_scores(&a.pair.test)?;
    let members = a.pair.members.as_deref().map(load_scores).transpose()?;
    let est = estimate_for_pools(&cal, &test, &spec, members.as_ref())?;
    write_json(&a.pair.out, &EstimateDoc::new(spec.kind, &est))?;
    println!("pi_hat {} scale_factor {}", est.pi_hat, est.scale_factor);
    Ok(())
}

fn run(source: &TrialSource<'_>, run: &RunArgs, extra: Option<&SweepExtra>) -> anyhow::Result<()> {
    let spec = run.estimator.spec()?;
    let axes = SweepAxes {
        alphas: run.alphas.clone(),
        pi_tests: run.pi_tests.clone(),
        rhos: extra.and_then(|e| e.rhos.clone()),
        etas: extra.and_then(|e| e.etas.clone()),
    };
    let runner = Runner::new(run.workers).context("starting worker threads")?;
    let rows = runner.sweep(source, &axes, &spec, run.trials)?;
    let bias = match extra.and_then(|e| e.bias_mse.as_deref()) {
        Some(path) => {
            let pis = match &run.pi_tests {
                Some(p) => p.clone(),
                None => vec![source.config(&spec).pi_test.context("--bias-mse needs --pi-tests")?],
            };
            Some((path, runner.bias_mse(source, &spec, &pis, run.trials)?))
        }
        None => None,
    };

    let mut out = OutputSet::new();
    match &run.out {
        Some(path) => out.write(path, |w| Ok(write_eval_csv(w, &rows)?))?,
        None => write_eval_csv(std::io::stdout().lock(), &rows)?,
    }
    if let Some((path, bias)) = bias {
        out.write(path, |w| Ok(write_bias_csv(w, spec.kind, &bias)?))?;
    }
    out.commit();
    Ok(())
}

fn labeled_pool(path: &Path) -> anyhow::Result<memsel_core::SamplePool> {
    let pool = load_scores(path)?;
    if !pool.fully_labeled() {
        bail!("{}: evaluation requires labels on every sample", path.display());
    }
    Ok(pool)
}

fn cmd_evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    a.run.estimator.spec()?;
    let pool = labeled_pool(&a.pool)?;
    run(&TrialSource::Split { pool: &pool, split: SplitSpec::new(a.run.seed) }, &a.run, None)
}

fn cmd_sweep(a: &SweepArgs) -> anyhow::Result<()> {
    a.run.estimator.spec()?;
    let pool = labeled_pool(&a.pool)?;
    run(&TrialSource::Split { pool: &pool, split: SplitSpec::new(a.run.seed) }, &a.run, Some(&a.extra))
}

fn cmd_simulate(a: &SimulateArgs) -> anyhow::Result<()> {
    let spec = SynthSpec {
        member_mean: a.member_mean,
        member_sd: a.member_sd.unwrap_or(a.sd),
        nonmember_mean: a.nonmember_mean,
        nonmember_sd: a.nonmember_sd.unwrap_or(a.sd),
        n: a.n,
        m: a.m,
        pi_test: a.pi,
        n_cal_members: a.n_members.unwrap_or(a.n),
        generator: a.generator,
        seed: a.run.seed,
    };
    spec.validate()?;
    run(&TrialSource::Synthetic(spec), &a.run, Some(&a.extra))
}

fn cmd_plotdata(a: &PlotArgs) -> anyhow::Result<()> {
    let file = std::fs::File::open(&a.csv).with_context(|| format!("opening {}", a.csv.display()))?;
    let rows = read_eval_csv(file).with_context(|| a.csv.display().to_string())?;
    let series = build_series(&rows, a.kind);
    if series.is_empty() {
        bail!("{}: no rows have a {} value", a.csv.display(), a.kind.name());
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut out = OutputSet::new();
    for s in &series {
        let body = series_csv(a.kind, s);
        out.write(&a.out.join(format!("series_{}.csv", s.name)), |w| Ok(w.write_all(body.as_bytes())?))?;
    }
    let svg = render_svg(a.kind, &series);
    out.write(&a.out.join("figure.svg"), |w| Ok(w.write_all(svg.as_bytes())?))?;
    out.commit();
    Ok(())
}

fn main() -> ExitCode {
    let args = match memsel::config::expand_args(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let cli = Cli::parse_from(args);
    let result = match &cli.command {
        Command::Score(a) => cmd_score(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
