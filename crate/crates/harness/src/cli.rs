//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 on a runtime error, 2 on a usage error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{Map, Value};
use spdnn::bounds::{self, BoundInputs, DependenceParams, NetClass, PsiKind, Regime, ScheduleArch, ScheduleParams};
use spdnn::dgp::{make_supervised, simulate_arx_arch, DgpKind, DgpSpec, NoiseMode, Trajectory};
use spdnn::loss::LossVariant;
use spdnn::rng::rng_from_seed;
use spdnn::{Activation, Architecture, LossKind, PenaltyConfig, TrainConfig};

use crate::config::{entries_to_args, read_config};
use crate::error::{HarnessError, Result};
use crate::experiment::{replicate_seed, run_replications, ExperimentSpec, ResultsTable, SeedRole, LAGS};
use crate::grid::{tune_grid, Criterion, GridSpec};
use crate::pm10::{pm10_pipeline, synthetic_dar_series, Pm10Config, Pm10Series};

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

#[derive(Debug, Parser)]
#[command(name = "spdnn", version, about = "Sparse-penalized DNN estimation for weakly dependent time series")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Flat `key = value` file whose keys mirror the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for tuning and replications.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ARX-ARCH trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit one SPDNN (or NPDNN without --lambda) and save the network.
    Train(TrainArgs),
    /// Grid-search (λ, τ) on a simulated validation trajectory.
    Tune(TuneArgs),
    /// Replication study of excess risk versus sample size.
    Experiment(ExperimentArgs),
    /// PM10 forecasting with the DAR baseline.
    Pm10(Pm10Args),
    /// Evaluate the theoretical bounds and tuning schedules.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct DgpArgs {
    #[arg(long, default_value = "dgp1")]
    pub dgp: String,
    #[arg(long, default_value_t = 0.25)]
    pub phi0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub phi1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha1: f64,
    /// Half-width `a` of the uniform innovations.
    #[arg(long, default_value_t = 2.0)]
    pub halfwidth: f64,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// standardized | raw | zero
    #[arg(long, default_value = "standardized")]
    pub noise: String,
}

impl DgpArgs {
    fn spec_for(&self, name: &str) -> Result<DgpSpec> {
        let kind: DgpKind = name.parse()?;
        Ok(DgpSpec {
            phi0: self.phi0,
            phi1: self.phi1,
            alpha0: self.alpha0,
            alpha1: self.alpha1,
            innovation_halfwidth: self.halfwidth,
            burn_in: self.burn_in,
            noise: self.noise.parse::<NoiseMode>()?,
            ..DgpSpec::new(kind)
        })
    }

    fn specs(&self) -> Result<Vec<DgpSpec>> {
        self.dgp.split(',').map(|s| self.spec_for(s.trim())).collect()
    }

    fn spec(&self) -> Result<DgpSpec> {
        let mut specs = self.specs()?;
        if specs.len() != 1 {
            return Err(spdnn::Error::Config("exactly one --dgp expected".into()).into());
        }
        Ok(specs.remove(0))
    }
}

#[derive(Debug, Args)]
pub struct ArchArgs {
    /// Number of hidden layers.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Nodes per hidden layer.
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 1e3)]
    pub weight_bound: f64,
    #[arg(long, default_value_t = 1e3)]
    pub output_bound: f64,
    #[arg(long, default_value = "relu")]
    pub activation: String,
}

impl ArchArgs {
    fn arch(&self, input_dim: usize) -> Result<Architecture> {
        Ok(Architecture::uniform(input_dim, self.depth, self.width, self.weight_bound, self.output_bound)?)
    }

    fn activation(&self) -> Result<Activation> {
        Ok(self.activation.parse()?)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 30)]
    pub patience: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_epochs: usize,
    /// l1 | l2
    #[arg(long, default_value = "l2")]
    pub loss: String,
}

impl FitArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            batch_size: self.batch_size,
            patience: self.patience,
            max_epochs: self.max_epochs,
            ..TrainConfig::default().with_seed(seed)
        }
    }

    fn loss(&self) -> Result<LossVariant> {
        Ok(self.loss.parse()?)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Output file name inside --out.
    #[arg(long)]
    pub file: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub dgp: DgpArgs,
    /// Trajectory CSV to train on; simulated from --dgp/--n when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub arch: ArchArgs,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Use all i, j = 0..10 instead of the even exponents.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub arch: ArchArgs,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// One or more DGPs, comma separated.
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [250usize, 500, 1000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub test_size: usize,
    #[arg(long, value_delimiter = ',', default_values_t = ["l1".to_string(), "l2".to_string()])]
    pub losses: Vec<String>,
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value = "results.csv")]
    pub file: String,
    #[command(flatten)]
    pub arch: ArchArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 30)]
    pub patience: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_epochs: usize,
}

#[derive(Debug, Args)]
pub struct Pm10Args {
    /// CSV with columns date, pm10, rh.
    #[arg(long, required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Run on a noise-free series generated from the DAR mean equation.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 408)]
    pub synthetic_len: usize,
    #[arg(long, default_value_t = 100)]
    pub test_len: usize,
    #[arg(long, default_value_t = 0.25)]
    pub holdout: f64,
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value = "pm10_predictions.csv")]
    pub file: String,
    #[command(flatten)]
    pub arch: ArchArgs,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1000.0)]
    pub n: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub nu0: f64,
    /// Loss bound M.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta_inf: f64,
    /// Loss Lipschitz constant G.
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub depth: f64,
    #[arg(long, default_value_t = 100.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub weight_bound: f64,
    #[arg(long, default_value_t = 100.0)]
    pub sparsity: f64,
    /// Point at which the covering and concentration bounds are evaluated.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// thm3 | thm4
    #[arg(long, default_value = "thm4")]
    pub regime: String,
    /// theta | eta | kappa | lambda
    #[arg(long, default_value = "theta")]
    pub psi: String,
    #[arg(long, default_value_t = 1.0)]
    pub l1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.05)]
    pub nu1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub nu2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub nu3: f64,
    #[arg(long, default_value_t = 0.2)]
    pub nu4: f64,
    #[arg(long, default_value_t = 0.6)]
    pub nu5: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu6: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k_ell: f64,
    /// Loss bound M_n in C_{1,n}, C_{2,n}; defaults to --m.
    #[arg(long)]
    pub m_n: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_mult: f64,
    /// Hölder smoothness s; enables the rate-exponent rows.
    #[arg(long)]
    pub smoothness: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub dim: f64,
    /// Emit a flat JSON object instead of a table.
    #[arg(long)]
    pub json: bool,
}

fn command() -> clap::Command {
    Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true))
}

/// Long flags of `sub` (and the globals) that take no value.
fn is_switch(sub: &str, key: &str) -> bool {
    let cmd = command();
    let global = cmd.get_arguments().find(|a| a.get_long() == Some(key));
    let local = cmd.find_subcommand(sub).and_then(|s| s.get_arguments().find(|a| a.get_long() == Some(key)).cloned());
    global.cloned().or(local).map(|a| !a.get_action().takes_values()).unwrap_or(false)
}

/// Moves the subcommand to the front and splices config-file flags right
/// after it, so explicit flags (which follow) override the file.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let valued = ["--seed", "--out", "--config", "--threads"];
    let mut sub_idx = None;
    let mut config = None;
    let mut k = 1;
    while k < argv.len() {
        let a = &argv[k];
        if a == "--config" {
            config = argv.get(k + 1).cloned();
        } else if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        }
        if sub_idx.is_none() {
            if valued.contains(&a.as_str()) {
                k += 2;
                continue;
            }
            if !a.starts_with('-') {
                sub_idx = Some(k);
            }
        }
        k += 1;
    }
    let (Some(path), Some(si)) = (config, sub_idx) else {
        return Ok(argv);
    };
    let sub = argv[si].clone();
    let extra = entries_to_args(&read_config(Path::new(&path))?, |key| is_switch(&sub, key))?;
    let mut out = vec![argv[0].clone(), sub];
    out.extend(extra);
    out.extend(argv.iter().enumerate().filter(|(i, _)| *i != 0 && *i != si).map(|(_, a)| a.clone()));
    Ok(out)
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match command().try_get_matches_from(&argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => {
                eprintln!("error: cannot start {k} threads: {e}");
                return 1;
            }
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(HarnessError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Tune(a) => tune(cli, a),
        Command::Experiment(a) => experiment(cli, a),
        Command::Pm10(a) => pm10(cli, a),
        Command::Bounds(a) => bounds_cmd(a),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let spec = a.dgp.spec()?;
    let mut rng = rng_from_seed(cli.seed);
    let traj = simulate_arx_arch(&spec, a.n, &mut rng, cli.seed)?;
    let name =
        a.file.clone().unwrap_or_else(|| format!("trajectory_{}_n{}_seed{}.csv", spec.kind.name(), a.n, cli.seed));
    let mut w = create(&cli.out, &name)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    say!("wrote {}", cli.out.join(name).display());
    Ok(())
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let traj = match &a.data {
        Some(path) => Trajectory::read_csv(BufReader::new(File::open(path)?))?,
        None => {
            let spec = a.dgp.spec()?;
            let seed = replicate_seed(cli.seed, &spec.kind, a.n, 0, SeedRole::Train);
            simulate_arx_arch(&spec, a.n + LAGS, &mut rng_from_seed(seed), seed)?
        }
    };
    let data = make_supervised(&traj, LAGS)?;
    let arch = a.arch.arch(LAGS + 1)?;
    let pen = match (a.lambda, a.tau) {
        (Some(l), Some(t)) => PenaltyConfig::new(l, t)?,
        (Some(l), None) => PenaltyConfig::new(l, 1.0 / (data.len().max(3) as f64).ln())?,
        (None, _) => PenaltyConfig::unpenalized(),
    };
    let loss = LossKind::from(a.fit.loss()?);
    let cfg = a.fit.config(cli.seed);
    let net = spdnn::Network::with_activation(
        arch.clone(),
        a.arch.activation()?,
        cfg.init,
        spdnn::rng::derive_seed(cfg.seed, &[0]),
    )?;
    let model = spdnn::train::train_from(net, &data, &pen, &loss, &cfg)?;
    fs::write(cli.out.join("model.txt"), model.network.to_text())?;
    let mut log = create(&cli.out, "train_log.csv")?;
    model.write_log(&mut log)?;
    log.flush()?;
    let last = model.history.last().expect("at least one epoch");
    say!("estimator     {}", if pen.lambda > 0.0 { "spdnn" } else { "npdnn" });
    say!("lambda        {}", pen.lambda);
    say!("tau           {}", pen.tau);
    say!("epochs        {}", model.stopped_epoch);
    say!("best_epoch    {}", model.best_epoch);
    say!("objective     {}", model.best_objective);
    say!("l0            {}", last.l0);
    say!("wrote {}", cli.out.join("model.txt").display());
    Ok(())
}

fn tune(cli: &Cli, a: &TuneArgs) -> Result<()> {
    let spec = a.dgp.spec()?;
    let sim = |role| -> Result<_> {
        let seed = replicate_seed(cli.seed, &spec.kind, a.n, 0, role);
        let traj = simulate_arx_arch(&spec, a.n + LAGS, &mut rng_from_seed(seed), seed)?;
        Ok(make_supervised(&traj, LAGS)?)
    };
    let (train, valid) = (sim(SeedRole::Train)?, sim(SeedRole::Valid)?);
    let variant = a.fit.loss()?;
    let grid =
        if a.full { GridSpec::full() } else { GridSpec::thinned() }.build(a.n, Criterion::paired_with(variant))?;
    let arch = a.arch.arch(LAGS + 1)?;
    let out = tune_grid(&train, &valid, &grid, &arch, &LossKind::from(variant), &a.fit.config(cli.seed))?;
    let mut w = create(&cli.out, "tune_scores.csv")?;
    out.write_table(&mut w)?;
    w.flush()?;
    fs::write(cli.out.join("tuned_model.txt"), out.best_model.network.to_text())?;
    say!("criterion     {}", out.criterion);
    say!("best_lambda   {}", out.best_lambda);
    say!("best_tau      {}", out.best_tau);
    say!("best_cell     {},{}", out.best_cell.0, out.best_cell.1);
    say!("best_score    {}", out.best_score());
    say!("wrote {}", cli.out.join("tune_scores.csv").display());
    Ok(())
}

fn experiment(cli: &Cli, a: &ExperimentArgs) -> Result<()> {
    let losses = a.losses.iter().map(|s| s.parse::<LossVariant>()).collect::<spdnn::Result<Vec<_>>>()?;
    let train = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch_size,
        patience: a.patience,
        max_epochs: a.max_epochs,
        ..TrainConfig::default()
    };
    let mut table = ResultsTable { master_seed: cli.seed, rows: Vec::new() };
    for dgp in a.dgp.specs()? {
        let spec = ExperimentSpec {
            sizes: a.sizes.clone(),
            replications: a.reps,
            test_size: a.test_size,
            losses: losses.clone(),
            arch: a.arch.arch(LAGS + 1)?,
            train: train.clone(),
            grid: if a.full { GridSpec::full() } else { GridSpec::thinned() },
            master_seed: cli.seed,
            ..ExperimentSpec::new(dgp)
        };
        table.rows.extend(run_replications(&spec)?.rows);
    }
    table.canonicalize();
    let mut w = create(&cli.out, &a.file)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    say!("{:<6} {:>6} {:<6} {:<4} {:>4} {:>14}", "dgp", "n", "est", "loss", "ok", "median_excess");
    for (d, n, e, l, ok, med) in table.summary() {
        let med = med.map_or("-".to_string(), |m| format!("{m:.6}"));
        say!("{d:<6} {n:>6} {e:<6} {l:<4} {ok:>4} {med:>14}");
    }
    say!("wrote {} ({} rows)", cli.out.join(&a.file).display(), table.rows.len());
    Ok(())
}

fn pm10(cli: &Cli, a: &Pm10Args) -> Result<()> {
    let series = match &a.data {
        Some(path) => Pm10Series::read_csv(BufReader::new(File::open(path)?))?,
        None => synthetic_dar_series(a.synthetic_len),
    };
    if series.len() != 408 {
        log::warn!("expected 408 observations, got {}", series.len());
    }
    let cfg = Pm10Config {
        test_len: a.test_len,
        holdout_fraction: a.holdout,
        arch: a.arch.arch(2)?,
        grid: if a.full { GridSpec::full() } else { GridSpec::thinned() },
        loss: a.fit.loss()?,
        train: a.fit.config(cli.seed),
    };
    let out = pm10_pipeline(&series, &cfg)?;
    let mut w = create(&cli.out, &a.file)?;
    out.write_predictions(&mut w)?;
    w.flush()?;
    say!("training pairs {}, test steps {}, lambda {}, tau {}", out.train_rows, a.test_len, out.lambda, out.tau);
    say!("{:<8} {:>16} {:>20}", "model", "mean_abs_error", "mean_rel_error_pct");
    for (name, r) in out.reports() {
        let rel = r.mean_rel.map_or("undefined".to_string(), |v| format!("{:.4}", 100.0 * v));
        say!("{name:<8} {:>16.4} {rel:>20}", r.mean_abs);
    }
    say!("note: DAR uses coefficients fitted on the full series, evaluated here on the same final window");
    say!("wrote {}", cli.out.join(&a.file).display());
    Ok(())
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn bounds_cmd(a: &BoundsArgs) -> Result<()> {
    let mut rows: Vec<(String, Value)> = Vec::new();
    let mut put = |k: &str, v: Value| rows.push((k.to_string(), v));

    let class = NetClass { depth: a.depth, width: a.width, weight_bound: a.weight_bound, sparsity: a.sparsity };
    let inputs = BoundInputs {
        n: a.n,
        eta: a.eta,
        nu0: a.nu0,
        m: a.m,
        theta_inf: a.theta_inf,
        g: a.g,
        c_sigma: a.c_sigma,
        class,
    };
    inputs.validate()?;
    put("covering.log_bound", num(bounds::log_covering_bound(&class, a.g, a.c_sigma, a.eps)));
    put("concentration.bound", num(bounds::concentration_bound(&inputs, a.eps)));
    let th = bounds::sample_size_report(&inputs);
    put("threshold.n0", num(th.n0));
    put("threshold.growth", num(th.growth_threshold));
    put("threshold.corrected_ratio", num(th.corrected_ratio));
    put("threshold.corrected_growth", num(th.corrected_growth_threshold));
    put("threshold.accepted", Value::Bool(th.accepted()));
    match bounds::generalization_epsilon(&inputs) {
        Ok(g) => {
            put("generalization.eps1", num(g.eps1));
            put("generalization.eps1_cap", num(g.eps1_cap));
        }
        Err(e) => {
            put("generalization.eps1", Value::Null);
            put("generalization.note", Value::String(e.to_string()));
        }
    }
    put("generalization.eps_prime", num(bounds::eps_prime(&inputs)));

    let dep = DependenceParams { psi_kind: a.psi.parse::<PsiKind>()?, l1: a.l1, l2: a.l2, mu: a.mu };
    let regime: Regime = a.regime.parse()?;
    let m_n = a.m_n.unwrap_or(a.m);
    put("dependence.psi11", num(dep.psi_kind.psi11()));
    put("dependence.c1n", num(dep.c1n(m_n)));
    put("dependence.c2n", num(dep.c2n(m_n)));
    let params = ScheduleParams {
        nu1: a.nu1,
        nu2: a.nu2,
        nu3: a.nu3,
        nu4: a.nu4,
        nu5: a.nu5,
        nu6: a.nu6,
        k_ell: a.k_ell,
        m_n,
        lambda_multiplier: a.lambda_mult,
    };
    let arch = ScheduleArch { depth: a.depth, width: a.width, weight_bound: a.weight_bound };
    put("schedule.regime", Value::String(a.regime.to_ascii_lowercase()));
    let rate = match regime {
        Regime::Theorem4 => bounds::rate_exponent_theorem4(a.mu),
        Regime::Theorem3 => 2.0 * a.nu6,
    };
    put("schedule.rate_exponent", num(rate));
    let sched = bounds::schedule(regime, &params, &dep, &arch, a.n);
    let report = bounds::regime_report(regime, &params, &dep);
    if let Ok(s) = &sched {
        put("schedule.rho_n", num(s.rho_n));
        put("schedule.lambda_n", num(s.lambda_n));
        put("schedule.tau_n_max", num(s.tau_n_max));
    }
    put("schedule.valid", Value::Bool(report.valid()));
    for (k, (desc, ok)) in report.checks.iter().enumerate() {
        put(
            &format!("schedule.check{}", k + 1),
            Value::String(format!("{} {desc}", if *ok { "ok" } else { "VIOLATED" })),
        );
    }
    if let Some(s) = a.smoothness {
        let h = bounds::holder_rate(s, a.dim, a.nu3, a.nu4, a.nu6)?;
        put("holder.approximation_exponent", num(h.approximation_exponent));
        put("holder.remainder_exponent", num(h.remainder_exponent));
        put("holder.exponent", num(h.exponent));
        put("holder.nu1", num(h.nu1));
        put("holder.nu2", num(h.nu2));
        put("holder.best_exponent", num(bounds::best_holder_exponent(s, a.dim)));
        put("holder.rate", Value::String(h.rate));
    }

    if a.json {
        let map: Map<String, Value> = rows.into_iter().collect();
        say!("{}", serde_json::to_string_pretty(&Value::Object(map)).expect("JSON values are finite"));
    } else {
        for (k, v) in &rows {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            say!("{k:<32} {shown}");
        }
    }
    sched.map(|_| ()).map_err(HarnessError::from)
}
