//! Excess-risk evaluation and the replication sweep over sample sizes.

use std::fmt;
use std::io::{BufRead, Write};

use ndarray::ArrayView2;
use rayon::prelude::*;
use spdnn::dgp::{make_supervised, simulate_arx_arch, target_f, DgpKind, DgpSpec};
use spdnn::loss::{Loss, LossVariant};
use spdnn::penalty::l0_norm;
use spdnn::rng::{derive_seed, rng_from_seed, SpRng, RNG_NAME};
use spdnn::train::train_npdnn;
use spdnn::{Architecture, LossKind, Network, SupervisedSet, TrainConfig};

use crate::error::{HarnessError, Result};
use crate::grid::{status_field, tune_grid, Criterion, GridSpec};

/// Autoregressive order of the simulated models; inputs are `(Y_{t-1}, Y_{t-2}, X_{t-1})`.
pub const LAGS: usize = 2;

/// Anything that maps an input row to a prediction.
pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> Result<f64>;

    fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        x.rows().into_iter().map(|r| self.predict(&r.to_vec())).collect()
    }
}

impl Predictor for Network {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?)
    }

    fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.forward_batch(x)?)
    }
}

/// The true regression function of a DGP, as a predictor.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    pub kind: DgpKind,
}

impl Predictor for OraclePredictor {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != LAGS + 1 {
            return Err(spdnn::Error::Shape { expected: LAGS + 1, got: x.len() }.into());
        }
        Ok(target_f(&self.kind, x[0], x[1], x[2]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessRisk {
    /// `(1/m) Σ [ℓ(h(X_t), Y_t) − ℓ(f(X_t), Y_t)]`, unclipped.
    pub value: f64,
    /// Standard error of `value` from the per-sample differences.
    pub std_error: f64,
    /// `(1/m) Σ (h(X_t) − f(X_t))²` on the same test set.
    pub sq_gap: f64,
    pub m: usize,
    /// Set when Monte Carlo noise pushed the estimate below zero.
    pub negative: bool,
}

/// Monte Carlo excess risk of `model` on a fresh trajectory of length `m + 2`.
pub fn excess_risk<P: Predictor + ?Sized>(
    model: &P,
    dgp: &DgpSpec,
    m: usize,
    loss: &LossKind,
    rng: &mut SpRng,
) -> Result<ExcessRisk> {
    if m == 0 {
        return Err(spdnn::Error::Argument("test size must be positive".into()).into());
    }
    let traj = simulate_arx_arch(dgp, m + LAGS, rng, 0)?;
    let test = make_supervised(&traj, LAGS)?;
    excess_risk_on(model, &dgp.kind, &test, loss)
}

/// Excess risk on an existing supervised set whose inputs are `(Y_{t-1}, Y_{t-2}, X_{t-1})`.
pub fn excess_risk_on<P: Predictor + ?Sized>(
    model: &P,
    kind: &DgpKind,
    test: &SupervisedSet,
    loss: &LossKind,
) -> Result<ExcessRisk> {
    let preds = model.predict_batch(test.x())?;
    let oracle = OraclePredictor { kind: kind.clone() };
    let truth = oracle.predict_batch(test.x())?;
    let m = test.len();
    let diffs: Vec<f64> =
        preds.iter().zip(&truth).zip(test.y()).map(|((&h, &f), &y)| loss.eval(h, y) - loss.eval(f, y)).collect();
    let mean = diffs.iter().sum::<f64>() / m as f64;
    let var = if m > 1 { diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (m - 1) as f64 } else { 0.0 };
    let sq_gap = preds.iter().zip(&truth).map(|(h, f)| (h - f) * (h - f)).sum::<f64>() / m as f64;
    if !mean.is_finite() {
        return Err(spdnn::Error::Numeric("excess risk is not finite".into()).into());
    }
    Ok(ExcessRisk { value: mean, std_error: (var / m as f64).sqrt(), sq_gap, m, negative: mean < 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Spdnn,
    Npdnn,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Spdnn => "spdnn",
            Estimator::Npdnn => "npdnn",
        })
    }
}

impl std::str::FromStr for Estimator {
    type Err = spdnn::Error;

    fn from_str(s: &str) -> spdnn::Result<Self> {
        match s {
            "spdnn" => Ok(Estimator::Spdnn),
            "npdnn" => Ok(Estimator::Npdnn),
            other => Err(spdnn::Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dgp: DgpSpec,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub test_size: usize,
    pub losses: Vec<LossVariant>,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub grid: GridSpec,
    pub master_seed: u64,
}

/// Default network for the simulated DGPs: 3 inputs, two hidden ReLU layers of 100.
pub fn default_arch() -> Architecture {
    Architecture::uniform(LAGS + 1, 2, 100, 1e3, 1e3).expect("static architecture is valid")
}

impl ExperimentSpec {
    pub fn new(dgp: DgpSpec) -> Self {
        ExperimentSpec {
            dgp,
            sizes: vec![250, 500, 1000],
            replications: 20,
            test_size: 10_000,
            losses: vec![LossVariant::L1, LossVariant::L2],
            arch: default_arch(),
            train: TrainConfig::default(),
            grid: GridSpec::thinned(),
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| -> Result<()> { Err(spdnn::Error::Config(m.to_string()).into()) };
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be nonempty and strictly ascending");
        }
        if self.sizes[0] < 2 {
            return bad("sample sizes must be at least 2");
        }
        if self.replications == 0 || self.test_size == 0 || self.losses.is_empty() {
            return bad("replications, test size and losses must be nonempty");
        }
        if self.arch.input_dim() != LAGS + 1 {
            return bad("architecture input dimension must be 3");
        }
        self.dgp.validate()?;
        self.arch.validate()?;
        self.train.validate()?;
        Ok(())
    }
}

/// Seed roles of one (size, replication) cell.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum SeedRole {
    Train = 0,
    Valid = 1,
    Test = 2,
    Fit = 3,
}

/// `splitmix` fold of `(master, dgp tag, n, rep, role)`.
pub fn replicate_seed(master: u64, dgp: &DgpKind, n: usize, rep: usize, role: SeedRole) -> u64 {
    derive_seed(master, &[dgp.tag(), n as u64, rep as u64, role as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dgp: String,
    pub n: usize,
    pub rep: usize,
    pub estimator: Estimator,
    pub loss: LossVariant,
    pub excess_risk: Option<f64>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub l0: Option<usize>,
    pub failure: Option<String>,
}

impl ResultRow {
    fn key(&self) -> (&str, usize, usize, Estimator, u8) {
        let loss = match self.loss {
            LossVariant::L1 => 1,
            LossVariant::L2 => 2,
        };
        (&self.dgp, self.n, self.rep, self.estimator, loss)
    }

    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

pub const RESULTS_HEADER: &str = "dgp,n,rep,estimator,loss,excess_risk,lambda,tau,l0,status";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub master_seed: u64,
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    /// Sorts rows by `(dgp, n, rep, estimator, loss)`.
    pub fn canonicalize(&mut self) {
        self.rows.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={}", self.master_seed)?;
        writeln!(w, "# rng={RNG_NAME}")?;
        writeln!(w, "{RESULTS_HEADER}")?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.dgp,
                r.n,
                r.rep,
                r.estimator,
                r.loss,
                opt(r.excess_risk.map(|v| v.to_string())),
                opt(r.lambda.map(|v| v.to_string())),
                opt(r.tau.map(|v| v.to_string())),
                opt(r.l0.map(|v| v.to_string())),
                status_field(r.failure.as_deref()),
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut master_seed = 0;
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let row = idx + 1;
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(s) = comment.trim().strip_prefix("seed=") {
                    master_seed = s.parse().map_err(|_| ingest(row, "bad seed comment"))?;
                }
                continue;
            }
            if !header_seen {
                if line.trim() != RESULTS_HEADER {
                    return Err(ingest(row, "unexpected header"));
                }
                header_seen = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(ingest(row, "expected 10 fields"));
            }
            let float = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| ingest(row, "bad number"))
                }
            };
            let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| ingest(row, "bad integer")) };
            rows.push(ResultRow {
                dgp: f[0].to_string(),
                n: int(f[1])?,
                rep: int(f[2])?,
                estimator: f[3].parse().map_err(|e: spdnn::Error| ingest(row, &e.to_string()))?,
                loss: f[4].parse().map_err(|e: spdnn::Error| ingest(row, &e.to_string()))?,
                excess_risk: float(f[5])?,
                lambda: float(f[6])?,
                tau: float(f[7])?,
                l0: if f[8].is_empty() { None } else { Some(int(f[8])?) },
                failure: match f[9] {
                    "ok" => None,
                    s => Some(s.strip_prefix("failed: ").unwrap_or(s).to_string()),
                },
            });
        }
        Ok(ResultsTable { master_seed, rows })
    }

    /// Median excess risk of the successful rows in one group.
    pub fn median(&self, dgp: &str, n: usize, estimator: Estimator, loss: LossVariant) -> Option<f64> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.dgp == dgp && r.n == n && r.estimator == estimator && r.loss == loss)
            .filter_map(|r| r.excess_risk)
            .collect();
        median(&mut v)
    }

    /// `(dgp, n, estimator, loss, ok count, median)` per group, in canonical order.
    pub fn summary(&self) -> Vec<(String, usize, Estimator, LossVariant, usize, Option<f64>)> {
        let mut keys: Vec<(String, usize, Estimator, LossVariant)> =
            self.rows.iter().map(|r| (r.dgp.clone(), r.n, r.estimator, r.loss)).collect();
        keys.sort_by(|a, b| (&a.0, a.1, a.2, a.3 as u8).cmp(&(&b.0, b.1, b.2, b.3 as u8)));
        keys.dedup();
        keys.into_iter()
            .map(|(d, n, e, l)| {
                let ok = self
                    .rows
                    .iter()
                    .filter(|r| r.dgp == d && r.n == n && r.estimator == e && r.loss == l && r.ok())
                    .count();
                let med = self.median(&d, n, e, l);
                (d, n, e, l, ok, med)
            })
            .collect()
    }
}

fn ingest(row: usize, msg: &str) -> HarnessError {
    HarnessError::Ingestion { row, msg: msg.to_string() }
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

fn failed_rows(
    spec: &ExperimentSpec,
    n: usize,
    rep: usize,
    estimators: &[Estimator],
    loss: LossVariant,
    msg: &str,
) -> Vec<ResultRow> {
    estimators
        .iter()
        .map(|&estimator| ResultRow {
            dgp: spec.dgp.kind.name().to_string(),
            n,
            rep,
            estimator,
            loss,
            excess_risk: None,
            lambda: None,
            tau: None,
            l0: None,
            failure: Some(msg.to_string()),
        })
        .collect()
}

fn simulate_set(spec: &ExperimentSpec, n: usize, seed: u64) -> Result<SupervisedSet> {
    let mut rng = rng_from_seed(seed);
    let traj = simulate_arx_arch(&spec.dgp, n + LAGS, &mut rng, seed)?;
    Ok(make_supervised(&traj, LAGS)?)
}

/// One (size, replication) cell: simulate, tune SPDNN, fit NPDNN and score
/// both under every loss. Failures become rows.
fn run_cell(spec: &ExperimentSpec, n: usize, rep: usize) -> Vec<ResultRow> {
    let kind = &spec.dgp.kind;
    let seed = |role| replicate_seed(spec.master_seed, kind, n, rep, role);
    let both = [Estimator::Spdnn, Estimator::Npdnn];

    let sets = simulate_set(spec, n, seed(SeedRole::Train)).and_then(|train| {
        let valid = simulate_set(spec, n, seed(SeedRole::Valid))?;
        let test = simulate_set(spec, spec.test_size, seed(SeedRole::Test))?;
        Ok((train, valid, test))
    });
    let (train, valid, test) = match sets {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return spec.losses.iter().flat_map(|&l| failed_rows(spec, n, rep, &both, l, &msg)).collect();
        }
    };

    let mut rows = Vec::new();
    for (li, &variant) in spec.losses.iter().enumerate() {
        let loss = LossKind::from(variant);
        let cfg = spec.train.clone().with_seed(derive_seed(seed(SeedRole::Fit), &[li as u64]));
        let row = |estimator, lambda, tau, model: &Network| -> ResultRow {
            let base = ResultRow {
                dgp: kind.name().to_string(),
                n,
                rep,
                estimator,
                loss: variant,
                excess_risk: None,
                lambda,
                tau,
                l0: Some(l0_norm(model.params())),
                failure: None,
            };
            match excess_risk_on(model, kind, &test, &loss) {
                Ok(er) => ResultRow { excess_risk: Some(er.value), ..base },
                Err(e) => ResultRow { failure: Some(e.to_string()), ..base },
            }
        };

        let spdnn = spec
            .grid
            .build(n, Criterion::paired_with(variant))
            .and_then(|grid| tune_grid(&train, &valid, &grid, &spec.arch, &loss, &cfg));
        match spdnn {
            Ok(t) => rows.push(row(Estimator::Spdnn, Some(t.best_lambda), Some(t.best_tau), &t.best_model.network)),
            Err(e) => rows.extend(failed_rows(spec, n, rep, &[Estimator::Spdnn], variant, &e.to_string())),
        }
        match train_npdnn(&train, &spec.arch, &loss, &cfg) {
            Ok(m) => rows.push(row(Estimator::Npdnn, Some(0.0), None, &m.network)),
            Err(e) => rows.extend(failed_rows(spec, n, rep, &[Estimator::Npdnn], variant, &e.to_string())),
        }
    }
    log::info!("{} n={n} rep={rep} done", kind.name());
    rows
}

/// Runs every (size, replication) cell on the current rayon pool and returns
/// the canonically sorted table.
pub fn run_replications(spec: &ExperimentSpec) -> Result<ResultsTable> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> =
        spec.sizes.iter().flat_map(|&n| (0..spec.replications).map(move |rep| (n, rep))).collect();
    let rows: Vec<ResultRow> = cells.par_iter().flat_map_iter(|&(n, rep)| run_cell(spec, n, rep)).collect();
    let mut table = ResultsTable { master_seed: spec.master_seed, rows };
    table.canonicalize();
    Ok(table)
}
