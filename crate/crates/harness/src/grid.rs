//! `(λ, τ)` grid search on a validation set.
//!
//! The grid is `λ = 10^{-i} log(n)/n`, `τ = 10^{-j}/log(n)`. One SPDNN is
//! trained per cell, each with its own derived seed, so the table does not
//! depend on the order (or the thread) in which cells are evaluated.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use spdnn::loss::LossVariant;
use spdnn::rng::derive_seed;
use spdnn::train::train_spdnn;
use spdnn::{Architecture, LossKind, PenaltyConfig, SupervisedSet, TrainConfig, TrainedModel};

use crate::error::{HarnessError, Result};

/// Seed-derivation role of grid cells (see [`cell_seed`]).
const CELL_ROLE: u64 = 0x6772_6964;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Mse,
    Mae,
}

impl Criterion {
    /// MSE for L2 fits, MAE for L1 fits.
    pub fn paired_with(loss: LossVariant) -> Self {
        match loss {
            LossVariant::L1 => Criterion::Mae,
            LossVariant::L2 => Criterion::Mse,
        }
    }

    pub fn score(self, preds: &[f64], targets: &[f64]) -> f64 {
        let n = preds.len() as f64;
        let total: f64 = preds
            .iter()
            .zip(targets)
            .map(|(p, y)| match self {
                Criterion::Mse => (p - y) * (p - y),
                Criterion::Mae => (p - y).abs(),
            })
            .sum();
        total / n
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Mse => "mse",
            Criterion::Mae => "mae",
        })
    }
}

impl FromStr for Criterion {
    type Err = spdnn::Error;

    fn from_str(s: &str) -> spdnn::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Criterion::Mse),
            "mae" => Ok(Criterion::Mae),
            other => Err(spdnn::Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Which exponents `i` (for λ) and `j` (for τ) make up the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub lambda_exponents: Vec<u32>,
    pub tau_exponents: Vec<u32>,
}

impl GridSpec {
    /// `i, j ∈ {0, …, 10}`.
    pub fn full() -> Self {
        GridSpec { lambda_exponents: (0..=10).collect(), tau_exponents: (0..=10).collect() }
    }

    /// `i, j ∈ {0, 2, 4, 6, 8, 10}`.
    pub fn thinned() -> Self {
        GridSpec { lambda_exponents: (0..=10).step_by(2).collect(), tau_exponents: (0..=10).step_by(2).collect() }
    }

    pub fn build(&self, n: usize, criterion: Criterion) -> Result<TuningGrid> {
        TuningGrid::from_exponents(n, &self.lambda_exponents, &self.tau_exponents, criterion)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    pub lambda_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub criterion: Criterion,
}

impl TuningGrid {
    pub fn from_exponents(n: usize, lambda_exps: &[u32], tau_exps: &[u32], criterion: Criterion) -> Result<Self> {
        if n < 2 {
            return Err(spdnn::Error::Argument(format!("grid needs n >= 2 so that log n > 0, got {n}")).into());
        }
        let ln = (n as f64).ln();
        let grid = TuningGrid {
            lambda_values: lambda_exps.iter().map(|&i| 10f64.powi(-(i as i32)) * ln / n as f64).collect(),
            tau_values: tau_exps.iter().map(|&j| 10f64.powi(-(j as i32)) / ln).collect(),
            criterion,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn full(n: usize, criterion: Criterion) -> Result<Self> {
        GridSpec::full().build(n, criterion)
    }

    pub fn single(lambda: f64, tau: f64, criterion: Criterion) -> Result<Self> {
        let grid = TuningGrid { lambda_values: vec![lambda], tau_values: vec![tau], criterion };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_values.is_empty() || self.tau_values.is_empty() {
            return Err(spdnn::Error::Config("tuning grid is empty".into()).into());
        }
        if self.lambda_values.iter().chain(&self.tau_values).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(spdnn::Error::Config("tuning grid values must be positive and finite".into()).into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lambda_values.len() * self.tau_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Seed of cell `(a, b)` (positions in the λ and τ lists).
pub fn cell_seed(base: u64, a: usize, b: usize) -> u64 {
    derive_seed(base, &[CELL_ROLE, a as u64, b as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub lambda_index: usize,
    pub tau_index: usize,
    pub lambda: f64,
    pub tau: f64,
    /// Validation criterion; `None` if the fit failed or scored non-finite.
    pub score: Option<f64>,
    pub l0: Option<usize>,
    pub epochs: Option<usize>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best_lambda: f64,
    pub best_tau: f64,
    pub best_cell: (usize, usize),
    pub best_model: TrainedModel,
    /// Row-major over (λ index, τ index).
    pub table: Vec<CellScore>,
    pub criterion: Criterion,
}

impl TuneOutcome {
    pub fn best_score(&self) -> f64 {
        let (a, b) = self.best_cell;
        self.table.iter().find(|c| c.lambda_index == a && c.tau_index == b).and_then(|c| c.score).unwrap_or(f64::NAN)
    }

    /// CSV `lambda_index,tau_index,lambda,tau,score,l0,epochs,status`.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# criterion={}", self.criterion)?;
        writeln!(w, "lambda_index,tau_index,lambda,tau,score,l0,epochs,status")?;
        for c in &self.table {
            let opt = |v: Option<String>| v.unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                c.lambda_index,
                c.tau_index,
                c.lambda,
                c.tau,
                opt(c.score.map(|s| s.to_string())),
                opt(c.l0.map(|s| s.to_string())),
                opt(c.epochs.map(|s| s.to_string())),
                status_field(c.failure.as_deref()),
            )?;
        }
        Ok(())
    }
}

pub(crate) fn status_field(failure: Option<&str>) -> String {
    match failure {
        None => "ok".into(),
        Some(msg) => format!("failed: {}", msg.replace([',', '\n'], ";")),
    }
}

/// Errors that mark a single cell as failed rather than aborting the search.
fn is_cell_failure(e: &spdnn::Error) -> bool {
    matches!(e, spdnn::Error::Divergence { .. } | spdnn::Error::Numeric(_))
}

/// Trains one SPDNN per grid cell on `train` (cell seeds derived from
/// `cfg.seed`) and keeps the one with the smallest validation criterion.
/// Ties go to the smaller λ index, then the smaller τ index.
pub fn tune_grid(
    train: &SupervisedSet,
    valid: &SupervisedSet,
    grid: &TuningGrid,
    arch: &Architecture,
    loss: &LossKind,
    cfg: &TrainConfig,
) -> Result<TuneOutcome> {
    grid.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(spdnn::Error::Argument("training and validation sets must be nonempty".into()).into());
    }
    let cells: Vec<(usize, usize)> =
        (0..grid.lambda_values.len()).flat_map(|a| (0..grid.tau_values.len()).map(move |b| (a, b))).collect();

    let fits: Vec<spdnn::Result<(TrainedModel, f64)>> = cells
        .par_iter()
        .map(|&(a, b)| {
            let pen = PenaltyConfig::new(grid.lambda_values[a], grid.tau_values[b])?;
            let cell_cfg = cfg.clone().with_seed(cell_seed(cfg.seed, a, b));
            let model = train_spdnn(train, arch, &pen, loss, &cell_cfg)?;
            let preds = model.network.forward_batch(valid.x())?;
            let score = grid.criterion.score(&preds, valid.y());
            Ok((model, score))
        })
        .collect();

    let mut table = Vec::with_capacity(cells.len());
    let mut best: Option<(usize, f64)> = None;
    let mut models = Vec::with_capacity(cells.len());
    for (k, (&(a, b), fit)) in cells.iter().zip(fits).enumerate() {
        let mut cell = CellScore {
            lambda_index: a,
            tau_index: b,
            lambda: grid.lambda_values[a],
            tau: grid.tau_values[b],
            score: None,
            l0: None,
            epochs: None,
            failure: None,
        };
        match fit {
            Ok((model, score)) => {
                cell.l0 = Some(spdnn::penalty::l0_norm(model.network.params()));
                cell.epochs = Some(model.stopped_epoch);
                if score.is_finite() {
                    cell.score = Some(score);
                    // Cells arrive in (λ, τ) order, so a strict comparison
                    // implements the tie-break.
                    if best.is_none_or(|(_, s)| score < s) {
                        best = Some((k, score));
                    }
                } else {
                    cell.failure = Some("non-finite validation score".into());
                }
                models.push(Some(model));
            }
            Err(e) if is_cell_failure(&e) => {
                cell.failure = Some(e.to_string());
                models.push(None);
            }
            Err(e) => return Err(e.into()),
        }
        table.push(cell);
    }

    let (k, _) = best.ok_or(HarnessError::Tuning { cells: cells.len() })?;
    let best_model = models[k].take().expect("scored cell has a model");
    Ok(TuneOutcome {
        best_lambda: table[k].lambda,
        best_tau: table[k].tau,
        best_cell: cells[k],
        best_model,
        table,
        criterion: grid.criterion,
    })
}
