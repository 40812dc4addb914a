//! PM10 one-step-ahead forecasting: SPDNN and NPDNN on `(PM_{t-1}, RH_{t-1})`
//! against the fitted double-autoregressive baseline.

use std::io::{BufRead, Write};

use ndarray::Array2;
use spdnn::loss::LossVariant;
use spdnn::rng::derive_seed;
use spdnn::train::{train_npdnn, train_spdnn};
use spdnn::{Architecture, LossKind, Network, PenaltyConfig, SupervisedSet, TrainConfig};

use crate::error::{HarnessError, Result};
use crate::grid::{tune_grid, Criterion, GridSpec};

/// Mean part of the fitted DAR model: `37.946 + 0.330·PM_{t-1} − 0.210·RH_{t-1}`.
pub fn dar_predict(pm_prev: f64, rh_prev: f64) -> f64 {
    37.946 + 0.330 * pm_prev - 0.210 * rh_prev
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mean_abs: f64,
    /// Mean of `|actual − pred| / actual` as a fraction; `None` when some
    /// actual value is not positive (see [`MetricsReport::relative`]).
    pub mean_rel: Option<f64>,
    pub per_step: Vec<(f64, f64)>,
}

impl MetricsReport {
    /// The relative error, or an error naming the first non-positive actual.
    pub fn relative(&self) -> Result<f64> {
        match self.mean_rel {
            Some(v) => Ok(v),
            None => {
                let (index, &(value, _)) = self
                    .per_step
                    .iter()
                    .enumerate()
                    .find(|(_, (a, _))| a.is_nan() || *a <= 0.0)
                    .expect("relative error is only missing for non-positive actuals");
                Err(HarnessError::RelativeUndefined { index, value })
            }
        }
    }
}

pub fn prediction_metrics(actuals: &[f64], preds: &[f64]) -> Result<MetricsReport> {
    if actuals.is_empty() || actuals.len() != preds.len() {
        return Err(spdnn::Error::Shape { expected: actuals.len().max(1), got: preds.len() }.into());
    }
    let n = actuals.len() as f64;
    let mean_abs = actuals.iter().zip(preds).map(|(a, p)| (a - p).abs()).sum::<f64>() / n;
    let mean_rel = if actuals.iter().all(|&a| a > 0.0) {
        Some(actuals.iter().zip(preds).map(|(a, p)| (a - p).abs() / a).sum::<f64>() / n)
    } else {
        None
    };
    Ok(MetricsReport { mean_abs, mean_rel, per_step: actuals.iter().copied().zip(preds.iter().copied()).collect() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pm10Series {
    pub dates: Vec<String>,
    pub pm10: Vec<f64>,
    pub rh: Vec<f64>,
}

impl Pm10Series {
    pub fn len(&self) -> usize {
        self.pm10.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pm10.is_empty()
    }

    /// Reads a CSV with (at least) the columns `date`, `pm10` and `rh`, in
    /// any order. Lines starting with `#` are skipped. Row numbers in errors
    /// are 1-based file lines.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut cols: Option<(usize, usize, usize)> = None;
        let mut series = Pm10Series { dates: Vec::new(), pm10: Vec::new(), rh: Vec::new() };
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let row = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let Some((di, pi, ri)) = cols else {
                let find = |name: &str| {
                    fields
                        .iter()
                        .position(|f| f.eq_ignore_ascii_case(name))
                        .ok_or_else(|| HarnessError::Ingestion { row, msg: format!("missing column `{name}`") })
                };
                cols = Some((find("date")?, find("pm10")?, find("rh")?));
                continue;
            };
            let get = |i: usize| {
                fields
                    .get(i)
                    .copied()
                    .ok_or_else(|| HarnessError::Ingestion { row, msg: format!("expected at least {} fields", i + 1) })
            };
            let num = |i: usize, name: &str| -> Result<f64> {
                let s = get(i)?;
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(HarnessError::Ingestion { row, msg: format!("unparsable {name} value `{s}`") }),
                }
            };
            series.dates.push(get(di)?.to_string());
            series.pm10.push(num(pi, "pm10")?);
            series.rh.push(num(ri, "rh")?);
        }
        if cols.is_none() {
            return Err(HarnessError::Ingestion { row: 0, msg: "empty file".into() });
        }
        Ok(series)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "date,pm10,rh")?;
        for ((d, p), r) in self.dates.iter().zip(&self.pm10).zip(&self.rh) {
            writeln!(w, "{d},{p},{r}")?;
        }
        Ok(())
    }
}

/// Series following the DAR mean equation exactly (no noise), with a
/// deterministic humidity path. Useful as a pipeline smoke test.
pub fn synthetic_dar_series(len: usize) -> Pm10Series {
    let mut pm = Vec::with_capacity(len);
    let mut rh = Vec::with_capacity(len);
    let mut dates = Vec::with_capacity(len);
    for t in 0..len {
        let h = 75.0 + 10.0 * (t as f64 * 0.37).sin() + 4.0 * (t as f64 * 1.3).cos();
        let p = if t == 0 { 40.0 } else { dar_predict(pm[t - 1], rh[t - 1]) };
        pm.push(p);
        rh.push(h);
        dates.push(format!("t{:04}", t + 1));
    }
    Pm10Series { dates, pm10: pm, rh }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pm10Config {
    /// Number of final observations forecast one step ahead.
    pub test_len: usize,
    /// Fraction of the training pairs held out (from the end) for tuning.
    pub holdout_fraction: f64,
    pub arch: Architecture,
    pub grid: GridSpec,
    pub loss: LossVariant,
    pub train: TrainConfig,
}

/// Minimum number of rows: one training pair plus the test window, plus the
/// first row which only serves as a lag.
pub fn min_rows(test_len: usize) -> usize {
    test_len + 2
}

impl Pm10Config {
    pub fn new(seed: u64) -> Self {
        Pm10Config {
            test_len: 100,
            holdout_fraction: 0.25,
            arch: Architecture::uniform(2, 2, 100, 1e3, 1e3).expect("static architecture is valid"),
            grid: GridSpec::thinned(),
            loss: LossVariant::L2,
            train: TrainConfig::default().with_seed(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pm10Prediction {
    pub date: String,
    pub actual: f64,
    pub spdnn: f64,
    pub npdnn: f64,
    pub dar: f64,
}

#[derive(Debug, Clone)]
pub struct Pm10Outcome {
    pub spdnn: MetricsReport,
    pub npdnn: MetricsReport,
    pub dar: MetricsReport,
    pub lambda: f64,
    pub tau: f64,
    pub train_rows: usize,
    pub predictions: Vec<Pm10Prediction>,
}

impl Pm10Outcome {
    pub fn write_predictions<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "date,actual,spdnn,npdnn,dar")?;
        for p in &self.predictions {
            writeln!(w, "{},{},{},{},{}", p.date, p.actual, p.spdnn, p.npdnn, p.dar)?;
        }
        Ok(())
    }

    pub fn reports(&self) -> [(&'static str, &MetricsReport); 3] {
        [("SPDNN", &self.spdnn), ("NPDNN", &self.npdnn), ("DAR", &self.dar)]
    }
}

/// Affine map to zero mean, unit variance, fitted on the training window.
#[derive(Debug, Clone, Copy)]
struct Standardizer {
    mean: f64,
    sd: f64,
}

impl Standardizer {
    fn fit(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        Standardizer { mean, sd }
    }

    fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Fits SPDNN (grid-tuned on the tail of the training window, then refit on
/// the whole window) and NPDNN on all but the last `test_len` pairs, and
/// forecasts the last `test_len` observations from their observed lags.
pub fn pm10_pipeline(series: &Pm10Series, cfg: &Pm10Config) -> Result<Pm10Outcome> {
    if series.len() < min_rows(cfg.test_len) {
        return Err(HarnessError::InsufficientData(format!(
            "{} rows, need at least {}",
            series.len(),
            min_rows(cfg.test_len)
        )));
    }
    if cfg.test_len == 0 || !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(spdnn::Error::Config("test length must be positive and holdout fraction in (0, 1)".into()).into());
    }
    if cfg.arch.input_dim() != 2 {
        return Err(spdnn::Error::Config("PM10 network takes 2 inputs".into()).into());
    }

    // Pair k predicts observation k+1 from observation k.
    let pairs = series.len() - 1;
    let train_rows = pairs - cfg.test_len;
    let pm_scale = Standardizer::fit(&series.pm10[..=train_rows]);
    let rh_scale = Standardizer::fit(&series.rh[..train_rows]);
    let x = Array2::from_shape_fn((pairs, 2), |(k, c)| {
        if c == 0 {
            pm_scale.apply(series.pm10[k])
        } else {
            rh_scale.apply(series.rh[k])
        }
    });
    let y: Vec<f64> = series.pm10[1..].iter().map(|&v| pm_scale.apply(v)).collect();
    let all = SupervisedSet::new(x, y)?;
    let train = all.slice(0, train_rows);
    let test = all.slice(train_rows, pairs);

    let holdout = ((train_rows as f64 * cfg.holdout_fraction).round() as usize).clamp(1, train_rows.max(2) - 1);
    let (fit_part, valid_part) = if train_rows >= 2 {
        (train.slice(0, train_rows - holdout), train.slice(train_rows - holdout, train_rows))
    } else {
        // A single pair cannot be split; tune on it directly.
        (train.clone(), train.clone())
    };

    let loss = LossKind::from(cfg.loss);
    let criterion = Criterion::paired_with(cfg.loss);
    let grid = cfg.grid.build(train_rows.max(2), criterion)?;
    let tuned = tune_grid(&fit_part, &valid_part, &grid, &cfg.arch, &loss, &cfg.train)?;
    let refit_cfg = cfg.train.clone().with_seed(derive_seed(cfg.train.seed, &[1]));
    let pen = PenaltyConfig::new(tuned.best_lambda, tuned.best_tau)?;
    let spdnn = train_spdnn(&train, &cfg.arch, &pen, &loss, &refit_cfg)?.network;
    let npdnn = train_npdnn(&train, &cfg.arch, &loss, &refit_cfg)?.network;

    let predict = |net: &Network| -> Result<Vec<f64>> {
        Ok(net.forward_batch(test.x())?.into_iter().map(|z| pm_scale.invert(z)).collect())
    };
    let sp = predict(&spdnn)?;
    let np = predict(&npdnn)?;
    let first = train_rows + 1;
    let actual: Vec<f64> = series.pm10[first..].to_vec();
    let dar: Vec<f64> = (first..series.len()).map(|t| dar_predict(series.pm10[t - 1], series.rh[t - 1])).collect();

    let predictions = (0..cfg.test_len)
        .map(|k| Pm10Prediction {
            date: series.dates[first + k].clone(),
            actual: actual[k],
            spdnn: sp[k],
            npdnn: np[k],
            dar: dar[k],
        })
        .collect();
    Ok(Pm10Outcome {
        spdnn: prediction_metrics(&actual, &sp)?,
        npdnn: prediction_metrics(&actual, &np)?,
        dar: prediction_metrics(&actual, &dar)?,
        lambda: tuned.best_lambda,
        tau: tuned.best_tau,
        train_rows,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dar_examples() {
        assert_eq!(dar_predict(0.0, 0.0), 37.946);
        assert!((dar_predict(100.0, 70.0) - 56.246).abs() < 1e-12);
        let d = dar_predict(51.0, 80.0) - dar_predict(50.0, 80.0);
        assert!((d - 0.330).abs() < 1e-12);
    }

    #[test]
    fn metrics_examples() {
        let r = prediction_metrics(&[100.0], &[90.0]).unwrap();
        assert_eq!(r.mean_abs, 10.0);
        assert!((r.mean_rel.unwrap() - 0.10).abs() < 1e-15);
        let z = prediction_metrics(&[3.0, 4.0], &[3.0, 4.0]).unwrap();
        assert_eq!((z.mean_abs, z.mean_rel), (0.0, Some(0.0)));
    }

    #[test]
    fn nonpositive_actual() {
        let r = prediction_metrics(&[1.0, 0.0], &[1.5, 0.5]).unwrap();
        assert_eq!(r.mean_abs, 0.5);
        assert!(matches!(r.relative(), Err(HarnessError::RelativeUndefined { index: 1, .. })));
        assert!(prediction_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(prediction_metrics(&[], &[]).is_err());
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let s = synthetic_dar_series(5);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(Pm10Series::read_csv(&buf[..]).unwrap(), s);

        let reordered = "rh,date,pm10\n70,2005-01-21,50\n";
        let r = Pm10Series::read_csv(reordered.as_bytes()).unwrap();
        assert_eq!((r.pm10[0], r.rh[0]), (50.0, 70.0));

        let missing = "date,pm10\n2005-01-21,50\n";
        assert!(matches!(Pm10Series::read_csv(missing.as_bytes()), Err(HarnessError::Ingestion { row: 1, .. })));
        let bad = "date,pm10,rh\n2005-01-21,50,70\n2005-01-22,x,70\n";
        assert!(matches!(Pm10Series::read_csv(bad.as_bytes()), Err(HarnessError::Ingestion { row: 3, .. })));
    }

    #[test]
    fn too_short() {
        let s = synthetic_dar_series(101);
        assert!(matches!(pm10_pipeline(&s, &Pm10Config::new(0)), Err(HarnessError::InsufficientData(_))));
    }
}
