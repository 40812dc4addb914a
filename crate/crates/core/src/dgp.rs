//! Nonlinear ARX-ARCH(1) simulators and lag embedding.
//!
//! ```text
//! Y_t = f(Y_{t-1}, Y_{t-2}; X_{t-1}) + ε_t,   ε_t = ξ_t √(φ₀ + φ₁ ε²_{t-1})
//! X_t = α₀ + α₁ X_{t-1} + η_t
//! ```
//!
//! `ξ_t` and `η_t` are i.i.d. uniform on `[-a, a]` rescaled to unit variance.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::data::SupervisedSet;
use crate::error::{Error, Result};
use crate::rng::{SpRng, RNG_NAME};

pub type TargetFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DgpKind {
    /// Threshold autoregression with nonlinear covariate.
    Dgp1,
    /// Exponential autoregression with nonlinear covariate.
    Dgp2,
    /// User-supplied `f(y₁, y₂, x)` with optional Lipschitz coefficients.
    Custom { name: String, f: TargetFn, lipschitz: Option<(f64, f64, f64)> },
}

impl DgpKind {
    pub fn name(&self) -> &str {
        match self {
            DgpKind::Dgp1 => "dgp1",
            DgpKind::Dgp2 => "dgp2",
            DgpKind::Custom { name, .. } => name,
        }
    }

    /// Stable integer tag used for seed derivation.
    pub fn tag(&self) -> u64 {
        match self {
            DgpKind::Dgp1 => 1,
            DgpKind::Dgp2 => 2,
            DgpKind::Custom { name, .. } => {
                name.bytes().fold(1469598103934665603u64, |h, b| (h ^ b as u64).wrapping_mul(1099511628211))
            }
        }
    }

    /// Lipschitz coefficients `(α_{1,Y}(f), α_{2,Y}(f), α_X(f))`.
    ///
    /// DGP1: slopes of the threshold part, `0.15`, and `sup |d/dx 0.4√(1+x²/2)| = 0.4/√2`.
    /// DGP2: `sup |d/dy (0.2 - 0.15e^{-y²})y| = 0.2 + 0.3e^{-3/2}`, no `y₂`, and `0.5`.
    pub fn lipschitz(&self) -> Option<(f64, f64, f64)> {
        match self {
            DgpKind::Dgp1 => Some((0.2, 0.15, 0.4 * 0.5f64.sqrt())),
            DgpKind::Dgp2 => Some((0.2 + 0.3 * (-1.5f64).exp(), 0.0, 0.5)),
            DgpKind::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

impl fmt::Debug for DgpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for DgpKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DgpKind::Dgp1, DgpKind::Dgp1) | (DgpKind::Dgp2, DgpKind::Dgp2) => true,
            (DgpKind::Custom { f: a, .. }, DgpKind::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl FromStr for DgpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dgp1" => Ok(DgpKind::Dgp1),
            "dgp2" => Ok(DgpKind::Dgp2),
            other => Err(Error::Config(format!("unknown dgp `{other}`"))),
        }
    }
}

pub fn target_f(kind: &DgpKind, y1: f64, y2: f64, x: f64) -> f64 {
    match kind {
        DgpKind::Dgp1 => -0.75 + 0.1 * y1.max(0.0) - 0.2 * y1.min(0.0) + 0.15 * y2 + 0.4 * (1.0 + 0.5 * x * x).sqrt(),
        DgpKind::Dgp2 => 0.4 + (0.2 - 0.15 * (-y1 * y1).exp()) * y1 - 0.5 / (1.0 + x.abs()),
        DgpKind::Custom { f, .. } => f(y1, y2, x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// `U[-a, a]` rescaled to unit variance.
    #[default]
    Standardized,
    /// Plain `U[-a, a]`.
    Raw,
    /// All innovations zero (deterministic skeleton).
    Zero,
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standardized" | "std" => Ok(NoiseMode::Standardized),
            "raw" => Ok(NoiseMode::Raw),
            "zero" | "none" => Ok(NoiseMode::Zero),
            other => Err(Error::Config(format!("unknown noise mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub phi0: f64,
    pub phi1: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub innovation_halfwidth: f64,
    pub burn_in: usize,
    pub noise: NoiseMode,
}

impl DgpSpec {
    pub fn new(kind: DgpKind) -> Self {
        DgpSpec {
            kind,
            phi0: 0.25,
            phi1: 0.1,
            alpha0: 0.5,
            alpha1: 0.5,
            innovation_halfwidth: 2.0,
            burn_in: 1000,
            noise: NoiseMode::Standardized,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1.abs() < 1.0) {
            return Err(Error::Stability(format!("|alpha1| = {} must be < 1", self.alpha1.abs())));
        }
        if !(self.phi0 > 0.0) || !(self.phi1 >= 0.0) {
            return Err(Error::Config("ARCH coefficients need phi0 > 0, phi1 >= 0".into()));
        }
        if !(self.innovation_halfwidth > 0.0) {
            return Err(Error::Config("innovation half-width must be positive".into()));
        }
        Ok(())
    }

    pub fn covariate_mean(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1)
    }

    fn innovation(&self, rng: &mut SpRng) -> f64 {
        match self.noise {
            NoiseMode::Standardized => std_uniform(self.innovation_halfwidth, rng),
            NoiseMode::Raw => rng.gen_range(-self.innovation_halfwidth..=self.innovation_halfwidth),
            NoiseMode::Zero => 0.0,
        }
    }
}

/// Draw from `U[-a, a]` rescaled by `√3/a`: mean 0, variance 1, support `[-√3, √3]`.
pub fn std_uniform(a: f64, rng: &mut SpRng) -> f64 {
    let u: f64 = rng.gen_range(-a..=a);
    u * 3f64.sqrt() / a
}

/// The AR(1) covariate alone, started at its stationary mean.
pub fn simulate_covariate(spec: &DgpSpec, n: usize, rng: &mut SpRng) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut x = spec.covariate_mean();
    let mut out = Vec::with_capacity(n);
    for t in 0..spec.burn_in + n {
        x = spec.alpha0 + spec.alpha1 * x + spec.innovation(rng);
        if t >= spec.burn_in {
            out.push(x);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub y: Vec<f64>,
    pub cov: Vec<f64>,
    /// ARCH errors `ε_t`, kept for diagnostics (empty for ingested data).
    pub eps: Vec<f64>,
    /// Standardized innovations `ξ_t` (empty for ingested data).
    pub xi: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// CSV with `# seed=` and `# rng=` comment lines and header `t,y,x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# rng={RNG_NAME}")?;
        writeln!(w, "t,y,x")?;
        for (t, (y, x)) in self.y.iter().zip(&self.cov).enumerate() {
            writeln!(w, "{},{},{}", t + 1, y, x)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Trajectory> {
        let mut seed = 0;
        let mut y = Vec::new();
        let mut cov = Vec::new();
        let mut header_seen = false;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(s) = c.trim().strip_prefix("seed=") {
                    seed = s.trim().parse().unwrap_or(0);
                }
                continue;
            }
            if !header_seen {
                if line != "t,y,x" {
                    return Err(Error::Parse { line: i + 1, msg: format!("expected header `t,y,x`, got `{line}`") });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: "expected 3 fields".into() });
            }
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad number `{s}`") })
            };
            y.push(num(fields[1])?);
            cov.push(num(fields[2])?);
        }
        Ok(Trajectory { y, cov, eps: Vec::new(), xi: Vec::new(), seed })
    }
}

/// Joint recursion of covariate, ARCH error and response from zero initial
/// conditions (covariate at its stationary mean); the first `burn_in` steps
/// are discarded.
pub fn simulate_arx_arch(spec: &DgpSpec, n: usize, rng: &mut SpRng, seed: u64) -> Result<Trajectory> {
    spec.validate()?;
    if let Some(coeffs) = spec.kind.lipschitz() {
        let report = check_stability(spec, coeffs);
        if !report.stable {
            log::warn!(
                "{:?} with phi1={} is outside the stability region (total {:.4})",
                spec.kind,
                spec.phi1,
                report.total
            );
        }
    }
    let mut x_prev = spec.covariate_mean();
    let (mut y1, mut y2) = (0.0, 0.0);
    let mut eps_prev = 0.0;
    let mut traj = Trajectory {
        y: Vec::with_capacity(n),
        cov: Vec::with_capacity(n),
        eps: Vec::with_capacity(n),
        xi: Vec::with_capacity(n),
        seed,
    };
    for t in 0..spec.burn_in + n {
        let eta = spec.innovation(rng);
        let xi = spec.innovation(rng);
        let x = spec.alpha0 + spec.alpha1 * x_prev + eta;
        let eps = xi * (spec.phi0 + spec.phi1 * eps_prev * eps_prev).sqrt();
        let y = target_f(&spec.kind, y1, y2, x_prev) + eps;
        if !y.is_finite() || !x.is_finite() {
            return Err(Error::SimulationDiverged { step: t });
        }
        if t >= spec.burn_in {
            traj.y.push(y);
            traj.cov.push(x);
            traj.eps.push(eps);
            traj.xi.push(xi);
        }
        y2 = y1;
        y1 = y;
        x_prev = x;
        eps_prev = eps;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub alpha1y_f: f64,
    pub alpha2y_f: f64,
    pub alpha1y_m: f64,
    pub alpha2y_m: f64,
    pub alpha1_cov: f64,
    pub total: f64,
    pub stable: bool,
}

/// Contraction condition
/// `max{α₁, α_{1,Y}(f) + α_{1,Y}(M)} + α_{2,Y}(f) + α_{2,Y}(M) < 1`
/// with `α_{1,Y}(M) = √φ₁ (1 + α_{1,Y}(f))`, `α_{2,Y}(M) = √φ₁ α_{2,Y}(f)`.
pub fn check_stability(spec: &DgpSpec, lipschitz_f: (f64, f64, f64)) -> StabilityReport {
    let (a1, a2, _ax) = lipschitz_f;
    let root = spec.phi1.sqrt();
    let alpha1y_m = root * (1.0 + a1);
    let alpha2y_m = root * a2;
    let alpha1_cov = spec.alpha1.abs();
    let total = alpha1_cov.max(a1 + alpha1y_m) + a2 + alpha2y_m;
    StabilityReport { alpha1y_f: a1, alpha2y_f: a2, alpha1y_m, alpha2y_m, alpha1_cov, total, stable: total < 1.0 }
}

/// Pairs `((Y_{t-1}, …, Y_{t-lags}, X_{t-1}), Y_t)` for `t = lags+1, …, n`.
pub fn make_supervised(traj: &Trajectory, lags: usize) -> Result<SupervisedSet> {
    let n = traj.len();
    if lags == 0 || n <= lags || traj.cov.len() != n {
        return Err(Error::Argument(format!("need more than {lags} observations with matching covariates, got {n}")));
    }
    let rows = n - lags;
    let d = lags + 1;
    let x = Array2::from_shape_fn((rows, d), |(i, k)| {
        let t = i + lags;
        if k < lags {
            traj.y[t - 1 - k]
        } else {
            traj.cov[t - 1]
        }
    });
    SupervisedSet::new(x, traj.y[lags..].to_vec())
}
