//! Numeric evaluation of the learning-theoretic quantities attached to the
//! estimator: covering numbers of sparse network classes, the uniform
//! concentration bound, the generalization thresholds `ε` and `ε'`, the
//! `(λ_n, τ_n, ρ_n)` tuning schedules and the Hölder-class rate exponents.
//!
//! All proportionality constants hidden in `≍` are set to 1; `λ_n` can be
//! rescaled through [`ScheduleParams::lambda_multiplier`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::Architecture;

/// `(L, N, B, S)` of a network class `H_σ(L, N, B, F, S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetClass {
    pub depth: f64,
    pub width: f64,
    pub weight_bound: f64,
    pub sparsity: f64,
}

impl NetClass {
    pub fn from_arch(arch: &Architecture) -> Self {
        NetClass {
            depth: arch.depth() as f64,
            width: arch.width() as f64,
            weight_bound: arch.weight_bound,
            sparsity: arch.sparsity_or_dense() as f64,
        }
    }

    /// `2L(S+1)`, the covering-number prefactor.
    fn entropy_factor(&self) -> f64 {
        2.0 * self.depth * (self.sparsity + 1.0)
    }

    /// `4 G C_σ L (N+1) (B ∨ 1)`.
    fn scale(&self, g: f64, c_sigma: f64) -> f64 {
        4.0 * g * c_sigma * self.depth * (self.width + 1.0) * self.weight_bound.max(1.0)
    }
}

/// Upper bound on `log N(H_σ(L,N,B,F,S), ε/(4G))`:
/// `2L(S+1) log(4 G C_σ L (N+1)(B∨1) / ε)`. Negative values are returned as is.
pub fn log_covering_bound(class: &NetClass, g: f64, c_sigma: f64, eps: f64) -> f64 {
    class.entropy_factor() * (class.scale(g, c_sigma) / eps).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: f64,
    pub eta: f64,
    pub nu0: f64,
    /// Loss bound `M`.
    pub m: f64,
    /// `θ_{∞,n}(1)` dependence bound.
    pub theta_inf: f64,
    pub g: f64,
    pub c_sigma: f64,
    pub class: NetClass,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.eta) || !open_unit(self.nu0) {
            return Err(Error::Argument("eta and nu0 must lie in (0, 1)".into()));
        }
        if !(self.n >= 1.0) || !(self.m > 0.0) || !(self.g > 0.0) || !(self.c_sigma > 0.0) || !(self.theta_inf >= 0.0) {
            return Err(Error::Argument("n >= 1, M, G, C_sigma > 0 and theta_inf >= 0 are required".into()));
        }
        Ok(())
    }

    /// `n^{2ν₀-1} (M + θ∞)² / 2`.
    fn dependence_term(&self) -> f64 {
        self.n.powf(2.0 * self.nu0 - 1.0) * (self.m + self.theta_inf).powi(2) / 2.0
    }

    /// `C₁ = 2L(S+1) log(4 G C_σ L (N+1)(B∨1))`.
    pub fn c1(&self) -> f64 {
        self.class.entropy_factor() * self.class.scale(self.g, self.c_sigma).ln()
    }
}

/// Right-hand side of the uniform concentration inequality, capped at 1.
pub fn concentration_bound(inputs: &BoundInputs, eps: f64) -> f64 {
    let log_bound = log_covering_bound(&inputs.class, inputs.g, inputs.c_sigma, eps) - inputs.n.powf(inputs.nu0) * eps
        + inputs.dependence_term();
    log_bound.exp().min(1.0)
}

/// `φ(ε) = 2L(S+1) log ε + n^{ν₀} ε − n^{2ν₀−1}(M+θ∞)²/2 + log η − C₁`.
pub fn phi(inputs: &BoundInputs, eps: f64) -> f64 {
    inputs.class.entropy_factor() * eps.ln() + inputs.n.powf(inputs.nu0) * eps - inputs.dependence_term()
        + inputs.eta.ln()
        - inputs.c1()
}

/// Sample-size conditions under which `φ` has its root below `2M/n^{ν₀/2}`.
///
/// The `literal_*` fields are the two displayed conditions. Because
/// `n^{ν₀} · 2M/n^{ν₀/2} = 2M n^{ν₀/2}`, positivity of `φ(2M/n^{ν₀/2})`
/// actually needs the `corrected_*` pair:
///
/// ```text
/// [L(S+1)ν₀ log n + n^{2ν₀-1}(M+θ∞)²/2] / (2M n^{ν₀/2}) < 1/2
/// M n^{ν₀/2} > (C₁ − 2L(S+1) log 2M − log η)₊
/// ```
///
/// which together give `φ(2M/n^{ν₀/2}) > M n^{ν₀/2} − (…)₊ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    /// Last integer violating the displayed `n₀` condition (0 if none found).
    pub n0: f64,
    pub literal_n0_ok: bool,
    /// `((C₁ − 2L(S+1) log 2M − log η)₊ / M)^{1/(2ν₀)}`.
    pub growth_threshold: f64,
    pub literal_growth_ok: bool,
    pub corrected_ratio: f64,
    pub corrected_ratio_ok: bool,
    /// `((…)₊ / M)^{2/ν₀}`.
    pub corrected_growth_threshold: f64,
    pub corrected_growth_ok: bool,
}

impl ThresholdReport {
    pub fn accepted(&self) -> bool {
        self.literal_n0_ok && self.literal_growth_ok && self.corrected_ratio_ok && self.corrected_growth_ok
    }

    fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.literal_n0_ok {
            out.push(format!("n <= n0 = {}", self.n0));
        }
        if !self.literal_growth_ok {
            out.push(format!("n <= {:.6e} (growth condition)", self.growth_threshold));
        }
        if !self.corrected_ratio_ok {
            out.push(format!("remainder ratio {:.6} >= 1/2", self.corrected_ratio));
        }
        if !self.corrected_growth_ok {
            out.push(format!("n <= {:.6e} (root-location condition)", self.corrected_growth_threshold));
        }
        out
    }
}

/// `K₊ = (C₁ − 2L(S+1) log 2M − log η)₊`.
fn excess_constant(inputs: &BoundInputs) -> f64 {
    (inputs.c1() - inputs.class.entropy_factor() * (2.0 * inputs.m).ln() - inputs.eta.ln()).max(0.0)
}

fn literal_n0_expr(inputs: &BoundInputs, n: f64) -> f64 {
    let ls = inputs.class.depth * (inputs.class.sparsity + 1.0);
    ls * inputs.nu0 * n.ln() / (2.0 * inputs.m * n.powf(inputs.nu0 / 2.0))
        + (inputs.m + inputs.theta_inf).powi(2) / (4.0 * inputs.m * n)
}

fn corrected_ratio(inputs: &BoundInputs, n: f64) -> f64 {
    let ls = inputs.class.depth * (inputs.class.sparsity + 1.0);
    let at = BoundInputs { n, ..*inputs };
    (ls * inputs.nu0 * n.ln() + at.dependence_term()) / (2.0 * inputs.m * n.powf(inputs.nu0 / 2.0))
}

/// Last integer `n ≤ 10¹⁵` where `expr(n) ≥ 1/2`, located on a geometric grid
/// and refined by bisection. Returns 0 when the condition never fails.
fn last_violation(expr: impl Fn(f64) -> f64) -> f64 {
    let mut grid = vec![1.0f64];
    while *grid.last().unwrap() < 1e15 {
        let next = (grid.last().unwrap() * 1.01).ceil().max(grid.last().unwrap() + 1.0);
        grid.push(next);
    }
    let Some(k) = grid.iter().rposition(|&n| expr(n) >= 0.5) else {
        return 0.0;
    };
    if k + 1 == grid.len() {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if expr(mid) >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn sample_size_report(inputs: &BoundInputs) -> ThresholdReport {
    let n = inputs.n;
    let k = excess_constant(inputs);
    let n0 = last_violation(|t| literal_n0_expr(inputs, t));
    let growth_threshold = (k / inputs.m).powf(1.0 / (2.0 * inputs.nu0));
    let ratio = corrected_ratio(inputs, n);
    let corrected_growth_threshold = (k / inputs.m).powf(2.0 / inputs.nu0);
    ThresholdReport {
        n0,
        literal_n0_ok: n > n0,
        growth_threshold,
        literal_growth_ok: n > growth_threshold,
        corrected_ratio: ratio,
        corrected_ratio_ok: ratio < 0.5,
        corrected_growth_threshold,
        corrected_growth_ok: n > corrected_growth_threshold,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationBound {
    /// Root of `φ`: bound on `R(ĥ) − R̂_n(ĥ)` with probability `1 − η`.
    pub eps1: f64,
    /// `(M+θ∞)²/(2n^{1−ν₀}) + log(1/η)/n^{ν₀}`.
    pub eps_prime: f64,
    /// `2M / n^{ν₀/2}`.
    pub eps1_cap: f64,
    pub thresholds: ThresholdReport,
}

/// `ε'` in closed form; defined for `η ∈ (0, 1]`.
pub fn eps_prime(inputs: &BoundInputs) -> f64 {
    (inputs.m + inputs.theta_inf).powi(2) / (2.0 * inputs.n.powf(1.0 - inputs.nu0))
        - inputs.eta.ln() / inputs.n.powf(inputs.nu0)
}

/// Smallest absolute gap the root search drives the bracket to.
pub const ROOT_TOL: f64 = 1e-12;

pub fn generalization_epsilon(inputs: &BoundInputs) -> Result<GeneralizationBound> {
    inputs.validate()?;
    let thresholds = sample_size_report(inputs);
    if !thresholds.accepted() {
        return Err(Error::BelowThreshold { n: inputs.n as u64, reason: thresholds.failures().join("; ") });
    }
    let eps1 = phi_root(inputs)?;
    let eps1_cap = 2.0 * inputs.m / inputs.n.powf(inputs.nu0 / 2.0);
    Ok(GeneralizationBound { eps1, eps_prime: eps_prime(inputs), eps1_cap, thresholds })
}

/// Unique root of the strictly increasing `φ` on `(1e-300·2M, 2M)` by
/// bisection, continued until the bracket stops shrinking in floating point.
pub fn phi_root(inputs: &BoundInputs) -> Result<f64> {
    let mut lo = 1e-300 * 2.0 * inputs.m;
    let mut hi = 2.0 * inputs.m;
    let (flo, fhi) = (phi(inputs, lo), phi(inputs, hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::RootBracket { lo, hi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(inputs, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(hi - lo <= ROOT_TOL);
    Ok(if phi(inputs, lo).abs() <= phi(inputs, hi).abs() { lo } else { hi })
}

/// Weak-dependence flavour selecting `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiKind {
    Theta,
    Eta,
    Kappa,
    Lambda,
}

impl PsiKind {
    pub fn psi(self, u: f64, v: f64) -> f64 {
        match self {
            PsiKind::Theta => 2.0 * v,
            PsiKind::Eta => u + v,
            PsiKind::Kappa => u * v,
            PsiKind::Lambda => (u + v + u * v) / 2.0,
        }
    }

    pub fn psi11(self) -> f64 {
        self.psi(1.0, 1.0)
    }
}

impl fmt::Display for PsiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsiKind::Theta => "theta",
            PsiKind::Eta => "eta",
            PsiKind::Kappa => "kappa",
            PsiKind::Lambda => "lambda",
        })
    }
}

impl FromStr for PsiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theta" => Ok(PsiKind::Theta),
            "eta" => Ok(PsiKind::Eta),
            "kappa" => Ok(PsiKind::Kappa),
            "lambda" => Ok(PsiKind::Lambda),
            other => Err(Error::Config(format!("unknown dependence kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceParams {
    pub psi_kind: PsiKind,
    pub l1: f64,
    pub l2: f64,
    pub mu: f64,
}

impl DependenceParams {
    /// `C_{1,n} = 4 M² Ψ(1,1) L₁`.
    pub fn c1n(&self, m: f64) -> f64 {
        4.0 * m * m * self.psi_kind.psi11() * self.l1
    }

    /// `C_{2,n} = 2 M L₂ max(2^{3+μ}/Ψ(1,1), 1)`.
    pub fn c2n(&self, m: f64) -> f64 {
        2.0 * m * self.l2 * (2f64.powf(3.0 + self.mu) / self.psi_kind.psi11()).max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoTheorem4 {
    pub rho: f64,
    /// `(μ+1)/(2μ+3)`.
    pub exponent: f64,
    pub c1n: f64,
    pub c2n: f64,
}

/// `ρ_n = (C₁/(2 C₂^{1/(μ+2)}))^{(μ+2)/(2μ+3)} / n^{(μ+1)/(2μ+3)}`.
pub fn rho_from_constants(c1n: f64, c2n: f64, mu: f64, n: f64) -> f64 {
    let base = c1n / (2.0 * c2n.powf(1.0 / (mu + 2.0)));
    base.powf((mu + 2.0) / (2.0 * mu + 3.0)) / n.powf(rate_exponent_theorem4(mu))
}

pub fn rate_exponent_theorem4(mu: f64) -> f64 {
    (mu + 1.0) / (2.0 * mu + 3.0)
}

pub fn rho_n_theorem4(dep: &DependenceParams, m_n: f64, n: f64) -> RhoTheorem4 {
    let c1n = dep.c1n(m_n);
    let c2n = dep.c2n(m_n);
    RhoTheorem4 { rho: rho_from_constants(c1n, c2n, dep.mu, n), exponent: rate_exponent_theorem4(dep.mu), c1n, c2n }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `θ∞`-weak dependence, `ρ_n = n^{-2ν₆}`.
    Theorem3,
    /// `ψ`-weak dependence with `(L₁, L₂, μ)`.
    Theorem4,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thm3" | "theorem3" => Ok(Regime::Theorem3),
            "thm4" | "theorem4" => Ok(Regime::Theorem4),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
    pub nu5: f64,
    pub nu6: f64,
    pub k_ell: f64,
    /// Loss bound `M_n` used for `C_{1,n}`, `C_{2,n}`.
    pub m_n: f64,
    pub lambda_multiplier: f64,
}

/// `(L_n, N_n, B_n)` used in the `τ_n` cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleArch {
    pub depth: f64,
    pub width: f64,
    pub weight_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// `(description, holds)` for each exponent constraint.
    pub checks: Vec<(String, bool)>,
}

impl RegimeReport {
    pub fn valid(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

pub fn regime_report(regime: Regime, p: &ScheduleParams, dep: &DependenceParams) -> RegimeReport {
    let mut checks = Vec::new();
    match regime {
        Regime::Theorem4 => {
            let lhs = p.nu1 + p.nu2 + p.nu4;
            let rhs = 1.0 / (dep.mu + 2.0);
            checks.push((format!("nu1 + nu2 + nu4 = {lhs} < 1/(mu+2) = {rhs}"), lhs < rhs));
        }
        Regime::Theorem3 => {
            let lhs = p.nu4 + 2.0 * p.nu6 + p.nu1 + p.nu2;
            checks.push((format!("nu4 + 2 nu6 + nu1 + nu2 = {lhs} < nu5 = {}", p.nu5), lhs < p.nu5));
            let rhs = (1.0 - p.nu5) / 2.0;
            checks.push((format!("nu6 = {} < (1 - nu5)/2 = {rhs}", p.nu6), p.nu6 < rhs));
            checks.push((format!("nu5 = {} in (0, 1)", p.nu5), p.nu5 > 0.0 && p.nu5 < 1.0));
        }
    }
    checks.push(("nu1, nu2, nu3, nu4 > 0".into(), p.nu1 > 0.0 && p.nu2 > 0.0 && p.nu3 > 0.0 && p.nu4 > 0.0));
    RegimeReport { checks }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub lambda_n: f64,
    pub tau_n_max: f64,
    pub rho_n: f64,
    pub report: RegimeReport,
}

/// `λ_n = c (log n)^{ν₃} / n^{ν₄}`.
pub fn lambda_n(p: &ScheduleParams, n: f64) -> f64 {
    p.lambda_multiplier * n.ln().powf(p.nu3) / n.powf(p.nu4)
}

/// `τ_n ≤ ρ_n / (4 K_ℓ (L+1) ((N+1) B)^{L+1})`.
pub fn tau_cap(rho: f64, k_ell: f64, arch: &ScheduleArch) -> f64 {
    rho / (4.0 * k_ell * (arch.depth + 1.0) * ((arch.width + 1.0) * arch.weight_bound).powf(arch.depth + 1.0))
}

pub fn schedule(
    regime: Regime,
    p: &ScheduleParams,
    dep: &DependenceParams,
    arch: &ScheduleArch,
    n: f64,
) -> Result<Schedule> {
    let report = regime_report(regime, p, dep);
    if !report.valid() {
        let violated: Vec<&str> = report.checks.iter().filter(|(_, ok)| !ok).map(|(s, _)| s.as_str()).collect();
        return Err(Error::Regime(violated.join("; ")));
    }
    let rho_n = match regime {
        Regime::Theorem3 => n.powf(-2.0 * p.nu6),
        Regime::Theorem4 => rho_n_theorem4(dep, p.m_n, n).rho,
    };
    Ok(Schedule { lambda_n: lambda_n(p, n), tau_n_max: tau_cap(rho_n, p.k_ell, arch), rho_n, report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderRate {
    /// `ν₄ / (1 + d/s)`, the approximation/estimation exponent.
    pub approximation_exponent: f64,
    /// `2ν₆`, the penalty-remainder exponent.
    pub remainder_exponent: f64,
    /// Exponent of the slower of the two terms.
    pub exponent: f64,
    pub log_power: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub rate: String,
}

pub fn holder_rate(s: f64, d: f64, nu3: f64, nu4: f64, nu6: f64) -> Result<HolderRate> {
    if !(s > 0.0) || !(d >= 1.0) {
        return Err(Error::Argument("need smoothness s > 0 and dimension d >= 1".into()));
    }
    let ratio = 1.0 + d / s;
    let approximation_exponent = nu4 / ratio;
    let remainder_exponent = 2.0 * nu6;
    let log_power = nu3 + 1.0;
    Ok(HolderRate {
        approximation_exponent,
        remainder_exponent,
        exponent: approximation_exponent.min(remainder_exponent),
        log_power,
        nu1: d * nu4 / (s * ratio),
        nu2: 4.0 * d * nu4 / ((s + 1.0) * ratio),
        rate: format!("O((log n)^{log_power} n^-{approximation_exponent}) v O(n^-{remainder_exponent})"),
    })
}

/// Supremum over admissible `(ν₄, ν₅, ν₆)` of the overall exponent
/// `min(ν₄/(1+d/s), 2ν₆)` under `ν₄ + 2ν₆ + ν₁ + ν₂ < ν₅`, `ν₆ < (1−ν₅)/2`,
/// with `ν₁, ν₂` tied to `ν₄` as in the Hölder choice. Equals `k/(1+2k)` with
/// `k = 1/((1+c)(1+d/s))`, `c = (ν₁+ν₂)/ν₄`; tends to 1/3 as `s/d → ∞`.
pub fn best_holder_exponent(s: f64, d: f64) -> f64 {
    let ratio = 1.0 + d / s;
    let c = d / (s * ratio) + 4.0 * d / ((s + 1.0) * ratio);
    let k = 1.0 / ((1.0 + c) * ratio);
    k / (1.0 + 2.0 * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_class() -> NetClass {
        NetClass { depth: 1.0, width: 1.0, weight_bound: 1.0, sparsity: 1.0 }
    }

    fn inputs(n: f64, eta: f64, nu0: f64, m: f64) -> BoundInputs {
        BoundInputs {
            n,
            eta,
            nu0,
            m,
            theta_inf: 0.5,
            g: 1.0,
            c_sigma: 1.0,
            class: NetClass { depth: 2.0, width: 10.0, weight_bound: 1.0, sparsity: 20.0 },
        }
    }

    #[test]
    fn covering_examples() {
        let c = unit_class();
        assert!((log_covering_bound(&c, 1.0, 1.0, 4.0) - 4.0 * 2f64.ln()).abs() < 1e-15);
        assert!((log_covering_bound(&c, 1.0, 1.0, 4.0 * 2.0) - 0.0).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let v = log_covering_bound(&c, 1.0, 1.0, k as f64 * 0.1);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn concentration_examples() {
        let mut inp = inputs(100.0, 0.1, 0.5, 1.0);
        assert_eq!(concentration_bound(&inp, 1e6), 0.0);
        let mut prev = 1.0;
        for k in 1..200 {
            let b = concentration_bound(&inp, k as f64 * 0.05);
            assert!((0.0..=1.0).contains(&b));
            assert!(b <= prev);
            prev = b;
        }
        // nondecreasing in theta_inf
        let lo = concentration_bound(&inp, 2.0);
        inp.theta_inf = 3.0;
        assert!(concentration_bound(&inp, 2.0) >= lo);
    }

    #[test]
    fn concentration_double_evaluation() {
        let inp = BoundInputs {
            n: 1e4,
            eta: 0.5,
            nu0: 0.5,
            m: 1.0,
            theta_inf: 0.0,
            g: 1.0,
            c_sigma: 1.0,
            class: unit_class(),
        };
        // independent arithmetic: N ≤ (4·1·1·1·2·1/1)^{2·1·2} = 8^4, exp(-100 + 1/2)
        let direct = 8f64.powi(4) * (-100.0f64 + 0.5).exp();
        let v = concentration_bound(&inp, 1.0);
        assert!((v - direct).abs() <= 1e-12 * direct, "{v} vs {direct}");
    }

    #[test]
    fn psi_values() {
        assert_eq!(PsiKind::Theta.psi11(), 2.0);
        assert_eq!(PsiKind::Eta.psi11(), 2.0);
        assert_eq!(PsiKind::Kappa.psi11(), 1.0);
        assert_eq!(PsiKind::Lambda.psi11(), 1.5);
    }

    #[test]
    fn generalization_root_and_contract() {
        let mut inp = inputs(1e8, 0.05, 0.5, 1.0);
        inp.class = NetClass { depth: 1.0, width: 2.0, weight_bound: 1.0, sparsity: 2.0 };
        let gb = match generalization_epsilon(&inp) {
            Ok(g) => g,
            Err(e) => panic!("{e}"),
        };
        assert!(phi(&inp, gb.eps1).abs() < 1e-10);
        assert!(gb.eps1 < gb.eps1_cap);
        assert!(gb.eps1 > 0.0);
    }

    #[test]
    fn eps_prime_at_unit_eta_drops_log_term() {
        let mut inp = inputs(1e4, 0.3, 0.4, 2.0);
        inp.eta = 1.0;
        let expected = (2.0f64 + 0.5).powi(2) / (2.0 * 1e4f64.powf(0.6));
        assert!((eps_prime(&inp) - expected).abs() < 1e-15);
    }

    #[test]
    fn below_threshold_and_invalid_inputs() {
        let inp = inputs(10.0, 0.05, 0.5, 1.0);
        assert!(matches!(generalization_epsilon(&inp), Err(Error::BelowThreshold { .. })));
        let bad = inputs(1e6, 1.5, 0.5, 1.0);
        assert!(matches!(generalization_epsilon(&bad), Err(Error::Argument(_))));
    }

    #[test]
    fn literal_conditions_alone_do_not_locate_the_root() {
        // For nu0 > 2/3 the displayed conditions hold at large n while the
        // root exceeds 2M/n^{nu0/2}; the corrected check rejects such inputs.
        let inp = inputs(1e12, 0.5, 0.9, 1.0);
        let rep = sample_size_report(&inp);
        assert!(rep.literal_n0_ok && rep.literal_growth_ok);
        assert!(!rep.corrected_ratio_ok);
        let root = phi_root(&inp).unwrap();
        assert!(root > 2.0 * inp.m / inp.n.powf(inp.nu0 / 2.0));
        assert!(generalization_epsilon(&inp).is_err());
    }

    #[test]
    fn phi_is_increasing() {
        let inp = inputs(1e5, 0.1, 0.5, 1.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=1000 {
            let v = phi(&inp, 2.0 * inp.m * k as f64 / 1000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rate_exponent_theorem4(0.0), 1.0 / 3.0);
        let rho = rho_from_constants(2.0, 2.0, 0.0, 1000.0);
        let hand = 2f64.powf(-1.0 / 3.0) / 10.0;
        assert!((rho - hand).abs() < 1e-12);
        assert!((rho - 0.079370).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for n in [10.0, 100.0, 1e3, 1e4, 1e5] {
            let r = rho_from_constants(2.0, 2.0, 0.5, n);
            assert!(r < prev);
            prev = r;
        }
        let dep = DependenceParams { psi_kind: PsiKind::Kappa, l1: 0.5, l2: 1.0, mu: 0.0 };
        let r = rho_n_theorem4(&dep, 1.0, 1000.0);
        assert_eq!(r.c1n, 2.0);
        assert_eq!(r.c2n, 16.0);
    }

    fn params() -> ScheduleParams {
        ScheduleParams {
            nu1: 0.05,
            nu2: 0.05,
            nu3: 1.0,
            nu4: 0.2,
            nu5: 0.6,
            nu6: 0.1,
            k_ell: 1.0,
            m_n: 1.0,
            lambda_multiplier: 1.0,
        }
    }

    #[test]
    fn schedule_examples() {
        let dep = DependenceParams { psi_kind: PsiKind::Theta, l1: 1.0, l2: 1.0, mu: 0.0 };
        let arch = ScheduleArch { depth: 2.0, width: 100.0, weight_bound: 1.0 };
        let s = schedule(Regime::Theorem3, &params(), &dep, &arch, 1e4).unwrap();
        assert!((s.rho_n - 10f64.powf(-0.8)).abs() < 1e-15);
        assert!((s.rho_n - 0.158489).abs() < 1e-6);
        assert!(s.tau_n_max > 0.0);

        let p = ScheduleParams { nu3: 1.0, nu4: 1.0, ..params() };
        assert!((lambda_n(&p, std::f64::consts::E) - (-1.0f64).exp()).abs() < 1e-15);

        let s4 = schedule(Regime::Theorem4, &params(), &dep, &arch, 1e4).unwrap();
        assert!(s4.report.valid());
        assert!(s4.rho_n > 0.0 && s4.tau_n_max > 0.0);

        let bad = ScheduleParams { nu4: 0.6, ..params() };
        assert!(matches!(schedule(Regime::Theorem4, &bad, &dep, &arch, 1e4), Err(Error::Regime(_))));
        assert!(matches!(schedule(Regime::Theorem3, &bad, &dep, &arch, 1e4), Err(Error::Regime(_))));
    }

    #[test]
    fn holder_examples() {
        let r = holder_rate(3.0, 3.0, 1.0, 0.5, 0.1).unwrap();
        assert!((r.approximation_exponent - 0.25).abs() < 1e-15);
        assert!((r.nu1 - 0.25).abs() < 1e-15);
        let smooth = holder_rate(1e12, 3.0, 1.0, 2.0 / 3.0, 0.1).unwrap();
        assert!((smooth.approximation_exponent - 2.0 / 3.0).abs() < 1e-9);
        assert!((best_holder_exponent(1e12, 3.0) - 1.0 / 3.0).abs() < 1e-9);
        assert!(best_holder_exponent(3.0, 3.0) < 1.0 / 3.0);
        assert!(holder_rate(0.0, 3.0, 1.0, 0.5, 0.1).is_err());
    }
}
