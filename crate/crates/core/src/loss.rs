//! Losses, their Lipschitz/boundedness constants, and risks.
//!
//! Any type implementing [`Loss`] plugs into training, tuning and the bound
//! calculators. The shipped losses are absolute (L1) and squared (L2) error.

use std::fmt;
use std::str::FromStr;

use crate::data::SupervisedSet;
use crate::error::{Error, Result};
use crate::network::{Architecture, Network};

/// Constants of a loss on a bounded working domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    /// Lipschitz constant `K_ℓ` w.r.t. `|u - u'| + |y - y'|`.
    pub k_ell: f64,
    /// Bound `M` on the loss over the working box.
    pub m: f64,
    /// Lipschitz constant `G` of the loss class w.r.t. the sup-norm of predictors.
    pub g: f64,
}

pub trait Loss: Send + Sync {
    fn eval(&self, pred: f64, y: f64) -> f64;

    /// A (sub)derivative of the loss w.r.t. the prediction.
    fn derivative(&self, pred: f64, y: f64) -> f64;

    /// Constants on the box `|pred| ≤ output_bound`, `|y| ≤ target bound`.
    fn constants(&self, output_bound: f64) -> LossConstants;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossVariant {
    L1,
    L2,
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::L1 => "l1",
            LossVariant::L2 => "l2",
        })
    }
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LossVariant::L1),
            "l2" => Ok(LossVariant::L2),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

/// A shipped loss with the radius of its target domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossKind {
    pub variant: LossVariant,
    pub domain_bound: f64,
}

impl LossKind {
    pub const DEFAULT_DOMAIN_BOUND: f64 = 1e3;

    pub fn l1() -> Self {
        LossKind { variant: LossVariant::L1, domain_bound: Self::DEFAULT_DOMAIN_BOUND }
    }

    pub fn l2() -> Self {
        LossKind { variant: LossVariant::L2, domain_bound: Self::DEFAULT_DOMAIN_BOUND }
    }

    pub fn with_domain_bound(mut self, bound: f64) -> Self {
        self.domain_bound = bound;
        self
    }
}

impl From<LossVariant> for LossKind {
    fn from(variant: LossVariant) -> Self {
        LossKind { variant, domain_bound: Self::DEFAULT_DOMAIN_BOUND }
    }
}

impl Loss for LossKind {
    #[inline]
    fn eval(&self, pred: f64, y: f64) -> f64 {
        let r = pred - y;
        match self.variant {
            LossVariant::L1 => r.abs(),
            LossVariant::L2 => r * r,
        }
    }

    #[inline]
    fn derivative(&self, pred: f64, y: f64) -> f64 {
        let r = pred - y;
        match self.variant {
            LossVariant::L1 => {
                if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            LossVariant::L2 => 2.0 * r,
        }
    }

    fn constants(&self, output_bound: f64) -> LossConstants {
        constants_on_box(self.variant, output_bound, self.domain_bound)
    }

    fn name(&self) -> &str {
        match self.variant {
            LossVariant::L1 => "l1",
            LossVariant::L2 => "l2",
        }
    }
}

/// `K_ℓ`, `M`, `G` for predictions in `[-f, f]` and targets in `[-d, d]`.
pub fn constants_on_box(variant: LossVariant, f: f64, d: f64) -> LossConstants {
    let reach = f + d;
    match variant {
        LossVariant::L1 => LossConstants { k_ell: 1.0, m: reach, g: 1.0 },
        LossVariant::L2 => {
            // |(u-y)² - (u'-y')²| ≤ |(u-y)+(u'-y')| · (|u-u'| + |y-y'|)
            let k = 2.0 * reach;
            LossConstants { k_ell: k, m: reach * reach, g: k }
        }
    }
}

pub fn lipschitz_constants(kind: &LossKind, arch: &Architecture) -> LossConstants {
    kind.constants(arch.output_bound)
}

pub fn loss_eval(kind: &LossKind, pred: f64, y: f64) -> Result<f64> {
    if !pred.is_finite() || !y.is_finite() {
        return Err(Error::Numeric(format!("loss input ({pred}, {y})")));
    }
    Ok(kind.eval(pred, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub n: usize,
}

pub fn empirical_risk<L: Loss + ?Sized>(net: &Network, data: &SupervisedSet, loss: &L) -> Result<RiskEstimate> {
    if data.is_empty() {
        return Err(Error::Argument("empirical risk of an empty dataset".into()));
    }
    let preds = net.forward_batch(data.x())?;
    Ok(RiskEstimate { value: mean_loss(&preds, data.y(), loss), n: data.len() })
}

pub(crate) fn mean_loss<L: Loss + ?Sized>(preds: &[f64], y: &[f64], loss: &L) -> f64 {
    preds.iter().zip(y).map(|(&p, &t)| loss.eval(p, t)).sum::<f64>() / preds.len() as f64
}
