//! Shared domain types: model parameters, disorder laws, log-space weights
//! and the one-step renormalization map.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// The quadruple `(b, s, beta, h)`.
///
/// `b` is the number of parallel branches replacing a bond, `s` the number of
/// bonds in series on each branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub b: usize,
    pub s: usize,
    pub beta: f64,
    pub h: f64,
}

/// Relative size of `b` and `s`; the marginal case `b = s` is the one with
/// an infinite-order transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `b = s`
    Equal,
    /// `s > b`
    Relevant,
    /// `b > s`
    Other,
}

impl ModelParams {
    pub fn new(b: usize, s: usize, beta: f64, h: f64) -> Result<Self> {
        let p = Self { b, s, beta, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 || self.s < 2 {
            return Err(Error::InvalidParams(format!(
                "need b >= 2 and s >= 2, got b={} s={}",
                self.b, self.s
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if !self.h.is_finite() {
            return Err(Error::InvalidParams(format!(
                "h must be finite, got {}",
                self.h
            )));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        use std::cmp::Ordering::*;
        match self.s.cmp(&self.b) {
            Equal => Regime::Equal,
            Greater => Regime::Relevant,
            Less => Regime::Other,
        }
    }

    pub(crate) fn require_equal(&self, what: &str) -> Result<()> {
        if self.regime() != Regime::Equal {
            return Err(Error::Domain(format!(
                "{what} requires b = s, got b={} s={}",
                self.b, self.s
            )));
        }
        Ok(())
    }

    pub fn with_h(self, h: f64) -> Self {
        Self { h, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }
}

/// Law of the bond disorder `omega`.
#[derive(Debug, Clone, PartialEq)]
pub enum DisorderLaw {
    StandardGaussian,
    /// `omega = +1` or `-1` with probability 1/2 each.
    FairSigns,
    FiniteDiscrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
}

const PROB_SUM_TOL: f64 = 1e-12;

impl DisorderLaw {
    pub fn validate(&self) -> Result<()> {
        if let DisorderLaw::FiniteDiscrete { values, probs } = self {
            if values.is_empty() || values.len() != probs.len() {
                return Err(Error::InvalidLaw(format!(
                    "{} values vs {} probabilities",
                    values.len(),
                    probs.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidLaw("non-finite support point".into()));
            }
            if probs.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::InvalidLaw("negative probability".into()));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidLaw(format!(
                    "probabilities sum to {total}, not 1"
                )));
            }
        }
        Ok(())
    }

    /// Short descriptor used in exported records, e.g. `gaussian`.
    pub fn descriptor(&self) -> String {
        match self {
            DisorderLaw::StandardGaussian => "gaussian".into(),
            DisorderLaw::FairSigns => "signs".into(),
            DisorderLaw::FiniteDiscrete { values, probs } => {
                let pts: Vec<String> = values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| format!("{v}:{p}"))
                    .collect();
                format!("discrete[{}]", pts.join(";"))
            }
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DisorderLaw::StandardGaussian => rng.sample(StandardNormal),
            DisorderLaw::FairSigns => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DisorderLaw::FiniteDiscrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
        }
    }
}

/// Parses the [`DisorderLaw::descriptor`] form: `gaussian`, `signs`, or
/// `discrete[v1:p1;v2:p2;...]`.
impl std::str::FromStr for DisorderLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let law = match s.trim() {
            "gaussian" => DisorderLaw::StandardGaussian,
            "signs" => DisorderLaw::FairSigns,
            other => {
                let body = other
                    .strip_prefix("discrete[")
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(|| {
                        Error::InvalidLaw(format!(
                            "unknown law `{other}` (expected gaussian, signs or discrete[v:p;...])"
                        ))
                    })?;
                let mut values = Vec::new();
                let mut probs = Vec::new();
                for atom in body.split(';') {
                    let (v, p) = atom.split_once(':').ok_or_else(|| {
                        Error::InvalidLaw(format!("atom `{atom}` is not value:prob"))
                    })?;
                    let num = |x: &str| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidLaw(format!("`{x}` is not a number")))
                    };
                    values.push(num(v)?);
                    probs.push(num(p)?);
                }
                DisorderLaw::FiniteDiscrete { values, probs }
            }
        };
        law.validate()?;
        Ok(law)
    }
}

/// `log E[exp(beta * omega)]` in closed form.
pub fn log_m(law: &DisorderLaw, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    law.validate()?;
    Ok(match law {
        DisorderLaw::StandardGaussian => 0.5 * beta * beta,
        // log cosh, stable for large beta
        DisorderLaw::FairSigns => beta + (-2.0 * beta).exp().ln_1p() - std::f64::consts::LN_2,
        DisorderLaw::FiniteDiscrete { values, probs } => {
            let terms: Vec<f64> = values
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(v, p)| p.ln() + beta * v)
                .collect();
            log_sum_exp(&terms)
        }
    })
}

/// Natural logarithm of a (strictly positive) partition function.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[repr(transparent)]
pub struct LogWeight(pub f64);

impl LogWeight {
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Draws `log R_0 = beta * omega + h - log M(beta)` with `logM` cached.
#[derive(Debug, Clone)]
pub struct InitialSampler {
    law: DisorderLaw,
    beta: f64,
    shift: f64,
}

impl InitialSampler {
    pub fn new(law: &DisorderLaw, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let lm = log_m(law, params.beta)?;
        Ok(Self {
            law: law.clone(),
            beta: params.beta,
            shift: params.h - lm,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LogWeight {
        if self.beta == 0.0 {
            return LogWeight(self.shift);
        }
        LogWeight(self.beta * self.law.draw(rng) + self.shift)
    }
}

/// One draw of the initial log-weight; see [`InitialSampler`] for repeated use.
pub fn sample_initial<R: Rng + ?Sized>(
    law: &DisorderLaw,
    params: &ModelParams,
    rng: &mut R,
) -> Result<LogWeight> {
    Ok(InitialSampler::new(law, params)?.sample(rng))
}

/// `log((exp(sum) + b - 1) / b)` without overflow or cancellation.
///
/// Above `sum = 1` the factored form `sum - log b + log1p((b-1) e^-sum)` is
/// used; below it, `log1p(expm1(sum) / b)`, which keeps full relative
/// accuracy as `sum -> 0`.
#[inline]
pub fn branch_average(sum: f64, b: usize) -> f64 {
    let bf = b as f64;
    if sum > 1.0 {
        sum - bf.ln() + ((bf - 1.0) * (-sum).exp()).ln_1p()
    } else {
        (sum.exp_m1() / bf).ln_1p()
    }
}

/// One application of the renormalization map to `s` child log-weights:
/// `log((prod_j R_j + b - 1) / b)`.
pub fn combine_children(children: &[LogWeight], s: usize, b: usize) -> Result<LogWeight> {
    if children.len() != s {
        return Err(Error::Arity {
            expected: s,
            got: children.len(),
        });
    }
    Ok(LogWeight(branch_average(
        children.iter().map(|c| c.0).sum(),
        b,
    )))
}

/// Reduces `s^n` leaf log-weights to the level-`n` log partition function by
/// applying [`combine_children`] to consecutive groups of `s`, level by level.
pub fn reduce_leaves(leaves: &[LogWeight], s: usize, b: usize) -> Result<LogWeight> {
    if leaves.is_empty() {
        return Err(Error::Arity {
            expected: 1,
            got: 0,
        });
    }
    let mut cur: Vec<LogWeight> = leaves.to_vec();
    while cur.len() > 1 {
        if !cur.len().is_multiple_of(s) {
            return Err(Error::Arity {
                expected: s * cur.len().div_ceil(s),
                got: cur.len(),
            });
        }
        cur = cur
            .chunks_exact(s)
            .map(|c| combine_children(c, s, b))
            .collect::<Result<_>>()?;
    }
    Ok(cur[0])
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
