//! Thresholding procedures: every procedure selects `Ŝ = { i : x(i) ≥ t }`
//! for a threshold `t` that may depend on the data.
//!
//! The procedures work on the statistic scale through a [`NullModel`], so the
//! same code serves the chi-square model and the one-sided Gaussian model.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{self, ChiSqParams};
use crate::error::{domain, Error, Result};

/// Null marginal law of the statistics, seen through its survival function.
pub trait NullModel: Send + Sync {
    /// `F̄₀(x) = P₀[X > x]`; nonincreasing, values in `[0, 1]`.
    fn survival(&self, x: f64) -> f64;

    /// `F̄₀⁻¹(y)` for `y ∈ (0, 1)`.
    fn inverse_survival(&self, y: f64) -> Result<f64>;
}

/// Central chi-square null with `nu` degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquareNull {
    params: ChiSqParams,
}

impl ChiSquareNull {
    pub fn new(nu: u32) -> Result<Self> {
        Ok(Self {
            params: ChiSqParams::central(nu)?,
        })
    }
}

impl NullModel for ChiSquareNull {
    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else if x.is_nan() {
            f64::NAN
        } else {
            distributions::chisq_sf(x, self.params).unwrap_or(f64::NAN)
        }
    }

    fn inverse_survival(&self, y: f64) -> Result<f64> {
        distributions::chisq_isf(y, self.params)
    }
}

/// Standard normal null (one-sided alternatives).
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianNull;

impl NullModel for GaussianNull {
    fn survival(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            0.0
        } else if x == f64::NEG_INFINITY {
            1.0
        } else {
            distributions::normal_sf(x).unwrap_or(f64::NAN)
        }
    }

    fn inverse_survival(&self, y: f64) -> Result<f64> {
        distributions::normal_isf(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcedureId {
    Bonferroni,
    Sidak,
    Holm,
    Hochberg,
    BenjaminiHochberg,
    OracleExact,
    OracleApprox,
}

impl ProcedureId {
    pub const ALL: [ProcedureId; 7] = [
        ProcedureId::Bonferroni,
        ProcedureId::Sidak,
        ProcedureId::Holm,
        ProcedureId::Hochberg,
        ProcedureId::BenjaminiHochberg,
        ProcedureId::OracleExact,
        ProcedureId::OracleApprox,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProcedureId::Bonferroni => "bonferroni",
            ProcedureId::Sidak => "sidak",
            ProcedureId::Holm => "holm",
            ProcedureId::Hochberg => "hochberg",
            ProcedureId::BenjaminiHochberg => "bh",
            ProcedureId::OracleExact => "oracle_exact",
            ProcedureId::OracleApprox => "oracle_approx",
        }
    }

    /// Oracle procedures read the true support instead of a level.
    pub fn is_oracle(self) -> bool {
        matches!(self, ProcedureId::OracleExact | ProcedureId::OracleApprox)
    }
}

impl fmt::Display for ProcedureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcedureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "bonferroni" => ProcedureId::Bonferroni,
            "sidak" => ProcedureId::Sidak,
            "holm" => ProcedureId::Holm,
            "hochberg" => ProcedureId::Hochberg,
            "bh" | "benjamini_hochberg" | "benjamini-hochberg" => ProcedureId::BenjaminiHochberg,
            "oracle_exact" | "oracle-exact" => ProcedureId::OracleExact,
            "oracle_approx" | "oracle-approx" => ProcedureId::OracleApprox,
            other => return Err(domain(format!("unknown procedure `{other}`"))),
        })
    }
}

/// Estimated support together with the realized threshold.
///
/// `selected` holds zero-based indices in increasing order and always equals
/// `{ i : x(i) ≥ threshold }`; an empty selection has threshold `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selected: Vec<usize>,
    pub threshold: f64,
    pub procedure: ProcedureId,
}

impl SelectionResult {
    fn from_threshold(x: &[f64], threshold: f64, procedure: ProcedureId) -> Self {
        let selected = if threshold == f64::INFINITY {
            Vec::new()
        } else {
            x.iter()
                .enumerate()
                .filter(|(_, &v)| v >= threshold)
                .map(|(i, _)| i)
                .collect()
        };
        Self {
            selected,
            threshold,
            procedure,
        }
    }

    fn empty(procedure: ProcedureId) -> Self {
        Self {
            selected: Vec::new(),
            threshold: f64::INFINITY,
            procedure,
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

fn check_inputs(x: &[f64], alpha: f64) -> Result<()> {
    if x.is_empty() {
        return Err(domain("statistic vector is empty"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("level must lie in (0, 1), got {alpha}")));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(domain(format!("statistic x({i}) is not finite")));
    }
    Ok(())
}

/// Indices sorted by value descending, ties by index ascending.
fn descending_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].partial_cmp(&x[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Null survival of the order statistics `x_[1] ≥ … ≥ x_[p]`.
fn sorted_survivals(x: &[f64], order: &[usize], null: &dyn NullModel) -> Vec<f64> {
    order.iter().map(|&i| null.survival(x[i])).collect()
}

/// Bonferroni: `t = F⁻¹(1 − α/p)`.
pub fn bonferroni(x: &[f64], alpha: f64, null: &dyn NullModel) -> Result<SelectionResult> {
    check_inputs(x, alpha)?;
    let p = x.len() as f64;
    let t = null.inverse_survival(alpha / p)?;
    Ok(SelectionResult::from_threshold(x, t, ProcedureId::Bonferroni))
}

/// Šidák: `t = F⁻¹((1 − α)^{1/p})`.
pub fn sidak(x: &[f64], alpha: f64, null: &dyn NullModel) -> Result<SelectionResult> {
    check_inputs(x, alpha)?;
    let p = x.len() as f64;
    // 1 - (1-α)^{1/p} without cancellation
    let tail = -((1.0 - alpha).ln() / p).exp_m1();
    let t = null.inverse_survival(tail)?;
    Ok(SelectionResult::from_threshold(x, t, ProcedureId::Sidak))
}

/// Holm step-down: the largest `i*` such that `F̄(x_[i]) ≤ α/(p−i+1)` for
/// every `i ≤ i*`.
pub fn holm(x: &[f64], alpha: f64, null: &dyn NullModel) -> Result<SelectionResult> {
    check_inputs(x, alpha)?;
    let p = x.len();
    let order = descending_order(x);
    let mut last = None;
    for (rank0, &idx) in order.iter().enumerate() {
        let level = alpha / (p - rank0) as f64;
        if null.survival(x[idx]) <= level {
            last = Some(idx);
        } else {
            break;
        }
    }
    Ok(match last {
        Some(idx) => SelectionResult::from_threshold(x, x[idx], ProcedureId::Holm),
        None => SelectionResult::empty(ProcedureId::Holm),
    })
}

/// Hochberg step-up: the largest `i` with `F̄(x_[i]) ≤ α/(p−i+1)`.
pub fn hochberg(x: &[f64], alpha: f64, null: &dyn NullModel) -> Result<SelectionResult> {
    check_inputs(x, alpha)?;
    let p = x.len();
    let order = descending_order(x);
    let surv = sorted_survivals(x, &order, null);
    let hit = (0..p)
        .rev()
        .find(|&rank0| surv[rank0] <= alpha / (p - rank0) as f64);
    Ok(match hit {
        Some(rank0) => {
            SelectionResult::from_threshold(x, x[order[rank0]], ProcedureId::Hochberg)
        }
        None => SelectionResult::empty(ProcedureId::Hochberg),
    })
}

/// Benjamini–Hochberg: the largest `i` with `F̄(x_[i]) ≤ α·i/p`.
pub fn benjamini_hochberg(
    x: &[f64],
    alpha: f64,
    null: &dyn NullModel,
) -> Result<SelectionResult> {
    check_inputs(x, alpha)?;
    let p = x.len();
    let order = descending_order(x);
    let surv = sorted_survivals(x, &order, null);
    let hit = (0..p)
        .rev()
        .find(|&rank0| surv[rank0] <= alpha * (rank0 + 1) as f64 / p as f64);
    Ok(match hit {
        Some(rank0) => SelectionResult::from_threshold(
            x,
            x[order[rank0]],
            ProcedureId::BenjaminiHochberg,
        ),
        None => SelectionResult::empty(ProcedureId::BenjaminiHochberg),
    })
}

/// Benjamini–Hochberg through its crossing characterization
/// `τ = inf{ t : F̄₀(t) ≤ α·Ĝ(t) }`, with `Ĝ(t) = #{ j : x(j) ≥ t } / p`.
///
/// Between consecutive observations `Ĝ` is constant while `F̄₀` decreases,
/// so the infimum is attained in set terms at an observed value; this scans
/// them from the smallest upward.
pub fn benjamini_hochberg_crossing(
    x: &[f64],
    alpha: f64,
    null: &dyn NullModel,
) -> Result<SelectionResult> {
    check_inputs(x, alpha)?;
    let p = x.len() as f64;
    let mut ascending = x.to_vec();
    ascending.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    ascending.dedup();
    for &t in &ascending {
        let at_or_above = x.iter().filter(|&&v| v >= t).count() as f64;
        if null.survival(t) <= alpha * at_or_above / p {
            return Ok(SelectionResult::from_threshold(
                x,
                t,
                ProcedureId::BenjaminiHochberg,
            ));
        }
    }
    Ok(SelectionResult::empty(ProcedureId::BenjaminiHochberg))
}

fn check_support(x: &[f64], support: &[usize]) -> Result<()> {
    if let Some(&i) = support.iter().find(|&&i| i >= x.len()) {
        return Err(domain(format!(
            "support index {i} out of range for p = {}",
            x.len()
        )));
    }
    Ok(())
}

/// Exact-recovery oracle: `t = min_{i ∈ S} x(i)`.
pub fn oracle_exact(x: &[f64], support: &[usize]) -> Result<SelectionResult> {
    check_support(x, support)?;
    let t = support
        .iter()
        .map(|&i| x[i])
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .ok_or_else(|| domain("exact oracle needs a nonempty support"))?;
    Ok(SelectionResult::from_threshold(x, t, ProcedureId::OracleExact))
}

/// Approximate-recovery oracle: the observed value (or `+∞`) minimizing the
/// realized `FDP + NDP`, ties resolved toward the larger threshold.
pub fn oracle_approx(x: &[f64], support: &[usize]) -> Result<SelectionResult> {
    check_support(x, support)?;
    let mut in_support = vec![false; x.len()];
    for &i in support {
        in_support[i] = true;
    }
    let s = in_support.iter().filter(|&&b| b).count();
    let s_denom = s.max(1) as f64;

    let mut best_threshold = f64::INFINITY;
    let mut best_risk = if s > 0 { 1.0 } else { 0.0 };

    let order = descending_order(x);
    let (mut selected, mut true_selected) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        // Absorb the whole group of tied values at this threshold.
        let t = x[order[k]];
        while k < order.len() && x[order[k]] == t {
            selected += 1;
            if in_support[order[k]] {
                true_selected += 1;
            }
            k += 1;
        }
        let fdp = (selected - true_selected) as f64 / selected.max(1) as f64;
        let ndp = (s - true_selected) as f64 / s_denom;
        let risk = fdp + ndp;
        if risk < best_risk {
            best_risk = risk;
            best_threshold = t;
        }
    }
    Ok(SelectionResult::from_threshold(
        x,
        best_threshold,
        ProcedureId::OracleApprox,
    ))
}

/// Runs `procedure` at level `alpha`; oracle procedures ignore the level
/// and read `support` instead.
pub fn apply(
    procedure: ProcedureId,
    x: &[f64],
    alpha: f64,
    null: &dyn NullModel,
    support: &[usize],
) -> Result<SelectionResult> {
    match procedure {
        ProcedureId::Bonferroni => bonferroni(x, alpha, null),
        ProcedureId::Sidak => sidak(x, alpha, null),
        ProcedureId::Holm => holm(x, alpha, null),
        ProcedureId::Hochberg => hochberg(x, alpha, null),
        ProcedureId::BenjaminiHochberg => benjamini_hochberg(x, alpha, null),
        ProcedureId::OracleExact => oracle_exact(x, support),
        ProcedureId::OracleApprox => oracle_approx(x, support),
    }
}
