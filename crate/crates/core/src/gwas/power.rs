use serde::{Deserialize, Serialize};

use super::{open_unit, w2_conditional, Phi1Choice};
use crate::distributions::{chisq_isf, chisq_sf, ChiSqParams};
use crate::error::{domain, Error, Result};

/// Initial upper end of the sample-size bracket (observations).
pub const SAMPLE_SIZE_UPPER_START: u64 = 1 << 40;

/// Bonferroni threshold `χ²_{ν, α/p}` cached for repeated power evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerThreshold {
    nu: u32,
    level: f64,
    threshold: f64,
}

impl PowerThreshold {
    pub fn new(p: u64, alpha: f64, nu: u32) -> Result<Self> {
        if p < 1 {
            return Err(domain("p must be >= 1"));
        }
        open_unit("alpha", alpha)?;
        let level = alpha / p as f64;
        let threshold = chisq_isf(level, ChiSqParams::central(nu)?)?;
        Ok(Self { nu, level, threshold })
    }

    /// Per-location level `α / p`.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `P[χ²_ν(λ) > threshold]`.
    pub fn power(&self, lambda: f64) -> Result<f64> {
        chisq_sf(self.threshold, ChiSqParams::new(self.nu, lambda)?)
    }
}

/// Marginal power of one location after Bonferroni at family level `alpha`.
pub fn marginal_power(lambda: f64, p: u64, alpha: f64, nu: u32) -> Result<f64> {
    PowerThreshold::new(p, alpha, nu)?.power(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeQuery {
    pub f: f64,
    pub odds: f64,
    pub phi1: Phi1Choice,
    pub p: u64,
    pub fwer: f64,
    pub fnr: f64,
    /// Observations contributed by each subject (1 or 2).
    pub per_subject_alleles: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeAnswer {
    pub phi1_used: f64,
    pub w2: f64,
    /// Smallest observation count reaching power `1 − fnr`.
    pub n_observations: u64,
    /// `⌈n_observations / per_subject_alleles⌉`.
    pub n_subjects: u64,
    pub power_at_n: f64,
    /// `2 log p / w²`, the boundary `r = 1` read as a sample size.
    pub n_asymptotic_observations: f64,
    pub n_asymptotic_subjects: f64,
}

pub fn required_sample_size(q: &SampleSizeQuery) -> Result<SampleSizeAnswer> {
    open_unit("f", q.f)?;
    open_unit("fwer", q.fwer)?;
    open_unit("fnr", q.fnr)?;
    if !matches!(q.per_subject_alleles, 1 | 2) {
        return Err(domain(format!(
            "per_subject_alleles must be 1 or 2, got {}",
            q.per_subject_alleles
        )));
    }
    if q.p < 2 {
        return Err(domain("p must be >= 2"));
    }
    let phi1 = q.phi1.resolve(q.f, q.odds)?;
    let w2 = w2_conditional(q.f, phi1, q.odds)?;
    if w2 <= 0.0 {
        return Err(Error::Infeasible(
            "signal size per sample is zero (R = 1); no sample size reaches the target power".into(),
        ));
    }
    let target = 1.0 - q.fnr;
    let test = PowerThreshold::new(q.p, q.fwer, 1)?;
    let power_at = |n: u64| test.power(n as f64 * w2);

    let mut hi = SAMPLE_SIZE_UPPER_START;
    while power_at(hi)? < target {
        hi = hi.checked_mul(2).filter(|h| *h < (1 << 62)).ok_or_else(|| {
            Error::Infeasible(format!("target power {target} not reached below 2^62 observations"))
        })?;
    }
    // Invariant: power(lo) < target <= power(hi).
    if power_at(1)? >= target {
        hi = 1;
    } else {
        let mut lo = 1u64;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if power_at(mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let alleles = u64::from(q.per_subject_alleles);
    let n_asym = 2.0 * (q.p as f64).ln() / w2;
    Ok(SampleSizeAnswer {
        phi1_used: phi1,
        w2,
        n_observations: hi,
        n_subjects: hi.div_ceil(alleles),
        power_at_n: power_at(hi)?,
        n_asymptotic_observations: n_asym,
        n_asymptotic_subjects: n_asym / alleles as f64,
    })
}
