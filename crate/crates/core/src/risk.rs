//! Per-replicate error functionals and their Monte Carlo aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Error profile of one estimated support against the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    /// `|Ŝ \ S| / max(|Ŝ|, 1)`
    pub fdp: f64,
    /// `|S \ Ŝ| / max(|S|, 1)`
    pub ndp: f64,
    pub any_false_discovery: bool,
    pub any_missed_signal: bool,
    pub exact: bool,
}

fn sorted_unique(v: &[usize]) -> Vec<usize> {
    let mut out = v.to_vec();
    out.sort_unstable();
    out.dedup();
    out
}

/// Compares an estimated support with the true one; indices are zero-based.
pub fn evaluate_replicate(
    selected: &[usize],
    true_support: &[usize],
    p: usize,
) -> Result<ReplicateOutcome> {
    if let Some(&i) = selected.iter().chain(true_support).find(|&&i| i >= p) {
        return Err(domain(format!("index {i} out of range for p = {p}")));
    }
    let sel = sorted_unique(selected);
    let sup = sorted_unique(true_support);

    // Merge walk for |Ŝ ∩ S|.
    let (mut a, mut b, mut common) = (0, 0, 0usize);
    while a < sel.len() && b < sup.len() {
        match sel[a].cmp(&sup[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                a += 1;
                b += 1;
            }
        }
    }
    let false_discoveries = sel.len() - common;
    let missed = sup.len() - common;
    Ok(ReplicateOutcome {
        fdp: false_discoveries as f64 / sel.len().max(1) as f64,
        ndp: missed as f64 / sup.len().max(1) as f64,
        any_false_discovery: false_discoveries > 0,
        any_missed_signal: missed > 0,
        exact: false_discoveries == 0 && missed == 0,
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.compensation += other.compensation;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Mergeable partial sums over replicates.
///
/// Merging in a fixed order yields bit-identical results no matter how the
/// replicates were distributed over workers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskAccumulator {
    reps: u64,
    false_discovery: u64,
    missed_signal: u64,
    exact: u64,
    // Σ over replicates of (fd + ms)², which is a small integer each time.
    risk_e_sq: u64,
    fdp: CompensatedSum,
    ndp: CompensatedSum,
    fdp_sq: CompensatedSum,
    ndp_sq: CompensatedSum,
    risk_a_sq: CompensatedSum,
    risk_ea_sq: CompensatedSum,
    risk_ae_sq: CompensatedSum,
}

impl RiskAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, o: &ReplicateOutcome) {
        let fd = u64::from(o.any_false_discovery);
        let ms = u64::from(o.any_missed_signal);
        self.reps += 1;
        self.false_discovery += fd;
        self.missed_signal += ms;
        self.exact += u64::from(o.exact);
        self.risk_e_sq += (fd + ms) * (fd + ms);
        self.fdp.add(o.fdp);
        self.ndp.add(o.ndp);
        self.fdp_sq.add(o.fdp * o.fdp);
        self.ndp_sq.add(o.ndp * o.ndp);
        let ra = o.fdp + o.ndp;
        let rea = fd as f64 + o.ndp;
        let rae = o.fdp + ms as f64;
        self.risk_a_sq.add(ra * ra);
        self.risk_ea_sq.add(rea * rea);
        self.risk_ae_sq.add(rae * rae);
    }

    pub fn merge(&mut self, other: &RiskAccumulator) {
        self.reps += other.reps;
        self.false_discovery += other.false_discovery;
        self.missed_signal += other.missed_signal;
        self.exact += other.exact;
        self.risk_e_sq += other.risk_e_sq;
        self.fdp.merge(&other.fdp);
        self.ndp.merge(&other.ndp);
        self.fdp_sq.merge(&other.fdp_sq);
        self.ndp_sq.merge(&other.ndp_sq);
        self.risk_a_sq.merge(&other.risk_a_sq);
        self.risk_ea_sq.merge(&other.risk_ea_sq);
        self.risk_ae_sq.merge(&other.risk_ae_sq);
    }

    pub fn reps(&self) -> u64 {
        self.reps
    }

    pub fn summary(&self) -> Result<RiskSummary> {
        if self.reps == 0 {
            return Err(domain("cannot aggregate an empty set of replicates"));
        }
        let n = self.reps as f64;
        let rate = |count: u64| count as f64 / n;
        let indicator_se = |r: f64| (r * (1.0 - r) / n).sqrt();
        // sample standard deviation of the mean from Σx and Σx²
        let mean_se = |sum: f64, sum_sq: f64| {
            if self.reps < 2 {
                return 0.0;
            }
            let mean = sum / n;
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        };

        let fwer = rate(self.false_discovery);
        let fwnr = rate(self.missed_signal);
        let p_exact = rate(self.exact);
        let fdp_sum = self.fdp.value();
        let ndp_sum = self.ndp.value();
        let fdr = (fdp_sum / n).clamp(0.0, 1.0);
        let fnr = (ndp_sum / n).clamp(0.0, 1.0);
        let e_sum = (self.false_discovery + self.missed_signal) as f64;

        Ok(RiskSummary {
            reps: self.reps,
            fwer,
            fdr,
            fnr,
            fwnr,
            p_exact,
            risk_e: rate(self.false_discovery + self.missed_signal),
            risk_a: fdr + fnr,
            risk_ea: fwer + fnr,
            risk_ae: fdr + fwnr,
            se_fwer: indicator_se(fwer),
            se_fdr: mean_se(fdp_sum, self.fdp_sq.value()),
            se_fnr: mean_se(ndp_sum, self.ndp_sq.value()),
            se_fwnr: indicator_se(fwnr),
            se_p_exact: indicator_se(p_exact),
            se_risk_e: mean_se(e_sum, self.risk_e_sq as f64),
            se_risk_a: mean_se(fdp_sum + ndp_sum, self.risk_a_sq.value()),
            se_risk_ea: mean_se(self.false_discovery as f64 + ndp_sum, self.risk_ea_sq.value()),
            se_risk_ae: mean_se(fdp_sum + self.missed_signal as f64, self.risk_ae_sq.value()),
            n_false_discovery: self.false_discovery,
            n_missed_signal: self.missed_signal,
            n_exact: self.exact,
        })
    }
}

/// Monte Carlo estimates of the five risks, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub reps: u64,
    pub fwer: f64,
    pub fdr: f64,
    pub fnr: f64,
    pub fwnr: f64,
    pub p_exact: f64,
    pub risk_e: f64,
    pub risk_a: f64,
    pub risk_ea: f64,
    pub risk_ae: f64,
    pub se_fwer: f64,
    pub se_fdr: f64,
    pub se_fnr: f64,
    pub se_fwnr: f64,
    pub se_p_exact: f64,
    pub se_risk_e: f64,
    pub se_risk_a: f64,
    pub se_risk_ea: f64,
    pub se_risk_ae: f64,
    pub n_false_discovery: u64,
    pub n_missed_signal: u64,
    pub n_exact: u64,
}

/// The metrics reported per cell, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Fwer,
    Fdr,
    Fnr,
    Fwnr,
    PExact,
    RiskE,
    RiskA,
    RiskEa,
    RiskAe,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Fwer,
        Metric::Fdr,
        Metric::Fnr,
        Metric::Fwnr,
        Metric::PExact,
        Metric::RiskE,
        Metric::RiskA,
        Metric::RiskEa,
        Metric::RiskAe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Fwer => "fwer",
            Metric::Fdr => "fdr",
            Metric::Fnr => "fnr",
            Metric::Fwnr => "fwnr",
            Metric::PExact => "p_exact",
            Metric::RiskE => "risk_e",
            Metric::RiskA => "risk_a",
            Metric::RiskEa => "risk_ea",
            Metric::RiskAe => "risk_ae",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl RiskSummary {
    /// `(value, standard error)` of a metric.
    pub fn metric(&self, m: Metric) -> (f64, f64) {
        match m {
            Metric::Fwer => (self.fwer, self.se_fwer),
            Metric::Fdr => (self.fdr, self.se_fdr),
            Metric::Fnr => (self.fnr, self.se_fnr),
            Metric::Fwnr => (self.fwnr, self.se_fwnr),
            Metric::PExact => (self.p_exact, self.se_p_exact),
            Metric::RiskE => (self.risk_e, self.se_risk_e),
            Metric::RiskA => (self.risk_a, self.se_risk_a),
            Metric::RiskEa => (self.risk_ea, self.se_risk_ea),
            Metric::RiskAe => (self.risk_ae, self.se_risk_ae),
        }
    }

    pub(crate) fn set_metric(&mut self, m: Metric, value: f64, se: f64) {
        let (v, s) = match m {
            Metric::Fwer => (&mut self.fwer, &mut self.se_fwer),
            Metric::Fdr => (&mut self.fdr, &mut self.se_fdr),
            Metric::Fnr => (&mut self.fnr, &mut self.se_fnr),
            Metric::Fwnr => (&mut self.fwnr, &mut self.se_fwnr),
            Metric::PExact => (&mut self.p_exact, &mut self.se_p_exact),
            Metric::RiskE => (&mut self.risk_e, &mut self.se_risk_e),
            Metric::RiskA => (&mut self.risk_a, &mut self.se_risk_a),
            Metric::RiskEa => (&mut self.risk_ea, &mut self.se_risk_ea),
            Metric::RiskAe => (&mut self.risk_ae, &mut self.se_risk_ae),
        };
        *v = value;
        *s = se;
    }

    /// Placeholder with every field zero, filled in by parsers.
    pub(crate) fn zeroed(reps: u64) -> Self {
        RiskSummary {
            reps,
            fwer: 0.0,
            fdr: 0.0,
            fnr: 0.0,
            fwnr: 0.0,
            p_exact: 0.0,
            risk_e: 0.0,
            risk_a: 0.0,
            risk_ea: 0.0,
            risk_ae: 0.0,
            se_fwer: 0.0,
            se_fdr: 0.0,
            se_fnr: 0.0,
            se_fwnr: 0.0,
            se_p_exact: 0.0,
            se_risk_e: 0.0,
            se_risk_a: 0.0,
            se_risk_ea: 0.0,
            se_risk_ae: 0.0,
            n_false_discovery: 0,
            n_missed_signal: 0,
            n_exact: 0,
        }
    }

    /// Recovers the integer counts from the indicator rates.
    pub(crate) fn restore_counts(&mut self) {
        let n = self.reps as f64;
        self.n_false_discovery = (self.fwer * n).round() as u64;
        self.n_missed_signal = (self.fwnr * n).round() as u64;
        self.n_exact = (self.p_exact * n).round() as u64;
    }
}

/// Aggregates outcomes by sample means.
pub fn aggregate(outcomes: &[ReplicateOutcome]) -> Result<RiskSummary> {
    let mut acc = RiskAccumulator::new();
    for o in outcomes {
        acc.push(o);
    }
    acc.summary()
}

/// Checks `1 − P[Ŝ = S] ≤ risk_E ≤ 2(1 − P[Ŝ = S])`.
///
/// Every replicate that misses exact recovery contributes one or two error
/// indicators, so the sandwich holds exactly on the integer counts, and
/// dividing those counts by the same positive `reps` preserves order.
pub fn lemma1_consistency_check(summary: &RiskSummary) -> bool {
    let reps = summary.reps;
    if reps == 0 || summary.n_exact > reps {
        return false;
    }
    let non_exact = reps - summary.n_exact;
    let errors = summary.n_false_discovery + summary.n_missed_signal;
    let counts_ok = non_exact <= errors && errors <= 2 * non_exact;
    let n = reps as f64;
    let lower = non_exact as f64 / n;
    let upper = (2 * non_exact) as f64 / n;
    counts_ok && lower <= summary.risk_e && summary.risk_e <= upper
}
