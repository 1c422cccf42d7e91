//! Power calculus for association screening on 2×2 tables: signal size per
//! sample as a function of marginals and odds ratio, optimal case fraction,
//! marginal power, sample-size inversion, OR-RAF grids and catalog input.

mod catalog;
mod contour;
mod orraf;
mod power;

pub use catalog::{ingest_catalog, ingest_catalog_from, write_catalog, Catalog, CatalogRecord, CatalogReject};
pub use contour::{marching_squares, Polyline};
pub use orraf::{linear_spaced, log_spaced, orraf_grid, OrrafGrid, OrrafRequest, DEFAULT_EQUI_SIGNAL_LEVELS};
pub use power::{
    marginal_power, required_sample_size, PowerThreshold, SampleSizeAnswer, SampleSizeQuery,
    SAMPLE_SIZE_UPPER_START,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Below this `|R − 1|` the closed form hands over to the δ route.
pub const NEAR_NULL_ODDS: f64 = 1e-6;

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn positive_odds(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("odds ratio R must be finite and > 0, got {r}")))
    }
}

/// Case fraction: a fixed value or the design maximizing `w²`.
///
/// Serialized as a bare number or the string `"optimal"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi1Choice {
    Fixed(f64),
    Optimal,
}

impl Serialize for Phi1Choice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Phi1Choice::Fixed(v) => s.serialize_f64(*v),
            Phi1Choice::Optimal => s.serialize_str("optimal"),
        }
    }
}

impl<'de> Deserialize<'de> for Phi1Choice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Number(f64),
            Text(String),
        }
        match Wire::deserialize(d)? {
            Wire::Number(v) => Ok(Phi1Choice::Fixed(v)),
            Wire::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for Phi1Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("optimal") {
            return Ok(Phi1Choice::Optimal);
        }
        t.parse::<f64>()
            .map(Phi1Choice::Fixed)
            .map_err(|_| domain(format!("phi1 must be a number or \"optimal\", got {t:?}")))
    }
}

impl Phi1Choice {
    pub fn resolve(self, f: f64, odds: f64) -> Result<f64> {
        match self {
            Phi1Choice::Fixed(v) => {
                open_unit("phi1", v)?;
                Ok(v)
            }
            Phi1Choice::Optimal => optimal_phi1(f, odds),
        }
    }
}

/// A 2×2 probability table in one of its parametrizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ContingencyParams {
    /// Rows are (cases, controls); columns are (variant 1, variant 2).
    Cells { mu: [[f64; 2]; 2] },
    /// Genotype marginal `θ₁`, case fraction `φ₁`, odds ratio.
    Marginal { theta1: f64, phi1: f64, odds: f64 },
    /// Variant frequency `f` among controls, case fraction `φ₁`, odds ratio.
    Conditional { f: f64, phi1: f64, odds: f64 },
}

impl ContingencyParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ContingencyParams::Cells { mu } => {
                let flat = [mu[0][0], mu[0][1], mu[1][0], mu[1][1]];
                if flat.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(domain("cell probabilities must be finite and >= 0"));
                }
                let total: f64 = flat.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(domain(format!("cell probabilities sum to {total}, not 1")));
                }
                let rows = [mu[0][0] + mu[0][1], mu[1][0] + mu[1][1]];
                let cols = [mu[0][0] + mu[1][0], mu[0][1] + mu[1][1]];
                if rows.iter().chain(&cols).any(|m| *m <= 0.0 || *m >= 1.0) {
                    return Err(domain("table marginals must lie in (0, 1)"));
                }
                Ok(())
            }
            ContingencyParams::Marginal { theta1, phi1, odds } => {
                open_unit("theta1", theta1)?;
                open_unit("phi1", phi1)?;
                positive_odds(odds)
            }
            ContingencyParams::Conditional { f, phi1, odds } => {
                open_unit("f", f)?;
                open_unit("phi1", phi1)?;
                positive_odds(odds)
            }
        }
    }

    /// Canonical cell form.
    pub fn cells(&self) -> Result<[[f64; 2]; 2]> {
        self.validate()?;
        Ok(match *self {
            ContingencyParams::Cells { mu } => mu,
            ContingencyParams::Marginal { theta1, phi1, odds } => {
                let delta = delta_root(theta1, phi1, odds)?;
                let (theta2, phi2) = (1.0 - theta1, 1.0 - phi1);
                [
                    [phi1 * theta1 + delta, phi1 * theta2 - delta],
                    [phi2 * theta1 - delta, phi2 * theta2 + delta],
                ]
            }
            ContingencyParams::Conditional { f, phi1, odds } => {
                let d = 1.0 + f * (odds - 1.0);
                let phi2 = 1.0 - phi1;
                [
                    [phi1 * f * odds / d, phi1 * (1.0 - f) / d],
                    [f * phi2, (1.0 - f) * phi2],
                ]
            }
        })
    }

    /// `(θ₁, φ₁, R)`.
    pub fn marginal(&self) -> Result<(f64, f64, f64)> {
        self.validate()?;
        Ok(match *self {
            ContingencyParams::Marginal { theta1, phi1, odds } => (theta1, phi1, odds),
            ContingencyParams::Conditional { f, phi1, odds } => {
                (theta_from_conditional(f, phi1, odds)?, phi1, odds)
            }
            ContingencyParams::Cells { mu } => {
                let odds = (mu[0][0] * mu[1][1]) / (mu[0][1] * mu[1][0]);
                positive_odds(odds)?;
                (mu[0][0] + mu[1][0], mu[0][0] + mu[0][1], odds)
            }
        })
    }

    pub fn w2(&self) -> Result<f64> {
        match *self {
            ContingencyParams::Cells { mu } => {
                self.validate()?;
                w2_from_cells(mu)
            }
            _ => {
                let (theta1, phi1, odds) = self.marginal()?;
                w2_closed_form(theta1, phi1, odds)
            }
        }
    }
}

/// Signal size of one location at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSize {
    pub w2: f64,
    pub lambda: f64,
    pub n: f64,
}

impl SignalSize {
    pub fn new(w2: f64, n: f64) -> Result<Self> {
        if !(w2 >= 0.0 && w2.is_finite()) {
            return Err(domain(format!("w2 must be finite and >= 0, got {w2}")));
        }
        if !(n >= 0.0 && n.is_finite()) {
            return Err(domain(format!("sample size must be finite and >= 0, got {n}")));
        }
        Ok(Self { w2, lambda: n * w2, n })
    }

    /// `r = λ / (2 log p)`.
    pub fn r(&self, p: f64) -> f64 {
        self.lambda / (2.0 * p.ln())
    }
}

/// Signal size per sample from `(θ₁, φ₁, R)`.
///
/// Evaluated as `4A(R−1)² / (S + √(S² − 4A(R−1)²))²` with `S = B + CR`,
/// which is the usual expression with its numerator rationalized and keeps
/// full relative precision away from the null; within [`NEAR_NULL_ODDS`] of
/// `R = 1` the δ route is used instead.
pub fn w2_closed_form(theta1: f64, phi1: f64, odds: f64) -> Result<f64> {
    open_unit("theta1", theta1)?;
    open_unit("phi1", phi1)?;
    positive_odds(odds)?;
    if odds == 1.0 {
        return Ok(0.0);
    }
    if (odds - 1.0).abs() < NEAR_NULL_ODDS {
        return w2_delta_oracle(theta1, phi1, odds);
    }
    let (theta2, phi2) = (1.0 - theta1, 1.0 - phi1);
    let a = phi1 * theta1 * phi2 * theta2;
    let b = phi1 * theta1 + phi2 * theta2;
    let c = phi1 * theta2 + phi2 * theta1;
    let s = b + c * odds;
    let d = 4.0 * a * (odds - 1.0) * (odds - 1.0);
    let root = (s * s - d).max(0.0).sqrt();
    let denom = s + root;
    Ok(d / (denom * denom))
}

/// Feasible interval for the table deviation `δ = μ₁₁ − φ₁θ₁`.
fn delta_bounds(theta1: f64, phi1: f64) -> (f64, f64) {
    let (theta2, phi2) = (1.0 - theta1, 1.0 - phi1);
    let lo = -(phi1 * theta1).min(phi2 * theta2);
    let hi = (phi1 * theta2).min(phi2 * theta1);
    (lo, hi)
}

/// Root in δ of `μ₁₁μ₂₂ − R·μ₁₂μ₂₁`, written as the quadratic
/// `δ²(1−R) + δ(B+RC) + A(1−R)`; bracketed on the feasible interval where it
/// changes sign exactly once, then bisected to adjacent floats.
fn delta_root(theta1: f64, phi1: f64, odds: f64) -> Result<f64> {
    open_unit("theta1", theta1)?;
    open_unit("phi1", phi1)?;
    positive_odds(odds)?;
    if odds == 1.0 {
        return Ok(0.0);
    }
    let (theta2, phi2) = (1.0 - theta1, 1.0 - phi1);
    let a = phi1 * theta1 * phi2 * theta2;
    let b = phi1 * theta1 + phi2 * theta2;
    let c = phi1 * theta2 + phi2 * theta1;
    let quad = |d: f64| (d * (1.0 - odds) + (b + odds * c)) * d + a * (1.0 - odds);
    let (mut lo, mut hi) = delta_bounds(theta1, phi1);
    // quad(lo) = −R·μ₁₂μ₂₁ < 0 and quad(hi) = μ₁₁μ₂₂ > 0.
    for _ in 0..4096 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if quad(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if quad(lo).abs() <= quad(hi).abs() { lo } else { hi })
}

/// Independent route to `w²`: solve for δ, then `w² = δ² / (φ₁θ₁φ₂θ₂)`.
pub fn w2_delta_oracle(theta1: f64, phi1: f64, odds: f64) -> Result<f64> {
    let delta = delta_root(theta1, phi1, odds)?;
    let a = phi1 * theta1 * (1.0 - phi1) * (1.0 - theta1);
    Ok(delta * delta / a)
}

/// `Σ (μⱼₖ − φⱼθₖ)² / (φⱼθₖ)` directly from the table.
pub fn w2_from_cells(mu: [[f64; 2]; 2]) -> Result<f64> {
    ContingencyParams::Cells { mu }.validate()?;
    let phi = [mu[0][0] + mu[0][1], mu[1][0] + mu[1][1]];
    let theta = [mu[0][0] + mu[1][0], mu[0][1] + mu[1][1]];
    let mut w2 = 0.0;
    for j in 0..2 {
        for k in 0..2 {
            let e = phi[j] * theta[k];
            let dev = mu[j][k] - e;
            w2 += dev * dev / e;
        }
    }
    Ok(w2)
}

/// Genotype marginal implied by the control frequency `f`.
pub fn theta_from_conditional(f: f64, phi1: f64, odds: f64) -> Result<f64> {
    open_unit("f", f)?;
    open_unit("phi1", phi1)?;
    positive_odds(odds)?;
    if odds == 1.0 {
        return Ok(f);
    }
    Ok(phi1 * f * odds / (1.0 + f * (odds - 1.0)) + f * (1.0 - phi1))
}

/// `w²` in the `(f, φ₁, R)` parametrization.
pub fn w2_conditional(f: f64, phi1: f64, odds: f64) -> Result<f64> {
    let theta1 = theta_from_conditional(f, phi1, odds)?;
    w2_closed_form(theta1, phi1, odds)
}

/// Case fraction maximizing `w²` at fixed `(f, R)`.
pub fn optimal_phi1(f: f64, odds: f64) -> Result<f64> {
    open_unit("f", f)?;
    positive_odds(odds)?;
    let d = 1.0 + f * (odds - 1.0);
    Ok(d / (d + odds.sqrt()))
}

/// Limits of `w²` as `R → 0⁺` and `R → ∞` at fixed marginals.
pub fn w2_limits(theta1: f64, phi1: f64) -> Result<(f64, f64)> {
    open_unit("theta1", theta1)?;
    open_unit("phi1", phi1)?;
    let (theta2, phi2) = (1.0 - theta1, 1.0 - phi1);
    let ratio_min = |x: f64| x.min(1.0 / x);
    Ok((
        ratio_min(phi1 * theta1 / (phi2 * theta2)),
        ratio_min(phi1 * theta2 / (phi2 * theta1)),
    ))
}
