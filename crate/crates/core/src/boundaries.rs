//! Phase-transition boundaries in the (β, r) plane.
//!
//! The same curves hold for the chi-square model at every ν and for the
//! one-sided Gaussian model.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Tolerance used by [`classify`] to report a point as on the boundary.
pub const ON_BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    beta: f64,
    r: f64,
}

impl BoundaryPoint {
    pub fn new(beta: f64, r: f64) -> Result<Self> {
        check_beta(beta)?;
        if !(r >= 0.0 && r.is_finite()) {
            return Err(domain(format!("signal size r must be finite and >= 0, got {r}")));
        }
        Ok(Self { beta, r })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("sparsity beta must lie in (0, 1), got {beta}")))
    }
}

/// Exact support recovery: `g(β) = (1 + √(1−β))²`.
pub fn g_exact(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let s = 1.0 + (1.0 - beta).sqrt();
    Ok(s * s)
}

/// Exact-approximate recovery: `g̃(β) = 1`.
pub fn g_tilde_exact_approx(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0)
}

/// Approximate recovery: `h(β) = β`.
pub fn h_approx(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(beta)
}

/// Approximate-exact recovery: `h̃(β) = (√β + √(1−β))²`.
pub fn h_tilde_approx_exact(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let s = beta.sqrt() + (1.0 - beta).sqrt();
    Ok(s * s)
}

/// Sparse detection boundary.
pub fn f_detection(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(if beta > 0.75 {
        let s = 1.0 - (1.0 - beta).sqrt();
        s * s
    } else {
        (beta - 0.5).max(0.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Detect,
    Approx,
    ExactApprox,
    ApproxExact,
    Exact,
}

impl Problem {
    /// In increasing order of required signal size.
    pub const ALL: [Problem; 5] = [
        Problem::Detect,
        Problem::Approx,
        Problem::ExactApprox,
        Problem::ApproxExact,
        Problem::Exact,
    ];

    pub fn boundary(self, beta: f64) -> Result<f64> {
        match self {
            Problem::Detect => f_detection(beta),
            Problem::Approx => h_approx(beta),
            Problem::ExactApprox => g_tilde_exact_approx(beta),
            Problem::ApproxExact => h_tilde_approx_exact(beta),
            Problem::Exact => g_exact(beta),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Detect => "detection",
            Problem::Approx => "approx",
            Problem::ExactApprox => "exact_approx",
            Problem::ApproxExact => "approx_exact",
            Problem::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Solvable,
    Unsolvable,
    OnBoundary,
}

/// Compares a signal size against a boundary value.
pub fn classify_against(r: f64, boundary: f64) -> Classification {
    if (r - boundary).abs() <= ON_BOUNDARY_TOLERANCE {
        Classification::OnBoundary
    } else if r > boundary {
        Classification::Solvable
    } else {
        Classification::Unsolvable
    }
}

pub fn classify(point: BoundaryPoint, problem: Problem) -> Classification {
    // beta was validated on construction
    let b = problem.boundary(point.beta).expect("validated beta");
    classify_against(point.r, b)
}

/// One sample of a boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub beta: f64,
    pub value: f64,
}

/// The five curves sampled on a common β grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurves {
    pub detection: Vec<CurveSample>,
    pub approx: Vec<CurveSample>,
    pub exact_approx: Vec<CurveSample>,
    pub approx_exact: Vec<CurveSample>,
    pub exact: Vec<CurveSample>,
}

impl BoundaryCurves {
    pub fn sample(beta_grid: &[f64]) -> Result<Self> {
        if beta_grid.is_empty() {
            return Err(domain("beta grid is empty"));
        }
        let curve = |problem: Problem| -> Result<Vec<CurveSample>> {
            beta_grid
                .iter()
                .map(|&beta| {
                    Ok(CurveSample {
                        beta,
                        value: problem.boundary(beta)?,
                    })
                })
                .collect()
        };
        Ok(Self {
            detection: curve(Problem::Detect)?,
            approx: curve(Problem::Approx)?,
            exact_approx: curve(Problem::ExactApprox)?,
            approx_exact: curve(Problem::ApproxExact)?,
            exact: curve(Problem::Exact)?,
        })
    }
}

/// `n` interior points `i/(n+1)`, `i = 1..=n`, of the unit interval.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}
