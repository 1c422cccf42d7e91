//! Typed requests and answers behind every endpoint. The command line calls
//! the same functions, which keeps both front ends on one code path.

use std::collections::BTreeMap;

use serde::Serialize;
use suprec::boundaries::{classify_against, interior_grid, BoundaryCurves, Classification, Problem};
use suprec::gwas::{
    ingest_catalog_from, linear_spaced, log_spaced, optimal_phi1, orraf_grid, required_sample_size,
    w2_conditional, Catalog, CatalogReject, OrrafGrid, OrrafRequest, Phi1Choice, Polyline, PowerThreshold, SampleSizeQuery,
    DEFAULT_EQUI_SIGNAL_LEVELS,
};

use crate::error::{ApiError, FieldError};
use crate::params::{Checks, Fields};

/// Largest grid side accepted for OR-RAF and boundary requests.
pub const MAX_GRID_SIDE: usize = 512;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_ALLELES: u32 = 2;
pub const DEFAULT_BETA_STEPS: usize = 99;

fn invalid_if_any(errors: Vec<FieldError>) -> Result<(), ApiError> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ApiError::Invalid(errors))
    }
}

fn alleles_field(fields: &mut Fields) -> Option<u32> {
    match fields.integer("per_subject_alleles") {
        None if !fields.present("per_subject_alleles") => Some(DEFAULT_ALLELES),
        None => None,
        Some(v) => u32::try_from(v).ok().or_else(|| {
            fields.error("per_subject_alleles", "must be 1 or 2");
            None
        }),
    }
}

fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::Solvable => "solvable",
        Classification::Unsolvable => "unsolvable",
        Classification::OnBoundary => "on_boundary",
    }
}

// ---------------------------------------------------------------- power

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerQuery {
    pub p: u64,
    pub alpha: f64,
    pub f: f64,
    #[serde(rename = "R")]
    pub odds: f64,
    pub phi1: Phi1Choice,
    pub n_subjects: u64,
    pub per_subject_alleles: u32,
}

impl PowerQuery {
    /// Reads the body fields; problems are recorded on `fields`.
    pub fn read(fields: &mut Fields) -> Option<Self> {
        let p = fields.require_integer("p");
        let alpha = fields.number("alpha").or((!fields.present("alpha")).then_some(DEFAULT_ALPHA));
        let f = fields.require_number("f");
        let odds = fields.require_number("R");
        let phi1 = fields.phi1("phi1").or((!fields.present("phi1")).then_some(Phi1Choice::Optimal));
        let n_subjects = fields.require_integer("n_subjects");
        let per_subject_alleles = alleles_field(fields);
        Some(Self {
            p: p?,
            alpha: alpha?,
            f: f?,
            odds: odds?,
            phi1: phi1?,
            n_subjects: n_subjects?,
            per_subject_alleles: per_subject_alleles?,
        })
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        let mut errors = Vec::new();
        let mut c = Checks(&mut errors);
        c.at_least("p", self.p, 2);
        c.open_unit("alpha", self.alpha);
        c.open_unit("f", self.f);
        c.positive("R", self.odds);
        c.phi1("phi1", self.phi1);
        c.at_least("n_subjects", self.n_subjects, 1);
        c.alleles("per_subject_alleles", self.per_subject_alleles);
        invalid_if_any(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAnswer {
    pub query: PowerQuery,
    pub phi1_used: f64,
    pub w2: f64,
    pub n_observations: u64,
    pub lambda: f64,
    /// Per-location Bonferroni level `alpha / p`.
    pub level: f64,
    pub threshold: f64,
    pub power: f64,
    /// `lambda / (2 log p)`.
    pub r: f64,
    /// Position of `r` relative to the exact-approximate boundary `r = 1`.
    pub classification: &'static str,
    pub boundary: &'static str,
}

pub fn power(q: &PowerQuery) -> Result<PowerAnswer, ApiError> {
    q.validate()?;
    let phi1 = q.phi1.resolve(q.f, q.odds).map_err(|e| ApiError::from_core(e, "phi1"))?;
    let w2 = w2_conditional(q.f, phi1, q.odds).map_err(|e| ApiError::from_core(e, "R"))?;
    let n_observations = q
        .n_subjects
        .checked_mul(u64::from(q.per_subject_alleles))
        .ok_or_else(|| ApiError::field("n_subjects", "too large"))?;
    let test = PowerThreshold::new(q.p, q.alpha, 1).map_err(|e| ApiError::from_core(e, "alpha"))?;
    let lambda = n_observations as f64 * w2;
    let power = test.power(lambda).map_err(|e| ApiError::from_core(e, "n_subjects"))?;
    let r = lambda / (2.0 * (q.p as f64).ln());
    let boundary = Problem::ExactApprox;
    Ok(PowerAnswer {
        query: *q,
        phi1_used: phi1,
        w2,
        n_observations,
        lambda,
        level: test.level(),
        threshold: test.threshold(),
        power,
        r,
        classification: classification_name(classify_against(r, 1.0)),
        boundary: boundary.as_str(),
    })
}

// ---------------------------------------------------------- sample size

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSizeRequest {
    pub p: u64,
    pub fwer: f64,
    pub f: f64,
    #[serde(rename = "R")]
    pub odds: f64,
    pub phi1: Phi1Choice,
    /// Target false non-discovery rate; power target is `1 - fnr`.
    pub fnr: f64,
    pub per_subject_alleles: u32,
}

impl SampleSizeRequest {
    /// Accepts exactly one of `fnr` and `target_power`.
    pub fn read(fields: &mut Fields) -> Option<Self> {
        let p = fields.require_integer("p");
        let fwer = fields.number("fwer").or((!fields.present("fwer")).then_some(DEFAULT_ALPHA));
        let f = fields.require_number("f");
        let odds = fields.require_number("R");
        let phi1 = fields.phi1("phi1").or((!fields.present("phi1")).then_some(Phi1Choice::Optimal));
        let fnr = match (fields.present("fnr"), fields.present("target_power")) {
            (true, true) => {
                fields.number("fnr");
                fields.number("target_power");
                fields.error("target_power", "give either fnr or target_power, not both");
                None
            }
            (false, false) => {
                fields.error("fnr", "one of fnr or target_power is required");
                None
            }
            (true, false) => fields.number("fnr"),
            (false, true) => fields.number("target_power").map(|t| 1.0 - t),
        };
        let per_subject_alleles = alleles_field(fields);
        Some(Self {
            p: p?,
            fwer: fwer?,
            f: f?,
            odds: odds?,
            phi1: phi1?,
            fnr: fnr?,
            per_subject_alleles: per_subject_alleles?,
        })
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        let mut errors = Vec::new();
        let mut c = Checks(&mut errors);
        c.at_least("p", self.p, 2);
        c.open_unit("fwer", self.fwer);
        c.open_unit("f", self.f);
        c.positive("R", self.odds);
        c.phi1("phi1", self.phi1);
        c.open_unit("fnr", self.fnr);
        c.alleles("per_subject_alleles", self.per_subject_alleles);
        invalid_if_any(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeResponse {
    pub query: SampleSizeRequest,
    pub phi1_used: f64,
    pub w2: f64,
    pub n_observations: u64,
    pub n_subjects: u64,
    pub power_at_n: f64,
    /// `2 log p / w²` in subjects.
    pub n_asymptotic: f64,
    pub n_asymptotic_observations: f64,
    /// `n_subjects / n_asymptotic`.
    pub ratio_to_asymptotic: f64,
}

pub fn sample_size(q: &SampleSizeRequest) -> Result<SampleSizeResponse, ApiError> {
    q.validate()?;
    let ans = required_sample_size(&SampleSizeQuery {
        f: q.f,
        odds: q.odds,
        phi1: q.phi1,
        p: q.p,
        fwer: q.fwer,
        fnr: q.fnr,
        per_subject_alleles: q.per_subject_alleles,
    })
    .map_err(|e| ApiError::from_core(e, "R"))?;
    Ok(SampleSizeResponse {
        query: *q,
        phi1_used: ans.phi1_used,
        w2: ans.w2,
        n_observations: ans.n_observations,
        n_subjects: ans.n_subjects,
        power_at_n: ans.power_at_n,
        n_asymptotic: ans.n_asymptotic_subjects,
        n_asymptotic_observations: ans.n_asymptotic_observations,
        ratio_to_asymptotic: ans.n_subjects as f64 / ans.n_asymptotic_subjects,
    })
}

// --------------------------------------------------------------- design

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignRequest {
    pub f: f64,
    #[serde(rename = "R")]
    pub odds: f64,
}

impl DesignRequest {
    pub fn read(fields: &mut Fields) -> Option<Self> {
        let f = fields.require_number("f");
        let odds = fields.require_number("R");
        Some(Self { f: f?, odds: odds? })
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        let mut errors = Vec::new();
        let mut c = Checks(&mut errors);
        c.open_unit("f", self.f);
        c.positive("R", self.odds);
        invalid_if_any(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignAnswer {
    pub query: DesignRequest,
    pub phi1_star: f64,
    pub w2_at_optimum: f64,
    /// `w²` of the balanced design `phi1 = 1/2`, for comparison.
    pub w2_balanced: f64,
}

pub fn design(q: &DesignRequest) -> Result<DesignAnswer, ApiError> {
    q.validate()?;
    let star = optimal_phi1(q.f, q.odds).map_err(|e| ApiError::from_core(e, "R"))?;
    let at = |phi1| w2_conditional(q.f, phi1, q.odds).map_err(|e| ApiError::from_core(e, "R"));
    Ok(DesignAnswer {
        query: *q,
        phi1_star: star,
        w2_at_optimum: at(star)?,
        w2_balanced: at(0.5)?,
    })
}

// ---------------------------------------------------------------- orraf

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrrafParams {
    pub phi1: Phi1Choice,
    /// Observations (alleles) per location.
    pub n: f64,
    pub p: u64,
    pub alpha: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub f_steps: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub r_steps: usize,
    pub levels: Vec<f64>,
}

impl Default for OrrafParams {
    fn default() -> Self {
        Self {
            phi1: Phi1Choice::Fixed(0.5),
            n: 1e5,
            p: 100,
            alpha: DEFAULT_ALPHA,
            f_min: 1e-3,
            f_max: 0.5,
            f_steps: 100,
            r_min: 1.0,
            r_max: 3.0,
            r_steps: 100,
            levels: DEFAULT_EQUI_SIGNAL_LEVELS.to_vec(),
        }
    }
}

impl OrrafParams {
    /// Sample size comes as `n` (observations) or as `n_subjects` with
    /// optional `per_subject_alleles`; everything else has a default.
    pub fn read(fields: &mut Fields) -> Option<Self> {
        let d = Self::default();
        let mut ok = true;
        let mut num = |fields: &mut Fields, key: &str, default: f64| match fields.number(key) {
            Some(v) => v,
            None => {
                ok &= !fields.present(key);
                default
            }
        };
        let alpha = num(fields, "alpha", d.alpha);
        let f_min = num(fields, "f_min", d.f_min);
        let f_max = num(fields, "f_max", d.f_max);
        let r_min = num(fields, "r_min", d.r_min);
        let r_max = num(fields, "r_max", d.r_max);
        let mut int = |fields: &mut Fields, key: &str, default: u64| match fields.integer(key) {
            Some(v) => v,
            None => {
                ok &= !fields.present(key);
                default
            }
        };
        let p = int(fields, "p", d.p);
        let f_steps = int(fields, "f_steps", d.f_steps as u64) as usize;
        let r_steps = int(fields, "r_steps", d.r_steps as u64) as usize;
        let phi1 = match fields.phi1("phi1") {
            Some(v) => v,
            None => {
                ok &= !fields.present("phi1");
                d.phi1
            }
        };
        let levels = match fields.number_list("levels") {
            Some(v) => v,
            None => {
                ok &= !fields.present("levels");
                d.levels
            }
        };
        let n = match (fields.present("n"), fields.present("n_subjects")) {
            (true, true) => {
                fields.number("n");
                fields.integer("n_subjects");
                fields.error("n_subjects", "give either n or n_subjects, not both");
                None
            }
            (true, false) => fields.number("n"),
            (false, true) => {
                let subjects = fields.integer("n_subjects");
                let alleles = alleles_field(fields);
                match (subjects, alleles) {
                    (Some(s), Some(a)) if matches!(a, 1 | 2) => Some(s as f64 * f64::from(a)),
                    (Some(_), Some(_)) => {
                        fields.error("per_subject_alleles", "must be 1 or 2");
                        None
                    }
                    _ => None,
                }
            }
            (false, false) => Some(d.n),
        };
        if !ok {
            return None;
        }
        Some(Self {
            phi1,
            n: n?,
            p,
            alpha,
            f_min,
            f_max,
            f_steps,
            r_min,
            r_max,
            r_steps,
            levels,
        })
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        if self.f_steps > MAX_GRID_SIDE || self.r_steps > MAX_GRID_SIDE {
            return Err(ApiError::TooLarge(format!(
                "grid {}x{} exceeds the {MAX_GRID_SIDE}x{MAX_GRID_SIDE} cap",
                self.f_steps, self.r_steps
            )));
        }
        let mut errors = Vec::new();
        let mut c = Checks(&mut errors);
        c.phi1("phi1", self.phi1);
        c.positive("n", self.n);
        c.at_least("p", self.p, 2);
        c.open_unit("alpha", self.alpha);
        c.open_unit("f_min", self.f_min);
        c.open_unit("f_max", self.f_max);
        c.positive("r_min", self.r_min);
        c.positive("r_max", self.r_max);
        c.at_least("f_steps", self.f_steps as u64, 2);
        c.at_least("r_steps", self.r_steps as u64, 2);
        for l in &self.levels {
            c.positive("levels", *l);
        }
        if self.f_min >= self.f_max {
            errors.push(FieldError::new("f_max", "must exceed f_min"));
        }
        if self.r_min >= self.r_max {
            errors.push(FieldError::new("r_max", "must exceed r_min"));
        }
        invalid_if_any(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrrafAnswer {
    pub query: OrrafParams,
    pub level: f64,
    pub f_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// Rows over `r_grid`, columns over `f_grid`.
    pub power: Vec<Vec<f64>>,
    pub signal: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
    pub phi1_used: Vec<Vec<f64>>,
    /// Polylines of `[f, R]` vertices where `r = 1`.
    pub boundary_contour: Vec<Polyline>,
    pub equi_signal: BTreeMap<String, Vec<Polyline>>,
}

/// The validated grid in core form (flat, row-major).
pub fn orraf_core(q: &OrrafParams) -> Result<OrrafGrid, ApiError> {
    q.validate()?;
    let f_grid = log_spaced(q.f_min, q.f_max, q.f_steps).map_err(|e| ApiError::from_core(e, "f_min"))?;
    let r_grid = linear_spaced(q.r_min, q.r_max, q.r_steps).map_err(|e| ApiError::from_core(e, "r_min"))?;
    orraf_grid(&OrrafRequest {
        phi1: q.phi1,
        n: q.n,
        p: q.p,
        alpha: q.alpha,
        f_grid,
        r_grid,
        levels: q.levels.clone(),
    })
    .map_err(|e| ApiError::from_core(e, "query"))
}

pub fn orraf(q: &OrrafParams) -> Result<OrrafAnswer, ApiError> {
    let grid = orraf_core(q)?;
    let rows = |v: &[f64]| v.chunks(grid.f_grid.len()).map(<[f64]>::to_vec).collect();
    Ok(OrrafAnswer {
        query: q.clone(),
        level: q.alpha / q.p as f64,
        power: rows(&grid.power),
        signal: rows(&grid.signal),
        w2: rows(&grid.w2),
        phi1_used: rows(&grid.phi1_used),
        f_grid: grid.f_grid,
        r_grid: grid.r_grid,
        boundary_contour: grid.boundary_contour,
        equi_signal: grid.equi_signal,
    })
}

// ----------------------------------------------------------- boundaries

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundariesAnswer {
    pub beta: Vec<f64>,
    pub detection: Vec<f64>,
    pub approx: Vec<f64>,
    pub exact_approx: Vec<f64>,
    pub approx_exact: Vec<f64>,
    pub exact: Vec<f64>,
}

/// `beta_grid` (explicit values) or `beta_steps` (interior grid); defaults
/// to [`DEFAULT_BETA_STEPS`] interior points.
pub fn read_beta_grid(fields: &mut Fields) -> Option<Vec<f64>> {
    match (fields.present("beta_grid"), fields.present("beta_steps")) {
        (true, true) => {
            fields.number_list("beta_grid");
            fields.integer("beta_steps");
            fields.error("beta_steps", "give either beta_grid or beta_steps, not both");
            None
        }
        (true, false) => fields.number_list("beta_grid"),
        (false, true) => fields.integer("beta_steps").map(|n| interior_grid(n as usize)),
        (false, false) => Some(interior_grid(DEFAULT_BETA_STEPS)),
    }
}

pub fn boundaries(beta: &[f64]) -> Result<BoundariesAnswer, ApiError> {
    if beta.is_empty() {
        return Err(ApiError::field("beta_grid", "is empty"));
    }
    if beta.len() > MAX_GRID_SIDE * MAX_GRID_SIDE {
        return Err(ApiError::TooLarge(format!("{} beta values", beta.len())));
    }
    if let Some(b) = beta.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
        return Err(ApiError::field("beta_grid", format!("values must lie in (0, 1), got {b}")));
    }
    let curves = BoundaryCurves::sample(beta).map_err(|e| ApiError::from_core(e, "beta_grid"))?;
    let values = |c: &[suprec::boundaries::CurveSample]| c.iter().map(|s| s.value).collect();
    Ok(BoundariesAnswer {
        beta: beta.to_vec(),
        detection: values(&curves.detection),
        approx: values(&curves.approx),
        exact_approx: values(&curves.exact_approx),
        approx_exact: values(&curves.approx_exact),
        exact: values(&curves.exact),
    })
}

// -------------------------------------------------------------- catalog

pub const SURVIVAL_BIAS_CAVEAT: &str =
    "catalog effect sizes and frequencies come from discovered associations and are subject to survival bias; \
     do not read them at face value";

/// Parses a catalog TSV; malformed rows come back as rejects.
pub fn catalog(tsv: &[u8]) -> Result<Catalog, ApiError> {
    ingest_catalog_from(tsv, "<request body>".as_ref()).map_err(|e| ApiError::from_core(e, "body"))
}

/// A catalog record placed on the power surface at its reported sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlayPoint {
    pub id: String,
    pub f: f64,
    #[serde(rename = "R")]
    pub odds: f64,
    pub n_cases: u64,
    pub n_controls: u64,
    /// `n_cases / (n_cases + n_controls)`.
    pub phi1: f64,
    pub w2: f64,
    pub n_observations: u64,
    pub power: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogOverlay {
    pub p: u64,
    pub alpha: f64,
    pub per_subject_alleles: u32,
    pub records: Vec<OverlayPoint>,
    pub rejects: Vec<CatalogReject>,
    pub survival_bias_caveat: bool,
    pub caveat: &'static str,
}

pub fn catalog_overlay(cat: Catalog, p: u64, alpha: f64, per_subject_alleles: u32) -> Result<CatalogOverlay, ApiError> {
    let mut errors = Vec::new();
    let mut c = Checks(&mut errors);
    c.at_least("p", p, 2);
    c.open_unit("alpha", alpha);
    c.alleles("per_subject_alleles", per_subject_alleles);
    invalid_if_any(errors)?;
    let test = PowerThreshold::new(p, alpha, 1).map_err(|e| ApiError::from_core(e, "alpha"))?;
    let two_log_p = 2.0 * (p as f64).ln();
    let mut rejects = cat.rejects;
    let mut records = Vec::with_capacity(cat.records.len());
    for rec in cat.records {
        let subjects = rec.n_cases + rec.n_controls;
        let phi1 = rec.n_cases as f64 / subjects as f64;
        let placed = (|| {
            let w2 = w2_conditional(rec.f, phi1, rec.odds)?;
            let n_observations = subjects * u64::from(per_subject_alleles);
            let lambda = n_observations as f64 * w2;
            Ok::<_, suprec::Error>((w2, n_observations, test.power(lambda)?, lambda / two_log_p))
        })();
        match placed {
            Ok((w2, n_observations, power, r)) => records.push(OverlayPoint {
                id: rec.id,
                f: rec.f,
                odds: rec.odds,
                n_cases: rec.n_cases,
                n_controls: rec.n_controls,
                phi1,
                w2,
                n_observations,
                power,
                r,
            }),
            Err(e) => rejects.push(CatalogReject {
                line: 0,
                content: rec.id,
                reason: e.to_string(),
            }),
        }
    }
    Ok(CatalogOverlay {
        p,
        alpha,
        per_subject_alleles,
        records,
        rejects,
        survival_bias_caveat: cat.survival_bias_caveat,
        caveat: SURVIVAL_BIAS_CAVEAT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_power() -> PowerQuery {
        PowerQuery {
            p: 1_000_000,
            alpha: 0.05,
            f: 0.01,
            odds: 1.2,
            phi1: Phi1Choice::Optimal,
            n_subjects: 165_035,
            per_subject_alleles: 2,
        }
    }

    #[test]
    fn worked_example_power_is_half() {
        let a = power(&worked_power()).unwrap();
        assert!((a.power - 0.5).abs() < 0.01, "{}", a.power);
        assert!((a.phi1_used - 0.478).abs() < 1e-3);
        assert_eq!(a.n_observations, 330_070);
        assert_eq!(a.lambda, 330_070.0 * a.w2);
    }

    #[test]
    fn null_odds_power_is_level() {
        let a = power(&PowerQuery {
            odds: 1.0,
            ..worked_power()
        })
        .unwrap();
        assert_eq!(a.r, 0.0);
        assert!((a.power - 5e-8).abs() < 1e-15);
        assert_eq!(a.classification, "unsolvable");
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = power(&PowerQuery {
            f: -0.1,
            per_subject_alleles: 3,
            ..worked_power()
        })
        .unwrap_err();
        let ApiError::Invalid(list) = err else { panic!() };
        let names: Vec<_> = list.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(names, ["f", "per_subject_alleles"]);
    }

    #[test]
    fn sample_size_and_design() {
        let q = SampleSizeRequest {
            p: 1_000_000,
            fwer: 0.05,
            f: 0.01,
            odds: 1.2,
            phi1: Phi1Choice::Optimal,
            fnr: 0.5,
            per_subject_alleles: 2,
        };
        let a = sample_size(&q).unwrap();
        assert!((a.n_subjects as f64 / 165_035.0 - 1.0).abs() < 5e-3);
        assert!((a.n_asymptotic / 153_509.0 - 1.0).abs() < 5e-3);
        assert!(matches!(
            sample_size(&SampleSizeRequest { odds: 1.0, ..q }),
            Err(ApiError::Infeasible(_))
        ));
        let d = design(&DesignRequest { f: 0.01, odds: 1.2 }).unwrap();
        assert!((d.phi1_star - 0.478).abs() < 1e-3);
        assert_eq!(design(&DesignRequest { f: 0.3, odds: 1.0 }).unwrap().phi1_star, 0.5);
    }

    #[test]
    fn orraf_caps_and_shapes() {
        let q = OrrafParams {
            f_steps: 20,
            r_steps: 10,
            ..OrrafParams::default()
        };
        let a = orraf(&q).unwrap();
        assert_eq!(a.power.len(), 10);
        assert!(a.power.iter().all(|row| row.len() == 20));
        assert!(a.power[0].iter().all(|&v| (v - a.level).abs() < 1e-10 * a.level));
        let big = OrrafParams {
            f_steps: 513,
            ..OrrafParams::default()
        };
        assert!(matches!(orraf(&big), Err(ApiError::TooLarge(_))));
    }

    #[test]
    fn boundaries_rows() {
        let a = boundaries(&interior_grid(3)).unwrap();
        assert_eq!(a.beta.len(), 3);
        assert!(a.exact_approx.iter().all(|&v| v == 1.0));
        assert!(boundaries(&[]).is_err());
        assert!(boundaries(&[1.5]).is_err());
    }
}
