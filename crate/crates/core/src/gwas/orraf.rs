//! OR-RAF diagrams: marginal power over (risk-allele frequency, odds ratio).

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{marching_squares, Polyline};
use super::power::PowerThreshold;
use super::{open_unit, w2_conditional, Phi1Choice};
use crate::error::{domain, Error, Result};
use crate::numfmt::g17;

/// Equi-signal levels drawn besides the `r = 1` boundary.
pub const DEFAULT_EQUI_SIGNAL_LEVELS: [f64; 6] = [0.25, 0.5, 0.75, 1.5, 2.0, 4.0];

/// `n` points from `a` to `b` evenly spaced on a log scale, endpoints exact.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(domain(format!("log-spaced grid needs positive finite ends, got {a} and {b}")));
    }
    let logs = linear_spaced(a.ln(), b.ln(), n)?;
    let mut out: Vec<f64> = logs.into_iter().map(f64::exp).collect();
    out[0] = a;
    *out.last_mut().expect("n >= 1") = b;
    Ok(out)
}

/// `n` evenly spaced points from `a` to `b`, endpoints exact.
pub fn linear_spaced(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(domain("grid needs at least one point"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrrafRequest {
    pub phi1: Phi1Choice,
    /// Multinomial observations (alleles) per location.
    pub n: f64,
    pub p: u64,
    pub alpha: f64,
    pub f_grid: Vec<f64>,
    /// Odds ratios, one per row.
    pub r_grid: Vec<f64>,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrrafGrid {
    pub phi1: Phi1Choice,
    pub n: f64,
    pub p: u64,
    pub alpha: f64,
    pub f_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// Row-major, rows over `r_grid`, columns over `f_grid`.
    pub power: Vec<f64>,
    /// `r = n·w² / (2 log p)` on the same layout.
    pub signal: Vec<f64>,
    pub w2: Vec<f64>,
    /// Case fraction used per cell (varies only for the optimal design).
    pub phi1_used: Vec<f64>,
    /// `r = 1`, as `[f, R]` vertex lists.
    pub boundary_contour: Vec<Polyline>,
    /// Keyed by the level written with 17 significant digits.
    pub equi_signal: BTreeMap<String, Vec<Polyline>>,
}

fn check_grid(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(domain(format!("{name} is empty")));
    }
    if !v.windows(2).all(|w| w[0] < w[1]) {
        return Err(domain(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

/// Contours in `(ln f, R)` coordinates, mapped back to `f`.
fn contours(f_grid: &[f64], r_grid: &[f64], field: &[f64], level: f64) -> Vec<Polyline> {
    let log_f: Vec<f64> = f_grid.iter().map(|f| f.ln()).collect();
    marching_squares(&log_f, r_grid, field, level)
        .into_iter()
        .map(|line| line.into_iter().map(|[x, y]| [x.exp(), y]).collect())
        .collect()
}

pub fn orraf_grid(req: &OrrafRequest) -> Result<OrrafGrid> {
    check_grid("f grid", &req.f_grid)?;
    check_grid("R grid", &req.r_grid)?;
    for &f in &req.f_grid {
        open_unit("f", f)?;
    }
    if let Some(r) = req.r_grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(domain(format!("odds ratios must be finite and > 0, got {r}")));
    }
    if !(req.n > 0.0 && req.n.is_finite()) {
        return Err(domain(format!("n must be finite and > 0, got {}", req.n)));
    }
    if req.p < 2 {
        return Err(domain("p must be >= 2"));
    }
    if let Some(l) = req.levels.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(domain(format!("contour levels must be finite and > 0, got {l}")));
    }
    if let Phi1Choice::Fixed(v) = req.phi1 {
        open_unit("phi1", v)?;
    }
    let test = PowerThreshold::new(req.p, req.alpha, 1)?;
    let two_log_p = 2.0 * (req.p as f64).ln();

    let rows: Vec<Vec<(f64, f64, f64, f64)>> = req
        .r_grid
        .par_iter()
        .map(|&odds| {
            req.f_grid
                .iter()
                .map(|&f| {
                    let phi1 = req.phi1.resolve(f, odds)?;
                    let w2 = w2_conditional(f, phi1, odds)?;
                    let lambda = req.n * w2;
                    Ok((phi1, w2, test.power(lambda)?, lambda / two_log_p))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let cells = req.f_grid.len() * req.r_grid.len();
    let (mut phi1_used, mut w2, mut power, mut signal) = (
        Vec::with_capacity(cells),
        Vec::with_capacity(cells),
        Vec::with_capacity(cells),
        Vec::with_capacity(cells),
    );
    for (ph, w, pw, r) in rows.into_iter().flatten() {
        phi1_used.push(ph);
        w2.push(w);
        power.push(pw);
        signal.push(r);
    }

    let boundary_contour = contours(&req.f_grid, &req.r_grid, &signal, 1.0);
    let equi_signal = req
        .levels
        .iter()
        .map(|&l| (g17(l), contours(&req.f_grid, &req.r_grid, &signal, l)))
        .collect();

    Ok(OrrafGrid {
        phi1: req.phi1,
        n: req.n,
        p: req.p,
        alpha: req.alpha,
        f_grid: req.f_grid.clone(),
        r_grid: req.r_grid.clone(),
        power,
        signal,
        w2,
        phi1_used,
        boundary_contour,
        equi_signal,
    })
}

impl OrrafGrid {
    /// Power at row `i` (odds ratio) and column `j` (frequency).
    pub fn power_at(&self, i: usize, j: usize) -> f64 {
        self.power[i * self.f_grid.len() + j]
    }

    /// One line per cell: `f,odds_ratio,phi1,w2,power,r`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |source| Error::Io {
            path: "<stream>".into(),
            source,
        };
        writeln!(out, "f,odds_ratio,phi1,w2,power,r").map_err(io)?;
        let nf = self.f_grid.len();
        for (i, odds) in self.r_grid.iter().enumerate() {
            for (j, f) in self.f_grid.iter().enumerate() {
                let k = i * nf + j;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    g17(*f),
                    g17(*odds),
                    g17(self.phi1_used[k]),
                    g17(self.w2[k]),
                    g17(self.power[k]),
                    g17(self.signal[k])
                )
                .map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }
}
