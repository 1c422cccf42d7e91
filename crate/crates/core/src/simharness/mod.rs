//! Monte Carlo harness: instance generation for the chi-square and one-sided
//! Gaussian models, grid execution over (β, r) and aggregation of risks.
//!
//! Each replicate draws from its own counter-derived stream keyed by the
//! master seed and the cell coordinates (by value, not by grid position), so
//! results are reproducible under any schedule and any worker count.

mod config;
mod csv_io;

pub use config::{parse_alpha, parse_grid, parse_model, parse_signal, AlphaSpec, ConfigFile, GridSpec};
pub use csv_io::{emit_csv, read_csv, read_csv_from, write_csv, CSV_HEADER};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample_chisq, ChiSqParams};
use crate::error::{domain, Result};
use crate::procedures::{self, ChiSquareNull, GaussianNull, NullModel, ProcedureId};
use crate::risk::{self, RiskAccumulator, RiskSummary};
use crate::rng::StreamKey;

/// Replicates handled per task before partial sums are merged.
pub const CHUNK: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    ChiSquare { nu: u32 },
    GaussianOneSided,
}

impl Model {
    pub fn tag(self) -> &'static str {
        match self {
            Model::ChiSquare { .. } => "chisq",
            Model::GaussianOneSided => "gaussian",
        }
    }

    pub fn nu(self) -> Option<u32> {
        match self {
            Model::ChiSquare { nu } => Some(nu),
            Model::GaussianOneSided => None,
        }
    }

    pub fn null_model(self) -> Result<Box<dyn NullModel>> {
        Ok(match self {
            Model::ChiSquare { nu } => Box::new(ChiSquareNull::new(nu)?),
            Model::GaussianOneSided => Box::new(GaussianNull),
        })
    }

    fn key_words(self) -> (u64, u64) {
        match self {
            Model::ChiSquare { nu } => (1, u64::from(nu)),
            Model::GaussianOneSided => (2, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// `α = 1 / (5 log p)`.
    SlowlyVanishing,
    Fixed(f64),
}

impl AlphaRule {
    pub fn level(self, p: usize) -> f64 {
        match self {
            AlphaRule::SlowlyVanishing => 1.0 / (5.0 * (p as f64).ln()),
            AlphaRule::Fixed(a) => a,
        }
    }
}

/// How signal sizes are spread over the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalShape {
    /// Every signal has `λ = 2 r log p`.
    Equal,
    /// Grid value `r` is the centre; `λ(i)` is uniform on
    /// `[2 r_low log p, 2 r_high log p]` with `r_low = max(0, r − half_width)`
    /// and `r_high = r + half_width`.
    Range { half_width: f64 },
}

/// Signal specification of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellSignal {
    /// Empty support: every coordinate is null.
    Null,
    Equal { r: f64 },
    Range { r_low: f64, r_high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub model: Model,
    pub p: usize,
    pub beta: f64,
    pub signal: CellSignal,
}

impl Cell {
    /// The `r` coordinate reported for the cell; `None` for null cells.
    pub fn r(&self) -> Option<f64> {
        match self.signal {
            CellSignal::Null => None,
            CellSignal::Equal { r } => Some(r),
            CellSignal::Range { r_low, r_high } => Some(0.5 * (r_low + r_high)),
        }
    }

    fn stream_key(&self, seed: u64, rep: u64) -> StreamKey {
        let (model, nu) = self.model.key_words();
        let key = StreamKey::new(seed)
            .with(model)
            .with(nu)
            .with(self.p as u64)
            .with_f64(self.beta);
        let key = match self.signal {
            CellSignal::Null => key.with(0),
            CellSignal::Equal { r } => key.with(1).with_f64(r),
            CellSignal::Range { r_low, r_high } => key.with(2).with_f64(r_low).with_f64(r_high),
        };
        key.with(rep)
    }
}

/// A full simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub p: usize,
    pub beta_grid: Vec<f64>,
    /// Empty grid: null-only calibration run with `S = ∅`.
    pub r_grid: Vec<f64>,
    pub reps: u64,
    pub procedures: Vec<ProcedureId>,
    pub alpha_rule: AlphaRule,
    pub seed: u64,
    pub signal_shape: SignalShape,
}

fn is_sorted_strict(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(domain(format!("p must be >= 2, got {}", self.p)));
        }
        if self.reps < 1 {
            return Err(domain("reps must be >= 1"));
        }
        if let Model::ChiSquare { nu } = self.model {
            if nu < 1 {
                return Err(domain("nu must be >= 1"));
            }
        }
        if self.beta_grid.is_empty() {
            return Err(domain("beta grid is empty"));
        }
        if let Some(b) = self.beta_grid.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(domain(format!("beta values must lie in (0, 1), got {b}")));
        }
        if let Some(r) = self.r_grid.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(domain(format!("r values must be finite and >= 0, got {r}")));
        }
        if !is_sorted_strict(&self.beta_grid) || !is_sorted_strict(&self.r_grid) {
            return Err(domain("beta and r grids must be strictly increasing"));
        }
        if self.procedures.is_empty() {
            return Err(domain("no procedures selected"));
        }
        if self.r_grid.is_empty() && self.procedures.contains(&ProcedureId::OracleExact) {
            return Err(domain("the exact oracle needs signals; supply an r grid"));
        }
        if let AlphaRule::Fixed(a) = self.alpha_rule {
            if !(a > 0.0 && a < 1.0) {
                return Err(domain(format!("alpha must lie in (0, 1), got {a}")));
            }
        }
        if let SignalShape::Range { half_width } = self.signal_shape {
            if !(half_width >= 0.0 && half_width.is_finite()) {
                return Err(domain("signal half width must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_rule.level(self.p)
    }

    /// Procedures in canonical (output) order, without duplicates.
    pub fn sorted_procedures(&self) -> Vec<ProcedureId> {
        let mut v = self.procedures.clone();
        v.sort();
        v.dedup();
        v
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &beta in &self.beta_grid {
            if self.r_grid.is_empty() {
                out.push(Cell {
                    model: self.model,
                    p: self.p,
                    beta,
                    signal: CellSignal::Null,
                });
            }
            for &r in &self.r_grid {
                let signal = match self.signal_shape {
                    SignalShape::Equal => CellSignal::Equal { r },
                    SignalShape::Range { half_width } => CellSignal::Range {
                        r_low: (r - half_width).max(0.0),
                        r_high: r + half_width,
                    },
                };
                out.push(Cell {
                    model: self.model,
                    p: self.p,
                    beta,
                    signal,
                });
            }
        }
        out
    }
}

/// Model metadata carried by an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceMeta {
    pub model: Model,
    pub p: usize,
    pub beta: f64,
    pub signal: CellSignal,
}

/// One simulated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInstance {
    pub x: Vec<f64>,
    /// True support, zero-based and increasing.
    pub support: Vec<usize>,
    pub meta: InstanceMeta,
}

/// `|S| = ⌊p^{1−β}⌋`.
pub fn support_size(p: usize, beta: f64) -> Result<usize> {
    if p < 2 {
        return Err(domain(format!("p must be >= 2, got {p}")));
    }
    let raw = (p as f64).powf(1.0 - beta);
    // Guard exact powers such as 100^0.5 against landing one ulp low.
    let s = (raw * (1.0 + 1e-12)).floor();
    if !(s >= 1.0) {
        return Err(domain(format!(
            "p^(1-beta) = {raw} < 1 leaves no signals (p = {p}, beta = {beta})"
        )));
    }
    Ok(s as usize)
}

/// Draws one instance of the cell's model.
pub fn generate_instance<R: Rng + ?Sized>(cell: &Cell, rng: &mut R) -> Result<ModelInstance> {
    let p = cell.p;
    if p < 1 {
        return Err(domain("p must be >= 1"));
    }
    let s = match cell.signal {
        CellSignal::Null => 0,
        _ => support_size(p, cell.beta)?,
    };
    let mut support = index::sample(rng, p, s).into_vec();
    support.sort_unstable();
    let mut is_signal = vec![false; p];
    for &i in &support {
        is_signal[i] = true;
    }

    let two_log_p = 2.0 * (p as f64).ln();
    let (lambda_low, lambda_high) = match cell.signal {
        CellSignal::Null => (0.0, 0.0),
        CellSignal::Equal { r } => (two_log_p * r, two_log_p * r),
        CellSignal::Range { r_low, r_high } => (two_log_p * r_low, two_log_p * r_high),
    };

    let x = match cell.model {
        Model::ChiSquare { nu } => {
            let null = ChiSqParams::central(nu)?;
            let equal = ChiSqParams::new(nu, lambda_low)?;
            let mut x = Vec::with_capacity(p);
            for &sig in &is_signal {
                let v = if !sig {
                    sample_chisq(null, rng)
                } else if lambda_high > lambda_low {
                    let lambda = rng.random_range(lambda_low..=lambda_high);
                    sample_chisq(ChiSqParams::new(nu, lambda)?, rng)
                } else {
                    sample_chisq(equal, rng)
                };
                x.push(v);
            }
            x
        }
        Model::GaussianOneSided => {
            let mut x = Vec::with_capacity(p);
            for &sig in &is_signal {
                let z: f64 = rng.sample(StandardNormal);
                let shift = if !sig {
                    0.0
                } else if lambda_high > lambda_low {
                    rng.random_range(lambda_low..=lambda_high).sqrt()
                } else {
                    lambda_low.sqrt()
                };
                x.push(z + shift);
            }
            x
        }
    };

    Ok(ModelInstance {
        x,
        support,
        meta: InstanceMeta {
            model: cell.model,
            p,
            beta: cell.beta,
            signal: cell.signal,
        },
    })
}

/// Applies each procedure to one instance and scores the selections.
pub fn evaluate_instance(
    instance: &ModelInstance,
    procedures: &[ProcedureId],
    alpha: f64,
    null: &dyn NullModel,
) -> Result<Vec<risk::ReplicateOutcome>> {
    let p = instance.x.len();
    procedures
        .iter()
        .map(|&id| {
            let sel = procedures::apply(id, &instance.x, alpha, null, &instance.support)?;
            risk::evaluate_replicate(&sel.selected, &instance.support, p)
        })
        .collect()
}

/// Aggregate for one (cell, procedure) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCellResult {
    pub model: Model,
    pub p: usize,
    pub beta: f64,
    pub r: Option<f64>,
    pub procedure: ProcedureId,
    pub seed: u64,
    pub summary: RiskSummary,
}

fn chunk_starts(reps: u64) -> Vec<u64> {
    (0..reps).step_by(CHUNK as usize).collect()
}

fn run_chunk<G>(
    config: &ExperimentConfig,
    cell: &Cell,
    procedures: &[ProcedureId],
    null: &dyn NullModel,
    start: u64,
    generator: &G,
) -> Result<Vec<RiskAccumulator>>
where
    G: Fn(&Cell, &mut ChaCha8Rng) -> Result<ModelInstance> + Sync,
{
    let alpha = config.alpha();
    let end = (start + CHUNK).min(config.reps);
    let mut acc = vec![RiskAccumulator::new(); procedures.len()];
    for rep in start..end {
        let mut rng = cell.stream_key(config.seed, rep).rng();
        let instance = generator(cell, &mut rng)?;
        let outcomes = evaluate_instance(&instance, procedures, alpha, null)?;
        for (a, o) in acc.iter_mut().zip(&outcomes) {
            a.push(o);
        }
    }
    Ok(acc)
}

fn finish_cell(
    config: &ExperimentConfig,
    cell: &Cell,
    procedures: &[ProcedureId],
    parts: &[Vec<RiskAccumulator>],
) -> Result<Vec<GridCellResult>> {
    let mut totals = vec![RiskAccumulator::new(); procedures.len()];
    for part in parts {
        for (t, a) in totals.iter_mut().zip(part) {
            t.merge(a);
        }
    }
    procedures
        .iter()
        .zip(&totals)
        .map(|(&procedure, acc)| {
            Ok(GridCellResult {
                model: cell.model,
                p: cell.p,
                beta: cell.beta,
                r: cell.r(),
                procedure,
                seed: config.seed,
                summary: acc.summary()?,
            })
        })
        .collect()
}

/// Runs one cell with a caller-supplied instance generator (used to inject
/// synthetic instances); results come back in canonical procedure order.
pub fn run_cell_with<G>(config: &ExperimentConfig, cell: &Cell, generator: G) -> Result<Vec<GridCellResult>>
where
    G: Fn(&Cell, &mut ChaCha8Rng) -> Result<ModelInstance> + Sync,
{
    config.validate()?;
    let procedures = config.sorted_procedures();
    let null = cell.model.null_model()?;
    let parts = chunk_starts(config.reps)
        .into_par_iter()
        .map(|start| run_chunk(config, cell, &procedures, null.as_ref(), start, &generator))
        .collect::<Result<Vec<_>>>()?;
    finish_cell(config, cell, &procedures, &parts)
}

pub fn run_cell(config: &ExperimentConfig, cell: &Cell) -> Result<Vec<GridCellResult>> {
    run_cell_with(config, cell, generate_instance)
}

/// Evaluates every (β, r, procedure) cell; output is ordered by β, then r,
/// then procedure, whatever the execution order.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<GridCellResult>> {
    config.validate()?;
    if let AlphaRule::Fixed(a) = config.alpha_rule {
        log::warn!("fixed level {a} does not vanish with p; asymptotic guarantees assume a slowly vanishing level");
    }
    let procedures = config.sorted_procedures();
    let null = config.model.null_model()?;
    let cells = config.cells();
    let tasks: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| chunk_starts(config.reps).into_iter().map(move |s| (ci, s)))
        .collect();
    let generator = |c: &Cell, rng: &mut ChaCha8Rng| generate_instance(c, rng);
    let parts = tasks
        .into_par_iter()
        .map(|(ci, start)| run_chunk(config, &cells[ci], &procedures, null.as_ref(), start, &generator))
        .collect::<Result<Vec<_>>>()?;

    let per_cell = chunk_starts(config.reps).len();
    let mut out = Vec::with_capacity(cells.len() * procedures.len());
    for (ci, cell) in cells.iter().enumerate() {
        let slice = &parts[ci * per_cell..(ci + 1) * per_cell];
        out.extend(finish_cell(config, cell, &procedures, slice)?);
    }
    Ok(out)
}

/// [`run_grid`] on a dedicated pool of `workers` threads.
pub fn run_grid_with_workers(config: &ExperimentConfig, workers: usize) -> Result<Vec<GridCellResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| domain(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_grid(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            model: Model::ChiSquare { nu: 1 },
            p: 100,
            beta_grid: vec![0.5, 0.7],
            r_grid: vec![1.0, 3.0],
            reps: 20,
            procedures: vec![ProcedureId::BenjaminiHochberg, ProcedureId::Bonferroni],
            alpha_rule: AlphaRule::SlowlyVanishing,
            seed: 11,
            signal_shape: SignalShape::Equal,
        }
    }

    #[test]
    fn support_sizes() {
        assert_eq!(support_size(100, 0.5).unwrap(), 10);
        assert_eq!(support_size(1000, 0.6).unwrap(), 15);
        assert_eq!(support_size(10_000, 0.5).unwrap(), 100);
        assert!(support_size(1, 0.5).is_err());
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        let mut c = config();
        c.beta_grid = vec![1.5];
        assert!(c.validate().is_err());
        let mut c = config();
        c.p = 1;
        assert!(c.validate().is_err());
        let mut c = config();
        c.reps = 0;
        assert!(c.validate().is_err());
        let mut c = config();
        c.r_grid = vec![2.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = config();
        c.r_grid.clear();
        c.procedures.push(ProcedureId::OracleExact);
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_cardinality_and_order() {
        let res = run_grid(&config()).unwrap();
        assert_eq!(res.len(), 8);
        let coords: Vec<_> = res.iter().map(|r| (r.beta, r.r.unwrap(), r.procedure)).collect();
        let mut sorted = coords.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(coords, sorted);
        assert!(res.iter().all(|r| r.summary.reps == 20));
    }

    #[test]
    fn single_cell_grid_reproduces_run_cell() {
        let full = run_grid(&config()).unwrap();
        let mut one = config();
        one.beta_grid = vec![0.7];
        one.r_grid = vec![3.0];
        let cell = one.cells()[0];
        let direct = run_cell(&one, &cell).unwrap();
        let from_grid = run_grid(&one).unwrap();
        assert_eq!(direct, from_grid);
        let matching: Vec<_> = full
            .into_iter()
            .filter(|r| r.beta == 0.7 && r.r == Some(3.0))
            .collect();
        assert_eq!(matching, direct);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        assert_eq!(run_grid(&config()).unwrap(), run_grid(&config()).unwrap());
        let mut other = config();
        other.seed = 12;
        assert_ne!(run_grid(&config()).unwrap(), run_grid(&other).unwrap());
    }

    #[test]
    fn separated_instance_recovers_exactly() {
        let mut c = config();
        c.reps = 1;
        c.procedures = vec![ProcedureId::Bonferroni];
        let cell = c.cells()[0];
        let res = run_cell_with(&c, &cell, |cell, _rng| {
            let mut x = vec![0.01; cell.p];
            x[3] = 500.0;
            x[40] = 500.0;
            Ok(ModelInstance {
                x,
                support: vec![3, 40],
                meta: InstanceMeta {
                    model: cell.model,
                    p: cell.p,
                    beta: cell.beta,
                    signal: cell.signal,
                },
            })
        })
        .unwrap();
        assert_eq!(res[0].summary.p_exact, 1.0);
    }

    #[test]
    fn instance_shape() {
        let cell = config().cells()[0];
        let mut rng = cell.stream_key(1, 0).rng();
        let inst = generate_instance(&cell, &mut rng).unwrap();
        assert_eq!(inst.x.len(), 100);
        assert_eq!(inst.support.len(), 10);
        assert!(inst.support.windows(2).all(|w| w[0] < w[1]));
        assert!(inst.x.iter().all(|v| *v >= 0.0));

        let null_cell = Cell {
            signal: CellSignal::Null,
            ..cell
        };
        let inst = generate_instance(&null_cell, &mut rng).unwrap();
        assert!(inst.support.is_empty());
    }

    #[test]
    fn range_signals_stay_in_band() {
        let cell = Cell {
            model: Model::GaussianOneSided,
            p: 1000,
            beta: 0.3,
            signal: CellSignal::Range {
                r_low: 50.0,
                r_high: 60.0,
            },
        };
        let mut rng = cell.stream_key(5, 0).rng();
        let inst = generate_instance(&cell, &mut rng).unwrap();
        let two_log_p = 2.0 * 1000f64.ln();
        let lo = (50.0 * two_log_p).sqrt() - 6.0;
        let hi = (60.0 * two_log_p).sqrt() + 6.0;
        for &i in &inst.support {
            assert!(inst.x[i] > lo && inst.x[i] < hi);
        }
    }
}
