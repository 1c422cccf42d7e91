use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use suprec::gwas::ingest_catalog;
use suprec::numfmt::g17;
use suprec::procedures::ProcedureId;
use suprec::rng::fresh_seed;
use suprec::simharness::{run_grid_with_workers, write_csv, AlphaSpec, ConfigFile, GridSpec};
use suprec_service::api::{self, CatalogOverlay, OrrafAnswer, OrrafParams};
use suprec_service::to_json_bytes;

use crate::{
    BoundariesArgs, CliError, DesignArgs, GridFormat, OrrafArgs, PowerArgs, SampleSizeArgs, ServeArgs, SimulateArgs,
};

type CliResult = Result<(), CliError>;

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// A buffered file, or stdout when no path is given.
fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    let label = path.unwrap_or(Path::new("<stdout>"));
    let mut out = open_output(path)?;
    out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| io_error(label, e))
}

fn csv_error(path: Option<&Path>, e: csv::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.unwrap_or(Path::new("<stdout>")).display()))
}

// ------------------------------------------------------------- simulate

const DEFAULT_REPS: u64 = 1000;

fn default_procedures() -> Vec<String> {
    ProcedureId::ALL
        .iter()
        .filter(|p| !p.is_oracle())
        .map(|p| p.as_str().to_string())
        .collect()
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// The config file (if any) with command-line flags laid over it.
fn merged_config(a: &SimulateArgs) -> Result<ConfigFile, CliError> {
    let mut cfg = match &a.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile {
            model: "chisq".into(),
            nu: None,
            p: a.p.ok_or_else(|| usage("--p is required without --config"))?,
            beta_grid: GridSpec::Text(
                a.beta_grid.clone().ok_or_else(|| usage("--beta-grid is required without --config"))?,
            ),
            r_grid: None,
            reps: DEFAULT_REPS,
            procedures: default_procedures(),
            alpha: None,
            seed: None,
            signal: None,
            half_width: None,
        },
    };
    if let Some(m) = &a.model {
        cfg.model = m.clone();
    }
    if a.nu.is_some() {
        cfg.nu = a.nu;
    }
    if let Some(p) = a.p {
        cfg.p = p;
    }
    if let Some(g) = &a.beta_grid {
        cfg.beta_grid = GridSpec::Text(g.clone());
    }
    if let Some(g) = &a.r_grid {
        cfg.r_grid = Some(GridSpec::Text(g.clone()));
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(list) = &a.procedures {
        cfg.procedures = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(alpha) = &a.alpha {
        cfg.alpha = Some(AlphaSpec::Rule(alpha.clone()));
    }
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    if a.signal.is_some() {
        cfg.signal = a.signal.clone();
    }
    if a.half_width.is_some() {
        cfg.half_width = a.half_width;
    }
    Ok(cfg)
}

pub fn simulate(a: SimulateArgs) -> CliResult {
    let cfg = merged_config(&a)?;
    let pinned = cfg.seed.is_some();
    let experiment = cfg.into_experiment(fresh_seed())?;
    if !pinned {
        eprintln!("seed: {} (derived; pass --seed {} to repeat this run)", experiment.seed, experiment.seed);
    }
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    if workers == 0 {
        return Err(usage("--workers must be >= 1"));
    }
    let cells = experiment.cells().len();
    let start = Instant::now();
    let results = run_grid_with_workers(&experiment, workers)?;
    let elapsed = start.elapsed();
    let out = open_output(a.out.as_deref())?;
    write_csv(&results, out)?;
    eprintln!(
        "{cells} cells x {} procedures = {} aggregates, {} reps each, {workers} workers, {:.2} s",
        experiment.sorted_procedures().len(),
        results.len(),
        experiment.reps,
        elapsed.as_secs_f64()
    );
    Ok(())
}

// ----------------------------------------------------------- boundaries

pub fn boundaries(a: BoundariesArgs) -> CliResult {
    let grid = match (&a.beta_grid, a.beta_steps) {
        (Some(text), _) => suprec::simharness::parse_grid(text)?,
        (None, steps) => suprec::boundaries::interior_grid(steps.unwrap_or(api::DEFAULT_BETA_STEPS)),
    };
    if grid.is_empty() {
        return Err(usage("the beta grid is empty (use --beta-steps N with N >= 1)"));
    }
    let ans = api::boundaries(&grid)?;
    let path = a.out.as_deref();
    let mut w = csv::Writer::from_writer(open_output(path)?);
    w.write_record(["beta", "detection", "approx", "exact_approx", "approx_exact", "exact"])
        .map_err(|e| csv_error(path, e))?;
    for i in 0..ans.beta.len() {
        let row = [ans.beta[i], ans.detection[i], ans.approx[i], ans.exact_approx[i], ans.approx_exact[i], ans.exact[i]];
        w.write_record(row.map(g17)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path.unwrap_or(Path::new("<stdout>")), e))
}

// ------------------------------------------ power, sample size, design

fn print_table(rows: &[(&str, String)]) -> CliResult {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut text = String::new();
    for (k, v) in rows {
        text.push_str(&format!("{k:<width$}  {v}\n"));
    }
    write_all(None, text.as_bytes())
}

pub fn power(a: PowerArgs) -> CliResult {
    let q = api::PowerQuery {
        p: a.p,
        alpha: a.alpha,
        f: a.f,
        odds: a.odds,
        phi1: a.phi1,
        n_subjects: a.n_subjects,
        per_subject_alleles: a.per_subject_alleles,
    };
    let ans = api::power(&q)?;
    if a.json {
        return write_all(None, &to_json_bytes(&ans));
    }
    print_table(&[
        ("case fraction", format!("{:.6}", ans.phi1_used)),
        ("w2", format!("{:.6e}", ans.w2)),
        ("observations", ans.n_observations.to_string()),
        ("noncentrality", format!("{:.6}", ans.lambda)),
        ("level alpha/p", format!("{:.6e}", ans.level)),
        ("threshold", format!("{:.6}", ans.threshold)),
        ("power", format!("{:.6e}", ans.power)),
        ("r", format!("{:.6} ({} vs {} boundary)", ans.r, ans.classification, ans.boundary)),
    ])
}

pub fn sample_size(a: SampleSizeArgs) -> CliResult {
    let fnr = match (a.fnr, a.target_power) {
        (Some(f), None) => f,
        (None, Some(t)) => 1.0 - t,
        _ => return Err(usage("give exactly one of --fnr and --target-power")),
    };
    let q = api::SampleSizeRequest {
        p: a.p,
        fwer: a.fwer,
        f: a.f,
        odds: a.odds,
        phi1: a.phi1,
        fnr,
        per_subject_alleles: a.per_subject_alleles,
    };
    let ans = api::sample_size(&q)?;
    if a.json {
        return write_all(None, &to_json_bytes(&ans));
    }
    print_table(&[
        ("case fraction", format!("{:.6}", ans.phi1_used)),
        ("w2", format!("{:.6e}", ans.w2)),
        ("subjects", ans.n_subjects.to_string()),
        ("observations", ans.n_observations.to_string()),
        ("power at n", format!("{:.6}", ans.power_at_n)),
        ("asymptotic subjects", format!("{:.0}", ans.n_asymptotic)),
        ("ratio", format!("{:.4}", ans.ratio_to_asymptotic)),
    ])
}

pub fn design(a: DesignArgs) -> CliResult {
    let ans = api::design(&api::DesignRequest { f: a.f, odds: a.odds })?;
    if a.json {
        return write_all(None, &to_json_bytes(&ans));
    }
    print_table(&[
        ("optimal case fraction", format!("{:.6}", ans.phi1_star)),
        ("w2 at optimum", format!("{:.6e}", ans.w2_at_optimum)),
        ("w2 balanced", format!("{:.6e}", ans.w2_balanced)),
    ])
}

// ---------------------------------------------------------------- orraf

/// The `/v1/orraf` body, plus the overlay when a catalog was given.
#[derive(Serialize)]
struct OrrafOutput {
    #[serde(flatten)]
    grid: OrrafAnswer,
    #[serde(skip_serializing_if = "Option::is_none")]
    catalog: Option<CatalogOverlay>,
}

fn orraf_params(a: &OrrafArgs) -> Result<OrrafParams, CliError> {
    let n = match (a.n, a.n_subjects) {
        (Some(n), _) => n,
        (None, Some(s)) => {
            if !matches!(a.per_subject_alleles, 1 | 2) {
                return Err(usage("--per-subject-alleles must be 1 or 2"));
            }
            s as f64 * f64::from(a.per_subject_alleles)
        }
        (None, None) => OrrafParams::default().n,
    };
    Ok(OrrafParams {
        phi1: a.phi1,
        n,
        p: a.p,
        alpha: a.alpha,
        f_min: a.f_min,
        f_max: a.f_max,
        f_steps: a.f_steps,
        r_min: a.r_min,
        r_max: a.r_max,
        r_steps: a.r_steps,
        levels: a.levels.clone().unwrap_or_else(|| OrrafParams::default().levels),
    })
}

fn load_overlay(path: &Path, a: &OrrafArgs) -> Result<CatalogOverlay, CliError> {
    let overlay = api::catalog_overlay(ingest_catalog(path)?, a.p, a.alpha, a.per_subject_alleles)?;
    for r in &overlay.rejects {
        log::warn!("{}: line {}: {} ({:?})", path.display(), r.line, r.reason, r.content);
    }
    if overlay.survival_bias_caveat {
        eprintln!("note: {}", overlay.caveat);
    }
    Ok(overlay)
}

fn write_overlay_csv(overlay: &CatalogOverlay, path: &Path) -> CliResult {
    let mut w = csv::Writer::from_writer(open_output(Some(path))?);
    let err = |e| csv_error(Some(path), e);
    w.write_record([
        "id", "raf", "odds_ratio", "n_cases", "n_controls", "phi1", "w2", "n_observations", "power", "r",
        "survival_bias_caveat",
    ])
    .map_err(err)?;
    for p in &overlay.records {
        w.write_record([
            p.id.clone(),
            g17(p.f),
            g17(p.odds),
            p.n_cases.to_string(),
            p.n_controls.to_string(),
            g17(p.phi1),
            g17(p.w2),
            p.n_observations.to_string(),
            g17(p.power),
            g17(p.r),
            overlay.survival_bias_caveat.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn orraf(a: OrrafArgs) -> CliResult {
    let params = orraf_params(&a)?;
    let format = a.format.unwrap_or_else(|| match a.out.as_deref().and_then(Path::extension) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => GridFormat::Json,
        _ => GridFormat::Csv,
    });
    if format == GridFormat::Csv && a.catalog.is_some() && a.catalog_out.is_none() {
        return Err(usage("--catalog with csv output needs --catalog-out for the overlay rows"));
    }
    let overlay = a.catalog.as_deref().map(|p| load_overlay(p, &a)).transpose()?;
    match format {
        GridFormat::Json => {
            let out = OrrafOutput {
                grid: api::orraf(&params)?,
                catalog: overlay.clone(),
            };
            write_all(a.out.as_deref(), &to_json_bytes(&out))?;
            if let (Some(o), Some(path)) = (&overlay, &a.catalog_out) {
                write_overlay_csv(o, path)?;
            }
        }
        GridFormat::Csv => {
            let grid = api::orraf_core(&params)?;
            grid.write_csv(open_output(a.out.as_deref())?)?;
            if let (Some(o), Some(path)) = (&overlay, &a.catalog_out) {
                write_overlay_csv(o, path)?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- serve

pub fn serve(a: ServeArgs) -> CliResult {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(format!("cannot start runtime: {e}")))?;
    let app_dir: Option<PathBuf> = a.app_dir;
    runtime.block_on(async move {
        let listener = suprec_service::bind(a.listen)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot listen on {}: {e}", a.listen)))?;
        let local = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
        eprintln!("listening on http://{local}");
        suprec_service::serve(listener, app_dir)
            .await
            .map_err(|e| CliError::Runtime(format!("server error: {e}")))
    })
}
