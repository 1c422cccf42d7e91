use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::g17;
use crate::procedures::ProcedureId;
use crate::risk::{Metric, RiskSummary};

use super::{GridCellResult, Model};

pub const CSV_HEADER: [&str; 11] = [
    "model", "p", "nu", "beta", "r", "procedure", "metric", "value", "se", "reps", "seed",
];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: "<stream>".into(),
            source,
        },
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

/// Writes one row per (cell, metric) with 17-significant-digit floats.
pub fn write_csv<W: Write>(results: &[GridCellResult], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for res in results {
        let nu = res.model.nu().map(|n| n.to_string()).unwrap_or_default();
        let r = res.r.map(g17).unwrap_or_default();
        let beta = g17(res.beta);
        let p = res.p.to_string();
        let reps = res.summary.reps.to_string();
        let seed = res.seed.to_string();
        for m in Metric::ALL {
            let (value, se) = res.summary.metric(m);
            w.write_record([
                res.model.tag(),
                &p,
                &nu,
                &beta,
                &r,
                res.procedure.as_str(),
                m.as_str(),
                &g17(value),
                &g17(se),
                &reps,
                &seed,
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: "<stream>".into(),
        source,
    })
}

pub fn emit_csv(results: &[GridCellResult], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut buf = BufWriter::new(file);
    write_csv(results, &mut buf).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })?;
    buf.flush().map_err(io_err)
}

type CellKey = (String, String, String, String, String, String, String, String);

/// Parses a file written by [`emit_csv`] back into cell results.
pub fn read_csv(path: &Path) -> Result<Vec<GridCellResult>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_from(file, path)
}

pub fn read_csv_from<R: Read>(input: R, path: &Path) -> Result<Vec<GridCellResult>> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_err(1, format!("unexpected header {header:?}")));
    }

    let mut out: Vec<GridCellResult> = Vec::new();
    let mut current: Option<CellKey> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("").to_string();
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("column {}: {e}", CSV_HEADER[i])))
        };
        let key: CellKey = (
            field(0),
            field(1),
            field(2),
            field(3),
            field(4),
            field(5),
            field(9),
            field(10),
        );
        if current.as_ref() != Some(&key) {
            let model = match key.0.as_str() {
                "chisq" => Model::ChiSquare {
                    nu: key.2.parse().map_err(|e| parse_err(line, format!("nu: {e}")))?,
                },
                "gaussian" => Model::GaussianOneSided,
                other => return Err(parse_err(line, format!("unknown model `{other}`"))),
            };
            let reps: u64 = key.6.parse().map_err(|e| parse_err(line, format!("reps: {e}")))?;
            let r = if key.4.is_empty() { None } else { Some(num(4)?) };
            out.push(GridCellResult {
                model,
                p: key.1.parse().map_err(|e| parse_err(line, format!("p: {e}")))?,
                beta: num(3)?,
                r,
                procedure: key
                    .5
                    .parse::<ProcedureId>()
                    .map_err(|e| parse_err(line, e.to_string()))?,
                seed: key.7.parse().map_err(|e| parse_err(line, format!("seed: {e}")))?,
                summary: RiskSummary::zeroed(reps),
            });
            current = Some(key);
        }
        let metric = Metric::parse(&field(6))
            .ok_or_else(|| parse_err(line, format!("unknown metric `{}`", field(6))))?;
        let value = num(7)?;
        let se = num(8)?;
        out.last_mut()
            .expect("pushed above")
            .summary
            .set_metric(metric, value, se);
    }
    for res in &mut out {
        res.summary.restore_counts();
    }
    Ok(out)
}
