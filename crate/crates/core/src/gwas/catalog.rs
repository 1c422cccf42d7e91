//! Tab-separated association catalogs (`id raf or n_cases n_controls`).
//!
//! Published estimates come from the same data used to select the hits, so
//! every catalog carries a survival-bias caveat flag for display.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::g17;

pub const CATALOG_COLUMNS: [&str; 5] = ["id", "raf", "or", "n_cases", "n_controls"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub id: String,
    pub f: f64,
    pub odds: f64,
    pub n_cases: u64,
    pub n_controls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogReject {
    pub line: usize,
    pub content: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub records: Vec<CatalogRecord>,
    pub rejects: Vec<CatalogReject>,
    pub survival_bias_caveat: bool,
}

fn parse_row(fields: &[&str]) -> std::result::Result<CatalogRecord, String> {
    if fields.len() != CATALOG_COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", CATALOG_COLUMNS.len(), fields.len()));
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let real = |k: usize| -> std::result::Result<f64, String> {
        fields[k]
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("{} is not a number: `{}`", CATALOG_COLUMNS[k], fields[k].trim()))
    };
    let count = |k: usize| -> std::result::Result<u64, String> {
        fields[k]
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("{} is not a count >= 0: `{}`", CATALOG_COLUMNS[k], fields[k].trim()))
    };
    let f = real(1)?;
    if !(f > 0.0 && f < 1.0) {
        return Err(format!("raf must lie in (0, 1), got {f}"));
    }
    let odds = real(2)?;
    if !(odds > 0.0 && odds.is_finite()) {
        return Err(format!("or must be finite and > 0, got {odds}"));
    }
    Ok(CatalogRecord {
        id: id.to_string(),
        f,
        odds,
        n_cases: count(3)?,
        n_controls: count(4)?,
    })
}

/// Streams a catalog; `path` is used for error context only.
pub fn ingest_catalog_from<R: Read>(input: R, path: &Path) -> Result<Catalog> {
    let mut lines = BufReader::new(input).lines();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let header = match lines.next() {
        Some(line) => line.map_err(io)?,
        None => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: "missing header".into(),
            })
        }
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    if cols != CATALOG_COLUMNS {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("header must be `{}`, got `{header}`", CATALOG_COLUMNS.join("\\t")),
        });
    }
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(io)?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match parse_row(&fields) {
            Ok(rec) => records.push(rec),
            Err(reason) => rejects.push(CatalogReject {
                line: k + 2,
                content: line.to_string(),
                reason,
            }),
        }
    }
    Ok(Catalog {
        records,
        rejects,
        survival_bias_caveat: true,
    })
}

pub fn ingest_catalog(path: &Path) -> Result<Catalog> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_catalog_from(file, path)
}

/// Writes records in the format read by [`ingest_catalog`].
pub fn write_catalog<W: Write>(records: &[CatalogRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", CATALOG_COLUMNS.join("\t"))?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.id,
            g17(r.f),
            g17(r.odds),
            r.n_cases,
            r.n_controls
        )?;
    }
    out.flush()
}
