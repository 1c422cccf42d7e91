//! Field-by-field reading of JSON bodies and query strings, so each domain
//! violation is reported against the parameter that caused it.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;
use suprec::gwas::Phi1Choice;

use crate::error::{ApiError, FieldError};

/// Largest integer every `f64` between 0 and it represents exactly.
const MAX_EXACT_INT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Json,
    /// Query-string values arrive as text and are parsed here.
    Query,
}

#[derive(Debug)]
pub struct Fields {
    map: BTreeMap<String, Value>,
    source: Source,
    used: BTreeSet<String>,
    errors: Vec<FieldError>,
}

impl Fields {
    pub fn from_json(body: &[u8]) -> Result<Self, ApiError> {
        let value: Value = serde_json::from_slice(body)
            .map_err(|e| ApiError::field("body", format!("not valid JSON: {e}")))?;
        match value {
            Value::Object(map) => Ok(Self::new(map.into_iter().collect(), Source::Json)),
            _ => Err(ApiError::field("body", "expected a JSON object")),
        }
    }

    pub fn from_query(pairs: Vec<(String, String)>) -> Result<Self, ApiError> {
        let mut map = BTreeMap::new();
        let mut errors = Vec::new();
        for (k, v) in pairs {
            if map.insert(k.clone(), Value::String(v)).is_some() {
                errors.push(FieldError::new(k, "given more than once"));
            }
        }
        if errors.is_empty() {
            Ok(Self::new(map, Source::Query))
        } else {
            Err(ApiError::Invalid(errors))
        }
    }

    fn new(map: BTreeMap<String, Value>, source: Source) -> Self {
        Self {
            map,
            source,
            used: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    pub fn error(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError::new(field, message));
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn present(&self, key: &str) -> bool {
        self.map.get(key).is_some_and(|v| !v.is_null())
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.used.insert(key.to_string());
        self.map.get(key).filter(|v| !v.is_null()).cloned()
    }

    pub fn number(&mut self, key: &str) -> Option<f64> {
        let parsed = match self.take(key)? {
            Value::Number(n) => n.as_f64(),
            Value::String(s) if self.source == Source::Query => s.trim().parse::<f64>().ok(),
            _ => None,
        };
        match parsed {
            Some(v) if v.is_finite() => Some(v),
            _ => {
                self.error(key, "must be a finite number");
                None
            }
        }
    }

    pub fn require_number(&mut self, key: &str) -> Option<f64> {
        if !self.present(key) {
            self.error(key, "is required");
            self.used.insert(key.to_string());
            return None;
        }
        self.number(key)
    }

    pub fn integer(&mut self, key: &str) -> Option<u64> {
        let parsed = match self.take(key)? {
            Value::Number(n) => n.as_u64().or_else(|| n.as_f64().and_then(integral)),
            Value::String(s) if self.source == Source::Query => {
                let t = s.trim();
                t.parse::<u64>().ok().or_else(|| t.parse::<f64>().ok().and_then(integral))
            }
            _ => None,
        };
        if parsed.is_none() {
            self.error(key, "must be a nonnegative integer");
        }
        parsed
    }

    pub fn require_integer(&mut self, key: &str) -> Option<u64> {
        if !self.present(key) {
            self.error(key, "is required");
            self.used.insert(key.to_string());
            return None;
        }
        self.integer(key)
    }

    /// A number or the word `optimal`.
    pub fn phi1(&mut self, key: &str) -> Option<Phi1Choice> {
        let value = self.take(key)?;
        let parsed = match &value {
            Value::Number(n) => n.as_f64().map(Phi1Choice::Fixed),
            Value::String(s) => s.parse::<Phi1Choice>().ok().filter(|c| match c {
                Phi1Choice::Fixed(_) => self.source == Source::Query,
                Phi1Choice::Optimal => true,
            }),
            _ => None,
        };
        if parsed.is_none() {
            self.error(key, "must be a number in (0, 1) or \"optimal\"");
        }
        parsed
    }

    /// Comma-separated numbers in a query string, or a JSON array.
    pub fn number_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let value = self.take(key)?;
        let parsed: Option<Vec<f64>> = match &value {
            Value::Array(items) => items.iter().map(|v| v.as_f64().filter(|x| x.is_finite())).collect(),
            Value::String(s) if self.source == Source::Query => {
                if s.trim().is_empty() {
                    Some(Vec::new())
                } else {
                    s.split(',')
                        .map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                        .collect()
                }
            }
            _ => None,
        };
        if parsed.is_none() {
            self.error(key, "must be a list of finite numbers");
        }
        parsed
    }

    /// Fails with every collected error, plus one per unrecognized key.
    pub fn finish(mut self) -> Result<(), ApiError> {
        let unknown: Vec<String> = self
            .map
            .keys()
            .filter(|k| !self.used.contains(*k))
            .cloned()
            .collect();
        for k in unknown {
            self.errors.push(FieldError::new(k, "unknown field"));
        }
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(ApiError::Invalid(self.errors))
        }
    }
}

fn integral(v: f64) -> Option<u64> {
    (v >= 0.0 && v.fract() == 0.0 && v <= MAX_EXACT_INT).then_some(v as u64)
}

/// Domain checks appended to a field error list.
pub struct Checks<'a>(pub &'a mut Vec<FieldError>);

impl Checks<'_> {
    pub fn open_unit(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v < 1.0) {
            self.0.push(FieldError::new(field, format!("must lie in (0, 1), got {v}")));
        }
    }

    pub fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.0.push(FieldError::new(field, format!("must be finite and > 0, got {v}")));
        }
    }

    pub fn at_least(&mut self, field: &str, v: u64, min: u64) {
        if v < min {
            self.0.push(FieldError::new(field, format!("must be >= {min}, got {v}")));
        }
    }

    pub fn phi1(&mut self, field: &str, v: Phi1Choice) {
        if let Phi1Choice::Fixed(x) = v {
            self.open_unit(field, x);
        }
    }

    pub fn alleles(&mut self, field: &str, v: u32) {
        if !matches!(v, 1 | 2) {
            self.0.push(FieldError::new(field, format!("must be 1 or 2, got {v}")));
        }
    }
}
