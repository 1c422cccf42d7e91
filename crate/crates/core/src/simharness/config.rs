//! Declarative experiment files.
//!
//! A config is a flat `key = value` file (TOML syntax). Grids may be written
//! as arrays or as strings in the forms accepted by [`parse_grid`].

use std::path::Path;

use serde::Deserialize;

use crate::error::{domain, Error, Result};
use crate::procedures::ProcedureId;

use super::{AlphaRule, ExperimentConfig, Model, SignalShape};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::List(v) => Ok(v.clone()),
            GridSpec::Text(s) => parse_grid(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Level(f64),
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: String,
    pub nu: Option<u32>,
    pub p: usize,
    pub beta_grid: GridSpec,
    pub r_grid: Option<GridSpec>,
    pub reps: u64,
    pub procedures: Vec<String>,
    pub alpha: Option<AlphaSpec>,
    pub seed: Option<u64>,
    pub signal: Option<String>,
    pub half_width: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| domain(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Resolves into a validated experiment; `fallback_seed` is used when the
    /// file names none.
    pub fn into_experiment(self, fallback_seed: u64) -> Result<ExperimentConfig> {
        let model = parse_model(&self.model, self.nu)?;
        let procedures = self
            .procedures
            .iter()
            .map(|s| s.parse::<ProcedureId>().map_err(|e| domain(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let alpha_rule = match self.alpha {
            None => AlphaRule::SlowlyVanishing,
            Some(AlphaSpec::Level(a)) => AlphaRule::Fixed(a),
            Some(AlphaSpec::Rule(s)) => parse_alpha(&s)?,
        };
        let signal_shape = parse_signal(self.signal.as_deref(), self.half_width)?;
        let cfg = ExperimentConfig {
            model,
            p: self.p,
            beta_grid: self.beta_grid.resolve()?,
            r_grid: match &self.r_grid {
                Some(g) => g.resolve()?,
                None => Vec::new(),
            },
            reps: self.reps,
            procedures,
            alpha_rule,
            seed: self.seed.unwrap_or(fallback_seed),
            signal_shape,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_model(name: &str, nu: Option<u32>) -> Result<Model> {
    match name {
        "chisq" | "chi-square" | "chisquare" => Ok(Model::ChiSquare { nu: nu.unwrap_or(1) }),
        "gaussian" | "gaussian-one-sided" | "gaussian_one_sided" => {
            if nu.is_some_and(|n| n != 1) {
                return Err(domain("nu applies only to the chi-square model"));
            }
            Ok(Model::GaussianOneSided)
        }
        other => Err(domain(format!("unknown model `{other}` (expected chisq or gaussian)"))),
    }
}

pub fn parse_alpha(s: &str) -> Result<AlphaRule> {
    match s.trim() {
        "slowly-vanishing" | "slowly_vanishing" | "default" => Ok(AlphaRule::SlowlyVanishing),
        t => t
            .parse::<f64>()
            .map(AlphaRule::Fixed)
            .map_err(|_| domain(format!("alpha must be a number or `slowly-vanishing`, got `{t}`"))),
    }
}

pub fn parse_signal(kind: Option<&str>, half_width: Option<f64>) -> Result<SignalShape> {
    match kind.unwrap_or("equal") {
        "equal" => {
            if half_width.is_some() {
                return Err(domain("half_width requires signal = \"range\""));
            }
            Ok(SignalShape::Equal)
        }
        "range" => Ok(SignalShape::Range {
            half_width: half_width.ok_or_else(|| domain("signal = \"range\" needs half_width"))?,
        }),
        other => Err(domain(format!("unknown signal shape `{other}` (expected equal or range)"))),
    }
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| domain(format!("bad grid value `{}`", t.trim())))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(domain(format!("range grid must be start:stop:count, got `{s}`")));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| domain(format!("bad grid count `{}`", parts[2].trim())))?;
        return match n {
            0 => Err(domain("grid count must be >= 1")),
            1 => Ok(vec![a]),
            _ => Ok((0..n)
                .map(|i| {
                    if i == n - 1 {
                        b
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()),
        };
    }
    s.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0.5, 0.7").unwrap(), vec![0.5, 0.7]);
        assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn full_file() {
        let text = r#"
            model = "chisq"
            nu = 2
            p = 1000
            beta_grid = "0.5:0.7:3"
            r_grid = [1.0, 2.0]
            reps = 50
            procedures = ["bonferroni", "bh"]
            alpha = 0.05
            seed = 7
        "#;
        let cfg = ConfigFile::parse(text).unwrap().into_experiment(0).unwrap();
        assert_eq!(cfg.model, Model::ChiSquare { nu: 2 });
        assert_eq!(cfg.beta_grid.len(), 3);
        assert_eq!(cfg.alpha_rule, AlphaRule::Fixed(0.05));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.signal_shape, SignalShape::Equal);
    }

    #[test]
    fn defaults_and_rules() {
        let text = r#"
            model = "gaussian"
            p = 100
            beta_grid = [0.5]
            reps = 3
            procedures = ["sidak"]
            alpha = "slowly-vanishing"
            signal = "range"
            half_width = 0.5
        "#;
        let cfg = ConfigFile::parse(text).unwrap().into_experiment(42).unwrap();
        assert_eq!(cfg.seed, 42);
        assert!(cfg.r_grid.is_empty());
        assert_eq!(cfg.alpha_rule, AlphaRule::SlowlyVanishing);
        assert_eq!(cfg.signal_shape, SignalShape::Range { half_width: 0.5 });
    }

    #[test]
    fn rejects_bad_input() {
        let bad_beta = r#"
            model = "chisq"
            p = 100
            beta_grid = [1.5]
            reps = 3
            procedures = ["bonferroni"]
        "#;
        assert!(ConfigFile::parse(bad_beta).unwrap().into_experiment(0).is_err());
        assert!(ConfigFile::parse("model = \"chisq\"\nbogus = 1").is_err());
        assert!(parse_model("poisson", None).is_err());
        assert!(parse_signal(Some("range"), None).is_err());
    }
}
