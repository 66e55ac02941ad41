//! Experiment configuration.
//!
//! A config is one flat JSON object. Every number may be written as a JSON
//! number or as a `"num/den"` string, so `"23/2"` and `"48/5"` give the
//! nearest doubles to those rationals. Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use riskeq_core::{MarketInstance, PriceVector, ProbabilityVector, RiskSet};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, Result};

/// A float that also accepts `"num/den"` strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

fn parse_rational(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            (d != 0.0).then(|| n / d)
        }
        None => s.parse().ok(),
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a \"num/den\" string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_rational(v)
                    .map(Num)
                    .ok_or_else(|| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rnsp,
    Rasp,
    RaeqCensus,
    Raad,
    Tatonnement,
    VectorField,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rnsp => "rnsp",
            Mode::Rasp => "rasp",
            Mode::RaeqCensus => "raeq-census",
            Mode::Raad => "raad",
            Mode::Tatonnement => "tatonnement",
            Mode::VectorField => "vector-field",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethod {
    #[default]
    Newton,
    Tatonnement,
    Both,
}

/// Rectangular grid `[a, b] × [c, d]` with `nx × ny` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub pi0: (f64, f64),
    pub pi1: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// Parses `a,b,c,d,nx,ny`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(CliError::config("seed-grid", "expected a,b,c,d,nx,ny"));
        }
        let mut bounds = [0.0; 4];
        for (b, p) in bounds.iter_mut().zip(&parts) {
            *b = parse_rational(p).ok_or_else(|| CliError::config("seed-grid", format!("bad number {p:?}")))?;
        }
        let count = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| CliError::config("seed-grid", format!("bad node count {p:?}")))
        };
        let grid = Grid {
            pi0: (bounds[0], bounds[1]),
            pi1: (bounds[2], bounds[3]),
            nx: count(parts[4])?,
            ny: count(parts[5])?,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(CliError::config("grid_nodes", "resolution must be >= 1"));
        }
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b && a >= 0.0;
        if !ok(self.pi0) || !ok(self.pi1) {
            return Err(CliError::config("grid_box", "need 0 <= a <= b and 0 <= c <= d"));
        }
        Ok(())
    }

    fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Nodes in seed-index order: `π₀` outer, `π₁` inner.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        let xs = Self::axis(self.pi0, self.nx);
        let ys = Self::axis(self.pi1, self.ny);
        xs.iter().flat_map(|&a| ys.iter().map(move |&b| [a, b])).collect()
    }
}

/// The on-disk schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub c: Num,
    pub c_r: Vec<Num>,
    pub v: Vec<Num>,
    pub r: Vec<Num>,
    pub risk_extremes: Vec<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_box: Option<[Num; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_nodes: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_method: Option<SweepMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

/// A validated config.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub instance: MarketInstance,
    pub risk_set: RiskSet,
    pub measure: Option<ProbabilityVector>,
    pub start: Option<PriceVector>,
    pub tau: f64,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub grid: Option<Grid>,
    pub sweep_method: SweepMethod,
    pub out_dir: Option<String>,
    file: ConfigFile,
}

pub const DEFAULT_TAU: f64 = 0.1;

fn floats(v: &[Num]) -> Vec<f64> {
    v.iter().map(|n| n.0).collect()
}

fn core_err(field: &str) -> impl Fn(riskeq_core::Error) -> CliError + '_ {
    move |e| match e {
        riskeq_core::Error::InvalidParameter { field: f, reason } => CliError::config(&f, reason),
        other => CliError::config(field, other.to_string()),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be > 0, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let instance = MarketInstance::new(file.c.0, floats(&file.c_r), floats(&file.v), floats(&file.r))
            .map_err(core_err("instance"))?;
        let extremes = file
            .risk_extremes
            .iter()
            .enumerate()
            .map(|(k, e)| ProbabilityVector::new(floats(e)).map_err(core_err(&format!("risk_extremes[{k}]"))))
            .collect::<Result<Vec<_>>>()?;
        if extremes.iter().any(|e| e.len() != instance.scenarios()) {
            return Err(CliError::config("risk_extremes", "length must match the number of scenarios"));
        }
        let risk_set = RiskSet::new(extremes).map_err(core_err("risk_extremes"))?;
        let measure = file
            .measure
            .as_ref()
            .map(|m| ProbabilityVector::new(floats(m)).map_err(core_err("measure")))
            .transpose()?;
        if measure.as_ref().is_some_and(|m| m.len() != instance.scenarios()) {
            return Err(CliError::config("measure", "length must match the number of scenarios"));
        }
        let start = file
            .start
            .as_ref()
            .map(|s| PriceVector::new(floats(s)).map_err(core_err("start")))
            .transpose()?;
        if start.as_ref().is_some_and(|s| s.len() != instance.scenarios()) {
            return Err(CliError::config("start", "length must match the number of scenarios"));
        }
        let tau = positive("tau", file.tau.map_or(DEFAULT_TAU, |t| t.0))?;
        let max_iter = file.max_iter;
        if max_iter == Some(0) {
            return Err(CliError::config("max_iter", "must be >= 1"));
        }
        let tol = file.tol.map(|t| positive("tol", t.0)).transpose()?;
        let grid = match (file.grid_box, file.grid_nodes) {
            (Some(b), Some([nx, ny])) => {
                let g = Grid {
                    pi0: (b[0].0, b[1].0),
                    pi1: (b[2].0, b[3].0),
                    nx,
                    ny,
                };
                g.validate()?;
                Some(g)
            }
            (None, None) => None,
            (Some(_), None) => return Err(CliError::config("grid_nodes", "required with grid_box")),
            (None, Some(_)) => return Err(CliError::config("grid_box", "required with grid_nodes")),
        };
        Ok(Self {
            mode: file.mode,
            instance,
            risk_set,
            measure,
            start,
            tau,
            max_iter,
            tol,
            grid,
            sweep_method: file.sweep_method.unwrap_or_default(),
            out_dir: file.out_dir.clone(),
            file,
        })
    }

    pub fn file(&self) -> &ConfigFile {
        &self.file
    }

    pub fn set_tol(&mut self, tol: f64) -> Result<()> {
        self.tol = Some(positive("tol", tol)?);
        self.file.tol = Some(Num(tol));
        Ok(())
    }

    pub fn set_grid(&mut self, grid: Grid) {
        self.grid = Some(grid);
        self.file.grid_box = Some([Num(grid.pi0.0), Num(grid.pi0.1), Num(grid.pi1.0), Num(grid.pi1.1)]);
        self.file.grid_nodes = Some([grid.nx, grid.ny]);
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    ExperimentConfig::from_file(file)
}

pub fn serialize(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(&cfg.file).expect("config serializes")
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse(&text)
}
