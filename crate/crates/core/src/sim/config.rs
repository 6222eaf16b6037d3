//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "g_sweep"
//! design = "gaussian"          # gaussian | rademacher | genotype
//! n = 400
//! p = 660                      # a list such as [500, 500] fits one variance per group
//! g = 0.5                      # scalar, or one value per group
//! gamma0 = 2.0                 # scalar, or one value per group
//! sigma0_sq = 0.5
//! replications = 100
//! base_seed = 1
//!
//! [sweep]
//! field = "g"                  # g | gamma0 | sigma0_sq | n | p | tau | inv_tau | p_ratio
//! values = [0.0, 0.5, 1.0, 2.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::generate::DesignKind;

/// Scalar or per-group list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    fn len(&self) -> usize {
        match self {
            OneOrMany::One(_) => 1,
            OneOrMany::Many(v) => v.len(),
        }
    }

    /// Broadcasts a scalar to `s` entries.
    fn broadcast(&self, s: usize) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone(); s],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepField {
    /// Decay exponent, applied to every group.
    G,
    /// True SNR, applied to every group.
    Gamma0,
    Sigma0Sq,
    N,
    /// Total feature count for a single design.
    P,
    /// `n/p` with `p` held fixed: `n = round(τ p)`.
    Tau,
    /// `p/n` with `n` held fixed: `p = round(r n)`.
    InvTau,
    /// `p₁/p₂` for two groups with `p₁ + p₂` held fixed.
    PRatio,
}

impl SweepField {
    pub fn name(self) -> &'static str {
        match self {
            SweepField::G => "g",
            SweepField::Gamma0 => "gamma0",
            SweepField::Sigma0Sq => "sigma0_sq",
            SweepField::N => "n",
            SweepField::P => "p",
            SweepField::Tau => "tau",
            SweepField::InvTau => "inv_tau",
            SweepField::PRatio => "p_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub field: SweepField,
    pub values: Vec<f64>,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub design: DesignKind,
    pub n: usize,
    pub p: OneOrMany<usize>,
    pub g: OneOrMany<f64>,
    pub gamma0: OneOrMany<f64>,
    pub sigma0_sq: f64,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Draw the design once per sweep point instead of once per replication.
    #[serde(default)]
    pub fix_design: bool,
    /// Randomly reorder each coefficient vector.
    #[serde(default)]
    pub permute_coefficients: bool,
    /// Write every replication's design, response and truth as CSV.
    #[serde(default)]
    pub dump_data: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

/// Fully resolved parameters of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    /// The swept value, if there is a sweep.
    pub value: Option<f64>,
    pub n: usize,
    pub p: Vec<usize>,
    pub g: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub sigma0_sq: f64,
}

impl SweepPoint {
    pub fn is_grouped(&self) -> bool {
        self.p.len() > 1
    }

    pub fn p_total(&self) -> usize {
        self.p.iter().sum()
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Number of groups.
    pub fn s(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        let s = self.s();
        if s == 0 {
            return bad("p", "needs at least one entry".into());
        }
        if self.n == 0 {
            return bad("n", "must be >= 1".into());
        }
        if self.p.to_vec().contains(&0) {
            return bad("p", "entries must be >= 1".into());
        }
        for (field, len) in [("g", self.g.len()), ("gamma0", self.gamma0.len())] {
            if len != 1 && len != s {
                return bad(field, format!("has {len} entries but p has {s}"));
            }
        }
        if self.g.to_vec().iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return bad("g", "entries must be finite and >= 0".into());
        }
        if self.gamma0.to_vec().iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return bad("gamma0", "entries must be finite and >= 0".into());
        }
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return bad("sigma0_sq", "must be finite and > 0".into());
        }
        if self.replications == 0 {
            return bad("replications", "must be >= 1".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol", "must be > 0".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be >= 1".into());
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return bad("sweep.values", "must not be empty".into());
            }
            if sw.values.iter().any(|v| !v.is_finite()) {
                return bad("sweep.values", "must be finite".into());
            }
            match sw.field {
                SweepField::P if s > 1 => {
                    return bad("sweep.field", "`p` sweeps need a single design; use `p_ratio`".into())
                }
                SweepField::PRatio if s != 2 => {
                    return bad("sweep.field", "`p_ratio` needs exactly two groups".into())
                }
                SweepField::Tau | SweepField::InvTau if s > 1 => {
                    return bad("sweep.field", "aspect-ratio sweeps need a single design".into())
                }
                _ => {}
            }
            // resolving checks the swept values themselves
            self.points()?;
        }
        Ok(())
    }

    /// The sweep grid, or the single configured point.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let s = self.s();
        let base = SweepPoint {
            index: 0,
            value: None,
            n: self.n,
            p: self.p.to_vec(),
            g: self.g.broadcast(s),
            gamma0: self.gamma0.broadcast(s),
            sigma0_sq: self.sigma0_sq,
        };
        let Some(sw) = &self.sweep else {
            return Ok(vec![base]);
        };
        let fail = |v: f64, why: &str| {
            Err(Error::Config(format!(
                "field `sweep.values`: {} = {v} {why}",
                sw.field.name()
            )))
        };
        let as_count = |v: f64| -> Option<usize> {
            (v >= 1.0 && v.fract() == 0.0 && v < 1e9).then_some(v as usize)
        };
        let mut out = Vec::with_capacity(sw.values.len());
        for (index, &v) in sw.values.iter().enumerate() {
            let mut pt = SweepPoint { index, value: Some(v), ..base.clone() };
            match sw.field {
                SweepField::G => {
                    if v < 0.0 {
                        return fail(v, "must be >= 0");
                    }
                    pt.g = vec![v; s];
                }
                SweepField::Gamma0 => {
                    if v < 0.0 {
                        return fail(v, "must be >= 0");
                    }
                    pt.gamma0 = vec![v; s];
                }
                SweepField::Sigma0Sq => {
                    if v <= 0.0 {
                        return fail(v, "must be > 0");
                    }
                    pt.sigma0_sq = v;
                }
                SweepField::N => match as_count(v) {
                    Some(n) => pt.n = n,
                    None => return fail(v, "is not a positive integer"),
                },
                SweepField::P => match as_count(v) {
                    Some(p) => pt.p = vec![p],
                    None => return fail(v, "is not a positive integer"),
                },
                SweepField::Tau => {
                    let n = (v * pt.p[0] as f64).round();
                    if !(v > 0.0) || n < 1.0 {
                        return fail(v, "gives n < 1");
                    }
                    pt.n = n as usize;
                }
                SweepField::InvTau => {
                    let p = (v * pt.n as f64).round();
                    if !(v > 0.0) || p < 1.0 {
                        return fail(v, "gives p < 1");
                    }
                    pt.p = vec![p as usize];
                }
                SweepField::PRatio => {
                    let total = base.p_total();
                    if !(v > 0.0) {
                        return fail(v, "must be > 0");
                    }
                    let p1 = (total as f64 * v / (1.0 + v)).round() as usize;
                    if p1 == 0 || p1 >= total {
                        return fail(v, "leaves an empty group");
                    }
                    pt.p = vec![p1, total - p1];
                }
            }
            out.push(pt);
        }
        Ok(out)
    }
}
