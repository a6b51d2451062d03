use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the entry bound depends on `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum BoundRule {
    Constant(f64),
    /// `B = κ √(ln n)`.
    Scaled(f64),
}

impl BoundRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            BoundRule::Constant(b) => b,
            BoundRule::Scaled(kappa) => kappa * (n as f64).ln().sqrt(),
        }
    }
}

/// How the additive accuracy depends on `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum EpsRule {
    Constant(f64),
    /// `eps_a = n^(−c)`.
    Polynomial(f64),
}

impl EpsRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            EpsRule::Constant(e) => e,
            EpsRule::Polynomial(c) => (n as f64).powf(-c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Poly,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Poly => "poly",
        }
    }
}

fn default_exact_cap() -> usize {
    1 << 14
}

fn default_repetitions() -> usize {
    1
}

/// A sweep over instance sizes, usually read from TOML:
///
/// ```toml
/// n_values = [1024, 2048, 4096]
/// d = 8
/// methods = ["exact", "poly"]
/// seed = 42
/// repetitions = 3
/// b_rule = { kind = "constant", value = 0.5 }
/// eps_rule = { kind = "polynomial", value = 1.0 }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub d: usize,
    pub b_rule: BoundRule,
    pub eps_rule: EpsRule,
    pub methods: Vec<Method>,
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Exact attention is skipped above this `n`.
    #[serde(default = "default_exact_cap")]
    pub exact_cap: usize,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Format {
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_values.is_empty() {
            return bad("n_values is empty".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_values {:?} must be strictly ascending", self.n_values));
        }
        if self.n_values[0] == 0 || self.d == 0 {
            return bad("sizes must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        Ok(())
    }
}
