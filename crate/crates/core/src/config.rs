use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::InitBound;

/// Training and scoring hyperparameters.
///
/// Defaults are the FB15k optimum: α=0.1, all margins 2, κ=200, ℓ=100, λ=0.85,
/// 800 epochs, batch 4096.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub kappa: usize,
    pub ell: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub neg_per_pos: usize,
    #[serde(default)]
    pub init: InitBound,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma1: 2.0,
            gamma2: 2.0,
            gamma3: 2.0,
            kappa: 200,
            ell: 100,
            lambda: 0.85,
            epochs: 800,
            batch_size: 4096,
            seed: 0,
            neg_per_pos: 1,
            init: InitBound::Glorot,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], one per field.
pub const CONFIG_KEYS: &[&str] = &[
    "alpha",
    "gamma1",
    "gamma2",
    "gamma3",
    "kappa",
    "ell",
    "lambda",
    "epochs",
    "batch_size",
    "seed",
    "neg_per_pos",
    "init",
];

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        for (name, g) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
        ] {
            if !(g.is_finite() && g > 0.0) {
                return bad(format!("{name} must be positive, got {g}"));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.ell == 0 || self.ell >= self.kappa {
            return bad(format!(
                "type dimension must satisfy 0 < ell < kappa, got ell={} kappa={}",
                self.ell, self.kappa
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.neg_per_pos == 0 {
            return bad("neg_per_pos must be positive".into());
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "alpha" => self.alpha = parse(key, value)?,
            "gamma1" => self.gamma1 = parse(key, value)?,
            "gamma2" => self.gamma2 = parse(key, value)?,
            "gamma3" => self.gamma3 = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "ell" => self.ell = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" | "batch" => self.batch_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "neg_per_pos" => self.neg_per_pos = parse(key, value)?,
            "init" => {
                self.init = match value {
                    "glorot" => InitBound::Glorot,
                    "literal" => InitBound::Literal,
                    _ => return Err(Error::Config(format!("bad value `{value}` for `init` (glorot|literal)"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_owned());
    }
    Ok(map)
}

pub fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text)
}
