use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use germlab::group::THETA_MAX;

pub const DEFAULTS: &str = include_str!("../defaults.toml");

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh_level: usize,
    pub series_depth: usize,
    pub seed_w0: [f64; 2],
    pub t_scan: Vec<f64>,
    pub solver_tol: f64,
    pub max_newton: usize,
    pub continuation_step: f64,
    pub entropy_depth: usize,
    pub entropy_window: Vec<f64>,
    pub chain_tolerance: f64,
    pub monotone_tolerance: f64,
    pub hessian_dt: f64,
    pub thetas: Vec<f64>,
    pub census_depth: usize,
    pub limit_depth: usize,
    pub max_elements: usize,
    pub bowen_tolerance: f64,
    pub epsilon_points: usize,
    pub epsilon_max: f64,
    pub delta_threshold: f64,
    pub seed: u64,
    pub out_dir: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("config key `{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, msg: msg.into() }
}

fn in_range<T: PartialOrd + std::fmt::Display>(key: &'static str, v: T, lo: T, hi: T) -> Result<(), ConfigError> {
    if v < lo || v > hi {
        return Err(invalid(key, format!("{v} is outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(key, format!("{v} must be positive")));
    }
    Ok(())
}

impl RunConfig {
    pub fn defaults() -> Self {
        Self::parse(DEFAULTS).expect("embedded defaults parse")
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        in_range("mesh_level", self.mesh_level, 0, 4)?;
        in_range("series_depth", self.series_depth, 1, 12)?;
        let w = self.seed_w0;
        if !(w[0].is_finite() && w[1].is_finite()) || w[0] * w[0] + w[1] * w[1] < 1.0 {
            return Err(invalid("seed_w0", "the pole must lie outside the unit disk"));
        }
        if self.t_scan.is_empty() {
            return Err(invalid("t_scan", "needs at least one value"));
        }
        if self.t_scan[0] < 0.0 || self.t_scan.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("t_scan", "values must be strictly increasing from 0"));
        }
        positive("solver_tol", self.solver_tol)?;
        in_range("max_newton", self.max_newton, 1, 1000)?;
        positive("continuation_step", self.continuation_step)?;
        in_range("entropy_depth", self.entropy_depth, 1, 10)?;
        match self.entropy_window.as_slice() {
            [] => {}
            [lo, hi] if *lo > 0.0 && hi > lo => {}
            _ => return Err(invalid("entropy_window", "use [] or [lo, hi] with 0 < lo < hi")),
        }
        positive("chain_tolerance", self.chain_tolerance)?;
        positive("monotone_tolerance", self.monotone_tolerance)?;
        in_range("hessian_dt", self.hessian_dt, 0.01, 0.1)?;
        if !self.thetas.contains(&0.0) {
            return Err(invalid("thetas", "must contain 0"));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(t.abs() <= THETA_MAX)) {
            return Err(invalid("thetas", format!("{t} is outside [-{THETA_MAX}, {THETA_MAX}]")));
        }
        in_range("census_depth", self.census_depth, 6, 10)?;
        in_range("limit_depth", self.limit_depth, 2, 9)?;
        in_range("max_elements", self.max_elements, 1000, 200_000_000)?;
        positive("bowen_tolerance", self.bowen_tolerance)?;
        in_range("epsilon_points", self.epsilon_points, 2, 100_000)?;
        if !(0.0..1.0).contains(&self.epsilon_max) || self.epsilon_max == 0.0 {
            return Err(invalid("epsilon_max", "must lie in (0, 1)"));
        }
        positive("delta_threshold", self.delta_threshold)?;
        if self.out_dir.is_empty() {
            return Err(invalid("out_dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn window(&self) -> Option<(f64, f64)> {
        match self.entropy_window.as_slice() {
            [lo, hi] => Some((*lo, *hi)),
            _ => None,
        }
    }

    /// SHA-256 of the effective configuration in canonical TOML form. The
    /// output directory does not affect results and is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir.clear();
        let text = toml::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::defaults();
        assert_eq!(c.mesh_level, 2);
        let mut moved = c.clone();
        moved.out_dir = "elsewhere".into();
        assert_eq!(c.hash(), moved.hash());
        moved.seed += 1;
        assert_ne!(c.hash(), moved.hash());
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let extra = format!("{DEFAULTS}\nbogus = 1\n");
        assert!(matches!(RunConfig::parse(&extra), Err(ConfigError::Parse(m)) if m.contains("bogus")));
        let missing: String = DEFAULTS.lines().filter(|l| !l.starts_with("mesh_level")).collect::<Vec<_>>().join("\n");
        assert!(matches!(RunConfig::parse(&missing), Err(ConfigError::Parse(m)) if m.contains("mesh_level")));
    }

    #[test]
    fn ranges_name_the_key() {
        let bad = DEFAULTS.replace("hessian_dt = 0.05", "hessian_dt = 0.5");
        assert!(matches!(RunConfig::parse(&bad), Err(ConfigError::Invalid { key: "hessian_dt", .. })));
    }
}
