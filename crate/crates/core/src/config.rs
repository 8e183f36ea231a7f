//! Run configuration: a flat JSON record, optionally loaded from a file and
//! overridden field by field from the command line.

use crate::dirichlet::DEFAULT_EVAL_BUDGET;
use crate::error::{Error, Result};
use crate::moments::{MomentConfig, DEFAULT_BUDGET_TERMS, DEFAULT_QUAD_REL_TOL};
use crate::multfn::UnimodularCmf;
use crate::ntcore::FactorTable;
use crate::resonator::Resonator;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Which coefficient function `f` to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FSpec {
    One,
    Archimedean(f64),
    Steinhaus,
}

impl FSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "one" => Ok(FSpec::One),
            "steinhaus" => Ok(FSpec::Steinhaus),
            _ => {
                let alpha = s
                    .strip_prefix("arch:")
                    .ok_or_else(|| Error::invalid(format!("unknown f '{s}'; expected one, arch:ALPHA or steinhaus")))?;
                let alpha: f64 = alpha
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad archimedean exponent in '{s}'")))?;
                if !alpha.is_finite() {
                    return Err(Error::invalid("archimedean exponent must be finite"));
                }
                Ok(FSpec::Archimedean(alpha))
            }
        }
    }

    pub fn build(self, seed: u64, prime_limit: u64) -> Result<UnimodularCmf> {
        match self {
            FSpec::One => Ok(UnimodularCmf::constant_one()),
            FSpec::Archimedean(a) => UnimodularCmf::archimedean(a),
            FSpec::Steinhaus => UnimodularCmf::steinhaus(seed, prime_limit),
        }
    }
}

fn default_delta() -> f64 {
    0.5
}
fn default_gamma() -> f64 {
    0.5
}
fn default_f() -> String {
    "steinhaus".to_string()
}
fn default_nu() -> u32 {
    3
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET_TERMS
}
fn default_eval_budget() -> u64 {
    DEFAULT_EVAL_BUDGET
}

/// One fully specified run. Exactly one of `c` (with `T = N^c`) and `t` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: u64,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_f")]
    pub f: String,
    #[serde(default)]
    pub seed: u64,
    /// Search slack; `1e-3 sqrt(N)` when absent.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_nu")]
    pub nu: u32,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget_terms: u64,
    /// Grid points times terms allowed in a search.
    #[serde(default = "default_eval_budget")]
    pub eval_budget: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub trace_stride: Option<usize>,
    /// Search window; `[-T, T]` when absent.
    #[serde(default)]
    pub search_lo: Option<f64>,
    #[serde(default)]
    pub search_hi: Option<f64>,
    #[serde(default)]
    pub guided: bool,
}

impl RunConfig {
    pub fn new(n: u64) -> Self {
        Self {
            n,
            c: None,
            t: None,
            delta: default_delta(),
            gamma: default_gamma(),
            f: default_f(),
            seed: 0,
            eps: None,
            nu: default_nu(),
            alpha: None,
            budget_terms: default_budget(),
            eval_budget: default_eval_budget(),
            format: Format::Json,
            out: None,
            trace_stride: None,
            search_lo: None,
            search_hi: None,
            guided: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be a positive integer"));
        }
        match (self.c, self.t) {
            (Some(_), Some(_)) => return Err(Error::invalid("give exactly one of c and t, not both")),
            (None, None) => return Err(Error::invalid("one of c or t is required")),
            (Some(c), None) if !(c > 0.0) || !c.is_finite() => {
                return Err(Error::invalid(format!("c must be positive, got {c}")))
            }
            (None, Some(t)) if !(t >= 1.0) || !t.is_finite() => {
                return Err(Error::invalid(format!("t must be finite and >= 1, got {t}")))
            }
            _ => {}
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(Error::invalid(format!("eps must be positive, got {eps}")));
            }
        }
        if self.trace_stride == Some(0) {
            return Err(Error::invalid("trace stride must be at least 1"));
        }
        FSpec::parse(&self.f)?;
        self.moment_config().validate()
    }

    pub fn log_t(&self) -> f64 {
        match (self.c, self.t) {
            (Some(c), _) => c * (self.n as f64).ln(),
            (None, Some(t)) => t.ln(),
            (None, None) => f64::NAN,
        }
    }

    pub fn eps_or_default(&self) -> f64 {
        self.eps.unwrap_or(1e-3 * (self.n as f64).sqrt())
    }

    pub fn f_spec(&self) -> Result<FSpec> {
        FSpec::parse(&self.f)
    }

    pub fn moment_config(&self) -> MomentConfig {
        MomentConfig {
            n: self.n,
            log_t: self.log_t(),
            delta: self.delta,
            gamma: self.gamma,
            nu: self.nu,
            alpha: self.alpha,
            budget_terms: self.budget_terms,
            quad_rel_tol: DEFAULT_QUAD_REL_TOL,
        }
    }

    /// Sieve large enough for `N` and the resonator's prime window.
    pub fn factor_table(&self) -> Result<FactorTable> {
        let log_x = self.moment_config().log_x();
        let hi = if log_x > 1.0 { Resonator::window(log_x)?.2 } else { 0.0 };
        let need = (self.n as f64).max(hi.ceil()).max(16.0) + 1.0;
        if need > u32::MAX as f64 {
            return Err(Error::resource(format!(
                "sieve up to {need:.0} exceeds the 32-bit table range"
            )));
        }
        FactorTable::new(need as u32)
    }

    pub fn build_f(&self, table: &FactorTable) -> Result<UnimodularCmf> {
        self.f_spec()?.build(self.seed, table.limit() as u64)
    }

    /// Canonical JSON of the config, as embedded in reports.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads a flat config file. A previously written JSON report is accepted as
/// well, in which case its embedded `config` is used.
pub fn load_config_value(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("config {} is not JSON: {e}", path.display())))?;
    if let Some(inner) = value.get("config").filter(|_| value.get("result").is_some()) {
        value = inner.clone();
    }
    if !value.is_object() {
        return Err(Error::invalid("config must be a JSON object"));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_specs() {
        assert_eq!(FSpec::parse("one").unwrap(), FSpec::One);
        assert_eq!(FSpec::parse("arch:-1.5").unwrap(), FSpec::Archimedean(-1.5));
        assert_eq!(FSpec::parse("steinhaus").unwrap(), FSpec::Steinhaus);
        assert!(FSpec::parse("arch:x").is_err());
        assert!(FSpec::parse("liouville").is_err());
    }

    #[test]
    fn exactly_one_of_c_and_t() {
        let mut cfg = RunConfig::new(100);
        assert!(cfg.validate().is_err());
        cfg.c = Some(3.0);
        cfg.validate().unwrap();
        assert!((cfg.log_t() - 3.0 * 100f64.ln()).abs() < 1e-12);
        cfg.t = Some(1e6);
        assert!(cfg.validate().is_err());
        cfg.c = None;
        cfg.validate().unwrap();
        assert!((cfg.log_t() - 1e6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_hash() {
        let mut cfg = RunConfig::new(1000);
        cfg.c = Some(3.0);
        cfg.seed = 7;
        let back: RunConfig = serde_json::from_str(&cfg.canonical_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let partial: RunConfig = serde_json::from_str(r#"{"n": 5, "t": 100.0}"#).unwrap();
        assert_eq!(partial.delta, 0.5);
        assert_eq!(partial.f, "steinhaus");
        assert!(serde_json::from_str::<RunConfig>(r#"{"n": 5, "bogus": 1}"#).is_err());
    }

    #[test]
    fn sieve_covers_window() {
        let mut cfg = RunConfig::new(500);
        cfg.c = Some(4.0);
        cfg.delta = 0.25;
        let table = cfg.factor_table().unwrap();
        let log_x = cfg.moment_config().log_x();
        assert!(table.limit() as f64 >= Resonator::window(log_x).unwrap().2);
        assert!(table.limit() >= 500);
    }
}
