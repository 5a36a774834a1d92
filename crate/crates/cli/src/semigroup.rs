//! Numerical check of the Ornstein–Uhlenbeck semigroup on shrinking indicators.

use rdblow::similarity::{ou_semigroup_apply, smoothing_ratio, Indicator};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::REPORT_SCHEMA_VERSION;

/// Absolute tolerance of the closed-form comparison for indicator data.
pub const FLOW_TOL: f64 = 1e-10;

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn default_sigmas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0]
}

fn default_half_widths() -> Vec<f64> {
    vec![1.0, 0.3, 0.1, 0.03, 0.01]
}

fn default_thetas() -> Vec<f64> {
    vec![-3.0, -1.0, 0.0, 0.5, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupConfig {
    #[serde(default = "crate::config::default_schema_version")]
    pub schema_version: u32,
    #[serde(default = "one")]
    pub delta: f64,
    /// Weight parameter of the norms.
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "two")]
    pub m: f64,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// Indicators `1_{[−a,a]}` for each `a`.
    #[serde(default = "default_half_widths")]
    pub half_widths: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
}

impl Default for SemigroupConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults parse")
    }
}

impl SemigroupConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::config_at(e.path().to_string(), e.into_inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != crate::config::CONFIG_SCHEMA_VERSION {
            return Err(CliError::config_at("schema_version", "unsupported schema_version"));
        }
        if !(self.delta > 0.0 && self.lambda > 0.0) {
            return Err(CliError::config_at("delta", "delta and lambda must be positive"));
        }
        if !(self.k >= 1.0 && self.m >= self.k && self.m.is_finite()) {
            return Err(CliError::config_at("m", "need 1 ≤ k ≤ m < ∞"));
        }
        if self.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(CliError::config_at("sigmas", "sigmas must be nonnegative"));
        }
        if self.half_widths.is_empty() || self.half_widths.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(CliError::config_at("half_widths", "half widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub sigma: f64,
    pub half_width: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSup {
    pub sigma: f64,
    pub sup_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub schema_version: u32,
    pub config: SemigroupConfig,
    pub rows: Vec<RatioRow>,
    /// Supremum over the indicator family at each `σ`.
    pub sup_by_sigma: Vec<SigmaSup>,
    /// Largest deviation of the quadrature from the erf closed form.
    pub flow_max_error: f64,
    pub flow_ok: bool,
}

fn erf_flow(a: f64, delta: f64, sigma: f64, theta: f64) -> f64 {
    let mean = theta * (-sigma / 2.0).exp();
    let s = (-4.0 * delta * (-sigma).exp_m1()).sqrt();
    0.5 * (libm::erf((a - mean) / s) - libm::erf((-a - mean) / s))
}

pub fn semigroup_test(cfg: &SemigroupConfig) -> Result<SemigroupReport, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut sup_by_sigma = Vec::new();
    let mut flow_max_error: f64 = 0.0;
    for &sigma in &cfg.sigmas {
        let mut sup: f64 = 0.0;
        for &a in &cfg.half_widths {
            let phi = Indicator { a: -a, b: a };
            let ratio = smoothing_ratio(&phi, cfg.delta, sigma, cfg.k, cfg.m, cfg.lambda)?;
            sup = sup.max(ratio);
            rows.push(RatioRow { sigma, half_width: a, ratio });
            if sigma > 0.0 {
                for &th in &cfg.thetas {
                    let got = ou_semigroup_apply(&phi, cfg.delta, sigma, th)?;
                    flow_max_error = flow_max_error.max((got - erf_flow(a, cfg.delta, sigma, th)).abs());
                }
            }
        }
        sup_by_sigma.push(SigmaSup { sigma, sup_ratio: sup });
    }
    Ok(SemigroupReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
        sup_by_sigma,
        flow_max_error,
        flow_ok: flow_max_error <= FLOW_TOL,
    })
}
