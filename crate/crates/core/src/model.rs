//! Model parameters of the two-component system
//!
//! ```text
//! u_t = δ₁ Δu + f(v),   f(v) = e^{pv} − m
//! v_t = δ₂ Δv + g(u),   g(u) = e^{qu} − m
//! ```
//!
//! posed on a ball of radius `R` in `n` dimensions, with `m = 0` for
//! [`Variant::Exp`] and `m = 1` for [`Variant::ExpMinusOne`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    /// f(v) = e^{pv}, g(u) = e^{qu}
    Exp,
    /// f(v) = e^{pv} − 1, g(u) = e^{qu} − 1
    ExpMinusOne,
}

impl Variant {
    /// The additive constant `m` subtracted from the exponentials.
    pub fn offset(self) -> f64 {
        match self {
            Variant::Exp => 0.0,
            Variant::ExpMinusOne => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    /// Whole-space problem truncated to a ball with a reflecting outer boundary.
    CauchyTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub delta1: f64,
    pub delta2: f64,
    pub p: f64,
    pub q: f64,
    pub variant: Variant,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub bc: BoundaryCondition,
}

impl ModelParams {
    pub fn new(
        delta1: f64,
        delta2: f64,
        p: f64,
        q: f64,
        variant: Variant,
        n: usize,
        radius: f64,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        let params = Self {
            delta1,
            delta2,
            p,
            q,
            variant,
            n,
            radius,
            bc,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("p", self.p),
            ("q", self.q),
            ("R", self.radius),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a positive finite number, got {value}"
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.bc == BoundaryCondition::Dirichlet && self.variant != Variant::ExpMinusOne {
            return Err(Error::InvalidConfig(
                "the Dirichlet problem requires variant EXP_MINUS_ONE".into(),
            ));
        }
        Ok(())
    }

    /// Reflecting outer boundary (Neumann or truncated Cauchy).
    pub fn reflecting(&self) -> bool {
        self.bc != BoundaryCondition::Dirichlet
    }

    pub fn max_diffusivity(&self) -> f64 {
        self.delta1.max(self.delta2)
    }
}
