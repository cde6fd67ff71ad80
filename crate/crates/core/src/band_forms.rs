//! The six percentile-band recipes and their `(ξ, θ)` constants.
//!
//! A band has the shape
//! `x'β̂ + z_γ σ̂/θ ∓ c σ̂ √(x'(X'X)⁻¹x + z_γ² ξ)`; Type I forms have `ξ = 0`.
//! Every recipe also exists in an asymmetric flavour (suffix `a`) whose two
//! critical constants are chosen independently.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use libm::lgamma as ln_gamma;

use crate::error::{MacsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BandName {
    SB,
    TBU,
    TBE,
    V,
    UV,
    TT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BandType {
    TypeI,
    TypeII,
}

impl BandName {
    pub const ALL: [BandName; 6] = [
        BandName::SB,
        BandName::TBU,
        BandName::TBE,
        BandName::V,
        BandName::UV,
        BandName::TT,
    ];

    pub fn band_type(self) -> BandType {
        match self {
            BandName::SB | BandName::TBU | BandName::TBE => BandType::TypeI,
            BandName::V | BandName::UV | BandName::TT => BandType::TypeII,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BandName::SB => "SB",
            BandName::TBU => "TBU",
            BandName::TBE => "TBE",
            BandName::V => "V",
            BandName::UV => "UV",
            BandName::TT => "TT",
        }
    }
}

/// A band recipe together with the symmetric/asymmetric choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BandForm {
    pub name: BandName,
    pub symmetric: bool,
}

impl BandForm {
    pub const fn symmetric(name: BandName) -> Self {
        Self { name, symmetric: true }
    }

    pub const fn asymmetric(name: BandName) -> Self {
        Self { name, symmetric: false }
    }

    pub fn band_type(self) -> BandType {
        self.name.band_type()
    }

    /// `(ξ, θ)` for this form at `nu` residual degrees of freedom.
    pub fn xi_theta(self, nu: u32) -> Result<(f64, f64)> {
        xi_theta(self.name, nu)
    }

    /// Short label: `UV` for the symmetric band, `UVa` for the asymmetric one.
    pub fn label(self) -> String {
        if self.symmetric {
            self.name.as_str().to_string()
        } else {
            format!("{}a", self.name.as_str())
        }
    }
}

impl fmt::Display for BandForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for BandForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl FromStr for BandForm {
    type Err = MacsError;

    /// Case-insensitive; a trailing `a` selects the asymmetric variant
    /// (`"uva"` is asymmetric UV). None of the base names end in `a`.
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (base, symmetric) = match upper.strip_suffix('A') {
            Some(stem) => (stem, false),
            None => (upper.as_str(), true),
        };
        let name = match base {
            "SB" => BandName::SB,
            "TBU" => BandName::TBU,
            "TBE" => BandName::TBE,
            "V" => BandName::V,
            "UV" => BandName::UV,
            "TT" => BandName::TT,
            _ => {
                return Err(MacsError::Domain(format!(
                    "unknown band form {s:?}; expected one of SB, TBU, TBE, V, UV, TT with optional 'a' suffix"
                )))
            }
        };
        Ok(BandForm { name, symmetric })
    }
}

/// `Γ((ν+1)/2) / Γ(ν/2)`, via log-gamma so large `ν` does not overflow.
fn half_step_gamma_ratio(nu: f64) -> f64 {
    (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp()
}

/// `E[U]` for `U ~ √(χ²_ν/ν)`, i.e. the TBU scale `√(2/ν) Γ((ν+1)/2)/Γ(ν/2)`.
pub fn chi_mean(nu: u32) -> f64 {
    let nu = nu as f64;
    (2.0 / nu).sqrt() * half_step_gamma_ratio(nu)
}

/// `ξ` and `θ` of a band recipe.
///
/// For UV, `ξ = 1/θ_TBU² − 1`, the variance of `σ̂/θ_TBU` relative to `σ²`;
/// V uses `ξ = 1 − θ_TBU²`, the variance of `U` itself.
pub fn xi_theta(name: BandName, nu: u32) -> Result<(f64, f64)> {
    if nu < 2 {
        return Err(MacsError::Domain(format!(
            "band constants need at least 2 residual degrees of freedom, got {nu}"
        )));
    }
    let nu_f = nu as f64;
    let pair = match name {
        BandName::SB => (0.0, 1.0),
        BandName::TBU => (0.0, chi_mean(nu)),
        BandName::TBE => {
            // 1 / E[1/U]
            let theta = (2.0 / nu_f).sqrt() * (ln_gamma(0.5 * nu_f) - ln_gamma(0.5 * (nu_f - 1.0))).exp();
            (0.0, theta)
        }
        BandName::V => {
            let m = chi_mean(nu);
            (1.0 - m * m, 1.0)
        }
        BandName::UV => {
            let m = chi_mean(nu);
            (1.0 / (m * m) - 1.0, m)
        }
        BandName::TT => (1.0 / (2.0 * nu_f), (4.0 * nu_f - 1.0) / (4.0 * nu_f)),
    };
    Ok(pair)
}
