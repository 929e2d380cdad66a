//! Physical constants and the linewidth convention.
//!
//! Internally every time is in seconds, every rate or detuning in rad/s and
//! every length in meters. Detunings are reported to users in units of the
//! natural linewidth `gamma0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Joules per electronvolt (exact, SI 2019).
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// Th-229m isomer half-life (s).
pub const ISOMER_HALF_LIFE: f64 = 1740.0;
/// Coherence time of Th:CaF2 used for the extra decoherence channel (s).
pub const CRYSTAL_COHERENCE_TIME: f64 = 630.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// Gravitational constant (m^3 kg^-1 s^-2).
    pub g: f64,
    /// Earth mass (kg).
    pub m_earth: f64,
    /// Earth radius (m).
    pub r_earth: f64,
    /// Speed of light (m/s).
    pub c: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Clock transition energy (eV).
    pub e_t_ev: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: 6.674_30e-11,
            m_earth: 5.9722e24,
            // Equatorial radius: surface gravity GM/R^2 = 9.798 m/s^2 reproduces
            // the 106.6 / 193.8 / 387.6 Gamma0 detunings to within 0.3 Gamma0.
            r_earth: 6.378_137e6,
            c: 299_792_458.0,
            hbar: 1.054_571_817e-34,
            e_t_ev: 8.4,
        }
    }
}

impl PhysicalConstants {
    /// Rejects non-positive or non-finite fields. `e_t_ev = 0` is allowed (no redshift).
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("m_earth", self.m_earth),
            ("r_earth", self.r_earth),
            ("c", self.c),
            ("hbar", self.hbar),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    format!("constants.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        if !(self.e_t_ev.is_finite() && self.e_t_ev >= 0.0) {
            return Err(Error::config(
                "constants.e_t_ev",
                format!("must be finite and >= 0, got {}", self.e_t_ev),
            ));
        }
        Ok(())
    }

    /// Transition angular frequency E_t / hbar (rad/s).
    pub fn transition_frequency(&self) -> f64 {
        self.e_t_ev * ELECTRON_VOLT / self.hbar
    }

    /// Local surface gravity G M_E / R_E^2 (m/s^2).
    pub fn surface_gravity(&self) -> f64 {
        self.g * self.m_earth / (self.r_earth * self.r_earth)
    }
}

/// Detuning gradient K = E_t G M_E / (hbar c^2 R_E^2), so that Δ = -K (z + x) cos θ.
pub fn redshift_gradient(consts: &PhysicalConstants) -> f64 {
    consts.transition_frequency() * consts.surface_gravity() / (consts.c * consts.c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionTag {
    /// Γ0 = 1/1740 rad/s, γ = ln2/630 rad/s.
    #[default]
    PaperNumbers,
    /// Γ0 = ln2/1740 rad/s, γ = ln2/630 rad/s, as the rates are written out.
    Ln2Literal,
}

impl ConventionTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ConventionTag::PaperNumbers => "paper-numbers",
            ConventionTag::Ln2Literal => "ln2-literal",
        }
    }
}

impl std::str::FromStr for ConventionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-numbers" => Ok(ConventionTag::PaperNumbers),
            "ln2-literal" => Ok(ConventionTag::Ln2Literal),
            other => Err(Error::InvalidInput(format!(
                "unknown convention `{other}` (expected paper-numbers or ln2-literal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConvention {
    /// Natural linewidth Γ0 (rad/s).
    pub gamma0: f64,
    /// Extra decoherence rate γ (rad/s).
    pub gamma_deco: f64,
    pub tag: ConventionTag,
}

impl NumericsConvention {
    pub fn new(tag: ConventionTag) -> Self {
        match tag {
            ConventionTag::PaperNumbers => Self {
                gamma0: 1.0 / ISOMER_HALF_LIFE,
                gamma_deco: LN_2 / CRYSTAL_COHERENCE_TIME,
                tag,
            },
            ConventionTag::Ln2Literal => Self {
                gamma0: LN_2 / ISOMER_HALF_LIFE,
                gamma_deco: LN_2 / CRYSTAL_COHERENCE_TIME,
                tag,
            },
        }
    }

    /// Total coherence damping rate Γ0/2 + γ.
    pub fn dephasing_rate(&self) -> f64 {
        0.5 * self.gamma0 + self.gamma_deco
    }

    /// Convert a rate in rad/s to units of Γ0.
    pub fn in_gamma0(&self, rate: f64) -> f64 {
        rate / self.gamma0
    }
}

impl Default for NumericsConvention {
    fn default() -> Self {
        Self::new(ConventionTag::PaperNumbers)
    }
}
