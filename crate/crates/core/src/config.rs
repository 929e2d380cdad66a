//! Run configuration: one TOML file selects a preset (or inlines a full
//! scenario), applies numeric overrides and sets physical constants.
//!
//! ```toml
//! scenario = "comb-none"
//!
//! [overrides]
//! dt = 0.01
//! convention = "ln2-literal"
//! windows = [{ a = 80.0, b = 130.0, tau = 53.8 }]
//!
//! [constants]
//! r_earth = 6.371e6
//! ```

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::scenarios::{ProtocolSpec, Registry, Scenario, WindowSpec};
use crate::units::{ConventionTag, NumericsConvention, PhysicalConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config(
                "output.formats",
                format!("unknown format `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionTag>,
    /// Ramp duration applied to every switch (s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Re-space the targets evenly about the rotation center (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_depth: Option<f64>,
    /// Tangential speed per target (m/s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speeds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<WindowSpec>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<Scenario>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Constants and linewidth convention for one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Physics {
    pub constants: PhysicalConstants,
    pub convention: NumericsConvention,
}

/// A fully resolved run: the scenario after overrides, plus physics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub scenario: Scenario,
    pub physics: Physics,
}

impl RunConfig {
    pub fn for_scenario(name: &str) -> Self {
        Self {
            scenario: Some(name.to_string()),
            ..Default::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." {
                    "<root>".to_string()
                } else {
                    path
                },
                e.into_inner().message().trim().to_string(),
            )
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn resolve(&self, registry: &Registry) -> Result<ResolvedRun> {
        let mut scenario = match (&self.scenario, &self.inline) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "scenario",
                    "give either a preset name or an [inline] scenario, not both",
                ))
            }
            (Some(name), None) => registry.get(name)?,
            (None, Some(s)) => s.clone(),
            (None, None) => {
                return Err(Error::config("scenario", "no scenario selected"));
            }
        };
        self.overrides.apply(&mut scenario)?;
        scenario.validate()?;
        self.constants.validate()?;
        Ok(ResolvedRun {
            scenario,
            physics: Physics {
                constants: self.constants,
                convention: NumericsConvention::new(self.overrides.convention.unwrap_or_default()),
            },
        })
    }

    /// The config that reproduces `resolved` without consulting a registry.
    pub fn echo(resolved: &ResolvedRun, output: &OutputConfig) -> Self {
        Self {
            scenario: None,
            inline: Some(resolved.scenario.clone()),
            overrides: Overrides {
                convention: Some(resolved.physics.convention.tag),
                ..Default::default()
            },
            constants: resolved.physics.constants,
            output: output.clone(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(path, format!("must be > 0, got {v}")))
    }
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<()> {
        if let Some(dt) = self.dt {
            s.grid.dt = positive("overrides.dt", dt)?;
        }
        if let Some(t_end) = self.t_end {
            s.grid.t_end = positive("overrides.t_end", t_end)?;
        }
        if let Some(n_x) = self.n_x {
            if n_x < 2 {
                return Err(Error::config("overrides.n_x", "need at least 2 nodes"));
            }
            s.targets.iter_mut().for_each(|t| t.n_x = n_x);
        }
        if let Some(amplitude) = self.amplitude {
            if !amplitude.is_finite() {
                return Err(Error::config("overrides.amplitude", "must be finite"));
            }
            s.pulse.amplitude = amplitude;
        }
        if let Some(spacing) = self.z_spacing {
            let spacing = positive("overrides.z_spacing", spacing)?;
            let center = 0.5 * (s.targets.len() as f64 - 1.0);
            for (i, t) in s.targets.iter_mut().enumerate() {
                t.z = (i as f64 - center) * spacing;
            }
        }
        if let Some(l) = self.thickness {
            let l = positive("overrides.thickness", l)?;
            s.targets.iter_mut().for_each(|t| t.thickness = l);
        }
        if let Some(xi) = self.optical_depth {
            if !(xi.is_finite() && xi >= 0.0) {
                return Err(Error::config("overrides.optical_depth", "must be >= 0"));
            }
            s.targets.iter_mut().for_each(|t| t.optical_depth = xi);
        }
        if let Some(speeds) = &self.speeds {
            if speeds.len() != s.targets.len() {
                return Err(Error::config(
                    "overrides.speeds",
                    format!("{} speeds for {} targets", speeds.len(), s.targets.len()),
                ));
            }
            for (t, &v) in s.targets.iter_mut().zip(speeds) {
                t.speed = v;
            }
        }
        if let Some(input_end) = self.input_end {
            s.input_end = input_end;
        }
        match &self.windows {
            Some(windows) => s.windows = windows.clone(),
            // preset windows belong to the preset geometry and timing
            None if self.z_spacing.is_some() || self.switch_times.is_some() => s.windows.clear(),
            None => {}
        }
        if self.ramp.is_some() || self.switch_times.is_some() {
            let ProtocolSpec::Schedule { entries, .. } = &mut s.protocol else {
                return Err(Error::config(
                    "overrides",
                    "ramp/switch_times need an explicit schedule protocol",
                ));
            };
            if let Some(times) = &self.switch_times {
                if times.len() != entries.len() {
                    return Err(Error::config(
                        "overrides.switch_times",
                        format!("{} times for {} switches", times.len(), entries.len()),
                    ));
                }
                for (e, &t) in entries.iter_mut().zip(times) {
                    e.time = t;
                }
            }
            if let Some(ramp) = self.ramp {
                if !(ramp.is_finite() && ramp >= 0.0) {
                    return Err(Error::config("overrides.ramp", "must be >= 0"));
                }
                entries.iter_mut().for_each(|e| e.ramp = ramp);
            }
        }
        Ok(())
    }
}
