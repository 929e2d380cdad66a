//! Named preset scenarios.
//!
//! A [`Scenario`] is plain data and round-trips through the TOML config
//! format. Angles in schedules are written in units of π.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::detuning::{RotationProtocol, Segment, Target};
use crate::error::{Error, Result};
use crate::solver::{InputPulse, TimeGrid};

/// Comb rotation instants (s).
pub const COMB_FIRST_SWITCH: f64 = 70.0;
pub const COMB_SECOND_SWITCH: f64 = 100.0;
/// Pair rotation instant, the first temporal node of the reference output (s).
pub const PAIR_SWITCH: f64 = 74.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    /// Switch time (s).
    pub time: f64,
    /// Target angle in units of π.
    pub angle: f64,
    #[serde(default)]
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolSpec {
    /// Explicit θ(t) schedule.
    Schedule {
        /// Initial angle in units of π.
        #[serde(default)]
        initial_angle: f64,
        #[serde(default)]
        entries: Vec<ScheduleEntry>,
    },
    /// Alternate θ between 0 and π at the first `count` zero crossings of
    /// Re Ω in a no-rotation reference run, counted after `after`.
    NodeInversions { count: usize, after: f64 },
}

impl ProtocolSpec {
    pub fn from_protocol(p: &RotationProtocol) -> Self {
        ProtocolSpec::Schedule {
            initial_angle: p.initial_theta / PI,
            entries: p
                .segments
                .iter()
                .map(|s| ScheduleEntry {
                    time: s.t_switch,
                    angle: s.theta / PI,
                    ramp: s.ramp,
                })
                .collect(),
        }
    }

    /// The explicit protocol, if this spec does not need a reference run.
    pub fn schedule(&self) -> Option<RotationProtocol> {
        match self {
            ProtocolSpec::Schedule {
                initial_angle,
                entries,
            } => Some(RotationProtocol {
                initial_theta: initial_angle * PI,
                segments: entries
                    .iter()
                    .map(|e| Segment {
                        t_switch: e.time,
                        theta: e.angle * PI,
                        ramp: e.ramp,
                    })
                    .collect(),
            }),
            ProtocolSpec::NodeInversions { .. } => None,
        }
    }
}

/// Alternating inversions 0 → π → 0 ... at the given instants.
pub fn inversion_schedule(nodes: &[f64]) -> RotationProtocol {
    let switches: Vec<(f64, f64)> = nodes
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, if k % 2 == 0 { PI } else { 0.0 }))
        .collect();
    RotationProtocol::steps(0.0, &switches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Records,
    Spectrum,
    Metrics,
    Nodes,
}

/// Echo window for metrics; `tau` defaults to the detected peak delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub after: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub targets: Vec<Target>,
    pub protocol: ProtocolSpec,
    pub pulse: InputPulse,
    pub grid: TimeGrid,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    /// Echo search starts after this time (s).
    pub input_end: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<WindowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<NodeSpec>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::config("scenario.targets", "at least one target"));
        }
        for (i, t) in self.targets.iter().enumerate() {
            t.validate(&format!("scenario.targets[{i}]"))?;
        }
        match &self.protocol {
            ProtocolSpec::Schedule { .. } => {
                if let Some(p) = self.protocol.schedule() {
                    p.validate("scenario.protocol")?;
                }
            }
            ProtocolSpec::NodeInversions { after, .. } => {
                if !after.is_finite() {
                    return Err(Error::config("scenario.protocol.after", "must be finite"));
                }
            }
        }
        self.pulse.validate("scenario.pulse")?;
        self.grid.validate("scenario.grid")?;
        if !(self.input_end.is_finite() && self.input_end < self.grid.t_end) {
            return Err(Error::config(
                "scenario.input_end",
                format!("must lie before t_end = {}", self.grid.t_end),
            ));
        }
        for (i, w) in self.windows.iter().enumerate() {
            if !(w.a < w.b && w.a >= 0.0 && w.b <= self.grid.t_end) {
                return Err(Error::config(
                    format!("scenario.windows[{i}]"),
                    format!(
                        "[{}, {}] must be non-empty and inside [0, {}]",
                        w.a, w.b, self.grid.t_end
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Records, Analysis::Spectrum, Analysis::Metrics]
}

/// Single thick target inverted at `switch_time`.
pub fn preset_gradient(switch_time: f64) -> Scenario {
    Scenario {
        name: format!("gradient-{}", switch_time),
        description: format!(
            "gradient echo from one 4.8 cm target (OD 386), inverted at t = {switch_time} s"
        ),
        targets: vec![Target::new(1, 0.0, 0.048, 386.0, 64)],
        protocol: ProtocolSpec::from_protocol(&RotationProtocol::steps(0.0, &[(switch_time, PI)])),
        pulse: InputPulse::new(300.0, 100.0),
        grid: TimeGrid::new(1600.0, 0.02),
        analyses: default_analyses(),
        input_end: switch_time,
        windows: Vec::new(),
        nodes: None,
    }
}

fn two_targets() -> Vec<Target> {
    vec![
        Target::new(1, -0.044, 1e-3, 38.6, 16),
        Target::new(2, 0.044, 1e-3, 38.6, 16),
    ]
}

/// Two targets 8.8 cm apart. `theta_final` rotates once at 74.8 s;
/// `rotations` instead inverts at that many temporal nodes of the reference output.
pub fn preset_pair(theta_final: f64, rotations: Option<usize>) -> Scenario {
    let (name, description, protocol, t_end) = match rotations {
        Some(count) => (
            format!("pair-nodes-{count}"),
            format!("two targets inverted at the first {count} temporal nodes of the output"),
            ProtocolSpec::NodeInversions { count, after: 60.0 },
            1200.0,
        ),
        None => {
            let (tag, text) = if theta_final == 0.0 {
                ("none", "no rotation")
            } else if (theta_final - FRAC_PI_2).abs() < 1e-12 {
                ("freeze", "quarter turn at 74.8 s")
            } else if (theta_final - PI).abs() < 1e-12 {
                ("invert", "inversion at 74.8 s")
            } else {
                ("custom", "rotation at 74.8 s")
            };
            let p = if theta_final == 0.0 {
                RotationProtocol::constant(0.0)
            } else {
                RotationProtocol::steps(0.0, &[(PAIR_SWITCH, theta_final)])
            };
            (
                format!("pair-{tag}"),
                format!("two 1 mm targets at -/+4.4 cm, {text}"),
                ProtocolSpec::from_protocol(&p),
                400.0,
            )
        }
    };
    Scenario {
        name,
        description,
        targets: two_targets(),
        protocol,
        pulse: InputPulse::new(50.0, 10.0),
        grid: TimeGrid::new(t_end, 0.02),
        analyses: vec![Analysis::Records, Analysis::Spectrum, Analysis::Nodes],
        input_end: 75.0,
        windows: Vec::new(),
        nodes: Some(NodeSpec {
            after: 70.0,
            count: 6,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombProtocol {
    /// θ ≡ 0.
    None,
    /// 0 → π at the first switch.
    Invert,
    /// 0 → π/2 at the first switch, back to 0 at the second.
    FreezeRetrieve,
    /// 0 → π/2 at the first switch, π at the second.
    Halftime,
}

impl CombProtocol {
    pub const ALL: [CombProtocol; 4] = [
        CombProtocol::None,
        CombProtocol::Invert,
        CombProtocol::FreezeRetrieve,
        CombProtocol::Halftime,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CombProtocol::None => "none",
            CombProtocol::Invert => "invert",
            CombProtocol::FreezeRetrieve => "freeze-retrieve",
            CombProtocol::Halftime => "halftime",
        }
    }

    /// Reference echo window and delay (a, b, τ) in seconds.
    pub fn reference_window(self) -> WindowSpec {
        let (a, b, tau) = match self {
            CombProtocol::None => (80.0, 130.0, 53.8),
            CombProtocol::Invert => (70.0, 120.0, 39.5),
            CombProtocol::FreezeRetrieve => (110.0, 160.0, 83.4),
            CombProtocol::Halftime => (90.0, 150.0, 69.0),
        };
        WindowSpec {
            a,
            b,
            tau: Some(tau),
        }
    }

    pub fn protocol(self, first: f64, second: f64) -> RotationProtocol {
        match self {
            CombProtocol::None => RotationProtocol::constant(0.0),
            CombProtocol::Invert => RotationProtocol::steps(0.0, &[(first, PI)]),
            CombProtocol::FreezeRetrieve => {
                RotationProtocol::steps(0.0, &[(first, FRAC_PI_2), (second, 0.0)])
            }
            CombProtocol::Halftime => {
                RotationProtocol::steps(0.0, &[(first, FRAC_PI_2), (second, PI)])
            }
        }
    }
}

/// Five 0.1 mm targets, 8 cm apart, rotated about the middle one.
pub fn preset_comb(kind: CombProtocol) -> Scenario {
    preset_comb_with(kind, COMB_FIRST_SWITCH, COMB_SECOND_SWITCH)
}

pub fn preset_comb_with(kind: CombProtocol, first: f64, second: f64) -> Scenario {
    let targets = [-0.16, -0.08, 0.0, 0.08, 0.16]
        .iter()
        .enumerate()
        .map(|(i, &z)| Target::new(i + 1, z, 1e-4, 241.0, 16))
        .collect();
    Scenario {
        name: format!("comb-{}", kind.tag()),
        description: format!("five-target comb, protocol `{}`", kind.tag()),
        targets,
        protocol: ProtocolSpec::from_protocol(&kind.protocol(first, second)),
        pulse: InputPulse::new(50.0, 10.0),
        grid: TimeGrid::new(250.0, 0.02),
        analyses: default_analyses(),
        input_end: 75.0,
        windows: vec![kind.reference_window()],
        nodes: None,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PresetEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub build: fn() -> Scenario,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<PresetEntry>,
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let entries = vec![
            PresetEntry {
                name: "gradient-500",
                description: "single-target gradient echo, inversion at 500 s",
                build: || preset_gradient(500.0),
            },
            PresetEntry {
                name: "gradient-700",
                description: "single-target gradient echo, inversion at 700 s",
                build: || preset_gradient(700.0),
            },
            PresetEntry {
                name: "pair-none",
                description: "two-target quantum beats, no rotation",
                build: || preset_pair(0.0, None),
            },
            PresetEntry {
                name: "pair-freeze",
                description: "two targets, quarter turn at 74.8 s",
                build: || preset_pair(FRAC_PI_2, None),
            },
            PresetEntry {
                name: "pair-invert",
                description: "two targets, inversion at 74.8 s",
                build: || preset_pair(PI, None),
            },
            PresetEntry {
                name: "pair-nodes-13",
                description: "two targets inverted at 13 temporal nodes",
                build: || preset_pair(0.0, Some(13)),
            },
            PresetEntry {
                name: "comb-none",
                description: "five-target comb echo, no rotation",
                build: || preset_comb(CombProtocol::None),
            },
            PresetEntry {
                name: "comb-invert",
                description: "five-target comb, inversion at 70 s",
                build: || preset_comb(CombProtocol::Invert),
            },
            PresetEntry {
                name: "comb-freeze-retrieve",
                description: "five-target comb, frozen 70-100 s then released",
                build: || preset_comb(CombProtocol::FreezeRetrieve),
            },
            PresetEntry {
                name: "comb-halftime",
                description: "five-target comb, quarter turn at 70 s, inversion at 100 s",
                build: || preset_comb(CombProtocol::Halftime),
            },
        ];
        Self { entries }
    }

    pub fn push(&mut self, entry: PresetEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[PresetEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Result<Scenario> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| (e.build)())
            .ok_or_else(|| {
                Error::config(
                    "scenario",
                    format!(
                        "unknown scenario `{name}` (known: {})",
                        self.entries
                            .iter()
                            .map(|e| e.name)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                )
            })
    }
}

/// Names and one-line descriptions of every preset.
pub fn list_scenarios(registry: &Registry) -> Vec<(String, String)> {
    registry
        .entries()
        .iter()
        .map(|e| (e.name.to_string(), e.description.to_string()))
        .collect()
}
