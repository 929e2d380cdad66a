//! Scenario execution and table output.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{
    detect_echo_window, echo_metrics, find_temporal_nodes, spectrum, EchoMetrics, EchoWindow,
    SpectrumOptions, SpectrumResult,
};
use crate::config::{Format, OutputConfig, Physics, ResolvedRun, RunConfig};
use crate::detuning::RotationProtocol;
use crate::error::{Error, Result};
use crate::scenarios::{inversion_schedule, Analysis, ProtocolSpec, Scenario};
use crate::solver::{simulate_cascade, CascadeRun, SimulationOptions};

/// Detected echoes reported when no explicit windows are configured.
const MAX_AUTO_ECHOES: usize = 3;
/// Auto-reported echoes must reach this fraction of the strongest detected peak.
const AUTO_ECHO_FRACTION: f64 = 0.01;

#[derive(Debug)]
pub struct Outcome {
    pub scenario: Scenario,
    /// Protocol actually applied (node schedules resolved).
    pub protocol: RotationProtocol,
    pub run: CascadeRun,
    pub spectrum: Option<SpectrumResult>,
    pub echoes: Vec<EchoWindow>,
    pub metrics: Vec<EchoMetrics>,
    /// Why metrics are missing, when they were requested.
    pub metrics_error: Option<Error>,
    pub nodes: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// The θ(t) schedule for a scenario, running the no-rotation reference first
/// when the schedule is defined by temporal nodes.
pub fn resolve_protocol(scenario: &Scenario, physics: &Physics) -> Result<RotationProtocol> {
    match &scenario.protocol {
        spec @ ProtocolSpec::Schedule { .. } => Ok(spec.schedule().expect("explicit schedule")),
        ProtocolSpec::NodeInversions { count, after } => {
            let reference = simulate_cascade(
                &scenario.targets,
                &RotationProtocol::constant(0.0),
                &scenario.pulse,
                &scenario.grid,
                &physics.constants,
                &physics.convention,
                SimulationOptions::default(),
            )?;
            let nodes = find_temporal_nodes(reference.output(), *after, *count)?;
            Ok(inversion_schedule(&nodes))
        }
    }
}

pub fn execute(scenario: &Scenario, physics: &Physics) -> Result<Outcome> {
    scenario.validate()?;
    let protocol = resolve_protocol(scenario, physics)?;
    let run = simulate_cascade(
        &scenario.targets,
        &protocol,
        &scenario.pulse,
        &scenario.grid,
        &physics.constants,
        &physics.convention,
        SimulationOptions::default(),
    )?;

    let mut warnings = Vec::new();
    let input = run.input();
    let output = run.output();
    let silent_input = input.omega.iter().all(|w| w.norm() == 0.0);

    let spectrum = if scenario.wants(Analysis::Spectrum) && !silent_input {
        let opts = SpectrumOptions::for_linewidth(physics.convention.gamma0);
        let s = spectrum(output, input, physics.convention.gamma0, &opts)?;
        if s.truncated {
            warnings.push(format!(
                "output has not decayed below {:e} of its peak by t = {} s; spectrum is truncated",
                crate::analysis::TRUNCATION_THRESHOLD,
                scenario.grid.t_end
            ));
        }
        Some(s)
    } else {
        None
    };

    let mut echoes = Vec::new();
    let mut metrics = Vec::new();
    let mut metrics_error = None;
    if scenario.wants(Analysis::Metrics) {
        match detect_echo_window(output, input, scenario.input_end) {
            Ok(found) => {
                echoes = found;
                match compute_metrics(scenario, &run, &echoes) {
                    Ok(m) => metrics = m,
                    Err(e) => metrics_error = Some(e),
                }
            }
            Err(e) => metrics_error = Some(e),
        }
    }

    let nodes = match (&scenario.nodes, scenario.wants(Analysis::Nodes)) {
        (Some(spec), true) => match find_temporal_nodes(output, spec.after, spec.count) {
            Ok(n) => Some(n),
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        },
        _ => None,
    };

    Ok(Outcome {
        scenario: scenario.clone(),
        protocol,
        run,
        spectrum,
        echoes,
        metrics,
        metrics_error,
        nodes,
        warnings,
    })
}

fn compute_metrics(
    scenario: &Scenario,
    run: &CascadeRun,
    echoes: &[EchoWindow],
) -> Result<Vec<EchoMetrics>> {
    let (input, output) = (run.input(), run.output());
    if scenario.windows.is_empty() {
        let strongest = echoes.iter().map(|e| e.peak_intensity).fold(0.0, f64::max);
        return echoes
            .iter()
            .filter(|e| e.peak_intensity >= AUTO_ECHO_FRACTION * strongest)
            .take(MAX_AUTO_ECHOES)
            .enumerate()
            .map(|(m, w)| echo_metrics(output, input, m + 1, (w.a, w.b), w.tau))
            .collect();
    }
    scenario
        .windows
        .iter()
        .enumerate()
        .map(|(m, w)| {
            let tau = match w.tau {
                Some(tau) => tau,
                None => {
                    echoes
                        .iter()
                        .find(|e| e.peak_time >= w.a && e.peak_time <= w.b)
                        .ok_or(Error::NoEchoFound { after: w.a })?
                        .tau
                }
            };
            echo_metrics(output, input, m + 1, (w.a, w.b), tau)
        })
        .collect()
}

impl Outcome {
    /// First detected echo: (peak time, delay).
    pub fn first_echo(&self) -> Option<&EchoWindow> {
        self.echoes.first()
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub status: String,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputFile>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    columns: &'a [&'a str],
    rows: Vec<Vec<Option<f64>>>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        let digest = Sha256::digest(contents.as_bytes());
        self.files.push(OutputFile {
            file: name.to_string(),
            sha256: digest.iter().fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            }),
        });
        Ok(())
    }

    fn table(
        &mut self,
        stem: &str,
        formats: &[Format],
        header: &[&str],
        rows: &[Vec<f64>],
    ) -> Result<()> {
        for format in formats {
            match format {
                Format::Csv => {
                    let mut text = header.join(",");
                    text.push('\n');
                    for row in rows {
                        let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
                        text.push_str(&cells.join(","));
                        text.push('\n');
                    }
                    self.write(&format!("{stem}.csv"), &text)?;
                }
                Format::Json => {
                    let rows: Vec<Vec<Option<f64>>> = rows
                        .iter()
                        .map(|r| r.iter().map(|&v| v.is_finite().then_some(v)).collect())
                        .collect();
                    let table = JsonTable {
                        columns: header,
                        rows,
                    };
                    let mut text = serde_json::to_string(&table)
                        .map_err(|e| Error::InvalidInput(format!("json table: {e}")))?;
                    text.push('\n');
                    self.write(&format!("{stem}.json"), &text)?;
                }
            }
        }
        Ok(())
    }
}

/// Write every requested table of an outcome into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path, formats: &[Format]) -> Result<Vec<OutputFile>> {
    std::fs::create_dir_all(dir)?;
    let formats = if formats.is_empty() {
        &[Format::Csv][..]
    } else {
        formats
    };
    let mut w = Writer {
        dir: dir.to_path_buf(),
        files: Vec::new(),
    };
    let sc = &outcome.scenario;

    if sc.wants(Analysis::Records) {
        let header = ["t", "re_omega", "im_omega", "abs2_omega", "theta"];
        let record_rows = |r: &crate::solver::BoundaryRecord| -> Vec<Vec<f64>> {
            r.times
                .iter()
                .zip(&r.omega)
                .zip(&outcome.run.theta)
                .map(|((&t, o), &th)| vec![t, o.re, o.im, o.norm_sqr(), th])
                .collect()
        };
        w.table(
            "records/input",
            formats,
            &header,
            &record_rows(outcome.run.input()),
        )?;
        for (n, out) in outcome.run.outputs.iter().enumerate() {
            w.table(
                &format!("records/target{}_output", n + 1),
                formats,
                &header,
                &record_rows(out),
            )?;
        }
    }
    if let Some(s) = &outcome.spectrum {
        let rows: Vec<Vec<f64>> = s
            .omega_in_gamma0()
            .zip(&s.s_values)
            .map(|(w, &v)| vec![w, v])
            .collect();
        w.table("spectrum", formats, &["omega_gamma0", "s"], &rows)?;
    }
    if sc.wants(Analysis::Metrics) {
        let rows: Vec<Vec<f64>> = outcome
            .echoes
            .iter()
            .enumerate()
            .map(|(m, e)| {
                vec![
                    (m + 1) as f64,
                    e.a,
                    e.b,
                    e.tau,
                    e.peak_time,
                    e.peak_intensity,
                ]
            })
            .collect();
        w.table(
            "echoes",
            formats,
            &["m", "a", "b", "tau", "peak_time", "peak_intensity"],
            &rows,
        )?;
        let rows: Vec<Vec<f64>> = outcome
            .metrics
            .iter()
            .map(|m| vec![m.m as f64, m.a, m.b, m.tau, m.efficiency, m.fidelity])
            .collect();
        w.table("metrics", formats, &["m", "a", "b", "tau", "r", "f"], &rows)?;
    }
    if let Some(nodes) = &outcome.nodes {
        let rows: Vec<Vec<f64>> = nodes
            .iter()
            .enumerate()
            .map(|(k, &t)| vec![(k + 1) as f64, t])
            .collect();
        w.table("nodes", formats, &["k", "t"], &rows)?;
    }
    Ok(w.files)
}

/// Result of a CLI-level run: the manifest plus the error that decides the exit code.
pub struct RunReport {
    pub manifest: RunManifest,
    pub outcome: Outcome,
    /// Set when metrics were requested and no echo could be evaluated.
    pub metrics_error: Option<Error>,
}

pub fn run(resolved: &ResolvedRun, output: &OutputConfig, dir: &Path) -> Result<RunReport> {
    let started = Instant::now();
    let mut outcome = execute(&resolved.scenario, &resolved.physics)?;
    let files = write_outcome(&outcome, dir, &output.formats)?;
    let metrics_error = outcome.metrics_error.take();
    let status = match &metrics_error {
        Some(e) => format!("metrics unavailable: {e}"),
        None => "ok".to_string(),
    };
    let manifest = RunManifest {
        tool: "gravecho".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: resolved.scenario.name.clone(),
        config: RunConfig::echo(resolved, output),
        wall_time_s: started.elapsed().as_secs_f64(),
        status,
        warnings: outcome.warnings.clone(),
        outputs: files,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidInput(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    std::fs::write(
        dir.join("config.resolved.toml"),
        manifest.config.to_toml_string()?,
    )?;
    Ok(RunReport {
        manifest,
        outcome,
        metrics_error,
    })
}
