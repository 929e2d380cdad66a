//! Parameter sweeps: a run-config template plus a grid of override values.
//!
//! ```toml
//! [template]
//! scenario = "comb-none"
//!
//! [grid]
//! z_spacing = [0.04, 0.08, 0.16]
//! convention = ["paper-numbers", "ln2-literal"]
//! ```
//!
//! Every grid key names an `[overrides]` field. Points form the Cartesian
//! product in key order and run independently, each in its own directory.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::{OutputConfig, RunConfig};
use crate::error::{Error, Result};
use crate::runner::run;
use crate::scenarios::Registry;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub template: toml::Table,
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_path_to_error::deserialize(toml::Deserializer::new(text))
            .map_err(|e| Error::config(e.path().to_string(), e.into_inner().message().trim()))?;
        for (key, values) in &cfg.grid {
            if values.is_empty() {
                return Err(Error::config(
                    format!("grid.{key}"),
                    "needs at least one value",
                ));
            }
        }
        // Reject templates that could never parse before doing any work.
        RunConfig::deserialize(toml::Value::Table(cfg.template.clone()))
            .map_err(|e| Error::config("template", e.to_string()))?;
        Ok(cfg)
    }

    /// Every grid point as (key, value) pairs.
    pub fn points(&self) -> Vec<Vec<(String, toml::Value)>> {
        let mut points: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
        for (key, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn config_for(&self, point: &[(String, toml::Value)]) -> Result<RunConfig> {
        let mut table = self.template.clone();
        let overrides = table
            .entry("overrides")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(overrides) = overrides else {
            return Err(Error::config("template.overrides", "must be a table"));
        };
        for (k, v) in point {
            overrides.insert(k.clone(), v.clone());
        }
        let text = toml::to_string(&table).map_err(|e| Error::config("template", e.to_string()))?;
        RunConfig::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub parameters: Vec<(String, String)>,
    pub dir: PathBuf,
    pub status: String,
    pub exit_code: i32,
    pub tau1: Option<f64>,
    pub r1: Option<f64>,
    pub f1: Option<f64>,
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn run_point(
    sweep: &SweepConfig,
    registry: &Registry,
    index: usize,
    point: &[(String, toml::Value)],
    out: &Path,
    output: &OutputConfig,
) -> SweepPoint {
    let dir = out.join(format!("point_{index:03}"));
    let mut result = SweepPoint {
        index,
        parameters: point
            .iter()
            .map(|(k, v)| (k.clone(), value_text(v)))
            .collect(),
        dir: dir.clone(),
        status: "ok".into(),
        exit_code: 0,
        tau1: None,
        r1: None,
        f1: None,
    };
    let outcome = sweep
        .config_for(point)
        .and_then(|cfg| cfg.resolve(registry))
        .and_then(|resolved| run(&resolved, output, &dir));
    match outcome {
        Ok(report) => {
            result.tau1 = report.outcome.first_echo().map(|e| e.tau);
            if let Some(m) = report.outcome.metrics.first() {
                result.tau1 = Some(m.tau);
                result.r1 = Some(m.efficiency);
                result.f1 = Some(m.fidelity);
            }
            if let Some(e) = report.metrics_error {
                result.status = e.to_string();
                result.exit_code = e.exit_code();
            }
        }
        Err(e) => {
            result.status = e.to_string();
            result.exit_code = e.exit_code();
        }
    }
    result
}

/// Run every grid point with up to `workers` concurrent runs and write
/// `summary.csv` into `out`.
pub fn sweep(
    cfg: &SweepConfig,
    registry: &Registry,
    out: &Path,
    output: &OutputConfig,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    std::fs::create_dir_all(out)?;
    let points = cfg.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config("--workers", e.to_string()))?;
    let results: Vec<SweepPoint> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| run_point(cfg, registry, i, p, out, output))
            .collect()
    });

    let keys: Vec<&String> = cfg.grid.keys().collect();
    let mut text = String::from("point");
    for k in &keys {
        text.push(',');
        text.push_str(k);
    }
    text.push_str(",exit_code,tau1,r1,f1,status\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in &results {
        text.push_str(&r.index.to_string());
        for (_, v) in &r.parameters {
            text.push(',');
            text.push_str(v);
        }
        text.push_str(&format!(
            ",{},{},{},{},\"{}\"\n",
            r.exit_code,
            opt(r.tau1),
            opt(r.r1),
            opt(r.f1),
            r.status.replace('"', "'")
        ));
    }
    std::fs::write(out.join("summary.csv"), text)?;
    Ok(results)
}
