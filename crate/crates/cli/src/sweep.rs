//! Parameter sweeps: one run per value of a scalar config key.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Result};
use laneform_core::{Error, ScenarioConfig};
use serde_json::Value;

use crate::artifacts::{fmt_f, Artifacts};
use crate::commands::Summary;

/// Parses a comma-separated value list; an empty string is an empty list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("sweep value {s:?}: {e}")).into()))
        .collect()
}

/// Config paths set by an axis key. `c` sets both initial constants; a bare
/// parameter name such as `gamma0` means `params.gamma0`; anything else is a
/// dotted path into the config.
fn resolve(config: &Value, key: &str) -> Vec<Vec<String>> {
    let split = |k: &str| k.split('.').map(String::from).collect::<Vec<_>>();
    if key == "c" {
        return vec![split("initial.c_r"), split("initial.c_b")];
    }
    if !key.contains('.') && config.get("params").and_then(|p| p.get(key)).is_some() {
        return vec![vec!["params".into(), key.into()]];
    }
    vec![split(key)]
}

/// Copy of `base` with the axis key set to `value`.
pub fn apply(base: &ScenarioConfig, key: &str, value: f64) -> Result<ScenarioConfig> {
    let mut doc = serde_json::to_value(base)?;
    for path in resolve(&doc, key) {
        let mut node = &mut doc;
        for part in &path {
            node = node
                .get_mut(part.as_str())
                .ok_or_else(|| Error::Config(format!("sweep key {key:?}: no config entry {}", path.join("."))))?;
        }
        if !(node.is_number() || node.is_null()) {
            return Err(Error::Config(format!("sweep key {key:?} does not name a scalar")).into());
        }
        *node = serde_json::json!(value);
    }
    Ok(ScenarioConfig::from_json(&doc.to_string())?)
}

/// Runs `job` for every value on up to `workers` threads and writes
/// `summary.csv`. Each run writes under its own `run_NNN` directory.
pub fn sweep<F>(base: &ScenarioConfig, key: &str, values: &[f64], workers: usize, out: &Artifacts, job: F) -> Result<()>
where
    F: Fn(&ScenarioConfig, &Path) -> Result<Summary> + Sync,
{
    let configs: Vec<ScenarioConfig> = values.iter().map(|&v| apply(base, key, v)).collect::<Result<_>>()?;
    let dirs: Vec<PathBuf> = (0..values.len()).map(|k| PathBuf::from(format!("run_{k:03}"))).collect();
    for (cfg, dir) in configs.iter().zip(&dirs) {
        out.json(dir.join("config.json"), serde_json::to_value(cfg)?)?;
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Summary>>>> = Mutex::new((0..values.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(values.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= values.len() {
                    break;
                }
                log::info!("sweep {key} = {}: starting", values[k]);
                let r = job(&configs[k], &dirs[k]);
                results.lock().expect("results lock")[k] = Some(r);
            });
        }
    });

    let mut header = vec![key, "dir"];
    header.extend(Summary::HEADER);
    let mut csv = out.csv("summary.csv", &header)?;
    let mut first_error = None;
    for (k, r) in results.into_inner().expect("results lock").into_iter().enumerate() {
        match r.ok_or_else(|| anyhow!("sweep run {k} did not finish"))? {
            Ok(summary) => {
                let mut row = vec![fmt_f(values[k]), dirs[k].to_string_lossy().into_owned()];
                row.extend(summary.fields());
                csv.row(&row)?;
            }
            Err(e) => {
                log::error!("sweep {key} = {}: {e:#}", values[k]);
                first_error.get_or_insert(e.context(format!("sweep run {key} = {}", values[k])));
            }
        }
    }
    csv.finish()?;
    first_error.map_or(Ok(()), Err)
}
