//! Deterministic artifact writing: summary JSON, CSV data, and a plain
//! log. No timestamps or environment-dependent content, so reruns with the
//! same config and seed are byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::experiments::{Check, RunOutput};

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ResolvedConfig,
    results: &'a serde_json::Value,
    checks: &'a [Check],
    pass: bool,
}

pub fn write_artifacts(out: &RunOutput, out_dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let summary = Summary {
        config: &out.resolved,
        results: &out.results,
        checks: &out.checks,
        pass: out.pass(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out_dir.join("summary.json"), json + "\n")?;

    for csv in &out.csv {
        let mut file = fs::File::create(out_dir.join(&csv.name))?;
        writeln!(file, "{}", csv.header)?;
        for row in &csv.rows {
            writeln!(file, "{row}")?;
        }
    }

    let mut log = String::new();
    log.push_str(&format!(
        "experiment={} seed={} theta={} horizon={} replicas={}\n",
        out.resolved.experiment.name(),
        out.resolved.seed,
        out.resolved.theta,
        out.resolved.horizon,
        out.resolved.replicas
    ));
    for check in &out.checks {
        log.push_str(&format!(
            "{} {}: value {:e} vs threshold {:e}\n",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.threshold
        ));
    }
    log.push_str(if out.pass() { "RESULT PASS\n" } else { "RESULT FAIL\n" });
    fs::write(out_dir.join("run.log"), log)
}
