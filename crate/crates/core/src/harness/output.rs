use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::ScenarioConfig;
use super::metrics::Metrics;
use super::run::{populate_step, step_loads, RunResult, StepRecord};
use crate::error::{Error, Result};
use crate::game::{is_nash_stable, ShiftRecord, Witness};

pub const CONFIG_FILE: &str = "config.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const STEPS_FILE: &str = "steps.jsonl";
pub const SHIFTS_FILE: &str = "shifts.jsonl";

#[derive(Serialize)]
struct SeededShift<'a> {
    seed: u64,
    #[serde(flatten)]
    shift: &'a ShiftRecord,
}

/// `NO,RP,ON,XL` table.
pub fn metrics_csv(metrics: &[Metrics]) -> String {
    let mut out = String::from("NO,RP,ON,XL\n");
    for (k, m) in metrics.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", k + 1, m.rp, m.on_ratio, m.load_deviation));
    }
    out
}

/// Per-operator mean over seeds; NaN deviations stay NaN.
fn mean_metrics(runs: &[RunResult]) -> Vec<Metrics> {
    let n = runs[0].metrics.len();
    let count = runs.len() as f64;
    (0..n)
        .map(|i| Metrics {
            rp: runs.iter().map(|r| r.metrics[i].rp).sum::<f64>() / count,
            on_ratio: runs.iter().map(|r| r.metrics[i].on_ratio).sum::<f64>() / count,
            load_deviation: runs.iter().map(|r| r.metrics[i].load_deviation).sum::<f64>() / count,
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `config.json`, `metrics.csv`, `steps.jsonl` and `shifts.jsonl`. With
/// several seeds `metrics.csv` holds the mean and each seed also gets
/// `metrics_seed<N>.csv`.
pub fn write_outputs(dir: &Path, config: &ScenarioConfig, runs: &[RunResult]) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to write".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(CONFIG_FILE), &(config.to_json() + "\n"))?;
    if runs.len() == 1 {
        write_file(&dir.join(METRICS_FILE), &metrics_csv(&runs[0].metrics))?;
    } else {
        write_file(&dir.join(METRICS_FILE), &metrics_csv(&mean_metrics(runs)))?;
        for r in runs {
            write_file(&dir.join(format!("metrics_seed{}.csv", r.seed)), &metrics_csv(&r.metrics))?;
        }
    }
    write_jsonl(&dir.join(STEPS_FILE), runs.iter().flat_map(|r| &r.steps))?;
    write_jsonl(
        &dir.join(SHIFTS_FILE),
        runs.iter().flat_map(|r| r.shifts.iter().map(|shift| SeededShift { seed: r.seed, shift })),
    )?;
    Ok(())
}

/// `plotdata/rp_vs_dt.csv` with one `dt,NO,RP` row per operator and step width.
pub fn write_rp_sweep(dir: &Path, series: &[(f64, Vec<Metrics>)]) -> Result<()> {
    let plot = dir.join("plotdata");
    fs::create_dir_all(&plot).map_err(|e| Error::io(&plot, e))?;
    let mut out = String::from("dt,NO,RP\n");
    for (dt, metrics) in series {
        for (k, m) in metrics.iter().enumerate() {
            out.push_str(&format!("{dt},{},{}\n", k + 1, m.rp));
        }
    }
    write_file(&plot.join("rp_vs_dt.csv"), &out)
}

pub fn read_steps(dir: &Path) -> Result<Vec<StepRecord>> {
    let path = dir.join(STEPS_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecheckSummary {
    pub steps: usize,
    /// Steps whose partition is stable under its recorded histories.
    pub stable: usize,
    /// Steps whose partition is stable with histories ignored.
    pub stable_history_free: usize,
    /// `(seed, step, witness)` of every history-aware failure.
    pub failures: Vec<(u64, usize, Witness)>,
}

/// Rebuilds each recorded step from the saved config and re-checks the
/// recorded partition's stability.
pub fn recheck_records(dir: &Path) -> Result<RecheckSummary> {
    let config = ScenarioConfig::from_file(&dir.join(CONFIG_FILE))?;
    let scenario = config.prepare()?;
    let loads = step_loads(&scenario)?;
    let mut summary = RecheckSummary::default();
    for record in read_steps(dir)? {
        let ctx = populate_step(&scenario, &loads, record.step, record.seed)?;
        let users: Vec<usize> = (0..ctx.players()).map(|k| ctx.users(crate::model::NoId(k)).len()).collect();
        if users != record.users {
            return Err(Error::Config(format!(
                "step {} (seed {}): rebuilt users {users:?} differ from recorded {:?}",
                record.step, record.seed, record.users
            )));
        }
        summary.steps += 1;
        match is_nash_stable(&record.partition, Some(&record.history_set()), &ctx)? {
            None => summary.stable += 1,
            Some(w) => summary.failures.push((record.seed, record.step, w)),
        }
        if is_nash_stable(&record.partition, None, &ctx)?.is_none() {
            summary.stable_history_free += 1;
        }
    }
    Ok(summary)
}
