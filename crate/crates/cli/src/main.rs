use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use greencoop::harness::{
    self, heterogeneous_mix, premium_mix, recheck_records, reference_scenario, RpMetric, ScenarioConfig,
    StableSetStrategy,
};
use greencoop::traces::{self, stats, synthesize_profile, LoadTrace, DEFAULT_PERIOD_HOURS};

#[derive(Parser)]
#[command(name = "greencoop", version, about = "Coalition formation among base-station operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RpArg {
    RatioOfSums,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum StableArg {
    Schedules,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum MixArg {
    Premium,
    Heterogeneous,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write metrics and per-step records.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run this seed only, instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the step width, hours.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum)]
        rp_metric: Option<RpArg>,
        #[arg(long, value_enum)]
        stable_set: Option<StableArg>,
    },
    /// Generate synthetic load traces from a `name,target_mean[,seed]` CSV.
    SynthTraces {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PERIOD_HOURS)]
        period: f64,
    },
    /// Re-check the stability of every partition recorded by `run`.
    CheckStability {
        #[arg(long)]
        records: PathBuf,
    },
    /// Write one of the four reference scenario configs.
    Preset {
        #[arg(long)]
        scenario: usize,
        #[arg(long, value_enum, default_value = "premium")]
        mix: MixArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, out, seed, dt, rp_metric, stable_set } => {
            let mut cfg = ScenarioConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seeds = vec![seed];
            }
            if let Some(dt) = dt {
                cfg.step_hours = dt;
            }
            if let Some(m) = rp_metric {
                cfg.rp_metric = match m {
                    RpArg::RatioOfSums => RpMetric::RatioOfSums,
                    RpArg::Literal => RpMetric::Literal,
                };
            }
            if let Some(s) = stable_set {
                cfg.stable_set_strategy = match s {
                    StableArg::Schedules => StableSetStrategy::Schedules,
                    StableArg::Exhaustive => StableSetStrategy::Exhaustive,
                };
            }
            run(&cfg, &out)
        }
        Command::SynthTraces { out, targets, period } => synth_traces(&out, &targets, period),
        Command::CheckStability { records } => {
            let summary = recheck_records(&records)?;
            println!(
                "{} steps: {} stable with recorded histories, {} stable with histories ignored",
                summary.steps, summary.stable, summary.stable_history_free
            );
            for (seed, step, w) in &summary.failures {
                println!(
                    "seed {seed} step {step}: NO {} gains {:.6} -> {:.6} by joining {}",
                    w.actor, w.current_payoff, w.deviation_payoff, w.partners
                );
            }
            if !summary.failures.is_empty() {
                bail!("{} unstable steps", summary.failures.len());
            }
            Ok(())
        }
        Command::Preset { scenario, mix, out } => {
            let mix = match mix {
                MixArg::Premium => premium_mix(),
                MixArg::Heterogeneous => heterogeneous_mix(),
            };
            let cfg = reference_scenario(scenario, mix)?;
            fs::write(&out, cfg.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
    }
}

fn run(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let scenario = cfg.prepare()?;
    let runs =
        cfg.seeds.iter().map(|&seed| harness::run_scenario(&scenario, seed)).collect::<greencoop::Result<Vec<_>>>()?;
    harness::write_outputs(out, cfg, &runs)?;
    for r in &runs {
        for (k, m) in r.metrics.iter().enumerate() {
            println!("seed {} NO {}: RP {:.4} ON {:.3} XL {:.3}", r.seed, k + 1, m.rp, m.on_ratio, m.load_deviation);
        }
    }
    if let Some(sweep) = &cfg.dt_sweep {
        let mut series = Vec::new();
        for &dt in sweep {
            let mut c = cfg.clone();
            c.step_hours = dt;
            let s = c.prepare()?;
            series.push((dt, harness::run_scenario(&s, cfg.seeds[0])?.metrics));
        }
        harness::write_rp_sweep(out, &series)?;
    }
    Ok(())
}

fn synth_traces(out: &Path, targets: &Path, period: f64) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(targets)
        .with_context(|| format!("reading {}", targets.display()))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        if record.get(0) == Some("name") {
            continue;
        }
        let name = record.get(0).context("missing name")?;
        let target: f64 = record.get(1).context("missing target_mean")?.parse().context("target_mean")?;
        let seed: u64 = match record.get(2).filter(|s| !s.is_empty()) {
            Some(s) => s.parse().context("seed")?,
            None => k as u64 + 1,
        };
        let profile = synthesize_profile(target, seed, period)?;
        let samples = profile.knots().iter().map(|&t| (t, profile.value(t))).collect();
        let trace = LoadTrace::new(samples, period)?;
        let path = out.join(format!("{name}.csv"));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        traces::write_trace(BufWriter::new(file), &trace)?;
        let s = stats(&profile);
        println!("{name}: mean {:.4} total {:.2} -> {}", s.mean_hourly, s.total_load, path.display());
    }
    Ok(())
}
