use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{stats, LoadProfile, LoadTrace};
use crate::error::{Error, Result};

pub const SYNTH_SAMPLE_STEP_HOURS: f64 = 0.5;

const MAX_ATTEMPTS: usize = 100;
const RELATIVE_TOLERANCE: f64 = 0.002;
const SHAPE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
struct Shape {
    daily: f64,
    second: f64,
    third: f64,
    weekly: f64,
    peak_hour: f64,
    second_phase: f64,
    third_phase: f64,
    weekly_phase: f64,
}

impl Shape {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Shape {
            daily: rng.gen_range(0.55..0.75),
            second: rng.gen_range(0.15..0.30),
            third: rng.gen_range(0.03..0.10),
            weekly: rng.gen_range(0.05..0.15),
            peak_hour: 20.0 + rng.gen_range(-1.5..1.5),
            second_phase: rng.gen_range(-1.0..1.0),
            third_phase: rng.gen_range(-1.0..1.0),
            weekly_phase: rng.gen_range(0.0..168.0),
        }
    }

    fn at(&self, t: f64) -> f64 {
        let day = |k: f64, shift: f64| (k * TAU * (t - self.peak_hour - shift) / 24.0).cos();
        let diurnal = 1.0
            + self.daily * day(1.0, 0.0)
            + self.second * day(2.0, self.second_phase)
            + self.third * day(3.0, self.third_phase);
        let weekly = 1.0 + self.weekly * (TAU * (t - self.weekly_phase) / 168.0).cos();
        (diurnal * weekly).max(SHAPE_FLOOR)
    }
}

/// Seeded synthetic load profile: evening-peaked daily cycle with two
/// harmonics and a weekly swell, sampled half-hourly and rescaled until the
/// fitted profile's mean hourly load is within 0.2% of `target_mean`.
pub fn synthesize_profile(target_mean: f64, seed: u64, period: f64) -> Result<LoadProfile> {
    if !(target_mean > 0.0 && target_mean <= 1.0) {
        return Err(Error::InvalidArgument(format!("target mean {target_mean} outside (0, 1]")));
    }
    if !(period.is_finite() && period >= 4.0 * SYNTH_SAMPLE_STEP_HOURS) {
        return Err(Error::InvalidArgument(format!("period {period} too short")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape::draw(&mut rng);
    let times: Vec<f64> =
        (0..).map(|k| k as f64 * SYNTH_SAMPLE_STEP_HOURS).take_while(|&t| t < period - 1e-9).collect();
    let raw: Vec<f64> = times.iter().map(|&t| shape.at(t)).collect();
    let raw_mean = raw.iter().sum::<f64>() / raw.len() as f64;

    let mut scale = target_mean / raw_mean;
    for _ in 0..MAX_ATTEMPTS {
        let samples = times.iter().zip(&raw).map(|(&t, &r)| (t, (scale * r).min(1.0))).collect();
        let profile = LoadProfile::fit(&LoadTrace::new(samples, period)?)?;
        let mean = stats(&profile).mean_hourly;
        if (mean - target_mean).abs() <= RELATIVE_TOLERANCE * target_mean {
            return Ok(profile);
        }
        scale *= target_mean / mean;
    }
    Err(Error::InfeasibleTarget { target: target_mean, attempts: MAX_ATTEMPTS })
}
