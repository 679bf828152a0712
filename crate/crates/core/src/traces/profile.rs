use serde::{Deserialize, Serialize};

use super::LoadTrace;
use crate::error::{Error, Result};

pub const MAX_SUBINTERVALS: usize = 10_000;

/// Periodic C2 cubic spline through a trace's samples. Evaluation is clamped
/// into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// Sample times plus the wrap-around knot `t_0 + period`.
    knots: Vec<f64>,
    /// `[a, b, c, d]` of `a + b x + c x^2 + d x^3`, `x` measured from the segment's left knot.
    segments: Vec<[f64; 4]>,
    period: f64,
}

impl LoadProfile {
    /// Fits the periodic spline: value, slope and curvature all match across
    /// the wrap-around knot.
    pub fn fit(trace: &LoadTrace) -> Result<Self> {
        trace.validate()?;
        let n = trace.samples.len();
        let period = trace.period;
        let mut knots: Vec<f64> = trace.samples.iter().map(|s| s.0).collect();
        knots.push(knots[0] + period);
        let y: Vec<f64> = trace.samples.iter().map(|s| s.1).collect();
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(bad) = h.iter().position(|&hk| !(hk > 0.0)) {
            return Err(Error::SingularSpline(format!("duplicate knot at t={}", knots[bad])));
        }
        let next = |k: usize| (k + 1) % n;
        let prev = |k: usize| (k + n - 1) % n;

        // h[k-1] M[k-1] + 2 (h[k-1] + h[k]) M[k] + h[k] M[k+1] = rhs[k], cyclic.
        let sub: Vec<f64> = (0..n).map(|k| h[prev(k)]).collect();
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * (h[prev(k)] + h[k])).collect();
        let sup: Vec<f64> = h.clone();
        let rhs: Vec<f64> =
            (0..n).map(|k| 6.0 * ((y[next(k)] - y[k]) / h[k] - (y[k] - y[prev(k)]) / h[prev(k)])).collect();
        let m = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs)?;

        let segments = (0..n)
            .map(|k| {
                let hk = h[k];
                let (m0, m1) = (m[k], m[next(k)]);
                let (y0, y1) = (y[k], y[next(k)]);
                [y0, (y1 - y0) / hk - hk * (2.0 * m0 + m1) / 6.0, m0 / 2.0, (m1 - m0) / (6.0 * hk)]
            })
            .collect();
        Ok(LoadProfile { knots, segments, period })
    }

    /// Flat profile, mostly for tests and degenerate configurations.
    pub fn constant(value: f64, period: f64) -> Result<Self> {
        let samples = (0..4).map(|k| (k as f64 * period / 4.0, value)).collect();
        Self::fit(&LoadTrace::new(samples, period)?)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots[..self.knots.len() - 1]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let t0 = self.knots[0];
        let mut x = (t - t0).rem_euclid(self.period) + t0;
        if x >= t0 + self.period {
            x = t0;
        }
        let k = self.knots.partition_point(|&kn| kn <= x).saturating_sub(1).min(self.segments.len() - 1);
        (k, x - self.knots[k])
    }

    /// Spline value without clamping.
    pub fn raw(&self, t: f64) -> f64 {
        let (k, x) = self.locate(t);
        let [a, b, c, d] = self.segments[k];
        a + x * (b + x * (c + x * d))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (k, x) = self.locate(t);
        let [_, b, c, d] = self.segments[k];
        b + x * (2.0 * c + 3.0 * d * x)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let (k, x) = self.locate(t);
        let [_, _, c, d] = self.segments[k];
        2.0 * c + 6.0 * d * x
    }

    /// Normalized load at `t` (hours, any real; the profile repeats).
    pub fn value(&self, t: f64) -> f64 {
        self.raw(t).clamp(0.0, 1.0)
    }

    /// Supremum of the clamped profile over `[lo, hi]`, exact up to rounding:
    /// per spline piece the maximum is at an end or a stationary point.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(hi >= lo);
        let t0 = self.knots[0];
        let end = t0 + self.period;
        let mut start = (lo - t0).rem_euclid(self.period) + t0;
        if start >= end {
            start = t0;
        }
        let mut remaining = hi - lo;
        let mut best = f64::NEG_INFINITY;
        let mut k = self.locate(start).0;
        let mut x0 = start - self.knots[k];
        loop {
            let width = self.knots[k + 1] - self.knots[k];
            let x1 = (x0 + remaining).min(width);
            best = best.max(cubic_max(&self.segments[k], x0, x1));
            remaining -= x1 - x0;
            if remaining <= 0.0 {
                break;
            }
            k = (k + 1) % self.segments.len();
            x0 = 0.0;
        }
        best.clamp(0.0, 1.0)
    }

    fn segment_integral(&self, k: usize) -> f64 {
        let [a, b, c, d] = self.segments[k];
        let w = self.knots[k + 1] - self.knots[k];
        let (lo, hi) = cubic_range(&self.segments[k], 0.0, w);
        if lo >= 0.0 && hi <= 1.0 {
            return w * (a + w * (b / 2.0 + w * (c / 3.0 + w * d / 4.0)));
        }
        let f = |x: f64| (a + x * (b + x * (c + x * d))).clamp(0.0, 1.0);
        adaptive_simpson(&f, 0.0, w, 1e-7 / self.segments.len() as f64, 40)
    }
}

fn cubic_eval(s: &[f64; 4], x: f64) -> f64 {
    s[0] + x * (s[1] + x * (s[2] + x * s[3]))
}

/// Stationary points of the cubic inside `(x0, x1)`.
fn stationary(s: &[f64; 4], x0: f64, x1: f64) -> Vec<f64> {
    let (qa, qb, qc) = (3.0 * s[3], 2.0 * s[2], s[1]);
    let mut roots = Vec::new();
    if qa.abs() < 1e-14 {
        if qb.abs() > 1e-14 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push((-qb + sq) / (2.0 * qa));
            roots.push((-qb - sq) / (2.0 * qa));
        }
    }
    roots.retain(|&r| r > x0 && r < x1);
    roots
}

fn cubic_max(s: &[f64; 4], x0: f64, x1: f64) -> f64 {
    stationary(s, x0, x1).into_iter().chain([x0, x1]).map(|x| cubic_eval(s, x)).fold(f64::NEG_INFINITY, f64::max)
}

fn cubic_range(s: &[f64; 4], x0: f64, x1: f64) -> (f64, f64) {
    stationary(s, x0, x1)
        .into_iter()
        .chain([x0, x1])
        .map(|x| cubic_eval(s, x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, depth)
}

/// Cyclic tridiagonal solve by Sherman-Morrison on the Thomas algorithm.
/// `sub[0]` couples row 0 to the last unknown, `sup[n-1]` the last row to the first.
fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let x = thomas(sub, &b, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(sub, &b, sup, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(Error::SingularSpline("zero pivot".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::SingularSpline("zero pivot".into()));
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Peak-per-subinterval discretization of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLoad {
    pub step: f64,
    pub peaks: Vec<f64>,
}

impl StepLoad {
    /// Peak of subinterval `k`; indices past the end wrap around the period.
    pub fn peak(&self, k: usize) -> f64 {
        self.peaks[k % self.peaks.len()]
    }

    /// Area under the step function, in load-hours.
    pub fn area(&self, period: f64) -> f64 {
        self.peaks
            .iter()
            .enumerate()
            .map(|(k, p)| p * (((k + 1) as f64 * self.step).min(period) - k as f64 * self.step))
            .sum()
    }
}

/// Splits the period into `[tau, tau + step)` subintervals and keeps each one's
/// peak load. The final subinterval is shorter when `step` does not divide the
/// period.
pub fn discretize(profile: &LoadProfile, step: f64) -> Result<StepLoad> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!("step {step} must be positive")));
    }
    let period = profile.period();
    let count = (period / step - 1e-9).ceil().max(1.0) as usize;
    if count > MAX_SUBINTERVALS {
        return Err(Error::InvalidArgument(format!("{count} subintervals, at most {MAX_SUBINTERVALS}")));
    }
    let peaks = (0..count)
        .map(|k| {
            let lo = k as f64 * step;
            let hi = ((k + 1) as f64 * step).min(period);
            profile.max_on(lo, hi)
        })
        .collect();
    Ok(StepLoad { step, peaks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    /// Integral of the load over one period, load-hours.
    pub total_load: f64,
    /// `total_load / period`.
    pub mean_hourly: f64,
}

pub fn stats(profile: &LoadProfile) -> LoadStats {
    let total_load: f64 = (0..profile.segments.len()).map(|k| profile.segment_integral(k)).sum();
    LoadStats { total_load, mean_hourly: total_load / profile.period() }
}
