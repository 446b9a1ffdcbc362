//! Fixed-step RK4 for `ẋ = A₀x + Σ Aᵢ x(t − τᵢ)` with cubic interpolation
//! of delayed values.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::DelaySystem;

/// Sampled solution and its exponential growth estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Slope of a least-squares fit of `log max‖x‖` over windows of length
    /// `τ_K` in the second half of the run; `−∞` for a zero tail.
    pub decay_rate: f64,
}

/// Stored samples plus the initial history, queried at arbitrary past times.
struct History<'a> {
    phi: &'a dyn Fn(f64) -> DVector<f64>,
    h: f64,
    samples: Vec<DVector<f64>>,
}

impl History<'_> {
    fn sample(&self, k: isize) -> DVector<f64> {
        if k <= 0 {
            (self.phi)(k as f64 * self.h)
        } else {
            self.samples[k as usize].clone()
        }
    }

    /// Value at `t ≤ current time`: the history itself for `t ≤ 0`, cubic
    /// Lagrange interpolation through four neighbouring samples otherwise.
    fn at(&self, t: f64) -> DVector<f64> {
        if t <= 0.0 {
            return (self.phi)(t);
        }
        let last = self.samples.len() as isize - 1;
        let u = t / self.h;
        // Stencil k0..k0+3 around u, kept inside known samples and away
        // from the (possibly discontinuous) history when t > 0.
        let k0 = (u.floor() as isize - 1).clamp(0, (last - 3).max(0));
        let mut out = DVector::zeros(self.samples[0].len());
        for a in 0..4 {
            let ka = k0 + a;
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (u - (k0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            out += self.sample(ka) * w;
        }
        out
    }
}

fn rhs(sys: &DelaySystem, hist: &History<'_>, t: f64, x: &DVector<f64>) -> DVector<f64> {
    let mut dx = sys.a(0) * x;
    for i in 1..=sys.k() {
        dx += sys.a(i) * hist.at(t - sys.taus()[i - 1]);
    }
    dx
}

/// Integrates from the history `φ` on `[−τ_K, 0]` up to `t_end` with step
/// `h ≤ min interval width / 4`. The state at `t = 0` is `φ(0)`.
pub fn simulate(
    sys: &DelaySystem,
    phi: &dyn Fn(f64) -> DVector<f64>,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    let min_width = (0..sys.k())
        .map(|i| sys.grid().width(i))
        .fold(f64::INFINITY, f64::min);
    if !(h > 0.0) || h > min_width / 4.0 + 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "step {h} must lie in (0, {}]",
            min_width / 4.0
        )));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(
            "simulation horizon must be positive".into(),
        ));
    }
    let x0 = phi(0.0);
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "history has dimension {}, system {}",
            x0.len(),
            sys.n()
        )));
    }
    let steps = (t_end / h).ceil() as usize;
    let mut hist = History {
        phi,
        h,
        samples: Vec::with_capacity(steps + 1),
    };
    hist.samples.push(x0);
    let mut times = vec![0.0];
    for k in 0..steps {
        let t = k as f64 * h;
        let x = hist.samples[k].clone();
        let k1 = rhs(sys, &hist, t, &x);
        let k2 = rhs(sys, &hist, t + 0.5 * h, &(&x + &k1 * (0.5 * h)));
        let k3 = rhs(sys, &hist, t + 0.5 * h, &(&x + &k2 * (0.5 * h)));
        let k4 = rhs(sys, &hist, t + h, &(&x + &k3 * h));
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        hist.samples.push(next);
        times.push((k + 1) as f64 * h);
    }
    let decay_rate = decay_estimate(&times, &hist.samples, sys.horizon());
    Ok(Trajectory {
        times,
        states: hist.samples,
        decay_rate,
    })
}

/// Least-squares slope of `log` window maxima over the second half.
fn decay_estimate(times: &[f64], states: &[DVector<f64>], window: f64) -> f64 {
    let t_end = *times.last().unwrap_or(&0.0);
    let start = 0.5 * t_end;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut w0 = start;
    while w0 + window <= t_end + 1e-12 {
        let peak = times
            .iter()
            .zip(states)
            .filter(|(t, _)| **t >= w0 && **t < w0 + window)
            .map(|(_, x)| x.norm())
            .fold(0.0_f64, f64::max);
        if peak > 0.0 {
            pts.push((w0 + 0.5 * window, peak.ln()));
        } else {
            return f64::NEG_INFINITY;
        }
        w0 += window;
    }
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let num: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    num / den
}
