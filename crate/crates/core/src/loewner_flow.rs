//! Forward radial Loewner flow under Brownian driving.
//!
//! `∂_t g_t(z) = 2a g_t(z) (e^{2iB_t} + g_t(z)) / (e^{2iB_t} − g_t(z))`, with
//! `B` sampled on a uniform grid and held piecewise linear in between. The
//! curve is read off through the inverse flow, integrating the same field
//! backwards in time from `(1−δ)e^{2iB_t}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::integrate::{Control, Integrator, Outcome, Pair};
use crate::mc::path_rng;
use crate::{Error, Result};

/// Distance from the driving point at which a forward trajectory is
/// considered swallowed.
pub const SWALLOW_TOL: f64 = 1e-6;

/// Largest argument increment between consecutive curve samples accepted by
/// the winding tracker.
pub const MAX_ARG_STEP: f64 = PI / 2.0;

/// Brownian driving function sampled at multiples of `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub step: f64,
    pub values: Vec<f64>,
    pub seed: u64,
    pub duration: f64,
}

impl DrivingPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// `B(t)` with linear interpolation between samples.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = t / self.step;
        let last = self.values.len() - 1;
        if x <= 0.0 {
            return self.values[0];
        }
        let k = (x.floor() as usize).min(last);
        if k == last {
            return self.values[last];
        }
        let frac = x - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    /// The reflected driving function `−B`.
    pub fn negated(&self) -> DrivingPath {
        DrivingPath { values: self.values.iter().map(|v| -v).collect(), ..self.clone() }
    }

    /// Prefix of the path up to sample `k` inclusive.
    pub fn truncated(&self, k: usize) -> DrivingPath {
        DrivingPath { values: self.values[..=k].to_vec(), duration: self.time(k), ..self.clone() }
    }

    /// Driving point `e^{2iB(t)}` on the unit circle.
    fn driving_point(&self, t: f64) -> Complex64 {
        let b = 2.0 * self.value_at(t);
        Complex64::new(b.cos(), b.sin())
    }
}

fn sample_count(duration: f64, step: f64) -> usize {
    // guard against 1.0/0.01 style rounding just below an integer
    (duration / step + 1e-9).floor() as usize + 1
}

/// Standard Brownian motion on `[0, duration]` sampled every `step`.
pub fn sample_driving_path(seed: u64, duration: f64, step: f64) -> Result<DrivingPath> {
    sample_driving_stream(seed, 0, duration, step)
}

/// Like [`sample_driving_path`] but on an explicit per-path stream, for
/// Monte Carlo drivers.
pub fn sample_driving_stream(seed: u64, stream: u64, duration: f64, step: f64) -> Result<DrivingPath> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be non-negative, got {duration}")));
    }
    let mut rng = path_rng(seed, stream);
    Ok(brownian(&mut rng, seed, duration, step))
}

fn brownian(rng: &mut ChaCha8Rng, seed: u64, duration: f64, step: f64) -> DrivingPath {
    let n = sample_count(duration, step);
    let sd = step.sqrt();
    let mut values = Vec::with_capacity(n);
    let mut b = 0.0;
    values.push(b);
    for _ in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        values.push(b);
    }
    DrivingPath { step, values, seed, duration }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub tol: f64,
    pub swallow_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-10, swallow_tol: SWALLOW_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrajectory {
    pub point: Complex64,
    /// `(t, g_t(z))` at every driving sample reached.
    pub samples: Vec<(f64, Complex64)>,
    pub alive: bool,
    /// `(t, g_t'(0))` when `point == 0`, empty otherwise.
    pub deriv_at_zero: Vec<(f64, f64)>,
}

fn loewner_field(a: f64, u: Complex64, g: Complex64) -> Complex64 {
    2.0 * a * g * (u + g) / (u - g)
}

/// Integrates the forward flow of `z` along `path`.
pub fn evolve_forward(z: Complex64, path: &DrivingPath, a: f64) -> Result<ForwardTrajectory> {
    evolve_forward_with(z, path, a, FlowOptions::default())
}

pub fn evolve_forward_with(z: Complex64, path: &DrivingPath, a: f64, opts: FlowOptions) -> Result<ForwardTrajectory> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if z.norm() >= 1.0 {
        return Err(Error::OutsideDisk { re: z.re, im: z.im });
    }
    let integ = Integrator::with_tol(opts.tol);
    let at_zero = z == Complex64::new(0.0, 0.0);
    let field = |t: f64, y: Pair| {
        let u = path.driving_point(t);
        let g = y.0;
        let d = u - g;
        let ratio = (u + g) / d;
        Pair(2.0 * a * g * ratio, y.1 * (2.0 * a) * (ratio + 2.0 * u * g / (d * d)))
    };

    let mut traj = ForwardTrajectory {
        point: z,
        samples: vec![(0.0, z)],
        alive: true,
        deriv_at_zero: if at_zero { vec![(0.0, 1.0)] } else { Vec::new() },
    };
    let mut y = Pair(z, Complex64::new(1.0, 0.0));
    for k in 0..path.len().saturating_sub(1) {
        let (t0, t1) = (path.time(k), path.time(k + 1));
        let swallow = |t: f64, s: &Pair| {
            if (s.0 - path.driving_point(t)).norm() < opts.swallow_tol {
                Control::Stop
            } else {
                Control::Continue
            }
        };
        match integ.run(field, t0, t1, y, path.step, swallow) {
            Outcome::Done(next) => {
                y = next;
                traj.samples.push((t1, y.0));
                if at_zero {
                    traj.deriv_at_zero.push((t1, y.1.norm()));
                }
            }
            Outcome::Stopped { .. } | Outcome::Stalled { .. } => {
                traj.alive = false;
                break;
            }
        }
    }
    Ok(traj)
}

/// Approximate curve points `γ(t) ≈ g_t^{-1}((1−δ)e^{2iB_t})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
    pub delta: f64,
    /// Samples whose inverse flow left the disk.
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Trace every `stride`-th driving sample.
    pub stride: usize,
    pub tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { stride: 1, tol: 1e-10 }
    }
}

/// `g_t^{-1}((1−δ)e^{2iB_t})` at `t = path.time(k)`, by integrating the
/// Loewner field backwards over the stored driving segment.
pub fn trace_point(path: &DrivingPath, a: f64, delta: f64, k: usize, tol: f64) -> Result<Complex64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let integ = Integrator::with_tol(tol);
    let t_end = path.time(k);
    let mut w = path.driving_point(t_end) * (1.0 - delta);
    let field = |t: f64, w: Complex64| loewner_field(a, path.driving_point(t), w);
    for j in (0..k).rev() {
        let (t1, t0) = (path.time(j + 1), path.time(j));
        let inside = |_: f64, s: &Complex64| if s.norm() >= 1.0 { Control::Stop } else { Control::Continue };
        // start small: the field is of size ~4a/δ next to the driving point
        let h0 = (0.1 * delta).min(path.step);
        match integ.run(field, t1, t0, w, h0, inside) {
            Outcome::Done(next) => w = next,
            Outcome::Stopped { t, .. } | Outcome::Stalled { t, .. } => return Err(Error::LeftDisk { t }),
        }
    }
    if w.norm() >= 1.0 {
        return Err(Error::LeftDisk { t: 0.0 });
    }
    Ok(w)
}

/// Traces the curve with unit stride.
pub fn trace_curve(path: &DrivingPath, a: f64, delta: f64) -> Result<CurveSample> {
    trace_curve_with(path, a, delta, TraceOptions::default())
}

pub fn trace_curve_with(path: &DrivingPath, a: f64, delta: f64, opts: TraceOptions) -> Result<CurveSample> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let stride = opts.stride.max(1);
    let mut indices: Vec<usize> = (0..path.len()).step_by(stride).collect();
    if indices.last() != Some(&(path.len() - 1)) {
        indices.push(path.len() - 1);
    }
    let mut out = CurveSample { times: Vec::new(), points: Vec::new(), delta, dropped: 0 };
    for k in indices {
        match trace_point(path, a, delta, k, opts.tol) {
            Ok(p) => {
                out.times.push(path.time(k));
                out.points.push(p);
            }
            Err(Error::LeftDisk { .. }) => out.dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Continuous-in-`t` winding `W^z = arg(γ(t) − z) − normal_arg`.
///
/// The starting branch is the one within π of `normal_arg`, which is the
/// value forced by a curve leaving the boundary along the normal.
pub fn winding_about(curve: &CurveSample, z: Complex64, normal_arg: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(curve.points.len());
    let Some(first) = curve.points.first() else {
        return Ok(out);
    };
    let mut phi = normal_arg + principal(((first - z).arg()) - normal_arg);
    out.push(phi - normal_arg);
    for (i, pair) in curve.points.windows(2).enumerate() {
        let jump = ((pair[1] - z) / (pair[0] - z)).arg();
        if !(jump.abs() < MAX_ARG_STEP) {
            return Err(Error::UnderResolved { index: i + 1, jump });
        }
        phi += jump;
        out.push(phi - normal_arg);
    }
    Ok(out)
}

/// Reduces an angle to `(−π, π]`.
pub fn principal(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Traces with stride halving until the winding about every target is
/// resolved.
pub fn trace_resolved(
    path: &DrivingPath,
    a: f64,
    delta: f64,
    targets: &[Complex64],
    start_stride: usize,
) -> Result<CurveSample> {
    let mut stride = start_stride.max(1);
    loop {
        let curve = trace_curve_with(path, a, delta, TraceOptions { stride, ..Default::default() })?;
        let mut failure = None;
        for &z in targets {
            if let Err(e) = winding_about(&curve, z, 0.0) {
                failure = Some(e);
                break;
            }
        }
        match failure {
            None => return Ok(curve),
            Some(e) if stride == 1 => return Err(e),
            Some(_) => stride = (stride / 2).max(1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_duration_path_is_single_zero() {
        let p = sample_driving_path(7, 0.0, 0.01).unwrap();
        assert_eq!(p.values, vec![0.0]);
    }

    #[test]
    fn path_length_and_determinism() {
        let p = sample_driving_path(11, 1.0, 0.01).unwrap();
        let q = sample_driving_path(11, 1.0, 0.01).unwrap();
        assert_eq!(p.len(), 101);
        assert_eq!(p.values, q.values);
        assert_eq!(p.values[0], 0.0);
    }

    #[test]
    fn non_positive_step_is_rejected() {
        assert!(sample_driving_path(1, 1.0, 0.0).is_err());
        assert!(sample_driving_path(1, 1.0, -0.1).is_err());
    }

    #[test]
    fn initial_condition_is_exact() {
        let p = sample_driving_path(2, 0.5, 0.01).unwrap();
        let tr = evolve_forward(c(0.2, 0.3), &p, 1.0).unwrap();
        assert_eq!(tr.samples[0], (0.0, c(0.2, 0.3)));
    }

    #[test]
    fn conformal_radius_at_zero() {
        let p = sample_driving_path(3, 1.0, 0.001).unwrap();
        let opts = FlowOptions::default();
        let tr = evolve_forward_with(c(0.0, 0.0), &p, 1.0, opts).unwrap();
        let (t, d) = *tr.deriv_at_zero.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(((d - 2f64.exp()) / 2f64.exp()).abs() < 10.0 * opts.tol);
        for &(t, d) in &tr.deriv_at_zero {
            let e = (2.0 * t).exp();
            assert!(((d - e) / e).abs() <= 10.0 * opts.tol);
        }
    }

    #[test]
    fn zero_driving_keeps_real_points_real() {
        let p = DrivingPath { step: 0.01, values: vec![0.0; 51], seed: 0, duration: 0.5 };
        let tr = evolve_forward(c(-0.4, 0.0), &p, 0.5).unwrap();
        assert!(tr.samples.iter().all(|(_, g)| g.im == 0.0));
        assert!(tr.alive);
    }

    #[test]
    fn forward_trajectory_stays_in_disk() {
        let p = sample_driving_path(5, 1.0, 0.005).unwrap();
        let tr = evolve_forward(c(0.1, -0.5), &p, 0.5).unwrap();
        assert!(tr.samples.iter().all(|(_, g)| g.norm() < 1.0));
    }

    #[test]
    fn point_near_driving_point_is_swallowed() {
        // With B ≡ 0 the point 1−ε on the real axis flows straight into 1.
        let p = DrivingPath { step: 0.01, values: vec![0.0; 201], seed: 0, duration: 2.0 };
        let tr = evolve_forward(c(0.9, 0.0), &p, 1.0).unwrap();
        assert!(!tr.alive);
    }

    #[test]
    fn outside_disk_is_rejected() {
        let p = sample_driving_path(5, 0.1, 0.01).unwrap();
        assert!(matches!(evolve_forward(c(1.2, 0.0), &p, 1.0), Err(Error::OutsideDisk { .. })));
    }

    #[test]
    fn conjugation_equivariance_is_exact() {
        let p = sample_driving_path(9, 0.5, 0.005).unwrap();
        let z = c(0.3, 0.4);
        let tr = evolve_forward(z, &p, 0.5).unwrap();
        let tr_bar = evolve_forward(z.conj(), &p.negated(), 0.5).unwrap();
        assert_eq!(tr.samples.len(), tr_bar.samples.len());
        for ((_, g), (_, h)) in tr.samples.iter().zip(&tr_bar.samples) {
            assert_eq!(*g, h.conj());
        }
    }

    #[test]
    fn traced_curve_starts_at_root_and_stays_inside() {
        let p = sample_driving_path(21, 0.5, 0.001).unwrap();
        let curve = trace_curve_with(&p, 0.5, 1e-3, TraceOptions { stride: 25, tol: 1e-10 }).unwrap();
        assert!((curve.points[0] - c(1.0, 0.0)).norm() < 2e-3);
        assert!(curve.points.iter().all(|p| p.norm() < 1.0));
    }

    #[test]
    fn straight_segment_has_zero_winding() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        let points = times.iter().map(|t| c(1.0 - t, 0.0)).collect();
        let curve = CurveSample { times, points, delta: 0.0, dropped: 0 };
        let w = winding_about(&curve, c(0.0, 0.0), 0.0).unwrap();
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn spiral_winds_once() {
        // r(t) e^{iθ(t)} with θ: 0 → 2π, r: 1 → 0.2
        let n = 400;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let points: Vec<Complex64> =
            times.iter().map(|&t| Complex64::from_polar(1.0 - 0.8 * t, 2.0 * PI * t)).collect();
        let curve = CurveSample { times, points, delta: 0.0, dropped: 0 };
        let w = winding_about(&curve, c(0.0, 0.0), 0.0).unwrap();
        assert!((w.last().unwrap() - 2.0 * PI).abs() < 1e-12);

        let conj = CurveSample { points: curve.points.iter().map(|p| p.conj()).collect(), ..curve.clone() };
        let wc = winding_about(&conj, c(0.0, 0.0), 0.0).unwrap();
        for (x, y) in w.iter().zip(&wc) {
            assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_curve_is_reported_under_resolved() {
        let points = vec![c(0.9, 0.0), c(0.0, 0.9), c(-0.9, 0.0)];
        let curve = CurveSample { times: vec![0.0, 1.0, 2.0], points, delta: 0.0, dropped: 0 };
        assert!(matches!(winding_about(&curve, c(0.0, 0.0), 0.0), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn principal_range() {
        assert!((principal(3.0 * PI) - PI).abs() < 1e-12);
        assert!((principal(-0.5) + 0.5).abs() < 1e-15);
        assert!((principal(2.0 * PI + 0.1) - 0.1).abs() < 1e-12);
    }
}
