//! Lifted reverse radial Loewner flow `dZ = −a cot(Z) dt + dB`,
//! `Z = Θ + iR`, started from `iδ`.
//!
//! Written in real coordinates:
//!
//! ```text
//! dΘ = −a sin 2Θ / (cosh 2R − cos 2Θ) dt + dB
//! dR =  a sinh 2R / (cosh 2R − cos 2Θ) dt
//! ```
//!
//! and `T = Θ − B` carries only the drift. The denominators are evaluated as
//! `2(sinh²R + sin²Θ)`, which is exact and avoids cancellation near `iδ`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::mc::{map_paths, path_rng};
use crate::{Error, Result};

/// `R` level (`log √3`) after which the drift of `T` is summable.
pub const TAU_LEVEL: f64 = 0.549_306_144_334_054_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverseState {
    pub t: f64,
    pub theta: f64,
    pub r: f64,
    /// Accumulated driving value `B_t`.
    pub b: f64,
}

impl ReverseState {
    pub fn initial(delta: f64) -> Self {
        ReverseState { t: 0.0, theta: 0.0, r: delta, b: 0.0 }
    }

    /// `T_t = Θ_t − B_t`.
    pub fn t_drift(&self) -> f64 {
        self.theta - self.b
    }

    /// `e^{2iΘ − 2R}`, the point of the disk this state represents.
    pub fn disk_point(&self) -> num_complex::Complex64 {
        num_complex::Complex64::from_polar((-2.0 * self.r).exp(), 2.0 * self.theta)
    }
}

/// `cosh 2r − cos 2θ`.
fn denom(theta: f64, r: f64) -> f64 {
    let (sh, s) = (r.sinh(), theta.sin());
    2.0 * (sh * sh + s * s)
}

/// Drifts `(dΘ/dt − dB/dt, dR/dt)`.
pub fn drift(theta: f64, r: f64, a: f64) -> (f64, f64) {
    let d = denom(theta, r);
    (-a * (2.0 * theta).sin() / d, a * (2.0 * r).sinh() / d)
}

/// One Euler–Maruyama step with Brownian increment `dw` over `dt`.
pub fn step_reverse(state: &ReverseState, dw: f64, dt: f64, a: f64) -> Result<ReverseState> {
    if !(state.r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {}", state.r)));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(step_unchecked(state, dw, dt, a))
}

#[inline]
fn step_unchecked(s: &ReverseState, dw: f64, dt: f64, a: f64) -> ReverseState {
    let (dtheta, dr) = drift(s.theta, s.r, a);
    ReverseState { t: s.t + dt, theta: s.theta + dtheta * dt + dw, r: s.r + dr * dt, b: s.b + dw }
}

/// Local step: `min(dt, r²/4)`. The drift is of size `a/r` near the real
/// axis, so this resolves the start at `iδ` and relaxes as `R` grows.
#[inline]
pub fn local_step(dt: f64, r: f64) -> f64 {
    dt.min(0.25 * r * r)
}

/// Driver that advances a [`ReverseState`] with noise drawn from a
/// per-path stream. `sign = −1` reflects every increment.
pub struct ReversePath {
    pub state: ReverseState,
    a: f64,
    dt: f64,
    sign: f64,
    rng: ChaCha8Rng,
}

impl ReversePath {
    pub fn new(a: f64, delta: f64, dt: f64, rng: ChaCha8Rng) -> Result<Self> {
        check_params(a, delta, dt)?;
        Ok(ReversePath { state: ReverseState::initial(delta), a, dt, sign: 1.0, rng })
    }

    /// Same noise, every increment negated.
    pub fn reflected(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    pub fn step(&mut self) -> &ReverseState {
        let h = local_step(self.dt, self.state.r);
        self.advance(h)
    }

    fn advance(&mut self, h: f64) -> &ReverseState {
        let z: f64 = self.rng.sample(StandardNormal);
        let dw = self.sign * h.sqrt() * z;
        self.state = step_unchecked(&self.state, dw, h, self.a);
        &self.state
    }

    /// Advances to exactly time `t` (no-op if already past it).
    pub fn advance_to(&mut self, t: f64) -> &ReverseState {
        while self.state.t < t {
            let h = local_step(self.dt, self.state.r).min(t - self.state.t);
            if h <= 0.0 {
                break;
            }
            self.advance(h);
            if t - self.state.t < 1e-12 * t.max(1.0) {
                self.state.t = t;
            }
        }
        &self.state
    }
}

fn check_params(a: f64, delta: f64, dt: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Full path from `iδ` over `[0, duration]`, one state per internal step.
pub fn simulate_reverse_path(a: f64, delta: f64, duration: f64, dt: f64, seed: u64) -> Result<Vec<ReverseState>> {
    simulate_reverse_stream(a, delta, duration, dt, seed, 0)
}

pub fn simulate_reverse_stream(
    a: f64,
    delta: f64,
    duration: f64,
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<ReverseState>> {
    let mut path = ReversePath::new(a, delta, dt, path_rng(seed, stream))?;
    let mut out = vec![path.state];
    while path.state.t < duration {
        let h = local_step(dt, path.state.r).min(duration - path.state.t);
        out.push(*path.advance(h));
    }
    Ok(out)
}

/// State at time `t` for each of `n` paths (path `i` on stream `i`).
pub fn reverse_states_at(a: f64, delta: f64, t: f64, dt: f64, seed: u64, n: usize) -> Result<Vec<ReverseState>> {
    check_params(a, delta, dt)?;
    Ok(map_paths(n, |i| {
        let mut p = ReversePath::new(a, delta, dt, path_rng(seed, i as u64)).expect("checked");
        *p.advance_to(t)
    }))
}

/// Result of [`sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub holds: bool,
    /// Largest signed violation (negative when every bound holds strictly).
    pub max_violation: f64,
}

/// Pathwise bounds on `R`: `asinh(sinh δ e^{at})` from below and
/// `acosh(cosh δ e^{at})` from above.
pub fn r_bounds(a: f64, delta: f64, t: f64) -> (f64, f64) {
    let g = (a * t).exp();
    ((delta.sinh() * g).asinh(), (delta.cosh() * g).acosh())
}

/// Checks the pathwise `R` sandwich at every state, allowing `slack`.
pub fn sandwich_check(path: &[ReverseState], a: f64, delta: f64, slack: f64) -> Sandwich {
    let mut worst = f64::NEG_INFINITY;
    for s in path {
        let (lo, hi) = r_bounds(a, delta, s.t);
        worst = worst.max(lo - s.r).max(s.r - hi);
    }
    Sandwich { holds: worst <= slack, max_violation: worst }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TInfinitySample {
    /// `T` at the stopping time.
    pub value: f64,
    /// Remaining drift allowed by the post-τ bound, `(2/3) e^{−a s}`.
    pub tail_bound: f64,
    pub stop_time: f64,
    /// First time `R ≥ log √3`.
    pub tau: f64,
    /// `T` at `tau`.
    pub value_at_tau: f64,
}

/// Hard cap on the τ search, `50/a`.
pub fn tau_cap(a: f64) -> f64 {
    50.0 / a
}

/// Post-τ run length after which `(2/3) e^{−a s} ≤ tail_tol`.
pub fn tail_duration(a: f64, tail_tol: f64) -> f64 {
    ((2.0 / 3.0) / tail_tol).ln().max(0.0) / a
}

pub fn estimate_t_infinity(a: f64, delta: f64, dt: f64, tail_tol: f64, seed: u64) -> Result<TInfinitySample> {
    estimate_t_infinity_stream(a, delta, dt, tail_tol, seed, 0)
}

pub fn estimate_t_infinity_stream(
    a: f64,
    delta: f64,
    dt: f64,
    tail_tol: f64,
    seed: u64,
    stream: u64,
) -> Result<TInfinitySample> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tail_tol must be positive, got {tail_tol}")));
    }
    let mut path = ReversePath::new(a, delta, dt, path_rng(seed, stream))?;
    run_t_infinity(&mut path, a, tail_tol)
}

/// Runs an existing path to the `T∞` stopping rule.
pub fn run_t_infinity(path: &mut ReversePath, a: f64, tail_tol: f64) -> Result<TInfinitySample> {
    let cap = tau_cap(a);
    while path.state.r < TAU_LEVEL {
        if path.state.t >= cap {
            return Err(Error::TauNotReached { cap });
        }
        path.step();
    }
    let tau = path.state.t;
    let value_at_tau = path.state.t_drift();
    let s = tail_duration(a, tail_tol);
    let stop = path.advance_to(tau + s);
    Ok(TInfinitySample {
        value: stop.t_drift(),
        tail_bound: (2.0 / 3.0) * (-a * s).exp(),
        stop_time: stop.t,
        tau,
        value_at_tau,
    })
}

/// `n` independent `T∞` samples, path `i` on stream `i`, in path order.
pub fn sample_t_infinity(
    a: f64,
    delta: f64,
    dt: f64,
    tail_tol: f64,
    seed: u64,
    n: usize,
) -> Vec<Result<TInfinitySample>> {
    map_paths(n, |i| estimate_t_infinity_stream(a, delta, dt, tail_tol, seed, i as u64))
}

/// State of the process after the time change `R̂_s = s + δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeChangedState {
    pub s: f64,
    pub theta_hat: f64,
    pub t_hat: f64,
    /// Original time `τ(s)`.
    pub tau: f64,
    pub delta: f64,
}

impl TimeChangedState {
    pub fn r_hat(&self) -> f64 {
        self.s + self.delta
    }
}

/// `dτ/ds = (cosh 2(s+δ) − cos 2Θ̂) / (a sinh 2(s+δ))`.
pub fn tau_rate(s: f64, theta_hat: f64, a: f64, delta: f64) -> f64 {
    denom(theta_hat, s + delta) / (a * (2.0 * (s + delta)).sinh())
}

/// Drift of `Θ̂` and `T̂`: `−sin 2Θ̂ / sinh 2(s+δ)`.
pub fn time_changed_drift(s: f64, theta_hat: f64, delta: f64) -> f64 {
    -(2.0 * theta_hat).sin() / (2.0 * (s + delta)).sinh()
}

/// Affine bounds on `τ(s)`:
/// `(s + δ − log 2cosh δ)/a ≤ τ(s) ≤ (s + δ − log 2sinh δ)/a`.
pub fn tau_affine_bounds(a: f64, delta: f64, s: f64) -> (f64, f64) {
    let lo = (s + delta - (2.0 * delta.cosh()).ln()) / a;
    let hi = (s + delta - (2.0 * delta.sinh()).ln()) / a;
    (lo, hi)
}

/// Exact bounds on `τ(s)` obtained from the `R` sandwich:
/// `log(cosh(s+δ)/cosh δ)/a ≤ τ(s) ≤ log(sinh(s+δ)/sinh δ)/a`.
pub fn tau_bounds(a: f64, delta: f64, s: f64) -> (f64, f64) {
    let lo = ((s + delta).cosh() / delta.cosh()).ln() / a;
    let hi = ((s + delta).sinh() / delta.sinh()).ln() / a;
    (lo, hi)
}

pub struct TimeChangedPath {
    pub state: TimeChangedState,
    a: f64,
    ds: f64,
    rng: ChaCha8Rng,
}

impl TimeChangedPath {
    pub fn new(a: f64, delta: f64, ds: f64, rng: ChaCha8Rng) -> Result<Self> {
        check_params(a, delta, ds)?;
        let state = TimeChangedState { s: 0.0, theta_hat: 0.0, t_hat: 0.0, tau: 0.0, delta };
        Ok(TimeChangedPath { state, a, ds, rng })
    }

    fn advance(&mut self, h: f64) -> &TimeChangedState {
        let st = &self.state;
        let rate = tau_rate(st.s, st.theta_hat, self.a, st.delta);
        let drift = time_changed_drift(st.s, st.theta_hat, st.delta);
        let z: f64 = self.rng.sample(StandardNormal);
        let dw = h.sqrt() * z;
        self.state = TimeChangedState {
            s: st.s + h,
            theta_hat: st.theta_hat + drift * h + rate.sqrt() * dw,
            t_hat: st.t_hat + drift * h,
            tau: st.tau + rate * h,
            delta: st.delta,
        };
        &self.state
    }

    /// Local step `min(ds, (s+δ)²/4)`, the analogue of [`local_step`].
    fn local(&self) -> f64 {
        local_step(self.ds, self.state.s + self.state.delta)
    }

    pub fn advance_to(&mut self, s: f64) -> &TimeChangedState {
        while self.state.s < s {
            let h = self.local().min(s - self.state.s);
            if h <= 0.0 {
                break;
            }
            self.advance(h);
            if s - self.state.s < 1e-12 * s.max(1.0) {
                self.state.s = s;
            }
        }
        &self.state
    }
}

/// Time-changed path on `[0, s_max]`, one state per internal step.
pub fn simulate_time_changed(a: f64, delta: f64, s_max: f64, ds: f64, seed: u64) -> Result<Vec<TimeChangedState>> {
    let mut path = TimeChangedPath::new(a, delta, ds, path_rng(seed, 0))?;
    let mut out = vec![path.state];
    while path.state.s < s_max {
        let h = path.local().min(s_max - path.state.s);
        out.push(*path.advance(h));
    }
    Ok(out)
}

/// `Θ̂` at each of `checkpoints` (ascending) for `n` paths.
pub fn time_changed_snapshots(
    a: f64,
    delta: f64,
    ds: f64,
    checkpoints: &[f64],
    seed: u64,
    n: usize,
) -> Result<Vec<Vec<TimeChangedState>>> {
    check_params(a, delta, ds)?;
    Ok(map_paths(n, |i| {
        let mut p = TimeChangedPath::new(a, delta, ds, path_rng(seed, i as u64)).expect("checked");
        checkpoints.iter().map(|&s| *p.advance_to(s)).collect()
    }))
}
