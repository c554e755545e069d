//! Adaptive Dormand–Prince 5(4) integration for small deterministic systems.
//!
//! The Loewner vector field is smooth between driving samples, so each driving
//! segment is integrated on its own with an embedded error estimate; the
//! caller decides what happens near singularities through [`Control`].

use std::ops::{Add, Mul};

use num_complex::Complex64;

/// State vector of an ODE integrated by [`Integrator`].
pub trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    /// Scaled error norm of the difference `self - other`, measured against
    /// the size of `scale`.
    fn error_norm(&self, other: &Self, scale: &Self, abs_tol: f64, rel_tol: f64) -> f64;
}

impl OdeState for Complex64 {
    fn error_norm(&self, other: &Self, scale: &Self, abs_tol: f64, rel_tol: f64) -> f64 {
        (self - other).norm() / (abs_tol + rel_tol * scale.norm())
    }
}

/// Two complex components integrated together (a point and its derivative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair(pub Complex64, pub Complex64);

impl Add for Pair {
    type Output = Pair;
    fn add(self, rhs: Pair) -> Pair {
        Pair(self.0 + rhs.0, self.1 + rhs.1)
    }
}

impl Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, rhs: f64) -> Pair {
        Pair(self.0 * rhs, self.1 * rhs)
    }
}

impl OdeState for Pair {
    fn error_norm(&self, other: &Self, scale: &Self, abs_tol: f64, rel_tol: f64) -> f64 {
        let e0 = self.0.error_norm(&other.0, &scale.0, abs_tol, rel_tol);
        let e1 = self.1.error_norm(&other.1, &scale.1, abs_tol, rel_tol);
        e0.max(e1)
    }
}

/// What the integrator should do after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Outcome of integrating over one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<S> {
    /// Reached the end of the interval.
    Done(S),
    /// The step callback asked to stop at time `t`.
    Stopped { t: f64, state: S },
    /// Step size underflowed; the field is too stiff to continue.
    Stalled { t: f64, state: S },
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Smallest step magnitude before giving up.
    pub min_step: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { abs_tol: 1e-10, rel_tol: 1e-10, min_step: 1e-14 }
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

impl Integrator {
    pub fn with_tol(tol: f64) -> Self {
        Integrator { abs_tol: tol, rel_tol: tol, ..Default::default() }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    ///
    /// `h0` is the first trial step magnitude; `on_step` sees every accepted
    /// `(t, y)` and may stop the integration early.
    pub fn run<S, F, C>(&self, f: F, t0: f64, t1: f64, y0: S, h0: f64, mut on_step: C) -> Outcome<S>
    where
        S: OdeState,
        F: Fn(f64, S) -> S,
        C: FnMut(f64, &S) -> Control,
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Outcome::Done(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = h0.abs().min(span.abs()).max(self.min_step);
        let mut k1 = f(t, y);
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                return Outcome::Done(y);
            }
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let hs = step * dir;

            let k2 = f(t + C2 * hs, y + k1 * (A21 * hs));
            let k3 = f(t + C3 * hs, y + k1 * (A31 * hs) + k2 * (A32 * hs));
            let k4 = f(t + C4 * hs, y + k1 * (A41 * hs) + k2 * (A42 * hs) + k3 * (A43 * hs));
            let k5 = f(t + C5 * hs, y + k1 * (A51 * hs) + k2 * (A52 * hs) + k3 * (A53 * hs) + k4 * (A54 * hs));
            let k6 =
                f(t + hs, y + k1 * (A61 * hs) + k2 * (A62 * hs) + k3 * (A63 * hs) + k4 * (A64 * hs) + k5 * (A65 * hs));
            let y5 = y + k1 * (B1 * hs) + k3 * (B3 * hs) + k4 * (B4 * hs) + k5 * (B5 * hs) + k6 * (B6 * hs);
            let t_next = if last { t1 } else { t + hs };
            let k7 = f(t_next, y5);
            let y4 =
                y + k1 * (E1 * hs) + k3 * (E3 * hs) + k4 * (E4 * hs) + k5 * (E5 * hs) + k6 * (E6 * hs) + k7 * (E7 * hs);

            let err = y5.error_norm(&y4, &y, self.abs_tol, self.rel_tol);
            if err.is_finite() && err <= 1.0 {
                t = t_next;
                y = y5;
                k1 = k7;
                if on_step(t, &y) == Control::Stop {
                    return Outcome::Stopped { t, state: y };
                }
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a truncated final step says nothing about the natural step size
                if !last {
                    h = step * grow;
                }
            } else {
                let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
                h = step * shrink;
                if h < self.min_step {
                    return Outcome::Stalled { t, state: y };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let integ = Integrator::with_tol(1e-12);
        let out =
            integ.run(|_, y: Complex64| y * 2.0, 0.0, 1.0, Complex64::new(1.0, 0.0), 0.1, |_, _| Control::Continue);
        let Outcome::Done(y) = out else { panic!("not done") };
        assert!((y.re - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let integ = Integrator::with_tol(1e-12);
        let f = |t: f64, y: Complex64| Complex64::new(0.0, 1.0) * y * (1.0 + t);
        let y0 = Complex64::new(0.3, -0.2);
        let Outcome::Done(y1) = integ.run(f, 0.0, 0.7, y0, 0.01, |_, _| Control::Continue) else { panic!() };
        let Outcome::Done(back) = integ.run(f, 0.7, 0.0, y1, 0.01, |_, _| Control::Continue) else { panic!() };
        assert!((back - y0).norm() < 1e-10);
    }

    #[test]
    fn stop_request_is_honored() {
        let integ = Integrator::default();
        let out = integ.run(
            |_, y: Complex64| y,
            0.0,
            10.0,
            Complex64::new(1.0, 0.0),
            0.01,
            |_, y| {
                if y.re > 2.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        match out {
            Outcome::Stopped { t, state } => {
                assert!(state.re > 2.0);
                assert!(t < 1.0);
            }
            other => panic!("expected stop, got {other:?}"),
        }
    }
}
