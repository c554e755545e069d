//! Analytic non-triviality bounds for `F(0)`.
//!
//! If `1 − cos 2x − 2ax sin 2x ≤ βx²` for all `x` and `β < 4a`, then
//! `E[T_t²] ≤ c(a, β)²` with `c = ½ − ½ log tanh √((4a−β)/8)`, hence
//! `F(0) ≥ 1 − 2σ² c²`. This module finds the smallest such `β`, evaluates
//! the ceilings and envelopes, scans the admissible `(a, σ)` region and
//! solves for the ends of the conformal range.

use serde::{Deserialize, Serialize};

use crate::mc::map_paths;
use crate::{Error, Result};

/// `(1 − cos 2x − 2ax sin 2x) / x²`, written with `1 − cos 2x = 2 sin²x`.
pub fn beta_ratio(a: f64, x: f64) -> f64 {
    let s = x.sin();
    (2.0 * s * s - 2.0 * a * x * (2.0 * x).sin()) / (x * x)
}

/// Limit of [`beta_ratio`] as `x → 0`, floored at zero.
pub fn taylor_floor(a: f64) -> f64 {
    (2.0 - 4.0 * a).max(0.0)
}

/// Upper bound on the ratio for every `x ≥ x_max`: `(2 + 2a x)/x²`, which is
/// decreasing in `x`.
pub fn tail_bound(a: f64, x_max: f64) -> f64 {
    (2.0 + 2.0 * a * x_max) / (x_max * x_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaProfile {
    pub a: f64,
    pub beta_min: f64,
    pub x_argmax: f64,
    pub taylor_floor: f64,
    /// Search range actually used (doubled until the tail is dominated).
    pub x_max: f64,
    pub tail_bound: f64,
}

const BETA_GRID: usize = 10_000;

/// Smallest `β` with `1 − cos 2x − 2ax sin 2x ≤ βx²` for all `x > 0`.
///
/// Uniform grid on `(0, x_max]`, golden-section refinement around every
/// local maximum, then the range is doubled until the analytic tail bound
/// falls below the supremum found.
pub fn minimal_beta(a: f64, x_max: f64, refine_tol: f64) -> Result<BetaProfile> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if !(x_max >= 10.0) {
        return Err(Error::InvalidParameter(format!("x_max must be at least 10, got {x_max}")));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("refine_tol must be positive, got {refine_tol}")));
    }
    let floor = taylor_floor(a);
    let mut x_max = x_max;
    loop {
        let (sup, arg) = grid_supremum(a, x_max, refine_tol);
        let (beta_min, x_argmax) = if sup >= floor { (sup, arg) } else { (floor, 0.0) };
        let tail = tail_bound(a, x_max);
        if tail <= beta_min || x_max > 1e6 {
            return Ok(BetaProfile { a, beta_min, x_argmax, taylor_floor: floor, x_max, tail_bound: tail });
        }
        x_max *= 2.0;
    }
}

fn grid_supremum(a: f64, x_max: f64, tol: f64) -> (f64, f64) {
    let h = x_max / BETA_GRID as f64;
    let vals: Vec<f64> =
        (0..=BETA_GRID + 1).map(|i| if i == 0 { 2.0 - 4.0 * a } else { beta_ratio(a, i as f64 * h) }).collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 1..=BETA_GRID {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            let lo = ((i - 1) as f64 * h).max(h * 1e-3);
            let hi = (i + 1) as f64 * h;
            let (x, v) = golden_max(|x| beta_ratio(a, x), lo, hi, tol);
            let (x, v) = if vals[i] > v { (i as f64 * h, vals[i]) } else { (x, v) };
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    best
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn check_ceiling(a: f64, beta: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if beta >= 4.0 * a {
        return Err(Error::NoCeiling { beta, four_a: 4.0 * a });
    }
    Ok(())
}

/// `E[Θ̂_t²] ≤ (2/(4a−β)) [(t+δ)² − δ^{2−β/2a} (t+δ)^{β/2a}]`.
pub fn theta_variance_envelope(a: f64, beta: f64, delta: f64, t: f64) -> Result<f64> {
    check_ceiling(a, beta)?;
    if !(delta > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("need delta > 0 and t >= 0, got {delta}, {t}")));
    }
    let p = beta / (2.0 * a);
    let u = t + delta;
    // factored so that t = 0 gives exactly zero
    Ok(2.0 / (4.0 * a - beta) * u.powf(p) * (u.powf(2.0 - p) - delta.powf(2.0 - p)))
}

/// `½ − ½ log tanh √((4a−β)/8)`, the bound on `‖T_t‖₂`.
pub fn variance_ceiling(a: f64, beta: f64) -> Result<f64> {
    check_ceiling(a, beta)?;
    Ok(0.5 - 0.5 * ((4.0 * a - beta) / 8.0).sqrt().tanh().ln())
}

/// `1 − 2σ² c(a, β)²`, a lower bound on `F(0)`.
pub fn nontriviality_lower_bound(a: f64, sigma: f64, beta: f64) -> Result<f64> {
    let c = variance_ceiling(a, beta)?;
    Ok(1.0 - 2.0 * sigma * sigma * c * c)
}

/// How `β` is chosen for each `a` in a region scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaChoice {
    /// Numerically minimal `β` for each `a`.
    Minimal,
    /// `β = 1` on `[1/4, 3/4]` and `β = 2` on `[1/2, 1]`, whichever helps.
    Fixed,
}

/// Values of `β` usable at `a` under [`BetaChoice::Fixed`].
pub fn fixed_betas(a: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if (0.25..=0.75).contains(&a) {
        out.push(1.0);
    }
    if (0.5..=1.0).contains(&a) {
        out.push(2.0);
    }
    out
}

/// Search settings for [`BetaChoice::Minimal`].
pub const BETA_X_MAX: f64 = 20.0;
pub const BETA_REFINE_TOL: f64 = 1e-10;

/// Admissibility of a single `(a, σ)` given candidate `β` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// `β` that gave the best bound, if any had a ceiling.
    pub beta: Option<f64>,
    /// `1 − 2σ²c²`, `NaN` when no ceiling exists.
    pub lower_bound: f64,
    pub admissible: bool,
}

pub fn admissibility(a: f64, sigma: f64, betas: &[f64]) -> Admissibility {
    let mut best = Admissibility { beta: None, lower_bound: f64::NAN, admissible: false };
    for &beta in betas {
        if let Ok(lb) = nontriviality_lower_bound(a, sigma, beta) {
            if best.beta.is_none() || lb > best.lower_bound {
                best = Admissibility { beta: Some(beta), lower_bound: lb, admissible: lb > 0.0 };
            }
        }
    }
    best
}

/// Candidate `β` values at `a` for `choice`.
pub fn betas_for(a: f64, choice: BetaChoice) -> Result<Vec<f64>> {
    match choice {
        BetaChoice::Minimal => Ok(vec![minimal_beta(a, BETA_X_MAX, BETA_REFINE_TOL)?.beta_min]),
        BetaChoice::Fixed => Ok(fixed_betas(a)),
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n)
                .map(|i| if i + 1 == n { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64 })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub a_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    /// `β` used per `a` (smallest candidate; `None` if no candidate).
    pub beta: Vec<Option<f64>>,
    /// `[a index][σ index]`
    pub admissible: Vec<Vec<bool>>,
    pub lower_bound: Vec<Vec<f64>>,
}

pub fn region_scan(a_axis: Axis, sigma_axis: Axis, choice: BetaChoice) -> Result<RegionGrid> {
    if a_axis.n == 0 || sigma_axis.n == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    let a_values = a_axis.values();
    let sigma_values = sigma_axis.values();
    let rows: Vec<Result<(Option<f64>, Vec<Admissibility>)>> = map_paths(a_values.len(), |i| {
        let a = a_values[i];
        let betas = betas_for(a, choice)?;
        let row = sigma_values.iter().map(|&s| admissibility(a, s, &betas)).collect();
        Ok((betas.iter().copied().reduce(f64::min), row))
    });
    let mut grid =
        RegionGrid { a_values, sigma_values, beta: Vec::new(), admissible: Vec::new(), lower_bound: Vec::new() };
    for row in rows {
        let (beta, cells) = row?;
        grid.beta.push(beta);
        grid.admissible.push(cells.iter().map(|c| c.admissible).collect());
        grid.lower_bound.push(cells.iter().map(|c| c.lower_bound).collect());
    }
    Ok(grid)
}

/// Admissibility along the conformal line `σ = (3a−1)/2`.
pub fn conformal_line_scan(a_axis: Axis, choice: BetaChoice) -> Result<Vec<(f64, Admissibility)>> {
    let a_values = a_axis.values();
    map_paths(a_values.len(), |i| {
        let a = a_values[i];
        Ok((a, admissibility(a, (3.0 * a - 1.0) / 2.0, &betas_for(a, choice)?)))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub a0: f64,
    pub a1: f64,
    /// `2/a1`
    pub kappa0: f64,
    /// `2/a0`
    pub kappa1: f64,
    pub residuals: [f64; 2],
}

/// `((3a−1)²/8) [1 − log tanh √((4a−β)/8)]² − 1` with `4a − β` passed in
/// directly so the root next to `a = 1/4` keeps full relative precision.
fn conformal_equation(a: f64, four_a_minus_beta: f64) -> f64 {
    let k = 1.0 - (four_a_minus_beta / 8.0).sqrt().tanh().ln();
    (3.0 * a - 1.0).powi(2) / 8.0 * k * k - 1.0
}

/// Left end: `β = 1`, written in `ε = a − 1/4`.
fn lower_equation(eps: f64) -> f64 {
    conformal_equation(0.25 + eps, 4.0 * eps)
}

/// Right end: `β = 2`.
fn upper_equation(a: f64) -> f64 {
    conformal_equation(a, 4.0 * a - 2.0)
}

/// Bisection on a sign change in `[lo, hi]` down to width `tol` (or until
/// the midpoint stops moving), then Newton polishing.
pub fn bisect_newton<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.signum() != fhi.signum()) {
        return Err(Error::Bracketing(format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_sign = flo.signum();
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        if f(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let (blo, bhi) = (lo, hi);
    for _ in 0..3 {
        let fx = f(x);
        if fx == 0.0 {
            break;
        }
        let h = 1e-7 * x.abs().max(1e-300);
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        let next = x - fx / d;
        // keep the polish inside the bracket and only accept improvements
        if !(next >= blo - (bhi - blo) && next <= bhi + (bhi - blo)) || f(next).abs() >= fx.abs() {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Ends `(a₀, a₁)` of the `a`-interval on which the conformal observable
/// (`σ = (3a−1)/2`) is proven non-trivial, with `β = 1` at the left end and
/// `β = 2` at the right end.
pub fn solve_conformal_range(tol: f64) -> Result<RootPair> {
    if !(tol >= 1e-14) {
        return Err(Error::InvalidParameter(format!("tol must be at least 1e-14, got {tol}")));
    }
    // a₀: march ε up geometrically from just above 1/4 to the first sign change
    let mut lo = 1e-30;
    if lower_equation(lo) <= 0.0 {
        return Err(Error::Bracketing("lower equation not positive next to a = 1/4".into()));
    }
    let mut hi = lo;
    while lower_equation(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 0.5 {
            return Err(Error::Bracketing("no root of the lower equation above a = 1/4".into()));
        }
    }
    let eps = bisect_newton(lower_equation, lo, hi, tol * 1e-6)?;
    let a0 = 0.25 + eps;

    // a₁: march down from a = 1 to the first sign change
    let step = 1e-3;
    let mut hi = 1.0;
    let start_sign = upper_equation(hi).signum();
    let mut lo = hi - step;
    while upper_equation(lo).signum() == start_sign {
        hi = lo;
        lo -= step;
        if lo <= 0.5 {
            return Err(Error::Bracketing("no root of the upper equation below a = 1".into()));
        }
    }
    let a1 = bisect_newton(upper_equation, lo, hi, tol)?;

    Ok(RootPair { a0, a1, kappa0: 2.0 / a1, kappa1: 2.0 / a0, residuals: [lower_equation(eps), upper_equation(a1)] })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent supremum: brute-force dense grid, no refinement.
    fn brute_sup(a: f64) -> f64 {
        (1..=400_000).map(|i| beta_ratio(a, i as f64 * 5e-5)).fold(taylor_floor(a), f64::max)
    }

    #[test]
    fn beta_at_quarter_is_one() {
        let p = minimal_beta(0.25, 20.0, 1e-10).unwrap();
        assert!((p.beta_min - 1.0).abs() < 1e-9, "{}", p.beta_min);
        assert!((brute_sup(0.25) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beta_matches_dense_grid_oracle() {
        for a in [0.3, 0.5, 0.75, 0.9] {
            let p = minimal_beta(a, 20.0, 1e-10).unwrap();
            let b = brute_sup(a);
            assert!(p.beta_min >= b - 1e-12, "a={a}: {} < {b}", p.beta_min);
            assert!(p.beta_min - b < 1e-6, "a={a}: {} vs {b}", p.beta_min);
            assert!(p.beta_min >= p.taylor_floor);
            assert!(p.tail_bound <= p.beta_min);
        }
    }

    #[test]
    fn beta_lemma_values() {
        for a in [0.3, 0.5, 0.75] {
            assert!(minimal_beta(a, 20.0, 1e-10).unwrap().beta_min <= 1.0);
        }
        for a in [0.5, 0.8, 1.0] {
            assert!(minimal_beta(a, 20.0, 1e-10).unwrap().beta_min <= 2.0);
        }
    }

    #[test]
    fn beta_inequality_holds_on_grid() {
        let a = 0.6;
        let p = minimal_beta(a, 20.0, 1e-10).unwrap();
        for i in 1..20_000 {
            let x = i as f64 * 1e-3;
            let lhs = 1.0 - (2.0 * x).cos() - 2.0 * a * x * (2.0 * x).sin();
            assert!(lhs <= p.beta_min * x * x + 1e-12);
        }
    }

    #[test]
    fn minimal_beta_rejects_short_range() {
        assert!(minimal_beta(0.5, 5.0, 1e-8).is_err());
    }

    #[test]
    fn envelope_limits() {
        assert_eq!(theta_variance_envelope(0.5, 1.0, 0.05, 0.0).unwrap(), 0.0);
        let small = theta_variance_envelope(0.7, 1.3, 1e-12, 0.8).unwrap();
        assert!((small - 2.0 * 0.64 / (2.8 - 1.3)).abs() < 1e-9);
        assert!(theta_variance_envelope(0.5, 2.0, 0.05, 1.0).is_err());
    }

    #[test]
    fn envelope_matches_ode_equality_case() {
        // y' = (t+δ)/a + β y / (2a(t+δ)), y(0) = 0, integrated with RK4.
        let (a, beta, delta) = (0.5, 1.0, 0.05);
        let f = |t: f64, y: f64| (t + delta) / a + beta * y / (2.0 * a * (t + delta));
        let n = 100_000;
        let h = 1.0 / n as f64;
        let mut y = 0.0;
        for i in 0..n {
            let t = i as f64 * h;
            let k1 = f(t, y);
            let k2 = f(t + h / 2.0, y + h / 2.0 * k1);
            let k3 = f(t + h / 2.0, y + h / 2.0 * k2);
            let k4 = f(t + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let env = theta_variance_envelope(a, beta, delta, 1.0).unwrap();
        assert!((env - y).abs() < 1e-10, "{env} vs {y}");
        // closed form at these parameters: 2 t (t + δ)
        assert!((env - 2.0 * 1.05).abs() < 1e-12);
    }

    #[test]
    fn ceiling_values_and_monotonicity() {
        let c = variance_ceiling(0.5, 1.0).unwrap();
        // ½ − ½ log tanh √(1/8), evaluated independently
        let oracle = 0.5 - 0.5 * (0.125f64.sqrt().tanh()).ln();
        assert_eq!(c, oracle);
        assert!((c - 1.040_107).abs() < 1e-5, "{c}");
        assert!(variance_ceiling(0.5, 2.0 - 1e-12).unwrap() > 7.0);
        assert!(matches!(variance_ceiling(0.5, 2.0), Err(Error::NoCeiling { .. })));
        assert!(variance_ceiling(0.6, 1.0).unwrap() < c);
        assert!(variance_ceiling(0.5, 1.2).unwrap() > c);
    }

    #[test]
    fn lower_bound_cases() {
        assert_eq!(nontriviality_lower_bound(0.5, 0.0, 1.0).unwrap(), 1.0);
        assert!(nontriviality_lower_bound(0.5, 0.25, 1.0).unwrap() > 0.0);
        let roots = solve_conformal_range(1e-12).unwrap();
        let a0 = roots.a0;
        assert!(nontriviality_lower_bound(a0, (3.0 * a0 - 1.0) / 2.0, 1.0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn region_spot_checks() {
        let a = Axis { lo: 0.5, hi: 0.5, n: 1 };
        let s = Axis { lo: 0.25, hi: 0.25, n: 1 };
        assert!(region_scan(a, s, BetaChoice::Minimal).unwrap().admissible[0][0]);
        let s = Axis { lo: 10.0, hi: 10.0, n: 1 };
        let g = region_scan(Axis { lo: 0.3, hi: 1.0, n: 8 }, s, BetaChoice::Minimal).unwrap();
        assert!(g.admissible.iter().all(|row| !row[0]));
    }

    #[test]
    fn conformal_line_admissible_on_interval() {
        let line = conformal_line_scan(Axis { lo: 0.2, hi: 1.0, n: 161 }, BetaChoice::Fixed).unwrap();
        for (a, adm) in &line {
            if (0.3..=0.7).contains(a) {
                assert!(adm.admissible, "a = {a}");
            }
        }
    }

    #[test]
    fn roots_reproduce_reference() {
        let r = solve_conformal_range(1e-12).unwrap();
        assert!((r.a0 - 0.250_000_002_2).abs() < 1e-10);
        assert!((r.a1 - 0.808_474_875_3).abs() < 1e-10);
        assert!(r.residuals.iter().all(|x| x.abs() < 1e-12), "{:?}", r.residuals);
        assert_eq!(r.kappa0, 2.0 / r.a1);
    }

    #[test]
    fn bisection_reports_missing_bracket() {
        assert!(matches!(bisect_newton(|x| x * x + 1.0, -1.0, 1.0, 1e-12), Err(Error::Bracketing(_))));
    }
}
