//! End-to-end checks of the numerics against known values and the bound
//! chain. Each check runs standalone and reports a pass flag with a short
//! human-readable detail line.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    conformal_line_scan, minimal_beta, solve_conformal_range, theta_variance_envelope, variance_ceiling, Axis,
    BetaChoice, BETA_REFINE_TOL, BETA_X_MAX,
};
use crate::discrete::{
    critical_x, discrete_observable, max_relation_residual, secant_turning, spiral_fixture, turning_number, HexDomain,
};
use crate::loewner_flow::{sample_driving_stream, trace_point};
use crate::mc::map_paths;
use crate::observable::{conformal_exponents, estimate_f0, exponents_from, holomorphy_residual, McConfig};
use crate::reverse_flow::{reverse_states_at, sample_t_infinity, time_changed_snapshots};
use crate::stats::{ks_two_sample, mean_stderr};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    /// `PASS`/`FAIL` line as printed by the test suite and the CLI.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {} ({:.2} s): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Sample sizes and seed shared by the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub paths: usize,
    pub ks_paths: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { paths: 10_000, ks_paths: 2000, seed: 20_240_501 }
    }
}

pub const CHECK_COUNT: u8 = 11;

fn timed(id: u8, name: &str, limit: f64, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    let (pass, detail) = match out {
        Ok((pass, detail)) if seconds <= limit => (pass, detail),
        Ok((_, detail)) => (false, format!("{detail}; exceeded {limit} s")),
        Err(e) => (false, format!("error: {e}")),
    };
    Check { id, name: name.to_string(), pass, detail, seconds }
}

/// Agreement with a reference quoted to `digits` significant digits (and
/// possibly truncated): within one unit of the last quoted digit.
fn sig_close(x: f64, reference: f64, digits: i32) -> bool {
    let unit = 10f64.powi(reference.abs().log10().floor() as i32 + 1 - digits);
    (x - reference).abs() < unit
}

pub fn check_roots() -> Check {
    timed(1, "conformal range roots", 1.0, || {
        let r = solve_conformal_range(1e-12)?;
        let refs = [
            (r.a0, 0.250_000_002_2),
            (r.a1, 0.808_474_875_3),
            (r.kappa0, 2.473_793_634_2),
            (r.kappa1, 7.999_999_929_5),
        ];
        let pass = refs.iter().all(|&(x, y)| sig_close(x, y, 10))
            && r.residuals.iter().all(|x| x.abs() < 1e-12)
            && r.a0 < r.a1;
        Ok((
            pass,
            format!(
                "a0 = {:.12}, a1 = {:.12}, kappa in ({:.10}, {:.10}), residuals {:.1e}, {:.1e}",
                r.a0, r.a1, r.kappa0, r.kappa1, r.residuals[0], r.residuals[1]
            ),
        ))
    })
}

pub fn check_beta_bounds() -> Check {
    timed(2, "minimal beta within lemma values", 10.0, || {
        let mut worst = [f64::NEG_INFINITY; 2];
        for (k, (lo, hi, cap)) in [(0.25, 0.75, 1.0), (0.5, 1.0, 2.0)].into_iter().enumerate() {
            let axis = Axis { lo, hi, n: 101 };
            let betas: Vec<Result<f64>> =
                map_paths(101, |i| Ok(minimal_beta(axis.values()[i], BETA_X_MAX, BETA_REFINE_TOL)?.beta_min));
            for b in betas {
                worst[k] = worst[k].max(b? - cap);
            }
        }
        let pass = worst.iter().all(|&w| w <= 1e-6);
        Ok((
            pass,
            format!("max(beta - 1) on [1/4, 3/4] = {:.2e}, max(beta - 2) on [1/2, 1] = {:.2e}", worst[0], worst[1]),
        ))
    })
}

pub fn check_region_consistency() -> Check {
    timed(3, "region scan flips at the roots", 30.0, || {
        let step = 0.005;
        let line = conformal_line_scan(Axis { lo: 0.2, hi: 1.0, n: 161 }, BetaChoice::Fixed)?;
        let roots = solve_conformal_range(1e-12)?;
        let flips: Vec<(f64, f64, bool)> = line
            .windows(2)
            .filter(|w| w[0].1.admissible != w[1].1.admissible)
            .map(|w| (w[0].0, w[1].0, w[1].1.admissible))
            .collect();
        let pass = flips.len() == 2
            && flips[0].2
            && !flips[1].2
            && flips[0].0 - step * 1e-9 <= roots.a0
            && roots.a0 <= flips[0].1 + step * 1e-9
            && flips[1].0 - step * 1e-9 <= roots.a1
            && roots.a1 <= flips[1].1 + step * 1e-9;
        let shown: Vec<String> = flips.iter().map(|f| format!("[{:.3}, {:.3}]", f.0, f.1)).collect();
        Ok((pass, format!("flips in {} vs a0 = {:.6}, a1 = {:.6}", shown.join(" and "), roots.a0, roots.a1)))
    })
}

pub fn check_variance_domination(cfg: &VerifyConfig) -> Check {
    timed(4, "E[T^2] below the variance ceiling", 300.0, || {
        let (a, delta) = (0.5, 1e-2);
        let mut sq = Vec::with_capacity(cfg.paths);
        let mut dropped = 0;
        for s in sample_t_infinity(a, delta, 1e-3, 1e-3, cfg.seed, cfg.paths) {
            match s {
                Ok(s) => sq.push(s.value * s.value),
                Err(crate::Error::TauNotReached { .. }) => dropped += 1,
                Err(e) => return Err(e),
            }
        }
        let m = mean_stderr(&sq);
        let ceiling = variance_ceiling(a, 1.0)?.powi(2);
        Ok((
            m.mean <= ceiling + 3.0 * m.stderr,
            format!(
                "E[T^2] = {:.4} ± {:.4} vs ceiling^2 = {:.4} ({} paths, {} dropped)",
                m.mean, m.stderr, ceiling, m.n, dropped
            ),
        ))
    })
}

pub fn check_envelope_domination(cfg: &VerifyConfig) -> Check {
    timed(5, "E[theta^2] below the envelope", 300.0, || {
        let (a, beta, delta) = (0.5, 1.0, 0.05);
        let checkpoints = [0.25, 0.5, 1.0, 2.0];
        let snaps = time_changed_snapshots(a, delta, 1e-3, &checkpoints, cfg.seed, cfg.paths)?;
        let mut pass = true;
        let mut parts = Vec::new();
        for (j, &s) in checkpoints.iter().enumerate() {
            let sq: Vec<f64> = snaps.iter().map(|p| p[j].theta_hat.powi(2)).collect();
            let m = mean_stderr(&sq);
            let env = theta_variance_envelope(a, beta, delta, s)?;
            pass &= m.mean <= env + 3.0 * m.stderr;
            parts.push(format!("s={s}: {:.4}±{:.4} <= {:.4}", m.mean, m.stderr, env));
        }
        Ok((pass, parts.join(", ")))
    })
}

pub fn check_observable_bounds(cfg: &VerifyConfig) -> Check {
    timed(6, "F(0) estimate respects the bound chain", 600.0, || {
        let mut pass = true;
        let mut parts = Vec::new();
        for (kappa, sigma) in [(4.0, 0.25), (3.0, 0.3)] {
            let e = exponents_from(kappa, sigma)?;
            let beta = minimal_beta(e.a, BETA_X_MAX, BETA_REFINE_TOL)?.beta_min;
            let c = variance_ceiling(e.a, beta)?;
            let lower = 1.0 - 2.0 * sigma * sigma * c * c;
            let mc = McConfig { n: cfg.paths, seed: cfg.seed, ..McConfig::default() };
            let est = estimate_f0(&e, &mc)?;
            let se = est.stderr;
            let ok =
                est.mean.re >= lower - 3.0 * se && est.mean.norm() <= 1.0 + 3.0 * se && est.mean.im.abs() <= 3.0 * se;
            pass &= ok;
            parts.push(format!(
                "kappa={kappa}, sigma={sigma}: F(0) = {:.4}{:+.4}i ± {:.4}, lower bound {:.4}",
                est.mean.re, est.mean.im, se, lower
            ));
        }
        Ok((pass, parts.join("; ")))
    })
}

pub fn check_delta_stability(cfg: &VerifyConfig) -> Check {
    timed(7, "F(0) stable in delta", 600.0, || {
        let e = conformal_exponents(2.0)?;
        let deltas = [1e-1, 1e-2, 1e-3];
        let mut ests = Vec::new();
        for &delta in &deltas {
            let mc = McConfig { n: cfg.paths, seed: cfg.seed, delta, ..McConfig::default() };
            ests.push(estimate_f0(&e, &mc)?);
        }
        let mut pass = true;
        let mut worst: f64 = 0.0;
        for i in 0..ests.len() {
            for j in i + 1..ests.len() {
                let combined = (ests[i].stderr.powi(2) + ests[j].stderr.powi(2)).sqrt();
                let ratio = (ests[i].mean - ests[j].mean).norm() / combined;
                worst = worst.max(ratio);
                pass &= ratio <= 5.0;
            }
        }
        let shown: Vec<String> =
            deltas.iter().zip(&ests).map(|(d, e)| format!("delta={d}: {:.4}{:+.4}i", e.mean.re, e.mean.im)).collect();
        Ok((pass, format!("{}; worst gap {:.2} combined stderr", shown.join(", "), worst)))
    })
}

/// Points at which the holomorphy residual is evaluated.
pub fn holomorphy_grid() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(0.3, 0.0),
        Complex64::new(0.0, -0.4),
        Complex64::new(0.5, 0.2),
        Complex64::new(-0.6, 0.3),
    ]
}

pub fn check_holomorphy() -> Check {
    timed(8, "holomorphic only at sigma = b", 1.0, || {
        let grid = holomorphy_grid();
        let mut at_b: f64 = 0.0;
        let mut off_b = f64::INFINITY;
        for kappa in [2.0, 8.0 / 3.0, 4.0, 6.0] {
            let b = conformal_exponents(kappa)?.b;
            at_b = at_b.max(holomorphy_residual(&exponents_from(kappa, b)?, &grid)?);
            for s in [b - 0.1, b + 0.1] {
                off_b = off_b.min(holomorphy_residual(&exponents_from(kappa, s)?, &grid)?);
            }
        }
        Ok((
            at_b <= 1e-12 && off_b > 1e-3,
            format!("max residual at b = {at_b:.1e}, min residual at b ± 0.1 = {off_b:.3e}"),
        ))
    })
}

pub fn check_forward_reverse_law(cfg: &VerifyConfig) -> Check {
    timed(9, "forward trace and reverse flow agree in law", 600.0, || forward_reverse_ks(cfg, 0.02, 2e-5))
}

/// KS comparison at `t = 1/2`, `κ = 4`, tracing from `(1 − δ)` times the
/// driving point with driving samples `step` apart.
pub fn forward_reverse_ks(cfg: &VerifyConfig, delta_trace: f64, step: f64) -> Result<(bool, String)> {
    let (a, t) = (0.5, 0.5);
    // (1 − δ) = e^{−2δ'} puts both processes at the same starting point
    let delta_rev = -0.5 * (1.0 - delta_trace).ln();
    let fwd: Vec<Result<Option<Complex64>>> = map_paths(cfg.ks_paths, |i| {
        let path = sample_driving_stream(cfg.seed, i as u64, t, step)?;
        match trace_point(&path, a, delta_trace, path.len() - 1, 1e-9) {
            Ok(p) => Ok(Some(p)),
            Err(crate::Error::LeftDisk { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut pts = Vec::with_capacity(cfg.ks_paths);
    for p in fwd {
        if let Some(p) = p? {
            pts.push(p);
        }
    }
    let rev = reverse_states_at(a, delta_rev, t, step, cfg.seed.wrapping_add(1), cfg.ks_paths)?;
    let rev_pts: Vec<Complex64> = rev.iter().map(|s| s.disk_point()).collect();

    let r_fwd: Vec<f64> = pts.iter().map(|p| -0.5 * p.norm().ln()).collect();
    let r_rev: Vec<f64> = rev.iter().map(|s| s.r).collect();
    let tests = [
        ("R", ks_two_sample(&r_fwd, &r_rev)),
        (
            "Re",
            ks_two_sample(
                &pts.iter().map(|p| p.re).collect::<Vec<_>>(),
                &rev_pts.iter().map(|p| p.re).collect::<Vec<_>>(),
            ),
        ),
        (
            "Im",
            ks_two_sample(
                &pts.iter().map(|p| p.im).collect::<Vec<_>>(),
                &rev_pts.iter().map(|p| p.im).collect::<Vec<_>>(),
            ),
        ),
    ];
    let pass = tests.iter().all(|(_, k)| k.p_value > 0.01);
    let shown: Vec<String> =
        tests.iter().map(|(n, k)| format!("{n}: D={:.4} p={:.3}", k.statistic, k.p_value)).collect();
    Ok((pass, format!("{} ({} traced, {} dropped)", shown.join(", "), pts.len(), cfg.ks_paths - pts.len())))
}

pub fn check_discrete_holomorphicity() -> Check {
    timed(10, "discrete relation at the critical point", 120.0, || {
        let d = HexDomain::flower();
        let w = d.boundary_mid_edges()[0];
        let crit = discrete_observable(&d, w, critical_x(), 0.625, d.vertices.len())?;
        let off = discrete_observable(&d, w, 0.4, 0.625, d.vertices.len())?;
        let (_, r_crit) = max_relation_residual(&d, &crit);
        let (_, r_off) = max_relation_residual(&d, &off);
        Ok((
            !crit.truncated && r_crit < 1e-12 && r_off > 1e-3,
            format!("max residual {r_crit:.1e} at x_c, {r_off:.3e} at x = 0.4 ({} vertices)", d.vertices.len()),
        ))
    })
}

pub fn check_turning_fixture() -> Check {
    timed(11, "spiral fixture turns by -7pi/3", 1.0, || {
        let (d, p) = spiral_fixture();
        let target = -7.0 * std::f64::consts::PI / 3.0;
        let per_turn = turning_number(&d, &p)?;
        let lifted = secant_turning(&p.polyline(&d));
        Ok((
            (per_turn - target).abs() < 1e-9 && (lifted - target).abs() < 1e-9,
            format!("per-turn {per_turn:.12}, lifted {lifted:.12}, target {target:.12}"),
        ))
    })
}

/// Runs check `id` (1 to [`CHECK_COUNT`]).
pub fn run_check(id: u8, cfg: &VerifyConfig) -> Option<Check> {
    Some(match id {
        1 => check_roots(),
        2 => check_beta_bounds(),
        3 => check_region_consistency(),
        4 => check_variance_domination(cfg),
        5 => check_envelope_domination(cfg),
        6 => check_observable_bounds(cfg),
        7 => check_delta_stability(cfg),
        8 => check_holomorphy(),
        9 => check_forward_reverse_law(cfg),
        10 => check_discrete_holomorphicity(),
        11 => check_turning_fixture(),
        _ => return None,
    })
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<Check> {
    (1..=CHECK_COUNT).filter_map(|id| run_check(id, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_checks_pass() {
        for c in [check_roots(), check_holomorphy(), check_turning_fixture()] {
            assert!(c.pass, "{}", c.line());
        }
    }

    #[test]
    fn significant_digits() {
        assert!(sig_close(0.250_000_002_21, 0.250_000_002_2, 10));
        assert!(!sig_close(0.250_000_003_2, 0.250_000_002_2, 10));
        assert!(sig_close(7.999_999_929_8, 7.999_999_929_5, 10));
        assert!(!sig_close(7.999_999_931, 7.999_999_929_5, 10));
    }

    #[test]
    fn unknown_id() {
        assert!(run_check(0, &VerifyConfig::default()).is_none());
        assert!(run_check(12, &VerifyConfig::default()).is_none());
    }
}
