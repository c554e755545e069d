//! Exponent algebra, the disk automorphism `f_z`, the total mass, and the
//! observable `F` itself.
//!
//! `F(0) = E[e^{−2iσT∞}]` is estimated from reverse-flow samples of `T∞`;
//! `F(z)` then follows from
//! `F(z) = |1−z|^{−2(b−σ)} (1−|z|²)^{b−b̃−ν} (1−z)^{−2σ} F(0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::loewner_flow::{winding_about, CurveSample};
use crate::reverse_flow::sample_t_infinity;
use crate::stats::complex_mean_stderr;
use crate::{Error, Result};

/// Parameter bundle for `SLE_κ` with spin `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub kappa: f64,
    /// `2/κ`
    pub a: f64,
    pub sigma: f64,
    /// `σ²/a`
    pub nu: f64,
    /// Boundary exponent `(3a − 1)/2`.
    pub b: f64,
    /// Interior exponent `½(1/a − 1) b`.
    pub b_tilde: f64,
}

impl Exponents {
    /// Exponent of `(1 − |z|²)` in `F(z)`; zero exactly when `σ = b`.
    pub fn interior_gap(&self) -> f64 {
        self.b - self.b_tilde - self.nu
    }
}

pub fn exponents_from(kappa: f64, sigma: f64) -> Result<Exponents> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let a = 2.0 / kappa;
    let b = (3.0 * a - 1.0) / 2.0;
    Ok(Exponents { kappa, a, sigma, nu: sigma * sigma / a, b, b_tilde: 0.5 * (1.0 / a - 1.0) * b })
}

/// Same bundle with `σ = b`, the holomorphic choice.
pub fn conformal_exponents(kappa: f64) -> Result<Exponents> {
    let b = exponents_from(kappa, 0.0)?.b;
    exponents_from(kappa, b)
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDisk { re: z.re, im: z.im })
    }
}

/// `C_𝔻(1, z) = |1−z|^{−2b} (1−|z|²)^{b−b̃}`, normalized by `C_𝔻(1, 0) = 1`.
pub fn total_mass(z: Complex64, e: &Exponents) -> Result<f64> {
    check_disk(z)?;
    Ok((1.0 - z).norm().powf(-2.0 * e.b) * (1.0 - z.norm_sqr()).powf(e.b - e.b_tilde))
}

/// The automorphism of the disk with `f_z(z) = 0` and `f_z(1) = 1`:
/// `f_z(w) = ((1−z̄)/(1−z)) (w−z)/(1−z̄w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusAutomorphism {
    pub z: Complex64,
    rotation: Complex64,
}

pub fn mobius_fz(z: Complex64) -> Result<MobiusAutomorphism> {
    check_disk(z)?;
    let one = Complex64::new(1.0, 0.0);
    Ok(MobiusAutomorphism { z, rotation: (one - z.conj()) / (one - z) })
}

impl MobiusAutomorphism {
    pub fn eval(&self, w: Complex64) -> Complex64 {
        self.rotation * (w - self.z) / (1.0 - self.z.conj() * w)
    }

    pub fn derivative(&self, w: Complex64) -> Complex64 {
        let d = 1.0 - self.z.conj() * w;
        self.rotation * (1.0 - self.z.norm_sqr()) / (d * d)
    }

    /// `f_z^{-1}(w) = (ρ̄w + z)/(1 + z̄ρ̄w)` with `ρ` the rotation factor.
    pub fn inverse(&self, w: Complex64) -> Complex64 {
        let v = self.rotation.conj() * w;
        (v + self.z) / (1.0 + self.z.conj() * v)
    }

    pub fn inverse_derivative(&self, w: Complex64) -> Complex64 {
        1.0 / self.derivative(self.inverse(w))
    }

    /// Continuous branch of `arg f_z'(w)` on the closed disk:
    /// `arg ρ − 2 arg(1 − z̄w)` with both terms principal.
    pub fn arg_derivative(&self, w: Complex64) -> f64 {
        -2.0 * (1.0 - self.z).arg() - 2.0 * (1.0 - self.z.conj() * w).arg()
    }

    /// Start-time shift `s₀ = log|f'(0)| / 2a` for `f = f_z^{-1}`, which
    /// makes the conformal radius of `z` equal to `e^{−2at}`.
    pub fn parametrization_shift(&self, a: f64) -> f64 {
        (1.0 - self.z.norm_sqr()).ln() / (2.0 * a)
    }
}

/// Monte Carlo settings for [`estimate_f0`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub dt: f64,
    pub delta: f64,
    pub tail_tol: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n: 10_000, dt: 1e-3, delta: 1e-3, tail_tol: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub n: usize,
    pub params: Exponents,
    /// Paths dropped because τ was not reached.
    pub dropped: usize,
}

/// JSON report of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub kappa: f64,
    pub sigma: f64,
    pub nu: f64,
    pub b: f64,
    pub b_tilde: f64,
    pub n: usize,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr: f64,
    pub delta: f64,
    pub dt: f64,
    pub seed: u64,
}

impl ObservableEstimate {
    pub fn report(&self, mc: &McConfig) -> EstimateReport {
        let e = &self.params;
        EstimateReport {
            kappa: e.kappa,
            sigma: e.sigma,
            nu: e.nu,
            b: e.b,
            b_tilde: e.b_tilde,
            n: self.n,
            mean_re: self.mean.re,
            mean_im: self.mean.im,
            stderr: self.stderr,
            delta: mc.delta,
            dt: mc.dt,
            seed: mc.seed,
        }
    }
}

/// Per-path summand `e^{−2iσT}`.
pub fn f0_summand(sigma: f64, t_inf: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * sigma * t_inf)
}

/// `F(0) ≈ (1/n) Σ e^{−2iσ T∞ⁱ}`.
pub fn estimate_f0(e: &Exponents, mc: &McConfig) -> Result<ObservableEstimate> {
    let samples = t_infinity_values(e.a, mc)?;
    Ok(estimate_from_samples(e, &samples.values, samples.dropped))
}

/// `T∞` values for `mc`, dropped paths counted.
pub struct TInfinityValues {
    pub values: Vec<f64>,
    pub dropped: usize,
}

pub fn t_infinity_values(a: f64, mc: &McConfig) -> Result<TInfinityValues> {
    if mc.n == 0 {
        return Err(Error::InvalidParameter("need at least one path".into()));
    }
    let mut values = Vec::with_capacity(mc.n);
    let mut dropped = 0;
    for r in sample_t_infinity(a, mc.delta, mc.dt, mc.tail_tol, mc.seed, mc.n) {
        match r {
            Ok(s) => values.push(s.value),
            Err(Error::TauNotReached { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(TInfinityValues { values, dropped })
}

/// Estimate from already simulated `T∞` values (several σ can share them).
pub fn estimate_from_samples(e: &Exponents, t_inf: &[f64], dropped: usize) -> ObservableEstimate {
    let summands: Vec<Complex64> = t_inf.iter().map(|&t| f0_summand(e.sigma, t)).collect();
    let (mean, stderr) = complex_mean_stderr(&summands);
    ObservableEstimate { mean, stderr, n: summands.len(), params: *e, dropped }
}

/// The three factors of `F(z)/F(0)`: boundary modulus, interior modulus and
/// the holomorphic part `(1−z)^{−2σ}` (principal branch).
pub fn f_factors(z: Complex64, e: &Exponents) -> Result<(f64, f64, Complex64)> {
    check_disk(z)?;
    let one_minus = Complex64::new(1.0, 0.0) - z;
    let boundary = one_minus.norm().powf(-2.0 * (e.b - e.sigma));
    let interior = (1.0 - z.norm_sqr()).powf(e.interior_gap());
    let holo = (-2.0 * e.sigma * one_minus.ln()).exp();
    Ok((boundary, interior, holo))
}

pub fn predicted_f(z: Complex64, e: &Exponents, f0: Complex64) -> Result<Complex64> {
    let (m1, m2, h) = f_factors(z, e)?;
    Ok(h * (m1 * m2) * f0)
}

/// Transforms `F_D(w, z)` to `F_{f(D)}(f(w), f(z))` given `f'(w)`, `f'(z)`:
/// `|f'(z)|^{σ−b̃−ν} |f'(w)|^{−b−σ} f'(z)^{−σ} f'(w)^{σ} F_D`.
pub fn covariance_transform(
    f_val: Complex64,
    fprime_w: Complex64,
    fprime_z: Complex64,
    e: &Exponents,
) -> Result<Complex64> {
    if fprime_w == Complex64::new(0.0, 0.0) || fprime_z == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("conformal map derivative must be nonzero".into()));
    }
    let s = e.sigma;
    let modulus = fprime_z.norm().powf(s - e.b_tilde - e.nu) * fprime_w.norm().powf(-e.b - s);
    let phase = (-s * fprime_z.ln() + s * fprime_w.ln()).exp();
    Ok(f_val * phase * modulus)
}

/// Result of comparing winding before and after mapping by `f_z^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub tip_dist: f64,
}

/// Per-sample version of [`mapped_winding_check`].
pub fn mapped_winding_series(curve: &CurveSample, z: Complex64) -> Result<Vec<WindingCheck>> {
    let fz = mobius_fz(z)?;
    let mapped = CurveSample { points: curve.points.iter().map(|&p| fz.inverse(p)).collect(), ..curve.clone() };
    // the map applied is f = f_z^{-1}: arg f'(0) = −arg f_z'(z), arg f'(1) = −arg f_z'(1) = 0
    let shift = -fz.arg_derivative(z) + fz.arg_derivative(Complex64::new(1.0, 0.0));
    let lhs = winding_about(&mapped, z, 0.0)?;
    let base = winding_about(curve, Complex64::new(0.0, 0.0), 0.0)?;
    Ok(lhs
        .iter()
        .zip(&base)
        .zip(&curve.points)
        .map(|((&l, &w0), p)| {
            let rhs = w0 + shift;
            WindingCheck { lhs: l, rhs, gap: (l - rhs).abs(), tip_dist: p.norm() }
        })
        .collect())
}

/// `W^z` of `f_z^{-1}∘γ` against `W^0_γ + arg f'(0) − arg f'(1)`, read at the
/// last curve sample.
pub fn mapped_winding_check(curve: &CurveSample, z: Complex64) -> Result<WindingCheck> {
    let series = mapped_winding_series(curve, z)?;
    series.last().copied().ok_or_else(|| Error::InvalidParameter("empty curve".into()))
}

/// Spread (max − min) over `z_grid` of the real factor
/// `|1−z|^{−2(b−σ)} (1−|z|²)^{b−b̃−ν}`; zero iff `F` is holomorphic there.
pub fn holomorphy_residual(e: &Exponents, z_grid: &[Complex64]) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &z in z_grid {
        let (m1, m2, _) = f_factors(z, e)?;
        let v = m1 * m2;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(if z_grid.is_empty() { 0.0 } else { hi - lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponents_at_kappa_two() {
        let e = exponents_from(2.0, 0.5).unwrap();
        assert_eq!((e.a, e.b, e.b_tilde, e.nu), (1.0, 1.0, 0.0, 0.25));
    }

    #[test]
    fn saw_kappa_gives_five_eighths() {
        let e = exponents_from(8.0 / 3.0, 0.0).unwrap();
        assert_abs_diff_eq!(e.b, 0.625, epsilon = 1e-15);
    }

    #[test]
    fn interior_gap_vanishes_at_sigma_b() {
        for i in 0..=115 {
            let kappa = 0.5 + 0.1 * i as f64;
            let e = conformal_exponents(kappa).unwrap();
            assert!(e.interior_gap().abs() < 1e-12, "kappa {kappa}");
            assert_abs_diff_eq!(e.a * e.kappa, 2.0, epsilon = 1e-14);
            assert_abs_diff_eq!(e.nu * e.a, e.sigma * e.sigma, epsilon = 1e-14);
            assert_abs_diff_eq!(2.0 * e.a * e.b_tilde, (1.0 - e.a) * e.b, epsilon = 1e-13);
        }
    }

    #[test]
    fn interior_gap_has_single_root_in_sigma() {
        // gap(σ) = b − b̃ − σ²/a is a downward parabola vanishing at σ = ±b.
        let kappa = 3.0;
        let b = conformal_exponents(kappa).unwrap().b;
        let mut near_zero = 0;
        for i in -2000..=2000 {
            let sigma = b + i as f64 * 1e-3;
            let g = exponents_from(kappa, sigma).unwrap().interior_gap();
            if g.abs() < 1e-9 {
                near_zero += 1;
            }
        }
        assert_eq!(near_zero, 2);
    }

    #[test]
    fn total_mass_values() {
        let e = exponents_from(8.0 / 3.0, 0.0).unwrap();
        assert_eq!(total_mass(c(0.0, 0.0), &e).unwrap(), 1.0);
        let z = c(0.3, -0.45);
        assert_abs_diff_eq!(total_mass(z, &e).unwrap(), total_mass(z.conj(), &e).unwrap(), epsilon = 1e-15);
        // z = 0.5, b = 5/8, b̃ = 5/48: 0.5^{-5/4} · 0.75^{25/48}
        let oracle = 0.5f64.powf(-1.25) * 0.75f64.powf(25.0 / 48.0);
        assert_abs_diff_eq!(total_mass(c(0.5, 0.0), &e).unwrap(), oracle, epsilon = 1e-14);
        assert!(total_mass(c(1.0, 0.0), &e).is_err());
    }

    #[test]
    fn total_mass_matches_covariance_of_fz() {
        let e = exponents_from(3.3, 0.0).unwrap();
        for z in [c(0.2, 0.1), c(-0.6, 0.3), c(0.0, -0.9)] {
            let f = mobius_fz(z).unwrap();
            let rule = f.derivative(c(1.0, 0.0)).norm().powf(e.b) * f.derivative(z).norm().powf(e.b_tilde);
            assert_abs_diff_eq!(total_mass(z, &e).unwrap(), rule, epsilon = 1e-12);
        }
    }

    #[test]
    fn mobius_basic_properties() {
        let id = mobius_fz(c(0.0, 0.0)).unwrap();
        assert_eq!(id.eval(c(0.3, 0.2)), c(0.3, 0.2));
        assert_eq!(id.parametrization_shift(0.5), 0.0);
        let z = c(0.4, -0.3);
        let f = mobius_fz(z).unwrap();
        assert!(f.eval(z).norm() < 1e-16);
        assert!((f.eval(c(1.0, 0.0)) - 1.0).norm() < 1e-15);
        let one = c(1.0, 0.0);
        assert_abs_diff_eq!(f.derivative(one).norm(), (1.0 - z.norm_sqr()) / (one - z).norm_sqr(), epsilon = 1e-14);
        assert_abs_diff_eq!(f.derivative(z).norm(), 1.0 / (1.0 - z.norm_sqr()), epsilon = 1e-14);
        assert_abs_diff_eq!(f.derivative(one).arg(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.derivative(z).arg(), -2.0 * (one - z).arg(), epsilon = 1e-14);
        assert_abs_diff_eq!(f.arg_derivative(z), f.derivative(z).arg(), epsilon = 1e-14);
        let w = c(-0.2, 0.5);
        assert!((f.inverse(f.eval(w)) - w).norm() < 1e-15);
    }

    #[test]
    fn predicted_f_cases() {
        let e = exponents_from(2.0, 0.3).unwrap();
        let f0 = c(0.8, 0.1);
        assert_eq!(predicted_f(c(0.0, 0.0), &e, f0).unwrap(), f0);

        // factor-by-factor oracle at z = 0.4i, κ = 2, σ = 0.3:
        // b = 1, b̃ = 0, ν = 0.09, |1−z|² = 1.16, 1−|z|² = 0.84
        let z = c(0.0, 0.4);
        let m1 = 1.16f64.powf(-(1.0 - 0.3));
        let m2 = 0.84f64.powf(1.0 - 0.0 - 0.09);
        let arg = (-0.4f64).atan2(1.0);
        let h = Complex64::from_polar(1.16f64.powf(-0.3), -0.6 * arg);
        let oracle = h * m1 * m2 * f0;
        assert!((predicted_f(z, &e, f0).unwrap() - oracle).norm() < 1e-14);

        let holo = conformal_exponents(2.0).unwrap();
        let z = c(0.3, -0.5);
        let expect = (c(1.0, 0.0) - z).powf(-2.0 * holo.b) * f0;
        assert!((predicted_f(z, &holo, f0).unwrap() - expect).norm() < 1e-12);
        assert!(predicted_f(c(1.0, 0.0), &e, f0).is_err());
    }

    #[test]
    fn predicted_f_conjugation() {
        let e = exponents_from(4.5, -0.2).unwrap();
        let f0 = c(0.7, -0.2);
        for z in [c(0.1, 0.3), c(-0.5, -0.5)] {
            let lhs = predicted_f(z.conj(), &e, f0.conj()).unwrap();
            let rhs = predicted_f(z, &e, f0).unwrap().conj();
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn covariance_identity_and_rotation() {
        let e = exponents_from(3.0, 0.4).unwrap();
        let f = c(0.3, 0.2);
        let one = c(1.0, 0.0);
        assert_eq!(covariance_transform(f, one, one, &e).unwrap(), f);
        assert!(covariance_transform(f, c(0.0, 0.0), one, &e).is_err());

        let holo = conformal_exponents(3.0).unwrap();
        let rot = Complex64::from_polar(1.0, 0.7);
        let out = covariance_transform(f, rot, rot, &holo).unwrap();
        let expect = rot.powf(-holo.b) * rot.conj().powf(-holo.b) * f;
        assert!((out - expect).norm() < 1e-14);
    }

    #[test]
    fn holomorphic_covariance_form() {
        let holo = conformal_exponents(5.0).unwrap();
        let f = c(0.3, 0.2);
        let (fw, fz) = (c(1.3, 0.4), c(0.6, -0.8));
        let out = covariance_transform(f, fw, fz, &holo).unwrap();
        let expect = fz.powf(-holo.b) * fw.conj().powf(-holo.b) * f;
        assert!((out - expect).norm() < 1e-13);
    }

    #[test]
    fn holomorphy_residual_cases() {
        let grid = [c(0.0, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5)];
        let e = conformal_exponents(2.0).unwrap();
        assert!(holomorphy_residual(&e, &grid).unwrap() < 1e-12);
        let off = exponents_from(2.0, e.b + 0.1).unwrap();
        assert!(holomorphy_residual(&off, &grid).unwrap() > 0.0);
        assert_eq!(holomorphy_residual(&off, &[c(0.0, 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn zero_spin_estimate_is_exactly_one() {
        let e = exponents_from(2.0, 0.0).unwrap();
        let mc = McConfig { n: 10, dt: 1e-2, delta: 0.1, tail_tol: 1e-2, seed: 1 };
        let est = estimate_f0(&e, &mc).unwrap();
        assert_eq!(est.mean, c(1.0, 0.0));
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn spin_flip_conjugates_estimate() {
        let mc = McConfig { n: 50, dt: 1e-2, delta: 0.1, tail_tol: 1e-2, seed: 2 };
        let p = estimate_f0(&exponents_from(4.0, 0.3).unwrap(), &mc).unwrap();
        let m = estimate_f0(&exponents_from(4.0, -0.3).unwrap(), &mc).unwrap();
        assert_eq!(p.mean, m.mean.conj());
        assert!(p.mean.norm() <= 1.0 + 1e-15);
    }
}
