//! Closed-form kernels: harmonic measure of intervals, genus-q Poisson kernels
//! and harmonic charges (half-plane, angle, slit plane), the
//! Weierstrass-Hadamard kernel and pointwise kernel bounds.
//!
//! Branch conventions are fixed here once. Slit-plane arguments live in
//! `(0, 2pi)` and `sqrt` has argument in `(0, pi)`. Angle reductions use the
//! power branch that is positive on the positive axis.

use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KernelError {
    #[error("interval [{t1}, {t2}] must satisfy t1 < t2")]
    InvalidInterval { t1: f64, t2: f64 },
    #[error("point {0} lies in the open lower half-plane")]
    LowerHalfPlane(Complex64),
    #[error("kernel is singular at t = z = {0}")]
    Singular(Complex64),
    #[error("genus q >= 1 is undefined at the origin")]
    Origin,
    #[error("point {0} lies on the slit [0, +inf)")]
    Branch(Complex64),
    #[error("point {0} is not inside the open angle")]
    OutsideAngle(Complex64),
    #[error("angle ({alpha}, {beta}) needs aperture in (0, 2pi]")]
    InvalidAngle { alpha: f64, beta: f64 },
    #[error("neither bound regime applies")]
    Regime,
    #[error("Hadamard kernel pole at zeta = {0}")]
    Pole(Complex64),
}

/// Harmonic measure of `[t1, t2]` seen from `z` in the closed upper half-plane.
///
/// For `Im z > 0` this is the subtended angle divided by pi; on the real
/// axis it is the indicator of the closed interval.
pub fn harmonic_measure_interval(z: Complex64, t1: f64, t2: f64) -> Result<f64, KernelError> {
    if !(t1 < t2) {
        return Err(KernelError::InvalidInterval { t1, t2 });
    }
    if z.im < 0.0 {
        return Err(KernelError::LowerHalfPlane(z));
    }
    if z.im == 0.0 {
        return Ok(if z.re >= t1 && z.re <= t2 { 1.0 } else { 0.0 });
    }
    let a2 = z.im.atan2(z.re - t2);
    let a1 = z.im.atan2(z.re - t1);
    Ok((a2 - a1) / PI)
}

/// Genus-q Poisson kernel `(1/pi) Im(t^q / (z^q (t - z)))`.
///
/// Real `z` away from `t` (and from 0 when `q >= 1`) gives 0.
pub fn poisson_kernel(q: u32, t: f64, z: Complex64) -> Result<f64, KernelError> {
    if z.im < 0.0 {
        return Err(KernelError::LowerHalfPlane(z));
    }
    if z.im == 0.0 && z.re == t {
        return Err(KernelError::Singular(z));
    }
    if q >= 1 && z == Complex64::new(0.0, 0.0) {
        return Err(KernelError::Origin);
    }
    Ok(poisson_unchecked(q, t, z))
}

/// Kernel evaluation without argument checks, for hot loops over validated atoms.
#[inline]
pub(crate) fn poisson_unchecked(q: u32, t: f64, z: Complex64) -> f64 {
    if q == 0 {
        let dx = t - z.re;
        return z.im / (PI * (dx * dx + z.im * z.im));
    }
    let ratio = Complex64::new(t, 0.0) / z;
    let v = ratio.powu(q) / (Complex64::new(t, 0.0) - z);
    v.im / PI
}

/// Genus-q harmonic charge of `[t1, t2]`, closed form.
///
/// `omega(z, [t1, t2]) + (1/pi) sum_{k=1..q} Im(z^-k) (t2^k - t1^k) / k`; for
/// real `z` it is the indicator of `z` in the interval.
pub fn harmonic_charge_interval(q: u32, z: Complex64, t1: f64, t2: f64) -> Result<f64, KernelError> {
    if !(t1 < t2) {
        return Err(KernelError::InvalidInterval { t1, t2 });
    }
    if z.im < 0.0 {
        return Err(KernelError::LowerHalfPlane(z));
    }
    if q >= 1 && z == Complex64::new(0.0, 0.0) {
        return Err(KernelError::Origin);
    }
    Ok(charge_unchecked(q, z, t1, t2))
}

#[inline]
pub(crate) fn charge_unchecked(q: u32, z: Complex64, t1: f64, t2: f64) -> f64 {
    if z.im == 0.0 {
        return if z.re >= t1 && z.re <= t2 { 1.0 } else { 0.0 };
    }
    let w = z.inv();
    let rho = t1.abs().max(t2.abs()) * w.norm();
    if rho < 0.5 {
        // The closed form cancels against the subtracted polynomial here;
        // sum the remainder of the log series instead.
        let mut wk = w.powu(q + 1);
        let mut p1 = t1.powi(q as i32 + 1);
        let mut p2 = t2.powi(q as i32 + 1);
        let mut k = q + 1;
        let mut rest = 0.0;
        let mut bound = rho.powi(q as i32 + 1);
        while bound > 1e-17 * rest.abs() && k < q + 200 {
            rest -= wk.im * (p2 - p1) / k as f64;
            wk *= w;
            p1 *= t1;
            p2 *= t2;
            bound *= rho;
            k += 1;
        }
        return rest / PI;
    }
    let omega = (z.im.atan2(z.re - t2) - z.im.atan2(z.re - t1)) / PI;
    if q == 0 {
        return omega;
    }
    let mut wk = Complex64::new(1.0, 0.0);
    let mut p1 = 1.0;
    let mut p2 = 1.0;
    let mut poly = 0.0;
    for k in 1..=q {
        wk *= w;
        p1 *= t1;
        p2 *= t2;
        poly += wk.im * (p2 - p1) / k as f64;
    }
    omega + poly / PI
}

/// Argument of `z` normalised into `[0, 2pi)`.
pub(crate) fn arg_2pi(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Slit-plane square root with argument in `(0, pi)`.
pub fn slit_sqrt(z: Complex64) -> Result<Complex64, KernelError> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(KernelError::Branch(z));
    }
    Ok(Complex64::from_polar(z.norm().sqrt(), 0.5 * arg_2pi(z)))
}

/// Genus-q harmonic charge of `[0, x]` on the slit of the plane cut along `[0, +inf)`.
///
/// With `w = sqrt(z)`: `omega(w, [-sqrt x, sqrt x]) + (2/pi) sum_{odd k<=q} (sqrt x)^k Im(w^-k) / k`.
pub fn harmonic_charge_slitplane(q: u32, z: Complex64, x: f64) -> Result<f64, KernelError> {
    let w = slit_sqrt(z)?;
    if !(x >= 0.0) {
        return Err(KernelError::InvalidInterval { t1: 0.0, t2: x });
    }
    Ok(slit_charge_unchecked(q, w, x))
}

#[inline]
pub(crate) fn slit_charge_unchecked(q: u32, w: Complex64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    let winv = w.inv();
    let w2 = winv * winv;
    let rho = s * winv.norm();
    if rho < 0.5 {
        // Odd-power remainder of the log series, free of cancellation.
        let first = q + 1 + q % 2;
        let mut wk = winv.powu(first);
        let mut sk = s.powi(first as i32);
        let mut k = first;
        let mut rest = 0.0;
        let mut bound = rho.powi(first as i32);
        while bound > 1e-17 * rest.abs() && k < first + 400 {
            rest -= sk * wk.im / k as f64;
            wk *= w2;
            sk *= s * s;
            bound *= rho * rho;
            k += 2;
        }
        return 2.0 * rest / PI;
    }
    let omega = (w.im.atan2(w.re - s) - w.im.atan2(w.re + s)) / PI;
    if q == 0 {
        return omega;
    }
    let mut wk = winv;
    let mut sk = s;
    let mut poly = 0.0;
    let mut k = 1;
    while k <= q {
        poly += sk * wk.im / k as f64;
        wk *= w2;
        sk *= s * s;
        k += 2;
    }
    omega + 2.0 * poly / PI
}

/// Angle `angle(alpha, beta)` with aperture in `(0, 2pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSpec {
    alpha: f64,
    beta: f64,
}

/// Which boundary ray of an angle a segment lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Alpha,
    Beta,
}

impl AngleSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, KernelError> {
        let ap = beta - alpha;
        if !(ap > 0.0 && ap <= 2.0 * PI + 1e-12) || !alpha.is_finite() {
            return Err(KernelError::InvalidAngle { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn aperture(&self) -> f64 {
        self.beta - self.alpha
    }

    /// Exponent `pi / (beta - alpha)` of the reducing power map.
    pub fn kappa(&self) -> f64 {
        PI / self.aperture()
    }

    /// Angle of `z` measured from the alpha ray, in `[0, 2pi)`.
    pub fn relative_arg(&self, z: Complex64) -> f64 {
        let rot = Complex64::from_polar(1.0, -self.alpha);
        arg_2pi(z * rot)
    }

    /// Whether `z` lies strictly inside the open angle.
    pub fn contains(&self, z: Complex64) -> bool {
        if z.norm() == 0.0 {
            return false;
        }
        let phi = self.relative_arg(z);
        phi > 0.0 && phi < self.aperture()
    }

    /// The reduction `z -> (z e^{-i alpha})^{pi/(beta-alpha)}` onto the upper half-plane.
    pub fn reduce(&self, z: Complex64) -> Result<Complex64, KernelError> {
        if !self.contains(z) {
            return Err(KernelError::OutsideAngle(z));
        }
        Ok(self.reduce_unchecked(z))
    }

    pub(crate) fn reduce_unchecked(&self, z: Complex64) -> Complex64 {
        let kappa = self.kappa();
        if kappa == 1.0 && self.alpha == 0.0 {
            return z;
        }
        let phi = self.relative_arg(z);
        Complex64::from_polar(z.norm().powf(kappa), kappa * phi)
    }
}

/// Genus-q harmonic charge of the segment `[s1, s2]` (radial parameters) on one
/// side ray of an angle, seen from `z` inside the angle.
pub fn harmonic_charge_angle(
    q: u32,
    z: Complex64,
    side: Side,
    s1: f64,
    s2: f64,
    angle: &AngleSpec,
) -> Result<f64, KernelError> {
    if !(0.0 <= s1 && s1 < s2) {
        return Err(KernelError::InvalidInterval { t1: s1, t2: s2 });
    }
    let zt = angle.reduce(z)?;
    let kappa = angle.kappa();
    let (a, b) = if kappa == 1.0 { (s1, s2) } else { (s1.powf(kappa), s2.powf(kappa)) };
    match side {
        Side::Alpha => harmonic_charge_interval(q, zt, a, b),
        Side::Beta => harmonic_charge_interval(q, zt, -b, -a),
    }
}

/// Weierstrass-Hadamard kernel `log|1 - z/zeta| + sum_{k=1..q} Re(z^k / (k zeta^k))`.
///
/// For `|z/zeta| < 1/2` the kernel is summed as the tail
/// `-Re sum_{k>q} (z/zeta)^k / k`, which avoids cancellation far from zeta.
pub fn hadamard_kernel(q: u32, zeta: Complex64, z: Complex64) -> Result<f64, KernelError> {
    if zeta == Complex64::new(0.0, 0.0) || zeta == z {
        return Err(KernelError::Pole(zeta));
    }
    Ok(hadamard_unchecked(q, zeta, z))
}

pub(crate) fn hadamard_unchecked(q: u32, zeta: Complex64, z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        return 0.0;
    }
    let u = z / zeta;
    let r = u.norm();
    if r < 0.1 {
        let mut uk = u.powu(q + 1);
        let mut sum = 0.0;
        let mut k = q + 1;
        loop {
            let term = uk.re / k as f64;
            sum += term;
            if uk.norm() < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) || k > q + 200 {
                break;
            }
            uk *= u;
            k += 1;
        }
        return -sum;
    }
    let mut v = (Complex64::new(1.0, 0.0) - u).norm().ln();
    let mut uk = Complex64::new(1.0, 0.0);
    for k in 1..=q {
        uk *= u;
        v += uk.re / k as f64;
    }
    v
}

/// Which pointwise bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRegime {
    /// `|t| <= a|z|`, bound `|t|^q / (pi (1-a) |z|^{q+1})`.
    NearOrigin,
    /// `a|t| >= |z|`, bound `|t|^{q-1} / (pi (1-a) |z|^q)`.
    FarOut,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub regime: BoundRegime,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

// Slack for round-off in comparing a computed kernel with its bound.
const BOUND_SLACK: f64 = 1e-12;

/// Compare `|P^[q](t, z)|` with the applicable pointwise bound.
pub fn kernel_bounds_check(q: u32, t: f64, z: Complex64, a: f64) -> Result<BoundReport, KernelError> {
    let value = poisson_kernel(q, t, z)?.abs();
    let (rz, rt) = (z.norm(), t.abs());
    let (regime, bound) = if rt <= a * rz {
        (BoundRegime::NearOrigin, rt.powi(q as i32) / (PI * (1.0 - a) * rz.powi(q as i32 + 1)))
    } else if a * rt >= rz {
        (BoundRegime::FarOut, rt.powi(q as i32 - 1) / (PI * (1.0 - a) * rz.powi(q as i32)))
    } else {
        return Err(KernelError::Regime);
    };
    Ok(BoundReport { regime, value, bound, pass: value <= bound * (1.0 + BOUND_SLACK) })
}

/// Compare `|Omega^[q](z, [t1, t2])|` with the interval bound of the applicable regime.
///
/// Near the origin (`max |t_i| <= a|z|`) the bound is
/// `(t2 - t1) 2 T^q / (pi (1-a) |z|^{q+1})`; far out (`min |t| >= |z|/a`,
/// `q > 0`) it is `(t2 - t1) T^{q-1} / (pi (1-a) |z|^q)`.
pub fn interval_bounds_check(q: u32, z: Complex64, t1: f64, t2: f64, a: f64) -> Result<BoundReport, KernelError> {
    let value = harmonic_charge_interval(q, z, t1, t2)?.abs();
    let rz = z.norm();
    let big_t = t1.abs().max(t2.abs());
    let min_t = if t1 <= 0.0 && t2 >= 0.0 { 0.0 } else { t1.abs().min(t2.abs()) };
    let len = t2 - t1;
    let (regime, bound) = if big_t <= a * rz {
        (BoundRegime::NearOrigin, len * 2.0 * big_t.powi(q as i32) / (PI * (1.0 - a) * rz.powi(q as i32 + 1)))
    } else if q > 0 && min_t >= rz / a {
        (BoundRegime::FarOut, len * big_t.powi(q as i32 - 1) / (PI * (1.0 - a) * rz.powi(q as i32)))
    } else {
        return Err(KernelError::Regime);
    };
    Ok(BoundReport { regime, value, bound, pass: value <= bound * (1.0 + BOUND_SLACK) })
}

/// Lower and upper sandwich bounds on `Omega^[q](z, [t1, t2])`.
///
/// Returns `(lower, upper)` with
/// `lower = -(1/pi)(t2 - t1) sum_k T^{k-1} |Im z^-k|` and
/// `upper = omega + (1/pi)(t2 - t1) sum_k T^{k-1} |Im z^-k|`.
pub fn charge_sandwich(q: u32, z: Complex64, t1: f64, t2: f64) -> Result<(f64, f64), KernelError> {
    let omega = harmonic_measure_interval(z, t1, t2)?;
    if q >= 1 && z == Complex64::new(0.0, 0.0) {
        return Err(KernelError::Origin);
    }
    let big_t = t1.abs().max(t2.abs());
    let mut s = 0.0;
    if q >= 1 {
        let w = z.inv();
        let mut wk = Complex64::new(1.0, 0.0);
        for k in 1..=q {
            wk *= w;
            s += big_t.powi(k as i32 - 1) * wk.im.abs();
        }
    }
    let pad = (t2 - t1) * s / PI;
    Ok((-pad, omega + pad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn harmonic_measure_examples() {
        assert_abs_diff_eq!(harmonic_measure_interval(c(0.0, 1.0), -1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(harmonic_measure_interval(c(0.0, 1.0), 0.0, 1.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(harmonic_measure_interval(c(0.5, 0.0), 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn poisson_examples() {
        assert_abs_diff_eq!(poisson_kernel(0, 0.0, c(0.0, 1.0)).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert_eq!(poisson_kernel(1, 0.0, c(0.3, 2.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(poisson_kernel(1, 1.0, c(0.0, 1.0)).unwrap(), -0.5 / PI, epsilon = 1e-15);
        assert!(poisson_kernel(1, 1.0, c(0.0, 0.0)).is_err());
        assert!(poisson_kernel(0, 2.0, c(2.0, 0.0)).is_err());
    }

    #[test]
    fn charge_examples() {
        let i = c(0.0, 1.0);
        assert_abs_diff_eq!(harmonic_charge_interval(0, i, 0.0, 1.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(harmonic_charge_interval(1, i, 0.0, 1.0).unwrap(), 0.25 - 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(harmonic_charge_interval(2, i, -1.0, 1.0).unwrap(), 0.5 - 2.0 / PI, epsilon = 1e-15);
        assert!(harmonic_charge_interval(1, c(0.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn slit_examples() {
        assert_abs_diff_eq!(harmonic_charge_slitplane(0, c(-1.0, 0.0), 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(harmonic_charge_slitplane(3, c(-2.0, 1.0), 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(harmonic_charge_slitplane(1, c(-1.0, 0.0), 1.0).unwrap(), 0.5 - 2.0 / PI, epsilon = 1e-15);
        assert!(harmonic_charge_slitplane(0, c(2.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn quarter_plane_example() {
        let angle = AngleSpec::new(0.0, PI / 2.0).unwrap();
        let z = Complex64::from_polar(1.0, PI / 4.0);
        let v = harmonic_charge_angle(0, z, Side::Alpha, 0.0, 1.0, &angle).unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard_kernel(3, c(2.0, 1.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(hadamard_kernel(0, c(2.0, 0.0), c(1.0, 0.0)).unwrap(), 0.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(hadamard_kernel(1, c(2.0, 0.0), c(1.0, 0.0)).unwrap(), 0.5f64.ln() + 0.5, epsilon = 1e-15);
        assert!(hadamard_kernel(1, c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn hadamard_series_branch_matches_direct() {
        let zeta = c(3.0, 2.0);
        let z = c(1.2, -0.4);
        for q in 0..4 {
            let u = z / zeta;
            let mut direct = (Complex64::new(1.0, 0.0) - u).norm().ln();
            for k in 1..=q {
                direct += u.powu(k).re / k as f64;
            }
            assert_abs_diff_eq!(hadamard_kernel(q, zeta, z).unwrap(), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn bound_examples() {
        let r = kernel_bounds_check(1, 0.1, c(0.0, 1.0), 0.5).unwrap();
        assert_eq!(r.regime, BoundRegime::NearOrigin);
        assert_abs_diff_eq!(r.bound, 0.1 / (PI * 0.5), epsilon = 1e-15);
        assert!(r.pass);
        let r = kernel_bounds_check(0, 10.0, c(0.0, 1.0), 0.5).unwrap();
        assert_eq!(r.regime, BoundRegime::FarOut);
        assert!(r.pass);
        assert!(kernel_bounds_check(0, 1.0, c(0.0, 1.0), 0.5).is_err());
    }
}
