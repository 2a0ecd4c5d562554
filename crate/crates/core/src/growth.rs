//! Condition functionals on charges and log-modulus oracles: Blaschke and
//! Lindelof sums, the Akhiezer ray integral and the Carleman pair, the
//! boundedness detector and the integral estimates for `|v|`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::kernels::{hadamard_unchecked, AngleSpec};
use crate::measures::{check_grid, ComplexAtom, DiscreteCharge, MeasureError};
use crate::quadrature::{integrate, integrate_with_breaks, QuadError, QuadResult, QuadSpec};
use crate::stats::{ls_slope, median};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrowthError {
    #[error("(beta - alpha) p / pi = {0} is not a positive integer")]
    ExponentMismatch(f64),
    #[error("radii must satisfy 0 < r0 < r, got r0 = {r0}, r = {r}")]
    BadRadii { r0: f64, r: f64 },
    #[error("order p must be positive and finite, got {0}")]
    BadOrder(f64),
    #[error("b must lie in (0, 1/4], got {0}")]
    BadB(f64),
    #[error("g is not {expected} at sample {index}")]
    NotMonotone { expected: &'static str, index: usize },
    #[error("grid and trace lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// How an atom enters a [`LogModulusOracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomForm {
    /// `log|z - a|`.
    Plain,
    /// The Weierstrass-Hadamard kernel of the given genus, `log|E(z/a, q)|`.
    Canonical(u32),
}

/// `v(z) = sum_k m_k log|z - a_k| + Re sum_j c_j z^j`, optionally with the
/// atoms entering as Weierstrass primary factors instead.
#[derive(Debug, Clone, PartialEq)]
pub struct LogModulusOracle {
    atoms: Vec<ComplexAtom>,
    form: AtomForm,
    poly: Vec<Complex64>,
}

/// Angular samples used for `M_v(r)` before local refinement.
const CIRCLE_POINTS: usize = 720;

impl LogModulusOracle {
    /// Plain logarithmic potential plus the harmonic polynomial `Re sum c_j z^j`.
    pub fn new(charge: &DiscreteCharge, poly: Vec<Complex64>) -> Self {
        Self { atoms: charge.atoms().to_vec(), form: AtomForm::Plain, poly }
    }

    /// `log|P(z)|` for the canonical product `P` of genus `q` over the atoms.
    /// Needs every atom away from the origin.
    pub fn canonical(charge: &DiscreteCharge, q: u32) -> Result<Self, MeasureError> {
        if charge.has_origin_atom() {
            return Err(MeasureError::BadRadius(0.0));
        }
        Ok(Self { atoms: charge.atoms().to_vec(), form: AtomForm::Canonical(q), poly: Vec::new() })
    }

    /// The oracle `v = 0`.
    pub fn zero() -> Self {
        Self { atoms: Vec::new(), form: AtomForm::Plain, poly: Vec::new() }
    }

    pub fn atoms(&self) -> &[ComplexAtom] {
        &self.atoms
    }

    pub fn riesz_charge(&self) -> DiscreteCharge {
        DiscreteCharge::new(self.atoms.clone(), None).expect("oracle atoms were validated on entry")
    }

    /// `v(z)`; `-inf` at a positive atom.
    pub fn eval(&self, z: Complex64) -> f64 {
        let mut v = 0.0;
        match self.form {
            AtomForm::Plain => {
                for a in &self.atoms {
                    v += a.mass * (z - a.position).norm().ln();
                }
            }
            AtomForm::Canonical(q) => {
                for a in &self.atoms {
                    v += a.mass * hadamard_unchecked(q, a.position, z);
                }
            }
        }
        if !self.poly.is_empty() {
            let mut zk = Complex64::new(1.0, 0.0);
            let mut h = 0.0;
            for c in &self.poly {
                h += (c * zk).re;
                zk *= z;
            }
            v += h;
        }
        v
    }

    /// `v(t e^{i theta})`, moving `t` by `1e-6 t` when the sample is within
    /// `1e-9` of an atom.
    pub fn eval_on_ray(&self, t: f64, theta: f64) -> f64 {
        let dir = Complex64::from_polar(1.0, theta);
        let z = dir * t;
        if self.atoms.iter().any(|a| (z - a.position).norm() < 1e-9) {
            return self.eval(dir * (t * (1.0 + 1e-6)));
        }
        self.eval(z)
    }

    /// `M_v(r) = sup_{|z| = r} v(z)` from an angular grid refined by golden sections.
    pub fn max_on_circle(&self, r: f64) -> f64 {
        let h = 2.0 * PI / CIRCLE_POINTS as f64;
        let at = |th: f64| self.eval(Complex64::from_polar(r, th));
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for i in 0..CIRCLE_POINTS {
            let th = i as f64 * h;
            let v = at(th);
            if v > best {
                best = v;
                arg = th;
            }
        }
        let (mut a, mut b) = (arg - h, arg + h);
        let g = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (at(c), at(d));
        for _ in 0..40 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = at(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = at(d);
            }
        }
        best.max(fc).max(fd)
    }
}

/// Verdict of the boundedness heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Thresholds of [`boundedness_detector_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Slope tolerance in units of `log r`.
    pub slope_tol: f64,
    pub ratio_cap: f64,
    /// Traces whose largest magnitude is below this are bounded outright.
    pub abs_floor: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { slope_tol: 0.05, ratio_cap: 10.0, abs_floor: 1e-9 }
    }
}

/// A functional sampled on a log grid with its boundedness verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionTrace {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
    /// Least-squares slope of the values against `log r` on the tail half.
    pub slope: f64,
    /// `max |value| / median |value|` on the tail half.
    pub ratio: f64,
}

/// [`boundedness_detector_with`] at the default thresholds.
pub fn boundedness_detector(grid: &[f64], values: &[f64]) -> Result<ConditionTrace, GrowthError> {
    boundedness_detector_with(grid, values, &DetectorConfig::default())
}

/// Finite proxy for `O(1)` as `r -> inf`.
///
/// On the top half of the grid: bounded when `|slope| <= slope_tol` and
/// `max/median <= ratio_cap`, unbounded when `|slope| >= 3 slope_tol`,
/// inconclusive otherwise. Needs 16 points over two decades.
pub fn boundedness_detector_with(
    grid: &[f64],
    values: &[f64],
    cfg: &DetectorConfig,
) -> Result<ConditionTrace, GrowthError> {
    if grid.len() != values.len() {
        return Err(GrowthError::LengthMismatch(grid.len(), values.len()));
    }
    check_grid(grid, 16, 2.0)?;
    let n = grid.len();
    let logr: Vec<f64> = grid[n / 2..].iter().map(|r| r.ln()).collect();
    let tail = &values[n / 2..];
    let slope = ls_slope(&logr, tail);
    let mags: Vec<f64> = tail.iter().map(|v| v.abs()).collect();
    let max = mags.iter().fold(0.0, |m: f64, v| m.max(*v));
    let ratio = if max <= cfg.abs_floor { 1.0 } else { max / median(&mags).max(cfg.abs_floor) };
    let verdict = if max <= cfg.abs_floor || (slope.abs() <= cfg.slope_tol && ratio <= cfg.ratio_cap) {
        Verdict::Bounded
    } else if slope.abs() >= 3.0 * cfg.slope_tol {
        Verdict::Unbounded
    } else {
        Verdict::Inconclusive
    };
    Ok(ConditionTrace { grid: grid.to_vec(), values: values.to_vec(), verdict, slope, ratio })
}

/// `(beta - alpha) p / pi` as an integer, if it is one.
fn genus_of(angle: &AngleSpec, p: f64) -> Result<u32, GrowthError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(GrowthError::BadOrder(p));
    }
    let q = angle.aperture() * p / PI;
    let rounded = q.round();
    if rounded < 1.0 || (q - rounded).abs() > 1e-9 * q.max(1.0) {
        return Err(GrowthError::ExponentMismatch(q));
    }
    Ok(rounded as u32)
}

fn check_radii(r0: f64, r: f64) -> Result<(), GrowthError> {
    if !(r0 > 0.0 && r > r0 && r.is_finite()) {
        return Err(GrowthError::BadRadii { r0, r });
    }
    Ok(())
}

/// `|sum m Im((z e^{-i alpha})^{-p})|` over atoms with `r0 <= |z| < r`
/// strictly inside the angle.
pub fn blaschke_functional(
    charge: &DiscreteCharge,
    angle: &AngleSpec,
    p: f64,
    r0: f64,
    r: f64,
) -> Result<f64, GrowthError> {
    genus_of(angle, p)?;
    check_radii(r0, r)?;
    let mut s = 0.0;
    for a in charge.atoms() {
        let rad = a.position.norm();
        if rad >= r0 && rad < r && angle.contains(a.position) {
            let phi = angle.relative_arg(a.position);
            s -= a.mass * rad.powf(-p) * (p * phi).sin();
        }
    }
    Ok(s.abs())
}

/// `|sum m z^{-p}|` over atoms with `r0 < |z| <= r`.
pub fn lindelof_functional(charge: &DiscreteCharge, p: u32, r0: f64, r: f64) -> Result<f64, GrowthError> {
    check_radii(r0, r)?;
    let mut s = Complex64::new(0.0, 0.0);
    for a in charge.atoms() {
        let rad = a.position.norm();
        if rad > r0 && rad <= r {
            s += a.position.powi(-(p as i32)) * a.mass;
        }
    }
    Ok(s.norm())
}

/// Boundary-ray numerator `v(t e^{i alpha}) + (-1)^{q-1} v(t e^{i beta})`.
struct RayPair<'a> {
    v: &'a LogModulusOracle,
    alpha: f64,
    beta: f64,
    sign: f64,
    /// Both rays are the same ray.
    coincide: bool,
    breaks: Vec<f64>,
}

impl<'a> RayPair<'a> {
    fn new(v: &'a LogModulusOracle, angle: &AngleSpec, q: u32) -> Self {
        let coincide = angle.aperture() >= 2.0 * PI - 1e-12;
        let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
        let mut breaks: Vec<f64> = v
            .atoms()
            .iter()
            .filter(|a| {
                crate::measures::on_ray(a.position, angle.alpha()) || crate::measures::on_ray(a.position, angle.beta())
            })
            .map(|a| a.position.norm())
            .collect();
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        Self { v, alpha: angle.alpha(), beta: angle.beta(), sign, coincide, breaks }
    }

    /// The numerator vanishes identically.
    fn is_zero(&self) -> bool {
        self.coincide && self.sign < 0.0
    }

    fn eval(&self, t: f64) -> f64 {
        let a = self.v.eval_on_ray(t, self.alpha);
        if self.coincide {
            return a + self.sign * a;
        }
        a + self.sign * self.v.eval_on_ray(t, self.beta)
    }

    fn breaks_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect()
    }
}

/// `J(r0, r) = int_{r0}^r (v(t e^{i alpha}) + (-1)^{q-1} v(t e^{i beta})) / t^{p+1} dt`
/// with `q = (beta - alpha) p / pi`.
pub fn akhiezer_j(
    v: &LogModulusOracle,
    angle: &AngleSpec,
    p: f64,
    r0: f64,
    r: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, GrowthError> {
    let q = genus_of(angle, p)?;
    check_radii(r0, r)?;
    let pair = RayPair::new(v, angle, q);
    if pair.is_zero() {
        return Ok(QuadResult::ZERO);
    }
    Ok(integrate_with_breaks(|t| pair.eval(t) / t.powf(p + 1.0), r0, r, &pair.breaks_in(r0, r), spec)?)
}

/// `J(r0, r)` at every radius of an increasing grid, accumulated panel by panel.
pub fn akhiezer_j_trace(
    v: &LogModulusOracle,
    angle: &AngleSpec,
    p: f64,
    r0: f64,
    grid: &[f64],
    spec: &QuadSpec,
) -> Result<Vec<f64>, GrowthError> {
    let q = genus_of(angle, p)?;
    let pair = RayPair::new(v, angle, q);
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut prev = r0;
    for &r in grid {
        check_radii(r0, r)?;
        if r < prev {
            return Err(GrowthError::BadRadii { r0: prev, r });
        }
        if !pair.is_zero() && r > prev {
            acc += integrate_with_breaks(|t| pair.eval(t) / t.powf(p + 1.0), prev, r, &pair.breaks_in(prev, r), spec)?
                .value;
        }
        out.push(acc);
        prev = r;
    }
    Ok(out)
}

/// The Carleman pair together with the cross-check of `A` through `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanAB {
    pub a: f64,
    pub b: f64,
    /// `(p^2 / (pi r^{2p})) int_{r0}^r J(r0, t) t^{2p-1} dt`.
    pub a_via_j: f64,
    pub residual: f64,
}

/// `A = (p/2pi) int_{r0}^r (t^-p - t^p / r^{2p}) F(t) dt / t` with the
/// boundary numerator `F`, and `B = (p/(pi r^p)) int_alpha^beta v(r e^{i theta}) sin p(theta - alpha) dtheta`.
pub fn carleman_ab(
    v: &LogModulusOracle,
    angle: &AngleSpec,
    p: f64,
    r0: f64,
    r: f64,
    spec: &QuadSpec,
) -> Result<CarlemanAB, GrowthError> {
    let q = genus_of(angle, p)?;
    check_radii(r0, r)?;
    let pair = RayPair::new(v, angle, q);
    let r2p = r.powf(2.0 * p);
    let breaks = pair.breaks_in(r0, r);

    let a = if pair.is_zero() {
        0.0
    } else {
        p / (2.0 * PI)
            * integrate_with_breaks(|t| (t.powf(-p) - t.powf(p) / r2p) * pair.eval(t) / t, r0, r, &breaks, spec)?.value
    };

    let alpha = angle.alpha();
    let atom_args: Vec<f64> = v
        .atoms()
        .iter()
        .filter(|at| (at.position.norm() - r).abs() < 1e-12 * r)
        .map(|at| alpha + angle.relative_arg(at.position))
        .collect();
    let b = p / (PI * r.powf(p))
        * integrate_with_breaks(
            |th| v.eval(Complex64::from_polar(r, th)) * (p * (th - alpha)).sin(),
            alpha,
            angle.beta(),
            &atom_args,
            spec,
        )?
        .value;

    let a_via_j = if pair.is_zero() {
        0.0
    } else {
        let inner = QuadSpec { abs_tol: spec.abs_tol * 0.1, rel_tol: spec.rel_tol * 0.1, ..*spec };
        let failure = core::cell::Cell::new(None);
        let outer = integrate_with_breaks(
            |t| {
                if t <= r0 {
                    return 0.0;
                }
                match integrate_with_breaks(|s| pair.eval(s) / s.powf(p + 1.0), r0, t, &pair.breaks_in(r0, t), &inner) {
                    Ok(j) => j.value * t.powf(2.0 * p - 1.0),
                    Err(e) => {
                        let first = failure.take();
                        failure.set(first.or(Some(e)));
                        0.0
                    }
                }
            },
            r0,
            r,
            &breaks,
            spec,
        )?;
        if let Some(e) = failure.take() {
            return Err(e.into());
        }
        p * p / (PI * r2p) * outer.value
    };

    Ok(CarlemanAB { a, b, a_via_j, residual: (a - a_via_j).abs() })
}

/// Akhiezer and Blaschke traces of one oracle and their verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct AkhiezerVerdict {
    pub j_trace: ConditionTrace,
    pub blaschke_trace: ConditionTrace,
    pub agree: bool,
}

/// Akhiezer class of genus `p` on a grid, cross-checked against the
/// Blaschke trace of the oracle's Riesz charge.
pub fn akhiezer_class_verdict(
    v: &LogModulusOracle,
    angle: &AngleSpec,
    p: f64,
    r0: f64,
    grid: &[f64],
    spec: &QuadSpec,
) -> Result<AkhiezerVerdict, GrowthError> {
    let j = akhiezer_j_trace(v, angle, p, r0, grid, spec)?;
    let j_trace = boundedness_detector(grid, &j)?;
    let charge = v.riesz_charge();
    let b: Vec<f64> = grid.iter().map(|&r| blaschke_functional(&charge, angle, p, r0, r)).collect::<Result<_, _>>()?;
    let blaschke_trace = boundedness_detector(grid, &b)?;
    let agree = j_trace.verdict == blaschke_trace.verdict;
    Ok(AkhiezerVerdict { j_trace, blaschke_trace, agree })
}

/// `int_{r0}^{R} |v(t)| g(t) dt` along the positive axis at every `R` of an increasing grid.
pub fn abs_weighted_integral_trace<G: Fn(f64) -> f64>(
    v: &LogModulusOracle,
    g: G,
    r0: f64,
    grid: &[f64],
    spec: &QuadSpec,
) -> Result<Vec<f64>, GrowthError> {
    let mut breaks: Vec<f64> =
        v.atoms().iter().filter(|a| crate::measures::on_ray(a.position, 0.0)).map(|a| a.position.norm()).collect();
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut prev = r0;
    for &r in grid {
        check_radii(r0, r)?;
        if r < prev {
            return Err(GrowthError::BadRadii { r0: prev, r });
        }
        if r > prev {
            let inner: Vec<f64> = breaks.iter().copied().filter(|b| *b > prev && *b < r).collect();
            acc += integrate_with_breaks(|t| v.eval_on_ray(t, 0.0).abs() * g(t), prev, r, &inner, spec)?.value;
        }
        out.push(acc);
        prev = r;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    /// Decreasing and positive.
    Decreasing,
}

/// Ratio trace of the integral estimate and its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratio: Vec<f64>,
    /// `sup ratio / median ratio`.
    pub spread: f64,
    pub bounded: bool,
}

/// Samples of `g` used for the monotonicity check.
const G_SAMPLES: usize = 64;

/// `int_{r0}^R |v| g` against the bound with unit constant:
/// `M_v^+((1+2b)R) R g((1+4b)R)` for increasing `g`, and
/// `M_v^+((1+2b)R) int_{(1-b) r0}^R g` for decreasing positive `g` (`R >= 2 r0`).
pub fn integral_estimate_check<G: Fn(f64) -> f64>(
    v: &LogModulusOracle,
    g: G,
    monotone: Monotonicity,
    r0: f64,
    b: f64,
    grid: &[f64],
    ratio_cap: f64,
    spec: &QuadSpec,
) -> Result<EstimateReport, GrowthError> {
    if !(b > 0.0 && b <= 0.25) {
        return Err(GrowthError::BadB(b));
    }
    let top = grid.last().copied().unwrap_or(r0);
    check_radii(r0, top)?;
    let lo = (1.0 - b) * r0;
    let hi = (1.0 + 4.0 * b) * top;
    let mut prev = g(lo);
    for i in 1..=G_SAMPLES {
        let t = lo * (hi / lo).powf(i as f64 / G_SAMPLES as f64);
        let cur = g(t);
        let ok = match monotone {
            Monotonicity::Increasing => cur >= prev,
            Monotonicity::Decreasing => cur <= prev && cur > 0.0,
        };
        if !ok {
            return Err(GrowthError::NotMonotone {
                expected: match monotone {
                    Monotonicity::Increasing => "increasing",
                    Monotonicity::Decreasing => "decreasing and positive",
                },
                index: i,
            });
        }
        prev = cur;
    }

    let lhs = abs_weighted_integral_trace(v, &g, r0, grid, spec)?;
    let mut rhs = Vec::with_capacity(grid.len());
    for &r in grid {
        let m = v.max_on_circle((1.0 + 2.0 * b) * r).max(0.0);
        let w = match monotone {
            Monotonicity::Increasing => r * g((1.0 + 4.0 * b) * r),
            Monotonicity::Decreasing => {
                if r < 2.0 * r0 {
                    return Err(GrowthError::BadRadii { r0: 2.0 * r0, r });
                }
                integrate(&g, lo, r, spec)?.value
            }
        };
        rhs.push(m * w);
    }
    let ratio: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| if *l == 0.0 { 0.0 } else { l / r }).collect();
    let sup = ratio.iter().fold(0.0, |m: f64, v| m.max(*v));
    let med = median(&ratio);
    let spread = if sup == 0.0 { 0.0 } else { sup / med };
    Ok(EstimateReport {
        grid: grid.to_vec(),
        lhs,
        rhs,
        ratio,
        spread,
        bounded: spread.is_finite() && spread <= ratio_cap,
    })
}
