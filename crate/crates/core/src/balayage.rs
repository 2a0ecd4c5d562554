//! Genus-q balayage out of the upper half-plane, angles and the complementary
//! angles of a ray system, with the structural identities and bounds that
//! the swept charges satisfy.
//!
//! Swept densities are never discretized: a [`SweptCharge`] keeps the source
//! atoms in reduced coordinates and evaluates kernel superpositions on demand.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::growth::{blaschke_functional, boundedness_detector, GrowthError, Verdict};
use crate::kernels::{AngleSpec, KernelError, Side};
use crate::measures::{
    check_grid, estimate_order_type, ComplexAtom, DiscreteCharge, GrowthVerdict, MeasureError, RayRecord, RaySource,
    RaySystem, SweptCharge,
};
use crate::quadrature::{integrate_with_breaks, QuadError, QuadSpec};
use crate::stats::ls_slope;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BalayageError {
    #[error("genus q >= 1 cannot sweep a charge with an atom at the origin")]
    OriginAtom,
    #[error("genus q >= 1 angle sweeps need a charge with an inner gap")]
    MissingInnerGap,
    #[error("order p must be positive and finite, got {0}")]
    BadOrder(f64),
    #[error("split radius r0 must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("support condition fails: atom {index} is not in the closed upper half-plane outside D(T/a)")]
    SupportCondition { index: usize },
    #[error("parameter a must lie in (0, 1), got {0}")]
    BadA(f64),
    #[error("interval [{0}, {1}] must be nonempty")]
    BadInterval(f64, f64),
    #[error("complementary angle {index}: {source}")]
    InAngle {
        index: usize,
        #[source]
        source: Box<BalayageError>,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

fn push_retained(ray: &mut RayRecord, t: f64, mass: f64) {
    let at = ray.retained.partition_point(|(s, _)| *s <= t);
    ray.retained.insert(at, (t, mass));
}

/// Genus-q balayage out of the upper half-plane.
///
/// The result has two rays: ray 0 is `[0, +inf)` and ray 1 is `(-inf, 0]`
/// parametrized by `t = -x`. Real atoms stay on the ray that carries them
/// (the origin on ray 0) and lower half-plane atoms are kept off the rays.
pub fn sweep_halfplane(charge: &DiscreteCharge, q: u32) -> Result<SweptCharge, BalayageError> {
    if q >= 1 && charge.has_origin_atom() {
        return Err(BalayageError::OriginAtom);
    }
    let mut rays = alloc::vec![RayRecord::new(0.0), RayRecord::new(PI)];
    let mut off_ray = Vec::new();
    for a in charge.atoms() {
        let z = a.position;
        if z.im > 0.0 {
            for (ray, side) in rays.iter_mut().zip([Side::Alpha, Side::Beta]) {
                ray.sources.push(RaySource { reduced: z, mass: a.mass, genus: q, kappa: 1.0, side });
            }
        } else if z.im == 0.0 {
            if z.re >= 0.0 {
                push_retained(&mut rays[0], z.re, a.mass);
            } else {
                push_retained(&mut rays[1], -z.re, a.mass);
            }
        } else {
            off_ray.push(*a);
        }
    }
    Ok(SweptCharge { rays, genus_used: alloc::vec![q], off_ray })
}

/// Genus-q balayage out of the open angle.
///
/// Atoms strictly inside are swept onto the two sides; atoms on a side stay
/// there and atoms outside the closed angle are kept off the rays. For a
/// full turn both sides coincide and the result has a single ray.
pub fn sweep_angle(charge: &DiscreteCharge, angle: &AngleSpec, q: u32) -> Result<SweptCharge, BalayageError> {
    if q >= 1 {
        if charge.has_origin_atom() {
            return Err(BalayageError::OriginAtom);
        }
        if charge.inner_gap().is_none() {
            return Err(BalayageError::MissingInnerGap);
        }
    }
    let full = angle.aperture() >= 2.0 * PI - 1e-12;
    let mut rays = alloc::vec![RayRecord::new(angle.alpha())];
    if !full {
        rays.push(RayRecord::new(angle.beta()));
    }
    let beta_ray = if full { 0 } else { 1 };
    let kappa = angle.kappa();
    let mut off_ray = Vec::new();
    for a in charge.atoms() {
        let z = a.position;
        if crate::measures::on_ray(z, angle.alpha()) {
            push_retained(&mut rays[0], z.norm(), a.mass);
        } else if crate::measures::on_ray(z, angle.beta()) {
            push_retained(&mut rays[beta_ray], z.norm(), a.mass);
        } else if angle.contains(z) {
            let reduced = angle.reduce_unchecked(z);
            for (j, side) in [(0, Side::Alpha), (beta_ray, Side::Beta)] {
                rays[j].sources.push(RaySource { reduced, mass: a.mass, genus: q, kappa, side });
            }
        } else {
            off_ray.push(*a);
        }
    }
    Ok(SweptCharge { rays, genus_used: alloc::vec![q], off_ray })
}

/// How the genus of the far part is chosen in [`sweep_ray_system`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenusChoice {
    /// `floor(aperture * p / pi)`, dropped to 0 when the genus-1 Blaschke trace is bounded.
    Auto,
    /// The same genus in every complementary angle.
    Fixed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMethod {
    ClassicalGenus0,
    GenusQ,
}

/// Outcome of the per-angle Blaschke pre-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreCheck {
    NotNeeded,
    /// Fewer than two decades of atom radii in the angle; the genus is kept.
    InsufficientGrid,
    Ran(Verdict),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnglePlan {
    pub alpha: f64,
    pub beta: f64,
    pub genus: u32,
    pub method: SweepMethod,
    pub pre_check: PreCheck,
}

/// Record of the genus chosen in every complementary angle.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub angles: Vec<AnglePlan>,
    pub r0: f64,
    pub order: f64,
}

/// Number of log-spaced radii in the Blaschke pre-check trace.
const PRE_CHECK_POINTS: usize = 32;

fn pre_check(atoms: &[ComplexAtom], angle: &AngleSpec, r0: f64) -> Result<PreCheck, BalayageError> {
    let lo = atoms.iter().map(|a| a.position.norm()).fold(f64::INFINITY, f64::min).max(r0);
    let hi = atoms.iter().map(|a| a.position.norm()).fold(0.0, f64::max);
    if atoms.is_empty() || !(hi / lo >= 100.0) {
        return Ok(PreCheck::InsufficientGrid);
    }
    let charge = DiscreteCharge::new(atoms.to_vec(), None)?;
    let s = PI / angle.aperture();
    let grid: Vec<f64> = (0..PRE_CHECK_POINTS)
        .map(|i| lo * (hi / lo).powf(i as f64 / (PRE_CHECK_POINTS - 1) as f64) * (1.0 + 1e-9))
        .collect();
    let mut trace = Vec::with_capacity(grid.len());
    for &r in &grid {
        trace.push(blaschke_functional(&charge, angle, s, r0 * (1.0 - 1e-12), r)?);
    }
    Ok(PreCheck::Ran(boundedness_detector(&grid, &trace)?.verdict))
}

/// Balayage of a charge out of every complementary angle of a ray system.
///
/// The part in the open disk `D(r0)` is swept with genus 0. The rest is
/// swept with the genus of `choice`; under [`GenusChoice::Auto`] an angle of
/// aperture `A` gets `floor(A p / pi)`, or 0 when a genus-1 Blaschke trace
/// over its atoms is bounded. Atoms on a ray are retained there, the origin
/// on ray 0.
pub fn sweep_ray_system(
    charge: &DiscreteCharge,
    rays: &RaySystem,
    p: f64,
    r0: f64,
    choice: GenusChoice,
) -> Result<(SweptCharge, SweepPlan), BalayageError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(BalayageError::BadOrder(p));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(BalayageError::BadRadius(r0));
    }
    let k = rays.len();
    let angles: Vec<AngleSpec> = (0..k)
        .map(|j| {
            let (a, b) = rays.complementary(j);
            AngleSpec::new(a, b)
        })
        .collect::<Result<_, _>>()?;
    let mut records: Vec<RayRecord> = rays.angles().iter().map(|&th| RayRecord::new(th)).collect();
    let mut near: Vec<Vec<ComplexAtom>> = alloc::vec![Vec::new(); k];
    let mut far: Vec<Vec<ComplexAtom>> = alloc::vec![Vec::new(); k];
    let mut off_ray = Vec::new();

    for a in charge.atoms() {
        let z = a.position;
        if z.norm() == 0.0 {
            push_retained(&mut records[0], 0.0, a.mass);
        } else if let Some(j) = rays.ray_of(z) {
            push_retained(&mut records[j], z.norm(), a.mass);
        } else if let Some(j) = angles.iter().position(|ang| ang.contains(z)) {
            if z.norm() < r0 {
                near[j].push(*a);
            } else {
                far[j].push(*a);
            }
        } else {
            // Within ANGLE_TOL of a ray boundary but not on it; nothing sweeps it.
            off_ray.push(*a);
        }
    }

    let mut plans = Vec::with_capacity(k);
    for (j, angle) in angles.iter().enumerate() {
        let nominal = match choice {
            GenusChoice::Fixed(q) => q,
            GenusChoice::Auto => (angle.aperture() * p / PI + 1e-9).floor() as u32,
        };
        let pre = if matches!(choice, GenusChoice::Auto) && nominal >= 1 {
            pre_check(&far[j], angle, r0).map_err(|e| BalayageError::InAngle { index: j, source: Box::new(e) })?
        } else {
            PreCheck::NotNeeded
        };
        let genus = if pre == PreCheck::Ran(Verdict::Bounded) { 0 } else { nominal };
        plans.push(AnglePlan {
            alpha: angle.alpha(),
            beta: angle.beta(),
            genus,
            method: if genus == 0 { SweepMethod::ClassicalGenus0 } else { SweepMethod::GenusQ },
            pre_check: pre,
        });

        let kappa = angle.kappa();
        let beta_ray = (j + 1) % k;
        for (atoms, g) in [(&near[j], 0), (&far[j], genus)] {
            for a in atoms.iter() {
                let reduced = angle.reduce_unchecked(a.position);
                for (ray, side) in [(j, Side::Alpha), (beta_ray, Side::Beta)] {
                    records[ray].sources.push(RaySource { reduced, mass: a.mass, genus: g, kappa, side });
                }
            }
        }
    }

    let genus_used = plans.iter().map(|pl| pl.genus).collect();
    Ok((SweptCharge { rays: records, genus_used, off_ray }, SweepPlan { angles: plans, r0, order: p }))
}

/// Distribution function on the real line of a half-plane sweep:
/// `nu([0, x])` for `x >= 0` and `-nu([x, 0))` for `x < 0`.
pub fn real_line_distribution(swept: &SweptCharge, x: f64) -> f64 {
    if x >= 0.0 {
        swept.rays[0].distribution(x)
    } else {
        -swept.rays[1].distribution(-x)
    }
}

/// Total variation of a half-plane sweep on the closed interval `[x1, x2]`.
fn real_line_variation(swept: &SweptCharge, x1: f64, x2: f64, spec: &QuadSpec) -> Result<f64, BalayageError> {
    let mut v = 0.0;
    for (j, sign) in [(0usize, 1.0), (1, -1.0)] {
        let ray = &swept.rays[j];
        // The ray parameter range covered by [x1, x2].
        let (lo, hi) = if sign > 0.0 { (x1.max(0.0), x2) } else { ((-x2).max(0.0), -x1) };
        if hi < lo {
            continue;
        }
        v += ray.retained.iter().filter(|(t, _)| *t >= lo && *t <= hi).map(|(_, m)| m.abs()).sum::<f64>();
        if hi > lo && !ray.sources.is_empty() {
            let breaks: Vec<f64> = ray.sources.iter().map(|s| sign * s.reduced.re).collect();
            v += integrate_with_breaks(|t| ray.density(t).abs(), lo, hi, &breaks, spec)?.value;
        }
    }
    Ok(v)
}

/// Residual of the genus-shift identity on a grid of real `t`.
///
/// Compares `(nu^{bal[q]})^R(t)`, with the genus-q density integrated
/// numerically, against the closed-form genus-0 distribution plus
/// `(1/pi) sum_{k=1..q} (int_{C^up} Im z^-k dnu) t^k / k`.
pub fn genus_shift_identity_check(
    charge: &DiscreteCharge,
    q: u32,
    grid: &[f64],
    spec: &QuadSpec,
) -> Result<f64, BalayageError> {
    if q == 0 {
        return Ok(0.0);
    }
    let swept_q = sweep_halfplane(charge, q)?;
    let swept_0 = sweep_halfplane(charge, 0)?;
    let mut moments = alloc::vec![0.0; q as usize];
    for a in charge.atoms().iter().filter(|a| a.position.im > 0.0) {
        let inv = a.position.inv();
        let mut zk = Complex64::new(1.0, 0.0);
        for m in moments.iter_mut() {
            zk *= inv;
            *m += a.mass * zk.im;
        }
    }
    let mut residual: f64 = 0.0;
    for &t in grid {
        let lhs = if t >= 0.0 {
            swept_q.distribution_by_quadrature(0, t, spec)?.value
        } else {
            -swept_q.distribution_by_quadrature(1, -t, spec)?.value
        };
        let mut shift = 0.0;
        let mut tk = 1.0;
        for (k, m) in moments.iter().enumerate() {
            tk *= t;
            shift += m * tk / (k + 1) as f64;
        }
        let rhs = real_line_distribution(&swept_0, t) + shift / PI;
        residual = residual.max((lhs - rhs).abs());
    }
    Ok(residual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Total variation of the genus-q sweep on `[t1, t2]` against
/// `2(q+1)(t2-t1) T^q / (pi(1-a)) int_{T/a}^inf |nu|^rad(t) / t^{q+2} dt`,
/// `T = max(|t1|, |t2|)`, for a charge in the closed upper half-plane
/// outside the open disk `D(T/a)`.
pub fn tail_bound_check(
    charge: &DiscreteCharge,
    q: u32,
    t1: f64,
    t2: f64,
    a: f64,
    spec: &QuadSpec,
) -> Result<TailBoundReport, BalayageError> {
    if !(t1 < t2) {
        return Err(BalayageError::BadInterval(t1, t2));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(BalayageError::BadA(a));
    }
    let big_t = t1.abs().max(t2.abs());
    let rho = big_t / a;
    for (index, at) in charge.atoms().iter().enumerate() {
        if at.position.im < 0.0 || at.position.norm() < rho {
            return Err(BalayageError::SupportCondition { index });
        }
    }
    let swept = sweep_halfplane(charge, q)?;
    let lhs = real_line_variation(&swept, t1, t2, spec)?;
    let qf = (q + 1) as f64;
    let tail: f64 = charge.atoms().iter().map(|at| at.mass.abs() * at.position.norm().max(rho).powf(-qf) / qf).sum();
    let rhs = 2.0 * qf * (t2 - t1) * big_t.powi(q as i32) / (PI * (1.0 - a)) * tail;
    Ok(TailBoundReport { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) + 1e-14 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub slope: f64,
    pub required: f64,
    pub pass: bool,
}

/// Number of log-spaced radii in the near-origin fit.
const DECAY_POINTS: usize = 16;

/// Small-t slope of `|nu^{bal[q]}|^rad(t)` on `[r0/100, r0/4]`; passes when it
/// is at least `q + 1 - 0.1`.
pub fn near_origin_decay_check(charge: &DiscreteCharge, q: u32, spec: &QuadSpec) -> Result<DecayReport, BalayageError> {
    let r0 = charge.inner_gap().ok_or(BalayageError::MissingInnerGap)?;
    let swept = sweep_halfplane(charge, q)?;
    let (lo, hi) = (r0 / 100.0, r0 / 4.0);
    let mut xs = Vec::with_capacity(DECAY_POINTS);
    let mut ys = Vec::with_capacity(DECAY_POINTS);
    for i in 0..DECAY_POINTS {
        let t = lo * (hi / lo).powf(i as f64 / (DECAY_POINTS - 1) as f64);
        let v = real_line_variation(&swept, -t, t, spec)?;
        if v > 0.0 {
            xs.push(t.ln());
            ys.push(v.ln());
        }
    }
    let required = (q + 1) as f64 - 0.1;
    // A sweep that vanishes identically near 0 decays faster than any power.
    let slope = if xs.len() < 2 { f64::INFINITY } else { ls_slope(&xs, &ys) };
    Ok(DecayReport { slope, required, pass: slope >= required })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweptGrowthReport {
    pub verdict: GrowthVerdict,
    /// Blaschke trace verdict of the upper half-plane part, for integer `p` only.
    pub blaschke: Option<Verdict>,
}

/// Order and type of the genus-q half-plane sweep on a radial grid.
pub fn growth_verdict_swept(
    charge: &DiscreteCharge,
    p: f64,
    q: u32,
    grid: &[f64],
    spec: &QuadSpec,
) -> Result<SweptGrowthReport, BalayageError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(BalayageError::BadOrder(p));
    }
    check_grid(grid, 8, 2.0)?;
    let swept = sweep_halfplane(charge, q)?;
    let profile = swept.radial_profile(grid, spec)?;
    let verdict = estimate_order_type(&profile, Some(p))?;
    let blaschke = if p.fract() == 0.0 {
        let r0 = charge.inner_gap().map_or(grid[0], |g| g.min(grid[0])) / 2.0;
        let upper = AngleSpec::new(0.0, PI)?;
        let trace: Vec<f64> =
            grid.iter().map(|&r| blaschke_functional(charge, &upper, p, r0, r)).collect::<Result<_, _>>()?;
        boundedness_detector(grid, &trace).ok().map(|t| t.verdict)
    } else {
        None
    };
    Ok(SweptGrowthReport { verdict, blaschke })
}

/// Terms of the local distribution estimate for the half-plane sweep of
/// genus `floor(p)` at `t > 0` and `0 <= r <= t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEstimateTerms {
    /// `|nu^{bal[q]}|([t - r, t + r])`.
    pub lhs: f64,
    /// `r t^{p-1}`.
    pub power: f64,
    /// `|nu|(D(t, r))` over the closed upper half-plane.
    pub local: f64,
    /// `r (int_r^{at} |nu|(D(t, s)) / s^2 ds)^+`.
    pub averaged: f64,
    /// `r t^{q-1} |int_{D(t) \ D(r0)} Im z^-q dnu|`.
    pub blaschke: f64,
}

impl LocalEstimateTerms {
    /// `lhs` over the sum of the right-hand terms with unit constants.
    pub fn ratio(&self) -> f64 {
        let rhs = self.power + self.local + self.averaged + self.blaschke;
        if rhs > 0.0 {
            self.lhs / rhs
        } else if self.lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Both sides of the local distribution estimate for a finite-type charge.
///
/// The constants of the estimate are not explicit, so the terms are reported with
/// unit constants and callers test boundedness of [`LocalEstimateTerms::ratio`].
pub fn local_estimate_terms(
    charge: &DiscreteCharge,
    p: f64,
    t: f64,
    r: f64,
    a: f64,
    spec: &QuadSpec,
) -> Result<LocalEstimateTerms, BalayageError> {
    let r0 = charge.inner_gap().ok_or(BalayageError::MissingInnerGap)?;
    if !(p > 0.0) {
        return Err(BalayageError::BadOrder(p));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(BalayageError::BadA(a));
    }
    if !(t > 0.0 && r >= 0.0 && r <= t) {
        return Err(BalayageError::BadInterval(t - r, t + r));
    }
    let q = p.floor() as u32;
    let swept = sweep_halfplane(charge, q)?;
    let lhs = real_line_variation(&swept, t - r, t + r, spec)?;
    let centre = Complex64::new(t, 0.0);
    let mut local = 0.0;
    let mut avg = 0.0;
    let mut moment = 0.0;
    for at in charge.atoms().iter().filter(|at| at.position.im >= 0.0) {
        let d = (at.position - centre).norm();
        if d < r {
            local += at.mass.abs();
        }
        if d < a * t {
            avg += at.mass.abs() * (1.0 / d.max(r) - 1.0 / (a * t));
        }
        let rad = at.position.norm();
        if q >= 1 && rad >= r0 && rad < t {
            moment += at.mass * at.position.powi(-(q as i32)).im;
        }
    }
    Ok(LocalEstimateTerms {
        lhs,
        power: r * t.powf(p - 1.0),
        local,
        averaged: r * avg.max(0.0),
        blaschke: r * t.powi(q as i32 - 1) * moment.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::poisson_kernel;
    use approx::assert_abs_diff_eq;

    fn delta(re: f64, im: f64) -> DiscreteCharge {
        DiscreteCharge::new(alloc::vec![ComplexAtom::new(re, im, 1.0)], None).unwrap()
    }

    #[test]
    fn lower_atom_is_untouched() {
        let s = sweep_halfplane(&delta(0.0, -1.0), 2).unwrap();
        assert_eq!(s.off_ray, alloc::vec![ComplexAtom::new(0.0, -1.0, 1.0)]);
        assert_eq!(s.density(0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn genus_zero_and_one_densities() {
        let s0 = sweep_halfplane(&delta(0.0, 1.0), 0).unwrap();
        assert_abs_diff_eq!(s0.density(0, 2.0).unwrap(), 1.0 / (5.0 * PI), epsilon = 1e-15);
        let spec = QuadSpec::default();
        assert_abs_diff_eq!(s0.total_mass_by_quadrature(&spec).unwrap(), 1.0, epsilon = 1e-8);
        let s1 = sweep_halfplane(&delta(0.0, 1.0), 1).unwrap();
        assert_abs_diff_eq!(s1.density(1, 2.0).unwrap(), -4.0 / (5.0 * PI), epsilon = 1e-15);
        // N(1) = -(1 - atan 1) / pi
        assert_abs_diff_eq!(s1.distribution(0, 1.0).unwrap(), 0.25 - 1.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn full_turn_sweep_of_minus_one() {
        let angle = AngleSpec::new(0.0, 2.0 * PI).unwrap();
        let s = sweep_angle(&delta(-1.0, 0.0), &angle, 0).unwrap();
        assert_eq!(s.rays.len(), 1);
        assert_abs_diff_eq!(s.distribution(0, 1.0).unwrap(), 0.5, epsilon = 1e-14);
        let t: f64 = 3.0;
        let w = Complex64::new(0.0, 1.0);
        let expect =
            (poisson_kernel(0, t.sqrt(), w).unwrap() + poisson_kernel(0, -t.sqrt(), w).unwrap()) * 0.5 / t.sqrt();
        assert_abs_diff_eq!(s.density(0, t).unwrap(), expect, epsilon = 1e-15);
        let spec = QuadSpec::default();
        assert_abs_diff_eq!(s.total_mass_by_quadrature(&spec).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn plan_arithmetic() {
        let c = delta(-1.0, 0.0);
        let (_, plan) =
            sweep_ray_system(&c, &RaySystem::new(alloc::vec![0.0]).unwrap(), 1.0, 0.5, GenusChoice::Auto).unwrap();
        assert_eq!(plan.angles[0].genus, 2);
        let c = delta(0.0, 1.0);
        let (_, plan) =
            sweep_ray_system(&c, &RaySystem::new(alloc::vec![0.0, PI]).unwrap(), 1.0, 0.5, GenusChoice::Auto).unwrap();
        assert_eq!(plan.angles.iter().map(|a| a.genus).collect::<Vec<_>>(), alloc::vec![1, 1]);
        let quad = RaySystem::new(alloc::vec![0.0, PI / 2.0, PI, 1.5 * PI]).unwrap();
        let (_, plan) = sweep_ray_system(&c, &quad, 1.0, 0.5, GenusChoice::Auto).unwrap();
        assert!(plan.angles.iter().all(|a| a.genus == 0));
    }

    #[test]
    fn genus_shift_examples() {
        let spec = QuadSpec::with_tol(1e-13, 1e-13);
        let grid: Vec<f64> = (0..=20).map(|i| -5.0 + 0.5 * i as f64).collect();
        let c = delta(0.0, 1.0);
        assert_eq!(genus_shift_identity_check(&c, 0, &grid, &spec).unwrap(), 0.0);
        assert!(genus_shift_identity_check(&c, 1, &grid, &spec).unwrap() <= 1e-9);
    }

    #[test]
    fn tail_bound_examples() {
        let spec = QuadSpec::default();
        let r = tail_bound_check(&delta(0.0, 10.0), 1, -1.0, 1.0, 0.5, &spec).unwrap();
        assert!(r.pass, "{r:?}");
        let r = tail_bound_check(&DiscreteCharge::empty(), 1, -1.0, 1.0, 0.5, &spec).unwrap();
        assert_eq!((r.lhs, r.rhs, r.pass), (0.0, 0.0, true));
        assert!(tail_bound_check(&delta(0.0, 1.0), 1, -1.0, 1.0, 0.5, &spec).is_err());
    }

    #[test]
    fn decay_examples() {
        let spec = QuadSpec::default();
        let c = delta(0.0, 1.0).with_inner_gap(Some(1.0)).unwrap();
        let r1 = near_origin_decay_check(&c, 1, &spec).unwrap();
        assert!(r1.pass && (r1.slope - 3.0).abs() < 0.05, "{r1:?}");
        let r0 = near_origin_decay_check(&c, 0, &spec).unwrap();
        assert!(r0.pass && (r0.slope - 1.0).abs() < 0.05, "{r0:?}");
    }
}
