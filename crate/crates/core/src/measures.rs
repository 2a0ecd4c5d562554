//! Atomic charges, ray systems, swept charges and radial counting.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::kernels::{arg_2pi, charge_unchecked, poisson_unchecked, Side};
use crate::quadrature::{integrate, integrate_to_infinity, QuadError, QuadResult, QuadSpec};
use crate::stats::{ls_slope, median};

/// Angular tolerance for deciding that a point sits on a ray.
pub const ANGLE_TOL: f64 = 1e-12;

/// Default slope tolerance of the growth heuristics.
pub const SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("atom {index} has a non-finite position or mass")]
    NonFinite { index: usize },
    #[error("atom {index} has zero mass")]
    ZeroMass { index: usize },
    #[error("atom {index} lies inside the inner gap r0 = {r0}")]
    InnerGap { index: usize, r0: f64 },
    #[error("inner gap must be positive, got {0}")]
    BadInnerGap(f64),
    #[error("ray angles must be strictly increasing within one turn")]
    BadRays,
    #[error("grid needs at least {need_points} points over {need_decades} decades, got {points} over {decades:.3}")]
    InsufficientGrid { points: usize, decades: f64, need_points: usize, need_decades: f64 },
    #[error("radial profile violates its invariants: {0}")]
    BadProfile(&'static str),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("ray index {0} out of range")]
    RayIndex(usize),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// One point mass of a charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAtom {
    pub position: Complex64,
    pub mass: f64,
}

impl ComplexAtom {
    pub fn new(re: f64, im: f64, mass: f64) -> Self {
        Self { position: Complex64::new(re, im), mass }
    }
}

/// Finite signed atomic measure on the plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteCharge {
    atoms: Vec<ComplexAtom>,
    inner_gap: Option<f64>,
}

impl DiscreteCharge {
    pub fn new(atoms: Vec<ComplexAtom>, inner_gap: Option<f64>) -> Result<Self, MeasureError> {
        if let Some(r0) = inner_gap {
            if !(r0 > 0.0 && r0.is_finite()) {
                return Err(MeasureError::BadInnerGap(r0));
            }
        }
        for (index, a) in atoms.iter().enumerate() {
            if !(a.position.re.is_finite() && a.position.im.is_finite() && a.mass.is_finite()) {
                return Err(MeasureError::NonFinite { index });
            }
            if a.mass == 0.0 {
                return Err(MeasureError::ZeroMass { index });
            }
            if let Some(r0) = inner_gap {
                if a.position.norm() < r0 {
                    return Err(MeasureError::InnerGap { index, r0 });
                }
            }
        }
        Ok(Self { atoms, inner_gap })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[ComplexAtom] {
        &self.atoms
    }

    pub fn inner_gap(&self) -> Option<f64> {
        self.inner_gap
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn has_origin_atom(&self) -> bool {
        self.atoms.iter().any(|a| a.position == Complex64::new(0.0, 0.0))
    }

    /// Copy with a different inner gap, revalidated.
    pub fn with_inner_gap(&self, r0: Option<f64>) -> Result<Self, MeasureError> {
        Self::new(self.atoms.clone(), r0)
    }

    /// Atoms with `|z| <= radius`, keeping the inner gap.
    pub fn truncated(&self, radius: f64) -> Self {
        Self {
            atoms: self.atoms.iter().copied().filter(|a| a.position.norm() <= radius).collect(),
            inner_gap: self.inner_gap,
        }
    }

    /// Atoms with positive mass.
    pub fn positive_part(&self) -> Self {
        Self { atoms: self.atoms.iter().copied().filter(|a| a.mass > 0.0).collect(), inner_gap: self.inner_gap }
    }

    /// Atoms with negative mass, masses negated.
    pub fn negative_part(&self) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .filter(|a| a.mass < 0.0)
                .map(|a| ComplexAtom { position: a.position, mass: -a.mass })
                .collect(),
            inner_gap: self.inner_gap,
        }
    }

    /// Sum of two charges; the inner gap is the smaller of the two.
    pub fn union(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let inner_gap = match (self.inner_gap, other.inner_gap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        Self { atoms, inner_gap }
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs()).sum()
    }

    pub fn max_radius(&self) -> f64 {
        self.atoms.iter().map(|a| a.position.norm()).fold(0.0, f64::max)
    }

    /// `(nu(closed disk r), |nu|(closed disk r))`.
    pub fn radial_counting(&self, r: f64) -> Result<(f64, f64), MeasureError> {
        if !(r > 0.0) {
            return Err(MeasureError::BadRadius(r));
        }
        let mut signed = 0.0;
        let mut total = 0.0;
        for a in &self.atoms {
            if a.position.norm() <= r {
                signed += a.mass;
                total += a.mass.abs();
            }
        }
        Ok((signed, total))
    }
}

/// Free-function form of [`DiscreteCharge::radial_counting`].
pub fn radial_counting(charge: &DiscreteCharge, r: f64) -> Result<(f64, f64), MeasureError> {
    charge.radial_counting(r)
}

/// Whether `z` lies on the ray of direction `theta` (the origin counts).
pub fn on_ray(z: Complex64, theta: f64) -> bool {
    if z.norm() == 0.0 {
        return true;
    }
    let phi = arg_2pi(z * Complex64::from_polar(1.0, -theta));
    phi <= ANGLE_TOL || phi >= 2.0 * PI - ANGLE_TOL
}

/// Rays `l_j = {t e^{i theta_j}}` with `theta_1 < ... < theta_k < theta_1 + 2pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySystem {
    angles: Vec<f64>,
}

impl RaySystem {
    pub fn new(angles: Vec<f64>) -> Result<Self, MeasureError> {
        if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
            return Err(MeasureError::BadRays);
        }
        if angles.windows(2).any(|w| !(w[0] < w[1])) || !(angles[angles.len() - 1] < angles[0] + 2.0 * PI) {
            return Err(MeasureError::BadRays);
        }
        Ok(Self { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Complementary angle `j` runs from ray `j` to ray `j + 1` (cyclically).
    pub fn complementary(&self, j: usize) -> (f64, f64) {
        let k = self.angles.len();
        let alpha = self.angles[j];
        let beta = if j + 1 < k { self.angles[j + 1] } else { self.angles[0] + 2.0 * PI };
        (alpha, beta)
    }

    /// Index of the ray carrying `z`, if any.
    pub fn ray_of(&self, z: Complex64) -> Option<usize> {
        self.angles.iter().position(|&th| on_ray(z, th))
    }
}

/// Contribution of one swept source atom to a ray density.
///
/// On the ray the parameter `t >= 0` maps to `tau = t^kappa` on the positive
/// (side alpha) or negative (side beta) real axis of the reduced half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySource {
    pub reduced: Complex64,
    pub mass: f64,
    pub genus: u32,
    pub kappa: f64,
    pub side: Side,
}

impl RaySource {
    fn tau(&self, t: f64) -> f64 {
        if self.kappa == 1.0 {
            t
        } else {
            t.powf(self.kappa)
        }
    }

    /// Mass on the segment `[0, t]` of the ray.
    pub fn distribution(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let tau = self.tau(t);
        let v = match self.side {
            Side::Alpha => charge_unchecked(self.genus, self.reduced, 0.0, tau),
            Side::Beta => charge_unchecked(self.genus, self.reduced, -tau, 0.0),
        };
        self.mass * v
    }

    /// Density with respect to the ray parameter.
    pub fn density(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        let x = match self.side {
            Side::Alpha => tau,
            Side::Beta => -tau,
        };
        let jac = if self.kappa == 1.0 { 1.0 } else { self.kappa * t.powf(self.kappa - 1.0) };
        self.mass * poisson_unchecked(self.genus, x, self.reduced) * jac
    }

    /// Density in the reduced coordinate `tau`.
    fn reduced_density(&self, tau: f64) -> f64 {
        let x = match self.side {
            Side::Alpha => tau,
            Side::Beta => -tau,
        };
        self.mass * poisson_unchecked(self.genus, x, self.reduced)
    }
}

/// Swept charge carried by one ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayRecord {
    pub angle: f64,
    /// `(t, mass)` pairs sorted by `t`.
    pub retained: Vec<(f64, f64)>,
    pub sources: Vec<RaySource>,
}

impl RayRecord {
    pub fn new(angle: f64) -> Self {
        Self { angle, retained: Vec::new(), sources: Vec::new() }
    }

    pub fn density(&self, t: f64) -> f64 {
        self.sources.iter().map(|s| s.density(t)).sum()
    }

    pub fn retained_up_to(&self, t: f64) -> f64 {
        self.retained.iter().take_while(|(s, _)| *s <= t).map(|(_, m)| m).sum()
    }

    /// Closed-form distribution `N(t)`: absolutely continuous part plus retained atoms.
    pub fn distribution(&self, t: f64) -> f64 {
        self.smooth_distribution(t) + self.retained_up_to(t)
    }

    /// Distribution of the absolutely continuous part only.
    pub fn smooth_distribution(&self, t: f64) -> f64 {
        self.sources.iter().map(|s| s.distribution(t)).sum()
    }

    /// Largest `kappa * genus` over the sources: the smooth distribution grows like
    /// `t^growth` at infinity.
    pub fn growth_exponent(&self) -> f64 {
        self.sources.iter().map(|s| s.kappa * s.genus as f64).fold(0.0, f64::max)
    }

    /// Groups of sources sharing one reduced coordinate.
    fn groups(&self) -> Vec<(f64, Side, Vec<RaySource>)> {
        let mut groups: Vec<(f64, Side, Vec<RaySource>)> = Vec::new();
        for s in &self.sources {
            match groups.iter_mut().find(|(k, side, _)| *k == s.kappa && *side == s.side) {
                Some(g) => g.2.push(*s),
                None => groups.push((s.kappa, s.side, alloc::vec![*s])),
            }
        }
        groups
    }
}

/// Result of a balayage: per-ray densities and atoms plus atoms left off the rays.
#[derive(Debug, Clone, PartialEq)]
pub struct SweptCharge {
    pub rays: Vec<RayRecord>,
    /// Genus used in each swept region, in the sweeping routine's order.
    pub genus_used: Vec<u32>,
    /// Source atoms outside the swept region and off every ray.
    pub off_ray: Vec<ComplexAtom>,
}

impl SweptCharge {
    fn ray(&self, ray_index: usize) -> Result<&RayRecord, MeasureError> {
        self.rays.get(ray_index).ok_or(MeasureError::RayIndex(ray_index))
    }

    /// Density of ray `ray_index` at parameter `t`.
    pub fn density(&self, ray_index: usize, t: f64) -> Result<f64, MeasureError> {
        Ok(self.ray(ray_index)?.density(t))
    }

    /// Closed-form `N_j(t)`.
    pub fn distribution(&self, ray_index: usize, t: f64) -> Result<f64, MeasureError> {
        Ok(self.ray(ray_index)?.distribution(t))
    }

    /// `N_j(t)` with the absolutely continuous part integrated numerically.
    ///
    /// Each group of sources is integrated in its own reduced coordinate
    /// `tau = t^kappa`, where the density is a smooth kernel superposition.
    pub fn distribution_by_quadrature(
        &self,
        ray_index: usize,
        t: f64,
        spec: &QuadSpec,
    ) -> Result<QuadResult, MeasureError> {
        let ray = self.ray(ray_index)?;
        let mut total = QuadResult { value: ray.retained_up_to(t), error: 0.0 };
        if t <= 0.0 {
            return Ok(total);
        }
        for (kappa, _, srcs) in ray.groups() {
            let top = if kappa == 1.0 { t } else { t.powf(kappa) };
            let f = |tau: f64| srcs.iter().map(|s| s.reduced_density(tau)).sum::<f64>();
            let breaks: Vec<f64> = srcs
                .iter()
                .map(|s| match s.side {
                    Side::Alpha => s.reduced.re,
                    Side::Beta => -s.reduced.re,
                })
                .collect();
            total = total + crate::quadrature::integrate_with_breaks(f, 0.0, top, &breaks, spec)?;
        }
        Ok(total)
    }

    /// Total mass carried by ray `ray_index`, by quadrature over `[0, inf)`.
    ///
    /// Only meaningful when every source on the ray has genus 0.
    pub fn ray_mass_by_quadrature(&self, ray_index: usize, spec: &QuadSpec) -> Result<QuadResult, MeasureError> {
        let ray = self.ray(ray_index)?;
        let spec = spec.with_tail(2.0);
        let mut total = QuadResult { value: ray.retained.iter().map(|(_, m)| m).sum(), error: 0.0 };
        for (_, _, srcs) in ray.groups() {
            let f = |tau: f64| srcs.iter().map(|s| s.reduced_density(tau)).sum::<f64>();
            let centre = srcs
                .iter()
                .map(|s| match s.side {
                    Side::Alpha => s.reduced.re,
                    Side::Beta => -s.reduced.re,
                })
                .fold(0.0, f64::max);
            total = total + integrate(f, 0.0, centre, &spec)?;
            total = total + integrate_to_infinity(f, centre, &spec)?;
        }
        Ok(total)
    }

    /// Total mass of the swept charge and the off-ray atoms, by quadrature.
    pub fn total_mass_by_quadrature(&self, spec: &QuadSpec) -> Result<f64, MeasureError> {
        let mut m: f64 = self.off_ray.iter().map(|a| a.mass).sum();
        for j in 0..self.rays.len() {
            m += self.ray_mass_by_quadrature(j, spec)?.value;
        }
        Ok(m)
    }

    /// `(nu(closed disk r), |nu|(closed disk r))` of the swept charge, densities by quadrature.
    pub fn radial_counting(&self, r: f64, spec: &QuadSpec) -> Result<(f64, f64), MeasureError> {
        if !(r > 0.0) {
            return Err(MeasureError::BadRadius(r));
        }
        let mut signed = 0.0;
        let mut total = 0.0;
        for a in &self.off_ray {
            if a.position.norm() <= r {
                signed += a.mass;
                total += a.mass.abs();
            }
        }
        for ray in &self.rays {
            for &(t, m) in &ray.retained {
                if t <= r {
                    signed += m;
                    total += m.abs();
                }
            }
            if !ray.sources.is_empty() {
                signed += ray.smooth_distribution(r);
                total += integrate(|t| ray.density(t).abs(), 0.0, r, spec)?.value;
            }
        }
        Ok((signed, total))
    }

    /// Radial profile of the swept charge on an increasing grid.
    ///
    /// The total variation is accumulated panel by panel between grid radii.
    pub fn radial_profile(&self, grid: &[f64], spec: &QuadSpec) -> Result<RadialProfile, MeasureError> {
        let mut total = Vec::with_capacity(grid.len());
        let mut signed = Vec::with_capacity(grid.len());
        let mut acc = alloc::vec![0.0; self.rays.len()];
        let mut prev = 0.0;
        for &r in grid {
            if !(r > prev) {
                return Err(MeasureError::BadProfile("grid must be positive and increasing"));
            }
            let mut s = 0.0;
            let mut tv = 0.0;
            for a in &self.off_ray {
                if a.position.norm() <= r {
                    s += a.mass;
                    tv += a.mass.abs();
                }
            }
            for (j, ray) in self.rays.iter().enumerate() {
                for &(t, m) in &ray.retained {
                    if t <= r {
                        s += m;
                        tv += m.abs();
                    }
                }
                if !ray.sources.is_empty() {
                    acc[j] += integrate(|t| ray.density(t).abs(), prev, r, spec)?.value;
                    s += ray.smooth_distribution(r);
                    tv += acc[j];
                }
            }
            total.push(tv);
            signed.push(s);
            prev = r;
        }
        RadialProfile::new(grid.to_vec(), total, signed)
    }
}

/// Free-function form of [`SweptCharge::distribution`].
pub fn distribution_on_ray(swept: &SweptCharge, ray_index: usize, t: f64) -> Result<f64, MeasureError> {
    swept.distribution(ray_index, t)
}

/// Radial counting functions sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Vec<f64>,
    total: Vec<f64>,
    signed: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, total: Vec<f64>, signed: Vec<f64>) -> Result<Self, MeasureError> {
        if grid.len() != total.len() || grid.len() != signed.len() {
            return Err(MeasureError::BadProfile("length mismatch"));
        }
        if grid.iter().any(|r| !(*r > 0.0)) || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MeasureError::BadProfile("grid must be positive and increasing"));
        }
        // Quadrature noise may dent the total variation by a few ulps.
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let slack = 1e-9 * scale.max(1e-300);
        if total.windows(2).any(|w| w[1] < w[0] - slack) {
            return Err(MeasureError::BadProfile("total variation must be nondecreasing"));
        }
        if signed.iter().zip(&total).any(|(s, t)| s.abs() > t + slack) {
            return Err(MeasureError::BadProfile("|signed| exceeds total variation"));
        }
        Ok(Self { grid, total, signed })
    }

    /// Profile of an atomic charge.
    pub fn from_charge(charge: &DiscreteCharge, grid: &[f64]) -> Result<Self, MeasureError> {
        let mut total = Vec::with_capacity(grid.len());
        let mut signed = Vec::with_capacity(grid.len());
        for &r in grid {
            let (s, t) = charge.radial_counting(r)?;
            signed.push(s);
            total.push(t);
        }
        Self::new(grid.to_vec(), total, signed)
    }

    /// Profile from a total-variation function only; the signed part equals it.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &[f64], f: F) -> Result<Self, MeasureError> {
        let total: Vec<f64> = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid.to_vec(), total.clone(), total)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn total(&self) -> &[f64] {
        &self.total
    }

    pub fn signed(&self) -> &[f64] {
        &self.signed
    }
}

/// Classification of a radial counting function against an order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    /// Ratio `|nu|^rad(r) / r^p` stays level on the tail window.
    FiniteType,
    /// Ratio grows, but `|nu|^rad(r) / (r^p log r)` stays level.
    LogExcess,
    /// Faster growth than `r^p log r`.
    ExceedsOrder,
}

/// Fitted order and type of a radial counting function.
///
/// All verdicts are empirical: they describe the finite grid, not a limsup.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthVerdict {
    /// Least-squares slope of `log |nu|^rad` against `log r` on the tail window.
    pub fitted_order: f64,
    pub order: Option<f64>,
    pub class: Option<GrowthClass>,
    /// Type estimate: maximum of `|nu|^rad(r) / r^p` on the tail window, or 0
    /// when that ratio decays.
    pub type_estimate: Option<f64>,
    /// Least-squares slope of `|nu|^rad(r) / r^p` against `log r` on the tail window.
    pub ratio_slope: Option<f64>,
}

pub(crate) fn check_grid(grid: &[f64], need_points: usize, need_decades: f64) -> Result<(), MeasureError> {
    let decades = if grid.is_empty() || grid[0] <= 0.0 { 0.0 } else { (grid[grid.len() - 1] / grid[0]).log10() };
    if grid.len() < need_points || decades < need_decades - 1e-9 {
        return Err(MeasureError::InsufficientGrid { points: grid.len(), decades, need_points, need_decades });
    }
    Ok(())
}

/// Fit order and, given `p`, type and growth class of a radial profile.
///
/// Uses the top half of the grid. Finite type needs a fitted order at most
/// `p + SLOPE_TOL` and a ratio `|nu|^rad / r^p` whose slope against `log r`,
/// relative to its mean, is at most `SLOPE_TOL`. Otherwise the same test on
/// `|nu|^rad / (r^p log r)` decides between log-excess and faster growth.
pub fn estimate_order_type(profile: &RadialProfile, p: Option<f64>) -> Result<GrowthVerdict, MeasureError> {
    check_grid(&profile.grid, 8, 2.0)?;
    let n = profile.grid.len();
    let tail = n / 2..n;
    let logr: Vec<f64> = profile.grid[tail.clone()].iter().map(|r| r.ln()).collect();
    let vals: Vec<f64> = profile.total[tail.clone()].to_vec();

    let positive: Vec<(f64, f64)> =
        logr.iter().zip(&vals).filter(|(_, v)| **v > 0.0).map(|(l, v)| (*l, v.ln())).collect();
    let fitted_order = if positive.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        ls_slope(&x, &y)
    } else {
        0.0
    };

    let Some(p) = p else {
        return Ok(GrowthVerdict { fitted_order, order: None, class: None, type_estimate: None, ratio_slope: None });
    };

    let ratio: Vec<f64> = vals.iter().zip(&logr).map(|(v, l)| v / (p * l).exp()).collect();
    let ratio_slope = ls_slope(&logr, &ratio);
    let level = |r: &[f64], slope: f64| {
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        mean <= 0.0 || slope <= SLOPE_TOL * mean
    };

    let class = if fitted_order <= p + SLOPE_TOL && level(&ratio, ratio_slope) {
        GrowthClass::FiniteType
    } else {
        let log_ratio: Vec<f64> = ratio.iter().zip(&logr).map(|(r, l)| r / l.max(1.0)).collect();
        let s = ls_slope(&logr, &log_ratio);
        if level(&log_ratio, s) {
            GrowthClass::LogExcess
        } else {
            GrowthClass::ExceedsOrder
        }
    };

    let positive_ratio: Vec<(f64, f64)> =
        logr.iter().zip(&ratio).filter(|(_, r)| **r > 0.0).map(|(l, r)| (*l, r.ln())).collect();
    let decays = if positive_ratio.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = positive_ratio.into_iter().unzip();
        ls_slope(&x, &y) < -SLOPE_TOL
    } else {
        true
    };
    let type_estimate = if decays { 0.0 } else { ratio.iter().fold(0.0, |m: f64, r| m.max(*r)) };
    let _ = median;

    Ok(GrowthVerdict {
        fitted_order,
        order: Some(p),
        class: Some(class),
        type_estimate: Some(type_estimate),
        ratio_slope: Some(ratio_slope),
    })
}
