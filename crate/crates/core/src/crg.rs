//! Completely regular growth along rays through a principal-value functional
//! of the swept counting function.
//!
//! For a zero set `Z` and order `p`, the zeros off `[0, +inf)` are swept onto
//! it with genus `floor(2p)` and
//! `Phi(x) = x^{[p]+1-p} PV int_0^inf N(t) / ((x - t) t^{[p]+1}) dt`.
//! The jumps of `N` at zeros on the ray integrate in closed form to
//! `x^-p K_{[p]}(t_k, x)`, so only the absolutely continuous part goes
//! through quadrature, in the variable `s = sqrt t`.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::balayage::{sweep_ray_system, BalayageError, GenusChoice};
use crate::kernels::{hadamard_unchecked, slit_charge_unchecked, slit_sqrt};
use crate::measures::{check_grid, ComplexAtom, DiscreteCharge, MeasureError, RaySource, RaySystem, SweptCharge};
use crate::quadrature::{
    integrate_to_infinity, integrate_with_breaks, principal_value, principal_value_to_infinity, QuadError, QuadResult,
    QuadSpec,
};
use crate::stats::{median, quantile};
use crate::GridExecutor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrgError {
    #[error("zero set contains the origin")]
    OriginZero,
    #[error("order p must be positive and finite, got {0}")]
    BadOrder(f64),
    #[error("x = {0} must be positive and off the zeros on the ray")]
    BadPoint(f64),
    #[error("N(t) / t^{m} is not integrable at 0 (local exponent {exponent:.3})")]
    NotIntegrableAtOrigin { m: u32, exponent: f64 },
    #[error("x-grid needs {need_points} points over {need_decades} decades, got {points} over {decades:.3}")]
    InsufficientGrid { points: usize, decades: f64, need_points: usize, need_decades: f64 },
    #[error("grid bounds must satisfy 0 < min < max with at least 2 points")]
    BadGrid,
    #[error("principal value at x = {x}: {source}")]
    Quadrature {
        x: f64,
        #[source]
        source: QuadError,
    },
    #[error(transparent)]
    Balayage(#[from] BalayageError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn quad_at(x: f64) -> impl Fn(QuadError) -> CrgError {
    move |source| CrgError::Quadrature { x, source }
}

/// `[p] + 1`, the power of `t` in the functional.
fn kernel_power(p: f64) -> u32 {
    p.floor() as u32 + 1
}

/// Swept counting function on `[0, +inf)` of genus `floor(2p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweptCounting {
    order: f64,
    genus: u32,
    /// Square roots `w = sqrt z` of the zeros off the ray, with masses.
    slit: Vec<(Complex64, f64)>,
    /// Zeros on the ray, sorted.
    retained: Vec<(f64, f64)>,
}

/// Sweep the zeros off `[0, +inf)` onto it with genus `floor(2p)`.
pub fn swept_counting_on_ray(zeros: &DiscreteCharge, p: f64) -> Result<SweptCounting, CrgError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(CrgError::BadOrder(p));
    }
    if zeros.has_origin_atom() {
        return Err(CrgError::OriginZero);
    }
    let mut slit = Vec::new();
    let mut retained = Vec::new();
    for a in zeros.atoms() {
        match slit_sqrt(a.position) {
            Ok(w) => slit.push((w, a.mass)),
            Err(_) => retained.push((a.position.re, a.mass)),
        }
    }
    retained.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SweptCounting { order: p, genus: (2.0 * p + 1e-12).floor() as u32, slit, retained })
}

impl SweptCounting {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Zeros on the ray as `(t, mass)`.
    pub fn retained(&self) -> &[(f64, f64)] {
        &self.retained
    }

    /// `N(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let jumps: f64 = self.retained.iter().take_while(|(t, _)| *t <= x).map(|(_, m)| m).sum();
        self.smooth(x) + jumps
    }

    /// The absolutely continuous part of `N`.
    pub fn smooth(&self, x: f64) -> f64 {
        self.slit.iter().map(|(w, m)| m * slit_charge_unchecked(self.genus, *w, x)).sum()
    }

    /// Decay exponent in `s` of the smoothed integrand at infinity.
    fn tail_exponent(&self) -> f64 {
        let odd = if self.genus == 0 {
            0
        } else if self.genus % 2 == 1 {
            self.genus
        } else {
            self.genus - 1
        };
        2.0 * kernel_power(self.order) as f64 + 1.0 - odd as f64
    }
}

/// A value of the functional with its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    pub error: f64,
}

/// `Phi(x)` for the swept counting function of a finite zero set.
pub fn crg_functional(n: &SweptCounting, x: f64, spec: &QuadSpec) -> Result<PhiValue, CrgError> {
    if !(x > 0.0 && x.is_finite()) || n.retained.iter().any(|(t, _)| *t == x) {
        return Err(CrgError::BadPoint(x));
    }
    let p = n.order;
    let m = kernel_power(p);
    let q = m - 1;
    let mut value: f64 = n
        .retained
        .iter()
        .map(|(t, mass)| mass * hadamard_unchecked(q, Complex64::new(*t, 0.0), Complex64::new(x, 0.0)))
        .sum();
    value *= x.powf(-p);

    let mut error = 0.0;
    if !n.slit.is_empty() {
        let scale = x.powf(m as f64 - p);
        let two_m = 2 * m as i32;
        let h = |s: f64| if s > 0.0 { 2.0 * s * n.smooth(s * s) / ((x - s * s) * s.powi(two_m)) } else { 0.0 };
        let spec = spec.with_tail(n.tail_exponent());
        let pv = principal_value_to_infinity(h, x.sqrt(), 0.0, &spec).map_err(quad_at(x))?;
        value += scale * pv.value;
        error = scale * pv.error;
    }
    Ok(PhiValue { value, error })
}

/// `Phi(x)` for a counting function given as a closure on `[0, t_max]`.
///
/// `N(t) / t^{[p]+1}` must be integrable at 0; this is checked from the
/// local exponent of `N` between `1e-8 x` and `1e-6 x`.
pub fn crg_functional_fn<N: Fn(f64) -> f64>(
    n: N,
    p: f64,
    x: f64,
    t_max: f64,
    spec: &QuadSpec,
) -> Result<PhiValue, CrgError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(CrgError::BadOrder(p));
    }
    if !(x > 0.0 && x < t_max) {
        return Err(CrgError::BadPoint(x));
    }
    let m = kernel_power(p);
    let (t1, t2) = (1e-8 * x, 1e-6 * x);
    let (n1, n2) = (n(t1).abs(), n(t2).abs());
    if n1 != 0.0 || n2 != 0.0 {
        let exponent = if n1 == 0.0 { f64::INFINITY } else { (n2 / n1).ln() / (t2 / t1).ln() };
        if !(exponent > m as f64 - 1.0 + 1e-3) {
            return Err(CrgError::NotIntegrableAtOrigin { m, exponent });
        }
    }
    let two_m = 2 * m as i32;
    let h = |s: f64| if s > 0.0 { 2.0 * s * n(s * s) / ((x - s * s) * s.powi(two_m)) } else { 0.0 };
    let pv = principal_value(h, x.sqrt(), 0.0, t_max.sqrt(), spec).map_err(quad_at(x))?;
    let scale = x.powf(m as f64 - p);
    Ok(PhiValue { value: scale * pv.value, error: scale * pv.error })
}

/// Bound `B_q(rho)` on `|K_q(zeta, z)|` for `|z / zeta| = rho`.
fn kernel_majorant(q: u32, rho: f64) -> f64 {
    let head = |upto: u32| (1..=upto).map(|k| rho.powi(k as i32) / k as f64).sum::<f64>();
    if rho < 0.5 {
        let mut term = rho.powi(q as i32 + 1);
        let mut k = q + 1;
        let mut s = 0.0;
        while term > 1e-17 * s.max(f64::MIN_POSITIVE) && k < q + 200 {
            s += term / k as f64;
            term *= rho;
            k += 1;
        }
        s
    } else if rho < 1.0 {
        -(1.0 - rho).ln() - head(q)
    } else {
        (1.0 + rho).ln().max(-(rho - 1.0).abs().ln()) + head(q)
    }
}

/// Extrapolation of a truncated zero set beyond its truncation radius.
///
/// The zeros of the top annulus `(R/2, R]` are copied to `2^j z` with mass
/// `2^{jp} m` for `j >= 1`, which continues a counting function of order `p`
/// self-similarly; the copies enter through `K_{[p]}` in closed form. The
/// error bar bounds the whole tail by `x^-p int_R^inf B_{[p]}(x/r) dn(r)`
/// with the envelope `n(r) = C r^p log r`, `C` fitted on the top decade.
#[derive(Debug, Clone, PartialEq)]
pub struct TailModel {
    radius: f64,
    order: f64,
    annulus: Vec<ComplexAtom>,
    levels: u32,
    envelope: f64,
}

const TAIL_RATIO: f64 = 2.0;

impl TailModel {
    pub fn new(zeros: &DiscreteCharge, radius: f64, p: f64) -> Self {
        let annulus: Vec<ComplexAtom> = zeros
            .atoms()
            .iter()
            .copied()
            .filter(|a| {
                let r = a.position.norm();
                r > radius / TAIL_RATIO && r <= radius
            })
            .collect();
        let m = kernel_power(p) as f64;
        // Copies decay like 2^{j(p - m)}; stop when that is below 1e-13.
        let levels = (13.0 * 10f64.ln() / ((m - p) * TAIL_RATIO.ln())).ceil().clamp(1.0, 400.0) as u32;
        let lfloor = |r: f64| r.ln().max(1.0);
        let mut radii: Vec<(f64, f64)> = zeros.atoms().iter().map(|a| (a.position.norm(), a.mass.abs())).collect();
        radii.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut envelope: f64 = 0.0;
        let mut count = 0.0;
        for (r, mass) in radii.iter().copied().filter(|(r, _)| *r <= radius) {
            count += mass;
            if r >= radius / 10.0 {
                envelope = envelope.max(count / (r.powf(p) * lfloor(r)));
            }
        }
        if count > 0.0 {
            envelope = envelope.max(count / (radius.powf(p) * lfloor(radius)));
        }
        Self { radius, order: p, annulus, levels, envelope }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Fitted constant of the envelope `C r^p log r`.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    /// Contribution of the extrapolated zeros to `|z|^-p v(z)`.
    pub fn correction(&self, z: Complex64) -> f64 {
        let q = kernel_power(self.order) - 1;
        let mut total = 0.0;
        let mut scale = 1.0;
        let mut weight = 1.0;
        let wstep = TAIL_RATIO.powf(self.order);
        for _ in 0..self.levels {
            scale *= TAIL_RATIO;
            weight *= wstep;
            let level: f64 = self.annulus.iter().map(|a| a.mass * hadamard_unchecked(q, a.position * scale, z)).sum();
            total += weight * level;
        }
        total * z.norm().powf(-self.order)
    }

    /// Error bar for the zeros beyond the truncation radius at `|z| = x`.
    pub fn bar(&self, x: f64, spec: &QuadSpec) -> Result<f64, QuadError> {
        if self.envelope == 0.0 {
            return Ok(0.0);
        }
        let p = self.order;
        let m = kernel_power(p);
        let q = m - 1;
        let c = self.envelope;
        let dn = |r: f64| {
            let l = r.ln();
            let d = if l > 1.0 { p * l + 1.0 } else { p };
            c * r.powf(p - 1.0) * d
        };
        let f = |r: f64| kernel_majorant(q, x / r) * dn(r);
        let cut = (4.0 * x).max(2.0 * self.radius);
        let breaks = if x > self.radius { alloc::vec![x] } else { Vec::new() };
        let near = integrate_with_breaks(f, self.radius, cut, &breaks, spec)?;
        let far = integrate_to_infinity(f, cut, &spec.with_tail(1.0 + 0.5 * (m as f64 - p)))?;
        Ok((near.value + far.value) * x.powf(-p))
    }
}

/// Robust tail limit of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustLimit {
    pub limit: f64,
    /// Interquartile range of the surviving tail values.
    pub spread: f64,
    pub kept: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrgVerdict {
    Crg,
    NotCrg,
    Inconclusive,
}

/// Default excision fraction of [`robust_limit`].
pub const EXCISION_FRACTION: f64 = 0.1;
/// Default relative spread tolerance of a CRG verdict.
pub const CRG_TOL: f64 = 0.05;

/// Limit of the top half of a trace after dropping the `delta` fraction of
/// points farthest from its median. Needs 32 points over 1.5 decades.
pub fn robust_limit(values: &[f64], grid: &[f64], delta: f64) -> Result<RobustLimit, CrgError> {
    if values.len() != grid.len() {
        return Err(CrgError::BadGrid);
    }
    check_grid(grid, 32, 1.5).map_err(|e| match e {
        MeasureError::InsufficientGrid { points, decades, need_points, need_decades } => {
            CrgError::InsufficientGrid { points, decades, need_points, need_decades }
        }
        other => other.into(),
    })?;
    let n = values.len();
    let tail = &values[n / 2..];
    let med = median(tail);
    let drop = (delta * tail.len() as f64).ceil() as usize;
    let mut by_dev: Vec<f64> = tail.to_vec();
    by_dev.sort_by(|a, b| (a - med).abs().total_cmp(&(b - med).abs()));
    by_dev.truncate(tail.len() - drop.min(tail.len() - 1));
    let limit = median(&by_dev);
    let spread = quantile(&by_dev, 0.75) - quantile(&by_dev, 0.25);
    Ok(RobustLimit { limit, spread, kept: by_dev.len() })
}

/// CRG when the spread is within `tol (1 + |limit|)` and truncation is stable.
pub fn classify(r: &RobustLimit, stable: bool, tol: f64) -> CrgVerdict {
    if r.spread > tol * (1.0 + r.limit.abs()) {
        CrgVerdict::NotCrg
    } else if stable {
        CrgVerdict::Crg
    } else {
        CrgVerdict::Inconclusive
    }
}

/// Settings of a criterion run.
#[derive(Debug, Clone, PartialEq)]
pub struct CrgConfig {
    pub xmin: f64,
    pub xmax: f64,
    pub points: usize,
    pub seed: u64,
    pub excision: f64,
    pub tol: f64,
    /// Relative distance below which a grid point is pushed off a zero on the ray.
    pub guard: f64,
    /// Truncation radii for the stability study; empty means no study.
    pub truncation_radii: Vec<f64>,
    /// Add the self-similar tail extrapolation to every value.
    pub tail_correction: bool,
    pub quad: QuadSpec,
}

impl CrgConfig {
    pub fn new(xmin: f64, xmax: f64, points: usize) -> Self {
        Self {
            xmin,
            xmax,
            points,
            seed: 0,
            excision: EXCISION_FRACTION,
            tol: CRG_TOL,
            guard: 1e-3,
            truncation_radii: Vec::new(),
            tail_correction: true,
            quad: QuadSpec::with_tol(1e-9, 1e-9),
        }
    }
}

/// Log grid on `[min, max]` whose interior points are jittered by up to
/// 0.3 of a step, then pushed at least `guard x` away from every `avoid` point.
pub fn jittered_log_grid(
    min: f64,
    max: f64,
    points: usize,
    seed: u64,
    avoid: &[f64],
    guard: f64,
) -> Result<Vec<f64>, CrgError> {
    if !(min > 0.0 && max > min && points >= 2 && max.is_finite()) {
        return Err(CrgError::BadGrid);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = (max / min).ln() / (points - 1) as f64;
    let mut grid = Vec::with_capacity(points);
    for i in 0..points {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let jitter = if i == 0 || i + 1 == points { 0.0 } else { 0.6 * (u - 0.5) };
        let mut x = min * ((i as f64 + jitter) * step).exp();
        let g = guard * x;
        // The nearest avoided point decides the push direction.
        let idx = avoid.partition_point(|t| *t < x);
        for j in [idx.wrapping_sub(1), idx] {
            if let Some(&t) = avoid.get(j) {
                if (x - t).abs() < g {
                    x = if x >= t { t + g } else { t - g };
                }
            }
        }
        grid.push(x);
    }
    Ok(grid)
}

/// Values of the functional at one truncation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRecord {
    pub radius: f64,
    pub phi: Vec<f64>,
    pub error: Vec<f64>,
    pub bar: Vec<f64>,
}

/// Result of a criterion run along one ray.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionTrace {
    pub ray_angle: f64,
    pub order: f64,
    /// Sweeping genus `floor(2p)`.
    pub genus: u32,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub quad_error: Vec<f64>,
    pub tail_bar: Vec<f64>,
    pub limit: f64,
    pub spread: f64,
    pub verdict: CrgVerdict,
    pub truncation: Vec<TruncationRecord>,
    pub stable: bool,
    /// Grid points whose tail bar exceeds 10% of `|Phi|`.
    pub tail_dominated: usize,
}

/// Evaluates the functional of one ray at a point `r` of that ray.
trait RayFunctional: Sync {
    fn phi(&self, r: f64, spec: &QuadSpec) -> Result<PhiValue, CrgError>;
}

impl RayFunctional for SweptCounting {
    fn phi(&self, r: f64, spec: &QuadSpec) -> Result<PhiValue, CrgError> {
        crg_functional(self, r, spec)
    }
}

struct Sample {
    phi: f64,
    error: f64,
    bar: f64,
}

fn evaluate<E: GridExecutor, R: RayFunctional>(
    exec: &E,
    functional: &R,
    tail: Option<&TailModel>,
    direction: Complex64,
    grid: &[f64],
    spec: &QuadSpec,
) -> Result<Vec<Sample>, CrgError> {
    exec.map(grid.len(), |i| {
        let x = grid[i];
        let v = functional.phi(x, spec)?;
        let (corr, bar) = match tail {
            Some(t) => (t.correction(direction * x), t.bar(x, spec).map_err(quad_at(x))?),
            None => (0.0, 0.0),
        };
        Ok(Sample { phi: v.value + corr, error: v.error, bar })
    })
    .into_iter()
    .collect()
}

fn stability(records: &[TruncationRecord]) -> bool {
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            for k in 0..a.phi.len() {
                let allowed = a.bar[k] + b.bar[k] + a.error[k] + b.error[k] + 1e-12 * (1.0 + a.phi[k].abs());
                if (a.phi[k] - b.phi[k]).abs() > allowed {
                    return false;
                }
            }
        }
    }
    true
}

fn tail_model(zeros: &DiscreteCharge, radius: f64, cfg: &CrgConfig, p: f64) -> Option<TailModel> {
    if cfg.tail_correction {
        Some(TailModel::new(zeros, radius, p))
    } else {
        None
    }
}

fn assemble(
    angle: f64,
    p: f64,
    genus: u32,
    grid: Vec<f64>,
    main: Vec<Sample>,
    truncation: Vec<TruncationRecord>,
    cfg: &CrgConfig,
) -> Result<CriterionTrace, CrgError> {
    let phi: Vec<f64> = main.iter().map(|s| s.phi).collect();
    let quad_error: Vec<f64> = main.iter().map(|s| s.error).collect();
    let tail_bar: Vec<f64> = main.iter().map(|s| s.bar).collect();
    let robust = robust_limit(&phi, &grid, cfg.excision)?;
    let stable = stability(&truncation);
    let tail_dominated = phi.iter().zip(&tail_bar).filter(|(f, b)| **b > 0.1 * f.abs()).count();
    Ok(CriterionTrace {
        ray_angle: angle,
        order: p,
        genus,
        x: grid,
        phi,
        quad_error,
        tail_bar,
        limit: robust.limit,
        spread: robust.spread,
        verdict: classify(&robust, stable, cfg.tol),
        truncation,
        stable,
        tail_dominated,
    })
}

fn records(samples: Vec<Sample>, radius: f64) -> TruncationRecord {
    TruncationRecord {
        radius,
        phi: samples.iter().map(|s| s.phi).collect(),
        error: samples.iter().map(|s| s.error).collect(),
        bar: samples.iter().map(|s| s.bar).collect(),
    }
}

/// Criterion along `[0, +inf)`: swept counting function, functional on a
/// jittered log grid, robust limit and truncation study.
pub fn crg_check_ray<E: GridExecutor>(
    exec: &E,
    zeros: &DiscreteCharge,
    p: f64,
    cfg: &CrgConfig,
) -> Result<CriterionTrace, CrgError> {
    let n = swept_counting_on_ray(zeros, p)?;
    let avoid: Vec<f64> = n.retained.iter().map(|(t, _)| *t).collect();
    let grid = jittered_log_grid(cfg.xmin, cfg.xmax, cfg.points, cfg.seed, &avoid, cfg.guard)?;
    let dir = Complex64::new(1.0, 0.0);
    let full_radius = zeros.max_radius();
    let tail = tail_model(zeros, full_radius, cfg, p);
    let main = evaluate(exec, &n, tail.as_ref(), dir, &grid, &cfg.quad)?;
    let mut study = Vec::with_capacity(cfg.truncation_radii.len());
    for &radius in &cfg.truncation_radii {
        let cut = zeros.truncated(radius);
        let nk = swept_counting_on_ray(&cut, p)?;
        let tk = tail_model(&cut, radius, cfg, p);
        study.push(records(evaluate(exec, &nk, tk.as_ref(), dir, &grid, &cfg.quad)?, radius));
    }
    assemble(0.0, p, n.genus, grid, main, study, cfg)
}

/// Functional of ray `j` of a swept ray system.
struct SystemFunctional<'a> {
    swept: &'a SweptCharge,
    /// Source atoms that are not swept (on a ray or off every angle).
    kept: Vec<ComplexAtom>,
    ray: usize,
    order: f64,
}

/// Sources on one ray sharing a reduced coordinate `tau = t^kappa`.
struct Group {
    kappa: f64,
    sources: Vec<RaySource>,
}

fn groups(sources: &[RaySource]) -> Vec<Group> {
    let mut out: Vec<Group> = Vec::new();
    for s in sources {
        match out.iter_mut().find(|g| g.kappa == s.kappa) {
            Some(g) => g.sources.push(*s),
            None => out.push(Group { kappa: s.kappa, sources: alloc::vec![*s] }),
        }
    }
    out
}

impl RayFunctional for SystemFunctional<'_> {
    fn phi(&self, r: f64, spec: &QuadSpec) -> Result<PhiValue, CrgError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CrgError::BadPoint(r));
        }
        let p = self.order;
        let m = kernel_power(p);
        let theta = self.swept.rays[self.ray].angle;
        let z = Complex64::from_polar(r, theta);
        let mut value: f64 = self.kept.iter().map(|a| a.mass * hadamard_unchecked(m - 1, a.position, z)).sum();
        let mut error = 0.0;
        for (j, ray) in self.swept.rays.iter().enumerate() {
            let dir = Complex64::from_polar(1.0, ray.angle);
            for g in groups(&ray.sources) {
                let kappa = g.kappa;
                let inv = 1.0 / kappa;
                let n = |tau: f64| g.sources.iter().map(|s| s.distribution(tau.powf(inv))).sum::<f64>();
                let gmax = g.sources.iter().map(|s| s.genus).max().unwrap_or(0) as f64;
                // Near 0 the smallest source genus decides integrability.
                let gmin = g.sources.iter().map(|s| s.genus).min().unwrap_or(0) as f64;
                let local = (gmin + 1.0) * kappa;
                if !(local > m as f64 - 1.0) {
                    return Err(CrgError::NotIntegrableAtOrigin { m, exponent: local });
                }
                let tail = spec.with_tail(m as f64 * inv + 1.0 - gmax);
                let jac = |tau: f64| inv * tau.powf(inv - 1.0);
                let res: QuadResult = if j == self.ray {
                    let h = |tau: f64| {
                        if tau <= 0.0 {
                            return 0.0;
                        }
                        let t = tau.powf(inv);
                        n(tau) * r.powi(m as i32) / (t.powi(m as i32) * (r - t)) * jac(tau)
                    };
                    principal_value_to_infinity(h, r.powf(kappa), 0.0, &tail).map_err(quad_at(r))?
                } else {
                    let h = |tau: f64| {
                        if tau <= 0.0 {
                            return 0.0;
                        }
                        let t = tau.powf(inv);
                        let zeta = dir * t;
                        let k = dir * z.powu(m) / (zeta.powu(m) * (z - zeta));
                        n(tau) * k.re * jac(tau)
                    };
                    let reach = g.sources.iter().map(|s| s.reduced.norm()).fold(r.powf(kappa), f64::max) * 2.0;
                    let breaks: Vec<f64> = g.sources.iter().map(|s| s.reduced.re.abs()).collect();
                    integrate_with_breaks(h, 0.0, reach, &breaks, &tail).map_err(quad_at(r))?
                        + integrate_to_infinity(h, reach, &tail).map_err(quad_at(r))?
                };
                value += res.value;
                error += res.error;
            }
        }
        let scale = r.powf(-p);
        Ok(PhiValue { value: value * scale, error: error * scale })
    }
}

fn kept_atoms(swept: &SweptCharge) -> Vec<ComplexAtom> {
    let mut kept = swept.off_ray.clone();
    for ray in &swept.rays {
        let dir = Complex64::from_polar(1.0, ray.angle);
        kept.extend(ray.retained.iter().map(|(t, m)| ComplexAtom { position: dir * *t, mass: *m }));
    }
    kept
}

/// Criterion along every ray of a ray system, after sweeping the charge
/// out of the complementary angles. Only the self-ray term is a principal
/// value; the other rays contribute ordinary integrals.
pub fn crg_check_ray_system<E: GridExecutor>(
    exec: &E,
    charge: &DiscreteCharge,
    p: f64,
    rays: &RaySystem,
    r0: f64,
    choice: GenusChoice,
    cfg: &CrgConfig,
) -> Result<Vec<CriterionTrace>, CrgError> {
    if charge.has_origin_atom() {
        return Err(CrgError::OriginZero);
    }
    let (swept, _) = sweep_ray_system(charge, rays, p, r0, choice)?;
    let kept = kept_atoms(&swept);
    let full_radius = charge.max_radius();
    let tail = tail_model(charge, full_radius, cfg, p);
    let cuts: Vec<(f64, SweptCharge, Option<TailModel>)> = cfg
        .truncation_radii
        .iter()
        .map(|&radius| {
            let cut = charge.truncated(radius);
            let (s, _) = sweep_ray_system(&cut, rays, p, r0, choice)?;
            Ok((radius, s, tail_model(&cut, radius, cfg, p)))
        })
        .collect::<Result<_, CrgError>>()?;

    let mut out = Vec::with_capacity(rays.len());
    for j in 0..rays.len() {
        let theta = rays.angles()[j];
        let dir = Complex64::from_polar(1.0, theta);
        let mut avoid: Vec<f64> =
            kept.iter().filter(|a| crate::measures::on_ray(a.position, theta)).map(|a| a.position.norm()).collect();
        avoid.sort_by(|a, b| a.total_cmp(b));
        let grid = jittered_log_grid(cfg.xmin, cfg.xmax, cfg.points, cfg.seed, &avoid, cfg.guard)?;
        let f = SystemFunctional { swept: &swept, kept: kept.clone(), ray: j, order: p };
        let main = evaluate(exec, &f, tail.as_ref(), dir, &grid, &cfg.quad)?;
        let mut study = Vec::with_capacity(cuts.len());
        for (radius, s, t) in &cuts {
            let fk = SystemFunctional { swept: s, kept: kept_atoms(s), ray: j, order: p };
            study.push(records(evaluate(exec, &fk, t.as_ref(), dir, &grid, &cfg.quad)?, *radius));
        }
        out.push(assemble(theta, p, (2.0 * p + 1e-12).floor() as u32, grid, main, study, cfg)?);
    }
    Ok(out)
}

/// Reference value `|x|^-p sum m K_{[p]}(z_k, x)` of the functional of a
/// finite zero set at a point `x` of a ray, with no quadrature.
pub fn canonical_log_modulus_ratio(zeros: &DiscreteCharge, p: f64, x: Complex64) -> f64 {
    let q = kernel_power(p) - 1;
    let s: f64 = zeros.atoms().iter().map(|a| a.mass * hadamard_unchecked(q, a.position, x)).sum();
    s * x.norm().powf(-p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Sequential;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn zeros(points: &[(f64, f64)]) -> DiscreteCharge {
        DiscreteCharge::new(points.iter().map(|&(x, y)| ComplexAtom::new(x, y, 1.0)).collect(), None).unwrap()
    }

    fn sin_zeros(k: i32) -> DiscreteCharge {
        zeros(&(1..=k).flat_map(|j| [(j as f64, 0.0), (-(j as f64), 0.0)]).collect::<Vec<_>>())
    }

    #[test]
    fn counting_examples() {
        let n = swept_counting_on_ray(&zeros(&[(1.0, 0.0), (2.0, 0.0)]), 0.7).unwrap();
        assert_eq!(n.eval(1.5), 1.0);
        let n = swept_counting_on_ray(&zeros(&[(-1.0, 0.0)]), 0.5).unwrap();
        assert_abs_diff_eq!(n.eval(1.0), 0.5 - 2.0 / PI, epsilon = 1e-14);
        assert!(swept_counting_on_ray(&zeros(&[(0.0, 0.0)]), 1.0).is_err());
    }

    #[test]
    fn empty_zero_set_gives_zero() {
        let n = swept_counting_on_ray(&DiscreteCharge::empty(), 1.0).unwrap();
        assert_eq!(crg_functional(&n, 3.3, &QuadSpec::default()).unwrap().value, 0.0);
    }

    #[test]
    fn linear_counting_is_not_integrable() {
        let r = crg_functional_fn(|t| t, 1.0, 2.0, 10.0, &QuadSpec::default());
        assert!(matches!(r, Err(CrgError::NotIntegrableAtOrigin { .. })));
        assert_eq!(crg_functional_fn(|_| 0.0, 1.0, 2.0, 10.0, &QuadSpec::default()).unwrap().value, 0.0);
    }

    #[test]
    fn functional_matches_canonical_product() {
        let spec = QuadSpec::with_tol(1e-11, 1e-11);
        let z = zeros(&[(-1.0, 0.0), (0.3, 2.0), (2.5, 0.0), (-4.0, -1.0)]);
        for p in [0.3, 0.5, 1.0, 1.4, 2.2] {
            let n = swept_counting_on_ray(&z, p).unwrap();
            for x in [0.7, 1.9, 6.1] {
                let got = crg_functional(&n, x, &spec).unwrap().value;
                let want = canonical_log_modulus_ratio(&z, p, Complex64::new(x, 0.0));
                assert_abs_diff_eq!(got, want, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn robust_limit_examples() {
        let grid: Vec<f64> = (0..64).map(|i| 10f64.powf(1.0 + 2.0 * i as f64 / 63.0)).collect();
        let r = robust_limit(&alloc::vec![2.5; 64], &grid, 0.1).unwrap();
        assert_eq!((r.limit, r.spread), (2.5, 0.0));
        assert_eq!(classify(&r, true, CRG_TOL), CrgVerdict::Crg);
        let spiky: Vec<f64> = (0..64).map(|i| if i % 20 == 7 { -30.0 } else { 1.0 }).collect();
        let r = robust_limit(&spiky, &grid, 0.1).unwrap();
        assert_eq!(r.limit, 1.0);
        assert_eq!(classify(&r, true, CRG_TOL), CrgVerdict::Crg);
        let wave: Vec<f64> = grid.iter().map(|x| x.ln().sin()).collect();
        let r = robust_limit(&wave, &grid, 0.1).unwrap();
        assert_eq!(classify(&r, true, CRG_TOL), CrgVerdict::NotCrg);
        assert!(robust_limit(&wave[..20], &grid[..20], 0.1).is_err());
    }

    #[test]
    fn sin_zeros_with_tail_correction() {
        let spec = QuadSpec::with_tol(1e-10, 1e-10);
        let small = sin_zeros(100);
        let big = sin_zeros(400);
        let n = swept_counting_on_ray(&small, 1.0).unwrap();
        let tail = TailModel::new(&small, 100.0, 1.0);
        let x = 40.37;
        let approx = crg_functional(&n, x, &spec).unwrap().value + tail.correction(Complex64::new(x, 0.0));
        let reference = canonical_log_modulus_ratio(&big, 1.0, Complex64::new(x, 0.0))
            + TailModel::new(&big, 400.0, 1.0).correction(Complex64::new(x, 0.0));
        let bar = tail.bar(x, &spec).unwrap();
        assert!((approx - reference).abs() <= bar, "{approx} {reference} {bar}");
    }

    #[test]
    fn ray_system_of_one_ray_matches_single_ray() {
        let spec = QuadSpec::with_tol(1e-11, 1e-11);
        let z = zeros(&[(-1.0, 0.0), (0.3, 2.0), (2.5, 0.0), (-4.0, -1.0)]);
        let rays = RaySystem::new(alloc::vec![0.0]).unwrap();
        let (swept, _) = sweep_ray_system(&z, &rays, 1.0, 0.5, GenusChoice::Fixed(2)).unwrap();
        let f = SystemFunctional { kept: kept_atoms(&swept), swept: &swept, ray: 0, order: 1.0 };
        let n = swept_counting_on_ray(&z, 1.0).unwrap();
        for x in [0.7, 1.9, 6.1] {
            assert_abs_diff_eq!(
                f.phi(x, &spec).unwrap().value,
                crg_functional(&n, x, &spec).unwrap().value,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn two_ray_functional_matches_canonical_product() {
        let spec = QuadSpec::with_tol(1e-11, 1e-11);
        let z = zeros(&[(0.5, 1.5), (-2.0, 0.7), (1.0, -3.0), (-0.5, -0.8)]);
        let rays = RaySystem::new(alloc::vec![0.0, PI]).unwrap();
        let (swept, _) = sweep_ray_system(&z, &rays, 1.0, 0.1, GenusChoice::Fixed(1)).unwrap();
        for ray in 0..2 {
            let f = SystemFunctional { kept: kept_atoms(&swept), swept: &swept, ray, order: 1.0 };
            let theta = rays.angles()[ray];
            for r in [0.9, 3.3] {
                let got = f.phi(r, &spec).unwrap().value;
                let want = canonical_log_modulus_ratio(&z, 1.0, Complex64::from_polar(r, theta));
                assert_abs_diff_eq!(got, want, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn empty_charge_on_rays_is_zero() {
        let cfg = CrgConfig::new(1.0, 100.0, 40);
        let rays = RaySystem::new(alloc::vec![0.0, 2.0]).unwrap();
        let traces =
            crg_check_ray_system(&Sequential, &DiscreteCharge::empty(), 1.0, &rays, 1.0, GenusChoice::Auto, &cfg)
                .unwrap();
        for t in traces {
            assert!(t.phi.iter().all(|v| *v == 0.0));
            assert_eq!(t.verdict, CrgVerdict::Crg);
        }
    }
}
