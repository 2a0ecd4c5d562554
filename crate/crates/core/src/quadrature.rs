//! Adaptive Gauss-Kronrod integration with principal values and improper tails.
//!
//! The engine is a global adaptive bisection over 21-point Kronrod panels
//! with the classical QUADPACK error rescaling. Panels never evaluate their
//! endpoints, so integrable endpoint singularities of logarithmic or
//! algebraic type are handled by refinement alone.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

/// Tolerances and limits for one quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of live panels in one adaptive run.
    pub max_panels: usize,
    /// Length of the excision sequence `eps_n = 2^-n * eps_0` used to watch a
    /// principal value settle.
    pub pv_levels: u32,
    /// Known decay exponent `e` with `|f(t)| = O(t^-e)`, required for tails.
    pub tail_exponent: Option<f64>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_panels: 2000, pv_levels: 13, tail_exponent: None }
    }
}

impl QuadSpec {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn with_tail(mut self, exponent: f64) -> Self {
        self.tail_exponent = Some(exponent);
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

impl core::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult { value: 0.0, error: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("no convergence after {panels} panels (value {value}, error {error})")]
    NonConvergence { panels: usize, value: f64, error: f64 },
    #[error("principal value at {x} does not settle under excision")]
    Oscillation { x: f64 },
    #[error("improper integral needs a decay exponent greater than 1")]
    MissingDecay,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_491_770,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, QuadError> {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();

    let eval = |t: f64| -> Result<f64, QuadError> {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { t })
        }
    };

    let fc = eval(centr)?;
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for (j, wg) in WG.iter().enumerate() {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = eval(centr - absc)?;
        let f2 = eval(centr + absc)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += wg * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = eval(centr - absc)?;
        let f2 = eval(centr + absc)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }

    let value = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut error = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (1.0_f64).min((200.0 * error / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel { a, b, value, error })
}

/// Integrate `f` over the finite interval `[a, b]`.
///
/// Returns `a == b` as zero. Reversed bounds are an error rather than a sign
/// flip so that caller mistakes surface early.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult::ZERO);
    }

    let first = kronrod21(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    // Panels too narrow to split further stay here and still count.
    let mut frozen = QuadResult::ZERO;
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);

    loop {
        if error <= spec.target(value) {
            break;
        }
        if heap.len() >= spec.max_panels {
            // The running sums drift; decide on a fresh sum.
            let fresh = heap
                .iter()
                .fold(frozen, |acc, p| QuadResult { value: acc.value + p.value, error: acc.error + p.error });
            if fresh.error <= spec.target(fresh.value) {
                break;
            }
            return Err(QuadError::NonConvergence { panels: heap.len(), value, error });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if (worst.b - worst.a) <= 64.0 * f64::EPSILON * scale || mid <= worst.a || mid >= worst.b {
            frozen.value += worst.value;
            frozen.error += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod21(&f, worst.a, mid)?;
        let right = kronrod21(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from scratch to shed the drift of the running updates.
    let mut total = frozen;
    for p in heap.iter() {
        total.value += p.value;
        total.error += p.error;
    }
    if total.error > spec.target(total.value) && frozen.error > 0.0 {
        return Err(QuadError::NonConvergence { panels: heap.len(), value: total.value, error: total.error });
    }
    Ok(total)
}

/// Integrate `f` over `[a, b]` with extra panel breaks at `breaks`.
///
/// Breaks outside `(a, b)` are ignored. Useful when the integrand has
/// interior kinks or integrable singularities at known places.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut total = QuadResult::ZERO;
    let mut lo = a;
    for &c in cuts.iter().chain(core::iter::once(&b)) {
        total = total + integrate(&f, lo, c, spec)?;
        lo = c;
    }
    Ok(total)
}

/// Integrate `f` over `[a, +inf)` using the caller's decay exponent.
///
/// The range is covered by doubling segments. After each segment the
/// amplitude `C = max |f(t)| t^e` is sampled on its upper half and the
/// remaining tail bound `C R^(1-e) / (e-1)` is compared against half the
/// tolerance; the final bound is folded into the error estimate.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    let e = match spec.tail_exponent {
        Some(e) if e > 1.0 => e,
        _ => return Err(QuadError::MissingDecay),
    };
    if !a.is_finite() {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY });
    }
    let seg_spec = QuadSpec { abs_tol: spec.abs_tol / 8.0, ..*spec };
    let mut lo = a;
    let mut hi = if a > 0.0 { (2.0 * a).max(1.0) } else { (a + 1.0).max(1.0) };
    let mut total = QuadResult::ZERO;
    // The amplitude is sampled, so one lucky segment is not enough to stop.
    let mut settled = 0;
    for _ in 0..256 {
        total = total + integrate(&f, lo, hi, &seg_spec)?;
        let mut amp: f64 = 0.0;
        for k in 0..8 {
            let s = hi * (0.5 + 0.5 * (k as f64 + 0.5) / 8.0);
            if s > lo {
                amp = amp.max(f(s).abs() * s.powf(e));
            }
        }
        let amp = amp.max(f(hi).abs() * hi.powf(e));
        let tail = amp * hi.powf(1.0 - e) / (e - 1.0);
        if tail <= 0.5 * spec.target(total.value) {
            settled += 1;
            if settled == 2 {
                total.error += tail;
                return Ok(total);
            }
        } else {
            settled = 0;
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(QuadError::NonConvergence { panels: 256, value: total.value, error: total.error })
}

/// Integrate `f` over the whole real line, splitting at `center`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, center: f64, spec: &QuadSpec) -> Result<QuadResult, QuadError> {
    let right = integrate_to_infinity(&f, center, spec)?;
    let left = integrate_to_infinity(|s| f(-s), -center, spec)?;
    Ok(right + left)
}

/// Cauchy principal value of `PV int_a^b f`, `f(t) = g(t)/(x - t)`.
///
/// The symmetric part of the window around `x` is folded,
/// `f(x-u) + f(x+u)`, which cancels the pole and leaves an integrable
/// function of `u`; its integral over `[0, delta]` is the excision limit.
/// The excision sequence `eps_n = 2^-n eps_0`, `eps_0 = min((b-a)/8, delta)`,
/// is then walked to confirm that the excised integrals settle: their
/// increments must shrink, otherwise the call fails with
/// [`QuadError::Oscillation`].
pub fn principal_value<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    a: f64,
    b: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    if !(a < x && x < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let delta = (x - a).min(b - x);
    let folded = |u: f64| f(x - u) + f(x + u);

    let mut total = integrate(folded, 0.0, delta, spec)?;
    if x - delta > a {
        total = total + integrate(&f, a, x - delta, spec)?;
    }
    if x + delta < b {
        total = total + integrate(&f, x + delta, b, spec)?;
    }

    let levels = spec.pv_levels.max(8) as usize;
    let eps0 = ((b - a) / 8.0).min(delta);
    let piece_spec = QuadSpec { abs_tol: spec.abs_tol / levels as f64, ..*spec };
    let mut increments = Vec::with_capacity(levels);
    let mut eps = eps0;
    for _ in 1..levels {
        let next = 0.5 * eps;
        // Round-off in the folded sum can stall a piece short of its
        // tolerance; the diagnostic only needs the magnitude.
        let piece = match integrate(folded, next, eps, &piece_spec) {
            Ok(r) => r.value,
            Err(QuadError::NonConvergence { value, .. }) => value,
            Err(e) => return Err(e),
        };
        increments.push(piece.abs());
        eps = next;
    }
    let last = increments[increments.len() - 1];
    let earlier = increments[increments.len() - 7];
    if last > spec.target(total.value) && last >= 0.9 * earlier {
        return Err(QuadError::Oscillation { x });
    }
    Ok(total)
}

/// Principal value over `[a, +inf)`, the pole at `x > a`.
///
/// The window `[a, 2x - a]` is symmetric about the pole; the remainder is an
/// ordinary improper integral governed by `spec.tail_exponent`.
pub fn principal_value_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    a: f64,
    spec: &QuadSpec,
) -> Result<QuadResult, QuadError> {
    let b = 2.0 * x - a;
    let near = principal_value(&f, x, a, b, spec)?;
    let far = integrate_to_infinity(&f, b, spec)?;
    Ok(near + far)
}
