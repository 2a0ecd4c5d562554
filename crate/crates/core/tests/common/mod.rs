//! Reference routines shared by the integration tests. They are kept
//! separate from the library quadrature so that each comparison runs
//! through two independent code paths.
#![allow(dead_code)]

use balayage_core::measures::{ComplexAtom, DiscreteCharge};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite 16-point Gauss-Legendre rule with `panels` equal panels.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for &(x, w) in &rule {
            s += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

/// Composite rule on a geometric partition of [a, b], suited to integrands
/// with an integrable singularity at `a` or rapid variation near it.
pub fn geometric(f: impl Fn(f64) -> f64, a: f64, b: f64, levels: usize, per_level: usize) -> f64 {
    let mut s = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = a + 0.5 * (hi - a);
        s += composite(&f, lo, hi, per_level);
        hi = lo;
    }
    s
}

pub fn atom(re: f64, im: f64, mass: f64) -> ComplexAtom {
    ComplexAtom::new(re, im, mass)
}

pub fn charge(atoms: Vec<ComplexAtom>, r0: Option<f64>) -> DiscreteCharge {
    DiscreteCharge::new(atoms, r0).unwrap()
}

/// Point in the upper half-plane with modulus in `[rmin, rmax]`.
pub fn upper_point(rmin: f64, rmax: f64) -> impl Strategy<Value = (f64, f64)> {
    (rmin..rmax, 0.05..(PI - 0.05)).prop_map(|(r, th)| (r * th.cos(), r * th.sin()))
}

/// Charge of 1..8 atoms in the annulus `rmin <= |z| <= rmax` of the upper
/// half-plane, with masses in `mass`.
pub fn upper_charge(rmin: f64, rmax: f64, mass: std::ops::Range<f64>) -> impl Strategy<Value = DiscreteCharge> {
    prop::collection::vec((upper_point(rmin, rmax), mass), 1..8).prop_map(move |v| {
        let atoms = v.into_iter().map(|((x, y), m)| atom(x, y, if m == 0.0 { 1.0 } else { m })).collect();
        charge(atoms, Some(rmin))
    })
}

/// Charge of 1..8 atoms anywhere in the annulus, any argument.
pub fn plane_charge(rmin: f64, rmax: f64, mass: std::ops::Range<f64>) -> impl Strategy<Value = DiscreteCharge> {
    prop::collection::vec((rmin..rmax, 0.0..(2.0 * PI), mass), 1..8).prop_map(move |v| {
        let atoms =
            v.into_iter().map(|(r, th, m)| atom(r * th.cos(), r * th.sin(), if m == 0.0 { 1.0 } else { m })).collect();
        charge(atoms, Some(rmin))
    })
}
