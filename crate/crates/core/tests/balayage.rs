mod common;

use balayage_core::balayage::*;
use balayage_core::kernels::{poisson_kernel, AngleSpec};
use balayage_core::measures::{DiscreteCharge, RaySystem};
use balayage_core::quadrature::QuadSpec;
use balayage_core::Complex64;
use common::{atom, charge, plane_charge, upper_charge, upper_point};
use proptest::prelude::*;
use std::f64::consts::PI;

fn spec() -> QuadSpec {
    QuadSpec::with_tol(1e-11, 1e-11)
}

#[test]
fn quarter_ray_system_conserves_mass() {
    let z = charge(vec![atom(1.0, 2.0, 1.0), atom(-3.0, 0.5, 2.0), atom(0.5, -0.7, 1.5), atom(-2.0, -2.0, 0.5)], None);
    let rays = RaySystem::new(vec![0.0, PI / 2.0, PI, 1.5 * PI]).unwrap();
    let (swept, plan) = sweep_ray_system(&z, &rays, 1.0, 1.0, GenusChoice::Auto).unwrap();
    assert!(plan.angles.iter().all(|a| a.genus == 0));
    let mass = swept.total_mass_by_quadrature(&spec()).unwrap();
    assert!((mass - 5.0).abs() < 1e-8, "{mass}");
}

#[test]
fn finite_charge_has_type_zero() {
    let z = charge(vec![atom(0.0, 2.0, 1.0)], Some(1.0));
    let grid: Vec<f64> = (0..24).map(|i| 10f64.powf(-1.0 + 4.0 * i as f64 / 23.0)).collect();
    let report = growth_verdict_swept(&z, 0.7, 0, &grid, &spec()).unwrap();
    assert_eq!(report.verdict.type_estimate, Some(0.0));
}

#[test]
fn local_estimate_ratio_is_bounded_on_a_power_family() {
    // Atoms at k^{1/p} e^{i pi/3}: counting function ~ r^p; the ratio of
    // the local distribution estimate stays bounded along t.
    let p = 1.5;
    let atoms = (1..=400).map(|k| {
        let r = (k as f64).powf(1.0 / p);
        atom(r * (PI / 3.0).cos(), r * (PI / 3.0).sin(), 1.0)
    });
    let z = charge(atoms.collect(), Some(0.5));
    let ratios: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
        .iter()
        .map(|&t| local_estimate_terms(&z, p, t, 0.5, 0.5, &spec()).unwrap().ratio())
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && max / min.max(1e-12) < 100.0, "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn genus_zero_half_plane_is_a_probability(z in upper_charge(0.2, 5.0, 0.1..3.0)) {
        let swept = sweep_halfplane(&z, 0).unwrap();
        let mass = swept.total_mass_by_quadrature(&spec()).unwrap();
        let source: f64 = z.atoms().iter().map(|a| a.mass).sum();
        prop_assert!((mass - source).abs() <= 1e-8 * source.max(1.0));
        for i in 0..200 {
            let t = -50.0 + i as f64 * 0.5;
            let ray = if t >= 0.0 { 0 } else { 1 };
            prop_assert!(swept.density(ray, t.abs()).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn genus_zero_angle_conserves_mass(z in plane_charge(0.2, 5.0, 0.1..3.0), alpha in 0.0..PI, width in 0.3..(2.0 * PI)) {
        let angle = AngleSpec::new(alpha, alpha + width).unwrap();
        let swept = sweep_angle(&z, &angle, 0).unwrap();
        let mass = swept.total_mass_by_quadrature(&spec()).unwrap();
        let kept: f64 = swept.off_ray.iter().map(|a| a.mass).sum::<f64>()
            + swept.rays.iter().flat_map(|r| r.retained.iter().map(|(_, m)| *m)).sum::<f64>();
        let inside: f64 = z.atoms().iter().filter(|a| angle.contains(a.position)).map(|a| a.mass).sum();
        prop_assert!((mass - kept - inside).abs() <= 1e-8 * (1.0 + inside));
    }

    #[test]
    fn genus_zero_ray_system_conserves_mass(z in plane_charge(0.2, 5.0, 0.1..3.0), p in 0.2..2.0f64, k in 1usize..5, twist in 0.0..1.0f64) {
        let angles: Vec<f64> = (0..k).map(|j| twist + 2.0 * PI * j as f64 / k as f64).collect();
        let rays = RaySystem::new(angles).unwrap();
        let (swept, _) = sweep_ray_system(&z, &rays, p, 0.1, GenusChoice::Fixed(0)).unwrap();
        let mass = swept.total_mass_by_quadrature(&spec()).unwrap();
        let total: f64 = z.atoms().iter().map(|a| a.mass).sum();
        prop_assert!((mass - total).abs() <= 1e-8 * total.max(1.0), "{mass} vs {total}");
    }

    #[test]
    fn lower_half_plane_is_untouched(z in plane_charge(0.2, 5.0, -2.0..2.0), q in 0u32..4) {
        let swept = sweep_halfplane(&z, q).unwrap();
        let lower: Vec<_> = z.atoms().iter().copied().filter(|a| a.position.im < 0.0).collect();
        prop_assert_eq!(&swept.off_ray, &lower);
    }

    #[test]
    fn sweep_is_linear(a in upper_charge(0.2, 5.0, -2.0..2.0), b in upper_charge(0.2, 5.0, -2.0..2.0), q in 0u32..4, t in 0.0..20.0f64) {
        let sa = sweep_halfplane(&a, q).unwrap();
        let sb = sweep_halfplane(&b, q).unwrap();
        let sab = sweep_halfplane(&a.union(&b), q).unwrap();
        for ray in 0..2 {
            let sum = sa.density(ray, t).unwrap() + sb.density(ray, t).unwrap();
            let joint = sab.density(ray, t).unwrap();
            prop_assert!((sum - joint).abs() <= 1e-13 * (1.0 + sum.abs()));
        }
    }

    #[test]
    fn density_is_a_kernel_superposition(z in upper_charge(0.2, 5.0, -2.0..2.0), q in 0u32..4, t in -20.0..20.0f64) {
        let swept = sweep_halfplane(&z, q).unwrap();
        let oracle: f64 = z.atoms().iter().map(|a| a.mass * poisson_kernel(q, t, a.position).unwrap()).sum();
        let got = swept.density(if t >= 0.0 { 0 } else { 1 }, t.abs()).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-13 * (1.0 + oracle.abs()));
    }

    #[test]
    fn half_plane_angle_agrees_with_half_plane(z in plane_charge(0.2, 5.0, -2.0..2.0), q in 0u32..4, t in 0.0..20.0f64) {
        let angle = AngleSpec::new(0.0, PI).unwrap();
        let inner = z.with_inner_gap(Some(0.1)).unwrap();
        let a = sweep_angle(&inner, &angle, q).unwrap();
        let h = sweep_halfplane(&z, q).unwrap();
        for ray in 0..2 {
            prop_assert!((a.density(ray, t).unwrap() - h.density(ray, t).unwrap()).abs() <= 1e-12);
            prop_assert!((a.distribution(ray, t).unwrap() - h.distribution(ray, t).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn genus_shift_identity(z in upper_charge(1.0, 2.0, -2.0..2.0), q in 0u32..4) {
        let grid: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
        let residual = genus_shift_identity_check(&z, q, &grid, &spec()).unwrap();
        prop_assert!(residual <= 1e-8, "{residual}");
    }

    #[test]
    fn tail_bound_holds(pts in prop::collection::vec((upper_point(4.0, 40.0), -2.0..2.0f64), 1..50), q in 0u32..4, t1 in -1.0..0.5f64, len in 0.1..0.5f64) {
        let big_t = t1.abs().max((t1 + len).abs());
        let atoms = pts.into_iter().map(|((x, y), m)| {
            let scale = (4.0 * big_t) / Complex64::new(x, y).norm();
            let s = scale.max(1.0);
            atom(x * s, y * s, if m == 0.0 { 1.0 } else { m })
        });
        let z = charge(atoms.collect(), None);
        let report = tail_bound_check(&z, q, t1, t1 + len, 0.25, &spec()).unwrap();
        prop_assert!(report.pass, "{report:?}");
    }

    #[test]
    fn near_origin_decay(z in upper_charge(1.0, 5.0, -2.0..2.0), q in 0u32..3) {
        let report = near_origin_decay_check(&z, q, &spec()).unwrap();
        prop_assert!(report.pass, "{report:?}");
    }
}

#[test]
fn missing_inner_gap_is_rejected_for_angles() {
    let z = charge(vec![atom(1.0, 1.0, 1.0)], None);
    let angle = AngleSpec::new(0.0, PI / 2.0).unwrap();
    assert!(matches!(sweep_angle(&z, &angle, 1), Err(BalayageError::MissingInnerGap)));
    assert!(sweep_angle(&z, &angle, 0).is_ok());
    let _ = DiscreteCharge::empty();
}
