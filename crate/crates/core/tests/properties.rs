//! Property-based invariants: group axioms, σ antisymmetry and homogeneity,
//! spectral scaling, ladder-operator algebra, i_E isometry, and quadrature
//! exactness on random inputs.

use nalgebra::DVector;
use nilfourier::frequency::{embed, point_distance, rho_e, unembed};
use nilfourier::group::{GroupElement, GroupSpec};
use nilfourier::hermite::{
    gauss_legendre_rule, hermite_eval, ladder_apply, CoeffVector, LadderKind,
};
use nilfourier::spectral::spectral_decompose;
use num_complex::Complex64;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -5.0f64..5.0
}

fn vec3(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(coord(), n)
}

fn groups() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        Just(GroupSpec::heisenberg(1)),
        Just(GroupSpec::heisenberg(2)),
        Just(GroupSpec::example_4x2()),
    ]
}

proptest! {
    #[test]
    fn group_law_is_associative(g in groups(), seed in proptest::array::uniform3(0u8..)) {
        let m = g.m;
        let p = g.p;
        let mk = |s: u8| {
            GroupElement::new(
                (0..m).map(|i| ((s as f64 + 1.3) * (i as f64 + 0.7)).sin() * 2.0).collect(),
                (0..p).map(|i| ((s as f64 + 2.1) * (i as f64 + 1.9)).cos()).collect(),
            )
        };
        let (w1, w2, w3) = (mk(seed[0]), mk(seed[1]), mk(seed[2]));
        let left = g.multiply(&g.multiply(&w1, &w2).unwrap(), &w3).unwrap();
        let right = g.multiply(&w1, &g.multiply(&w2, &w3).unwrap()).unwrap();
        prop_assert!((left.z - right.z).amax() < 1e-12);
        prop_assert!((left.s - right.s).amax() < 1e-12);
    }

    #[test]
    fn inverse_cancels(g in groups(), z in vec3(4), s in vec3(2)) {
        let w = GroupElement::new(z[..g.m].to_vec(), s[..g.p].to_vec());
        let e = g.multiply(&w, &g.inverse(&w)).unwrap();
        prop_assert!(e.z.amax() < 1e-12 && e.s.amax() < 1e-12);
    }

    #[test]
    fn sigma_is_antisymmetric_and_bilinear(g in groups(), z1 in vec3(4), z2 in vec3(4), c in -3.0f64..3.0) {
        let a = DVector::from_column_slice(&z1[..g.m]);
        let b = DVector::from_column_slice(&z2[..g.m]);
        let ab = g.sigma(&a, &b).unwrap();
        let ba = g.sigma(&b, &a).unwrap();
        prop_assert!((&ab + &ba).amax() < 1e-12);
        let scaled = g.sigma(&(&a * c), &b).unwrap();
        prop_assert!((&scaled - &ab * c).amax() < 1e-9);
        prop_assert!(g.sigma(&a, &a).unwrap().amax() < 1e-12);
    }

    #[test]
    fn spectral_frequencies_are_homogeneous(lam in 0.05f64..4.0, c in 0.1f64..5.0) {
        // η_j(cλ) = c·η_j(λ) for the Heisenberg group and the 4×2 example
        for g in [GroupSpec::heisenberg(2), GroupSpec::example_4x2()] {
            let lv: Vec<f64> = (0..g.p).map(|k| lam + 0.3 * k as f64).collect();
            let sv: Vec<f64> = lv.iter().map(|v| v * c).collect();
            let s1 = spectral_decompose(&g, &lv, g.m / 2, 1e-10).unwrap();
            let s2 = spectral_decompose(&g, &sv, g.m / 2, 1e-10).unwrap();
            for j in 0..s1.d {
                prop_assert!((s2.eta[j] - c * s1.eta[j]).abs() < 1e-8 * (1.0 + c * s1.eta[j]));
            }
        }
    }

    #[test]
    fn adapted_coordinates_are_isometric(lam in 0.05f64..4.0, z in vec3(4)) {
        let g = GroupSpec::heisenberg(2);
        let spec = spectral_decompose(&g, &[lam], 2, 1e-10).unwrap();
        let v = DVector::from_column_slice(&z[..4]);
        let u = spec.to_adapted(&v);
        prop_assert!((u.norm() - v.norm()).abs() < 1e-10);
        prop_assert!((spec.from_adapted(&u) - &v).amax() < 1e-10);
    }

    #[test]
    fn embed_unembed_roundtrip_and_isometry(lam in 0.05f64..4.0, n1 in 0usize..12, m1 in 0usize..12, n2 in 0usize..12, m2 in 0usize..12) {
        let g = GroupSpec::heisenberg(1);
        let spec = spectral_decompose(&g, &[lam], 1, 1e-10).unwrap();
        let p1 = embed(&[n1], &[m1], &spec).unwrap();
        let p2 = embed(&[n2], &[m2], &spec).unwrap();
        prop_assert_eq!(unembed(&p1, &spec).unwrap(), (vec![n1], vec![m1]));
        // ρ_E equals the distance between the embedded points
        let d1 = rho_e(&[n1], &[m1], &spec, &[n2], &[m2], &spec);
        let d2 = point_distance(&p1, &p2);
        prop_assert!((d1 - d2).abs() < 1e-10 * (1.0 + d1));
    }

    #[test]
    fn ladder_algebra(n in 0usize..24) {
        // M = (A + C)/2 and D = (A − C)/2 on basis vectors
        let v = CoeffVector::basis(n);
        let a = ladder_apply(LadderKind::Annihilate, &v);
        let c = ladder_apply(LadderKind::Create, &v);
        let m = ladder_apply(LadderKind::Multiply, &v);
        let d = ladder_apply(LadderKind::Differentiate, &v);
        let len = c.coeffs.len();
        for k in 0..len {
            let av = a.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            let cv = c.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            let mv = m.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            let dv = d.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            prop_assert!(((av + cv) / 2.0 - mv).norm() < 1e-13);
            prop_assert!(((av - cv) / 2.0 - dv).norm() < 1e-13);
        }
        // [A, C] = 2·Id
        let ca = ladder_apply(LadderKind::Create, &a);
        let ac = ladder_apply(LadderKind::Annihilate, &c);
        let diff = ac.coeffs[n] - ca.coeffs.get(n).copied().unwrap_or(Complex64::ZERO);
        prop_assert!((diff - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hermite_functions_are_bounded(n in 0usize..200, x in -20.0f64..20.0) {
        // Cramér: |H_n(x)| <= π^{−1/4}
        let v = hermite_eval(n, x);
        prop_assert!(v.abs() <= std::f64::consts::PI.powf(-0.25) + 1e-12);
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials(deg in 0usize..12, a in -3.0f64..0.0, b in 0.5f64..3.0) {
        // an (deg/2 + 1)-node rule integrates x^deg exactly
        let rule = gauss_legendre_rule(deg / 2 + 1, a, b).unwrap();
        let v = rule.integrate(|x| Complex64::new(x.powi(deg as i32), 0.0));
        let exact = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg as f64 + 1.0);
        prop_assert!((v.re - exact).abs() < 1e-10 * (1.0 + exact.abs()));
    }
}
