use liouville::correlators::ln_selberg_closed_form;
use liouville::dozz::*;
use liouville::special_fn::UpsilonConfig;
use liouville::sphere_geom::{conformal_weight, LiouvilleParams};
use liouville::{Complex64, Error};
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cfg() -> UpsilonConfig {
    UpsilonConfig::default()
}

fn three(b: f64, mu: f64, a: f64, w: u32) -> (LiouvilleParams, [Complex64; 3]) {
    let p = LiouvilleParams::new(b, mu).unwrap();
    let a3 = p.q - 2.0 * a - b * w as f64;
    (p, [c(a), c(a), c(a3)])
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn agrees_with_screening_closed_form() {
    for (b, mu, a, w) in [(0.9, 1.0, -0.35, 1u32), (0.6, 1.0, -0.55, 2), (0.6, 2.5, -0.8, 2), (0.4, 0.7, -0.9, 2)] {
        let (p, al) = three(b, mu, a, w);
        let sc = structure_constant(&p, al, &cfg()).unwrap();
        assert_eq!(sc.w, w);
        let wf = w as f64;
        let ln_wfact: f64 = (1..=w).map(|k| (k as f64).ln()).sum();
        let pref = Complex64::new(wf * mu.ln() - ln_wfact + (1.0 - 1.0 / (b * b)) * (4f64.ln() - 1.0), -PI * wf);
        let want = (pref + ln_selberg_closed_form(b, al, w).unwrap().unwrap()).exp();
        assert!(rel(sc.value, want) < 1e-8, "b={b} w={w}: {} vs {want}", sc.value);
        let refl = structure_constant_reflected(&p, al, &cfg()).unwrap();
        assert!(rel(refl, sc.value) < 1e-8);
    }
}

#[test]
fn factors_reassemble() {
    let (p, al) = three(0.9, 1.0, -0.35, 1);
    let sc = structure_constant(&p, al, &cfg()).unwrap();
    let f = sc.factors;
    let l = f.phase + f.gamma_power + f.four_over_e + f.b_power + f.upsilon_numerator - f.upsilon_denominator;
    assert!((l - sc.log_value).norm() < 1e-14);
    assert!((f.phase.im + PI).abs() < 1e-15);
}

#[test]
fn non_neutral_rejected() {
    let (p, al) = three(0.9, 1.0, -0.35, 1);
    let r = structure_constant(&p, [al[0], al[1], al[2] + 0.2], &cfg());
    assert!(matches!(r, Err(Error::NotNeutral(_))));
}

#[test]
fn three_point_scaling_and_infinity_limit() {
    let (p, al) = three(0.9, 1.0, -0.3, 1);
    let al = [al[0] + 0.1, al[1] - 0.05, al[2] - 0.05];
    let d: Vec<Complex64> = al.iter().map(|a| conformal_weight(&p, *a)).collect();
    let z = [c(0.0), c(1.0), Complex64::new(0.4, 1.3)];
    let l1 = ln_three_point(&p, al, z, &cfg()).unwrap();
    let l2 = ln_three_point(&p, al, z.map(|x| 2.0 * x), &cfg()).unwrap();
    let sum: Complex64 = d.iter().sum();
    assert!((l2 - l1 - 2.0 * sum * 2f64.ln()).norm() < 1e-12);
    let sc = structure_constant(&p, al, &cfg()).unwrap();
    let mut prev = f64::INFINITY;
    for r in [1e2, 1e4, 1e6] {
        let l = ln_three_point(&p, al, [c(0.0), c(1.0), c(r)], &cfg()).unwrap() - 4.0 * d[2] * r.ln();
        let err = (l - sc.log_value).norm();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 1e-5);
    assert_eq!(
        ln_three_point(&p, al, [c(0.0), c(1.0), c(1.0)], &cfg()).unwrap_err(),
        Error::CoincidentInsertions
    );
}

#[test]
fn mobius_examples() {
    let f = MobiusMap::new(c(2.0), c(1.0), c(1.0), c(1.0)).unwrap();
    let z = Complex64::new(0.5, 0.5);
    assert!((mobius_apply(&f, z).unwrap() - (2.0 * z + 1.0) / (z + 1.0)).norm() < 1e-15);
    assert!((mobius_derivative(&f, z).unwrap() - 1.0 / ((z + 1.0) * (z + 1.0))).norm() < 1e-15);
    assert_eq!(mobius_apply(&f, c(-1.0)), Err(Error::PoleOfMap));
    assert!(MobiusMap::new(c(1.0), c(2.0), c(2.0), c(4.0)).is_err());
}

#[test]
fn covariance_identity_map() {
    let (p, al) = three(0.9, 1.0, -0.35, 1);
    let r = sl2c_residual(&p, &al, &[c(0.0), c(1.0), c(3.0)], &MobiusMap::identity(), &Sl2cMode::ClosedForm(cfg())).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn pole_blow_up() {
    let b = 1.0 / PI.sqrt();
    let p = LiouvilleParams::new(b, 1.0).unwrap();
    let edge = -1.0 / (2.0 * b);
    let a2 = -b / 2.0 - 1.0 / (4.0 * b);
    assert!(pole_condition(&p, 1, edge, a2).is_some());
    // distances 0.1 down to 1e-3, geometric
    let dist: Vec<f64> = (0..=10).map(|k| 0.1 * 0.01f64.powf(k as f64 / 10.0)).collect();
    let mags: Vec<f64> = dist
        .iter()
        .map(|d| continued_cw(&p, 1, c(edge + d), c(a2), &cfg()).unwrap().value.norm())
        .collect();
    for k in mags.len() - 5..mags.len() {
        assert!(mags[k] > mags[k - 1], "{mags:?}");
    }
    // simple pole: distance·|C| settles to the residue
    let r1 = dist[10] * mags[10];
    let r2 = dist[9] * mags[9];
    assert!((r1 - r2).abs() < 0.02 * r1, "{r1} {r2}");
    assert!(mags[10] > 30.0 * mags[0]);
}

#[test]
fn pole_scan_grids() {
    let b = 1.0 / PI.sqrt();
    let p = LiouvilleParams::new(b, 1.0).unwrap();
    let a1 = -1.0 / (2.0 * b);
    let a2 = -b / 2.0 - 1.0 / (4.0 * b);
    let grid = ScanGrid { alpha1_min: a1, alpha1_max: a1 + 0.3, n1: 4, alpha2_min: a2, alpha2_max: a2 + 0.2, n2: 3 };
    let hits = pole_scan(&p, 2, &grid);
    assert!(hits.iter().any(|h| (h.alpha1 - a1).abs() < 1e-15 && (h.alpha2 - a2).abs() < 1e-15));
    let empty = ScanGrid { n1: 0, ..grid };
    assert!(pole_scan(&p, 2, &empty).is_empty());
    assert!(pole_condition(&p, 40, a1, a2).is_none());
}

#[test]
fn continuation_region() {
    let p = LiouvilleParams::new(0.9, 1.0).unwrap();
    assert!(matches!(continued_cw(&p, 2, c(-0.3), c(-0.3), &cfg()), Err(Error::RegionViolated(_))));
    assert!(matches!(continued_cw(&p, 0, c(-0.3), c(-0.3), &cfg()), Err(Error::RegionViolated(_))));
    assert!(continued_cw(&p, 1, c(-0.3), c(-0.3), &cfg()).is_ok());
}

fn mobius() -> impl Strategy<Value = MobiusMap> {
    proptest::array::uniform8(-2.0f64..2.0).prop_filter_map("degenerate", |v| {
        let m = MobiusMap::new(
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        )
        .ok()?;
        let det = Complex64::new(v[0], v[1]) * Complex64::new(v[6], v[7]) - Complex64::new(v[2], v[3]) * Complex64::new(v[4], v[5]);
        (det.norm() > 0.1).then_some(m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn covariance_under_mobius(f in mobius(), a in -0.4f64..-0.1, x in -3.0f64..3.0, y in 0.2f64..3.0) {
        let (p, al) = three(0.9, 1.0, a, 1);
        let z = [c(0.0), c(1.0), Complex64::new(x, y)];
        let r = sl2c_residual(&p, &al, &z, &f, &Sl2cMode::ClosedForm(cfg()));
        prop_assume!(!matches!(r, Err(Error::PoleOfMap)));
        let r = r.unwrap();
        prop_assert!(r < 1e-8, "{r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn permutation_symmetric(b in 0.5f64..0.95, a1 in -0.4f64..0.2, a2 in -0.4f64..0.2, w in 1u32..3) {
        let p = LiouvilleParams::new(b, 1.3).unwrap();
        prop_assume!((w as f64) < 1.0 + 1.0 / (2.0 * b * b));
        let a3 = p.q - a1 - a2 - b * w as f64;
        let al = [c(a1), c(a2), c(a3)];
        let base = structure_constant(&p, al, &cfg());
        prop_assume!(base.is_ok());
        let base = base.unwrap().value;
        for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let v = structure_constant(&p, perm.map(|i| al[i]), &cfg()).unwrap().value;
            prop_assert!((v - base).norm() <= 1e-10 * base.norm());
        }
        let r = structure_constant_reflected(&p, al, &cfg()).unwrap();
        prop_assert!((r - base).norm() <= 1e-8 * base.norm());
    }
}
