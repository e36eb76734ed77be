use std::f64::consts::{PI, TAU};

use degcert_core::certificates::{ball_certificate, homotopy_check};
use degcert_core::sphere::{chordal_dist, make_grid, normalize};
use degcert_core::{
    degree, degree_numeric, is_perfect_power, parse, CertifyOutcome, DegreeParams, Dim, MapExpr,
    SpherePoint,
};
use proptest::prelude::*;

fn circle_leaf() -> impl Strategy<Value = MapExpr> {
    prop_oneof![
        (-5i64..=5).prop_map(MapExpr::pow),
        (0.0..TAU).prop_map(|a| MapExpr::rot(a).unwrap()),
        Just(MapExpr::Conj),
        Just(MapExpr::id(Dim::One)),
        Just(MapExpr::antipode(Dim::One)),
    ]
}

fn circle_map() -> impl Strategy<Value = MapExpr> {
    circle_leaf().prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, g)| MapExpr::compose(f, g).unwrap()),
            (0u32..=3, inner.clone()).prop_map(|(n, f)| MapExpr::iterate(n, f)),
            (any::<u64>(), 0.0..0.9, inner)
                .prop_map(|(s, e, f)| MapExpr::perturb(s, e, f).unwrap()),
        ]
    })
}

fn sphere_map() -> impl Strategy<Value = MapExpr> {
    let leaf = prop_oneof![
        circle_leaf().prop_map(|f| MapExpr::susp(f).unwrap()),
        Just(MapExpr::id(Dim::Two)),
        Just(MapExpr::antipode(Dim::Two)),
        (prop::array::uniform3(-1.0..1.0f64), 0.0..TAU)
            .prop_filter_map("zero axis", |(a, t)| { MapExpr::rot3(a, t).ok() }),
    ];
    leaf.prop_recursive(2, 4, 2, |inner| {
        (inner.clone(), inner).prop_map(|(f, g)| MapExpr::compose(f, g).unwrap())
    })
}

fn sphere_point() -> impl Strategy<Value = SpherePoint> {
    (-1.0..=1.0f64, 0.0..TAU).prop_map(|(z, a)| SpherePoint::on_sphere(z.acos(), a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_scale_invariant(v in prop::array::uniform3(-10.0..10.0f64), s in 0.01..100.0f64) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let a = normalize(&v).unwrap();
        let b = normalize(&v.map(|x| x * s)).unwrap();
        prop_assert!(chordal_dist(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn chordal_metric_axioms(p in sphere_point(), q in sphere_point(), r in sphere_point()) {
        let d = |a: &SpherePoint, b: &SpherePoint| chordal_dist(a, b).unwrap();
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
        prop_assert!(d(&p, &q) <= 2.0 + 1e-12);
        prop_assert!(d(&p, &p) == 0.0);
    }

    #[test]
    fn grid_weights_sum_to_volume(n in 8usize..1024) {
        for dim in [Dim::One, Dim::Two] {
            let g = make_grid(dim, n).unwrap();
            let total: f64 = g.weights().iter().sum();
            prop_assert!((total - dim.volume()).abs() < 1e-9, "{dim:?} {n}: {total}");
        }
    }

    #[test]
    fn render_parse_round_trip(e in circle_map()) {
        let back = parse(&e.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), e.to_string());
        prop_assert_eq!(back, e);
    }

    #[test]
    fn sphere_render_parse_round_trip(e in sphere_map()) {
        prop_assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn images_are_unit(e in circle_map(), a in 0.0..TAU) {
        let y = e.evaluate(&SpherePoint::on_circle(a)).unwrap();
        let n: f64 = y.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn symbolic_degree_is_multiplicative(f in circle_map(), g in circle_map()) {
        let (df, dg) = (f.symbolic_degree(), g.symbolic_degree());
        let fg = MapExpr::compose(f, g).unwrap().symbolic_degree();
        if let (Some(a), Some(b)) = (df, dg) {
            prop_assert_eq!(fg, a.checked_mul(b));
        }
    }

    #[test]
    fn perfect_power_witness_is_exact(d in any::<i64>()) {
        if let Some(w) = is_perfect_power(d) {
            prop_assert!(w.exp >= 2);
            prop_assert!(w.holds_for(d));
            // No smaller exponent works.
            for n in 2..w.exp {
                if d < 0 && n % 2 == 0 {
                    continue;
                }
                let r = (d.unsigned_abs() as f64).powf(1.0 / n as f64).round() as i128;
                for k in (r - 1).max(0)..=r + 1 {
                    let k = if d < 0 { -k } else { k };
                    prop_assert!(k.checked_pow(n) != Some(d as i128), "{d} = {k}^{n}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn numeric_degree_is_multiplicative(f in circle_map(), g in circle_map()) {
        let mut p = DegreeParams::default();
        p.circle.max = 1 << 22;
        let df = degree_numeric(&f, &p).unwrap().value;
        let dg = degree_numeric(&g, &p).unwrap().value;
        let fg = MapExpr::compose(f, g).unwrap();
        prop_assert_eq!(degree_numeric(&fg, &p).unwrap().value, df * dg);
    }

    #[test]
    fn numeric_matches_symbolic_on_s2(e in sphere_map()) {
        let r = degree_numeric(&e, &DegreeParams::default()).unwrap();
        prop_assert_eq!(Some(r.value), e.symbolic_degree());
    }

    #[test]
    fn perturbation_keeps_degree(seed in any::<u64>(), eps in 0.0..=0.9f64, k in -5i64..=5) {
        let f = MapExpr::pow(k);
        let g = MapExpr::perturb(seed, eps, f.clone()).unwrap();
        let h = homotopy_check(&f, &g, 512, 16).unwrap();
        prop_assert!(h.valid);
        let p = DegreeParams::default();
        prop_assert_eq!(degree_numeric(&g, &p).unwrap().value, k);
    }

    #[test]
    fn refining_resolution_keeps_the_degree(e in circle_map()) {
        let p = DegreeParams::default();
        let Ok(r) = degree_numeric(&e, &p) else { return Ok(()) };
        let mut finer = p;
        finer.circle.initial = 2 * r.resolution;
        finer.circle.max = 8 * r.resolution;
        prop_assert_eq!(degree_numeric(&e, &finer).unwrap().value, r.value);
    }
}

#[test]
fn iterate_law_on_both_spheres() {
    let p = DegreeParams::default();
    for f in [
        "(pow 2)",
        "(pow -3)",
        "(compose (rot 1) (conj))",
        "(susp (pow -2))",
    ] {
        let f = parse(f).unwrap();
        let d = degree_numeric(&f, &p).unwrap().value;
        for n in 0..=3 {
            let it = MapExpr::iterate(n, f.clone());
            assert_eq!(degree_numeric(&it, &p).unwrap().value, d.pow(n), "{it}");
        }
    }
}

#[test]
fn ball_certificates_are_consistent() {
    let p = DegreeParams::default();
    for (base, subject) in [
        ("(pow 2)", "(perturb 11 0.6 (pow 2))"),
        ("(pow 3)", "(compose (rot 0.2) (pow 3))"),
        ("(susp (pow 2))", "(perturb 5 0.5 (susp (pow 2)))"),
    ] {
        let (f0, g) = (parse(base).unwrap(), parse(subject).unwrap());
        let res = if f0.dimension() == Dim::One { 1024 } else { 64 };
        let CertifyOutcome::Certificate(c) = ball_certificate(&f0, &g, &p, res).unwrap() else {
            panic!("{subject}: refused");
        };
        let ball = c.ball.as_ref().unwrap();
        assert_eq!(ball.consistency_degree, c.degree.value);
        assert_eq!(degree(&g, &p).unwrap().value, c.degree.value);
        // A finer grid still finds the subject inside the ball.
        let finer = ball_certificate(&f0, &g, &p, 2 * res).unwrap();
        let fb = finer.certificate().unwrap().ball.as_ref().unwrap();
        assert!(fb.sampled_distance < 1.0);
        assert!(c.audit().is_ok());
    }
}

#[test]
fn half_turn_rotation_is_not_within_the_ball() {
    // Rotating z² by π puts every image antipodal to the base.
    let f0 = parse("(pow 2)").unwrap();
    let g = MapExpr::compose(MapExpr::rot(PI).unwrap(), f0.clone()).unwrap();
    let err = ball_certificate(&f0, &g, &DegreeParams::default(), 1024).unwrap_err();
    assert_eq!(err.kind(), "DistanceTooLarge");
}
