use proptest::prelude::*;

use ahlfors_lab::count::{count_preimages, find_islands, find_roots};
use ahlfors_lab::metric::{area, chordal_distance, MetricProfile, DIAMETER};
use ahlfors_lab::trace::{
    build_preimage_graph, classify_arcs, complement_components, euler_identity, trace_preimage, GraphSpec,
    ImplicitCurve,
};
use ahlfors_lab::verify::{trend_nonincreasing, verify_euler_identity, ReportRow};
use ahlfors_lab::{Complex64, Ext, HoloMap, MapExpr, SpherePoint, SphericalDisk};

/// Source text of a random map: constants, `z`, the four operations,
/// small integer powers and the three functions.
fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("z".to_string()),
        (1u8..9).prop_map(|k| k.to_string()),
        (1u8..9, 1u8..9).prop_map(|(a, b)| format!("{a}.{b}")),
        (1u8..5).prop_map(|k| format!("{k}i")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/({b})")),
            (inner.clone(), -4i32..6).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (prop_oneof![Just("exp"), Just("sin"), Just("cos")], inner).prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

fn sphere_point() -> impl Strategy<Value = SpherePoint> {
    prop_oneof![
        1 => Just(SpherePoint::INFINITY),
        8 => (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| SpherePoint::new(x, y)),
    ]
}

fn finite(v: Result<Ext, impl std::fmt::Debug>) -> Option<Complex64> {
    v.ok().and_then(|v| v.finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_form_reparses_to_same_tree(s in source()) {
        let e = MapExpr::parse(&s).unwrap();
        let again = MapExpr::parse(&e.canonical()).unwrap();
        prop_assert_eq!(e.root(), again.root());
        prop_assert_eq!(e.canonical(), again.canonical());
    }

    #[test]
    fn derivative_matches_central_difference(s in source(), z in point()) {
        let e = MapExpr::parse(&s).unwrap();
        let Ok(m) = HoloMap::new(e) else { return Ok(()) };
        let h = 1e-5;
        let step = Complex64::new(h, 0.0);
        let (Some(d), Some(fp), Some(fm), Some(f0)) = (
            finite(m.eval_deriv(z)),
            finite(m.eval(z + step)),
            finite(m.eval(z - step)),
            finite(m.eval(z)),
        ) else {
            return Ok(());
        };
        // stay away from poles and overflow where the difference is useless
        prop_assume!(f0.norm() < 1e4 && d.norm() < 1e4);
        let fd = (fp - fm) / (2.0 * h);
        prop_assume!((fp - f0).norm() < 1e-2 * (1.0 + f0.norm()));
        prop_assert!((fd - d).norm() <= 1e-4 * (1.0 + d.norm()), "{}: {} vs {}", s, d, fd);
    }

    #[test]
    fn chordal_distance_is_a_bounded_symmetric_metric(p in sphere_point(), q in sphere_point()) {
        prop_assert_eq!(chordal_distance(p, p), 0.0);
        let (d1, d2) = (chordal_distance(p, q), chordal_distance(q, p));
        prop_assert!((d1 - d2).abs() <= 1e-15);
        prop_assert!((0.0..=DIAMETER * (1.0 + 1e-12)).contains(&d1));
    }

    #[test]
    fn disks_below_half_diameter_only(radius in 0.0..DIAMETER) {
        let d = SphericalDisk::new(SpherePoint::new(0.0, 0.0), radius);
        prop_assert_eq!(d.is_ok(), radius > 0.0 && radius < 0.5 * DIAMETER);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn profile_area_nondecreasing_and_length_area_holds(
        map in prop_oneof![Just("z"), Just("z^2 + z"), Just("exp(z)"), Just("sin(z)"), Just("1/(z^2 + 3)")],
        r0 in 0.2..3.0f64,
        growth in 1.05..1.6f64,
    ) {
        let m = HoloMap::parse(map).unwrap();
        let radii: Vec<f64> = (0..5).map(|k| r0 * growth.powi(k)).collect();
        let p = MetricProfile::compute(&m, &radii, 1e-9).unwrap();
        for k in 0..radii.len() {
            prop_assert!(p.a[k] >= 0.0 && p.l[k] >= 0.0);
            if k > 0 {
                prop_assert!(p.a[k] >= p.a[k - 1] - 1e-9);
            }
        }
        for row in ahlfors_lab::metric::cauchy_schwarz_rows(&m, &radii, 1e-9).unwrap() {
            prop_assert!(row.lhs <= row.rhs * (1.0 + 1e-6) + 1e-12, "{:?}", row);
        }
    }

    #[test]
    fn closed_form_area_for_powers(d in 1i32..7, r in 0.3..5.0f64) {
        let m = HoloMap::parse(&format!("z^{d}")).unwrap();
        let p = r.powi(2 * d);
        let exact = d as f64 * p / (1.0 + p);
        let a = area(&m, r, 1e-11).unwrap();
        prop_assert!((a - exact).abs() <= 1e-7 * exact.max(1e-3), "{} vs {}", a, exact);
    }

    #[test]
    fn preimage_counts_of_polynomials(d in 1u32..6, x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let w = Complex64::new(x, y);
        prop_assume!(w.norm() > 0.05);
        let m = HoloMap::parse(&format!("z^{d}")).unwrap();
        // all d roots have modulus |w|^(1/d) < 4
        let n = count_preimages(&m, SpherePoint::finite(w), 4.0).unwrap();
        prop_assert_eq!(n, d as usize);
    }

    #[test]
    fn island_ramification_is_degree_minus_chi(
        d in 1u32..5,
        center in prop_oneof![Just(0.0), Just(1.0), Just(-2.0)],
        radius in 0.06..0.15f64,
    ) {
        // r = 6 keeps the preimage of every such disk inside the margin
        let m = HoloMap::parse(&format!("z^{d}")).unwrap();
        let c = SpherePoint::new(center, 0.0);
        let disk = SphericalDisk::new(c, radius).unwrap();
        let s = find_islands(&m, &disk, 0, 6.0, 512).unwrap();
        let mut degrees = 0u32;
        for isl in &s.islands {
            prop_assert_eq!(isl.ramification as i64, isl.degree as i64 - isl.chi);
            prop_assert!(isl.boundary.iter().all(|z| z.norm() < 6.0));
            degrees += isl.degree;
        }
        let with_multiplicity: u32 = find_roots(&m, c, 6.0).unwrap().iter().map(|q| q.multiplicity).sum();
        prop_assert!(degrees <= with_multiplicity);
        if s.ambiguous.is_empty() {
            prop_assert_eq!(degrees, with_multiplicity);
        }
    }

    #[test]
    fn traced_circle_points_lie_on_the_level(
        map in prop_oneof![Just("z^2"), Just("z^3 - z"), Just("exp(z)")],
        cx in -1.5..1.5f64,
        cy in -1.5..1.5f64,
        radius in 0.05..0.25f64,
    ) {
        let m = HoloMap::parse(map).unwrap();
        let curve = ImplicitCurve::circle(SpherePoint::new(cx, cy), radius).unwrap();
        let Ok(lines) = trace_preimage(&m, &curve, 2.5, 128) else { return Ok(()) };
        for l in &lines {
            for &z in &l.points {
                prop_assert!(z.norm() <= 2.5 * (1.0 + 1e-9));
                let g = curve.level(m.eval(z).unwrap());
                prop_assert!(g.abs() < 1e-6, "level {} at {}", g, z);
            }
        }
        let counts = classify_arcs(&lines, &m, &curve, 2.5, 128);
        prop_assert_eq!(counts.total(), lines.len());
    }

    /// The Euler identity is a property of the traced cell complex, so it
    /// must hold exactly on every trace that succeeds.
    #[test]
    fn euler_identity_on_every_trace(
        map in prop_oneof![Just("z"), Just("z^2 + 0.3"), Just("z^3"), Just("exp(z)"), Just("sin(z)"), Just("(z^2 - 1)/(z + 2)")],
        nx in -0.6..0.6f64,
        ny in 0.2..0.9f64,
        scale in 0.4..1.6f64,
        r in 1.5..8.0f64,
    ) {
        let m = HoloMap::parse(map).unwrap();
        let spec = GraphSpec::new(Complex64::new(nx, ny), scale).unwrap();
        let Ok(g) = build_preimage_graph(&m, &spec, r, 256) else { return Ok(()) };
        let Ok(c) = complement_components(&m, &g) else { return Ok(()) };
        let check = euler_identity(&g, &c);
        prop_assert!(check.holds(), "{} r={}: {:?}", map, r, check);
        let counts = g.counts();
        prop_assert_eq!(g.euler, g.vertices.len() as i64 - g.edges() as i64 + virtual_vertices(&g));
        prop_assert_eq!(counts.good + counts.bad + counts.suspect, g.arcs.len());
    }
}

fn virtual_vertices(g: &ahlfors_lab::trace::PreimageGraph) -> i64 {
    g.retained()
        .map(|a| if a.closed { 1 } else { a.ends.iter().filter(|e| e.is_none()).count() as i64 })
        .sum()
}

proptest! {
    #[test]
    fn trend_accepts_any_nonincreasing_sequence(mut xs in prop::collection::vec(0.0..10.0f64, 1..12)) {
        xs.sort_by(|a, b| b.total_cmp(a));
        prop_assert!(trend_nonincreasing(&xs, 0.0));
        let mut up = xs.clone();
        up.push(xs[0] + 1.0);
        prop_assert!(!trend_nonincreasing(&up, 0.5));
    }

    #[test]
    fn euler_rows_decide_exactly(c0 in -20i64..3, e in -20i64..3, s in 0i64..30) {
        let mut row = ReportRow::new(5.0, 2.0, 1.0);
        row.chi_c0 = Some(c0);
        row.graph_euler = Some(e);
        row.sum_chi_c = Some(s);
        let o = verify_euler_identity(&[row]).unwrap();
        prop_assert_eq!(o.pass, c0 + e + s == 1);
    }
}
