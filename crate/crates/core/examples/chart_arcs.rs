//! A thin rectangle chart near w = 1: choose the translate of the base
//! segment met least often by the boundary image, check the coarea
//! identity and integrate the preimage count against a unit bump.

use std::f64::consts::TAU;

use ahlfors_lab::trace::{arc_test_integral, classify_arcs, select_perturbation, trace_preimage, ImplicitCurve, RectangleChart};
use ahlfors_lab::{Complex64, HoloMap};

fn main() -> ahlfors_lab::Result<()> {
    let (one, zero) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let chart = RectangleChart::new([one, -one, zero, one], (-0.3, 0.3), (-0.1, 0.1))?;
    let hm = HoloMap::parse("z^3")?;
    for r in [1.0, 10.0] {
        let p = select_perturbation(&hm, r, &chart, 400)?;
        let segment = ImplicitCurve::chart_segment(chart, p.t_star);
        let lines = trace_preimage(&hm, &segment, r, 512)?;
        let counts = classify_arcs(&lines, &hm, &segment, r, 512);
        let bump = |x: f64| (1.0 - (TAU * (x + 0.3) / 0.6).cos()) / 0.6;
        let integral = arc_test_integral(&hm, &chart, p.t_star, r, &bump)?;
        println!(
            "r={r}: t*={:.5} crossings={} coarea {:.5} vs {:.5}; arcs good={} bad={} suspect={}; ∫dβ={integral:.4}",
            p.t_star, p.crossings, p.coarea_lhs, p.coarea_rhs, counts.good, counts.bad, counts.suspect
        );
    }
    Ok(())
}
