//! Spherical area a(r) and boundary length l(r), against the closed forms
//! for z^d, plus the Cauchy–Schwarz rows and the length-area certificate.

use ahlfors_lab::metric::{cauchy_schwarz_rows, lengtharea_certificate, MetricProfile};
use ahlfors_lab::HoloMap;

fn main() -> ahlfors_lab::Result<()> {
    let radii = [0.5, 1.0, 2.0, 10.0];
    for d in [1, 2, 3] {
        let hm = HoloMap::parse(&format!("z^{d}"))?;
        let p = MetricProfile::compute(&hm, &radii, 1e-10)?;
        for (k, &r) in radii.iter().enumerate() {
            let rd = r.powi(d);
            let exact = d as f64 * rd * rd / (1.0 + rd * rd);
            println!("z^{d} r={r:<4} a={:.10} (exact {exact:.10}) l={:.6}", p.a[k], p.l[k]);
        }
    }

    let exp = HoloMap::parse("exp(z)")?;
    print!("{}", MetricProfile::compute(&exp, &[5.0, 10.0, 20.0], 1e-8)?.to_csv());
    for row in cauchy_schwarz_rows(&exp, &[2.0, 5.0], 1e-9)? {
        println!("r={} l^2={:.6} 2πr·a'={:.6} ratio={:.4}", row.r, row.lhs, row.rhs, row.ratio());
    }
    let (integral, bound) = lengtharea_certificate(&HoloMap::parse("z")?, 1.0, 1e3, 1e-9)?;
    println!("identity: ∫(l/a)² dr/r = {integral:.5}, bound {bound:.5}");
    Ok(())
}
