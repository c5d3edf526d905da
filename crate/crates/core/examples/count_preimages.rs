//! Preimages of a point by the argument principle, and the Monte-Carlo mean
//! of the preimage count, which tracks a(r).

use ahlfors_lab::count::{count_preimages, find_roots, mean_degree};
use ahlfors_lab::metric::area;
use ahlfors_lab::{HoloMap, SpherePoint};

fn main() -> ahlfors_lab::Result<()> {
    let exp = HoloMap::parse("exp(z)")?;
    for q in find_roots(&exp, SpherePoint::new(1.0, 0.0), 20.0)? {
        println!("exp(z) = 1 at {:.6} (multiplicity {})", q.z, q.multiplicity);
    }
    let z3 = HoloMap::parse("z^3")?;
    println!("z^3 = 8: {} points in |z| < 3", count_preimages(&z3, SpherePoint::new(8.0, 0.0), 3.0)?);

    for (hm, r) in [(&z3, 10.0), (&exp, 20.0)] {
        let m = mean_degree(hm, r, 2000, 7)?;
        println!(
            "{} r={r}: mean degree {:.4} ± {:.4}, a = {:.4}",
            hm.map.source_text(),
            m.mean,
            m.stderr,
            area(hm, r, 1e-8)?
        );
    }
    Ok(())
}
