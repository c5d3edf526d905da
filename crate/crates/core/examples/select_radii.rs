//! Radii along which l/a keeps decreasing, chosen by the length-area scan.

use ahlfors_lab::metric::{area, boundary_length, select_radii};
use ahlfors_lab::HoloMap;

fn main() -> ahlfors_lab::Result<()> {
    let hm = HoloMap::parse("exp(z)")?;
    for r in select_radii(&hm, 5.0, 60.0, 5, 1e-8)? {
        let (a, l) = (area(&hm, r, 1e-8)?, boundary_length(&hm, r, 1e-8)?);
        println!("r={r:.4} a={a:.4} l={l:.4} l/a={:.4}", l / a);
    }
    Ok(())
}
