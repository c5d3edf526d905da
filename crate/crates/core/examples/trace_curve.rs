//! Preimages of a small circle under z^3, tagged good / bad / suspect.

use ahlfors_lab::trace::{classify_arc, trace_preimage, ImplicitCurve};
use ahlfors_lab::{HoloMap, SpherePoint};

fn main() -> ahlfors_lab::Result<()> {
    let hm = HoloMap::parse("z^3")?;
    let circle = ImplicitCurve::circle(SpherePoint::new(1.0, 0.0), 0.05)?;
    for r in [0.9, 2.0] {
        let lines = trace_preimage(&hm, &circle, r, 256)?;
        for l in &lines {
            let tag = classify_arc(&hm, &circle, l, r, 256);
            println!(
                "r={r}: {} loop with {} points near {:.3}: {}",
                if l.closed { "closed" } else { "open" },
                l.points.len(),
                l.points[0],
                tag.as_str()
            );
        }
    }
    Ok(())
}
