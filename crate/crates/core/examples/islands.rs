//! Islands of z^5 over disks around 0, 1 and infinity.

use ahlfors_lab::count::{find_islands, islands_to_csv, total_ramification};
use ahlfors_lab::metric::DIAMETER;
use ahlfors_lab::{HoloMap, SpherePoint, SphericalDisk};

fn main() -> ahlfors_lab::Result<()> {
    let hm = HoloMap::parse("z^5")?;
    let centers = [SpherePoint::new(0.0, 0.0), SpherePoint::new(1.0, 0.0), SpherePoint::INFINITY];
    let mut all = Vec::new();
    for (j, c) in centers.into_iter().enumerate() {
        let disk = SphericalDisk::new(c, 0.2 * DIAMETER)?;
        let found = find_islands(&hm, &disk, j, 10.0, 512)?;
        println!("disk {j} at {c}: {} islands, {} ambiguous", found.islands.len(), found.ambiguous.len());
        all.extend(found.islands);
    }
    print!("{}", islands_to_csv(&all));
    println!("total ramification: {}", total_ramification(&all));
    Ok(())
}
