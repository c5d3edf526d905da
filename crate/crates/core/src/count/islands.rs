use num_complex::Complex64;
use rayon::prelude::*;

use super::roots::winding_along;
use super::CountError;
use crate::contour::{self, Polyline};
use crate::expr::{Ext, HoloMap};
use crate::metric::{spherical_density, SpherePoint, SphericalDisk};

/// Clamp for the logarithmic level function; beyond it the sign is all
/// that matters.
const LOG_CLAMP: f64 = 60.0;

/// A proper component of the preimage of a disk.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandRecord {
    pub disk_index: usize,
    /// Outer boundary, counter-clockwise.
    pub boundary: Vec<Complex64>,
    /// Inner boundaries, clockwise.
    pub holes: Vec<Vec<Complex64>>,
    pub chi: i64,
    pub degree: u32,
    pub ramification: u32,
    /// Pulled-back spherical area over the disk's area (≈ degree).
    pub area_share: f64,
    pub centroid: Complex64,
    /// A point of the island near a preimage of the disk's centre.
    pub anchor: Complex64,
}

/// Islands over one disk together with the components that could not be
/// decided at this resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandSearch {
    pub islands: Vec<IslandRecord>,
    /// Leftmost boundary points of ambiguous components.
    pub ambiguous: Vec<Complex64>,
}

/// Positive inside the disk, zero on its boundary circle.
pub(crate) fn disk_level(hm: &HoloMap, disk: &SphericalDisk, z: Complex64) -> f64 {
    let Ok(w) = hm.eval(z) else { return f64::NAN };
    let ln_r = disk.rotated_radius().ln();
    match disk.center.rotate_to_origin(w) {
        Ext::Infinity => -LOG_CLAMP,
        Ext::Finite(v) => {
            let m = v.norm();
            if m == 0.0 {
                LOG_CLAMP
            } else {
                (ln_r - m.ln()).clamp(-LOG_CLAMP, LOG_CLAMP)
            }
        }
    }
}

fn rotated(hm: &HoloMap, center: SpherePoint, z: Complex64) -> Option<Complex64> {
    let w = hm.eval(z).ok()?;
    let v = center.rotate_to_origin(w).finite()?;
    (v.is_finite() && v.norm() > 0.0).then_some(v)
}

/// Degree of `f` on an island: the winding of `f` about `center` (in the
/// rotated chart) along the whole oriented boundary.
pub fn island_degree(hm: &HoloMap, island: &IslandRecord, center: SpherePoint) -> Result<u32, CountError> {
    let phi = |z: Complex64| rotated(hm, center, z);
    let mut total = winding_along(&phi, &island.boundary, true)?;
    for hole in &island.holes {
        total += winding_along(&phi, hole, true)?;
    }
    let rounded = total.round();
    if (total - rounded).abs() > 0.1 || rounded < 1.0 {
        return Err(CountError::WindingUnresolved {
            near: island.boundary[0],
        });
    }
    Ok(rounded as u32)
}

/// Sum of `degree - chi` over the islands.
pub fn total_ramification(islands: &[IslandRecord]) -> u64 {
    islands.iter().map(|i| i.ramification as u64).sum()
}

fn polygon_moments(poly: &[Complex64]) -> (f64, Complex64) {
    let n = poly.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let cross = p.re * q.im - q.re * p.im;
        a += cross;
        cx += (p.re + q.re) * cross;
        cy += (p.im + q.im) * cross;
    }
    (0.5 * a, Complex64::new(cx / 6.0, cy / 6.0))
}

fn in_region(outer: &[Complex64], holes: &[&Polyline], z: Complex64) -> bool {
    contour::contains(outer, z) && !holes.iter().any(|h| contour::contains(&h.points, z))
}

/// Islands of `f` over `disk` in `|z| <= r`. Components whose boundary
/// enters the band `|z| > r(1 - 10/resolution)` are reported as ambiguous.
pub fn find_islands(
    hm: &HoloMap,
    disk: &SphericalDisk,
    disk_index: usize,
    r: f64,
    resolution: usize,
) -> Result<IslandSearch, CountError> {
    if resolution < 16 {
        return Err(CountError::InvalidArgument(format!("resolution {resolution} is below 16")));
    }
    let level = |z: Complex64| disk_level(hm, disk, z);
    let traced = contour::trace_level(&level, r, resolution);
    let margin = r * (1.0 - 10.0 / resolution as f64);

    let closed: Vec<&Polyline> = traced.lines.iter().filter(|l| l.closed && l.points.len() >= 3).collect();
    let outers: Vec<(&Polyline, f64)> = closed
        .iter()
        .map(|l| (*l, l.signed_area()))
        .filter(|(_, a)| *a > 0.0)
        .collect();
    let mut holes_of: Vec<Vec<&Polyline>> = vec![Vec::new(); outers.len()];
    for hole in closed.iter().filter(|l| l.signed_area() < 0.0) {
        let probe = hole.points[0];
        let owner = outers
            .iter()
            .enumerate()
            .filter(|(_, (o, a))| *a > -hole.signed_area() && contour::contains(&o.points, probe))
            .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .map(|(k, _)| k);
        if let Some(k) = owner {
            holes_of[k].push(hole);
        }
    }

    let results: Vec<Result<Option<IslandRecord>, CountError>> = outers
        .par_iter()
        .zip(holes_of.par_iter())
        .map(|(&(outer, _), holes)| {
            let unresolved = outer.unresolved || holes.iter().any(|h| h.unresolved);
            if unresolved || outer.max_modulus() > margin {
                return Ok(None);
            }
            let mut record = IslandRecord {
                disk_index,
                boundary: outer.points.clone(),
                holes: holes.iter().map(|h| h.points.clone()).collect(),
                chi: 1 - holes.len() as i64,
                degree: 0,
                ramification: 0,
                area_share: 0.0,
                centroid: Complex64::new(0.0, 0.0),
                anchor: Complex64::new(0.0, 0.0),
            };
            record.degree = island_degree(hm, &record, disk.center)?;
            record.ramification = (record.degree as i64 - record.chi) as u32;

            let (a0, m0) = polygon_moments(&outer.points);
            let (mut a, mut m) = (a0, m0);
            for h in holes.iter() {
                let (ah, mh) = polygon_moments(&h.points);
                a += ah;
                m += mh;
            }
            record.centroid = if a.abs() > 0.0 { m / a } else { outer.points[0] };

            // sample the bounding box: anchor at the deepest point, area by the midpoint rule
            let (mut lo, mut hi) = (outer.points[0], outer.points[0]);
            for p in &outer.points {
                lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
            }
            let k = 48usize;
            let (dx, dy) = ((hi.re - lo.re) / k as f64, (hi.im - lo.im) / k as f64);
            let mut best = (f64::NEG_INFINITY, record.centroid);
            let mut pulled = 0.0;
            for j in 0..k {
                for i in 0..k {
                    let z = lo + Complex64::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy);
                    if !in_region(&outer.points, holes, z) {
                        continue;
                    }
                    let g = level(z);
                    if g > best.0 {
                        best = (g, z);
                    }
                    if let Ok(h) = spherical_density(hm, z) {
                        pulled += h * h * dx * dy;
                    }
                }
            }
            record.anchor = best.1;
            record.area_share = pulled / disk.area();
            Ok(Some(record))
        })
        .collect();

    let mut islands = Vec::new();
    let mut ambiguous = Vec::new();
    for (res, (outer, _)) in results.into_iter().zip(&outers) {
        match res? {
            Some(rec) => islands.push(rec),
            None => ambiguous.push(outer.leftmost()),
        }
    }
    let key = |p: &Complex64| (p.re, p.im);
    islands.sort_by(|a, b| {
        let (pa, pb) = (key(&leftmost(&a.boundary)), key(&leftmost(&b.boundary)));
        pa.0.total_cmp(&pb.0).then(pa.1.total_cmp(&pb.1))
    });
    ambiguous.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(IslandSearch { islands, ambiguous })
}

fn leftmost(points: &[Complex64]) -> Complex64 {
    Polyline {
        points: points.to_vec(),
        closed: true,
        unresolved: false,
    }
    .leftmost()
}

/// CSV table of islands: `disk_index,chi,degree,ramification,centroid_x,centroid_y`.
pub fn islands_to_csv(islands: &[IslandRecord]) -> String {
    let mut out = String::from("disk_index,chi,degree,ramification,centroid_x,centroid_y\n");
    for i in islands {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i.disk_index,
            i.chi,
            i.degree,
            i.ramification,
            crate::metric::sig12(i.centroid.re),
            crate::metric::sig12(i.centroid.im)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DIAMETER;

    fn hm(s: &str) -> HoloMap {
        HoloMap::parse(s).unwrap()
    }

    fn disk(c: SpherePoint) -> SphericalDisk {
        SphericalDisk::new(c, 0.2 * DIAMETER).unwrap()
    }

    #[test]
    fn z5_standard_disks() {
        let f = hm("z^5");
        let over0 = find_islands(&f, &disk(SpherePoint::new(0.0, 0.0)), 0, 10.0, 256).unwrap();
        assert_eq!(over0.islands.len(), 1);
        assert_eq!(over0.islands[0].degree, 5);
        assert_eq!(over0.islands[0].chi, 1);
        assert_eq!(over0.islands[0].ramification, 4);
        assert!((over0.islands[0].area_share - 5.0).abs() < 0.2);
        let over1 = find_islands(&f, &disk(SpherePoint::new(1.0, 0.0)), 1, 10.0, 256).unwrap();
        assert_eq!(over1.islands.len(), 5);
        assert!(over1.islands.iter().all(|i| i.degree == 1 && i.ramification == 0));
        let over_inf = find_islands(&f, &disk(SpherePoint::INFINITY), 2, 10.0, 256).unwrap();
        assert!(over_inf.islands.is_empty());
        assert_eq!(total_ramification(&over0.islands), 4);
    }

    #[test]
    fn identity_has_one_simple_island() {
        let s = find_islands(&hm("z"), &disk(SpherePoint::new(0.5, 0.5)), 0, 4.0, 128).unwrap();
        assert_eq!(s.islands.len(), 1);
        let i = &s.islands[0];
        assert_eq!((i.degree, i.chi, i.ramification), (1, 1, 0));
        assert!((i.anchor - Complex64::new(0.5, 0.5)).norm() < 0.1);
    }

    #[test]
    fn csv_header() {
        assert!(islands_to_csv(&[]).starts_with("disk_index,chi,degree,ramification,centroid_x,centroid_y"));
    }
}
