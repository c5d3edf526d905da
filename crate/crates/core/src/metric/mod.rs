//! The spherical metric scaled to total area 1, its pullback under a map,
//! and the area / boundary-length profile of the disks `|z| <= r`.
//!
//! Distances are chordal and normalised so that antipodal points sit at
//! distance `1/√π`; under this scaling a chordal disk of radius `ρ` has
//! area exactly `πρ²`.

mod profile;
pub(crate) mod quadrature;
mod sampling;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::expr::{Ext, HoloMap};

pub use profile::{
    area, area_annulus, area_derivative, boundary_length, cauchy_schwarz_rows,
    lengtharea_certificate, select_radii, CauchySchwarzRow, MetricProfile,
};
pub(crate) use profile::sig12;
pub use quadrature::Estimate;
pub(crate) use sampling::draw as draw_sphere_point;
pub use sampling::sample_sphere_uniform;

/// `1/√π`, the normalised distance between antipodal points.
pub const DIAMETER: f64 = 0.564_189_583_547_756_3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("map is indeterminate at z = {0}")]
    Indeterminate(Complex64),
    #[error("pole of the map on the circle |z| = {r} near z = {z}; perturb the radius")]
    PoleOnCircle { r: f64, z: Complex64 },
    #[error(
        "quadrature did not converge within budget: estimate {estimate}, error {error}, \
         worst cell {worst:?}"
    )]
    NoConvergence {
        estimate: f64,
        error: f64,
        worst: [f64; 4],
    },
    #[error("a({r}) = 0: the map covers no area on this range")]
    ZeroArea { r: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(pub Ext);

impl SpherePoint {
    pub const INFINITY: SpherePoint = SpherePoint(Ext::Infinity);

    pub fn finite(c: Complex64) -> Self {
        SpherePoint(Ext::Finite(c))
    }

    pub fn new(re: f64, im: f64) -> Self {
        SpherePoint::finite(Complex64::new(re, im))
    }

    pub fn value(self) -> Ext {
        self.0
    }

    pub fn is_infinity(self) -> bool {
        self.0.is_infinite()
    }

    /// The rotation of the sphere taking `self` to 0 (and its antipode to
    /// infinity). It is an isometry of the chordal metric.
    pub fn rotate_to_origin(self, w: Ext) -> Ext {
        match (self.0, w) {
            (Ext::Infinity, Ext::Infinity) => Ext::Finite(Complex64::new(0.0, 0.0)),
            (Ext::Infinity, Ext::Finite(v)) => {
                if v.norm() == 0.0 {
                    Ext::Infinity
                } else {
                    Ext::Finite(v.inv())
                }
            }
            (Ext::Finite(c), Ext::Infinity) => {
                if c.norm() == 0.0 {
                    Ext::Infinity
                } else {
                    Ext::Finite(c.conj().inv())
                }
            }
            (Ext::Finite(c), Ext::Finite(v)) => {
                let den = Complex64::new(1.0, 0.0) + c.conj() * v;
                if den.norm() == 0.0 {
                    Ext::Infinity
                } else {
                    Ext::from((v - c) / den)
                }
            }
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(c: Complex64) -> Self {
        SpherePoint::finite(c)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Ext::Infinity => f.write_str("inf"),
            Ext::Finite(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", c.re)
                } else if c.re == 0.0 {
                    write!(f, "{}i", c.im)
                } else {
                    write!(f, "{}{:+}i", c.re, c.im)
                }
            }
        }
    }
}

/// Unnormalised chord on the sphere of diameter 1, in `[0, 1]`.
fn unit_chord(p: Ext, q: Ext) -> f64 {
    match (p, q) {
        (Ext::Infinity, Ext::Infinity) => 0.0,
        (Ext::Finite(a), Ext::Infinity) | (Ext::Infinity, Ext::Finite(a)) => {
            1.0 / 1f64.hypot(a.norm())
        }
        (Ext::Finite(a), Ext::Finite(b)) => {
            let (na, nb) = (a.norm(), b.norm());
            if na > 1e150 || nb > 1e150 {
                // avoid overflow by rotating through the reciprocal chart
                let ia = if na == 0.0 { Ext::Infinity } else { Ext::Finite(a.inv()) };
                let ib = if nb == 0.0 { Ext::Infinity } else { Ext::Finite(b.inv()) };
                return unit_chord(ia, ib);
            }
            (a - b).norm() / (1f64.hypot(na) * 1f64.hypot(nb))
        }
    }
}

/// Normalised chordal distance.
pub fn chordal_distance(p: SpherePoint, q: SpherePoint) -> f64 {
    DIAMETER * unit_chord(p.0, q.0)
}

/// A disk on the sphere with a chordal radius in normalised units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalDisk {
    pub center: SpherePoint,
    pub radius: f64,
}

impl SphericalDisk {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self, MetricError> {
        if !(radius > 0.0 && radius < 0.5 * DIAMETER) {
            return Err(MetricError::InvalidArgument(format!(
                "disk radius {radius} must lie in (0, {})",
                0.5 * DIAMETER
            )));
        }
        Ok(SphericalDisk { center, radius })
    }

    pub fn contains(&self, w: Ext) -> bool {
        chordal_distance(self.center, SpherePoint(w)) < self.radius
    }

    /// Normalised area of the disk.
    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Radius of the Euclidean circle `|rotate_to_origin(w)| = R` bounding
    /// the disk in the rotated chart.
    pub fn rotated_radius(&self) -> f64 {
        let k = self.radius / DIAMETER;
        k / (1.0 - k * k).sqrt()
    }

    pub fn is_disjoint(&self, other: &SphericalDisk) -> bool {
        chordal_distance(self.center, other.center) > self.radius + other.radius
    }
}

/// Density and whether the sample sat on a pole of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DensitySample {
    pub value: f64,
    pub at_pole: bool,
}

fn raw_density(f: Ext, df: Ext) -> Option<f64> {
    match (f, df) {
        (Ext::Finite(w), Ext::Finite(dw)) => {
            let n = w.norm();
            let d = dw.norm();
            if n > 1.0 {
                let inv = 1.0 / n;
                Some(d * inv * inv / (1.0 + inv * inv))
            } else {
                Some(d / (1.0 + n * n))
            }
        }
        _ => None,
    }
}

pub(crate) fn density_sample(hm: &HoloMap, z: Complex64) -> Result<DensitySample, MetricError> {
    let f = hm.eval(z).map_err(|_| MetricError::Indeterminate(z))?;
    let df = hm.eval_deriv(z);
    if df.is_err() && !f.is_infinite() {
        return Err(MetricError::Indeterminate(z));
    }
    if let Some(v) = df.ok().and_then(|df| raw_density(f, df)) {
        return Ok(DensitySample {
            value: v / PI.sqrt(),
            at_pole: false,
        });
    }
    // The density is continuous through poles; average nearby values.
    let delta = 1e-6 * (1.0 + z.norm());
    let mut sum = 0.0;
    let mut finite_neighbours = 0;
    for dir in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        let p = z + delta * Complex64::new(dir.0, dir.1);
        let (Ok(f), Ok(df)) = (hm.eval(p), hm.eval_deriv(p)) else {
            return Err(MetricError::Indeterminate(z));
        };
        if let Some(v) = raw_density(f, df) {
            sum += v;
            finite_neighbours += 1;
        }
    }
    if finite_neighbours == 0 {
        // overflow region (e.g. exp far to the right): density underflows
        return Ok(DensitySample {
            value: 0.0,
            at_pole: false,
        });
    }
    Ok(DensitySample {
        value: sum / finite_neighbours as f64 / PI.sqrt(),
        at_pole: true,
    })
}

/// Pullback density `h(z) = |f'(z)| / (√π (1 + |f(z)|²))` of the area-1
/// spherical metric.
pub fn spherical_density(hm: &HoloMap, z: Complex64) -> Result<f64, MetricError> {
    density_sample(hm, z).map(|s| s.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hm(s: &str) -> HoloMap {
        HoloMap::parse(s).unwrap()
    }

    #[test]
    fn chordal_examples() {
        let zero = SpherePoint::new(0.0, 0.0);
        let one = SpherePoint::new(1.0, 0.0);
        assert!((chordal_distance(zero, SpherePoint::INFINITY) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert_eq!(chordal_distance(one, one), 0.0);
        assert!((chordal_distance(zero, one) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let big = SpherePoint::new(1e200, 0.0);
        assert!(chordal_distance(big, SpherePoint::INFINITY) < 1e-190);
    }

    #[test]
    fn rotation_is_an_isometry() {
        let c = SpherePoint::new(0.4, -1.3);
        let pts = [
            SpherePoint::new(2.0, 0.5),
            SpherePoint::new(-0.1, 0.2),
            SpherePoint::INFINITY,
        ];
        for p in pts {
            for q in pts {
                let d0 = chordal_distance(p, q);
                let d1 = chordal_distance(
                    SpherePoint(c.rotate_to_origin(p.0)),
                    SpherePoint(c.rotate_to_origin(q.0)),
                );
                assert!((d0 - d1).abs() < 1e-14);
            }
            let dc = chordal_distance(p, c);
            let d0 = chordal_distance(SpherePoint(c.rotate_to_origin(p.0)), SpherePoint::new(0.0, 0.0));
            assert!((dc - d0).abs() < 1e-14);
        }
    }

    #[test]
    fn density_examples() {
        let h = spherical_density(&hm("z"), Complex64::new(0.0, 0.0)).unwrap();
        assert!((h - 1.0 / PI.sqrt()).abs() < 1e-15);
        let h = spherical_density(&hm("z^2"), Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn density_at_simple_pole_is_the_limit() {
        // for 1/z the density equals that of z at 1/z, i.e. 1/(√π(1+|z|²)) at z→0 gives 1/√π
        let h = spherical_density(&hm("1/z"), Complex64::new(0.0, 0.0)).unwrap();
        assert!((h - 1.0 / PI.sqrt()).abs() < 1e-6);
        // double pole: density vanishes
        let h = spherical_density(&hm("1/z^2"), Complex64::new(0.0, 0.0)).unwrap();
        assert!(h < 1e-5);
    }

    #[test]
    fn disk_radius_bounds() {
        assert!(SphericalDisk::new(SpherePoint::new(0.0, 0.0), 0.3).is_err());
        let d = SphericalDisk::new(SpherePoint::INFINITY, 0.1).unwrap();
        assert!(d.contains(Ext::Infinity));
        assert!(!d.contains(Ext::Finite(Complex64::new(0.0, 0.0))));
    }
}
