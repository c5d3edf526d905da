use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SpherePoint;

/// `n` points drawn i.i.d. from the normalised area measure, as a
/// deterministic function of `seed`.
///
/// Points are uniform on the unit sphere (uniform height, uniform longitude)
/// and carried to the plane by stereographic projection from the north pole.
pub fn sample_sphere_uniform(seed: u64, n: usize) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw(&mut rng)).collect()
}

pub(crate) fn draw(rng: &mut impl Rng) -> SpherePoint {
    let height: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    if height >= 1.0 {
        return SpherePoint::INFINITY;
    }
    let rho = (1.0 - height * height).sqrt();
    SpherePoint::finite(Complex64::from_polar(rho / (1.0 - height), phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{chordal_distance, SphericalDisk};

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(sample_sphere_uniform(11, 50), sample_sphere_uniform(11, 50));
        assert_ne!(sample_sphere_uniform(11, 50), sample_sphere_uniform(12, 50));
    }

    #[test]
    fn hemisphere_fraction() {
        let n = 10_000;
        let pts = sample_sphere_uniform(3, n);
        let inside = pts
            .iter()
            .filter(|p| matches!(p.0, crate::Ext::Finite(c) if c.norm() < 1.0))
            .count();
        let frac = inside as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 / (n as f64).sqrt(), "{frac}");
    }

    #[test]
    fn disk_of_area_one_tenth() {
        // normalised chordal disk of radius ρ has area πρ²
        let radius = (0.1 / std::f64::consts::PI).sqrt();
        let disk = SphericalDisk::new(SpherePoint::new(0.7, -0.2), radius).unwrap();
        let n = 10_000;
        let pts = sample_sphere_uniform(5, n);
        let inside = pts
            .iter()
            .filter(|p| chordal_distance(**p, disk.center) < radius)
            .count();
        let frac = inside as f64 / n as f64;
        assert!((frac - 0.1).abs() < 0.01, "{frac}");
    }
}
