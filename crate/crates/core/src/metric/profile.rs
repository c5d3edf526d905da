//! Area and boundary length of `|z| <= r`, the length–area radius selection
//! and its integral certificate.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use super::quadrature::{integrate_1d, integrate_polar, QuadFailure};
use super::{density_sample, MetricError};
use crate::expr::HoloMap;

const MAX_POLAR_CELLS: usize = 400_000;
const MAX_ARC_PIECES: usize = 200_000;
const ANGULAR_CELLS: usize = 32;
const POLE_SCAN: usize = 4096;

fn quad_err(e: QuadFailure<MetricError>) -> MetricError {
    match e {
        QuadFailure::Integrand(e) => e,
        QuadFailure::Budget {
            estimate,
            error,
            worst,
        } => MetricError::NoConvergence {
            estimate,
            error,
            worst,
        },
    }
}

/// Radial break points: uniform pieces plus a geometric ladder toward the
/// origin so features at unit scale are resolved for large radii.
fn radial_breaks(r0: f64, r1: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=16).map(|k| r0 + (r1 - r0) * k as f64 / 16.0).collect();
    let mut s = r1;
    while s > r0 && s > r1 / 4096.0 {
        pts.push(s);
        s *= 0.5;
    }
    if r1 > 1.0 && r0 < 1.0 {
        pts.push(1.0);
    }
    pts.retain(|&x| x >= r0 && x <= r1);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * r1);
    pts
}

/// Area of the annulus `r0 <= |z| <= r1` in the pulled-back metric.
pub fn area_annulus(hm: &HoloMap, r0: f64, r1: f64, tol: f64) -> Result<f64, MetricError> {
    if !(r0 >= 0.0 && r1 >= r0) {
        return Err(MetricError::InvalidArgument(format!(
            "annulus bounds {r0}..{r1}"
        )));
    }
    if r1 == r0 {
        return Ok(0.0);
    }
    let integrand = |rho: f64, theta: f64| -> Result<f64, MetricError> {
        let z = Complex64::from_polar(rho, theta);
        let h = density_sample(hm, z)?.value;
        Ok(h * h * rho)
    };
    let breaks = radial_breaks(r0, r1);
    integrate_polar(integrand, &breaks, ANGULAR_CELLS, tol, MAX_POLAR_CELLS)
        .map(|e| e.value)
        .map_err(quad_err)
}

/// `a(r)`: spherical area of the image of `|z| <= r`, counted with
/// multiplicity (total sphere area is 1).
pub fn area(hm: &HoloMap, r: f64, tol: f64) -> Result<f64, MetricError> {
    if !(r > 0.0) {
        return Err(MetricError::InvalidArgument(format!("radius {r} must be positive")));
    }
    area_annulus(hm, 0.0, r, tol)
}

/// `l(r)`: length of the image of the circle `|z| = r`.
pub fn boundary_length(hm: &HoloMap, r: f64, tol: f64) -> Result<f64, MetricError> {
    if !(r > 0.0) {
        return Err(MetricError::InvalidArgument(format!("radius {r} must be positive")));
    }
    if !hm.map.is_entire() {
        for k in 0..POLE_SCAN {
            let z = Complex64::from_polar(r, TAU * k as f64 / POLE_SCAN as f64);
            if let Ok(crate::Ext::Infinity) = hm.eval(z) {
                return Err(MetricError::PoleOnCircle { r, z });
            }
        }
    }
    let integrand = |theta: f64| -> Result<f64, MetricError> {
        let z = Complex64::from_polar(r, theta);
        let s = density_sample(hm, z)?;
        if s.at_pole {
            return Err(MetricError::PoleOnCircle { r, z });
        }
        Ok(s.value * r)
    };
    integrate_1d(integrand, 0.0, TAU, 64, tol, MAX_ARC_PIECES)
        .map(|e| e.value)
        .map_err(quad_err)
}

/// Symmetric finite difference of `a` at `r` with step `1e-4·r`, computed
/// as the area of the thin annulus around the circle.
pub fn area_derivative(hm: &HoloMap, r: f64, tol: f64) -> Result<f64, MetricError> {
    let delta = 1e-4 * r;
    Ok(area_annulus(hm, r - delta, r + delta, tol)? / (2.0 * delta))
}

/// Tabulated `a(r)` and `l(r)` on an ascending list of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricProfile {
    pub map: String,
    pub radii: Vec<f64>,
    pub a: Vec<f64>,
    pub l: Vec<f64>,
}

impl MetricProfile {
    /// Computes the profile; areas accumulate annulus by annulus.
    pub fn compute(hm: &HoloMap, radii: &[f64], tol: f64) -> Result<MetricProfile, MetricError> {
        if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
            return Err(MetricError::InvalidArgument(
                "radii must be positive and strictly ascending".into(),
            ));
        }
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(radii);
        let annuli: Vec<f64> = bounds
            .par_windows(2)
            .map(|w| area_annulus(hm, w[0], w[1], tol))
            .collect::<Result<_, _>>()?;
        let mut acc = 0.0;
        let a: Vec<f64> = annuli
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        let l: Vec<f64> = radii
            .par_iter()
            .map(|&r| boundary_length(hm, r, tol))
            .collect::<Result<_, _>>()?;
        Ok(MetricProfile {
            map: hm.map.source_text().to_string(),
            radii: radii.to_vec(),
            a,
            l,
        })
    }

    pub fn ratio(&self, k: usize) -> f64 {
        self.l[k] / self.a[k]
    }

    /// CSV with columns `r,a,l,ratio`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,a,l,ratio\n");
        for k in 0..self.radii.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                sig12(self.radii[k]),
                sig12(self.a[k]),
                sig12(self.l[k]),
                sig12(self.ratio(k))
            );
        }
        out
    }
}

/// Decimal rendering with 12 significant digits.
pub(crate) fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{}", x);
    }
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).clamp(0, 40) as usize;
    format!("{:.*}", decimals, x)
}

/// One row of the length–area (Cauchy–Schwarz) check `l² <= 2πr·a'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySchwarzRow {
    pub r: f64,
    pub l: f64,
    pub a_prime: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl CauchySchwarzRow {
    /// `l² / (2πr·a')`; at most 1 up to discretisation error.
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / self.rhs
        }
    }
}

pub fn cauchy_schwarz_rows(
    hm: &HoloMap,
    radii: &[f64],
    tol: f64,
) -> Result<Vec<CauchySchwarzRow>, MetricError> {
    radii
        .par_iter()
        .map(|&r| {
            let l = boundary_length(hm, r, tol)?;
            let a_prime = area_derivative(hm, r, tol)?;
            Ok(CauchySchwarzRow {
                r,
                l,
                a_prime,
                lhs: l * l,
                rhs: TAU * r * a_prime,
            })
        })
        .collect()
}

/// Length over area at `r`, nudging the radius off poles on the circle.
fn ratio_at(hm: &HoloMap, r: f64, tol: f64) -> Result<(f64, f64), MetricError> {
    let mut radius = r;
    for _ in 0..8 {
        match boundary_length(hm, radius, tol) {
            Ok(l) => {
                let a = area(hm, radius, tol)?;
                if a <= 0.0 {
                    return Err(MetricError::ZeroArea { r: radius });
                }
                return Ok((radius, l / a));
            }
            Err(MetricError::PoleOnCircle { .. }) => radius *= 1.0 + 1e-9,
            Err(e) => return Err(e),
        }
    }
    Err(MetricError::PoleOnCircle {
        r,
        z: Complex64::new(r, 0.0),
    })
}

/// Radii in `[r_min, r_max]` along which `l/a` strictly decreases.
///
/// The range is cut into `count` logarithmic cells; in each the ratio is
/// minimised (coarse scan, then golden-section refinement) and the minimisers
/// are kept when they improve on every smaller kept radius.
pub fn select_radii(
    hm: &HoloMap,
    r_min: f64,
    r_max: f64,
    count: usize,
    tol: f64,
) -> Result<Vec<f64>, MetricError> {
    if !(r_min > 0.0 && r_max > r_min) || count == 0 {
        return Err(MetricError::InvalidArgument(format!(
            "need 0 < r_min < r_max and count >= 1, got {r_min}, {r_max}, {count}"
        )));
    }
    if hm.map.is_constant() || area(hm, r_min, tol)? <= 0.0 {
        return Err(MetricError::ZeroArea { r: r_min });
    }
    let lr = (r_max / r_min).ln();
    let edges: Vec<f64> = (0..=count)
        .map(|k| r_min * (lr * k as f64 / count as f64).exp())
        .collect();
    let picks: Vec<(f64, f64)> = edges
        .par_windows(2)
        .map(|w| minimise_ratio(hm, w[0], w[1], tol))
        .collect::<Result<_, _>>()?;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for (r, q) in picks {
        match kept.last() {
            Some(&(pr, pq)) if !(q < pq) || r <= pr * (1.0 + 1e-9) => {}
            _ => kept.push((r, q)),
        }
    }
    Ok(kept.into_iter().map(|(r, _)| r).collect())
}

fn minimise_ratio(hm: &HoloMap, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64), MetricError> {
    const SCAN: usize = 6;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let at = |u: f64| ratio_at(hm, u.exp(), tol);
    let mut samples = Vec::with_capacity(SCAN + 1);
    for k in 0..=SCAN {
        let u = llo + (lhi - llo) * k as f64 / SCAN as f64;
        samples.push((u, at(u)?));
    }
    let best = (0..samples.len())
        .min_by(|&i, &j| samples[i].1 .1.total_cmp(&samples[j].1 .1))
        .unwrap();
    if best == SCAN {
        // ratio still falling at the right edge: the edge is the minimiser
        return Ok(samples[best].1);
    }
    let mut a = samples[best.saturating_sub(1)].0;
    let mut b = samples[(best + 1).min(SCAN)].0;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = at(c)?;
    let mut fd = at(d)?;
    for _ in 0..10 {
        if fc.1 < fd.1 {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = at(d)?;
        }
    }
    let mut best_val = samples[best].1;
    for cand in [fc, fd] {
        if cand.1 < best_val.1 {
            best_val = cand;
        }
    }
    Ok(best_val)
}

/// `(∫_{r1}^{r2} (l/a)² dr/r, 2π/a(r1))`.
///
/// The integral is taken by composite Simpson in `ln r` over a profile whose
/// areas accumulate annulus by annulus.
pub fn lengtharea_certificate(
    hm: &HoloMap,
    r1: f64,
    r2: f64,
    tol: f64,
) -> Result<(f64, f64), MetricError> {
    if !(r1 > 0.0 && r2 >= r1) {
        return Err(MetricError::InvalidArgument(format!(
            "need 0 < r1 <= r2, got {r1}, {r2}"
        )));
    }
    let a1 = area(hm, r1, tol)?;
    if a1 <= 0.0 {
        return Err(MetricError::ZeroArea { r: r1 });
    }
    let bound = TAU / a1;
    if r2 == r1 {
        return Ok((0.0, bound));
    }
    let span = (r2 / r1).ln();
    let mut n = ((span * 48.0).ceil() as usize).max(16);
    if n % 2 == 1 {
        n += 1;
    }
    let radii: Vec<f64> = (0..=n)
        .map(|k| r1 * (span * k as f64 / n as f64).exp())
        .collect();
    let profile = MetricProfile::compute(hm, &radii, tol)?;
    let h = span / n as f64;
    let g = |k: usize| {
        let q = profile.ratio(k);
        q * q
    };
    let mut sum = g(0) + g(n);
    for k in 1..n {
        sum += if k % 2 == 1 { 4.0 * g(k) } else { 2.0 * g(k) };
    }
    Ok((sum * h / 3.0, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn hm(s: &str) -> HoloMap {
        HoloMap::parse(s).unwrap()
    }

    #[test]
    fn sig12_format() {
        assert_eq!(sig12(0.5), "0.500000000000");
        assert_eq!(sig12(1234.5), "1234.50000000");
        assert_eq!(sig12(0.0), "0.00000000000");
    }

    #[test]
    fn identity_closed_forms() {
        let m = hm("z");
        let a = area(&m, 1.0, 1e-10).unwrap();
        assert!((a - 0.5).abs() < 1e-8, "{a}");
        let l = boundary_length(&m, 1.0, 1e-10).unwrap();
        assert!((l - PI.sqrt()).abs() < 1e-8, "{l}");
        let l = boundary_length(&m, 1e6, 1e-10).unwrap();
        assert!(l < 1e-5);
    }

    #[test]
    fn pole_on_circle_is_reported() {
        let m = hm("1/(z-1)");
        match boundary_length(&m, 1.0, 1e-8) {
            Err(MetricError::PoleOnCircle { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_map_has_no_radii() {
        assert!(matches!(
            select_radii(&hm("3"), 1.0, 2.0, 3, 1e-8),
            Err(MetricError::ZeroArea { .. })
        ));
    }
}
