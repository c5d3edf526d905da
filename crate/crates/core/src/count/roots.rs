//! Root isolation by the argument principle on a quadtree of cells.

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;

use super::CountError;
use crate::expr::{Ext, HoloMap};
use crate::metric::{chordal_distance, density_sample, SpherePoint, DIAMETER};

const INITIAL_GRID: usize = 8;
const EDGE_PIECES: usize = 4;
const MAX_EDGE_DEPTH: u32 = 40;
const MAX_CELLS: usize = 400_000;
const NEWTON_STEPS: usize = 60;
/// Winding-zero cells of maps with poles are split while their boundary
/// image spreads over more than this fraction of the sphere's diameter.
const SPREAD_LIMIT: f64 = 0.25;
/// ... or while their pulled-back area exceeds this.
const AREA_LIMIT: f64 = 0.25;

/// A distinct preimage and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub z: Complex64,
    pub multiplicity: u32,
}

/// The function whose zeros are the preimages of the target.
#[derive(Clone, Copy)]
pub(crate) enum Phi {
    /// `f - p` (maps without poles)
    Shift(Complex64),
    /// rotation of the sphere taking `p` to 0, composed with `f`
    Rotate(Complex64),
    /// `1 / f`
    Reciprocal,
}

impl Phi {
    pub(crate) fn for_target(hm: &HoloMap, p: SpherePoint) -> Phi {
        match p.0 {
            Ext::Infinity => Phi::Reciprocal,
            Ext::Finite(c) if hm.map.is_entire() => Phi::Shift(c),
            Ext::Finite(c) => Phi::Rotate(c),
        }
    }

    fn of(self, w: Ext) -> Option<Complex64> {
        let v = match (self, w) {
            (Phi::Shift(p), Ext::Finite(w)) => w - p,
            (Phi::Shift(_), Ext::Infinity) => return None,
            (Phi::Rotate(p), w) => SpherePoint::finite(p).rotate_to_origin(w).finite()?,
            (Phi::Reciprocal, Ext::Infinity) => Complex64::new(0.0, 0.0),
            (Phi::Reciprocal, Ext::Finite(w)) => {
                if w.norm() == 0.0 {
                    return None;
                }
                w.inv()
            }
        };
        v.is_finite().then_some(v)
    }

    pub(crate) fn eval(self, hm: &HoloMap, z: Complex64) -> Option<Complex64> {
        self.of(hm.eval(z).ok()?)
    }

    /// `(φ, φ')` at `z`, when both are finite.
    fn eval_with_deriv(self, hm: &HoloMap, z: Complex64) -> Option<(Complex64, Complex64)> {
        let w = hm.eval(z).ok()?.finite()?;
        let dw = hm.eval_deriv(z).ok()?.finite()?;
        let one = Complex64::new(1.0, 0.0);
        let pair = match self {
            Phi::Shift(p) => (w - p, dw),
            Phi::Rotate(p) => {
                let den = one + p.conj() * w;
                ((w - p) / den, (1.0 + p.norm_sqr()) * dw / (den * den))
            }
            Phi::Reciprocal => (w.inv(), -dw / (w * w)),
        };
        (pair.0.is_finite() && pair.1.is_finite()).then_some(pair)
    }
}

/// Change of `arg φ` along the segment `a → b`, with steps refined until
/// each is at most π/4 and agrees with its midpoint.
fn arg_change<F>(phi: &F, a: Complex64, b: Complex64, pa: Complex64, pb: Complex64, depth: u32, spread: &mut Spread) -> Result<f64, CountError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let whole = (pb / pa).arg();
    let m = 0.5 * (a + b);
    let pm = phi(m).ok_or(CountError::Singular { z: m })?;
    spread.add(pm);
    let d1 = (pm / pa).arg();
    let d2 = (pb / pm).arg();
    if whole.abs() <= FRAC_PI_4 && d1.abs() <= FRAC_PI_4 && d2.abs() <= FRAC_PI_4 && (d1 + d2 - whole).abs() < 1e-9 {
        return Ok(whole);
    }
    if depth >= MAX_EDGE_DEPTH {
        return Err(CountError::WindingUnresolved { near: m });
    }
    Ok(arg_change(phi, a, m, pa, pm, depth + 1, spread)? + arg_change(phi, m, b, pm, pb, depth + 1, spread)?)
}

/// Largest chordal distance of boundary values from the first one.
#[derive(Default)]
struct Spread {
    first: Option<Complex64>,
    max: f64,
}

impl Spread {
    fn add(&mut self, v: Complex64) {
        match self.first {
            None => self.first = Some(v),
            Some(f) => {
                let d = chordal_distance(SpherePoint::finite(f), SpherePoint::finite(v));
                if d > self.max {
                    self.max = d;
                }
            }
        }
    }
}

/// Total change of `arg φ` along a polyline divided by 2π, refining each
/// step adaptively. For closed paths the last point joins the first.
pub(crate) fn winding_along<F>(phi: &F, path: &[Complex64], closed: bool) -> Result<f64, CountError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let mut spread = Spread::default();
    let values: Vec<Complex64> = path
        .iter()
        .map(|&z| phi(z).ok_or(CountError::Singular { z }))
        .collect::<Result<_, _>>()?;
    let n = path.len();
    let steps = if closed { n } else { n - 1 };
    let mut total = 0.0;
    for k in 0..steps {
        let j = (k + 1) % n;
        total += arg_change(phi, path[k], path[j], values[k], values[j], 0, &mut spread)?;
    }
    Ok(total / TAU)
}

/// Winding number of φ around the boundary of an axis-aligned square cell,
/// and the chordal spread of the boundary image.
fn cell_winding<F>(phi: &F, lo: Complex64, side: f64) -> Result<(i64, f64), CountError>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let corners = [
        lo,
        lo + Complex64::new(side, 0.0),
        lo + Complex64::new(side, side),
        lo + Complex64::new(0.0, side),
    ];
    let mut spread = Spread::default();
    let mut path = Vec::with_capacity(4 * EDGE_PIECES);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for s in 0..EDGE_PIECES {
            path.push(a + (b - a) * (s as f64 / EDGE_PIECES as f64));
        }
    }
    let values: Vec<Complex64> = path
        .iter()
        .map(|&z| phi(z).ok_or(CountError::Singular { z }))
        .collect::<Result<_, _>>()?;
    for &v in &values {
        spread.add(v);
    }
    let n = path.len();
    let mut total = 0.0;
    for k in 0..n {
        let j = (k + 1) % n;
        total += arg_change(phi, path[k], path[j], values[k], values[j], 0, &mut spread)?;
    }
    let w = total / TAU;
    let rounded = w.round();
    if (w - rounded).abs() > 0.1 {
        return Err(CountError::WindingUnresolved {
            near: lo + Complex64::new(0.5 * side, 0.5 * side),
        });
    }
    Ok((rounded as i64, spread.max))
}

/// Pulled-back spherical area of a cell, 3×3 Gauss rule.
fn cell_area(hm: &HoloMap, lo: Complex64, side: f64) -> f64 {
    const X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
    const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut s = 0.0;
    for (i, xi) in X.iter().enumerate() {
        for (j, yj) in X.iter().enumerate() {
            let z = lo + Complex64::new(xi * side, yj * side);
            let h = density_sample(hm, z).map(|d| d.value).unwrap_or(f64::INFINITY);
            s += W[i] * W[j] * h * h;
        }
    }
    s * side * side
}

fn newton(hm: &HoloMap, phi: Phi, start: Complex64, lo: Complex64, side: f64) -> Option<Complex64> {
    let mut z = start;
    let slack = 1e-9 * side;
    for _ in 0..NEWTON_STEPS {
        let (v, dv) = phi.eval_with_deriv(hm, z)?;
        if v.norm() == 0.0 {
            return Some(z);
        }
        if dv.norm() == 0.0 {
            return None;
        }
        let step = v / dv;
        z -= step;
        if !(z.re >= lo.re - slack && z.im >= lo.im - slack && z.re <= lo.re + side + slack && z.im <= lo.im + side + slack) {
            return None;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    None
}

/// All distinct solutions of `f(z) = p` in `|z| < r`.
pub fn find_roots(hm: &HoloMap, p: SpherePoint, r: f64) -> Result<Vec<Preimage>, CountError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CountError::InvalidArgument(format!("radius {r} must be positive")));
    }
    let entire = hm.map.is_entire();
    if p.is_infinity() && entire {
        return Ok(Vec::new());
    }
    let phi = Phi::for_target(hm, p);
    let eval = |z: Complex64| phi.eval(hm, z);
    let half = r * (1.0 + 1.0 / 64.0);
    let offset = Complex64::new(0.004_142_135_6 * r, 0.002_718_281_8 * r);
    let start_side = 2.0 * half / INITIAL_GRID as f64;
    let min_side = 1e-7 * r.max(1.0);
    let on_circle_tol = 1e-8 * r.max(1.0);

    let mut stack: Vec<(Complex64, f64)> = Vec::new();
    for j in (0..INITIAL_GRID).rev() {
        for i in (0..INITIAL_GRID).rev() {
            let lo = offset + Complex64::new(-half + i as f64 * start_side, -half + j as f64 * start_side);
            stack.push((lo, start_side));
        }
    }
    let mut roots: Vec<Preimage> = Vec::new();
    let mut processed = 0usize;
    while let Some((lo, side)) = stack.pop() {
        processed += 1;
        if processed > MAX_CELLS {
            return Err(CountError::Budget { cells: processed });
        }
        let nearest = Complex64::new(0f64.clamp(lo.re, lo.re + side), 0f64.clamp(lo.im, lo.im + side));
        if nearest.norm() > r + on_circle_tol {
            continue;
        }
        let (w, spread) = cell_winding(&eval, lo, side)?;
        let can_split = side > min_side;
        let split = |stack: &mut Vec<(Complex64, f64)>| {
            let s = 0.5 * side;
            for (di, dj) in [(1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (0.0, 0.0)] {
                stack.push((lo + Complex64::new(di * s, dj * s), s));
            }
        };
        if w <= 0 {
            if entire || !can_split {
                continue;
            }
            if w < 0 || spread > SPREAD_LIMIT * DIAMETER || cell_area(hm, lo, side) > AREA_LIMIT {
                split(&mut stack);
            }
            continue;
        }
        let centre = lo + Complex64::new(0.5 * side, 0.5 * side);
        let trusted = entire || (spread <= SPREAD_LIMIT * DIAMETER && cell_area(hm, lo, side) <= 1.5);
        if w == 1 && trusted {
            if let Some(z) = newton(hm, phi, centre, lo, side) {
                roots.push(Preimage { z, multiplicity: 1 });
                continue;
            }
        }
        if can_split {
            split(&mut stack);
        } else {
            let z = newton(hm, phi, centre, lo, side).unwrap_or(centre);
            roots.push(Preimage {
                z,
                multiplicity: w as u32,
            });
        }
    }
    let mut kept: Vec<Preimage> = Vec::new();
    for root in roots {
        if (root.z.norm() - r).abs() < on_circle_tol {
            return Err(CountError::RootOnCircle { r, z: root.z });
        }
        if root.z.norm() >= r {
            continue;
        }
        if let Some(k) = kept
            .iter()
            .position(|q| (q.z - root.z).norm() <= 1e-8 * (1.0 + root.z.norm()))
        {
            kept[k].multiplicity += root.multiplicity;
        } else {
            kept.push(root);
        }
    }
    kept.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(kept)
}

/// Number of distinct solutions of `f(z) = p` in `|z| < r`.
pub fn count_preimages(hm: &HoloMap, p: SpherePoint, r: f64) -> Result<usize, CountError> {
    find_roots(hm, p, r).map(|v| v.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hm(s: &str) -> HoloMap {
        HoloMap::parse(s).unwrap()
    }

    #[test]
    fn cube_roots_of_eight() {
        let roots = find_roots(&hm("z^3"), SpherePoint::new(8.0, 0.0), 3.0).unwrap();
        assert_eq!(roots.len(), 3);
        for q in &roots {
            assert!((q.z.norm() - 2.0).abs() < 1e-10);
            assert_eq!(q.multiplicity, 1);
        }
    }

    #[test]
    fn double_root_counts_once() {
        let roots = find_roots(&hm("z^2"), SpherePoint::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 2);
    }

    #[test]
    fn exp_lattice() {
        let n = count_preimages(&hm("exp(z)"), SpherePoint::new(1.0, 0.0), 20.0).unwrap();
        assert_eq!(n, 7);
        assert_eq!(count_preimages(&hm("exp(z)"), SpherePoint::INFINITY, 20.0).unwrap(), 0);
    }

    #[test]
    fn poles_and_rotated_targets() {
        // 1/(z^2-1): poles at ±1, preimages of 1 at ±√2
        let f = hm("1/(z^2-1)");
        assert_eq!(count_preimages(&f, SpherePoint::INFINITY, 2.0).unwrap(), 2);
        assert_eq!(count_preimages(&f, SpherePoint::new(1.0, 0.0), 2.0).unwrap(), 2);
        assert_eq!(count_preimages(&f, SpherePoint::new(1.0, 0.0), 1.2).unwrap(), 0);
        // z/(z-2): both the zero and the pole lie in the big disk
        let g = hm("z/(z-2)");
        assert_eq!(count_preimages(&g, SpherePoint::new(0.0, 0.0), 3.0).unwrap(), 1);
    }

    #[test]
    fn root_on_the_circle_is_rejected() {
        let err = count_preimages(&hm("z"), SpherePoint::new(1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, CountError::RootOnCircle { .. }));
    }

    #[test]
    fn winding_of_circle_path() {
        let path: Vec<Complex64> = (0..8).map(|k| Complex64::from_polar(1.0, k as f64 * TAU / 8.0)).collect();
        let w = winding_along(&|z: Complex64| Some(z * z * z), &path, true).unwrap();
        assert!((w - 3.0).abs() < 1e-12);
    }
}
