use num_complex::Complex64;
use rayon::prelude::*;

use super::TraceError;
use crate::count::count_preimages;
use crate::expr::{Ext, HoloMap};
use crate::metric::quadrature::gauss_legendre_nodes;
use crate::metric::SpherePoint;

/// Minimum angle between a crossing and the horizontal.
const MIN_CROSSING_ANGLE_DEG: f64 = 5.0;
/// Minimum distance from a level of a polyline vertex with near-horizontal
/// tangent, relative to the chart height.
const MIN_VERTEX_GAP: f64 = 1e-3;
const BOUNDARY_SAMPLES: usize = 4096;
const MAX_REFINE_DEPTH: u32 = 24;

/// A Möbius chart `M(w) = (aw + b)/(cw + d)` and a thin rectangle
/// `x_range × t_range` in its target; `Im M = t` are the translates of the
/// base segment `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleChart {
    pub moebius: [Complex64; 4],
    pub x_range: (f64, f64),
    pub t_range: (f64, f64),
}

impl RectangleChart {
    pub fn new(moebius: [Complex64; 4], x_range: (f64, f64), t_range: (f64, f64)) -> Result<Self, TraceError> {
        let [a, b, c, d] = moebius;
        if (a * d - b * c).norm() < 1e-14 {
            return Err(TraceError::InvalidArgument("chart coefficients satisfy ad - bc = 0".into()));
        }
        if !(x_range.0 < x_range.1) || !(t_range.0 < t_range.1) {
            return Err(TraceError::InvalidArgument("chart ranges must be increasing intervals".into()));
        }
        Ok(RectangleChart {
            moebius,
            x_range,
            t_range,
        })
    }

    pub fn apply(&self, w: Ext) -> Ext {
        let [a, b, c, d] = self.moebius;
        match w {
            Ext::Infinity => {
                if c.norm() == 0.0 {
                    Ext::Infinity
                } else {
                    Ext::from_raw(a / c)
                }
            }
            Ext::Finite(w) => {
                let den = c * w + d;
                if den.norm() == 0.0 {
                    Ext::Infinity
                } else {
                    Ext::from_raw((a * w + b) / den)
                }
            }
        }
    }

    pub fn inverse(&self, u: Complex64) -> Ext {
        let [a, b, c, d] = self.moebius;
        let den = a - c * u;
        if den.norm() == 0.0 {
            Ext::Infinity
        } else {
            Ext::from_raw((d * u - b) / den)
        }
    }

    pub fn height(&self) -> f64 {
        self.t_range.1 - self.t_range.0
    }

    pub fn width(&self) -> f64 {
        self.x_range.1 - self.x_range.0
    }
}

/// Crossing counts of a chart-coordinate polyline with the horizontal
/// lines at the midpoints of `n` equal slices of `t_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingProfile {
    pub levels: Vec<f64>,
    pub counts: Vec<usize>,
    /// Whether each level meets the polyline transversally with margin.
    pub transversal: Vec<bool>,
    /// Mean count times the chart height.
    pub lhs: f64,
    /// Vertical variation of the polyline inside the rectangle.
    pub rhs: f64,
}

/// Clip of the segment `p → q` to the rectangle (Liang–Barsky).
fn clip_segment(p: Complex64, q: Complex64, chart: &RectangleChart) -> Option<(Complex64, Complex64)> {
    let d = q - p;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let checks = [
        (-d.re, p.re - chart.x_range.0),
        (d.re, chart.x_range.1 - p.re),
        (-d.im, p.im - chart.t_range.0),
        (d.im, chart.t_range.1 - p.im),
    ];
    for (pk, qk) in checks {
        if pk == 0.0 {
            if qk < 0.0 {
                return None;
            }
        } else {
            let t = qk / pk;
            if pk < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then(|| (p + d * t0, p + d * t1))
}

/// Coarea bookkeeping for a polyline given in chart coordinates. Both sides
/// estimate `∫ #(polyline ∩ {Im = t}) dt` over the rectangle.
pub fn crossing_profile(points: &[Complex64], closed: bool, chart: &RectangleChart, n_samples: usize) -> CrossingProfile {
    let height = chart.height();
    let dt = height / n_samples as f64;
    let levels: Vec<f64> = (0..n_samples).map(|k| chart.t_range.0 + (k as f64 + 0.5) * dt).collect();
    let mut counts = vec![0usize; n_samples];
    let mut transversal = vec![true; n_samples];
    let (x0, x1) = chart.x_range;
    let min_slope = MIN_CROSSING_ANGLE_DEG.to_radians().tan();
    let gap = MIN_VERTEX_GAP * height;
    let level_index = |y: f64| ((y - chart.t_range.0) / dt - 0.5).floor();

    let n = points.len();
    let steps = if closed { n } else { n.saturating_sub(1) };
    let mut rhs = 0.0;
    for k in 0..steps {
        let (p, q) = (points[k], points[(k + 1) % n]);
        if !(p.is_finite() && q.is_finite()) {
            continue;
        }
        if let Some((a, b)) = clip_segment(p, q, chart) {
            rhs += (b.im - a.im).abs();
        }
        let (ylo, yhi) = (p.im.min(q.im), p.im.max(q.im));
        if yhi < chart.t_range.0 || ylo > chart.t_range.1 {
            continue;
        }
        let first = (level_index(ylo) + 1.0).max(0.0) as usize;
        let last = level_index(yhi).min(n_samples as f64 - 1.0);
        if last < 0.0 {
            continue;
        }
        for j in first..=(last as usize) {
            let t = levels[j];
            if !(t > ylo && t < yhi) {
                continue;
            }
            let x = p.re + (q.re - p.re) * (t - p.im) / (q.im - p.im);
            if x < x0 || x > x1 {
                continue;
            }
            counts[j] += 1;
            let slope = (q.im - p.im).abs() / (q.re - p.re).abs();
            if slope < min_slope {
                transversal[j] = false;
            }
        }
    }
    // vertices close to a level only matter where the tangent is near horizontal
    for k in 0..n {
        let p = points[k];
        if !(p.is_finite() && p.re >= x0 && p.re <= x1) {
            continue;
        }
        let prev = if k > 0 { Some(points[k - 1]) } else { closed.then(|| points[n - 1]) };
        let next = if k + 1 < n { Some(points[k + 1]) } else { closed.then(|| points[0]) };
        let tangent = match (prev, next) {
            (Some(a), Some(b)) => b - a,
            (Some(a), None) => p - a,
            (None, Some(b)) => b - p,
            (None, None) => continue,
        };
        if !tangent.is_finite() || tangent.im.abs() >= min_slope * tangent.re.abs() {
            continue;
        }
        let lo = (level_index(p.im - gap) + 1.0).max(0.0);
        let hi = level_index(p.im + gap).min(n_samples as f64 - 1.0);
        if hi < lo {
            continue;
        }
        for j in (lo as usize)..=(hi as usize) {
            if (levels[j] - p.im).abs() < gap {
                transversal[j] = false;
            }
        }
    }
    let lhs = counts.iter().sum::<usize>() as f64 / n_samples as f64 * height;
    CrossingProfile {
        levels,
        counts,
        transversal,
        lhs,
        rhs,
    }
}

/// The chosen translate of the base segment and the coarea check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub t_star: f64,
    /// Crossings of the boundary image with the chosen segment.
    pub crossings: usize,
    pub coarea_lhs: f64,
    pub coarea_rhs: f64,
}

impl Perturbation {
    /// `|lhs - rhs| / max(rhs, 1)`.
    pub fn coarea_defect(&self) -> f64 {
        (self.coarea_lhs - self.coarea_rhs).abs() / self.coarea_rhs.max(1.0)
    }
}

/// Chart image of the boundary circle `|z| = r`, sampled densely and refined
/// where it passes near the rectangle.
pub(crate) fn boundary_image(hm: &HoloMap, r: f64, chart: &RectangleChart) -> Vec<Complex64> {
    let image = |theta: f64| -> Complex64 {
        match hm.eval(Complex64::from_polar(r, theta)).map(|w| chart.apply(w)) {
            Ok(Ext::Finite(u)) if u.is_finite() => u,
            _ => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    let (w, h) = (chart.width(), chart.height());
    let lo = Complex64::new(chart.x_range.0 - w, chart.t_range.0 - h);
    let hi = Complex64::new(chart.x_range.1 + w, chart.t_range.1 + h);
    // near the rectangle, steps are refined below this chart length
    let step = 2.5e-3 * w.min(h);
    let near = |a: Complex64, b: Complex64| {
        a.re.min(b.re) <= hi.re && a.re.max(b.re) >= lo.re && a.im.min(b.im) <= hi.im && a.im.max(b.im) >= lo.im
    };
    fn refine(
        image: &dyn Fn(f64) -> Complex64,
        near: &dyn Fn(Complex64, Complex64) -> bool,
        step: f64,
        (ta, ua): (f64, Complex64),
        (tb, ub): (f64, Complex64),
        depth: u32,
        out: &mut Vec<Complex64>,
    ) {
        let finite = ua.is_finite() && ub.is_finite();
        if depth < MAX_REFINE_DEPTH && finite && near(ua, ub) && (ub - ua).norm() > step {
            let tm = 0.5 * (ta + tb);
            let um = image(tm);
            refine(image, near, step, (ta, ua), (tm, um), depth + 1, out);
            refine(image, near, step, (tm, um), (tb, ub), depth + 1, out);
        } else {
            out.push(ua);
        }
    }
    let dtheta = std::f64::consts::TAU / BOUNDARY_SAMPLES as f64;
    let coarse: Vec<(f64, Complex64)> = (0..=BOUNDARY_SAMPLES)
        .map(|k| {
            let t = k as f64 * dtheta;
            (t, image(t))
        })
        .collect();
    let mut out = Vec::with_capacity(2 * BOUNDARY_SAMPLES);
    for k in 0..BOUNDARY_SAMPLES {
        refine(&image, &near, step, coarse[k], coarse[k + 1], 0, &mut out);
    }
    out
}

/// Picks the translate `γ_t` of the chart's base segment crossing the
/// boundary image `f(|z| = r)` least often among the transversal ones
/// (ties go to the level closest to the middle of `t_range`), and reports
/// both sides of the coarea identity.
pub fn select_perturbation(hm: &HoloMap, r: f64, chart: &RectangleChart, n_samples: usize) -> Result<Perturbation, TraceError> {
    if n_samples < 100 {
        return Err(TraceError::InvalidArgument(format!(
            "perturbation search needs at least 100 levels, got {n_samples}"
        )));
    }
    let image = boundary_image(hm, r, chart);
    let profile = crossing_profile(&image, true, chart, n_samples);
    let mid = 0.5 * (chart.t_range.0 + chart.t_range.1);
    let best = (0..n_samples)
        .filter(|&k| profile.transversal[k])
        .min_by(|&a, &b| {
            profile.counts[a]
                .cmp(&profile.counts[b])
                .then((profile.levels[a] - mid).abs().total_cmp(&(profile.levels[b] - mid).abs()))
        })
        .ok_or(TraceError::NoTransversal)?;
    Ok(Perturbation {
        t_star: profile.levels[best],
        crossings: profile.counts[best],
        coarea_lhs: profile.lhs,
        coarea_rhs: profile.rhs,
    })
}

/// `∫ d(M⁻¹(x + it)) β(x) dx` over the chart's x range, where `d` counts
/// preimages in `|z| < r` and `β` must integrate to 1.
pub fn arc_test_integral(
    hm: &HoloMap,
    chart: &RectangleChart,
    t: f64,
    r: f64,
    beta: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<f64, TraceError> {
    let (x0, x1) = chart.x_range;
    let mass: f64 = gauss_legendre_nodes(x0, x1, 64).iter().map(|&(x, w)| w * beta(x)).sum();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(TraceError::WeightNotUnit { integral: mass });
    }
    let nodes = gauss_legendre_nodes(x0, x1, 8);
    let terms: Vec<Result<f64, TraceError>> = nodes
        .par_iter()
        .map(|&(x, w)| {
            let p = SpherePoint(chart.inverse(Complex64::new(x, t)));
            let d = count_preimages(hm, p, r)?;
            Ok(w * beta(x) * d as f64)
        })
        .collect();
    let mut sum = 0.0;
    for term in terms {
        sum += term?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_chart() -> RectangleChart {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        RectangleChart::new([one, -one, zero, one], (-0.3, 0.3), (-0.1, 0.1)).unwrap()
    }

    #[test]
    fn moebius_round_trip() {
        let c = RectangleChart::new(
            [
                Complex64::new(1.0, 1.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.2, -0.1),
                Complex64::new(2.0, 0.0),
            ],
            (0.0, 1.0),
            (0.0, 1.0),
        )
        .unwrap();
        let w = Complex64::new(0.3, -0.7);
        let back = c.inverse(c.apply(Ext::Finite(w)).finite().unwrap()).finite().unwrap();
        assert!((back - w).norm() < 1e-14);
        assert!(RectangleChart::new([Complex64::new(1.0, 0.0); 4], (0.0, 1.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn straight_segment_coarea() {
        let chart = unit_chart();
        let seg = [Complex64::new(0.0, -0.05), Complex64::new(0.01, 0.07)];
        let p = crossing_profile(&seg, false, &chart, 1000);
        assert!((p.rhs - 0.12).abs() < 1e-12);
        assert!((p.lhs - 0.12).abs() < 1e-3);
    }

    #[test]
    fn far_boundary_image_never_crosses() {
        let hm = HoloMap::parse("z^3").unwrap();
        let p = select_perturbation(&hm, 3.0, &unit_chart(), 200).unwrap();
        assert_eq!(p.crossings, 0);
        assert_eq!((p.coarea_lhs, p.coarea_rhs), (0.0, 0.0));
        assert!(p.t_star.abs() <= 0.2 / 200.0 + 1e-12);
    }

    #[test]
    fn unit_weight_is_required() {
        let hm = HoloMap::parse("z").unwrap();
        let chart = unit_chart();
        let uniform = |_x: f64| 1.0 / 0.6;
        let v = arc_test_integral(&hm, &chart, 0.0, 10.0, &uniform).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let doubled = |_x: f64| 2.0 / 0.6;
        assert!(matches!(
            arc_test_integral(&hm, &chart, 0.0, 10.0, &doubled),
            Err(TraceError::WeightNotUnit { .. })
        ));
    }
}
