//! Preimages of curves and of the figure-eight graph inside `|z| <= r`:
//! tracing, good/bad arc classification, arc perturbation in a rectangle
//! chart, and the Euler data of the traced graph.

mod chart;
mod export;
mod graph;

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::contour;
use crate::count::{find_roots, CountError};
use crate::expr::{Ext, HoloMap};
use crate::metric::{spherical_density, MetricError, SpherePoint, SphericalDisk, DIAMETER};

pub use crate::contour::Polyline;
pub use chart::{arc_test_integral, crossing_profile, select_perturbation, CrossingProfile, Perturbation, RectangleChart};
pub use export::{graph_json, graph_svg};
pub use graph::{
    build_preimage_graph, complement_components, euler_identity, Complement, ComplementComponent, EulerCheck, Face, GraphArc,
    GraphSpec, PreimageGraph,
};

pub const MIN_RESOLUTION: usize = 64;
const LOG_CLAMP: f64 = 60.0;
/// Radius of the holes punched around vertex preimages, in grid cells.
const PUNCH_CELLS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("saddle cell near {cell} stays ambiguous at the finest subgrid; perturb the level")]
    Ambiguous { cell: Complex64 },
    #[error("no level in the chart's t range is transversal to the boundary image; enlarge t_range")]
    NoTransversal,
    #[error("two arcs share a pixel corridor near {near}; raise the resolution")]
    SharedCorridor { near: Complex64 },
    #[error("graph arc near {near} is too small for the grid; raise the resolution")]
    Unresolved { near: Complex64 },
    #[error("weight integrates to {integral} over the chart segment, expected 1")]
    WeightNotUnit { integral: f64 },
    #[error("graph vertex preimage {z} sits on a critical point; perturb the node")]
    VertexNearCritical { z: Complex64 },
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Boundary of a chordal disk.
    Circle { center: SpherePoint, radius: f64 },
    /// `|(w - node)² - scale²| = scale²`: a figure-eight whose double point
    /// is `node` and whose lobes surround `node ± scale`.
    Lemniscate { node: Complex64, scale: f64 },
    /// `Im M(w) = t` with `Re M(w)` in the chart's x range.
    ChartSegment { chart: RectangleChart, t: f64 },
}

/// A curve `{G = 0}` on the sphere. `reversed` flips the sign of `G` and
/// with it the orientation of traced preimages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitCurve {
    pub kind: CurveKind,
    pub reversed: bool,
}

fn log_level(ln_r: f64, v: Ext) -> f64 {
    match v {
        Ext::Infinity => -LOG_CLAMP,
        Ext::Finite(v) => {
            let m = v.norm();
            if m == 0.0 {
                LOG_CLAMP
            } else if m.is_finite() {
                (ln_r - m.ln()).clamp(-LOG_CLAMP, LOG_CLAMP)
            } else {
                -LOG_CLAMP
            }
        }
    }
}

impl ImplicitCurve {
    /// Circle of chordal `radius` about `center`; any radius below the
    /// diameter is allowed, unlike disks used as island targets.
    pub fn circle(center: SpherePoint, radius: f64) -> Result<Self, TraceError> {
        if !(radius > 0.0 && radius < DIAMETER) {
            return Err(TraceError::InvalidArgument(format!(
                "circle radius {radius} must lie in (0, {DIAMETER})"
            )));
        }
        Ok(ImplicitCurve {
            kind: CurveKind::Circle { center, radius },
            reversed: false,
        })
    }

    pub fn lemniscate(node: Complex64, scale: f64) -> Result<Self, TraceError> {
        if !(scale > 0.0 && scale.is_finite() && node.is_finite()) {
            return Err(TraceError::InvalidArgument(format!("lemniscate scale {scale} must be positive")));
        }
        Ok(ImplicitCurve {
            kind: CurveKind::Lemniscate { node, scale },
            reversed: false,
        })
    }

    pub fn chart_segment(chart: RectangleChart, t: f64) -> Self {
        ImplicitCurve {
            kind: CurveKind::ChartSegment { chart, t },
            reversed: false,
        }
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    /// `G(w)`: positive inside the disk, inside the lobes, or above the
    /// segment's line.
    pub fn level(&self, w: Ext) -> f64 {
        let g = match self.kind {
            CurveKind::Circle { center, radius } => {
                let disk = SphericalDisk { center, radius };
                log_level(disk.rotated_radius().ln(), center.rotate_to_origin(w))
            }
            CurveKind::Lemniscate { node, scale } => {
                let s2 = scale * scale;
                let v = match w {
                    Ext::Infinity => Ext::Infinity,
                    Ext::Finite(w) => Ext::from_raw((w - node) * (w - node) - s2),
                };
                log_level(s2.ln(), v)
            }
            CurveKind::ChartSegment { chart, t } => match chart.apply(w) {
                Ext::Finite(u) => u.im - t,
                Ext::Infinity => f64::NAN,
            },
        };
        if self.reversed {
            -g
        } else {
            g
        }
    }

    /// Natural parameter of the curve near `w`: the rotated-chart argument
    /// for circles, the lobe argument for the lemniscate, `Re M` for chart
    /// segments.
    pub fn parameter(&self, w: Ext) -> Option<f64> {
        match self.kind {
            CurveKind::Circle { center, .. } => {
                let v = center.rotate_to_origin(w).finite()?;
                Some(v.arg())
            }
            CurveKind::Lemniscate { node, scale } => {
                let w = w.finite()?;
                let v = (w - node) * (w - node) - scale * scale;
                v.is_finite().then(|| v.arg())
            }
            CurveKind::ChartSegment { chart, .. } => chart.apply(w).finite().map(|u| u.re),
        }
    }

    fn parameter_is_angle(&self) -> bool {
        !matches!(self.kind, CurveKind::ChartSegment { .. })
    }
}

/// Outcome of tracing, with the data needed downstream.
#[derive(Debug, Clone)]
pub(crate) struct Traced {
    pub lines: Vec<Polyline>,
    /// Preimages of the lemniscate's double point within `r + punch`.
    pub vertices: Vec<Complex64>,
    pub punch: f64,
    pub cell: f64,
}

/// Spatial hash over points, for "is anything within `radius`" queries.
pub(crate) struct PointBuckets {
    size: f64,
    map: HashMap<(i64, i64), Vec<Complex64>>,
}

impl PointBuckets {
    pub fn new(points: &[Complex64], size: f64) -> Self {
        let mut map: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
        for &p in points {
            map.entry(Self::key(p, size)).or_default().push(p);
        }
        PointBuckets { size, map }
    }

    fn key(p: Complex64, size: f64) -> (i64, i64) {
        ((p.re / size).floor() as i64, (p.im / size).floor() as i64)
    }

    /// Nearest stored point within `radius <= size`.
    pub fn nearest_within(&self, z: Complex64, radius: f64) -> Option<Complex64> {
        let (kx, ky) = Self::key(z, self.size);
        let mut best: Option<(f64, Complex64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.map.get(&(kx + dx, ky + dy)) {
                    for &p in v {
                        let d = (p - z).norm();
                        if d <= radius && best.is_none_or(|b| d < b.0) {
                            best = Some((d, p));
                        }
                    }
                }
            }
        }
        best.map(|b| b.1)
    }
}

/// Whether a zero of `f'` lies within `radius` of `z` (Newton on `f'`).
fn near_critical(second: &HoloMap, z: Complex64, radius: f64) -> bool {
    let mut c = z;
    for _ in 0..40 {
        let (Ok(Ext::Finite(d1)), Ok(Ext::Finite(d2))) = (second.eval(c), second.eval_deriv(c)) else {
            return false;
        };
        if d1.norm() == 0.0 {
            break;
        }
        if d2.norm() == 0.0 {
            return false;
        }
        let step = d1 / d2;
        c -= step;
        if (c - z).norm() > 4.0 * radius {
            return false;
        }
        if step.norm() < 1e-13 * (1.0 + c.norm()) {
            break;
        }
    }
    (c - z).norm() <= radius && second.eval(c).ok().and_then(|v| v.finite()).is_some_and(|v| v.norm() < 1e-6)
}

pub(crate) fn trace_curve(hm: &HoloMap, curve: &ImplicitCurve, r: f64, resolution: usize) -> Result<Traced, TraceError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(TraceError::InvalidArgument(format!("radius {r} must be positive")));
    }
    if resolution < MIN_RESOLUTION {
        return Err(TraceError::InvalidArgument(format!(
            "resolution {resolution} is below the minimum {MIN_RESOLUTION}"
        )));
    }
    let cell = 2.0 * r / resolution as f64;
    let punch = PUNCH_CELLS * cell;
    let vertices: Vec<Complex64> = match curve.kind {
        CurveKind::Lemniscate { node, .. } => {
            let roots = find_roots(hm, SpherePoint::finite(node), r + 4.0 * punch)?;
            for q in &roots {
                if q.multiplicity > 1 || spherical_density(hm, q.z)? < 1e-9 {
                    return Err(TraceError::VertexNearCritical { z: q.z });
                }
            }
            roots.into_iter().map(|q| q.z).collect()
        }
        _ => Vec::new(),
    };
    let buckets = PointBuckets::new(&vertices, punch);
    let g = |z: Complex64| {
        if buckets.nearest_within(z, punch).is_some() {
            return f64::NAN;
        }
        match hm.eval(z) {
            Ok(w) => curve.level(w),
            Err(_) => f64::NAN,
        }
    };
    let traced = contour::trace_level(&g, r, resolution);
    if !traced.unresolved_cells.is_empty() {
        let second = HoloMap::new(hm.deriv.clone()).map_err(|e| TraceError::InvalidArgument(e.to_string()))?;
        for &c in &traced.unresolved_cells {
            if !near_critical(&second, c, 2.0 * cell) {
                return Err(TraceError::Ambiguous { cell: c });
            }
        }
    }
    let mut lines = traced.lines;
    if let CurveKind::ChartSegment { chart, .. } = curve.kind {
        lines = lines
            .into_iter()
            .flat_map(|l| clip_to_range(hm, curve, l, chart.x_range))
            .collect();
    }
    Ok(Traced {
        lines,
        vertices,
        punch,
        cell,
    })
}

/// Cuts a traced chart line down to the pieces with `Re M(f) ∈ x_range`.
fn clip_to_range(hm: &HoloMap, curve: &ImplicitCurve, line: Polyline, range: (f64, f64)) -> Vec<Polyline> {
    let param = |z: Complex64| hm.eval(z).ok().and_then(|w| curve.parameter(w));
    let inside = |x: Option<f64>| x.is_some_and(|x| x >= range.0 && x <= range.1);
    let xs: Vec<Option<f64>> = line.points.iter().map(|&z| param(z)).collect();
    if xs.iter().all(|&x| inside(x)) {
        return vec![line];
    }
    let (pts, xs): (Vec<Complex64>, Vec<Option<f64>>) = if line.closed {
        let s = xs.iter().position(|&x| !inside(x)).unwrap();
        let n = line.points.len();
        (0..=n).map(|k| (line.points[(s + k) % n], xs[(s + k) % n])).unzip()
    } else {
        (line.points.clone(), xs)
    };
    // bisect along the segment for the point where the range is left
    let cut = |a: Complex64, b: Complex64| -> Complex64 {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if inside(param(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut out = Vec::new();
    let mut run: Vec<Complex64> = Vec::new();
    for k in 0..pts.len() {
        if inside(xs[k]) {
            if run.is_empty() && k > 0 {
                run.push(cut(pts[k], pts[k - 1]));
            }
            run.push(pts[k]);
        } else if !run.is_empty() {
            run.push(cut(*run.last().unwrap(), pts[k]));
            out.push(Polyline {
                points: std::mem::take(&mut run),
                closed: false,
                unresolved: line.unresolved,
            });
        }
    }
    if !run.is_empty() {
        out.push(Polyline {
            points: run,
            closed: false,
            unresolved: line.unresolved,
        });
    }
    out.retain(|l| l.points.len() >= 2);
    out
}

/// Polylines of `{z : |z| <= r, G(f(z)) = 0}`, consistently oriented and
/// clipped at the circle.
pub fn trace_preimage(hm: &HoloMap, curve: &ImplicitCurve, r: f64, resolution: usize) -> Result<Vec<Polyline>, TraceError> {
    trace_curve(hm, curve, r, resolution).map(|t| t.lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcTag {
    Good,
    Bad,
    Suspect,
}

impl ArcTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ArcTag::Good => "good",
            ArcTag::Bad => "bad",
            ArcTag::Suspect => "suspect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArcCounts {
    pub good: usize,
    pub bad: usize,
    pub suspect: usize,
}

impl ArcCounts {
    pub fn total(&self) -> usize {
        self.good + self.bad + self.suspect
    }
}

/// Radius beyond which a traced point counts as touching the boundary.
pub fn boundary_margin(r: f64, resolution: usize) -> f64 {
    r * (1.0 - 10.0 / resolution as f64)
}

/// Tags one traced component.
pub fn classify_arc(hm: &HoloMap, curve: &ImplicitCurve, line: &Polyline, r: f64, resolution: usize) -> ArcTag {
    let margin = boundary_margin(r, resolution);
    if line.points.iter().any(|p| p.norm() > margin) {
        return ArcTag::Bad;
    }
    if line.unresolved {
        return ArcTag::Suspect;
    }
    let params: Option<Vec<f64>> = line
        .points
        .iter()
        .map(|&z| hm.eval(z).ok().and_then(|w| curve.parameter(w)))
        .collect();
    let Some(params) = params else {
        return ArcTag::Suspect;
    };
    let n = params.len();
    let steps = if line.closed { n } else { n - 1 };
    let angle = curve.parameter_is_angle();
    let mut sign = 0.0;
    let mut total = 0.0;
    for k in 0..steps {
        let mut d = params[(k + 1) % n] - params[k];
        if angle {
            d = (d + PI).rem_euclid(TAU) - PI;
            if d.abs() > 0.5 * PI {
                return ArcTag::Suspect;
            }
        }
        if d.abs() < 1e-14 {
            continue;
        }
        if sign == 0.0 {
            sign = d.signum();
        } else if d.signum() != sign {
            return ArcTag::Suspect;
        }
        total += d;
    }
    let good = match curve.kind {
        CurveKind::Circle { .. } => line.closed && (total.abs() - TAU).abs() < 0.05 * TAU,
        CurveKind::Lemniscate { .. } => !line.closed && total.abs() > TAU - 0.5 && total.abs() < TAU + 0.05,
        CurveKind::ChartSegment { chart, .. } => {
            let (x0, x1) = chart.x_range;
            let tol = 1e-6 * (x1 - x0);
            let (a, b) = (params[0].min(params[n - 1]), params[0].max(params[n - 1]));
            !line.closed && (a - x0).abs() <= tol && (b - x1).abs() <= tol
        }
    };
    if good {
        ArcTag::Good
    } else {
        ArcTag::Suspect
    }
}

/// Counts good, bad and suspect components; the three always sum to the
/// number of polylines.
pub fn classify_arcs(polylines: &[Polyline], hm: &HoloMap, curve: &ImplicitCurve, r: f64, resolution: usize) -> ArcCounts {
    let mut c = ArcCounts::default();
    for l in polylines {
        match classify_arc(hm, curve, l, r, resolution) {
            ArcTag::Good => c.good += 1,
            ArcTag::Bad => c.bad += 1,
            ArcTag::Suspect => c.suspect += 1,
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DIAMETER;

    fn hm(s: &str) -> HoloMap {
        HoloMap::parse(s).unwrap()
    }

    /// Chordal radius of the circle `|w| = 1` seen from 0.
    fn unit_circle_radius() -> f64 {
        DIAMETER / 2f64.sqrt()
    }

    #[test]
    fn z2_preimage_of_unit_circle() {
        let rho = unit_circle_radius();
        let c = ImplicitCurve::circle(SpherePoint::new(0.0, 0.0), rho).unwrap();
        let lines = trace_preimage(&hm("z^2"), &c, 2.0, 128).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        let k = rho / DIAMETER;
        let radius = (k / (1.0 - k * k).sqrt()).sqrt();
        for p in &lines[0].points {
            assert!((p.norm() - radius).abs() < 1e-8);
        }
        // a double cover of the circle is not a homeomorphic lift
        let counts = classify_arcs(&lines, &hm("z^2"), &c, 2.0, 128);
        assert_eq!(counts.suspect, 1);
    }

    #[test]
    fn z3_small_circle_gives_three_good_loops() {
        let c = ImplicitCurve::circle(SpherePoint::new(1.0, 0.0), 0.05).unwrap();
        let lines = trace_preimage(&hm("z^3"), &c, 2.0, 128).unwrap();
        assert_eq!(lines.len(), 3);
        let counts = classify_arcs(&lines, &hm("z^3"), &c, 2.0, 128);
        assert_eq!((counts.good, counts.bad, counts.suspect), (3, 0, 0));
    }

    #[test]
    fn identity_reproduces_the_curve() {
        let c = ImplicitCurve::circle(SpherePoint::new(0.5, 0.2), 0.1).unwrap();
        let lines = trace_preimage(&hm("z"), &c, 3.0, 128).unwrap();
        assert_eq!(lines.len(), 1);
        for p in &lines[0].points {
            assert!(c.level(Ext::Finite(*p)).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_crossing_the_boundary_is_bad() {
        let c = ImplicitCurve::circle(SpherePoint::new(1.0, 0.0), 0.1).unwrap();
        let lines = trace_preimage(&hm("z"), &c, 1.0, 128).unwrap();
        let counts = classify_arcs(&lines, &hm("z"), &c, 1.0, 128);
        assert_eq!(counts.total(), lines.len());
        assert!(counts.bad >= 1 && counts.good == 0);
    }

    #[test]
    fn low_resolution_is_rejected() {
        let c = ImplicitCurve::circle(SpherePoint::new(1.0, 0.0), 0.1).unwrap();
        assert!(trace_preimage(&hm("z"), &c, 1.0, 32).is_err());
    }
}
