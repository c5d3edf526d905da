use num_complex::Complex64;

use super::{boundary_margin, classify_arc, trace_curve, ArcCounts, ArcTag, ImplicitCurve, PointBuckets, TraceError};
use crate::expr::{Ext, HoloMap};
use crate::raster::{self, Connectivity, Grid, UNLABELLED};

/// Tube half-width around drawn arcs, in pixels. Above 1/2 so that every
/// arc leaves an 8-connected trail of blocked pixels.
const TUBE: f64 = 0.55;
const VERTEX_OWNER: u32 = u32::MAX - 1;

/// The figure-eight `|(w - node)² - scale²| = scale²` on the sphere: one
/// vertex, two loops, three faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphSpec {
    pub node: Complex64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    /// The lobe around `node + scale`.
    LobePlus,
    /// The lobe around `node - scale`.
    LobeMinus,
    /// The face containing infinity.
    Outer,
}

impl Face {
    pub fn as_str(self) -> &'static str {
        match self {
            Face::LobePlus => "lobe+",
            Face::LobeMinus => "lobe-",
            Face::Outer => "outer",
        }
    }
}

impl GraphSpec {
    pub fn new(node: Complex64, scale: f64) -> Result<Self, TraceError> {
        ImplicitCurve::lemniscate(node, scale)?;
        Ok(GraphSpec { node, scale })
    }

    pub fn curve(&self) -> ImplicitCurve {
        ImplicitCurve::lemniscate(self.node, self.scale).expect("validated in new")
    }

    /// Euler characteristic of the graph on the sphere.
    pub fn euler(&self) -> i64 {
        -1
    }

    /// Face of the complement containing `w`.
    pub fn face(&self, w: Ext) -> Face {
        let Ext::Finite(w) = w else { return Face::Outer };
        if self.curve().level(Ext::Finite(w)) <= 0.0 {
            return Face::Outer;
        }
        if ((w - self.node) / self.scale).re >= 0.0 {
            Face::LobePlus
        } else {
            Face::LobeMinus
        }
    }

    /// A point inside each face.
    pub fn face_center(&self, face: Face) -> Ext {
        match face {
            Face::LobePlus => Ext::Finite(self.node + self.scale),
            Face::LobeMinus => Ext::Finite(self.node - self.scale),
            Face::Outer => Ext::Infinity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphArc {
    pub points: Vec<Complex64>,
    pub closed: bool,
    pub tag: ArcTag,
    /// Indices into `PreimageGraph::vertices` of the vertices at each end.
    pub ends: [Option<usize>; 2],
}

/// The traced preimage of the figure-eight in `|z| <= r`, with bad arcs
/// kept for display but excluded from the Euler count.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageGraph {
    pub spec: GraphSpec,
    pub r: f64,
    pub resolution: usize,
    pub cell: f64,
    pub punch: f64,
    /// Preimages of the double point whose blob stays inside the margin.
    pub vertices: Vec<Complex64>,
    pub arcs: Vec<GraphArc>,
    /// `V - E` of the retained graph, with a virtual vertex on each closed
    /// arc and at each free end.
    pub euler: i64,
}

impl PreimageGraph {
    pub fn counts(&self) -> ArcCounts {
        let mut c = ArcCounts::default();
        for a in &self.arcs {
            match a.tag {
                ArcTag::Good => c.good += 1,
                ArcTag::Bad => c.bad += 1,
                ArcTag::Suspect => c.suspect += 1,
            }
        }
        c
    }

    pub fn retained(&self) -> impl Iterator<Item = &GraphArc> {
        self.arcs.iter().filter(|a| a.tag != ArcTag::Bad)
    }

    /// Number of retained edges.
    pub fn edges(&self) -> usize {
        self.retained().count()
    }
}

pub fn build_preimage_graph(
    hm: &HoloMap,
    spec: &GraphSpec,
    r: f64,
    resolution: usize,
) -> Result<PreimageGraph, TraceError> {
    let curve = spec.curve();
    let traced = trace_curve(hm, &curve, r, resolution)?;
    let margin = boundary_margin(r, resolution);
    let reach = traced.punch + 2.0 * traced.cell;

    // a counted vertex keeps its whole pixel blob clear of the margin band,
    // otherwise the blob would join the graph to the boundary circle
    let limit = margin - reach - traced.cell;
    let mut vertices: Vec<Complex64> = traced.vertices.iter().copied().filter(|z| z.norm() < limit).collect();
    vertices.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let all = PointBuckets::new(&traced.vertices, reach);
    let counted = |z: Complex64| vertices.iter().position(|&v| v == z);

    let mut arcs = Vec::new();
    for line in &traced.lines {
        let mut tag = classify_arc(hm, &curve, line, r, resolution);
        let mut ends = [None, None];
        if !line.closed {
            let tips = [line.points[0], *line.points.last().unwrap()];
            for (k, &tip) in tips.iter().enumerate() {
                if let Some(v) = all.nearest_within(tip, reach) {
                    match counted(v) {
                        Some(i) => ends[k] = Some(i),
                        // the arc runs into a vertex that is not counted
                        None => tag = ArcTag::Bad,
                    }
                }
            }
        }
        arcs.push(GraphArc {
            points: line.points.clone(),
            closed: line.closed,
            tag,
            ends,
        });
    }
    let key = |a: &GraphArc| {
        let p = a.points.iter().copied().fold(a.points[0], |m, p| {
            if p.re < m.re || (p.re == m.re && p.im < m.im) {
                p
            } else {
                m
            }
        });
        (p.re, p.im)
    };
    arcs.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });

    let mut euler = vertices.len() as i64;
    for a in arcs.iter().filter(|a| a.tag != ArcTag::Bad) {
        euler -= 1;
        if a.closed {
            euler += 1;
        } else {
            euler += a.ends.iter().filter(|e| e.is_none()).count() as i64;
        }
    }
    Ok(PreimageGraph {
        spec: *spec,
        r,
        resolution,
        cell: traced.cell,
        punch: traced.punch,
        vertices,
        arcs,
        euler,
    })
}

/// A component of `{|z| <= r}` minus the retained graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplementComponent {
    pub chi: i64,
    pub touches_boundary: bool,
    pub pixels: usize,
    /// A pixel centre inside the component.
    pub sample: Complex64,
    /// Face of the figure-eight containing the image of `sample`.
    pub face: Face,
}

/// Pixel decomposition of the disk by the retained graph.
#[derive(Debug, Clone)]
pub struct Complement {
    pub components: Vec<ComplementComponent>,
    r: f64,
    pixel: f64,
    labels: Grid<u32>,
}

impl Complement {
    /// Component containing `z`, if `z` falls on a free pixel.
    pub fn component_at(&self, z: Complex64) -> Option<usize> {
        let x = ((z.re + self.r) / self.pixel).floor();
        let y = ((z.im + self.r) / self.pixel).floor();
        if x < 0.0 || y < 0.0 || x >= self.labels.width as f64 || y >= self.labels.height as f64 {
            return None;
        }
        let l = *self.labels.get(x as usize, y as usize);
        (l != UNLABELLED).then_some(l as usize)
    }
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0)
    };
    (p - (a + d * t)).norm()
}

struct Canvas {
    n: usize,
    r: f64,
    pixel: f64,
    owner: Grid<u32>,
}

impl Canvas {
    fn center(&self, x: usize, y: usize) -> Complex64 {
        Complex64::new(-self.r + (x as f64 + 0.5) * self.pixel, -self.r + (y as f64 + 0.5) * self.pixel)
    }

    fn range(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let a = ((lo + self.r) / self.pixel - 0.5).ceil().max(0.0) as usize;
        let b = ((hi + self.r) / self.pixel - 0.5).floor().min(self.n as f64 - 1.0);
        if b < 0.0 || (a as f64) > b {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        a..=(b as usize)
    }

    /// Marks pixels within `width` of the segment; returns a pixel already
    /// held by a different owner, if any.
    fn stroke(&mut self, a: Complex64, b: Complex64, width: f64, id: u32) -> Vec<Complex64> {
        let mut clashes = Vec::new();
        for y in self.range(a.im.min(b.im) - width, a.im.max(b.im) + width) {
            for x in self.range(a.re.min(b.re) - width, a.re.max(b.re) + width) {
                let c = self.center(x, y);
                if segment_distance(c, a, b) > width {
                    continue;
                }
                let held = *self.owner.get(x, y);
                if held == UNLABELLED {
                    self.owner.set(x, y, id);
                } else if held != id && held != VERTEX_OWNER {
                    clashes.push(c);
                }
            }
        }
        clashes
    }

    /// A pixel within `width` of the segment held by another arc and not
    /// excused by `skip`.
    fn probe(&self, a: Complex64, b: Complex64, width: f64, id: u32, skip: impl Fn(Complex64) -> bool) -> Option<Complex64> {
        for y in self.range(a.im.min(b.im) - width, a.im.max(b.im) + width) {
            for x in self.range(a.re.min(b.re) - width, a.re.max(b.re) + width) {
                let held = *self.owner.get(x, y);
                if held == UNLABELLED || held == id || held == VERTEX_OWNER {
                    continue;
                }
                let c = self.center(x, y);
                if segment_distance(c, a, b) <= width && !skip(c) {
                    return Some(c);
                }
            }
        }
        None
    }
}

/// Components of the disk minus the retained graph, on a pixel grid with
/// the tracing cell size. Fails if two arcs come closer than a pixel away
/// from the vertices.
pub fn complement_components(hm: &HoloMap, graph: &PreimageGraph) -> Result<Complement, TraceError> {
    let n = graph.resolution;
    let r = graph.r;
    let pixel = 2.0 * r / n as f64;
    let mut canvas = Canvas {
        n,
        r,
        pixel,
        owner: Grid::new(n, n, UNLABELLED),
    };
    let reach = graph.punch + 2.0 * graph.cell;
    let width = TUBE * pixel;
    for &v in &graph.vertices {
        canvas.stroke(v, v, reach, VERTEX_OWNER);
    }
    let near_vertex = PointBuckets::new(&graph.vertices, reach);
    for (id, arc) in graph.arcs.iter().enumerate() {
        if arc.tag == ArcTag::Bad {
            continue;
        }
        let id = id as u32;
        let pts = &arc.points;
        let mut clashes = Vec::new();
        let steps = if arc.closed { pts.len() } else { pts.len() - 1 };
        for k in 0..steps {
            clashes.extend(canvas.stroke(pts[k], pts[(k + 1) % pts.len()], width, id));
        }
        for (k, end) in arc.ends.iter().enumerate() {
            if let Some(v) = end {
                let tip = if k == 0 { pts[0] } else { pts[pts.len() - 1] };
                clashes.extend(canvas.stroke(tip, graph.vertices[*v], width, id));
            }
        }
        if let Some(&c) = clashes.iter().find(|&&c| near_vertex.nearest_within(c, reach).is_none()) {
            return Err(TraceError::SharedCorridor { near: c });
        }
    }

    // tubes of different arcs must keep a free gap of two pixels, or
    // faces between them pinch shut on the grid
    let gap = width + 2.0 * pixel;
    let near_gap = PointBuckets::new(&graph.vertices, reach + gap);
    for (id, arc) in graph.arcs.iter().enumerate() {
        if arc.tag == ArcTag::Bad {
            continue;
        }
        let pts = &arc.points;
        let steps = if arc.closed { pts.len() } else { pts.len() - 1 };
        for k in 0..steps {
            let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
            let by_vertex = |c: Complex64| near_gap.nearest_within(c, reach + gap).is_some();
            if let Some(c) = canvas.probe(a, b, gap, id as u32, by_vertex) {
                return Err(TraceError::SharedCorridor { near: c });
            }
        }
    }

    let inside = |c: Complex64| c.norm() <= r;
    // every retained arc must show free pixels on both sides somewhere
    // outside the vertex blobs, or the faces it bounds are lost
    let clear = reach + 2.0 * pixel;
    let near_blob = PointBuckets::new(&graph.vertices, clear);
    let open = |z: Complex64| {
        let x = ((z.re + r) / pixel).floor();
        let y = ((z.im + r) / pixel).floor();
        x >= 0.0
            && y >= 0.0
            && (x as usize) < n
            && (y as usize) < n
            && inside(z)
            && *canvas.owner.get(x as usize, y as usize) == UNLABELLED
    };
    for arc in graph.retained() {
        let pts = &arc.points;
        let m = pts.len();
        let resolved = (0..m).any(|k| {
            let p = pts[k];
            let t = pts[(k + 1).min(m - 1)] - pts[k.saturating_sub(1)];
            if t.norm() == 0.0 || near_blob.nearest_within(p, clear).is_some() {
                return false;
            }
            let normal = Complex64::new(-t.im, t.re) / t.norm() * (width + pixel);
            open(p + normal) && open(p - normal)
        });
        if !resolved {
            return Err(TraceError::Unresolved { near: pts[m / 2] });
        }
    }

    let mut free = Grid::new(n, n, false);
    for y in 0..n {
        for x in 0..n {
            let c = canvas.center(x, y);
            free.set(x, y, inside(c) && *canvas.owner.get(x, y) == UNLABELLED);
        }
    }
    let (labels, count) = raster::label(&free, Connectivity::Four);

    struct Acc {
        pixels: usize,
        lo: (usize, usize),
        hi: (usize, usize),
        touches: bool,
        sample: Option<(usize, usize)>,
        first: (usize, usize),
    }
    let mut acc: Vec<Option<Acc>> = (0..count).map(|_| None).collect();
    for y in 0..n {
        for x in 0..n {
            let l = *labels.get(x, y);
            if l == UNLABELLED {
                continue;
            }
            let edge = x == 0 || y == 0 || x == n - 1 || y == n - 1;
            let touches = edge
                || labels
                    .neighbours(x, y, Connectivity::Four)
                    .any(|(nx, ny)| !inside(canvas.center(nx, ny)));
            let interior = !edge
                && labels
                    .neighbours(x, y, Connectivity::Eight)
                    .all(|(nx, ny)| *labels.get(nx, ny) == l);
            let a = acc[l as usize].get_or_insert(Acc {
                pixels: 0,
                lo: (x, y),
                hi: (x, y),
                touches: false,
                sample: None,
                first: (x, y),
            });
            a.pixels += 1;
            a.lo = (a.lo.0.min(x), a.lo.1.min(y));
            a.hi = (a.hi.0.max(x), a.hi.1.max(y));
            a.touches |= touches;
            if interior && a.sample.is_none() {
                a.sample = Some((x, y));
            }
        }
    }

    let mut components = Vec::with_capacity(count);
    for (l, a) in acc.into_iter().enumerate() {
        let a = a.expect("every label has a pixel");
        // complement of the component inside its padded bounding box
        let (w, h) = (a.hi.0 - a.lo.0 + 3, a.hi.1 - a.lo.1 + 3);
        let mut mask = Grid::new(w, h, true);
        for y in a.lo.1..=a.hi.1 {
            for x in a.lo.0..=a.hi.0 {
                if *labels.get(x, y) == l as u32 {
                    mask.set(x - a.lo.0 + 1, y - a.lo.1 + 1, false);
                }
            }
        }
        let chi = 2 - raster::count_components(&mask, Connectivity::Eight) as i64;
        // a face without one pixel whose 3×3 block lies inside it is a
        // pocket of the raster, not a resolved face
        let Some((sx, sy)) = a.sample else {
            return Err(TraceError::Unresolved {
                near: canvas.center(a.first.0, a.first.1),
            });
        };
        let sample = canvas.center(sx, sy);
        let face = match hm.eval(sample) {
            Ok(w) => graph.spec.face(w),
            Err(_) => Face::Outer,
        };
        components.push(ComplementComponent {
            chi,
            touches_boundary: a.touches,
            pixels: a.pixels,
            sample,
            face,
        });
    }
    Ok(Complement {
        components,
        r,
        pixel,
        labels,
    })
}

/// The two sides of `1 = χ(C₀) + χ(graph) + Σ χ(C)`, where `C₀` collects
/// the components touching the boundary circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerCheck {
    pub chi_boundary: i64,
    pub euler: i64,
    pub chi_interior: i64,
}

impl EulerCheck {
    pub fn holds(&self) -> bool {
        self.chi_boundary + self.euler + self.chi_interior == 1
    }
}

pub fn euler_identity(graph: &PreimageGraph, complement: &Complement) -> EulerCheck {
    let (mut chi_boundary, mut chi_interior) = (0, 0);
    for c in &complement.components {
        if c.touches_boundary {
            chi_boundary += c.chi;
        } else {
            chi_interior += c.chi;
        }
    }
    EulerCheck {
        chi_boundary,
        euler: graph.euler,
        chi_interior,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hm(s: &str) -> HoloMap {
        HoloMap::parse(s).unwrap()
    }

    #[test]
    fn identity_reproduces_the_figure_eight() {
        let spec = GraphSpec::new(Complex64::new(0.0, 0.5), 1.0).unwrap();
        let g = build_preimage_graph(&hm("z"), &spec, 4.0, 256).unwrap();
        assert_eq!(g.vertices.len(), 1);
        assert_eq!(g.counts().good, 2);
        assert_eq!(g.euler, -1);
        let comp = complement_components(&hm("z"), &g).unwrap();
        let check = euler_identity(&g, &comp);
        assert!(check.holds(), "{check:?}");
        assert_eq!(comp.components.len(), 3);
        // the outer face meets the circle in an annulus
        assert_eq!(check.chi_boundary, 0);
        let lobe = comp.component_at(Complex64::new(1.0, 0.5)).unwrap();
        assert_eq!(comp.components[lobe].face, Face::LobePlus);
        assert!(!comp.components[lobe].touches_boundary);
    }

    #[test]
    fn cube_has_three_vertices_and_six_edges() {
        let spec = GraphSpec::new(Complex64::new(0.0, 0.5), 1.5).unwrap();
        let f = hm("z^3");
        let g = build_preimage_graph(&f, &spec, 2.0, 256).unwrap();
        assert_eq!(g.vertices.len(), 3);
        assert_eq!(g.edges(), 6);
        assert_eq!(g.counts().bad, 0);
        assert_eq!(g.euler, -3);
        assert!(g.arcs.iter().all(|a| a.ends.iter().all(|e| e.is_some())));
        let comp = complement_components(&f, &g).unwrap();
        let check = euler_identity(&g, &comp);
        assert_eq!(check.chi_boundary, -2);
        assert!(check.holds());
        let interior: Vec<_> = comp.components.iter().filter(|c| !c.touches_boundary).collect();
        assert_eq!(interior.len(), 6);
        assert!(interior.iter().all(|c| c.chi == 1 && c.face != Face::Outer));
    }

    #[test]
    fn faces_of_the_figure_eight() {
        let spec = GraphSpec::new(Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert_eq!(spec.face(Ext::Finite(Complex64::new(1.0, 0.0))), Face::LobePlus);
        assert_eq!(spec.face(Ext::Finite(Complex64::new(-1.0, 0.0))), Face::LobeMinus);
        assert_eq!(spec.face(Ext::Finite(Complex64::new(0.0, 1.0))), Face::Outer);
        assert_eq!(spec.face(Ext::Infinity), Face::Outer);
        for f in [Face::LobePlus, Face::LobeMinus, Face::Outer] {
            assert_eq!(spec.face(spec.face_center(f)), f);
        }
    }

    #[test]
    fn graph_cut_by_the_circle_has_bad_arcs() {
        let spec = GraphSpec::new(Complex64::new(0.0, 0.0), 1.0).unwrap();
        let g = build_preimage_graph(&hm("z"), &spec, 1.0, 128).unwrap();
        assert!(g.counts().bad >= 1);
        let comp = complement_components(&hm("z"), &g).unwrap();
        assert!(euler_identity(&g, &comp).holds());
    }
}
