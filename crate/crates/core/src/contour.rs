//! Marching squares for level sets `g = 0` inside the disk `|z| <= r`.
//!
//! Nodes carry `g`; cells with a non-finite corner are skipped, which is how
//! callers punch holes around singular points. Crossings are refined on the
//! true function, saddle cells are resolved on finer subgrids, and chains are
//! clipped at the circle. Every polyline keeps `g > 0` on its left.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use rayon::prelude::*;

pub(crate) const MAX_SADDLE_DEPTH: u32 = 6;

/// A traced piece of a level set, with the positive side on its left.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Complex64>,
    pub closed: bool,
    /// Passes through a saddle cell still ambiguous at the maximal depth.
    pub unresolved: bool,
}

impl Polyline {
    /// Signed area enclosed by a closed polyline (positive when
    /// counter-clockwise).
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut s = 0.0;
        for k in 0..n {
            let a = self.points[k];
            let b = self.points[(k + 1) % n];
            s += a.re * b.im - b.re * a.im;
        }
        0.5 * s
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Leftmost point, lowest on ties.
    pub fn leftmost(&self) -> Complex64 {
        let mut best = self.points[0];
        for &p in &self.points[1..] {
            if p.re < best.re || (p.re == best.re && p.im < best.im) {
                best = p;
            }
        }
        best
    }
}

/// Even-odd point-in-polygon test.
pub(crate) fn contains(polygon: &[Complex64], p: Complex64) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Contours {
    pub lines: Vec<Polyline>,
    pub unresolved_cells: Vec<Complex64>,
}

/// Node lattice covering `[-r, r]²` with one spare cell on each side and a
/// fixed irrational shift so that nodes avoid symmetric features.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lattice {
    pub origin: Complex64,
    pub h: f64,
    /// cells per side; there are `n + 1` nodes per side
    pub n: usize,
}

impl Lattice {
    pub fn covering(r: f64, resolution: usize) -> Lattice {
        let h = 2.0 * r / resolution as f64;
        let shift = Complex64::new(std::f64::consts::FRAC_1_PI * h, 0.211_324_865_4 * h);
        Lattice {
            origin: Complex64::new(-r - h, -r - h) + shift,
            h,
            n: resolution + 2,
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        self.origin + Complex64::new(i as f64 * self.h, j as f64 * self.h)
    }
}

type Key = u64;

fn h_key(lat: &Lattice, i: usize, j: usize) -> Key {
    ((j * (lat.n + 1) + i) as u64) << 1
}

fn v_key(lat: &Lattice, i: usize, j: usize) -> Key {
    (((j * (lat.n + 1) + i) as u64) << 1) | 1
}

fn key_nodes(lat: &Lattice, key: Key) -> ((usize, usize), (usize, usize)) {
    let idx = (key >> 1) as usize;
    let (i, j) = (idx % (lat.n + 1), idx / (lat.n + 1));
    if key & 1 == 0 {
        ((i, j), (i + 1, j))
    } else {
        ((i, j), (i, j + 1))
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    from: Key,
    to: Key,
    unresolved: bool,
}

/// Root of `g` on the segment `a → b` (values `ga`, `gb` of opposite sign)
/// by the Illinois method; falls back to linear interpolation if `g` is not
/// finite inside.
pub(crate) fn refine_crossing<G: Fn(Complex64) -> f64>(
    g: &G,
    a: Complex64,
    b: Complex64,
    ga: f64,
    gb: f64,
) -> Complex64 {
    let (mut t0, mut t1, mut f0, mut f1) = (0.0, 1.0, ga, gb);
    let linear = a + (b - a) * (ga / (ga - gb));
    let mut side = 0i8;
    for _ in 0..60 {
        let t = (t0 * f1 - t1 * f0) / (f1 - f0);
        let ft = g(a + (b - a) * t);
        if !ft.is_finite() {
            return linear;
        }
        if ft == 0.0 || (t1 - t0) < 1e-13 {
            return a + (b - a) * t;
        }
        if (ft > 0.0) == (f1 > 0.0) {
            t1 = t;
            f1 = ft;
            if side == 1 {
                f0 *= 0.5;
            }
            side = 1;
        } else {
            t0 = t;
            f0 = ft;
            if side == -1 {
                f1 *= 0.5;
            }
            side = -1;
        }
    }
    a + (b - a) * ((t0 * f1 - t1 * f0) / (f1 - f0))
}

/// Decides whether the positive corners of a saddle cell are joined inside
/// the cell, by flood fill on successively finer subgrids.
fn resolve_saddle<G: Fn(Complex64) -> f64>(g: &G, z0: Complex64, h: f64, c0_positive: bool) -> Option<bool> {
    for depth in 1..=MAX_SADDLE_DEPTH {
        let s = 1usize << depth;
        let w = s + 1;
        let mut vals = vec![0.0; w * w];
        for b in 0..w {
            for a in 0..w {
                let v = g(z0 + Complex64::new(a as f64, b as f64) * (h / s as f64));
                if !v.is_finite() {
                    return None;
                }
                vals[b * w + a] = v;
            }
        }
        let reach = |positive: bool, start: (usize, usize), goal: (usize, usize)| -> bool {
            let mut seen = vec![false; w * w];
            let mut stack = vec![start];
            seen[start.1 * w + start.0] = true;
            while let Some((x, y)) = stack.pop() {
                if (x, y) == goal {
                    return true;
                }
                let mut push = |nx: usize, ny: usize| {
                    let k = ny * w + nx;
                    if !seen[k] && (vals[k] > 0.0) == positive {
                        seen[k] = true;
                        stack.push((nx, ny));
                    }
                };
                if x + 1 < w {
                    push(x + 1, y);
                }
                if x > 0 {
                    push(x - 1, y);
                }
                if y + 1 < w {
                    push(x, y + 1);
                }
                if y > 0 {
                    push(x, y - 1);
                }
            }
            false
        };
        // diagonal pairs: (c0, c2) and (c1, c3)
        let d02 = reach(c0_positive, (0, 0), (s, s));
        let d13 = reach(!c0_positive, (s, 0), (0, s));
        let (pos, neg) = if c0_positive { (d02, d13) } else { (d13, d02) };
        if pos != neg {
            return Some(pos);
        }
    }
    None
}

/// Extracts `{g = 0} ∩ {|z| <= r}` on a lattice with `resolution` cells
/// across the disk.
pub(crate) fn trace_level<G>(g: &G, r: f64, resolution: usize) -> Contours
where
    G: Fn(Complex64) -> f64 + Sync,
{
    let lat = Lattice::covering(r, resolution);
    let n = lat.n;
    let h = lat.h;
    let reach = r + 1.5 * h;
    let values: Vec<f64> = (0..=n)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..=n).map(move |i| {
                let z = lat.node(i, j);
                if z.norm() > reach {
                    f64::NAN
                } else {
                    let v = g(z);
                    // keep nodes strictly off the level
                    if v == 0.0 {
                        f64::MIN_POSITIVE
                    } else {
                        v
                    }
                }
            })
        })
        .collect();
    let val = |i: usize, j: usize| values[j * (n + 1) + i];

    let per_row: Vec<(Vec<Segment>, Vec<Complex64>)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut segs = Vec::new();
            let mut unresolved = Vec::new();
            for i in 0..n {
                let v = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
                if v.iter().any(|x| !x.is_finite()) {
                    continue;
                }
                let z0 = lat.node(i, j);
                let nearest = Complex64::new(
                    0f64.clamp(z0.re, z0.re + h),
                    0f64.clamp(z0.im, z0.im + h),
                );
                if nearest.norm() > r {
                    continue;
                }
                let s = v.map(|x| x > 0.0);
                let edges = [h_key(&lat, i, j), v_key(&lat, i + 1, j), h_key(&lat, i, j + 1), v_key(&lat, i, j)];
                let crossings = (0..4).filter(|&k| s[k] != s[(k + 1) % 4]).count();
                match crossings {
                    0 => {}
                    2 => {
                        let out = (0..4).find(|&k| s[k] && !s[(k + 1) % 4]).unwrap();
                        let inn = (0..4).find(|&k| !s[k] && s[(k + 1) % 4]).unwrap();
                        segs.push(Segment {
                            from: edges[out],
                            to: edges[inn],
                            unresolved: false,
                        });
                    }
                    _ => {
                        let (pos_joined, flag) = match resolve_saddle(g, z0, h, s[0]) {
                            Some(b) => (b, false),
                            None => {
                                let saddle = (v[0] * v[2] - v[1] * v[3]) / (v[0] + v[2] - v[1] - v[3]);
                                unresolved.push(z0 + Complex64::new(0.5 * h, 0.5 * h));
                                (saddle > 0.0, true)
                            }
                        };
                        for k in 0..4 {
                            let prev = (k + 3) % 4;
                            if pos_joined && !s[k] {
                                segs.push(Segment {
                                    from: edges[prev],
                                    to: edges[k],
                                    unresolved: flag,
                                });
                            } else if !pos_joined && s[k] {
                                segs.push(Segment {
                                    from: edges[k],
                                    to: edges[prev],
                                    unresolved: flag,
                                });
                            }
                        }
                    }
                }
            }
            (segs, unresolved)
        })
        .collect();

    let mut segments = Vec::new();
    let mut unresolved_cells = Vec::new();
    for (s, u) in per_row {
        segments.extend(s);
        unresolved_cells.extend(u);
    }

    let mut keys: Vec<Key> = segments.iter().flat_map(|s| [s.from, s.to]).collect();
    keys.sort_unstable();
    keys.dedup();
    let points: HashMap<Key, Complex64> = keys
        .par_iter()
        .map(|&k| {
            let ((ia, ja), (ib, jb)) = key_nodes(&lat, k);
            let p = refine_crossing(g, lat.node(ia, ja), lat.node(ib, jb), val(ia, ja), val(ib, jb));
            (k, p)
        })
        .collect();

    let chains = chain(&segments);
    let mut lines = Vec::new();
    for (ks, closed, flag) in chains {
        let pts: Vec<Complex64> = ks.iter().map(|k| points[k]).collect();
        for mut line in clip(g, pts, closed, r, h) {
            line.unresolved = flag;
            if line.points.len() >= 2 {
                lines.push(line);
            }
        }
    }
    Contours {
        lines,
        unresolved_cells,
    }
}

/// Links oriented segments into chains of edge keys.
fn chain(segments: &[Segment]) -> Vec<(Vec<Key>, bool, bool)> {
    let next: HashMap<Key, usize> = segments.iter().enumerate().map(|(i, s)| (s.from, i)).collect();
    let incoming: HashSet<Key> = segments.iter().map(|s| s.to).collect();
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let follow = |start: usize, used: &mut Vec<bool>| -> (Vec<Key>, bool, bool) {
        let mut keys = vec![segments[start].from];
        let mut flag = false;
        let mut cur = start;
        loop {
            used[cur] = true;
            flag |= segments[cur].unresolved;
            let to = segments[cur].to;
            if to == keys[0] {
                return (keys, true, flag);
            }
            keys.push(to);
            match next.get(&to) {
                Some(&nx) if !used[nx] => cur = nx,
                _ => return (keys, false, flag),
            }
        }
    };
    for i in 0..segments.len() {
        if !used[i] && !incoming.contains(&segments[i].from) {
            out.push(follow(i, &mut used));
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            out.push(follow(i, &mut used));
        }
    }
    out
}

fn circle_clip<G: Fn(Complex64) -> f64>(g: &G, inside: Complex64, outside: Complex64, r: f64, h: f64) -> Complex64 {
    let d = outside - inside;
    let (a, b, c) = (d.norm_sqr(), 2.0 * (inside.re * d.re + inside.im * d.im), inside.norm_sqr() - r * r);
    let t = ((-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)).clamp(0.0, 1.0);
    let p = inside + d * t;
    let theta = p.arg();
    let delta = 1.5 * h / r;
    let on = |th: f64| Complex64::from_polar(r, th);
    let (ga, gb) = (g(on(theta - delta)), g(on(theta + delta)));
    if !(ga.is_finite() && gb.is_finite()) || (ga > 0.0) == (gb > 0.0) {
        return Complex64::from_polar(r, theta);
    }
    let g_theta = |z: Complex64| g(on(z.re));
    let th = refine_crossing(
        &g_theta,
        Complex64::new(theta - delta, 0.0),
        Complex64::new(theta + delta, 0.0),
        ga,
        gb,
    );
    on(th.re)
}

/// Splits a chain into the maximal runs inside `|z| <= r`.
fn clip<G: Fn(Complex64) -> f64>(g: &G, pts: Vec<Complex64>, closed: bool, r: f64, h: f64) -> Vec<Polyline> {
    let inside = |p: &Complex64| p.norm() <= r;
    if pts.iter().all(inside) {
        return vec![Polyline {
            points: pts,
            closed,
            unresolved: false,
        }];
    }
    let seq: Vec<Complex64> = if closed {
        let start = pts.iter().position(|p| !inside(p)).unwrap();
        let mut s: Vec<Complex64> = pts[start..].iter().chain(&pts[..start]).copied().collect();
        s.push(pts[start]);
        s
    } else {
        pts
    };
    let mut out = Vec::new();
    let mut run: Vec<Complex64> = Vec::new();
    for k in 0..seq.len() {
        let p = seq[k];
        if inside(&p) {
            if run.is_empty() && k > 0 {
                run.push(circle_clip(g, p, seq[k - 1], r, h));
            }
            run.push(p);
        } else if !run.is_empty() {
            run.push(circle_clip(g, *run.last().unwrap(), p, r, h));
            out.push(Polyline {
                points: std::mem::take(&mut run),
                closed: false,
                unresolved: false,
            });
        }
    }
    if !run.is_empty() {
        out.push(Polyline {
            points: run,
            closed: false,
            unresolved: false,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_one_ccw_loop() {
        let g = |z: Complex64| 1.0 - z.norm();
        let c = trace_level(&g, 2.0, 64);
        assert_eq!(c.lines.len(), 1);
        let l = &c.lines[0];
        assert!(l.closed);
        assert!(l.signed_area() > 0.0);
        assert!((l.signed_area() - std::f64::consts::PI).abs() < 0.01);
        for p in &l.points {
            assert!((p.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn outside_positive_is_clockwise() {
        let g = |z: Complex64| z.norm() - 1.0;
        let c = trace_level(&g, 2.0, 64);
        assert_eq!(c.lines.len(), 1);
        assert!(c.lines[0].signed_area() < 0.0);
    }

    #[test]
    fn line_is_clipped_at_the_circle() {
        let g = |z: Complex64| z.im - 0.3;
        let c = trace_level(&g, 1.0, 64);
        assert_eq!(c.lines.len(), 1);
        let l = &c.lines[0];
        assert!(!l.closed);
        let (a, b) = (l.points[0], *l.points.last().unwrap());
        assert!((a.norm() - 1.0).abs() < 1e-9 && (b.norm() - 1.0).abs() < 1e-9);
        assert!((a.im - 0.3).abs() < 1e-9 && (b.im - 0.3).abs() < 1e-9);
        // positive side (above) on the left: travel left to right
        assert!(a.re < b.re);
    }

    #[test]
    fn saddle_pairs_follow_the_function() {
        // hyperbola branches x·y = 0.01, two separate components
        let g = |z: Complex64| z.re * z.im - 0.0001;
        let c = trace_level(&g, 1.0, 8);
        assert_eq!(c.lines.len(), 2);
        assert!(c.unresolved_cells.is_empty());
    }

    #[test]
    fn point_in_polygon() {
        let sq = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ];
        assert!(contains(&sq, Complex64::new(0.5, 0.5)));
        assert!(!contains(&sq, Complex64::new(1.5, 0.5)));
    }
}
