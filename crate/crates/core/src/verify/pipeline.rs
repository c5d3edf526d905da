use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::ReportRow;
use crate::count::{find_islands, mean_degree, total_ramification, IslandRecord};
use crate::expr::HoloMap;
use crate::metric::{MetricError, MetricProfile, SphericalDisk};
use crate::trace::{
    build_preimage_graph, classify_arc, complement_components, euler_identity, select_perturbation,
    arc_test_integral, trace_preimage, ArcTag, Complement, GraphSpec, ImplicitCurve, Polyline, PreimageGraph,
    RectangleChart,
};

/// Levels scanned when choosing the chart perturbation.
const PERTURBATION_LEVELS: usize = 400;

/// Which parts of the per-radius pipeline to run. The metric profile
/// always runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stages {
    pub mean_degree: bool,
    pub islands: bool,
    pub graph: bool,
    pub arcs: bool,
}

/// Everything needed to evaluate one map on a schedule of radii.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub map: HoloMap,
    pub disks: Vec<SphericalDisk>,
    pub graph: Option<GraphSpec>,
    pub chart: Option<RectangleChart>,
    pub resolution: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub samples: usize,
}

/// A stage that failed at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub r: f64,
    pub stage: &'static str,
    pub message: String,
}

/// Traced preimages of the chart segment `Im M = t*`.
#[derive(Debug, Clone)]
pub struct ChartArcs {
    pub t_star: f64,
    pub lines: Vec<Polyline>,
    pub tags: Vec<ArcTag>,
}

/// Row plus the geometric data behind it, kept for rendering.
#[derive(Debug, Clone)]
pub struct RadiusRun {
    pub row: ReportRow,
    pub islands: Vec<IslandRecord>,
    /// `(disk index, leftmost point)` of components cut by the margin.
    pub ambiguous: Vec<(usize, Complex64)>,
    pub graph: Option<(PreimageGraph, Complement)>,
    pub arcs: Option<ChartArcs>,
    pub errors: Vec<StageError>,
}

/// `β(x) = (1 - cos 2πu)/W` on the chart's x range, `u` the relative
/// position; a smooth bump of unit mass vanishing at both ends.
fn bump(chart: &RectangleChart) -> impl Fn(f64) -> f64 + Sync {
    let (x0, w) = (chart.x_range.0, chart.width());
    move |x: f64| (1.0 - (TAU * (x - x0) / w).cos()) / w
}

impl Experiment {
    /// Runs the selected stages on every radius. Rows come back ordered by
    /// radius; stage failures are collected, not propagated.
    pub fn run(&self, radii: &[f64], stages: Stages) -> Result<Vec<RadiusRun>, MetricError> {
        let profile = MetricProfile::compute(&self.map, radii, self.tolerance)?;
        let runs = radii
            .par_iter()
            .enumerate()
            .map(|(k, &r)| self.run_radius(k, r, profile.a[k], profile.l[k], stages))
            .collect();
        Ok(runs)
    }

    fn run_radius(&self, k: usize, r: f64, a: f64, l: f64, stages: Stages) -> RadiusRun {
        let mut run = RadiusRun {
            row: ReportRow::new(r, a, l),
            islands: Vec::new(),
            ambiguous: Vec::new(),
            graph: None,
            arcs: None,
            errors: Vec::new(),
        };
        let fail = |run: &mut RadiusRun, stage: &'static str, e: &dyn std::fmt::Display| {
            run.errors.push(StageError {
                r,
                stage,
                message: e.to_string(),
            })
        };

        if stages.mean_degree {
            match mean_degree(&self.map, r, self.samples, self.seed.wrapping_add(k as u64)) {
                Ok(m) => {
                    run.row.mean_degree = Some(m.mean);
                    run.row.mean_stderr = Some(m.stderr);
                }
                Err(e) => fail(&mut run, "mean_degree", &e),
            }
        }

        if stages.islands {
            let mut ok = true;
            let (mut count, mut ambiguous) = (0, 0);
            for (j, disk) in self.disks.iter().enumerate() {
                match find_islands(&self.map, disk, j, r, self.resolution) {
                    Ok(s) => {
                        count += s.islands.len();
                        ambiguous += s.ambiguous.len();
                        run.islands.extend(s.islands);
                        run.ambiguous.extend(s.ambiguous.iter().map(|&z| (j, z)));
                    }
                    Err(e) => {
                        fail(&mut run, "islands", &e);
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                run.row.island_count = Some(count);
                run.row.ambiguous = Some(ambiguous);
                run.row.degree_sum = Some(run.islands.iter().map(|i| i.degree as u64).sum());
                run.row.ramification = Some(total_ramification(&run.islands));
            } else {
                run.islands.clear();
                run.ambiguous.clear();
            }
        }

        if let (true, Some(spec)) = (stages.graph, self.graph) {
            let traced = build_preimage_graph(&self.map, &spec, r, self.resolution)
                .and_then(|g| complement_components(&self.map, &g).map(|c| (g, c)));
            match traced {
                Ok((g, c)) => {
                    let check = euler_identity(&g, &c);
                    let counts = g.counts();
                    run.row.graph_vertices = Some(g.vertices.len());
                    run.row.graph_euler = Some(g.euler);
                    run.row.good = Some(counts.good);
                    run.row.bad = Some(counts.bad);
                    run.row.suspect = Some(counts.suspect);
                    run.row.chi_c0 = Some(check.chi_boundary);
                    run.row.sum_chi_c = Some(check.chi_interior);
                    if stages.islands && run.row.island_count.is_some() {
                        let (checked, missing) = self.containment(&spec, &c, &run.islands, &run.ambiguous);
                        run.row.components_checked = Some(checked);
                        run.row.components_without_island = Some(missing);
                    }
                    run.graph = Some((g, c));
                }
                Err(e) => fail(&mut run, "graph", &e),
            }
        }

        if let (true, Some(chart)) = (stages.arcs, self.chart) {
            match self.chart_arcs(&chart, r) {
                Ok((arcs, lhs, rhs, integral)) => {
                    let count = |t: ArcTag| arcs.tags.iter().filter(|&&x| x == t).count();
                    run.row.t_star = Some(arcs.t_star);
                    run.row.chart_good = Some(count(ArcTag::Good));
                    run.row.chart_bad = Some(count(ArcTag::Bad));
                    run.row.chart_suspect = Some(count(ArcTag::Suspect));
                    run.row.coarea_lhs = Some(lhs);
                    run.row.coarea_rhs = Some(rhs);
                    run.row.arc_integral = Some(integral);
                    run.arcs = Some(arcs);
                }
                Err(e) => fail(&mut run, "arcs", &e),
            }
        }
        run
    }

    fn chart_arcs(&self, chart: &RectangleChart, r: f64) -> Result<(ChartArcs, f64, f64, f64), crate::Error> {
        let p = select_perturbation(&self.map, r, chart, PERTURBATION_LEVELS)?;
        let curve = ImplicitCurve::chart_segment(*chart, p.t_star);
        let lines = trace_preimage(&self.map, &curve, r, self.resolution)?;
        let tags = lines
            .iter()
            .map(|l| classify_arc(&self.map, &curve, l, r, self.resolution))
            .collect();
        let integral = arc_test_integral(&self.map, chart, p.t_star, r, &bump(chart))?;
        Ok((
            ChartArcs {
                t_star: p.t_star,
                lines,
                tags,
            },
            p.coarea_lhs,
            p.coarea_rhs,
            integral,
        ))
    }

    /// Interior complement components whose face has an assigned disk, and
    /// how many of those contain no island of that disk. A preimage
    /// component cut by the margin still counts: the graph component is
    /// interior, so the part of the island inside it is not.
    fn containment(
        &self,
        spec: &GraphSpec,
        comp: &Complement,
        islands: &[IslandRecord],
        ambiguous: &[(usize, Complex64)],
    ) -> (usize, usize) {
        let disk_of_face = |face| self.disks.iter().position(|d| spec.face(d.center.value()) == face);
        let (mut checked, mut missing) = (0, 0);
        for (idx, c) in comp.components.iter().enumerate() {
            if c.touches_boundary {
                continue;
            }
            let Some(j) = disk_of_face(c.face) else { continue };
            checked += 1;
            let inside = |z: Complex64| comp.component_at(z) == Some(idx);
            let found = islands
                .iter()
                .filter(|i| i.disk_index == j)
                .any(|i| inside(i.anchor) || inside(i.centroid) || i.boundary.iter().any(|&z| inside(z)))
                || ambiguous.iter().any(|&(d, z)| d == j && inside(z));
            if !found {
                missing += 1;
            }
        }
        (checked, missing)
    }
}
