//! Per-radius reports and the quantitative checks run on them.
//!
//! Every asymptotic statement becomes an inequality with an explicit slack,
//! measured relative to `a(r)`, plus a trend requirement over the radius
//! schedule. All decisions can be recomputed from the CSV report.

mod pipeline;

use std::fmt::Write;

use crate::metric::sig12;

pub use pipeline::{ChartArcs, Experiment, RadiusRun, StageError, Stages};

/// Slack constants: `c1` multiplies length terms, `c2` the resolution term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { c1: 4.0, c2: 50.0 }
    }
}

/// Coarea mismatch tolerated by the arc check.
pub const COAREA_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("a({r}) = 0; the map covers no area and nothing can be compared against it")]
    ZeroArea { r: f64 },
    #[error("no report rows to verify")]
    NoRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verifier {
    MeanDegree,
    Islands,
    AsymptoticEquality,
    RiemannHurwitz,
    EulerIdentity,
    Containment,
    GoodArcs,
}

impl Verifier {
    pub const ALL: [Verifier; 7] = [
        Verifier::MeanDegree,
        Verifier::Islands,
        Verifier::AsymptoticEquality,
        Verifier::RiemannHurwitz,
        Verifier::EulerIdentity,
        Verifier::Containment,
        Verifier::GoodArcs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verifier::MeanDegree => "mean_degree",
            Verifier::Islands => "islands",
            Verifier::AsymptoticEquality => "asymptotic_equality",
            Verifier::RiemannHurwitz => "riemann_hurwitz",
            Verifier::EulerIdentity => "euler_identity",
            Verifier::Containment => "containment",
            Verifier::GoodArcs => "good_arcs",
        }
    }

    pub fn from_name(s: &str) -> Option<Verifier> {
        Verifier::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Pipeline stages whose columns this verifier reads.
    pub fn stages(self) -> Stages {
        let mut s = Stages::default();
        match self {
            Verifier::MeanDegree => s.mean_degree = true,
            Verifier::Islands | Verifier::RiemannHurwitz => s.islands = true,
            Verifier::AsymptoticEquality | Verifier::EulerIdentity => s.graph = true,
            Verifier::Containment => {
                s.graph = true;
                s.islands = true;
            }
            Verifier::GoodArcs => s.arcs = true,
        }
        s
    }
}

/// One report line. Columns a stage did not produce stay `None` and are
/// written as empty CSV fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportRow {
    pub r: f64,
    pub a: f64,
    pub l: f64,
    pub mean_degree: Option<f64>,
    pub mean_stderr: Option<f64>,
    pub island_count: Option<usize>,
    pub degree_sum: Option<u64>,
    pub ramification: Option<u64>,
    pub ambiguous: Option<usize>,
    pub graph_vertices: Option<usize>,
    pub graph_euler: Option<i64>,
    pub good: Option<usize>,
    pub bad: Option<usize>,
    pub suspect: Option<usize>,
    pub chi_c0: Option<i64>,
    pub sum_chi_c: Option<i64>,
    pub components_checked: Option<usize>,
    pub components_without_island: Option<usize>,
    pub t_star: Option<f64>,
    pub chart_good: Option<usize>,
    pub chart_bad: Option<usize>,
    pub chart_suspect: Option<usize>,
    pub coarea_lhs: Option<f64>,
    pub coarea_rhs: Option<f64>,
    pub arc_integral: Option<f64>,
}

impl ReportRow {
    pub fn new(r: f64, a: f64, l: f64) -> Self {
        ReportRow {
            r,
            a,
            l,
            ..Default::default()
        }
    }

    pub fn ratio(&self) -> f64 {
        self.l / self.a
    }

    pub fn coarea_defect(&self) -> Option<f64> {
        let (lhs, rhs) = (self.coarea_lhs?, self.coarea_rhs?);
        Some((lhs - rhs).abs() / rhs.max(1.0))
    }
}

/// One verifier evaluated at one radius. `needed` is the smallest slack
/// (relative to `a`) that would make the row pass; `allowed` the slack
/// granted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowCheck {
    pub r: f64,
    pub needed: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verifier: Verifier,
    pub checks: Vec<RowCheck>,
    pub trend_ok: bool,
    pub pass: bool,
}

impl Outcome {
    /// Largest needed slack over the schedule.
    pub fn worst_slack(&self) -> f64 {
        self.checks.iter().map(|c| c.needed).fold(0.0, f64::max)
    }
}

/// The needed slack never sets a new record after the first radius, up to
/// `tol`: an upper envelope that does not grow.
pub fn trend_nonincreasing(needed: &[f64], tol: f64) -> bool {
    let mut record = f64::NEG_INFINITY;
    for (k, &x) in needed.iter().enumerate() {
        if k > 0 && !(x <= record + tol) {
            return false;
        }
        record = record.max(x);
    }
    true
}

fn check_rows(
    rows: &[ReportRow],
    verifier: Verifier,
    trend_tol: Option<f64>,
    eval: impl Fn(&ReportRow) -> Option<(f64, f64)>,
) -> Result<Outcome, VerifyError> {
    if rows.is_empty() {
        return Err(VerifyError::NoRows);
    }
    let mut checks = Vec::with_capacity(rows.len());
    for row in rows {
        if !(row.a > 0.0) {
            return Err(VerifyError::ZeroArea { r: row.r });
        }
        let check = match eval(row) {
            Some((needed, allowed)) => RowCheck {
                r: row.r,
                needed,
                allowed,
                pass: needed <= allowed,
            },
            // the stage failed at this radius
            None => RowCheck {
                r: row.r,
                needed: f64::INFINITY,
                allowed: 0.0,
                pass: false,
            },
        };
        checks.push(check);
    }
    let trend_ok = match trend_tol {
        Some(tol) => trend_nonincreasing(&checks.iter().map(|c| c.needed).collect::<Vec<_>>(), tol),
        None => true,
    };
    let pass = trend_ok && checks.iter().all(|c| c.pass);
    Ok(Outcome {
        verifier,
        checks,
        trend_ok,
        pass,
    })
}

/// `|mean - a| <= max(3·stderr, 0.05a + 2l)`. The trend is taken on the
/// part of the deviation not explained by sampling noise.
pub fn verify_mean_degree(rows: &[ReportRow], c: &Constants, resolution: usize) -> Result<Outcome, VerifyError> {
    let mut out = check_rows(rows, Verifier::MeanDegree, None, |row| {
        let (m, se) = (row.mean_degree?, row.mean_stderr?);
        let allowed = (3.0 * se).max(0.05 * row.a + 2.0 * row.l) / row.a;
        Some(((m - row.a).abs() / row.a, allowed))
    })?;
    let excess: Vec<f64> = rows
        .iter()
        .zip(&out.checks)
        .map(|(row, ch)| (ch.needed - 3.0 * row.mean_stderr.unwrap_or(0.0) / row.a).max(0.0))
        .collect();
    out.trend_ok = trend_nonincreasing(&excess, c.c2 / resolution as f64);
    out.pass = out.pass && out.trend_ok;
    Ok(out)
}

/// `i >= a(1 - s)` with `s = c1·l/a + c2/resolution`.
pub fn verify_island_theorem(rows: &[ReportRow], c: &Constants, resolution: usize) -> Result<Outcome, VerifyError> {
    let res_term = c.c2 / resolution as f64;
    check_rows(rows, Verifier::Islands, Some(res_term), |row| {
        let i = row.island_count? as f64;
        Some(((1.0 - i / row.a).max(0.0), c.c1 * row.ratio() + res_term))
    })
}

/// `|χ(Γ_r) - a·χ(Γ)| <= c1(l + bad)` with `χ(Γ) = -1`.
pub fn verify_asymptotic_equality(rows: &[ReportRow], c: &Constants, resolution: usize) -> Result<Outcome, VerifyError> {
    check_rows(rows, Verifier::AsymptoticEquality, Some(c.c2 / resolution as f64), |row| {
        let chi = row.graph_euler? as f64;
        let bad = row.bad? as f64;
        Some(((chi + row.a).abs() / row.a, c.c1 * (row.l + bad) / row.a))
    })
}

/// `χ(disk) + r_n <= a·χ(sphere) + c1·l`, i.e. `1 + r_n <= 2a + c1·l`.
pub fn verify_rh_inequality(rows: &[ReportRow], c: &Constants, resolution: usize) -> Result<Outcome, VerifyError> {
    check_rows(rows, Verifier::RiemannHurwitz, Some(c.c2 / resolution as f64), |row| {
        let ram = row.ramification? as f64;
        Some((((1.0 + ram - 2.0 * row.a) / row.a).max(0.0), c.c1 * row.ratio()))
    })
}

/// `1 = χ(C₀) + χ(Γ_r) + Σχ(C)` exactly.
pub fn verify_euler_identity(rows: &[ReportRow]) -> Result<Outcome, VerifyError> {
    check_rows(rows, Verifier::EulerIdentity, None, |row| {
        let total = row.chi_c0? + row.graph_euler? + row.sum_chi_c?;
        Some(((total - 1).abs() as f64, 0.0))
    })
}

/// Every interior complement component with an assigned disk contains an
/// island of that disk.
pub fn verify_island_in_component(rows: &[ReportRow]) -> Result<Outcome, VerifyError> {
    check_rows(rows, Verifier::Containment, None, |row| {
        Some((row.components_without_island? as f64, 0.0))
    })
}

/// Preimages of the perturbed chart segment: no suspect arcs, the coarea
/// identity within tolerance, and `|good - a| <= c1(l + bad)`.
pub fn verify_good_arcs(rows: &[ReportRow], c: &Constants, resolution: usize) -> Result<Outcome, VerifyError> {
    check_rows(rows, Verifier::GoodArcs, Some(c.c2 / resolution as f64), |row| {
        let good = row.chart_good? as f64;
        let bad = row.chart_bad? as f64;
        if row.chart_suspect? > 0 || row.coarea_defect()? > COAREA_TOLERANCE {
            return Some((f64::INFINITY, 0.0));
        }
        Some(((good - row.a).abs() / row.a, c.c1 * (row.l + bad) / row.a))
    })
}

pub fn run_verifier(v: Verifier, rows: &[ReportRow], c: &Constants, resolution: usize) -> Result<Outcome, VerifyError> {
    match v {
        Verifier::MeanDegree => verify_mean_degree(rows, c, resolution),
        Verifier::Islands => verify_island_theorem(rows, c, resolution),
        Verifier::AsymptoticEquality => verify_asymptotic_equality(rows, c, resolution),
        Verifier::RiemannHurwitz => verify_rh_inequality(rows, c, resolution),
        Verifier::EulerIdentity => verify_euler_identity(rows),
        Verifier::Containment => verify_island_in_component(rows),
        Verifier::GoodArcs => verify_good_arcs(rows, c, resolution),
    }
}

/// Report columns, in order. The `*_needed` / `*_allowed` pairs repeat the
/// verifier arithmetic for readers of the CSV.
pub const REPORT_COLUMNS: &[&str] = &[
    "r",
    "a",
    "l",
    "ratio",
    "mean_degree",
    "mean_stderr",
    "island_count",
    "degree_sum",
    "ramification",
    "ambiguous",
    "graph_vertices",
    "graph_euler",
    "good",
    "bad",
    "suspect",
    "chi_c0",
    "sum_chi_c",
    "components_checked",
    "components_without_island",
    "t_star",
    "chart_good",
    "chart_bad",
    "chart_suspect",
    "coarea_lhs",
    "coarea_rhs",
    "arc_integral",
    "mean_degree_needed",
    "mean_degree_allowed",
    "islands_needed",
    "islands_allowed",
    "asymptotic_equality_needed",
    "asymptotic_equality_allowed",
    "riemann_hurwitz_needed",
    "riemann_hurwitz_allowed",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn optf(v: Option<f64>) -> String {
    v.map(sig12).unwrap_or_default()
}

/// CSV report, one row per radius, columns as in [`REPORT_COLUMNS`].
pub fn report_csv(rows: &[ReportRow], c: &Constants, resolution: usize) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    let pair = |v: Verifier, k: usize| -> [String; 2] {
        match run_verifier(v, &rows[k..=k], c, resolution) {
            Ok(o) if o.checks[0].needed.is_finite() => [sig12(o.checks[0].needed), sig12(o.checks[0].allowed)],
            _ => [String::new(), String::new()],
        }
    };
    for (k, row) in rows.iter().enumerate() {
        let mut fields = vec![
            sig12(row.r),
            sig12(row.a),
            sig12(row.l),
            sig12(row.ratio()),
            optf(row.mean_degree),
            optf(row.mean_stderr),
            opt(row.island_count),
            opt(row.degree_sum),
            opt(row.ramification),
            opt(row.ambiguous),
            opt(row.graph_vertices),
            opt(row.graph_euler),
            opt(row.good),
            opt(row.bad),
            opt(row.suspect),
            opt(row.chi_c0),
            opt(row.sum_chi_c),
            opt(row.components_checked),
            opt(row.components_without_island),
            optf(row.t_star),
            opt(row.chart_good),
            opt(row.chart_bad),
            opt(row.chart_suspect),
            optf(row.coarea_lhs),
            optf(row.coarea_rhs),
            optf(row.arc_integral),
        ];
        for v in [
            Verifier::MeanDegree,
            Verifier::Islands,
            Verifier::AsymptoticEquality,
            Verifier::RiemannHurwitz,
        ] {
            fields.extend(pair(v, k));
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(r: f64, a: f64, l: f64) -> ReportRow {
        ReportRow::new(r, a, l)
    }

    #[test]
    fn z5_islands_and_ramification() {
        let mut rw = row(10.0, 5.0, 1e-9);
        rw.island_count = Some(6);
        rw.ramification = Some(4);
        let c = Constants::default();
        assert!(verify_island_theorem(&[rw.clone()], &c, 512).unwrap().pass);
        let rh = verify_rh_inequality(&[rw], &c, 512).unwrap();
        assert!(rh.pass);
        assert_eq!(rh.checks[0].needed, 0.0);
    }

    #[test]
    fn euler_identity_is_exact() {
        let mut rw = row(2.0, 3.0, 0.1);
        rw.chi_c0 = Some(-2);
        rw.graph_euler = Some(-3);
        rw.sum_chi_c = Some(6);
        assert!(verify_euler_identity(&[rw.clone()]).unwrap().pass);
        rw.sum_chi_c = Some(5);
        assert!(!verify_euler_identity(&[rw]).unwrap().pass);
    }

    #[test]
    fn zero_area_is_a_precondition_error() {
        let mut rw = row(1.0, 0.0, 0.0);
        rw.mean_degree = Some(0.0);
        rw.mean_stderr = Some(0.0);
        assert_eq!(
            verify_mean_degree(&[rw], &Constants::default(), 512),
            Err(VerifyError::ZeroArea { r: 1.0 })
        );
    }

    #[test]
    fn missing_stage_fails_the_row() {
        let o = verify_island_theorem(&[row(1.0, 1.0, 0.1)], &Constants::default(), 512).unwrap();
        assert!(!o.pass);
    }

    #[test]
    fn envelope_trend() {
        assert!(trend_nonincreasing(&[0.5, 0.1, 0.3, 0.2], 0.0));
        assert!(!trend_nonincreasing(&[0.1, 0.5], 0.0));
        assert!(trend_nonincreasing(&[0.1, 0.15], 0.1));
        assert!(trend_nonincreasing(&[], 0.0));
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let rows = vec![row(1.0, 0.5, 1.0), row(2.0, 0.8, 0.9)];
        let csv = report_csv(&rows, &Constants::default(), 512);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), REPORT_COLUMNS.len());
        assert!(lines.iter().all(|l| l.split(',').count() == REPORT_COLUMNS.len()));
        assert!(lines[1].starts_with("1.00000000000,0.500000000000,1.00000000000,2.00000000000"));
    }
}
