//! Experiment configuration, orchestration and output files.
//!
//! Configs are flat `key = value` files with dotted keys and `#` comments:
//!
//! ```text
//! map = exp(z)
//! radii.mode = list          # or `selected` (length-area selection)
//! radii.list = 5, 10, 20
//! disks.0.center = 1
//! disks.0.radius = 0.1128
//! graph.node = 0.5i
//! graph.scale = 1.5
//! verifiers = islands, euler_identity
//! ```
//!
//! Every run writes `report.csv`, `summary.json` (which embeds the resolved
//! config) and, unless `svg = false`, one `{stage}_{radius}.svg` per stage
//! and radius into the `outputs` directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::count::{count_preimages, islands_to_csv, IslandRecord};
use crate::expr::{Ext, HoloMap, MapExpr};
use crate::metric::{select_radii, sig12, MetricProfile, SpherePoint, SphericalDisk, DIAMETER};
use crate::trace::{graph_json, graph_svg, euler_identity, ArcTag, GraphSpec, RectangleChart};
use crate::verify::{
    report_csv, run_verifier, Constants, Experiment, Outcome, RadiusRun, Stages, Verifier, REPORT_COLUMNS,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFIER_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Chordal radius of the standard target disks.
pub const STANDARD_DISK_RADIUS: f64 = 0.2 * DIAMETER;
const DEFAULT_RADII: [f64; 4] = [1.0, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config file {path} not found")]
    NotFound { path: PathBuf },
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: missing")]
    Missing { field: String },
    #[error("disks: the islands verifier needs exactly 3 disks, found {found}")]
    DiskCount { found: usize },
    #[error("disks.{a} and disks.{b} overlap")]
    Overlap { a: usize, b: usize },
    #[error("target.genus: only the sphere (genus 0) is supported, got {genus}")]
    Genus { genus: i64 },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadiiMode {
    List(Vec<f64>),
    /// Radii picked by the length-area selection on `[min, max]`.
    Selected { min: f64, max: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: Option<String>,
    pub radii: RadiiMode,
    /// `None` means the standard triple, see [`standard_disks`].
    pub disks: Option<Vec<SphericalDisk>>,
    pub graph: Option<GraphSpec>,
    pub chart: Option<RectangleChart>,
    pub resolution: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub samples: usize,
    pub outputs: PathBuf,
    pub svg: bool,
    /// `None` enables every verifier whose inputs are configured.
    pub verifiers: Option<Vec<Verifier>>,
    pub constants: Constants,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: None,
            radii: RadiiMode::List(DEFAULT_RADII.to_vec()),
            disks: None,
            graph: None,
            chart: None,
            resolution: 512,
            tolerance: 1e-8,
            seed: 0,
            samples: 2000,
            outputs: PathBuf::from("out"),
            svg: true,
            verifiers: None,
            constants: Constants::default(),
        }
    }
}

/// A constant complex value or `inf`, written in the map grammar.
fn parse_point(field: &str, s: &str) -> Result<SpherePoint, ConfigError> {
    if matches!(s, "inf" | "infinity" | "∞") {
        return Ok(SpherePoint::INFINITY);
    }
    Ok(SpherePoint::finite(parse_complex(field, s)?))
}

fn parse_complex(field: &str, s: &str) -> Result<Complex64, ConfigError> {
    let e = MapExpr::parse(s).map_err(|e| invalid(field, e))?;
    if !e.is_constant() {
        return Err(invalid(field, format!("`{s}` is not a constant")));
    }
    match e.eval(Complex64::new(0.0, 0.0)) {
        Ok(Ext::Finite(c)) if c.is_finite() => Ok(c),
        _ => Err(invalid(field, format!("`{s}` is not a finite number"))),
    }
}

fn parse_f64(field: &str, s: &str) -> Result<f64, ConfigError> {
    let v = parse_complex(field, s)?;
    if v.im != 0.0 {
        return Err(invalid(field, format!("`{s}` is not real")));
    }
    Ok(v.re)
}

fn parse_list<T>(field: &str, s: &str, item: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    s.split(',').map(|x| item(field, x.trim())).collect()
}

fn parse_pair(field: &str, s: &str) -> Result<(f64, f64), ConfigError> {
    match parse_list(field, s, parse_f64)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(invalid(field, "expected two numbers `lo, hi`")),
    }
}

fn parse_int<T: std::str::FromStr>(field: &str, s: &str) -> Result<T, ConfigError> {
    s.parse().map_err(|_| invalid(field, format!("`{s}` is not a valid integer")))
}

fn parse_bool(field: &str, s: &str) -> Result<bool, ConfigError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(field, format!("`{s}` is not a boolean"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ConfigError::NotFound { path: path.to_path_buf() },
            _ => ConfigError::Read {
                path: path.to_path_buf(),
                message: e.to_string(),
            },
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().trim_matches('"').to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: "empty key".into(),
                });
            }
            if entries.insert(key.clone(), (line, value)).is_some() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }

        let mut cfg = ExperimentConfig::default();
        fn take(entries: &mut BTreeMap<String, (usize, String)>, key: &str) -> Option<String> {
            entries.remove(key).map(|(_, v)| v)
        }

        cfg.map = take(&mut entries, "map");
        if let Some(v) = take(&mut entries, "resolution") {
            cfg.resolution = parse_int("resolution", &v)?;
        }
        if let Some(v) = take(&mut entries, "tolerance") {
            cfg.tolerance = parse_f64("tolerance", &v)?;
        }
        if let Some(v) = take(&mut entries, "seed") {
            cfg.seed = parse_int("seed", &v)?;
        }
        if let Some(v) = take(&mut entries, "samples") {
            cfg.samples = parse_int("samples", &v)?;
        }
        if let Some(v) = take(&mut entries, "outputs") {
            cfg.outputs = PathBuf::from(v);
        }
        if let Some(v) = take(&mut entries, "svg") {
            cfg.svg = parse_bool("svg", &v)?;
        }
        if let Some(v) = take(&mut entries, "constants.c1") {
            cfg.constants.c1 = parse_f64("constants.c1", &v)?;
        }
        if let Some(v) = take(&mut entries, "constants.c2") {
            cfg.constants.c2 = parse_f64("constants.c2", &v)?;
        }
        if let Some(v) = take(&mut entries, "target.genus") {
            let genus: i64 = parse_int("target.genus", &v)?;
            if genus != 0 {
                return Err(ConfigError::Genus { genus });
            }
        }
        if let Some(v) = take(&mut entries, "verifiers") {
            let names = v.split(',').map(str::trim).filter(|s| !s.is_empty());
            let list = names
                .map(|n| Verifier::from_name(n).ok_or_else(|| invalid("verifiers", format!("unknown verifier `{n}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            cfg.verifiers = Some(list);
        }

        let mode = take(&mut entries, "radii.mode").unwrap_or_else(|| "list".into());
        let (list, min, max, count) = (take(&mut entries, "radii.list"), take(&mut entries, "radii.min"), take(&mut entries, "radii.max"), take(&mut entries, "radii.count"));
        cfg.radii = match mode.as_str() {
            "list" | "explicit-list" => match (list, min, max, count) {
                (Some(l), ..) => RadiiMode::List(parse_list("radii.list", &l, parse_f64)?),
                (None, Some(a), Some(b), Some(n)) => {
                    let (a, b) = (parse_f64("radii.min", &a)?, parse_f64("radii.max", &b)?);
                    let n: usize = parse_int("radii.count", &n)?;
                    if n < 2 {
                        return Err(invalid("radii.count", "need at least 2 radii between min and max"));
                    }
                    RadiiMode::List((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
                }
                (None, None, None, None) => RadiiMode::List(DEFAULT_RADII.to_vec()),
                _ => return Err(ConfigError::Missing { field: "radii.list".into() }),
            },
            "selected" | "length-area-selected" => {
                let get = |field: &str, v: Option<String>| v.ok_or(ConfigError::Missing { field: field.into() });
                RadiiMode::Selected {
                    min: parse_f64("radii.min", &get("radii.min", min)?)?,
                    max: parse_f64("radii.max", &get("radii.max", max)?)?,
                    count: parse_int("radii.count", &get("radii.count", count)?)?,
                }
            }
            other => return Err(invalid("radii.mode", format!("unknown mode `{other}`"))),
        };

        let mut disk_keys: BTreeMap<usize, (Option<String>, Option<String>)> = BTreeMap::new();
        let keys: Vec<String> = entries.keys().filter(|k| k.starts_with("disks.")).cloned().collect();
        for key in keys {
            let (line, value) = entries.remove(&key).unwrap();
            let parts: Vec<&str> = key.split('.').collect();
            let idx = parts.get(1).and_then(|s| s.parse::<usize>().ok());
            match (idx, parts.get(2).copied(), parts.len()) {
                (Some(i), Some("center"), 3) => disk_keys.entry(i).or_default().0 = Some(value),
                (Some(i), Some("radius"), 3) => disk_keys.entry(i).or_default().1 = Some(value),
                _ => return Err(ConfigError::UnknownKey { line, key }),
            }
        }
        if !disk_keys.is_empty() {
            let mut disks = Vec::new();
            for (pos, (i, (c, r))) in disk_keys.into_iter().enumerate() {
                if i != pos {
                    return Err(ConfigError::Missing {
                        field: format!("disks.{pos}"),
                    });
                }
                let cf = format!("disks.{i}.center");
                let rf = format!("disks.{i}.radius");
                let center = parse_point(&cf, &c.ok_or(ConfigError::Missing { field: cf.clone() })?)?;
                let radius = match r {
                    Some(r) => parse_f64(&rf, &r)?,
                    None => STANDARD_DISK_RADIUS,
                };
                disks.push(SphericalDisk::new(center, radius).map_err(|e| invalid(rf, e))?);
            }
            cfg.disks = Some(disks);
        }

        let kind = take(&mut entries, "graph.kind");
        let (node, scale) = (take(&mut entries, "graph.node"), take(&mut entries, "graph.scale"));
        if kind.is_some() || node.is_some() || scale.is_some() {
            if let Some(k) = kind.filter(|k| k != "figure8") {
                return Err(invalid("graph.kind", format!("unsupported graph `{k}`; only figure8")));
            }
            let node = node.map(|n| parse_complex("graph.node", &n)).transpose()?.unwrap_or(DEFAULT_NODE);
            let scale = scale.map(|s| parse_f64("graph.scale", &s)).transpose()?.unwrap_or(DEFAULT_SCALE);
            cfg.graph = Some(GraphSpec::new(node, scale).map_err(|e| invalid("graph.scale", e))?);
        }

        let (m, xr, tr) = (take(&mut entries, "chart.moebius"), take(&mut entries, "chart.x_range"), take(&mut entries, "chart.t_range"));
        if m.is_some() || xr.is_some() || tr.is_some() {
            let d = default_chart();
            let coeffs = match m {
                Some(s) => match parse_list("chart.moebius", &s, parse_complex)?.as_slice() {
                    &[a, b, c, d] => [a, b, c, d],
                    _ => return Err(invalid("chart.moebius", "expected four coefficients `a, b, c, d`")),
                },
                None => d.moebius,
            };
            let xr = xr.map(|s| parse_pair("chart.x_range", &s)).transpose()?.unwrap_or(d.x_range);
            let tr = tr.map(|s| parse_pair("chart.t_range", &s)).transpose()?.unwrap_or(d.t_range);
            cfg.chart = Some(RectangleChart::new(coeffs, xr, tr).map_err(|e| invalid("chart", e))?);
        }

        if let Some((key, (line, _))) = entries.into_iter().next() {
            return Err(ConfigError::UnknownKey { line, key });
        }
        Ok(cfg)
    }

    /// Checks that do not need the map evaluated.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.resolution < crate::trace::MIN_RESOLUTION {
            return Err(invalid(
                "resolution",
                format!("must be at least {}", crate::trace::MIN_RESOLUTION),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(invalid("tolerance", "must lie in (0, 1)"));
        }
        if self.samples < 100 {
            return Err(invalid("samples", "must be at least 100"));
        }
        match &self.radii {
            RadiiMode::List(l) => {
                if l.is_empty() || l.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(invalid("radii.list", "radii must be positive"));
                }
                if l.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("radii.list", "radii must be strictly increasing"));
                }
            }
            RadiiMode::Selected { min, max, count } => {
                if !(*min > 0.0 && max > min) || *count == 0 {
                    return Err(invalid("radii", "need 0 < min < max and count >= 1"));
                }
            }
        }
        if let Some(disks) = &self.disks {
            for a in 0..disks.len() {
                for b in a + 1..disks.len() {
                    if !disks[a].is_disjoint(&disks[b]) {
                        return Err(ConfigError::Overlap { a, b });
                    }
                }
            }
        }
        if let Some(vs) = &self.verifiers {
            let n_disks = self.disks.as_ref().map_or(3, Vec::len);
            for v in vs {
                let s = v.stages();
                if s.islands && n_disks != 3 {
                    return Err(ConfigError::DiskCount { found: n_disks });
                }
                if s.graph && self.graph.is_none() {
                    return Err(invalid("verifiers", format!("`{}` needs graph.node / graph.scale", v.name())));
                }
                if s.arcs && self.chart.is_none() {
                    return Err(invalid("verifiers", format!("`{}` needs a chart.* section", v.name())));
                }
            }
        }
        Ok(())
    }

    /// Verifiers to run: the configured list, or all whose inputs exist.
    pub fn enabled_verifiers(&self) -> Vec<Verifier> {
        if let Some(v) = &self.verifiers {
            return v.clone();
        }
        let three = self.disks.as_ref().is_none_or(|d| d.len() == 3);
        Verifier::ALL
            .into_iter()
            .filter(|v| {
                let s = v.stages();
                (!s.islands || three) && (!s.graph || self.graph.is_some()) && (!s.arcs || self.chart.is_some())
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let point = |p: SpherePoint| match p.value() {
            Ext::Infinity => json!("inf"),
            Ext::Finite(c) => json!([c.re + 0.0, c.im + 0.0]),
        };
        let radii = match &self.radii {
            RadiiMode::List(l) => json!({"mode": "list", "list": l}),
            RadiiMode::Selected { min, max, count } => {
                json!({"mode": "selected", "min": min, "max": max, "count": count})
            }
        };
        json!({
            "map": self.map,
            "radii": radii,
            "disks": self.disks.as_ref().map(|d| d.iter().map(|d| json!({
                "center": point(d.center),
                "radius": d.radius,
            })).collect::<Vec<_>>()),
            "graph": self.graph.map(|g| json!({
                "kind": "figure8",
                "node": [g.node.re + 0.0, g.node.im + 0.0],
                "scale": g.scale,
            })),
            "chart": self.chart.map(|c| json!({
                "moebius": c.moebius.iter().map(|z| [z.re + 0.0, z.im + 0.0]).collect::<Vec<_>>(),
                "x_range": [c.x_range.0, c.x_range.1],
                "t_range": [c.t_range.0, c.t_range.1],
            })),
            "resolution": self.resolution,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "samples": self.samples,
            "outputs": self.outputs.to_string_lossy(),
            "svg": self.svg,
            "verifiers": self.enabled_verifiers().iter().map(|v| v.name()).collect::<Vec<_>>(),
            "constants": {"c1": self.constants.c1, "c2": self.constants.c2},
            "target": {"genus": 0},
        })
    }
}

pub const DEFAULT_NODE: Complex64 = Complex64::new(0.0, 0.5);
pub const DEFAULT_SCALE: f64 = 1.5;

/// `M(w) = w - 1` with the thin rectangle `[-0.3, 0.3] × [-0.1, 0.1]`.
pub fn default_chart() -> RectangleChart {
    let (one, zero) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    RectangleChart::new([one, -one, zero, one], (-0.3, 0.3), (-0.1, 0.1)).expect("valid chart")
}

/// Disks of chordal radius `0.2/√π` about `0`, `1` and `∞`. When the map
/// has no zero in `|z| < r` the centre `0` is replaced by `-1`, so that the
/// triple does not sit on a visibly omitted value.
pub fn standard_disks(hm: &HoloMap, r: f64) -> Vec<SphericalDisk> {
    let omits_zero = matches!(count_preimages(hm, SpherePoint::new(0.0, 0.0), r), Ok(0));
    let first = if omits_zero { -1.0 } else { 0.0 };
    [SpherePoint::new(first, 0.0), SpherePoint::new(1.0, 0.0), SpherePoint::INFINITY]
        .into_iter()
        .map(|c| SphericalDisk::new(c, STANDARD_DISK_RADIUS).expect("valid radius"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Islands,
    Graph,
    Arcs,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Islands => "islands",
            Command::Graph => "graph",
            Command::Arcs => "arcs",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub map: Option<String>,
    pub r: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &self.map {
            cfg.map = Some(m.clone());
        }
        if let Some(r) = self.r {
            cfg.radii = RadiiMode::List(vec![r]);
        }
        if let Some(o) = &self.out {
            cfg.outputs = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(res) = self.resolution {
            cfg.resolution = res;
        }
        Ok(cfg)
    }
}

/// Result of a run: exit status, what was printed, and the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub exit_code: i32,
    pub stdout: String,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Maps an error to its exit status.
pub fn exit_code_for(e: &crate::Error) -> i32 {
    match e {
        crate::Error::Config(_) | crate::Error::Parse(_) | crate::Error::Diff(_) | crate::Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Radius as used in file names: six decimals, trailing zeros dropped.
fn radius_tag(r: f64) -> String {
    let s = format!("{r:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content)?;
        self.files.push(path);
        Ok(())
    }
}

const DISK_COLORS: [&str; 3] = ["steelblue", "darkorange", "seagreen"];

fn islands_svg(islands: &[IslandRecord], r: f64) -> String {
    const SIZE: f64 = 800.0;
    let scale = SIZE / (2.0 * r);
    let path = |pts: &[Complex64]| {
        pts.iter()
            .map(|z| format!("{:.2},{:.2}", (z.re + r) * scale, (r - z.im) * scale))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    let c = SIZE / 2.0;
    let _ = writeln!(out, r#"<circle cx="{c}" cy="{c}" r="{c}" fill="none" stroke="gray"/>"#);
    for i in islands {
        let color = DISK_COLORS[i.disk_index % DISK_COLORS.len()];
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.4" stroke="{color}"/>"#,
            path(&i.boundary)
        );
        for h in &i.holes {
            let _ = writeln!(out, r#"<polygon points="{}" fill="white" stroke="{color}"/>"#, path(h));
        }
    }
    out.push_str("</svg>\n");
    out
}

fn arcs_svg(run: &RadiusRun, r: f64) -> Option<String> {
    let arcs = run.arcs.as_ref()?;
    const SIZE: f64 = 800.0;
    let scale = SIZE / (2.0 * r);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    let c = SIZE / 2.0;
    let _ = writeln!(out, r#"<circle cx="{c}" cy="{c}" r="{c}" fill="none" stroke="gray"/>"#);
    for (line, tag) in arcs.lines.iter().zip(&arcs.tags) {
        let (color, dash) = match tag {
            ArcTag::Good => ("green", ""),
            ArcTag::Suspect => ("orange", r#" stroke-dasharray="1,3""#),
            ArcTag::Bad => ("red", r#" stroke-dasharray="6,4""#),
        };
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|z| format!("{:.2},{:.2}", (z.re + r) * scale, (r - z.im) * scale))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    Some(out)
}

/// Report rows as JSON objects keyed by CSV column, so the summary and the
/// CSV cannot disagree.
fn rows_json(csv: &str) -> Value {
    let rows: Vec<Value> = csv
        .lines()
        .skip(1)
        .map(|line| {
            let mut obj = Map::new();
            for (col, field) in REPORT_COLUMNS.iter().zip(line.split(',')) {
                let v = field.parse::<f64>().ok().map_or(Value::Null, |x| json!(x));
                obj.insert(col.to_string(), v);
            }
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}

fn outcome_json(o: &Outcome) -> Value {
    json!({
        "pass": o.pass,
        "worst_slack": o.worst_slack(),
        "trend_ok": o.trend_ok,
    })
}

/// Runs one subcommand on a resolved config.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunReport, crate::Error> {
    cfg.validate()?;
    let source = cfg.map.as_deref().ok_or(ConfigError::Missing { field: "map".into() })?;
    let hm = HoloMap::parse(source)?;
    let radii = match &cfg.radii {
        RadiiMode::List(l) => l.clone(),
        RadiiMode::Selected { min, max, count } => select_radii(&hm, *min, *max, *count, cfg.tolerance)?,
    };
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    fs::create_dir_all(&cfg.outputs)?;
    let mut writer = Writer {
        dir: cfg.outputs.clone(),
        files: Vec::new(),
    };
    let mut stdout = String::new();

    if command == Command::Profile {
        let profile = MetricProfile::compute(&hm, &radii, cfg.tolerance)?;
        let csv = profile.to_csv();
        stdout.push_str(&csv);
        writer.write("report.csv", &csv)?;
        let summary = json!({
            "command": command.name(),
            "config": cfg.to_json(),
            "radii": radii,
            "rows": profile.radii.iter().enumerate().map(|(k, r)| json!({
                "r": r, "a": profile.a[k], "l": profile.l[k], "ratio": profile.ratio(k),
            })).collect::<Vec<_>>(),
            "exit_code": EXIT_PASS,
        });
        writer.write("summary.json", &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))?;
        return Ok(RunReport {
            exit_code: EXIT_PASS,
            stdout,
            files: writer.files,
            summary,
        });
    }

    let disks = cfg.disks.clone().unwrap_or_else(|| standard_disks(&hm, r_max));
    let verifiers = if command == Command::VerifyAll {
        cfg.enabled_verifiers()
    } else {
        Vec::new()
    };
    if verifiers.iter().any(|v| v.stages().islands) && disks.len() != 3 {
        return Err(ConfigError::DiskCount { found: disks.len() }.into());
    }
    let mut stages = Stages::default();
    match command {
        Command::Islands => stages.islands = true,
        Command::Graph => stages.graph = true,
        Command::Arcs => stages.arcs = true,
        _ => {}
    }
    for v in &verifiers {
        let s = v.stages();
        stages.mean_degree |= s.mean_degree;
        stages.islands |= s.islands;
        stages.graph |= s.graph;
        stages.arcs |= s.arcs;
    }
    let experiment = Experiment {
        map: hm,
        disks,
        graph: cfg.graph.or_else(|| (command == Command::Graph).then(|| GraphSpec::new(DEFAULT_NODE, DEFAULT_SCALE).unwrap())),
        chart: cfg.chart.or_else(|| (command == Command::Arcs).then(default_chart)),
        resolution: cfg.resolution,
        tolerance: cfg.tolerance,
        seed: cfg.seed,
        samples: cfg.samples,
    };
    let runs = experiment.run(&radii, stages)?;
    let rows: Vec<_> = runs.iter().map(|r| r.row.clone()).collect();
    let csv = report_csv(&rows, &cfg.constants, cfg.resolution);
    writer.write("report.csv", &csv)?;

    for run in &runs {
        let r = run.row.r;
        let tag = radius_tag(r);
        if let Some(e) = run.errors.first() {
            let _ = writeln!(stdout, "r={tag}: {} failed: {}", e.stage, e.message);
        }
        if stages.islands && run.row.island_count.is_some() {
            let mut per_disk = vec![0usize; experiment.disks.len()];
            for i in &run.islands {
                per_disk[i.disk_index] += 1;
            }
            let _ = writeln!(
                stdout,
                "r={tag} a={} islands={} per_disk={:?} ramification={} ambiguous={}",
                sig12(run.row.a),
                run.islands.len(),
                per_disk,
                run.row.ramification.unwrap_or(0),
                run.row.ambiguous.unwrap_or(0)
            );
            if command == Command::Islands {
                stdout.push_str(&islands_to_csv(&run.islands));
            }
            if cfg.svg {
                writer.write(&format!("islands_{tag}.svg"), &islands_svg(&run.islands, r))?;
            }
        }
        if let Some((g, comp)) = &run.graph {
            let check = euler_identity(g, comp);
            let counts = g.counts();
            let _ = writeln!(
                stdout,
                "r={tag} a={} V={} E={} euler={} good={} bad={} suspect={} chi_C0={} sum_chi_C={} identity={}",
                sig12(run.row.a),
                g.vertices.len(),
                g.edges(),
                g.euler,
                counts.good,
                counts.bad,
                counts.suspect,
                check.chi_boundary,
                check.chi_interior,
                check.holds()
            );
            if cfg.svg {
                writer.write(&format!("graph_{tag}.svg"), &graph_svg(g))?;
            }
            if command == Command::Graph {
                let doc = graph_json(g, Some(comp), Some(&check));
                writer.write(&format!("graph_{tag}.json"), &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
            }
        }
        if run.arcs.is_some() {
            let _ = writeln!(
                stdout,
                "r={tag} a={} t*={} good={} bad={} suspect={} coarea={}/{} arc_integral={}",
                sig12(run.row.a),
                sig12(run.row.t_star.unwrap_or(f64::NAN)),
                run.row.chart_good.unwrap_or(0),
                run.row.chart_bad.unwrap_or(0),
                run.row.chart_suspect.unwrap_or(0),
                sig12(run.row.coarea_lhs.unwrap_or(f64::NAN)),
                sig12(run.row.coarea_rhs.unwrap_or(f64::NAN)),
                sig12(run.row.arc_integral.unwrap_or(f64::NAN))
            );
            if cfg.svg {
                if let Some(svg) = arcs_svg(run, r) {
                    writer.write(&format!("arcs_{tag}.svg"), &svg)?;
                }
            }
        }
        if let (Some(m), Some(se)) = (run.row.mean_degree, run.row.mean_stderr) {
            let _ = writeln!(stdout, "r={tag} a={} mean_degree={} ± {}", sig12(run.row.a), sig12(m), sig12(se));
        }
    }

    let errors: Vec<Value> = runs
        .iter()
        .flat_map(|r| &r.errors)
        .map(|e| json!({"r": e.r, "stage": e.stage, "message": e.message}))
        .collect();
    let mut results = Map::new();
    let mut all_pass = true;
    for v in &verifiers {
        let value = match run_verifier(*v, &rows, &cfg.constants, cfg.resolution) {
            Ok(o) => {
                all_pass &= o.pass;
                let _ = writeln!(
                    stdout,
                    "{:<20} {}  worst_slack={} trend_ok={}",
                    v.name(),
                    if o.pass { "PASS" } else { "FAIL" },
                    sig12(o.worst_slack()),
                    o.trend_ok
                );
                outcome_json(&o)
            }
            Err(e) => {
                all_pass = false;
                let _ = writeln!(stdout, "{:<20} ERROR {e}", v.name());
                json!({"pass": false, "error": e.to_string()})
            }
        };
        results.insert(v.name().to_string(), value);
    }
    let exit_code = if !errors.is_empty() {
        EXIT_NUMERIC
    } else if !all_pass {
        EXIT_VERIFIER_FAIL
    } else {
        EXIT_PASS
    };
    let summary = json!({
        "command": command.name(),
        "config": cfg.to_json(),
        "disks": experiment.disks.iter().map(|d| json!({
            "center": match d.center.value() {
                Ext::Infinity => json!("inf"),
                Ext::Finite(c) => json!([c.re, c.im]),
            },
            "radius": d.radius,
        })).collect::<Vec<_>>(),
        "radii": radii,
        "rows": rows_json(&csv),
        "verifiers": Value::Object(results),
        "errors": errors,
        "exit_code": exit_code,
    });
    writer.write("summary.json", &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))?;
    Ok(RunReport {
        exit_code,
        stdout,
        files: writer.files,
        summary,
    })
}

/// Resolves the overrides, runs the command and reports errors on stderr;
/// returns the process exit status.
pub fn main_with(command: Command, overrides: &Overrides) -> i32 {
    let outcome = overrides
        .resolve()
        .map_err(crate::Error::from)
        .and_then(|cfg| run(command, &cfg));
    match outcome {
        Ok(report) => {
            print!("{}", report.stdout);
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::parse(
            "# islands of exp\nmap = exp(z)\nradii.list = 5, 10, 20\n\
             disks.0.center = 1\ndisks.1.center = -1\ndisks.2.center = inf\ndisks.2.radius = 0.1\n\
             graph.node = 0.5i\nchart.x_range = -0.2, 0.2\nresolution = 256\nverifiers = islands, euler_identity\n",
        )
        .unwrap();
        assert_eq!(cfg.map.as_deref(), Some("exp(z)"));
        assert_eq!(cfg.radii, RadiiMode::List(vec![5.0, 10.0, 20.0]));
        let disks = cfg.disks.as_ref().unwrap();
        assert_eq!(disks.len(), 3);
        assert!(disks[2].center.is_infinity());
        assert_eq!(disks[0].radius, STANDARD_DISK_RADIUS);
        assert_eq!(cfg.graph.unwrap().node, Complex64::new(0.0, 0.5));
        assert_eq!(cfg.chart.unwrap().x_range, (-0.2, 0.2));
        assert_eq!(cfg.verifiers, Some(vec![Verifier::Islands, Verifier::EulerIdentity]));
        cfg.validate().unwrap();
    }

    #[test]
    fn two_disks_with_islands_verifier() {
        let cfg = ExperimentConfig::parse(
            "map = z\ndisks.0.center = 0\ndisks.1.center = 1\nverifiers = islands\n",
        )
        .unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err, ConfigError::DiskCount { found: 2 });
        assert!(err.to_string().contains("exactly 3 disks"));
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = ExperimentConfig::parse("disks.0.center = z+1\n").unwrap_err();
        assert!(e.to_string().starts_with("disks.0.center:"), "{e}");
        let e = ExperimentConfig::parse("map = z\nfoo.bar = 1\n").unwrap_err();
        assert_eq!(
            e,
            ConfigError::UnknownKey {
                line: 2,
                key: "foo.bar".into()
            }
        );
        assert_eq!(ExperimentConfig::parse("target.genus = 1").unwrap_err(), ConfigError::Genus { genus: 1 });
        assert!(matches!(ExperimentConfig::parse("no equals sign"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn overlapping_disks_are_rejected() {
        let cfg = ExperimentConfig::parse("disks.0.center = 0\ndisks.1.center = 0.01\n").unwrap();
        assert_eq!(cfg.validate(), Err(ConfigError::Overlap { a: 0, b: 1 }));
    }

    #[test]
    fn missing_config_file() {
        let o = Overrides {
            config: Some(PathBuf::from("/nonexistent/missing.cfg")),
            ..Default::default()
        };
        assert!(matches!(o.resolve(), Err(ConfigError::NotFound { .. })));
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cfg");
        fs::write(&path, "map = z^2\nseed = 3\nresolution = 128\n").unwrap();
        let o = Overrides {
            config: Some(path),
            map: Some("z".into()),
            r: Some(2.0),
            seed: Some(9),
            ..Default::default()
        };
        let cfg = o.resolve().unwrap();
        assert_eq!(cfg.map.as_deref(), Some("z"));
        assert_eq!(cfg.radii, RadiiMode::List(vec![2.0]));
        assert_eq!((cfg.seed, cfg.resolution), (9, 128));
    }

    #[test]
    fn standard_disks_avoid_omitted_zero() {
        let exp = HoloMap::parse("exp(z)").unwrap();
        let d = standard_disks(&exp, 20.0);
        assert_eq!(d[0].center, SpherePoint::new(-1.0, 0.0));
        let z5 = HoloMap::parse("z^5").unwrap();
        assert_eq!(standard_disks(&z5, 10.0)[0].center, SpherePoint::new(0.0, 0.0));
    }

    #[test]
    fn profile_of_identity() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            map: Some("z".into()),
            radii: RadiiMode::List(vec![1.0]),
            outputs: dir.path().to_path_buf(),
            ..Default::default()
        };
        let report = run(Command::Profile, &cfg).unwrap();
        assert_eq!(report.exit_code, 0);
        assert!(report.stdout.contains("1.00000000000,0.500000000000,1.77245385091"), "{}", report.stdout);
        assert!(dir.path().join("summary.json").exists());
    }
}
