use std::fmt::Write;

use serde_json::{json, Value};

use super::graph::{Complement, PreimageGraph};
use super::{ArcTag, EulerCheck};

const SIZE: f64 = 800.0;

/// SVG drawing of the traced graph in `|z| <= r`: good arcs solid, suspect
/// arcs dotted, bad arcs dashed, vertices as dots.
pub fn graph_svg(graph: &PreimageGraph) -> String {
    let scale = SIZE / (2.0 * graph.r);
    let px = |z: num_complex::Complex64| ((z.re + graph.r) * scale, (graph.r - z.im) * scale);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let c = SIZE / 2.0;
    let _ = writeln!(out, r##"<circle cx="{c}" cy="{c}" r="{c}" fill="none" stroke="#999"/>"##);
    for arc in &graph.arcs {
        let (color, dash) = match arc.tag {
            ArcTag::Good => ("green", ""),
            ArcTag::Suspect => ("orange", r#" stroke-dasharray="1,3""#),
            ArcTag::Bad => ("red", r#" stroke-dasharray="6,4""#),
        };
        let pts: Vec<String> = arc
            .points
            .iter()
            .map(|&z| {
                let (x, y) = px(z);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let shape = if arc.closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            out,
            r#"<{shape} points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
    }
    for &v in &graph.vertices {
        let (x, y) = px(v);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
    }
    out.push_str("</svg>\n");
    out
}

/// Arcs, tags, Euler data and the complement table as JSON.
pub fn graph_json(graph: &PreimageGraph, complement: Option<&Complement>, check: Option<&EulerCheck>) -> Value {
    let counts = graph.counts();
    let arcs: Vec<Value> = graph
        .arcs
        .iter()
        .map(|a| {
            json!({
                "tag": a.tag.as_str(),
                "closed": a.closed,
                "ends": a.ends,
                "points": a.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut doc = json!({
        "r": graph.r,
        "resolution": graph.resolution,
        "node": [graph.spec.node.re, graph.spec.node.im],
        "scale": graph.spec.scale,
        "vertices": graph.vertices.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "edges": graph.edges(),
        "euler": graph.euler,
        "good": counts.good,
        "bad": counts.bad,
        "suspect": counts.suspect,
        "arcs": arcs,
    });
    if let Some(c) = complement {
        doc["components"] = c
            .components
            .iter()
            .map(|c| {
                json!({
                    "chi": c.chi,
                    "touches_boundary": c.touches_boundary,
                    "pixels": c.pixels,
                    "sample": [c.sample.re, c.sample.im],
                    "face": c.face.as_str(),
                })
            })
            .collect();
    }
    if let Some(e) = check {
        doc["euler_identity"] = json!({
            "chi_boundary": e.chi_boundary,
            "euler": e.euler,
            "chi_interior": e.chi_interior,
            "holds": e.holds(),
        });
    }
    doc
}
