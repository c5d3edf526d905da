//! Preimage of a figure-eight under z^3: vertices, edges, complement
//! components and the Euler identity. Writes an SVG and a JSON dump.

use ahlfors_lab::trace::{build_preimage_graph, complement_components, euler_identity, graph_json, graph_svg, GraphSpec};
use ahlfors_lab::{Complex64, HoloMap};

fn main() -> ahlfors_lab::Result<()> {
    let hm = HoloMap::parse("z^3")?;
    let spec = GraphSpec::new(Complex64::new(0.0, 0.5), 1.5)?;
    let g = build_preimage_graph(&hm, &spec, 2.0, 512)?;
    let comp = complement_components(&hm, &g)?;
    let check = euler_identity(&g, &comp);
    println!("V={} E={} χ(Γ)={}", g.vertices.len(), g.edges(), g.euler);
    for c in &comp.components {
        println!(
            "component χ={} boundary={} face={} pixels={}",
            c.chi,
            c.touches_boundary,
            c.face.as_str(),
            c.pixels
        );
    }
    println!(
        "1 = {} + {} + {} : {}",
        check.chi_boundary,
        check.euler,
        check.chi_interior,
        check.holds()
    );
    let dir = std::env::temp_dir();
    std::fs::write(dir.join("figure_eight.svg"), graph_svg(&g))?;
    let json = graph_json(&g, Some(&comp), Some(&check));
    std::fs::write(dir.join("figure_eight.json"), serde_json::to_string_pretty(&json).unwrap())?;
    println!("wrote {}", dir.join("figure_eight.svg").display());
    Ok(())
}
