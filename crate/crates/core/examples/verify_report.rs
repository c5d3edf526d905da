//! Run the pipeline for exp on a few radii and evaluate every verifier.

use ahlfors_lab::metric::DIAMETER;
use ahlfors_lab::trace::GraphSpec;
use ahlfors_lab::verify::{report_csv, run_verifier, Constants, Experiment, Stages, Verifier};
use ahlfors_lab::{Complex64, HoloMap, SpherePoint, SphericalDisk};

fn main() -> ahlfors_lab::Result<()> {
    let disk = |c| SphericalDisk::new(c, 0.2 * DIAMETER);
    let experiment = Experiment {
        map: HoloMap::parse("exp(z)")?,
        disks: vec![
            disk(SpherePoint::new(1.0, 0.0))?,
            disk(SpherePoint::new(-1.0, 0.0))?,
            disk(SpherePoint::INFINITY)?,
        ],
        graph: Some(GraphSpec::new(Complex64::new(0.0, 0.5), 1.5)?),
        chart: None,
        resolution: 512,
        tolerance: 1e-8,
        seed: 1,
        samples: 500,
    };
    let stages = Stages {
        mean_degree: true,
        islands: true,
        graph: true,
        arcs: false,
    };
    let runs = experiment.run(&[5.0, 10.0, 20.0], stages)?;
    let rows: Vec<_> = runs.into_iter().map(|r| r.row).collect();
    let c = Constants::default();
    print!("{}", report_csv(&rows, &c, 512));
    for v in Verifier::ALL.into_iter().filter(|v| *v != Verifier::GoodArcs) {
        let o = run_verifier(v, &rows, &c, 512)?;
        println!("{:<20} pass={} worst_slack={:.4} trend_ok={}", v.name(), o.pass, o.worst_slack(), o.trend_ok);
    }
    Ok(())
}
