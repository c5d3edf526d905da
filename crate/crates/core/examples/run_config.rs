//! Drive a full verify-all run from an inline config, as the binary does.

use ahlfors_lab::cli::{run, Command, ExperimentConfig};

fn main() -> ahlfors_lab::Result<()> {
    let out = std::env::temp_dir().join("ahlfors-lab-run-config");
    let text = format!(
        "map = z^5\nradii.list = 2, 5, 10\nverifiers = islands, riemann_hurwitz\nresolution = 256\noutputs = {}\n",
        out.display()
    );
    let cfg = ExperimentConfig::parse(&text)?;
    let report = run(Command::VerifyAll, &cfg)?;
    print!("{}", report.stdout);
    println!("exit code {}; wrote {} files to {}", report.exit_code, report.files.len(), out.display());
    Ok(())
}
