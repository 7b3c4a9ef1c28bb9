//! Loads `pendulum.sys` from this directory, checks it and integrates it.

use std::path::Path;

use dhelm::config;
use dhelm::dynamics::integrate;
use dhelm::field::VectorField;
use dhelm::helmholtz::{check, DEFAULT_TOL};
use dhelm::sampling::{sample_box, SampleSpec};

fn main() -> dhelm::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/pendulum.sys");
    let sys = config::load(&path)?;
    let report = check(
        &sys.field,
        &sample_box(sys.field.dim(), SampleSpec::default()),
        DEFAULT_TOL,
    )?;
    println!("{}: {}", sys.name(), report.verdict);
    let grid = sys.grid.expect("file has a grid");
    let mut traj = integrate(&sys.field, &[1.0], &[0.0], grid)?;
    if let Some(ham) = &sys.hamiltonian {
        traj = traj.with_energy(ham)?;
    }
    traj.write_csv(std::io::stdout().lock())
}
