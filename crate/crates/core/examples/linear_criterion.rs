//! Sweeps the linear family and shows that only `α + δ = 0` is Hamiltonian.

use dhelm::field::Form;
use dhelm::helmholtz::{check, DEFAULT_TOL};
use dhelm::sampling::{sample_box, SampleSpec};
use dhelm::system;

fn main() -> dhelm::Result<()> {
    let samples = sample_box(1, SampleSpec::default());
    println!("{:>6} {:>6} {:>16} {:>10}", "alpha", "delta", "verdict", "max_ch1");
    for (alpha, delta) in [(1.0, -1.0), (1.0, 0.0), (0.5, -0.5), (-2.0, 1.5), (0.0, 0.0)] {
        let sys = system::linear(alpha, 1.0, -1.0, delta, Form::DeltaNabla, 0.1)?;
        let report = check(&sys.field, &samples, DEFAULT_TOL)?;
        println!("{alpha:>6} {delta:>6} {:>16} {:>10.3e}", report.verdict, report.max_ch1);
    }
    Ok(())
}
