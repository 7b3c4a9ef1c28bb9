//! A two-dimensional oscillator with an asymmetric coupling fails the
//! symmetry condition on `∂X_Q/∂P`.

use dhelm::field::Form;
use dhelm::helmholtz::{check, DEFAULT_TOL};
use dhelm::sampling::{sample_box, SampleSpec};
use dhelm::system;

fn main() -> dhelm::Result<()> {
    let sys = system::modified_oscillator(Form::DeltaNabla, 0.1)?;
    let report = check(&sys.field, &sample_box(2, SampleSpec::default()), DEFAULT_TOL)?;
    println!("{}: {}", sys.name(), report.verdict);
    println!(
        "ch1 = {:e}, ch2q = {:e}, ch2p = {:e}",
        report.max_ch1, report.max_ch2q, report.max_ch2p
    );
    Ok(())
}
