//! Linear friction `m ΔQ = P`, `ΔP = -γP - Q` in (Δ, Δ) form is Hamiltonian
//! exactly at the threshold `γ = h/m`.

use dhelm::field::{shift_normal_form, Form};
use dhelm::helmholtz::{check, DEFAULT_TOL};
use dhelm::sampling::{sample_box, SampleSpec};
use dhelm::system;

fn main() -> dhelm::Result<()> {
    let (h, m) = (0.1, 1.0);
    let samples = sample_box(1, SampleSpec::default());
    for gamma in [0.0, 0.05, 0.1, 0.15, 0.3] {
        let sys = system::friction(gamma, m, Form::DeltaDelta, h)?;
        let report = check(&shift_normal_form(&sys.field)?, &samples, DEFAULT_TOL)?;
        let closed = (h / m - gamma).abs() / (1.0 - h * gamma);
        println!(
            "gamma = {gamma:<5} {:<16} ch1 = {:.6e} (closed form {closed:.6e})",
            report.verdict, report.max_ch1
        );
    }
    Ok(())
}
