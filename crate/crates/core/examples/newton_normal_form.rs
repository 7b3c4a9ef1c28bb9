//! Newton's equation in both discrete forms. The (Δ, ∇) system is
//! Hamiltonian for every potential; the (Δ, Δ) system, brought to normal
//! form, keeps CH1 residual `h |U''(q)| / m`.

use dhelm::field::{shift_normal_form, Form};
use dhelm::helmholtz::{check, DEFAULT_TOL};
use dhelm::sampling::{sample_box, SampleSpec};
use dhelm::system;

fn main() -> dhelm::Result<()> {
    let (h, m) = (0.1, 1.0);
    let samples = sample_box(1, SampleSpec::default());
    for u in ["Q1^2/2", "Q1^4", "sin(Q1)", "3*Q1"] {
        let dn = system::newton(m, u, 1, Form::DeltaNabla, h)?;
        let dd = system::newton(m, u, 1, Form::DeltaDelta, h)?;
        let a = check(&dn.field, &samples, DEFAULT_TOL)?;
        let b = check(&shift_normal_form(&dd.field)?, &samples, DEFAULT_TOL)?;
        println!(
            "U = {u:<8}  delta-nabla: {:<16} delta-delta: {:<16} ch1 = {:.4e}",
            a.verdict, b.verdict, b.max_ch1
        );
    }
    Ok(())
}
