//! Integrates the harmonic oscillator with both schemes. The (Δ, ∇) map
//! keeps `Q² + P² + hQP` to rounding and its trajectory is a critical point
//! of the discrete action; the explicit (Δ, Δ) map gains energy.

use dhelm::dynamics::{action, action_criticality, integrate_delta_delta, integrate_delta_nabla};
use dhelm::field::Form;
use dhelm::grid::TimeGrid;
use dhelm::system;

fn main() -> dhelm::Result<()> {
    let h = 0.1;
    let sys = system::harmonic(Form::DeltaNabla, h)?;
    let ham = sys.hamiltonian.clone().expect("closed form");
    let grid = TimeGrid::from_step(h, 1000)?;

    let vi = integrate_delta_nabla(&sys.field, &[1.0], &[0.0], grid)?;
    let ex = integrate_delta_delta(&sys.field, &[1.0], &[0.0], grid)?;
    let modified = |q: f64, p: f64| q * q + p * p + h * q * p;
    let i0 = modified(1.0, 0.0);
    let drift = (0..=1000)
        .map(|k| (modified(vi.q.at(k)[0], vi.p.at(k)[0]) - i0).abs())
        .fold(0.0, f64::max);
    let energy = |q: f64, p: f64| (q * q + p * p) / 2.0;
    println!("delta-nabla: max drift of Q^2+P^2+hQP = {drift:.2e}");
    println!(
        "delta-delta: energy 0.5 -> {:.4}",
        energy(ex.q.at(1000)[0], ex.p.at(1000)[0])
    );

    let short = TimeGrid::from_step(h, 50)?;
    let t = integrate_delta_nabla(&sys.field, &[1.0], &[0.0], short)?;
    println!("action = {:.12}", action(&ham, &t.q, &t.p)?);
    println!("criticality = {:.2e}", action_criticality(&ham, &t.q, &t.p, 16, 0)?);
    Ok(())
}
