//! Rebuilds a Hamiltonian from a field given only by its components, then
//! checks that its gradient generates the field.

use std::collections::BTreeMap;
use std::sync::Arc;

use dhelm::field::{FieldDef, Form};
use dhelm::reconstruct::{reconstruct, verify_generates, DEFAULT_FD_STEP, DEFAULT_QUAD_ORDER};
use dhelm::sampling::{sample_box, SampleSpec};

fn main() -> dhelm::Result<()> {
    // generated by H = P1^2/2 + Q1*P1*Q2 + Q2^4/4 - cos(Q1)
    let field = FieldDef::parse(
        "coupled",
        Form::DeltaNabla,
        0.1,
        &BTreeMap::new(),
        &["P1 + Q1*Q2", "0"],
        &["-P1*Q2 - sin(Q1)", "-Q1*P1 - Q2^3"],
    )?;
    let field = Arc::new(field);
    let ham = reconstruct(field.clone(), DEFAULT_QUAD_ORDER)?;
    let points: [([f64; 2], [f64; 2]); 3] = [
        ([0.0, 0.0], [0.0, 0.0]),
        ([1.0, 0.5], [-0.3, 0.0]),
        ([-0.7, 1.2], [0.4, 0.0]),
    ];
    for (q, p) in points {
        let exact = p[0] * p[0] / 2.0 + q[0] * p[0] * q[1] + q[1].powi(4) / 4.0 - q[0].cos() + 1.0;
        println!("H({q:?}, {p:?}) = {:.12} (exact {exact:.12})", ham.eval(&q, &p)?);
    }
    let report = verify_generates(
        field.as_ref(),
        &ham,
        &sample_box(2, SampleSpec::default()),
        DEFAULT_FD_STEP,
    )?;
    println!(
        "gradient check over {} points: max residual {:.2e} / {:.2e}, pass = {}",
        report.samples.len(),
        report.max_residual_q,
        report.max_residual_p,
        report.pass
    );
    Ok(())
}
