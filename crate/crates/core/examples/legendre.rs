//! Legendre transform of a Lagrangian with a position-dependent mass.

use std::collections::BTreeMap;

use dhelm::dynamics::{legendre, LagrangianDef};

fn main() -> dhelm::Result<()> {
    let lag = LagrangianDef::parse("(1 + Q1^2)*V1^2/2 + V1^4/12 - Q1^2/2", 1, &BTreeMap::new())?;
    for (q, p) in [(0.0, 1.0), (0.5, -2.0), (1.5, 0.3)] {
        let v = lag.inverse_momentum(&[q], &[p])?;
        println!(
            "q = {q:5}, p = {p:5}: v = {:.10}, H = {:.10}",
            v[0],
            legendre(&lag, &[q], &[p])?
        );
    }
    let degenerate = LagrangianDef::parse("V1 - Q1^2", 1, &BTreeMap::new())?;
    match legendre(&degenerate, &[0.0], &[1.0]) {
        Err(e) => println!("L = V1 - Q1^2: {e}"),
        Ok(h) => println!("unexpected H = {h}"),
    }
    Ok(())
}
