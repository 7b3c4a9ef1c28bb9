//! Hamiltonian reconstruction by the homotopy formula
//!
//! ```text
//! H(Q, P) = ∫_0^1 [ P · X_Q(λQ, λP) - Q · X_P(λQ, λP) ] dλ
//! ```
//!
//! evaluated with Gauss-Legendre quadrature. For a field satisfying the
//! Helmholtz conditions this `H` generates the field, `X_Q = ∂H/∂P` and
//! `X_P = -∂H/∂Q`, and is normalized by `H(0, 0) = 0`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, ParseContext};
use crate::field::{Form, VectorField};
use crate::quadrature::GaussLegendre;
use crate::sampling::PhasePoint;

pub const DEFAULT_QUAD_ORDER: usize = 32;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Homotopy { quad_order: usize },
}

#[derive(Clone)]
enum Repr {
    ClosedForm {
        expr: Expr,
        grad: Vec<Expr>,
    },
    Homotopy {
        field: Arc<dyn VectorField>,
        rule: GaussLegendre,
    },
}

/// A scalar function `H(q, p)` on phase space.
#[derive(Clone)]
pub struct HamiltonianFn {
    dim: usize,
    repr: Repr,
}

impl std::fmt::Debug for HamiltonianFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianFn")
            .field("dim", &self.dim)
            .field("provenance", &self.provenance())
            .finish()
    }
}

impl HamiltonianFn {
    pub fn closed_form(expr: Expr, dim: usize) -> Self {
        let grad = expr.gradient(2 * dim);
        Self {
            dim,
            repr: Repr::ClosedForm { expr, grad },
        }
    }

    /// Parses `H` over `Q1..Qd, P1..Pd`.
    pub fn parse(src: &str, dim: usize, constants: &BTreeMap<String, f64>) -> Result<Self> {
        let expr = Expr::parse(src, &ParseContext::phase(dim, constants))?;
        Ok(Self::closed_form(expr, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        match &self.repr {
            Repr::ClosedForm { .. } => Provenance::ClosedForm,
            Repr::Homotopy { rule, .. } => Provenance::Homotopy {
                quad_order: rule.order(),
            },
        }
    }

    fn check_dims(&self, q: &[f64], p: &[f64]) -> Result<()> {
        if q.len() != self.dim || p.len() != self.dim {
            return Err(Error::Shape(format!(
                "Hamiltonian has dim {}, got q of length {} and p of length {}",
                self.dim,
                q.len(),
                p.len()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        self.check_dims(q, p)?;
        match &self.repr {
            Repr::ClosedForm { expr, .. } => {
                let x: Vec<f64> = q.iter().chain(p).copied().collect();
                expr.eval(&x).map_err(|detail| Error::Domain {
                    component: "H".into(),
                    detail,
                })
            }
            Repr::Homotopy { field, rule } => {
                let mut total = 0.0;
                for (&lam, &w) in rule.nodes().iter().zip(rule.weights()) {
                    let (xq, xp) = eval_scaled(field.as_ref(), q, p, lam)?;
                    let integrand: f64 = p.iter().zip(&xq).map(|(a, b)| a * b).sum::<f64>()
                        - q.iter().zip(&xp).map(|(a, b)| a * b).sum::<f64>();
                    total += w * integrand;
                }
                Ok(total)
            }
        }
    }

    /// Exact gradient `(∂H/∂q, ∂H/∂p)`. For the homotopy representation the
    /// derivative is taken under the integral using the field's Jacobian.
    pub fn gradient(&self, q: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dims(q, p)?;
        let d = self.dim;
        match &self.repr {
            Repr::ClosedForm { grad, .. } => {
                let x: Vec<f64> = q.iter().chain(p).copied().collect();
                let g = grad
                    .iter()
                    .map(|e| {
                        e.eval(&x).map_err(|detail| Error::Domain {
                            component: "grad H".into(),
                            detail,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((g[..d].to_vec(), g[d..].to_vec()))
            }
            Repr::Homotopy { field, rule } => {
                let qv = DVector::from_column_slice(q);
                let pv = DVector::from_column_slice(p);
                let mut gq = DVector::zeros(d);
                let mut gp = DVector::zeros(d);
                for (&lam, &w) in rule.nodes().iter().zip(rule.weights()) {
                    let (xq, xp) = eval_scaled(field.as_ref(), q, p, lam)?;
                    let sq: Vec<f64> = q.iter().map(|v| lam * v).collect();
                    let sp: Vec<f64> = p.iter().map(|v| lam * v).collect();
                    let j = field.jacobian(&sq, &sp)?;
                    let dq = (j.dxq_dq.transpose() * &pv - j.dxp_dq.transpose() * &qv) * lam
                        - DVector::from_column_slice(&xp);
                    let dp = DVector::from_column_slice(&xq)
                        + (j.dxq_dp.transpose() * &pv - j.dxp_dp.transpose() * &qv) * lam;
                    gq += dq * w;
                    gp += dp * w;
                }
                Ok((gq.iter().copied().collect(), gp.iter().copied().collect()))
            }
        }
    }
}

fn eval_scaled(field: &dyn VectorField, q: &[f64], p: &[f64], lam: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let sq: Vec<f64> = q.iter().map(|v| lam * v).collect();
    let sp: Vec<f64> = p.iter().map(|v| lam * v).collect();
    field.eval(&sq, &sp)
}

/// Homotopy reconstruction with a `quad_order`-point Gauss-Legendre rule.
/// The field must be defined on the whole segment from the origin to each
/// evaluation point; failures surface as errors from [`HamiltonianFn::eval`].
pub fn reconstruct(field: Arc<dyn VectorField>, quad_order: usize) -> Result<HamiltonianFn> {
    if field.form() != Form::DeltaNabla {
        return Err(Error::WrongForm {
            expected: Form::DeltaNabla.as_str(),
            got: field.form().as_str(),
        });
    }
    if quad_order < 2 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be at least 2, got {quad_order}"
        )));
    }
    let d = field.dim();
    let zero = vec![0.0; d];
    field.eval(&zero, &zero)?;
    Ok(HamiltonianFn {
        dim: d,
        repr: Repr::Homotopy {
            field,
            rule: GaussLegendre::new(quad_order),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub h: f64,
    /// `‖∂H/∂p - X_Q‖_max`
    pub residual_q: f64,
    /// `‖∂H/∂q + X_P‖_max`
    pub residual_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    pub samples: Vec<GenerationRecord>,
    pub failures: Vec<String>,
    pub max_residual_q: f64,
    pub max_residual_p: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks by central differences that `H` generates `field` at each sample.
pub fn verify_generates(
    field: &dyn VectorField,
    ham: &HamiltonianFn,
    samples: &[PhasePoint],
    fd_step: f64,
) -> Result<GenerationReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fd_step must be positive, got {fd_step}"
        )));
    }
    if ham.dim() != field.dim() {
        return Err(Error::Shape(format!(
            "Hamiltonian dim {} does not match field dim {}",
            ham.dim(),
            field.dim()
        )));
    }
    let d = field.dim();
    let mut records = Vec::with_capacity(samples.len());
    let mut failures = Vec::new();
    for s in samples {
        let outcome = (|| -> Result<GenerationRecord> {
            let (xq, xp) = field.eval(&s.q, &s.p)?;
            let mut x: Vec<f64> = s.q.iter().chain(&s.p).copied().collect();
            let mut grad = vec![0.0; 2 * d];
            for i in 0..2 * d {
                let base = x[i];
                let eps = fd_step * (1.0 + base.abs());
                x[i] = base + eps;
                let hp = ham.eval(&x[..d], &x[d..])?;
                x[i] = base - eps;
                let hm = ham.eval(&x[..d], &x[d..])?;
                x[i] = base;
                grad[i] = (hp - hm) / (2.0 * eps);
            }
            let residual_q = (0..d).map(|i| (grad[d + i] - xq[i]).abs()).fold(0.0, f64::max);
            let residual_p = (0..d).map(|i| (grad[i] + xp[i]).abs()).fold(0.0, f64::max);
            Ok(GenerationRecord {
                q: s.q.clone(),
                p: s.p.clone(),
                h: ham.eval(&s.q, &s.p)?,
                residual_q,
                residual_p,
            })
        })();
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(format!("q={:?}, p={:?}: {e}", s.q, s.p)),
        }
    }
    let max_residual_q = records.iter().map(|r| r.residual_q).fold(0.0, f64::max);
    let max_residual_p = records.iter().map(|r| r.residual_p).fold(0.0, f64::max);
    let pass =
        failures.is_empty() && !records.is_empty() && max_residual_q <= VERIFY_TOL && max_residual_p <= VERIFY_TOL;
    Ok(GenerationReport {
        samples: records,
        failures,
        max_residual_q,
        max_residual_p,
        tolerance: VERIFY_TOL,
        pass,
    })
}
