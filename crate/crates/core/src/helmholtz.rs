//! The discrete Helmholtz conditions.
//!
//! For a `(Δ, ∇)` system with operator `O(Q, P) = (ΔQ - X_Q, ∇P - X_P)`, the
//! Fréchet derivative `DO(Q, P)` is self-adjoint for the symplectic discrete
//! L2 product exactly when, pointwise,
//!
//! * CH1: `∂X_Q/∂Q + (∂X_P/∂P)^T = 0`
//! * CH2: `∂X_Q/∂P` and `∂X_P/∂Q` are symmetric.
//!
//! [`frechet_apply`] and [`frechet_adjoint_apply`] realize both operators on
//! grid signals; [`check`] tests the conditions over a set of phase points.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Form, JacobianBlocks, VectorField};
use crate::grid::{delta, nabla, Signal};
use crate::sampling::PhasePoint;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hamiltonian,
    NotHamiltonian,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Hamiltonian => "hamiltonian",
            Verdict::NotHamiltonian => "not_hamiltonian",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub ch1: f64,
    pub ch2q: f64,
    pub ch2p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSample {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HelmholtzReport {
    pub system: String,
    pub form: Form,
    pub tolerance: f64,
    pub samples: Vec<SampleRecord>,
    pub skipped: Vec<SkippedSample>,
    pub max_ch1: f64,
    pub max_ch2q: f64,
    pub max_ch2p: f64,
    pub verdict: Verdict,
}

impl HelmholtzReport {
    pub fn is_hamiltonian(&self) -> bool {
        self.verdict == Verdict::Hamiltonian
    }
}

/// CH1, CH2(Q) and CH2(P) residuals in the max-entry norm.
pub fn residuals(j: &JacobianBlocks) -> (f64, f64, f64) {
    let ch1 = (&j.dxq_dq + j.dxp_dp.transpose()).amax();
    let ch2q = (&j.dxq_dp - j.dxq_dp.transpose()).amax();
    let ch2p = (&j.dxp_dq - j.dxp_dq.transpose()).amax();
    (ch1, ch2q, ch2p)
}

fn require_delta_nabla(field: &dyn VectorField) -> Result<()> {
    if field.form() != Form::DeltaNabla {
        return Err(Error::WrongForm {
            expected: Form::DeltaNabla.as_str(),
            got: field.form().as_str(),
        });
    }
    Ok(())
}

fn require_trajectory(field: &dyn VectorField, q: &Signal, p: &Signal) -> Result<()> {
    let n = q.grid().n_steps();
    let d = field.dim();
    for (name, s) in [("Q", q), ("P", p)] {
        if s.grid() != q.grid() || s.lo() != 0 || s.hi() != n || s.dim() != d {
            return Err(Error::Shape(format!(
                "{name} must cover the whole grid with dimension {d}"
            )));
        }
    }
    Ok(())
}

fn require_variation(q: &Signal, name: &str, s: &Signal) -> Result<()> {
    if s.grid() != q.grid() || s.dim() != q.dim() {
        return Err(Error::Shape(format!(
            "variation {name} must share the grid and dimension of Q"
        )));
    }
    if !s.is_c0(0.0) {
        return Err(Error::InvalidArgument(format!(
            "variation {name} must cover the grid and vanish at both endpoints"
        )));
    }
    Ok(())
}

fn interior_jacobians(field: &dyn VectorField, q: &Signal, p: &Signal) -> Result<Vec<JacobianBlocks>> {
    let n = q.grid().n_steps();
    (1..n).map(|k| field.jacobian(q.at(k), p.at(k))).collect()
}

fn col(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn combine<F>(q: &Signal, jac: &[JacobianBlocks], mut row: F) -> Result<(Signal, Signal)>
where
    F: FnMut(usize, &JacobianBlocks) -> (DVector<f64>, DVector<f64>),
{
    let n = q.grid().n_steps();
    let d = q.dim();
    let mut top = Vec::with_capacity((n - 1) * d);
    let mut bottom = Vec::with_capacity((n - 1) * d);
    for k in 1..n {
        let (a, b) = row(k, &jac[k - 1]);
        top.extend(a.iter());
        bottom.extend(b.iter());
    }
    Ok((
        Signal::new(*q.grid(), d, 1, n - 1, top)?,
        Signal::new(*q.grid(), d, 1, n - 1, bottom)?,
    ))
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    m * col(v)
}

/// `DO(Q, P)(U, V)` on interior nodes `1..=N-1`:
/// `(ΔU - ∂X_Q/∂Q U - ∂X_Q/∂P V, ∇V - ∂X_P/∂Q U - ∂X_P/∂P V)`.
pub fn frechet_apply(
    field: &dyn VectorField,
    q: &Signal,
    p: &Signal,
    u: &Signal,
    v: &Signal,
) -> Result<(Signal, Signal)> {
    require_delta_nabla(field)?;
    require_trajectory(field, q, p)?;
    require_variation(q, "U", u)?;
    require_variation(q, "V", v)?;
    let jac = interior_jacobians(field, q, p)?;
    let du = delta(u)?;
    let nv = nabla(v)?;
    combine(q, &jac, |k, j| {
        let (uk, vk) = (u.at(k), v.at(k));
        (
            col(du.at(k)) - mat_vec(&j.dxq_dq, uk) - mat_vec(&j.dxq_dp, vk),
            col(nv.at(k)) - mat_vec(&j.dxp_dq, uk) - mat_vec(&j.dxp_dp, vk),
        )
    })
}

/// The symplectic adjoint `DO*_J(Q, P)(A, B)` on interior nodes:
/// `(ΔA + (∂X_P/∂P)^T A - (∂X_Q/∂P)^T B, ∇B - (∂X_P/∂Q)^T A + (∂X_Q/∂Q)^T B)`.
pub fn frechet_adjoint_apply(
    field: &dyn VectorField,
    q: &Signal,
    p: &Signal,
    a: &Signal,
    b: &Signal,
) -> Result<(Signal, Signal)> {
    require_delta_nabla(field)?;
    require_trajectory(field, q, p)?;
    require_variation(q, "A", a)?;
    require_variation(q, "B", b)?;
    let jac = interior_jacobians(field, q, p)?;
    let da = delta(a)?;
    let nb = nabla(b)?;
    combine(q, &jac, |k, j| {
        let (ak, bk) = (a.at(k), b.at(k));
        (
            col(da.at(k)) + mat_vec(&j.dxp_dp.transpose(), ak) - mat_vec(&j.dxq_dp.transpose(), bk),
            col(nb.at(k)) - mat_vec(&j.dxp_dq.transpose(), ak) + mat_vec(&j.dxq_dq.transpose(), bk),
        )
    })
}

fn cmp_points(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> Ordering {
    a.0.iter()
        .chain(a.1)
        .zip(b.0.iter().chain(b.1))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Evaluates CH1/CH2 at every sample. Samples where the Jacobian cannot be
/// evaluated are recorded as skipped; at least one sample must succeed.
pub fn check(field: &dyn VectorField, samples: &[PhasePoint], tol: f64) -> Result<HelmholtzReport> {
    require_delta_nabla(field)?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    let d = field.dim();
    if let Some(bad) = samples.iter().find(|s| s.q.len() != d || s.p.len() != d) {
        return Err(Error::Shape(format!(
            "sample {:?} does not match field dimension {d}",
            bad
        )));
    }

    let outcomes: Vec<std::result::Result<SampleRecord, SkippedSample>> = samples
        .par_iter()
        .map(|s| match field.jacobian(&s.q, &s.p) {
            Ok(j) => {
                let (ch1, ch2q, ch2p) = residuals(&j);
                Ok(SampleRecord {
                    q: s.q.clone(),
                    p: s.p.clone(),
                    ch1,
                    ch2q,
                    ch2p,
                })
            }
            Err(e) => Err(SkippedSample {
                q: s.q.clone(),
                p: s.p.clone(),
                error: e.to_string(),
            }),
        })
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(s) => skipped.push(s),
        }
    }
    if records.is_empty() {
        return Err(Error::Domain {
            component: field.name().to_string(),
            detail: format!(
                "Jacobian failed at all {} samples (first: {})",
                skipped.len(),
                skipped[0].error
            ),
        });
    }
    records.sort_by(|a, b| cmp_points((&a.q, &a.p), (&b.q, &b.p)));
    skipped.sort_by(|a, b| cmp_points((&a.q, &a.p), (&b.q, &b.p)));

    let max_of = |f: fn(&SampleRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let max_ch1 = max_of(|r| r.ch1);
    let max_ch2q = max_of(|r| r.ch2q);
    let max_ch2p = max_of(|r| r.ch2p);
    let verdict = if max_ch1 <= tol && max_ch2q <= tol && max_ch2p <= tol {
        Verdict::Hamiltonian
    } else {
        Verdict::NotHamiltonian
    };
    Ok(HelmholtzReport {
        system: field.name().to_string(),
        form: field.form(),
        tolerance: tol,
        samples: records,
        skipped,
        max_ch1,
        max_ch2q,
        max_ch2p,
        verdict,
    })
}
