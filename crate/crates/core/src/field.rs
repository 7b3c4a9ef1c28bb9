//! Discrete vector fields `X(Q, P) = (X_Q, X_P)` and the shift normal form.
//!
//! A field in [`Form::DeltaNabla`] form describes the system
//! `ΔQ = X_Q(Q, P), ∇P = X_P(Q, P)`; in [`Form::DeltaDelta`] form it
//! describes `ΔQ = X_Q(Q, P), ΔP = X_P(Q, P)`. The latter is brought to the
//! former by [`shift_normal_form`], which rewrites the system in terms of the
//! forward-shifted momentum `Z_k = P_{k+1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, ParseContext};
use crate::solve::{solve_fixed_point, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    DeltaNabla,
    DeltaDelta,
}

impl Form {
    pub fn as_str(self) -> &'static str {
        match self {
            Form::DeltaNabla => "delta-nabla",
            Form::DeltaDelta => "delta-delta",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "delta-nabla" => Ok(Form::DeltaNabla),
            "delta-delta" => Ok(Form::DeltaDelta),
            other => Err(Error::InvalidArgument(format!(
                "unknown form `{other}` (expected delta-nabla or delta-delta)"
            ))),
        }
    }
}

/// The four `d x d` blocks of the Jacobian of a field at one phase point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBlocks {
    pub dxq_dq: DMatrix<f64>,
    pub dxq_dp: DMatrix<f64>,
    pub dxp_dq: DMatrix<f64>,
    pub dxp_dp: DMatrix<f64>,
}

impl JacobianBlocks {
    pub fn zeros(d: usize) -> Self {
        Self {
            dxq_dq: DMatrix::zeros(d, d),
            dxq_dp: DMatrix::zeros(d, d),
            dxp_dq: DMatrix::zeros(d, d),
            dxp_dp: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.dxq_dq.nrows()
    }

    pub fn is_finite(&self) -> bool {
        [&self.dxq_dq, &self.dxq_dp, &self.dxp_dq, &self.dxp_dp]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Largest entry-wise difference to another set of blocks.
    pub fn max_abs_diff(&self, other: &JacobianBlocks) -> f64 {
        let pairs = [
            (&self.dxq_dq, &other.dxq_dq),
            (&self.dxq_dp, &other.dxq_dp),
            (&self.dxp_dq, &other.dxp_dq),
            (&self.dxp_dp, &other.dxp_dp),
        ];
        pairs.iter().map(|(a, b)| (*a - *b).amax()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        [&self.dxq_dq, &self.dxq_dp, &self.dxp_dq, &self.dxp_dp]
            .iter()
            .map(|m| m.amax())
            .fold(0.0, f64::max)
    }
}

/// Anything that can be evaluated and differentiated like a discrete vector field.
pub trait VectorField: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn form(&self) -> Form;
    fn eval(&self, q: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
    fn jacobian(&self, q: &[f64], p: &[f64]) -> Result<JacobianBlocks>;
}

/// A field defined by parsed expressions, with symbolic Jacobian blocks.
#[derive(Debug, Clone)]
pub struct FieldDef {
    name: String,
    dim: usize,
    form: Form,
    h: f64,
    constants: BTreeMap<String, f64>,
    xq: Vec<Expr>,
    xp: Vec<Expr>,
    // [dxq_dq, dxq_dp, dxp_dq, dxp_dp], row-major d x d
    jac: [Vec<Expr>; 4],
}

impl FieldDef {
    /// Builds a field from already parsed component expressions over the
    /// state `(Q1..Qd, P1..Pd)`.
    pub fn new(
        name: impl Into<String>,
        form: Form,
        h: f64,
        constants: BTreeMap<String, f64>,
        xq: Vec<Expr>,
        xp: Vec<Expr>,
    ) -> Result<Self> {
        let dim = xq.len();
        if dim == 0 || xp.len() != dim {
            return Err(Error::Shape(format!(
                "field needs d >= 1 components in both blocks, got {} and {}",
                xq.len(),
                xp.len()
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
        }
        let block = |exprs: &[Expr], offset: usize| -> Vec<Expr> {
            exprs
                .iter()
                .flat_map(|e| (0..dim).map(move |j| e.diff(offset + j)))
                .collect()
        };
        let jac = [block(&xq, 0), block(&xq, dim), block(&xp, 0), block(&xp, dim)];
        Ok(Self {
            name: name.into(),
            dim,
            form,
            h,
            constants,
            xq,
            xp,
            jac,
        })
    }

    /// Parses component sources. The step `h` is available as a constant
    /// unless the caller already bound that name.
    pub fn parse(
        name: impl Into<String>,
        form: Form,
        h: f64,
        constants: &BTreeMap<String, f64>,
        xq: &[&str],
        xp: &[&str],
    ) -> Result<Self> {
        let dim = xq.len();
        let mut constants = constants.clone();
        constants.entry("h".to_string()).or_insert(h);
        let ctx = ParseContext::phase(dim, &constants);
        let xq = xq.iter().map(|s| Expr::parse(s, &ctx)).collect::<Result<Vec<_>>>()?;
        let xp = xp.iter().map(|s| Expr::parse(s, &ctx)).collect::<Result<Vec<_>>>()?;
        Self::new(name, form, h, constants, xq, xp)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.constants
    }

    pub fn xq(&self) -> &[Expr] {
        &self.xq
    }

    pub fn xp(&self) -> &[Expr] {
        &self.xp
    }

    /// The same component expressions reinterpreted in another form.
    pub fn with_form(&self, form: Form) -> Self {
        Self { form, ..self.clone() }
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..self.clone()
        }
    }

    fn state(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.dim || p.len() != self.dim {
            return Err(Error::Shape(format!(
                "field `{}` has dim {}, got q of length {} and p of length {}",
                self.name,
                self.dim,
                q.len(),
                p.len()
            )));
        }
        Ok(q.iter().chain(p).copied().collect())
    }

    fn eval_block(&self, exprs: &[Expr], x: &[f64], label: &str) -> Result<Vec<f64>> {
        exprs
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.eval(x).map_err(|detail| Error::Domain {
                    component: format!("{label}{}", i + 1),
                    detail,
                })
            })
            .collect()
    }

    fn eval_matrix(&self, exprs: &[Expr], x: &[f64], label: &str) -> Result<DMatrix<f64>> {
        let d = self.dim;
        let vals = exprs
            .iter()
            .enumerate()
            .map(|(idx, e)| {
                e.eval(x).map_err(|detail| Error::Domain {
                    component: format!("{label}[{},{}]", idx / d + 1, idx % d + 1),
                    detail,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_row_slice(d, d, &vals))
    }
}

impl VectorField for FieldDef {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn form(&self) -> Form {
        self.form
    }

    fn eval(&self, q: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = self.state(q, p)?;
        Ok((
            self.eval_block(&self.xq, &x, "XQ")?,
            self.eval_block(&self.xp, &x, "XP")?,
        ))
    }

    fn jacobian(&self, q: &[f64], p: &[f64]) -> Result<JacobianBlocks> {
        let x = self.state(q, p)?;
        Ok(JacobianBlocks {
            dxq_dq: self.eval_matrix(&self.jac[0], &x, "dXQ/dQ")?,
            dxq_dp: self.eval_matrix(&self.jac[1], &x, "dXQ/dP")?,
            dxp_dq: self.eval_matrix(&self.jac[2], &x, "dXP/dQ")?,
            dxp_dp: self.eval_matrix(&self.jac[3], &x, "dXP/dP")?,
        })
    }
}

/// Central-difference Jacobian of any field, with per-coordinate step
/// `step * (1 + |x_i|)`.
pub fn finite_difference_jacobian(field: &dyn VectorField, q: &[f64], p: &[f64], step: f64) -> Result<JacobianBlocks> {
    let d = field.dim();
    let mut out = JacobianBlocks::zeros(d);
    for j in 0..2 * d {
        let mut qp = q.to_vec();
        let mut pp = p.to_vec();
        let mut qm = q.to_vec();
        let mut pm = p.to_vec();
        let (base, plus, minus) = if j < d {
            (q[j], &mut qp[j], &mut qm[j])
        } else {
            (p[j - d], &mut pp[j - d], &mut pm[j - d])
        };
        let eps = step * (1.0 + base.abs());
        *plus = base + eps;
        *minus = base - eps;
        let (fq_p, fp_p) = field.eval(&qp, &pp)?;
        let (fq_m, fp_m) = field.eval(&qm, &pm)?;
        for i in 0..d {
            let dq = (fq_p[i] - fq_m[i]) / (2.0 * eps);
            let dp = (fp_p[i] - fp_m[i]) / (2.0 * eps);
            if j < d {
                out.dxq_dq[(i, j)] = dq;
                out.dxp_dq[(i, j)] = dp;
            } else {
                out.dxq_dp[(i, j - d)] = dq;
                out.dxp_dp[(i, j - d)] = dp;
            }
        }
    }
    Ok(out)
}

/// The `(Δ, Δ)` system rewritten on `(Q, Z)` with `Z_k = P_{k+1}`:
/// `ΔQ = X̃_Q(Q, Z), ∇Z = X̃_P(Q, Z)`, where `X̃_P = X_P(Q, Z - h X̃_P)` and
/// `X̃_Q = X_Q(Q, Z - h X̃_P)`.
#[derive(Debug, Clone)]
pub struct ShiftedField {
    base: FieldDef,
    name: String,
    opts: SolveOptions,
}

/// Converts a `(Δ, Δ)` field to its `(Δ, ∇)` normal form. The transformation
/// is probed at the origin so that a globally singular shift (such as friction
/// with `γ = 1/h`) is reported immediately.
pub fn shift_normal_form(field: &FieldDef) -> Result<ShiftedField> {
    if field.form != Form::DeltaDelta {
        return Err(Error::WrongForm {
            expected: Form::DeltaDelta.as_str(),
            got: field.form.as_str(),
        });
    }
    let shifted = ShiftedField {
        name: format!("{} (shift normal form)", field.name),
        base: field.clone(),
        opts: SolveOptions::default(),
    };
    let zero = vec![0.0; field.dim];
    shifted.jacobian(&zero, &zero)?;
    Ok(shifted)
}

impl ShiftedField {
    pub fn base(&self) -> &FieldDef {
        &self.base
    }

    /// Returns `(X̃_P, P)` with `P = Z - h X̃_P` the unshifted momentum.
    pub fn solve_momentum(&self, q: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let h = self.base.h;
        let momentum = |w: &[f64]| -> Vec<f64> { z.iter().zip(w).map(|(zi, wi)| zi - h * wi).collect() };
        let singular = || Error::SingularTransform {
            q: q.to_vec(),
            z: z.to_vec(),
        };
        let (_, guess) = self.base.eval(q, z)?;
        let sol = solve_fixed_point(
            |w| Ok(self.base.eval(q, &momentum(w))?.1),
            |w| Ok(self.base.jacobian(q, &momentum(w))?.dxp_dp * (-h)),
            &guess,
            self.opts,
        )
        .map_err(|e| match e {
            Error::SingularJacobian | Error::NotConverged { .. } => singular(),
            other => other,
        })?;
        let p = momentum(&sol.x);
        Ok((sol.x, p))
    }
}

impl VectorField for ShiftedField {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.base.dim
    }

    fn form(&self) -> Form {
        Form::DeltaNabla
    }

    fn eval(&self, q: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (w, p) = self.solve_momentum(q, z)?;
        let (xq, _) = self.base.eval(q, &p)?;
        Ok((xq, w))
    }

    /// Exact Jacobian by implicit differentiation of `W = X_P(Q, Z - h W)`.
    fn jacobian(&self, q: &[f64], z: &[f64]) -> Result<JacobianBlocks> {
        let d = self.base.dim;
        let h = self.base.h;
        let (_, p) = self.solve_momentum(q, z)?;
        let j = self.base.jacobian(q, &p)?;
        let m = DMatrix::identity(d, d) + &j.dxp_dp * h;
        let lu = m.lu();
        let singular = || Error::SingularTransform {
            q: q.to_vec(),
            z: z.to_vec(),
        };
        let dw_dq = lu.solve(&j.dxp_dq).ok_or_else(singular)?;
        let dw_dz = lu.solve(&j.dxp_dp).ok_or_else(singular)?;
        let dp_dq = &dw_dq * (-h);
        let dp_dz = DMatrix::identity(d, d) - &dw_dz * h;
        let out = JacobianBlocks {
            dxq_dq: &j.dxq_dq + &j.dxq_dp * dp_dq,
            dxq_dp: &j.dxq_dp * dp_dz,
            dxp_dq: dw_dq,
            dxp_dp: dw_dz,
        };
        if !out.is_finite() {
            return Err(singular());
        }
        Ok(out)
    }
}
