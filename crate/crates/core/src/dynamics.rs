//! Trajectories of discrete Hamiltonian systems, the discrete action and the
//! Legendre transform.
//!
//! Two schemes integrate a field from an initial condition `(q0, p0)`:
//!
//! * [`integrate_delta_nabla`]: `ΔQ = X_Q(Q, P)` on `0..N-1` and
//!   `∇P = X_P(Q, P)` on `1..N`. The momentum update is implicit.
//! * [`integrate_delta_delta`]: `ΔQ = X_Q(Q, P)`, `ΔP = X_P(Q, P)` on
//!   `0..N-1`, fully explicit.
//!
//! Only the first is variational: its trajectories are critical points of
//! `L(Q, P) = h Σ_{k<N} [P_k · (ΔQ)_k - H(Q_k, P_k)]` under variations that
//! vanish at both endpoints.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{Expr, ParseContext};
use crate::field::{Form, VectorField};
use crate::grid::{delta, dot, nabla, Signal, TimeGrid};
use crate::reconstruct::HamiltonianFn;
use crate::solve::{solve_fixed_point, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub q: Signal,
    pub p: Signal,
    /// One entry per step `k -> k+1`.
    pub diagnostics: Vec<StepDiagnostics>,
    pub energy: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Fills the energy column with `H(Q_k, P_k)`.
    pub fn with_energy(mut self, ham: &HamiltonianFn) -> Result<Self> {
        let n = self.grid.n_steps();
        let e = (0..=n)
            .map(|k| ham.eval(self.q.at(k), self.p.at(k)))
            .collect::<Result<Vec<_>>>()?;
        self.energy = Some(e);
        Ok(self)
    }

    /// CSV with header `k,t,Q1..Qd,P1..Pd,H,iters,residual`. Node 0 has no
    /// incoming step and reports zero iterations; the `H` cell is empty
    /// without an energy column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string(), "t".to_string()];
        header.extend((1..=d).map(|i| format!("Q{i}")));
        header.extend((1..=d).map(|i| format!("P{i}")));
        header.extend(["H", "iters", "residual"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..=self.grid.n_steps() {
            let mut row = vec![k.to_string(), self.grid.t(k).to_string()];
            row.extend(self.q.at(k).iter().map(f64::to_string));
            row.extend(self.p.at(k).iter().map(f64::to_string));
            row.push(self.energy.as_ref().map(|e| e[k].to_string()).unwrap_or_default());
            let diag = if k == 0 {
                StepDiagnostics {
                    iters: 0,
                    residual: 0.0,
                }
            } else {
                self.diagnostics[k - 1]
            };
            row.push(diag.iters.to_string());
            row.push(diag.residual.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn check_initial(field: &dyn VectorField, q0: &[f64], p0: &[f64]) -> Result<()> {
    let d = field.dim();
    if q0.len() != d || p0.len() != d {
        return Err(Error::Shape(format!(
            "initial condition must have dimension {d}, got {} and {}",
            q0.len(),
            p0.len()
        )));
    }
    if q0.iter().chain(p0).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial condition must be finite".into()));
    }
    Ok(())
}

fn assemble(
    grid: TimeGrid,
    d: usize,
    qs: Vec<f64>,
    ps: Vec<f64>,
    diagnostics: Vec<StepDiagnostics>,
) -> Result<Trajectory> {
    let n = grid.n_steps();
    Ok(Trajectory {
        grid,
        q: Signal::new(grid, d, 0, n, qs)?,
        p: Signal::new(grid, d, 0, n, ps)?,
        diagnostics,
        energy: None,
    })
}

/// Semi-implicit scheme: `Q_{k+1} = Q_k + h X_Q(Q_k, P_k)`, then
/// `P_{k+1} = P_k + h X_P(Q_{k+1}, P_{k+1})`.
pub fn integrate_delta_nabla(field: &dyn VectorField, q0: &[f64], p0: &[f64], grid: TimeGrid) -> Result<Trajectory> {
    integrate_delta_nabla_with(field, q0, p0, grid, SolveOptions::default())
}

pub fn integrate_delta_nabla_with(
    field: &dyn VectorField,
    q0: &[f64],
    p0: &[f64],
    grid: TimeGrid,
    opts: SolveOptions,
) -> Result<Trajectory> {
    check_initial(field, q0, p0)?;
    let d = field.dim();
    let n = grid.n_steps();
    let h = grid.h();
    let mut qs = Vec::with_capacity((n + 1) * d);
    let mut ps = Vec::with_capacity((n + 1) * d);
    let mut diagnostics = Vec::with_capacity(n);
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    qs.extend_from_slice(&q);
    ps.extend_from_slice(&p);
    for k in 0..n {
        let (xq, _) = field.eval(&q, &p)?;
        let q_next: Vec<f64> = q.iter().zip(&xq).map(|(a, b)| a + h * b).collect();
        let (_, xp_guess) = field.eval(&q_next, &p)?;
        let guess: Vec<f64> = p.iter().zip(&xp_guess).map(|(a, b)| a + h * b).collect();
        let sol = solve_fixed_point(
            |x| {
                let (_, xp) = field.eval(&q_next, x)?;
                Ok(p.iter().zip(&xp).map(|(a, b)| a + h * b).collect())
            },
            |x| Ok(field.jacobian(&q_next, x)?.dxp_dp * h),
            &guess,
            opts,
        )
        .map_err(|e| match e {
            Error::NotConverged { residual } => Error::Integration { step: k, residual },
            Error::SingularJacobian => Error::Integration {
                step: k,
                residual: f64::NAN,
            },
            other => other,
        })?;
        q = q_next;
        p = sol.x;
        qs.extend_from_slice(&q);
        ps.extend_from_slice(&p);
        diagnostics.push(StepDiagnostics {
            iters: sol.iters,
            residual: sol.residual,
        });
    }
    assemble(grid, d, qs, ps, diagnostics)
}

/// Explicit scheme: `Q_{k+1} = Q_k + h X_Q(Q_k, P_k)`, `P_{k+1} = P_k + h X_P(Q_k, P_k)`.
pub fn integrate_delta_delta(field: &dyn VectorField, q0: &[f64], p0: &[f64], grid: TimeGrid) -> Result<Trajectory> {
    check_initial(field, q0, p0)?;
    let d = field.dim();
    let n = grid.n_steps();
    let h = grid.h();
    let mut qs = Vec::with_capacity((n + 1) * d);
    let mut ps = Vec::with_capacity((n + 1) * d);
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    qs.extend_from_slice(&q);
    ps.extend_from_slice(&p);
    for _ in 0..n {
        let (xq, xp) = field.eval(&q, &p)?;
        for i in 0..d {
            q[i] += h * xq[i];
            p[i] += h * xp[i];
        }
        qs.extend_from_slice(&q);
        ps.extend_from_slice(&p);
    }
    let diagnostics = vec![
        StepDiagnostics {
            iters: 0,
            residual: 0.0,
        };
        n
    ];
    assemble(grid, d, qs, ps, diagnostics)
}

/// Integrates with the scheme matching the field's form.
pub fn integrate(field: &dyn VectorField, q0: &[f64], p0: &[f64], grid: TimeGrid) -> Result<Trajectory> {
    match field.form() {
        Form::DeltaNabla => integrate_delta_nabla(field, q0, p0, grid),
        Form::DeltaDelta => integrate_delta_delta(field, q0, p0, grid),
    }
}

fn require_full(q: &Signal, p: &Signal, dim: usize) -> Result<()> {
    let n = q.grid().n_steps();
    for (name, s) in [("Q", q), ("P", p)] {
        if s.grid() != q.grid() || s.lo() != 0 || s.hi() != n || s.dim() != dim {
            return Err(Error::Shape(format!(
                "{name} must cover the whole grid with dimension {dim}"
            )));
        }
    }
    Ok(())
}

/// `h Σ_{k=0}^{N-1} [P_k · (ΔQ)_k - H(Q_k, P_k)]`.
pub fn action(ham: &HamiltonianFn, q: &Signal, p: &Signal) -> Result<f64> {
    require_full(q, p, ham.dim())?;
    let h = q.grid().h();
    let dq = delta(q)?;
    let mut total = 0.0;
    for k in 0..q.grid().n_steps() {
        total += dot(p.at(k), dq.at(k)) - ham.eval(q.at(k), p.at(k))?;
    }
    Ok(h * total)
}

/// Interior residuals `(ΔQ - ∂H/∂P, ∇P + ∂H/∂Q)` on `1..N-1`.
pub fn hamilton_residuals(ham: &HamiltonianFn, q: &Signal, p: &Signal) -> Result<(Signal, Signal)> {
    require_full(q, p, ham.dim())?;
    let n = q.grid().n_steps();
    let d = ham.dim();
    let dq = delta(q)?;
    let np = nabla(p)?;
    let mut rq = Vec::with_capacity((n - 1) * d);
    let mut rp = Vec::with_capacity((n - 1) * d);
    for k in 1..n {
        let (hq, hp) = ham.gradient(q.at(k), p.at(k))?;
        rq.extend(dq.at(k).iter().zip(&hp).map(|(a, b)| a - b));
        rp.extend(np.at(k).iter().zip(&hq).map(|(a, b)| a + b));
    }
    Ok((
        Signal::new(*q.grid(), d, 1, n - 1, rq)?,
        Signal::new(*q.grid(), d, 1, n - 1, rp)?,
    ))
}

/// First variation of the action along `(U, V)` vanishing at both endpoints:
/// `h Σ_{k=1}^{N-1} [V_k · (ΔQ - ∂H/∂P)_k - U_k · (∇P + ∂H/∂Q)_k]`.
pub fn first_variation(ham: &HamiltonianFn, q: &Signal, p: &Signal, u: &Signal, v: &Signal) -> Result<f64> {
    let (rq, rp) = hamilton_residuals(ham, q, p)?;
    variation_from_residuals(&rq, &rp, u, v)
}

fn variation_from_residuals(rq: &Signal, rp: &Signal, u: &Signal, v: &Signal) -> Result<f64> {
    for (name, s) in [("U", u), ("V", v)] {
        if !s.is_c0(0.0) || s.dim() != rq.dim() {
            return Err(Error::InvalidArgument(format!(
                "variation {name} must be a full-grid signal of dim {} vanishing at the endpoints",
                rq.dim()
            )));
        }
    }
    let h = rq.grid().h();
    let n = rq.grid().n_steps();
    Ok(h * (1..n)
        .map(|k| dot(v.at(k), rq.at(k)) - dot(u.at(k), rp.at(k)))
        .sum::<f64>())
}

/// Largest `|first variation|` over `n_directions` random directions
/// normalized to unit discrete L2 norm `h Σ (|U_k|^2 + |V_k|^2) = 1`.
pub fn action_criticality(ham: &HamiltonianFn, q: &Signal, p: &Signal, n_directions: usize, seed: u64) -> Result<f64> {
    let (rq, rp) = hamilton_residuals(ham, q, p)?;
    let grid = *q.grid();
    let n = grid.n_steps();
    let d = ham.dim();
    let h = grid.h();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_directions {
        let raw = |rng: &mut ChaCha8Rng| {
            Signal::from_fn(grid, d, 0, n, |k, _| {
                (0..d)
                    .map(|_| {
                        if k == 0 || k == n {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
        };
        let u = raw(&mut rng)?;
        let v = raw(&mut rng)?;
        let norm = (h * (u.values().iter().chain(v.values()).map(|x| x * x).sum::<f64>())).sqrt();
        if norm == 0.0 {
            continue;
        }
        let value = variation_from_residuals(&rq, &rp, &u.scale(1.0 / norm), &v.scale(1.0 / norm))?;
        worst = worst.max(value.abs());
    }
    Ok(worst)
}

/// A Lagrangian `L(q, v)` over `Q1..Qd, V1..Vd`.
#[derive(Debug, Clone)]
pub struct LagrangianDef {
    dim: usize,
    expr: Expr,
    grad_v: Vec<Expr>,
    // row-major d x d
    hess_v: Vec<Expr>,
}

impl LagrangianDef {
    pub fn new(expr: Expr, dim: usize) -> Self {
        let grad_v: Vec<Expr> = (0..dim).map(|i| expr.diff(dim + i)).collect();
        let hess_v = grad_v
            .iter()
            .flat_map(|g| (0..dim).map(move |j| g.diff(dim + j)))
            .collect();
        Self {
            dim,
            expr,
            grad_v,
            hess_v,
        }
    }

    pub fn parse(src: &str, dim: usize, constants: &BTreeMap<String, f64>) -> Result<Self> {
        let expr = Expr::parse(src, &ParseContext::velocity(dim, constants))?;
        Ok(Self::new(expr, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn state(q: &[f64], v: &[f64]) -> Vec<f64> {
        q.iter().chain(v).copied().collect()
    }

    fn domain(what: &str) -> impl Fn(String) -> Error + '_ {
        move |detail| Error::Domain {
            component: what.to_string(),
            detail,
        }
    }

    pub fn eval(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        self.expr.eval(&Self::state(q, v)).map_err(Self::domain("L"))
    }

    /// Moment `p = ∂L/∂v(q, v)`.
    pub fn momentum(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let x = Self::state(q, v);
        self.grad_v
            .iter()
            .map(|e| e.eval(&x).map_err(Self::domain("dL/dv")))
            .collect()
    }

    pub fn velocity_hessian(&self, q: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        let x = Self::state(q, v);
        let vals = self
            .hess_v
            .iter()
            .map(|e| e.eval(&x).map_err(Self::domain("d2L/dv2")))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &vals))
    }

    /// Solves `∂L/∂v(q, v) = p` for `v = g(q, p)` by Newton iteration.
    pub fn inverse_momentum(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        if q.len() != d || p.len() != d {
            return Err(Error::Shape(format!("Lagrangian has dim {d}")));
        }
        let tol = 1e-12;
        let mut v = p.to_vec();
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let m = self.momentum(q, &v)?;
            let f: Vec<f64> = m.iter().zip(p).map(|(a, b)| a - b).collect();
            last = f.iter().fold(0.0, |acc, x| acc.max(x.abs()));
            let hess = self.velocity_hessian(q, &v)?;
            let scale = hess.amax().max(1.0);
            if hess.determinant().abs() <= 1e-14 * scale.powi(d as i32) {
                return Err(Error::NonAdmissible { q: q.to_vec(), v });
            }
            if last <= tol * p.iter().fold(1.0, |acc: f64, x| acc.max(x.abs())) {
                return Ok(v);
            }
            let step = hess
                .lu()
                .solve(&DVector::from_vec(f))
                .ok_or_else(|| Error::NonAdmissible {
                    q: q.to_vec(),
                    v: v.clone(),
                })?;
            for (vi, si) in v.iter_mut().zip(step.iter()) {
                *vi -= si;
            }
        }
        Err(Error::NotConverged { residual: last })
    }
}

/// Legendre transform `H(q, p) = p · g(q, p) - L(q, g(q, p))`.
pub fn legendre(lag: &LagrangianDef, q: &[f64], p: &[f64]) -> Result<f64> {
    let v = lag.inverse_momentum(q, p)?;
    Ok(dot(p, &v) - lag.eval(q, &v)?)
}
