//! Built-in example systems and the loaded-system bundle.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{self, Expr, ParseContext};
use crate::field::{FieldDef, Form};
use crate::grid::TimeGrid;
use crate::reconstruct::HamiltonianFn;

/// A field together with what its source knew about it.
#[derive(Debug, Clone)]
pub struct SystemDef {
    pub field: FieldDef,
    /// Closed-form Hamiltonian, when one is known for this form.
    pub hamiltonian: Option<HamiltonianFn>,
    pub grid: Option<TimeGrid>,
}

impl SystemDef {
    pub fn name(&self) -> &str {
        use crate::field::VectorField;
        self.field.name()
    }
}

pub const BUILTINS: [&str; 5] = ["linear", "newton", "friction", "modified-oscillator", "harmonic"];

/// Parameters shared by the built-in systems. Unset values fall back to
/// per-system defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinParams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub m: Option<f64>,
    /// Potential `U(Q1..Qd)` for the Newton system.
    pub potential: Option<String>,
    pub dim: Option<usize>,
    pub form: Form,
    pub h: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: None,
            gamma: None,
            delta: None,
            m: None,
            potential: None,
            dim: None,
            form: Form::DeltaNabla,
            h: 0.1,
        }
    }
}

fn consts(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be finite, got {v}")))
    }
}

/// Looks up a built-in system by name.
pub fn builtin(name: &str, params: &BuiltinParams) -> Result<SystemDef> {
    positive("h", params.h)?;
    match name {
        "linear" => linear(
            finite("alpha", params.alpha.unwrap_or(0.0))?,
            finite("beta", params.beta.unwrap_or(1.0))?,
            finite("gamma", params.gamma.unwrap_or(-1.0))?,
            finite("delta", params.delta.unwrap_or(0.0))?,
            params.form,
            params.h,
        ),
        "newton" => {
            let u = params.potential.as_deref().unwrap_or("Q1^2/2");
            let dim = match params.dim {
                Some(d) => d,
                None => potential_dim(u),
            };
            newton(positive("m", params.m.unwrap_or(1.0))?, u, dim, params.form, params.h)
        }
        "friction" => friction(
            finite("gamma", params.gamma.unwrap_or(0.0))?,
            positive("m", params.m.unwrap_or(1.0))?,
            params.form,
            params.h,
        ),
        "modified-oscillator" => modified_oscillator(params.form, params.h),
        "harmonic" => harmonic(params.form, params.h),
        other => Err(Error::Config(format!(
            "unknown builtin `{other}` (expected one of {})",
            BUILTINS.join(", ")
        ))),
    }
}

/// `ΔQ = αQ + βP`, `∇P = γQ + δP` in one dimension. Hamiltonian iff `α + δ = 0`,
/// with `H = (βP^2 - γQ^2)/2 + αQP`.
pub fn linear(alpha: f64, beta: f64, gamma: f64, delta: f64, form: Form, h: f64) -> Result<SystemDef> {
    let c = consts(&[("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)]);
    let field = FieldDef::parse("linear", form, h, &c, &["alpha*Q1 + beta*P1"], &["gamma*Q1 + delta*P1"])?;
    let hamiltonian = if form == Form::DeltaNabla && alpha + delta == 0.0 {
        Some(HamiltonianFn::parse("(beta*P1^2 - gamma*Q1^2)/2 + alpha*Q1*P1", 1, &c)?)
    } else {
        None
    };
    Ok(SystemDef {
        field,
        hamiltonian,
        grid: None,
    })
}

/// Largest `Qi` index mentioned in a potential, at least 1.
pub fn potential_dim(src: &str) -> usize {
    let bytes = src.as_bytes();
    let mut best = 1;
    let mut i = 0;
    while i < bytes.len() {
        let starts_ident = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        if bytes[i] == b'Q' && starts_ident {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let ends_ident = j == bytes.len() || !(bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_');
            if j > i + 1 && ends_ident {
                if let Ok(k) = src[i + 1..j].parse::<usize>() {
                    best = best.max(k);
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
    best
}

/// `ΔQ = P/m`, `∇P = -∇U(Q)`, with `H = |P|^2/(2m) + U(Q)`.
pub fn newton(m: f64, potential: &str, dim: usize, form: Form, h: f64) -> Result<SystemDef> {
    if dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let mut c = consts(&[("m", m)]);
    c.insert("h".into(), h);
    // the potential may only use positions
    let ctx = ParseContext {
        second: '\0',
        ..ParseContext::phase(dim, &c)
    };
    let u = Expr::parse(potential, &ctx)?;
    let pctx = ParseContext::phase(dim, &c);
    let xq = (1..=dim)
        .map(|i| Expr::parse(&format!("P{i}/m"), &pctx))
        .collect::<Result<Vec<_>>>()?;
    let xp = (0..dim).map(|i| expr::neg(u.diff(i))).collect();
    let field = FieldDef::new("newton", form, h, c.clone(), xq, xp)?;
    let hamiltonian = if form == Form::DeltaNabla {
        let kinetic: Vec<String> = (1..=dim).map(|i| format!("P{i}^2")).collect();
        Some(HamiltonianFn::parse(
            &format!("({})/(2*m) + ({potential})", kinetic.join(" + ")),
            dim,
            &c,
        )?)
    } else {
        None
    };
    Ok(SystemDef {
        field,
        hamiltonian,
        grid: None,
    })
}

/// `ΔQ = P/m`, `∇P = -γP - Q` (or `ΔP` in the explicit form).
pub fn friction(gamma: f64, m: f64, form: Form, h: f64) -> Result<SystemDef> {
    let c = consts(&[("gamma", gamma), ("m", m)]);
    let field = FieldDef::parse("friction", form, h, &c, &["P1/m"], &["-gamma*P1 - Q1"])?;
    let hamiltonian = if form == Form::DeltaNabla && gamma == 0.0 {
        Some(HamiltonianFn::parse("P1^2/(2*m) + Q1^2/2", 1, &c)?)
    } else {
        None
    };
    Ok(SystemDef {
        field,
        hamiltonian,
        grid: None,
    })
}

/// `ΔQ = P + (P2, 0)`, `∇P = Q` in two dimensions. Never Hamiltonian.
pub fn modified_oscillator(form: Form, h: f64) -> Result<SystemDef> {
    let field = FieldDef::parse(
        "modified-oscillator",
        form,
        h,
        &BTreeMap::new(),
        &["P1 + P2", "P2"],
        &["Q1", "Q2"],
    )?;
    Ok(SystemDef {
        field,
        hamiltonian: None,
        grid: None,
    })
}

/// `ΔQ = P`, `∇P = -Q`.
pub fn harmonic(form: Form, h: f64) -> Result<SystemDef> {
    let field = FieldDef::parse("harmonic", form, h, &BTreeMap::new(), &["P1"], &["-Q1"])?;
    let hamiltonian = if form == Form::DeltaNabla {
        Some(HamiltonianFn::parse("(P1^2 + Q1^2)/2", 1, &BTreeMap::new())?)
    } else {
        None
    };
    Ok(SystemDef {
        field,
        hamiltonian,
        grid: None,
    })
}
