#![allow(dead_code)]

use std::collections::BTreeMap;

use dhelm::field::{FieldDef, Form};
use dhelm::grid::{Signal, TimeGrid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sparse polynomial over the flat state `(Q1..Qd, P1..Pd)`. Kept separate
/// from the library's expression trees so derivatives are computed
/// independently.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    pub fn random(rng: &mut ChaCha8Rng, nvars: usize, max_degree: u32, n_terms: usize) -> Self {
        let terms = (0..n_terms)
            .map(|_| {
                let degree = rng.gen_range(0..=max_degree);
                let mut exps = vec![0u32; nvars];
                for _ in 0..degree {
                    exps[rng.gen_range(0..nvars)] += 1;
                }
                (rng.gen_range(-1.0..1.0), exps)
            })
            .collect();
        Self { nvars, terms }
    }

    pub fn diff(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, e)| e[var] > 0)
            .map(|(c, e)| {
                let mut e = e.clone();
                let k = e[var];
                e[var] -= 1;
                (c * k as f64, e)
            })
            .collect();
        Self {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(c, e)| (c * s, e.clone())).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Source text in the library's expression syntax.
    pub fn to_source(&self) -> String {
        let d = self.nvars / 2;
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut s = format!("({c})");
                for (i, &k) in e.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let name = if i < d {
                        format!("Q{}", i + 1)
                    } else {
                        format!("P{}", i - d + 1)
                    };
                    s += &format!("*{name}^{k}");
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// A polynomial field with its component polynomials.
pub struct PolyField {
    pub field: FieldDef,
    pub xq: Vec<Poly>,
    pub xp: Vec<Poly>,
}

pub fn field_from_polys(name: &str, xq: Vec<Poly>, xp: Vec<Poly>, h: f64) -> PolyField {
    let xq_src: Vec<String> = xq.iter().map(Poly::to_source).collect();
    let xp_src: Vec<String> = xp.iter().map(Poly::to_source).collect();
    let xq_ref: Vec<&str> = xq_src.iter().map(String::as_str).collect();
    let xp_ref: Vec<&str> = xp_src.iter().map(String::as_str).collect();
    let field = FieldDef::parse(name, Form::DeltaNabla, h, &BTreeMap::new(), &xq_ref, &xp_ref).unwrap();
    PolyField { field, xq, xp }
}

/// Field generated by a random polynomial `H` of degree at most 4:
/// `X_Q = ∂H/∂P`, `X_P = -∂H/∂Q`.
pub fn hamiltonian_poly_field(rng: &mut ChaCha8Rng, d: usize, h: f64) -> (Poly, PolyField) {
    let ham = Poly::random(rng, 2 * d, 4, 3 + 2 * d);
    let xq = (0..d).map(|i| ham.diff(d + i)).collect();
    let xp = (0..d).map(|i| ham.diff(i).scale(-1.0)).collect();
    let f = field_from_polys("poly-hamiltonian", xq, xp, h);
    (ham, f)
}

/// Field with independent random components of degree at most 3.
pub fn generic_poly_field(rng: &mut ChaCha8Rng, d: usize, h: f64) -> PolyField {
    let xq = (0..d).map(|_| Poly::random(rng, 2 * d, 3, 4)).collect();
    let xp = (0..d).map(|_| Poly::random(rng, 2 * d, 3, 4)).collect();
    field_from_polys("poly-generic", xq, xp, h)
}

pub fn random_signal(rng: &mut ChaCha8Rng, g: TimeGrid, d: usize, scale: f64) -> Signal {
    Signal::from_fn(g, d, 0, g.n_steps(), |_, _| {
        (0..d).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
    })
    .unwrap()
}

pub fn random_c0(rng: &mut ChaCha8Rng, g: TimeGrid, d: usize, scale: f64) -> Signal {
    let n = g.n_steps();
    Signal::from_fn(g, d, 0, n, |k, _| {
        (0..d)
            .map(|_| {
                if k == 0 || k == n {
                    0.0
                } else {
                    scale * rng.gen_range(-1.0..1.0)
                }
            })
            .collect()
    })
    .unwrap()
}

/// `h Σ_k (x_q · y_p - x_p · y_q)` over the nodes where both are defined.
pub fn symplectic_pair(x: (&Signal, &Signal), y: (&Signal, &Signal)) -> f64 {
    symplectic_pair_with_scale(x, y).0
}

/// The pairing together with `h Σ_k (|x_q|·|y_p| + |x_p|·|y_q|)`, the
/// magnitude against which its rounding error is measured.
pub fn symplectic_pair_with_scale(x: (&Signal, &Signal), y: (&Signal, &Signal)) -> (f64, f64) {
    let h = x.0.grid().h();
    let (mut s, mut mag) = (0.0, 0.0);
    for k in x.0.lo()..=x.0.hi() {
        if !y.0.contains(k) {
            continue;
        }
        for (a, b) in x.0.at(k).iter().zip(y.1.at(k)) {
            s += a * b;
            mag += (a * b).abs();
        }
        for (a, b) in x.1.at(k).iter().zip(y.0.at(k)) {
            s -= a * b;
            mag += (a * b).abs();
        }
    }
    (h * s, h * mag)
}
