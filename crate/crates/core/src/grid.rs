//! Uniform time grids, discrete signals and the finite-difference calculus on them.
//!
//! A [`Signal`] always carries the index range `lo..=hi` it is defined on.
//! Difference operators shrink that range rather than padding it. This keeps
//! the distinction between the full grid, the grid minus one endpoint and the
//! interior visible in the types of the results:
//!
//! | operator    | input range | output range  |
//! |-------------|-------------|---------------|
//! | [`delta`]   | `lo..=hi`   | `lo..=hi-1`   |
//! | [`nabla`]   | `lo..=hi`   | `lo+1..=hi`   |
//! | [`sigma`]   | `lo..=hi`   | `lo..=hi-1`   |
//! | [`rho`]     | `lo..=hi`   | `lo+1..=hi`   |
//! | [`j_delta`] | `lo..=hi`   | `lo..=hi+1`   |
//! | [`j_nabla`] | `lo..=hi`   | `lo-1..=hi`   |

use serde::Serialize;

use crate::error::{Error, Result};

/// The lattice `{a + k h : k = 0..=N}` with `h = (b - a) / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    a: f64,
    b: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(a: f64, b: f64, n_steps: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite a < b, got a={a}, b={b}"
            )));
        }
        if n_steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(Self { a, b, n_steps })
    }

    /// Grid `[0, N h]` for a given step.
    pub fn from_step(h: f64, n_steps: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
        Self::new(0.0, h * n_steps as f64, n_steps)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of steps `N`; nodes are indexed `0..=N`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        self.a + k as f64 * self.h()
    }
}

/// A function on the index range `lo..=hi` of a grid with values in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: TimeGrid,
    dim: usize,
    lo: usize,
    hi: usize,
    values: Vec<f64>,
}

impl Signal {
    /// Builds a signal from values stored node by node (`dim` entries per node).
    pub fn new(grid: TimeGrid, dim: usize, lo: usize, hi: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("signal dimension must be positive".into()));
        }
        if lo > hi || hi > grid.n_steps() {
            return Err(Error::Range {
                op: "Signal::new",
                lo,
                hi,
                reason: "need lo <= hi <= N",
            });
        }
        let expected = (hi - lo + 1) * dim;
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} values for range {lo}..={hi} with dim {dim}, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: lo + pos / dim });
        }
        Ok(Self {
            grid,
            dim,
            lo,
            hi,
            values,
        })
    }

    /// Builds a signal by evaluating `f(k, t_k)` at every node of `lo..=hi`.
    pub fn from_fn<F>(grid: TimeGrid, dim: usize, lo: usize, hi: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, f64) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity((hi.saturating_sub(lo) + 1) * dim);
        for k in lo..=hi {
            let v = f(k, grid.t(k));
            if v.len() != dim {
                return Err(Error::Shape(format!(
                    "node {k}: expected {dim} components, got {}",
                    v.len()
                )));
            }
            values.extend(v);
        }
        Self::new(grid, dim, lo, hi, values)
    }

    /// Scalar signal from a slice of node values starting at `lo`.
    pub fn scalar(grid: TimeGrid, lo: usize, values: &[f64]) -> Result<Self> {
        let hi = (lo + values.len()).checked_sub(1).ok_or(Error::Range {
            op: "Signal::scalar",
            lo,
            hi: lo,
            reason: "empty value list",
        })?;
        Self::new(grid, 1, lo, hi, values.to_vec())
    }

    pub fn zeros(grid: TimeGrid, dim: usize, lo: usize, hi: usize) -> Result<Self> {
        Self::new(grid, dim, lo, hi, vec![0.0; (hi.saturating_sub(lo) + 1) * dim])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }

    /// Value at node `k`. Panics if `k` is outside `lo..=hi`.
    pub fn at(&self, k: usize) -> &[f64] {
        assert!(
            self.contains(k),
            "index {k} outside signal range {}..={}",
            self.lo,
            self.hi
        );
        let start = (k - self.lo) * self.dim;
        &self.values[start..start + self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(k, value)` over the range.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.values
            .chunks_exact(self.dim)
            .enumerate()
            .map(move |(i, v)| (self.lo + i, v))
    }

    /// True if the signal covers the whole grid and vanishes at both endpoints.
    pub fn is_c0(&self, atol: f64) -> bool {
        self.lo == 0
            && self.hi == self.grid.n_steps()
            && self.at(0).iter().all(|v| v.abs() <= atol)
            && self.at(self.hi).iter().all(|v| v.abs() <= atol)
    }

    /// Restriction to a sub-range.
    pub fn restrict(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo < self.lo || hi > self.hi || lo > hi {
            return Err(Error::Range {
                op: "restrict",
                lo,
                hi,
                reason: "not a sub-range of the signal",
            });
        }
        let start = (lo - self.lo) * self.dim;
        let end = (hi - self.lo + 1) * self.dim;
        Self::new(self.grid, self.dim, lo, hi, self.values[start..end].to_vec())
    }

    /// Extends the range to `lo..=hi` filling the new nodes with zeros.
    pub fn zero_extend(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo > self.lo || hi < self.hi || hi > self.grid.n_steps() {
            return Err(Error::Range {
                op: "zero_extend",
                lo,
                hi,
                reason: "must contain the signal range and stay on the grid",
            });
        }
        let mut values = vec![0.0; (hi - lo + 1) * self.dim];
        let offset = (self.lo - lo) * self.dim;
        values[offset..offset + self.values.len()].copy_from_slice(&self.values);
        Self::new(self.grid, self.dim, lo, hi, values)
    }

    /// Pointwise map keeping the range.
    pub fn map<F>(&self, out_dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(self.len() * out_dim);
        for (k, v) in self.iter() {
            let out = f(k, v);
            if out.len() != out_dim {
                return Err(Error::Shape(format!(
                    "map produced {} components, expected {out_dim}",
                    out.len()
                )));
            }
            values.extend(out);
        }
        Self::new(self.grid, out_dim, self.lo, self.hi, values)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// `self + c * other` on the intersection of the two ranges.
    pub fn axpy(&self, c: f64, other: &Signal) -> Result<Self> {
        let (lo, hi) = overlap(self, other, "axpy")?;
        if self.dim != other.dim {
            return Err(Error::Shape(format!(
                "axpy: dimensions {} and {} differ",
                self.dim, other.dim
            )));
        }
        Signal::from_fn(self.grid, self.dim, lo, hi, |k, _| {
            self.at(k).iter().zip(other.at(k)).map(|(x, y)| x + c * y).collect()
        })
    }

    pub fn sub(&self, other: &Signal) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Signal) -> Result<Self> {
        self.axpy(1.0, other)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Stacks two signals of equal range into one of dimension `dim_a + dim_b`.
    pub fn concat(a: &Signal, b: &Signal) -> Result<Self> {
        let (lo, hi) = overlap(a, b, "concat")?;
        Signal::from_fn(a.grid, a.dim + b.dim, lo, hi, |k, _| {
            a.at(k).iter().chain(b.at(k)).copied().collect()
        })
    }

    /// Splits a signal into its first `first` components and the rest.
    pub fn split(&self, first: usize) -> Result<(Self, Self)> {
        if first == 0 || first >= self.dim {
            return Err(Error::Shape(format!("cannot split dim {} at {first}", self.dim)));
        }
        let a = self.map(first, |_, v| v[..first].to_vec())?;
        let b = self.map(self.dim - first, |_, v| v[first..].to_vec())?;
        Ok((a, b))
    }
}

fn overlap(f: &Signal, g: &Signal, op: &'static str) -> Result<(usize, usize)> {
    if f.grid != g.grid {
        return Err(Error::Shape(format!("{op}: signals live on different grids")));
    }
    let lo = f.lo.max(g.lo);
    let hi = f.hi.min(g.hi);
    if lo > hi {
        return Err(Error::Shape(format!(
            "{op}: ranges {}..={} and {}..={} are disjoint",
            f.lo, f.hi, g.lo, g.hi
        )));
    }
    Ok((lo, hi))
}

fn require_nondegenerate(f: &Signal, op: &'static str) -> Result<()> {
    if f.hi == f.lo {
        return Err(Error::Range {
            op,
            lo: f.lo,
            hi: f.hi,
            reason: "needs at least two nodes",
        });
    }
    Ok(())
}

/// Forward difference: index `k` holds `(F_{k+1} - F_k) / h`.
pub fn delta(f: &Signal) -> Result<Signal> {
    require_nondegenerate(f, "delta")?;
    let h = f.grid.h();
    Signal::from_fn(f.grid, f.dim, f.lo, f.hi - 1, |k, _| {
        f.at(k + 1)
            .iter()
            .zip(f.at(k))
            .map(|(next, cur)| (next - cur) / h)
            .collect()
    })
}

/// Backward difference: index `k` holds `(F_k - F_{k-1}) / h`.
pub fn nabla(f: &Signal) -> Result<Signal> {
    require_nondegenerate(f, "nabla")?;
    let h = f.grid.h();
    Signal::from_fn(f.grid, f.dim, f.lo + 1, f.hi, |k, _| {
        f.at(k)
            .iter()
            .zip(f.at(k - 1))
            .map(|(cur, prev)| (cur - prev) / h)
            .collect()
    })
}

/// Backward shift: index `k` holds `F_{k-1}`.
pub fn rho(f: &Signal) -> Result<Signal> {
    require_nondegenerate(f, "rho")?;
    Signal::from_fn(f.grid, f.dim, f.lo + 1, f.hi, |k, _| f.at(k - 1).to_vec())
}

/// Forward shift: index `k` holds `F_{k+1}`.
pub fn sigma(f: &Signal) -> Result<Signal> {
    require_nondegenerate(f, "sigma")?;
    Signal::from_fn(f.grid, f.dim, f.lo, f.hi - 1, |k, _| f.at(k + 1).to_vec())
}

/// Forward antiderivative `(J F)_k = h * sum_{i=lo}^{k-1} F_i`, zero at `lo`,
/// defined on `lo..=hi+1`.
pub fn j_delta(f: &Signal) -> Result<Signal> {
    if f.hi + 1 > f.grid.n_steps() {
        return Err(Error::Range {
            op: "j_delta",
            lo: f.lo,
            hi: f.hi,
            reason: "antiderivative needs node hi+1 on the grid",
        });
    }
    let h = f.grid.h();
    let mut acc = vec![0.0; f.dim];
    let mut values = Vec::with_capacity((f.len() + 1) * f.dim);
    values.extend_from_slice(&acc);
    for (_, v) in f.iter() {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += h * x;
        }
        values.extend_from_slice(&acc);
    }
    Signal::new(f.grid, f.dim, f.lo, f.hi + 1, values)
}

/// Backward antiderivative `(J F)_k = h * sum_{i=lo}^{k} F_i`, zero at `lo-1`,
/// defined on `lo-1..=hi`.
pub fn j_nabla(f: &Signal) -> Result<Signal> {
    if f.lo == 0 {
        return Err(Error::Range {
            op: "j_nabla",
            lo: f.lo,
            hi: f.hi,
            reason: "antiderivative is anchored at lo-1, so lo must be >= 1",
        });
    }
    let h = f.grid.h();
    let mut acc = vec![0.0; f.dim];
    let mut values = Vec::with_capacity((f.len() + 1) * f.dim);
    values.extend_from_slice(&acc);
    for (_, v) in f.iter() {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += h * x;
        }
        values.extend_from_slice(&acc);
    }
    Signal::new(f.grid, f.dim, f.lo - 1, f.hi, values)
}

/// Pointwise product. Vector times vector contracts to the dot product;
/// a scalar signal times a vector signal scales it.
pub fn star(f: &Signal, g: &Signal) -> Result<Signal> {
    let (lo, hi) = overlap(f, g, "star")?;
    match (f.dim, g.dim) {
        (a, b) if a == b => Signal::from_fn(f.grid, 1, lo, hi, |k, _| vec![dot(f.at(k), g.at(k))]),
        (1, d) => Signal::from_fn(f.grid, d, lo, hi, |k, _| {
            g.at(k).iter().map(|x| f.at(k)[0] * x).collect()
        }),
        (d, 1) => Signal::from_fn(f.grid, d, lo, hi, |k, _| {
            f.at(k).iter().map(|x| g.at(k)[0] * x).collect()
        }),
        (a, b) => Err(Error::Shape(format!("star: incompatible dimensions {a} and {b}"))),
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn require_l2_range(f: &Signal, op: &'static str) -> Result<()> {
    let n = f.grid.n_steps();
    if f.lo > 0 || f.hi < n - 1 {
        return Err(Error::Range {
            op,
            lo: f.lo,
            hi: f.hi,
            reason: "signal must cover 0..=N-1",
        });
    }
    Ok(())
}

/// `[J_delta(F * G)]_N = h * sum_{k=0}^{N-1} F_k . G_k`.
pub fn l2_inner(f: &Signal, g: &Signal) -> Result<f64> {
    require_l2_range(f, "l2_inner")?;
    require_l2_range(g, "l2_inner")?;
    if f.grid != g.grid {
        return Err(Error::Shape("l2_inner: signals live on different grids".into()));
    }
    if f.dim != g.dim {
        return Err(Error::Shape(format!(
            "l2_inner: dimensions {} and {} differ",
            f.dim, g.dim
        )));
    }
    let h = f.grid.h();
    let n = f.grid.n_steps();
    Ok(h * (0..n).map(|k| dot(f.at(k), g.at(k))).sum::<f64>())
}

/// Pointwise `J y = (y_p, -y_q)` for `y = (y_q, y_p)` in `R^{2d}`.
pub fn apply_symplectic(y: &Signal) -> Result<Signal> {
    if !y.dim.is_multiple_of(2) {
        return Err(Error::Shape(format!(
            "symplectic structure needs even dimension, got {}",
            y.dim
        )));
    }
    let d = y.dim / 2;
    y.map(y.dim, |_, v| {
        v[d..].iter().copied().chain(v[..d].iter().map(|x| -x)).collect()
    })
}

/// Symplectic pairing `<X, J Y>` in the discrete L2 product.
pub fn l2_symplectic_inner(x: &Signal, y: &Signal) -> Result<f64> {
    if !x.dim.is_multiple_of(2) || !y.dim.is_multiple_of(2) {
        return Err(Error::Shape(format!(
            "symplectic product needs even dimensions, got {} and {}",
            x.dim, y.dim
        )));
    }
    l2_inner(x, &apply_symplectic(y)?)
}

/// The canonical basis of the interior-supported variations: one signal per
/// interior node `k = 1..=N-1` and component `j`, equal to `e_j` at `k` and
/// zero elsewhere.
pub fn c0_basis(grid: TimeGrid, dim: usize) -> impl Iterator<Item = (usize, usize, Signal)> {
    let n = grid.n_steps();
    (1..n).flat_map(move |k| {
        (0..dim).map(move |j| {
            let s = Signal::from_fn(grid, dim, 0, n, |i, _| {
                let mut v = vec![0.0; dim];
                if i == k {
                    v[j] = 1.0;
                }
                v
            })
            .expect("basis signal is well formed");
            (k, j, s)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    fn random_signal(rng: &mut ChaCha8Rng, grid: TimeGrid, dim: usize, lo: usize, hi: usize) -> Signal {
        Signal::from_fn(grid, dim, lo, hi, |_, _| {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        })
        .unwrap()
    }

    #[test]
    fn grid_rejects_too_few_steps() {
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 0.0, 4).is_err());
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        assert!((g.t(3) - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn signal_rejects_nan() {
        let g = unit_grid(2);
        let err = Signal::scalar(g, 0, &[0.0, f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
    }

    #[test]
    fn delta_of_constant_and_linear() {
        let g = unit_grid(2);
        let c = Signal::scalar(g, 0, &[3.0, 3.0, 3.0]).unwrap();
        let d = delta(&c).unwrap();
        assert_eq!((d.lo(), d.hi()), (0, 1));
        assert_eq!(d.values(), &[0.0, 0.0]);

        let g4 = unit_grid(4);
        let t = Signal::from_fn(g4, 1, 0, 4, |_, t| vec![t]).unwrap();
        for (_, v) in delta(&t).unwrap().iter() {
            assert!((v[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn differences_by_hand() {
        // h = 0.5
        let g = unit_grid(2);
        let f = Signal::scalar(g, 0, &[0.0, 1.0, 4.0]).unwrap();
        assert_eq!(delta(&f).unwrap().values(), &[2.0, 6.0]);
        let back = nabla(&f).unwrap();
        assert_eq!((back.lo(), back.hi()), (1, 2));
        assert_eq!(back.values(), &[2.0, 6.0]);
        let c = Signal::scalar(g, 0, &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(nabla(&c).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn degenerate_ranges_are_rejected() {
        let g = unit_grid(4);
        let f = Signal::scalar(g, 2, &[1.0]).unwrap();
        for op in [delta, nabla, rho, sigma] {
            assert!(matches!(op(&f), Err(Error::Range { .. })));
        }
        let anchored = Signal::scalar(g, 0, &[1.0, 2.0]).unwrap();
        assert!(matches!(j_nabla(&anchored), Err(Error::Range { .. })));
    }

    #[test]
    fn shifts() {
        let g = unit_grid(2);
        let f = Signal::scalar(g, 0, &[1.0, 2.0, 3.0]).unwrap();
        let r = rho(&f).unwrap();
        assert_eq!((r.lo(), r.values()), (1, &[1.0, 2.0][..]));
        let s = sigma(&f).unwrap();
        assert_eq!((s.lo(), s.values()), (0, &[2.0, 3.0][..]));
        // rho(sigma(F)) = F on the overlap
        let back = rho(&s).unwrap();
        assert_eq!(back.values(), f.restrict(1, 1).unwrap().values());
        let c = Signal::scalar(g, 0, &[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(sigma(&c).unwrap().values(), &[7.0, 7.0]);
    }

    #[test]
    fn shift_identities_on_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = TimeGrid::new(-1.0, 2.0, 37).unwrap();
        let h = g.h();
        let f = random_signal(&mut rng, g, 3, 0, 37);
        let scale = 1.0 + f.max_abs();
        let r = rho(&f).unwrap().sub(&f.axpy(-h, &nabla(&f).unwrap()).unwrap()).unwrap();
        assert!(r.max_abs() <= 1e-14 * scale);
        let s = sigma(&f)
            .unwrap()
            .sub(&f.axpy(h, &delta(&f).unwrap()).unwrap())
            .unwrap();
        assert!(s.max_abs() <= 1e-14 * scale);
    }

    #[test]
    fn antiderivatives() {
        let g = TimeGrid::new(0.0, 2.0, 8).unwrap();
        let h = g.h();
        let ones = Signal::from_fn(g, 1, 0, 7, |_, _| vec![1.0]).unwrap();
        let jd = j_delta(&ones).unwrap();
        assert_eq!((jd.lo(), jd.hi()), (0, 8));
        for (k, v) in jd.iter() {
            assert!((v[0] - k as f64 * h).abs() < 1e-14);
        }

        let ones_back = Signal::from_fn(g, 1, 1, 8, |_, _| vec![1.0]).unwrap();
        let jn = j_nabla(&ones_back).unwrap();
        assert_eq!((jn.lo(), jn.hi()), (0, 8));
        assert!((jn.at(8)[0] - 2.0).abs() < 1e-14);

        let zero = Signal::zeros(g, 2, 1, 8).unwrap();
        assert_eq!(j_nabla(&zero).unwrap().max_abs(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gsig = random_signal(&mut rng, g, 2, 0, 8);
        let tele = j_delta(&delta(&gsig).unwrap()).unwrap();
        for j in 0..2 {
            assert!((tele.at(8)[j] - (gsig.at(8)[j] - gsig.at(0)[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn antiderivatives_invert_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = TimeGrid::new(0.0, 3.0, 50).unwrap();
        let f = random_signal(&mut rng, g, 2, 0, 49);
        let back = delta(&j_delta(&f).unwrap()).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() <= 1e-13 * (1.0 + f.max_abs()));
        let f = random_signal(&mut rng, g, 2, 1, 50);
        let back = nabla(&j_nabla(&f).unwrap()).unwrap();
        assert_eq!((back.lo(), back.hi()), (1, 50));
        assert!(back.sub(&f).unwrap().max_abs() <= 1e-13 * (1.0 + f.max_abs()));
    }

    #[test]
    fn star_products() {
        let g = unit_grid(3);
        let one = Signal::from_fn(g, 1, 0, 3, |_, _| vec![1.0]).unwrap();
        let x = Signal::scalar(g, 0, &[1.0, -2.0, 0.5, 4.0]).unwrap();
        assert_eq!(star(&one, &x).unwrap(), x);

        let a = Signal::from_fn(g, 2, 0, 3, |_, _| vec![1.0, 2.0]).unwrap();
        let b = Signal::from_fn(g, 2, 1, 3, |_, _| vec![3.0, 4.0]).unwrap();
        let ab = star(&a, &b).unwrap();
        assert_eq!((ab.lo(), ab.hi(), ab.dim()), (1, 3, 1));
        assert!(ab.values().iter().all(|&v| v == 11.0));
        assert_eq!(star(&b, &a).unwrap(), ab);

        let c = Signal::from_fn(g, 3, 0, 3, |_, _| vec![0.0; 3]).unwrap();
        assert!(matches!(star(&a, &c), Err(Error::Shape(_))));
        let early = Signal::scalar(g, 0, &[1.0]).unwrap();
        let late = Signal::scalar(g, 2, &[1.0, 1.0]).unwrap();
        assert!(matches!(star(&early, &late), Err(Error::Shape(_))));
    }

    #[test]
    fn l2_products() {
        for n in [2, 5, 17] {
            let g = unit_grid(n);
            let one = Signal::from_fn(g, 1, 0, n, |_, _| vec![1.0]).unwrap();
            assert!((l2_inner(&one, &one).unwrap() - 1.0).abs() < 1e-14);
            let zero = Signal::zeros(g, 1, 0, n).unwrap();
            assert_eq!(l2_inner(&zero, &one).unwrap(), 0.0);
        }
        let g = unit_grid(4);
        let short = Signal::zeros(g, 1, 1, 4).unwrap();
        assert!(matches!(l2_inner(&short, &short), Err(Error::Range { .. })));

        let x = Signal::from_fn(g, 2, 0, 4, |_, _| vec![1.0, 0.0]).unwrap();
        let y = Signal::from_fn(g, 2, 0, 4, |_, _| vec![0.0, 1.0]).unwrap();
        assert!((l2_symplectic_inner(&x, &y).unwrap() - 1.0).abs() < 1e-14);
        assert!((l2_symplectic_inner(&y, &x).unwrap() + 1.0).abs() < 1e-14);
        assert_eq!(l2_symplectic_inner(&x, &x).unwrap(), 0.0);
        let odd = Signal::zeros(g, 3, 0, 4).unwrap();
        assert!(matches!(l2_symplectic_inner(&odd, &odd), Err(Error::Shape(_))));
    }

    #[test]
    fn l2_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = TimeGrid::new(0.5, 4.0, 63).unwrap();
        let f = random_signal(&mut rng, g, 3, 0, 63);
        let k = random_signal(&mut rng, g, 3, 0, 63);
        let mut direct = 0.0;
        for i in 0..63 {
            for j in 0..3 {
                direct += f.values()[3 * i + j] * k.values()[3 * i + j];
            }
        }
        direct *= 3.5 / 63.0;
        assert!((l2_inner(&f, &k).unwrap() - direct).abs() <= 1e-14 * (1.0 + direct.abs()) * 10.0);
    }

    #[test]
    fn c0_basis_is_interior() {
        let g = unit_grid(4);
        let basis: Vec<_> = c0_basis(g, 2).collect();
        assert_eq!(basis.len(), 3 * 2);
        assert!(basis.iter().all(|(_, _, s)| s.is_c0(0.0)));
    }
}
