//! Volume quadrature over boxes: composite Gauss–Legendre tensor grids and seeded
//! Monte Carlo.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::BoxRegion;
use crate::rng::{stream_rng, BATCH};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// `cells` per axis, `order` Gauss–Legendre nodes per cell and axis. Order 1 is the
    /// midpoint rule; order k integrates polynomials of degree `2k - 1` exactly.
    TensorGrid {
        cells: usize,
        order: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec<T> {
    pub kind: QuadratureKind,
    pub region: BoxRegion<T>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// One-dimensional composite rule on `[lo, hi]`.
pub fn composite_rule<T: Real>(lo: T, hi: T, cells: usize, order: usize) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre(order);
    let h = (hi - lo) / T::from_usize_lossy(cells);
    let half = T::lit(0.5) * h;
    let mut out = Vec::with_capacity(cells * order);
    for c in 0..cells {
        let mid = lo + (T::from_usize_lossy(c) + T::lit(0.5)) * h;
        for (&xi, &wi) in x.iter().zip(&w) {
            out.push((mid + half * T::lit(xi), half * T::lit(wi)));
        }
    }
    out
}

impl<T: Real> QuadratureSpec<T> {
    pub fn tensor(region: BoxRegion<T>, cells: usize, order: usize) -> Self {
        Self { kind: QuadratureKind::TensorGrid { cells, order }, region }
    }

    pub fn monte_carlo(region: BoxRegion<T>, samples: usize, seed: u64) -> Self {
        Self { kind: QuadratureKind::MonteCarlo { samples, seed }, region }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            QuadratureKind::TensorGrid { cells, order } if cells == 0 || order == 0 => {
                Err(Error::Domain("tensor grid needs positive cells and order".into()))
            }
            QuadratureKind::MonteCarlo { samples: 0, .. } => Err(Error::Domain("Monte Carlo needs samples > 0".into())),
            _ => Ok(()),
        }
    }

    /// Same rule with the resolution doubled.
    pub fn refined(&self) -> Self {
        let kind = match self.kind {
            QuadratureKind::TensorGrid { cells, order } => QuadratureKind::TensorGrid { cells: 2 * cells, order },
            QuadratureKind::MonteCarlo { samples, seed } => QuadratureKind::MonteCarlo { samples: 2 * samples, seed },
        };
        Self { kind, region: self.region.clone() }
    }

    /// Resolution label for reports.
    pub fn describe(&self) -> String {
        match self.kind {
            QuadratureKind::TensorGrid { cells, order } => format!("grid{cells}x{order}"),
            QuadratureKind::MonteCarlo { samples, seed } => format!("mc{samples}@{seed}"),
        }
    }

    /// `∫_region f dμ`.
    pub fn integrate<F>(&self, f: F) -> Result<T>
    where
        F: Fn(&[T]) -> T + Sync,
    {
        self.integrate_with_error(f).map(|(v, _)| v)
    }

    /// Integral and a standard error (zero for deterministic rules).
    pub fn integrate_with_error<F>(&self, f: F) -> Result<(T, T)>
    where
        F: Fn(&[T]) -> T + Sync,
    {
        self.validate()?;
        let q = self.region.dim();
        match self.kind {
            QuadratureKind::TensorGrid { cells, order } => {
                let rules: Vec<Vec<(T, T)>> =
                    (0..q).map(|k| composite_rule(self.region.lower()[k], self.region.upper()[k], cells, order)).collect();
                Ok((tensor_sum(&rules, &f), T::zero()))
            }
            QuadratureKind::MonteCarlo { samples, seed } => {
                let batches = samples.div_ceil(BATCH);
                let partial: Vec<(T, T)> = (0..batches)
                    .into_par_iter()
                    .map(|b| {
                        let mut rng = stream_rng(seed, b as u64);
                        let n = BATCH.min(samples - b * BATCH);
                        let mut p = vec![T::zero(); q];
                        let (mut s, mut s2) = (T::zero(), T::zero());
                        for _ in 0..n {
                            self.region.sample(&mut rng, &mut p);
                            let v = f(&p);
                            s += v;
                            s2 += v * v;
                        }
                        (s, s2)
                    })
                    .collect();
                let (s, s2) = partial.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
                let n = T::from_usize_lossy(samples);
                let mean = s / n;
                let var = (s2 / n - mean * mean).max(T::zero());
                let vol = self.region.volume();
                Ok((vol * mean, vol * (var / n).sqrt()))
            }
        }
    }

    /// Node list `(point, weight)`: every tensor node, or the Monte Carlo sample set
    /// with equal weights.
    pub fn nodes(&self) -> Result<Vec<(Vec<T>, T)>> {
        self.validate()?;
        let q = self.region.dim();
        match self.kind {
            QuadratureKind::TensorGrid { cells, order } => {
                let rules: Vec<Vec<(T, T)>> =
                    (0..q).map(|k| composite_rule(self.region.lower()[k], self.region.upper()[k], cells, order)).collect();
                let total: usize = rules.iter().map(Vec::len).product();
                let mut out = Vec::with_capacity(total);
                let mut idx = vec![0usize; q];
                for _ in 0..total {
                    let p: Vec<T> = (0..q).map(|k| rules[k][idx[k]].0).collect();
                    let w = (0..q).map(|k| rules[k][idx[k]].1).fold(T::one(), |a, b| a * b);
                    out.push((p, w));
                    advance(&mut idx, &rules);
                }
                Ok(out)
            }
            QuadratureKind::MonteCarlo { samples, seed } => {
                let w = self.region.volume() / T::from_usize_lossy(samples);
                let mut out = Vec::with_capacity(samples);
                for b in 0..samples.div_ceil(BATCH) {
                    let mut rng = stream_rng(seed, b as u64);
                    for _ in 0..BATCH.min(samples - b * BATCH) {
                        let mut p = vec![T::zero(); q];
                        self.region.sample(&mut rng, &mut p);
                        out.push((p, w));
                    }
                }
                Ok(out)
            }
        }
    }
}

fn advance<U>(idx: &mut [usize], rules: &[Vec<U>]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < rules[k].len() {
            return;
        }
        idx[k] = 0;
    }
}

/// Deterministic parallel tensor-product sum; parallel over the first axis, partial
/// sums combined in index order.
pub(crate) fn tensor_sum<T, F>(rules: &[Vec<(T, T)>], f: &F) -> T
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let q = rules.len();
    let partial: Vec<T> = rules[0]
        .par_iter()
        .map(|&(x0, w0)| {
            if q == 1 {
                return w0 * f(&[x0]);
            }
            let rest = &rules[1..];
            let total: usize = rest.iter().map(Vec::len).product();
            let mut idx = vec![0usize; q - 1];
            let mut p = vec![T::zero(); q];
            p[0] = x0;
            let mut acc = T::zero();
            for _ in 0..total {
                let mut w = w0;
                for k in 0..q - 1 {
                    let (x, wk) = rest[k][idx[k]];
                    p[k + 1] = x;
                    w *= wk;
                }
                acc += w * f(&p);
                advance(&mut idx, rest);
            }
            acc
        })
        .collect();
    partial.into_iter().fold(T::zero(), |a, b| a + b)
}
