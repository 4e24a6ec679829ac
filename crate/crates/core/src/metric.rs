//! Homogeneous norms, left and right invariant distances, right inner sets and
//! Monte Carlo Haar volumes.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Coords, GroupPoint, LieRing, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, BATCH};
use crate::scalar::Real;

/// Axis-aligned box in graded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> BoxRegion<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::EmptyRegion(format!("lower {lower:?} must be below upper {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// `[-h, h]^q`.
    pub fn cube(q: usize, h: T) -> Result<Self> {
        Self::new(vec![-h; q], vec![h; q])
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> T {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| u - l).fold(T::one(), |a, b| a * b)
    }

    pub fn width(&self, k: usize) -> T {
        self.upper[k] - self.lower[k]
    }

    pub fn contains(&self, p: &[T]) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&x, (&l, &u))| l < x && x < u)
    }

    pub fn contains_box(&self, lo: &[T], hi: &[T]) -> bool {
        (0..self.dim()).all(|k| self.lower[k] < lo[k] && hi[k] < self.upper[k])
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng>(&self, rng: &mut R, out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *o = self.lower[k] + T::lit(u) * (self.upper[k] - self.lower[k]);
        }
    }

    /// Box scaled coordinate-wise by `δ_λ`.
    pub fn dilated(&self, alg: &StratifiedAlgebra<T>, lambda: T) -> Self {
        Self { lower: alg.dil(lambda, &self.lower).to_vec(), upper: alg.dil(lambda, &self.upper).to_vec() }
    }
}

/// Closed interval with naive (outward-agnostic) endpoint arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }
}

impl<T: Real> Zero for Interval<T> {
    fn zero() -> Self {
        Self::point(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.lo == T::zero() && self.hi == T::zero()
    }
}

impl<T: Real> Add for Interval<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.lo + o.lo, self.hi + o.hi)
    }
}

impl<T: Real> Sub for Interval<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.lo - o.hi, self.hi - o.lo)
    }
}

impl<T: Real> Neg for Interval<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }
}

impl<T: Real> Mul for Interval<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Self::new(c.iter().copied().fold(T::infinity(), T::min), c.iter().copied().fold(T::neg_infinity(), T::max))
    }
}

impl<T: Real> LieRing<T> for Interval<T> {
    fn scale(self, c: T) -> Self {
        if c >= T::zero() {
            Self::new(self.lo * c, self.hi * c)
        } else {
            Self::new(self.hi * c, self.lo * c)
        }
    }
}

/// Shipped homogeneous quasi-norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `max_i (Σ_{d_j = i} x_j²)^{1/(2i)}`
    #[default]
    Gauge,
    /// `max_j |x_j|^{1/d_j}`
    Box,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Gauge => "gauge",
            NormKind::Box => "box",
        }
    }
}

/// Homogeneous quasi-norm attached to an algebra.
#[derive(Debug, Clone)]
pub struct HomogeneousNorm<T> {
    kind: NormKind,
    alg: Arc<StratifiedAlgebra<T>>,
}

impl<T: Real> HomogeneousNorm<T> {
    pub fn new(kind: NormKind, alg: Arc<StratifiedAlgebra<T>>) -> Self {
        Self { kind, alg }
    }

    pub fn gauge(alg: Arc<StratifiedAlgebra<T>>) -> Self {
        Self::new(NormKind::Gauge, alg)
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn algebra(&self) -> &StratifiedAlgebra<T> {
        &self.alg
    }

    pub fn algebra_arc(&self) -> &Arc<StratifiedAlgebra<T>> {
        &self.alg
    }

    /// `‖x‖ = d(x, 0)`.
    pub fn norm(&self, x: &[T]) -> T {
        let degrees = self.alg.degrees();
        match self.kind {
            NormKind::Gauge => {
                let mut sums = [T::zero(); crate::algebra::MAX_STEP];
                for (&v, &d) in x.iter().zip(degrees) {
                    sums[d - 1] += v * v;
                }
                sums.iter()
                    .take(self.alg.step())
                    .enumerate()
                    .map(|(i, &s)| if i == 0 { s.sqrt() } else { s.powf(T::one() / T::from_usize_lossy(2 * (i + 1))) })
                    .fold(T::zero(), T::max)
            }
            NormKind::Box => x
                .iter()
                .zip(degrees)
                .map(|(&v, &d)| match d {
                    1 => v.abs(),
                    2 => v.abs().sqrt(),
                    _ => v.abs().powf(T::one() / T::from_usize_lossy(d)),
                })
                .fold(T::zero(), T::max),
        }
    }

    /// Left-invariant distance `d(p, q) = ‖p⁻¹ q‖`.
    pub fn dist(&self, p: &[T], q: &[T]) -> T {
        self.norm(&self.alg.mul(&self.alg.inv(p), q))
    }

    /// Right-invariant distance `d^R(p, q) = ‖p q⁻¹‖`.
    pub fn dist_right(&self, p: &[T], q: &[T]) -> T {
        self.norm(&self.alg.mul(p, &self.alg.inv(q)))
    }

    /// Lebesgue volume of `B(0, 1)`, in closed form for both shipped norms.
    ///
    /// The gauge ball is the product of the unit Euclidean balls of the layers; the
    /// box ball is `(-1, 1)^q`.
    pub fn unit_ball_volume(&self) -> T {
        match self.kind {
            NormKind::Gauge => self.alg.layer_dims().iter().map(|&n| unit_euclidean_ball_volume::<T>(n)).fold(T::one(), |a, b| a * b),
            NormKind::Box => T::lit(2.0).powi(self.alg.dim() as i32),
        }
    }

    /// Coordinate half-widths of a box containing `B(0, r)`: `r^{d_j}` (tight for both kinds).
    pub fn ball_half_widths(&self, r: T) -> Coords<T> {
        self.alg.degrees().iter().map(|&d| r.powi(d as i32)).collect()
    }

    /// Bounding box of the right ball `B^R(p, r) = B(0, r) · p`, by interval evaluation
    /// of the group law over the box containing `B(0, r)`.
    pub fn right_ball_bounds(&self, p: &[T], r: T) -> (Coords<T>, Coords<T>) {
        let w: Vec<Interval<T>> = self.ball_half_widths(r).iter().map(|&h| Interval::new(-h, h)).collect();
        let pi: Vec<Interval<T>> = p.iter().map(|&x| Interval::point(x)).collect();
        let z = self.alg.bch(&w, &pi);
        (z.iter().map(|i| i.lo).collect(), z.iter().map(|i| i.hi).collect())
    }

    /// Bounding box of the left ball `B(p, r) = p · B(0, r)`.
    pub fn left_ball_bounds(&self, p: &[T], r: T) -> (Coords<T>, Coords<T>) {
        let w: Vec<Interval<T>> = self.ball_half_widths(r).iter().map(|&h| Interval::new(-h, h)).collect();
        let pi: Vec<Interval<T>> = p.iter().map(|&x| Interval::point(x)).collect();
        let z = self.alg.bch(&pi, &w);
        (z.iter().map(|i| i.lo).collect(), z.iter().map(|i| i.hi).collect())
    }

    /// Membership of `p` in the right inner set `{x : dist^R(x, Ω^c) > ε}` of a box.
    ///
    /// Evaluated through an enclosure of the closed right ball, so a `true` answer
    /// guarantees `B^R(p, ε) ⊂ region`; near the threshold the test may answer `false`
    /// for points that are barely inside.
    pub fn inner_set_indicator(&self, region: &BoxRegion<T>, eps: T, p: &[T]) -> bool {
        if !region.contains(p) {
            return false;
        }
        let (lo, hi) = self.right_ball_bounds(p, eps);
        region.contains_box(&lo, &hi)
    }

    /// Uniform sample of `B(0, r)` by rejection from its bounding box.
    pub fn sample_ball<R: Rng>(&self, r: T, rng: &mut R) -> GroupPoint<T> {
        let hw = self.ball_half_widths(r);
        let mut y = GroupPoint::zeros(self.alg.dim());
        loop {
            for (yk, &h) in y.iter_mut().zip(&hw) {
                let u: f64 = rng.random();
                *yk = h * T::lit(2.0 * u - 1.0);
            }
            if self.norm(&y) < r {
                return y;
            }
        }
    }

    /// Largest observed ratio `d(x, z) / (d(x, y) + d(y, z))` over random triples in
    /// `B(0, radius)`; a lower estimate of the quasi-triangle constant.
    pub fn quasi_triangle_constant(&self, radius: T, samples: usize, seed: u64) -> T {
        let mut rng = stream_rng(seed, 0);
        let mut worst = T::zero();
        for _ in 0..samples {
            let x = self.sample_ball(radius, &mut rng);
            let y = self.sample_ball(radius, &mut rng);
            let z = self.sample_ball(radius, &mut rng);
            let den = self.dist(&x, &y) + self.dist(&y, &z);
            if den > T::zero() {
                worst = worst.max(self.dist(&x, &z) / den);
            }
        }
        worst
    }

    /// Fitted constants `(c_lower, c_upper)` with `c_lower⁻¹ |x - y| ≤ d(x, y)` and
    /// `d(x, y) ≤ c_upper |x - y|^{1/ι}` over random pairs in `B(0, radius)`.
    pub fn local_comparison_constants(&self, radius: T, samples: usize, seed: u64) -> (T, T) {
        let mut rng = stream_rng(seed, 1);
        let inv_step = T::one() / T::from_usize_lossy(self.alg.step());
        let (mut lower, mut upper) = (T::zero(), T::zero());
        for _ in 0..samples {
            let x = self.sample_ball(radius, &mut rng);
            let y = self.sample_ball(radius, &mut rng);
            let e: T = x.iter().zip(y.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
            let d = self.dist(&x, &y);
            if e > T::zero() && d > T::zero() {
                lower = lower.max(e / d);
                upper = upper.max(d / e.powf(inv_step));
            }
        }
        (lower, upper)
    }
}

/// Volume of the unit ball of `R^n`.
pub fn unit_euclidean_ball_volume<T: Real>(n: usize) -> T {
    // ω_0 = 1, ω_1 = 2, ω_n = 2π/n ω_{n-2}
    let mut w = [1.0f64, 2.0];
    if n < 2 {
        return T::lit(w[n]);
    }
    let mut val = 0.0;
    for k in 2..=n {
        val = 2.0 * std::f64::consts::PI / k as f64 * w[k % 2];
        w[k % 2] = val;
    }
    T::lit(val)
}

/// Monte Carlo estimate of the Lebesgue (Haar) volume of `{p ∈ region : indicator(p)}`.
///
/// Returns `(estimate, standard_error)`. Sampling is batched with one ChaCha stream per
/// batch, so the estimate depends only on `(samples, seed)`.
pub fn haar_volume_mc<T, F>(region: &BoxRegion<T>, indicator: F, samples: usize, seed: u64) -> Result<(T, T)>
where
    T: Real,
    F: Fn(&[T]) -> bool + Sync,
{
    if samples == 0 {
        return Err(Error::Domain("Monte Carlo needs at least one sample".into()));
    }
    let q = region.dim();
    let batches = samples.div_ceil(BATCH);
    let hits: usize = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let n = BATCH.min(samples - b * BATCH);
            let mut p = vec![T::zero(); q];
            (0..n)
                .filter(|_| {
                    region.sample(&mut rng, &mut p);
                    indicator(&p)
                })
                .count()
        })
        .sum();
    let n = T::from_usize_lossy(samples);
    let frac = T::from_usize_lossy(hits) / n;
    let vol = region.volume();
    let se = vol * (frac * (T::one() - frac) / n).sqrt();
    Ok((vol * frac, se))
}
