//! Group-convolution mollification `ρ_ε ∗ f(x) = ∫ ρ_ε(y) f(y⁻¹ x) dy` with radial
//! kernels `ρ(x) = c η(‖x‖)`, right-ball averages, and numerical checks of the
//! commutation `X_j(ρ_ε ∗ f) = ρ_ε ∗ X_j f` and of the total-variation bound.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::algebra::{Coords, GroupPoint, StratifiedAlgebra};
use crate::domains::{sample_boundary, BoundaryMethod, BoundarySample, DomainSpec};
use crate::error::{Error, Result};
use crate::hcalc::ScalarField;
use crate::metric::{BoxRegion, HomogeneousNorm};
use crate::quadrature::{gauss_legendre, QuadratureKind, QuadratureSpec};
use crate::rng::{split_seed, stream_rng, BATCH};
use crate::scalar::{norm2, Real};

/// Radial profile `η` on `[0, 1]` with `η(1) = 0`, `max η = η(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `1 - t`
    #[default]
    Linear,
    /// `(1 - t)²`
    Quadratic,
}

impl Profile {
    #[inline]
    pub fn eval<T: Real>(self, t: T) -> T {
        if !(t < T::one()) {
            return T::zero();
        }
        let s = T::one() - t.max(T::zero());
        match self {
            Profile::Linear => s,
            Profile::Quadratic => s * s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Linear => "linear",
            Profile::Quadratic => "quadratic",
        }
    }
}

/// Samples used for the construction-time symmetry and normalization checks.
const SYMMETRY_SAMPLES: usize = 1000;
const NORMALIZATION_SAMPLES: usize = 20_000;

/// Kernel `ρ(x) = scale · η(‖x‖)` normalized to unit mass; immutable after `new`.
#[derive(Debug, Clone)]
pub struct Mollifier<T> {
    profile: Profile,
    norm: HomogeneousNorm<T>,
    scale: T,
}

impl<T: Real> Mollifier<T> {
    /// `scale = 1 / (μ(B(0,1)) Q ∫_0^1 η(s) s^{Q-1} ds)`; checks `ρ(x) = ρ(x⁻¹)` on
    /// random points and the unit mass by Monte Carlo.
    pub fn new(profile: Profile, norm: HomogeneousNorm<T>) -> Result<Self> {
        let qdim = norm.algebra().hom_dimension();
        let (x, w) = gauss_legendre(16);
        let radial: T = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let s = T::lit(0.5 * (xi + 1.0));
                T::lit(0.5 * wi) * profile.eval(s) * s.powi(qdim as i32 - 1)
            })
            .sum();
        let mass = norm.unit_ball_volume() * T::from_usize_lossy(qdim) * radial;
        let m = Self { profile, norm, scale: T::one() / mass };
        m.check_symmetry(SYMMETRY_SAMPLES, 0x5eed)?;
        let (est, se) = m.normalization_mc(T::one(), NORMALIZATION_SAMPLES, 0x5eed)?;
        if (est - T::one()).abs() > T::lit(3.0) * se + T::lit(1e-12) {
            return Err(Error::InvalidAlgebra(format!("mollifier mass {est} differs from 1 by more than 3 standard errors ({se})")));
        }
        Ok(m)
    }

    pub fn linear(norm: HomogeneousNorm<T>) -> Result<Self> {
        Self::new(Profile::Linear, norm)
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn norm(&self) -> &HomogeneousNorm<T> {
        &self.norm
    }

    pub fn algebra(&self) -> &StratifiedAlgebra<T> {
        self.norm.algebra()
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    #[inline]
    pub fn rho(&self, x: &[T]) -> T {
        self.scale * self.profile.eval(self.norm.norm(x))
    }

    /// `ρ_ε(x) = ε^{-Q} ρ(δ_{1/ε} x)`.
    #[inline]
    pub fn rho_eps(&self, eps: T, x: &[T]) -> T {
        let q = self.algebra().hom_dimension() as i32;
        self.scale * self.profile.eval(self.norm.norm(x) / eps) / eps.powi(q)
    }

    /// Maximum of `|ρ(x) − ρ(x⁻¹)|` over random points of `B(0, 1)`; errors above
    /// `1e-12 · max ρ`.
    pub fn check_symmetry(&self, samples: usize, seed: u64) -> Result<T> {
        let mut rng = stream_rng(seed, 0);
        let alg = self.algebra();
        let mut worst = T::zero();
        for _ in 0..samples {
            let y = self.norm.sample_ball(T::one(), &mut rng);
            worst = worst.max((self.rho(&y) - self.rho(&alg.inv(&y))).abs());
        }
        if worst > T::lit(1e-12) * self.scale {
            return Err(Error::InvalidAlgebra(format!("kernel is not symmetric under inversion: defect {worst}")));
        }
        Ok(worst)
    }

    /// Monte Carlo `(∫ ρ_ε dμ, standard error)` over the bounding box of `B(0, ε)`.
    pub fn normalization_mc(&self, eps: T, samples: usize, seed: u64) -> Result<(T, T)> {
        let hw = self.norm.ball_half_widths(eps);
        let region = BoxRegion::new(hw.iter().map(|&h| -h).collect(), hw.to_vec())?;
        QuadratureSpec::monte_carlo(region, samples, seed).integrate_with_error(|y| self.rho_eps(eps, y))
    }

    /// Deterministic rule for `∫ ρ(y) g(y) dy` from `kind` on the box containing
    /// `B(0, 1)`; weights are renormalized to unit sum so constants are reproduced.
    pub fn kernel_rule(&self, kind: QuadratureKind) -> Result<KernelRule<T>> {
        let hw = self.norm.ball_half_widths(T::one());
        let region = BoxRegion::new(hw.iter().map(|&h| -h).collect(), hw.to_vec())?;
        let nodes = QuadratureSpec { kind, region }.nodes()?;
        let mut kept: Vec<(GroupPoint<T>, T)> = nodes
            .into_iter()
            .filter_map(|(y, w)| {
                let r = self.rho(&y);
                (r > T::zero()).then(|| (GroupPoint::new(&y), w * r))
            })
            .collect();
        let raw_mass: T = kept.iter().map(|(_, w)| *w).sum();
        if kept.is_empty() || !(raw_mass > T::zero()) {
            return Err(Error::Domain("kernel rule has no nodes inside the unit ball".into()));
        }
        for (_, w) in &mut kept {
            *w /= raw_mass;
        }
        Ok(KernelRule { nodes: kept, raw_mass, kind })
    }

    fn check_inner(&self, eps: T, p: &[T], domain: Option<&BoxRegion<T>>) -> Result<()> {
        if let Some(region) = domain {
            if !self.norm.inner_set_indicator(region, eps, p) {
                return Err(Error::InnerSet(format!(
                    "point {:?} is not in the {eps}-right-inner set of the field's region",
                    p.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>()
                )));
            }
        }
        Ok(())
    }

    /// `(ρ_ε ∗ f)(p) ≈ Σ_k w_k f(δ_ε(y_k)⁻¹ · p)`; `p` must lie in the ε-right-inner
    /// set of `domain` when one is given.
    pub fn mollify_scalar<F>(&self, eps: T, f: F, p: &[T], rule: &KernelRule<T>, domain: Option<&BoxRegion<T>>) -> Result<T>
    where
        F: Fn(&[T]) -> T,
    {
        self.check_inner(eps, p, domain)?;
        Ok(self.mollify_unchecked(eps, &f, p, rule))
    }

    fn mollify_unchecked<F: Fn(&[T]) -> T>(&self, eps: T, f: &F, p: &[T], rule: &KernelRule<T>) -> T {
        let a = self.algebra();
        rule.nodes.iter().map(|(y, w)| *w * f(&a.mul(&a.inv(&a.dil(eps, y)), p))).sum()
    }

    /// Sample of the probability density `ρ_ε`, by rejection from `B(0, ε)`.
    pub fn sample_kernel(&self, eps: T, rng: &mut ChaCha8Rng) -> GroupPoint<T> {
        loop {
            let y = self.norm.sample_ball(eps, rng);
            let u: f64 = rng.random();
            if T::lit(u) < self.profile.eval(self.norm.norm(&y) / eps) {
                return y;
            }
        }
    }

    /// Monte Carlo `(ρ_ε ∗ f)(p)` with antithetic pairs `(y, y⁻¹)`; returns the mean and
    /// its standard error.
    pub fn mollify_mc<F>(&self, eps: T, f: F, p: &[T], pairs: usize, rng: &mut ChaCha8Rng) -> (T, T)
    where
        F: Fn(&[T]) -> T,
    {
        let a = self.algebra();
        let (mut s, mut s2) = (T::zero(), T::zero());
        for _ in 0..pairs {
            let y = self.sample_kernel(eps, rng);
            let v = T::lit(0.5) * (f(&a.mul(&a.inv(&y), p)) + f(&a.mul(&y, p)));
            s += v;
            s2 += v * v;
        }
        let n = T::from_usize_lossy(pairs.max(1));
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(T::zero());
        (mean, (var / n).sqrt())
    }
}

/// Nodes `y_k ∈ B(0, 1)` and weights `w_k ∝ ρ(y_k) · (quadrature weight)` summing to
/// one; `raw_mass` is the unnormalized sum, an estimate of `∫ ρ = 1`.
#[derive(Debug, Clone)]
pub struct KernelRule<T> {
    pub nodes: Vec<(GroupPoint<T>, T)>,
    pub raw_mass: T,
    pub kind: QuadratureKind,
}

/// Mean of `f` over the right ball `B^R(p, r) = B(0, r) · p` by rejection from its
/// bounding box; `(mean, standard error)`.
pub fn right_ball_average<T, F>(
    norm: &HomogeneousNorm<T>,
    f: F,
    p: &[T],
    r: T,
    samples: usize,
    seed: u64,
    domain: Option<&BoxRegion<T>>,
) -> Result<(T, T)>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    if samples == 0 || !(r > T::zero()) {
        return Err(Error::Domain("right_ball_average needs samples > 0 and r > 0".into()));
    }
    if let Some(region) = domain {
        if !norm.inner_set_indicator(region, r, p) {
            return Err(Error::InnerSet(format!("right ball of radius {r} leaves the region")));
        }
    }
    // x = y · p with y uniform in B(0, r) is uniform in the right ball around p
    let hw = norm.ball_half_widths(r);
    let bbox = BoxRegion::new(hw.iter().map(|&h| -h).collect(), hw.to_vec())?;
    let a = norm.algebra();
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<(T, T, usize)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let n = BATCH.min(samples - b * BATCH);
            let mut y = vec![T::zero(); p.len()];
            let (mut s, mut s2, mut k) = (T::zero(), T::zero(), 0usize);
            while k < n {
                bbox.sample(&mut rng, &mut y);
                if norm.norm(&y) < r {
                    let v = f(&a.mul(&y, p));
                    s += v;
                    s2 += v * v;
                    k += 1;
                }
            }
            (s, s2, k)
        })
        .collect();
    let (s, s2, k) = parts.iter().fold((T::zero(), T::zero(), 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = T::from_usize_lossy(k);
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(T::zero());
    Ok((mean, (var / n).sqrt()))
}

/// How the two sides of the commutation identity are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutationScheme {
    /// Both sides on one fixed grid of `y` in `∫ ρ_ε(x y⁻¹) f(y) dy`; the derivative
    /// falls on the kernel, so the residual measures discrete integration by parts.
    #[default]
    FixedGrid,
    /// Both sides with the kernel rule `Σ w_k f(y_k⁻¹ x)`; the residual reduces to the
    /// difference error of `X_j`.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationResult<T> {
    /// `X_j(ρ_ε ∗ f)(p)`.
    pub lhs: T,
    /// `(ρ_ε ∗ X_j f)(p)`.
    pub rhs: T,
    pub residual: T,
}

/// `|X_j(ρ_ε ∗ f)(p) − (ρ_ε ∗ X_j f)(p)|` with `X_j f` from the analytic gradient of
/// `f`; the left side is a central difference with step `h` along `p · (t e_j)`.
/// For the fixed-grid scheme `cells × order` Gauss–Legendre nodes cover the bounding
/// box of the right balls around the difference points.
#[allow(clippy::too_many_arguments)]
pub fn commutation_residual<T: Real>(
    m: &Mollifier<T>,
    eps: T,
    f: &ScalarField<T>,
    j: usize,
    p: &[T],
    scheme: CommutationScheme,
    (cells, order): (usize, usize),
    h: T,
    domain: Option<&BoxRegion<T>>,
) -> Result<CommutationResult<T>> {
    let a = m.algebra();
    if j >= a.rank() {
        return Err(Error::Domain(format!("frame index {} out of range 1..={}", j + 1, a.rank())));
    }
    m.check_inner(eps + eps, p, domain)?;
    let xf = match (f.analytic_horizontal_gradient(), f.euclidean_gradient()) {
        (None, None) => {
            return Err(Error::Domain(format!("field `{}` has no analytic derivative", f.name())));
        }
        _ => |y: &[T]| crate::hcalc::horizontal_gradient(a, f, y)[j],
    };
    let xp = a.mul(p, &a.basis_point(j, h));
    let xm = a.mul(p, &a.basis_point(j, -h));
    let (lhs, rhs) = match scheme {
        CommutationScheme::Centered => {
            let rule = m.kernel_rule(QuadratureKind::TensorGrid { cells, order })?;
            let fv = |y: &[T]| f.eval(y);
            let lhs = (m.mollify_unchecked(eps, &fv, &xp, &rule) - m.mollify_unchecked(eps, &fv, &xm, &rule)) / (h + h);
            (lhs, m.mollify_unchecked(eps, &xf, p, &rule))
        }
        CommutationScheme::FixedGrid => {
            let (mut lo, mut hi) = m.norm().right_ball_bounds(&xp, eps);
            let (lo2, hi2) = m.norm().right_ball_bounds(&xm, eps);
            for k in 0..lo.len() {
                lo[k] = lo[k].min(lo2[k]);
                hi[k] = hi[k].max(hi2[k]);
            }
            let quad = QuadratureSpec::tensor(BoxRegion::new(lo.to_vec(), hi.to_vec())?, cells, order);
            let kernel = |x: &[T], y: &[T]| m.rho_eps(eps, &a.mul(x, &a.inv(y)));
            let sp = quad.integrate(|y| kernel(&xp, y) * f.eval(y))?;
            let sm = quad.integrate(|y| kernel(&xm, y) * f.eval(y))?;
            let rhs = quad.integrate(|y| kernel(p, y) * xf(y))?;
            ((sp - sm) / (h + h), rhs)
        }
    };
    Ok(CommutationResult { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// Both sides of `|∇_H(ρ_ε ∗ χ_E)|(Ω^R_{2ε}) ≤ |D_H χ_E|(Ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariationCheck<T> {
    pub lhs: T,
    pub lhs_std_error: T,
    /// h-perimeter of `E` inside `Ω`.
    pub rhs: T,
    pub boundary_samples: usize,
}

/// Uniform bucket grid over boundary samples for right-ball queries.
struct Buckets {
    cell: Vec<f64>,
    lower: Vec<f64>,
    map: HashMap<SmallVec<[i64; 8]>, Vec<usize>>,
}

impl Buckets {
    fn new<T: Real>(points: &[&BoundarySample<T>], cell: Vec<f64>) -> Self {
        let q = cell.len();
        let lower: Vec<f64> = (0..q).map(|k| points.iter().map(|s| s.point[k].to_f64_lossy()).fold(f64::INFINITY, f64::min)).collect();
        let mut map: HashMap<SmallVec<[i64; 8]>, Vec<usize>> = HashMap::new();
        for (i, s) in points.iter().enumerate() {
            let key = (0..q).map(|k| ((s.point[k].to_f64_lossy() - lower[k]) / cell[k]).floor() as i64).collect();
            map.entry(key).or_default().push(i);
        }
        Self { cell, lower, map }
    }

    fn query(&self, lo: &[f64], hi: &[f64], mut visit: impl FnMut(usize)) {
        let q = self.cell.len();
        let a: Vec<i64> = (0..q).map(|k| ((lo[k] - self.lower[k]) / self.cell[k]).floor() as i64).collect();
        let b: Vec<i64> = (0..q).map(|k| ((hi[k] - self.lower[k]) / self.cell[k]).floor() as i64).collect();
        let mut idx = a.clone();
        loop {
            if let Some(v) = self.map.get(idx.as_slice()) {
                v.iter().for_each(|&i| visit(i));
            }
            let mut k = q;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] <= b[k] {
                    break;
                }
                idx[k] = a[k];
            }
        }
    }
}

/// Total-variation bound for `f = χ_E`.
///
/// `∇_H(ρ_ε ∗ χ_E)(x) = −Σ_s ρ_ε(x s⁻¹) π_H N_E(s) w_s` over boundary samples. The left
/// side is estimated by importance sampling `x = z · s` with `s ∝ |π_H N_E| w` and
/// `z ∼ ρ_ε`; each draw contributes `P |∇_H(ρ_ε ∗ χ_E)(x)| / Σ_s ρ_ε(x s⁻¹)|π_H N_E(s)| w_s`
/// when `x ∈ Ω^R_{2ε}`, where `P` is the h-perimeter of the samples.
pub fn total_variation_bound_check<T: Real>(
    m: &Mollifier<T>,
    eps: T,
    e: &DomainSpec<T>,
    region: &BoxRegion<T>,
    resolution: usize,
    samples: usize,
    seed: u64,
) -> Result<TotalVariationCheck<T>> {
    let a = m.algebra();
    let all = sample_boundary(a, e, resolution, BoundaryMethod::Auto)?;
    let inside: Vec<&BoundarySample<T>> = all.iter().filter(|s| region.contains(&s.point) && s.density > T::zero()).collect();
    let rhs: T = inside.iter().map(|s| s.density * s.weight).sum();
    let n_b = inside.len();
    if n_b == 0 || samples == 0 {
        return Ok(TotalVariationCheck { lhs: T::zero(), lhs_std_error: T::zero(), rhs, boundary_samples: n_b });
    }
    let mut cdf = Vec::with_capacity(n_b);
    let mut acc = T::zero();
    for s in &inside {
        acc += s.density * s.weight;
        cdf.push(acc);
    }
    let hw = m.norm().ball_half_widths(eps);
    let cell: Vec<f64> = hw.iter().map(|h| (2.0 * h.to_f64_lossy()).max(1e-9)).collect();
    let buckets = Buckets::new(&inside, cell);
    let mdim = a.rank();
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<(T, T)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(split_seed(seed, 0x7f), b as u64);
            let (mut s1, mut s2) = (T::zero(), T::zero());
            for _ in 0..BATCH.min(samples - b * BATCH) {
                let u = T::lit(rng.random::<f64>()) * rhs;
                let i = cdf.partition_point(|&c| c <= u).min(n_b - 1);
                let z = m.sample_kernel(eps, &mut rng);
                let x = a.mul(&z, &inside[i].point);
                if !m.norm().inner_set_indicator(region, eps + eps, &x) {
                    continue;
                }
                let (lo, hi) = m.norm().right_ball_bounds(&x, eps);
                let lo: Vec<f64> = lo.iter().map(|v| v.to_f64_lossy()).collect();
                let hi: Vec<f64> = hi.iter().map(|v| v.to_f64_lossy()).collect();
                let mut g: Coords<T> = SmallVec::from_elem(T::zero(), mdim);
                let mut den = T::zero();
                buckets.query(&lo, &hi, |k| {
                    let s = inside[k];
                    let k_val = m.profile().eval(m.norm().dist_right(&x, &s.point) / eps);
                    if k_val > T::zero() {
                        for (gj, &c) in g.iter_mut().zip(&s.horizontal_coeffs) {
                            *gj += k_val * c * s.weight;
                        }
                        den += k_val * s.density * s.weight;
                    }
                });
                if den > T::zero() {
                    let v = norm2(&g) / den;
                    s1 += v;
                    s2 += v * v;
                }
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = parts.iter().fold((T::zero(), T::zero()), |x, y| (x.0 + y.0, x.1 + y.1));
    let n = T::from_usize_lossy(samples);
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(T::zero());
    Ok(TotalVariationCheck { lhs: rhs * mean, lhs_std_error: rhs * (var / n).sqrt(), rhs, boundary_samples: n_b })
}

/// `∇_H(ρ_ε ∗ χ_E)(x)` from boundary samples, `−Σ_s ρ_ε(x s⁻¹) π_H N_E(s) w_s`.
pub fn mollified_indicator_gradient<T: Real>(m: &Mollifier<T>, eps: T, samples: &[BoundarySample<T>], x: &[T]) -> Coords<T> {
    let a = m.algebra();
    let mut g: Coords<T> = SmallVec::from_elem(T::zero(), a.rank());
    for s in samples {
        let r = m.rho_eps(eps, &a.mul(x, &a.inv(&s.point)));
        if r > T::zero() {
            for (gj, &c) in g.iter_mut().zip(&s.horizontal_coeffs) {
                *gj -= r * c * s.weight;
            }
        }
    }
    g
}
