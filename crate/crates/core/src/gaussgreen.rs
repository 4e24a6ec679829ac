//! End-to-end checks of the Gauss–Green formula for continuous horizontal fields,
//! the Green identities, the half-density limit of mollified indicators, normal
//! traces and their locality, and the divergence-free example.

use serde::{Deserialize, Serialize};

use crate::algebra::StratifiedAlgebra;
use crate::domains::{boundary_integral_of, sample_boundary, volume_integral, BoundaryMethod, BoundarySample, DomainSpec};
use crate::domains::{Chart, ChartPoint};
use crate::error::{Error, Result};
use crate::hcalc::{distributional_divergence_pairing, divergence_at, horizontal_gradient, sub_laplacian_at, HorizontalField, ScalarField};
use crate::metric::BoxRegion;
use crate::mollify::{commutation_residual, right_ball_average, total_variation_bound_check, CommutationScheme, KernelRule, Mollifier};
use crate::quadrature::QuadratureSpec;
use crate::rng::{split_seed, stream_rng};
use crate::scalar::{dot, norm2, Real};

/// Below this `|rhs|` the pass test uses the absolute residual.
pub const ABSOLUTE_FALLBACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussGreenReport {
    pub scenario: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs|`.
    pub residual: f64,
    /// `residual / |rhs|`, or `residual` when `|rhs| < 1e-8`.
    pub rel_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Named intermediate terms.
    pub terms: Vec<(String, f64)>,
    /// Quadrature metadata as `key = value` pairs.
    pub meta: Vec<(String, String)>,
}

impl GaussGreenReport {
    pub fn new(scenario: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).abs();
        let rel_residual = if rhs.abs() >= ABSOLUTE_FALLBACK { residual / rhs.abs() } else { residual };
        Self {
            scenario: scenario.into(),
            lhs,
            rhs,
            residual,
            rel_residual,
            tolerance,
            pass: rel_residual <= tolerance,
            terms: Vec::new(),
            meta: Vec::new(),
        }
    }

    /// Report judged on the absolute residual.
    pub fn absolute(scenario: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = Self::new(scenario, lhs, rhs, tolerance);
        r.rel_residual = r.residual;
        r.pass = r.residual <= tolerance;
        r
    }

    /// Re-judges the report on its absolute residual.
    pub fn into_absolute(mut self) -> Self {
        self.rel_residual = self.residual;
        self.pass = self.residual <= self.tolerance;
        self.meta.push(("judged".into(), "absolute".into()));
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn with_term(mut self, key: impl Into<String>, value: f64) -> Self {
        self.terms.push((key.into(), value));
        self
    }

    /// Overrides the pass flag with an extra condition, recorded in `meta`.
    pub fn require(mut self, what: &str, ok: bool) -> Self {
        self.meta.push((what.into(), ok.to_string()));
        self.pass &= ok;
        self
    }

    /// `lhs − rhs`.
    pub fn signed_residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn meta_get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// `fine` does not exceed `coarse` by more than 10% (absolute floor `1e-12`).
pub fn refinement_ok(coarse: &GaussGreenReport, fine: &GaussGreenReport) -> bool {
    fine.rel_residual <= 1.1 * coarse.rel_residual + 1e-12
}

/// Boundary sampling and volume quadrature shared by the verifications.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization<T> {
    pub resolution: usize,
    pub method: BoundaryMethod,
    pub quad: QuadratureSpec<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(resolution: usize, method: BoundaryMethod, quad: QuadratureSpec<T>) -> Self {
        Self { resolution, method, quad }
    }

    /// Boundary resolution and volume cells doubled.
    pub fn refined(&self) -> Self {
        Self { resolution: 2 * self.resolution, method: self.method, quad: self.quad.refined() }
    }

    fn annotate(&self, r: GaussGreenReport, samples: usize) -> GaussGreenReport {
        r.with_meta("boundary", format!("{:?}{}", self.method, self.resolution).to_lowercase())
            .with_meta("volume", self.quad.describe())
            .with_meta("samples", samples)
    }
}

fn f64s<T: Real>(x: T) -> f64 {
    x.to_f64_lossy()
}

/// `⟨F, ν_E⟩` at a sample; zero at characteristic points.
pub fn normal_trace<T: Real>(field: &HorizontalField<T>, s: &BoundarySample<T>) -> T {
    s.nu().map_or(T::zero(), |nu| dot(&field.coeffs(&s.point), &nu))
}

/// `∫_E div F dx` against `∫ ⟨F, ν_E⟩ d|D_H χ_E|`.
pub fn verify_gauss_green<T: Real>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    d: &DomainSpec<T>,
    disc: &Discretization<T>,
    tolerance: f64,
) -> Result<GaussGreenReport> {
    let samples = sample_boundary(a, d, disc.resolution, disc.method)?;
    let lhs = volume_integral(d, |p| divergence_at(a, field, p), &disc.quad)?;
    let rhs = boundary_integral_of(&samples, |s| normal_trace(field, s));
    let r = GaussGreenReport::new(format!("gauss_green[{} on {}]", field.name(), d.name), f64s(lhs), f64s(rhs), tolerance);
    Ok(disc.annotate(r, samples.len()))
}

fn green_terms<T: Real>(
    a: &StratifiedAlgebra<T>,
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    d: &DomainSpec<T>,
    samples: &[BoundarySample<T>],
    quad: &QuadratureSpec<T>,
) -> Result<(T, T, T)> {
    let vlap = volume_integral(d, |p| v.eval(p) * sub_laplacian_at(a, u, p), quad)?;
    let grads = volume_integral(d, |p| dot(&horizontal_gradient(a, v, p), &horizontal_gradient(a, u, p)), quad)?;
    let flux = boundary_integral_of(samples, |s| match s.nu() {
        Some(nu) => v.eval(&s.point) * dot(&horizontal_gradient(a, u, &s.point), &nu),
        None => T::zero(),
    });
    Ok((vlap, flux, grads))
}

/// `∫_E v Δ_H u = ∫ v ⟨∇_H u, ν_E⟩ d|D_H χ_E| − ∫_E ⟨∇_H v, ∇_H u⟩`.
pub fn verify_green_first<T: Real>(
    a: &StratifiedAlgebra<T>,
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    d: &DomainSpec<T>,
    disc: &Discretization<T>,
    tolerance: f64,
) -> Result<GaussGreenReport> {
    let samples = sample_boundary(a, d, disc.resolution, disc.method)?;
    let (vlap, flux, grads) = green_terms(a, u, v, d, &samples, &disc.quad)?;
    let r = GaussGreenReport::new(
        format!("green_first[u={}, v={} on {}]", u.name(), v.name(), d.name),
        f64s(vlap),
        f64s(flux - grads),
        tolerance,
    )
    .with_term("volume_v_lap_u", f64s(vlap))
    .with_term("boundary_flux", f64s(flux))
    .with_term("volume_grad_dot", f64s(grads));
    Ok(disc.annotate(r, samples.len()))
}

/// `∫_E (v Δ_H u − u Δ_H v) = ∫ ⟨v ∇_H u − u ∇_H v, ν_E⟩ d|D_H χ_E|`.
pub fn verify_green_second<T: Real>(
    a: &StratifiedAlgebra<T>,
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    d: &DomainSpec<T>,
    disc: &Discretization<T>,
    tolerance: f64,
) -> Result<GaussGreenReport> {
    let samples = sample_boundary(a, d, disc.resolution, disc.method)?;
    let lhs = volume_integral(d, |p| v.eval(p) * sub_laplacian_at(a, u, p) - u.eval(p) * sub_laplacian_at(a, v, p), &disc.quad)?;
    let rhs = boundary_integral_of(&samples, |s| match s.nu() {
        Some(nu) => {
            let gu = horizontal_gradient(a, u, &s.point);
            let gv = horizontal_gradient(a, v, &s.point);
            let (uv, vv) = (u.eval(&s.point), v.eval(&s.point));
            let w: Vec<T> = gu.iter().zip(&gv).map(|(&x, &y)| vv * x - uv * y).collect();
            dot(&w, &nu)
        }
        None => T::zero(),
    });
    let r = GaussGreenReport::new(format!("green_second[u={}, v={} on {}]", u.name(), v.name(), d.name), f64s(lhs), f64s(rhs), tolerance);
    Ok(disc.annotate(r, samples.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfDensityLevel {
    pub eps: f64,
    /// `A(ε)`.
    pub average: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfDensityReport {
    pub scenario: String,
    pub levels: Vec<HalfDensityLevel>,
    /// `|A(ε_min) − 1/2| ≤ final_tolerance`.
    pub final_ok: bool,
    /// `|A(ε_{k+1}) − 1/2| ≤ (1 + slack) |A(ε_k) − 1/2| + 3σ` along the ladder.
    pub trend_ok: bool,
    pub final_tolerance: f64,
    pub slack: f64,
    pub pass: bool,
}

impl HalfDensityReport {
    /// One row per ε; the last row carries the pass flag of the whole ladder.
    pub fn to_reports(&self) -> Vec<GaussGreenReport> {
        let n = self.levels.len();
        self.levels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let mut r = GaussGreenReport::new(format!("{}[eps={}]", self.scenario, l.eps), l.average, 0.5, self.final_tolerance)
                    .with_meta("eps", l.eps)
                    .with_meta("std_error", format!("{:.3e}", l.std_error));
                // the ladder is judged as a whole; intermediate levels only report
                r.pass = if k + 1 == n { self.pass } else { self.trend_ok };
                r.require("trend_ok", self.trend_ok)
            })
            .collect()
    }
}

/// Half-density limit `ρ_ε ∗ χ_E → 1/2` on `∂E` weighted by `φ d|D_H χ_E|`.
///
/// `A(ε) = ∫ φ (ρ_ε ∗ χ_E) d|D_H χ_E| / ∫ φ d|D_H χ_E|`, with `ρ_ε ∗ χ_E` estimated at
/// each boundary sample by `pairs` antithetic Monte Carlo pairs over `B^R(s, ε)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_half_density<T, P>(
    m: &Mollifier<T>,
    d: &DomainSpec<T>,
    eps_ladder: &[T],
    phi: P,
    resolution: usize,
    method: BoundaryMethod,
    pairs: usize,
    seed: u64,
) -> Result<HalfDensityReport>
where
    T: Real,
    P: Fn(&BoundarySample<T>) -> T + Sync,
{
    use rayon::prelude::*;
    if eps_ladder.is_empty() || eps_ladder.windows(2).any(|w| !(w[1] < w[0])) || !(eps_ladder[eps_ladder.len() - 1] > T::zero()) {
        return Err(Error::Domain("eps ladder must be positive and strictly decreasing".into()));
    }
    let a = m.algebra();
    let samples = sample_boundary(a, d, resolution, method)?;
    let eps_max = eps_ladder[0];
    if d.bounded {
        if let Some(s) = samples.iter().find(|s| !m.norm().inner_set_indicator(&d.bbox, eps_max + eps_max, &s.point)) {
            return Err(Error::Margin(format!(
                "boundary point {:?} of `{}` is within 2·{eps_max} of the bounding box",
                s.point.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>(),
                d.name
            )));
        }
    }
    let weights: Vec<T> = samples.par_iter().map(|s| phi(s) * s.density * s.weight).collect();
    let total: T = weights.iter().copied().sum();
    if !(total.abs() > T::zero()) {
        return Err(Error::EmptyRegion("boundary weight φ d|D_H χ_E| vanishes".into()));
    }
    let chi = |p: &[T]| if d.contains(p) { T::one() } else { T::zero() };
    let mut levels = Vec::with_capacity(eps_ladder.len());
    for (k, &eps) in eps_ladder.iter().enumerate() {
        let level_seed = split_seed(seed, k as u64);
        let parts: Vec<(T, T)> = samples
            .par_iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (s, &w))| {
                if w == T::zero() {
                    return (T::zero(), T::zero());
                }
                let mut rng = stream_rng(level_seed, i as u64);
                let (mean, se) = m.mollify_mc(eps, chi, &s.point, pairs, &mut rng);
                (w * mean, w * w * se * se)
            })
            .collect();
        let (num, var) = parts.iter().fold((T::zero(), T::zero()), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        levels.push(HalfDensityLevel { eps: f64s(eps), average: f64s(num / total), std_error: f64s(var.sqrt() / total.abs()) });
    }
    let final_tolerance = 0.02;
    let slack = 0.2;
    let last = &levels[levels.len() - 1];
    let final_ok = (last.average - 0.5).abs() <= final_tolerance;
    let trend_ok = levels.windows(2).all(|w| {
        let sigma = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        (w[1].average - 0.5).abs() <= (1.0 + slack) * (w[0].average - 0.5).abs() + 3.0 * sigma
    });
    Ok(HalfDensityReport {
        scenario: format!("half_density[{}]", d.name),
        levels,
        final_ok,
        trend_ok,
        final_tolerance,
        slack,
        pass: final_ok && trend_ok,
    })
}

/// Orientation relation between two domains on a shared patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Same,
    Opposite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub scenario: String,
    pub orientation: Orientation,
    pub aligned: usize,
    /// `max |⟨F, ν_{E_1}⟩ ∓ ⟨F, ν_{E_2}⟩|` over the patch.
    pub max_difference: f64,
    /// Largest normal misalignment `1 − |N_1 · N_2|`.
    pub max_normal_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl LocalityReport {
    pub fn to_report(&self) -> GaussGreenReport {
        let mut r = GaussGreenReport::new(self.scenario.clone(), self.max_difference, 0.0, self.tolerance)
            .with_meta("orientation", format!("{:?}", self.orientation).to_lowercase())
            .with_meta("aligned", self.aligned)
            .with_meta("normal_defect", format!("{:.3e}", self.max_normal_defect));
        r.pass = self.pass;
        r
    }
}

/// Normal-trace locality on a shared boundary patch: every patch sample of `d1` must
/// have a sample of `d2` within `align_tol`, with normals equal or opposite up to
/// `normal_tol`; traces are compared with the matching sign.
#[allow(clippy::too_many_arguments)]
pub fn verify_trace_locality<T, P>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    d1: &DomainSpec<T>,
    d2: &DomainSpec<T>,
    patch: P,
    resolution: usize,
    align_tol: T,
    normal_tol: T,
    tolerance: f64,
) -> Result<LocalityReport>
where
    T: Real,
    P: Fn(&[T]) -> bool,
{
    let s1: Vec<BoundarySample<T>> =
        sample_boundary(a, d1, resolution, BoundaryMethod::Auto)?.into_iter().filter(|s| patch(&s.point)).collect();
    let s2: Vec<BoundarySample<T>> =
        sample_boundary(a, d2, resolution, BoundaryMethod::Auto)?.into_iter().filter(|s| patch(&s.point)).collect();
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::Misaligned("patch contains no samples of one of the domains".into()));
    }
    let mut orientation = None;
    let mut worst = T::zero();
    let mut defect = T::zero();
    for p in &s1 {
        let (best, dist) = s2
            .iter()
            .map(|q| {
                let d: Vec<T> = p.point.iter().zip(&q.point).map(|(&x, &y)| x - y).collect();
                (q, norm2(&d))
            })
            .fold((None, T::infinity()), |acc, (q, d)| if d < acc.1 { (Some(q), d) } else { acc });
        let q = best.expect("non-empty patch");
        if dist > align_tol {
            return Err(Error::Misaligned(format!(
                "no sample of `{}` within {align_tol} of {:?}",
                d2.name,
                p.point.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>()
            )));
        }
        let c = dot(&p.normal, &q.normal);
        let here = if c > T::zero() { Orientation::Same } else { Orientation::Opposite };
        defect = defect.max(T::one() - c.abs());
        if T::one() - c.abs() > normal_tol {
            return Err(Error::Misaligned(format!("normals neither agree nor oppose on the patch (|N1·N2| = {})", c.abs())));
        }
        match orientation {
            None => orientation = Some(here),
            Some(o) if o != here => return Err(Error::Misaligned("orientation changes across the patch".into())),
            _ => {}
        }
        let t1 = normal_trace(field, p);
        let t2 = normal_trace(field, q);
        let diff = match here {
            Orientation::Same => (t1 - t2).abs(),
            Orientation::Opposite => (t1 + t2).abs(),
        };
        worst = worst.max(diff);
    }
    let orientation = orientation.expect("non-empty patch");
    let max_difference = f64s(worst);
    Ok(LocalityReport {
        scenario: format!("trace_locality[{} | {} | {}]", field.name(), d1.name, d2.name),
        orientation,
        aligned: s1.len(),
        max_difference,
        max_normal_defect: f64s(defect),
        tolerance,
        pass: max_difference < tolerance,
    })
}

/// Trace bound `|⟨F, ν_E⟩| ≤ sup_E |F|` checked sample by sample; `sup |F|` is taken
/// over boundary samples and the volume nodes inside `E`.
pub fn verify_trace_bound<T: Real>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    d: &DomainSpec<T>,
    disc: &Discretization<T>,
) -> Result<GaussGreenReport> {
    let samples = sample_boundary(a, d, disc.resolution, disc.method)?;
    let nodes = disc.quad.nodes()?;
    let interior = nodes.iter().filter(|(p, _)| d.contains(p)).map(|(p, _)| norm2(&field.coeffs(p)));
    let boundary = samples.iter().map(|s| norm2(&field.coeffs(&s.point)));
    let sup = interior.chain(boundary).fold(T::zero(), T::max);
    let max_trace = samples.iter().map(|s| normal_trace(field, s).abs()).fold(T::zero(), T::max);
    let violations = samples.iter().filter(|s| normal_trace(field, s).abs() > norm2(&field.coeffs(&s.point)) + T::lit(1e-10)).count();
    let ok = f64s(max_trace) <= f64s(sup) + 1e-10 && violations == 0;
    let mut r = GaussGreenReport::new(format!("trace_bound[{} on {}]", field.name(), d.name), f64s(max_trace), f64s(sup), 0.0)
        .with_meta("violations", violations);
    r.pass = ok;
    Ok(disc.annotate(r, samples.len()))
}

/// Pairings `-∫ ⟨F, ∇_H φ⟩` for bumps `φ` supported in `{|x_1 − x_2| > delta}`, each with
/// its own quadrature; support is checked on the quadrature nodes.
pub fn verify_divergence_free_example<T: Real>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    bumps: &[(ScalarField<T>, QuadratureSpec<T>)],
    delta: T,
    tolerance: f64,
) -> Result<Vec<GaussGreenReport>> {
    bumps
        .iter()
        .map(|(phi, quad)| {
            for (p, _) in quad.nodes()? {
                if (p[0] - p[1]).abs() <= delta && phi.eval(&p) != T::zero() {
                    return Err(Error::Support(format!("bump `{}` reaches within {delta} of the singular plane x = y", phi.name())));
                }
            }
            let pairing = distributional_divergence_pairing(a, field, phi, quad)?;
            Ok(GaussGreenReport::new(format!("divergence_free[{} vs {}]", field.name(), phi.name()), f64s(pairing), 0.0, tolerance)
                .with_meta("volume", quad.describe()))
        })
        .collect()
}

/// Two one-chart boundary patches around `(r, 0, …, 0)`: the sphere `|x| = r` and the
/// plane `x_1 = r`, both over `(u_2, …, u_q) ∈ [−w, w]^{q−1}` with `point_k = u_k`.
pub fn tangent_patch_pair<T: Real>(q: usize, r: T, w: T) -> Result<(DomainSpec<T>, DomainSpec<T>)> {
    let params = BoxRegion::cube(q - 1, w)?;
    let sphere = Chart::new("sphere_patch", params.clone(), move |u: &[T]| {
        let s: T = u.iter().map(|&x| x * x).sum();
        let x1 = (r * r - s).sqrt();
        let mut point: crate::algebra::Coords<T> = smallvec::smallvec![x1];
        point.extend_from_slice(u);
        let normal = point.iter().map(|&x| x / r).collect();
        ChartPoint { point, normal, area: r / x1 }
    });
    let plane = Chart::new("plane_patch", params, move |u: &[T]| {
        let mut point: crate::algebra::Coords<T> = smallvec::smallvec![r];
        point.extend_from_slice(u);
        let mut normal: crate::algebra::Coords<T> = smallvec::smallvec![T::zero(); q];
        normal[0] = T::one();
        ChartPoint { point, normal, area: T::one() }
    });
    let bbox = BoxRegion::cube(q, T::lit(2.0) * r)?;
    let ball = DomainSpec::new(format!("ball(r={r})"), ScalarField::new("|x| - r", move |p: &[T]| norm2(p) - r), bbox.clone())
        .with_charts(vec![sphere]);
    let half = DomainSpec::new(format!("half_space(x1 < {r})"), ScalarField::new("x1 - r", move |p: &[T]| p[0] - r), bbox)
        .with_charts(vec![plane])
        .unbounded();
    Ok((ball, half))
}

/// Commutation `X_j(ρ_ε ∗ f) = ρ_ε ∗ X_j f` at `cells` and `2 cells`; judged on the
/// finer absolute residual, and for the fixed-grid scheme also on its decrease.
#[allow(clippy::too_many_arguments)]
pub fn verify_commutation<T: Real>(
    m: &Mollifier<T>,
    eps: T,
    f: &ScalarField<T>,
    j: usize,
    p: &[T],
    scheme: CommutationScheme,
    (cells, order): (usize, usize),
    h: T,
    domain: Option<&BoxRegion<T>>,
    tolerance: f64,
) -> Result<GaussGreenReport> {
    let coarse = commutation_residual(m, eps, f, j, p, scheme, (cells, order), h, domain)?;
    let fine = commutation_residual(m, eps, f, j, p, scheme, (2 * cells, order), h, domain)?;
    let mut r =
        GaussGreenReport::absolute(format!("commutation[{} X{} eps={eps}]", f.name(), j + 1), f64s(fine.lhs), f64s(fine.rhs), tolerance)
            .with_term("coarse_residual", f64s(coarse.residual))
            .with_meta("scheme", format!("{scheme:?}").to_lowercase())
            .with_meta("grid", format!("{cells}->{}x{order}", 2 * cells))
            .with_meta("h", f64s(h));
    if scheme == CommutationScheme::FixedGrid {
        r = r.require("decreasing", fine.residual < coarse.residual);
    }
    Ok(r)
}

/// `|ρ_ε ∗ f(p) − f^{*,R}(p)|` along a decreasing ε ladder, with `f^{*,R}(p)` taken as the
/// right-ball average at radius `ref_radius`. Judged on the last error and on strict
/// decrease.
#[allow(clippy::too_many_arguments)]
pub fn verify_pointwise_limit<T: Real>(
    m: &Mollifier<T>,
    f: &ScalarField<T>,
    p: &[T],
    eps_ladder: &[T],
    rule: &KernelRule<T>,
    ref_radius: T,
    ref_samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<GaussGreenReport> {
    if eps_ladder.is_empty() || eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain("eps ladder must be strictly decreasing".into()));
    }
    let (reference, se) = right_ball_average(m.norm(), |x| f.eval(x), p, ref_radius, ref_samples, seed, None)?;
    let values: Vec<T> = eps_ladder.iter().map(|&eps| m.mollify_scalar(eps, |x| f.eval(x), p, rule, None)).collect::<Result<_>>()?;
    let errors: Vec<f64> = values.iter().map(|&v| f64s((v - reference).abs())).collect();
    let mut r =
        GaussGreenReport::absolute(format!("pointwise_limit[{}]", f.name()), f64s(values[values.len() - 1]), f64s(reference), tolerance)
            .with_meta("reference_std_error", format!("{:.3e}", f64s(se)))
            .with_meta("eps", eps_ladder.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("/"));
    for (e, err) in eps_ladder.iter().zip(&errors) {
        r = r.with_term(format!("error[eps={e}]"), *err);
    }
    Ok(r.require("decreasing", errors.windows(2).all(|w| w[1] < w[0])))
}

/// Total-variation bound `|∇_H(ρ_ε ∗ χ_E)|(Ω^R_{2ε}) ≤ |D_H χ_E|(Ω)` for each ε, with
/// relative slack `tolerance`; `min_ratio` additionally requires `lhs ≥ min_ratio · rhs` at the
/// smallest ε of the list.
#[allow(clippy::too_many_arguments)]
pub fn verify_total_variation<T: Real>(
    m: &Mollifier<T>,
    eps_list: &[T],
    e: &DomainSpec<T>,
    region: &BoxRegion<T>,
    resolution: usize,
    samples: usize,
    seed: u64,
    tolerance: f64,
    min_ratio: Option<f64>,
) -> Result<Vec<GaussGreenReport>> {
    let smallest = eps_list.iter().copied().fold(T::infinity(), T::min);
    eps_list
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let tv = total_variation_bound_check(m, eps, e, region, resolution, samples, split_seed(seed, k as u64))?;
            let (lhs, rhs) = (f64s(tv.lhs), f64s(tv.rhs));
            let mut r = GaussGreenReport::new(format!("total_variation[{} eps={eps}]", e.name), lhs, rhs, tolerance)
                .with_meta("std_error", format!("{:.3e}", f64s(tv.lhs_std_error)))
                .with_meta("boundary_samples", tv.boundary_samples)
                .with_meta("samples", samples);
            r.pass = lhs <= rhs * (1.0 + tolerance);
            if let (Some(c), true) = (min_ratio, eps == smallest) {
                r = r.require("lower_ratio", lhs >= c * rhs);
            }
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg1;
    use crate::domains::{box_domain, euclidean_ball, half_space};
    use crate::fields::{heisenberg_sin_example, smooth_bump, HorizontalFieldSpec};
    use crate::metric::{BoxRegion, HomogeneousNorm};
    use std::sync::Arc;

    fn h1() -> Arc<StratifiedAlgebra<f64>> {
        Arc::new(heisenberg1())
    }

    fn disc(d: &DomainSpec<f64>, n: usize) -> Discretization<f64> {
        Discretization::new(n, BoundaryMethod::Auto, QuadratureSpec::tensor(d.bbox.clone(), n, 2))
    }

    #[test]
    fn report_policy() {
        let r = GaussGreenReport::new("x", 1.0, 1.005, 1e-2);
        assert!(r.pass && (r.residual - 0.005).abs() < 1e-15);
        let z = GaussGreenReport::new("z", 2e-4, 1e-9, 1e-3);
        assert_eq!(z.rel_residual, z.residual);
        assert!(z.pass);
    }

    #[test]
    fn gauss_green_on_ball() {
        let a = h1();
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let x1 = HorizontalField::frame(2, 0);
        let r = verify_gauss_green(&a, &x1, &ball, &disc(&ball, 24), 1e-3).unwrap();
        assert!(r.lhs == 0.0 && r.rhs.abs() < 1e-10, "{r:?}");
        let lin = HorizontalFieldSpec::CoordFrame { coord: 1, frame: 1 }.build(&a).unwrap();
        let r = verify_gauss_green(&a, &lin, &ball, &disc(&ball, 32), 1e-2).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.rhs - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-6);
    }

    #[test]
    fn orientation_coherence() {
        let a = h1();
        let b = box_domain(&[-0.5, -0.4, -0.3], &[0.6, 0.5, 0.4]).unwrap();
        let f = HorizontalFieldSpec::Expr { components: vec!["x*z + 1".into(), "y^2 - x".into()] }.build(&a).unwrap();
        let d = disc(&b, 8);
        let r1 = verify_gauss_green(&a, &f, &b, &d, 1e-2).unwrap();
        let r2 = verify_gauss_green(&a, &f, &b.complement(), &d, 1e-2).unwrap();
        assert_eq!(r1.rhs, -r2.rhs);
    }

    #[test]
    fn green_identities() {
        let a = h1();
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let d = disc(&ball, 32);
        let u = ScalarField::from_expression(&a, "x^2").unwrap();
        let one = ScalarField::from_expression(&a, "1").unwrap();
        let r = verify_green_first(&a, &u, &one, &ball, &d, 1e-2).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.rhs - 8.0 * std::f64::consts::PI / 3.0).abs() < 1e-3);
        let v = ScalarField::from_expression(&a, "y^2 + x*z").unwrap();
        let s = verify_green_second(&a, &u, &v, &ball, &d, 1e-2).unwrap();
        let f1 = verify_green_first(&a, &u, &v, &ball, &d, 1e-2).unwrap();
        let f2 = verify_green_first(&a, &v, &u, &ball, &d, 1e-2).unwrap();
        assert!((f1.signed_residual() - f2.signed_residual() - s.signed_residual()).abs() < 1e-10);
        let same = verify_green_second(&a, &v, &v, &ball, &d, 1e-2).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
    }

    #[test]
    fn half_density_half_space_and_ball() {
        let a = h1();
        let m = Mollifier::linear(HomogeneousNorm::gauge(a.clone())).unwrap();
        let hs = half_space(0, 0.0, 1.0, BoxRegion::cube(3, 1.0).unwrap()).unwrap();
        let r = verify_half_density(&m, &hs, &[0.2, 0.1], |_| 1.0, 8, BoundaryMethod::Auto, 16, 3).unwrap();
        assert!(r.levels.iter().all(|l| l.average == 0.5), "{r:?}");
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap().padded(0.6).unwrap();
        let r = verify_half_density(&m, &ball, &[0.2, 0.1, 0.05], |_| 1.0, 12, BoundaryMethod::Auto, 32, 4).unwrap();
        assert!(r.pass, "{r:?}");
        let bad = verify_half_density(&m, &ball, &[0.1, 0.2], |_| 1.0, 8, BoundaryMethod::Auto, 4, 4);
        assert!(bad.is_err());
        let tight = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        assert!(matches!(verify_half_density(&m, &tight, &[0.5], |_| 1.0, 8, BoundaryMethod::Auto, 4, 4), Err(Error::Margin(_))));
    }

    #[test]
    fn trace_locality_cases() {
        let a = h1();
        let f = HorizontalFieldSpec::Expr { components: vec!["x*z + sin(y)".into(), "y^2 - x".into()] }.build(&a).unwrap();
        let b1 = box_domain(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        let b2 = box_domain(&[-1.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        let b3 = box_domain(&[1.0, 0.0, 0.0], &[2.0, 1.0, 1.0]).unwrap();
        let patch = |p: &[f64]| (p[0] - 1.0).abs() < 1e-12;
        let same = verify_trace_locality(&a, &f, &b1, &b2, patch, 8, 1e-9, 1e-12, 1e-10).unwrap();
        assert_eq!(same.orientation, Orientation::Same);
        assert_eq!(same.max_difference, 0.0);
        let opp = verify_trace_locality(&a, &f, &b1, &b3, patch, 8, 1e-9, 1e-12, 1e-10).unwrap();
        assert_eq!(opp.orientation, Orientation::Opposite);
        assert_eq!(opp.max_difference, 0.0);
        let (ball, plane) = tangent_patch_pair(3, 1.0, 1e-6).unwrap();
        let any = |_: &[f64]| true;
        let t = verify_trace_locality(&a, &f, &ball, &plane, any, 4, 1e-9, 1e-6, 1e-5).unwrap();
        assert_eq!(t.orientation, Orientation::Same);
        assert!(t.pass, "{t:?}");
        let off = box_domain(&[1.0, 0.03, 0.0], &[2.0, 1.0, 1.0]).unwrap();
        assert!(matches!(verify_trace_locality(&a, &f, &b1, &off, patch, 8, 1e-9, 1e-12, 1e-10), Err(Error::Misaligned(_))));
    }

    #[test]
    fn trace_bound_holds() {
        let a = h1();
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let f = HorizontalFieldSpec::Expr { components: vec!["x*z + 1".into(), "y^2 - x".into()] }.build(&a).unwrap();
        let r = verify_trace_bound(&a, &f, &ball, &disc(&ball, 16)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn divergence_free_bumps() {
        let a = h1();
        let f = heisenberg_sin_example::<f64>();
        let bumps: Vec<(ScalarField<f64>, QuadratureSpec<f64>)> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&o| {
                let c = vec![o / 2.0, -o / 2.0, 0.0];
                let r = o / 4.0;
                let region = BoxRegion::new(c.iter().map(|x| x - r).collect(), c.iter().map(|x| x + r).collect()).unwrap();
                (smooth_bump(c, vec![r; 3], 0.0), QuadratureSpec::tensor(region, 8, 4))
            })
            .collect();
        for r in verify_divergence_free_example(&a, &f, &bumps, 0.1, 1e-3).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        let near =
            vec![(smooth_bump(vec![0.0, 0.0, 0.0], vec![0.3; 3], 0.0), QuadratureSpec::tensor(BoxRegion::cube(3, 0.3).unwrap(), 4, 2))];
        assert!(matches!(verify_divergence_free_example(&a, &f, &near, 0.1, 1e-3), Err(Error::Support(_))));
    }
}
