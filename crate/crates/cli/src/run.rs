//! Scenario preparation and execution.

use std::sync::Arc;
use std::time::Instant;

use carnot::algebra::StratifiedAlgebra;
use carnot::domains::{BoundaryMethod, BoundarySample, DomainSpec};
use carnot::fields::smooth_bump;
use carnot::gaussgreen::{
    refinement_ok, tangent_patch_pair, verify_commutation, verify_divergence_free_example, verify_gauss_green, verify_green_first,
    verify_green_second, verify_half_density, verify_pointwise_limit, verify_total_variation, verify_trace_bound, verify_trace_locality,
    Discretization, GaussGreenReport,
};
use carnot::hcalc::{x_derivative, HorizontalField, ScalarField};
use carnot::metric::{haar_volume_mc, BoxRegion, HomogeneousNorm};
use carnot::mollify::{CommutationScheme, KernelRule, Mollifier};
use carnot::quadrature::{QuadratureKind, QuadratureSpec};
use carnot::rng::{split_seed, stream_rng};
use carnot::Real;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{check_ladder, check_positive, Check, Config, Defaults, PatchSpec, PhiSpec, ScenarioConfig, Volume};
use crate::error::CliError;

type Alg = Arc<StratifiedAlgebra<f64>>;

/// Scenario with every object built; construction doubles as validation.
pub enum Prepared {
    GroupAxioms {
        samples: usize,
    },
    Dilation {
        samples: usize,
        haar_samples: usize,
        r: f64,
    },
    Frame {
        samples: usize,
    },
    GaussGreen {
        field: HorizontalField<f64>,
        domain: DomainSpec<f64>,
        disc: Discretization<f64>,
        refine: bool,
        absolute: bool,
    },
    GreenFirst {
        u: ScalarField<f64>,
        v: ScalarField<f64>,
        domain: DomainSpec<f64>,
        disc: Discretization<f64>,
        swap: bool,
    },
    GreenSecond {
        u: ScalarField<f64>,
        v: ScalarField<f64>,
        domain: DomainSpec<f64>,
        disc: Discretization<f64>,
    },
    HalfDensity {
        m: Mollifier<f64>,
        domain: DomainSpec<f64>,
        eps: Vec<f64>,
        phi: PhiSpec,
        resolution: usize,
        method: BoundaryMethod,
        pairs: usize,
    },
    TraceLocality {
        field: HorizontalField<f64>,
        first: DomainSpec<f64>,
        second: DomainSpec<f64>,
        patch: PatchSpec,
        resolution: usize,
        align_tol: f64,
        normal_tol: f64,
    },
    TraceBound {
        field: HorizontalField<f64>,
        domain: DomainSpec<f64>,
        disc: Discretization<f64>,
    },
    DivergenceFree {
        field: HorizontalField<f64>,
        bumps: Vec<(ScalarField<f64>, QuadratureSpec<f64>)>,
        delta: f64,
    },
    Commutation {
        m: Mollifier<f64>,
        f: ScalarField<f64>,
        j: usize,
        point: Vec<f64>,
        eps: f64,
        scheme: CommutationScheme,
        volume: Volume,
        h: f64,
        region: Option<BoxRegion<f64>>,
    },
    PointwiseLimit {
        m: Mollifier<f64>,
        f: ScalarField<f64>,
        point: Vec<f64>,
        eps: Vec<f64>,
        rule: KernelRule<f64>,
        ref_radius: f64,
        ref_samples: usize,
    },
    TotalVariation {
        m: Mollifier<f64>,
        domain: DomainSpec<f64>,
        eps: Vec<f64>,
        region: BoxRegion<f64>,
        resolution: usize,
        samples: usize,
        min_ratio: Option<f64>,
    },
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("check.{field}: {msg}"))
}

fn disc(domain: &DomainSpec<f64>, resolution: usize, method: BoundaryMethod, volume: Volume) -> Result<Discretization<f64>, CliError> {
    check_positive("resolution", resolution)?;
    check_positive("volume.cells", volume.cells)?;
    check_positive("volume.order", volume.order)?;
    Ok(Discretization::new(resolution, method, QuadratureSpec::tensor(domain.bbox.clone(), volume.cells, volume.order)))
}

fn point_len(field: &str, p: &[f64], q: usize) -> Result<(), CliError> {
    if p.len() != q {
        return Err(invalid(field, format!("expected {q} coordinates, got {}", p.len())));
    }
    Ok(())
}

fn mollifier(s: &ScenarioConfig, defaults: &Defaults, alg: &Alg) -> Result<Mollifier<f64>, CliError> {
    let norm = HomogeneousNorm::new(s.norm.unwrap_or(defaults.norm), alg.clone());
    Ok(Mollifier::new(s.profile.unwrap_or(defaults.profile), norm)?)
}

/// Builds every object the scenario needs.
pub fn prepare(s: &ScenarioConfig, defaults: &Defaults, alg: &Alg) -> Result<Prepared, CliError> {
    let q = alg.dim();
    let hf = |field: &str, f: &carnot::fields::HorizontalFieldSpec| f.build(alg).map_err(|e| invalid(field, e));
    let sf = |field: &str, f: &carnot::fields::ScalarFieldSpec| f.build(alg).map_err(|e| invalid(field, e));
    let dom = |field: &str, d: &carnot::domains::DomainPresetSpec| d.build(alg).map_err(|e| invalid(field, e));
    Ok(match &s.check {
        Check::GroupAxioms { samples } => {
            check_positive("samples", *samples)?;
            Prepared::GroupAxioms { samples: *samples }
        }
        Check::Dilation { samples, haar_samples, r } => {
            check_positive("samples", *samples)?;
            check_positive("haar_samples", *haar_samples)?;
            if !(*r > 0.0) {
                return Err(invalid("r", "must be positive"));
            }
            Prepared::Dilation { samples: *samples, haar_samples: *haar_samples, r: *r }
        }
        Check::Frame { samples } => {
            check_positive("samples", *samples)?;
            Prepared::Frame { samples: *samples }
        }
        Check::GaussGreen { field, domain, resolution, method, volume, refine, absolute } => {
            let domain = dom("domain", domain)?;
            let disc = disc(&domain, *resolution, *method, *volume)?;
            Prepared::GaussGreen { field: hf("field", field)?, domain, disc, refine: *refine, absolute: *absolute }
        }
        Check::GreenFirst { u, v, domain, resolution, method, volume, swap } => {
            let domain = dom("domain", domain)?;
            let disc = disc(&domain, *resolution, *method, *volume)?;
            Prepared::GreenFirst { u: sf("u", u)?, v: sf("v", v)?, domain, disc, swap: *swap }
        }
        Check::GreenSecond { u, v, domain, resolution, method, volume } => {
            let domain = dom("domain", domain)?;
            let disc = disc(&domain, *resolution, *method, *volume)?;
            Prepared::GreenSecond { u: sf("u", u)?, v: sf("v", v)?, domain, disc }
        }
        Check::HalfDensity { domain, eps, phi, resolution, method, pairs, pad } => {
            check_ladder("eps", eps)?;
            check_positive("resolution", *resolution)?;
            check_positive("pairs", *pairs)?;
            if let PhiSpec::Tent { center, radius } = phi {
                point_len("phi.center", center, q)?;
                if !(*radius > 0.0) {
                    return Err(invalid("phi.radius", "must be positive"));
                }
            }
            let mut domain = dom("domain", domain)?;
            if *pad > 0.0 {
                domain = domain.padded(*pad)?;
            }
            Prepared::HalfDensity {
                m: mollifier(s, defaults, alg)?,
                domain,
                eps: eps.clone(),
                phi: phi.clone(),
                resolution: *resolution,
                method: *method,
                pairs: *pairs,
            }
        }
        Check::TraceLocality { field, first, second, patch, resolution, align_tol, normal_tol } => {
            check_positive("resolution", *resolution)?;
            if patch.axis == 0 || patch.axis > q {
                return Err(invalid("patch.axis", format!("must be in 1..={q}")));
            }
            Prepared::TraceLocality {
                field: hf("field", field)?,
                first: dom("first", first)?,
                second: dom("second", second)?,
                patch: *patch,
                resolution: *resolution,
                align_tol: *align_tol,
                normal_tol: *normal_tol,
            }
        }
        Check::TangentLocality { field, r, half_width, resolution, align_tol, normal_tol } => {
            check_positive("resolution", *resolution)?;
            if !(*r > 0.0 && *half_width > 0.0 && *half_width < *r) {
                return Err(invalid("half_width", "need 0 < half_width < r"));
            }
            let (first, second) = tangent_patch_pair(q, *r, *half_width)?;
            let patch = PatchSpec { axis: 1, value: *r, tol: f64::INFINITY };
            Prepared::TraceLocality {
                field: hf("field", field)?,
                first,
                second,
                patch,
                resolution: *resolution,
                align_tol: *align_tol,
                normal_tol: *normal_tol,
            }
        }
        Check::TraceBound { field, domain, resolution, method, volume } => {
            let domain = dom("domain", domain)?;
            let disc = disc(&domain, *resolution, *method, *volume)?;
            Prepared::TraceBound { field: hf("field", field)?, domain, disc }
        }
        Check::DivergenceFree { field, bumps, delta, volume } => {
            if q < 3 {
                return Err(invalid("field", "needs at least three coordinates"));
            }
            check_positive("volume.cells", volume.cells)?;
            if bumps.is_empty() {
                return Err(invalid("bumps", "at least one bump"));
            }
            let mut built = Vec::with_capacity(bumps.len());
            for (i, b) in bumps.iter().enumerate() {
                if !(b.offset > 0.0) {
                    return Err(invalid(&format!("bumps[{i}].offset"), "must be positive"));
                }
                let axes = b.axes.clone().unwrap_or_else(|| vec![b.offset / 4.0; q]);
                point_len(&format!("bumps[{i}].axes"), &axes, q)?;
                let mut center = vec![0.0; q];
                center[0] = b.offset / 2.0;
                center[1] = -b.offset / 2.0;
                // the rotation acts in the (x1, x2) plane, so the planar half-width is the larger semi-axis
                let planar = axes[0].max(axes[1]);
                let half: Vec<f64> = (0..q).map(|k| if k < 2 { planar } else { axes[k] }).collect();
                let region = BoxRegion::new(
                    center.iter().zip(&half).map(|(c, h)| c - h).collect(),
                    center.iter().zip(&half).map(|(c, h)| c + h).collect(),
                )?;
                let phi = smooth_bump(center, axes, b.angle).with_name(format!("bump(offset={}, angle={})", b.offset, b.angle));
                built.push((phi, QuadratureSpec::tensor(region, volume.cells, volume.order)));
            }
            Prepared::DivergenceFree { field: hf("field", field)?, bumps: built, delta: *delta }
        }
        Check::Commutation { f, j, point, eps, scheme, volume, h_ratio, region } => {
            point_len("point", point, q)?;
            check_positive("volume.cells", volume.cells)?;
            if *j == 0 || *j > alg.rank() {
                return Err(invalid("j", format!("must be in 1..={}", alg.rank())));
            }
            if !(*eps > 0.0) {
                return Err(invalid("eps", "must be positive"));
            }
            let h = match (h_ratio, scheme) {
                (Some(r), _) if *r > 0.0 => eps / r,
                (Some(_), _) => return Err(invalid("h_ratio", "must be positive")),
                (None, CommutationScheme::FixedGrid) => eps / 64.0,
                (None, CommutationScheme::Centered) => f64::fd_step(),
            };
            let region = match region {
                Some(r) => Some(BoxRegion::new(r.lower.clone(), r.upper.clone()).map_err(|e| invalid("region", e))?),
                None => None,
            };
            Prepared::Commutation {
                m: mollifier(s, defaults, alg)?,
                f: sf("f", f)?,
                j: j - 1,
                point: point.clone(),
                eps: *eps,
                scheme: *scheme,
                volume: *volume,
                h,
                region,
            }
        }
        Check::PointwiseLimit { f, point, eps, volume, ref_radius, ref_samples } => {
            point_len("point", point, q)?;
            check_ladder("eps", eps)?;
            check_positive("ref_samples", *ref_samples)?;
            let m = mollifier(s, defaults, alg)?;
            let rule = m.kernel_rule(QuadratureKind::TensorGrid { cells: volume.cells, order: volume.order })?;
            Prepared::PointwiseLimit {
                m,
                f: sf("f", f)?,
                point: point.clone(),
                eps: eps.clone(),
                rule,
                ref_radius: *ref_radius,
                ref_samples: *ref_samples,
            }
        }
        Check::TotalVariation { domain, eps, region, resolution, samples, min_ratio } => {
            if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
                return Err(invalid("eps", "values must be positive"));
            }
            check_positive("resolution", *resolution)?;
            check_positive("samples", *samples)?;
            let domain = dom("domain", domain)?;
            let region = match region {
                Some(r) => BoxRegion::new(r.lower.clone(), r.upper.clone()).map_err(|e| invalid("region", e))?,
                None => domain.bbox.clone(),
            };
            Prepared::TotalVariation {
                m: mollifier(s, defaults, alg)?,
                domain,
                eps: eps.clone(),
                region,
                resolution: *resolution,
                samples: *samples,
                min_ratio: *min_ratio,
            }
        }
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_point(rng: &mut impl Rng, q: usize, h: f64) -> Vec<f64> {
    (0..q).map(|_| rng.random_range(-h..h)).collect()
}

fn group_axioms(alg: &StratifiedAlgebra<f64>, samples: usize, seed: u64, tol: f64) -> Vec<GaussGreenReport> {
    let q = alg.dim();
    let mut rng = stream_rng(seed, 0);
    let (mut assoc, mut ident, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    let e = alg.identity();
    for _ in 0..samples {
        let (x, y, z) = (random_point(&mut rng, q, 2.0), random_point(&mut rng, q, 2.0), random_point(&mut rng, q, 2.0));
        assoc = assoc.max(max_abs_diff(&alg.mul(&alg.mul(&x, &y), &z), &alg.mul(&x, &alg.mul(&y, &z))));
        ident = ident.max(max_abs_diff(&alg.mul(&x, &e), &x)).max(max_abs_diff(&alg.mul(&e, &x), &x));
        inv = inv.max(max_abs_diff(&alg.mul(&x, &alg.inv(&x)), &e)).max(max_abs_diff(&alg.mul(&alg.inv(&x), &x), &e));
    }
    [("associativity", assoc), ("identity", ident), ("inverse", inv)]
        .into_iter()
        .map(|(what, r)| GaussGreenReport::absolute(format!("{what}[{}]", alg.name()), r, 0.0, tol).with_meta("samples", samples))
        .collect()
}

fn dilation(alg: &Alg, samples: usize, haar_samples: usize, r: f64, seed: u64, tol: f64) -> Result<Vec<GaussGreenReport>, CliError> {
    let q = alg.dim();
    let norm = HomogeneousNorm::gauge(alg.clone());
    let mut rng = stream_rng(seed, 0);
    let (mut hom, mut auto) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let (x, y) = (random_point(&mut rng, q, 2.0), random_point(&mut rng, q, 2.0));
        let s: f64 = rng.random_range(0.1..4.0);
        let d = norm.dist(&x, &y);
        hom = hom.max((norm.dist(&alg.dil(s, &x), &alg.dil(s, &y)) - s * d).abs() / d.max(1.0) / s.max(1.0));
        auto = auto.max(max_abs_diff(&alg.dil(s, &alg.mul(&x, &y)), &alg.mul(&alg.dil(s, &x), &alg.dil(s, &y))));
    }
    let ball = |radius: f64, stream: u64| -> Result<(f64, f64), CliError> {
        let hw = norm.ball_half_widths(radius);
        let region = BoxRegion::new(hw.iter().map(|h| -h).collect(), hw.to_vec())?;
        Ok(haar_volume_mc(&region, |p| norm.norm(p) < radius, haar_samples, split_seed(seed, stream))?)
    };
    let (v1, s1) = ball(1.0, 1)?;
    let (vr, sr) = ball(r, 2)?;
    let ratio = vr / v1;
    let se = ratio * ((s1 / v1).powi(2) + (sr / vr).powi(2)).sqrt();
    let expected = r.powi(alg.hom_dimension() as i32);
    let mut haar = GaussGreenReport::new(format!("haar_scaling[{} r={r}]", alg.name()), ratio, expected, 3.0 * se / expected)
        .with_meta("std_error", format!("{se:.4e}"))
        .with_meta("samples", haar_samples)
        .with_meta("Q", alg.hom_dimension());
    haar.pass = (ratio - expected).abs() <= 3.0 * se;
    Ok(vec![
        GaussGreenReport::absolute(format!("distance_homogeneity[{}]", alg.name()), hom, 0.0, tol).with_meta("samples", samples),
        GaussGreenReport::absolute(format!("dilation_homomorphism[{}]", alg.name()), auto, 0.0, tol).with_meta("samples", samples),
        haar,
    ])
}

fn frame(alg: &Alg, samples: usize, seed: u64, tol: f64) -> Vec<GaussGreenReport> {
    let q = alg.dim();
    let mut rng = stream_rng(seed, 0);
    let f = move |x: &[f64]| (x[0] - 0.3 * x[q - 1]).sin() + 0.1 * x.iter().map(|v| v * v).sum::<f64>();
    let plain = ScalarField::new("f", f);
    let h = 1e-4;
    let (mut table, mut invariance) = (0.0f64, 0.0f64);
    let mut symbolic = 0.0f64;
    for _ in 0..samples {
        let p = random_point(&mut rng, q, 2.0);
        let g = random_point(&mut rng, q, 2.0);
        let fm = alg.frame_coefficients(&p);
        for j in 0..alg.rank() {
            // X_j f(p) = d/dt f(p · t e_j) against the table row
            let fd = x_derivative(alg, &plain, j, &p, h);
            let grad: Vec<f64> = (0..q)
                .map(|i| {
                    let (mut a, mut b) = (p.clone(), p.clone());
                    a[i] += h;
                    b[i] -= h;
                    (f(&a) - f(&b)) / (2.0 * h)
                })
                .collect();
            let row: f64 = fm.row(j).iter().zip(&grad).map(|(c, d)| c * d).sum();
            table = table.max((row - fd).abs() / fd.abs().max(1.0));
            let a2 = alg.clone();
            let gg = g.clone();
            let shifted = ScalarField::new("f∘L_g", move |x: &[f64]| f(&a2.mul(&gg, x)));
            let lhs = x_derivative(alg, &shifted, j, &p, h);
            let rhs = x_derivative(alg, &plain, j, &alg.mul(&g, &p), h);
            invariance = invariance.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
        if alg.name() == "heisenberg1" {
            symbolic = symbolic.max(max_abs_diff(fm.row(0), &[1.0, 0.0, -p[1]])).max(max_abs_diff(fm.row(1), &[0.0, 1.0, p[0]]));
        }
    }
    let mut out = vec![
        GaussGreenReport::absolute(format!("frame_table[{}]", alg.name()), table, 0.0, tol).with_meta("samples", samples),
        GaussGreenReport::absolute(format!("left_invariance[{}]", alg.name()), invariance, 0.0, tol).with_meta("samples", samples),
    ];
    if alg.name() == "heisenberg1" {
        out.push(GaussGreenReport::absolute("frame_rows[(1,0,-y),(0,1,x)]", symbolic, 0.0, 0.0).with_meta("samples", samples));
    }
    out
}

fn phi_fn(phi: &PhiSpec) -> impl Fn(&BoundarySample<f64>) -> f64 + Sync + '_ {
    move |s: &BoundarySample<f64>| match phi {
        PhiSpec::One => 1.0,
        PhiSpec::Tent { center, radius } => {
            let d = s.point.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            (1.0 - d / radius).max(0.0)
        }
    }
}

/// Runs a prepared scenario; `seed` is already specific to the scenario.
pub fn execute(alg: &Alg, p: &Prepared, seed: u64, tol: f64) -> Result<Vec<GaussGreenReport>, CliError> {
    Ok(match p {
        Prepared::GroupAxioms { samples } => group_axioms(alg, *samples, seed, tol),
        Prepared::Dilation { samples, haar_samples, r } => dilation(alg, *samples, *haar_samples, *r, seed, tol)?,
        Prepared::Frame { samples } => frame(alg, *samples, seed, tol),
        Prepared::GaussGreen { field, domain, disc, refine, absolute } => {
            let judge = |r: GaussGreenReport| if *absolute { r.into_absolute() } else { r };
            let r = judge(verify_gauss_green(alg, field, domain, disc, tol)?);
            if *refine {
                let fine = judge(verify_gauss_green(alg, field, domain, &disc.refined(), tol)?);
                let ok = refinement_ok(&r, &fine);
                vec![r, fine.require("refinement_ok", ok)]
            } else {
                vec![r]
            }
        }
        Prepared::GreenFirst { u, v, domain, disc, swap } => {
            let r = verify_green_first(alg, u, v, domain, disc, tol)?;
            if *swap {
                let rev = verify_green_first(alg, v, u, domain, disc, tol)?;
                let second = verify_green_second(alg, u, v, domain, disc, tol)?;
                let combined = r.signed_residual() - rev.signed_residual();
                let swap = GaussGreenReport::absolute(
                    format!("green_swap[u={}, v={}]", u.name(), v.name()),
                    combined,
                    second.signed_residual(),
                    1e-9 * (1.0 + second.lhs.abs()),
                );
                vec![r, rev, second, swap]
            } else {
                vec![r]
            }
        }
        Prepared::GreenSecond { u, v, domain, disc } => vec![verify_green_second(alg, u, v, domain, disc, tol)?],
        Prepared::HalfDensity { m, domain, eps, phi, resolution, method, pairs } => {
            verify_half_density(m, domain, eps, phi_fn(phi), *resolution, *method, *pairs, seed)?.to_reports()
        }
        Prepared::TraceLocality { field, first, second, patch, resolution, align_tol, normal_tol } => {
            let (axis, value, ptol) = (patch.axis - 1, patch.value, patch.tol);
            let pred = move |x: &[f64]| (x[axis] - value).abs() <= ptol;
            let mut r = verify_trace_locality(alg, field, first, second, pred, *resolution, *align_tol, *normal_tol, tol)?;
            r.tolerance = tol;
            vec![r.to_report()]
        }
        Prepared::TraceBound { field, domain, disc } => vec![verify_trace_bound(alg, field, domain, disc)?],
        Prepared::DivergenceFree { field, bumps, delta } => verify_divergence_free_example(alg, field, bumps, *delta, tol)?,
        Prepared::Commutation { m, f, j, point, eps, scheme, volume, h, region } => {
            vec![verify_commutation(m, *eps, f, *j, point, *scheme, (volume.cells, volume.order), *h, region.as_ref(), tol)?]
        }
        Prepared::PointwiseLimit { m, f, point, eps, rule, ref_radius, ref_samples } => {
            vec![verify_pointwise_limit(m, f, point, eps, rule, *ref_radius, *ref_samples, seed, tol)?]
        }
        Prepared::TotalVariation { m, domain, eps, region, resolution, samples, min_ratio } => {
            verify_total_variation(m, eps, domain, region, *resolution, *samples, seed, tol, *min_ratio)?
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub reports: Vec<GaussGreenReport>,
    pub error: Option<String>,
    pub elapsed_ms: u128,
}

impl ScenarioOutcome {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub seed: u64,
    pub scenarios: Vec<ScenarioOutcome>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.scenarios.iter().all(ScenarioOutcome::pass)
    }
}

/// Stable 64-bit FNV-1a hash; scenario seeds depend on names, not positions.
pub fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn scenario_seed(master: u64, name: &str) -> u64 {
    split_seed(master, name_hash(name))
}

fn run_one(cfg: &Config, s: &ScenarioConfig) -> ScenarioOutcome {
    let start = Instant::now();
    let seed = scenario_seed(cfg.seed, &s.name);
    let result = (|| {
        let alg = Arc::new(s.algebra(&cfg.defaults).build()?);
        let prepared = prepare(s, &cfg.defaults, &alg)?;
        execute(&alg, &prepared, seed, s.tolerance)
    })();
    let elapsed_ms = start.elapsed().as_millis();
    let (reports, error) = match result {
        Ok(r) => (r, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    log::info!("{} finished in {elapsed_ms} ms", s.name);
    ScenarioOutcome { name: s.name.clone(), kind: s.check.kind().into(), seed, reports, error, elapsed_ms }
}

/// Runs the scenarios of `suite` (or the scenario named `suite`) in parallel; the
/// outcome order follows the configuration.
pub fn run_suite(cfg: &Config, suite: &str) -> Result<SuiteOutcome, CliError> {
    cfg.validate()?;
    let members = cfg.suite_members(suite);
    if members.is_empty() {
        return Err(CliError::UnknownSuite(suite.into()));
    }
    let scenarios: Vec<ScenarioOutcome> = members.par_iter().map(|&i| run_one(cfg, &cfg.scenarios[i])).collect();
    Ok(SuiteOutcome { suite: suite.into(), seed: cfg.seed, scenarios })
}
