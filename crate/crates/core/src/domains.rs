//! Level-set domains `E = {level < 0}`, boundary sampling by analytic charts or a
//! marching-tetrahedra mesh, horizontal normals and h-perimeter quadrature.
//!
//! A boundary sample carries a Euclidean surface weight; the h-perimeter measure is
//! `|π_H N_E| dH^{q-1}`, with `π_H N_E = (⟨N_E, X_1⟩, …, ⟨N_E, X_m⟩)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::algebra::{Coords, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hcalc::{ScalarField, Smoothness};
use crate::mesh::march_tetrahedra;
use crate::metric::BoxRegion;
use crate::quadrature::{composite_rule, QuadratureKind, QuadratureSpec};
use crate::scalar::{norm2, Real};

/// Density below which a boundary point is treated as characteristic.
pub const CHARACTERISTIC_THRESHOLD: f64 = 1e-10;
/// Smallest admissible `|∇ level|` at a boundary sample.
pub const REGULARITY_THRESHOLD: f64 = 1e-8;
/// Sub-cells per axis used in cells cut by the boundary.
pub const CUT_CELL_REFINE: usize = 6;

/// Point of a boundary chart: position, unit outward normal and the area element
/// with respect to the parameter measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint<T> {
    pub point: Coords<T>,
    pub normal: Coords<T>,
    pub area: T,
}

pub type ChartFn<T> = Arc<dyn Fn(&[T]) -> ChartPoint<T> + Send + Sync>;

/// Parametrized boundary patch over a box in `R^{q-1}`.
#[derive(Clone)]
pub struct Chart<T> {
    pub name: String,
    pub params: BoxRegion<T>,
    map: ChartFn<T>,
}

impl<T: fmt::Debug> fmt::Debug for Chart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart").field("name", &self.name).field("params", &self.params).finish()
    }
}

impl<T: Real> Chart<T> {
    pub fn new(name: impl Into<String>, params: BoxRegion<T>, map: impl Fn(&[T]) -> ChartPoint<T> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), params, map: Arc::new(map) }
    }

    pub fn eval(&self, u: &[T]) -> ChartPoint<T> {
        (self.map)(u)
    }

    /// Gauss–Legendre nodes with `cells` cells of order 2 per parameter axis.
    pub fn nodes(&self, cells: usize) -> Vec<(Coords<T>, T)> {
        let rules: Vec<Vec<(T, T)>> =
            (0..self.params.dim()).map(|k| composite_rule(self.params.lower()[k], self.params.upper()[k], cells, 2)).collect();
        let total: usize = rules.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; rules.len()];
        for _ in 0..total {
            let u: Coords<T> = idx.iter().zip(&rules).map(|(&i, r)| r[i].0).collect();
            let w = idx.iter().zip(&rules).map(|(&i, r)| r[i].1).fold(T::one(), |a, b| a * b);
            out.push((u, w));
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < rules[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

/// Implicit domain `E = {level < 0}` inside a bounding box.
#[derive(Clone)]
pub struct DomainSpec<T> {
    pub name: String,
    pub level: ScalarField<T>,
    pub bbox: BoxRegion<T>,
    pub charts: Vec<Chart<T>>,
    /// `E` is compactly contained in `bbox`.
    pub bounded: bool,
}

impl<T: fmt::Debug> fmt::Debug for DomainSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainSpec")
            .field("name", &self.name)
            .field("bbox", &self.bbox)
            .field("charts", &self.charts.len())
            .field("bounded", &self.bounded)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMethod {
    /// Charts when the domain has them, else the mesh.
    #[default]
    Auto,
    Mesh,
    Chart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample<T> {
    pub point: Coords<T>,
    /// Unit outward Euclidean normal `N_E`.
    pub normal: Coords<T>,
    /// `⟨N_E, X_j(point)⟩` for `j = 1..m`.
    pub horizontal_coeffs: Coords<T>,
    /// `|π_H N_E|`.
    pub density: T,
    /// Euclidean `H^{q-1}` weight.
    pub weight: T,
}

impl<T: Real> BoundarySample<T> {
    pub fn new(alg: &StratifiedAlgebra<T>, point: Coords<T>, normal: Coords<T>, weight: T) -> Self {
        let horizontal_coeffs = alg.frame_coefficients(&point).project(&normal);
        let density = norm2(&horizontal_coeffs);
        Self { point, normal, horizontal_coeffs, density, weight }
    }

    /// Horizontal unit normal, `None` at characteristic points.
    pub fn nu(&self) -> Option<Coords<T>> {
        horizontal_normal(self, T::lit(CHARACTERISTIC_THRESHOLD)).0
    }

    pub fn is_characteristic(&self) -> bool {
        self.density < T::lit(CHARACTERISTIC_THRESHOLD)
    }
}

/// `(ν_E, |π_H N_E|)`; `ν_E` is `None` when the density is below `threshold`.
pub fn horizontal_normal<T: Real>(s: &BoundarySample<T>, threshold: T) -> (Option<Coords<T>>, T) {
    if s.density < threshold {
        return (None, s.density);
    }
    (Some(s.horizontal_coeffs.iter().map(|&c| c / s.density).collect()), s.density)
}

fn unit<T: Real>(v: Coords<T>) -> Coords<T> {
    let n = norm2(&v);
    v.into_iter().map(|x| x / n).collect()
}

impl<T: Real> DomainSpec<T> {
    pub fn new(name: impl Into<String>, level: ScalarField<T>, bbox: BoxRegion<T>) -> Self {
        Self { name: name.into(), level, bbox, charts: Vec::new(), bounded: true }
    }

    pub fn with_charts(mut self, charts: Vec<Chart<T>>) -> Self {
        self.charts = charts;
        self
    }

    /// Bounding box grown by `extra` on every side.
    pub fn padded(mut self, extra: T) -> Result<Self> {
        let lower = self.bbox.lower().iter().map(|&x| x - extra).collect();
        let upper = self.bbox.upper().iter().map(|&x| x + extra).collect();
        self.bbox = BoxRegion::new(lower, upper)?;
        Ok(self)
    }

    pub fn unbounded(mut self) -> Self {
        self.bounded = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn contains(&self, p: &[T]) -> bool {
        self.level.eval(p) < T::zero()
    }

    /// Custom domain from a level-set expression.
    pub fn from_expression(alg: &Arc<StratifiedAlgebra<T>>, src: &str, bbox: BoxRegion<T>) -> Result<Self> {
        if bbox.dim() != alg.dim() {
            return Err(Error::Shape { expected: alg.dim(), got: bbox.dim() });
        }
        let level = ScalarField::from_expression(alg, src)?;
        Ok(Self::new(format!("level({src})"), level, bbox))
    }

    /// `δ_λ E = {x : level(δ_{1/λ} x) < 0}`, charts transported by `δ_λ`.
    pub fn dilated(&self, alg: &Arc<StratifiedAlgebra<T>>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::Domain(format!("dilation factor must be positive, got {lambda}")));
        }
        let scale: Coords<T> = alg.degrees().iter().map(|&d| lambda.powi(d as i32)).collect();
        let jac = scale.iter().fold(T::one(), |a, &b| a * b);
        let (a1, a2) = (alg.clone(), alg.clone());
        let inner = self.level.clone();
        let level = {
            let inner = inner.clone();
            move |p: &[T]| inner.eval(&a1.dil(T::one() / lambda, p))
        };
        let grad = {
            let scale = scale.clone();
            move |p: &[T]| {
                let g = inner.euclidean_gradient_at(&a2.dil(T::one() / lambda, p));
                g.iter().zip(&scale).map(|(&gi, &s)| gi / s).collect::<Coords<T>>()
            }
        };
        let charts = self
            .charts
            .iter()
            .map(|c| {
                let c = c.clone();
                let scale = scale.clone();
                Chart::new(format!("{}@{lambda}", c.name), c.params.clone(), move |u: &[T]| {
                    let cp = c.eval(u);
                    let point: Coords<T> = cp.point.iter().zip(&scale).map(|(&x, &s)| x * s).collect();
                    // Nanson: n' dA' = det(Λ) Λ^{-T} n dA
                    let n: Coords<T> = cp.normal.iter().zip(&scale).map(|(&x, &s)| x / s).collect();
                    let len = norm2(&n);
                    ChartPoint { point, normal: n.into_iter().map(|x| x / len).collect(), area: cp.area * jac * len }
                })
            })
            .collect();
        Ok(Self {
            name: format!("dilate({}, {lambda})", self.name),
            level: ScalarField::new("", level).with_euclidean_gradient(grad).with_name(format!("{}∘δ", self.level.name())),
            bbox: self.bbox.dilated(alg, lambda),
            charts,
            bounded: self.bounded,
        })
    }

    /// Complement of `E` in the bounding box: level and normals negated.
    pub fn complement(&self) -> Self {
        let inner = self.level.clone();
        let inner2 = self.level.clone();
        let level = ScalarField::new(format!("-({})", self.level.name()), move |p: &[T]| -inner.eval(p))
            .with_euclidean_gradient(move |p: &[T]| inner2.euclidean_gradient_at(p).into_iter().map(|x| -x).collect());
        let charts = self
            .charts
            .iter()
            .map(|c| {
                let c = c.clone();
                Chart::new(format!("-{}", c.name), c.params.clone(), move |u: &[T]| {
                    let mut cp = c.eval(u);
                    cp.normal.iter_mut().for_each(|x| *x = -*x);
                    cp
                })
            })
            .collect();
        Self { name: format!("complement({})", self.name), level, bbox: self.bbox.clone(), charts, bounded: false }
    }
}

/// Euclidean ball `|x - center| < r`, with cubed-sphere charts.
pub fn euclidean_ball<T: Real>(center: &[T], r: T) -> Result<DomainSpec<T>> {
    let q = center.len();
    if q < 2 || !(r > T::zero()) {
        return Err(Error::Domain("euclidean_ball needs q >= 2 and r > 0".into()));
    }
    let c: Coords<T> = SmallVec::from_slice(center);
    let (c1, c2) = (c.clone(), c.clone());
    let level = ScalarField::new(format!("|x - c| - {r}"), move |p: &[T]| {
        norm2(&p.iter().zip(&c1).map(|(&x, &y)| x - y).collect::<Coords<T>>()) - r
    })
    .with_euclidean_gradient(move |p: &[T]| unit(p.iter().zip(&c2).map(|(&x, &y)| x - y).collect()));
    let margin = T::lit(1.1) * r;
    // slight asymmetry keeps mesh vertices off the sphere's symmetry planes
    let lower: Vec<T> = c.iter().map(|&x| x - margin - T::lit(0.0123) * r).collect();
    let upper: Vec<T> = c.iter().map(|&x| x + margin + T::lit(0.0071) * r).collect();
    let params = BoxRegion::cube(q - 1, T::one())?;
    let mut charts = Vec::with_capacity(2 * q);
    for axis in 0..q {
        for sign in [T::one(), -T::one()] {
            let c = c.clone();
            charts.push(Chart::new(
                format!("face{}{}", if sign > T::zero() { "+" } else { "-" }, axis + 1),
                params.clone(),
                move |u: &[T]| {
                    let mut w: Coords<T> = SmallVec::with_capacity(q);
                    w.extend_from_slice(&u[..axis]);
                    w.push(sign);
                    w.extend_from_slice(&u[axis..]);
                    let len = norm2(&w);
                    let normal: Coords<T> = w.iter().map(|&x| x / len).collect();
                    let point = normal.iter().zip(&c).map(|(&n, &ci)| ci + r * n).collect();
                    // gnomonic area element r^{q-1} / |w|^q
                    let area = r.powi(q as i32 - 1) / len.powi(q as i32);
                    ChartPoint { point, normal, area }
                },
            ));
        }
    }
    Ok(DomainSpec::new(format!("euclidean_ball(r={r})"), level, BoxRegion::new(lower, upper)?).with_charts(charts))
}

/// Korányi-type gauge ball `((|x_h|²)² + c |x_v|²)^{1/4} < r`, with `x_h` the first
/// layer and `x_v` the remaining coordinates.
pub fn koranyi_ball<T: Real>(alg: &StratifiedAlgebra<T>, r: T, c: T) -> Result<DomainSpec<T>> {
    if !(r > T::zero() && c > T::zero()) {
        return Err(Error::Domain("koranyi_ball needs r > 0 and c > 0".into()));
    }
    let m = alg.rank();
    let q = alg.dim();
    let split = move |p: &[T]| {
        let h: T = p[..m].iter().map(|&x| x * x).sum();
        let v: T = p[m..].iter().map(|&x| x * x).sum();
        (h, v)
    };
    let level = ScalarField::new(format!("koranyi(c={c}) - {r}"), move |p: &[T]| {
        let (h, v) = split(p);
        (h * h + c * v).powf(T::lit(0.25)) - r
    })
    .with_euclidean_gradient(move |p: &[T]| {
        let (h, v) = split(p);
        let a = h * h + c * v;
        if a == T::zero() {
            return SmallVec::from_elem(T::zero(), p.len());
        }
        let k = T::lit(0.25) * a.powf(T::lit(-0.75));
        p.iter().enumerate().map(|(i, &x)| if i < m { k * T::lit(4.0) * h * x } else { k * T::lit(2.0) * c * x }).collect()
    })
    .with_smoothness(Smoothness::C1);
    let zh = r * r / c.sqrt();
    let lower: Vec<T> = (0..q).map(|i| if i < m { -T::lit(1.12) * r } else { -T::lit(1.13) * zh }).collect();
    let upper: Vec<T> = (0..q).map(|i| if i < m { T::lit(1.11) * r } else { T::lit(1.1) * zh }).collect();
    Ok(DomainSpec::new(format!("koranyi_ball(r={r}, c={c})"), level, BoxRegion::new(lower, upper)?))
}

/// Half-space `{sign · (x_axis − offset) < 0}` seen through the window `window`; the
/// single chart is the interface inside the window.
pub fn half_space<T: Real>(axis: usize, offset: T, sign: T, window: BoxRegion<T>) -> Result<DomainSpec<T>> {
    let q = window.dim();
    if axis >= q {
        return Err(Error::Domain(format!("half_space axis {} out of range 1..={q}", axis + 1)));
    }
    if !(window.lower()[axis] < offset && offset < window.upper()[axis]) {
        return Err(Error::EmptyBoundary(format!("half-space interface x{} = {offset} misses the window", axis + 1)));
    }
    let s = if sign < T::zero() { -T::one() } else { T::one() };
    let mut n: Coords<T> = SmallVec::from_elem(T::zero(), q);
    n[axis] = s;
    let n2 = n.clone();
    let level = ScalarField::new(format!("{s}*(x{} - {offset})", axis + 1), move |p: &[T]| s * (p[axis] - offset))
        .with_euclidean_gradient(move |_| n2.clone());
    let (plo, phi): (Vec<T>, Vec<T>) = (0..q).filter(|&k| k != axis).map(|k| (window.lower()[k], window.upper()[k])).unzip();
    let chart = Chart::new("interface", BoxRegion::new(plo, phi)?, move |u: &[T]| {
        let mut point: Coords<T> = SmallVec::with_capacity(q);
        point.extend_from_slice(&u[..axis]);
        point.push(offset);
        point.extend_from_slice(&u[axis..]);
        ChartPoint { point, normal: n.clone(), area: T::one() }
    });
    Ok(DomainSpec::new(format!("half_space(x{} {} {offset})", axis + 1, if s > T::zero() { "<" } else { ">" }), level, window)
        .with_charts(vec![chart])
        .unbounded())
}

/// Axis-aligned box `lower < x < upper` with one chart per face.
pub fn box_domain<T: Real>(lower: &[T], upper: &[T]) -> Result<DomainSpec<T>> {
    let inner = BoxRegion::new(lower.to_vec(), upper.to_vec())?;
    let q = inner.dim();
    let c: Coords<T> = (0..q).map(|k| T::lit(0.5) * (lower[k] + upper[k])).collect();
    let h: Coords<T> = (0..q).map(|k| T::lit(0.5) * inner.width(k)).collect();
    let (c1, h1) = (c.clone(), h.clone());
    let level = ScalarField::new("box", move |p: &[T]| {
        p.iter().zip(c1.iter().zip(&h1)).map(|(&x, (&ci, &hi))| (x - ci).abs() - hi).fold(T::neg_infinity(), T::max)
    })
    .with_euclidean_gradient(move |p: &[T]| {
        let (mut best, mut arg) = (T::neg_infinity(), 0);
        for (k, (&x, (&ci, &hi))) in p.iter().zip(c.iter().zip(&h)).enumerate() {
            let v = (x - ci).abs() - hi;
            if v > best {
                best = v;
                arg = k;
            }
        }
        let mut g: Coords<T> = SmallVec::from_elem(T::zero(), p.len());
        g[arg] = if p[arg] >= c[arg] { T::one() } else { -T::one() };
        g
    })
    .with_smoothness(Smoothness::Lipschitz);
    let mut charts = Vec::with_capacity(2 * q);
    for axis in 0..q {
        for (side, s) in [(upper[axis], T::one()), (lower[axis], -T::one())] {
            let (plo, phi): (Vec<T>, Vec<T>) = (0..q).filter(|&k| k != axis).map(|k| (lower[k], upper[k])).unzip();
            charts.push(Chart::new(
                format!("face{}{}", if s > T::zero() { "+" } else { "-" }, axis + 1),
                BoxRegion::new(plo, phi)?,
                move |u: &[T]| {
                    let mut point: Coords<T> = SmallVec::with_capacity(q);
                    point.extend_from_slice(&u[..axis]);
                    point.push(side);
                    point.extend_from_slice(&u[axis..]);
                    let mut normal: Coords<T> = SmallVec::from_elem(T::zero(), q);
                    normal[axis] = s;
                    ChartPoint { point, normal, area: T::one() }
                },
            ));
        }
    }
    let pad: Vec<T> = (0..q).map(|k| T::lit(0.1) * inner.width(k)).collect();
    let bbox = BoxRegion::new((0..q).map(|k| lower[k] - pad[k]).collect(), (0..q).map(|k| upper[k] + pad[k] * T::lit(0.93)).collect())?;
    Ok(DomainSpec::new("box", level, bbox).with_charts(charts))
}

/// Boundary samples of `d`. Charts use `max(1, resolution / 2)` cells of order 2 per
/// parameter axis; the mesh uses `resolution³` cells and projects each triangle
/// centroid onto the level set by one Newton step.
pub fn sample_boundary<T: Real>(
    alg: &StratifiedAlgebra<T>,
    d: &DomainSpec<T>,
    resolution: usize,
    method: BoundaryMethod,
) -> Result<Vec<BoundarySample<T>>> {
    if resolution == 0 {
        return Err(Error::Domain("boundary resolution must be positive".into()));
    }
    if d.dim() != alg.dim() {
        return Err(Error::Shape { expected: alg.dim(), got: d.dim() });
    }
    let use_charts = match method {
        BoundaryMethod::Chart if d.charts.is_empty() => return Err(Error::Domain(format!("domain `{}` has no analytic charts", d.name))),
        BoundaryMethod::Chart => true,
        BoundaryMethod::Mesh => false,
        BoundaryMethod::Auto => !d.charts.is_empty(),
    };
    let samples = if use_charts {
        let cells = (resolution / 2).max(1);
        let mut out = Vec::new();
        for chart in &d.charts {
            let nodes = chart.nodes(cells);
            let part: Vec<BoundarySample<T>> = nodes
                .par_iter()
                .map(|(u, w)| {
                    let cp = chart.eval(u);
                    BoundarySample::new(alg, cp.point, cp.normal, *w * cp.area)
                })
                .collect();
            out.extend(part);
        }
        out
    } else {
        if d.dim() != 3 {
            return Err(Error::Domain(format!("domain `{}` has no charts and meshing needs q = 3 (got q = {})", d.name, d.dim())));
        }
        let level = d.level.value_fn().clone();
        let tris = march_tetrahedra(&|p: &[T]| level(p), &d.bbox, resolution);
        let project: Vec<Result<BoundarySample<T>>> = tris
            .par_iter()
            .map(|t| {
                let mut p: Coords<T> = SmallVec::from_slice(&t.centroid);
                let g = d.level.euclidean_gradient_at(&p);
                let gn = norm2(&g);
                if gn >= T::lit(REGULARITY_THRESHOLD) {
                    let step = d.level.eval(&p) / (gn * gn);
                    for (x, &gi) in p.iter_mut().zip(&g) {
                        *x -= step * gi;
                    }
                }
                let g = d.level.euclidean_gradient_at(&p);
                let gn = norm2(&g);
                if !(gn >= T::lit(REGULARITY_THRESHOLD)) {
                    return Err(Error::NonRegular {
                        domain: d.name.clone(),
                        grad_norm: gn.to_f64_lossy(),
                        point: p.iter().map(|x| x.to_f64_lossy()).collect(),
                    });
                }
                let normal = g.iter().map(|&x| x / gn).collect();
                Ok(BoundarySample::new(alg, p, normal, t.area))
            })
            .collect();
        project.into_iter().collect::<Result<Vec<_>>>()?
    };
    if samples.is_empty() {
        return Err(Error::EmptyBoundary(format!("no boundary of `{}` found inside its bounding box", d.name)));
    }
    Ok(samples)
}

/// `Σ density · weight`.
pub fn h_perimeter_of<T: Real>(samples: &[BoundarySample<T>]) -> T {
    samples.iter().map(|s| s.density * s.weight).sum()
}

pub fn h_perimeter<T: Real>(alg: &StratifiedAlgebra<T>, d: &DomainSpec<T>, resolution: usize, method: BoundaryMethod) -> Result<T> {
    Ok(h_perimeter_of(&sample_boundary(alg, d, resolution, method)?))
}

/// `Σ g(s) · density(s) · weight(s)` over non-characteristic samples.
pub fn boundary_integral_of<T: Real, G>(samples: &[BoundarySample<T>], g: G) -> T
where
    G: Fn(&BoundarySample<T>) -> T + Sync,
{
    let parts: Vec<T> = samples
        .par_chunks(1024)
        .map(|chunk| chunk.iter().filter(|s| !s.is_characteristic()).map(|s| g(s) * s.density * s.weight).sum())
        .collect();
    parts.into_iter().sum()
}

pub fn boundary_integral<T: Real, G>(
    alg: &StratifiedAlgebra<T>,
    d: &DomainSpec<T>,
    g: G,
    resolution: usize,
    method: BoundaryMethod,
) -> Result<T>
where
    G: Fn(&BoundarySample<T>) -> T + Sync,
{
    Ok(boundary_integral_of(&sample_boundary(alg, d, resolution, method)?, g))
}

/// `∫_{region} χ_E f dμ`. Tensor grids refine cells whose corners straddle the
/// boundary into `CUT_CELL_REFINE^q` midpoint sub-cells.
pub fn volume_integral<T: Real, F>(d: &DomainSpec<T>, f: F, quad: &QuadratureSpec<T>) -> Result<T>
where
    F: Fn(&[T]) -> T + Sync,
{
    quad.validate()?;
    let region = &quad.region;
    if region.dim() != d.dim() {
        return Err(Error::Shape { expected: d.dim(), got: region.dim() });
    }
    let (cells, order) = match quad.kind {
        QuadratureKind::MonteCarlo { .. } => {
            return quad.integrate(|p| if d.contains(p) { f(p) } else { T::zero() });
        }
        QuadratureKind::TensorGrid { cells, order } => (cells, order),
    };
    let q = region.dim();
    let h: Vec<T> = (0..q).map(|k| region.width(k) / T::from_usize_lossy(cells)).collect();
    let (gx, gw) = crate::quadrature::gauss_legendre(order);
    let level = |p: &[T]| d.level.eval(p);
    let r = CUT_CELL_REFINE;
    let per_slab: Vec<T> = (0..cells)
        .into_par_iter()
        .map(|i0| {
            let mut acc = T::zero();
            let mut idx = vec![0usize; q];
            idx[0] = i0;
            let mut p = vec![T::zero(); q];
            let rest = cells.pow(q as u32 - 1);
            for n in 0..rest {
                let mut rem = n;
                for k in (1..q).rev() {
                    idx[k] = rem % cells;
                    rem /= cells;
                }
                let lo: Vec<T> = (0..q).map(|k| region.lower()[k] + T::from_usize_lossy(idx[k]) * h[k]).collect();
                let mut inside = 0usize;
                for corner in 0..1usize << q {
                    for k in 0..q {
                        p[k] = lo[k] + if corner >> k & 1 == 1 { h[k] } else { T::zero() };
                    }
                    if level(&p) <= T::zero() {
                        inside += 1;
                    }
                }
                if inside == 0 {
                    continue;
                }
                if inside == 1 << q {
                    let total = order.pow(q as u32);
                    for m in 0..total {
                        let mut mm = m;
                        let mut w = T::one();
                        for k in 0..q {
                            let a = mm % order;
                            mm /= order;
                            let half = T::lit(0.5) * h[k];
                            p[k] = lo[k] + half + half * T::lit(gx[a]);
                            w *= half * T::lit(gw[a]);
                        }
                        acc += w * f(&p);
                    }
                    continue;
                }
                let dv = h.iter().fold(T::one(), |a, &b| a * b) / T::from_usize_lossy(r.pow(q as u32));
                for m in 0..r.pow(q as u32) {
                    let mut mm = m;
                    for k in 0..q {
                        let a = mm % r;
                        mm /= r;
                        p[k] = lo[k] + (T::from_usize_lossy(a) + T::lit(0.5)) * h[k] / T::from_usize_lossy(r);
                    }
                    if level(&p) < T::zero() {
                        acc += dv * f(&p);
                    }
                }
            }
            acc
        })
        .collect();
    Ok(per_slab.into_iter().sum())
}

/// Domain presets addressable by name from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainPresetSpec {
    EuclideanBall {
        #[serde(default = "one")]
        r: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    KoranyiBall {
        #[serde(default = "one")]
        r: f64,
        #[serde(default = "sixteen")]
        c: f64,
    },
    /// `{sign (x_axis - offset) < 0}` inside the window `[-half_width, half_width]^q`.
    HalfSpace {
        #[serde(default = "one_usize")]
        axis: usize,
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        sign: f64,
        #[serde(default = "one")]
        half_width: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Expr {
        level: String,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}
fn sixteen() -> f64 {
    16.0
}
fn one_usize() -> usize {
    1
}

pub const DOMAIN_PRESETS: &[(&str, &str)] = &[
    ("euclidean_ball", "Euclidean ball |x - center| < r, cubed-sphere charts"),
    ("koranyi_ball", "((|x_h|^2)^2 + c |x_v|^2)^(1/4) < r, mesh only (q = 3)"),
    ("half_space", "sign (x_axis - offset) < 0 in a cube window, planar chart"),
    ("box", "axis-aligned box, one chart per face"),
    ("expr", "custom level set {level < 0} in a bounding box"),
];

impl DomainPresetSpec {
    pub fn build<T: Real>(&self, alg: &Arc<StratifiedAlgebra<T>>) -> Result<DomainSpec<T>> {
        let q = alg.dim();
        let check = |v: &[f64]| if v.len() == q { Ok(()) } else { Err(Error::Shape { expected: q, got: v.len() }) };
        let lits = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        match self {
            Self::EuclideanBall { r, center } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; q]);
                check(&c)?;
                euclidean_ball(&lits(&c), T::lit(*r))
            }
            Self::KoranyiBall { r, c } => koranyi_ball(alg, T::lit(*r), T::lit(*c)),
            Self::HalfSpace { axis, offset, sign, half_width } => {
                if *axis == 0 {
                    return Err(Error::Domain("half_space axis is 1-based".into()));
                }
                half_space(axis - 1, T::lit(*offset), T::lit(*sign), BoxRegion::cube(q, T::lit(*half_width))?)
            }
            Self::Box { lower, upper } => {
                check(lower)?;
                check(upper)?;
                box_domain(&lits(lower), &lits(upper))
            }
            Self::Expr { level, lower, upper } => {
                check(lower)?;
                check(upper)?;
                // parse eagerly so that config errors surface before any sampling
                Expr::parse(level, q)?;
                DomainSpec::from_expression(alg, level, BoxRegion::new(lits(lower), lits(upper))?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg1;
    use std::f64::consts::PI;

    fn h1() -> Arc<StratifiedAlgebra<f64>> {
        Arc::new(heisenberg1())
    }

    #[test]
    fn sphere_area_by_mesh_and_charts() {
        let a = h1();
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let mesh = sample_boundary(&a, &ball, 64, BoundaryMethod::Mesh).unwrap();
        let area: f64 = mesh.iter().map(|s| s.weight).sum();
        assert!((area / (4.0 * PI) - 1.0).abs() < 0.01, "{area}");
        let charts = sample_boundary(&a, &ball, 16, BoundaryMethod::Chart).unwrap();
        let area: f64 = charts.iter().map(|s| s.weight).sum();
        assert!((area / (4.0 * PI) - 1.0).abs() < 1e-6, "{area}");
        for s in mesh.iter().chain(&charts) {
            assert!((norm2(&s.normal) - 1.0).abs() < 1e-10);
            assert!(s.weight > 0.0);
            let bound = (1.0 + s.point[0].powi(2) + s.point[1].powi(2)).sqrt();
            assert!(s.density <= bound + 1e-12);
        }
    }

    #[test]
    fn box_faces_have_exact_weights() {
        let a = h1();
        let b = box_domain(&[-1.0, 0.0, -0.5], [1.0, 0.5, 0.5].as_slice()).unwrap();
        let s = sample_boundary(&a, &b, 4, BoundaryMethod::Auto).unwrap();
        let area: f64 = s.iter().map(|s| s.weight).sum();
        assert!((area - 2.0 * (2.0 * 0.5 + 2.0 * 1.0 + 0.5 * 1.0)).abs() < 1e-13);
    }

    #[test]
    fn normals_at_pole_and_equator() {
        let a = h1();
        let pole = BoundarySample::new(&a, SmallVec::from_slice(&[0.0, 0.0, 1.0]), SmallVec::from_slice(&[0.0, 0.0, 1.0]), 1.0);
        assert_eq!(pole.density, 0.0);
        assert!(pole.nu().is_none());
        let eq = BoundarySample::new(&a, SmallVec::from_slice(&[1.0, 0.0, 0.0]), SmallVec::from_slice(&[1.0, 0.0, 0.0]), 1.0);
        assert_eq!(eq.nu().unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(eq.density, 1.0);
        let hs = half_space(0, 0.0, 1.0, BoxRegion::cube(3, 1.0).unwrap()).unwrap();
        for s in sample_boundary(&a, &hs, 6, BoundaryMethod::Auto).unwrap() {
            assert_eq!(s.nu().unwrap().as_slice(), &[1.0, 0.0]);
            assert_eq!(s.density, 1.0);
        }
        assert!((h_perimeter(&a, &hs, 6, BoundaryMethod::Auto).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn koranyi_mesh_is_stable() {
        let a = h1();
        let k = koranyi_ball(&a, 1.0, 16.0).unwrap();
        let area = |n| sample_boundary(&a, &k, n, BoundaryMethod::Auto).unwrap().iter().map(|s| s.weight).sum::<f64>();
        let (a1, a2) = (area(48), area(96));
        assert!((a1 / a2 - 1.0).abs() < 0.01, "{a1} {a2}");
    }

    #[test]
    fn sphere_h_perimeter_stable_and_characteristic_fraction_vanishes() {
        let a = h1();
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let p1 = h_perimeter(&a, &ball, 32, BoundaryMethod::Mesh).unwrap();
        let p2 = h_perimeter(&a, &ball, 64, BoundaryMethod::Mesh).unwrap();
        assert!((p1 / p2 - 1.0).abs() < 0.01, "{p1} {p2}");
        let frac = |n| {
            let s = sample_boundary(&a, &ball, n, BoundaryMethod::Mesh).unwrap();
            let total: f64 = s.iter().map(|s| s.weight).sum();
            let exact = s.iter().filter(|s| s.is_characteristic()).map(|s| s.weight).sum::<f64>() / total;
            let near = s.iter().filter(|s| s.density < 1.0 / n as f64).map(|s| s.weight).sum::<f64>() / total;
            (exact, near)
        };
        let (e1, n1) = frac(16);
        let (e2, n2) = frac(64);
        assert!(e1 <= 1e-2 && e2 <= 1e-3, "{e1} {e2}");
        assert!(n2 < n1 / 4.0, "{n1} {n2}");
    }

    #[test]
    fn perimeter_scales_under_dilation() {
        let a = h1();
        let ball = euclidean_ball(&[0.1, 0.0, 0.2], 0.8).unwrap();
        let kor = koranyi_ball(&a, 1.0, 16.0).unwrap();
        for d in [ball, kor] {
            let p = h_perimeter(&a, &d, 48, BoundaryMethod::Mesh).unwrap();
            for lambda in [0.5f64, 2.0] {
                let pd = h_perimeter(&a, &d.dilated(&a, lambda).unwrap(), 48, BoundaryMethod::Mesh).unwrap();
                let ratio = pd / p / lambda.powi(3);
                assert!((ratio - 1.0).abs() < 0.02, "{} {lambda} {ratio}", d.name);
            }
        }
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let p = h_perimeter(&a, &ball, 24, BoundaryMethod::Chart).unwrap();
        let pd = h_perimeter(&a, &ball.dilated(&a, 2.0).unwrap(), 24, BoundaryMethod::Chart).unwrap();
        assert!((pd / p - 8.0).abs() < 1e-6);
    }

    #[test]
    fn boundary_integrals() {
        let a = h1();
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let s = sample_boundary(&a, &ball, 32, BoundaryMethod::Chart).unwrap();
        let x1_flux = boundary_integral_of(&s, |s| s.nu().map_or(0.0, |n| n[0]));
        assert!(x1_flux.abs() < 1e-10);
        let odd = boundary_integral_of(&s, |s| s.point[0].powi(3));
        assert!(odd.abs() < 1e-10);
        assert!((boundary_integral_of(&s, |_| 1.0) - h_perimeter_of(&s)).abs() < 1e-10);
    }

    #[test]
    fn volume_integrals() {
        let a = h1();
        let b = box_domain(&[0.0, -1.0, 0.0], &[1.0, 2.0, 2.0]).unwrap();
        // grid aligned with the box faces
        let region = BoxRegion::new(vec![-0.5, -1.5, -1.0], vec![1.5, 2.5, 3.0]).unwrap();
        let quad = QuadratureSpec::tensor(region, 8, 3);
        let v = volume_integral(&b, |p: &[f64]| p[0] * p[0] * p[1] * p[2].powi(3), &quad).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let ball = euclidean_ball(&[0.0; 3], 1.0).unwrap();
        let quad = QuadratureSpec::tensor(ball.bbox.clone(), 48, 2);
        let vol = volume_integral(&ball, |_| 1.0, &quad).unwrap();
        assert!((vol / (4.0 * PI / 3.0) - 1.0).abs() < 1e-3, "{vol}");
        let odd = volume_integral(&ball, |p| p[0], &quad).unwrap();
        assert!(odd.abs() < 1e-3);
        let _ = a;
    }

    #[test]
    fn errors() {
        let a = h1();
        let empty = DomainSpec::from_expression(&a, "x^2 + y^2 + z^2 + 1", BoxRegion::cube(3, 1.0).unwrap()).unwrap();
        assert!(matches!(sample_boundary(&a, &empty, 8, BoundaryMethod::Auto), Err(Error::EmptyBoundary(_))));
        let degenerate = ScalarField::new("x - 0.1", |p: &[f64]| p[0] - 0.1).with_euclidean_gradient(|_| SmallVec::from_elem(0.0, 3));
        let d = DomainSpec::new("degenerate", degenerate, BoxRegion::cube(3, 1.0).unwrap());
        assert!(matches!(sample_boundary(&a, &d, 8, BoundaryMethod::Auto), Err(Error::NonRegular { .. })));
        let ball = euclidean_ball(&[0.0; 5], 1.0).unwrap();
        assert!(sample_boundary(&Arc::new(crate::algebra::heisenberg2()), &ball, 4, BoundaryMethod::Mesh).is_err());
        let spec: DomainPresetSpec = toml::from_str("name = \"euclidean_ball\"\nr = 0.5").unwrap();
        assert!(spec.build(&a).is_ok());
        assert!(toml::from_str::<DomainPresetSpec>("name = \"sphere\"").is_err());
    }
}
