//! Named field registry: serializable specs for scalar and horizontal fields and
//! the built-in examples addressable from configuration files.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::algebra::{Coords, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::hcalc::{HorizontalField, ScalarField, Smoothness};
use crate::metric::{HomogeneousNorm, NormKind};
use crate::poly::Polynomial;
use crate::scalar::Real;

/// Monomial `coeff · Π x_i^{e_i}`.
pub type Monomial = (f64, Vec<u8>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum HorizontalFieldSpec {
    /// `X_index` (1-based).
    Frame { index: usize },
    /// `sin(1/(x - y)) (X_1 + X_2)` in the first Heisenberg group.
    HeisenbergSinExample,
    /// `x_coord X_frame` (both 1-based).
    CoordFrame { coord: usize, frame: usize },
    /// Polynomial coefficients, one monomial list per frame direction.
    Poly { coeffs: Vec<Vec<Monomial>> },
    /// Expression coefficients, one per frame direction.
    Expr { components: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFieldSpec {
    Constant {
        value: f64,
    },
    Expr {
        expr: String,
    },
    Poly {
        terms: Vec<Monomial>,
    },
    /// Smooth bump `exp(1 - 1/(1 - s²))`, `s` the scaled distance to `center` after a
    /// rotation by `angle` in the `(x1, x2)` plane; `axes` overrides `radius` per axis.
    Bump {
        center: Vec<f64>,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        axes: Option<Vec<f64>>,
        #[serde(default)]
        angle: f64,
    },
    GaugeNorm {
        #[serde(default)]
        kind: NormKind,
    },
}

fn one() -> f64 {
    1.0
}

pub const HORIZONTAL_FIELD_PRESETS: &[(&str, &str)] = &[
    ("frame", "X_index, constant coefficients (index 1-based)"),
    ("heisenberg_sin_example", "sin(1/(x-y)) (X1 + X2), divergence free away from x = y"),
    ("coord_frame", "x_coord X_frame"),
    ("poly", "polynomial coefficients from monomial lists [coeff, [exponents]]"),
    ("expr", "expression coefficients in x1..xq"),
];

pub const SCALAR_FIELD_PRESETS: &[(&str, &str)] = &[
    ("constant", "constant value"),
    ("expr", "arithmetic expression in x1..xq"),
    ("poly", "polynomial from monomials [coeff, [exponents]]"),
    ("bump", "smooth compactly supported bump, rotated ellipsoidal support"),
    ("gauge_norm", "homogeneous norm (Lipschitz)"),
];

fn polynomial<T: Real>(q: usize, terms: &[Monomial]) -> Result<Polynomial<T>> {
    for (_, e) in terms {
        if e.len() != q {
            return Err(Error::Shape { expected: q, got: e.len() });
        }
    }
    let terms: Vec<(T, Vec<u8>)> = terms.iter().map(|(c, e)| (T::lit(*c), e.clone())).collect();
    Ok(Polynomial::from_terms(q, &terms))
}

fn check_frame_index(alg: &StratifiedAlgebra<impl Real>, j: usize, what: &str) -> Result<()> {
    if j == 0 || j > alg.rank() {
        return Err(Error::Domain(format!("{what} {j} out of range 1..={}", alg.rank())));
    }
    Ok(())
}

impl HorizontalFieldSpec {
    pub fn build<T: Real>(&self, alg: &Arc<StratifiedAlgebra<T>>) -> Result<HorizontalField<T>> {
        let m = alg.rank();
        let q = alg.dim();
        match self {
            Self::Frame { index } => {
                check_frame_index(alg, *index, "frame index")?;
                Ok(HorizontalField::frame(m, index - 1))
            }
            Self::HeisenbergSinExample => {
                if alg.layer_dims() != [2, 1] {
                    return Err(Error::Domain("heisenberg_sin_example needs the first Heisenberg group".into()));
                }
                Ok(heisenberg_sin_example())
            }
            Self::CoordFrame { coord, frame } => {
                check_frame_index(alg, *frame, "frame index")?;
                if *coord == 0 || *coord > q {
                    return Err(Error::Domain(format!("coordinate {coord} out of range 1..={q}")));
                }
                let (c, j) = (coord - 1, frame - 1);
                let a = alg.frame_polynomials(j)[c].clone();
                Ok(HorizontalField::new(format!("x{coord} X{frame}"), move |p: &[T]| {
                    let mut v: Coords<T> = SmallVec::from_elem(T::zero(), m);
                    v[j] = p[c];
                    v
                })
                .with_divergence(move |p| a.eval(p)))
            }
            Self::Poly { coeffs } => {
                if coeffs.len() != m {
                    return Err(Error::Shape { expected: m, got: coeffs.len() });
                }
                let polys: Vec<Polynomial<T>> = coeffs.iter().map(|t| polynomial(q, t)).collect::<Result<_>>()?;
                // div = Σ_j Σ_i a_ji ∂_i F_j, a polynomial itself
                let mut div = Polynomial::zero(q);
                for (j, f) in polys.iter().enumerate() {
                    for (i, a) in alg.frame_polynomials(j).iter().enumerate() {
                        let d = f.derivative(i);
                        for (e, &c) in a.terms() {
                            let mono = Polynomial::from_terms(q, &[(c, e.to_vec())]);
                            div.add_scaled(T::one(), &mul_poly(&mono, &d));
                        }
                    }
                }
                let names = alg.coordinate_names();
                let label = polys.iter().map(|p| p.format_with(&names)).collect::<Vec<_>>().join(", ");
                let polys = Arc::new(polys);
                Ok(HorizontalField::new(format!("poly[{label}]"), move |p: &[T]| polys.iter().map(|f| f.eval(p)).collect::<Coords<T>>())
                    .with_divergence(move |p| div.eval(p)))
            }
            Self::Expr { components } => HorizontalField::from_expressions(alg, components),
        }
    }
}

fn mul_poly<T: Real>(a: &Polynomial<T>, b: &Polynomial<T>) -> Polynomial<T> {
    let q = a.nvars();
    let mut out = Polynomial::zero(q);
    for (ea, &ca) in a.terms() {
        for (eb, &cb) in b.terms() {
            let e: Vec<u8> = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
            out.add_scaled(T::one(), &Polynomial::from_terms(q, &[(ca * cb, e)]));
        }
    }
    out
}

/// `sin(1/(x - y)) (X_1 + X_2)`; both coefficients are functions of `x - y`, and
/// `(X_1 + X_2)(x - y) = 0`, so the pointwise divergence vanishes off the plane.
pub fn heisenberg_sin_example<T: Real>() -> HorizontalField<T> {
    HorizontalField::new("heisenberg_sin_example", |p: &[T]| {
        let s = (T::one() / (p[0] - p[1])).sin();
        smallvec![s, s]
    })
    .with_divergence(|_| T::zero())
    .with_bound(T::one())
}

/// Smooth bump supported on the rotated ellipsoid with semi-axes `axes` centered at
/// `center`; the Euclidean gradient is analytic.
pub fn smooth_bump<T: Real>(center: Vec<T>, axes: Vec<T>, angle: T) -> ScalarField<T> {
    let (s, c) = angle.sin_cos();
    let local = move |p: &[T], center: &[T], axes: &[T]| -> Coords<T> {
        let mut d: Coords<T> = p.iter().zip(center).map(|(&x, &y)| x - y).collect();
        if d.len() >= 2 {
            let (u, v) = (d[0], d[1]);
            d[0] = c * u + s * v;
            d[1] = -s * u + c * v;
        }
        for (x, &r) in d.iter_mut().zip(axes) {
            *x /= r;
        }
        d
    };
    let (c1, a1) = (center.clone(), axes.clone());
    let value = move |p: &[T]| {
        let u = local(p, &c1, &a1);
        let s2: T = u.iter().map(|&x| x * x).sum();
        if s2 >= T::one() {
            T::zero()
        } else {
            (T::one() - T::one() / (T::one() - s2)).exp()
        }
    };
    let name = format!(
        "bump({:?}, {:?}, {})",
        center.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>(),
        axes.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>(),
        angle
    );
    let grad = move |p: &[T]| {
        let u = local(p, &center, &axes);
        let s2: T = u.iter().map(|&x| x * x).sum();
        let q = p.len();
        if s2 >= T::one() {
            return SmallVec::from_elem(T::zero(), q);
        }
        let om = T::one() - s2;
        let f = (T::one() - T::one() / om).exp();
        // ∂f/∂u_k = -2 u_k f / (1 - s²)²
        let g: Coords<T> = u.iter().zip(&axes).map(|(&x, &r)| -(x + x) * f / (om * om) / r).collect();
        let mut out = g.clone();
        if q >= 2 {
            // chain rule through the rotation
            out[0] = c * g[0] - s * g[1];
            out[1] = s * g[0] + c * g[1];
        }
        out
    };
    ScalarField::new(name, value).with_euclidean_gradient(grad)
}

impl ScalarFieldSpec {
    pub fn build<T: Real>(&self, alg: &Arc<StratifiedAlgebra<T>>) -> Result<ScalarField<T>> {
        let q = alg.dim();
        match self {
            Self::Constant { value } => Ok(ScalarField::constant(T::lit(*value))),
            Self::Expr { expr } => ScalarField::from_expression(alg, expr),
            Self::Poly { terms } => {
                let names = alg.coordinate_names();
                let f = polynomial::<T>(q, terms)?;
                let src = f.format_with(&names);
                ScalarField::from_expression(alg, if src.is_empty() { "0" } else { &src })
            }
            Self::Bump { center, radius, axes, angle } => {
                if center.len() != q {
                    return Err(Error::Shape { expected: q, got: center.len() });
                }
                let axes = match axes {
                    Some(a) if a.len() != q => return Err(Error::Shape { expected: q, got: a.len() }),
                    Some(a) => a.clone(),
                    None => vec![*radius; q],
                };
                if axes.iter().any(|&r| r <= 0.0) {
                    return Err(Error::Domain("bump radii must be positive".into()));
                }
                Ok(smooth_bump(center.iter().map(|&x| T::lit(x)).collect(), axes.iter().map(|&x| T::lit(x)).collect(), T::lit(*angle)))
            }
            Self::GaugeNorm { kind } => {
                let n = HomogeneousNorm::new(*kind, alg.clone());
                Ok(ScalarField::new(format!("{}_norm", kind.name()), move |p: &[T]| n.norm(p)).with_smoothness(Smoothness::Lipschitz))
            }
        }
    }
}
