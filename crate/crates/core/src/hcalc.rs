//! Horizontal calculus: scalar and horizontal fields, the derivatives `X_j`,
//! horizontal gradient and divergence, the sub-Laplacian and the distributional
//! divergence pairing.
//!
//! Field closures must be safe to call concurrently; quadrature loops evaluate them
//! from many threads.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::algebra::{Coords, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::poly::Polynomial;
use crate::quadrature::QuadratureSpec;
use crate::scalar::{dot, Real};

pub type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type VectorFn<T> = Arc<dyn Fn(&[T]) -> Coords<T> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    Discontinuous,
    Continuous,
    Lipschitz,
    C1,
    Smooth,
}

/// Real-valued field on the group, with optional analytic derivatives.
#[derive(Clone)]
pub struct ScalarField<T> {
    name: String,
    value: ScalarFn<T>,
    euclidean_gradient: Option<VectorFn<T>>,
    horizontal_gradient: Option<VectorFn<T>>,
    sub_laplacian: Option<ScalarFn<T>>,
    smoothness: Smoothness,
}

impl<T> fmt::Debug for ScalarField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("euclidean_gradient", &self.euclidean_gradient.is_some())
            .field("horizontal_gradient", &self.horizontal_gradient.is_some())
            .field("sub_laplacian", &self.sub_laplacian.is_some())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl<T: Real> ScalarField<T> {
    pub fn new(name: impl Into<String>, value: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            euclidean_gradient: None,
            horizontal_gradient: None,
            sub_laplacian: None,
            smoothness: Smoothness::Smooth,
        }
    }

    pub fn constant(c: T) -> Self {
        let q_free = move |_: &[T]| c;
        Self::new(format!("const({c})"), q_free)
            .with_horizontal_gradient_dyn(Arc::new(|_: &[T]| Coords::new()))
            .with_sub_laplacian(|_| T::zero())
    }

    /// Euclidean gradient `(∂_1 f, …, ∂_q f)`.
    pub fn with_euclidean_gradient(mut self, g: impl Fn(&[T]) -> Coords<T> + Send + Sync + 'static) -> Self {
        self.euclidean_gradient = Some(Arc::new(g));
        self
    }

    /// Horizontal gradient `(X_1 f, …, X_m f)`.
    pub fn with_horizontal_gradient(mut self, g: impl Fn(&[T]) -> Coords<T> + Send + Sync + 'static) -> Self {
        self.horizontal_gradient = Some(Arc::new(g));
        self
    }

    fn with_horizontal_gradient_dyn(mut self, g: VectorFn<T>) -> Self {
        self.horizontal_gradient = Some(g);
        self
    }

    pub fn with_sub_laplacian(mut self, l: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        self.sub_laplacian = Some(Arc::new(l));
        self
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    #[inline]
    pub fn eval(&self, p: &[T]) -> T {
        (self.value)(p)
    }

    pub fn value_fn(&self) -> &ScalarFn<T> {
        &self.value
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.horizontal_gradient.is_some() || self.euclidean_gradient.is_some()
    }

    pub fn euclidean_gradient(&self) -> Option<&VectorFn<T>> {
        self.euclidean_gradient.as_ref()
    }

    pub fn analytic_horizontal_gradient(&self) -> Option<&VectorFn<T>> {
        self.horizontal_gradient.as_ref()
    }

    pub fn analytic_sub_laplacian(&self) -> Option<&ScalarFn<T>> {
        self.sub_laplacian.as_ref()
    }

    /// Euclidean gradient: analytic when available, else central differences.
    pub fn euclidean_gradient_at(&self, p: &[T]) -> Coords<T> {
        if let Some(g) = &self.euclidean_gradient {
            return g(p);
        }
        let h = T::fd_step();
        let mut a: Coords<T> = SmallVec::from_slice(p);
        (0..p.len())
            .map(|k| {
                let x = a[k];
                a[k] = x + h;
                let fp = self.eval(&a);
                a[k] = x - h;
                let fm = self.eval(&a);
                a[k] = x;
                (fp - fm) / (h + h)
            })
            .collect()
    }

    /// Field defined by an arithmetic expression in graded coordinates, with exact
    /// Euclidean gradient, horizontal gradient and sub-Laplacian from symbolic
    /// differentiation.
    pub fn from_expression(alg: &Arc<StratifiedAlgebra<T>>, src: &str) -> Result<Self> {
        let q = alg.dim();
        let m = alg.rank();
        let e = Arc::new(Expr::parse(src, q)?);
        let grad: Arc<Vec<Expr>> = Arc::new((0..q).map(|k| e.derivative(k)).collect());
        let hess: Arc<Vec<Vec<Expr>>> = Arc::new(grad.iter().map(|g| (0..q).map(|k| g.derivative(k)).collect()).collect());
        let frame: Arc<Vec<Vec<Polynomial<T>>>> = Arc::new((0..m).map(|j| alg.frame_polynomials(j).to_vec()).collect());
        let dframe: Arc<Vec<Vec<Vec<Polynomial<T>>>>> =
            Arc::new(frame.iter().map(|row| row.iter().map(|a| (0..q).map(|k| a.derivative(k)).collect()).collect()).collect());
        let value = {
            let e = e.clone();
            move |p: &[T]| e.eval(p)
        };
        let egrad = {
            let grad = grad.clone();
            move |p: &[T]| grad.iter().map(|g| g.eval(p)).collect::<Coords<T>>()
        };
        let hgrad = {
            let grad = grad.clone();
            let frame = frame.clone();
            move |p: &[T]| {
                let g: Coords<T> = grad.iter().map(|g| g.eval(p)).collect();
                frame.iter().map(|row| row.iter().zip(&g).map(|(a, &gi)| a.eval(p) * gi).sum()).collect::<Coords<T>>()
            }
        };
        let lap = move |p: &[T]| {
            // Σ_j Σ_k a_jk ∂_k (Σ_i a_ji ∂_i u)
            let g: Coords<T> = grad.iter().map(|g| g.eval(p)).collect();
            let mut total = T::zero();
            for (row, drow) in frame.iter().zip(dframe.iter()) {
                let a: Coords<T> = row.iter().map(|poly| poly.eval(p)).collect();
                for k in 0..q {
                    if a[k] == T::zero() {
                        continue;
                    }
                    let mut inner = T::zero();
                    for i in 0..q {
                        let dai = drow[i][k].eval(p);
                        if dai != T::zero() {
                            inner += dai * g[i];
                        }
                        if a[i] != T::zero() {
                            inner += a[i] * hess[i][k].eval(p);
                        }
                    }
                    total += a[k] * inner;
                }
            }
            total
        };
        Ok(Self::new(format!("expr({src})"), value).with_euclidean_gradient(egrad).with_horizontal_gradient(hgrad).with_sub_laplacian(lap))
    }
}

/// Horizontal vector field `F = Σ_j F_j X_j`, stored through its coefficients.
#[derive(Clone)]
pub struct HorizontalField<T> {
    name: String,
    coeffs: VectorFn<T>,
    divergence: Option<ScalarFn<T>>,
    bound: Option<T>,
}

impl<T> fmt::Debug for HorizontalField<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HorizontalField")
            .field("name", &self.name)
            .field("divergence", &self.divergence.is_some())
            .field("bound", &self.bound)
            .finish()
    }
}

impl<T: Real> HorizontalField<T> {
    pub fn new(name: impl Into<String>, coeffs: impl Fn(&[T]) -> Coords<T> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), coeffs: Arc::new(coeffs), divergence: None, bound: None }
    }

    /// Analytic pointwise divergence `Σ_j X_j F_j`.
    pub fn with_divergence(mut self, d: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        self.divergence = Some(Arc::new(d));
        self
    }

    /// Essential bound hint `sup |F|`.
    pub fn with_bound(mut self, b: T) -> Self {
        self.bound = Some(b);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> Option<T> {
        self.bound
    }

    #[inline]
    pub fn coeffs(&self, p: &[T]) -> Coords<T> {
        (self.coeffs)(p)
    }

    pub fn analytic_divergence(&self) -> Option<&ScalarFn<T>> {
        self.divergence.as_ref()
    }

    /// Component `j` as a scalar field.
    pub fn component(&self, j: usize) -> ScalarField<T> {
        let c = self.coeffs.clone();
        ScalarField::new(format!("{}[{}]", self.name, j + 1), move |p: &[T]| c(p)[j])
    }

    /// The frame field `X_j` (constant coefficients, divergence zero).
    pub fn frame(m: usize, j: usize) -> Self {
        let mut e: Coords<T> = SmallVec::from_elem(T::zero(), m);
        e[j] = T::one();
        Self::new(format!("X{}", j + 1), move |_: &[T]| e.clone()).with_divergence(|_| T::zero()).with_bound(T::one())
    }

    /// Field with coefficients given by expressions; divergence from symbolic
    /// differentiation, `Σ_j Σ_i a_ji ∂_i F_j`.
    pub fn from_expressions(alg: &Arc<StratifiedAlgebra<T>>, components: &[String]) -> Result<Self> {
        let q = alg.dim();
        let m = alg.rank();
        if components.len() != m {
            return Err(Error::Shape { expected: m, got: components.len() });
        }
        let exprs: Arc<Vec<Expr>> = Arc::new(components.iter().map(|s| Expr::parse(s, q)).collect::<Result<_>>()?);
        let grads: Arc<Vec<Vec<Expr>>> = Arc::new(exprs.iter().map(|e| (0..q).map(|k| e.derivative(k)).collect()).collect());
        let frame: Arc<Vec<Vec<Polynomial<T>>>> = Arc::new((0..m).map(|j| alg.frame_polynomials(j).to_vec()).collect());
        let coeffs = {
            let exprs = exprs.clone();
            move |p: &[T]| exprs.iter().map(|e| e.eval(p)).collect::<Coords<T>>()
        };
        let div = move |p: &[T]| {
            let mut total = T::zero();
            for (row, g) in frame.iter().zip(grads.iter()) {
                for (a, gi) in row.iter().zip(g) {
                    let av = a.eval(p);
                    if av != T::zero() {
                        total += av * gi.eval(p);
                    }
                }
            }
            total
        };
        Ok(Self::new(format!("expr[{}]", components.join(", ")), coeffs).with_divergence(div))
    }
}

/// `X_j f(p)` as the central difference of `t ↦ f(p · (t e_j))`.
pub fn x_derivative<T: Real>(a: &StratifiedAlgebra<T>, f: &ScalarField<T>, j: usize, p: &[T], h: T) -> T {
    x_derivative_of(a, |x| f.eval(x), j, p, h)
}

pub fn x_derivative_of<T: Real, F: Fn(&[T]) -> T>(a: &StratifiedAlgebra<T>, f: F, j: usize, p: &[T], h: T) -> T {
    let fp = f(&a.mul(p, &a.basis_point(j, h)));
    let fm = f(&a.mul(p, &a.basis_point(j, -h)));
    (fp - fm) / (h + h)
}

/// One Richardson step on the central difference, `(4 D(h/2) - D(h)) / 3`.
pub fn x_derivative_richardson<T: Real>(a: &StratifiedAlgebra<T>, f: &ScalarField<T>, j: usize, p: &[T], h: T) -> T {
    let d1 = x_derivative(a, f, j, p, h);
    let d2 = x_derivative(a, f, j, p, h * T::lit(0.5));
    (T::lit(4.0) * d2 - d1) / T::lit(3.0)
}

/// `∇_H f(p) = (X_1 f, …, X_m f)`: analytic horizontal gradient, else the Euclidean
/// gradient projected on the frame, else central differences with the default step.
pub fn horizontal_gradient<T: Real>(a: &StratifiedAlgebra<T>, f: &ScalarField<T>, p: &[T]) -> Coords<T> {
    if let Some(g) = f.analytic_horizontal_gradient() {
        let v = g(p);
        if v.len() == a.rank() {
            return v;
        }
        // constant fields report an empty gradient
        return SmallVec::from_elem(T::zero(), a.rank());
    }
    if let Some(g) = f.euclidean_gradient() {
        return a.frame_coefficients(p).project(&g(p));
    }
    (0..a.rank()).map(|j| x_derivative(a, f, j, p, T::fd_step())).collect()
}

/// `Σ_j X_j F_j(p)` by central differences.
pub fn horizontal_divergence<T: Real>(a: &StratifiedAlgebra<T>, field: &HorizontalField<T>, p: &[T], h: T) -> T {
    (0..a.rank()).map(|j| x_derivative_of(a, |x| field.coeffs(x)[j], j, p, h)).sum()
}

/// Pointwise divergence: analytic when available, else central differences.
pub fn divergence_at<T: Real>(a: &StratifiedAlgebra<T>, field: &HorizontalField<T>, p: &[T]) -> T {
    match field.analytic_divergence() {
        Some(d) => d(p),
        None => horizontal_divergence(a, field, p, T::fd_step()),
    }
}

/// `Δ_H u = Σ_j X_j² u` by second central differences along `t ↦ p · (t e_j)`, which
/// are integral curves of `X_j`.
pub fn sub_laplacian<T: Real>(a: &StratifiedAlgebra<T>, u: &ScalarField<T>, p: &[T], h: T) -> T {
    let u0 = u.eval(p);
    (0..a.rank())
        .map(|j| {
            let up = u.eval(&a.mul(p, &a.basis_point(j, h)));
            let um = u.eval(&a.mul(p, &a.basis_point(j, -h)));
            (up - u0 - u0 + um) / (h * h)
        })
        .sum()
}

/// Sub-Laplacian: analytic when available, else second differences.
pub fn sub_laplacian_at<T: Real>(a: &StratifiedAlgebra<T>, u: &ScalarField<T>, p: &[T]) -> T {
    match u.analytic_sub_laplacian() {
        Some(l) => l(p),
        None => sub_laplacian(a, u, p, T::fd_step2()),
    }
}

/// Checks that `phi` vanishes on the boundary faces of the quadrature region.
fn check_compact_support<T: Real>(phi: &ScalarField<T>, quad: &QuadratureSpec<T>) -> Result<()> {
    let region = &quad.region;
    let q = region.dim();
    let per_axis: usize = if q <= 3 { 24 } else { 8 };
    let total = per_axis.pow(q as u32 - 1);
    let mut p = vec![T::zero(); q];
    for face_axis in 0..q {
        for side in [region.lower()[face_axis], region.upper()[face_axis]] {
            for n in 0..total {
                let mut rem = n;
                for (k, pk) in p.iter_mut().enumerate() {
                    if k == face_axis {
                        *pk = side;
                        continue;
                    }
                    let i = rem % per_axis;
                    rem /= per_axis;
                    let t = (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(per_axis);
                    *pk = region.lower()[k] + t * region.width(k);
                }
                let v = phi.eval(&p);
                if v.abs() > T::lit(1e-12) {
                    return Err(Error::Support(format!(
                        "test function `{}` is {v} at region boundary point {:?}",
                        phi.name(),
                        p.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Distributional divergence tested against `phi`: `-∫ ⟨F, ∇_H φ⟩ dμ`.
pub fn distributional_divergence_pairing<T: Real>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    phi: &ScalarField<T>,
    quad: &QuadratureSpec<T>,
) -> Result<T> {
    check_compact_support(phi, quad)?;
    let v = quad.integrate(|p| dot(&field.coeffs(p), &horizontal_gradient(a, phi, p)))?;
    Ok(-v)
}

/// `∫ φ div F dμ` with the pointwise divergence.
pub fn pointwise_divergence_integral<T: Real>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    phi: &ScalarField<T>,
    quad: &QuadratureSpec<T>,
) -> Result<T> {
    quad.integrate(|p| phi.eval(p) * divergence_at(a, field, p))
}

/// Pairing through Euclidean coordinates: `-∫ ⟨Σ_j F_j X_j, ∇φ⟩_{R^q} dμ`.
pub fn euclidean_divergence_pairing<T: Real>(
    a: &StratifiedAlgebra<T>,
    field: &HorizontalField<T>,
    phi: &ScalarField<T>,
    quad: &QuadratureSpec<T>,
) -> Result<T> {
    check_compact_support(phi, quad)?;
    let v = quad.integrate(|p| {
        let full = a.frame_coefficients(p).combine(&field.coeffs(p));
        dot(&full, &phi.euclidean_gradient_at(p))
    })?;
    Ok(-v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{engel, heisenberg1};
    use crate::metric::BoxRegion;
    use smallvec::smallvec;

    fn h1() -> Arc<StratifiedAlgebra<f64>> {
        Arc::new(heisenberg1())
    }

    #[test]
    fn derivatives_of_z_follow_the_frame() {
        let a = h1();
        let z = ScalarField::new("z", |p: &[f64]| p[2]);
        let p = [0.7, -0.4, 1.1];
        assert!((x_derivative(&a, &z, 0, &p, 1e-5) - 0.4).abs() < 1e-9);
        assert!((x_derivative(&a, &z, 1, &p, 1e-5) - 0.7).abs() < 1e-9);
        let c = ScalarField::new("c", |_: &[f64]| 3.0);
        assert_eq!(x_derivative(&a, &c, 0, &p, 1e-5), 0.0);
        let x1 = ScalarField::new("x1", |p: &[f64]| p[0]);
        assert!((x_derivative(&a, &x1, 0, &p, 1e-5) - 1.0).abs() < 1e-10);
        assert!(x_derivative(&a, &x1, 1, &p, 1e-5).abs() < 1e-10);
    }

    #[test]
    fn richardson_improves_accuracy() {
        let a = h1();
        let f = ScalarField::new("f", |p: &[f64]| (p[0] * p[2]).sin() + p[1].powi(3));
        let g = ScalarField::from_expression(&a, "sin(x*z) + y^3").unwrap();
        let p = [0.3, 0.5, -0.8];
        let exact = horizontal_gradient(&a, &g, &p)[0];
        let plain = (x_derivative(&a, &f, 0, &p, 1e-2) - exact).abs();
        let rich = (x_derivative_richardson(&a, &f, 0, &p, 1e-2) - exact).abs();
        assert!(rich < plain / 10.0, "{rich} vs {plain}");
    }

    #[test]
    fn gauge_norm_gradient_on_axis() {
        // on the x1-axis the gauge norm is |x1| locally, so ∇_H = (±1, 0)
        let a = h1();
        let n = crate::metric::HomogeneousNorm::gauge(a.clone());
        let f = ScalarField::new("gauge", move |p: &[f64]| n.norm(p));
        let g = horizontal_gradient(&a, &f, &[0.8, 0.0, 0.0]);
        assert!((g[0] - 1.0).abs() < 1e-8 && g[1].abs() < 1e-8);
        let g = horizontal_gradient(&a, &f, &[-0.8, 0.0, 0.0]);
        assert!((g[0] + 1.0).abs() < 1e-8 && g[1].abs() < 1e-8);
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        for alg in [heisenberg1::<f64>(), engel()] {
            let a = Arc::new(alg);
            let src = if a.dim() == 3 { "x^2*z - sin(y) + z^2" } else { "x1*x4 + x2^2*x3 - x4^2" };
            let f = ScalarField::from_expression(&a, src).unwrap();
            let plain = ScalarField::new("plain", {
                let f = f.clone();
                move |p: &[f64]| f.eval(p)
            });
            let p: Vec<f64> = (0..a.dim()).map(|i| 0.3 * i as f64 - 0.4).collect();
            let ga = horizontal_gradient(&a, &f, &p);
            let gf = horizontal_gradient(&a, &plain, &p);
            for j in 0..a.rank() {
                assert!((ga[j] - gf[j]).abs() < 1e-5 * (1.0 + ga[j].abs()), "{} {j}", a.name());
            }
            let la = sub_laplacian_at(&a, &f, &p);
            let lf = sub_laplacian(&a, &plain, &p, 1e-4);
            assert!((la - lf).abs() < 1e-5 * (1.0 + la.abs()), "{} {la} {lf}", a.name());
        }
    }

    #[test]
    fn sub_laplacian_examples() {
        let a = h1();
        let p = [0.2, -1.3, 0.6];
        let x1sq = ScalarField::new("x1^2", |p: &[f64]| p[0] * p[0]);
        assert!((sub_laplacian(&a, &x1sq, &p, 1e-4) - 2.0).abs() < 1e-6);
        let lin = ScalarField::new("lin", |p: &[f64]| 2.0 * p[0] - p[1]);
        assert!(sub_laplacian(&a, &lin, &p, 1e-4).abs() < 1e-6);
        let z = ScalarField::new("z", |p: &[f64]| p[2]);
        assert!(sub_laplacian(&a, &z, &p, 1e-4).abs() < 1e-6);
        let zexpr = ScalarField::from_expression(&a, "z").unwrap();
        assert_eq!(sub_laplacian_at(&a, &zexpr, &p), 0.0);
        let x1e = ScalarField::from_expression(&a, "x1^2").unwrap();
        assert_eq!(sub_laplacian_at(&a, &x1e, &p), 2.0);
    }

    #[test]
    fn divergence_examples() {
        let a = h1();
        let p = [0.9, -0.2, 0.4];
        let x1 = HorizontalField::frame(2, 0);
        assert_eq!(horizontal_divergence(&a, &x1, &p, 1e-5), 0.0);
        let sin_field = HorizontalField::new("sin", |p: &[f64]| {
            let s = (1.0 / (p[0] - p[1])).sin();
            smallvec![s, s]
        });
        assert!(horizontal_divergence(&a, &sin_field, &p, 1e-5).abs() < 1e-8);
        let lin = HorizontalField::new("x1 X1", |p: &[f64]| smallvec![p[0], 0.0]);
        assert!((horizontal_divergence(&a, &lin, &p, 1e-5) - 1.0).abs() < 1e-9);
        let e = HorizontalField::from_expressions(&a, &["x1*z".into(), "y^2".into()]).unwrap();
        // X1(xz) + X2(y^2) = z - y*x + 2y
        let expect = p[2] - p[1] * p[0] + 2.0 * p[1];
        assert!((divergence_at(&a, &e, &p) - expect).abs() < 1e-14);
        assert!((horizontal_divergence(&a, &e, &p, 1e-5) - expect).abs() < 1e-8);
    }

    fn bump(c: [f64; 3], r: f64) -> ScalarField<f64> {
        crate::fields::smooth_bump(c.to_vec(), vec![r; 3], 0.0)
    }

    #[test]
    fn pairing_matches_pointwise_divergence() {
        let a = h1();
        let region = BoxRegion::cube(3, 1.0).unwrap();
        let quad = QuadratureSpec::tensor(region, 24, 6);
        let phi = bump([0.1, -0.2, 0.05], 0.6);
        let x1 = HorizontalField::frame(2, 0);
        assert!(distributional_divergence_pairing(&a, &x1, &phi, &quad).unwrap().abs() < 1e-5);
        let lin = HorizontalField::from_expressions(&a, &["x1".into(), "0".into()]).unwrap();
        let pair = distributional_divergence_pairing(&a, &lin, &phi, &quad).unwrap();
        let mass = quad.integrate(|p| phi.eval(p)).unwrap();
        assert!((pair - mass).abs() < 1e-5, "{pair} {mass}");
    }

    #[test]
    fn random_polynomial_fields_consistency() {
        use rand::Rng;
        let a = h1();
        let mut rng = crate::rng::stream_rng(17, 0);
        let monos = ["1", "x", "y", "z", "x*y", "x^2", "y*z", "x*z^2"];
        for _ in 0..20 {
            let comps: Vec<String> = (0..2)
                .map(|_| monos.iter().map(|m| format!("{:.3}*{m}", rng.random::<f64>() * 2.0 - 1.0)).collect::<Vec<_>>().join(" + "))
                .collect();
            let field = HorizontalField::from_expressions(&a, &comps).unwrap();
            let c = [rng.random::<f64>() * 0.4 - 0.2, rng.random::<f64>() * 0.4 - 0.2, 0.0];
            let phi = bump(c, 0.7);
            let lo: Vec<f64> = c.iter().map(|x| x - 0.7).collect();
            let hi: Vec<f64> = c.iter().map(|x| x + 0.7).collect();
            let quad = QuadratureSpec::tensor(BoxRegion::new(lo, hi).unwrap(), 10, 4);
            let pair = distributional_divergence_pairing(&a, &field, &phi, &quad).unwrap();
            let point = pointwise_divergence_integral(&a, &field, &phi, &quad).unwrap();
            assert!((pair - point).abs() < 1e-4, "{pair} {point}");
            let eucl = euclidean_divergence_pairing(&a, &field, &phi, &quad).unwrap();
            assert!((eucl - pair).abs() < 1e-10);
        }
    }

    #[test]
    fn pairing_detects_support_violation() {
        let a = h1();
        let region = BoxRegion::cube(3, 0.5).unwrap();
        let quad = QuadratureSpec::tensor(region, 4, 2);
        let phi = bump([0.0; 3], 0.9);
        let x1 = HorizontalField::frame(2, 0);
        assert!(matches!(distributional_divergence_pairing(&a, &x1, &phi, &quad), Err(Error::Support(_))));
    }
}
