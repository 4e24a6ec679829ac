//! Stratified Lie algebras and the induced group law in graded exponential coordinates.
//!
//! A group point is the coordinate vector of `p = Σ x_j e_j` in a graded basis of the
//! algebra. The product is the Baker–Campbell–Hausdorff series, which terminates for a
//! nilpotent algebra; the expansion is hard-coded through order four.

use std::fmt;
use std::ops::{Add, Deref, DerefMut, Mul, Neg, Sub};

use num_traits::Zero;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::Real;

/// Inline storage used for coordinate vectors.
pub type Coords<T> = SmallVec<[T; 8]>;

/// Highest supported nilpotency step.
pub const MAX_STEP: usize = 4;

/// Point of the group in graded coordinates `x_1, …, x_q`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupPoint<T>(pub Coords<T>);

impl<T: Real> GroupPoint<T> {
    pub fn new(coords: &[T]) -> Self {
        Self(SmallVec::from_slice(coords))
    }

    pub fn zeros(q: usize) -> Self {
        Self(SmallVec::from_elem(T::zero(), q))
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl<T> Deref for GroupPoint<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for GroupPoint<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T: Real> From<Vec<T>> for GroupPoint<T> {
    fn from(v: Vec<T>) -> Self {
        Self(SmallVec::from_vec(v))
    }
}

/// Nonzero structure constant `[e_i, e_j] = coeff * e_k + …` (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketTerm<T> {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coeff: T,
}

/// Scalars the Lie bracket and BCH series can run over: plain reals and intervals.
pub trait LieRing<T>: Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn scale(self, c: T) -> Self;
}

impl<T: Real> LieRing<T> for T {
    #[inline]
    fn scale(self, c: T) -> Self {
        self * c
    }
}

/// Stratified nilpotent Lie algebra `H^1 ⊕ … ⊕ H^ι` with a graded basis.
#[derive(Debug, Clone)]
pub struct StratifiedAlgebra<T> {
    name: String,
    layer_dims: Vec<usize>,
    degrees: Vec<usize>,
    /// Both orientations of every nonzero constant.
    brackets: Vec<BracketTerm<T>>,
    /// `frame[j][i]`: coefficient of `∂_i` in the left-invariant field `X_j`.
    frame: Vec<Vec<Polynomial<T>>>,
}

impl<T: Real> StratifiedAlgebra<T> {
    /// Builds an algebra from layer dimensions and structure constants.
    ///
    /// Each `(i, j, k, c)` entry (0-based) sets `[e_i, e_j]` to contain `c e_k`; the
    /// antisymmetric partner is implied, and supplying it explicitly is allowed as long
    /// as it is consistent. Brackets must raise degree additively.
    ///
    /// The Jacobi identity is assumed. Generation of each layer by brackets with the
    /// first layer is checked and only logged when it fails.
    pub fn new(name: impl Into<String>, layer_dims: &[usize], brackets: &[(usize, usize, usize, T)]) -> Result<Self> {
        let name = name.into();
        let step = layer_dims.len();
        if step == 0 || layer_dims.contains(&0) {
            return Err(Error::InvalidAlgebra("layer dimensions must be positive and nonempty".into()));
        }
        if step > MAX_STEP {
            return Err(Error::UnsupportedStep(step));
        }
        let q: usize = layer_dims.iter().sum();
        if q > 8 {
            return Err(Error::InvalidAlgebra(format!("dimension {q} exceeds the supported maximum of 8")));
        }
        let degrees: Vec<usize> = layer_dims.iter().enumerate().flat_map(|(layer, &d)| std::iter::repeat_n(layer + 1, d)).collect();

        let mut table = vec![T::zero(); q * q * q];
        let mut set = vec![false; q * q * q];
        let idx = |i: usize, j: usize, k: usize| (i * q + j) * q + k;
        for &(i, j, k, c) in brackets {
            if i >= q || j >= q || k >= q {
                return Err(Error::InvalidAlgebra(format!("bracket index ({i},{j},{k}) out of range for q = {q}")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidAlgebra(format!("non-finite structure constant at ({i},{j},{k})")));
            }
            if i == j {
                if c != T::zero() {
                    return Err(Error::InvalidAlgebra(format!("antisymmetry violated: [e{i}, e{i}] has component {c} on e{k}")));
                }
                continue;
            }
            if set[idx(j, i, k)] && table[idx(j, i, k)] != -c {
                return Err(Error::InvalidAlgebra(format!(
                    "antisymmetry violated: c[{i}][{j}][{k}] = {c} but c[{j}][{i}][{k}] = {}",
                    table[idx(j, i, k)]
                )));
            }
            if set[idx(i, j, k)] && table[idx(i, j, k)] != c {
                return Err(Error::InvalidAlgebra(format!("conflicting entries for c[{i}][{j}][{k}]")));
            }
            table[idx(i, j, k)] = c;
            table[idx(j, i, k)] = -c;
            set[idx(i, j, k)] = true;
            set[idx(j, i, k)] = true;
        }

        let mut terms = Vec::new();
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    let c = table[idx(i, j, k)];
                    if c == T::zero() {
                        continue;
                    }
                    if degrees[k] != degrees[i] + degrees[j] {
                        return Err(Error::InvalidAlgebra(format!(
                            "grading violated: [e{}, e{}] has a component on e{} (degrees {} + {} != {})",
                            i + 1,
                            j + 1,
                            k + 1,
                            degrees[i],
                            degrees[j],
                            degrees[k]
                        )));
                    }
                    terms.push(BracketTerm { i, j, k, coeff: c });
                }
            }
        }

        let mut alg = Self { name, layer_dims: layer_dims.to_vec(), degrees, brackets: terms, frame: Vec::new() };
        if !alg.layers_generated() {
            log::warn!(
                "algebra `{}`: brackets with the first layer do not span every higher layer; \
                 the algebra is graded but not stratified",
                alg.name
            );
        }
        alg.frame = alg.build_frame_table();
        Ok(alg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Nilpotency step ι.
    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Topological dimension q.
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Rank m of the horizontal layer.
    pub fn rank(&self) -> usize {
        self.layer_dims[0]
    }

    /// Degree `d_j` (layer index, 1-based) of each basis vector.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Homogeneous dimension `Q = Σ i dim H^i`.
    pub fn hom_dimension(&self) -> usize {
        self.degrees.iter().sum()
    }

    pub fn brackets(&self) -> &[BracketTerm<T>] {
        &self.brackets
    }

    /// Structure constant `c[i][j][k]`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> T {
        self.brackets.iter().find(|b| b.i == i && b.j == j && b.k == k).map_or(T::zero(), |b| b.coeff)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::Shape { expected: self.dim(), got: len })
        }
    }

    /// `[a, b]` for coordinate vectors.
    pub fn bracket<S: LieRing<T>>(&self, a: &[S], b: &[S]) -> SmallVec<[S; 8]> {
        let mut out: SmallVec<[S; 8]> = SmallVec::from_elem(S::zero(), self.dim());
        for t in &self.brackets {
            out[t.k] = out[t.k] + (a[t.i] * b[t.j]).scale(t.coeff);
        }
        out
    }

    /// BCH series `log(exp X exp Y)` truncated at the step.
    pub fn bch<S: LieRing<T>>(&self, x: &[S], y: &[S]) -> SmallVec<[S; 8]> {
        let step = self.step();
        let mut z: SmallVec<[S; 8]> = x.iter().zip(y).map(|(&a, &b)| a + b).collect();
        if step < 2 {
            return z;
        }
        let xy = self.bracket(x, y);
        let half = T::lit(0.5);
        for (zk, &c) in z.iter_mut().zip(&xy) {
            *zk = *zk + c.scale(half);
        }
        if step < 3 {
            return z;
        }
        let xxy = self.bracket(x, &xy);
        let yxy = self.bracket(y, &xy);
        let twelfth = T::lit(1.0 / 12.0);
        for k in 0..z.len() {
            z[k] = z[k] + (xxy[k] - yxy[k]).scale(twelfth);
        }
        if step < 4 {
            return z;
        }
        let yxxy = self.bracket(y, &xxy);
        let c4 = T::lit(-1.0 / 24.0);
        for (zk, &c) in z.iter_mut().zip(&yxxy) {
            *zk = *zk + c.scale(c4);
        }
        z
    }

    /// Group product `p · q`.
    pub fn product(&self, p: &[T], q: &[T]) -> Result<GroupPoint<T>> {
        self.check_len(p.len())?;
        self.check_len(q.len())?;
        Ok(self.mul(p, q))
    }

    /// Group product without shape checks.
    ///
    /// # Panics
    /// Panics if the slices are shorter than the dimension.
    #[inline]
    pub fn mul(&self, p: &[T], q: &[T]) -> GroupPoint<T> {
        assert!(p.len() == self.dim() && q.len() == self.dim(), "point dimension mismatch");
        GroupPoint(self.bch(p, q))
    }

    /// Group inverse. In exponential coordinates `exp(X)^{-1} = exp(-X)`.
    pub fn inverse(&self, p: &[T]) -> Result<GroupPoint<T>> {
        self.check_len(p.len())?;
        Ok(GroupPoint(p.iter().map(|&x| -x).collect()))
    }

    #[inline]
    pub fn inv(&self, p: &[T]) -> GroupPoint<T> {
        GroupPoint(p.iter().map(|&x| -x).collect())
    }

    pub fn identity(&self) -> GroupPoint<T> {
        GroupPoint::zeros(self.dim())
    }

    /// Anisotropic dilation `δ_r`: coordinate j scaled by `r^{d_j}`.
    pub fn dilate(&self, r: T, p: &[T]) -> Result<GroupPoint<T>> {
        if !(r > T::zero()) {
            return Err(Error::Domain(format!("dilation factor must be positive, got {r}")));
        }
        self.check_len(p.len())?;
        Ok(self.dil(r, p))
    }

    #[inline]
    pub fn dil(&self, r: T, p: &[T]) -> GroupPoint<T> {
        GroupPoint(p.iter().zip(&self.degrees).map(|(&x, &d)| x * r.powi(d as i32)).collect())
    }

    /// `t e_j` as a group point.
    pub fn basis_point(&self, j: usize, t: T) -> GroupPoint<T> {
        let mut p = GroupPoint::zeros(self.dim());
        p[j] = t;
        p
    }

    /// Polynomial table for the left-invariant field `X_j`: entry `i` is the coefficient
    /// of `∂_i`. Rows `0..m` are the horizontal frame.
    pub fn frame_polynomials(&self, j: usize) -> &[Polynomial<T>] {
        &self.frame[j]
    }

    /// Evaluates the horizontal frame at `p`: an `m × q` matrix whose row j holds `X_j(p)`.
    pub fn frame_coefficients(&self, p: &[T]) -> FrameMatrix<T> {
        let (m, q) = (self.rank(), self.dim());
        let mut data = SmallVec::with_capacity(m * q);
        for row in &self.frame[..m] {
            data.extend(row.iter().map(|poly| poly.eval(p)));
        }
        FrameMatrix { rows: m, cols: q, data }
    }

    /// Evaluates the full graded frame `X_1, …, X_q` at `p` (q × q).
    pub fn full_frame(&self, p: &[T]) -> FrameMatrix<T> {
        let q = self.dim();
        let mut data = SmallVec::with_capacity(q * q);
        for row in &self.frame {
            data.extend(row.iter().map(|poly| poly.eval(p)));
        }
        FrameMatrix { rows: q, cols: q, data }
    }

    /// Derivative at `y = 0` of `y ↦ p · y` in direction `e_j`, as polynomials in `p`:
    /// the part of the BCH series linear in `Y`, `Y + [X,Y]/2 + [X,[X,Y]]/12`
    /// (the order-four term is quadratic in `Y`).
    fn build_frame_table(&self) -> Vec<Vec<Polynomial<T>>> {
        let q = self.dim();
        let ad_x = |v: &[Polynomial<T>]| -> Vec<Polynomial<T>> {
            let mut out = vec![Polynomial::zero(q); q];
            for t in &self.brackets {
                out[t.k].add_scaled_var_product(t.coeff, t.i, &v[t.j]);
            }
            out
        };
        (0..q)
            .map(|j| {
                let e_j: Vec<Polynomial<T>> =
                    (0..q).map(|i| if i == j { Polynomial::constant(q, T::one()) } else { Polynomial::zero(q) }).collect();
                let ad1 = ad_x(&e_j);
                let ad2 = ad_x(&ad1);
                let mut row = e_j;
                for i in 0..q {
                    row[i].add_scaled(T::lit(0.5), &ad1[i]);
                    row[i].add_scaled(T::lit(1.0 / 12.0), &ad2[i]);
                }
                row
            })
            .collect()
    }

    /// True when `[H^1, H^i]` spans `H^{i+1}` for every layer.
    pub fn layers_generated(&self) -> bool {
        let q = self.dim();
        let m = self.rank();
        let mut offset = 0;
        for layer in 0..self.step() - 1 {
            let dim = self.layer_dims[layer];
            let next_off = offset + dim;
            let next_dim = self.layer_dims[layer + 1];
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for a in 0..m {
                for b in offset..next_off {
                    let mut ea = vec![T::zero(); q];
                    let mut eb = vec![T::zero(); q];
                    ea[a] = T::one();
                    eb[b] = T::one();
                    let br = self.bracket(&ea, &eb);
                    rows.push(br[next_off..next_off + next_dim].iter().map(|x| x.to_f64_lossy()).collect());
                }
            }
            if matrix_rank(rows, next_dim) < next_dim {
                return false;
            }
            offset = next_off;
        }
        true
    }

    /// Display names for coordinates: `x, y, z` in dimension three, else `x1 … xq`.
    pub fn coordinate_names(&self) -> Vec<String> {
        coordinate_names(self.dim())
    }
}

pub fn coordinate_names(q: usize) -> Vec<String> {
    if q == 3 {
        vec!["x".into(), "y".into(), "z".into()]
    } else {
        (1..=q).map(|i| format!("x{i}")).collect()
    }
}

fn matrix_rank(mut rows: Vec<Vec<f64>>, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[pivot][c].abs() < 1e-12 {
            continue;
        }
        rows.swap(rank, pivot);
        let pr = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            let f = r[c] / pr[c];
            for (x, &y) in r.iter_mut().zip(&pr) {
                *x -= f * y;
            }
        }
        rank += 1;
    }
    rank
}

/// Dense row-major matrix of frame coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix<T> {
    rows: usize,
    cols: usize,
    data: SmallVec<[T; 32]>,
}

impl<T: Real> FrameMatrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn get(&self, j: usize, i: usize) -> T {
        self.data[j * self.cols + i]
    }

    /// `(⟨v, X_1⟩, …, ⟨v, X_m⟩)` for a Euclidean vector `v`.
    pub fn project(&self, v: &[T]) -> Coords<T> {
        (0..self.rows).map(|j| crate::scalar::dot(self.row(j), v)).collect()
    }

    /// `Σ_j c_j X_j` as a Euclidean vector.
    pub fn combine(&self, c: &[T]) -> Coords<T> {
        let mut out: Coords<T> = SmallVec::from_elem(T::zero(), self.cols);
        for (j, &cj) in c.iter().enumerate().take(self.rows) {
            for (o, &x) in out.iter_mut().zip(self.row(j)) {
                *o += cj * x;
            }
        }
        out
    }

    /// Operator norm from the Euclidean row space, `sup_{|v|=1} |project(v)|`,
    /// computed as the square root of the top eigenvalue of `A Aᵀ` by power iteration.
    pub fn operator_norm(&self) -> T {
        let m = self.rows;
        let mut gram = vec![T::zero(); m * m];
        for a in 0..m {
            for b in 0..m {
                gram[a * m + b] = crate::scalar::dot(self.row(a), self.row(b));
            }
        }
        let mut v = vec![T::one(); m];
        let mut lambda = T::zero();
        for _ in 0..200 {
            let w: Vec<T> = (0..m).map(|a| (0..m).map(|b| gram[a * m + b] * v[b]).sum()).collect();
            let n = crate::scalar::norm2(&w);
            if n == T::zero() {
                return T::zero();
            }
            let next = n / crate::scalar::norm2(&v);
            v = w.into_iter().map(|x| x / n).collect();
            if (next - lambda).abs() <= T::epsilon() * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.sqrt()
    }
}

/// Named algebra presets shipped with the library.
pub const ALGEBRA_PRESETS: &[&str] = &["heisenberg1", "heisenberg2", "engel"];

/// First Heisenberg group, `[e1, e2] = 2 e3`, so that `X_1 = ∂_1 − y∂_3`, `X_2 = ∂_2 + x∂_3`.
pub fn heisenberg1<T: Real>() -> StratifiedAlgebra<T> {
    StratifiedAlgebra::new("heisenberg1", &[2, 1], &[(0, 1, 2, T::lit(2.0))]).expect("valid preset")
}

/// Second Heisenberg group with basis `(x1, x2, y1, y2, z)`: `[e1, e3] = [e2, e4] = 2 e5`.
pub fn heisenberg2<T: Real>() -> StratifiedAlgebra<T> {
    StratifiedAlgebra::new("heisenberg2", &[4, 1], &[(0, 2, 4, T::lit(2.0)), (1, 3, 4, T::lit(2.0))]).expect("valid preset")
}

/// Engel group: `[e1, e2] = e3`, `[e1, e3] = e4`.
pub fn engel<T: Real>() -> StratifiedAlgebra<T> {
    StratifiedAlgebra::new("engel", &[2, 1, 1], &[(0, 1, 2, T::one()), (0, 2, 3, T::one())]).expect("valid preset")
}

pub fn algebra_preset<T: Real>(name: &str) -> Result<StratifiedAlgebra<T>> {
    match name {
        "heisenberg1" | "H1" | "h1" => Ok(heisenberg1()),
        "heisenberg2" | "H2" | "h2" => Ok(heisenberg2()),
        "engel" => Ok(engel()),
        _ => Err(Error::UnknownPreset(name.to_owned())),
    }
}

impl<T: Real> fmt::Display for StratifiedAlgebra<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.coordinate_names();
        writeln!(f, "algebra {}", self.name)?;
        writeln!(f, "  step = {}", self.step())?;
        writeln!(f, "  layer_dims = {:?}", self.layer_dims)?;
        writeln!(f, "  q = {}, m = {}", self.dim(), self.rank())?;
        writeln!(f, "  degrees = {:?}", self.degrees)?;
        writeln!(f, "  Q = {}", self.hom_dimension())?;
        writeln!(f, "  brackets:")?;
        for t in self.brackets.iter().filter(|t| t.i < t.j) {
            writeln!(f, "    [e{}, e{}] += {} e{}", t.i + 1, t.j + 1, t.coeff, t.k + 1)?;
        }
        writeln!(f, "  horizontal frame:")?;
        for j in 0..self.rank() {
            let row: Vec<String> = self.frame[j].iter().map(|p| p.format_with(&names)).collect();
            writeln!(f, "    X{} = ({})", j + 1, row.join(","))?;
        }
        Ok(())
    }
}
