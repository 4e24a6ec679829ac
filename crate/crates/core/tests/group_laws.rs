use carnot::algebra::{algebra_preset, engel, heisenberg1, heisenberg2, StratifiedAlgebra, ALGEBRA_PRESETS};
use carnot::Error;
use proptest::prelude::*;

type Mat = Vec<Vec<f64>>;

fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn expm_nilpotent(a: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    let mut term = zeros(n);
    for i in 0..n {
        out[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for k in 1..n {
        term = matmul(&term, a);
        for i in 0..n {
            for j in 0..n {
                out[i][j] += term[i][j] / (1..=k).product::<usize>() as f64;
            }
        }
    }
    out
}

/// Faithful strictly upper-triangular representation: basis element `k` maps to
/// `Σ c E_{ij}` over the listed entries.
struct Rep {
    n: usize,
    basis: Vec<Vec<(usize, usize, f64)>>,
}

impl Rep {
    fn matrix(&self, x: &[f64]) -> Mat {
        let mut m = zeros(self.n);
        for (b, &xk) in self.basis.iter().zip(x) {
            for &(i, j, c) in b {
                m[i][j] += c * xk;
            }
        }
        m
    }

    fn group(&self, x: &[f64]) -> Mat {
        expm_nilpotent(&self.matrix(x))
    }
}

fn rep(name: &str) -> Rep {
    match name {
        "heisenberg1" => Rep { n: 3, basis: vec![vec![(0, 1, 1.0)], vec![(1, 2, 1.0)], vec![(0, 2, 0.5)]] },
        "heisenberg2" => {
            Rep { n: 4, basis: vec![vec![(0, 1, 1.0)], vec![(0, 2, 1.0)], vec![(1, 3, 1.0)], vec![(2, 3, 1.0)], vec![(0, 3, 0.5)]] }
        }
        "engel" => {
            Rep { n: 4, basis: vec![vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], vec![(2, 3, 1.0)], vec![(1, 3, 1.0)], vec![(0, 3, 1.0)]] }
        }
        _ => unreachable!(),
    }
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn point(q: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, q)
}

fn residual(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn heisenberg_product_example() {
    let a = heisenberg1::<f64>();
    assert_eq!(a.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).coords(), &[1.0, 1.0, 1.0]);
    assert_eq!(a.inv(&[1.0, 2.0, 3.0]).coords(), &[-1.0, -2.0, -3.0]);
}

#[test]
fn presets_and_errors() {
    for name in ALGEBRA_PRESETS {
        let a = algebra_preset::<f64>(name).unwrap();
        assert_eq!(a.name(), *name);
        assert!(a.layers_generated());
    }
    assert_eq!(heisenberg1::<f64>().hom_dimension(), 4);
    assert_eq!(heisenberg2::<f64>().hom_dimension(), 6);
    assert_eq!(engel::<f64>().hom_dimension(), 7);
    assert!(matches!(algebra_preset::<f64>("nope"), Err(Error::UnknownPreset(_))));
    let step5 =
        StratifiedAlgebra::<f64>::new("filiform6", &[2, 1, 1, 1, 1], &[(0, 1, 2, 1.0), (0, 2, 3, 1.0), (0, 3, 4, 1.0), (0, 4, 5, 1.0)]);
    assert!(matches!(step5, Err(Error::UnsupportedStep(5))));
    let a = heisenberg1::<f64>();
    assert!(matches!(a.product(&[1.0, 2.0], &[0.0, 0.0, 0.0]), Err(Error::Shape { .. })));
}

#[test]
fn f32_matches_f64() {
    let a32 = heisenberg1::<f32>();
    let a64 = heisenberg1::<f64>();
    let p = a32.mul(&[0.5, -1.0, 0.25], &[1.5, 0.75, -2.0]);
    let q = a64.mul(&[0.5, -1.0, 0.25], &[1.5, 0.75, -2.0]);
    for (x, y) in p.iter().zip(q.iter()) {
        assert!((*x as f64 - y).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_matches_matrix_representation(idx in 0usize..3, seed in point(5), seed2 in point(5)) {
        let name = ALGEBRA_PRESETS[idx];
        let a = algebra_preset::<f64>(name).unwrap();
        let q = a.dim();
        let (p, r) = (&seed[..q], &seed2[..q]);
        let rep = rep(name);
        let lhs = rep.group(a.mul(p, r).coords());
        let rhs = matmul(&rep.group(p), &rep.group(r));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn group_axioms(idx in 0usize..3, x in point(5), y in point(5), z in point(5)) {
        let a = algebra_preset::<f64>(ALGEBRA_PRESETS[idx]).unwrap();
        let q = a.dim();
        let (x, y, z) = (&x[..q], &y[..q], &z[..q]);
        let left = a.mul(&a.mul(x, y), z);
        let right = a.mul(x, &a.mul(y, z));
        prop_assert!(residual(&left, &right) < 1e-12);
        let e = a.identity();
        prop_assert!(residual(&a.mul(x, &e), x) < 1e-15);
        prop_assert!(residual(&a.mul(&e, x), x) < 1e-15);
        prop_assert!(residual(&a.mul(x, &a.inv(x)), &e) < 1e-12);
        prop_assert!(residual(&a.mul(&a.inv(x), x), &e) < 1e-12);
        // the first layer adds
        for j in 0..a.rank() {
            prop_assert_eq!(a.mul(x, y)[j], x[j] + y[j]);
        }
    }

    #[test]
    fn dilation_is_an_automorphism(idx in 0usize..3, x in point(5), y in point(5), r in 0.1f64..3.0, s in 0.1f64..3.0) {
        let a = algebra_preset::<f64>(ALGEBRA_PRESETS[idx]).unwrap();
        let q = a.dim();
        let (x, y) = (&x[..q], &y[..q]);
        let lhs = a.dil(r, &a.mul(x, y));
        let rhs = a.mul(&a.dil(r, x), &a.dil(r, y));
        prop_assert!(residual(&lhs, &rhs) < 1e-11);
        prop_assert!(residual(&a.dil(r, &a.dil(s, x)), &a.dil(r * s, x)) < 1e-11);
        prop_assert!(residual(&a.dil(r, &a.inv(x)), &a.inv(&a.dil(r, x))) < 1e-12);
    }
}
