//! Marching tetrahedra for level sets in three coordinates.

use rayon::prelude::*;

use crate::metric::BoxRegion;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle<T> {
    pub vertices: [[T; 3]; 3],
    pub centroid: [T; 3],
    pub area: T,
}

// Kuhn split of the unit cube into six tetrahedra sharing the diagonal 0 -> 7; cube
// vertex `v` has offset (v & 1, (v >> 1) & 1, (v >> 2) & 1).
const KUHN: [[usize; 4]; 6] = [[0, 1, 3, 7], [0, 1, 5, 7], [0, 2, 3, 7], [0, 2, 6, 7], [0, 4, 5, 7], [0, 4, 6, 7]];

fn sub<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn triangle<T: Real>(a: [T; 3], b: [T; 3], c: [T; 3]) -> Option<Triangle<T>> {
    let n = cross(sub(b, a), sub(c, a));
    let area = T::lit(0.5) * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(area > T::zero()) {
        return None;
    }
    let third = T::one() / T::lit(3.0);
    let centroid = [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third, (a[2] + b[2] + c[2]) * third];
    Some(Triangle { vertices: [a, b, c], centroid, area })
}

fn crossing<T: Real>(pa: [T; 3], va: T, pb: [T; 3], vb: T) -> [T; 3] {
    let t = va / (va - vb);
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), pa[2] + t * (pb[2] - pa[2])]
}

/// Triangulates `{level = 0}` on an `n³` grid over `bbox`; a vertex is inside when
/// `level < 0`. Output order depends only on `(bbox, n)`.
pub fn march_tetrahedra<T, F>(level: &F, bbox: &BoxRegion<T>, n: usize) -> Vec<Triangle<T>>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    assert_eq!(bbox.dim(), 3, "marching tetrahedra needs three coordinates");
    let lo = bbox.lower();
    let h: [T; 3] = std::array::from_fn(|k| bbox.width(k) / T::from_usize_lossy(n));
    let node = |i: usize, j: usize, k: usize| -> [T; 3] {
        [lo[0] + T::from_usize_lossy(i) * h[0], lo[1] + T::from_usize_lossy(j) * h[1], lo[2] + T::from_usize_lossy(k) * h[2]]
    };
    let s = n + 1;
    let values: Vec<T> = (0..s * s * s)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (s * s), (idx / s) % s, idx % s);
            level(&node(i, j, k))
        })
        .collect();
    let value = |i: usize, j: usize, k: usize| values[(i * s + j) * s + k];
    let slabs: Vec<Vec<Triangle<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..n {
                for k in 0..n {
                    let corner = |v: usize| (i + (v & 1), j + ((v >> 1) & 1), k + ((v >> 2) & 1));
                    let vals: [T; 8] = std::array::from_fn(|v| {
                        let (a, b, c) = corner(v);
                        value(a, b, c)
                    });
                    let inside = vals.iter().filter(|&&v| v < T::zero()).count();
                    if inside == 0 || inside == 8 {
                        continue;
                    }
                    let pts: [[T; 3]; 8] = std::array::from_fn(|v| {
                        let (a, b, c) = corner(v);
                        node(a, b, c)
                    });
                    for tet in &KUHN {
                        let (ins, outs): (Vec<usize>, Vec<usize>) = tet.iter().partition(|&&v| vals[v] < T::zero());
                        let cut = |a: usize, b: usize| crossing(pts[a], vals[a], pts[b], vals[b]);
                        match (ins.len(), outs.len()) {
                            (1, 3) => out.extend(triangle(cut(ins[0], outs[0]), cut(ins[0], outs[1]), cut(ins[0], outs[2]))),
                            (3, 1) => out.extend(triangle(cut(outs[0], ins[0]), cut(outs[0], ins[1]), cut(outs[0], ins[2]))),
                            (2, 2) => {
                                let p00 = cut(ins[0], outs[0]);
                                let p01 = cut(ins[0], outs[1]);
                                let p11 = cut(ins[1], outs[1]);
                                let p10 = cut(ins[1], outs[0]);
                                out.extend(triangle(p00, p01, p11));
                                out.extend(triangle(p00, p11, p10));
                            }
                            _ => {}
                        }
                    }
                }
            }
            out
        })
        .collect();
    slabs.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_area_is_exact() {
        let bbox = BoxRegion::new(vec![-1.0, -1.0, -1.0], vec![1.0, 1.0, 1.0]).unwrap();
        let tris = march_tetrahedra(&|p: &[f64]| p[0] - 0.123 + 0.2 * p[1], &bbox, 10);
        let area: f64 = tris.iter().map(|t| t.area).sum();
        // plane x = 0.123 - 0.2 y across the square [-1,1]²
        let exact = 4.0 * (1.0f64 + 0.04).sqrt();
        assert!((area - exact).abs() < 1e-12, "{area} {exact}");
    }

    #[test]
    fn sphere_area_converges() {
        let bbox = BoxRegion::new(vec![-1.13, -1.11, -1.12], vec![1.1, 1.12, 1.115]).unwrap();
        let sphere = |p: &[f64]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0;
        let err = |n| {
            let a: f64 = march_tetrahedra(&sphere, &bbox, n).iter().map(|t| t.area).sum();
            (a - 4.0 * std::f64::consts::PI).abs()
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e2 < e1 / 2.5, "{e1} {e2}");
    }
}
