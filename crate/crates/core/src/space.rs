//! Broken polynomial spaces: monomials on the reference triangle mapped
//! affinely onto each bulk element, and monomials in the local parameter on
//! each interface element.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{InterfaceGrid, Mesh};

pub const MAX_DEGREE: usize = 3;

pub fn triangle_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

pub fn segment_dim(k: usize) -> usize {
    k + 1
}

fn check_degree(k: usize) -> Result<()> {
    if !(1..=MAX_DEGREE).contains(&k) {
        return Err(Error::InvalidParameter {
            name: "degree",
            reason: format!("polynomial degree must be between 1 and {MAX_DEGREE}, got {k}"),
        });
    }
    Ok(())
}

/// Affine map `x = origin + J ξ` from the reference triangle onto an element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMap {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    inv: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn new(p: [Point; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        Self {
            origin: p[0],
            jac,
            inv,
            det,
        }
    }

    pub fn of(mesh: &Mesh, e: usize) -> Self {
        Self::new(mesh.element_vertices(e))
    }

    pub fn to_phys(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_ref(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient: `J^{-T} ∇_ξ`.
    pub fn grad(&self, g: [f64; 2]) -> Point {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Monomials `ξ^a η^b`, `a + b ≤ k`, ordered by total degree then by `b`.
/// Fills values and reference gradients.
pub fn eval_triangle_basis(k: usize, xi: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]) {
    let mut px = [1.0; MAX_DEGREE + 1];
    let mut py = [1.0; MAX_DEGREE + 1];
    for i in 1..=k {
        px[i] = px[i - 1] * xi[0];
        py[i] = py[i - 1] * xi[1];
    }
    let mut idx = 0;
    for m in 0..=k {
        for b in 0..=m {
            let a = m - b;
            vals[idx] = px[a] * py[b];
            let dx = if a > 0 { a as f64 * px[a - 1] * py[b] } else { 0.0 };
            let dy = if b > 0 { b as f64 * px[a] * py[b - 1] } else { 0.0 };
            grads[idx] = [dx, dy];
            idx += 1;
        }
    }
}

/// Monomials `s^a`, `a ≤ k`, with their derivatives in `s`.
pub fn eval_segment_basis(k: usize, s: f64, vals: &mut [f64], ders: &mut [f64]) {
    let mut p = 1.0;
    for a in 0..=k {
        vals[a] = p;
        ders[a] = if a > 0 { a as f64 * s.powi(a as i32 - 1) } else { 0.0 };
        p *= s;
    }
}

/// Broken polynomial space on a bulk mesh with global dof numbering in
/// element order.
#[derive(Clone, Debug, PartialEq)]
pub struct DgSpace {
    degrees: Vec<usize>,
    offsets: Vec<usize>,
}

impl DgSpace {
    pub fn uniform(mesh: &Mesh, k: usize) -> Result<Self> {
        Self::with_degrees(vec![k; mesh.n_elements()])
    }

    pub fn with_degrees(degrees: Vec<usize>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        offsets.push(0);
        for &k in &degrees {
            check_degree(k)?;
            offsets.push(offsets.last().unwrap() + triangle_dim(k));
        }
        Ok(Self { degrees, offsets })
    }

    pub fn n_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_elements(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree(&self, e: usize) -> usize {
        self.degrees[e]
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(1)
    }

    pub fn dofs(&self, e: usize) -> Range<usize> {
        self.offsets[e]..self.offsets[e + 1]
    }

    /// Value of the field `coeffs` on element `e` at physical point `x`.
    pub fn eval(&self, mesh: &Mesh, coeffs: &[f64], e: usize, x: Point) -> f64 {
        let k = self.degree(e);
        let mut v = [0.0; 10];
        let mut g = [[0.0; 2]; 10];
        let xi = ElementMap::of(mesh, e).to_ref(x);
        eval_triangle_basis(k, xi, &mut v, &mut g);
        self.dofs(e).zip(v.iter()).map(|(i, b)| coeffs[i] * b).sum()
    }

    /// Gradient of the field `coeffs` on element `e` at physical point `x`.
    pub fn eval_grad(&self, mesh: &Mesh, coeffs: &[f64], e: usize, x: Point) -> Point {
        let k = self.degree(e);
        let mut v = [0.0; 10];
        let mut g = [[0.0; 2]; 10];
        let map = ElementMap::of(mesh, e);
        eval_triangle_basis(k, map.to_ref(x), &mut v, &mut g);
        let mut out = [0.0; 2];
        for (i, gr) in self.dofs(e).zip(g.iter()) {
            let p = map.grad(*gr);
            out[0] += coeffs[i] * p[0];
            out[1] += coeffs[i] * p[1];
        }
        out
    }
}

/// Broken polynomial space on the fracture grid.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceSpace {
    degrees: Vec<usize>,
    offsets: Vec<usize>,
}

impl InterfaceSpace {
    pub fn uniform(grid: &InterfaceGrid, k: usize) -> Result<Self> {
        let mut offsets = Vec::with_capacity(grid.elements.len() + 1);
        offsets.push(0);
        check_degree(k)?;
        for _ in &grid.elements {
            offsets.push(offsets.last().unwrap() + segment_dim(k));
        }
        Ok(Self {
            degrees: vec![k; grid.elements.len()],
            offsets,
        })
    }

    pub fn n_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn degree(&self, e: usize) -> usize {
        self.degrees[e]
    }

    pub fn dofs(&self, e: usize) -> Range<usize> {
        self.offsets[e]..self.offsets[e + 1]
    }

    /// Value and `t`-derivative of the field on interface element `e`.
    pub fn eval(&self, grid: &InterfaceGrid, coeffs: &[f64], e: usize, t: f64) -> (f64, f64) {
        let el = &grid.elements[e];
        let len = el.length();
        let mut v = [0.0; MAX_DEGREE + 1];
        let mut d = [0.0; MAX_DEGREE + 1];
        eval_segment_basis(self.degree(e), (t - el.t0) / len, &mut v, &mut d);
        let mut val = 0.0;
        let mut der = 0.0;
        for (j, i) in self.dofs(e).enumerate() {
            val += coeffs[i] * v[j];
            der += coeffs[i] * d[j] / len;
        }
        (val, der)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_rule;

    #[test]
    fn dimensions() {
        assert_eq!([1, 2, 3].map(triangle_dim), [3, 6, 10]);
        assert_eq!([1, 2, 3].map(segment_dim), [2, 3, 4]);
        let mesh = Mesh::unit_square(3).unwrap();
        let s = DgSpace::uniform(&mesh, 2).unwrap();
        assert_eq!(s.n_dofs(), 18 * 6);
        assert!(DgSpace::uniform(&mesh, 0).is_err());
        assert!(DgSpace::uniform(&mesh, 4).is_err());
    }

    #[test]
    fn element_map_round_trip() {
        let map = ElementMap::new([[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]]);
        let xi = [0.3, 0.25];
        let back = map.to_ref(map.to_phys(xi));
        assert!((back[0] - xi[0]).abs() < 1e-15 && (back[1] - xi[1]).abs() < 1e-15);
        assert!(map.det > 0.0);
    }

    fn gram_determinant(k: usize) -> f64 {
        let n = triangle_dim(k);
        let mut gram = vec![vec![0.0; n]; n];
        let mut v = [0.0; 10];
        let mut g = [[0.0; 2]; 10];
        for (p, w) in triangle_rule(2 * k).iter() {
            eval_triangle_basis(k, p, &mut v, &mut g);
            for i in 0..n {
                for j in 0..n {
                    gram[i][j] += w * v[i] * v[j];
                }
            }
        }
        // Gaussian elimination without pivoting: the Gram matrix is SPD.
        let mut det = 1.0;
        for c in 0..n {
            det *= gram[c][c];
            for r in c + 1..n {
                let f = gram[r][c] / gram[c][c];
                for k2 in c..n {
                    gram[r][k2] -= f * gram[c][k2];
                }
            }
        }
        det
    }

    #[test]
    fn basis_is_linearly_independent() {
        for k in 1..=MAX_DEGREE {
            assert!(gram_determinant(k) > 0.0, "k = {k}");
        }
    }

    #[test]
    fn basis_gradients_match_finite_differences() {
        let k = 3;
        let n = triangle_dim(k);
        let xi = [0.21, 0.37];
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        let mut vp = vec![0.0; n];
        let mut vm = vec![0.0; n];
        let mut scratch = vec![[0.0; 2]; n];
        eval_triangle_basis(k, xi, &mut v, &mut g);
        let eps = 1e-6;
        for dir in 0..2 {
            let mut p = xi;
            let mut m = xi;
            p[dir] += eps;
            m[dir] -= eps;
            eval_triangle_basis(k, p, &mut vp, &mut scratch);
            eval_triangle_basis(k, m, &mut vm, &mut scratch);
            for i in 0..n {
                let fd = (vp[i] - vm[i]) / (2.0 * eps);
                assert!((fd - g[i][dir]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn linear_field_evaluates_exactly() {
        // Coefficients of x ↦ 1 - x1 in the local monomial basis of each element.
        let mesh = Mesh::unit_square(2).unwrap();
        let space = DgSpace::uniform(&mesh, 1).unwrap();
        let mut c = vec![0.0; space.n_dofs()];
        for e in 0..mesh.n_elements() {
            let map = ElementMap::of(&mesh, e);
            let r = space.dofs(e).start;
            c[r] = 1.0 - map.origin[0];
            c[r + 1] = -map.jac[0][0];
            c[r + 2] = -map.jac[0][1];
        }
        for e in 0..mesh.n_elements() {
            let x = ElementMap::of(&mesh, e).to_phys([0.2, 0.3]);
            assert!((space.eval(&mesh, &c, e, x) - (1.0 - x[0])).abs() < 1e-15);
            let g = space.eval_grad(&mesh, &c, e, x);
            assert!((g[0] + 1.0).abs() < 1e-14 && g[1].abs() < 1e-14);
        }
    }
}
