//! Symmetric interior penalty form on the bulk mesh with Nitsche boundary
//! terms.

use crate::error::Result;
use crate::geometry::{dot, Point};
use crate::mesh::{FacetClass, Mesh};
use crate::quadrature::{segment_rule, triangle_rule};
use crate::space::{DgSpace, ElementMap};
use crate::sparse::CooMatrix;

use super::{bulk_tensor, penalty_bulk, quad_order, AssemblyOptions, BulkData, PenaltyLength, Shape};

/// Penalty length of element `e` seen from a facet of length `len`.
fn penalty_h(mesh: &Mesh, e: usize, len: f64, opts: &AssemblyOptions) -> f64 {
    match opts.penalty_length {
        PenaltyLength::MaxEdge => mesh.h(e),
        PenaltyLength::FacetHeight => 2.0 * mesh.area(e) / len,
    }
}

/// Outward unit normal of `e` on the facet `a`–`b`.
fn outward_normal(mesh: &Mesh, e: usize, a: Point, b: Point) -> Point {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
    let p = mesh.element_vertices(e);
    let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
    if dot(n, [c[0] - a[0], c[1] - a[1]]) > 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

pub(super) fn assemble(
    mesh: &Mesh,
    space: &DgSpace,
    data: &BulkData<'_>,
    opts: &AssemblyOptions,
    coo: &mut CooMatrix,
    rhs: &mut [f64],
) -> Result<()> {
    let kmax = space.max_degree();
    let vol_rule = triangle_rule(quad_order(opts, kmax, 2 * kmax + 2)?);
    let face_rule = segment_rule(quad_order(opts, kmax, 2 * kmax + 2)?);

    for e in 0..mesh.n_elements() {
        let k = space.degree(e);
        let map = ElementMap::of(mesh, e);
        let field = bulk_tensor(data.perm, mesh.tags[e])?;
        let dofs = space.dofs(e);
        let n = dofs.len();
        let mut local = [[0.0; 10]; 10];
        for (xi, w) in vol_rule.iter() {
            let x = map.to_phys(xi);
            let kt = field.at(x);
            let s = Shape::at(&map, k, x);
            let wd = w * map.det;
            let q = (data.source)(x);
            for i in 0..n {
                let fi = s.flux(&kt, i);
                for j in 0..n {
                    local[i][j] += wd * dot(fi, s.grads[j]);
                }
                rhs[dofs.start + i] += wd * q * s.vals[i];
            }
        }
        for i in 0..n {
            for j in 0..n {
                coo.push(dofs.start + i, dofs.start + j, local[i][j]);
            }
        }
    }

    for facet in &mesh.facets {
        let [va, vb] = facet.vertices;
        let a = mesh.vertices[va];
        let b = mesh.vertices[vb];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let l = facet.left;
        let nl = outward_normal(mesh, l, a, b);
        match facet.right {
            Some(r) => {
                let mu = penalty_bulk(
                    &[
                        (space.degree(l), penalty_h(mesh, l, len, opts)),
                        (space.degree(r), penalty_h(mesh, r, len, opts)),
                    ],
                    opts.mu0_bulk,
                )?;
                let maps = [ElementMap::of(mesh, l), ElementMap::of(mesh, r)];
                let fields = [bulk_tensor(data.perm, mesh.tags[l])?, bulk_tensor(data.perm, mesh.tags[r])?];
                let dofs = [space.dofs(l), space.dofs(r)];
                let sign = [1.0, -1.0];
                let mut local = [[[[0.0; 10]; 10]; 2]; 2];
                for (s, w) in face_rule.iter() {
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    let wl = w * len;
                    let shapes = [
                        Shape::at(&maps[0], space.degree(l), x),
                        Shape::at(&maps[1], space.degree(r), x),
                    ];
                    let kts = [fields[0].at(x), fields[1].at(x)];
                    // Normal fluxes K∇φ·n_L of every basis function on both sides.
                    let mut fluxn = [[0.0; 10]; 2];
                    for side in 0..2 {
                        for i in 0..shapes[side].n {
                            fluxn[side][i] = dot(shapes[side].flux(&kts[side], i), nl);
                        }
                    }
                    for si in 0..2 {
                        for i in 0..shapes[si].n {
                            let phi = shapes[si].vals[i];
                            for sj in 0..2 {
                                for j in 0..shapes[sj].n {
                                    let p = shapes[sj].vals[j];
                                    let v = mu * sign[si] * sign[sj] * phi * p
                                        - 0.5 * sign[si] * phi * fluxn[sj][j]
                                        - 0.5 * sign[sj] * p * fluxn[si][i];
                                    local[si][sj][i][j] += wl * v;
                                }
                            }
                        }
                    }
                }
                for si in 0..2 {
                    for sj in 0..2 {
                        for (i, gi) in dofs[si].clone().enumerate() {
                            for (j, gj) in dofs[sj].clone().enumerate() {
                                coo.push(gi, gj, local[si][sj][i][j]);
                            }
                        }
                    }
                }
            }
            None if facet.class == FacetClass::Boundary => {
                let k = space.degree(l);
                let mu = penalty_bulk(&[(k, penalty_h(mesh, l, len, opts))], opts.mu0_bulk)?;
                let map = ElementMap::of(mesh, l);
                let field = bulk_tensor(data.perm, mesh.tags[l])?;
                let dofs = space.dofs(l);
                let n = dofs.len();
                let mut local = [[0.0; 10]; 10];
                for (s, w) in face_rule.iter() {
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    let wl = w * len;
                    let sh = Shape::at(&map, k, x);
                    let kt = field.at(x);
                    let g = (data.boundary)(x);
                    let mut fluxn = [0.0; 10];
                    for i in 0..n {
                        fluxn[i] = dot(sh.flux(&kt, i), nl);
                    }
                    for i in 0..n {
                        for j in 0..n {
                            local[i][j] +=
                                wl * (mu * sh.vals[i] * sh.vals[j] - sh.vals[j] * fluxn[i] - sh.vals[i] * fluxn[j]);
                        }
                        rhs[dofs.start + i] += wl * (mu * g * sh.vals[i] - g * fluxn[i]);
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        coo.push(dofs.start + i, dofs.start + j, local[i][j]);
                    }
                }
            }
            // Wall facets of a reduced mesh: coupled through the fracture forms.
            None => {}
        }
    }
    Ok(())
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::assembly::{assemble_full, bulk_matrix};
    use crate::geometry::{ApertureProfile, FractureFrame, PermeabilityData, Symmetry, TensorField};
    use crate::mesh::{build_bulk_mesh, MeshMode};
    use crate::solver::{solve, SolverMethod};
    use proptest::prelude::*;

    fn spd() -> impl Strategy<Value = [[f64; 2]; 2]> {
        (0.1f64..5.0, 0.1f64..5.0, -1.0f64..1.0).prop_map(|(a, b, r)| {
            let c = r * (a * b).sqrt() * 0.9;
            [[a, c], [c, b]]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn full_system_is_symmetric_for_any_spd_permeability(
            k1 in spd(), k2 in spd(), kf in spd(), d0 in 0.01f64..0.08, k in 1usize..3, n in 4usize..9,
        ) {
            let frame = FractureFrame::vertical(0.5);
            let profile = ApertureProfile::serpentine(d0, Symmetry::Antisymmetric);
            let mesh = build_bulk_mesh(&profile, &frame, MeshMode::Full, 1.0 / n as f64, 2).unwrap();
            let mut perm = PermeabilityData::isotropic(1.0, 1.0, 2.0 / 3.0);
            perm.bulk1 = TensorField::Constant(k1);
            perm.bulk2 = TensorField::Constant(k2);
            perm.fracture = Some(TensorField::Constant(kf));
            let space = DgSpace::uniform(&mesh, k).unwrap();
            let a = bulk_matrix(&mesh, &space, &perm, &AssemblyOptions::default()).unwrap();
            prop_assert!(a.asymmetry() < 1e-10);
        }

        #[test]
        fn polynomials_of_the_element_degree_are_reproduced(
            c in prop::array::uniform3(-2.0f64..2.0), k in 1usize..3, n in 2usize..6,
        ) {
            let mesh = Mesh::unit_square(n).unwrap();
            let perm = PermeabilityData::isotropic(1.0, 1.0, 2.0 / 3.0);
            // Harmonic polynomial of degree k with zero source.
            let exact = move |x: Point| {
                let quad = if k == 2 { c[2] * (x[0] * x[0] - x[1] * x[1]) } else { 0.0 };
                c[0] + c[1] * (x[0] - 2.0 * x[1]) + quad
            };
            let zero = |_: Point| 0.0;
            let data = BulkData { perm: &perm, source: &zero, boundary: &exact };
            let space = DgSpace::uniform(&mesh, k).unwrap();
            let sys = assemble_full(&mesh, &space, &data, &AssemblyOptions::default()).unwrap();
            let (x, _) = solve(&sys, SolverMethod::DirectLu, 1e-12, 1).unwrap();
            for e in 0..mesh.n_elements() {
                let p = ElementMap::of(&mesh, e).to_phys([0.2, 0.3]);
                prop_assert!((space.eval(&mesh, &x, e, p) - exact(p)).abs() < 1e-9);
            }
        }
    }
}
