//! Fracture transport forms, the gradient terms of the extended model, and
//! the bulk–fracture coupling.

use crate::error::{Error, Result};
use crate::mesh::{facet_point, EdgeKind, InterfaceGrid, Mesh};
use crate::quadrature::segment_rule;
use crate::space::{eval_segment_basis, segment_dim, DgSpace, ElementMap, InterfaceSpace, MAX_DEGREE};
use crate::sparse::{CooMatrix, CsrMatrix};

use super::{penalty, quad_order, AssemblyOptions, Convention, ReducedData, Shape};

/// Fracture basis at one point: values and `t`-derivatives.
struct Seg {
    n: usize,
    vals: [f64; MAX_DEGREE + 1],
    ders: [f64; MAX_DEGREE + 1],
}

impl Seg {
    fn at(space: &InterfaceSpace, grid: &InterfaceGrid, e: usize, t: f64) -> Self {
        let el = &grid.elements[e];
        let k = space.degree(e);
        let mut s = Self {
            n: segment_dim(k),
            vals: [0.0; MAX_DEGREE + 1],
            ders: [0.0; MAX_DEGREE + 1],
        };
        eval_segment_basis(k, (t - el.t0) / el.length(), &mut s.vals, &mut s.ders);
        for d in s.ders.iter_mut() {
            *d /= el.length();
        }
        s
    }
}

/// Bulk basis values on the two walls paired with an interface element.
struct WallTraces {
    dofs: [std::ops::Range<usize>; 2],
    shapes: [Shape; 2],
}

impl WallTraces {
    fn at(mesh: &Mesh, data: &ReducedData<'_>, space: &DgSpace, grid: &InterfaceGrid, e: usize, t: f64) -> Self {
        let facets = grid.elements[e].facets;
        let side = |i: usize| {
            let el = mesh.facets[facets[i]].left;
            let x = facet_point(mesh, data.frame, facets[i], t);
            (space.dofs(el), Shape::at(&ElementMap::of(mesh, el), space.degree(el), x))
        };
        let (d1, s1) = side(0);
        let (d2, s2) = side(1);
        Self {
            dofs: [d1, d2],
            shapes: [s1, s2],
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn assemble(
    mesh: &Mesh,
    grid: &InterfaceGrid,
    bulk: &DgSpace,
    space: &InterfaceSpace,
    data: &ReducedData<'_>,
    gradient_terms: bool,
    opts: &AssemblyOptions,
    coo: &mut CooMatrix,
    rhs: &mut [f64],
) -> Result<()> {
    let off = bulk.n_dofs();
    let perm = data.bulk.perm;
    let kf = (0..grid.elements.len()).map(|e| space.degree(e)).max().unwrap_or(1);
    let kmax = kf.max(bulk.max_degree());
    let rule = segment_rule(quad_order(opts, kmax, 2 * kmax + 4)?);

    for (e, el) in grid.elements.iter().enumerate() {
        let len = el.length();
        let idofs = space.dofs(e);
        for (s, w) in rule.iter() {
            let t = el.t0 + s * len;
            let wt = w * len;
            let ap = data.profile.sample(t);
            let d = ap.d();
            let dd = ap.slope();
            let kg = perm.gamma_tangential.at(t);
            let kp = perm.gamma_perp.at(t);
            let beta = perm.beta(t, d);
            let psi = Seg::at(space, grid, e, t);
            let tr = WallTraces::at(mesh, data, bulk, grid, e, t);

            for i in 0..psi.n {
                let gi = off + idofs.start + i;
                for j in 0..psi.n {
                    let gj = off + idofs.start + j;
                    let dp = dd * psi.vals[j] + d * psi.ders[j];
                    coo.push(gi, gj, wt * kg * dp * psi.ders[i]);
                }
                rhs[gi] += wt * (data.source_gamma)(t) * psi.vals[i];
            }

            if gradient_terms {
                let slopes = [ap.slope1, ap.slope2];
                for i in 0..psi.n {
                    let gi = off + idofs.start + i;
                    for side in 0..2 {
                        for (j, gj) in tr.dofs[side].clone().enumerate() {
                            let v = -wt * kg * slopes[side] * tr.shapes[side].vals[j] * psi.ders[i];
                            coo.push(gi, gj, v);
                        }
                    }
                }
            }

            push_coupling(coo, off + idofs.start, &psi, &tr, wt, kp / d, beta);
        }
    }

    for edge in &grid.edges {
        let t = edge.t;
        let ap = data.profile.sample(t);
        let d = ap.d();
        let dd = ap.slope();
        let kg = perm.gamma_tangential.at(t);
        match edge.kind {
            EdgeKind::Interior => {
                let (Some(l), Some(r)) = (edge.left, edge.right) else {
                    return Err(Error::InterfaceGrid(format!("interior edge at t = {t} lacks a neighbor")));
                };
                let mu = penalty(
                    &[
                        (space.degree(l), grid.elements[l].length()),
                        (space.degree(r), grid.elements[r].length()),
                    ],
                    1,
                    opts.mu0_gamma,
                )?;
                let elems = [l, r];
                let sign = [1.0, -1.0];
                let psis = [Seg::at(space, grid, l, t), Seg::at(space, grid, r, t)];
                for si in 0..2 {
                    let rows = space.dofs(elems[si]);
                    for i in 0..psis[si].n {
                        let gi = off + rows.start + i;
                        let phi = psis[si].vals[i];
                        for sj in 0..2 {
                            let cols = space.dofs(elems[sj]);
                            for j in 0..psis[sj].n {
                                let gj = off + cols.start + j;
                                let p = psis[sj].vals[j];
                                let flux_p = kg * (dd * p + d * psis[sj].ders[j]);
                                let v = mu * sign[si] * sign[sj] * phi * p
                                    - 0.5 * sign[si] * phi * flux_p
                                    - 0.5 * sign[sj] * d * p * kg * psis[si].ders[i];
                                coo.push(gi, gj, v);
                            }
                        }
                    }
                }
                if gradient_terms {
                    let traces = [
                        WallTraces::at(mesh, data, bulk, grid, l, t),
                        WallTraces::at(mesh, data, bulk, grid, r, t),
                    ];
                    for si in 0..2 {
                        let rows = space.dofs(elems[si]);
                        for i in 0..psis[si].n {
                            let gi = off + rows.start + i;
                            let jump_phi = sign[si] * psis[si].vals[i];
                            for tr in &traces {
                                for side in 0..2 {
                                    let coef = match opts.convention {
                                        // {K (p1 ∇d1 + p2 ∇d2)}
                                        Convention::Consistent => 0.5 * kg * [ap.slope1, ap.slope2][side],
                                        // {p} K ∇d with {p} the mean over both walls and both edge sides
                                        Convention::Printed => 0.25 * kg * dd,
                                    };
                                    for (j, gj) in tr.dofs[side].clone().enumerate() {
                                        coo.push(gi, gj, jump_phi * coef * tr.shapes[side].vals[j]);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            EdgeKind::Boundary => {
                let (e, n) = match (edge.left, edge.right) {
                    (Some(l), None) => (l, 1.0),
                    (None, Some(r)) => (r, -1.0),
                    _ => return Err(Error::InterfaceGrid(format!("boundary edge at t = {t} is malformed"))),
                };
                let mu = penalty(&[(space.degree(e), grid.elements[e].length())], 1, opts.mu0_gamma)?;
                let psi = Seg::at(space, grid, e, t);
                let rows = space.dofs(e);
                let g = (data.boundary_gamma)(t);
                let sym = match opts.convention {
                    Convention::Consistent => -1.0,
                    Convention::Printed => 1.0,
                };
                for i in 0..psi.n {
                    let gi = off + rows.start + i;
                    for j in 0..psi.n {
                        let gj = off + rows.start + j;
                        let flux_p = kg * (dd * psi.vals[j] + d * psi.ders[j]) * n;
                        let v = mu * psi.vals[i] * psi.vals[j] - psi.vals[i] * flux_p
                            + sym * d * psi.vals[j] * kg * psi.ders[i] * n;
                        coo.push(gi, gj, v);
                    }
                    rhs[gi] += mu * g * psi.vals[i] - d * g * kg * psi.ders[i] * n;
                }
                if gradient_terms {
                    let tr = WallTraces::at(mesh, data, bulk, grid, e, t);
                    let k_factor = match opts.convention {
                        Convention::Consistent => kg,
                        Convention::Printed => 1.0,
                    };
                    let slopes = [ap.slope1, ap.slope2];
                    for i in 0..psi.n {
                        let gi = off + rows.start + i;
                        for side in 0..2 {
                            for (j, gj) in tr.dofs[side].clone().enumerate() {
                                let v = psi.vals[i] * k_factor * slopes[side] * tr.shapes[side].vals[j] * n;
                                coo.push(gi, gj, v);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// `(K⊥/d)[p][φ] + β (p_Γ − {p})(φ_Γ − {φ})` at one quadrature point.
fn push_coupling(coo: &mut CooMatrix, iface_start: usize, psi: &Seg, tr: &WallTraces, wt: f64, k_over_d: f64, beta: f64) {
    // Unknown coefficients: jump (p2 - p1) and excess p_Γ - (p1 + p2)/2.
    let mut idx: Vec<usize> = Vec::with_capacity(psi.n + 20);
    let mut jump: Vec<f64> = Vec::with_capacity(psi.n + 20);
    let mut excess: Vec<f64> = Vec::with_capacity(psi.n + 20);
    for side in 0..2 {
        let sign = if side == 0 { -1.0 } else { 1.0 };
        for (j, g) in tr.dofs[side].clone().enumerate() {
            let v = tr.shapes[side].vals[j];
            idx.push(g);
            jump.push(sign * v);
            excess.push(-0.5 * v);
        }
    }
    for j in 0..psi.n {
        idx.push(iface_start + j);
        jump.push(0.0);
        excess.push(psi.vals[j]);
    }
    for a in 0..idx.len() {
        for b in 0..idx.len() {
            let v = k_over_d * jump[a] * jump[b] + beta * excess[a] * excess[b];
            if v != 0.0 {
                coo.push(idx[a], idx[b], wt * v);
            }
        }
    }
}

/// The coupling form alone, over bulk and fracture dofs.
pub fn coupling_matrix(
    mesh: &Mesh,
    grid: &InterfaceGrid,
    bulk: &DgSpace,
    space: &InterfaceSpace,
    data: &ReducedData<'_>,
    opts: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let off = bulk.n_dofs();
    let n = off + space.n_dofs();
    let mut coo = CooMatrix::new(n, n);
    let perm = data.bulk.perm;
    let kmax = bulk.max_degree().max((0..grid.elements.len()).map(|e| space.degree(e)).max().unwrap_or(1));
    let rule = segment_rule(quad_order(opts, kmax, 2 * kmax + 4)?);
    for (e, el) in grid.elements.iter().enumerate() {
        for (s, w) in rule.iter() {
            let t = el.t0 + s * el.length();
            let d = data.profile.sample(t).d();
            let psi = Seg::at(space, grid, e, t);
            let tr = WallTraces::at(mesh, data, bulk, grid, e, t);
            push_coupling(
                &mut coo,
                off + space.dofs(e).start,
                &psi,
                &tr,
                w * el.length(),
                perm.gamma_perp.at(t) / d,
                perm.beta(t, d),
            );
        }
    }
    Ok(coo.to_csr())
}
