//! Assembly of the discrete systems: the SIPG bulk form, the interface
//! transport forms and the bulk–fracture coupling form.

mod bulk;
mod interface;

use crate::error::{Error, Result};
use crate::geometry::{mat_vec, ApertureProfile, FractureFrame, PermeabilityData, Point, Tensor, TensorField};
use crate::mesh::{InterfaceGrid, Mesh, MeshMode, Subdomain};
use crate::models::ModelVariant;
use crate::space::{eval_triangle_basis, DgSpace, ElementMap, InterfaceSpace};
use crate::sparse::{CooMatrix, CsrMatrix, SparseSystem};

pub use interface::coupling_matrix;

/// Sign and flux conventions for the interface boundary and edge terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Symmetry term on boundary edges subtracted, matching the right-hand
    /// side, and edge fluxes of the gradient terms taken as the average of
    /// `K_Γ (p1 ∇d1 + p2 ∇d2)`.
    #[default]
    Consistent,
    /// Boundary symmetry term added, edge term `{p} [φ] K_Γ ∇d`, and
    /// boundary gradient flux without `K_Γ`.
    Printed,
}

/// Element length entering the bulk facet penalty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyLength {
    /// Maximum edge length of the element.
    MaxEdge,
    /// Height of the element over the facet, `2|T| / |F|`. Never larger than
    /// the maximum edge length, and the right scale on thin elements.
    #[default]
    FacetHeight,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    pub mu0_bulk: f64,
    pub mu0_gamma: f64,
    pub penalty_length: PenaltyLength,
    /// Overrides the default quadrature order `2k + 2` (bulk) and
    /// `2k + 4` (fracture).
    pub quad_order: Option<usize>,
    pub convention: Convention,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            mu0_bulk: 10.0,
            mu0_gamma: 10.0,
            penalty_length: PenaltyLength::FacetHeight,
            quad_order: None,
            convention: Convention::Consistent,
        }
    }
}

/// Source and Dirichlet data on the bulk.
pub struct BulkData<'a> {
    pub perm: &'a PermeabilityData,
    pub source: &'a dyn Fn(Point) -> f64,
    pub boundary: &'a dyn Fn(Point) -> f64,
}

/// Bulk data plus fracture geometry, source and Dirichlet data at the
/// fracture tips.
pub struct ReducedData<'a> {
    pub bulk: BulkData<'a>,
    pub profile: &'a ApertureProfile,
    pub frame: &'a FractureFrame,
    pub source_gamma: &'a dyn Fn(f64) -> f64,
    pub boundary_gamma: &'a dyn Fn(f64) -> f64,
}

/// Facet penalty `μ0 (k+1)(k+n)/h`, maximized over the adjacent elements.
///
/// `neighbors` holds `(k_T, h_T)` of one (boundary) or two (interior)
/// elements; `dim` is the dimension of the elements.
pub fn penalty(neighbors: &[(usize, f64)], dim: usize, mu0: f64) -> Result<f64> {
    if !(mu0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu0",
            reason: format!("penalty constant must be positive, got {mu0}"),
        });
    }
    let mut best = 0.0f64;
    for &(k, h) in neighbors {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("element size must be positive, got {h}"),
            });
        }
        best = best.max(((k + 1) * (k + dim)) as f64 / h);
    }
    Ok(mu0 * best)
}

/// Bulk facet penalty in two space dimensions.
pub fn penalty_bulk(neighbors: &[(usize, f64)], mu0: f64) -> Result<f64> {
    penalty(neighbors, 2, mu0)
}

/// Classical DG jump and average on an interior facet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DgJump {
    /// Scalar traces: the jump is the vector `φ1 n1 + φ2 n2`.
    Scalar { jump: Point, average: f64 },
    /// Vector traces: the jump is the scalar `ζ1·n1 + ζ2·n2`.
    Vector { jump: f64, average: Point },
}

pub fn dg_jump_avg(values: [&[f64]; 2], normals: [Point; 2]) -> Result<DgJump> {
    let [a, b] = values;
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    match a.len() {
        1 => Ok(DgJump::Scalar {
            jump: [
                a[0] * normals[0][0] + b[0] * normals[1][0],
                a[0] * normals[0][1] + b[0] * normals[1][1],
            ],
            average: 0.5 * (a[0] + b[0]),
        }),
        2 => Ok(DgJump::Vector {
            jump: a[0] * normals[0][0] + a[1] * normals[0][1] + b[0] * normals[1][0] + b[1] * normals[1][1],
            average: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        }),
        n => Err(Error::DimensionMismatch { expected: 2, got: n }),
    }
}

pub(crate) fn bulk_tensor(perm: &PermeabilityData, tag: Subdomain) -> Result<&TensorField> {
    match tag {
        Subdomain::Bulk1 => Ok(&perm.bulk1),
        Subdomain::Bulk2 => Ok(&perm.bulk2),
        Subdomain::Fracture => perm.fracture.as_ref().ok_or(Error::MissingPermeability("fracture")),
    }
}

pub(crate) fn quad_order(opts: &AssemblyOptions, k: usize, default: usize) -> Result<usize> {
    match opts.quad_order {
        Some(q) if q < 2 * k => Err(Error::QuadratureOrder { order: q, degree: k }),
        Some(q) => Ok(q),
        None => Ok(default),
    }
}

/// Basis values and physical gradients of one element at one point.
pub(crate) struct Shape {
    pub n: usize,
    pub vals: [f64; 10],
    pub grads: [Point; 10],
}

impl Shape {
    pub fn at(map: &ElementMap, k: usize, x: Point) -> Self {
        let mut s = Self {
            n: crate::space::triangle_dim(k),
            vals: [0.0; 10],
            grads: [[0.0; 2]; 10],
        };
        let mut g = [[0.0; 2]; 10];
        eval_triangle_basis(k, map.to_ref(x), &mut s.vals, &mut g);
        for i in 0..s.n {
            s.grads[i] = map.grad(g[i]);
        }
        s
    }

    /// `K ∇φ_i`.
    pub fn flux(&self, k: &Tensor, i: usize) -> Point {
        mat_vec(k, self.grads[i])
    }
}

/// Assembles the full-dimensional system on a mesh whose fracture, if any,
/// is resolved by elements.
pub fn assemble_full(
    mesh: &Mesh,
    space: &DgSpace,
    data: &BulkData<'_>,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    if space.n_elements() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_elements(),
            got: space.n_elements(),
        });
    }
    if matches!(mesh.mode, Some(MeshMode::CurvedReduced | MeshMode::Rectified)) {
        return Err(Error::VariantMeshMismatch {
            variant: ModelVariant::Full.name().into(),
            mode: mesh.mode.unwrap().name().into(),
        });
    }
    data.perm.validate()?;
    let n = space.n_dofs();
    let mut coo = CooMatrix::new(n, n);
    let mut rhs = vec![0.0; n];
    bulk::assemble(mesh, space, data, opts, &mut coo, &mut rhs)?;
    Ok(SparseSystem {
        matrix: coo.to_csr(),
        rhs,
        n_bulk: n,
        n_interface: 0,
    })
}

/// Assembles a reduced model: bulk dofs first, then fracture dofs.
///
/// Variants `I`/`II` need a curved-reduced mesh and `I-R`/`II-R` a
/// rectified one. Without aperture gradients all four variants share the
/// same forms, so such profiles are accepted on either mesh kind.
pub fn assemble_reduced(
    mesh: &Mesh,
    grid: &InterfaceGrid,
    bulk_space: &DgSpace,
    iface_space: &InterfaceSpace,
    data: &ReducedData<'_>,
    variant: ModelVariant,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    check_variant_mesh(mesh, data.profile, variant)?;
    if bulk_space.n_elements() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_elements(),
            got: bulk_space.n_elements(),
        });
    }
    data.bulk.perm.validate()?;
    let nb = bulk_space.n_dofs();
    let n = nb + iface_space.n_dofs();
    let mut coo = CooMatrix::new(n, n);
    let mut rhs = vec![0.0; n];
    bulk::assemble(mesh, bulk_space, &data.bulk, opts, &mut coo, &mut rhs)?;
    interface::assemble(
        mesh,
        grid,
        bulk_space,
        iface_space,
        data,
        variant.transport_gradients(),
        opts,
        &mut coo,
        &mut rhs,
    )?;
    Ok(SparseSystem {
        matrix: coo.to_csr(),
        rhs,
        n_bulk: nb,
        n_interface: iface_space.n_dofs(),
    })
}

pub(crate) fn check_variant_mesh(mesh: &Mesh, profile: &ApertureProfile, variant: ModelVariant) -> Result<()> {
    let mismatch = || Error::VariantMeshMismatch {
        variant: variant.name().into(),
        mode: mesh.mode.map_or("unstructured", |m| m.name()).into(),
    };
    if variant == ModelVariant::Full {
        return Err(mismatch());
    }
    let expected = variant.mesh_mode();
    match mesh.mode {
        Some(m) if m == expected => Ok(()),
        Some(MeshMode::CurvedReduced | MeshMode::Rectified) if profile.is_gradient_free() => Ok(()),
        _ => Err(mismatch()),
    }
}

/// Matrix of `assemble_full` with unit data, for quick structural checks.
pub fn bulk_matrix(mesh: &Mesh, space: &DgSpace, perm: &PermeabilityData, opts: &AssemblyOptions) -> Result<CsrMatrix> {
    let zero = |_: Point| 0.0;
    let data = BulkData {
        perm,
        source: &zero,
        boundary: &zero,
    };
    let n = space.n_dofs();
    let mut coo = CooMatrix::new(n, n);
    let mut rhs = vec![0.0; n];
    bulk::assemble(mesh, space, &data, opts, &mut coo, &mut rhs)?;
    Ok(coo.to_csr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        assert!((penalty_bulk(&[(1, 0.1)], 1.0).unwrap() - 60.0).abs() < 1e-12);
        assert_eq!(
            penalty_bulk(&[(1, 0.1), (1, 0.1)], 1.0).unwrap(),
            penalty_bulk(&[(1, 0.1)], 1.0).unwrap()
        );
        assert!((penalty_bulk(&[(1, 0.1), (1, 0.05)], 1.0).unwrap() - 120.0).abs() < 1e-12);
        assert!(penalty_bulk(&[(1, 0.0)], 1.0).is_err());
        assert!(penalty_bulk(&[(1, 0.1)], 0.0).is_err());
    }

    #[test]
    fn dg_jump_examples() {
        let n = [[1.0, 0.0], [-1.0, 0.0]];
        match dg_jump_avg([&[2.5], &[2.5]], n).unwrap() {
            DgJump::Scalar { jump, average } => {
                assert_eq!(jump, [0.0, 0.0]);
                assert_eq!(average, 2.5);
            }
            _ => unreachable!(),
        }
        match dg_jump_avg([&[1.0], &[3.0]], n).unwrap() {
            DgJump::Scalar { jump, average } => {
                assert_eq!(jump, [-2.0, 0.0]);
                assert_eq!(average, 2.0);
            }
            _ => unreachable!(),
        }
        match dg_jump_avg([&[0.3, 0.7], &[0.3, 0.7]], n).unwrap() {
            DgJump::Vector { jump, .. } => assert_eq!(jump, 0.0),
            _ => unreachable!(),
        }
        assert!(dg_jump_avg([&[1.0], &[1.0, 2.0]], n).is_err());
    }
}
