//! Triangular meshes of the bulk subdomains and of the fracture.
//!
//! Meshes are structured: the unit square is cut into rows of height `1/ny`
//! and, on either side of the fracture, into `nx` columns whose positions
//! follow the fracture walls row by row. Each quadrilateral is split into
//! two triangles along the same diagonal everywhere.

mod interface;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{eval_aperture, ApertureProfile, FractureFrame, Point};

pub use interface::{
    build_interface_grid, facet_point, facet_t_range, intersect_partitions, EdgeKind, InterfaceEdge,
    InterfaceElement, InterfaceGrid,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Bulk1,
    Bulk2,
    Fracture,
}

impl Subdomain {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bulk1 => "bulk1",
            Self::Bulk2 => "bulk2",
            Self::Fracture => "fracture",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bulk1" => Some(Self::Bulk1),
            "bulk2" => Some(Self::Bulk2),
            "fracture" => Some(Self::Fracture),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshMode {
    /// Bulk domains and the fracture, conforming to both walls.
    Full,
    /// Bulk domains only, bounded by the curved walls; the fracture is a gap.
    CurvedReduced,
    /// Bulk domains flattened onto the reference line from both sides.
    Rectified,
}

impl MeshMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::CurvedReduced => "curved-reduced",
            Self::Rectified => "rectified",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FacetClass {
    Interior,
    Boundary,
    GammaSide1,
    GammaSide2,
}

impl FacetClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::Boundary => "boundary",
            Self::GammaSide1 => "gamma1",
            Self::GammaSide2 => "gamma2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub class: FacetClass,
    /// Adjacent element with the smaller index.
    pub left: usize,
    pub right: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
    pub tags: Vec<Subdomain>,
    pub facets: Vec<Facet>,
    /// Facet index of local edge `l`, joining local vertices `l` and `l + 1`.
    pub element_facets: Vec<[usize; 3]>,
    /// Which fracture wall a vertex was placed on, if any.
    pub gamma_side: Vec<Option<u8>>,
    pub mode: Option<MeshMode>,
    h: Vec<f64>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    /// Builds facets and their classes from raw connectivity.
    ///
    /// A facet with a single neighbor is a gamma facet when both of its
    /// vertices are marked as lying on the wall of that neighbor's side;
    /// otherwise it is on the domain boundary. Facets shared by a bulk and a
    /// fracture element are gamma facets of that bulk side.
    pub fn from_elements(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        tags: Vec<Subdomain>,
        gamma_side: Vec<Option<u8>>,
        mode: Option<MeshMode>,
    ) -> Result<Self> {
        if tags.len() != elements.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                got: tags.len(),
            });
        }
        if gamma_side.len() != vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: vertices.len(),
                got: gamma_side.len(),
            });
        }
        let mut inverted = Vec::new();
        for (e, el) in elements.iter().enumerate() {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidParameter {
                    name: "elements",
                    reason: format!("element {e} references a missing vertex"),
                });
            }
            let area = signed_area(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
            if !(area > 0.0) {
                inverted.push(e);
            }
        }
        if !inverted.is_empty() {
            return Err(Error::InvertedElements { ids: inverted });
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut adjacency: Vec<Vec<usize>> = Vec::new();
        let mut facet_vertices: Vec<[usize; 2]> = Vec::new();
        let mut element_facets = vec![[0usize; 3]; elements.len()];
        for (e, el) in elements.iter().enumerate() {
            for l in 0..3 {
                let (a, b) = (el[l], el[(l + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *lookup.entry(key).or_insert_with(|| {
                    adjacency.push(Vec::new());
                    facet_vertices.push([a, b]);
                    adjacency.len() - 1
                });
                adjacency[id].push(e);
                element_facets[e][l] = id;
            }
        }

        let mut facets = Vec::with_capacity(adjacency.len());
        for (id, adj) in adjacency.iter().enumerate() {
            let [a, b] = facet_vertices[id];
            let facet = match adj.as_slice() {
                [e] => {
                    let side = match tags[*e] {
                        Subdomain::Bulk1 => Some(1),
                        Subdomain::Bulk2 => Some(2),
                        Subdomain::Fracture => None,
                    };
                    let on_wall = side.is_some() && gamma_side[a] == side && gamma_side[b] == side;
                    let class = match (on_wall, side) {
                        (true, Some(1)) => FacetClass::GammaSide1,
                        (true, Some(2)) => FacetClass::GammaSide2,
                        _ => FacetClass::Boundary,
                    };
                    Facet {
                        vertices: [a, b],
                        class,
                        left: *e,
                        right: None,
                    }
                }
                [e1, e2] => {
                    let (l, r) = (*e1.min(e2), *e1.max(e2));
                    let class = match (tags[l], tags[r]) {
                        (Subdomain::Bulk1, Subdomain::Fracture) | (Subdomain::Fracture, Subdomain::Bulk1) => {
                            FacetClass::GammaSide1
                        }
                        (Subdomain::Bulk2, Subdomain::Fracture) | (Subdomain::Fracture, Subdomain::Bulk2) => {
                            FacetClass::GammaSide2
                        }
                        _ => FacetClass::Interior,
                    };
                    Facet {
                        vertices: [a, b],
                        class,
                        left: l,
                        right: Some(r),
                    }
                }
                _ => {
                    return Err(Error::BadFacetAdjacency {
                        a,
                        b,
                        count: adj.len(),
                    })
                }
            };
            facets.push(facet);
        }

        let h = elements
            .iter()
            .map(|el| {
                (0..3)
                    .map(|l| dist(vertices[el[l]], vertices[el[(l + 1) % 3]]))
                    .fold(0.0, f64::max)
            })
            .collect();

        Ok(Self {
            vertices,
            elements,
            tags,
            facets,
            element_facets,
            gamma_side,
            mode,
            h,
        })
    }

    /// Structured `n × n` triangulation of the unit square, all tagged `Bulk1`.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "need at least one cell per direction".into(),
            });
        }
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            for j in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let id = |i: usize, j: usize| i * (n + 1) + j;
        let mut elements = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                push_quad(&mut elements, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            }
        }
        let tags = vec![Subdomain::Bulk1; elements.len()];
        let gamma = vec![None; vertices.len()];
        Self::from_elements(vertices, elements, tags, gamma, None)
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_vertices(&self, e: usize) -> [Point; 3] {
        let el = self.elements[e];
        [self.vertices[el[0]], self.vertices[el[1]], self.vertices[el[2]]]
    }

    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_vertices(e);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.area(e)).sum()
    }

    /// Maximum edge length of an element.
    pub fn h(&self, e: usize) -> f64 {
        self.h[e]
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn facets_of_class(&self, class: FacetClass) -> impl Iterator<Item = usize> + '_ {
        self.facets
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.class == class)
            .map(|(i, _)| i)
    }

    /// Writes vertices, tagged elements and classified facets as plain text.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
        }
        writeln!(s, "elements {}", self.elements.len()).unwrap();
        for (el, tag) in self.elements.iter().zip(&self.tags) {
            writeln!(s, "{} {} {} {}", el[0], el[1], el[2], tag.name()).unwrap();
        }
        writeln!(s, "facets {}", self.facets.len()).unwrap();
        for f in &self.facets {
            writeln!(s, "{} {} {}", f.vertices[0], f.vertices[1], f.class.name()).unwrap();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }
}

fn push_quad(elements: &mut Vec<[usize; 3]>, a: usize, b: usize, c: usize, d: usize) {
    // a = lower left, b = lower right, c = upper right, d = upper left
    elements.push([a, b, c]);
    elements.push([a, c, d]);
}

/// Counts of each facet class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FacetCounts {
    pub interior: usize,
    pub boundary: usize,
    pub gamma1: usize,
    pub gamma2: usize,
}

pub fn classify_facets(mesh: &Mesh) -> FacetCounts {
    let mut c = FacetCounts::default();
    for f in &mesh.facets {
        match f.class {
            FacetClass::Interior => c.interior += 1,
            FacetClass::Boundary => c.boundary += 1,
            FacetClass::GammaSide1 => c.gamma1 += 1,
            FacetClass::GammaSide2 => c.gamma2 += 1,
        }
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    pub h_max: f64,
    pub h_min: f64,
    /// Smallest interior angle in radians.
    pub min_angle: f64,
}

pub fn mesh_quality(mesh: &Mesh) -> MeshQuality {
    let mut q = MeshQuality {
        h_max: 0.0,
        h_min: f64::INFINITY,
        min_angle: f64::INFINITY,
    };
    for e in 0..mesh.n_elements() {
        q.h_max = q.h_max.max(mesh.h(e));
        q.h_min = q.h_min.min(mesh.h(e));
        let p = mesh.element_vertices(e);
        for l in 0..3 {
            let a = p[l];
            let b = p[(l + 1) % 3];
            let c = p[(l + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, b) * dist(a, c));
            q.min_angle = q.min_angle.min(cos.clamp(-1.0, 1.0).acos());
        }
    }
    q
}

/// Builds a structured mesh of the unit square cut by the fracture
/// `{x1 = offset}` of `frame`.
///
/// There are `ceil(1/h)` rows and `ceil(offset/h)`, `ceil((1-offset)/h)`
/// columns on the two sides. In curved modes the columns of each side are
/// stretched row by row so that the last column sits on the wall
/// `x1 = offset - d1(x2)` (side 1) or `x1 = offset + d2(x2)` (side 2); in
/// full mode the gap is filled with `fracture_layers` columns.
pub fn build_bulk_mesh(
    profile: &ApertureProfile,
    frame: &FractureFrame,
    mode: MeshMode,
    h_target: f64,
    fracture_layers: usize,
) -> Result<Mesh> {
    if !(h_target > 0.0) || !h_target.is_finite() {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("mesh size must be positive, got {h_target}"),
        });
    }
    let vertical = FractureFrame::vertical(frame.offset());
    if frame.normal() != vertical.normal() || frame.tangent() != vertical.tangent() || frame.t_range() != (0.0, 1.0) {
        return Err(Error::InvalidParameter {
            name: "frame",
            reason: "mesh generation supports the vertical fracture x1 = const crossing the unit square".into(),
        });
    }
    let offset = frame.offset();
    if !(offset > 0.0 && offset < 1.0) {
        return Err(Error::InvalidParameter {
            name: "frame",
            reason: format!("fracture position {offset} is outside the unit square"),
        });
    }
    if mode == MeshMode::Full && fracture_layers == 0 {
        return Err(Error::InvalidParameter {
            name: "fracture_layers",
            reason: "the full model needs at least one element layer across the fracture".into(),
        });
    }

    let ny = (1.0 / h_target).ceil() as usize;
    let n1 = (offset / h_target).ceil() as usize;
    let n2 = ((1.0 - offset) / h_target).ceil() as usize;
    let rows: Vec<f64> = (0..=ny).map(|j| j as f64 / ny as f64).collect();

    // Wall positions per row.
    let mut wall1 = Vec::with_capacity(rows.len());
    let mut wall2 = Vec::with_capacity(rows.len());
    for &t in &rows {
        if mode == MeshMode::Rectified {
            wall1.push(offset);
            wall2.push(offset);
            continue;
        }
        let a = eval_aperture(profile, frame, t)?;
        let x1 = offset - a.d1;
        let x2 = offset + a.d2;
        if !(x1 > 0.0) {
            return Err(Error::ApertureExitsDomain { side: 1, t, x1 });
        }
        if !(x2 < 1.0) {
            return Err(Error::ApertureExitsDomain { side: 2, t, x1: x2 });
        }
        wall1.push(x1);
        wall2.push(x2);
    }

    // Columns are closures of the row index; blocks reference column ids.
    let mut columns: Vec<(Vec<f64>, Option<u8>)> = Vec::new();
    let side1: Vec<usize> = (0..=n1)
        .map(|i| {
            let s = i as f64 / n1 as f64;
            let xs = wall1.iter().map(|w| w * s).collect();
            columns.push((xs, if i == n1 { Some(1) } else { None }));
            columns.len() - 1
        })
        .collect();
    let mut fracture = vec![side1[n1]];
    if mode == MeshMode::Full {
        for l in 1..fracture_layers {
            let s = l as f64 / fracture_layers as f64;
            let xs = wall1.iter().zip(&wall2).map(|(a, b)| a + (b - a) * s).collect();
            columns.push((xs, None));
            fracture.push(columns.len() - 1);
        }
    }
    let side2: Vec<usize> = (0..=n2)
        .map(|i| {
            let s = i as f64 / n2 as f64;
            let xs = wall2.iter().map(|w| w + (1.0 - w) * s).collect();
            columns.push((xs, if i == 0 { Some(2) } else { None }));
            columns.len() - 1
        })
        .collect();
    fracture.push(side2[0]);

    let nrow = rows.len();
    let mut vertices = Vec::with_capacity(columns.len() * nrow);
    let mut gamma_side = Vec::with_capacity(columns.len() * nrow);
    for (xs, side) in &columns {
        for (j, &y) in rows.iter().enumerate() {
            vertices.push([xs[j], y]);
            gamma_side.push(*side);
        }
    }
    let id = |c: usize, j: usize| c * nrow + j;

    let mut elements = Vec::new();
    let mut tags = Vec::new();
    let mut blocks = vec![(side1, Subdomain::Bulk1), (side2, Subdomain::Bulk2)];
    if mode == MeshMode::Full {
        blocks.push((fracture, Subdomain::Fracture));
    }
    for (cols, tag) in &blocks {
        for w in cols.windows(2) {
            for j in 0..ny {
                push_quad(&mut elements, id(w[0], j), id(w[1], j), id(w[1], j + 1), id(w[0], j + 1));
                tags.push(*tag);
                tags.push(*tag);
            }
        }
    }
    Mesh::from_elements(vertices, elements, tags, gamma_side, Some(mode))
}

/// Uniform bucket grid over element bounding boxes for point location.
#[derive(Clone, Debug)]
pub struct PointLocator {
    lo: Point,
    cell: Point,
    n: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

const LOCATE_TOL: f64 = 1e-12;

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let side = (mesh.n_elements() as f64).sqrt().ceil().max(1.0) as usize;
        let n = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / n[0] as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / n[1] as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = Self {
            lo,
            cell,
            n,
            buckets: vec![Vec::new(); n[0] * n[1]],
        };
        for e in 0..mesh.n_elements() {
            let p = mesh.element_vertices(e);
            let bmin = [p.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min), p.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min)];
            let bmax = [p.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max), p.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max)];
            let (i0, j0) = loc.cell_of(bmin);
            let (i1, j1) = loc.cell_of(bmax);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    loc.buckets[i * n[1] + j].push(e);
                }
            }
        }
        loc
    }

    fn cell_of(&self, x: Point) -> (usize, usize) {
        let i = ((x[0] - self.lo[0]) / self.cell[0]).floor();
        let j = ((x[1] - self.lo[1]) / self.cell[1]).floor();
        (
            (i.max(0.0) as usize).min(self.n[0] - 1),
            (j.max(0.0) as usize).min(self.n[1] - 1),
        )
    }

    /// Elements whose bounding boxes may intersect the box spanned by `a` and `b`.
    pub fn candidates(&self, a: Point, b: Point) -> Vec<usize> {
        let (i0, j0) = self.cell_of([a[0].min(b[0]) - LOCATE_TOL, a[1].min(b[1]) - LOCATE_TOL]);
        let (i1, j1) = self.cell_of([a[0].max(b[0]) + LOCATE_TOL, a[1].max(b[1]) + LOCATE_TOL]);
        let mut out = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                out.extend_from_slice(&self.buckets[i * self.n[1] + j]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Element containing `x` (first in index order) and its barycentric
    /// coordinates.
    pub fn locate(&self, mesh: &Mesh, x: Point) -> Option<(usize, [f64; 3])> {
        for e in self.candidates(x, x) {
            let lam = barycentric(mesh.element_vertices(e), x);
            if lam.iter().all(|&l| l >= -LOCATE_TOL) {
                return Some((e, lam));
            }
        }
        None
    }
}

pub fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let area = signed_area(p[0], p[1], p[2]);
    let l0 = signed_area(x, p[1], p[2]) / area;
    let l1 = signed_area(p[0], x, p[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::geometry::Symmetry;
    use proptest::prelude::*;

    fn profile() -> impl Strategy<Value = ApertureProfile> {
        prop_oneof![
            (1e-3f64..0.1, 1e-3f64..0.1).prop_map(|(a, b)| ApertureProfile::constant(a, b)),
            (1e-3f64..0.1).prop_map(|d0| ApertureProfile::serpentine(d0, Symmetry::Antisymmetric)),
            (1e-3f64..0.1).prop_map(|d0| ApertureProfile::serpentine(d0, Symmetry::Symmetric)),
        ]
    }

    fn mode() -> impl Strategy<Value = MeshMode> {
        prop_oneof![Just(MeshMode::Full), Just(MeshMode::CurvedReduced), Just(MeshMode::Rectified)]
    }

    /// Gap area enclosed by the piecewise linear walls through the row vertices.
    fn trapezoid_gap(profile: &ApertureProfile, rows: usize) -> f64 {
        let dt = 1.0 / rows as f64;
        (0..rows)
            .map(|i| 0.5 * dt * (profile.sample(i as f64 * dt).d() + profile.sample((i + 1) as f64 * dt).d()))
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn volume_and_interface_measure_are_conserved(p in profile(), m in mode(), n in 4usize..24, layers in 1usize..5) {
            let frame = FractureFrame::vertical(0.5);
            let h = 1.0 / n as f64;
            let mesh = build_bulk_mesh(&p, &frame, m, h, layers).unwrap();
            let gap = match m {
                MeshMode::CurvedReduced => trapezoid_gap(&p, n),
                _ => 0.0,
            };
            prop_assert!((mesh.total_area() - (1.0 - gap)).abs() < 1e-10);
            for side in [FacetClass::GammaSide1, FacetClass::GammaSide2] {
                let measure: f64 = mesh
                    .facets_of_class(side)
                    .map(|f| {
                        let (a, b) = crate::mesh::interface::facet_t_range(&mesh, &frame, f);
                        b - a
                    })
                    .sum();
                prop_assert!((measure - 1.0).abs() < 1e-10);
            }
            if m != MeshMode::Full {
                let grid = crate::mesh::interface::build_interface_grid(&mesh, &frame).unwrap();
                prop_assert!((grid.total_length() - 1.0).abs() < 1e-10);
            }
            prop_assert!(mesh_quality(&mesh).min_angle > 0.0);
        }
    }
}
