//! The one-dimensional fracture grid on the reference line and its pairing
//! with the bulk facets on either wall.

use crate::error::{Error, Result};
use crate::geometry::{FractureFrame, Point};

use super::{FacetClass, Mesh, MeshMode};

/// Interface element `[t0, t1]` paired with one wall facet per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceElement {
    pub t0: f64,
    pub t1: f64,
    /// Facet indices on side 1 and side 2.
    pub facets: [usize; 2],
}

impl InterfaceElement {
    pub fn length(&self) -> f64 {
        self.t1 - self.t0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

/// Endpoint of interface elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceEdge {
    pub t: f64,
    pub kind: EdgeKind,
    /// Element ending at `t`.
    pub left: Option<usize>,
    /// Element starting at `t`.
    pub right: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct InterfaceGrid {
    pub elements: Vec<InterfaceElement>,
    pub edges: Vec<InterfaceEdge>,
}

impl InterfaceGrid {
    pub fn total_length(&self) -> f64 {
        self.elements.iter().map(|e| e.length()).sum()
    }

    /// Index of an element containing `t`, preferring the left one at shared
    /// endpoints.
    pub fn find(&self, t: f64) -> Option<usize> {
        let first = self.elements.first()?;
        let last = self.elements.last()?;
        let slack = 1e-12 * (last.t1 - first.t0);
        if t < first.t0 - slack || t > last.t1 + slack {
            return None;
        }
        let i = self.elements.partition_point(|e| e.t1 < t);
        Some(i.min(self.elements.len() - 1))
    }

    /// All breakpoints, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.t).collect()
    }
}

/// Tangential range `(t_lo, t_hi)` of a wall facet.
pub fn facet_t_range(mesh: &Mesh, frame: &FractureFrame, facet: usize) -> (f64, f64) {
    let [a, b] = mesh.facets[facet].vertices;
    let ta = frame.coords(mesh.vertices[a]).1;
    let tb = frame.coords(mesh.vertices[b]).1;
    (ta.min(tb), ta.max(tb))
}

/// Point on a wall facet with tangential coordinate `t`: the affine map from
/// the interface parameter onto the facet.
pub fn facet_point(mesh: &Mesh, frame: &FractureFrame, facet: usize, t: f64) -> Point {
    let [a, b] = mesh.facets[facet].vertices;
    let pa = mesh.vertices[a];
    let pb = mesh.vertices[b];
    let ta = frame.coords(pa).1;
    let tb = frame.coords(pb).1;
    let s = (t - ta) / (tb - ta);
    [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
}

/// Intersects two sorted, contiguous interval partitions of the same range.
///
/// Returns `(t0, t1, i, j)` for every overlap of `a[i]` and `b[j]` longer
/// than `min_len`.
pub fn intersect_partitions(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    min_len: f64,
) -> Result<Vec<(f64, f64, usize, usize)>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InterfaceGrid("one side has no wall facets".into()));
    }
    let span = (a[a.len() - 1].1 - a[0].0).abs().max(1e-300);
    let tol = 1e-12 * span;
    for (name, p) in [("side 1", a), ("side 2", b)] {
        for w in p.windows(2) {
            if (w[0].1 - w[1].0).abs() > tol {
                return Err(Error::InterfaceGrid(format!(
                    "{name} facets leave a gap or overlap at t = {}",
                    w[0].1
                )));
            }
        }
    }
    if (a[0].0 - b[0].0).abs() > tol || (a[a.len() - 1].1 - b[b.len() - 1].1).abs() > tol {
        return Err(Error::InterfaceGrid(format!(
            "projections disagree about the fracture extent: [{}, {}] vs [{}, {}]",
            a[0].0,
            a[a.len() - 1].1,
            b[0].0,
            b[b.len() - 1].1
        )));
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi - lo > min_len {
            out.push((lo, hi, i, j));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(out)
}

/// Builds the fracture grid from the wall facets of a reduced mesh.
///
/// On a rectified mesh the wall facets of both sides must coincide and the
/// grid is exactly those facets. On a curved mesh the grid consists of the
/// intersections of the projected facets of the two walls.
pub fn build_interface_grid(mesh: &Mesh, frame: &FractureFrame) -> Result<InterfaceGrid> {
    if mesh.mode == Some(MeshMode::Full) {
        return Err(Error::InterfaceGrid(
            "the full-dimensional mesh has no reduced fracture".into(),
        ));
    }
    let mut sides: [Vec<(f64, f64, usize)>; 2] = [Vec::new(), Vec::new()];
    for (f, facet) in mesh.facets.iter().enumerate() {
        let k = match facet.class {
            FacetClass::GammaSide1 => 0,
            FacetClass::GammaSide2 => 1,
            _ => continue,
        };
        if facet.right.is_some() {
            continue;
        }
        let (t0, t1) = facet_t_range(mesh, frame, f);
        sides[k].push((t0, t1, f));
    }
    for s in sides.iter_mut() {
        s.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
    let a: Vec<(f64, f64)> = sides[0].iter().map(|s| (s.0, s.1)).collect();
    let b: Vec<(f64, f64)> = sides[1].iter().map(|s| (s.0, s.1)).collect();
    let span = frame.gamma_length();
    let pieces = intersect_partitions(&a, &b, 1e-12 * span)?;

    if mesh.mode == Some(MeshMode::Rectified) {
        let tol = 1e-12 * span;
        let conforming = pieces.len() == a.len()
            && pieces.len() == b.len()
            && pieces
                .iter()
                .all(|&(lo, hi, i, j)| (a[i].0 - lo).abs() <= tol && (a[i].1 - hi).abs() <= tol && i == j);
        if !conforming {
            return Err(Error::InterfaceGrid(
                "rectified mesh has non-matching wall facets".into(),
            ));
        }
    }

    let elements: Vec<InterfaceElement> = pieces
        .iter()
        .map(|&(t0, t1, i, j)| InterfaceElement {
            t0,
            t1,
            facets: [sides[0][i].2, sides[1][j].2],
        })
        .collect();
    let n = elements.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(InterfaceEdge {
        t: elements[0].t0,
        kind: EdgeKind::Boundary,
        left: None,
        right: Some(0),
    });
    for k in 1..n {
        edges.push(InterfaceEdge {
            t: elements[k].t0,
            kind: EdgeKind::Interior,
            left: Some(k - 1),
            right: Some(k),
        });
    }
    edges.push(InterfaceEdge {
        t: elements[n - 1].t1,
        kind: EdgeKind::Boundary,
        left: Some(n - 1),
        right: None,
    });
    Ok(InterfaceGrid { elements, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_to_gamma, ApertureProfile, Symmetry};
    use crate::mesh::{build_bulk_mesh, Subdomain};

    fn partition(breaks: &[f64]) -> Vec<(f64, f64)> {
        breaks.windows(2).map(|w| (w[0], w[1])).collect()
    }

    #[test]
    fn interval_intersection_examples() {
        let a = partition(&[0.0, 0.5, 1.0]);
        let b = partition(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let p = intersect_partitions(&a, &b, 1e-12).unwrap();
        let breaks: Vec<f64> = p.iter().map(|x| x.0).chain([p.last().unwrap().1]).collect();
        assert_eq!(p.len(), 4);
        let want = [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0];
        for (x, y) in breaks.iter().zip(want) {
            assert!((x - y).abs() < 1e-15);
        }
        let single = intersect_partitions(&[(0.0, 1.0)], &[(0.0, 1.0)], 1e-12).unwrap();
        assert_eq!(single, vec![(0.0, 1.0, 0, 0)]);
        assert!(intersect_partitions(&[(0.0, 1.0)], &[(0.0, 0.9)], 1e-12).is_err());
    }

    #[test]
    fn slivers_are_dropped() {
        let a = partition(&[0.0, 0.5, 1.0]);
        let b = partition(&[0.0, 0.5 + 1e-14, 1.0]);
        let p = intersect_partitions(&a, &b, 1e-12).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn rectified_grid_is_the_shared_facets() {
        let frame = FractureFrame::vertical(0.5);
        let profile = ApertureProfile::serpentine(0.1, Symmetry::Antisymmetric);
        let mesh = build_bulk_mesh(&profile, &frame, MeshMode::Rectified, 0.125, 4).unwrap();
        let grid = build_interface_grid(&mesh, &frame).unwrap();
        assert_eq!(grid.elements.len(), 8);
        for el in &grid.elements {
            assert_eq!(mesh.tags[mesh.facets[el.facets[0]].left], Subdomain::Bulk1);
            assert_eq!(mesh.tags[mesh.facets[el.facets[1]].left], Subdomain::Bulk2);
            for f in el.facets {
                let (t0, t1) = facet_t_range(&mesh, &frame, f);
                assert_eq!((t0, t1), (el.t0, el.t1));
            }
        }
        assert_eq!(grid.edges.len(), 9);
        assert_eq!(grid.edges.iter().filter(|e| e.kind == EdgeKind::Boundary).count(), 2);
    }

    #[test]
    fn curved_grid_measures_and_round_trip() {
        let frame = FractureFrame::vertical(0.5);
        let profile = ApertureProfile::serpentine(0.05, Symmetry::Symmetric);
        let mesh = build_bulk_mesh(&profile, &frame, MeshMode::CurvedReduced, 1.0 / 16.0, 4).unwrap();
        let grid = build_interface_grid(&mesh, &frame).unwrap();
        assert!((grid.total_length() - 1.0).abs() < 1e-12);
        for el in &grid.elements {
            for s in [0.1, 0.5, 0.9] {
                let t = el.t0 + s * el.length();
                for f in el.facets {
                    let x = facet_point(&mesh, &frame, f, t);
                    let back = frame.coords(project_to_gamma(x, &frame)).1;
                    assert!((back - t).abs() < 1e-12);
                }
            }
        }
        assert_eq!(grid.find(0.0), Some(0));
        assert_eq!(grid.find(1.0), Some(grid.elements.len() - 1));
        assert_eq!(grid.find(1.5), None);
    }

    #[test]
    fn full_mesh_has_no_interface_grid() {
        let frame = FractureFrame::vertical(0.5);
        let profile = ApertureProfile::constant(0.1, 0.1);
        let mesh = build_bulk_mesh(&profile, &frame, MeshMode::Full, 0.25, 4).unwrap();
        assert!(build_interface_grid(&mesh, &frame).is_err());
    }
}
