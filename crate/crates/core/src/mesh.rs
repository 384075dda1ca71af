//! Conforming quadrilateral meshes with face topology.
//!
//! Elements are stored as four counterclockwise vertex indices `v0..v3`,
//! mapped from the reference square `(-1,1)²` by the bilinear map with
//! `v0 ↦ (-1,-1)`, `v1 ↦ (1,-1)`, `v2 ↦ (1,1)`, `v3 ↦ (-1,1)`.
//!
//! Local faces are numbered bottom (`η = -1`), right (`ξ = 1`), top
//! (`η = 1`), left (`ξ = -1`). Each local face carries a parameter
//! `t ∈ (-1,1)` running from its *start* vertex (v0, v1, v3, v0) to its end
//! vertex (v1, v2, v2, v3).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::{norm, Error, Point, Result};

/// An axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub min: Point,
    pub max: Point,
}

impl Rectangle {
    pub const UNIT_SQUARE: Rectangle = Rectangle {
        min: [0.0, 0.0],
        max: [1.0, 1.0],
    };

    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    pub fn diameter(&self) -> f64 {
        norm([self.max[0] - self.min[0], self.max[1] - self.min[1]])
    }

    pub fn on_boundary(&self, x: Point, tol: f64) -> bool {
        (x[0] - self.min[0]).abs() <= tol
            || (x[0] - self.max[0]).abs() <= tol
            || (x[1] - self.min[1]).abs() <= tol
            || (x[1] - self.max[1]).abs() <= tol
    }
}

/// Local vertex pairs `(start, end)` for each local face.
pub const LOCAL_FACE_VERTICES: [[usize; 2]; 4] = [[0, 1], [1, 2], [3, 2], [0, 3]];

/// Reference coordinates of the point with parameter `t` on local face `lf`.
#[inline]
pub fn local_face_point(lf: usize, t: f64) -> Point {
    match lf {
        0 => [t, -1.0],
        1 => [1.0, t],
        2 => [t, 1.0],
        _ => [-1.0, t],
    }
}

/// Bilinear map from the reference square onto a quadrilateral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMap {
    pub corners: [Point; 4],
}

impl ElementMap {
    fn shape(xi: f64, eta: f64) -> [f64; 4] {
        [
            0.25 * (1.0 - xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 + eta),
            0.25 * (1.0 - xi) * (1.0 + eta),
        ]
    }

    pub fn map(&self, r: Point) -> Point {
        let n = Self::shape(r[0], r[1]);
        let mut x = [0.0; 2];
        for (w, c) in n.iter().zip(&self.corners) {
            x[0] += w * c[0];
            x[1] += w * c[1];
        }
        x
    }

    /// `J[a][b] = ∂x_a/∂ξ_b`.
    pub fn jacobian(&self, r: Point) -> [[f64; 2]; 2] {
        let (xi, eta) = (r[0], r[1]);
        let dxi = [-(1.0 - eta), 1.0 - eta, 1.0 + eta, -(1.0 + eta)];
        let deta = [-(1.0 - xi), -(1.0 + xi), 1.0 + xi, 1.0 - xi];
        let mut j = [[0.0; 2]; 2];
        for k in 0..4 {
            for a in 0..2 {
                j[a][0] += 0.25 * dxi[k] * self.corners[k][a];
                j[a][1] += 0.25 * deta[k] * self.corners[k][a];
            }
        }
        j
    }

    pub fn det_jacobian(&self, r: Point) -> f64 {
        let j = self.jacobian(r);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Inverse Jacobian `K[b][a] = ∂ξ_b/∂x_a` and the determinant.
    pub fn inverse_jacobian(&self, r: Point) -> ([[f64; 2]; 2], f64) {
        let j = self.jacobian(r);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        ([[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]], det)
    }

    /// The mixed second derivative `∂²x/∂ξ∂η` (constant for bilinear maps).
    pub fn mixed_second_derivative(&self) -> Point {
        let c = &self.corners;
        [
            0.25 * (c[0][0] - c[1][0] + c[2][0] - c[3][0]),
            0.25 * (c[0][1] - c[1][1] + c[2][1] - c[3][1]),
        ]
    }

    /// Maximal distance between two corners (the diameter of a convex quad).
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for a in 0..4 {
            for b in a + 1..4 {
                d = d.max(norm([
                    self.corners[a][0] - self.corners[b][0],
                    self.corners[a][1] - self.corners[b][1],
                ]));
            }
        }
        d
    }

    /// Area via the shoelace formula.
    pub fn area(&self) -> f64 {
        let c = &self.corners;
        let mut s = 0.0;
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }
}

/// One side of a face: the incident element and its local face index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local_face: usize,
    /// `true` when the element's local face parameter runs opposite to the
    /// face parameter.
    pub reversed: bool,
}

impl FaceSide {
    /// Reference coordinates in the element for face parameter `s`.
    pub fn reference_point(&self, s: f64) -> Point {
        local_face_point(self.local_face, if self.reversed { -s } else { s })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Endpoints; the face parameter runs from `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    /// The "plus" side: the incident element with the smaller index.
    pub plus: FaceSide,
    pub minus: Option<FaceSide>,
    /// Unit normal pointing out of the plus element.
    pub normal: Point,
    pub length: f64,
    /// Face meshsize `h_e`.
    pub h: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<[usize; 4]>,
    pub faces: Vec<Face>,
    /// Global face index of each local face.
    pub element_faces: Vec<[usize; 4]>,
    pub interior_faces: Vec<usize>,
    pub boundary_faces: Vec<usize>,
    pub element_diameter: Vec<f64>,
    /// Maximum over elements of `h_κ² / |κ|`.
    pub shape_regularity_ratio: f64,
    /// For refined meshes: the parent element and the child's offset inside
    /// the parent reference square (each coordinate `-1` or `+1`).
    pub parent: Option<Vec<(usize, [f64; 2])>>,
    pub domain: Rectangle,
}

impl Mesh {
    /// Builds topology for a list of counterclockwise quadrilaterals.
    pub fn from_cells(vertices: Vec<Point>, elements: Vec<[usize; 4]>, domain: Rectangle) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidMesh("no elements"));
        }
        for el in &elements {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh("vertex index out of range"));
            }
            let map = ElementMap {
                corners: el.map(|v| vertices[v]),
            };
            for r in [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] {
                if map.det_jacobian(r) <= 0.0 {
                    return Err(Error::InvalidMesh("non-positive Jacobian"));
                }
            }
        }
        let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (e, el) in elements.iter().enumerate() {
            for (lf, [a, b]) in LOCAL_FACE_VERTICES.iter().enumerate() {
                let (va, vb) = (el[*a], el[*b]);
                edges.entry((va.min(vb), va.max(vb))).or_default().push((e, lf));
            }
        }
        let element_diameter: Vec<f64> = elements
            .iter()
            .map(|el| {
                ElementMap {
                    corners: el.map(|v| vertices[v]),
                }
                .diameter()
            })
            .collect();
        let mut faces = Vec::with_capacity(edges.len());
        let mut element_faces = alloc::vec![[usize::MAX; 4]; elements.len()];
        for (_, mut sides) in edges {
            if sides.len() > 2 {
                return Err(Error::InvalidMesh("edge shared by more than two elements"));
            }
            sides.sort_unstable();
            let (pe, plf) = sides[0];
            let [sa, sb] = LOCAL_FACE_VERTICES[plf];
            let va = elements[pe][sa];
            let vb = elements[pe][sb];
            let plus = FaceSide {
                element: pe,
                local_face: plf,
                reversed: false,
            };
            let minus = sides.get(1).map(|&(me, mlf)| FaceSide {
                element: me,
                local_face: mlf,
                reversed: elements[me][LOCAL_FACE_VERTICES[mlf][0]] != va,
            });
            // outward normal of the plus element: rotate its CCW edge tangent
            let ccw = [[0, 1], [1, 2], [2, 3], [3, 0]][plf];
            let (p0, p1) = (vertices[elements[pe][ccw[0]]], vertices[elements[pe][ccw[1]]]);
            let tangent = [p1[0] - p0[0], p1[1] - p0[1]];
            let length = norm(tangent);
            let normal = [tangent[1] / length, -tangent[0] / length];
            let h = match minus {
                Some(m) => 0.5 * (element_diameter[pe] + element_diameter[m.element]),
                None => element_diameter[pe],
            };
            let id = faces.len();
            element_faces[pe][plf] = id;
            if let Some(m) = minus {
                element_faces[m.element][m.local_face] = id;
            }
            faces.push(Face {
                vertices: [va, vb],
                plus,
                minus,
                normal,
                length,
                h,
            });
        }
        let interior_faces = (0..faces.len()).filter(|&f| !faces[f].is_boundary()).collect();
        let boundary_faces = (0..faces.len()).filter(|&f| faces[f].is_boundary()).collect();
        let shape_regularity_ratio = elements
            .iter()
            .zip(&element_diameter)
            .map(|(el, h)| {
                h * h
                    / ElementMap {
                        corners: el.map(|v| vertices[v]),
                    }
                    .area()
            })
            .fold(0.0, f64::max);
        Ok(Self {
            vertices,
            elements,
            faces,
            element_faces,
            interior_faces,
            boundary_faces,
            element_diameter,
            shape_regularity_ratio,
            parent: None,
            domain,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_map(&self, e: usize) -> ElementMap {
        ElementMap {
            corners: self.elements[e].map(|v| self.vertices[v]),
        }
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        self.element_diameter.iter().copied().fold(0.0, f64::max)
    }

    /// Outward unit normal of `face` as seen from `element`.
    pub fn outward_normal(&self, face: usize, element: usize) -> Point {
        let f = &self.faces[face];
        if f.plus.element == element {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    /// Neighbors across the faces of `element` (`None` on the boundary).
    pub fn neighbors(&self, element: usize) -> [Option<usize>; 4] {
        self.element_faces[element].map(|f| {
            let face = &self.faces[f];
            match face.minus {
                None => None,
                Some(m) if m.element == element => Some(face.plus.element),
                Some(m) => Some(m.element),
            }
        })
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_map(e).area()).sum()
    }
}

/// Uniform `nx × ny` mesh of an axis-aligned rectangle.
pub fn build_structured_mesh(domain: Rectangle, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter {
            name: "nx/ny",
            reason: "cell counts must be at least one",
        });
    }
    let (w, h) = (domain.max[0] - domain.min[0], domain.max[1] - domain.min[1]);
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "domain",
            reason: "rectangle must have positive area",
        });
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                domain.min[0] + w * i as f64 / nx as f64,
                domain.min[1] + h * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::from_cells(vertices, elements, domain)
}

/// Splits every element into four by its edge midpoints and center.
///
/// Children of element `e` are `4e..4e+4`, ordered lower-left, lower-right,
/// upper-right, upper-left in the parent's reference square.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut elements = Vec::with_capacity(4 * mesh.num_elements());
    let mut parent = Vec::with_capacity(4 * mesh.num_elements());
    let ccw = [[0usize, 1usize], [1, 2], [2, 3], [3, 0]];
    for (e, el) in mesh.elements.iter().enumerate() {
        let map = mesh.element_map(e);
        let mut mid = [0usize; 4];
        for (k, [a, b]) in ccw.iter().enumerate() {
            let (va, vb) = (el[*a], el[*b]);
            let key = (va.min(vb), va.max(vb));
            mid[k] = *midpoints.entry(key).or_insert_with(|| {
                let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            });
        }
        vertices.push(map.map([0.0, 0.0]));
        let c = vertices.len() - 1;
        // mid[0]: bottom, mid[1]: right, mid[2]: top, mid[3]: left
        elements.push([el[0], mid[0], c, mid[3]]);
        parent.push((e, [-1.0, -1.0]));
        elements.push([mid[0], el[1], mid[1], c]);
        parent.push((e, [1.0, -1.0]));
        elements.push([c, mid[1], el[2], mid[2]]);
        parent.push((e, [1.0, 1.0]));
        elements.push([mid[3], c, mid[2], el[3]]);
        parent.push((e, [-1.0, 1.0]));
    }
    let mut refined = Mesh::from_cells(vertices, elements, mesh.domain)?;
    refined.parent = Some(parent);
    Ok(refined)
}

/// Maps a child reference point to the parent reference square.
#[inline]
pub fn child_to_parent(offset: [f64; 2], r: Point) -> Point {
    [0.5 * (r[0] + offset[0]), 0.5 * (r[1] + offset[1])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_cell_counts() {
        let m = build_structured_mesh(Rectangle::UNIT_SQUARE, 1, 1).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.interior_faces.len(), 0);
        assert_eq!(m.boundary_faces.len(), 4);
    }

    #[test]
    fn two_by_two_counts() {
        let m = build_structured_mesh(Rectangle::UNIT_SQUARE, 2, 2).unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.interior_faces.len(), 4);
        assert_eq!(m.boundary_faces.len(), 8);
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.num_elements(), 16);
        assert_eq!(r.interior_faces.len(), 24);
    }

    #[test]
    fn face_meshsize_is_mean_of_diameters() {
        let m = build_structured_mesh(Rectangle::UNIT_SQUARE, 2, 1).unwrap();
        let f = &m.faces[m.interior_faces[0]];
        assert_relative_eq!(f.h, 1.25f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(f.h, 1.1180, epsilon = 1e-4);
        for &b in &m.boundary_faces {
            let face = &m.faces[b];
            assert_eq!(face.h, m.element_diameter[face.plus.element]);
        }
    }

    #[test]
    fn degenerate_input_rejected() {
        assert!(build_structured_mesh(Rectangle::UNIT_SQUARE, 0, 3).is_err());
        let flat = Rectangle::new([0.0, 0.0], [1.0, 0.0]);
        assert!(build_structured_mesh(flat, 2, 2).is_err());
    }

    #[test]
    fn normals_of_axis_aligned_cell() {
        let m = build_structured_mesh(Rectangle::UNIT_SQUARE, 1, 1).unwrap();
        let ef = m.element_faces[0];
        assert_eq!(m.faces[ef[1]].normal, [1.0, 0.0]);
        assert_eq!(m.faces[ef[2]].normal, [0.0, 1.0]);
        assert_eq!(m.faces[ef[0]].normal, [0.0, -1.0]);
        assert_eq!(m.faces[ef[3]].normal, [-1.0, 0.0]);
    }

    #[test]
    fn shared_face_normals_are_opposite() {
        let m = build_structured_mesh(Rectangle::UNIT_SQUARE, 2, 1).unwrap();
        let f = m.interior_faces[0];
        let face = &m.faces[f];
        let minus = face.minus.unwrap();
        assert_eq!(face.plus.element, 0);
        let np = m.outward_normal(f, face.plus.element);
        let nm = m.outward_normal(f, minus.element);
        assert_eq!(np, [1.0, 0.0]);
        assert_eq!(nm, [-np[0], -np[1]]);
        // both sides see the same physical point
        for s in [-0.7, 0.0, 0.4] {
            let xp = m.element_map(face.plus.element).map(face.plus.reference_point(s));
            let xm = m.element_map(minus.element).map(minus.reference_point(s));
            assert_relative_eq!(xp[0], xm[0], epsilon = 1e-15);
            assert_relative_eq!(xp[1], xm[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn refinement_halves_diameters_and_keeps_area() {
        let mut m = build_structured_mesh(Rectangle::new([0.0, 0.0], [2.0, 1.0]), 3, 2).unwrap();
        for _ in 0..3 {
            let r = refine_uniform(&m).unwrap();
            for (c, &(p, _)) in r.parent.as_ref().unwrap().iter().enumerate() {
                assert_relative_eq!(r.element_diameter[c], 0.5 * m.element_diameter[p], epsilon = 1e-14);
            }
            assert_relative_eq!(r.total_area(), 2.0, max_relative = 1e-12);
            assert!(r.shape_regularity_ratio <= 4.0);
            m = r;
        }
    }

    #[test]
    fn topology_is_symmetric() {
        let m = refine_uniform(&build_structured_mesh(Rectangle::UNIT_SQUARE, 3, 2).unwrap()).unwrap();
        for e in 0..m.num_elements() {
            for n in m.neighbors(e).into_iter().flatten() {
                assert!(m.neighbors(n).contains(&Some(e)));
            }
        }
        for &f in &m.interior_faces {
            let face = &m.faces[f];
            assert!(face.plus.element < face.minus.unwrap().element);
        }
    }

    #[test]
    fn child_points_map_into_parent() {
        let m = build_structured_mesh(Rectangle::UNIT_SQUARE, 2, 2).unwrap();
        let r = refine_uniform(&m).unwrap();
        for (c, &(p, off)) in r.parent.as_ref().unwrap().iter().enumerate() {
            for q in [[-0.3, 0.8], [0.5, -0.5]] {
                let xc = r.element_map(c).map(q);
                let xp = m.element_map(p).map(child_to_parent(off, q));
                assert_relative_eq!(xc[0], xp[0], epsilon = 1e-15);
                assert_relative_eq!(xc[1], xp[1], epsilon = 1e-15);
            }
        }
    }
}
