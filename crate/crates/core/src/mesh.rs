//! Uniform triangulation of the ternary diagram in the equilateral
//! embedding: n^2 congruent triangles, (n+1)(n+2)/2 vertices, with boundary
//! classification in edge arc parameters. Quadratic-element nodes live on
//! the refined 2n lattice and are addressed through the same structure.

use crate::error::{Error, Result};
use crate::ternary::{Edge, Ternary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Corner {
    Water,
    Oil,
    Gas,
}

impl Corner {
    /// The two incident diagram edges with this corner's arc parameter.
    pub fn edges(&self) -> [(Edge, f64); 2] {
        match self {
            Corner::Water => [(Edge::WaterOil, 0.0), (Edge::WaterGas, 0.0)],
            Corner::Oil => [(Edge::WaterOil, 1.0), (Edge::GasOil, 0.0)],
            Corner::Gas => [(Edge::GasOil, 1.0), (Edge::WaterGas, 1.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeLoc {
    Interior,
    Edge { edge: Edge, t: f64 },
    Corner(Corner),
}

impl NodeLoc {
    /// A representative (edge, t) pair for boundary nodes.
    pub fn edge_param(&self) -> Option<(Edge, f64)> {
        match self {
            NodeLoc::Interior => None,
            NodeLoc::Edge { edge, t } => Some((*edge, *t)),
            NodeLoc::Corner(c) => Some(c.edges()[0]),
        }
    }
}

/// Lattice classification shared by the vertex (m = n) and quadratic
/// (m = 2n) node sets: i counts oil saturation steps, j gas steps.
fn classify(i: usize, j: usize, m: usize) -> NodeLoc {
    let bottom = j == 0;
    let left = i == 0;
    let diag = i + j == m;
    match (bottom, left, diag) {
        (true, true, _) => NodeLoc::Corner(Corner::Water),
        (true, _, true) => NodeLoc::Corner(Corner::Oil),
        (_, true, true) => NodeLoc::Corner(Corner::Gas),
        (true, false, false) => NodeLoc::Edge { edge: Edge::WaterOil, t: i as f64 / m as f64 },
        (false, true, false) => NodeLoc::Edge { edge: Edge::WaterGas, t: j as f64 / m as f64 },
        (false, false, true) => NodeLoc::Edge { edge: Edge::GasOil, t: j as f64 / m as f64 },
        _ => NodeLoc::Interior,
    }
}

fn lattice_id(i: usize, j: usize, m: usize) -> usize {
    j * (m + 1) - j * j.saturating_sub(1) / 2 + i
}

fn lattice_count(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

fn lattice_xy(i: usize, j: usize, m: usize) -> [f64; 2] {
    let s2 = i as f64 / m as f64;
    let s3 = j as f64 / m as f64;
    Ternary::new_unchecked(1.0 - s2 - s3, s3).embed()
}

#[derive(Debug)]
pub struct TriMesh {
    pub n: usize,
    pub verts: Vec<[f64; 2]>,
    pub bary: Vec<Ternary>,
    pub vert_loc: Vec<NodeLoc>,
    /// Lattice coordinates (i, j) of each vertex.
    pub vert_ij: Vec<[usize; 2]>,
    /// Counterclockwise vertex triples.
    pub tris: Vec<[usize; 3]>,
    /// Per lattice cell: index of the upward triangle, and of the downward
    /// one where it exists.
    cell_up: Vec<usize>,
    cell_down: Vec<usize>,
}

impl TriMesh {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("mesh refinement must be >= 2, got {n}")));
        }
        let nv = lattice_count(n);
        let mut verts = Vec::with_capacity(nv);
        let mut bary = Vec::with_capacity(nv);
        let mut vert_loc = Vec::with_capacity(nv);
        let mut vert_ij = Vec::with_capacity(nv);
        for j in 0..=n {
            for i in 0..=(n - j) {
                let s2 = i as f64 / n as f64;
                let s3 = j as f64 / n as f64;
                let s = Ternary::new_unchecked(1.0 - s2 - s3, s3);
                verts.push(s.embed());
                bary.push(s);
                vert_loc.push(classify(i, j, n));
                vert_ij.push([i, j]);
            }
        }
        let mut tris = Vec::with_capacity(n * n);
        let mut cell_up = vec![usize::MAX; n * n];
        let mut cell_down = vec![usize::MAX; n * n];
        for j in 0..n {
            for i in 0..n - j {
                cell_up[j * n + i] = tris.len();
                tris.push([lattice_id(i, j, n), lattice_id(i + 1, j, n), lattice_id(i, j + 1, n)]);
                if i + j + 2 <= n {
                    cell_down[j * n + i] = tris.len();
                    tris.push([lattice_id(i + 1, j, n), lattice_id(i + 1, j + 1, n), lattice_id(i, j + 1, n)]);
                }
            }
        }
        Ok(Self { n, verts, bary, vert_loc, vert_ij, tris, cell_up, cell_down })
    }

    pub fn n_verts(&self) -> usize {
        self.verts.len()
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t];
        let (pa, pb, pc) = (self.verts[a], self.verts[b], self.verts[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
    }

    /// Element containing `s` plus the barycentric coordinates of `s` with
    /// respect to its (CCW-ordered) vertices.
    pub fn locate(&self, s: Ternary) -> Result<(usize, [f64; 3])> {
        if !Ternary::contains(s.s1, s.s3) {
            return Err(Error::OutsideTernary { s1: s.s1, s3: s.s3 });
        }
        let n = self.n;
        let a = (s.s2().max(0.0) * n as f64).min(n as f64);
        let b = (s.s3.max(0.0) * n as f64).min(n as f64);
        let mut i = (a as usize).min(n - 1);
        let mut j = (b as usize).min(n - 1);
        // Keep the cell inside the diagram (points on the diagonal land on
        // lattice nodes of filled cells).
        while i + j > n - 1 {
            if i > 0 && (a - i as f64) <= (b - j as f64) {
                i -= 1;
            } else if j > 0 {
                j -= 1;
            } else {
                i -= 1;
            }
        }
        let fa = a - i as f64;
        let fb = b - j as f64;
        let tri = if fa + fb <= 1.0 + 1e-12 || cell_lookup(&self.cell_down, n, i, j).is_none() {
            self.cell_up[j * n + i]
        } else {
            self.cell_down[j * n + i]
        };
        let lam = self.barycentric(tri, s.embed());
        Ok((tri, lam))
    }

    /// Barycentric coordinates of `xy` with respect to element `tri`.
    pub fn barycentric(&self, tri: usize, xy: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.tris[tri];
        let (pa, pb, pc) = (self.verts[a], self.verts[b], self.verts[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let l1 = ((xy[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (xy[1] - pa[1])) / det;
        let l2 = ((pb[0] - pa[0]) * (xy[1] - pa[1]) - (xy[0] - pa[0]) * (pb[1] - pa[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Constant gradients of the barycentric coordinates on element `tri`.
    pub fn grad_lambda(&self, tri: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.tris[tri];
        let (pa, pb, pc) = (self.verts[a], self.verts[b], self.verts[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let g1 = [(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det];
        let g2 = [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det];
        [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
    }

    // Quadratic node set: the 2n lattice.

    pub fn p2_count(&self) -> usize {
        lattice_count(2 * self.n)
    }

    pub fn p2_loc(&self, idx: usize) -> NodeLoc {
        let (i, j) = lattice_ij(idx, 2 * self.n);
        classify(i, j, 2 * self.n)
    }

    pub fn p2_xy(&self, idx: usize) -> [f64; 2] {
        let (i, j) = lattice_ij(idx, 2 * self.n);
        lattice_xy(i, j, 2 * self.n)
    }

    /// Quadratic dof ids of element `tri`: three vertices then the midpoints
    /// opposite to them in the order (v0v1, v1v2, v2v0).
    pub fn p2_dofs(&self, tri: usize) -> [usize; 6] {
        let m = 2 * self.n;
        let [a, b, c] = self.tris[tri];
        let va = self.vert_ij[a];
        let vb = self.vert_ij[b];
        let vc = self.vert_ij[c];
        [
            lattice_id(2 * va[0], 2 * va[1], m),
            lattice_id(2 * vb[0], 2 * vb[1], m),
            lattice_id(2 * vc[0], 2 * vc[1], m),
            lattice_id(va[0] + vb[0], va[1] + vb[1], m),
            lattice_id(vb[0] + vc[0], vb[1] + vc[1], m),
            lattice_id(vc[0] + va[0], vc[1] + va[1], m),
        ]
    }
}

fn cell_lookup(cells: &[usize], n: usize, i: usize, j: usize) -> Option<usize> {
    let v = cells[j * n + i];
    (v != usize::MAX).then_some(v)
}

fn lattice_ij(idx: usize, m: usize) -> (usize, usize) {
    let mut j = 0;
    let mut off = 0;
    loop {
        let row = m - j + 1;
        if idx < off + row {
            return (idx - off, j);
        }
        off += row;
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn counting_identities() {
        let m = TriMesh::new(2).unwrap();
        assert_eq!(m.n_verts(), 6);
        assert_eq!(m.tris.len(), 4);
        let m = TriMesh::new(16).unwrap();
        assert_eq!(m.n_verts(), 153);
        assert_eq!(m.tris.len(), 256);
    }

    #[test]
    fn areas_sum_to_unit_triangle() {
        for n in [2, 5, 16, 33] {
            let m = TriMesh::new(n).unwrap();
            let total: f64 = (0..m.tris.len()).map(|t| m.tri_area(t)).sum();
            assert_relative_eq!(total, 3f64.sqrt() / 4.0, max_relative = 1e-12);
            assert!((0..m.tris.len()).all(|t| m.tri_area(t) > 0.0));
        }
    }

    #[test]
    fn boundary_classification() {
        let m = TriMesh::new(4).unwrap();
        let mut corners = 0;
        let mut edges = 0;
        for loc in &m.vert_loc {
            match loc {
                NodeLoc::Corner(_) => corners += 1,
                NodeLoc::Edge { .. } => edges += 1,
                NodeLoc::Interior => {}
            }
        }
        assert_eq!(corners, 3);
        assert_eq!(edges, 3 * 3);
        // Water corner sits at index 0 with s1 = 1.
        assert_eq!(m.vert_loc[0], NodeLoc::Corner(Corner::Water));
        assert_relative_eq!(m.bary[0].s1, 1.0);
    }

    #[test]
    fn locate_round_trip() {
        let m = TriMesh::new(7).unwrap();
        for (s1, s3) in [(0.2, 0.3), (0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (0.33, 0.12), (0.0, 1.0)] {
            let s = Ternary::new(s1, s3).unwrap();
            let (tri, lam) = m.locate(s).unwrap();
            assert!(lam.iter().all(|l| *l >= -1e-9), "{lam:?}");
            let [a, b, c] = m.tris[tri];
            let x = lam[0] * m.verts[a][0] + lam[1] * m.verts[b][0] + lam[2] * m.verts[c][0];
            let y = lam[0] * m.verts[a][1] + lam[1] * m.verts[b][1] + lam[2] * m.verts[c][1];
            let [ex, ey] = s.embed();
            assert_relative_eq!(x, ex, epsilon = 1e-12);
            assert_relative_eq!(y, ey, epsilon = 1e-12);
        }
    }

    #[test]
    fn p2_lattice_consistency() {
        let m = TriMesh::new(3).unwrap();
        assert_eq!(m.p2_count(), 28);
        for t in 0..m.tris.len() {
            let dofs = m.p2_dofs(t);
            let [a, b, c] = m.tris[t];
            // Vertex dofs coincide geometrically with the vertices.
            for (k, v) in [a, b, c].iter().enumerate() {
                let xy = m.p2_xy(dofs[k]);
                assert_relative_eq!(xy[0], m.verts[*v][0], epsilon = 1e-13);
                assert_relative_eq!(xy[1], m.verts[*v][1], epsilon = 1e-13);
            }
            // Midpoint dof 3 lies between vertices 0 and 1.
            let xy = m.p2_xy(dofs[3]);
            assert_relative_eq!(xy[0], 0.5 * (m.verts[a][0] + m.verts[b][0]), epsilon = 1e-13);
            assert_relative_eq!(xy[1], 0.5 * (m.verts[a][1] + m.verts[b][1]), epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_tiny_mesh() {
        assert!(TriMesh::new(1).is_err());
    }
}
