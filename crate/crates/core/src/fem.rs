//! Finite-element solves on the ternary diagram: a P1 Laplace-Dirichlet
//! solver for the global mobility and a C0 interior-penalty quadratic
//! discretization of the clamped biharmonic problem for the global capillary
//! pressure, which takes both Dirichlet and Neumann data on the boundary.

use crate::error::{Error, Result};
use crate::linalg::SymBand;
use crate::mesh::{NodeLoc, TriMesh};
use crate::ternary::{Edge, Ternary, SQRT3};
use std::collections::HashMap;
use std::sync::Arc;

/// Boundary data sampled by diagram edge and arc parameter.
pub type BoundaryFn<'a> = &'a dyn Fn(Edge, f64) -> Result<f64>;

/// Penalty weight 20 * degree^2 for the quadratic elements.
const PENALTY: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOrder {
    P1,
    P2,
}

/// Scalar field over the mesh; P1 fields store vertex values, P2 fields
/// store values on the refined lattice (vertices plus edge midpoints).
#[derive(Debug, Clone)]
pub struct NodalField {
    pub mesh: Arc<TriMesh>,
    pub order: FieldOrder,
    pub values: Vec<f64>,
}

// Quadratic shape functions in barycentric coordinates, dof order
// [v0, v1, v2, m01, m12, m20].
fn p2_shape(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

fn p2_grad(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for a in 0..3 {
        for d in 0..2 {
            out[a][d] = (4.0 * l[a] - 1.0) * g[a][d];
        }
    }
    for (k, (a, b)) in [(0usize, 1usize), (1, 2), (2, 0)].iter().enumerate() {
        for d in 0..2 {
            out[3 + k][d] = 4.0 * (l[*a] * g[*b][d] + l[*b] * g[*a][d]);
        }
    }
    out
}

/// Constant Hessians (xx, yy, xy) of the quadratic shape functions.
fn p2_hessians(g: &[[f64; 2]; 3]) -> [[f64; 3]; 6] {
    let mut out = [[0.0; 3]; 6];
    for a in 0..3 {
        out[a] = [4.0 * g[a][0] * g[a][0], 4.0 * g[a][1] * g[a][1], 4.0 * g[a][0] * g[a][1]];
    }
    for (k, (a, b)) in [(0usize, 1usize), (1, 2), (2, 0)].iter().enumerate() {
        out[3 + k] = [
            8.0 * g[*a][0] * g[*b][0],
            8.0 * g[*a][1] * g[*b][1],
            4.0 * (g[*a][0] * g[*b][1] + g[*a][1] * g[*b][0]),
        ];
    }
    out
}

fn hess_inner(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]
}

const EDGE_GAUSS: [(f64, f64); 3] = [
    (0.112701665379258, 0.277777777777778),
    (0.5, 0.444444444444444),
    (0.887298334620742, 0.277777777777778),
];

// Degree-5 element quadrature (barycentric point, weight).
const TRI_QUAD: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059715871789770, 0.470142064105115, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.059715871789770, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.470142064105115, 0.059715871789770], 0.132394152788506),
    ([0.797426985353087, 0.101286507323456, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.797426985353087, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.101286507323456, 0.797426985353087], 0.125939180544827),
];

struct MeshEdge {
    /// (element, local edge) pairs; one entry on the boundary.
    sides: Vec<(usize, usize)>,
    /// Endpoints (vertex ids) ordered as traversed by the first side.
    ends: [usize; 2],
    normal: [f64; 2],
    len: f64,
}

fn collect_edges(mesh: &TriMesh) -> Vec<MeshEdge> {
    let mut map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<MeshEdge> = Vec::new();
    for (t, tri) in mesh.tris.iter().enumerate() {
        for (le, (a, b)) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])].iter().enumerate() {
            let key = (*a.min(b), *a.max(b));
            match map.get(&key) {
                Some(&idx) => edges[idx].sides.push((t, le)),
                None => {
                    let (pa, pb) = (mesh.verts[*a], mesh.verts[*b]);
                    let d = [pb[0] - pa[0], pb[1] - pa[1]];
                    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    // Outward of the first (CCW) side.
                    let normal = [d[1] / len, -d[0] / len];
                    map.insert(key, edges.len());
                    edges.push(MeshEdge { sides: vec![(t, le)], ends: [*a, *b], normal, len });
                }
            }
        }
    }
    edges
}

/// Boundary arc parameter of a point on the segment between two boundary
/// vertices; the diagram edge is taken from a non-corner endpoint.
fn boundary_edge_param(mesh: &TriMesh, ends: [usize; 2], xi: f64) -> Result<(Edge, f64, f64)> {
    let (la, lb) = (mesh.vert_loc[ends[0]], mesh.vert_loc[ends[1]]);
    let edge = match (la, lb) {
        (NodeLoc::Edge { edge, .. }, _) => edge,
        (_, NodeLoc::Edge { edge, .. }) => edge,
        _ => return Err(Error::Fem("boundary segment with two corner endpoints (mesh too coarse)".into())),
    };
    let t_of = |loc: NodeLoc| -> f64 {
        match loc {
            NodeLoc::Edge { t, .. } => t,
            NodeLoc::Corner(c) => {
                c.edges().iter().find(|(e, _)| *e == edge).map(|(_, t)| *t).unwrap()
            }
            NodeLoc::Interior => unreachable!(),
        }
    };
    let (ta, tb) = (t_of(la), t_of(lb));
    Ok((edge, ta, tb - ta)).map(|(e, t0, dt)| (e, t0 + xi * dt, dt))
}

/// Assemble the full (unconstrained) interior-penalty biharmonic system;
/// the right-hand side carries the weakly imposed Neumann data.
fn assemble_biharmonic(mesh: &TriMesh, neumann: BoundaryFn) -> Result<(SymBand, Vec<f64>)> {
    let ndof = mesh.p2_count();
    let edges = collect_edges(mesh);

    // Symbolic pass for the half bandwidth.
    let mut hbw = 0usize;
    for t in 0..mesh.tris.len() {
        let dofs = mesh.p2_dofs(t);
        for &a in &dofs {
            for &b in &dofs {
                hbw = hbw.max(a.abs_diff(b));
            }
        }
    }
    for e in &edges {
        if e.sides.len() == 2 {
            let d0 = mesh.p2_dofs(e.sides[0].0);
            let d1 = mesh.p2_dofs(e.sides[1].0);
            for &a in d0.iter().chain(d1.iter()) {
                for &b in d0.iter().chain(d1.iter()) {
                    hbw = hbw.max(a.abs_diff(b));
                }
            }
        }
    }

    let mut a = SymBand::new(ndof, hbw);
    let mut rhs = vec![0.0; ndof];

    // Element Hessian term.
    for t in 0..mesh.tris.len() {
        let dofs = mesh.p2_dofs(t);
        let g = mesh.grad_lambda(t);
        let hess = p2_hessians(&g);
        let area = mesh.tri_area(t);
        for p in 0..6 {
            for q in 0..=p {
                a.add(dofs[p], dofs[q], area * hess_inner(&hess[p], &hess[q]));
            }
        }
    }

    // Edge terms: consistency, symmetrization and penalty.
    for e in &edges {
        let n = e.normal;
        let nsides = e.sides.len() as f64;
        let mut union: Vec<usize> = Vec::with_capacity(9);
        let mut side_maps: Vec<[usize; 6]> = Vec::with_capacity(2);
        for &(t, _) in &e.sides {
            let dofs = mesh.p2_dofs(t);
            let mut map = [0usize; 6];
            for (k, d) in dofs.iter().enumerate() {
                map[k] = match union.iter().position(|u| u == d) {
                    Some(pos) => pos,
                    None => {
                        union.push(*d);
                        union.len() - 1
                    }
                };
            }
            side_maps.push(map);
        }
        let nu = union.len();

        // Second normal derivatives are constant per side.
        let mut m_avg = vec![0.0; nu];
        let mut hessians = Vec::with_capacity(2);
        let mut grads_lambda = Vec::with_capacity(2);
        for (si, &(t, _)) in e.sides.iter().enumerate() {
            let g = mesh.grad_lambda(t);
            let hs = p2_hessians(&g);
            for k in 0..6 {
                let h = hs[k];
                let mnn = h[0] * n[0] * n[0] + h[1] * n[1] * n[1] + 2.0 * h[2] * n[0] * n[1];
                m_avg[side_maps[si][k]] += mnn / nsides;
            }
            hessians.push(hs);
            grads_lambda.push(g);
        }

        let (pa, pb) = (mesh.verts[e.ends[0]], mesh.verts[e.ends[1]]);
        let penalty = PENALTY / e.len;
        let mut jump_int = vec![0.0; nu];
        let mut jump_pen = vec![0.0; nu * nu];
        let boundary = e.sides.len() == 1;

        for (xi, w) in EDGE_GAUSS {
            let xg = [pa[0] + xi * (pb[0] - pa[0]), pa[1] + xi * (pb[1] - pa[1])];
            let mut jump = vec![0.0; nu];
            for (si, &(t, _)) in e.sides.iter().enumerate() {
                let sign = if si == 0 { 1.0 } else { -1.0 };
                let l = mesh.barycentric(t, xg);
                let grads = p2_grad(l, &grads_lambda[si]);
                for k in 0..6 {
                    jump[side_maps[si][k]] += sign * (grads[k][0] * n[0] + grads[k][1] * n[1]);
                }
            }
            let wl = w * e.len;
            for p in 0..nu {
                jump_int[p] += wl * jump[p];
                for q in 0..nu {
                    jump_pen[p * nu + q] += wl * jump[p] * jump[q];
                }
            }
            if boundary {
                let (edge, t_param, _) = boundary_edge_param(mesh, e.ends, xi)?;
                let gn = neumann(edge, t_param)?;
                for p in 0..nu {
                    rhs[union[p]] += wl * gn * (penalty * jump[p] - m_avg[p]);
                }
            }
        }

        for p in 0..nu {
            for q in 0..=p {
                let val = -(m_avg[p] * jump_int[q] + m_avg[q] * jump_int[p]) + penalty * jump_pen[p * nu + q];
                a.add(union[p], union[q], val);
            }
        }
    }
    Ok((a, rhs))
}

/// Eliminate Dirichlet dofs and solve; `is_bnd`/`bval` describe the
/// constrained dofs of the full system.
fn constrained_solve(a: &SymBand, rhs: &[f64], bval: &[Option<f64>]) -> Result<Vec<f64>> {
    let ndof = rhs.len();
    let mut index = vec![usize::MAX; ndof];
    let mut n_int = 0;
    for (i, v) in bval.iter().enumerate() {
        if v.is_none() {
            index[i] = n_int;
            n_int += 1;
        }
    }
    // Interior indices preserve order, so the reduced bandwidth cannot grow.
    let mut hbw_red = 0usize;
    for (i, j, v) in a.entries() {
        if v != 0.0 && bval[i].is_none() && bval[j].is_none() {
            hbw_red = hbw_red.max(index[i].abs_diff(index[j]));
        }
    }
    let mut ared = SymBand::new(n_int, hbw_red);
    let mut rred = vec![0.0; n_int];
    for (i, v) in rhs.iter().enumerate() {
        if bval[i].is_none() {
            rred[index[i]] = *v;
        }
    }
    for (i, j, v) in a.entries() {
        if v == 0.0 {
            continue;
        }
        match (bval[i], bval[j]) {
            (None, None) => ared.add(index[i], index[j], v),
            (None, Some(g)) => rred[index[i]] -= v * g,
            (Some(g), None) => rred[index[j]] -= v * g,
            (Some(_), Some(_)) => {}
        }
    }
    let chol = ared.cholesky()?;
    chol.solve(&mut rred);
    let mut full = vec![0.0; ndof];
    for i in 0..ndof {
        full[i] = match bval[i] {
            Some(g) => g,
            None => rred[index[i]],
        };
    }
    Ok(full)
}

/// Clamped biharmonic solve: Dirichlet data imposed strongly on boundary
/// dofs, Neumann data imposed weakly through the penalty formulation.
pub fn solve_biharmonic(mesh: &Arc<TriMesh>, dirichlet: BoundaryFn, neumann: BoundaryFn) -> Result<NodalField> {
    let (a, rhs) = assemble_biharmonic(mesh, neumann)?;
    let ndof = mesh.p2_count();
    let mut bval = vec![None; ndof];
    for i in 0..ndof {
        if let Some((edge, t)) = mesh.p2_loc(i).edge_param() {
            bval[i] = Some(dirichlet(edge, t)?);
        }
    }
    let values = constrained_solve(&a, &rhs, &bval)?;
    Ok(NodalField { mesh: mesh.clone(), order: FieldOrder::P2, values })
}

/// Discrete energy 1/2 a(v, v) - L(v) of a full quadratic dof vector; the
/// solver's output minimizes this among fields with the same boundary dofs.
pub fn biharmonic_energy(mesh: &TriMesh, neumann: BoundaryFn, values: &[f64]) -> Result<f64> {
    let (a, rhs) = assemble_biharmonic(mesh, neumann)?;
    let av = a.mul_vec(values);
    let mut e = 0.0;
    for i in 0..values.len() {
        e += 0.5 * values[i] * av[i] - rhs[i] * values[i];
    }
    Ok(e)
}

/// Harmonic interpolation: P1 Laplace solve with Dirichlet data.
pub fn solve_laplace(mesh: &Arc<TriMesh>, dirichlet: BoundaryFn) -> Result<NodalField> {
    let nv = mesh.n_verts();
    let mut hbw = 0usize;
    for tri in &mesh.tris {
        for &a in tri {
            for &b in tri {
                hbw = hbw.max(a.abs_diff(b));
            }
        }
    }
    let mut a = SymBand::new(nv, hbw);
    let rhs = vec![0.0; nv];
    for t in 0..mesh.tris.len() {
        let g = mesh.grad_lambda(t);
        let area = mesh.tri_area(t);
        let tri = mesh.tris[t];
        for p in 0..3 {
            for q in 0..=p {
                a.add(tri[p], tri[q], area * (g[p][0] * g[q][0] + g[p][1] * g[q][1]));
            }
        }
    }
    let mut bval = vec![None; nv];
    for i in 0..nv {
        if let Some((edge, t)) = mesh.vert_loc[i].edge_param() {
            bval[i] = Some(dirichlet(edge, t)?);
        }
    }
    let values = constrained_solve(&a, &rhs, &bval)?;
    Ok(NodalField { mesh: mesh.clone(), order: FieldOrder::P1, values })
}

impl NodalField {
    pub fn eval(&self, s: Ternary) -> Result<f64> {
        let (tri, l) = self.mesh.locate(s)?;
        Ok(match self.order {
            FieldOrder::P1 => {
                let tri_v = self.mesh.tris[tri];
                (0..3).map(|k| l[k] * self.values[tri_v[k]]).sum()
            }
            FieldOrder::P2 => {
                let dofs = self.mesh.p2_dofs(tri);
                let sh = p2_shape(l);
                (0..6).map(|k| sh[k] * self.values[dofs[k]]).sum()
            }
        })
    }

    /// Gradient in embedding coordinates (element-local).
    pub fn grad_xy(&self, s: Ternary) -> Result<[f64; 2]> {
        let (tri, l) = self.mesh.locate(s)?;
        let g = self.mesh.grad_lambda(tri);
        Ok(match self.order {
            FieldOrder::P1 => {
                let tri_v = self.mesh.tris[tri];
                let mut out = [0.0; 2];
                for k in 0..3 {
                    for d in 0..2 {
                        out[d] += self.values[tri_v[k]] * g[k][d];
                    }
                }
                out
            }
            FieldOrder::P2 => {
                let dofs = self.mesh.p2_dofs(tri);
                let grads = p2_grad(l, &g);
                let mut out = [0.0; 2];
                for k in 0..6 {
                    for d in 0..2 {
                        out[d] += self.values[dofs[k]] * grads[k][d];
                    }
                }
                out
            }
        })
    }

    /// Saturation gradient (d/ds1, d/ds3) through the fixed embedding
    /// Jacobian.
    pub fn grad_s(&self, s: Ternary) -> Result<[f64; 2]> {
        let g = self.grad_xy(s)?;
        Ok([-g[0], -0.5 * g[0] + 0.5 * SQRT3 * g[1]])
    }

    /// L2 error against an exact solution given in embedding coordinates.
    pub fn l2_error(&self, exact: &dyn Fn([f64; 2]) -> f64) -> f64 {
        let mesh = &self.mesh;
        let mut acc = 0.0;
        for t in 0..mesh.tris.len() {
            let area = mesh.tri_area(t);
            let tri_v = mesh.tris[t];
            for (l, w) in TRI_QUAD {
                let mut xy = [0.0; 2];
                for k in 0..3 {
                    xy[0] += l[k] * mesh.verts[tri_v[k]][0];
                    xy[1] += l[k] * mesh.verts[tri_v[k]][1];
                }
                let uh: f64 = match self.order {
                    FieldOrder::P1 => (0..3).map(|k| l[k] * self.values[tri_v[k]]).sum(),
                    FieldOrder::P2 => {
                        let dofs = mesh.p2_dofs(t);
                        let sh = p2_shape(l);
                        (0..6).map(|k| sh[k] * self.values[dofs[k]]).sum()
                    }
                };
                let d = uh - exact(xy);
                acc += w * area * d * d;
            }
        }
        acc.sqrt()
    }

    /// Mesh/field export: `node_id,x,y,s1,s3,value`.
    pub fn export_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "node_id,x,y,s1,s3,value")?;
        for (i, v) in self.values.iter().enumerate() {
            let xy = match self.order {
                FieldOrder::P1 => self.mesh.verts[i],
                FieldOrder::P2 => self.mesh.p2_xy(i),
            };
            let s = Ternary::from_xy(xy[0], xy[1]);
            writeln!(w, "{},{},{},{},{},{}", i, xy[0], xy[1], s.s1, s.s3, v)?;
        }
        Ok(())
    }
}

/// Element connectivity export: `elem_id,n0,n1,n2`.
pub fn export_connectivity_csv(mesh: &TriMesh, mut w: impl std::io::Write) -> Result<()> {
    writeln!(w, "elem_id,n0,n1,n2")?;
    for (i, t) in mesh.tris.iter().enumerate() {
        writeln!(w, "{},{},{},{}", i, t[0], t[1], t[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_boundary(loc: NodeLoc) -> bool {
        !matches!(loc, NodeLoc::Interior)
    }
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xy_dirichlet(f: impl Fn([f64; 2]) -> f64 + 'static) -> Box<dyn Fn(Edge, f64) -> Result<f64>> {
        Box::new(move |edge: Edge, t: f64| Ok(f(edge.point(t).embed())))
    }

    /// Outward unit normals of the three diagram edges in the embedding.
    fn edge_normal(edge: Edge) -> [f64; 2] {
        match edge {
            Edge::WaterOil => [0.0, -1.0],
            Edge::WaterGas => [-0.5 * SQRT3, 0.5],
            Edge::GasOil => [0.5 * SQRT3, 0.5],
        }
    }

    fn xy_neumann(grad: impl Fn([f64; 2]) -> [f64; 2] + 'static) -> Box<dyn Fn(Edge, f64) -> Result<f64>> {
        Box::new(move |edge: Edge, t: f64| {
            let g = grad(edge.point(t).embed());
            let n = edge_normal(edge);
            Ok(g[0] * n[0] + g[1] * n[1])
        })
    }

    #[test]
    fn laplace_constant_and_linear_reproduction() {
        let mesh = Arc::new(TriMesh::new(8).unwrap());
        let f = solve_laplace(&mesh, &*xy_dirichlet(|_| 4.2)).unwrap();
        assert!(f.values.iter().all(|v| (v - 4.2).abs() < 1e-11));

        let lin = |xy: [f64; 2]| 1.5 * xy[0] - 0.7 * xy[1] + 0.3;
        let f = solve_laplace(&mesh, &*xy_dirichlet(lin)).unwrap();
        for (i, v) in f.values.iter().enumerate() {
            assert_relative_eq!(*v, lin(mesh.verts[i]), epsilon = 1e-10);
        }
    }

    #[test]
    fn laplace_maximum_principle() {
        let mesh = Arc::new(TriMesh::new(12).unwrap());
        let data = |edge: Edge, t: f64| -> Result<f64> {
            Ok(match edge {
                Edge::WaterOil => (6.0 * t).sin(),
                Edge::GasOil => 1.0 - t,
                Edge::WaterGas => t * t,
            })
        };
        let f = solve_laplace(&mesh, &data).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..mesh.n_verts() {
            if is_boundary(mesh.vert_loc[i]) {
                lo = lo.min(f.values[i]);
                hi = hi.max(f.values[i]);
            }
        }
        for i in 0..mesh.n_verts() {
            if !is_boundary(mesh.vert_loc[i]) {
                assert!(f.values[i] >= lo - 1e-12 && f.values[i] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn laplace_harmonic_convergence_order() {
        let exact = |xy: [f64; 2]| xy[0] * xy[0] - xy[1] * xy[1];
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let mesh = Arc::new(TriMesh::new(n).unwrap());
            let f = solve_laplace(&mesh, &*xy_dirichlet(exact)).unwrap();
            errs.push(f.l2_error(&exact));
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.9 && order2 > 1.9, "orders {order1:.2}, {order2:.2}, errors {errs:?}");
    }

    #[test]
    fn biharmonic_zero_data_gives_zero() {
        let mesh = Arc::new(TriMesh::new(6).unwrap());
        let zero = |_: Edge, _: f64| -> Result<f64> { Ok(0.0) };
        let f = solve_biharmonic(&mesh, &zero, &zero).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-12), "max {:?}", f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    /// Quadratics are biharmonic and lie in the discrete space; with their
    /// exact Dirichlet and Neumann data the solver must reproduce them to
    /// factorization accuracy.
    #[test]
    fn biharmonic_reproduces_global_quadratics() {
        let exact = |xy: [f64; 2]| 0.7 * xy[0] * xy[0] - 1.3 * xy[1] * xy[1] + 0.4 * xy[0] * xy[1] + xy[0] - 2.0;
        let grad = |xy: [f64; 2]| [1.4 * xy[0] + 0.4 * xy[1] + 1.0, -2.6 * xy[1] + 0.4 * xy[0]];
        let mesh = Arc::new(TriMesh::new(8).unwrap());
        let f = solve_biharmonic(&mesh, &*xy_dirichlet(exact), &*xy_neumann(grad)).unwrap();
        for i in 0..mesh.p2_count() {
            let xy = mesh.p2_xy(i);
            assert_relative_eq!(f.values[i], exact(xy), epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    /// x^3 is biharmonic but outside the quadratic space: the error must
    /// decrease under refinement.
    #[test]
    fn biharmonic_cubic_error_decreases() {
        let exact = |xy: [f64; 2]| xy[0] * xy[0] * xy[0];
        let grad = |xy: [f64; 2]| [3.0 * xy[0] * xy[0], 0.0];
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let mesh = Arc::new(TriMesh::new(n).unwrap());
            let f = solve_biharmonic(&mesh, &*xy_dirichlet(exact), &*xy_neumann(grad)).unwrap();
            errs.push(f.l2_error(&exact));
        }
        assert!(errs[1] < errs[0] * 0.6 && errs[2] < errs[1] * 0.6, "errors {errs:?}");
    }

    /// The discrete solution minimizes the penalty energy among fields with
    /// the same boundary dofs.
    #[test]
    fn biharmonic_energy_minimality() {
        let exact = |xy: [f64; 2]| xy[0] * xy[0] * xy[0];
        let grad = |xy: [f64; 2]| [3.0 * xy[0] * xy[0], 0.0];
        let mesh = Arc::new(TriMesh::new(6).unwrap());
        let dir = xy_dirichlet(exact);
        let neu = xy_neumann(grad);
        let f = solve_biharmonic(&mesh, &*dir, &*neu).unwrap();
        let e0 = biharmonic_energy(&mesh, &*neu, &f.values).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let mut v = f.values.clone();
            for i in 0..v.len() {
                if !is_boundary(mesh.p2_loc(i)) {
                    v[i] += rng.gen_range(-0.01..0.01);
                }
            }
            let e = biharmonic_energy(&mesh, &*neu, &v).unwrap();
            assert!(e > e0, "perturbed energy {e} vs solution energy {e0}");
        }
    }

    #[test]
    fn field_eval_and_saturation_gradient() {
        let mesh = Arc::new(TriMesh::new(9).unwrap());
        // Nodal field equal to s1: gradient (1, 0) in saturation coordinates.
        let values: Vec<f64> = (0..mesh.n_verts()).map(|i| mesh.bary[i].s1).collect();
        let f = NodalField { mesh: mesh.clone(), order: FieldOrder::P1, values };
        for (s1, s3) in [(0.4, 0.2), (0.1, 0.6), (0.7, 0.1)] {
            let s = Ternary::new(s1, s3).unwrap();
            assert_relative_eq!(f.eval(s).unwrap(), s1, epsilon = 1e-12);
            let g = f.grad_s(s).unwrap();
            assert_relative_eq!(g[0], 1.0, epsilon = 1e-10);
            assert_relative_eq!(g[1], 0.0, epsilon = 1e-10);
        }
        // Constant field: zero gradient.
        let c = NodalField { mesh: mesh.clone(), order: FieldOrder::P1, values: vec![2.0; mesh.n_verts()] };
        let g = c.grad_s(Ternary::new(0.3, 0.3).unwrap()).unwrap();
        assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
    }

    /// Composing the saturation gradient with the edge normal formulas
    /// recovers the Neumann data of a solved field.
    #[test]
    fn embedding_consistency_on_boundary() {
        let exact = |xy: [f64; 2]| 0.3 * xy[0] * xy[0] + 0.2 * xy[1] * xy[1] - 0.5 * xy[0] * xy[1];
        let grad = |xy: [f64; 2]| [0.6 * xy[0] - 0.5 * xy[1], 0.4 * xy[1] - 0.5 * xy[0]];
        let mesh = Arc::new(TriMesh::new(16).unwrap());
        let f = solve_biharmonic(&mesh, &*xy_dirichlet(exact), &*xy_neumann(grad)).unwrap();
        for edge in Edge::ALL {
            for k in 1..8 {
                let t = k as f64 / 8.0;
                // Probe just inside so the element gradient is well-defined.
                let pt = edge.point(t);
                let eps = 1e-9;
                let inner = Ternary::new_unchecked(
                    pt.s1 * (1.0 - eps) + eps * 0.333,
                    pt.s3 * (1.0 - eps) + eps * 0.333,
                );
                let gs = f.grad_s(inner).unwrap();
                let got = edge.normal_derivative(gs[0], gs[1]);
                let n = edge_normal(edge);
                let gx = grad(pt.embed());
                let expect = gx[0] * n[0] + gx[1] * n[1];
                assert!((got - expect).abs() < 5e-3, "{edge:?} t={t}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn connectivity_export() {
        let mesh = TriMesh::new(3).unwrap();
        let mut buf = Vec::new();
        export_connectivity_csv(&mesh, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 9);
    }
}
