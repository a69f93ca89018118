//! Tabulated global capillary pressure and its pressure derivative over the
//! ternary diagram and the pressure window, with local polynomial
//! interpolation for fast evaluation inside the simulator.
//!
//! The diagram is mapped to the unit square by (s1, u) with s3 = u (1 - s1);
//! the grid is a tensor product in (s1, u, p).

use crate::error::{Error, Result};
use crate::gcp::GcpContext;
use crate::ternary::Ternary;
use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct GlobalCapillaryField {
    s1: Vec<f64>,
    u: Vec<f64>,
    p: Vec<f64>,
    /// pcg[(k * n_u + j) * n_s + i]
    pcg: Vec<f64>,
    dpdp: Vec<f64>,
    pub pc_scale: f64,
    pub fixed_point_tol: f64,
}

/// Local Lagrange weights on up to four consecutive grid nodes; degree drops
/// with the node count. Queries beyond the grid use the end stencil.
fn lagrange_weights(grid: &[f64], x: f64) -> (usize, [f64; 4], usize) {
    let n = grid.len();
    let width = n.min(4);
    let mut cell = match grid.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    cell = cell.min(n - 2);
    let start = cell.saturating_sub((width - 1) / 2).min(n - width);
    let mut w = [0.0; 4];
    for a in 0..width {
        let xa = grid[start + a];
        let mut prod = 1.0;
        for b in 0..width {
            if a != b {
                let xb = grid[start + b];
                prod *= (x - xb) / (xa - xb);
            }
        }
        w[a] = prod;
    }
    (start, w, width)
}

impl GlobalCapillaryField {
    /// Tabulate the potential and its pressure slope on an n_s x n_s x
    /// (window nodes) grid. Refuses data whose path spread exceeds the TD
    /// tolerance on a coarse probe set: a tabulated field of path-dependent
    /// data would be meaningless.
    pub fn build(gcp: &GcpContext<'_>, n_s: usize) -> Result<Self> {
        if n_s < 4 {
            return Err(Error::Config(format!("field grid needs n_s >= 4, got {n_s}")));
        }
        let tol = gcp.tol.td_spread_frac * gcp.pc_scale();
        let probes = [(0.25, 0.25), (0.5, 0.25), (0.25, 0.5), (0.6, 0.3), (0.35, 0.1)];
        for (s1, s3) in probes {
            for p in [gcp.window.p_min, gcp.window.p_max] {
                let spread = gcp.td_residual_paths(Ternary::new_unchecked(s1, s3), p, 6, 0x7d)?;
                if spread > tol {
                    return Err(Error::TdViolation { spread, tol });
                }
            }
        }

        let n_u = n_s;
        let s1: Vec<f64> = (0..n_s).map(|i| i as f64 / (n_s - 1) as f64).collect();
        let u: Vec<f64> = (0..n_u).map(|j| j as f64 / (n_u - 1) as f64).collect();
        let p = gcp.window.nodes();

        let idx: Vec<usize> = (0..n_s * n_u * p.len()).collect();
        let values: Vec<(f64, f64)> = idx
            .par_iter()
            .map(|&flat| -> Result<(f64, f64)> {
                let i = flat % n_s;
                let j = (flat / n_s) % n_u;
                let k = flat / (n_s * n_u);
                let s3 = u[j] * (1.0 - s1[i]);
                gcp.pcg_and_slope(Ternary::new_unchecked(s1[i], s3), p[k])
            })
            .collect::<Result<Vec<_>>>()?;

        let mut pcg = Vec::with_capacity(values.len());
        let mut dpdp = Vec::with_capacity(values.len());
        for (b, g) in values {
            if 1.0 - g <= 0.0 {
                return Err(Error::Unstable(format!("1 - dPcg/dp = {} at a grid node", 1.0 - g)));
            }
            pcg.push(b);
            dpdp.push(g);
        }
        Ok(Self {
            s1,
            u,
            p,
            pcg,
            dpdp,
            pc_scale: gcp.pc_scale(),
            fixed_point_tol: gcp.tol.fixed_point_tol,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.s1.len(), self.u.len(), self.p.len())
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> (Ternary, f64, f64, f64) {
        let s1 = self.s1[i];
        let s3 = self.u[j] * (1.0 - s1);
        let flat = (k * self.u.len() + j) * self.s1.len() + i;
        (Ternary::new_unchecked(s1, s3), self.p[k], self.pcg[flat], self.dpdp[flat])
    }

    fn interp(&self, data: &[f64], s: Ternary, p: f64) -> f64 {
        let u = if s.s1 >= 1.0 - 1e-12 { 0.0 } else { (s.s3 / (1.0 - s.s1)).clamp(0.0, 1.0) };
        let (i0, wi, ni) = lagrange_weights(&self.s1, s.s1);
        let (j0, wj, nj) = lagrange_weights(&self.u, u);
        let (k0, wk, nk) = lagrange_weights(&self.p, p);
        let (n_s, n_u) = (self.s1.len(), self.u.len());
        let mut acc = 0.0;
        for c in 0..nk {
            let mut acc_p = 0.0;
            for b in 0..nj {
                let row = ((k0 + c) * n_u + (j0 + b)) * n_s + i0;
                let mut acc_u = 0.0;
                for a in 0..ni {
                    acc_u += wi[a] * data[row + a];
                }
                acc_p += wj[b] * acc_u;
            }
            acc += wk[c] * acc_p;
        }
        acc
    }

    pub fn pcg_at(&self, s: Ternary, p: f64) -> f64 {
        self.interp(&self.pcg, s, p)
    }

    pub fn dpcg_dp_at(&self, s: Ternary, p: f64) -> f64 {
        self.interp(&self.dpdp, s, p)
    }

    pub fn oil_from_global(&self, s: Ternary, p: f64) -> f64 {
        p - self.pcg_at(s, p)
    }

    /// Solve P = p2 + Pcg(s, P) on the interpolated field.
    pub fn global_from_oil(&self, s: Ternary, p2: f64) -> Result<f64> {
        let mut p = p2 + self.pcg_at(s, p2);
        let tol = self.fixed_point_tol.max(8.0 * f64::EPSILON * p2.abs());
        for _ in 0..100 {
            let next = p2 + self.pcg_at(s, p);
            if (next - p).abs() < tol {
                return Ok(next);
            }
            p = next;
        }
        Err(Error::NonConvergence {
            what: format!("field global pressure at (s1, s3) = ({}, {})", s.s1, s.s3),
            iters: 100,
            residual: f64::NAN,
        })
    }

    /// CSV export: `s1,s3,p,pcg,dpcg_dp` over all grid nodes.
    pub fn export_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "s1,s3,p,pcg,dpcg_dp")?;
        let (n_s, n_u, n_p) = self.dims();
        for k in 0..n_p {
            for j in 0..n_u {
                for i in 0..n_s {
                    let (s, p, b, g) = self.node(i, j, k);
                    writeln!(w, "{},{},{},{},{}", s.s1, s.s3, p, b, g)?;
                }
            }
        }
        Ok(())
    }
}
