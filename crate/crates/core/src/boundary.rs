//! Edge-restricted potential ODEs, the TD-compatibility test for two-phase
//! data, and the Dirichlet/Neumann boundary data any TD interpolant must
//! satisfy.
//!
//! Edge arc parameterizations: water-oil t -> (1-t, 0), gas-oil t -> (0, t),
//! water-gas t -> (1-t, t). The water-oil profile starts at zero (the
//! normalization corner); the gas-oil profile continues from its oil-corner
//! value; the water-gas profile integrates both capillary slopes at once.
//! Equality of the two gas-corner values is the compatibility condition.

use crate::error::{Error, Result};
use crate::fluids::{FluidSystem, Phase};
use crate::ode::{rk45_sampled, OdeTol};
use crate::ternary::{Edge, SQRT3};
use crate::twophase::TwoPhaseDataset;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy)]
pub struct BoundaryTolerances {
    pub ode_rtol: f64,
    /// Absolute ODE tolerance as a fraction of the capillary scale.
    pub ode_atol_frac: f64,
    /// Compatibility acceptance threshold as a fraction of the capillary scale.
    pub compat_frac: f64,
    /// Dense sample count for the stored profiles.
    pub n_samples: usize,
}

impl Default for BoundaryTolerances {
    fn default() -> Self {
        Self { ode_rtol: 1e-10, ode_atol_frac: 1e-10, compat_frac: 1e-8, n_samples: 129 }
    }
}

/// Two-phase fractional flow of the wetting-side phase on `edge`, as a
/// function of the arc parameter and the oil pressure. For the water-gas
/// edge both flows are returned.
fn edge_nus(
    ds: &TwoPhaseDataset,
    fluids: &FluidSystem,
    edge: Edge,
    t: f64,
    p2: f64,
) -> Result<(f64, f64)> {
    let pt = edge.point(t);
    match edge {
        Edge::WaterOil => {
            let s1 = pt.s1;
            let m1 = ds.kr_edge(edge, Phase::Water, s1)? * fluids.phase(Phase::Water).mobility(p2 + ds.curves.pc12(s1)?)?;
            let m2 = ds.kr_edge(edge, Phase::Oil, s1)? * fluids.phase(Phase::Oil).mobility(p2)?;
            let lam = m1 + m2;
            if lam <= 0.0 {
                return Err(Error::DegenerateMobility { s1: pt.s1, s3: pt.s3, p2 });
            }
            Ok((m1 / lam, 0.0))
        }
        Edge::GasOil => {
            let s3 = pt.s3;
            let m3 = ds.kr_edge(edge, Phase::Gas, s3)? * fluids.phase(Phase::Gas).mobility(p2 + ds.curves.pc32(s3)?)?;
            let m2 = ds.kr_edge(edge, Phase::Oil, s3)? * fluids.phase(Phase::Oil).mobility(p2)?;
            let lam = m3 + m2;
            if lam <= 0.0 {
                return Err(Error::DegenerateMobility { s1: pt.s1, s3: pt.s3, p2 });
            }
            Ok((0.0, m3 / lam))
        }
        Edge::WaterGas => {
            let (s1, s3) = (pt.s1, pt.s3);
            let m1 = ds.kr_edge(edge, Phase::Water, s1)? * fluids.phase(Phase::Water).mobility(p2 + ds.curves.pc12(s1)?)?;
            let m3 = ds.kr_edge(edge, Phase::Gas, s1)? * fluids.phase(Phase::Gas).mobility(p2 + ds.curves.pc32(s3)?)?;
            let lam = m1 + m3;
            if lam <= 0.0 {
                return Err(Error::DegenerateMobility { s1: pt.s1, s3: pt.s3, p2 });
            }
            Ok((m1 / lam, m3 / lam))
        }
    }
}

/// Potential-ODE right-hand side on `edge` at arc parameter t.
fn edge_rhs(ds: &TwoPhaseDataset, fluids: &FluidSystem, edge: Edge, t: f64, p: f64, beta: f64) -> Result<f64> {
    let pt = edge.point(t);
    let (nu1, nu3) = edge_nus(ds, fluids, edge, t, p - beta)?;
    Ok(match edge {
        Edge::WaterOil => -nu1 * ds.curves.dpc12(pt.s1)?,
        Edge::GasOil => nu3 * ds.curves.dpc32(pt.s3)?,
        Edge::WaterGas => -nu1 * ds.curves.dpc12(pt.s1)? + nu3 * ds.curves.dpc32(pt.s3)?,
    })
}

/// Densely sampled boundary potential at one pressure level, with the data
/// needed to evaluate Dirichlet, Neumann and mobility boundary conditions
/// anywhere on the boundary.
#[derive(Debug, Clone)]
pub struct EdgeProfiles {
    pub p: f64,
    ts: Vec<f64>,
    /// Indexed by [water-oil, gas-oil, water-gas].
    beta: [Vec<f64>; 3],
    dbeta: [Vec<f64>; 3],
    pub compat_residual: f64,
    compat_tol: f64,
}

fn edge_slot(edge: Edge) -> usize {
    match edge {
        Edge::WaterOil => 0,
        Edge::GasOil => 1,
        Edge::WaterGas => 2,
    }
}

impl EdgeProfiles {
    /// Integrate the three edge ODEs at pressure level `p`.
    pub fn compute(ds: &TwoPhaseDataset, fluids: &FluidSystem, p: f64, tol: &BoundaryTolerances) -> Result<Self> {
        let n = tol.n_samples.max(9);
        let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let scale = ds.curves.window_margin().max(1.0);
        let ode_tol = OdeTol::new(tol.ode_rtol, [tol.ode_atol_frac * scale]);

        let mut beta: [Vec<f64>; 3] = Default::default();
        let mut dbeta: [Vec<f64>; 3] = Default::default();
        let mut start = [0.0; 3];
        // Water-oil first: the gas-oil profile continues from its endpoint.
        for edge in [Edge::WaterOil, Edge::GasOil, Edge::WaterGas] {
            let slot = edge_slot(edge);
            let path = rk45_sampled(
                |t: f64, y: &[f64; 1]| Ok([edge_rhs(ds, fluids, edge, t, p, y[0])?]),
                &ts,
                [start[slot]],
                &ode_tol,
            )?;
            let values: Vec<f64> = path.iter().map(|y| y[0]).collect();
            if edge == Edge::WaterOil {
                start[edge_slot(Edge::GasOil)] = *values.last().unwrap();
            }
            let mut derivs = Vec::with_capacity(n);
            for (i, t) in ts.iter().enumerate() {
                derivs.push(edge_rhs(ds, fluids, edge, *t, p, values[i])?);
            }
            beta[slot] = values;
            dbeta[slot] = derivs;
        }

        let compat_residual = beta[edge_slot(Edge::GasOil)].last().unwrap() - beta[edge_slot(Edge::WaterGas)].last().unwrap();
        Ok(Self {
            p,
            ts,
            beta,
            dbeta,
            compat_residual,
            compat_tol: tol.compat_frac * scale,
        })
    }

    pub fn is_compatible(&self) -> bool {
        self.compat_residual.abs() <= self.compat_tol
    }

    fn require_compatible(&self) -> Result<()> {
        if self.is_compatible() {
            Ok(())
        } else {
            Err(Error::IncompatibleData { residual: self.compat_residual.abs(), tol: self.compat_tol })
        }
    }

    /// Boundary potential on `edge` at arc parameter t (cubic Hermite over
    /// the stored samples; node derivatives are exact ODE right-hand sides).
    pub fn beta(&self, edge: Edge, t: f64) -> f64 {
        let slot = edge_slot(edge);
        let n = self.ts.len();
        let t = t.clamp(0.0, 1.0);
        let h = 1.0 / (n - 1) as f64;
        let i = ((t / h) as usize).min(n - 2);
        let x = (t - self.ts[i]) / h;
        let (y0, y1) = (self.beta[slot][i], self.beta[slot][i + 1]);
        let (d0, d1) = (self.dbeta[slot][i], self.dbeta[slot][i + 1]);
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// Dirichlet data for the global capillary pressure; continuous around
    /// the boundary once compatibility holds.
    pub fn dirichlet_pcg(&self, edge: Edge, t: f64) -> Result<f64> {
        self.require_compatible()?;
        Ok(self.beta(edge, t))
    }

    /// Outward normal derivative data in the equilateral embedding.
    pub fn neumann_pcg(&self, ds: &TwoPhaseDataset, fluids: &FluidSystem, edge: Edge, t: f64) -> Result<f64> {
        self.require_compatible()?;
        let pt = edge.point(t);
        let p2 = self.p - self.beta(edge, t);
        let (nu1, nu3) = edge_nus(ds, fluids, edge, t, p2)?;
        let c = SQRT3 / 3.0;
        Ok(match edge {
            Edge::WaterOil => c * nu1 * ds.curves.dpc12(pt.s1)?,
            Edge::GasOil => c * nu3 * ds.curves.dpc32(pt.s3)?,
            Edge::WaterGas => c * (nu1 * ds.curves.dpc12(pt.s1)? + nu3 * ds.curves.dpc32(pt.s3)?),
        })
    }

    /// Dirichlet data for the global mobility: the two-phase mobility sum
    /// with phase pressures offset by the boundary potential.
    pub fn dirichlet_mobility(&self, ds: &TwoPhaseDataset, fluids: &FluidSystem, edge: Edge, t: f64) -> Result<f64> {
        self.require_compatible()?;
        self.mobility_formula(ds, fluids, edge, t)
    }

    fn mobility_formula(&self, ds: &TwoPhaseDataset, fluids: &FluidSystem, edge: Edge, t: f64) -> Result<f64> {
        let pt = edge.point(t);
        let p2 = self.p - self.beta(edge, t);
        let d = match edge {
            Edge::WaterOil => {
                ds.kr_edge(edge, Phase::Water, pt.s1)? * fluids.phase(Phase::Water).mobility(p2 + ds.curves.pc12(pt.s1)?)?
                    + ds.kr_edge(edge, Phase::Oil, pt.s1)? * fluids.phase(Phase::Oil).mobility(p2)?
            }
            Edge::WaterGas => {
                ds.kr_edge(edge, Phase::Water, pt.s1)? * fluids.phase(Phase::Water).mobility(p2 + ds.curves.pc12(pt.s1)?)?
                    + ds.kr_edge(edge, Phase::Gas, pt.s1)? * fluids.phase(Phase::Gas).mobility(p2 + ds.curves.pc32(pt.s3)?)?
            }
            Edge::GasOil => {
                ds.kr_edge(edge, Phase::Gas, pt.s3)? * fluids.phase(Phase::Gas).mobility(p2 + ds.curves.pc32(pt.s3)?)?
                    + ds.kr_edge(edge, Phase::Oil, pt.s3)? * fluids.phase(Phase::Oil).mobility(p2)?
            }
        };
        if d <= 0.0 {
            return Err(Error::InvalidData(format!(
                "nonpositive boundary mobility {d:.3e} on edge {} at t = {t}",
                edge.name()
            )));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatReport {
    /// (pressure, residual) per window node, Pa.
    pub residuals: Vec<(f64, f64)>,
    pub tol: f64,
    pub max_abs_residual: f64,
    pub pass: bool,
}

/// Compatibility residual across the pressure window: the gas-corner values
/// of the gas-oil and water-gas profiles must agree at every node.
pub fn compatibility_report(
    ds: &TwoPhaseDataset,
    fluids: &FluidSystem,
    tol: &BoundaryTolerances,
) -> Result<CompatReport> {
    let nodes = fluids.window.nodes();
    let residuals: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&p| -> Result<(f64, f64)> {
            let prof = EdgeProfiles::compute(ds, fluids, p, tol)?;
            Ok((p, prof.compat_residual))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_residual = residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    let t = tol.compat_frac * ds.curves.window_margin().max(1.0);
    Ok(CompatReport { residuals, tol: t, max_abs_residual, pass: max_abs_residual <= t })
}

/// Profiles for every pressure-window node, computed in parallel.
pub fn profiles_over_window(
    ds: &TwoPhaseDataset,
    fluids: &FluidSystem,
    tol: &BoundaryTolerances,
) -> Result<Vec<EdgeProfiles>> {
    fluids
        .window
        .nodes()
        .par_iter()
        .map(|&p| EdgeProfiles::compute(ds, fluids, p, tol))
        .collect()
}

/// CSV export: `edge,t,p,beta,neumann,d_data` at the stored sample points.
pub fn export_profiles_csv(
    ds: &TwoPhaseDataset,
    fluids: &FluidSystem,
    profiles: &[EdgeProfiles],
    mut w: impl Write,
) -> Result<()> {
    writeln!(w, "edge,t,p,beta,neumann,d_data")?;
    for prof in profiles {
        for edge in Edge::ALL {
            for &t in &prof.ts {
                let beta = prof.beta(edge, t);
                let neumann = prof.neumann_pcg(ds, fluids, edge, t)?;
                let d = prof.dirichlet_mobility(ds, fluids, edge, t)?;
                writeln!(w, "{},{},{},{},{},{}", edge.name(), t, prof.p, beta, neumann, d)?;
            }
        }
    }
    Ok(())
}
