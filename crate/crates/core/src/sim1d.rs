//! 1D three-phase compressible IMPES simulator running either the
//! oil-pressure formulation (implicit oil pressure, explicit capillary
//! differences, per-phase flux sum) or the global-pressure formulation
//! (implicit global pressure through the single global Darcy flux), with an
//! identical explicit upwind saturation update so the two pressure paths can
//! be compared cell by cell.

use crate::error::{Error, Result};
use crate::field::GlobalCapillaryField;
use crate::flows::FlowContext;
use crate::fluids::Phase;
use crate::linalg::solve_tridiag;
use crate::ternary::Ternary;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct RockModel {
    /// Absolute permeability per cell, m^2.
    pub k: Vec<f64>,
    /// Reference porosity per cell.
    pub phi0: Vec<f64>,
    /// Rock compressibility, 1/Pa.
    pub c_r: f64,
    /// Reference pressure of the porosity law, Pa.
    pub p_ref: f64,
    /// Depth per cell, m.
    pub z: Vec<f64>,
    /// Gravity acceleration, m/s^2.
    pub g: f64,
}

impl RockModel {
    pub fn uniform(n: usize, k: f64, phi0: f64, c_r: f64, p_ref: f64, g: f64, dz_dx: f64, dx: f64) -> Self {
        Self {
            k: vec![k; n],
            phi0: vec![phi0; n],
            c_r,
            p_ref,
            z: (0..n).map(|i| (i as f64 + 0.5) * dx * dz_dx).collect(),
            g,
        }
    }

    fn phi(&self, i: usize, p_pore: f64) -> f64 {
        self.phi0[i] * (1.0 + self.c_r * (p_pore - self.p_ref))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum BcEnd {
    /// Fixed oil pressure; `s` fixes the inflow saturations, `None` copies
    /// the adjacent cell (outflow style).
    Pressure { p2: f64, s: Option<Ternary> },
    NoFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    OilPressure,
    GlobalPressure,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_cells: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub bc_left: BcEnd,
    pub bc_right: BcEnd,
    /// Dimensionless per-step fill-residual tolerance of the pressure solve.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Time-step halvings allowed on saturation overshoot.
    pub max_halvings: usize,
    /// Record a profile snapshot every this many steps (0: final only).
    pub output_every: usize,
}

impl SimConfig {
    pub fn basic(n_cells: usize, length: f64, dt: f64, t_end: f64, bc_left: BcEnd, bc_right: BcEnd) -> Self {
        Self {
            n_cells,
            length,
            dt,
            t_end,
            bc_left,
            bc_right,
            newton_tol: 1e-12,
            newton_max: 25,
            max_halvings: 8,
            output_every: 0,
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub s1: Vec<f64>,
    pub s3: Vec<f64>,
    /// Pressure unknown: oil pressure or global pressure per formulation.
    pub p: Vec<f64>,
    pub t: f64,
}

impl SimState {
    pub fn uniform(n: usize, s: Ternary, p: f64) -> Self {
        Self { s1: vec![s.s1; n], s3: vec![s.s3; n], p: vec![p; n], t: 0.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub dt: f64,
    pub newton_iters: usize,
    /// Per phase: |mass change - net boundary inflow| in reference-volume
    /// units (conservation check of the explicit update).
    pub balance_error: [f64; 3],
    /// Per phase net boundary inflow over the step.
    pub boundary_inflow: [f64; 3],
    /// Total flux through the left boundary face, reference-volumetric m/s.
    pub q_left: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub x: f64,
    pub s1: f64,
    pub s3: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug)]
pub struct RunResult {
    pub state: SimState,
    pub steps: usize,
    pub series: Vec<SeriesRow>,
    /// Cumulative per-phase boundary inflow, reference-volume units.
    pub cumulative_inflow: [f64; 3],
    /// Cumulative total volume injected through the left face.
    pub injected_left: f64,
    pub worst_balance: [f64; 3],
}

/// Per-cell quantities at the current pressure iterate.
#[derive(Clone, Copy)]
struct CellEval {
    p2: f64,
    pore: f64,
    /// Phase pressures.
    pp: [f64; 3],
    b: [f64; 3],
    rho: [f64; 3],
    kr: [f64; 3],
    /// Phase mobilities kr_j d_j at the cell's own phase pressures.
    m: [f64; 3],
    /// dPcg/dp for the global formulation, 0 otherwise.
    gamma: f64,
    rho_total: f64,
    phi: f64,
}

pub struct Simulator<'a> {
    pub flow: FlowContext<'a>,
    pub field: Option<&'a GlobalCapillaryField>,
    pub rock: RockModel,
    pub cfg: SimConfig,
    pub formulation: Formulation,
}

impl<'a> Simulator<'a> {
    pub fn new(
        flow: FlowContext<'a>,
        field: Option<&'a GlobalCapillaryField>,
        rock: RockModel,
        cfg: SimConfig,
        formulation: Formulation,
    ) -> Result<Self> {
        if formulation == Formulation::GlobalPressure && field.is_none() {
            return Err(Error::Config("the global-pressure formulation needs a tabulated capillary field".into()));
        }
        if rock.k.len() != cfg.n_cells || rock.phi0.len() != cfg.n_cells {
            return Err(Error::Config("rock arrays must match the cell count".into()));
        }
        Ok(Self { flow, field, rock, cfg, formulation })
    }

    /// Convert an oil-pressure value into this formulation's unknown.
    pub fn pressure_from_oil(&self, s: Ternary, p2: f64) -> Result<f64> {
        match self.formulation {
            Formulation::OilPressure => Ok(p2),
            Formulation::GlobalPressure => self.field.unwrap().global_from_oil(s, p2),
        }
    }

    fn eval_cell(&self, i: usize, s: Ternary, p: f64) -> Result<CellEval> {
        let (p2, pore, gamma) = match self.formulation {
            Formulation::OilPressure => {
                let pore = match self.field {
                    Some(f) => f.global_from_oil(s, p)?,
                    None => p,
                };
                (p, pore, 0.0)
            }
            Formulation::GlobalPressure => {
                let f = self.field.unwrap();
                (f.oil_from_global(s, p), p, f.dpcg_dp_at(s, p))
            }
        };
        let pp = self.flow.phase_pressures(s, p2)?;
        let kr = self.flow.kr.kr(s, p2)?;
        let mut b = [0.0; 3];
        let mut rho = [0.0; 3];
        let mut m = [0.0; 3];
        for (j, phase) in Phase::ALL.iter().enumerate() {
            let model = self.flow.fluids.phase(*phase);
            b[j] = model.volume_factor_at(pp[j])?;
            rho[j] = model.density(pp[j])?;
            m[j] = kr[j] * model.mobility(pp[j])?;
        }
        let lambda = m[0] + m[1] + m[2];
        if lambda <= 0.0 {
            return Err(Error::DegenerateMobility { s1: s.s1, s3: s.s3, p2 });
        }
        let rho_total = self.flow.global_density(s, p2)?;
        Ok(CellEval { p2, pore, pp, b, rho, kr: kr.map(|v| v.max(0.0)), m, gamma, rho_total, phi: self.rock.phi(i, pore) })
    }

    fn ghost(&self, bc: BcEnd, neighbor_s: Ternary, neighbor_cell: usize) -> Result<Option<CellEval>> {
        match bc {
            BcEnd::NoFlow => Ok(None),
            BcEnd::Pressure { p2, s } => {
                let s = s.unwrap_or(neighbor_s);
                let p = self.pressure_from_oil(s, p2)?;
                Ok(Some(self.eval_cell(neighbor_cell, s, p)?))
            }
        }
    }

    /// Per-phase flux through a face (positive left-to-right), donor-upwinded
    /// by phase potential.
    fn phase_fluxes(&self, t_face: f64, left: &CellEval, right: &CellEval, dz: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for j in 0..3 {
            let rho_f = 0.5 * (left.rho[j] + right.rho[j]);
            let dphi = right.pp[j] - left.pp[j] - rho_f * self.rock.g * dz;
            let m = if dphi <= 0.0 { left.m[j] } else { right.m[j] };
            out[j] = -t_face * m * dphi;
        }
        out
    }

    /// Total flux through a face for the global-pressure Darcy law.
    fn global_flux(&self, t_face: f64, left: &CellEval, right: &CellEval, p_l: f64, p_r: f64, dz: f64) -> f64 {
        let gamma_f = 0.5 * (left.gamma + right.gamma);
        let rho_f = 0.5 * (left.rho_total + right.rho_total);
        let drive = (1.0 - gamma_f) * (p_r - p_l) - rho_f * self.rock.g * dz;
        let lambda = if drive <= 0.0 {
            left.m[0] + left.m[1] + left.m[2]
        } else {
            right.m[0] + right.m[1] + right.m[2]
        };
        -t_face * lambda * drive
    }

    fn face_transmissibility(&self, i: usize, j: Option<usize>) -> f64 {
        let dx = self.cfg.dx();
        match j {
            Some(j) => 1.0 / (0.5 * dx / self.rock.k[i] + 0.5 * dx / self.rock.k[j]),
            None => self.rock.k[i] / (0.5 * dx),
        }
    }

    fn ghost_dz(&self, left_end: bool) -> f64 {
        let n = self.cfg.n_cells;
        if n < 2 {
            return 0.0;
        }
        let slope = self.rock.z[1] - self.rock.z[0];
        if left_end {
            0.5 * slope
        } else {
            0.5 * (self.rock.z[n - 1] - self.rock.z[n - 2])
        }
    }

    /// Pressure residual: volume-balance form for the oil-pressure
    /// formulation, mass form with the global Darcy flux for the
    /// global-pressure formulation.
    fn residual(&self, state: &SimState, p: &[f64], old_mass: &[[f64; 3]], dt: f64) -> Result<Vec<f64>> {
        let n = self.cfg.n_cells;
        let dx = self.cfg.dx();
        let mut cells = Vec::with_capacity(n);
        for i in 0..n {
            cells.push(self.eval_cell(i, Ternary::new_unchecked(state.s1[i], state.s3[i]), p[i])?);
        }
        let ghost_l = self.ghost(self.cfg.bc_left, Ternary::new_unchecked(state.s1[0], state.s3[0]), 0)?;
        let ghost_r = self.ghost(
            self.cfg.bc_right,
            Ternary::new_unchecked(state.s1[n - 1], state.s3[n - 1]),
            n - 1,
        )?;

        let mut res = vec![0.0; n];
        match self.formulation {
            Formulation::OilPressure => {
                // Per-face per-phase fluxes.
                let mut flux = vec![[0.0; 3]; n + 1];
                if let Some(g) = &ghost_l {
                    flux[0] = self.phase_fluxes(self.face_transmissibility(0, None), g, &cells[0], self.ghost_dz(true));
                }
                for f in 1..n {
                    flux[f] = self.phase_fluxes(
                        self.face_transmissibility(f - 1, Some(f)),
                        &cells[f - 1],
                        &cells[f],
                        self.rock.z[f] - self.rock.z[f - 1],
                    );
                }
                if let Some(g) = &ghost_r {
                    flux[n] = self.phase_fluxes(self.face_transmissibility(n - 1, None), &cells[n - 1], g, self.ghost_dz(false));
                }
                for i in 0..n {
                    let c = &cells[i];
                    let mut acc = c.phi;
                    let mut div = 0.0;
                    for j in 0..3 {
                        acc -= old_mass[i][j] / c.b[j];
                        div += (flux[i + 1][j] - flux[i][j]) / c.b[j];
                    }
                    res[i] = dx / dt * acc + div;
                }
            }
            Formulation::GlobalPressure => {
                let mut q = vec![0.0; n + 1];
                if let Some(g) = &ghost_l {
                    let pg = self.pressure_from_oil_of_ghost(self.cfg.bc_left, state, 0)?;
                    q[0] = self.global_flux(self.face_transmissibility(0, None), g, &cells[0], pg, p[0], self.ghost_dz(true));
                }
                for f in 1..n {
                    q[f] = self.global_flux(
                        self.face_transmissibility(f - 1, Some(f)),
                        &cells[f - 1],
                        &cells[f],
                        p[f - 1],
                        p[f],
                        self.rock.z[f] - self.rock.z[f - 1],
                    );
                }
                if let Some(g) = &ghost_r {
                    let pg = self.pressure_from_oil_of_ghost(self.cfg.bc_right, state, n - 1)?;
                    q[n] = self.global_flux(self.face_transmissibility(n - 1, None), &cells[n - 1], g, p[n - 1], pg, self.ghost_dz(false));
                }
                for i in 0..n {
                    let c = &cells[i];
                    let mut acc = 0.0;
                    let s = Ternary::new_unchecked(state.s1[i], state.s3[i]);
                    let sats = [s.s1, s.s2(), s.s3];
                    for j in 0..3 {
                        acc += c.phi * c.b[j] * sats[j] - old_mass[i][j];
                    }
                    res[i] = dx / dt * acc + (q[i + 1] - q[i]);
                }
            }
        }
        Ok(res)
    }

    fn pressure_from_oil_of_ghost(&self, bc: BcEnd, state: &SimState, cell: usize) -> Result<f64> {
        match bc {
            BcEnd::Pressure { p2, s } => {
                let s = s.unwrap_or(Ternary::new_unchecked(state.s1[cell], state.s3[cell]));
                self.pressure_from_oil(s, p2)
            }
            BcEnd::NoFlow => Ok(state.p[cell]),
        }
    }

    /// Implicit pressure solve by damped Newton with a colored
    /// finite-difference tridiagonal Jacobian.
    fn solve_pressure(&self, state: &SimState, old_mass: &[[f64; 3]], dt: f64) -> Result<(Vec<f64>, usize)> {
        let n = self.cfg.n_cells;
        let dx = self.cfg.dx();
        let mut p = state.p.clone();
        let scale = dt / dx;
        for iter in 0..self.cfg.newton_max {
            let r0 = self.residual(state, &p, old_mass, dt)?;
            let worst = r0.iter().map(|r| r.abs()).fold(0.0, f64::max) * scale;
            if worst < self.cfg.newton_tol {
                return Ok((p, iter));
            }
            // Tridiagonal Jacobian via three-color perturbations.
            let mut lower = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for color in 0..3usize.min(n) {
                let mut pp = p.clone();
                let mut h = vec![0.0; n];
                for i in (color..n).step_by(3) {
                    h[i] = p[i].abs().max(1.0) * 1e-7;
                    pp[i] += h[i];
                }
                let r1 = self.residual(state, &pp, old_mass, dt)?;
                for i in (color..n).step_by(3) {
                    diag[i] += (r1[i] - r0[i]) / h[i];
                    if i > 0 {
                        upper[i - 1] += (r1[i - 1] - r0[i - 1]) / h[i];
                    }
                    if i + 1 < n {
                        lower[i + 1] += (r1[i + 1] - r0[i + 1]) / h[i];
                    }
                }
            }
            let rhs: Vec<f64> = r0.iter().map(|r| -r).collect();
            let delta = solve_tridiag(&lower, &diag, &upper, &rhs)?;
            for i in 0..n {
                p[i] += delta[i];
            }
        }
        let r = self.residual(state, &p, old_mass, dt)?;
        let worst = r.iter().map(|v| v.abs()).fold(0.0, f64::max) * scale;
        if worst < 1e3 * self.cfg.newton_tol {
            // Upwind chatter can stall the last digits; accept a near-converged state.
            return Ok((p, self.cfg.newton_max));
        }
        Err(Error::NonConvergence {
            what: "pressure solve".into(),
            iters: self.cfg.newton_max,
            residual: worst,
        })
    }

    /// One IMPES step at the given dt. Fails with a saturation-overshoot
    /// error when dt violates the transport stability limit.
    fn try_step(&self, state: &SimState, dt: f64) -> Result<(SimState, StepInfo)> {
        let n = self.cfg.n_cells;
        let dx = self.cfg.dx();

        // Accumulations at the start of the step.
        let mut old_mass = vec![[0.0; 3]; n];
        for i in 0..n {
            let s = Ternary::new_unchecked(state.s1[i], state.s3[i]);
            let c = self.eval_cell(i, s, state.p[i])?;
            let sats = [s.s1, s.s2(), s.s3];
            for j in 0..3 {
                old_mass[i][j] = c.phi * c.b[j] * sats[j];
            }
        }

        let (p_new, iters) = self.solve_pressure(state, &old_mass, dt)?;

        // Final per-phase fluxes at the converged pressures.
        let mut cells = Vec::with_capacity(n);
        for i in 0..n {
            cells.push(self.eval_cell(i, Ternary::new_unchecked(state.s1[i], state.s3[i]), p_new[i])?);
        }
        let ghost_l = self.ghost(self.cfg.bc_left, Ternary::new_unchecked(state.s1[0], state.s3[0]), 0)?;
        let ghost_r = self.ghost(
            self.cfg.bc_right,
            Ternary::new_unchecked(state.s1[n - 1], state.s3[n - 1]),
            n - 1,
        )?;
        let mut flux = vec![[0.0; 3]; n + 1];
        if let Some(g) = &ghost_l {
            flux[0] = self.phase_fluxes(self.face_transmissibility(0, None), g, &cells[0], self.ghost_dz(true));
        }
        for f in 1..n {
            flux[f] = self.phase_fluxes(
                self.face_transmissibility(f - 1, Some(f)),
                &cells[f - 1],
                &cells[f],
                self.rock.z[f] - self.rock.z[f - 1],
            );
        }
        if let Some(g) = &ghost_r {
            flux[n] = self.phase_fluxes(self.face_transmissibility(n - 1, None), &cells[n - 1], g, self.ghost_dz(false));
        }

        // Explicit conservative update of water and gas; oil closes the sum.
        let mut new = state.clone();
        new.p = p_new;
        new.t = state.t + dt;
        let mut new_mass = vec![[0.0; 3]; n];
        for i in 0..n {
            let s_old = Ternary::new_unchecked(state.s1[i], state.s3[i]);
            let c = self.eval_cell(i, s_old, new.p[i])?;
            let m1 = old_mass[i][0] - dt / dx * (flux[i + 1][0] - flux[i][0]);
            let m3 = old_mass[i][2] - dt / dx * (flux[i + 1][2] - flux[i][2]);
            let s1 = m1 / (c.phi * c.b[0]);
            let s3 = m3 / (c.phi * c.b[2]);
            if !(s1 >= -1e-9 && s3 >= -1e-9 && s1 + s3 <= 1.0 + 1e-9) {
                return Err(Error::Unstable(format!(
                    "saturation overshoot in cell {i}: s1 = {s1:.9}, s3 = {s3:.9}, sum = {:.9} (dt too large)", s1 + s3
                )));
            }
            new.s1[i] = s1.clamp(0.0, 1.0);
            new.s3[i] = s3.clamp(0.0, 1.0);
            new_mass[i] = [m1, 0.0, m3];
        }

        // Conservation bookkeeping.
        let mut info = StepInfo {
            dt,
            newton_iters: iters,
            balance_error: [0.0; 3],
            boundary_inflow: [0.0; 3],
            q_left: flux[0].iter().sum(),
        };
        for j in [0usize, 2] {
            let change: f64 = (0..n).map(|i| (new_mass[i][j] - old_mass[i][j]) * dx).sum();
            let inflow = dt * (flux[0][j] - flux[n][j]);
            info.boundary_inflow[j] = inflow;
            info.balance_error[j] = (change - inflow).abs();
        }
        // Oil balance from the closure saturation.
        let mut change2 = 0.0;
        for i in 0..n {
            let s_new = Ternary::new_unchecked(new.s1[i], new.s3[i]);
            let c = self.eval_cell(i, Ternary::new_unchecked(state.s1[i], state.s3[i]), new.p[i])?;
            change2 += (c.phi * c.b[1] * s_new.s2() - old_mass[i][1]) * dx;
        }
        let inflow2 = dt * (flux[0][1] - flux[n][1]);
        info.boundary_inflow[1] = inflow2;
        info.balance_error[1] = (change2 - inflow2).abs();
        Ok((new, info))
    }

    /// Advance one step, halving dt on saturation overshoot.
    pub fn step(&self, state: &SimState, dt: &mut f64) -> Result<(SimState, StepInfo)> {
        let mut attempt = *dt;
        let mut last = String::new();
        for _ in 0..=self.cfg.max_halvings {
            match self.try_step(state, attempt) {
                Ok(out) => {
                    *dt = attempt;
                    return Ok(out);
                }
                Err(Error::Unstable(msg)) => {
                    last = msg;
                    attempt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::Unstable(format!(
            "overshoot persists after {} halvings (dt = {attempt:.3e}): {last}",
            self.cfg.max_halvings
        )))
    }

    pub fn run(&self, mut state: SimState) -> Result<RunResult> {
        let mut dt = self.cfg.dt;
        let mut steps = 0usize;
        let mut series = Vec::new();
        let mut cumulative = [0.0f64; 3];
        let mut injected_left = 0.0;
        let mut worst = [0.0f64; 3];
        while state.t < self.cfg.t_end - 1e-12 * self.cfg.t_end {
            let mut dt_step = dt.min(self.cfg.t_end - state.t);
            let (next, info) = self.step(&state, &mut dt_step)?;
            dt = dt.min(dt_step);
            state = next;
            steps += 1;
            for j in 0..3 {
                cumulative[j] += info.boundary_inflow[j];
                worst[j] = worst[j].max(info.balance_error[j]);
            }
            injected_left += info.q_left * info.dt;
            if self.cfg.output_every > 0 && steps % self.cfg.output_every == 0 {
                self.snapshot(&state, &mut series)?;
            }
        }
        self.snapshot(&state, &mut series)?;
        Ok(RunResult { state, steps, series, cumulative_inflow: cumulative, injected_left, worst_balance: worst })
    }

    fn snapshot(&self, state: &SimState, series: &mut Vec<SeriesRow>) -> Result<()> {
        let dx = self.cfg.dx();
        let n = self.cfg.n_cells;
        let mut cells = Vec::with_capacity(n);
        for i in 0..n {
            cells.push(self.eval_cell(i, Ternary::new_unchecked(state.s1[i], state.s3[i]), state.p[i])?);
        }
        for i in 0..n {
            // Cell-centered total flux from the right face (left face for the
            // first cell would need the ghost; the series is diagnostic).
            let q = if i + 1 < n {
                self.phase_fluxes(
                    self.face_transmissibility(i, Some(i + 1)),
                    &cells[i],
                    &cells[i + 1],
                    self.rock.z[i + 1] - self.rock.z[i],
                )
                .iter()
                .sum()
            } else {
                0.0
            };
            series.push(SeriesRow {
                t: state.t,
                x: (i as f64 + 0.5) * dx,
                s1: state.s1[i],
                s3: state.s3[i],
                p: state.p[i],
                q,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub linf_s1: f64,
    pub linf_s3: f64,
    pub l1_s1: f64,
    pub l1_s3: f64,
    /// Max |P implied by the oil-pressure run - P of the global run|488, Pa.
    pub pressure_crosscheck: f64,
    pub steps_oil: usize,
    pub steps_global: usize,
}

/// Run both formulations on identical grids and timesteps and compare the
/// final states.
pub fn run_compare(
    flow: &FlowContext<'_>,
    field: &GlobalCapillaryField,
    rock: &RockModel,
    cfg: &SimConfig,
    init_s: (Vec<f64>, Vec<f64>),
    init_p2: f64,
) -> Result<(CompareReport, RunResult, RunResult)> {
    let n = cfg.n_cells;
    let sim_a = Simulator::new(*flow, Some(field), rock.clone(), cfg.clone(), Formulation::OilPressure)?;
    let sim_b = Simulator::new(*flow, Some(field), rock.clone(), cfg.clone(), Formulation::GlobalPressure)?;

    let state_a = SimState { s1: init_s.0.clone(), s3: init_s.1.clone(), p: vec![init_p2; n], t: 0.0 };
    let mut p_b = vec![0.0; n];
    for i in 0..n {
        p_b[i] = field.global_from_oil(Ternary::new_unchecked(init_s.0[i], init_s.1[i]), init_p2)?;
    }
    let state_b = SimState { s1: init_s.0, s3: init_s.1, p: p_b, t: 0.0 };

    let ra = sim_a.run(state_a)?;
    let rb = sim_b.run(state_b)?;

    let mut rep = CompareReport {
        linf_s1: 0.0,
        linf_s3: 0.0,
        l1_s1: 0.0,
        l1_s3: 0.0,
        pressure_crosscheck: 0.0,
        steps_oil: ra.steps,
        steps_global: rb.steps,
    };
    for i in 0..n {
        let d1 = (ra.state.s1[i] - rb.state.s1[i]).abs();
        let d3 = (ra.state.s3[i] - rb.state.s3[i]).abs();
        rep.linf_s1 = rep.linf_s1.max(d1);
        rep.linf_s3 = rep.linf_s3.max(d3);
        rep.l1_s1 += d1 / n as f64;
        rep.l1_s3 += d3 / n as f64;
        let s_a = Ternary::new_unchecked(ra.state.s1[i], ra.state.s3[i]);
        let p_implied = field.global_from_oil(s_a, ra.state.p[i])?;
        rep.pressure_crosscheck = rep.pressure_crosscheck.max((p_implied - rb.state.p[i]).abs());
    }
    Ok((rep, ra, rb))
}

/// Time-series CSV: `t,x,S1,S3,P2_or_P,q`.
pub fn export_series_csv(rows: &[SeriesRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "t,x,S1,S3,P2_or_P,q")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.t, r.x, r.s1, r.s3, r.p, r.q)?;
    }
    Ok(())
}
