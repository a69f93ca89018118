//! Turn interpolated global-capillary-pressure and mobility fields into
//! three-phase fractional flows and relative permeabilities, verify boundary
//! honoring and TD validity, and check the flux identity between the two
//! Darcy forms.

use crate::boundary::{compatibility_report, profiles_over_window, BoundaryTolerances, EdgeProfiles};
use crate::error::{Error, Result};
use crate::fem::{solve_biharmonic, solve_laplace, NodalField};
use crate::flows::{FlowContext, Provenance, ThreePhaseKr};
use crate::fluids::{FluidSystem, Phase};
use crate::gcp::{GcpContext, GcpTolerances, SaturationPath};
use crate::mesh::TriMesh;
use crate::ternary::{Edge, Ternary};
use crate::twophase::{edge_phases, TwoPhaseDataset};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// Fractional flows outside [-nu_clamp, 1 + nu_clamp] fail hard; smaller
/// excursions are clamped and counted (interpolated fields are inexact near
/// steep capillary regions).
const NU_CLAMP: f64 = 1e-3;

/// Interpolated (potential, mobility) field pair per pressure node, plus the
/// boundary profiles they were built from.
pub struct InterpolatedData {
    pub mesh: Arc<TriMesh>,
    pub p_nodes: Vec<f64>,
    pub pcg_fields: Vec<NodalField>,
    pub d_fields: Vec<NodalField>,
    pub profiles: Vec<EdgeProfiles>,
    /// Width of the accepted fractional-flow excursion window.
    pub nu_clamp: f64,
    clamp_count: AtomicUsize,
}

/// Run the interpolation pipeline: compatibility check, boundary profiles,
/// then per pressure node a clamped-biharmonic solve for the potential and a
/// harmonic solve for the mobility.
pub fn interpolate(
    dataset: &TwoPhaseDataset,
    fluids: &FluidSystem,
    mesh_n: usize,
    tol: &BoundaryTolerances,
) -> Result<InterpolatedData> {
    let compat = compatibility_report(dataset, fluids, tol)?;
    if !compat.pass {
        return Err(Error::IncompatibleData { residual: compat.max_abs_residual, tol: compat.tol });
    }
    let mesh = Arc::new(TriMesh::new(mesh_n)?);
    let profiles = profiles_over_window(dataset, fluids, tol)?;
    let mut pcg_fields = Vec::with_capacity(profiles.len());
    let mut d_fields = Vec::with_capacity(profiles.len());
    for prof in &profiles {
        let dirichlet = |edge: Edge, t: f64| prof.dirichlet_pcg(edge, t);
        let neumann = |edge: Edge, t: f64| prof.neumann_pcg(dataset, fluids, edge, t);
        pcg_fields.push(solve_biharmonic(&mesh, &dirichlet, &neumann)?);
        let mobility = |edge: Edge, t: f64| prof.dirichlet_mobility(dataset, fluids, edge, t);
        d_fields.push(solve_laplace(&mesh, &mobility)?);
    }
    Ok(InterpolatedData {
        mesh,
        p_nodes: fluids.window.nodes(),
        pcg_fields,
        d_fields,
        profiles,
        nu_clamp: NU_CLAMP,
        clamp_count: AtomicUsize::new(0),
    })
}

/// Lagrange weights in the pressure direction (up to cubic).
fn p_weights(p_nodes: &[f64], p: f64) -> (usize, [f64; 4], usize) {
    let n = p_nodes.len();
    let width = n.min(4);
    let mut cell = match p_nodes.binary_search_by(|v| v.partial_cmp(&p).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    cell = cell.min(n - 2);
    let start = cell.saturating_sub((width - 1) / 2).min(n - width);
    let mut w = [0.0; 4];
    for a in 0..width {
        let mut prod = 1.0;
        for b in 0..width {
            if a != b {
                prod *= (p - p_nodes[start + b]) / (p_nodes[start + a] - p_nodes[start + b]);
            }
        }
        w[a] = prod;
    }
    (start, w, width)
}

impl InterpolatedData {
    pub fn clamped_evaluations(&self) -> usize {
        self.clamp_count.load(Ordering::Relaxed)
    }

    fn p_combine(&self, fields: &[NodalField], s: Ternary, p: f64, grad: bool) -> Result<[f64; 3]> {
        let (k0, w, nk) = p_weights(&self.p_nodes, p);
        let mut out = [0.0; 3];
        for c in 0..nk {
            let f = &fields[k0 + c];
            if grad {
                let g = f.grad_s(s)?;
                out[1] += w[c] * g[0];
                out[2] += w[c] * g[1];
            } else {
                out[0] += w[c] * f.eval(s)?;
            }
        }
        Ok(out)
    }

    pub fn pcg_at(&self, s: Ternary, p: f64) -> Result<f64> {
        Ok(self.p_combine(&self.pcg_fields, s, p, false)?[0])
    }

    /// Saturation gradient (d/ds1, d/ds3) of the interpolated potential.
    pub fn grad_pcg_at(&self, s: Ternary, p: f64) -> Result<[f64; 2]> {
        let v = self.p_combine(&self.pcg_fields, s, p, true)?;
        Ok([v[1], v[2]])
    }

    pub fn mobility_at(&self, s: Ternary, p: f64) -> Result<f64> {
        Ok(self.p_combine(&self.d_fields, s, p, false)?[0])
    }

    /// Fractional flows from the potential gradient and the capillary
    /// slopes, before the clamping policy.
    pub fn nu_raw(&self, curves: &crate::twophase::CapillaryCurves, s: Ternary, p: f64) -> Result<[f64; 3]> {
        let g = self.grad_pcg_at(s, p)?;
        let scale = curves.window_margin().max(1.0);
        let mut nu = [0.0; 3];
        for (slot, (grad, slope)) in [(g[0], curves.dpc12(s.s1)?), (g[1], curves.dpc32(s.s3)?)].iter().enumerate() {
            let j = if slot == 0 { 0 } else { 2 };
            if slope.abs() < 1e-12 * scale {
                if grad.abs() < 1e-9 * scale {
                    nu[j] = 0.0;
                } else {
                    return Err(Error::InvalidData(format!(
                        "fractional flow undefined at (s1, s3) = ({}, {}): vanishing capillary slope with potential gradient {grad:.3e}",
                        s.s1, s.s3
                    )));
                }
            } else {
                nu[j] = grad / slope;
            }
        }
        nu[1] = 1.0 - nu[0] - nu[2];
        Ok(nu)
    }

    /// Fractional flows with the clamping policy applied.
    pub fn nu_at(&self, curves: &crate::twophase::CapillaryCurves, s: Ternary, p: f64) -> Result<[f64; 3]> {
        let mut nu = self.nu_raw(curves, s, p)?;
        for j in [0usize, 2] {
            if nu[j] < -self.nu_clamp || nu[j] > 1.0 + self.nu_clamp {
                return Err(Error::InvalidData(format!(
                    "fractional flow {} = {:.6} outside the clamp window at (s1, s3) = ({}, {}), p = {p:.4e}",
                    if j == 0 { "nu1" } else { "nu3" },
                    nu[j],
                    s.s1,
                    s.s3
                )));
            }
            let clamped = nu[j].clamp(0.0, 1.0);
            if clamped != nu[j] {
                self.clamp_count.fetch_add(1, Ordering::Relaxed);
                nu[j] = clamped;
            }
        }
        nu[1] = 1.0 - nu[0] - nu[2];
        Ok(nu)
    }

    /// Reconstructed relative permeabilities at global pressure level p.
    pub fn kr_at(
        &self,
        fluids: &FluidSystem,
        curves: &crate::twophase::CapillaryCurves,
        s: Ternary,
        p: f64,
    ) -> Result<[f64; 3]> {
        let nu = self.nu_at(curves, s, p)?;
        let pcg = self.pcg_at(s, p)?;
        let d = self.mobility_at(s, p)?;
        let p2 = p - pcg;
        let pp = [p2 + curves.pc12(s.s1)?, p2, p2 + curves.pc32(s.s3)?];
        let mut kr = [0.0; 3];
        for (j, phase) in Phase::ALL.iter().enumerate() {
            kr[j] = nu[j] * d / fluids.phase(*phase).mobility(pp[j])?;
        }
        Ok(kr)
    }
}

/// Reconstructed kr as a three-phase evaluator in oil-pressure form: the
/// implied global pressure is recovered by the field fixed point.
pub struct ReconstructedKr<'a> {
    pub data: &'a InterpolatedData,
    pub fluids: &'a FluidSystem,
    pub curves: &'a crate::twophase::CapillaryCurves,
}

impl ReconstructedKr<'_> {
    fn global_pressure(&self, s: Ternary, p2: f64) -> Result<f64> {
        let mut p = p2 + self.data.pcg_at(s, p2)?;
        for _ in 0..60 {
            let next = p2 + self.data.pcg_at(s, p)?;
            // Floor the tolerance at a few ulps of the pressure scale.
            if (next - p).abs() < 1e-9f64.max(8.0 * f64::EPSILON * p.abs()) {
                return Ok(next);
            }
            p = next;
        }
        Err(Error::NonConvergence {
            what: format!("reconstructed global pressure at (s1, s3) = ({}, {})", s.s1, s.s3),
            iters: 60,
            residual: f64::NAN,
        })
    }
}

impl ThreePhaseKr for ReconstructedKr<'_> {
    fn kr(&self, s: Ternary, p2: f64) -> Result<[f64; 3]> {
        let p = self.global_pressure(s, p2)?;
        self.data.kr_at(self.fluids, self.curves, s, p)
    }

    fn kr_slope_p2(&self, s: Ternary, p2: f64) -> Result<[f64; 3]> {
        let h = 1.0f64.max(p2.abs() * 1e-7);
        let up = self.kr(s, p2 + h)?;
        let lo = self.kr(s, p2 - h)?;
        Ok([(up[0] - lo[0]) / (2.0 * h), (up[1] - lo[1]) / (2.0 * h), (up[2] - lo[2]) / (2.0 * h)])
    }

    fn provenance(&self) -> Provenance {
        Provenance::Reconstructed
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeMatch {
    pub edge: Edge,
    /// Max error of the present phases against the input tables, relative
    /// with a 1e-2 floor on the reference value.
    pub max_rel_err: f64,
    /// Largest reconstructed kr of the phase absent from this edge.
    pub absent_phase_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryMatchReport {
    pub per_edge: Vec<EdgeMatch>,
    pub n_probes: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Compare reconstructed kr against the input tables along each edge, and
/// check that each edge's absent phase stays immobile.
pub fn verify_boundary_match(
    data: &InterpolatedData,
    dataset: &TwoPhaseDataset,
    fluids: &FluidSystem,
    n_probes: usize,
    tol: f64,
) -> Result<BoundaryMatchReport> {
    let mut per_edge = Vec::new();
    for edge in Edge::ALL {
        let (pa, pb) = edge_phases(edge);
        let absent = match edge {
            Edge::WaterOil => Phase::Gas,
            Edge::WaterGas => Phase::Oil,
            Edge::GasOil => Phase::Water,
        };
        let mut max_rel: f64 = 0.0;
        let mut absent_max: f64 = 0.0;
        for p in &data.p_nodes {
            for k in 0..n_probes {
                let t = k as f64 / (n_probes - 1) as f64;
                let s = edge.point(t);
                let kr = data.kr_at(fluids, &dataset.curves, s, *p)?;
                let coord = match edge {
                    Edge::WaterOil | Edge::WaterGas => s.s1,
                    Edge::GasOil => s.s3,
                };
                for (phase, krv) in [(pa, kr[pa.index()]), (pb, kr[pb.index()])] {
                    let table = dataset.kr_edge(edge, phase, coord)?;
                    max_rel = max_rel.max((krv - table).abs() / table.abs().max(1e-2));
                }
                absent_max = absent_max.max(kr[absent.index()].abs());
            }
        }
        per_edge.push(EdgeMatch { edge, max_rel_err: max_rel, absent_phase_max: absent_max });
    }
    let pass = per_edge.iter().all(|e| e.max_rel_err < tol && e.absent_phase_max < tol);
    Ok(BoundaryMatchReport { per_edge, n_probes, tol, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct TdVerifyReport {
    pub probes: usize,
    pub paths_per_probe: usize,
    pub max_spread: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Feed the reconstructed kr back into the path-ODE machinery: the field is
/// the potential, so the spread reflects only field smoothness and ODE
/// tolerance.
pub fn verify_td(
    data: &InterpolatedData,
    dataset: &TwoPhaseDataset,
    fluids: &FluidSystem,
    n_probes: usize,
    n_paths: usize,
    tol: f64,
    seed: u64,
) -> Result<TdVerifyReport> {
    let kr = ReconstructedKr { data, fluids, curves: &dataset.curves };
    let flow = FlowContext::new(&kr, fluids, &dataset.curves);
    let gcp = GcpContext::new(flow, fluids.window, GcpTolerances::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_spread: f64 = 0.0;
    for _ in 0..n_probes {
        use rand::Rng;
        let s1 = rng.gen_range(0.05..0.95);
        let s3 = rng.gen_range(0.0..(1.0 - s1) * 0.95);
        let p = rng.gen_range(fluids.window.p_min..fluids.window.p_max);
        let spread = gcp.td_residual_paths(Ternary::new_unchecked(s1, s3), p, n_paths, rng.gen())?;
        max_spread = max_spread.max(spread);
    }
    Ok(TdVerifyReport { probes: n_probes, paths_per_probe: n_paths + 2, max_spread, tol, pass: max_spread < tol })
}

/// Recovered potential check: integrating the reconstructed data from the
/// water corner must reproduce the interpolated field itself.
pub fn verify_roundtrip(
    data: &InterpolatedData,
    dataset: &TwoPhaseDataset,
    fluids: &FluidSystem,
    probes: &[(Ternary, f64)],
) -> Result<f64> {
    let kr = ReconstructedKr { data, fluids, curves: &dataset.curves };
    let flow = FlowContext::new(&kr, fluids, &dataset.curves);
    let gcp = GcpContext::new(flow, fluids.window, GcpTolerances::default());
    let mut max_err: f64 = 0.0;
    for (s, p) in probes {
        let recovered = gcp.integrate_beta(&SaturationPath::canonical(*s), *p)?;
        let field = data.pcg_at(*s, *p)?;
        max_err = max_err.max((recovered - field).abs());
    }
    Ok(max_err)
}

#[derive(Debug, Clone, Copy)]
pub struct FluxIdentityConfig {
    /// Absolute permeability, m^2.
    pub k_abs: f64,
    /// Gravity acceleration, m/s^2 (set 0 to disable).
    pub g: f64,
    /// Depth slope dZ/dx along the 1D profile.
    pub dz_dx: f64,
    pub n_samples: usize,
    /// Spatial step of the centered stencils.
    pub fd_step: f64,
}

impl Default for FluxIdentityConfig {
    fn default() -> Self {
        Self { k_abs: 1e-12, g: 0.0, dz_dx: 0.0, n_samples: 64, fd_step: 2e-4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxIdentityReport {
    pub samples: usize,
    pub max_rel_diff: f64,
    /// Whether |dPcg/dp| < 1 held at every sample.
    pub stability_ok: bool,
}

fn fd5(f: &mut dyn FnMut(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((f(x - 2.0 * h)? - 8.0 * f(x - h)? + 8.0 * f(x + h)? - f(x + 2.0 * h)?) / (12.0 * h))
}

/// Compare the phase-pressure-form total flux against the global-Darcy form
/// on smooth synthetic profiles S1(x), S3(x), P(x) over x in [0, 1]. The
/// phase-pressure route differentiates the recovered oil pressure and the
/// capillary profiles numerically, so the two routes share no algebra.
pub fn flux_identity_check(
    gcp: &GcpContext<'_>,
    cfg: &FluxIdentityConfig,
    s1_of: &dyn Fn(f64) -> f64,
    s3_of: &dyn Fn(f64) -> f64,
    p_of: &dyn Fn(f64) -> f64,
) -> Result<FluxIdentityReport> {
    let h = cfg.fd_step;
    let mut max_rel: f64 = 0.0;
    let mut stability_ok = true;
    for i in 0..cfg.n_samples {
        let x = (i as f64 + 0.5) / cfg.n_samples as f64 * (1.0 - 8.0 * h) + 4.0 * h;
        let s = Ternary::new(s1_of(x), s3_of(x))?;
        let p = p_of(x);

        let (pcg, gamma) = gcp.pcg_and_slope(s, p)?;
        if gamma.abs() >= 1.0 {
            stability_ok = false;
        }
        let p2 = p - pcg;
        let lambda = gcp.flow.lambda_total(s, p2)?;
        let rho = gcp.flow.global_density(s, p2)?;
        let f = gcp.flow.fractional_flows(s, p2)?;

        // Global-pressure route.
        let dp_dx = fd5(&mut |xx| Ok(p_of(xx)), x, h)?;
        let q_global = -cfg.k_abs * lambda * ((1.0 - gamma) * dp_dx - rho * cfg.g * cfg.dz_dx);

        // Phase-pressure route: oil-pressure and capillary profiles
        // differentiated as composite functions of x.
        let dp2_dx = fd5(
            &mut |xx| {
                let sx = Ternary::new(s1_of(xx), s3_of(xx))?;
                Ok(p_of(xx) - gcp.pcg(sx, p_of(xx))?)
            },
            x,
            h,
        )?;
        let dpc12_dx = fd5(&mut |xx| gcp.flow.curves.pc12(s1_of(xx)), x, h)?;
        let dpc32_dx = fd5(&mut |xx| gcp.flow.curves.pc32(s3_of(xx)), x, h)?;
        let q_phase = -cfg.k_abs
            * lambda
            * (dp2_dx + f[0] * dpc12_dx + f[2] * dpc32_dx - rho * cfg.g * cfg.dz_dx);

        let denom = q_global.abs().max(q_phase.abs());
        if denom > cfg.k_abs * lambda * 1e-10 {
            max_rel = max_rel.max((q_global - q_phase).abs() / denom);
        }
    }
    Ok(FluxIdentityReport { samples: cfg.n_samples, max_rel_diff: max_rel, stability_ok })
}

/// Reconstructed kr export: `s1,s3,p,kr1,kr2,kr3,nu1,nu3` over a lattice of
/// probe points per pressure node.
pub fn export_kr_csv(
    data: &InterpolatedData,
    dataset: &TwoPhaseDataset,
    fluids: &FluidSystem,
    n_probe: usize,
    mut w: impl Write,
) -> Result<()> {
    writeln!(w, "s1,s3,p,kr1,kr2,kr3,nu1,nu3")?;
    for p in &data.p_nodes {
        for i in 0..=n_probe {
            for j in 0..=(n_probe - i) {
                let s = Ternary::new_unchecked(i as f64 / n_probe as f64, j as f64 / n_probe as f64);
                let kr = data.kr_at(fluids, &dataset.curves, s, *p)?;
                let nu = data.nu_at(&dataset.curves, s, *p)?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    s.s1, s.s3, p, kr[0], kr[1], kr[2], nu[0], nu[2]
                )?;
            }
        }
    }
    Ok(())
}
