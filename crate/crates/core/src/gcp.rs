//! The global-capillary-pressure engine: path-ODE integration of the
//! capillary potential, total-differential (TD) residuals, the pressure
//! derivative by a coupled ODE with an independent quadrature cross-check,
//! stability diagnostics, and the change of variable between oil pressure
//! and global pressure.

use crate::error::{Error, Result};
use crate::flows::FlowContext;
use crate::fluids::PressureWindow;
use crate::ode::{rk4_fixed, rk45, rk45_sampled, OdeTol};
use crate::ternary::Ternary;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct GcpTolerances {
    /// Relative ODE tolerance.
    pub ode_rtol: f64,
    /// Absolute ODE tolerance for the potential, as a fraction of the
    /// capillary scale.
    pub ode_atol_frac: f64,
    /// Absolute ODE tolerance for the pressure-derivative component.
    pub gamma_atol: f64,
    /// TD acceptance threshold as a fraction of the capillary scale.
    pub td_spread_frac: f64,
    /// Convergence tolerance of the oil-to-global fixed point, Pa.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
}

impl Default for GcpTolerances {
    fn default() -> Self {
        Self {
            ode_rtol: 1e-10,
            ode_atol_frac: 1e-9,
            gamma_atol: 1e-13,
            td_spread_frac: 1e-6,
            fixed_point_tol: 1e-8,
            max_fixed_point_iters: 200,
        }
    }
}

/// Piecewise-linear integration path inside the ternary diagram, anchored at
/// the water corner (1, 0), where the potential is normalized to zero.
#[derive(Debug, Clone)]
pub struct SaturationPath {
    waypoints: Vec<Ternary>,
}

impl SaturationPath {
    pub fn new(waypoints: Vec<Ternary>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidData("path needs at least two waypoints".into()));
        }
        let w0 = waypoints[0];
        if (w0.s1 - 1.0).abs() > 1e-12 || w0.s3.abs() > 1e-12 {
            return Err(Error::InvalidData(format!(
                "path must start at the water corner (1, 0), got ({}, {})",
                w0.s1, w0.s3
            )));
        }
        Ok(Self { waypoints })
    }

    /// The two-leg path used for all tabulation: sweep the water-oil edge to
    /// (s1, 0), then rise vertically to (s1, s3).
    pub fn canonical(s: Ternary) -> Self {
        Self {
            waypoints: vec![
                Ternary::water_corner(),
                Ternary::new_unchecked(s.s1, 0.0),
                s,
            ],
        }
    }

    /// The other axis-ordered extreme: slide down the water-gas edge to
    /// (1 - s3, s3), then reduce s1 at fixed s3.
    pub fn gas_first(s: Ternary) -> Self {
        Self {
            waypoints: vec![
                Ternary::water_corner(),
                Ternary::new_unchecked(1.0 - s.s3, s.s3),
                s,
            ],
        }
    }

    /// Random componentwise-monotone staircase from (1, 0) to `s` with 3-8
    /// segments. Keeping the s3 progress behind the s1 progress keeps every
    /// waypoint inside the diagram.
    pub fn random_monotone(s: Ternary, rng: &mut impl Rng) -> Self {
        let segments = rng.gen_range(3..=8usize);
        let mut a: Vec<f64> = (0..segments - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut b: Vec<f64> = (0..segments - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut waypoints = vec![Ternary::water_corner()];
        for i in 0..segments - 1 {
            let ai = a[i];
            let bi = b[i].min(ai);
            waypoints.push(Ternary::new_unchecked(1.0 - ai * (1.0 - s.s1), bi * s.s3));
        }
        waypoints.push(s);
        Self { waypoints }
    }

    pub fn waypoints(&self) -> &[Ternary] {
        &self.waypoints
    }

    pub fn end(&self) -> Ternary {
        *self.waypoints.last().unwrap()
    }
}

fn lerp(a: Ternary, b: Ternary, t: f64) -> Ternary {
    let s1 = (a.s1 + t * (b.s1 - a.s1)).clamp(0.0, 1.0);
    let s3 = (a.s3 + t * (b.s3 - a.s3)).clamp(0.0, 1.0);
    let mut s = Ternary::new_unchecked(s1, s3);
    let sum = s.s1 + s.s3;
    if sum > 1.0 {
        s.s1 /= sum;
        s.s3 /= sum;
    }
    s
}

/// Sampled pressure-derivative integrands along the two canonical legs.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaProfiles {
    pub t: Vec<f64>,
    /// Integrand along the water-oil leg.
    pub alpha1: Vec<f64>,
    /// Integrand along the vertical gas leg.
    pub alpha3: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub n_s: usize,
    pub n_p: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Minimum of 1 - dPcg/dp over the grid; must stay strictly positive.
    pub one_minus_gamma_min: f64,
    /// |dPcg/dp| < 1 everywhere on the grid.
    pub condition_contraction: bool,
    /// Sufficient slope-ordering condition (gas >= oil >= water) at every node.
    pub condition_slope_ordering: bool,
    /// Largest |dPcg/dp| on the water-oil edge nodes.
    pub gamma_max_water_oil_edge: f64,
    pub worst: (f64, f64, f64, f64),
    #[serde(skip)]
    pub rows: Vec<(f64, f64, f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseBoundsReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest of P - P1 over the samples, Pa.
    pub min_water_margin: f64,
    /// Smallest of P3 - P over the samples, Pa.
    pub min_gas_margin: f64,
}

#[derive(Clone, Copy)]
pub struct GcpContext<'a> {
    pub flow: FlowContext<'a>,
    pub window: PressureWindow,
    pub tol: GcpTolerances,
}

impl<'a> GcpContext<'a> {
    pub fn new(flow: FlowContext<'a>, window: PressureWindow, tol: GcpTolerances) -> Self {
        Self { flow, window, tol }
    }

    /// Capillary magnitude used for absolute tolerances, floored at 1 Pa so
    /// zero-capillary data keep a usable error scale.
    pub fn pc_scale(&self) -> f64 {
        self.flow.curves.window_margin().max(1.0)
    }

    fn beta_tol(&self) -> OdeTol<1> {
        OdeTol::new(self.tol.ode_rtol, [self.tol.ode_atol_frac * self.pc_scale()])
    }

    fn pair_tol(&self) -> OdeTol<2> {
        OdeTol::new(self.tol.ode_rtol, [self.tol.ode_atol_frac * self.pc_scale(), self.tol.gamma_atol])
    }

    /// Right-hand side of the potential ODE along a straight segment.
    fn segment_rhs(&self, a: Ternary, b: Ternary, p: f64) -> impl Fn(f64, &[f64; 1]) -> Result<[f64; 1]> + '_ {
        let (d1, d3) = (b.s1 - a.s1, b.s3 - a.s3);
        move |t: f64, y: &[f64; 1]| {
            let s = lerp(a, b, t);
            let f = self.flow.fractional_flows(s, p - y[0])?;
            let mut rhs = 0.0;
            if d1 != 0.0 {
                rhs += f[0] * self.flow.curves.dpc12(s.s1)? * d1;
            }
            if d3 != 0.0 {
                rhs += f[2] * self.flow.curves.dpc32(s.s3)? * d3;
            }
            Ok([rhs])
        }
    }

    /// Integrate the potential ODE along `path` at global pressure level `p`
    /// and return the terminal value, Pa.
    pub fn integrate_beta(&self, path: &SaturationPath, p: f64) -> Result<f64> {
        let tol = self.beta_tol();
        let mut beta = 0.0;
        for w in path.waypoints.windows(2) {
            beta = rk45(self.segment_rhs(w[0], w[1], p), 0.0, 1.0, [beta], &tol)?[0];
        }
        Ok(beta)
    }

    /// Global capillary pressure at (s, p), via the canonical two-leg path.
    /// Normalized so the water corner maps to zero for every p.
    pub fn pcg(&self, s: Ternary, p: f64) -> Result<f64> {
        self.integrate_beta(&SaturationPath::canonical(s), p)
    }

    /// Jointly integrate the potential and its pressure derivative along the
    /// canonical path; returns (Pcg, dPcg/dp).
    pub fn pcg_and_slope(&self, s: Ternary, p: f64) -> Result<(f64, f64)> {
        let tol = self.pair_tol();
        let path = SaturationPath::canonical(s);
        let mut y = [0.0, 0.0];
        for w in path.waypoints().windows(2) {
            let (a, b) = (w[0], w[1]);
            let (d1, d3) = (b.s1 - a.s1, b.s3 - a.s3);
            y = rk45(
                |t: f64, y: &[f64; 2]| {
                    let s = lerp(a, b, t);
                    let p2 = p - y[0];
                    let f = self.flow.fractional_flows(s, p2)?;
                    let df = self.flow.dfrac_dp2(s, p2)?;
                    let mut rb = 0.0;
                    let mut rg = 0.0;
                    if d1 != 0.0 {
                        let w1 = self.flow.curves.dpc12(s.s1)? * d1;
                        rb += f[0] * w1;
                        rg += df[0] * w1;
                    }
                    if d3 != 0.0 {
                        let w3 = self.flow.curves.dpc32(s.s3)? * d3;
                        rb += f[2] * w3;
                        rg += df[1] * w3;
                    }
                    Ok([rb, rg * (1.0 - y[1])])
                },
                0.0,
                1.0,
                y,
                &tol,
            )?;
        }
        Ok((y[0], y[1]))
    }

    /// dPcg/dp at (s, p) by the coupled ODE route; always < 1.
    pub fn dpcg_dp(&self, s: Ternary, p: f64) -> Result<f64> {
        Ok(self.pcg_and_slope(s, p)?.1)
    }

    /// Sample the pressure-derivative integrands along the two canonical
    /// legs. `n` odd sample counts keep the companion quadrature simple.
    pub fn alpha_profiles(&self, s: Ternary, p: f64, n: usize) -> Result<AlphaProfiles> {
        let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut out = AlphaProfiles { t: ts.clone(), alpha1: vec![0.0; n], alpha3: vec![0.0; n] };

        let w = Ternary::water_corner();
        let foot = Ternary::new_unchecked(s.s1, 0.0);
        let beta1 = rk45_sampled(self.segment_rhs(w, foot, p), &ts, [0.0], &self.beta_tol())?;
        for i in 0..n {
            let pt = lerp(w, foot, ts[i]);
            let df = self.flow.dfrac_dp2(pt, p - beta1[i][0])?;
            out.alpha1[i] = -df[0] * self.flow.curves.dpc12(pt.s1)? * (1.0 - s.s1);
        }
        let beta3 = rk45_sampled(self.segment_rhs(foot, s, p), &ts, [beta1[n - 1][0]], &self.beta_tol())?;
        for i in 0..n {
            let pt = lerp(foot, s, ts[i]);
            let df = self.flow.dfrac_dp2(pt, p - beta3[i][0])?;
            out.alpha3[i] = df[1] * self.flow.curves.dpc32(pt.s3)? * s.s3;
        }
        Ok(out)
    }

    /// Independent route for dPcg/dp: fixed-step RK4 for the potential along
    /// each leg plus composite-Simpson quadrature of the integrands, closed
    /// by the exponential solution of the linear derivative ODE.
    pub fn dpcg_dp_quadrature(&self, s: Ternary, p: f64, n: usize) -> Result<f64> {
        let n = if n % 2 == 1 { n } else { n + 1 };
        let profiles = self.alpha_profiles_rk4(s, p, n)?;
        let h = 1.0 / (n - 1) as f64;
        let integral = simpson(&profiles.alpha1, h) + simpson(&profiles.alpha3, h);
        Ok(1.0 - (-integral).exp())
    }

    /// `alpha_profiles` with the potential advanced by fixed-step RK4 so the
    /// quadrature route shares no adaptive machinery with the ODE route.
    fn alpha_profiles_rk4(&self, s: Ternary, p: f64, n: usize) -> Result<AlphaProfiles> {
        let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut out = AlphaProfiles { t: ts.clone(), alpha1: vec![0.0; n], alpha3: vec![0.0; n] };
        let w = Ternary::water_corner();
        let foot = Ternary::new_unchecked(s.s1, 0.0);

        let mut legs = [(w, foot), (foot, s)];
        let mut beta = 0.0;
        for (leg_idx, (a, b)) in legs.iter_mut().enumerate() {
            let rhs = self.segment_rhs(*a, *b, p);
            for i in 0..n {
                let pt = lerp(*a, *b, ts[i]);
                let df = self.flow.dfrac_dp2(pt, p - beta)?;
                if leg_idx == 0 {
                    out.alpha1[i] = -df[0] * self.flow.curves.dpc12(pt.s1)? * (1.0 - s.s1);
                } else {
                    out.alpha3[i] = df[1] * self.flow.curves.dpc32(pt.s3)? * s.s3;
                }
                if i + 1 < n {
                    beta = rk4_fixed(&rhs, ts[i], ts[i + 1], [beta], 2)?[0];
                }
            }
        }
        Ok(out)
    }

    /// Maximum spread of the terminal potential over the two axis-ordered
    /// paths plus `n_paths` random monotone staircases; small spread means
    /// the data admit a potential at (s, p).
    pub fn td_residual_paths(&self, s: Ternary, p: f64, n_paths: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut eval = |path: &SaturationPath| -> Result<()> {
            let b = self.integrate_beta(path, p)?;
            lo = lo.min(b);
            hi = hi.max(b);
            Ok(())
        };
        eval(&SaturationPath::canonical(s))?;
        eval(&SaturationPath::gas_first(s))?;
        for _ in 0..n_paths {
            eval(&SaturationPath::random_monotone(s, &mut rng))?;
        }
        Ok(hi - lo)
    }

    /// Cross-derivative form of the TD residual at an interior point, using
    /// centered differences of the supplied potential evaluator.
    pub fn td_residual_cross(
        &self,
        s: Ternary,
        p: f64,
        pcg_eval: &dyn Fn(Ternary, f64) -> Result<f64>,
        h: f64,
    ) -> Result<f64> {
        for (ds1, ds3) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            if !Ternary::contains(s.s1 + ds1, s.s3 + ds3) {
                return Err(Error::OutsideTernary { s1: s.s1 + ds1, s3: s.s3 + ds3 });
            }
        }
        let f1_at = |q: Ternary| -> Result<f64> {
            let p2 = p - pcg_eval(q, p)?;
            Ok(self.flow.fractional_flows(q, p2)?[0])
        };
        let f3_at = |q: Ternary| -> Result<f64> {
            let p2 = p - pcg_eval(q, p)?;
            Ok(self.flow.fractional_flows(q, p2)?[2])
        };
        let df1_ds3 = (f1_at(Ternary::new_unchecked(s.s1, s.s3 + h))? - f1_at(Ternary::new_unchecked(s.s1, s.s3 - h))?) / (2.0 * h);
        let df3_ds1 = (f3_at(Ternary::new_unchecked(s.s1 + h, s.s3))? - f3_at(Ternary::new_unchecked(s.s1 - h, s.s3))?) / (2.0 * h);
        Ok(df1_ds3 * self.flow.curves.dpc12(s.s1)? - df3_ds1 * self.flow.curves.dpc32(s.s3)?)
    }

    /// Oil pressure from the global pressure: p2 = p - Pcg(s, p).
    pub fn oil_from_global(&self, s: Ternary, p: f64) -> Result<f64> {
        Ok(p - self.pcg(s, p)?)
    }

    /// Global pressure from the oil pressure: solve P = p2 + Pcg(s, P) by
    /// fixed-point iteration (a contraction while |dPcg/dp| < 1), falling
    /// back to bisection of the monotone map P - Pcg(s, P).
    pub fn global_from_oil(&self, s: Ternary, p2: f64) -> Result<f64> {
        let mut p = p2;
        let mut last_residual = f64::INFINITY;
        let tol = self.tol.fixed_point_tol.max(8.0 * f64::EPSILON * p2.abs());
        for _ in 0..self.tol.max_fixed_point_iters {
            let next = p2 + self.pcg(s, p)?;
            let step = (next - p).abs();
            if step < tol {
                return Ok(next);
            }
            if step > last_residual * 1.5 {
                break;
            }
            last_residual = step;
            p = next;
        }
        self.global_from_oil_bisect(s, p2)
    }

    fn global_from_oil_bisect(&self, s: Ternary, p2: f64) -> Result<f64> {
        let scale = self.pc_scale();
        let mut lo = p2 - scale;
        let mut hi = p2 + scale;
        let tol = self.tol.fixed_point_tol.max(8.0 * f64::EPSILON * p2.abs());
        let g = |p: f64| -> Result<f64> { Ok(p - self.pcg(s, p)? - p2) };
        if g(lo)? > 0.0 || g(hi)? < 0.0 {
            return Err(Error::NonConvergence {
                what: format!("global pressure bracket at (s1, s3) = ({}, {})", s.s1, s.s3),
                iters: 0,
                residual: f64::NAN,
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo < tol {
                return Ok(mid);
            }
            if g(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::NonConvergence {
            what: "global pressure bisection".into(),
            iters: 200,
            residual: hi - lo,
        })
    }

    /// Verify P1 <= P <= P3 at the given (s, p) samples, where the phase
    /// pressures are built from the recovered oil pressure.
    pub fn phase_pressure_bounds_check(&self, samples: &[(Ternary, f64)]) -> Result<PhaseBoundsReport> {
        let slack = 1e-9 * self.pc_scale();
        let mut rep = PhaseBoundsReport {
            samples: samples.len(),
            violations: 0,
            min_water_margin: f64::INFINITY,
            min_gas_margin: f64::INFINITY,
        };
        for (s, p) in samples {
            let p2 = self.oil_from_global(*s, *p)?;
            let p1 = p2 + self.flow.curves.pc12(s.s1)?;
            let p3 = p2 + self.flow.curves.pc32(s.s3)?;
            let wm = p - p1;
            let gm = p3 - p;
            rep.min_water_margin = rep.min_water_margin.min(wm);
            rep.min_gas_margin = rep.min_gas_margin.min(gm);
            if wm < -slack || gm < -slack {
                rep.violations += 1;
            }
        }
        Ok(rep)
    }

    /// dPcg/dp over an (s1, u, p) tensor grid (u = s3 / (1 - s1)), plus the
    /// contraction flag and the sufficient slope-ordering check.
    pub fn stability_report(&self, n_s: usize, n_p: usize) -> Result<StabilityReport> {
        let ps: Vec<f64> = if n_p == self.window.n_nodes {
            self.window.nodes()
        } else {
            PressureWindow::new(self.window.p_min, self.window.p_max, n_p)?.nodes()
        };
        let n_pp = ps.len();
        let nodes: Vec<(usize, usize, usize)> = (0..n_s)
            .flat_map(|i| (0..n_s).flat_map(move |j| (0..n_pp).map(move |k| (i, j, k))))
            .collect();
        let rows: Vec<(f64, f64, f64, f64, f64, bool)> = nodes
            .par_iter()
            .map(|&(i, j, k)| -> Result<(f64, f64, f64, f64, f64, bool)> {
                let s1 = i as f64 / (n_s - 1) as f64;
                let u = j as f64 / (n_s - 1) as f64;
                let s3 = u * (1.0 - s1);
                let s = Ternary::new_unchecked(s1, s3);
                let p = ps[k];
                let (pcg, gamma) = self.pcg_and_slope(s, p)?;
                let p2 = p - pcg;
                let ordered = self.flow.fluids.slopes_ordered_at(
                    p2 + self.flow.curves.pc12(s1)?,
                    p2,
                    p2 + self.flow.curves.pc32(s3)?,
                )?;
                Ok((s1, s3, p, pcg, gamma, ordered))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut rep = StabilityReport {
            n_s,
            n_p: ps.len(),
            gamma_min: f64::INFINITY,
            gamma_max: f64::NEG_INFINITY,
            one_minus_gamma_min: f64::INFINITY,
            condition_contraction: true,
            condition_slope_ordering: true,
            gamma_max_water_oil_edge: 0.0,
            worst: (0.0, 0.0, 0.0, 0.0),
            rows: Vec::with_capacity(rows.len()),
        };
        for (s1, s3, p, pcg, gamma, ordered) in rows {
            rep.gamma_min = rep.gamma_min.min(gamma);
            rep.gamma_max = rep.gamma_max.max(gamma);
            let omg = 1.0 - gamma;
            if omg < rep.one_minus_gamma_min {
                rep.one_minus_gamma_min = omg;
                rep.worst = (s1, s3, p, gamma);
            }
            if gamma.abs() >= 1.0 {
                rep.condition_contraction = false;
            }
            if !ordered {
                rep.condition_slope_ordering = false;
            }
            if s3 == 0.0 {
                rep.gamma_max_water_oil_edge = rep.gamma_max_water_oil_edge.max(gamma.abs());
            }
            rep.rows.push((s1, s3, p, pcg, gamma));
        }
        Ok(rep)
    }
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n % 2 == 1);
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}
