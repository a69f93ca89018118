//! Global mobility, fractional flows and global density as functions of
//! saturations and oil pressure, with analytic oil-pressure derivatives.
//! This is the right-hand-side kernel shared by every path ODE in the crate.

use crate::error::{Error, Result};
use crate::fluids::FluidSystem;
use crate::ternary::Ternary;
use crate::twophase::CapillaryCurves;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Two-phase restriction of edge tables; defined on the boundary only.
    EdgeTrace,
    /// Closed-form synthetic data.
    Manufactured,
    /// Built from interpolated global capillary pressure and mobility fields.
    Reconstructed,
}

/// Three-phase relative permeabilities as an evaluator over the ternary
/// diagram. The pressure argument is the oil pressure; data reconstructed
/// from a global-pressure potential carry a genuine pressure dependence,
/// tabulated data ignore it.
pub trait ThreePhaseKr: Sync {
    fn kr(&self, s: Ternary, p2: f64) -> Result<[f64; 3]>;

    /// d kr / d p2 at fixed saturations. Zero for saturation-only data.
    fn kr_slope_p2(&self, _s: Ternary, _p2: f64) -> Result<[f64; 3]> {
        Ok([0.0; 3])
    }

    fn provenance(&self) -> Provenance;
}

/// Relative tolerance under which the total mobility counts as degenerate.
/// Degenerate points are an error: clamping them would silently corrupt the
/// path-ODE integrations built on top of these flows.
const DEGENERATE_REL: f64 = 1e-14;

/// Immutable evaluation context for the flow quantities.
#[derive(Clone, Copy)]
pub struct FlowContext<'a> {
    pub kr: &'a dyn ThreePhaseKr,
    pub fluids: &'a FluidSystem,
    pub curves: &'a CapillaryCurves,
}

impl<'a> FlowContext<'a> {
    pub fn new(kr: &'a dyn ThreePhaseKr, fluids: &'a FluidSystem, curves: &'a CapillaryCurves) -> Self {
        Self { kr, fluids, curves }
    }

    /// Phase pressures (p1, p2, p3) at oil pressure `p2`.
    pub fn phase_pressures(&self, s: Ternary, p2: f64) -> Result<[f64; 3]> {
        Ok([p2 + self.curves.pc12(s.s1)?, p2, p2 + self.curves.pc32(s.s3)?])
    }

    /// Per-phase mobilities m_j = kr_j d_j(p_j) plus their p2-derivatives.
    fn phase_mobilities(&self, s: Ternary, p2: f64) -> Result<([f64; 3], [f64; 3], f64)> {
        let p = self.phase_pressures(s, p2)?;
        let kr = self.kr.kr(s, p2)?;
        let kr_dp = self.kr.kr_slope_p2(s, p2)?;
        let mut m = [0.0; 3];
        let mut m_dp = [0.0; 3];
        let mut d_max: f64 = 0.0;
        for (j, phase) in crate::fluids::Phase::ALL.iter().enumerate() {
            let model = self.fluids.phase(*phase);
            let d = model.mobility(p[j])?;
            let slope = model.log_mobility_slope(p[j])?;
            m[j] = kr[j] * d;
            // d p_j / d p2 = 1 for every phase.
            m_dp[j] = kr_dp[j] * d + kr[j] * d * slope;
            d_max = d_max.max(d);
        }
        Ok((m, m_dp, d_max))
    }

    /// Total mobility lambda(s, p2) = sum_j kr_j d_j(p_j) > 0.
    pub fn lambda_total(&self, s: Ternary, p2: f64) -> Result<f64> {
        let (m, _, d_max) = self.phase_mobilities(s, p2)?;
        let lambda = m[0] + m[1] + m[2];
        if lambda <= DEGENERATE_REL * d_max {
            return Err(Error::DegenerateMobility { s1: s.s1, s3: s.s3, p2 });
        }
        Ok(lambda)
    }

    /// Fractional flows (f1, f2, f3); f2 is always the complement 1 - f1 - f3
    /// so the partition of unity holds by construction.
    pub fn fractional_flows(&self, s: Ternary, p2: f64) -> Result<[f64; 3]> {
        let (m, _, d_max) = self.phase_mobilities(s, p2)?;
        let lambda = m[0] + m[1] + m[2];
        if lambda <= DEGENERATE_REL * d_max {
            return Err(Error::DegenerateMobility { s1: s.s1, s3: s.s3, p2 });
        }
        let f1 = m[0] / lambda;
        let f3 = m[2] / lambda;
        Ok([f1, 1.0 - f1 - f3, f3])
    }

    /// Global density rho(s, p2) = sum_j f_j rho_j(p_j).
    pub fn global_density(&self, s: Ternary, p2: f64) -> Result<f64> {
        let f = self.fractional_flows(s, p2)?;
        let p = self.phase_pressures(s, p2)?;
        let mut rho = 0.0;
        for (j, phase) in crate::fluids::Phase::ALL.iter().enumerate() {
            rho += f[j] * self.fluids.phase(*phase).density(p[j])?;
        }
        Ok(rho)
    }

    /// Analytic (d f1/d p2, d f3/d p2) by the quotient rule over the
    /// mobility sums, including any kr pressure sensitivity.
    pub fn dfrac_dp2(&self, s: Ternary, p2: f64) -> Result<[f64; 2]> {
        let (m, m_dp, d_max) = self.phase_mobilities(s, p2)?;
        let lambda = m[0] + m[1] + m[2];
        if lambda <= DEGENERATE_REL * d_max {
            return Err(Error::DegenerateMobility { s1: s.s1, s3: s.s3, p2 });
        }
        let lambda_dp = m_dp[0] + m_dp[1] + m_dp[2];
        let df1 = (m_dp[0] * lambda - m[0] * lambda_dp) / (lambda * lambda);
        let df3 = (m_dp[2] * lambda - m[2] * lambda_dp) / (lambda * lambda);
        Ok([df1, df3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    #[test]
    fn lin_unit_mobilities_sum_to_one() {
        let p = presets::lin();
        let ctx = p.flow_context();
        for (s1, s3) in [(0.2, 0.3), (0.5, 0.25), (0.0, 0.0), (0.9, 0.05)] {
            let s = Ternary::new(s1, s3).unwrap();
            assert_relative_eq!(ctx.lambda_total(s, 1e7).unwrap(), 1.0, max_relative = 1e-12);
            let f = ctx.fractional_flows(s, 1e7).unwrap();
            assert_relative_eq!(f[0], s1, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(f[2], s3, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_phase_and_simple_sums() {
        struct Fixed([f64; 3]);
        impl ThreePhaseKr for Fixed {
            fn kr(&self, _s: Ternary, _p2: f64) -> Result<[f64; 3]> {
                Ok(self.0)
            }
            fn provenance(&self) -> Provenance {
                Provenance::Manufactured
            }
        }
        let p = presets::lin();
        let s = Ternary::new(0.3, 0.3).unwrap();

        let kr = Fixed([1.0, 0.0, 0.0]);
        let ctx = FlowContext::new(&kr, &p.fluids, &p.curves);
        // With unit mobilities, single mobile water: lambda = d1 = 1.
        assert_relative_eq!(ctx.lambda_total(s, 1e7).unwrap(), 1.0, max_relative = 1e-12);
        let f = ctx.fractional_flows(s, 1e7).unwrap();
        assert_eq!(f, [1.0, 0.0, 0.0]);

        let kr = Fixed([0.2, 0.5, 0.1]);
        let ctx = FlowContext::new(&kr, &p.fluids, &p.curves);
        assert_relative_eq!(ctx.lambda_total(s, 1e7).unwrap(), 0.8, max_relative = 1e-12);

        let kr = Fixed([0.0, 1.0, 0.0]);
        let ctx = FlowContext::new(&kr, &p.fluids, &p.curves);
        assert_eq!(ctx.fractional_flows(s, 1e7).unwrap(), [0.0, 1.0, 0.0]);

        let kr = Fixed([0.0, 0.0, 0.0]);
        let ctx = FlowContext::new(&kr, &p.fluids, &p.curves);
        assert!(matches!(ctx.lambda_total(s, 1e7), Err(Error::DegenerateMobility { .. })));
    }

    #[test]
    fn lin_global_density_convex_sum() {
        let p = presets::lin();
        let ctx = p.flow_context();
        let s = Ternary::new(0.5, 0.25).unwrap();
        // Densities (1000, 800, 100), incompressible, f = s.
        assert_relative_eq!(ctx.global_density(s, 1e7).unwrap(), 725.0, max_relative = 1e-9);
    }

    #[test]
    fn partition_of_unity_is_structural() {
        let p = presets::gas();
        let ctx = p.flow_context();
        for k in 0..200 {
            let s1 = 0.05 + 0.9 * (k % 14) as f64 / 14.0;
            let s3 = (1.0 - s1) * (k % 17) as f64 / 17.0;
            let s = Ternary::new(s1, s3).unwrap();
            let p2 = 6e6 + 1e7 * (k % 5) as f64 / 4.0;
            let f = ctx.fractional_flows(s, p2).unwrap();
            assert_eq!(f[1], 1.0 - f[0] - f[2]);
            assert!((f[0] + f[1] + f[2] - 1.0).abs() <= 4.0 * f64::EPSILON);
            assert!(f.iter().all(|v| *v >= -1e-12));
        }
    }

    #[test]
    fn incompressible_flows_independent_of_p2() {
        let p = presets::lin();
        let ctx = p.flow_context();
        let s = Ternary::new(0.4, 0.2).unwrap();
        let f_lo = ctx.fractional_flows(s, p.fluids.window.p_min).unwrap();
        let f_hi = ctx.fractional_flows(s, p.fluids.window.p_max).unwrap();
        assert_eq!(f_lo, f_hi);
        assert_eq!(ctx.dfrac_dp2(s, 1e7).unwrap(), [0.0, 0.0]);
    }

    /// On the water-oil edge with incompressible water and oil the derivative
    /// vanishes identically even for the compressible-gas system.
    #[test]
    fn water_oil_edge_derivative_vanishes() {
        let p = presets::gas();
        let ctx = p.flow_context();
        for k in 1..10 {
            let s = Ternary::new(k as f64 / 10.0, 0.0).unwrap();
            let d = ctx.dfrac_dp2(s, 1.2e7).unwrap();
            assert!(d[0].abs() < 1e-18 && d[1].abs() < 1e-18, "{d:?}");
        }
    }

    /// Centered-difference oracle for the analytic derivative over an
    /// (s1, s3, p2) probe grid, on both compressible presets.
    #[test]
    fn dfrac_dp2_matches_finite_difference() {
        for preset in [presets::gas(), presets::gastab()] {
            let ctx = preset.flow_context();
            let h = 100.0;
            let mut checked = 0usize;
            for i in 0..20 {
                for j in 0..20 {
                    let s1 = 0.02 + 0.96 * i as f64 / 19.0;
                    let s3 = (0.98 - s1).min(0.96 * j as f64 / 19.0);
                    if s3 < 0.0 {
                        continue;
                    }
                    let s = Ternary::new(s1, s3).unwrap();
                    for k in 0..5 {
                        let p2 = 6e6 + (1.8e7 - 6e6) * k as f64 / 4.0;
                        let an = ctx.dfrac_dp2(s, p2).unwrap();
                        let fp = ctx.fractional_flows(s, p2 + h).unwrap();
                        let fm = ctx.fractional_flows(s, p2 - h).unwrap();
                        let fd = [(fp[0] - fm[0]) / (2.0 * h), (fp[2] - fm[2]) / (2.0 * h)];
                        for c in 0..2 {
                            let scale = an[c].abs();
                            // The floor absorbs f64 cancellation noise in the
                            // centered difference where the derivative is tiny.
                            assert!(
                                (an[c] - fd[c]).abs() <= 1e-5 * scale + 1e-17,
                                "mismatch at s=({s1},{s3}) p2={p2}: analytic {} vs fd {}",
                                an[c],
                                fd[c]
                            );
                        }
                        checked += 1;
                    }
                }
            }
            assert!(checked > 1500);
        }
    }

    /// Example value: the gas preset at s = (0.3, 0.3), p2 = 1e7 has a small
    /// negative water-flow sensitivity (gas mobility grows with pressure).
    #[test]
    fn gas_preset_sample_derivative() {
        let p = presets::gastab();
        let ctx = p.flow_context();
        let s = Ternary::new(0.3, 0.3).unwrap();
        let d = ctx.dfrac_dp2(s, 1e7).unwrap();
        let h = 10.0;
        let fp = ctx.fractional_flows(s, 1e7 + h).unwrap();
        let fm = ctx.fractional_flows(s, 1e7 - h).unwrap();
        assert_relative_eq!(d[0], (fp[0] - fm[0]) / (2.0 * h), max_relative = 1e-5);
        assert!(d[0] < 0.0 && d[1] > 0.0);
    }
}
