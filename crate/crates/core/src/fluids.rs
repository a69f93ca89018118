//! Per-phase thermodynamic property models: volume factor, viscosity,
//! mobility and density as smooth functions of the phase pressure, with
//! analytic pressure derivatives.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Water,
    Oil,
    Gas,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Water, Phase::Oil, Phase::Gas];

    /// Zero-based index used for per-phase arrays (water, oil, gas).
    pub fn index(&self) -> usize {
        match self {
            Phase::Water => 0,
            Phase::Oil => 1,
            Phase::Gas => 2,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Water => "water",
            Phase::Oil => "oil",
            Phase::Gas => "gas",
        };
        f.write_str(s)
    }
}

/// Closed-form volume factor families. Keeping these analytic keeps the
/// log-mobility slope d'/d analytic, which the pressure-derivative ODEs need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VolumeFactor {
    Constant,
    /// B(p) = 1 + c (p - p_ref)
    Linear { c: f64, p_ref: f64 },
    /// B(p) = exp(c (p - p_ref))
    Exponential { c: f64, p_ref: f64 },
}

impl VolumeFactor {
    fn value(&self, p: f64) -> f64 {
        match *self {
            VolumeFactor::Constant => 1.0,
            VolumeFactor::Linear { c, p_ref } => 1.0 + c * (p - p_ref),
            VolumeFactor::Exponential { c, p_ref } => (c * (p - p_ref)).exp(),
        }
    }

    /// d ln B / dp, defined wherever B > 0.
    fn log_slope(&self, p: f64) -> f64 {
        match *self {
            VolumeFactor::Constant => 0.0,
            VolumeFactor::Linear { c, p_ref } => c / (1.0 + c * (p - p_ref)),
            VolumeFactor::Exponential { c, .. } => c,
        }
    }
}

/// One phase: reference density, constant viscosity and a volume-factor model.
///
/// The evaluation window is stamped by [`FluidSystem::new`]; phase pressures
/// exceed the global pressure window by capillary offsets, so the window is
/// widened by the largest capillary magnitudes before evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseModel {
    pub phase: Phase,
    /// Density at reference pressure, kg/m3.
    pub rho_ref: f64,
    /// Viscosity, Pa.s.
    pub mu: f64,
    pub volume_factor: VolumeFactor,
    #[serde(skip, default = "neg_inf")]
    eval_lo: f64,
    #[serde(skip, default = "inf")]
    eval_hi: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}
fn inf() -> f64 {
    f64::INFINITY
}

impl PhaseModel {
    pub fn new(phase: Phase, rho_ref: f64, mu: f64, volume_factor: VolumeFactor) -> Self {
        Self { phase, rho_ref, mu, volume_factor, eval_lo: f64::NEG_INFINITY, eval_hi: f64::INFINITY }
    }

    fn check(&self, p: f64) -> Result<()> {
        if !(p >= self.eval_lo && p <= self.eval_hi) {
            return Err(Error::PressureOutOfWindow {
                phase: self.phase,
                p,
                lo: self.eval_lo,
                hi: self.eval_hi,
            });
        }
        Ok(())
    }

    pub fn volume_factor_at(&self, p: f64) -> Result<f64> {
        self.check(p)?;
        let b = self.volume_factor.value(p);
        if b <= 0.0 {
            return Err(Error::InvalidData(format!(
                "volume factor of {} nonpositive ({b:.3e}) at p = {p:.6e} Pa",
                self.phase
            )));
        }
        Ok(b)
    }

    /// Phase mobility d(p) = B(p) / mu, (Pa.s)^-1.
    pub fn mobility(&self, p: f64) -> Result<f64> {
        Ok(self.volume_factor_at(p)? / self.mu)
    }

    /// d'(p) / d(p) = d ln B / dp, 1/Pa.
    pub fn log_mobility_slope(&self, p: f64) -> Result<f64> {
        self.volume_factor_at(p)?;
        Ok(self.volume_factor.log_slope(p))
    }

    /// rho(p) = rho_ref B(p), kg/m3.
    pub fn density(&self, p: f64) -> Result<f64> {
        Ok(self.rho_ref * self.volume_factor_at(p)?)
    }
}

/// Global pressure window with a node count for tabulation grids.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PressureWindow {
    pub p_min: f64,
    pub p_max: f64,
    pub n_nodes: usize,
}

impl PressureWindow {
    pub fn new(p_min: f64, p_max: f64, n_nodes: usize) -> Result<Self> {
        if !(p_min < p_max) {
            return Err(Error::Config(format!("pressure window requires p_min < p_max, got [{p_min}, {p_max}]")));
        }
        if n_nodes < 2 {
            return Err(Error::Config(format!("pressure window requires n_nodes >= 2, got {n_nodes}")));
        }
        Ok(Self { p_min, p_max, n_nodes })
    }

    pub fn width(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.width() / (self.n_nodes - 1) as f64;
        (0..self.n_nodes).map(|k| self.p_min + h * k as f64).collect()
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_min && p <= self.p_max
    }
}

/// The three phase models plus the shared pressure window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluidSystem {
    water: PhaseModel,
    oil: PhaseModel,
    gas: PhaseModel,
    pub window: PressureWindow,
    /// Widening applied to the window for phase-pressure evaluation
    /// (largest |Pc12| plus largest Pc32).
    pub margin: f64,
}

impl FluidSystem {
    pub fn new(mut water: PhaseModel, mut oil: PhaseModel, mut gas: PhaseModel, window: PressureWindow, margin: f64) -> Result<Self> {
        if water.phase != Phase::Water || oil.phase != Phase::Oil || gas.phase != Phase::Gas {
            return Err(Error::Config("fluid system phases must be (water, oil, gas) in order".into()));
        }
        if margin < 0.0 {
            return Err(Error::Config(format!("negative window margin {margin}")));
        }
        for m in [&mut water, &mut oil, &mut gas] {
            if m.mu <= 0.0 {
                return Err(Error::InvalidData(format!("{} viscosity must be positive", m.phase)));
            }
            if m.rho_ref <= 0.0 {
                return Err(Error::InvalidData(format!("{} reference density must be positive", m.phase)));
            }
            m.eval_lo = window.p_min - margin;
            m.eval_hi = window.p_max + margin;
        }
        Ok(Self { water, oil, gas, window, margin })
    }

    pub fn phase(&self, phase: Phase) -> &PhaseModel {
        match phase {
            Phase::Water => &self.water,
            Phase::Oil => &self.oil,
            Phase::Gas => &self.gas,
        }
    }

    pub fn models(&self) -> [&PhaseModel; 3] {
        [&self.water, &self.oil, &self.gas]
    }

    /// Sufficient stability ordering of log-mobility slopes at the given
    /// phase pressures: gas >= oil >= water.
    pub fn slopes_ordered_at(&self, p1: f64, p2: f64, p3: f64) -> Result<bool> {
        let s1 = self.water.log_mobility_slope(p1)?;
        let s2 = self.oil.log_mobility_slope(p2)?;
        let s3 = self.gas.log_mobility_slope(p3)?;
        Ok(s3 >= s2 && s2 >= s1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn system(gas_vf: VolumeFactor) -> FluidSystem {
        let w = PhaseModel::new(Phase::Water, 1000.0, 1e-3, VolumeFactor::Constant);
        let o = PhaseModel::new(Phase::Oil, 800.0, 2e-3, VolumeFactor::Constant);
        let g = PhaseModel::new(Phase::Gas, 80.0, 2e-5, gas_vf);
        FluidSystem::new(w, o, g, PressureWindow::new(5e6, 2e7, 5).unwrap(), 3e4).unwrap()
    }

    #[test]
    fn constant_model_identity() {
        let w = PhaseModel::new(Phase::Water, 1000.0, 1.0, VolumeFactor::Constant);
        let sys = FluidSystem::new(
            w,
            PhaseModel::new(Phase::Oil, 800.0, 1.0, VolumeFactor::Constant),
            PhaseModel::new(Phase::Gas, 100.0, 1.0, VolumeFactor::Constant),
            PressureWindow::new(0.0, 1e8, 2).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(sys.phase(Phase::Water).mobility(4.2e7).unwrap(), 1.0);
        assert_eq!(sys.phase(Phase::Water).log_mobility_slope(4.2e7).unwrap(), 0.0);
        assert_eq!(sys.phase(Phase::Water).density(4.2e7).unwrap(), 1000.0);
    }

    #[test]
    fn exponential_model_closed_form() {
        let sys = system(VolumeFactor::Exponential { c: 1e-9, p_ref: 1e7 });
        let g = sys.phase(Phase::Gas);
        // At the reference pressure B = 1.
        assert_relative_eq!(g.mobility(1e7).unwrap(), 1.0 / 2e-5, max_relative = 1e-15);
        // One decade above: B = exp(1e-9 * 1e7) = exp(0.01).
        assert_relative_eq!(g.mobility(2e7).unwrap(), (0.01f64).exp() / 2e-5, max_relative = 1e-14);
        assert_eq!(g.log_mobility_slope(1.7e7).unwrap(), 1e-9);
    }

    #[test]
    fn exponential_density_closed_form() {
        let g = PhaseModel::new(Phase::Gas, 1.0, 1e-5, VolumeFactor::Exponential { c: 1e-8, p_ref: 1e7 });
        let sys = FluidSystem::new(
            PhaseModel::new(Phase::Water, 1000.0, 1e-3, VolumeFactor::Constant),
            PhaseModel::new(Phase::Oil, 800.0, 2e-3, VolumeFactor::Constant),
            g,
            PressureWindow::new(5e6, 3e7, 3).unwrap(),
            0.0,
        )
        .unwrap();
        assert_relative_eq!(sys.phase(Phase::Gas).density(2e7).unwrap(), (0.1f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn linear_model_slope() {
        let o = PhaseModel::new(Phase::Oil, 800.0, 2e-3, VolumeFactor::Linear { c: 1e-9, p_ref: 0.0 });
        let sys = FluidSystem::new(
            PhaseModel::new(Phase::Water, 1000.0, 1e-3, VolumeFactor::Constant),
            o,
            PhaseModel::new(Phase::Gas, 80.0, 2e-5, VolumeFactor::Constant),
            PressureWindow::new(0.0, 2e8, 3).unwrap(),
            0.0,
        )
        .unwrap();
        assert_relative_eq!(
            sys.phase(Phase::Oil).log_mobility_slope(1e8).unwrap(),
            1e-9 / 1.1,
            max_relative = 1e-14
        );
    }

    #[test]
    fn out_of_window_errors_name_phase() {
        let sys = system(VolumeFactor::Exponential { c: 1e-8, p_ref: 1e7 });
        let err = sys.phase(Phase::Gas).mobility(2e7 + 3.1e4).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gas"), "{msg}");
        // Inside the widened window is fine.
        assert!(sys.phase(Phase::Gas).mobility(2e7 + 2.9e4).is_ok());
    }

    /// Positivity plus finite-difference agreement of the slope on a window grid.
    #[test]
    fn slope_matches_finite_difference_on_grid() {
        for vf in [
            VolumeFactor::Constant,
            VolumeFactor::Linear { c: 1e-9, p_ref: 1e7 },
            VolumeFactor::Exponential { c: 1e-8, p_ref: 1e7 },
        ] {
            let sys = system(vf);
            let g = sys.phase(Phase::Gas);
            for k in 0..100 {
                let p = 5e6 + (2e7 - 5e6) * k as f64 / 99.0;
                let d = g.mobility(p).unwrap();
                assert!(d > 0.0);
                assert!(g.density(p).unwrap() > 0.0);
                let h = 1.0f64.max(p.abs()) * 1e-7;
                let fd = ((g.mobility(p + h).unwrap()).ln() - (g.mobility(p - h).unwrap()).ln()) / (2.0 * h);
                let slope = g.log_mobility_slope(p).unwrap();
                if slope == 0.0 {
                    assert!(fd.abs() < 1e-12);
                } else {
                    assert_relative_eq!(slope, fd, max_relative = 1e-5);
                }
            }
        }
    }

    /// Water-oil-gas setting: slope ordering gas >= oil >= water = 0 on the grid.
    #[test]
    fn water_oil_gas_slope_ordering() {
        let sys = system(VolumeFactor::Exponential { c: 1e-8, p_ref: 1e7 });
        for k in 0..100 {
            let p = 5e6 + (2e7 - 5e6) * k as f64 / 99.0;
            assert!(sys.slopes_ordered_at(p - 1e4, p, p + 2e4).unwrap());
            assert_eq!(sys.phase(Phase::Water).log_mobility_slope(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn phase_json_round_trip() {
        let json = r#"{"phase": "gas", "rho_ref": 1.2, "mu": 1.5e-5, "volume_factor": {"type": "exponential", "c": 1e-7, "p_ref": 1e7}}"#;
        let m: PhaseModel = serde_json::from_str(json).unwrap();
        assert_eq!(m.phase, Phase::Gas);
        assert_eq!(m.volume_factor, VolumeFactor::Exponential { c: 1e-7, p_ref: 1e7 });
        let back = serde_json::to_string(&m).unwrap();
        let m2: PhaseModel = serde_json::from_str(&back).unwrap();
        assert_eq!(m2.volume_factor, m.volume_factor);
    }
}
