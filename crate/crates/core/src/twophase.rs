//! Two-phase edge data: relative-permeability pairs on the three boundary
//! systems and the two capillary pressure curves, with validation and smooth
//! monotone interpolation.

use crate::error::{Error, Result};
use crate::fluids::Phase;
use crate::interp::MonotoneCubic;
use crate::ternary::Edge;
use serde::Serialize;

/// The two capillary pressure curves.
///
/// Sign conventions: Pc12 <= 0 with Pc12(1) = 0 and nondecreasing in s1;
/// Pc32 >= 0 with Pc32(0) = 0 and nondecreasing in s3. Slopes are required
/// finite at the residual saturations so the path ODE right-hand sides stay
/// integrable; steeply sloped tables are allowed.
#[derive(Debug, Clone)]
pub struct CapillaryCurves {
    pc12: MonotoneCubic,
    pc32: MonotoneCubic,
}

impl CapillaryCurves {
    pub fn from_tables(pc12: Vec<(f64, f64)>, pc32: Vec<(f64, f64)>) -> Result<Self> {
        let build = |rows: Vec<(f64, f64)>, name: &str| -> Result<MonotoneCubic> {
            let (x, y): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
            if x.first().copied() != Some(0.0) || x.last().copied() != Some(1.0) {
                return Err(Error::InvalidData(format!("{name} table must span s in [0, 1]")));
            }
            MonotoneCubic::new(x, y)
        };
        Ok(Self { pc12: build(pc12, "pc12")?, pc32: build(pc32, "pc32")? })
    }

    /// Linear curves Pc12 = -a (1 - s1), Pc32 = b s3.
    pub fn linear(a: f64, b: f64) -> Self {
        Self {
            pc12: MonotoneCubic::new(vec![0.0, 1.0], vec![-a, 0.0]).unwrap(),
            pc32: MonotoneCubic::new(vec![0.0, 1.0], vec![0.0, b]).unwrap(),
        }
    }

    pub fn zero() -> Self {
        Self::linear(0.0, 0.0)
    }

    fn check(name: &'static str, s: f64) -> Result<f64> {
        if !((-1e-12..=1.0 + 1e-12).contains(&s)) {
            return Err(Error::SaturationOutOfRange { name, value: s });
        }
        Ok(s.clamp(0.0, 1.0))
    }

    pub fn pc12(&self, s1: f64) -> Result<f64> {
        Ok(self.pc12.eval(Self::check("s1", s1)?))
    }

    pub fn pc32(&self, s3: f64) -> Result<f64> {
        Ok(self.pc32.eval(Self::check("s3", s3)?))
    }

    pub fn dpc12(&self, s1: f64) -> Result<f64> {
        Ok(self.pc12.eval_deriv(Self::check("s1", s1)?))
    }

    pub fn dpc32(&self, s3: f64) -> Result<f64> {
        Ok(self.pc32.eval_deriv(Self::check("s3", s3)?))
    }

    /// Water-gas capillary pressure Pc13(s1) = Pc12(s1) - Pc32(1 - s1).
    pub fn pc13(&self, s1: f64) -> Result<f64> {
        let s1 = Self::check("s1", s1)?;
        Ok(self.pc12.eval(s1) - self.pc32.eval(1.0 - s1))
    }

    /// Largest capillary magnitude |Pc12(0)| + Pc32(1); used to widen the
    /// phase-pressure evaluation window.
    pub fn window_margin(&self) -> f64 {
        self.pc12.eval(0.0).abs() + self.pc32.eval(1.0).abs()
    }

    pub fn tables(&self) -> (&MonotoneCubic, &MonotoneCubic) {
        (&self.pc12, &self.pc32)
    }
}

/// One edge's relative-permeability pair against its saturation coordinate.
///
/// `first`/`second` follow the per-edge phase order used throughout:
/// water-oil (kr1, kr2) vs s1; water-gas (kr1, kr3) vs s1; gas-oil
/// (kr3, kr2) vs s3.
#[derive(Debug, Clone)]
pub struct EdgePair {
    pub first: MonotoneCubic,
    pub second: MonotoneCubic,
}

impl EdgePair {
    pub fn from_table(rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        let mut x = Vec::with_capacity(rows.len());
        let mut a = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        for (s, ka, kb) in rows {
            x.push(s);
            a.push(ka);
            b.push(kb);
        }
        if x.first().copied() != Some(0.0) || x.last().copied() != Some(1.0) {
            return Err(Error::InvalidData("edge kr table must span s in [0, 1]".into()));
        }
        Ok(Self { first: MonotoneCubic::new(x.clone(), a)?, second: MonotoneCubic::new(x, b)? })
    }
}

/// Phases present on an edge, in `(first, second)` table order.
pub fn edge_phases(edge: Edge) -> (Phase, Phase) {
    match edge {
        Edge::WaterOil => (Phase::Water, Phase::Oil),
        Edge::WaterGas => (Phase::Water, Phase::Gas),
        Edge::GasOil => (Phase::Gas, Phase::Oil),
    }
}

/// The three two-phase data sets plus the capillary curves.
#[derive(Debug, Clone)]
pub struct TwoPhaseDataset {
    pub water_oil: EdgePair,
    pub water_gas: EdgePair,
    pub gas_oil: EdgePair,
    pub curves: CapillaryCurves,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub code: String,
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &str, location: String, message: String) {
        self.violations.push(Violation { code: code.into(), location, message });
    }
}

impl TwoPhaseDataset {
    pub fn new(water_oil: EdgePair, water_gas: EdgePair, gas_oil: EdgePair, curves: CapillaryCurves) -> Self {
        Self { water_oil, water_gas, gas_oil, curves }
    }

    pub fn edge(&self, edge: Edge) -> &EdgePair {
        match edge {
            Edge::WaterOil => &self.water_oil,
            Edge::WaterGas => &self.water_gas,
            Edge::GasOil => &self.gas_oil,
        }
    }

    /// Relative permeability of `phase` on `edge` at the edge's saturation
    /// coordinate (s1 for the water-bearing edges, s3 for gas-oil).
    pub fn kr_edge(&self, edge: Edge, phase: Phase, s: f64) -> Result<f64> {
        if !((-1e-12..=1.0 + 1e-12).contains(&s)) {
            return Err(Error::SaturationOutOfRange { name: "edge coordinate", value: s });
        }
        let s = s.clamp(0.0, 1.0);
        let pair = self.edge(edge);
        let (pa, pb) = edge_phases(edge);
        if phase == pa {
            Ok(pair.first.eval(s))
        } else if phase == pb {
            Ok(pair.second.eval(s))
        } else {
            Err(Error::InvalidData(format!("phase {phase} is not present on edge {}", edge.name())))
        }
    }

    /// Check the sign/endpoint constraints on the capillary curves, kr
    /// ranges, vanishing at absent saturation, nondegeneracy along each edge
    /// and corner consistency. Returns a report instead of failing.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let tol = 1e-9;
        let probes = 501;

        // Capillary curve constraints.
        let (pc12, pc32) = self.curves.tables();
        if pc12.y_last().abs() > tol {
            rep.push("pc12_endpoint", "pc12(1)".into(), format!("Pc12(1) = {} Pa, expected 0", pc12.y_last()));
        }
        if pc32.y_first().abs() > tol {
            rep.push("pc32_endpoint", "pc32(0)".into(), format!("Pc32(0) = {} Pa, expected 0", pc32.y_first()));
        }
        for k in 0..probes {
            let s = k as f64 / (probes - 1) as f64;
            let v12 = pc12.eval(s);
            if v12 > tol * (1.0 + v12.abs()) {
                rep.push("pc12_sign", format!("s1 = {s}"), format!("Pc12 = {v12} Pa > 0"));
                break;
            }
        }
        for k in 0..probes {
            let s = k as f64 / (probes - 1) as f64;
            if pc12.eval_deriv(s) < -tol {
                rep.push("pc12_monotone", format!("s1 = {s}"), "dPc12/ds1 < 0".into());
                break;
            }
            if pc32.eval_deriv(s) < -tol {
                rep.push("pc32_monotone", format!("s3 = {s}"), "dPc32/ds3 < 0".into());
                break;
            }
            if pc32.eval(s) < -tol {
                rep.push("pc32_sign", format!("s3 = {s}"), "Pc32 < 0".into());
                break;
            }
        }

        // kr ranges and edge nondegeneracy.
        for edge in Edge::ALL {
            let pair = self.edge(edge);
            let (pa, pb) = edge_phases(edge);
            let mut range_flagged = false;
            for k in 0..probes {
                let s = k as f64 / (probes - 1) as f64;
                let (ka, kb) = (pair.first.eval(s), pair.second.eval(s));
                if !range_flagged && !(-tol..=1.0 + tol).contains(&ka) || !(-tol..=1.0 + tol).contains(&kb) {
                    rep.push(
                        "kr_range",
                        format!("edge {} at s = {s}", edge.name()),
                        format!("kr outside [0, 1]: {pa} = {ka}, {pb} = {kb}"),
                    );
                    range_flagged = true;
                }
                if k > 0 && k < probes - 1 && ka.max(0.0) + kb.max(0.0) <= tol {
                    rep.push(
                        "edge_degenerate",
                        format!("edge {} at s = {s}", edge.name()),
                        "both kr vanish at an interior edge point".into(),
                    );
                    break;
                }
            }
        }

        // A phase's kr vanishes where its saturation vanishes.
        let zero_checks = [
            ("kr1_wo", self.water_oil.first.eval(0.0)),
            ("kr2_wo", self.water_oil.second.eval(1.0)),
            ("kr1_wg", self.water_gas.first.eval(0.0)),
            ("kr3_wg", self.water_gas.second.eval(1.0)),
            ("kr3_go", self.gas_oil.first.eval(0.0)),
            ("kr2_go", self.gas_oil.second.eval(1.0)),
        ];
        for (loc, v) in zero_checks {
            if v.abs() > tol {
                rep.push("kr_residual_endpoint", loc.into(), format!("kr = {v} where the phase saturation is 0"));
            }
        }

        // Corner consistency between incident edges.
        let corners = [
            ("water corner kr1", self.water_oil.first.eval(1.0), self.water_gas.first.eval(1.0)),
            ("oil corner kr2", self.water_oil.second.eval(0.0), self.gas_oil.second.eval(0.0)),
            ("gas corner kr3", self.water_gas.second.eval(0.0), self.gas_oil.first.eval(1.0)),
        ];
        for (loc, a, b) in corners {
            if (a - b).abs() > tol {
                rep.push("corner_consistency", loc.into(), format!("edge traces disagree: {a} vs {b}"));
            }
        }
        rep
    }
}
