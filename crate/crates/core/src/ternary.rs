//! Ternary saturation diagram: admissible saturation pairs, the equilateral
//! planar embedding, and edge parameterizations.
//!
//! The diagram is embedded as a unit-side equilateral triangle with vertices
//! W = (0,0) (water corner, s1 = 1), O = (1,0) (oil corner, s2 = 1) and
//! G = (1/2, sqrt(3)/2) (gas corner, s3 = 1). All normal-derivative formulas
//! used by the boundary and FEM modules are expressed in this embedding.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for membership tests on the closed diagram.
pub const TERNARY_EPS: f64 = 1e-12;

/// A saturation pair (s1, s3) with s2 = 1 - s1 - s3 implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ternary {
    pub s1: f64,
    pub s3: f64,
}

impl Ternary {
    /// Checked constructor: requires s1 >= 0, s3 >= 0, s1 + s3 <= 1 up to
    /// [`TERNARY_EPS`]; tiny excursions are clamped onto the diagram.
    pub fn new(s1: f64, s3: f64) -> Result<Self> {
        if !(s1.is_finite() && s3.is_finite()) || s1 < -TERNARY_EPS || s3 < -TERNARY_EPS {
            return Err(Error::OutsideTernary { s1, s3 });
        }
        if s1 + s3 > 1.0 + TERNARY_EPS {
            return Err(Error::OutsideTernary { s1, s3 });
        }
        let mut s = Self { s1: s1.max(0.0), s3: s3.max(0.0) };
        let sum = s.s1 + s.s3;
        if sum > 1.0 {
            s.s1 /= sum;
            s.s3 /= sum;
        }
        Ok(s)
    }

    /// Constructor for coordinates already known to be admissible.
    pub fn new_unchecked(s1: f64, s3: f64) -> Self {
        Self { s1, s3 }
    }

    pub fn s2(&self) -> f64 {
        1.0 - self.s1 - self.s3
    }

    /// Water corner (1, 0): the normalization point of the global capillary pressure.
    pub fn water_corner() -> Self {
        Self { s1: 1.0, s3: 0.0 }
    }

    pub fn contains(s1: f64, s3: f64) -> bool {
        s1 >= -TERNARY_EPS && s3 >= -TERNARY_EPS && s1 + s3 <= 1.0 + TERNARY_EPS
    }

    /// Planar embedding coordinates (x, y).
    pub fn embed(&self) -> [f64; 2] {
        let s2 = self.s2();
        [s2 + 0.5 * self.s3, 0.5 * SQRT3 * self.s3]
    }

    /// Inverse of [`Ternary::embed`].
    pub fn from_xy(x: f64, y: f64) -> Self {
        let s3 = 2.0 * y / SQRT3;
        let s2 = x - y / SQRT3;
        Self { s1: 1.0 - s2 - s3, s3 }
    }
}

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The three two-phase edges of the diagram boundary.
///
/// Each edge carries the arc parameterization used by the boundary ODEs:
/// water-oil t -> (1-t, 0), gas-oil t -> (0, t), water-gas t -> (1-t, t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    WaterOil,
    GasOil,
    WaterGas,
}

impl Edge {
    pub const ALL: [Edge; 3] = [Edge::WaterOil, Edge::GasOil, Edge::WaterGas];

    /// Point at arc parameter t in [0, 1].
    pub fn point(&self, t: f64) -> Ternary {
        match self {
            Edge::WaterOil => Ternary::new_unchecked(1.0 - t, 0.0),
            Edge::GasOil => Ternary::new_unchecked(0.0, t),
            Edge::WaterGas => Ternary::new_unchecked(1.0 - t, t),
        }
    }

    /// Outward normal derivative on this edge from the saturation-gradient
    /// pair (d/ds1, d/ds3), in the equilateral embedding.
    pub fn normal_derivative(&self, grad_s1: f64, grad_s3: f64) -> f64 {
        let c = SQRT3 / 3.0;
        match self {
            Edge::WaterOil => c * (grad_s1 - 2.0 * grad_s3),
            Edge::WaterGas => c * (grad_s1 + grad_s3),
            Edge::GasOil => c * (grad_s3 - 2.0 * grad_s1),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Edge::WaterOil => "water_oil",
            Edge::GasOil => "gas_oil",
            Edge::WaterGas => "water_gas",
        }
    }
}
