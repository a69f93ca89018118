//! Manufactured data sets with closed-form truths.
//!
//! * `lin` — linear kr = (s1, s2, s3), unit incompressible mobilities,
//!   linear capillary curves. Total-differential (TD) consistent with a
//!   quadratic global capillary pressure.
//! * `corey` — quadratic kr = (s1^2, s2^2, s3^2); violates the TD condition
//!   (detection preset).
//! * `smooth` — smoothstep fractional flows, incompressible; TD with a
//!   quartic potential, and its traces are honest two-phase tables.
//! * `gas` — compressible gas. Built from a closed-form potential and
//!   global mobility through the reconstruction formulas, so the kr carry a
//!   genuine pressure dependence; this is the only way a compressible system
//!   can be TD while keeping every fractional flow admissible.
//! * `gastab` — the smooth tables paired with the compressible fluid
//!   system; valid boundary-ODE input that is *not* TD-compatible.

use crate::error::Result;
use crate::flows::{FlowContext, Provenance, ThreePhaseKr};
use crate::fluids::{FluidSystem, Phase, PhaseModel, PressureWindow, VolumeFactor};
use crate::ternary::Ternary;
use crate::twophase::{CapillaryCurves, EdgePair, TwoPhaseDataset};

/// Water-oil capillary slope used by all presets, Pa.
pub const PC12_SLOPE: f64 = 1.0e4;
/// Gas-oil capillary slope used by all presets, Pa.
pub const PC32_SLOPE: f64 = 2.0e4;
/// Shared capillary magnitude |Pc12| + Pc32 = 3e4 Pa; tolerance scalings in
/// the tests reference this.
pub const PC_SCALE: f64 = PC12_SLOPE + PC32_SLOPE;

const P_MIN: f64 = 5.0e6;
const P_MAX: f64 = 2.0e7;
const P_NODES: usize = 5;

const GAS_COMPRESSIBILITY: f64 = 1.0e-8;
const GAS_P_REF: f64 = 1.0e7;

// Gas preset shape parameters: oil-flow floor on the water-gas edge and the
// pressure-coupling amplitude of the potential.
const GAS_DELTA: f64 = 0.1;
const GAS_ETA: f64 = 5.0e3;

pub fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

/// Antiderivative of the water smoothstep, normalized to vanish at s1 = 1.
pub fn psi1(s1: f64) -> f64 {
    s1.powi(3) - 0.5 * s1.powi(4) - 0.5
}

/// Gas fractional flow ramp 1 - smoothstep(1 - u).
pub fn phi3(u: f64) -> f64 {
    1.0 - smoothstep(1.0 - u)
}

/// Antiderivative of `phi3`, vanishing at s3 = 0.
pub fn psi3(s3: f64) -> f64 {
    let v = 1.0 - s3;
    s3 - 0.5 + v.powi(3) - 0.5 * v.powi(4)
}

/// Interior bump s1^3 (1 - s1)^2 carrying the pressure coupling of the gas
/// preset; flat at both corners.
fn bump(s1: f64) -> f64 {
    s1.powi(3) * (1.0 - s1).powi(2)
}

fn bump_deriv(s1: f64) -> f64 {
    s1 * s1 * (1.0 - s1) * (3.0 - 5.0 * s1)
}

/// Closed-form global capillary pressure truths for the TD presets.
#[derive(Debug, Clone, Copy)]
pub enum ClosedForm {
    /// A (s1^2 - 1)/2 + B s3^2 / 2.
    LinQuadratic { a: f64, b: f64 },
    /// A psi1(s1) + B psi3(s3).
    SmoothRamp { a: f64, b: f64 },
    /// Smooth ramp with an oil floor and a pressure-coupled interior bump.
    GasRamp { a: f64, b: f64, delta: f64, eta: f64, p_min: f64, p_max: f64 },
}

impl ClosedForm {
    pub fn pcg(&self, s: Ternary, p: f64) -> f64 {
        match *self {
            ClosedForm::LinQuadratic { a, b } => 0.5 * a * (s.s1 * s.s1 - 1.0) + 0.5 * b * s.s3 * s.s3,
            ClosedForm::SmoothRamp { a, b } => a * psi1(s.s1) + b * psi3(s.s3),
            ClosedForm::GasRamp { a, b, delta, eta, p_min, p_max } => {
                let w = (p - p_min) / (p_max - p_min);
                a * psi1(s.s1) + b * (1.0 - delta) * psi3(s.s3) + eta * w * psi3(s.s3) * bump(s.s1)
            }
        }
    }

    pub fn dpcg_dp(&self, s: Ternary, _p: f64) -> f64 {
        match *self {
            ClosedForm::LinQuadratic { .. } | ClosedForm::SmoothRamp { .. } => 0.0,
            ClosedForm::GasRamp { eta, p_min, p_max, .. } => eta / (p_max - p_min) * psi3(s.s3) * bump(s.s1),
        }
    }

    /// Saturation gradient (d/ds1, d/ds3).
    pub fn grad_s(&self, s: Ternary, p: f64) -> [f64; 2] {
        match *self {
            ClosedForm::LinQuadratic { a, b } => [a * s.s1, b * s.s3],
            ClosedForm::SmoothRamp { a, b } => [a * smoothstep(s.s1), b * phi3(s.s3)],
            ClosedForm::GasRamp { a, b, delta, eta, p_min, p_max } => {
                let w = (p - p_min) / (p_max - p_min);
                [
                    a * smoothstep(s.s1) + eta * w * psi3(s.s3) * bump_deriv(s.s1),
                    b * (1.0 - delta) * phi3(s.s3) + eta * w * phi3(s.s3) * bump(s.s1),
                ]
            }
        }
    }
}

/// A manufactured data bundle: fluid system, capillary curves, a three-phase
/// kr evaluator and (for TD presets) the closed-form potential.
pub struct Preset {
    pub name: &'static str,
    pub fluids: FluidSystem,
    pub curves: CapillaryCurves,
    pub kr: Box<dyn ThreePhaseKr + Send + Sync>,
    pub exact: Option<ClosedForm>,
}

impl Preset {
    pub fn flow_context(&self) -> FlowContext<'_> {
        FlowContext::new(self.kr.as_ref(), &self.fluids, &self.curves)
    }
}

fn window() -> PressureWindow {
    PressureWindow::new(P_MIN, P_MAX, P_NODES).unwrap()
}

fn incompressible_fluids(mu: [f64; 3], rho: [f64; 3]) -> FluidSystem {
    FluidSystem::new(
        PhaseModel::new(Phase::Water, rho[0], mu[0], VolumeFactor::Constant),
        PhaseModel::new(Phase::Oil, rho[1], mu[1], VolumeFactor::Constant),
        PhaseModel::new(Phase::Gas, rho[2], mu[2], VolumeFactor::Constant),
        window(),
        PC_SCALE,
    )
    .unwrap()
}

fn gas_fluids() -> FluidSystem {
    FluidSystem::new(
        PhaseModel::new(Phase::Water, 1000.0, 1e-3, VolumeFactor::Constant),
        PhaseModel::new(Phase::Oil, 800.0, 2e-3, VolumeFactor::Constant),
        PhaseModel::new(
            Phase::Gas,
            80.0,
            2e-5,
            VolumeFactor::Exponential { c: GAS_COMPRESSIBILITY, p_ref: GAS_P_REF },
        ),
        window(),
        PC_SCALE + 100.0,
    )
    .unwrap()
}

/// kr = (s1, s2, s3).
pub struct LinKr;

impl ThreePhaseKr for LinKr {
    fn kr(&self, s: Ternary, _p2: f64) -> Result<[f64; 3]> {
        Ok([s.s1, s.s2(), s.s3])
    }
    fn provenance(&self) -> Provenance {
        Provenance::Manufactured
    }
}

/// kr = (s1^2, s2^2, s3^2); not TD.
pub struct CoreyKr;

impl ThreePhaseKr for CoreyKr {
    fn kr(&self, s: Ternary, _p2: f64) -> Result<[f64; 3]> {
        let s2 = s.s2();
        Ok([s.s1 * s.s1, s2 * s2, s.s3 * s.s3])
    }
    fn provenance(&self) -> Provenance {
        Provenance::Manufactured
    }
}

/// Smoothstep fractional-flow kr; with equal phase mobilities the kr equal
/// the fractional flows themselves.
pub struct SmoothKr;

impl SmoothKr {
    pub fn values(s: Ternary) -> [f64; 3] {
        let f1 = smoothstep(s.s1);
        let f3 = phi3(s.s3);
        [f1, 1.0 - f1 - f3, f3]
    }
}

impl ThreePhaseKr for SmoothKr {
    fn kr(&self, s: Ternary, _p2: f64) -> Result<[f64; 3]> {
        Ok(Self::values(s))
    }
    fn provenance(&self) -> Provenance {
        Provenance::Manufactured
    }
}

/// TD data for the compressible system, generated from the `GasRamp`
/// potential and a constant global mobility through the reconstruction
/// formulas. kr depend on the oil pressure through the implied global
/// pressure.
pub struct GasTdKr {
    form: ClosedForm,
    mu: [f64; 3],
    c_gas: f64,
    p_ref_gas: f64,
}

impl GasTdKr {
    fn new() -> Self {
        Self {
            form: gas_closed_form(),
            mu: [1e-3, 2e-3, 2e-5],
            c_gas: GAS_COMPRESSIBILITY,
            p_ref_gas: GAS_P_REF,
        }
    }

    fn pc32(&self, s3: f64) -> f64 {
        PC32_SLOPE * s3
    }

    /// Global pressure solving P = p2 + Pcg(s, P); the pressure slope of the
    /// potential is far below one, so Newton converges in a couple of steps.
    fn global_pressure(&self, s: Ternary, p2: f64) -> f64 {
        let mut p = p2 + self.form.pcg(s, p2);
        for _ in 0..20 {
            let f = p - p2 - self.form.pcg(s, p);
            let fp = 1.0 - self.form.dpcg_dp(s, p);
            let step = f / fp;
            p -= step;
            if step.abs() < 1e-10 {
                break;
            }
        }
        p
    }

    fn nus(&self, s: Ternary, p: f64) -> [f64; 3] {
        let g = self.form.grad_s(s, p);
        let nu1 = g[0] / PC12_SLOPE;
        let nu3 = g[1] / PC32_SLOPE;
        [nu1, 1.0 - nu1 - nu3, nu3]
    }

    fn nus_dp(&self, s: Ternary) -> [f64; 3] {
        let ClosedForm::GasRamp { a, b, eta, p_min, p_max, .. } = self.form else { unreachable!() };
        let wp = 1.0 / (p_max - p_min);
        let d1 = eta * wp * psi3(s.s3) * bump_deriv(s.s1) / a;
        let d3 = eta * wp * phi3(s.s3) * bump(s.s1) / b;
        [d1, -d1 - d3, d3]
    }

    fn mobilities(&self, s: Ternary, p2: f64) -> ([f64; 3], [f64; 3]) {
        let p3 = p2 + self.pc32(s.s3);
        let d = [
            1.0 / self.mu[0],
            1.0 / self.mu[1],
            (self.c_gas * (p3 - self.p_ref_gas)).exp() / self.mu[2],
        ];
        let slopes = [0.0, 0.0, self.c_gas];
        (d, slopes)
    }
}

impl ThreePhaseKr for GasTdKr {
    fn kr(&self, s: Ternary, p2: f64) -> Result<[f64; 3]> {
        let p = self.global_pressure(s, p2);
        let nu = self.nus(s, p);
        let (d, _) = self.mobilities(s, p2);
        let d_bar = 1.0 / self.mu[1];
        Ok([nu[0] * d_bar / d[0], nu[1] * d_bar / d[1], nu[2] * d_bar / d[2]])
    }

    fn kr_slope_p2(&self, s: Ternary, p2: f64) -> Result<[f64; 3]> {
        let p = self.global_pressure(s, p2);
        let nu = self.nus(s, p);
        let nu_dp = self.nus_dp(s);
        let dp_dp2 = 1.0 / (1.0 - self.form.dpcg_dp(s, p));
        let (d, slopes) = self.mobilities(s, p2);
        let d_bar = 1.0 / self.mu[1];
        let mut out = [0.0; 3];
        for j in 0..3 {
            out[j] = d_bar / d[j] * (nu_dp[j] * dp_dp2 - nu[j] * slopes[j]);
        }
        Ok(out)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Manufactured
    }
}

fn gas_closed_form() -> ClosedForm {
    ClosedForm::GasRamp {
        a: PC12_SLOPE,
        b: PC32_SLOPE,
        delta: GAS_DELTA,
        eta: GAS_ETA,
        p_min: P_MIN,
        p_max: P_MAX,
    }
}

pub fn lin() -> Preset {
    Preset {
        name: "lin",
        fluids: incompressible_fluids([1.0, 1.0, 1.0], [1000.0, 800.0, 100.0]),
        curves: CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
        kr: Box::new(LinKr),
        exact: Some(ClosedForm::LinQuadratic { a: PC12_SLOPE, b: PC32_SLOPE }),
    }
}

pub fn lin_zero_pc() -> Preset {
    Preset {
        name: "lin_zero_pc",
        fluids: incompressible_fluids([1.0, 1.0, 1.0], [1000.0, 800.0, 100.0]),
        curves: CapillaryCurves::zero(),
        kr: Box::new(LinKr),
        exact: Some(ClosedForm::LinQuadratic { a: 0.0, b: 0.0 }),
    }
}

pub fn corey() -> Preset {
    Preset {
        name: "corey",
        fluids: incompressible_fluids([1.0, 1.0, 1.0], [1000.0, 800.0, 100.0]),
        curves: CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
        kr: Box::new(CoreyKr),
        exact: None,
    }
}

pub fn smooth() -> Preset {
    Preset {
        name: "smooth",
        fluids: incompressible_fluids([1e-3, 1e-3, 1e-3], [1000.0, 800.0, 100.0]),
        curves: CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
        kr: Box::new(SmoothKr),
        exact: Some(ClosedForm::SmoothRamp { a: PC12_SLOPE, b: PC32_SLOPE }),
    }
}

pub fn gas() -> Preset {
    Preset {
        name: "gas",
        fluids: gas_fluids(),
        curves: CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
        kr: Box::new(GasTdKr::new()),
        exact: Some(gas_closed_form()),
    }
}

/// Smooth two-phase tables paired with the compressible fluid system.
/// Boundary-ODE input only: the combination is not TD-compatible.
pub fn gastab() -> Preset {
    Preset {
        name: "gastab",
        fluids: gas_fluids(),
        curves: CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
        kr: Box::new(SmoothKr),
        exact: None,
    }
}

/// Water displacing oil with quadratic kr, zero capillary pressure and a 2:1
/// viscosity ratio; the classical similarity construction applies.
pub fn bl_waterflood() -> Preset {
    Preset {
        name: "bl_waterflood",
        fluids: incompressible_fluids([1e-3, 2e-3, 1e-3], [1000.0, 800.0, 100.0]),
        curves: CapillaryCurves::zero(),
        kr: Box::new(CoreyKr),
        exact: None,
    }
}

fn table(n: usize, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> EdgePair {
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            (s, f(s), g(s))
        })
        .collect();
    EdgePair::from_table(rows).unwrap()
}

/// Edge traces of the `lin` preset as explicit tables.
pub fn lin_dataset() -> TwoPhaseDataset {
    TwoPhaseDataset::new(
        table(11, |s| s, |s| 1.0 - s),
        table(11, |s| s, |s| 1.0 - s),
        table(11, |s| s, |s| 1.0 - s),
        CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
    )
}

/// `lin_dataset` with kr1 on the water-gas edge scaled by `factor`;
/// breaks the TD-compatibility condition for factor != 1.
pub fn lin_dataset_perturbed(factor: f64) -> TwoPhaseDataset {
    let mut ds = lin_dataset();
    ds.water_gas = table(11, move |s| factor * s, |s| 1.0 - s);
    ds
}

/// Edge traces of the `smooth` preset (201-point tables).
pub fn smooth_dataset() -> TwoPhaseDataset {
    let n = 201;
    TwoPhaseDataset::new(
        table(n, smoothstep, |s| 1.0 - smoothstep(s)),
        table(n, smoothstep, |s| phi3(1.0 - s)),
        table(n, phi3, |s| 1.0 - phi3(s)),
        CapillaryCurves::linear(PC12_SLOPE, PC32_SLOPE),
    )
}

/// Linear kr traces with zero capillary curves.
pub fn zero_pc_dataset() -> TwoPhaseDataset {
    TwoPhaseDataset::new(
        table(11, |s| s, |s| 1.0 - s),
        table(11, |s| s, |s| 1.0 - s),
        table(11, |s| s, |s| 1.0 - s),
        CapillaryCurves::zero(),
    )
}

pub fn by_name(name: &str) -> Option<Preset> {
    match name {
        "lin" => Some(lin()),
        "lin_zero_pc" => Some(lin_zero_pc()),
        "corey" => Some(corey()),
        "smooth" => Some(smooth()),
        "gas" => Some(gas()),
        "gastab" => Some(gastab()),
        "bl_waterflood" => Some(bl_waterflood()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Scan the gas preset's fractional flows over a dense grid: the bump
    /// amplitude must keep every nu_j inside [0, 1].
    #[test]
    fn gas_fractional_flows_admissible() {
        let kr = GasTdKr::new();
        for pi in 0..3 {
            let p = [P_MIN, 0.5 * (P_MIN + P_MAX), P_MAX][pi];
            for i in 0..=120 {
                for j in 0..=(120 - i) {
                    let s = Ternary::new(i as f64 / 120.0, j as f64 / 120.0).unwrap();
                    let nu = kr.nus(s, p);
                    for v in nu {
                        assert!((-1e-12..=1.0 + 1e-12).contains(&v), "nu = {nu:?} at ({}, {}), p = {p}", s.s1, s.s3);
                    }
                }
            }
        }
    }

    #[test]
    fn gas_kr_nonnegative_with_positive_total() {
        let preset = gas();
        for i in 0..=60 {
            for j in 0..=(60 - i) {
                let s = Ternary::new(i as f64 / 60.0, j as f64 / 60.0).unwrap();
                let kr = preset.kr.kr(s, 1.1e7).unwrap();
                assert!(kr.iter().all(|v| *v >= -1e-12), "{kr:?}");
                assert!(kr.iter().sum::<f64>() > 0.0);
            }
        }
    }

    /// The closed-form saturation gradient is the derivative of the
    /// closed-form potential (finite-difference check).
    #[test]
    fn closed_form_gradients_consistent() {
        for preset in [lin(), smooth(), gas()] {
            let form = preset.exact.unwrap();
            let p = 1.3e7;
            let h = 1e-6;
            for (s1, s3) in [(0.3, 0.4), (0.6, 0.2), (0.15, 0.7)] {
                let s = Ternary::new(s1, s3).unwrap();
                let g = form.grad_s(s, p);
                let fd1 = (form.pcg(Ternary::new_unchecked(s1 + h, s3), p)
                    - form.pcg(Ternary::new_unchecked(s1 - h, s3), p))
                    / (2.0 * h);
                let fd3 = (form.pcg(Ternary::new_unchecked(s1, s3 + h), p)
                    - form.pcg(Ternary::new_unchecked(s1, s3 - h), p))
                    / (2.0 * h);
                assert_relative_eq!(g[0], fd1, max_relative = 1e-6, epsilon = 1e-4);
                assert_relative_eq!(g[1], fd3, max_relative = 1e-6, epsilon = 1e-4);
                let fd_p = (form.pcg(s, p + 100.0) - form.pcg(s, p - 100.0)) / 200.0;
                assert_relative_eq!(form.dpcg_dp(s, p), fd_p, max_relative = 1e-8, epsilon = 1e-15);
            }
        }
    }

    /// The gas kr evaluator must reproduce its generating fractional flows:
    /// f_j(s, p - Pcg(s, p)) equals nu_j(s, p).
    #[test]
    fn gas_flows_recover_generating_nus() {
        let preset = gas();
        let ctx = preset.flow_context();
        let form = preset.exact.unwrap();
        let kr = GasTdKr::new();
        for (s1, s3, p) in [(0.3, 0.3, 1e7), (0.6, 0.25, 6e6), (0.1, 0.5, 1.9e7)] {
            let s = Ternary::new(s1, s3).unwrap();
            let p2 = p - form.pcg(s, p);
            let f = ctx.fractional_flows(s, p2).unwrap();
            let nu = kr.nus(s, p);
            for j in 0..3 {
                assert_relative_eq!(f[j], nu[j], max_relative = 1e-9, epsilon = 1e-11);
            }
            // Total mobility equals the constant global mobility.
            assert_relative_eq!(ctx.lambda_total(s, p2).unwrap(), 500.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn smooth_tables_trace_the_smooth_kr() {
        let ds = smooth_dataset();
        for k in 0..=40 {
            let s1 = k as f64 / 40.0;
            let s = Ternary::new(s1, 0.0).unwrap();
            let kr = SmoothKr::values(s);
            assert_relative_eq!(
                ds.kr_edge(crate::ternary::Edge::WaterOil, Phase::Water, s1).unwrap(),
                kr[0],
                epsilon = 5e-9
            );
            assert_relative_eq!(
                ds.kr_edge(crate::ternary::Edge::WaterOil, Phase::Oil, s1).unwrap(),
                kr[1],
                epsilon = 5e-9
            );
        }
    }

    #[test]
    fn preset_lookup() {
        assert!(by_name("lin").is_some());
        assert!(by_name("gas").is_some());
        assert!(by_name("nope").is_none());
    }
}
