//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass/fail line with the measured figure. Tolerances are fixed here, not
//! configurable. Run with `cargo test --test acceptance -- --nocapture` to
//! see the lines for passing criteria too.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use tdflow::boundary::{compatibility_report, BoundaryTolerances};
use tdflow::fem::{solve_biharmonic, solve_laplace};
use tdflow::field::GlobalCapillaryField;
use tdflow::gcp::{GcpContext, GcpTolerances, SaturationPath};
use tdflow::mesh::TriMesh;
use tdflow::ode::rk4_fixed;
use tdflow::presets::{self, Preset, PC_SCALE};
use tdflow::reconstruct::{flux_identity_check, interpolate, verify_boundary_match, FluxIdentityConfig};
use tdflow::sim1d::{run_compare, BcEnd, RockModel, SimConfig};
use tdflow::ternary::{Edge, Ternary, SQRT3};
use tdflow::Result;

fn gcp(preset: &Preset) -> GcpContext<'_> {
    GcpContext::new(preset.flow_context(), preset.fluids.window, GcpTolerances::default())
}

/// 25 interior probe points on a 5x5 collapsed grid.
fn probe_points() -> Vec<Ternary> {
    let mut pts = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            let s1 = 0.1 + 0.2 * i as f64;
            let u = 0.1 + 0.2 * j as f64;
            pts.push(Ternary::new_unchecked(s1, u * (1.0 - s1)));
        }
    }
    pts
}

fn least_squares_order(errors: &[f64]) -> f64 {
    // Slope of log2(error) against refinement level (h halves per level).
    let n = errors.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (k, e) in errors.iter().enumerate() {
        let x = k as f64;
        let y = -e.log2();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[test]
fn criterion_01_lin_closed_form_recovery() -> Result<()> {
    let start = Instant::now();
    let preset = presets::lin();
    let g = gcp(&preset);
    let form = preset.exact.unwrap();
    let mut max_rel: f64 = 0.0;
    for s in probe_points() {
        let got = g.pcg(s, 1.2e7)?;
        let exact = form.pcg(s, 1.2e7);
        max_rel = max_rel.max((got - exact).abs() / exact.abs());
    }

    // Independent oracle at one probe: fixed-step RK4 with the closed-form
    // linear fractional flows, plus the antiderivative itself.
    let s = Ternary::new_unchecked(0.5, 0.25);
    let leg1 = rk4_fixed(
        |t: f64, y: &[f64; 1]| {
            let s1 = 1.0 - 0.5 * t;
            let _ = y;
            Ok([-(s1) * 1e4 * 0.5])
        },
        0.0,
        1.0,
        [0.0],
        4096,
    )?;
    let oracle = rk4_fixed(
        |t: f64, _y: &[f64; 1]| Ok([(t * 0.25) * 2e4 * 0.25]),
        0.0,
        1.0,
        leg1,
        4096,
    )?[0];
    let got = g.pcg(s, 1.2e7)?;
    assert!((got - oracle).abs() < 1e-6 * PC_SCALE, "RK4 oracle {oracle} vs {got}");
    assert!((oracle - -3125.0).abs() < 1e-6 * PC_SCALE);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(max_rel < 1e-6, "max relative error {max_rel:.3e}");
    assert!(elapsed < 5.0, "runtime {elapsed:.2}s exceeds 5s");
    println!("ACCEPTANCE 01 lin closed-form recovery: PASS (max rel {max_rel:.2e}, {elapsed:.2}s)");
    Ok(())
}

#[test]
fn criterion_02_path_independence_and_detection() -> Result<()> {
    let tol = 1e-6 * 3e4;
    for preset in [presets::lin(), presets::gas()] {
        let g = gcp(&preset);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst: f64 = 0.0;
        for s in probe_points() {
            let p = rng.gen_range(preset.fluids.window.p_min..preset.fluids.window.p_max);
            worst = worst.max(g.td_residual_paths(s, p, 20, rng.gen())?);
        }
        assert!(worst < tol, "{}: spread {worst:.3e} Pa", preset.name);
        println!("ACCEPTANCE 02 path independence [{}]: PASS (max spread {worst:.2e} Pa < {tol:.1e})", preset.name);
    }

    let corey = presets::corey();
    let g = gcp(&corey);
    let s = Ternary::new_unchecked(0.4, 0.3);
    let a = g.integrate_beta(&SaturationPath::canonical(s), 1.2e7)?;
    let b = g.integrate_beta(&SaturationPath::gas_first(s), 1.2e7)?;
    let diff = (a - b).abs();
    assert!(diff > 1e-3 * 3e4, "corey axis-path difference {diff:.3e} Pa");
    println!("ACCEPTANCE 02 non-TD detection [corey]: PASS (axis difference {diff:.1} Pa > 30 Pa)");
    Ok(())
}

#[test]
fn criterion_03_strict_positivity() -> Result<()> {
    for preset in [presets::lin(), presets::smooth(), presets::gas(), presets::corey()] {
        let g = gcp(&preset);
        let rep = g.stability_report(50, 5)?;
        assert!(
            rep.one_minus_gamma_min > 0.0,
            "{}: min(1 - dPcg/dp) = {:.3e}",
            preset.name,
            rep.one_minus_gamma_min
        );
        if preset.name == "gas" {
            assert!(rep.gamma_min >= -1e-12, "gas preset gamma_min {:.3e}", rep.gamma_min);
            assert!(rep.gamma_max < 1.0, "gas preset gamma_max {:.3e}", rep.gamma_max);
            assert!(rep.condition_slope_ordering, "slope-ordering condition failed");
            assert!(
                rep.gamma_max_water_oil_edge < 1e-12,
                "water-oil edge gamma {:.3e}",
                rep.gamma_max_water_oil_edge
            );
        }
        println!(
            "ACCEPTANCE 03 strict positivity [{}]: PASS (1 - dPcg/dp in [{:.6}, {:.6}])",
            preset.name,
            rep.one_minus_gamma_min,
            1.0 - rep.gamma_min
        );
    }
    Ok(())
}

#[test]
fn criterion_04_two_route_derivative_consistency() -> Result<()> {
    let preset = presets::gas();
    let g = gcp(&preset);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s1 = rng.gen_range(0.05..0.9);
        let s3 = rng.gen_range(0.05..f64::min(1.0 - s1, 0.9));
        let s = Ternary::new_unchecked(s1, s3);
        let p = rng.gen_range(preset.fluids.window.p_min..preset.fluids.window.p_max);
        let ode = g.dpcg_dp(s, p)?;
        let quad = g.dpcg_dp_quadrature(s, p, 257)?;
        let rel = (ode - quad).abs() / ode.abs().max(quad.abs()).max(1e-300);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-6, "worst relative route difference {worst:.3e}");
    println!("ACCEPTANCE 04 two-route dPcg/dp consistency: PASS (max rel diff {worst:.2e} over 100 points)");
    Ok(())
}

#[test]
fn criterion_05_td_compatibility() -> Result<()> {
    let preset = presets::lin();
    let tol = BoundaryTolerances::default();
    let rep = compatibility_report(&presets::lin_dataset(), &preset.fluids, &tol)?;
    assert_eq!(rep.residuals.len(), 5);
    assert!(
        rep.max_abs_residual < 1e-8 * 3e4,
        "lin residual {:.3e} Pa",
        rep.max_abs_residual
    );

    let perturbed = compatibility_report(&presets::lin_dataset_perturbed(1.1), &preset.fluids, &tol)?;
    assert!(
        perturbed.max_abs_residual > 1e-3 * 3e4,
        "perturbed residual {:.3e} Pa",
        perturbed.max_abs_residual
    );
    println!(
        "ACCEPTANCE 05 TD-compatibility: PASS (trace residual {:.2e} Pa, perturbed {:.1} Pa)",
        rep.max_abs_residual, perturbed.max_abs_residual
    );
    Ok(())
}

#[test]
fn criterion_06_fem_convergence() -> Result<()> {
    use std::sync::Arc;

    // Laplace with a manufactured harmonic solution.
    let start = Instant::now();
    let exact = |xy: [f64; 2]| xy[0] * xy[0] - xy[1] * xy[1];
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let mesh = Arc::new(TriMesh::new(n)?);
        let dirichlet = |edge: Edge, t: f64| -> Result<f64> { Ok(exact(edge.point(t).embed())) };
        let f = solve_laplace(&mesh, &dirichlet)?;
        errs.push(f.l2_error(&exact));
    }
    let laplace_order = least_squares_order(&errs);
    let laplace_time = start.elapsed().as_secs_f64();
    assert!(laplace_order >= 1.9, "laplace L2 order {laplace_order:.2}, errors {errs:?}");
    assert!(laplace_time < 60.0);

    // Clamped biharmonic with the lin closed form, which is quadratic in the
    // embedding and therefore lies in the discrete space: the solver must
    // either show the required order or reproduce it to solver precision.
    let start = Instant::now();
    let form = presets::lin().exact.unwrap();
    let lin_exact = |xy: [f64; 2]| form.pcg(Ternary::from_xy(xy[0], xy[1]), 1.2e7);
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let mesh = Arc::new(TriMesh::new(n)?);
        let dirichlet = |edge: Edge, t: f64| -> Result<f64> { Ok(lin_exact(edge.point(t).embed())) };
        let neumann = |edge: Edge, t: f64| -> Result<f64> {
            let g = form.grad_s(edge.point(t), 1.2e7);
            Ok(edge.normal_derivative(g[0], g[1]))
        };
        let f = solve_biharmonic(&mesh, &dirichlet, &neumann)?;
        errs.push(f.l2_error(&lin_exact));
    }
    let biharmonic_time = start.elapsed().as_secs_f64();
    let reproduction_floor = 1e-9 * PC_SCALE;
    let exact_reproduction = errs.iter().all(|e| *e < reproduction_floor);
    let biharmonic_order = least_squares_order(&errs);
    assert!(
        exact_reproduction || biharmonic_order >= 1.5,
        "biharmonic: order {biharmonic_order:.2}, errors {errs:?}"
    );
    assert!(biharmonic_time < 60.0, "biharmonic study took {biharmonic_time:.1}s");
    println!(
        "ACCEPTANCE 06 FEM convergence: PASS (laplace order {laplace_order:.2} in {laplace_time:.1}s; biharmonic {} in {biharmonic_time:.1}s)",
        if exact_reproduction {
            format!("exact quadratic reproduction, max L2 {:.1e}", errs.iter().fold(0.0f64, |m, e| m.max(*e)))
        } else {
            format!("order {biharmonic_order:.2}")
        }
    );
    Ok(())
}

#[test]
fn criterion_07_boundary_honoring() -> Result<()> {
    let preset = presets::lin();
    let ds = presets::lin_dataset();
    let data = interpolate(&ds, &preset.fluids, 32, &BoundaryTolerances::default())?;
    let rep = verify_boundary_match(&data, &ds, &preset.fluids, 101, 1e-3)?;
    assert!(rep.pass, "{rep:?}");
    let worst_match = rep.per_edge.iter().map(|e| e.max_rel_err).fold(0.0, f64::max);
    let worst_absent = rep.per_edge.iter().map(|e| e.absent_phase_max).fold(0.0, f64::max);
    println!(
        "ACCEPTANCE 07 boundary honoring: PASS (edge kr error {worst_match:.2e}, absent-phase kr {worst_absent:.2e})"
    );
    Ok(())
}

#[test]
fn criterion_08_flux_identity() -> Result<()> {
    let mut tol = GcpTolerances::default();
    tol.ode_rtol = 1e-12;
    tol.ode_atol_frac = 1e-12;
    for preset in [presets::lin(), presets::gas()] {
        let g = GcpContext::new(preset.flow_context(), preset.fluids.window, tol);
        for gravity in [0.0, 9.81] {
            let cfg = FluxIdentityConfig {
                k_abs: 1e-12,
                g: gravity,
                dz_dx: 1.0,
                n_samples: 64,
                fd_step: 2e-4,
            };
            let rep = flux_identity_check(
                &g,
                &cfg,
                &|x| 0.35 + 0.2 * (6.0 * x).sin(),
                &|x| 0.3 + 0.15 * (4.0 * x).cos(),
                &|x| 1.2e7 + 2e5 * x,
            )?;
            assert!(rep.stability_ok);
            assert!(
                rep.max_rel_diff < 1e-8,
                "{} g = {gravity}: rel diff {:.3e}",
                preset.name,
                rep.max_rel_diff
            );
            println!(
                "ACCEPTANCE 08 flux identity [{} g={gravity}]: PASS (max rel diff {:.2e})",
                preset.name, rep.max_rel_diff
            );
        }
    }
    Ok(())
}

#[test]
fn criterion_09_simulator_equivalence() -> Result<()> {
    let start = Instant::now();

    // Linear preset: water and gas injected into an oil-rich column.
    let lin = presets::lin();
    let g = gcp(&lin);
    let field = GlobalCapillaryField::build(&g, 33)?;
    let flow = lin.flow_context();
    let s_in = Ternary::new_unchecked(0.4, 0.3);
    // Initial profiles ramp smoothly from the injected composition at the
    // inlet to the resident one, so the boundary face never sees an O(1)
    // saturation jump (whose discretization differs between the forms at
    // fixed size regardless of the grid).
    let ramp = |x: f64| {
        let u = (x / 0.3).min(1.0);
        1.0 - u * u * (3.0 - 2.0 * u)
    };
    let init_profiles = |n: usize| -> (Vec<f64>, Vec<f64>) {
        let dx = 1.0 / n as f64;
        let s1 = (0..n).map(|i| 0.15 + 0.25 * ramp((i as f64 + 0.5) * dx)).collect();
        let s3 = (0..n).map(|i| 0.1 + 0.2 * ramp((i as f64 + 0.5) * dx)).collect();
        (s1, s3)
    };
    let case = |n: usize| -> SimConfig {
        SimConfig::basic(
            n,
            1.0,
            1.0 * (200.0 / n as f64),
            320.0,
            BcEnd::Pressure { p2: 1.35e7, s: Some(s_in) },
            BcEnd::Pressure { p2: 1.1e7, s: None },
        )
    };
    let mut linf = Vec::new();
    let mut l1 = Vec::new();
    for n in [50usize, 100, 200] {
        let cfg = case(n);
        let rock = RockModel::uniform(n, 1e-10, 0.2, 0.0, 1e7, 0.0, 0.0, cfg.dx());
        let (rep, ra, _) = run_compare(&flow, &field, &rock, &cfg, init_profiles(n), 1.2e7)?;
        // The front must travel a meaningful distance beyond the ramp.
        assert!(ra.state.s1[n / 2] > 0.2, "front stalled at n = {n}");
        linf.push(rep.linf_s1.max(rep.linf_s3));
        l1.push(rep.l1_s1.max(rep.l1_s3));
    }
    let lin_diff_200 = linf[2];
    assert!(lin_diff_200 < 5e-3, "lin 200-cell difference {lin_diff_200:.3e}");
    // At the self-sharpening front the sup-norm difference measures front
    // shift times steepness and cannot converge; the integral norm carries
    // the refinement order.
    let order = least_squares_order(&l1);
    let at_floor = l1[2] < 1e-9;
    assert!(
        order >= 1.0 || at_floor,
        "inter-formulation refinement order {order:.2}, L1 diffs {l1:?}"
    );
    println!(
        "ACCEPTANCE 09 simulator equivalence [lin]: PASS (L-inf {lin_diff_200:.2e} at 200 cells, L1 refinement order {order:.2})"
    );

    // Compressible preset with gravity.
    let gasp = presets::gas();
    let g = gcp(&gasp);
    let field = GlobalCapillaryField::build(&g, 33)?;
    let flow = gasp.flow_context();
    let n = 200;
    let cfg = SimConfig::basic(
        n,
        1.0,
        0.2,
        60.0,
        BcEnd::Pressure { p2: 1.35e7, s: Some(s_in) },
        BcEnd::Pressure { p2: 1.1e7, s: None },
    );
    let rock = RockModel::uniform(n, 1e-12, 0.2, 1e-10, 1e7, 9.81, 0.3, cfg.dx());
    let (rep, ra, _) = run_compare(&flow, &field, &rock, &cfg, init_profiles(n), 1.2e7)?;
    assert!(ra.state.s1[n / 2] > 0.2, "gas front stalled");
    let gas_diff = rep.linf_s1.max(rep.linf_s3);
    assert!(gas_diff < 5e-3, "gas 200-cell difference {gas_diff:.3e}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "simulator studies took {elapsed:.1}s");
    println!(
        "ACCEPTANCE 09 simulator equivalence [gas+gravity]: PASS (L-inf {gas_diff:.2e}, total {elapsed:.1}s)"
    );
    Ok(())
}

#[test]
fn criterion_10_change_of_variable_round_trip() -> Result<()> {
    for preset in [presets::lin(), presets::smooth(), presets::gas()] {
        let g = gcp(&preset);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let s1 = rng.gen_range(0.0..1.0);
            let s3 = rng.gen_range(0.0..(1.0 - s1));
            let s = Ternary::new_unchecked(s1, s3);
            let p = rng.gen_range(g.window.p_min + PC_SCALE..g.window.p_max - PC_SCALE);
            let p2 = g.oil_from_global(s, p)?;
            let back = g.global_from_oil(s, p2)?;
            worst = worst.max((back - p).abs());
        }
        assert!(worst < 1e-6, "{}: round-trip error {worst:.3e} Pa", preset.name);
        println!(
            "ACCEPTANCE 10 change-of-variable round trip [{}]: PASS (max |error| {worst:.2e} Pa over 1000 points)",
            preset.name
        );
    }
    Ok(())
}

/// Used by criterion 6's Neumann data; kept here so the acceptance file is
/// self-contained.
#[allow(dead_code)]
fn edge_normal(edge: Edge) -> [f64; 2] {
    match edge {
        Edge::WaterOil => [0.0, -1.0],
        Edge::WaterGas => [-0.5 * SQRT3, 0.5],
        Edge::GasOil => [0.5 * SQRT3, 0.5],
    }
}
