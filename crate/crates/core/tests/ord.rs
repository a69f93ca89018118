use tdflow::field::GlobalCapillaryField;
use tdflow::gcp::{GcpContext, GcpTolerances};
use tdflow::presets;
use tdflow::sim1d::{run_compare, BcEnd, RockModel, SimConfig};
use tdflow::ternary::Ternary;

#[test]
fn ord() {
    let lin = presets::lin();
    let g = GcpContext::new(lin.flow_context(), lin.fluids.window, GcpTolerances::default());
    let field = GlobalCapillaryField::build(&g, 33).unwrap();
    let flow = lin.flow_context();
    let s_in = Ternary::new_unchecked(0.4, 0.3);
    let ramp = |x: f64| { let u = (x / 0.3f64).min(1.0); 1.0 - u*u*(3.0-2.0*u) };
    for n in [800usize] {
        let dx = 1.0 / n as f64;
        let s1: Vec<f64> = (0..n).map(|i| 0.15 + 0.25*ramp((i as f64+0.5)*dx)).collect();
        let s3: Vec<f64> = (0..n).map(|i| 0.1 + 0.2*ramp((i as f64+0.5)*dx)).collect();
        let cfg = SimConfig::basic(n, 1.0, 1.0*(200.0/n as f64), 320.0,
            BcEnd::Pressure { p2: 1.35e7, s: Some(s_in) },
            BcEnd::Pressure { p2: 1.1e7, s: None });
        let mut cfg = cfg; cfg.max_halvings = 0;
        let rock = RockModel::uniform(n, 1e-10, 0.2, 0.0, 1e7, 0.0, 0.0, cfg.dx());
        let r = run_compare(&flow, &field, &rock, &cfg, (s1, s3), 1.2e7);
        if let Err(e) = &r { println!("ERR: {e}"); return; }
        let (rep, ra, rb) = r.unwrap();
        println!("n={n}: linf={:.3e} l1={:.3e} steps A={} B={}", rep.linf_s1.max(rep.linf_s3), rep.l1_s1.max(rep.l1_s3), rep.steps_oil, rep.steps_global);
        // difference profile, every 10 cells
        let prof: Vec<String> = (0..n).step_by(10).map(|i| format!("{:+.1e}", ra.state.s1[i]-rb.state.s1[i])).collect();
        println!("d_s1: {}", prof.join(" "));
        let prof: Vec<String> = (0..n).step_by(10).map(|i| format!("{:.3}", ra.state.s1[i])).collect();
        println!("s1_A: {}", prof.join(" "));
    }
}
