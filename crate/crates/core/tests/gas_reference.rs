use iestrack_core::gas::{self, GasInput};
use iestrack_core::scenario::Scenario;

fn reference_input(s: &Scenario) -> GasInput {
    let net = &s.network;
    let source_densities: Vec<f64> = net
        .source_ids()
        .iter()
        .map(|id| net.gas_nodes[id - 1].source_density().unwrap())
        .collect();
    let draws: Vec<f64> = net
        .load_ids()
        .iter()
        .map(|id| {
            if let Some(g) = net.gtu_at(*id) {
                let k = net.gtu_links.iter().position(|x| x.gas_node == *id).unwrap();
                s.gtu_powers[k] / g.efficiency
            } else {
                s.mean_loads.get(id).copied().unwrap_or(0.0)
            }
        })
        .collect();
    GasInput { source_densities, draws }
}

#[test]
fn reference_steady_state_and_drift() {
    let s = Scenario::reference();
    let sys = gas::build_step_system(&s.network, s.run.dt_seconds).unwrap();
    assert_eq!(sys.n_gas_states(), 118);
    let u = reference_input(&s);
    let x0 = gas::solve_steady_state(&sys, &u).unwrap();
    // densities positive and plausible
    for k in 0..40 {
        assert!(x0[k] > 20.0 && x0[k] < 80.0, "rho[{k}] = {}", x0[k]);
    }
    // satellite ratio rows
    let rho2 = x0[1];
    let rho40 = x0[39];
    assert!((rho40 - 1.2 * rho2).abs() < 1e-9, "rho40 {rho40} vs 1.2*rho2 {}", 1.2*rho2);
    // 288 constant-boundary steps drift
    let mut x = x0.clone();
    for _ in 0..288 {
        x = gas::gas_predict(&sys, &x, &u).unwrap();
    }
    let drift = (&x - &x0).amax();
    println!("drift after 288 steps: {drift:.3e}");
    assert!(drift < 1e-6);
}
