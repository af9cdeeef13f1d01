// Integrate a base flow on a periodic lattice and watch the conserved quantities.

use alhier::simulator::{conserved_densities, integrate, probe_ratio, Flow, IntegratorConfig, LatticeState};

pub fn run_example() -> f64 {
    let s = LatticeState::smooth(16, 3);
    let cfg = IntegratorConfig { dt: 1e-3, steps: 200, cadence: 50 };
    let run = integrate(&s, Flow::T20, &cfg, &conserved_densities(2, 1)).expect("smooth data stays regular");
    for (label, d) in run.drifts() {
        println!("{label:<10} drift {d:.2e}");
    }
    let ratio = probe_ratio(Flow::T20, Flow::T0m1, 1e-2, &s).expect("probe runs");
    println!("commutator scaling ratio {ratio:.3}");
    run.max_drift()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example() < 1e-8);
}
