// Pairwise tau symmetry and commutativity of the low flows.

use alhier::lax::tau_symmetry_suite;

pub fn run_example() -> bool {
    let report = tau_symmetry_suite(1, 1).expect("suite builds");
    for c in &report.checks {
        println!("{:<40} {}", c.name, if c.passed { "ok" } else { "FAIL" });
    }
    report.passed()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
