// The two Poisson brackets and the recursion linking the Hamiltonians.

use alhier::hamiltonian::{hamiltonian_positive, negative_recursion_check, positive_recursion_check, skew_adjointness_check};

pub fn run_example() -> bool {
    for p in -1..=1 {
        println!("H_(2,{p}) = {}", hamiltonian_positive(p));
    }
    let reports = [skew_adjointness_check(), positive_recursion_check(1), negative_recursion_check(1)];
    for r in &reports {
        println!("{}: {} checks, passed = {}", r.suite, r.checks.len(), r.passed());
    }
    reports.iter().all(|r| r.passed())
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
