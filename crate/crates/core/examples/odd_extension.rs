// Odd variables, the odd flows and the odd Lax pair.

use alhier::superext::{odd_flow_commutativity_check, odd_lax_check, verify_ab, SuperElem};

pub fn run_example() -> bool {
    let s = SuperElem::sigma(2, 0, 1);
    println!("σ_(2,0)^+ squared = {}", s.mul(&s));
    let ab = verify_ab(3).expect("A and B build");
    let anti = odd_flow_commutativity_check(0, 1);
    let lax = odd_lax_check(2).expect("odd Lax pair builds");
    for r in [&ab, &anti, &lax] {
        println!("{}: {} checks, passed = {}", r.suite, r.checks.len(), r.passed());
    }
    ab.passed() && anti.passed() && lax.passed()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
