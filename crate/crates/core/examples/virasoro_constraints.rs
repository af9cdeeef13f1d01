// Build the Virasoro operators on a finite window and check the algebra.

use alhier::virasoro::{build_virasoro, virasoro_commutator, Window};

pub fn run_example() -> bool {
    let window = Window { pmax: 8 };
    let l0 = build_virasoro(0, window).expect("L_0 builds");
    println!("{}", serde_json::to_string_pretty(&l0.to_json()).unwrap());
    let bracket = virasoro_commutator(-1, 1, window).expect("bracket builds");
    println!("[L_-1, L_1]: passed = {}", bracket.passed());
    bracket.passed()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
