// Theta functions of the Frobenius manifold by recursion and by residue.

use alhier::frobenius::{cross_method_check, theta_by_residue, Label, ThetaTable};

pub fn run_example() -> bool {
    let mut table = ThetaTable::new();
    let report = table.data().structure_checks();
    for (label, theta) in table.slice(0, -2, 2).expect("alpha 0 levels exist") {
        println!("theta({},{}) = {theta}", label.alpha, label.k);
    }
    println!("residue route for (2,1): {}", theta_by_residue(2, 1).expect("residue defined"));
    let labels = [Label::new(1, 1).unwrap(), Label::new(2, 2).unwrap(), Label::new(0, -1).unwrap()];
    let cross = cross_method_check(&mut table, &labels).expect("both routes defined");
    report.passed() && cross.passed()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
