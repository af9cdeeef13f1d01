// Expand the two Lax operators and read off low flows.

use alhier::diffop::residue;
use alhier::lax::{build_l, build_m, lax_flow, lax_golden_check, FlowLabel};

pub fn run_example() -> bool {
    let l = build_l(3);
    let m = build_m(3);
    println!("L coefficient of Λ^0: {}", l.coeff(0));
    println!("M coefficient of Λ^0: {}", m.coeff(0));
    println!("Res L = {}", residue(&l));
    for label in [FlowLabel::Pos(0), FlowLabel::Neg(1)] {
        let f = lax_flow(label).expect("low flows are exact");
        println!("{label}: dP = {}, dQ = {}", f.dp, f.dq);
    }
    lax_golden_check().passed()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
