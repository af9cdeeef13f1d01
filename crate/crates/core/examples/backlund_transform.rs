// The Bäcklund map symbolically and on a numerical lattice.

use alhier::backlund::{apply_backlund, backlund, backlund_frechet_invariance_check, backlund_identity_check};

pub fn run_example() -> bool {
    let b = backlund();
    for (name, f) in [("P~", &b.pt), ("Q~", &b.qt)] {
        let den: Vec<String> = f.den.iter().map(|(d, k)| format!("({d})^{k}")).collect();
        println!("{name} = ({}) / {}", f.num, den.join(" "));
    }
    let p = [1.0, 0.9, 1.1, 1.0, 0.95];
    let q = [2.5, 2.4, 2.6, 2.5, 2.55];
    let (pt, qt) = apply_backlund(&p, &q).expect("no poles");
    println!("P~ = {pt:?}\nQ~ = {qt:?}");
    backlund_identity_check().passed() && backlund_frechet_invariance_check().passed()
}

#[allow(dead_code)]
fn main() {
    assert!(run_example());
}
