//! Every example must run and report success.

mod lax_operator {
    include!("../examples/lax_operator.rs");
}
mod tau_symmetry {
    include!("../examples/tau_symmetry.rs");
}
mod bihamiltonian {
    include!("../examples/bihamiltonian.rs");
}
mod theta_functions {
    include!("../examples/theta_functions.rs");
}
mod virasoro_constraints {
    include!("../examples/virasoro_constraints.rs");
}
mod backlund_transform {
    include!("../examples/backlund_transform.rs");
}
mod odd_extension {
    include!("../examples/odd_extension.rs");
}
mod lattice_simulation {
    include!("../examples/lattice_simulation.rs");
}
mod command_line {
    include!("../examples/command_line.rs");
}

#[test]
fn lax_operator_example() {
    assert!(lax_operator::run_example());
}

#[test]
fn tau_symmetry_example() {
    assert!(tau_symmetry::run_example());
}

#[test]
fn bihamiltonian_example() {
    assert!(bihamiltonian::run_example());
}

#[test]
fn theta_functions_example() {
    assert!(theta_functions::run_example());
}

#[test]
fn virasoro_constraints_example() {
    assert!(virasoro_constraints::run_example());
}

#[test]
fn backlund_transform_example() {
    assert!(backlund_transform::run_example());
}

#[test]
fn odd_extension_example() {
    assert!(odd_extension::run_example());
}

#[test]
fn lattice_simulation_example() {
    assert!(lattice_simulation::run_example() < 1e-8);
}

#[test]
fn command_line_example() {
    assert_eq!(command_line::run_example(), 0);
}
