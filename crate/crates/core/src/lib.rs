//! Exact and numerical verification engine for the extended Ablowitz-Ladik
//! hierarchy and the Principal Hierarchy of its generalized Frobenius manifold.

pub mod backlund;
pub mod cli;
pub mod diffop;
pub mod frobenius;
pub mod hamiltonian;
pub mod lax;
pub mod report;
pub mod ring;
pub mod simulator;
pub mod superext;
pub mod virasoro;
