//! Compiles simplicial meshes into feedforward networks with ReLU, binary
//! step (BiSU) and identity activations that realize the lowest-order
//! finite element spaces of the de Rham complex exactly: piecewise constants
//! (S0), Raviart-Thomas (RT0), Nédélec (N0), continuous piecewise linears (S1)
//! and Crouzeix-Raviart (CR0), together with boundary traces.
//!
//! The [`verify`] module contains an independent finite element oracle and
//! the exactness, conformity, de Rham, size and convergence checks.

pub mod calculus;
pub mod generate;
pub mod mesh;
pub mod network;
pub mod shapes;
pub mod spaces;
pub mod verify;
