//! Controllability toolkit for right-invariant bilinear systems on SU(1,1).
//!
//! The library decides controllability of systems dX/dt = (A + Σ u_l B_l)·X
//! on the pseudo-unitary group SU(1,1), produces constructive certificates
//! for both outcomes, simulates trajectories exactly on the group, and plans
//! piecewise-constant steering controls. Maps into SO(2,1) and SL(2,R) and a
//! truncated discrete-series representation connect the 2x2 picture to the
//! three-dimensional hyperboloids and to Fock-space transitions.

pub mod algebra;
pub mod canonical;
pub mod controllability;
pub mod error;
pub mod morphisms;
pub mod representation;
pub mod simulator;
pub mod steering;

pub use error::Error;
