//! Deformed Wigner matrices and short-time Dyson Brownian motion.
//!
//! - [`freeconv`]: the deformed semicircle law, classical locations and
//!   matching parameters.
//! - [`ensembles`]: GOE and deformed-GOE sampling with an in-house symmetric
//!   eigensolver.
//! - [`dbm`]: coupled Dyson Brownian motions, their regularized and
//!   short-range variants, and the parabolic difference equation.
//! - [`stats`]: local law, rigidity, level repulsion and gap statistics.

pub mod dbm;
pub mod ensembles;
pub mod freeconv;
pub mod linalg;
pub mod rng;
pub mod stats;
