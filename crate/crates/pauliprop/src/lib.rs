//! Sparse Heisenberg-picture propagation of Pauli observables through noisy
//! layered circuits, with dense reference implementations, operator-spread
//! network analysis, and spectral statistics of the resulting transfer maps.

pub mod circuits;
pub mod dense;
pub mod network;
pub mod propagation;
pub mod stats;
pub mod gates;
pub mod pauli;
