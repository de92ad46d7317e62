//! Simulation of heralded controlled-phase gates between qutrits held in one
//! resonator, mediated by a quartit in a second resonator.
//!
//! Layers, bottom up: [`qspace`] (sparse operators and tensor-product
//! bookkeeping), [`model`] (Hamiltonian, jump operators, states),
//! [`lindblad`] (master-equation integration and heralding), [`effective`]
//! (adiabatically eliminated rates), [`gates`] (Toffoli-like and CZ
//! protocols) and [`runner`] (configs, sweeps, CSV output).

pub mod effective;
pub mod gates;
pub mod lindblad;
pub mod model;
pub mod qspace;
pub mod registry;
pub mod runner;
