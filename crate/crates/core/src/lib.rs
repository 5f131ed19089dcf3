//! Exciton dimer dynamics with one exactly treated vibrational mode.
//!
//! A symmetric two-site exciton (tunnelling `J`) couples strongly to a single
//! oscillator (frequency `Ω`, coupling `g`) and weakly to a Markovian bosonic
//! bath described by a spectral density. The TLS–oscillator Hamiltonian is
//! split into two parity blocks, the bath enters through a secular
//! Born–Markov generator built in the joint eigenbasis, and the adiabatic
//! (displaced-oscillator) picture explains the resulting frequency
//! renormalisation.

pub mod adiabatic;
pub mod analysis;
pub mod basis;
pub mod bath;
pub mod dissipator;
pub mod dynamics;
pub mod integrator;
pub mod model;
pub mod scenario;
pub mod runner;
pub mod units;
