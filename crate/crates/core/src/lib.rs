//! Cavity-enhanced Raman cooling of molecules.
//!
//! Rate-equation model of the ro-vibrational populations and the
//! translational energy of a molecule driven by a far-detuned laser inside a
//! high-finesse resonator, plus a search for laser schedules that pump the
//! population into the ground states of both rotational ladders.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod combspec;
pub mod config;
pub mod dynamics;
pub mod molstruct;
pub mod rates;
pub mod scheduler;
pub mod units;
