//! Desk-scale laboratory for random walks on coset spaces X = G/H.
//!
//! The crate is organised around a handful of concrete group models (free
//! groups, free-abelian groups, integer matrix groups) and subgroup oracles
//! with canonical coset keys. On top of those it provides:
//!
//! - exact and floating-point convolution of finitely supported measures on
//!   G and on X, with Shannon/Rényi entropy profiles and rate fitting
//!   ([`walk`]);
//! - Lorentz mixed norms, Herz-norm lower bounds, spectral-radius profiles
//!   and witness falsification for rapid-decay style inequalities
//!   ([`norms`]);
//! - ball/growth series, growth-class fitting and the growth-based
//!   subgroup classification rules ([`growth`]);
//! - Stallings foldings for finitely generated subgroups of free groups
//!   ([`stallings`]);
//! - integer-lattice algorithms (Hermite normal form, primitive completion,
//!   unipotent triangularization) and a registry of named verifiers for the
//!   explicit matrix-group constructions ([`lattice`]).
//!
//! All group arithmetic is exact (big integers); every numeric report labels
//! whether it is an exact value, a one-sided bound, or a fitted estimate.

pub mod coset;
pub mod group;
pub mod growth;
pub mod lattice;
pub mod norms;
pub mod stallings;
pub mod walk;
