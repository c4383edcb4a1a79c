//! Two-channel resonance engine.
//!
//! Models a pair of coupled radial Schrödinger channels — an open channel that
//! scatters and a closed channel shifted by a tunable offset λ — and computes
//! the observable consequences: bound states, scattering lengths and phase
//! shifts, the effective scattering length a_eff(λ) with its resonance poles,
//! pole residues, Breit–Wigner parameters of embedded resonances, and fits of
//! the magnetic-field form a(B) = a_∞ + Δ/(B − B_res).
//!
//! Units: ħ²/2m = 1, so energies are inverse lengths squared. All radial
//! functions are reduced, u(r) = r ψ(r) with u(0) = 0, and every pairing is
//! the three-dimensional s-wave one, ⟨f, g⟩ = 4π ∫ f g dr (bilinear — no
//! conjugation — which is the convention that makes outgoing-wave amplitude
//! formulas close).

pub mod cli;
pub mod config;
pub mod coupled;
pub mod error;
pub mod export;
pub mod green;
pub mod grid;
pub mod onebody;
mod roots;
pub mod scan;
pub mod separable;

pub use error::{FeshError, Result};
