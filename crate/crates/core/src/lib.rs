//! Localized spike patterns in population models with strong directed dispersal
//! and a strong Allee effect.
//!
//! The model is a single (or paired) reaction-advection-diffusion equation
//!
//! ```text
//! u_t = ∇·(d∇u − χ u∇A) + f(u),        ∂ν(d∇u − χu∇A) = 0 on ∂Ω,
//! ```
//!
//! where `A` is a fixed environmental signal, `χ` the advection strength, and
//! `f` a bistable (Allee) reaction. For large `χ` the steady states concentrate
//! as Gaussian spikes of width `1/√(hχ)` at the non-degenerate maxima of `A`,
//! with heights selected by a closed-form quadratic. This crate provides:
//!
//! - [`potential`]: signals `A`, their exact jets, maxima, and hypothesis checks;
//! - [`asymptotics`]: spike-height algebra, pattern construction, and the
//!   two-species balancing systems;
//! - [`stability`]: leading-order eigenvalue classification of patterns and
//!   competition equilibria;
//! - [`solver`]: conservative exponential-fitting finite volumes with IMEX
//!   time stepping and a symmetrized eigensolver;
//! - [`harness`]: config-driven experiment runner producing CSV artifacts.

pub mod asymptotics;
pub mod domain;
pub mod harness;
pub mod potential;
pub mod solver;
pub mod stability;
