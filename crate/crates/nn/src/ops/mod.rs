//! Differentiable operators. Each op is a method on [`Tape`](crate::Tape)
//! that evaluates eagerly and records its backward rule.

pub mod conv;
pub mod elementwise;
pub mod loss;
pub mod norm;
pub mod spectral;
