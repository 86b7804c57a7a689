//! Simulation of optically detected magnetic resonance on photoexcited
//! triplet states, with pentacene as the reference system.

pub mod constants;
pub mod engine;
pub mod experiments;
pub mod kinetics;
pub mod sensitivity;
pub mod seqlang;
pub mod spin;
