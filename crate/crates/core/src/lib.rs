//! Desk-scale workbench for studying what meta-learning imprints on
//! recurrent networks: exact continuation oracles for nine formal languages,
//! a description-length-graded grammar zoo, from-scratch LSTM/GRU language
//! models with backprop-through-time, first-order MAML, the SGD-then-Adam
//! downstream schedule, and continuation-based metrics (P_Val, Better-Than,
//! F1), plus an experiment grid runner.

pub mod downstream;
pub mod exec;
pub mod formal_langs;
pub mod grammar_zoo;
pub mod meta_train;
pub mod neural;
pub mod rngs;
pub mod vocab;
