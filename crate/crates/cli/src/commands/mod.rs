pub mod ablate;
pub mod bench;
pub mod eval;
pub mod gen_dataset;
pub mod phase_match;
pub mod predict;
pub mod simulate;
pub mod spectrum;
pub mod train;
