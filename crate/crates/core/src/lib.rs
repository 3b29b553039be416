//! Laboratory for long cycles in percolated hypercubes.
//!
//! The crate builds the constructive pipeline (layer covers, DFS path
//! merging, the merge-or-grow forest, subcube stitching) on top of seeded
//! counter-based randomness, and ships independent verification oracles
//! (exact shadows, brute-force longest cycles, Monte Carlo path checks)
//! so every object a run emits can be checked without trusting the
//! producer.

pub mod cube;
pub mod dfs_merge;
pub mod layer_cover;
pub mod mog;
pub mod oracle;
pub mod params;
pub mod percolation;
pub mod stitch;
