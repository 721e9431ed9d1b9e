//! Dynamic maintenance of downwards well-linked superbranch decompositions,
//! their protrusion decompositions, and linear kernels for vertex cover and
//! dominating set under vertex and edge updates.

pub mod automata;
pub mod balancing;
pub mod chips;
pub mod engine;
pub mod graph;
pub mod hypergraph;
pub mod kernelplug;
pub mod par;
pub mod planarity;
pub mod protrusion;
pub mod stream;
pub mod superbranch;
pub mod treewidth;
pub mod verify;
pub mod welllinked;
