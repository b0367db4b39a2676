//! Simulator of a processing-in-memory DNA read-mapping accelerator.
//!
//! The crate models a memristive crossbar architecture that runs the whole
//! short-read mapping pipeline in memory: a minimizer index assigns reference
//! segments to crossbars, reads stream into per-crossbar FIFOs, a banded
//! linear Wagner-Fischer pass filters candidate locations, and a banded
//! affine Wagner-Fischer pass with traceback produces the final alignments.
//! Alongside the functional results, every step is costed in MAGIC NOR
//! cycles and bit switches, from which time, energy, and area reports are
//! derived.
//!
//! Modules:
//! - [`genome`]: 2-bit DNA sequences, FASTA/FASTQ parsing, synthetic reads.
//! - [`index`]: minimizer selection, reference indexing, crossbar layout.
//! - [`wf`]: banded linear/affine Wagner-Fischer kernels and full-matrix
//!   oracles used to verify them.
//! - [`cost`]: the MAGIC NOR operation catalog and per-instance cost model.
//! - [`crossbar`]: the per-crossbar state machine (FIFO, filter, align).
//! - [`system`]: end-to-end orchestration plus time/energy/area accounting.
//! - [`report`]: serialization of mapping tables, stats, and manifests.

pub mod cost;
pub mod crossbar;
pub mod exec;
pub mod genome;
pub mod index;
pub mod report;
pub mod system;
pub mod wf;
