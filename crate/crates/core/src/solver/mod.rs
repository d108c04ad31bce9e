//! Truncated preconditioned CG and solution metrics.

pub mod block;
pub mod metrics;
pub mod tpcg;

pub use block::{block_inner, block_norm, block_rank, BlockDiagonal, BlockMap, BlockOperator};
pub use metrics::{error_norms, memory_compression, memory_compression_blocks};
pub use tpcg::{tpcg, tpcg_blocks, IterationRecord, SolveReport, SolveStatus, Tolerance, TpcgConfig};
