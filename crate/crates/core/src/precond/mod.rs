//! Fast-diagonalization preconditioners.

pub mod eigen;
pub mod expsum;
pub mod fd;

pub use eigen::{ApproxEigen1D, TransformMode};
pub use expsum::{build_exp_sum, ExpSum};
pub use fd::{sandwich_diagonal, ExactFd, FdDiagnostics, LowRankFd, Preconditioner, SharedPreconditioner};
