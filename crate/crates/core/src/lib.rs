//! Sparse tensor kernel benchmark suite.
//!
//! Coordinate (COO) and hierarchical coordinate (HiCOO, gHiCOO, sCOO,
//! sHiCOO) storage, five reference kernels (element-wise, tensor-scalar,
//! tensor-times-vector, tensor-times-matrix, MTTKRP), synthetic tensor
//! generators, a Roofline performance model and a benchmark harness.

pub mod analysis;
pub mod error;
pub mod generators;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use harness::{bench, BenchConfig, BenchSuiteResult, Precision, TensorSource};
pub use kernels::{
    DenseMatrix, DenseTensor, DenseVector, ElementwiseOp, Executor, KernelId, KernelPlan,
    MttkrpStrategy, ToDense, TsOp,
};
pub use scalar::Scalar;
pub use tensor::{
    build_fiber_layout, CooTensor, FiberLayout, GHicooTensor, HicooTensor, ModeIndex,
    SemiSparseTensor, SortState, SparseIndex, StorageBytes, Validate, Violation, ViolationKind,
};
