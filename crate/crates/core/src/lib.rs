//! Fast discrete Laplace transforms `f_i = sum_j fhat_j exp(-y_i xi_j)`,
//! their generalization to asymptotically smooth kernels, and evaluation of
//! generalized polynomials in the unit disk, each with a prescribed accuracy
//! `||f - ftilde||_inf <= eps ||fhat||_1`.

mod blocks;
pub mod diskeval;
pub mod error;
pub mod fourier;
pub mod interp;
pub mod kernels;
pub mod laplace;
pub mod linalg;
pub mod metrics;
pub mod partition;
pub mod testdata;

pub use diskeval::{
    disk_apply, disk_apply_adjoint, hadamard_block_identity_check, make_disk_plan, naive_disk_apply,
    naive_disk_apply_adjoint, polar_split, DiskPlan,
};
pub use error::{Error, Result};
pub use fourier::{make_backend, BackendKind, FourierBackend};
pub use interp::{chebyshev_points, make_basis, Interval};
pub use kernels::{bessel_half_kernel, exp_kernel, BesselHalfKernel, ExpKernel, Kernel};
pub use laplace::{make_plan, naive_apply, naive_apply_adjoint, LaplacePlan, Variant};
pub use linalg::{ComplexMatrix, RealMatrix};
pub use metrics::relative_error;
pub use partition::{interpolation_order, make_partition, DyadicPartition, PartitionMode};
pub use testdata::{gen_testdata, TestData};

pub use num_complex::Complex64;
