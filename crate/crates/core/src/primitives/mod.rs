//! Lattice construction, boundary-value motion-primitive generation,
//! endpoint verification and the persisted primitive library.

pub mod bvp;
pub mod lattice;
pub mod library;
mod qp;

pub use bvp::{solve_primitive_bvp, BvpConfig, BvpConstraints, BvpSolution, RunningCost};
pub use lattice::{build_lattice, Connectivity, LatticeInputs, LatticeSpec, Node};
pub use library::{build_library, verify_primitive, GenerationRecord, MotionPrimitive, PrimitiveLibrary};
