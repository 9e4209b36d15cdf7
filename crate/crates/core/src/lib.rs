pub mod build;
pub mod erlpboost;
pub mod error;
pub mod extform;
pub mod family;
pub mod gen;
pub mod libsvm;
pub mod lp;
pub mod lpfile;
pub mod nzdd;
pub mod sample;
pub mod smooth;
pub mod softmargin;
pub mod system;

pub use error::{Error, Result};
pub use family::SubsetFamily;
pub use nzdd::{Edge, Nzdd, NzddStats, ValidationReport, Violation};
pub use build::{build_zdd, compress, reduce, ElementOrder};
pub use lpfile::{emit_lp, parse_lp};
pub use system::{ConstraintSystem, Direction, Objective, Row, Sense, Var, VarKind};
pub use extform::{extend_binary, extend_integer, feasible_extended, matrix_to_family, ExtendedSystem, IntMode};
pub use lp::{solve_lp, LpSolution, LpStatus};
pub use sample::Sample;
pub use softmargin::{column_generation, MarginSolution, SampleNzdd};
pub use erlpboost::{ErlpOptions, ErlpResult};
pub use gen::{gen_mip, gen_rofk};
pub use libsvm::{parse_libsvm, read_libsvm, write_libsvm};
pub use smooth::{grad_theta, theta};

