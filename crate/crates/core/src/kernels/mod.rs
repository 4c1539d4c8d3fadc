//! The five sparse kernels, their per-iteration bodies and the seven
//! supported kernel pairs.

mod bodies;
mod combo;
pub(crate) mod shared;
mod state;

pub use bodies::{
    dscal_csc, dscal_csr, spic0, spilu0, spmv_csc, spmv_csr, sptrsv_csc, sptrsv_csr,
    sptrsv_unit_lower, RowIndex,
};
pub use combo::{ComboSpec, KernelKind, KernelTag, COMBOS};
pub use shared::{SharedVec, ValueSource};
pub(crate) use state::Binding;
pub use state::{default_rhs, KernelState};
