//! From-scratch differentiable network core.
//!
//! Generic over the storage scalar (f32 in training, f64 for verification);
//! all reductions accumulate in f64 either way. No computation graph: the
//! layer menu is fixed and each backward is hand-written and FD-verified.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod persist;
pub mod tensor;

pub use adam::{adam_update, AdamState};
pub use gradcheck::{away_from_kinks, grad_check, grad_check_filtered};
pub use loss::{bce, loss, mse, LossKind};
pub use model::{backward, forward, Cache, LayerSpec, ModelSpec, ModelWeights, NeuroError};
pub use persist::{weights_from_bytes, weights_to_bytes};
pub use tensor::{concat_flat, Tensor};

/// Training-time storage scalar.
pub type Param = f32;
