//! Tensors with reverse-mode gradients, layer primitives and the Adam optimizer.

pub mod adam;
pub mod gradcheck;
pub mod graph;
pub mod params;
pub mod tensor;

pub use adam::Adam;
pub use gradcheck::grad_check;
pub use graph::{Graph, Var};
pub use params::{load_checkpoint, save_checkpoint, Bound, Manifest, Param, ParamId, ParamStore};
pub use tensor::Tensor;
