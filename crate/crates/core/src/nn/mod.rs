//! Dense ReLU network engine: initialization, forward and reverse passes,
//! losses and optimizers.

mod backward;
mod forward;
mod loss;
mod network;
mod optim;
mod spec;

pub use backward::{backward, Gradients};
pub use forward::{forward, mean_pool, predict_classes, Batch, ForwardTrace, PAD_INDEX};
pub use loss::{cross_entropy, mse, softmax};
pub use network::{init_network, Dense, Network};
pub use optim::{OptimizerKind, OptimizerSettings, OptimizerState};
pub use spec::{Activation, EmbeddingSpec, NetworkSpec, Pooling};
