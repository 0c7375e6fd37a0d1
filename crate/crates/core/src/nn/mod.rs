//! Reverse-mode autodiff over small MLPs plus the optimizer machinery used by
//! every trainable model: LeakyReLU activations, inverted dropout, Xavier
//! initialization, ADAM with bias correction, and plateau learning-rate decay.

mod adam;
mod io;
mod mlp;
mod plateau;

pub use adam::AdamState;
pub use io::{load_mlp, save_mlp};
pub use mlp::{backward, forward, init_xavier_uniform, Gradients, Layer, MlpParams, MlpSpec, Tape};
pub use plateau::PlateauScheduler;
