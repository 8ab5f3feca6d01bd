//! Reverse-mode gradients, Adam with plateau decay, the relative-l2 loss
//! and the transform-fitting experiment.

mod adam;
mod backward;
mod loss;
mod schedule;
mod transform;

pub use adam::Adam;
pub use backward::{backward, backward_into, backward_with_input, GradientBuffers};
pub use loss::{loss_rel_l2, rel_l2_with_grad};
pub use schedule::Plateau;
pub use transform::{batch_gradient, train_transform, transform_pool, LossHistory, StepRecord, TransformTraining};
