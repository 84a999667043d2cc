//! Demonstrations built on universal couplings: transport-cost sketches,
//! robust transport plans, online transport schemes and rounding of
//! fractional metric labelings.

pub mod labeling;
pub mod online;
pub mod robust;
pub mod sketch;

pub use labeling::{round_labels, rounding_moments, LabelingInstance, Rounding};
pub use online::{
    circle_online_instance, greedy_closed_form, online_simulate, CircleVariant, OnlineResult,
    Scheme, Task, TaskSequence,
};
pub use robust::{plan_product_distance, robust_demo_space, robust_plan};
pub use sketch::{make_sketch, sketch_estimate, Sketch};
