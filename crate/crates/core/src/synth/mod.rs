//! Mixed-sensitivity weights, augmented plant and H-infinity synthesis.

mod hinf;
mod weights;

pub use hinf::{hinfsyn, hinfsyn_with, is_feasible, Regularization, SynthOptions, SynthesisResult};
pub use weights::{
    build_augmented, check_weight_constraint, realize_weights, FirstOrderWeight, WeightCheck, WeightSet,
};
