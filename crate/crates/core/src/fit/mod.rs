//! Synthetic teachers, training data and ALS fitting of tensor-network
//! students.

mod als;
mod data;
mod metrics;
mod teacher;

pub use als::{fit_student, FitConfig, FitReport, TIKHONOV_SCALE};
pub use data::{
    build_training_set, build_training_set_multi, structured_pair, uniform_instances, SamplingConfig,
    TrainingSet, UNIFORM_STD,
};
pub use metrics::{cosine, eval_quality, mse, r2, OrderQuality};
pub use teacher::{gen_cp_teacher, gen_tree_teacher, output_std, random_network, CpTeacher, SCALE_SAMPLES};
