//! Plain binary TLBO and GWO, used as comparison arms for the hybrid.
//!
//! Both search over continuous positions and evaluate the sigmoid-binarized
//! mask; positions persist across iterations.

mod gwo;
mod tlbo;

pub use gwo::{decay_a, run_gwo, wolf_update, wolf_update_with, GwoConfig, GwoState};
pub use tlbo::{
    learner_candidate, learner_phase, run_tlbo, teacher_candidate, teacher_phase, LearnerRule,
    TlboConfig,
};
