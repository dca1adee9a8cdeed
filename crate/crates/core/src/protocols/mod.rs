//! The experiment protocols: rearing in cups, the two-alternative choice
//! test and the self-segregation test.
//!
//! Evaluation steps many independent trials in lockstep so the frames of one
//! step share a single network pass. The forward kernels are batch-invariant,
//! so a trial's outcome does not depend on which other trials share its batch.

mod afc;
mod controller;
mod learner;
mod rearing;
mod segregation;

pub use afc::{afc_layout, afc_world, run_2afc, shoal_layout, AfcLayout, AfcSpec, AfcTrial, SHOAL_SIZE};
pub use controller::{Controller, PolicyController, SeekPoint, Still};
pub use learner::{load_frozen_policy, Learner, UpdateReport};
pub use rearing::{initial_learners, run_rearing, RearingEvent};
pub use segregation::{run_segregation, SegSpec, SegSubject, SegTrial};
