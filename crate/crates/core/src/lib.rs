//! Synthesis, augmentation and scoring of humanoid-object interaction clips.

pub mod augment;
pub mod ballistic;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod grasp;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod reward;
pub mod rng;
pub mod shape;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
pub use geometry::{Pose, Quat, Twist, Vec3};
