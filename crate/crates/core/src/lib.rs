//! Decision-level reachability prediction for a fruit-harvesting manipulator.
//!
//! The pipeline runs detection records through depth lookup, pinhole
//! back-projection and the camera-to-arm transform, labels the resulting points
//! with a kinematic feasibility oracle, and learns reachability with a random
//! forest trained under pool-based active learning.

pub mod active;
pub mod config;
pub mod dataset;
pub mod error;
pub mod features;
pub mod forest;
pub mod kinematics;
pub mod metrics;
pub mod perception;
pub mod report;

pub use error::{Error, Result};

/// Binary reachability label. Reachable is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Unreachable = 0,
    Reachable = 1,
}

impl Label {
    pub fn from_bool(reachable: bool) -> Self {
        if reachable {
            Label::Reachable
        } else {
            Label::Unreachable
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Unreachable),
            1 => Some(Label::Reachable),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Unreachable => Label::Reachable,
            Label::Reachable => Label::Unreachable,
        }
    }
}
