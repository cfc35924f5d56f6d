//! Grasp closure on primitive objects and outcome classification.

pub mod classify;
pub mod shapes;
pub mod sim;

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HandPose;
use crate::types::{GraspMode, HandConfig};

pub use classify::{classify_outcome, is_caged, pinch_stable, GraspClass, DEFAULT_FRICTION};
pub use shapes::{GraspObject, Profile, Section};
pub use sim::{
    close_grasp, close_grasp_with, find_contacts, grasp_table_z, ClearanceProbe, Contact,
    GraspOutcome, Link, SimOptions, SimStep, Termination,
};

/// A closure experiment: an object resting on the table under the hand.
///
/// Object coordinates are table coordinates: `z = 0` on the table surface,
/// `x` and `y` measured from the palm axis, same axes as the hand frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspScenario {
    /// Hand file, relative to the scenario file. The default hand if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<String>,
    pub object: GraspObject,
    pub mode: GraspMode,
    /// Placement offset `(dx, dy, dz)` from the nominal position, mm.
    #[serde(default)]
    pub offset: [f64; 3],
    #[serde(default)]
    pub options: SimOptions,
}

impl GraspScenario {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Object in hand coordinates for a hand configured in `mode`.
    pub fn placed_object(&self, hand: &HandConfig, mode: GraspMode) -> Result<GraspObject> {
        let table_z = match self.options.table_z {
            Some(z) => z,
            None => sim::grasp_table_z(hand, mode)?,
        };
        let [dx, dy, dz] = self.offset;
        Ok(self.object.translated(Vector3::new(dx, dy, table_z + dz)))
    }

    /// Run the closure from the rest pose, optionally overriding the mode.
    pub fn run(&self, hand: &HandConfig, mode: Option<GraspMode>) -> Result<GraspOutcome> {
        let mode = mode.unwrap_or(self.mode);
        let object = self.placed_object(hand, mode)?;
        let pose = HandPose::rest(hand.clone())?;
        close_grasp_with(&pose, &object, mode, &self.options)
    }
}
