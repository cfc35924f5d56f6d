//! Hand-design file: JSON with an explicit unit on every dimensional field.
//!
//! The canonical form written by [`save_hand`] uses mm, rad and N/mm. Files
//! may use cm/m, deg and N/m; they are converted on load. The schema lives in
//! `hand.schema.json` at the repository root.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    FingerDesign, FingerRole, FingerType, HandConfig, JointDesign, JointLimits, LockState,
};

pub const HAND_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm")]
    Millimetre,
    #[serde(rename = "cm")]
    Centimetre,
    #[serde(rename = "m")]
    Metre,
    #[serde(rename = "rad")]
    Radian,
    #[serde(rename = "deg")]
    Degree,
    #[serde(rename = "N/mm")]
    NewtonPerMillimetre,
    #[serde(rename = "N/m")]
    NewtonPerMetre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Angle,
    Stiffness,
}

impl Unit {
    fn dimension(self) -> Dimension {
        match self {
            Unit::Millimetre | Unit::Centimetre | Unit::Metre => Dimension::Length,
            Unit::Radian | Unit::Degree => Dimension::Angle,
            Unit::NewtonPerMillimetre | Unit::NewtonPerMetre => Dimension::Stiffness,
        }
    }

    fn to_internal(self, v: f64) -> f64 {
        match self {
            Unit::Millimetre | Unit::Radian | Unit::NewtonPerMillimetre => v,
            Unit::Centimetre => v * 10.0,
            Unit::Metre => v * 1000.0,
            Unit::Degree => v.to_radians(),
            Unit::NewtonPerMetre => v / 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    fn mm(value: f64) -> Self {
        Self {
            value,
            unit: Unit::Millimetre,
        }
    }

    fn rad(value: f64) -> Self {
        Self {
            value,
            unit: Unit::Radian,
        }
    }

    fn resolve(&self, field: &str, dim: Dimension) -> Result<f64> {
        if self.unit.dimension() != dim {
            return Err(Error::invalid(format!(
                "{field}: unit {:?} is not a {:?} unit",
                self.unit, dim
            )));
        }
        Ok(self.unit.to_internal(self.value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    tendon_offset_prev: Quantity,
    tendon_offset_next: Quantity,
    tendon_offset_angle: Quantity,
    elastic_offset: Quantity,
    cord_rest_angle: Quantity,
    lower_limit: Quantity,
    upper_limit: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerFile {
    role: FingerRole,
    finger_type: FingerType,
    proximal_length: Quantity,
    distal_length: Quantity,
    width: Quantity,
    thickness: Quantity,
    spring_constant: Quantity,
    joints: [JointFile; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandFile {
    schema_version: u32,
    palm_diameter: Quantity,
    finger_rest_splay: Quantity,
    palm_rotation: Quantity,
    phi_max: Quantity,
    lateral_offset: Quantity,
    lock_state: LockState,
    lock_compliance: Quantity,
    muscle_pairing: [[FingerRole; 2]; 2],
    fingers: Vec<FingerFile>,
}

impl JointFile {
    fn from_design(j: &JointDesign) -> Self {
        Self {
            tendon_offset_prev: Quantity::mm(j.tendon_offset_prev),
            tendon_offset_next: Quantity::mm(j.tendon_offset_next),
            tendon_offset_angle: Quantity::rad(j.tendon_offset_angle),
            elastic_offset: Quantity::mm(j.elastic_offset),
            cord_rest_angle: Quantity::rad(j.cord_rest_angle),
            lower_limit: Quantity::rad(j.limits.lo),
            upper_limit: Quantity::rad(j.limits.hi),
        }
    }

    fn to_design(&self, at: &str) -> Result<JointDesign> {
        use Dimension::*;
        let f = |q: &Quantity, name: &str, d| q.resolve(&format!("{at}.{name}"), d);
        Ok(JointDesign {
            tendon_offset_prev: f(&self.tendon_offset_prev, "tendon_offset_prev", Length)?,
            tendon_offset_next: f(&self.tendon_offset_next, "tendon_offset_next", Length)?,
            tendon_offset_angle: f(&self.tendon_offset_angle, "tendon_offset_angle", Angle)?,
            elastic_offset: f(&self.elastic_offset, "elastic_offset", Length)?,
            cord_rest_angle: f(&self.cord_rest_angle, "cord_rest_angle", Angle)?,
            limits: JointLimits::new(
                f(&self.lower_limit, "lower_limit", Angle)?,
                f(&self.upper_limit, "upper_limit", Angle)?,
            ),
        })
    }
}

impl HandFile {
    fn from_config(h: &HandConfig) -> Self {
        let fingers = FingerRole::ALL
            .iter()
            .map(|&role| {
                let f = h.finger(role);
                FingerFile {
                    role,
                    finger_type: f.finger_type,
                    proximal_length: Quantity::mm(f.proximal_length),
                    distal_length: Quantity::mm(f.distal_length),
                    width: Quantity::mm(f.width),
                    thickness: Quantity::mm(f.thickness),
                    spring_constant: Quantity {
                        value: f.spring_constant,
                        unit: Unit::NewtonPerMillimetre,
                    },
                    joints: [
                        JointFile::from_design(&f.joints[0]),
                        JointFile::from_design(&f.joints[1]),
                    ],
                }
            })
            .collect();
        Self {
            schema_version: HAND_SCHEMA_VERSION,
            palm_diameter: Quantity::mm(h.palm_diameter),
            finger_rest_splay: Quantity::rad(h.finger_rest_splay),
            palm_rotation: Quantity::rad(h.palm_rotation),
            phi_max: Quantity::rad(h.phi_max),
            lateral_offset: Quantity::mm(h.lateral_offset),
            lock_state: h.lock_state,
            lock_compliance: Quantity::rad(h.lock_compliance),
            muscle_pairing: h.muscle_pairing,
            fingers,
        }
    }

    fn to_config(&self) -> Result<HandConfig> {
        use Dimension::*;
        if self.schema_version != HAND_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported hand schema_version {} (expected {HAND_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.fingers.len() != 4 {
            return Err(Error::invalid(format!(
                "expected 4 fingers, found {}",
                self.fingers.len()
            )));
        }
        let mut slots: [Option<FingerDesign>; 4] = Default::default();
        for ff in &self.fingers {
            let at = format!("fingers.{}", ff.role);
            let slot = &mut slots[ff.role.index()];
            if slot.is_some() {
                return Err(Error::invalid(format!(
                    "finger role {} appears twice",
                    ff.role
                )));
            }
            *slot = Some(FingerDesign {
                finger_type: ff.finger_type,
                proximal_length: ff
                    .proximal_length
                    .resolve(&format!("{at}.proximal_length"), Length)?,
                distal_length: ff
                    .distal_length
                    .resolve(&format!("{at}.distal_length"), Length)?,
                width: ff.width.resolve(&format!("{at}.width"), Length)?,
                thickness: ff.thickness.resolve(&format!("{at}.thickness"), Length)?,
                spring_constant: ff
                    .spring_constant
                    .resolve(&format!("{at}.spring_constant"), Stiffness)?,
                joints: [
                    ff.joints[0].to_design(&format!("{at}.joints[0]"))?,
                    ff.joints[1].to_design(&format!("{at}.joints[1]"))?,
                ],
            });
        }
        let [a, b, c, d] = slots;
        let fingers = [
            a.expect("four distinct roles"),
            b.expect("four distinct roles"),
            c.expect("four distinct roles"),
            d.expect("four distinct roles"),
        ];
        let hand = HandConfig {
            fingers,
            palm_diameter: self.palm_diameter.resolve("palm_diameter", Length)?,
            finger_rest_splay: self.finger_rest_splay.resolve("finger_rest_splay", Angle)?,
            palm_rotation: self.palm_rotation.resolve("palm_rotation", Angle)?,
            phi_max: self.phi_max.resolve("phi_max", Angle)?,
            lateral_offset: self.lateral_offset.resolve("lateral_offset", Length)?,
            lock_state: self.lock_state,
            lock_compliance: self.lock_compliance.resolve("lock_compliance", Angle)?,
            muscle_pairing: self.muscle_pairing,
        };
        hand.validate()?;
        Ok(hand)
    }
}

/// Parse and validate a hand-design document.
pub fn parse_hand(text: &str) -> Result<HandConfig> {
    let file: HandFile = serde_json::from_str(text)?;
    file.to_config()
}

/// Canonical JSON text for a hand (mm / rad / N/mm, two-space indent, LF).
pub fn hand_to_string(hand: &HandConfig) -> String {
    let mut s = serde_json::to_string_pretty(&HandFile::from_config(hand))
        .expect("hand file serialisation is infallible");
    s.push('\n');
    s
}

pub fn load_hand(path: impl AsRef<Path>) -> Result<HandConfig> {
    let text = fs::read_to_string(path)?;
    parse_hand(&text)
}

pub fn save_hand(hand: &HandConfig, path: impl AsRef<Path>) -> Result<()> {
    hand.validate()?;
    fs::write(path, hand_to_string(hand))?;
    Ok(())
}
