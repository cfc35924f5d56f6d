//! Shared domain types: finger designs, joint states and the four-finger hand.
//!
//! Angles are radians and lengths millimetres everywhere in this crate. The
//! hand-design file (see [`crate::config`]) is the only place other units are
//! accepted.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FingerType {
    A,
    B,
}

/// Position of a finger on the palm. A fingers sit on the static palm
/// section, B fingers on the rotating one. Left/right name the side of the
/// sagittal plane the finger joins when the hand locks into precision mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerRole {
    ALeft,
    BLeft,
    ARight,
    BRight,
}

impl FingerRole {
    pub const ALL: [FingerRole; 4] = [
        FingerRole::ALeft,
        FingerRole::BLeft,
        FingerRole::ARight,
        FingerRole::BRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn finger_type(self) -> FingerType {
        match self {
            FingerRole::ALeft | FingerRole::ARight => FingerType::A,
            FingerRole::BLeft | FingerRole::BRight => FingerType::B,
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, FingerRole::ALeft | FingerRole::BLeft)
    }

    /// The laterally adjacent finger this one locks against.
    pub fn lock_partner(self) -> FingerRole {
        match self {
            FingerRole::ALeft => FingerRole::BLeft,
            FingerRole::BLeft => FingerRole::ALeft,
            FingerRole::ARight => FingerRole::BRight,
            FingerRole::BRight => FingerRole::ARight,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FingerRole::ALeft => "a_left",
            FingerRole::BLeft => "b_left",
            FingerRole::ARight => "a_right",
            FingerRole::BRight => "b_right",
        }
    }
}

impl fmt::Display for FingerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Proximal,
    Distal,
}

impl Joint {
    pub const BOTH: [Joint; 2] = [Joint::Proximal, Joint::Distal];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn number(self) -> u8 {
        self as u8 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lo: f64,
    pub hi: f64,
}

impl JointLimits {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.lo && q <= self.hi
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Routing and elastic parameters of one flexion joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDesign {
    /// Perpendicular offset of the tendon routing point on the preceding link, mm.
    pub tendon_offset_prev: f64,
    /// Perpendicular offset of the tendon routing point on the following link, mm.
    pub tendon_offset_next: f64,
    /// Angle between the two routing offsets at zero joint angle, rad.
    pub tendon_offset_angle: f64,
    /// Routing offset of the dorsal elastic cord, identical on both links, mm.
    pub elastic_offset: f64,
    /// Joint angle at which the elastic cord is unstretched, rad.
    pub cord_rest_angle: f64,
    pub limits: JointLimits,
}

impl JointDesign {
    fn validate(&self, what: &str) -> Result<()> {
        let all = [
            self.tendon_offset_prev,
            self.tendon_offset_next,
            self.tendon_offset_angle,
            self.elastic_offset,
            self.cord_rest_angle,
            self.limits.lo,
            self.limits.hi,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "{what}: all parameters must be finite"
            )));
        }
        if self.tendon_offset_prev <= 0.0 || self.tendon_offset_next <= 0.0 {
            return Err(Error::invalid(format!(
                "{what}: tendon routing offsets must be > 0"
            )));
        }
        if self.elastic_offset < 0.0 {
            return Err(Error::invalid(format!(
                "{what}: elastic offset must be >= 0"
            )));
        }
        if self.limits.lo >= self.limits.hi {
            return Err(Error::invalid(format!(
                "{what}: joint limits require lo < hi (got [{}, {}])",
                self.limits.lo, self.limits.hi
            )));
        }
        if self.tendon_offset_angle <= self.limits.hi {
            return Err(Error::invalid(format!(
                "{what}: tendon offset angle q0 = {} must exceed the upper joint limit {}",
                self.tendon_offset_angle, self.limits.hi
            )));
        }
        if self.tendon_offset_angle - self.limits.lo >= PI {
            return Err(Error::invalid(format!(
                "{what}: q0 - lo = {} must stay below pi so the routing triangle never flips",
                self.tendon_offset_angle - self.limits.lo
            )));
        }
        Ok(())
    }
}

/// Geometric and elastic description of one two-joint finger.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerDesign {
    pub finger_type: FingerType,
    pub proximal_length: f64,
    pub distal_length: f64,
    pub width: f64,
    pub thickness: f64,
    pub joints: [JointDesign; 2],
    /// Stiffness of the shared elastic extension cord, N/mm.
    pub spring_constant: f64,
}

pub const DEFAULT_TENDON_OFFSET: f64 = 4.0;
pub const DEFAULT_TENDON_OFFSET_ANGLE: f64 = 2.4;
pub const DEFAULT_ELASTIC_OFFSET: f64 = 5.0;
pub const DEFAULT_SPRING_CONSTANT: f64 = 0.1;

impl FingerDesign {
    fn with_lengths(finger_type: FingerType, proximal: f64, distal: f64) -> Self {
        let joint = |lo: f64, hi: f64| JointDesign {
            tendon_offset_prev: DEFAULT_TENDON_OFFSET,
            tendon_offset_next: DEFAULT_TENDON_OFFSET,
            tendon_offset_angle: DEFAULT_TENDON_OFFSET_ANGLE,
            elastic_offset: DEFAULT_ELASTIC_OFFSET,
            cord_rest_angle: lo,
            limits: JointLimits::new(lo, hi),
        };
        Self {
            finger_type,
            proximal_length: proximal,
            distal_length: distal,
            width: 20.0,
            thickness: 20.0,
            joints: [joint(-FRAC_PI_6, FRAC_PI_3), joint(0.0, FRAC_PI_2)],
            spring_constant: DEFAULT_SPRING_CONSTANT,
        }
    }

    /// Type A finger: 50 mm proximal, 45 mm distal phalanx.
    pub fn type_a() -> Self {
        Self::with_lengths(FingerType::A, 50.0, 45.0)
    }

    /// Type B finger: 40 mm proximal, 55 mm distal phalanx.
    pub fn type_b() -> Self {
        Self::with_lengths(FingerType::B, 40.0, 55.0)
    }

    pub fn joint(&self, j: Joint) -> &JointDesign {
        &self.joints[j.index()]
    }

    pub fn joint_mut(&mut self, j: Joint) -> &mut JointDesign {
        &mut self.joints[j.index()]
    }

    pub fn length(&self) -> f64 {
        self.proximal_length + self.distal_length
    }

    pub fn rest_state(&self) -> JointState {
        JointState::new(self.joints[0].limits.lo, self.joints[1].limits.lo)
    }

    pub fn full_flexion_state(&self) -> JointState {
        JointState::new(self.joints[0].limits.hi, self.joints[1].limits.hi)
    }

    pub fn contains(&self, s: JointState) -> bool {
        self.joints[0].limits.contains(s.q1) && self.joints[1].limits.contains(s.q2)
    }

    pub fn check_state(&self, s: JointState) -> Result<()> {
        for j in Joint::BOTH {
            let lim = self.joint(j).limits;
            let q = s.get(j);
            if !lim.contains(q) {
                return Err(Error::domain(format!("q{}", j.number()), q, lim.lo, lim.hi));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("proximal_length", self.proximal_length),
            ("distal_length", self.distal_length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("spring_constant", self.spring_constant),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0 (got {v})")));
            }
        }
        for j in Joint::BOTH {
            self.joint(j).validate(&format!("joint {}", j.number()))?;
        }
        Ok(())
    }
}

/// Proximal and distal flexion angles of one finger, rad.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub q1: f64,
    pub q2: f64,
}

impl JointState {
    pub const fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2 }
    }

    pub fn get(&self, j: Joint) -> f64 {
        match j {
            Joint::Proximal => self.q1,
            Joint::Distal => self.q2,
        }
    }

    pub fn max_abs_diff(&self, other: &JointState) -> f64 {
        (self.q1 - other.q1).abs().max((self.q2 - other.q2).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LockState {
    Unlocked,
    Locked,
}

/// Grasping configuration of the hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspMode {
    /// Palm at its limit with adjacent fingers locked into two rigid fingers.
    Precision,
    /// Palm at its limit, fingers free: parallel flexion planes.
    Cylindrical,
    /// Palm at zero rotation: flexion planes converge on the palm axis.
    Spherical,
}

impl GraspMode {
    pub const ALL: [GraspMode; 3] = [
        GraspMode::Precision,
        GraspMode::Cylindrical,
        GraspMode::Spherical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraspMode::Precision => "precision",
            GraspMode::Cylindrical => "cylindrical",
            GraspMode::Spherical => "spherical",
        }
    }
}

impl fmt::Display for GraspMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GraspMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GraspMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown grasp mode '{s}'")))
    }
}

/// Tolerance on palm rotation when deciding whether the palm sits at its limit.
pub const PALM_LIMIT_TOL: f64 = 1e-6;

/// The four-finger hand: finger designs, palm layout, palm rotation and lock.
#[derive(Debug, Clone, PartialEq)]
pub struct HandConfig {
    /// Indexed by [`FingerRole::index`].
    pub fingers: [FingerDesign; 4],
    pub palm_diameter: f64,
    /// Outward angle of each finger from the palm axis at rest, rad.
    pub finger_rest_splay: f64,
    pub palm_rotation: f64,
    pub phi_max: f64,
    /// Offset of each flexion plane from the plane through the palm axis, mm.
    pub lateral_offset: f64,
    pub lock_state: LockState,
    /// Residual distal play allowed by the locking features, rad.
    pub lock_compliance: f64,
    /// Fingers driven by muscle 0 and muscle 1.
    pub muscle_pairing: [[FingerRole; 2]; 2],
}

/// The gripper as built: two A and two B fingers on a 60 mm palm.
pub fn default_hand() -> HandConfig {
    HandConfig {
        fingers: [
            FingerDesign::type_a(),
            FingerDesign::type_b(),
            FingerDesign::type_a(),
            FingerDesign::type_b(),
        ],
        palm_diameter: 60.0,
        finger_rest_splay: FRAC_PI_6,
        palm_rotation: 0.0,
        phi_max: FRAC_PI_3,
        lateral_offset: 10.0,
        lock_state: LockState::Unlocked,
        lock_compliance: 0.0,
        muscle_pairing: [
            [FingerRole::ALeft, FingerRole::ARight],
            [FingerRole::BLeft, FingerRole::BRight],
        ],
    }
}

impl Default for HandConfig {
    fn default() -> Self {
        default_hand()
    }
}

impl HandConfig {
    pub fn finger(&self, role: FingerRole) -> &FingerDesign {
        &self.fingers[role.index()]
    }

    pub fn finger_mut(&mut self, role: FingerRole) -> &mut FingerDesign {
        &mut self.fingers[role.index()]
    }

    pub fn palm_radius(&self) -> f64 {
        self.palm_diameter / 2.0
    }

    pub fn at_palm_limit(&self) -> bool {
        (self.palm_rotation - self.phi_max).abs() <= PALM_LIMIT_TOL
    }

    pub fn is_locked(&self) -> bool {
        self.lock_state == LockState::Locked
    }

    /// Muscle driving `role`.
    pub fn muscle_of(&self, role: FingerRole) -> usize {
        if self.muscle_pairing[0].contains(&role) {
            0
        } else {
            1
        }
    }

    /// Engage the magnetic lock. Only possible with the palm at its limit.
    pub fn locked(mut self) -> Result<Self> {
        if !self.at_palm_limit() {
            return Err(Error::Mode(format!(
                "cannot lock at palm rotation {} (limit {})",
                self.palm_rotation, self.phi_max
            )));
        }
        self.lock_state = LockState::Locked;
        Ok(self)
    }

    pub fn unlocked(mut self) -> Self {
        self.lock_state = LockState::Unlocked;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for role in FingerRole::ALL {
            let f = self.finger(role);
            if f.finger_type != role.finger_type() {
                return Err(Error::invalid(format!(
                    "finger {role} must be of type {:?}",
                    role.finger_type()
                )));
            }
            f.validate()
                .map_err(|e| Error::invalid(format!("finger {role}: {}", strip(&e))))?;
        }
        let scalars = [
            ("palm_diameter", self.palm_diameter),
            ("finger_rest_splay", self.finger_rest_splay),
            ("palm_rotation", self.palm_rotation),
            ("phi_max", self.phi_max),
            ("lateral_offset", self.lateral_offset),
            ("lock_compliance", self.lock_compliance),
        ];
        if let Some((name, _)) = scalars.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite")));
        }
        if self.palm_diameter <= 0.0 {
            return Err(Error::invalid("palm_diameter must be > 0"));
        }
        if self.phi_max <= 0.0 || self.phi_max >= PI {
            return Err(Error::invalid("phi_max must lie in (0, pi)"));
        }
        if self.palm_rotation < -PALM_LIMIT_TOL
            || self.palm_rotation > self.phi_max + PALM_LIMIT_TOL
        {
            return Err(Error::invalid(format!(
                "palm_rotation {} must lie in [0, phi_max = {}]",
                self.palm_rotation, self.phi_max
            )));
        }
        if self.lateral_offset < 0.0 || self.lateral_offset >= self.palm_radius() {
            return Err(Error::invalid(
                "lateral_offset must lie in [0, palm radius)",
            ));
        }
        if self.lock_compliance < 0.0 {
            return Err(Error::invalid("lock_compliance must be >= 0"));
        }
        if self.is_locked() && !self.at_palm_limit() {
            return Err(Error::invalid(
                "lock_state = locked is only permitted when palm_rotation = phi_max",
            ));
        }
        let mut seen = [0u8; 4];
        for pair in &self.muscle_pairing {
            for r in pair {
                seen[r.index()] += 1;
            }
        }
        if seen.iter().any(|&n| n != 1) {
            return Err(Error::invalid(
                "muscle_pairing must assign every finger to exactly one muscle",
            ));
        }
        if self.is_locked() {
            for role in [FingerRole::ALeft, FingerRole::ARight] {
                if self.muscle_of(role) == self.muscle_of(role.lock_partner()) {
                    return Err(Error::invalid(format!(
                        "locked combined finger {role}+{} must take one finger from each muscle",
                        role.lock_partner()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Validation(m) => m.clone(),
        other => other.to_string(),
    }
}
