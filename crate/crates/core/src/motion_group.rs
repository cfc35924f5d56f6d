//! Displacement subgroups of the finger chains and the effect of locking two
//! fingers together.
//!
//! Only one-parameter rotation subgroups `{R(P, a)}` and the identity group
//! arise here, so a subgroup is stored as a point and a unit axis and groups
//! are compared as lines in space.

use log::warn;
use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{finger_frame, finger_points, LOCK_STATE_TOL};
use crate::types::{FingerRole, HandConfig, JointState};

/// Angular tolerance for parallel axes, rad.
pub const AXIS_ANGLE_TOL: f64 = 1e-9;
/// Distance tolerance for coincident lines, mm.
pub const AXIS_OFFSET_TOL: f64 = 1e-9;

/// All rotations about one spatial line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationSubgroup {
    pub point: Vector3<f64>,
    pub axis: Vector3<f64>,
}

impl RotationSubgroup {
    pub fn new(point: Vector3<f64>, axis: Vector3<f64>) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) || !point.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(
                "rotation subgroup needs a finite point and non-zero axis",
            ));
        }
        Ok(Self {
            point,
            axis: axis / n,
        })
    }

    /// Same line representation: closest point to the origin, axis with a
    /// positive leading component.
    pub fn canonical(&self) -> Self {
        let mut axis = self.axis;
        let lead = axis
            .iter()
            .copied()
            .find(|v| v.abs() > 1e-12)
            .unwrap_or(1.0);
        if lead < 0.0 {
            axis = -axis;
        }
        let point = self.point - axis * self.point.dot(&axis);
        Self { point, axis }
    }

    pub fn is_parallel(&self, other: &Self) -> bool {
        self.axis.cross(&other.axis).norm() <= AXIS_ANGLE_TOL
    }

    /// Whether both subgroups rotate about the same line.
    pub fn same_line(&self, other: &Self) -> bool {
        self.is_parallel(other)
            && (other.point - self.point).cross(&self.axis).norm() <= AXIS_OFFSET_TOL
    }

    pub fn rotation(&self, angle: f64) -> Isometry3<f64> {
        let rot = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(self.axis), angle);
        let p = Translation3::from(self.point);
        p * Isometry3::from_parts(Translation3::identity(), rot) * p.inverse()
    }

    /// Whether displacement `d` is a rotation about this line.
    pub fn contains(&self, d: &Isometry3<f64>, tol: f64) -> bool {
        let moved = d.transform_point(&self.point.into()).coords;
        if (moved - self.point).norm() > tol {
            return false;
        }
        match d.rotation.axis() {
            None => true,
            Some(a) => a.cross(&self.axis).norm() <= tol,
        }
    }
}

/// Ordered product of rotation subgroups; empty means the identity group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionGroup {
    pub factors: Vec<RotationSubgroup>,
}

impl MotionGroup {
    pub fn identity() -> Self {
        Self {
            factors: Vec::new(),
        }
    }

    pub fn single(g: RotationSubgroup) -> Self {
        Self { factors: vec![g] }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// Group equality up to line representation.
    pub fn equivalent(&self, other: &Self) -> bool {
        self.factors.len() == other.factors.len()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.same_line(b))
    }
}

/// `{R(P, a)} ∩ {R(Q, b)}`: the subgroup itself when both share a line,
/// otherwise only the identity displacement.
pub fn intersect_rotation_subgroups(g: &RotationSubgroup, h: &RotationSubgroup) -> MotionGroup {
    if g.same_line(h) {
        MotionGroup::single(g.canonical())
    } else {
        MotionGroup::identity()
    }
}

/// Proximal and distal rotation subgroups of a finger in state `s`.
pub fn finger_motion_group_at(hand: &HandConfig, role: FingerRole, s: JointState) -> MotionGroup {
    let fr = finger_frame(hand, role);
    let [base, joint, _] = finger_points(hand, role, s);
    MotionGroup {
        factors: vec![
            RotationSubgroup {
                point: base,
                axis: fr.axis,
            },
            RotationSubgroup {
                point: joint,
                axis: fr.axis,
            },
        ],
    }
}

/// Motion group of a finger at rest.
pub fn finger_motion_group(hand: &HandConfig, role: FingerRole) -> MotionGroup {
    finger_motion_group_at(hand, role, hand.finger(role).rest_state())
}

/// Intersection of two serial two-joint groups: a shared proximal line
/// survives, followed by the intersection of the distal factors.
pub fn intersect_chains(sa: &MotionGroup, sb: &MotionGroup) -> MotionGroup {
    match (sa.factors.as_slice(), sb.factors.as_slice()) {
        ([a1, a2], [b1, b2]) if a1.same_line(b1) => {
            let mut factors = vec![a1.canonical()];
            factors.extend(intersect_rotation_subgroups(a2, b2).factors);
            MotionGroup { factors }
        }
        ([a1], [b1]) => intersect_rotation_subgroups(a1, b1),
        _ => MotionGroup::identity(),
    }
}

/// Motion group of the rigid finger formed by locking `a` and `b` together,
/// both in state `s`.
pub fn combined_finger_group_at(
    hand: &HandConfig,
    a: FingerRole,
    b: FingerRole,
    s: JointState,
) -> Result<MotionGroup> {
    if !hand.is_locked() || !hand.at_palm_limit() {
        return Err(Error::Mode("cannot combine unlocked fingers".into()));
    }
    if a.lock_partner() != b {
        return Err(Error::Mode(format!("{a} and {b} do not lock together")));
    }
    let g = intersect_chains(
        &finger_motion_group_at(hand, a, s),
        &finger_motion_group_at(hand, b, s),
    );
    if g.factors.len() > 1 {
        warn!("combined finger {a}+{b} keeps its distal freedom: distal axes coincide");
    }
    Ok(g)
}

pub fn combined_finger_group(
    hand: &HandConfig,
    a: FingerRole,
    b: FingerRole,
) -> Result<MotionGroup> {
    combined_finger_group_at(hand, a, b, hand.finger(a).rest_state())
}

/// Whether the locating features of every adjacent pair can seat.
pub fn lock_feasible(hand: &HandConfig, states: &[JointState; 4]) -> bool {
    hand.at_palm_limit()
        && [FingerRole::ALeft, FingerRole::ARight].iter().all(|&r| {
            states[r.index()].max_abs_diff(&states[r.lock_partner().index()]) <= LOCK_STATE_TOL
        })
}

/// Joint-state projection enforced on a locked combined finger: the distal
/// joint stays at its locked angle up to the mechanical compliance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockConstraint {
    pub q2_lock: f64,
    pub compliance: f64,
}

impl LockConstraint {
    pub fn new(q2_lock: f64, compliance: f64) -> Self {
        Self {
            q2_lock,
            compliance: compliance.max(0.0),
        }
    }

    pub fn project(&self, s: JointState) -> JointState {
        JointState::new(
            s.q1,
            s.q2.clamp(
                self.q2_lock - self.compliance,
                self.q2_lock + self.compliance,
            ),
        )
    }

    pub fn admits(&self, s: JointState) -> bool {
        self.project(s) == s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::configure_mode;
    use crate::types::{default_hand, GraspMode};

    fn locked() -> HandConfig {
        configure_mode(&default_hand(), GraspMode::Precision).unwrap()
    }

    #[test]
    fn locked_default_reduces_to_proximal_axis() {
        let h = locked();
        let g = combined_finger_group(&h, FingerRole::ALeft, FingerRole::BLeft).unwrap();
        assert_eq!(g.factors.len(), 1);
        let a = finger_motion_group(&h, FingerRole::ALeft);
        assert!(g.factors[0].same_line(&a.factors[0]));
    }

    #[test]
    fn unlocked_combination_is_mode_error() {
        let h = default_hand();
        assert!(matches!(
            combined_finger_group(&h, FingerRole::ALeft, FingerRole::BLeft),
            Err(Error::Mode(_))
        ));
        assert!(matches!(
            combined_finger_group(&locked(), FingerRole::ALeft, FingerRole::BRight),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn parallel_offset_is_identity() {
        let g = RotationSubgroup::new(Vector3::zeros(), Vector3::y()).unwrap();
        let h = RotationSubgroup::new(Vector3::new(0.0, 0.0, 20.0), Vector3::y()).unwrap();
        assert!(intersect_rotation_subgroups(&g, &h).is_identity());
        assert!(intersect_rotation_subgroups(&g, &g).equivalent(&MotionGroup::single(g)));
    }

    #[test]
    fn equal_proximal_lengths_keep_distal_freedom() {
        let mut h = locked();
        h.finger_mut(FingerRole::BLeft).proximal_length = 50.0;
        let g = combined_finger_group(&h, FingerRole::ALeft, FingerRole::BLeft).unwrap();
        assert_eq!(g.factors.len(), 2);
    }

    #[test]
    fn lock_feasibility() {
        let h = locked();
        let mut s = FingerRole::ALL.map(|r| h.finger(r).rest_state());
        assert!(lock_feasible(&h, &s));
        assert!(!lock_feasible(&default_hand(), &s));
        s[FingerRole::ALeft.index()].q2 = 0.2;
        assert!(!lock_feasible(&h, &s));
    }

    #[test]
    fn lock_constraint_pins_distal() {
        let c = LockConstraint::new(0.0, 0.0);
        let s = c.project(JointState::new(0.4, 0.3));
        assert_eq!(s, JointState::new(0.4, 0.0));
        assert!(!c.admits(JointState::new(0.4, 1e-9)));
        let c = LockConstraint::new(0.0, 0.05);
        assert_eq!(c.project(JointState::new(0.1, 0.3)).q2, 0.05);
    }

    #[test]
    fn rotation_membership() {
        let g = RotationSubgroup::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(0.0, 0.6, 0.8))
            .unwrap();
        assert!(g.contains(&g.rotation(0.3), 1e-12));
        let h = RotationSubgroup::new(Vector3::zeros(), Vector3::x()).unwrap();
        assert!(!h.contains(&g.rotation(0.3), 1e-9));
    }
}
