//! Forward kinematics of the four-finger hand.
//!
//! Hand frame: `z` runs up the palm axis, the palm face lies in `z = 0` and
//! fingers hang towards `-z`. Each finger moves in a vertical flexion plane
//! through its base, spanned by the inward horizontal direction `f` and `z`.
//! In-plane coordinates are `(u, v)`: `u` along `f`, `v` along `z`, origin
//! at the finger base. Link angles are measured from the downward vertical,
//! positive inward.
//!
//! At the palm limit the bases sit in two adjacent pairs, `A_L` beside `B_L`
//! and `A_R` beside `B_R`, each finger's plane offset by `lateral_offset` from
//! the plane through the palm axis. Lower palm rotations turn the B fingers
//! back about `z` by `phi_max - phi`.

use nalgebra::{Isometry3, Rotation3, Vector2, Vector3};
use serde::Serialize;

use crate::energy::{full_retraction, LevelSet};
use crate::error::{Error, Result};
use crate::types::{FingerRole, GraspMode, HandConfig, JointState, LockState, PALM_LIMIT_TOL};

/// Fingertip separation at which opposing fingers touch, mm.
pub const CONTACT_DISTANCE: f64 = 20.0;

/// Base frame of one finger in the hand frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerFrame {
    pub base: Vector3<f64>,
    /// Unit horizontal direction towards the palm centre side of the plane.
    pub inward: Vector3<f64>,
    /// Unit flexion axis `inward x z`; positive rotation about it flexes.
    pub axis: Vector3<f64>,
    /// Link angle at `q1 = 0`, rad.
    pub tilt: f64,
}

impl FingerFrame {
    pub fn to_hand(&self, p: Vector2<f64>) -> Vector3<f64> {
        self.base + self.inward * p.x + Vector3::z() * p.y
    }

    pub fn to_plane(&self, p: &Vector3<f64>) -> Vector2<f64> {
        let d = p - self.base;
        Vector2::new(d.dot(&self.inward), d.z)
    }

    /// Signed distance of `p` from the flexion plane.
    pub fn lateral(&self, p: &Vector3<f64>) -> f64 {
        (p - self.base).dot(&self.axis)
    }
}

/// In-plane joint positions of one finger: base, distal joint, tip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarChain {
    pub base: Vector2<f64>,
    pub joint: Vector2<f64>,
    pub tip: Vector2<f64>,
}

/// Unit link direction at angle `theta` from the downward vertical.
pub fn link_direction(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.sin(), -theta.cos())
}

pub fn planar_chain(hand: &HandConfig, role: FingerRole, s: JointState) -> PlanarChain {
    let f = hand.finger(role);
    let t1 = s.q1 + base_tilt(hand, role);
    let base = Vector2::zeros();
    let joint = base + link_direction(t1) * f.proximal_length;
    let tip = joint + link_direction(t1 + s.q2) * f.distal_length;
    PlanarChain { base, joint, tip }
}

/// Tilt of the finger base so that the rest state leans outward by the
/// configured splay.
pub fn base_tilt(hand: &HandConfig, role: FingerRole) -> f64 {
    -hand.finger_rest_splay - hand.finger(role).joints[0].limits.lo
}

pub fn finger_frame(hand: &HandConfig, role: FingerRole) -> FingerFrame {
    let r = hand.palm_radius();
    let a = hand.lateral_offset;
    let x = (r * r - a * a).sqrt();
    let (base, inward) = match role {
        FingerRole::ALeft => (Vector3::new(-x, a, 0.0), Vector3::x()),
        FingerRole::BLeft => (Vector3::new(-x, -a, 0.0), Vector3::x()),
        FingerRole::ARight => (Vector3::new(x, -a, 0.0), -Vector3::x()),
        FingerRole::BRight => (Vector3::new(x, a, 0.0), -Vector3::x()),
    };
    let (base, inward) = match role.finger_type() {
        crate::types::FingerType::A => (base, inward),
        crate::types::FingerType::B => {
            let rot = palm_rotation_transform(hand);
            (rot * base, rot * inward)
        }
    };
    FingerFrame {
        base,
        inward,
        axis: inward.cross(&Vector3::z()),
        tilt: base_tilt(hand, role),
    }
}

/// Rotation carrying the B-finger bases from their lock positions to the
/// current palm rotation.
pub fn palm_rotation_transform(hand: &HandConfig) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), hand.phi_max - hand.palm_rotation)
}

/// Hand-frame positions of base, distal joint and tip.
pub fn finger_points(hand: &HandConfig, role: FingerRole, s: JointState) -> [Vector3<f64>; 3] {
    let fr = finger_frame(hand, role);
    let c = planar_chain(hand, role, s);
    [fr.to_hand(c.base), fr.to_hand(c.joint), fr.to_hand(c.tip)]
}

/// Configuration of the whole hand with a placement of the hand frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HandPose {
    pub hand: HandConfig,
    /// Indexed by [`FingerRole::index`].
    pub joint_states: [JointState; 4],
    /// Hand frame expressed in the world frame.
    pub frame: Isometry3<f64>,
}

impl HandPose {
    pub fn new(hand: HandConfig, joint_states: [JointState; 4]) -> Result<Self> {
        hand.validate()?;
        for role in FingerRole::ALL {
            hand.finger(role).check_state(joint_states[role.index()])?;
        }
        if hand.is_locked() {
            for role in [FingerRole::ALeft, FingerRole::ARight] {
                let a = joint_states[role.index()];
                let b = joint_states[role.lock_partner().index()];
                if (a.q1 - b.q1).abs() > LOCK_STATE_TOL || (a.q2 - b.q2).abs() > LOCK_STATE_TOL {
                    return Err(Error::invalid(format!(
                        "locked fingers {role} and {} must share joint states",
                        role.lock_partner()
                    )));
                }
            }
        }
        Ok(Self {
            hand,
            joint_states,
            frame: Isometry3::identity(),
        })
    }

    pub fn rest(hand: HandConfig) -> Result<Self> {
        let states = FingerRole::ALL.map(|r| hand.finger(r).rest_state());
        Self::new(hand, states)
    }

    pub fn with_frame(mut self, frame: Isometry3<f64>) -> Self {
        self.frame = frame;
        self
    }

    pub fn state(&self, role: FingerRole) -> JointState {
        self.joint_states[role.index()]
    }
}

/// Joint-state agreement needed for the locating features to seat, rad.
pub const LOCK_STATE_TOL: f64 = 1e-6;

/// Fingertip positions in the world frame of the pose.
pub fn fingertip_positions(pose: &HandPose) -> [Vector3<f64>; 4] {
    FingerRole::ALL.map(|r| {
        let tip = finger_points(&pose.hand, r, pose.state(r))[2];
        pose.frame.transform_point(&tip.into()).coords
    })
}

/// Copy of `hand` with the palm turned to `phi`. The lock survives only at
/// the palm limit.
pub fn sweep_palm(hand: &HandConfig, phi: f64) -> Result<HandConfig> {
    if !phi.is_finite() || phi < -PALM_LIMIT_TOL || phi > hand.phi_max + PALM_LIMIT_TOL {
        return Err(Error::domain("palm_rotation", phi, 0.0, hand.phi_max));
    }
    let mut out = hand.clone();
    out.palm_rotation = phi.clamp(0.0, hand.phi_max);
    if !out.at_palm_limit() {
        out.lock_state = LockState::Unlocked;
    }
    Ok(out)
}

/// Hand reconfigured for a grasp mode.
pub fn configure_mode(hand: &HandConfig, mode: GraspMode) -> Result<HandConfig> {
    match mode {
        GraspMode::Precision => sweep_palm(hand, hand.phi_max)?.locked(),
        GraspMode::Cylindrical => Ok(sweep_palm(hand, hand.phi_max)?.unlocked()),
        GraspMode::Spherical => Ok(sweep_palm(hand, 0.0)?.unlocked()),
    }
}

/// Fingers whose inward directions oppose each other.
pub fn opposing_pairs(hand: &HandConfig) -> Vec<(FingerRole, FingerRole)> {
    let frames = FingerRole::ALL.map(|r| finger_frame(hand, r));
    let mut out = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            if frames[i].inward.dot(&frames[j].inward) < -1e-9 {
                out.push((FingerRole::ALL[i], FingerRole::ALL[j]));
            }
        }
    }
    out
}

/// Closing gap of one opposing pair: how far the tips still are from
/// touching. Non-positive once they meet, `None` if they never can.
fn pair_gap(
    fi: &FingerFrame,
    fj: &FingerFrame,
    tip_i: &Vector3<f64>,
    tip_j: &Vector3<f64>,
    contact: f64,
) -> Option<f64> {
    let denom = fi.inward.dot(&fj.axis);
    if denom.abs() < 1e-9 {
        let lateral = (fj.base - fi.base).dot(&fi.axis).abs();
        if lateral > contact + 1e-9 {
            return None;
        }
        let along = (tip_j - tip_i).dot(&fi.inward);
        let reach = (contact * contact - lateral * lateral).max(0.0).sqrt();
        return Some(along - reach);
    }
    let ti = (fj.base - fi.base).dot(&fj.axis) / denom;
    let tj = (fi.base - fj.base).dot(&fi.axis) / fj.inward.dot(&fi.axis);
    let hi = (tip_i - fi.base).dot(&fi.inward);
    let hj = (tip_j - fj.base).dot(&fj.inward);
    Some((ti - hi) + (tj - hj) - contact)
}

/// Joint states of every finger after an unhindered retraction `r` along the
/// minimum-energy path.
pub fn closing_states(hand: &HandConfig, r: f64) -> [JointState; 4] {
    let mut out = [JointState::default(); 4];
    for (i, role) in FingerRole::ALL.into_iter().enumerate() {
        let f = hand.finger(role);
        let same = (0..i).find(|&k| {
            let g = &hand.fingers[k];
            g.joints == f.joints && g.spring_constant == f.spring_constant
        });
        out[i] = match same {
            Some(k) => out[k],
            None => LevelSet::from_retraction(f, r).minimize().1,
        };
    }
    out
}

/// Retraction that takes every finger of the hand to full flexion.
pub fn hand_full_retraction(hand: &HandConfig) -> f64 {
    FingerRole::ALL
        .iter()
        .map(|&r| full_retraction(hand.finger(r)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeetingHeight {
    pub mode: GraspMode,
    /// Height of the meeting point above the table plane, mm.
    pub height: f64,
    pub retraction: f64,
    pub pair: (FingerRole, FingerRole),
    /// Table plane in hand coordinates, mm.
    pub table_z: f64,
}

const MEET_SCAN: usize = 400;

fn lowest_point(hand: &HandConfig, states: &[JointState; 4]) -> f64 {
    FingerRole::ALL
        .iter()
        .map(|&r| {
            let [_, j, t] = finger_points(hand, r, states[r.index()]);
            j.z.min(t.z) - hand.finger(r).thickness / 2.0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Lowest fingertip-capsule point swept along the unhindered closing path.
pub fn table_height(hand: &HandConfig) -> f64 {
    let full = hand_full_retraction(hand);
    let f = |r: f64| lowest_point(hand, &closing_states(hand, r));
    crate::energy::minimize_1d(0.0, full, f, 2000).1
}

/// Height above the table at which opposing fingertips first come within
/// contact distance while the hand closes unhindered in `mode`.
pub fn meeting_height(hand: &HandConfig, mode: GraspMode) -> Result<MeetingHeight> {
    if mode == GraspMode::Precision {
        return Err(Error::Mode(
            "meeting height is defined for power grasp modes".into(),
        ));
    }
    let h = configure_mode(hand, mode)?;
    let pairs = opposing_pairs(&h);
    let frames = FingerRole::ALL.map(|r| finger_frame(&h, r));
    let gap_at = |r: f64| -> Option<(f64, (FingerRole, FingerRole))> {
        let states = closing_states(&h, r);
        let tips = FingerRole::ALL.map(|ro| finger_points(&h, ro, states[ro.index()])[2]);
        pairs
            .iter()
            .filter_map(|&(a, b)| {
                pair_gap(
                    &frames[a.index()],
                    &frames[b.index()],
                    &tips[a.index()],
                    &tips[b.index()],
                    CONTACT_DISTANCE,
                )
                .map(|g| (g, (a, b)))
            })
            .min_by(|x, y| x.0.total_cmp(&y.0))
    };
    let full = hand_full_retraction(&h);
    let no_meet = || Error::NoMeet {
        contact_distance: CONTACT_DISTANCE,
    };
    let mut prev = 0.0;
    let mut hit = None;
    for i in 0..=MEET_SCAN {
        let r = full * i as f64 / MEET_SCAN as f64;
        let (g, _) = gap_at(r).ok_or_else(no_meet)?;
        if g <= 0.0 {
            hit = Some((prev, r));
            break;
        }
        prev = r;
    }
    let (mut lo, mut hi) = hit.ok_or_else(no_meet)?;
    if hi > 0.0 {
        while hi - lo > 1e-12 * full {
            let mid = 0.5 * (lo + hi);
            if gap_at(mid).is_some_and(|(g, _)| g <= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let (_, pair) = gap_at(hi).expect("pairs exist");
    let states = closing_states(&h, hi);
    let za = finger_points(&h, pair.0, states[pair.0.index()])[2].z;
    let zb = finger_points(&h, pair.1, states[pair.1.index()])[2].z;
    let table_z = table_height(&h);
    Ok(MeetingHeight {
        mode,
        height: 0.5 * (za + zb) - table_z,
        retraction: hi,
        pair,
        table_z,
    })
}

/// Fingertip positions along the unhindered closing path, `steps` samples.
pub fn closing_path(hand: &HandConfig, steps: usize) -> Result<Vec<(f64, [Vector3<f64>; 4])>> {
    if steps < 2 {
        return Err(Error::invalid("closing path needs steps >= 2"));
    }
    let full = hand_full_retraction(hand);
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            let states = closing_states(hand, full * t);
            let tips = FingerRole::ALL.map(|r| finger_points(hand, r, states[r.index()])[2]);
            (t, tips)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::default_hand;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn straight_finger_length() {
        let h = default_hand();
        for role in FingerRole::ALL {
            let c = planar_chain(&h, role, JointState::new(0.0, 0.0));
            assert!((c.tip.norm() - 95.0).abs() < 1e-12);
            assert!(c.tip.x.abs() < 1e-12);
        }
    }

    #[test]
    fn rest_leans_outward_by_splay() {
        let h = default_hand();
        let c = planar_chain(
            &h,
            FingerRole::ALeft,
            h.finger(FingerRole::ALeft).rest_state(),
        );
        let angle = (-c.tip.x).atan2(-c.tip.y);
        assert!((angle - h.finger_rest_splay).abs() < 1e-12);
    }

    #[test]
    fn frames_lie_on_palm_circle() {
        for phi in [0.0, 0.4, default_hand().phi_max] {
            let h = sweep_palm(&default_hand(), phi).unwrap();
            for role in FingerRole::ALL {
                let fr = finger_frame(&h, role);
                assert!((fr.base.norm() - 30.0).abs() < 1e-12);
                let offset = fr.base.cross(&fr.inward).z.abs();
                assert!((offset - h.lateral_offset).abs() < 1e-12);
                assert!((fr.axis.norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn positive_flexion_rotates_about_axis() {
        let h = default_hand();
        let fr = finger_frame(&h, FingerRole::BRight);
        let d0 = fr.to_hand(link_direction(0.0)) - fr.base;
        let d1 = fr.to_hand(link_direction(0.1)) - fr.base;
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(fr.axis), 0.1);
        assert!((rot * d0 - d1).norm() < 1e-14, "{}", (rot * d0 - d1).norm());
    }

    #[test]
    fn sweep_palm_range_and_lock() {
        let h = default_hand();
        assert!(matches!(sweep_palm(&h, -0.1), Err(Error::Domain { .. })));
        assert!(matches!(sweep_palm(&h, 2.0), Err(Error::Domain { .. })));
        let locked = configure_mode(&h, GraspMode::Precision).unwrap();
        assert!(locked.is_locked());
        assert!(sweep_palm(&locked, locked.phi_max).unwrap().is_locked());
        assert!(!sweep_palm(&locked, 0.5).unwrap().is_locked());
        assert_eq!(sweep_palm(&h, 0.0).unwrap(), h);
    }

    #[test]
    fn locked_pose_requires_shared_states() {
        let h = configure_mode(&default_hand(), GraspMode::Precision).unwrap();
        let mut s = FingerRole::ALL.map(|r| h.finger(r).rest_state());
        HandPose::new(h.clone(), s).unwrap();
        s[FingerRole::BLeft.index()].q2 = 0.2;
        assert!(HandPose::new(h, s).is_err());
    }

    #[test]
    fn cylindrical_pairs() {
        let h = configure_mode(&default_hand(), GraspMode::Cylindrical).unwrap();
        let pairs = opposing_pairs(&h);
        assert!(pairs.contains(&(FingerRole::ALeft, FingerRole::BRight)));
        assert!(pairs.contains(&(FingerRole::BLeft, FingerRole::ARight)));
        assert!(pairs.contains(&(FingerRole::ALeft, FingerRole::ARight)));
        assert!(!pairs.contains(&(FingerRole::ALeft, FingerRole::BLeft)));
    }

    #[test]
    fn full_flexion_tip_inward() {
        let h = default_hand();
        let c = planar_chain(&h, FingerRole::ALeft, JointState::new(FRAC_PI_3, FRAC_PI_2));
        assert!(c.tip.x > 0.0);
    }
}
