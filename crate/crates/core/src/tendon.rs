//! Cable kinematics of one flexion joint: the retractable flexor tendon and
//! the dorsal elastic cord.
//!
//! Both cables run straight between two routing points, one on each link, so
//! their lengths follow the cosine rule. All lengths are evaluated in the
//! cancellation-free form `sqrt((a - b)^2 + 4ab sin^2(x/2))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{FingerDesign, Joint, JointDesign, JointState};

/// Third side of a triangle with sides `a`, `b` enclosing angle `x`.
pub fn cosine_rule(a: f64, b: f64, x: f64) -> f64 {
    let s = (0.5 * x).sin();
    let d = a - b;
    (d * d + 4.0 * a * b * s * s).sqrt()
}

impl JointDesign {
    /// Angle enclosed by the tendon routing offsets at joint angle `q`.
    pub fn routing_angle(&self, q: f64) -> f64 {
        self.tendon_offset_angle - q
    }

    /// Cord stretch angle: joint angle measured from the unstretched pose.
    pub fn cord_angle(&self, q: f64) -> f64 {
        q - self.cord_rest_angle
    }

    pub fn tendon_length_at(&self, q: f64) -> f64 {
        cosine_rule(
            self.tendon_offset_next,
            self.tendon_offset_prev,
            self.routing_angle(q),
        )
    }

    /// Perpendicular distance from the joint axis to the tendon.
    pub fn tendon_moment_arm_at(&self, q: f64) -> Result<f64> {
        let len = self.tendon_length_at(q);
        if len <= 0.0 {
            return Err(Error::Singularity(format!(
                "tendon length vanishes at q = {q} (routing points coincide)"
            )));
        }
        let x = self.routing_angle(q);
        Ok(self.tendon_offset_next * self.tendon_offset_prev * x.sin() / len)
    }

    /// Angle between the tendon and the preceding link's routing offset.
    pub fn tendon_angle_at(&self, q: f64) -> f64 {
        let x = self.routing_angle(q);
        let (a, b) = (self.tendon_offset_next, self.tendon_offset_prev);
        (a * x.sin()).atan2(b - a * x.cos())
    }

    pub fn cord_length_at(&self, q: f64) -> f64 {
        cosine_rule(self.elastic_offset, self.elastic_offset, self.cord_angle(q))
    }

    /// Signed derivative of cord length with respect to `q`. At the unstretched
    /// pose the 0/0 form is replaced by its limit, the elastic offset.
    pub fn elastic_moment_arm_at(&self, q: f64) -> f64 {
        let len = self.cord_length_at(q);
        let d = self.elastic_offset;
        if len == 0.0 {
            return d;
        }
        d * d * self.cord_angle(q).sin() / len
    }

    /// Joint angle at which the tendon has length `len`, clamped to the
    /// geometrically reachable interval `[|a - b|, a + b]`.
    pub fn angle_for_tendon_length(&self, len: f64) -> f64 {
        let (a, b) = (self.tendon_offset_next, self.tendon_offset_prev);
        let l2 = len * len;
        let s = (l2 - (a - b) * (a - b)).max(0.0).sqrt();
        let c = ((a + b) * (a + b) - l2).max(0.0).sqrt();
        self.tendon_offset_angle - 2.0 * s.atan2(c)
    }

    /// Tendon length at the lower and upper joint limits.
    pub fn tendon_length_span(&self) -> (f64, f64) {
        (
            self.tendon_length_at(self.limits.lo),
            self.tendon_length_at(self.limits.hi),
        )
    }
}

fn checked(design: &FingerDesign, joint: Joint, q: f64) -> Result<&JointDesign> {
    let jd = design.joint(joint);
    if !jd.limits.contains(q) {
        return Err(Error::domain(
            format!("q{}", joint.number()),
            q,
            jd.limits.lo,
            jd.limits.hi,
        ));
    }
    Ok(jd)
}

pub fn tendon_length(design: &FingerDesign, joint: Joint, q: f64) -> Result<f64> {
    Ok(checked(design, joint, q)?.tendon_length_at(q))
}

pub fn cord_length(design: &FingerDesign, joint: Joint, q: f64) -> Result<f64> {
    Ok(checked(design, joint, q)?.cord_length_at(q))
}

pub fn tendon_moment_arm(design: &FingerDesign, joint: Joint, q: f64) -> Result<f64> {
    checked(design, joint, q)?.tendon_moment_arm_at(q)
}

pub fn elastic_moment_arm(design: &FingerDesign, joint: Joint, q: f64) -> Result<f64> {
    Ok(checked(design, joint, q)?.elastic_moment_arm_at(q))
}

pub fn tendon_angle(design: &FingerDesign, joint: Joint, q: f64) -> Result<f64> {
    Ok(checked(design, joint, q)?.tendon_angle_at(q))
}

/// Cable lengths, moment arms and routing angles of both joints of a finger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CableState {
    pub retractable_tendon_length: [f64; 2],
    pub extendable_cord_length: [f64; 2],
    pub tendon_moment_arm: [f64; 2],
    pub elastic_moment_arm: [f64; 2],
    pub tendon_angle: [f64; 2],
}

pub fn cable_state(design: &FingerDesign, state: JointState) -> Result<CableState> {
    design.check_state(state)?;
    let mut out = CableState {
        retractable_tendon_length: [0.0; 2],
        extendable_cord_length: [0.0; 2],
        tendon_moment_arm: [0.0; 2],
        elastic_moment_arm: [0.0; 2],
        tendon_angle: [0.0; 2],
    };
    for j in Joint::BOTH {
        let jd = design.joint(j);
        let q = state.get(j);
        let i = j.index();
        out.retractable_tendon_length[i] = jd.tendon_length_at(q);
        out.extendable_cord_length[i] = jd.cord_length_at(q);
        out.tendon_moment_arm[i] = jd.tendon_moment_arm_at(q)?;
        out.elastic_moment_arm[i] = jd.elastic_moment_arm_at(q);
        out.tendon_angle[i] = jd.tendon_angle_at(q);
    }
    Ok(out)
}
