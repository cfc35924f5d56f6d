//! Grasp classification from the final contact set.

use std::collections::HashSet;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::shapes::{GraspObject, Profile, Section};
use super::sim::{Contact, FingerModel, Link};
use crate::types::{FingerRole, HandConfig, JointState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraspClass {
    Miss,
    FingertipPinch,
    Enveloping,
    Caged,
}

impl GraspClass {
    pub fn name(self) -> &'static str {
        match self {
            GraspClass::Miss => "Miss",
            GraspClass::FingertipPinch => "FingertipPinch",
            GraspClass::Enveloping => "Enveloping",
            GraspClass::Caged => "Caged",
        }
    }
}

impl std::fmt::Display for GraspClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Translation directions tried per planar escape scan.
pub const ESCAPE_DIRECTIONS_PLANAR: usize = 360;
/// Translation directions tried per spatial escape scan.
pub const ESCAPE_DIRECTIONS_SPATIAL: usize = 4096;
/// Radial step of the escape scan, mm.
pub const ESCAPE_STEP: f64 = 0.5;
/// Penetration tolerated along an escape path, mm.
pub const ESCAPE_TOL: f64 = 1e-6;

/// Directions for the escape scan: the hand's `x`-`z` plane for planar
/// objects, a near-uniform sphere of directions otherwise.
pub fn escape_directions(object: &GraspObject) -> Vec<Vector3<f64>> {
    if object.is_planar() {
        (0..ESCAPE_DIRECTIONS_PLANAR)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / ESCAPE_DIRECTIONS_PLANAR as f64;
                Vector3::new(a.cos(), 0.0, a.sin())
            })
            .collect()
    } else {
        let n = ESCAPE_DIRECTIONS_SPATIAL;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                Vector3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    }
}

fn bounding_radius(object: &GraspObject) -> f64 {
    let c = object.reference_point();
    match object {
        GraspObject::Sphere { radius, .. } => *radius,
        GraspObject::Cylinder { radius, height, .. } => (radius * radius + height * height).sqrt(),
        GraspObject::Planar { profile } => match profile {
            Profile::Circle { radius, .. } => *radius,
            Profile::ConvexPolygon { vertices } => vertices
                .iter()
                .map(|v| ((v[0] - c.x).powi(2) + (v[1] - c.z).powi(2)).sqrt())
                .fold(0.0, f64::max),
        },
    }
}

fn hits_palm(object: &GraspObject, palm_radius: f64) -> bool {
    match object {
        GraspObject::Sphere { center, radius } => {
            let dxy = ((center[0].powi(2) + center[1].powi(2)).sqrt() - palm_radius).max(0.0);
            (dxy * dxy + center[2] * center[2]).sqrt() < radius - ESCAPE_TOL
        }
        GraspObject::Cylinder {
            base_center,
            radius,
            height,
        } => {
            let dxy = (base_center[0].powi(2) + base_center[1].powi(2)).sqrt();
            base_center[2] < -ESCAPE_TOL
                && base_center[2] + height > ESCAPE_TOL
                && dxy < palm_radius + radius - ESCAPE_TOL
        }
        GraspObject::Planar { profile } => {
            let sec = match profile {
                Profile::Circle { center, radius } => Section::Circle {
                    center: Vector2::new(center[0], center[1]),
                    radius: *radius,
                },
                Profile::ConvexPolygon { vertices } => {
                    Section::Polygon(vertices.iter().map(|v| Vector2::new(v[0], v[1])).collect())
                }
            };
            let sep = sec.separation(
                Vector2::new(-palm_radius, 0.0),
                Vector2::new(palm_radius, 0.0),
            );
            sep.distance < -ESCAPE_TOL
        }
    }
}

struct Obstacles {
    models: [FingerModel; 4],
    states: [JointState; 4],
    palm_radius: f64,
    reach: f64,
}

impl Obstacles {
    fn new(hand: &HandConfig, states: &[JointState; 4]) -> Self {
        let models = FingerRole::ALL.map(|r| FingerModel::new(hand, r, f64::NEG_INFINITY));
        let reach = hand.palm_radius()
            + models
                .iter()
                .map(|m| m.design.length() + m.design.thickness / 2.0)
                .fold(0.0, f64::max);
        Self {
            models,
            states: *states,
            palm_radius: hand.palm_radius(),
            reach,
        }
    }

    fn blocked(&self, object: &GraspObject) -> bool {
        if hits_palm(object, self.palm_radius) {
            return true;
        }
        self.models.iter().enumerate().any(|(k, m)| {
            match object.section(&m.frame, m.design.width) {
                Some(sec) => m.object_clearance(self.states[k], Some(&sec)) < -ESCAPE_TOL,
                None => false,
            }
        })
    }

    fn escapes(&self, object: &GraspObject, dir: Vector3<f64>) -> bool {
        let c = object.reference_point();
        let rho = bounding_radius(object);
        let mut t = ESCAPE_STEP;
        loop {
            let moved = object.translated(dir * t);
            if self.blocked(&moved) {
                return false;
            }
            let at = c + dir * t;
            if at.norm() - rho > self.reach && at.dot(&dir) >= 0.0 {
                return true;
            }
            t += ESCAPE_STEP;
        }
    }
}

/// Whether `object` can translate to infinity along `dir` without passing
/// through a phalanx or the palm. The table is ignored.
pub fn escapes_along(
    hand: &HandConfig,
    states: &[JointState; 4],
    object: &GraspObject,
    dir: Vector3<f64>,
) -> bool {
    Obstacles::new(hand, states).escapes(object, dir.normalize())
}

/// Object cannot be translated out of the hand in any scanned direction.
pub fn is_caged(hand: &HandConfig, states: &[JointState; 4], object: &GraspObject) -> bool {
    let obs = Obstacles::new(hand, states);
    !escape_directions(object)
        .into_iter()
        .any(|d| obs.escapes(object, d))
}

/// Grasp class of a terminated closure.
///
/// Contacts only on fingertip caps make a pinch. Three or more contacts
/// touching both proximal and distal phalanges with no escape direction make
/// a cage. Three or more contacts over at least two phalanges envelop.
/// Anything else is a pinch.
pub fn classify_outcome(
    hand: &HandConfig,
    contacts: &[Contact],
    final_states: &[JointState; 4],
    object: &GraspObject,
) -> GraspClass {
    if contacts.is_empty() {
        return GraspClass::Miss;
    }
    if contacts.iter().all(|c| c.fingertip) {
        return GraspClass::FingertipPinch;
    }
    let links: HashSet<Link> = contacts.iter().map(|c| c.link).collect();
    let phalanges: HashSet<(FingerRole, Link)> =
        contacts.iter().map(|c| (c.finger, c.link)).collect();
    if contacts.len() >= 3 && links.len() == 2 && is_caged(hand, final_states, object) {
        return GraspClass::Caged;
    }
    if contacts.len() >= 3 && phalanges.len() >= 2 {
        return GraspClass::Enveloping;
    }
    GraspClass::FingertipPinch
}

/// Coulomb friction coefficient assumed at the fingertips.
pub const DEFAULT_FRICTION: f64 = 0.3;

/// Whether some pair of contacts can squeeze the object without slipping:
/// the line joining them lies inside both friction cones.
pub fn pinch_stable(contacts: &[Contact], mu: f64) -> bool {
    let cone = mu.max(0.0).atan();
    let inside = |n: &Vector3<f64>, d: &Vector3<f64>| {
        let cos = (-n).dot(d) / (n.norm() * d.norm());
        cos.clamp(-1.0, 1.0).acos() <= cone + 1e-12
    };
    contacts.iter().enumerate().any(|(i, a)| {
        contacts[i + 1..].iter().any(|b| {
            let d = b.point - a.point;
            d.norm() > 0.0 && inside(&a.normal, &d) && inside(&b.normal, &(-d))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::configure_mode;
    use crate::grasp::sim::find_contacts;
    use crate::types::{default_hand, GraspMode};

    fn contact(finger: FingerRole, link: Link, fingertip: bool) -> Contact {
        Contact {
            finger,
            link,
            point: Vector3::zeros(),
            normal: Vector3::z(),
            fingertip,
        }
    }

    fn washer() -> GraspObject {
        GraspObject::Planar {
            profile: Profile::ConvexPolygon {
                vertices: vec![
                    [-15.0, -105.0],
                    [15.0, -105.0],
                    [15.0, -103.0],
                    [-15.0, -103.0],
                ],
            },
        }
    }

    #[test]
    fn no_contacts_is_miss() {
        let hand = default_hand();
        let states = [JointState::new(0.0, 0.0); 4];
        assert_eq!(
            classify_outcome(&hand, &[], &states, &washer()),
            GraspClass::Miss
        );
    }

    #[test]
    fn two_tips_on_washer_pinch() {
        let hand = default_hand();
        let states = [JointState::new(0.0, 0.0); 4];
        let cs = [
            contact(FingerRole::ALeft, Link::Distal, true),
            contact(FingerRole::ARight, Link::Distal, true),
        ];
        assert_eq!(
            classify_outcome(&hand, &cs, &states, &washer()),
            GraspClass::FingertipPinch
        );
    }

    #[test]
    fn wrapped_circle_caged() {
        let hand = configure_mode(&default_hand(), GraspMode::Cylindrical).unwrap();
        let states = [JointState::new(-0.3, 0.8); 4];
        let obs = Obstacles::new(&hand, &states);
        let zc = -34.19;
        let dot = GraspObject::Planar {
            profile: Profile::Circle {
                center: [0.0, zc],
                radius: 1e-9,
            },
        };
        let room = obs
            .models
            .iter()
            .map(|m| m.object_clearance(states[0], dot.section(&m.frame, m.design.width).as_ref()))
            .fold(f64::INFINITY, f64::min);
        let held = GraspObject::Planar {
            profile: Profile::Circle {
                center: [0.0, zc],
                radius: room - 5e-4,
            },
        };
        assert!(!obs.blocked(&held));
        let cs = find_contacts(&hand, &states, &held, f64::NEG_INFINITY);
        let links: HashSet<Link> = cs.iter().map(|c| c.link).collect();
        assert!(cs.len() >= 3 && links.len() == 2, "{cs:?}");
        assert!(is_caged(&hand, &states, &held));
        assert_eq!(
            classify_outcome(&hand, &cs, &states, &held),
            GraspClass::Caged
        );

        let below = GraspObject::Planar {
            profile: Profile::Circle {
                center: [0.0, -150.0],
                radius: 5.0,
            },
        };
        assert!(!is_caged(&hand, &states, &below));
        assert!(escapes_along(&hand, &states, &below, -Vector3::z()));
        assert!(!escapes_along(&hand, &states, &below, Vector3::z()));
        assert_eq!(
            classify_outcome(&hand, &cs, &states, &below),
            GraspClass::Enveloping
        );
    }

    #[test]
    fn spread_contacts_envelop() {
        let hand = default_hand();
        let states = [JointState::new(0.0, 0.0); 4];
        let cs = [
            contact(FingerRole::ALeft, Link::Distal, false),
            contact(FingerRole::ARight, Link::Distal, false),
            contact(FingerRole::BLeft, Link::Distal, true),
        ];
        assert_eq!(
            classify_outcome(&hand, &cs, &states, &washer()),
            GraspClass::Enveloping
        );
        assert_eq!(
            classify_outcome(&hand, &cs[..2], &states, &washer()),
            GraspClass::FingertipPinch
        );
    }

    #[test]
    fn antipodal_pinch_holds() {
        let a = Contact {
            finger: FingerRole::ALeft,
            link: Link::Distal,
            point: Vector3::new(-10.0, 0.0, 0.0),
            normal: -Vector3::x(),
            fingertip: true,
        };
        let mut b = a;
        b.point.x = 10.0;
        b.normal = Vector3::x();
        assert!(pinch_stable(&[a, b], DEFAULT_FRICTION));
        b.normal = Vector3::new(1.0, 0.0, 1.0).normalize();
        assert!(!pinch_stable(&[a, b], DEFAULT_FRICTION));
        assert!(pinch_stable(&[a, b], 1.1));
    }
}
