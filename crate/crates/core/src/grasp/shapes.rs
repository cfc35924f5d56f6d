//! Graspable primitives and their sections by a finger's slab.
//!
//! A finger occupies a slab of its width around its flexion plane, with a
//! capsule profile (radius half the finger thickness) along each phalanx.
//! Where a primitive meets that slab it is reduced to a planar section in the
//! finger's `(u, v)` coordinates, so finger-object clearance becomes a 2-D
//! capsule-versus-section distance.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FingerFrame;

/// Outline of a planar object in the hand's `(x, z)` plane, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    /// Counter-clockwise vertices.
    ConvexPolygon {
        vertices: Vec<[f64; 2]>,
    },
}

/// Object to grasp, in hand coordinates (table plane at `z = -palm height`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum GraspObject {
    /// Prism extruded along the hand `y` axis.
    Planar {
        profile: Profile,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Upright cylinder standing on its base circle.
    Cylinder {
        base_center: [f64; 3],
        radius: f64,
        height: f64,
    },
}

fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Circle { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::invalid("circle radius must be > 0"));
                }
            }
            Profile::ConvexPolygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::invalid("polygon needs at least 3 vertices"));
                }
                let v: Vec<Vector2<f64>> =
                    vertices.iter().map(|p| Vector2::new(p[0], p[1])).collect();
                let n = v.len();
                for i in 0..n {
                    let turn = cross2(v[(i + 1) % n] - v[i], v[(i + 2) % n] - v[(i + 1) % n]);
                    if !(turn > 0.0) {
                        return Err(Error::invalid(
                            "polygon must be strictly convex and counter-clockwise",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

impl GraspObject {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            GraspObject::Planar { profile } => profile.validate(),
            GraspObject::Sphere { center, radius } => {
                if !(finite(center) && radius.is_finite() && *radius > 0.0) {
                    return Err(Error::invalid("sphere radius must be > 0"));
                }
                Ok(())
            }
            GraspObject::Cylinder {
                base_center,
                radius,
                height,
            } => {
                if !(finite(base_center) && *radius > 0.0 && *height > 0.0)
                    || !radius.is_finite()
                    || !height.is_finite()
                {
                    return Err(Error::invalid("cylinder radius and height must be > 0"));
                }
                Ok(())
            }
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, GraspObject::Planar { .. })
    }

    /// Copy translated by `d` (hand frame).
    pub fn translated(&self, d: Vector3<f64>) -> GraspObject {
        let add3 = |p: &[f64; 3]| [p[0] + d.x, p[1] + d.y, p[2] + d.z];
        match self {
            GraspObject::Planar { profile } => GraspObject::Planar {
                profile: match profile {
                    Profile::Circle { center, radius } => Profile::Circle {
                        center: [center[0] + d.x, center[1] + d.z],
                        radius: *radius,
                    },
                    Profile::ConvexPolygon { vertices } => Profile::ConvexPolygon {
                        vertices: vertices.iter().map(|v| [v[0] + d.x, v[1] + d.z]).collect(),
                    },
                },
            },
            GraspObject::Sphere { center, radius } => GraspObject::Sphere {
                center: add3(center),
                radius: *radius,
            },
            GraspObject::Cylinder {
                base_center,
                radius,
                height,
            } => GraspObject::Cylinder {
                base_center: add3(base_center),
                radius: *radius,
                height: *height,
            },
        }
    }

    /// Reference point used to report object displacement.
    pub fn reference_point(&self) -> Vector3<f64> {
        match self {
            GraspObject::Planar { profile } => match profile {
                Profile::Circle { center, .. } => Vector3::new(center[0], 0.0, center[1]),
                Profile::ConvexPolygon { vertices } => {
                    let n = vertices.len() as f64;
                    let (sx, sz) = vertices
                        .iter()
                        .fold((0.0, 0.0), |a, v| (a.0 + v[0], a.1 + v[1]));
                    Vector3::new(sx / n, 0.0, sz / n)
                }
            },
            GraspObject::Sphere { center, .. } => Vector3::from(*center),
            GraspObject::Cylinder { base_center, .. } => Vector3::from(*base_center),
        }
    }

    /// Lowest point of the object (z).
    pub fn bottom(&self) -> f64 {
        match self {
            GraspObject::Planar { profile } => match profile {
                Profile::Circle { center, radius } => center[1] - radius,
                Profile::ConvexPolygon { vertices } => {
                    vertices.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min)
                }
            },
            GraspObject::Sphere { center, radius } => center[2] - radius,
            GraspObject::Cylinder { base_center, .. } => base_center[2],
        }
    }

    /// Section by the slab of a finger of width `width`, in its plane
    /// coordinates. `None` when the object misses the slab.
    pub fn section(&self, frame: &FingerFrame, width: f64) -> Option<Section> {
        let half = 0.5 * width;
        match self {
            GraspObject::Planar { profile } => {
                let sx = frame.inward.x;
                let map =
                    |p: &[f64; 2]| Vector2::new((p[0] - frame.base.x) * sx, p[1] - frame.base.z);
                Some(match profile {
                    Profile::Circle { center, radius } => Section::Circle {
                        center: map(center),
                        radius: *radius,
                    },
                    Profile::ConvexPolygon { vertices } => {
                        let mut v: Vec<Vector2<f64>> = vertices.iter().map(map).collect();
                        if sx < 0.0 {
                            v.reverse();
                        }
                        Section::Polygon(v)
                    }
                })
            }
            GraspObject::Sphere { center, radius } => {
                let c = Vector3::from(*center);
                let d = (frame.lateral(&c).abs() - half).max(0.0);
                if d >= *radius {
                    return None;
                }
                Some(Section::Circle {
                    center: frame.to_plane(&c),
                    radius: (radius * radius - d * d).sqrt(),
                })
            }
            GraspObject::Cylinder {
                base_center,
                radius,
                height,
            } => {
                let c = Vector3::from(*base_center);
                let d = (frame.lateral(&c).abs() - half).max(0.0);
                if d >= *radius {
                    return None;
                }
                let w = (radius * radius - d * d).sqrt();
                let p = frame.to_plane(&c);
                Some(Section::Polygon(vec![
                    Vector2::new(p.x - w, p.y),
                    Vector2::new(p.x + w, p.y),
                    Vector2::new(p.x + w, p.y + height),
                    Vector2::new(p.x - w, p.y + height),
                ]))
            }
        }
    }
}

/// Planar section of an object in finger-plane coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Circle {
        center: Vector2<f64>,
        radius: f64,
    },
    /// Counter-clockwise convex polygon.
    Polygon(Vec<Vector2<f64>>),
}

/// Closest point to `p` on segment `[a, b]`.
pub fn closest_on_segment(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> Vector2<f64> {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    a + ab * t
}

fn segments_intersect(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>, d: Vector2<f64>) -> bool {
    let o1 = cross2(b - a, c - a);
    let o2 = cross2(b - a, d - a);
    let o3 = cross2(d - c, a - c);
    let o4 = cross2(d - c, b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn inside_polygon(p: Vector2<f64>, v: &[Vector2<f64>]) -> bool {
    let n = v.len();
    (0..n).all(|i| cross2(v[(i + 1) % n] - v[i], p - v[i]) >= 0.0)
}

/// Signed separation between a segment and a section together with the
/// closest point on the section boundary and its outward normal. Negative
/// values are penetration depths along the best separating axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    pub distance: f64,
    pub point: Vector2<f64>,
    pub normal: Vector2<f64>,
}

impl Section {
    pub fn separation(&self, a: Vector2<f64>, b: Vector2<f64>) -> Separation {
        match self {
            Section::Circle { center, radius } => {
                let q = closest_on_segment(*center, a, b);
                let d = q - center;
                let n = d.norm();
                let normal = if n > 0.0 {
                    d / n
                } else {
                    let t = b - a;
                    Vector2::new(-t.y, t.x).normalize()
                };
                Separation {
                    distance: n - radius,
                    point: center + normal * *radius,
                    normal,
                }
            }
            Section::Polygon(v) => polygon_separation(v, a, b),
        }
    }
}

fn polygon_separation(v: &[Vector2<f64>], a: Vector2<f64>, b: Vector2<f64>) -> Separation {
    let n = v.len();
    let crossing = inside_polygon(a, v)
        || inside_polygon(b, v)
        || (0..n).any(|i| segments_intersect(a, b, v[i], v[(i + 1) % n]));
    if !crossing {
        let mut best = Separation {
            distance: f64::INFINITY,
            point: v[0],
            normal: Vector2::zeros(),
        };
        for i in 0..n {
            let (p, q) = (v[i], v[(i + 1) % n]);
            for (on_poly, on_seg) in [
                (closest_on_segment(a, p, q), a),
                (closest_on_segment(b, p, q), b),
                (p, closest_on_segment(p, a, b)),
            ] {
                let d = (on_seg - on_poly).norm();
                if d < best.distance {
                    let normal = if d > 0.0 {
                        (on_seg - on_poly) / d
                    } else {
                        let e = q - p;
                        Vector2::new(e.y, -e.x).normalize()
                    };
                    best = Separation {
                        distance: d,
                        point: on_poly,
                        normal,
                    };
                }
            }
        }
        return best;
    }
    let seg_dir = b - a;
    let mut axes: Vec<Vector2<f64>> = (0..n)
        .map(|i| {
            let e = v[(i + 1) % n] - v[i];
            Vector2::new(e.y, -e.x).normalize()
        })
        .collect();
    if seg_dir.norm() > 0.0 {
        let t = seg_dir.normalize();
        axes.push(Vector2::new(-t.y, t.x));
        axes.push(Vector2::new(t.y, -t.x));
    }
    let mut best_depth = f64::INFINITY;
    let mut best_axis = axes[0];
    for ax in axes {
        let poly_max = v
            .iter()
            .map(|p| p.dot(&ax))
            .fold(f64::NEG_INFINITY, f64::max);
        let seg_min = a.dot(&ax).min(b.dot(&ax));
        let depth = poly_max - seg_min;
        if depth < best_depth {
            best_depth = depth;
            best_axis = ax;
        }
    }
    let deepest = if a.dot(&best_axis) <= b.dot(&best_axis) {
        a
    } else {
        b
    };
    Separation {
        distance: -best_depth,
        point: deepest + best_axis * best_depth,
        normal: best_axis,
    }
}
