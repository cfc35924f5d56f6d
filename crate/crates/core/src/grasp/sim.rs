//! Quasi-static closing of the hand on an object.
//!
//! Each iteration pumps a small fluid volume into the supply line, lets the
//! two muscles share it according to their loads, and moves every finger to
//! the minimum-energy state on its new tendon contour that is reachable
//! without penetrating the object or the table. A free object on the table
//! is pushed horizontally whenever that lets the fingers follow their
//! unhindered path; otherwise it is held and the fingers wrap around it.

use log::debug;
use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::classify::{classify_outcome, GraspClass};
use super::shapes::{GraspObject, Section};
use crate::actuation::{distribute_volume, HydraulicCircuit, MuscleParams};
use crate::energy::{energy_unchecked, full_retraction, minimize_1d, LevelSet};
use crate::error::{Error, Result};
use crate::geometry::{
    configure_mode, finger_frame, link_direction, table_height, FingerFrame, HandPose,
};
use crate::types::{FingerDesign, FingerRole, GraspMode, HandConfig, JointState};

/// Clearance below which a phalanx counts as touching the object, mm.
pub const CONTACT_TOL: f64 = 1e-3;
const SCAN: usize = 512;
const PROBE: f64 = 1e-3;
const PUSH_ITERS: usize = 40;
const PUSH_MARGIN: f64 = 1e-10;
const BISECT: usize = 48;
const PUSH_BISECT: usize = 30;
const TIP_TOL: f64 = 1e-6;
const IDLE_LIMIT: usize = 3;
/// Largest joint motion between successive states of a finger, rad.
const JUMP_LIMIT: f64 = 0.5;
/// Accepted numerical penetration, mm.
const PENETRATION_TOL: f64 = 1e-10;
/// Gap left between the table and the lowest swept phalanx point, mm.
const TABLE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Proximal,
    Distal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contact {
    pub finger: FingerRole,
    pub link: Link,
    /// Contact point on the object surface, hand frame.
    pub point: Vector3<f64>,
    /// Outward object normal at the contact.
    pub normal: Vector3<f64>,
    /// Contact lies on the rounded cap beyond the distal segment end.
    pub fingertip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Largest tendon motion per iteration, mm.
    pub step: f64,
    pub max_steps: usize,
    /// Muscles whose tendons are mechanically jammed.
    pub jammed: [bool; 2],
    /// Table plane in hand coordinates; defaults to the lowest point the
    /// fingers sweep when closing unhindered.
    pub table_z: Option<f64>,
    /// Largest horizontal object displacement accepted in one iteration, mm.
    pub max_push: f64,
    pub muscle: MuscleParams,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_steps: 20_000,
            jammed: [false; 2],
            table_z: None,
            max_push: 10.0,
            muscle: MuscleParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No finger could move any further.
    Stalled,
    /// The pump reached its stall pressure.
    Overpressure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStep {
    pub pumped_volume: f64,
    pub pressure: f64,
    pub contraction: [f64; 2],
    /// Fluid held by each muscle, mL.
    pub volumes: [f64; 2],
    /// Tendon retracted at each finger, mm.
    pub retraction: [f64; 4],
    pub states: [JointState; 4],
    pub object_offset: Vector3<f64>,
    /// Smallest phalanx clearance to object and table, mm.
    pub min_clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraspOutcome {
    pub classification: GraspClass,
    pub contacts: Vec<Contact>,
    pub final_states: [JointState; 4],
    /// Object where the closure left it.
    pub final_object: GraspObject,
    pub object_displacement: Vector3<f64>,
    pub table_z: f64,
    pub termination: Termination,
    pub trajectory: Vec<SimStep>,
}

/// Table plane for a hand configured in `mode`: the lowest phalanx point on
/// its unhindered closing path.
pub fn grasp_table_z(hand: &HandConfig, mode: GraspMode) -> Result<f64> {
    let h = configure_mode(hand, mode)?;
    if mode != GraspMode::Precision {
        return Ok(table_height(&h) - TABLE_GAP);
    }
    let mut low = f64::INFINITY;
    for role in FingerRole::ALL {
        let f = h.finger(role);
        let fr = finger_frame(&h, role);
        let q2 = f.rest_state().q2;
        let lim = f.joints[0].limits;
        let lowest = |q1: f64| {
            let [_, j, t] = chain(f, &fr, JointState::new(q1, q2));
            j.y.min(t.y).min(0.0) - f.thickness / 2.0 + fr.base.z
        };
        low = low.min(minimize_1d(lim.lo, lim.hi, lowest, 2000).1);
    }
    Ok(low - TABLE_GAP)
}

fn chain(f: &FingerDesign, fr: &FingerFrame, s: JointState) -> [Vector2<f64>; 3] {
    let t1 = s.q1 + fr.tilt;
    let joint = link_direction(t1) * f.proximal_length;
    let tip = joint + link_direction(t1 + s.q2) * f.distal_length;
    [Vector2::zeros(), joint, tip]
}

pub(crate) struct FingerModel {
    pub role: FingerRole,
    pub design: FingerDesign,
    pub frame: FingerFrame,
    pub table_v: f64,
    /// Admissible distal band when locked.
    pub lock: Option<(f64, f64)>,
    full: f64,
    longest: f64,
}

impl FingerModel {
    pub fn new(hand: &HandConfig, role: FingerRole, table_z: f64) -> Self {
        let design = hand.finger(role).clone();
        let frame = finger_frame(hand, role);
        let longest = design.joints[0].tendon_length_at(design.joints[0].limits.lo)
            + design.joints[1].tendon_length_at(design.joints[1].limits.lo);
        Self {
            role,
            full: full_retraction(&design),
            design,
            frame,
            table_v: table_z - frame.base.z,
            lock: None,
            longest,
        }
    }

    fn radius(&self) -> f64 {
        self.design.thickness / 2.0
    }

    pub fn links(&self, s: JointState) -> [(Vector2<f64>, Vector2<f64>); 2] {
        let [b, j, t] = chain(&self.design, &self.frame, s);
        [(b, j), (j, t)]
    }

    pub fn retraction_of(&self, s: JointState) -> f64 {
        self.longest
            - self.design.joints[0].tendon_length_at(s.q1)
            - self.design.joints[1].tendon_length_at(s.q2)
    }

    pub fn energy(&self, s: JointState) -> f64 {
        energy_unchecked(&self.design, s)
    }

    pub fn table_clearance(&self, s: JointState) -> f64 {
        let [_, j, t] = chain(&self.design, &self.frame, s);
        j.y.min(t.y).min(0.0) - self.radius() - self.table_v
    }

    pub fn object_clearance(&self, s: JointState, sec: Option<&Section>) -> f64 {
        match sec {
            None => f64::INFINITY,
            Some(sec) => self
                .links(s)
                .iter()
                .map(|(a, b)| sec.separation(*a, *b).distance - self.radius())
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn clearance(&self, s: JointState, sec: Option<&Section>) -> f64 {
        self.table_clearance(s).min(self.object_clearance(s, sec))
    }

    fn state(&self, set: &LevelSet<'_>, r1: f64) -> JointState {
        let mut s = set.state_at(r1);
        if let Some((a, b)) = self.lock {
            s.q2 = s.q2.clamp(a, b);
        }
        s
    }

    /// Minimum-energy state at retraction `r` in the feasible stretch of the
    /// contour reachable from `prev`. `None` when the finger cannot get there.
    pub fn advance(&self, r: f64, prev: JointState, sec: Option<&Section>) -> Option<JointState> {
        if r > self.full + 1e-12 * (1.0 + self.full) || r < 0.0 {
            return None;
        }
        let set = LevelSet::from_retraction(&self.design, r);
        let (mut lo, mut hi) = set.share_range();
        if let Some((qa, qb)) = self.lock {
            let j2 = &self.design.joints[1];
            let l0 = j2.tendon_length_at(j2.limits.lo);
            let ra = l0 - j2.tendon_length_at(qa);
            let rb = l0 - j2.tendon_length_at(qb);
            lo = lo.max(r - rb);
            hi = hi.min(r - ra);
            if lo > hi + 1e-12 {
                return None;
            }
            hi = hi.max(lo);
        }
        let ok = |x: f64| self.clearance(self.state(&set, x), sec) >= -PENETRATION_TOL;
        if hi - lo <= 1e-12 {
            return ok(lo).then(|| self.state(&set, lo));
        }
        let prev_share = set.share_for_q1(prev.q1);
        let prev_r = self.retraction_of(prev);
        let w0 = prev_share.clamp(lo, hi);
        let w1 = (prev_share + (r - prev_r).max(0.0)).clamp(lo, hi);

        let mut xs: Vec<f64> = (0..=SCAN)
            .map(|i| {
                if i == SCAN {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / SCAN as f64
                }
            })
            .collect();
        xs.push(w0);
        xs.push(w1);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let feas: Vec<bool> = xs.iter().map(|&x| ok(x)).collect();

        let refine = |mut good: f64, mut bad: f64| {
            for _ in 0..BISECT {
                let mid = 0.5 * (good + bad);
                if ok(mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            good
        };
        let mut best: Option<(f64, f64, f64)> = None;
        let mut i = 0;
        while i < xs.len() {
            if !feas[i] {
                i += 1;
                continue;
            }
            let mut j = i;
            while j + 1 < xs.len() && feas[j + 1] {
                j += 1;
            }
            let a = if i > 0 {
                refine(xs[i], xs[i - 1])
            } else {
                xs[i]
            };
            let b = if j + 1 < xs.len() {
                refine(xs[j], xs[j + 1])
            } else {
                xs[j]
            };
            let gap = if a <= w1 && b >= w0 {
                0.0
            } else {
                let near = if b < w0 { b } else { a };
                self.state(&set, near).max_abs_diff(&prev)
            };
            if gap <= JUMP_LIMIT && best.is_none_or(|(g, _, _)| gap < g) {
                best = Some((gap, a, b));
            }
            i = j + 1;
        }
        let (_, a, b) = best?;
        let (r1, _, _) = set.minimize_between(a, b);
        Some(if ok(r1) {
            self.state(&set, r1)
        } else {
            self.state(&set, a)
        })
    }
}

/// Section normal lifted to the hand frame and the matching surface point.
pub(crate) fn contact_frame(
    object: &GraspObject,
    frame: &FingerFrame,
    width: f64,
    p2: Vector2<f64>,
    n2: Vector2<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let in_plane = frame.to_hand(p2);
    let n_plane = frame.inward * n2.x + Vector3::z() * n2.y;
    let half = width / 2.0;
    match object {
        GraspObject::Sphere { center, .. } => {
            let c = Vector3::from(*center);
            let point = in_plane + frame.axis * frame.lateral(&c).clamp(-half, half);
            ((point), (point - c).normalize())
        }
        GraspObject::Cylinder { base_center, .. } => {
            let c = Vector3::from(*base_center);
            let point = in_plane + frame.axis * frame.lateral(&c).clamp(-half, half);
            if n2.y.abs() > 1.0 - 1e-9 {
                (point, Vector3::z() * n2.y.signum())
            } else {
                let mut radial = point - c;
                radial.z = 0.0;
                (point, radial.normalize())
            }
        }
        GraspObject::Planar { .. } => (in_plane, n_plane),
    }
}

pub(crate) fn sections(models: &[FingerModel; 4], object: &GraspObject) -> [Option<Section>; 4] {
    std::array::from_fn(|i| object.section(&models[i].frame, models[i].design.width))
}

/// Clearance of one finger's phalanges to an object section and the table.
pub struct ClearanceProbe {
    model: FingerModel,
    section: Option<Section>,
}

impl ClearanceProbe {
    /// `hand` must already be configured for the grasp mode.
    pub fn new(hand: &HandConfig, role: FingerRole, object: &GraspObject, table_z: f64) -> Self {
        let model = FingerModel::new(hand, role, table_z);
        let section = object.section(&model.frame, model.design.width);
        Self { model, section }
    }

    /// Smallest surface distance, mm; negative when a phalanx penetrates.
    pub fn clearance(&self, s: JointState) -> f64 {
        self.model.clearance(s, self.section.as_ref())
    }
}

/// Phalanges within [`CONTACT_TOL`] of the object.
pub fn find_contacts(
    hand: &HandConfig,
    states: &[JointState; 4],
    object: &GraspObject,
    table_z: f64,
) -> Vec<Contact> {
    let models = FingerRole::ALL.map(|r| FingerModel::new(hand, r, table_z));
    contacts_with(&models, states, object)
}

fn contacts_with(
    models: &[FingerModel; 4],
    states: &[JointState; 4],
    object: &GraspObject,
) -> Vec<Contact> {
    let secs = sections(models, object);
    let mut out = Vec::new();
    for (k, m) in models.iter().enumerate() {
        let Some(sec) = &secs[k] else { continue };
        for (link, (a, b)) in [Link::Proximal, Link::Distal]
            .into_iter()
            .zip(m.links(states[k]))
        {
            let sep = sec.separation(a, b);
            if sep.distance - m.radius() <= CONTACT_TOL {
                let (point, normal) =
                    contact_frame(object, &m.frame, m.design.width, sep.point, sep.normal);
                let fingertip = link == Link::Distal && {
                    let d = b - a;
                    let len = d.norm();
                    (sep.point - a).dot(&d) / (len * len) >= 1.0 - TIP_TOL / len
                };
                out.push(Contact {
                    finger: m.role,
                    link,
                    point,
                    normal,
                    fingertip,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct State {
    circuit: HydraulicCircuit,
    states: [JointState; 4],
    retraction: [f64; 4],
    offset: Vector3<f64>,
}

struct Resolved {
    states: [JointState; 4],
    retraction: [f64; 4],
    offset: Vector3<f64>,
    achieved: [f64; 2],
}

struct Closure<'a> {
    models: [FingerModel; 4],
    muscle_of: [usize; 4],
    start: [f64; 4],
    object: &'a GraspObject,
    coupled: bool,
    max_push: f64,
}

/// Solve `n_k . d <= g_k` for the shortest `d`.
fn min_norm_push(cons: &[(Vector2<f64>, f64)]) -> Option<Vector2<f64>> {
    let ok = |d: &Vector2<f64>| {
        cons.iter()
            .all(|(n, g)| n.dot(d) <= g + 1e-12 * (1.0 + g.abs()))
    };
    let mut best: Option<Vector2<f64>> = None;
    let mut consider = |d: Vector2<f64>| {
        if d.iter().all(|v| v.is_finite()) && ok(&d) && best.is_none_or(|b| d.norm() < b.norm()) {
            best = Some(d);
        }
    };
    consider(Vector2::zeros());
    for (n, g) in cons {
        let n2 = n.norm_squared();
        if n2 > 1e-18 {
            consider(n * (g / n2));
        }
    }
    for i in 0..cons.len() {
        for j in i + 1..cons.len() {
            let (a, ga) = cons[i];
            let (b, gb) = cons[j];
            let det = a.x * b.y - a.y * b.x;
            if det.abs() > 1e-12 {
                consider(Vector2::new(
                    (ga * b.y - gb * a.y) / det,
                    (a.x * gb - b.x * ga) / det,
                ));
            }
        }
    }
    best
}

impl Closure<'_> {
    fn object_at(&self, offset: Vector3<f64>) -> GraspObject {
        self.object.translated(offset)
    }

    fn target(&self, st: &State, k: usize, contraction: [f64; 2]) -> f64 {
        (self.start[k] + contraction[self.muscle_of[k]]).max(st.retraction[k])
    }

    /// Let the fingers follow their unhindered path and slide the object out
    /// of the way, if that is possible.
    fn try_push(&self, st: &State, targets: &[f64; 4]) -> Option<([JointState; 4], Vector3<f64>)> {
        let mut desired = st.states;
        for k in 0..4 {
            if targets[k] > st.retraction[k] {
                desired[k] = self.models[k].advance(targets[k], st.states[k], None)?;
            }
        }
        let mut offset = st.offset;
        for _ in 0..PUSH_ITERS {
            let obj = self.object_at(offset);
            let secs = sections(&self.models, &obj);
            let mut worst = f64::INFINITY;
            let mut cons = Vec::new();
            for (k, m) in self.models.iter().enumerate() {
                let Some(sec) = &secs[k] else { continue };
                for (a, b) in m.links(desired[k]) {
                    let sep = sec.separation(a, b);
                    let g = sep.distance - m.radius();
                    worst = worst.min(g);
                    if g < 1.0 {
                        let n3 = m.frame.inward * sep.normal.x;
                        cons.push((Vector2::new(n3.x, n3.y), g - PUSH_MARGIN));
                    }
                }
            }
            if worst >= 0.0 {
                return Some((desired, offset));
            }
            let d = min_norm_push(&cons)?;
            offset += Vector3::new(d.x, d.y, 0.0);
            if (offset - st.offset).norm() > self.max_push {
                return None;
            }
        }
        None
    }

    /// Object held in place: fingers wrap around it, and a finger group that
    /// cannot reach its target stops at the furthest reachable retraction.
    fn hold(&self, st: &State, contraction: [f64; 2]) -> Resolved {
        let obj = self.object_at(st.offset);
        let secs = sections(&self.models, &obj);
        let now = [
            st.circuit.muscles[0].contraction,
            st.circuit.muscles[1].contraction,
        ];
        let groups: Vec<Vec<usize>> = if self.coupled {
            vec![vec![0, 1]]
        } else {
            vec![vec![0], vec![1]]
        };
        let mut out = Resolved {
            states: st.states,
            retraction: st.retraction,
            offset: st.offset,
            achieved: now,
        };
        for muscles in groups {
            let fingers: Vec<usize> = (0..4)
                .filter(|k| muscles.contains(&self.muscle_of[*k]))
                .collect();
            let at = |t: f64| -> Option<Vec<(usize, f64, JointState)>> {
                let c = [
                    now[0] + t * (contraction[0] - now[0]),
                    now[1] + t * (contraction[1] - now[1]),
                ];
                fingers
                    .iter()
                    .map(|&k| {
                        let r = self.target(st, k, c);
                        if r <= st.retraction[k] {
                            return Some((k, st.retraction[k], st.states[k]));
                        }
                        self.models[k]
                            .advance(r, st.states[k], secs[k].as_ref())
                            .map(|s| (k, r, s))
                    })
                    .collect()
            };
            let (t, moved) = match at(1.0) {
                Some(m) => (1.0, Some(m)),
                None => {
                    let (mut good, mut bad) = (0.0, 1.0);
                    let mut best = None;
                    for _ in 0..BISECT {
                        let mid = 0.5 * (good + bad);
                        match at(mid) {
                            Some(m) => {
                                good = mid;
                                best = Some(m);
                            }
                            None => bad = mid,
                        }
                    }
                    (good, best)
                }
            };
            if let Some(moved) = moved {
                for (k, r, s) in moved {
                    out.retraction[k] = r;
                    out.states[k] = s;
                }
                for &m in &muscles {
                    out.achieved[m] = now[m] + t * (contraction[m] - now[m]);
                }
            }
        }
        out
    }

    fn resolve(&self, st: &State, contraction: [f64; 2]) -> Resolved {
        let targets: [f64; 4] = std::array::from_fn(|k| self.target(st, k, contraction));
        if let Some((states, offset)) = self.try_push(st, &targets) {
            return Resolved {
                states,
                retraction: targets,
                offset,
                achieved: contraction,
            };
        }
        let now = [
            st.circuit.muscles[0].contraction,
            st.circuit.muscles[1].contraction,
        ];
        let partial = |t: f64| -> [f64; 2] {
            [
                now[0] + t * (contraction[0] - now[0]),
                now[1] + t * (contraction[1] - now[1]),
            ]
        };
        let (mut good, mut bad) = (0.0, 1.0);
        let mut pushed = None;
        for _ in 0..PUSH_BISECT {
            let mid = 0.5 * (good + bad);
            let c = partial(mid);
            let tg: [f64; 4] = std::array::from_fn(|k| self.target(st, k, c));
            match self.try_push(st, &tg) {
                Some((states, offset)) => {
                    good = mid;
                    pushed = Some((c, tg, states, offset));
                }
                None => bad = mid,
            }
        }
        match pushed {
            Some((c, tg, states, offset)) => {
                let mut mid = st.clone();
                mid.states = states;
                mid.retraction = tg;
                mid.offset = offset;
                mid.circuit.muscles[0].contraction = c[0];
                mid.circuit.muscles[1].contraction = c[1];
                self.hold(&mid, contraction)
            }
            None => self.hold(st, contraction),
        }
    }

    fn min_clearance(&self, states: &[JointState; 4], offset: Vector3<f64>) -> f64 {
        let obj = self.object_at(offset);
        let secs = sections(&self.models, &obj);
        (0..4)
            .map(|k| self.models[k].clearance(states[k], secs[k].as_ref()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Tendon tension each muscle meets, from a small probing retraction;
    /// infinite when its fingers cannot move at all.
    fn loads(&self, st: &State, jammed: [bool; 2]) -> [f64; 2] {
        let now = [
            st.circuit.muscles[0].contraction,
            st.circuit.muscles[1].contraction,
        ];
        let probe = |which: &[usize]| -> f64 {
            if which.iter().any(|&m| jammed[m]) {
                return f64::INFINITY;
            }
            let mut c = now;
            for &m in which {
                c[m] += PROBE;
            }
            let r = self.resolve(st, c);
            let moved = which
                .iter()
                .map(|&m| r.achieved[m] - now[m])
                .fold(f64::INFINITY, f64::min);
            if !(moved > 1e-6 * PROBE) {
                return f64::INFINITY;
            }
            let de: f64 = (0..4)
                .filter(|k| which.contains(&self.muscle_of[*k]))
                .map(|k| self.models[k].energy(r.states[k]) - self.models[k].energy(st.states[k]))
                .sum();
            (de / moved).max(0.0)
        };
        if self.coupled {
            let l = probe(&[0, 1]);
            [l, l]
        } else {
            [probe(&[0]), probe(&[1])]
        }
    }
}

fn record(st: &State, min_clearance: f64) -> SimStep {
    SimStep {
        pumped_volume: st.circuit.pumped_volume,
        pressure: st.circuit.shared_pressure,
        contraction: [
            st.circuit.muscles[0].contraction,
            st.circuit.muscles[1].contraction,
        ],
        volumes: [st.circuit.muscles[0].volume, st.circuit.muscles[1].volume],
        retraction: st.retraction,
        states: st.states,
        object_offset: st.offset,
        min_clearance,
    }
}

/// Close the hand of `pose`, reconfigured for `mode`, on `object` (hand
/// frame) with default options and the given step.
pub fn close_grasp(
    pose: &HandPose,
    object: &GraspObject,
    mode: GraspMode,
    step: f64,
) -> Result<GraspOutcome> {
    close_grasp_with(
        pose,
        object,
        mode,
        &SimOptions {
            step,
            ..SimOptions::default()
        },
    )
}

pub fn close_grasp_with(
    pose: &HandPose,
    object: &GraspObject,
    mode: GraspMode,
    opts: &SimOptions,
) -> Result<GraspOutcome> {
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return Err(Error::domain("step", opts.step, 0.0, f64::INFINITY));
    }
    object.validate()?;
    if object.is_planar() && mode == GraspMode::Spherical {
        return Err(Error::Mode(
            "planar objects need parallel flexion planes; use precision or cylindrical mode".into(),
        ));
    }
    let hand = configure_mode(&pose.hand, mode)?;
    hand.validate()?;
    let table_z = match opts.table_z {
        Some(z) => z,
        None => grasp_table_z(&pose.hand, mode)?,
    };
    let coupled = mode == GraspMode::Precision;
    let mut models = FingerRole::ALL.map(|r| FingerModel::new(&hand, r, table_z));
    let states0 = pose.joint_states;
    for (k, m) in models.iter_mut().enumerate() {
        m.design.check_state(states0[k])?;
        if coupled {
            let q2 = states0[k].q2;
            let lim = m.design.joints[1].limits;
            m.lock = Some((
                (q2 - hand.lock_compliance).max(lim.lo),
                (q2 + hand.lock_compliance).min(lim.hi),
            ));
        }
    }
    let start = std::array::from_fn(|k| models[k].retraction_of(states0[k]));
    let sim = Closure {
        muscle_of: FingerRole::ALL.map(|r| hand.muscle_of(r)),
        models,
        start,
        object,
        coupled,
        max_push: opts.max_push,
    };
    let mut st = State {
        circuit: HydraulicCircuit::new(opts.muscle)?,
        states: states0,
        retraction: start,
        offset: Vector3::zeros(),
    };
    let c0 = sim.min_clearance(&st.states, st.offset);
    if c0 < -1e-6 {
        return Err(Error::invalid(format!(
            "object or table penetrates the hand in its initial pose (clearance {c0:.6} mm)"
        )));
    }
    let params = opts.muscle;
    let mut trajectory = vec![record(&st, c0)];
    let mut idle = 0;
    let termination = loop {
        if trajectory.len() > opts.max_steps {
            let tail: Vec<String> = trajectory
                .iter()
                .rev()
                .take(5)
                .map(|s| format!("{:?}", s.retraction))
                .collect();
            return Err(Error::Simulation {
                message: format!("no convergence after {} steps", opts.max_steps),
                trace: tail,
            });
        }
        let loads = sim.loads(&st, opts.jammed);
        if loads.iter().all(|l| l.is_infinite()) {
            break Termination::Stalled;
        }
        let slope = (0..2)
            .filter(|&m| loads[m].is_finite())
            .map(|m| {
                let (a, b) = params.coefficients();
                let e = st.circuit.contraction_ratio(m);
                params.cross_section * (a * (1.0 - e).powi(2) - b) / 1000.0
            })
            .fold(f64::INFINITY, f64::min);
        let dv = opts.step * slope.max(0.0);
        let next = match distribute_volume(&st.circuit, loads, dv) {
            Ok(c) => c,
            Err(Error::Overpressure { .. }) => break Termination::Overpressure,
            Err(e) => return Err(e),
        };
        let target = [next.muscles[0].contraction, next.muscles[1].contraction];
        let r = sim.resolve(&st, target);
        let mut circuit = next;
        if r.achieved != target {
            let v = r.achieved.map(|c| params.volume(c / params.rest_length));
            let keep: [f64; 2] = std::array::from_fn(|m| {
                if r.achieved[m] == target[m] {
                    circuit.muscles[m].volume
                } else {
                    v[m]
                }
            });
            circuit.set_volumes(keep);
        }
        let progressed = (0..4).any(|k| r.retraction[k] > st.retraction[k]);
        st = State {
            circuit,
            states: r.states,
            retraction: r.retraction,
            offset: r.offset,
        };
        trajectory.push(record(&st, sim.min_clearance(&st.states, st.offset)));
        if progressed {
            idle = 0;
        } else {
            idle += 1;
            if idle >= IDLE_LIMIT {
                break Termination::Stalled;
            }
        }
    };
    debug!(
        "closure ended after {} steps: {termination:?}",
        trajectory.len()
    );
    let final_object = object.translated(st.offset);
    let contacts = contacts_with(&sim.models, &st.states, &final_object);
    let classification = classify_outcome(&hand, &contacts, &st.states, &final_object);
    Ok(GraspOutcome {
        classification,
        contacts,
        final_states: st.states,
        final_object,
        object_displacement: st.offset,
        table_z,
        termination,
        trajectory,
    })
}
