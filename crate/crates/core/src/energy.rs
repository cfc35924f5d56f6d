//! Elastic energy over joint space, constant-tendon-length contours and the
//! minimum-energy closing trajectory of a single finger.
//!
//! A contour is parametrised by how the total tendon retraction `R` is shared
//! between the joints: `r1` is the proximal share and `R - r1` the distal one.
//! Each joint angle is then recovered in closed form from its own tendon
//! length, so contour samples carry only rounding-level residuals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{FingerDesign, Joint, JointState};

/// Tendon length slack accepted when a target lies marginally outside the
/// achievable interval, mm.
const RANGE_TOL: f64 = 1e-9;
/// Retraction within this distance of a joint's bound snaps to that bound, mm.
const SNAP_TOL: f64 = 1e-12;
const DENSE_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub state: JointState,
    pub total_tendon_length: f64,
    pub elastic_energy: f64,
}

/// Row-major samples: `q1` varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub n1: usize,
    pub n2: usize,
    pub samples: Vec<EnergySample>,
}

impl EnergyGrid {
    pub fn get(&self, i: usize, j: usize) -> &EnergySample {
        &self.samples[i * self.n2 + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub target_total_tendon_length: f64,
    /// Ordered by increasing `q1` (and so decreasing `q2`).
    pub samples: Vec<JointState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub retracted_tendon: f64,
    pub state: JointState,
    pub elastic_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

pub(crate) fn total_tendon_length_unchecked(design: &FingerDesign, s: JointState) -> f64 {
    design.joints[0].tendon_length_at(s.q1) + design.joints[1].tendon_length_at(s.q2)
}

pub(crate) fn energy_unchecked(design: &FingerDesign, s: JointState) -> f64 {
    let stretch = design.joints[0].cord_length_at(s.q1) + design.joints[1].cord_length_at(s.q2);
    0.5 * design.spring_constant * stretch * stretch
}

pub fn total_tendon_length(design: &FingerDesign, state: JointState) -> Result<f64> {
    design.check_state(state)?;
    Ok(total_tendon_length_unchecked(design, state))
}

/// Energy stored in the shared elastic cord. Both joint stretches add along
/// the single cord before squaring.
pub fn elastic_energy(design: &FingerDesign, state: JointState) -> Result<f64> {
    design.check_state(state)?;
    Ok(energy_unchecked(design, state))
}

/// Partial derivatives of the elastic energy with respect to (q1, q2).
pub fn energy_gradient(design: &FingerDesign, s: JointState) -> [f64; 2] {
    let [j1, j2] = &design.joints;
    let stretch = j1.cord_length_at(s.q1) + j2.cord_length_at(s.q2);
    let k = design.spring_constant * stretch;
    [
        k * j1.elastic_moment_arm_at(s.q1),
        k * j2.elastic_moment_arm_at(s.q2),
    ]
}

/// Minimum and maximum total tendon length over the joint-limit box.
pub fn tendon_length_range(design: &FingerDesign) -> (f64, f64) {
    let lo = total_tendon_length_unchecked(design, design.full_flexion_state());
    let hi = total_tendon_length_unchecked(design, design.rest_state());
    (lo, hi)
}

/// Tendon retraction taking the finger from rest to full flexion, mm.
pub fn full_retraction(design: &FingerDesign) -> f64 {
    let (lo, hi) = tendon_length_range(design);
    hi - lo
}

/// One constant-tendon-length level set, parametrised by the proximal share
/// of the retraction.
#[derive(Debug, Clone, Copy)]
pub struct LevelSet<'a> {
    design: &'a FingerDesign,
    retraction: f64,
    span: [f64; 2],
    longest: [f64; 2],
}

impl<'a> LevelSet<'a> {
    /// Level set at total retraction `retraction` from rest (clamped into range).
    pub fn from_retraction(design: &'a FingerDesign, retraction: f64) -> Self {
        let mut span = [0.0; 2];
        let mut longest = [0.0; 2];
        for j in Joint::BOTH {
            let (l_lo, l_hi) = design.joint(j).tendon_length_span();
            longest[j.index()] = l_lo;
            span[j.index()] = l_lo - l_hi;
        }
        let retraction = retraction.clamp(0.0, span[0] + span[1]);
        Self {
            design,
            retraction,
            span,
            longest,
        }
    }

    pub fn new(design: &'a FingerDesign, target: f64) -> Result<Self> {
        let (min, max) = tendon_length_range(design);
        if !target.is_finite() || target < min - RANGE_TOL || target > max + RANGE_TOL {
            return Err(Error::Range { target, min, max });
        }
        Ok(Self::from_retraction(design, max - target))
    }

    pub fn design(&self) -> &'a FingerDesign {
        self.design
    }

    pub fn retraction(&self) -> f64 {
        self.retraction
    }

    pub fn target(&self) -> f64 {
        self.longest[0] + self.longest[1] - self.retraction
    }

    /// Retraction available at each joint between its limits.
    pub fn joint_spans(&self) -> [f64; 2] {
        self.span
    }

    /// Admissible interval of the proximal share.
    pub fn share_range(&self) -> (f64, f64) {
        let hi = self.retraction.min(self.span[0]);
        let lo = (self.retraction - self.span[1]).max(0.0).min(hi);
        (lo, hi)
    }

    fn joint_angle(&self, j: Joint, r: f64) -> f64 {
        let jd = self.design.joint(j);
        let i = j.index();
        if r <= SNAP_TOL {
            jd.limits.lo
        } else if r >= self.span[i] - SNAP_TOL {
            jd.limits.hi
        } else {
            jd.angle_for_tendon_length(self.longest[i] - r)
                .clamp(jd.limits.lo, jd.limits.hi)
        }
    }

    pub fn state_at(&self, r1: f64) -> JointState {
        let (lo, hi) = self.share_range();
        let r1 = r1.clamp(lo, hi);
        JointState::new(
            self.joint_angle(Joint::Proximal, r1),
            self.joint_angle(Joint::Distal, self.retraction - r1),
        )
    }

    /// Proximal share that places the proximal joint at `q1`.
    pub fn share_for_q1(&self, q1: f64) -> f64 {
        let jd = self.design.joint(Joint::Proximal);
        self.longest[0] - jd.tendon_length_at(q1.clamp(jd.limits.lo, jd.limits.hi))
    }

    pub fn energy_at(&self, r1: f64) -> f64 {
        energy_unchecked(self.design, self.state_at(r1))
    }

    /// Minimum-energy point of the level set restricted to shares in
    /// `[lo, hi]`. Ties go to the smaller share, i.e. the smaller `q1`.
    pub fn minimize_between(&self, lo: f64, hi: f64) -> (f64, JointState, f64) {
        let (r, e) = minimize_1d(lo, hi, |r| self.energy_at(r), DENSE_SAMPLES);
        (r, self.state_at(r), e)
    }

    pub fn minimize(&self) -> (f64, JointState, f64) {
        let (lo, hi) = self.share_range();
        self.minimize_between(lo, hi)
    }
}

fn improves(candidate: f64, best: f64) -> bool {
    candidate < best - 1e-12 * (1.0 + best.abs())
}

/// Global minimum of `f` on `[lo, hi]`: dense scan, then golden-section
/// refinement around the best sample. Returns `(x, f(x))`, preferring the
/// smallest `x` among equal values.
pub(crate) fn minimize_1d(lo: f64, hi: f64, f: impl Fn(f64) -> f64, n: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let xs: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for i in 1..xs.len() {
        if improves(fs[i], fs[best]) {
            best = i;
        }
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(n)];
    let (x, fx) = golden(a, b, &f);
    if improves(fx, fs[best]) {
        (x, fx)
    } else {
        (xs[best], fs[best])
    }
}

fn golden(mut a: f64, mut b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..100 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub fn energy_grid(design: &FingerDesign, n1: usize, n2: usize) -> Result<EnergyGrid> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::invalid(format!(
            "grid needs n1, n2 >= 2 (got {n1}, {n2})"
        )));
    }
    let axis = |j: Joint, n: usize| {
        let l = design.joint(j).limits;
        (0..n)
            .map(move |i| {
                if i == n - 1 {
                    l.hi
                } else {
                    l.lo + l.span() * i as f64 / (n - 1) as f64
                }
            })
            .collect::<Vec<_>>()
    };
    let a1 = axis(Joint::Proximal, n1);
    let a2 = axis(Joint::Distal, n2);
    let mut samples = Vec::with_capacity(n1 * n2);
    for &q1 in &a1 {
        for &q2 in &a2 {
            let state = JointState::new(q1, q2);
            samples.push(EnergySample {
                state,
                total_tendon_length: total_tendon_length_unchecked(design, state),
                elastic_energy: energy_unchecked(design, state),
            });
        }
    }
    Ok(EnergyGrid { n1, n2, samples })
}

/// Level set of total tendon length `target`, sampled at `resolution` points
/// evenly spaced in proximal share (a single point when the set is one state).
pub fn contour(design: &FingerDesign, target: f64, resolution: usize) -> Result<Contour> {
    if resolution < 2 {
        return Err(Error::invalid("contour resolution must be >= 2"));
    }
    let set = LevelSet::new(design, target)?;
    let (lo, hi) = set.share_range();
    let samples = if hi <= lo {
        vec![set.state_at(lo)]
    } else {
        (0..resolution)
            .map(|i| {
                let r = if i == resolution - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (resolution - 1) as f64
                };
                set.state_at(r)
            })
            .collect()
    };
    Ok(Contour {
        target_total_tendon_length: target,
        samples,
    })
}

pub fn min_energy_on_contour(design: &FingerDesign, target: f64) -> Result<(JointState, f64)> {
    let (_, state, e) = LevelSet::new(design, target)?.minimize();
    Ok((state, e))
}

/// Minimum-energy states for tendon retraction swept linearly from rest to
/// full flexion in `steps` points.
pub fn min_energy_trajectory(design: &FingerDesign, steps: usize) -> Result<Trajectory> {
    if steps < 2 {
        return Err(Error::invalid("trajectory needs steps >= 2"));
    }
    let full = full_retraction(design);
    let points = (0..steps)
        .map(|i| {
            let r = if i == steps - 1 {
                full
            } else {
                full * i as f64 / (steps - 1) as f64
            };
            let (_, state, e) = LevelSet::from_retraction(design, r).minimize();
            TrajectoryPoint {
                retracted_tendon: r,
                state,
                elastic_energy: e,
            }
        })
        .collect();
    Ok(Trajectory { points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourMinima {
    pub retracted_tendon: f64,
    pub minima: Vec<(JointState, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BistabilityReport {
    pub bistable: bool,
    /// Energy is identically zero over the box (no elastic cord).
    pub degenerate: bool,
    pub barrier_epsilon: f64,
    /// Minima of the contour with the highest separating barrier.
    pub basins: Vec<JointState>,
    /// Every contour that holds more than one separated minimum.
    pub multi_minimum_contours: Vec<ContourMinima>,
}

pub const DEFAULT_BISTABILITY_CONTOURS: usize = 64;
const BISTABILITY_STARTS: usize = 24;

/// Largest energy over the joint-limit box.
pub fn max_box_energy(design: &FingerDesign) -> f64 {
    let grid = energy_grid(design, 65, 65).expect("fixed grid size is valid");
    let corner = energy_unchecked(design, design.full_flexion_state());
    grid.samples
        .iter()
        .map(|s| s.elastic_energy)
        .fold(corner, f64::max)
}

pub fn detect_bistability(design: &FingerDesign) -> BistabilityReport {
    detect_bistability_with(design, DEFAULT_BISTABILITY_CONTOURS)
}

pub fn detect_bistability_with(design: &FingerDesign, contours: usize) -> BistabilityReport {
    let emax = max_box_energy(design);
    let eps = 1e-3 * emax;
    let mut report = BistabilityReport {
        bistable: false,
        degenerate: emax == 0.0,
        barrier_epsilon: eps,
        basins: Vec::new(),
        multi_minimum_contours: Vec::new(),
    };
    if report.degenerate {
        return report;
    }
    let full = full_retraction(design);
    let mut best_barrier = f64::NEG_INFINITY;
    for i in 1..contours.max(3) - 1 {
        let r = full * i as f64 / (contours.max(3) - 1) as f64;
        let set = LevelSet::from_retraction(design, r);
        let (minima, barrier) = contour_minima(&set, eps);
        if minima.len() >= 2 {
            report.bistable = true;
            if barrier > best_barrier {
                best_barrier = barrier;
                report.basins = minima.iter().map(|m| m.1).collect();
            }
            report.multi_minimum_contours.push(ContourMinima {
                retracted_tendon: r,
                minima: minima.iter().map(|m| (m.1, m.2)).collect(),
            });
        }
    }
    report
}

/// Multi-start local descent along one level set; minima separated by a
/// barrier of at most `eps` are merged. Returns the surviving minima as
/// (share, state, energy) and the smallest barrier between neighbours.
pub fn contour_minima(set: &LevelSet<'_>, eps: f64) -> (Vec<(f64, JointState, f64)>, f64) {
    let (lo, hi) = set.share_range();
    if hi <= lo {
        let s = set.state_at(lo);
        return (vec![(lo, s, set.energy_at(lo))], f64::INFINITY);
    }
    let f = |r: f64| set.energy_at(r);
    let mut found: Vec<f64> = Vec::new();
    for k in 0..BISTABILITY_STARTS {
        let x0 = lo + (hi - lo) * (k as f64 + 0.5) / BISTABILITY_STARTS as f64;
        let x = descend(x0, lo, hi, &f);
        if !found.iter().any(|&y| (y - x).abs() <= 1e-6 * (hi - lo)) {
            found.push(x);
        }
    }
    found.sort_by(f64::total_cmp);
    let kept = merge_minima(found, eps, &f, |a, b| barrier_peak(a, b, &f));
    let barrier = kept
        .iter()
        .skip(1)
        .map(|k| k.1)
        .fold(f64::INFINITY, f64::min);
    let minima = kept
        .into_iter()
        .map(|(x, _)| (x, set.state_at(x), f(x)))
        .collect();
    (minima, barrier)
}

fn descend(x0: f64, lo: f64, hi: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let mut x = x0;
    let mut fx = f(x);
    let mut step = (hi - lo) / 16.0;
    while step > 1e-12 * (hi - lo) {
        let mut moved = false;
        for cand in [x - step, x + step] {
            let c = cand.clamp(lo, hi);
            let fc = f(c);
            if fc < fx {
                x = c;
                fx = fc;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    x
}

fn barrier_peak(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let n = 64;
    (0..=n)
        .map(|i| f(a + (b - a) * i as f64 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Merge sorted minimum locations whose separating barrier is at most `eps`.
/// Each survivor carries the barrier to its left neighbour (or infinity).
fn merge_minima(
    xs: Vec<f64>,
    eps: f64,
    f: &impl Fn(f64) -> f64,
    peak: impl Fn(f64, f64) -> f64,
) -> Vec<(f64, f64)> {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for x in xs {
        match kept.last_mut() {
            None => kept.push((x, f64::INFINITY)),
            Some(last) => {
                let p = peak(last.0, x);
                let barrier = p - f(last.0).max(f(x));
                if barrier <= eps {
                    if f(x) < f(last.0) {
                        last.0 = x;
                    }
                } else {
                    kept.push((x, barrier));
                }
            }
        }
    }
    kept
}
