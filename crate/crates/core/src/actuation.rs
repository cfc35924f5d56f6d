//! Hydraulic drive: a pump feeding two braided fluidic muscles through one
//! supply line, each muscle pulling the tendons of one finger pair.
//!
//! Muscle force follows the ideal braided-sleeve law
//! `F = P A0 (a (1 - e)^2 - b)` with `a = 3 / tan^2(t0)`, `b = 1 / sin^2(t0)`.
//! The fluid volume taken up by a muscle is the integral of `F / P` over its
//! stroke, so pressure times volume equals the mechanical work done.
//!
//! Units: kPa, mL, mm, N.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KPA_MM2_TO_N: f64 = 1e-3;
const MM3_PER_ML: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuscleParams {
    /// Unpressurised length, mm.
    pub rest_length: f64,
    /// Largest usable contraction as a fraction of rest length.
    pub max_contraction_ratio: f64,
    /// Initial braid angle, rad.
    pub braid_angle: f64,
    /// Nominal cross-section, mm^2.
    pub cross_section: f64,
    /// Pump stall pressure, kPa.
    pub overpressure: f64,
}

impl Default for MuscleParams {
    fn default() -> Self {
        Self {
            rest_length: 40.0,
            max_contraction_ratio: 0.25,
            braid_angle: 20f64.to_radians(),
            cross_section: 100.0,
            overpressure: 500.0,
        }
    }
}

impl MuscleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rest_length > 0.0
            && self.cross_section > 0.0
            && self.overpressure > 0.0
            && self.braid_angle > 0.0
            && self.braid_angle < std::f64::consts::FRAC_PI_2
            && self.max_contraction_ratio > 0.0
            && self.max_contraction_ratio < self.lockup_ratio();
        if !ok {
            return Err(Error::invalid(
                "muscle parameters must be positive and max contraction below lock-up",
            ));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> (f64, f64) {
        let t = self.braid_angle.tan();
        let s = self.braid_angle.sin();
        (3.0 / (t * t), 1.0 / (s * s))
    }

    /// Contraction ratio at which the force vanishes for any pressure.
    pub fn lockup_ratio(&self) -> f64 {
        let (a, b) = self.coefficients();
        1.0 - (b / a).sqrt()
    }

    pub fn max_contraction(&self) -> f64 {
        self.max_contraction_ratio * self.rest_length
    }

    /// Axial force, N, at `pressure` kPa and contraction ratio `ratio`.
    pub fn force(&self, pressure: f64, ratio: f64) -> f64 {
        let (a, b) = self.coefficients();
        let g = a * (1.0 - ratio).powi(2) - b;
        (pressure * self.cross_section * KPA_MM2_TO_N * g).max(0.0)
    }

    /// Fluid volume taken up when contracting from rest to `ratio`, mL.
    pub fn volume(&self, ratio: f64) -> f64 {
        let (a, b) = self.coefficients();
        let e = ratio;
        let shape = a * (1.0 - (1.0 - e).powi(3)) / 3.0 - b * e;
        self.cross_section * self.rest_length * shape / MM3_PER_ML
    }

    /// Inverse of [`volume`](Self::volume) on `[0, max_contraction_ratio]`.
    pub fn ratio_for_volume(&self, v: f64) -> f64 {
        let top = self.max_contraction_ratio;
        if v <= 0.0 {
            return 0.0;
        }
        if v >= self.volume(top) {
            return top;
        }
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.volume(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * top {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Contraction ratio at which the muscle balances `load` at `pressure`.
    pub fn equilibrium_ratio(&self, pressure: f64, load: f64) -> f64 {
        if pressure <= 0.0 {
            return 0.0;
        }
        let (a, b) = self.coefficients();
        let per_kpa = pressure * self.cross_section * KPA_MM2_TO_N;
        let inner = (b + load.max(0.0) / per_kpa) / a;
        if inner >= 1.0 {
            0.0
        } else {
            1.0 - inner.sqrt()
        }
    }
}

/// Free functional form of the muscle law for a given braid angle and area.
pub fn muscle_force(params: &MuscleParams, pressure: f64, contraction_ratio: f64) -> f64 {
    params.force(pressure, contraction_ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuscleState {
    pub pressure: f64,
    /// Tendon pulled in so far, mm.
    pub contraction: f64,
    pub max_contraction: f64,
    pub force_capacity: f64,
    /// Fluid taken up so far, mL.
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydraulicCircuit {
    pub params: MuscleParams,
    pub pumped_volume: f64,
    pub shared_pressure: f64,
    pub muscles: [MuscleState; 2],
}

impl HydraulicCircuit {
    pub fn new(params: MuscleParams) -> Result<Self> {
        params.validate()?;
        let m = MuscleState {
            pressure: 0.0,
            contraction: 0.0,
            max_contraction: params.max_contraction(),
            force_capacity: 0.0,
            volume: 0.0,
        };
        Ok(Self {
            params,
            pumped_volume: 0.0,
            shared_pressure: 0.0,
            muscles: [m, m],
        })
    }

    pub fn contraction_ratio(&self, i: usize) -> f64 {
        self.muscles[i].contraction / self.params.rest_length
    }

    /// Volume the circuit can still take before both muscles bottom out, mL.
    pub fn remaining_capacity(&self) -> f64 {
        let full = self.params.volume(self.params.max_contraction_ratio);
        self.muscles
            .iter()
            .map(|m| (full - m.volume).max(0.0))
            .sum()
    }

    /// Set muscle volumes directly, e.g. after handing back fluid a stalled
    /// finger pair could not absorb. Pumped volume follows the new total.
    pub fn set_volumes(&mut self, volumes: [f64; 2]) {
        for (m, v) in self.muscles.iter_mut().zip(volumes) {
            m.volume = v;
            m.contraction = self.params.ratio_for_volume(v) * self.params.rest_length;
        }
        self.pumped_volume = volumes[0] + volumes[1];
    }

    fn refresh(&mut self, pressure: f64) {
        self.shared_pressure = pressure;
        for m in &mut self.muscles {
            m.pressure = pressure;
            m.force_capacity = self
                .params
                .force(pressure, m.contraction / self.params.rest_length);
        }
    }
}

/// Fluid each muscle would take at `pressure` against `loads`, mL.
fn uptake(c: &HydraulicCircuit, loads: [f64; 2], pressure: f64) -> [f64; 2] {
    let p = &c.params;
    let mut out = [0.0; 2];
    for i in 0..2 {
        if !loads[i].is_finite() {
            continue;
        }
        let now = c.contraction_ratio(i);
        let eq = p
            .equilibrium_ratio(pressure, loads[i])
            .clamp(now, p.max_contraction_ratio);
        out[i] = (p.volume(eq) - c.muscles[i].volume).max(0.0);
    }
    out
}

/// Inject `dv` mL and let the shared pressure rise until the muscles absorb
/// it. A muscle whose load is infinite is blocked and takes nothing.
pub fn distribute_volume(
    circuit: &HydraulicCircuit,
    loads: [f64; 2],
    dv: f64,
) -> Result<HydraulicCircuit> {
    if !(dv >= 0.0) || !dv.is_finite() {
        return Err(Error::domain("dV", dv, 0.0, f64::INFINITY));
    }
    if loads.iter().any(|l| l.is_nan() || *l < 0.0) {
        return Err(Error::invalid("muscle loads must be >= 0"));
    }
    let mut out = circuit.clone();
    if dv == 0.0 {
        return Ok(out);
    }
    let pmax = circuit.params.overpressure;
    let total = |p: f64| {
        let u = uptake(circuit, loads, p);
        u[0] + u[1]
    };
    let at_max = total(pmax);
    if at_max < dv {
        out.refresh(pmax);
        return Err(Error::Overpressure {
            pressure: pmax,
            unabsorbed: dv - at_max,
        });
    }
    let (mut lo, mut hi) = (0.0, pmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < dv {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * pmax {
            break;
        }
    }
    let u = uptake(circuit, loads, hi);
    let sum = u[0] + u[1];
    let share0 = if sum > 0.0 {
        dv * (u[0] / sum)
    } else {
        0.5 * dv
    };
    let split = if !loads[0].is_finite() {
        [0.0, dv]
    } else if !loads[1].is_finite() {
        [dv, 0.0]
    } else {
        [share0, dv - share0]
    };
    for i in 0..2 {
        let m = &mut out.muscles[i];
        m.volume += split[i];
        m.contraction = circuit.params.ratio_for_volume(m.volume) * circuit.params.rest_length;
    }
    out.pumped_volume += dv;
    out.refresh(hi);
    Ok(out)
}
