//! Scoring of grasping benchmark trial logs: the YCB gripper assessment
//! protocol and the clothing benchmarks A (edge grasp and drag), C (crumpled
//! lift) and D (flat non-boundary grasp).
//!
//! Logs are line-delimited JSON, one trial per line, tagged by `benchmark`
//! (`"ycb"`, `"A"`, `"C"` or `"D"`) and optionally carrying the log
//! `schema` version. Medians of an even count take the lower middle value.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::GraspMode;

/// Version of the trial-log line format understood here.
pub const TRIAL_SCHEMA_VERSION: u32 = 1;

/// Built-in YCB point schedule.
pub const DEFAULT_YCB_WEIGHTS: &str = include_str!("../data/ycb_weights.json");

/// Placement of a rigid object relative to the gripper.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub enum Position {
    #[serde(rename = "O")]
    #[default]
    Origin,
    #[serde(rename = "dx")]
    Dx,
    #[serde(rename = "dy")]
    Dy,
    #[serde(rename = "dz")]
    Dz,
}

impl Position {
    pub const ALL: [Position; 4] = [Position::Origin, Position::Dx, Position::Dy, Position::Dz];

    pub fn name(self) -> &'static str {
        match self {
            Position::Origin => "O",
            Position::Dx => "dx",
            Position::Dy => "dy",
            Position::Dz => "dz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectKind {
    /// Four sequential cells (grasp, static, rotated, static rotated) per position.
    Rigid { positions: Vec<Position> },
    /// Independent grasp attempts, each worth `attempt_weight`.
    Articulated {
        attempts: usize,
        attempt_weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YcbObject {
    pub id: String,
    #[serde(flatten)]
    pub kind: ObjectKind,
}

/// Point schedule of the YCB protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YcbWeights {
    pub version: u32,
    /// Points for each of the four rigid-object cells.
    pub cell_weights: [f64; 4],
    pub objects: Vec<YcbObject>,
}

impl YcbWeights {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_YCB_WEIGHTS).expect("built-in weight table is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let w: YcbWeights = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("cell weights must be finite and >= 0"));
        }
        let mut seen = HashSet::new();
        for o in &self.objects {
            if !seen.insert(o.id.as_str()) {
                return Err(Error::invalid(format!("object '{}' listed twice", o.id)));
            }
            match &o.kind {
                ObjectKind::Rigid { positions } => {
                    let unique: HashSet<_> = positions.iter().collect();
                    if positions.is_empty() || unique.len() != positions.len() {
                        return Err(Error::invalid(format!(
                            "object '{}' needs distinct, non-empty positions",
                            o.id
                        )));
                    }
                }
                ObjectKind::Articulated {
                    attempts,
                    attempt_weight,
                } => {
                    if *attempts == 0 || !attempt_weight.is_finite() || *attempt_weight < 0.0 {
                        return Err(Error::invalid(format!(
                            "object '{}' needs attempts > 0 and a finite weight >= 0",
                            o.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&YcbObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Highest score one grasping mode can reach.
    pub fn max_score(&self) -> f64 {
        let cell: f64 = self.cell_weights.iter().sum();
        self.objects
            .iter()
            .map(|o| match &o.kind {
                ObjectKind::Rigid { positions } => positions.len() as f64 * cell,
                ObjectKind::Articulated {
                    attempts,
                    attempt_weight,
                } => *attempts as f64 * attempt_weight,
            })
            .sum()
    }

    /// Number of grasp attempts one mode makes.
    pub fn attempts_per_mode(&self) -> usize {
        self.objects
            .iter()
            .map(|o| match &o.kind {
                ObjectKind::Rigid { positions } => positions.len(),
                ObjectKind::Articulated { attempts, .. } => *attempts,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YcbTrial {
    pub object_id: String,
    pub mode: GraspMode,
    #[serde(default)]
    pub position: Position,
    /// Four sequential cells for rigid objects, one per attempt otherwise.
    pub cells: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    Single,
    Double,
    Folded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftATrial {
    pub garment_id: String,
    pub edge: EdgeType,
    pub success: bool,
    /// Distance from the target after the drag, mm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftCTrial {
    pub garment_id: String,
    pub success: bool,
    /// Lift at which contact with the table broke, mm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift_height: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftDTrial {
    pub garment_id: String,
    pub success: bool,
}

/// One line of a trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "benchmark")]
pub enum Trial {
    #[serde(rename = "ycb")]
    Ycb(YcbTrial),
    #[serde(rename = "A")]
    SoftA(SoftATrial),
    #[serde(rename = "C")]
    SoftC(SoftCTrial),
    #[serde(rename = "D")]
    SoftD(SoftDTrial),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialLog {
    pub ycb: Vec<YcbTrial>,
    pub soft_a: Vec<SoftATrial>,
    pub soft_c: Vec<SoftCTrial>,
    pub soft_d: Vec<SoftDTrial>,
}

impl TrialLog {
    pub fn push(&mut self, t: Trial) {
        match t {
            Trial::Ycb(t) => self.ycb.push(t),
            Trial::SoftA(t) => self.soft_a.push(t),
            Trial::SoftC(t) => self.soft_c.push(t),
            Trial::SoftD(t) => self.soft_d.push(t),
        }
    }

    /// Parse a line-delimited log. Blank lines are skipped.
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut log = TrialLog::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let at = |e: String| Error::Parse(format!("line {}: {e}", i + 1));
            let mut v: serde_json::Value =
                serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
            if let Some(obj) = v.as_object_mut() {
                if let Some(s) = obj.remove("schema") {
                    if s.as_u64() != Some(u64::from(TRIAL_SCHEMA_VERSION)) {
                        return Err(at(format!("unsupported schema version {s}")));
                    }
                }
            }
            log.push(serde_json::from_value(v).map_err(|e| at(e.to_string()))?);
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let trials = self
            .ycb
            .iter()
            .cloned()
            .map(Trial::Ycb)
            .chain(self.soft_a.iter().cloned().map(Trial::SoftA))
            .chain(self.soft_c.iter().cloned().map(Trial::SoftC))
            .chain(self.soft_d.iter().cloned().map(Trial::SoftD));
        for t in trials {
            let mut v = serde_json::to_value(&t).expect("trials serialize");
            v.as_object_mut()
                .expect("trials are objects")
                .insert("schema".into(), TRIAL_SCHEMA_VERSION.into());
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Check YCB trials against the schedule: known objects and positions, cell
/// counts, the sequential cell rule and no repeated (object, mode, position).
pub fn validate_ycb(trials: &[YcbTrial], weights: &YcbWeights) -> Result<()> {
    let mut seen = HashSet::new();
    for t in trials {
        let o = weights
            .object(&t.object_id)
            .ok_or_else(|| Error::invalid(format!("unknown object '{}'", t.object_id)))?;
        match &o.kind {
            ObjectKind::Rigid { positions } => {
                if !positions.contains(&t.position) {
                    return Err(Error::invalid(format!(
                        "object '{}' is not scored at position {}",
                        t.object_id,
                        t.position.name()
                    )));
                }
                if t.cells.len() != 4 {
                    return Err(Error::invalid(format!(
                        "rigid object '{}' needs 4 cells, got {}",
                        t.object_id,
                        t.cells.len()
                    )));
                }
                if t.cells.windows(2).any(|w| w[1] && !w[0]) {
                    return Err(Error::invalid(format!(
                        "object '{}' ({}, {}): a cell is set after a failed one",
                        t.object_id,
                        t.mode,
                        t.position.name()
                    )));
                }
            }
            ObjectKind::Articulated { attempts, .. } => {
                if t.position != Position::Origin {
                    return Err(Error::invalid(format!(
                        "articulated object '{}' is only scored at O",
                        t.object_id
                    )));
                }
                if t.cells.len() != *attempts {
                    return Err(Error::invalid(format!(
                        "articulated object '{}' needs {attempts} attempts, got {}",
                        t.object_id,
                        t.cells.len()
                    )));
                }
            }
        }
        if !seen.insert((t.object_id.as_str(), t.mode, t.position)) {
            return Err(Error::invalid(format!(
                "duplicate trial for '{}' ({}, {})",
                t.object_id,
                t.mode,
                t.position.name()
            )));
        }
    }
    Ok(())
}

fn trial_score(t: &YcbTrial, o: &YcbObject, weights: &YcbWeights) -> f64 {
    match &o.kind {
        ObjectKind::Rigid { .. } => t
            .cells
            .iter()
            .zip(weights.cell_weights)
            .filter(|(c, _)| **c)
            .map(|(_, w)| w)
            .sum(),
        ObjectKind::Articulated { attempt_weight, .. } => {
            t.cells.iter().filter(|c| **c).count() as f64 * attempt_weight
        }
    }
}

fn cell_text(trials: &[&YcbTrial], o: &YcbObject, mode: GraspMode) -> String {
    let mark = |c: bool| if c { '#' } else { '.' };
    match &o.kind {
        ObjectKind::Rigid { positions } => positions
            .iter()
            .map(
                |p| match trials.iter().find(|t| t.mode == mode && t.position == *p) {
                    Some(t) => t.cells.iter().map(|c| mark(*c)).collect(),
                    None => "----".to_string(),
                },
            )
            .collect::<Vec<String>>()
            .join(" "),
        ObjectKind::Articulated { attempts, .. } => match trials.iter().find(|t| t.mode == mode) {
            Some(t) => t.cells.iter().map(|c| mark(*c)).collect(),
            None => "-".repeat(*attempts),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectScore {
    pub id: String,
    pub per_mode: BTreeMap<GraspMode, f64>,
    pub best: f64,
    /// Cell outcomes per mode: `#` success, `.` failure, `-` not run.
    pub cells: BTreeMap<GraspMode, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YcbReport {
    pub max_score: f64,
    pub per_mode: BTreeMap<GraspMode, f64>,
    /// Sum over objects of the best mode's score.
    pub combined: f64,
    pub objects: Vec<ObjectScore>,
}

pub fn score_ycb(trials: &[YcbTrial], weights: &YcbWeights) -> Result<YcbReport> {
    validate_ycb(trials, weights)?;
    let mut per_mode: BTreeMap<GraspMode, f64> = GraspMode::ALL.iter().map(|m| (*m, 0.0)).collect();
    let mut objects = Vec::with_capacity(weights.objects.len());
    for o in &weights.objects {
        let mine: Vec<&YcbTrial> = trials.iter().filter(|t| t.object_id == o.id).collect();
        let mut scores = BTreeMap::new();
        let mut cells = BTreeMap::new();
        for m in GraspMode::ALL {
            let s: f64 = mine
                .iter()
                .filter(|t| t.mode == m)
                .map(|t| trial_score(t, o, weights))
                .sum();
            scores.insert(m, s);
            *per_mode.get_mut(&m).expect("all modes present") += s;
            cells.insert(m, cell_text(&mine, o, m));
        }
        let best = scores.values().copied().fold(0.0, f64::max);
        objects.push(ObjectScore {
            id: o.id.clone(),
            per_mode: scores,
            best,
            cells,
        });
    }
    let combined = objects.iter().map(|o| o.best).sum();
    Ok(YcbReport {
        max_score: weights.max_score(),
        per_mode,
        combined,
        objects,
    })
}

/// A log in which every cell of every object succeeds in every mode.
pub fn full_success_log(weights: &YcbWeights) -> Vec<YcbTrial> {
    let mut out = Vec::new();
    for m in GraspMode::ALL {
        for o in &weights.objects {
            match &o.kind {
                ObjectKind::Rigid { positions } => {
                    for p in positions {
                        out.push(YcbTrial {
                            object_id: o.id.clone(),
                            mode: m,
                            position: *p,
                            cells: vec![true; 4],
                        });
                    }
                }
                ObjectKind::Articulated { attempts, .. } => out.push(YcbTrial {
                    object_id: o.id.clone(),
                    mode: m,
                    position: Position::Origin,
                    cells: vec![true; *attempts],
                }),
            }
        }
    }
    out
}

/// Lower median; `None` for no values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftStat {
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
}

impl SoftStat {
    fn from_outcomes(outcomes: &[(bool, Option<f64>)], with_median: bool) -> Self {
        let attempts = outcomes.len();
        let successes = outcomes.iter().filter(|o| o.0).count();
        let values: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.0)
            .filter_map(|o| o.1)
            .collect();
        SoftStat {
            attempts,
            successes,
            success_rate: if attempts == 0 {
                0.0
            } else {
                successes as f64 / attempts as f64
            },
            median: if with_median {
                lower_median(&values)
            } else {
                None
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftAReport {
    /// No trials were given.
    pub empty: bool,
    pub by_edge: BTreeMap<EdgeType, SoftStat>,
    pub by_garment: BTreeMap<String, BTreeMap<EdgeType, SoftStat>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GarmentReport {
    pub empty: bool,
    pub by_garment: BTreeMap<String, SoftStat>,
}

fn check_measure(name: &str, garment: &str, success: bool, v: Option<f64>) -> Result<()> {
    match v {
        Some(_) if !success => Err(Error::invalid(format!(
            "{name} recorded on a failed attempt ({garment})"
        ))),
        Some(x) if !x.is_finite() || x < 0.0 => Err(Error::invalid(format!(
            "{name} must be finite and >= 0 ({garment})"
        ))),
        _ => Ok(()),
    }
}

/// Benchmark A: per edge type success rate and median placement error over
/// the successful drags.
pub fn score_soft_a(trials: &[SoftATrial]) -> Result<SoftAReport> {
    for t in trials {
        check_measure(
            "placement_error",
            &t.garment_id,
            t.success,
            t.placement_error,
        )?;
    }
    let mut edges: BTreeMap<EdgeType, Vec<(bool, Option<f64>)>> = BTreeMap::new();
    let mut garments: BTreeMap<String, BTreeMap<EdgeType, Vec<(bool, Option<f64>)>>> =
        BTreeMap::new();
    for t in trials {
        let o = (t.success, t.placement_error);
        edges.entry(t.edge).or_default().push(o);
        garments
            .entry(t.garment_id.clone())
            .or_default()
            .entry(t.edge)
            .or_default()
            .push(o);
    }
    Ok(SoftAReport {
        empty: trials.is_empty(),
        by_edge: edges
            .into_iter()
            .map(|(e, o)| (e, SoftStat::from_outcomes(&o, true)))
            .collect(),
        by_garment: garments
            .into_iter()
            .map(|(g, m)| {
                (
                    g,
                    m.into_iter()
                        .map(|(e, o)| (e, SoftStat::from_outcomes(&o, true)))
                        .collect(),
                )
            })
            .collect(),
    })
}

/// Benchmark C: per garment success rate and median lift height over the
/// lifts that broke contact with the table.
pub fn score_soft_c(trials: &[SoftCTrial]) -> Result<GarmentReport> {
    for t in trials {
        check_measure("lift_height", &t.garment_id, t.success, t.lift_height)?;
    }
    let mut garments: BTreeMap<String, Vec<(bool, Option<f64>)>> = BTreeMap::new();
    for t in trials {
        garments
            .entry(t.garment_id.clone())
            .or_default()
            .push((t.success, t.lift_height));
    }
    Ok(GarmentReport {
        empty: trials.is_empty(),
        by_garment: garments
            .into_iter()
            .map(|(g, o)| (g, SoftStat::from_outcomes(&o, true)))
            .collect(),
    })
}

/// Benchmark D: per garment success rate.
pub fn score_soft_d(trials: &[SoftDTrial]) -> Result<GarmentReport> {
    let mut garments: BTreeMap<String, Vec<(bool, Option<f64>)>> = BTreeMap::new();
    for t in trials {
        garments
            .entry(t.garment_id.clone())
            .or_default()
            .push((t.success, None));
    }
    Ok(GarmentReport {
        empty: trials.is_empty(),
        by_garment: garments
            .into_iter()
            .map(|(g, o)| (g, SoftStat::from_outcomes(&o, false)))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub ycb: YcbReport,
    pub soft_a: SoftAReport,
    pub soft_c: GarmentReport,
    pub soft_d: GarmentReport,
}

pub fn score_log(log: &TrialLog, weights: &YcbWeights) -> Result<ScoreReport> {
    Ok(ScoreReport {
        ycb: score_ycb(&log.ycb, weights)?,
        soft_a: score_soft_a(&log.soft_a)?,
        soft_c: score_soft_c(&log.soft_c)?,
        soft_d: score_soft_d(&log.soft_d)?,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl ScoreReport {
    /// Markdown summary: the YCB grid with one column per mode, then the
    /// clothing tables.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let y = &self.ycb;
        s.push_str("## YCB gripper assessment\n\n");
        s.push_str("| object | precision | cylindrical | spherical | best |\n");
        s.push_str("|---|---|---|---|---|\n");
        for o in &y.objects {
            let _ = write!(s, "| {} |", o.id);
            for m in GraspMode::ALL {
                let _ = write!(s, " `{}` {} |", o.cells[&m], o.per_mode[&m]);
            }
            let _ = writeln!(s, " {} |", o.best);
        }
        let _ = write!(s, "| total |");
        for m in GraspMode::ALL {
            let _ = write!(s, " {}/{} |", y.per_mode[&m], y.max_score);
        }
        let _ = writeln!(s, " {}/{} |", y.combined, y.max_score);

        if !self.soft_a.empty {
            s.push_str("\n## Clothing A: edge grasp and drag\n\n");
            s.push_str(
                "| garment | edge | success rate | median error (mm) |\n|---|---|---|---|\n",
            );
            for (g, edges) in &self.soft_a.by_garment {
                for (e, st) in edges {
                    let _ = writeln!(
                        s,
                        "| {g} | {e:?} | {} | {} |",
                        st.success_rate,
                        opt(st.median)
                    );
                }
            }
            for (e, st) in &self.soft_a.by_edge {
                let _ = writeln!(
                    s,
                    "| all | {e:?} | {} | {} |",
                    st.success_rate,
                    opt(st.median)
                );
            }
        }
        if !self.soft_c.empty {
            s.push_str("\n## Clothing C: crumpled lift\n\n");
            s.push_str("| garment | success rate | median lift (mm) |\n|---|---|---|\n");
            for (g, st) in &self.soft_c.by_garment {
                let _ = writeln!(s, "| {g} | {} | {} |", st.success_rate, opt(st.median));
            }
        }
        if !self.soft_d.empty {
            s.push_str("\n## Clothing D: flat non-boundary grasp\n\n");
            s.push_str("| garment | success rate |\n|---|---|\n");
            for (g, st) in &self.soft_d.by_garment {
                let _ = writeln!(s, "| {g} | {} |", st.success_rate);
            }
        }
        s
    }
}
