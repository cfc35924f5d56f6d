//! `hydra`: command-line front end for the gripper analyses.
//!
//! Every subcommand writes CSV or JSON to `--out` (atomically) or to stdout.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hydra_core::benchmark::{score_log, TrialLog, YcbWeights};
use hydra_core::energy::{detect_bistability_with, DEFAULT_BISTABILITY_CONTOURS};
use hydra_core::geometry::closing_path;
use hydra_core::motion_group::finger_motion_group;
use hydra_core::{
    combined_finger_group, configure_mode, contour, default_hand, elastic_energy, energy_grid,
    load_hand, lock_feasible, meeting_height, min_energy_trajectory, sweep_palm, Error, FingerRole,
    GraspMode, GraspScenario, HandConfig, LevelSet, MotionGroup,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "hydra",
    version,
    about = "Kinematics, energy and grasp analyses for a reconfigurable four-finger gripper"
)]
struct Cli {
    /// Hand design file, or `default` for the built-in hand.
    #[arg(long, global = true)]
    hand: Option<String>,
    /// Output file. Standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomised sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tendon length and elastic energy over the joint box, n x n samples.
    EnergyMap {
        #[command(flatten)]
        finger: FingerArg,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Joint states on one constant-tendon-length contour.
    Contour {
        #[command(flatten)]
        finger: FingerArg,
        /// Total tendon length, mm.
        #[arg(
            long,
            conflicts_with = "retraction",
            required_unless_present = "retraction"
        )]
        target: Option<f64>,
        /// Tendon retracted from rest, mm.
        #[arg(long)]
        retraction: Option<f64>,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Minimum-energy closing trajectory.
    Trajectory {
        #[command(flatten)]
        finger: FingerArg,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Search the constant-length contours for separated energy minima.
    Bistability {
        #[command(flatten)]
        finger: FingerArg,
        #[arg(long, default_value_t = DEFAULT_BISTABILITY_CONTOURS)]
        contours: usize,
    },
    /// Finger and combined-finger motion groups at a palm angle.
    ModeGroup {
        /// Palm rotation, rad. Defaults to the palm limit.
        #[arg(long)]
        phi: Option<f64>,
        /// Engage the finger locks.
        #[arg(long)]
        lock: bool,
    },
    /// Height above the table where opposing fingertips meet.
    MeetingHeight {
        #[arg(long, value_enum, default_value_t = PowerMode::Both)]
        mode: PowerMode,
        /// Also write fingertip paths to this CSV file.
        #[arg(long)]
        tips: Option<PathBuf>,
        #[arg(long, default_value_t = 101)]
        path_steps: usize,
    },
    /// Run a grasp closure scenario.
    Grasp {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's grasp mode.
        #[arg(long)]
        mode: Option<GraspMode>,
        /// Tendon motion per iteration, mm.
        #[arg(long)]
        step: Option<f64>,
        /// Add a uniform random placement error of up to this many mm in x and y.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// Leave the per-step trajectory out of the output.
        #[arg(long)]
        no_trajectory: bool,
    },
    /// Score benchmark trial logs.
    Score {
        #[arg(long)]
        trials: PathBuf,
        /// YCB point schedule. The built-in schedule when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Also write a markdown summary here.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FingerArg {
    #[arg(long, default_value = "a_left", value_parser = parse_role)]
    finger: FingerRole,
}

#[derive(Clone, Copy, ValueEnum)]
enum PowerMode {
    Cylindrical,
    Spherical,
    Both,
}

fn parse_role(s: &str) -> Result<FingerRole, String> {
    FingerRole::ALL
        .into_iter()
        .find(|r| r.to_string() == s)
        .ok_or_else(|| format!("unknown finger '{s}' (a_left, b_left, a_right, b_right)"))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::Io(_) => "io",
                Error::Parse(_) => "parse",
                Error::Validation(_) => "validation",
                Error::Domain { .. } => "domain",
                Error::Range { .. } => "range",
                Error::Mode(_) => "mode",
                Error::Singularity(_) => "singularity",
                Error::NoMeet { .. } => "no_meet",
                Error::Overpressure { .. } => "overpressure",
                Error::Simulation { .. } => "simulation",
            },
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(
                Error::Singularity(_)
                | Error::NoMeet { .. }
                | Error::Overpressure { .. }
                | Error::Simulation { .. },
            ) => 4,
            _ => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write `bytes` to `path` through a sibling temp file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)
                .and_then(|_| so.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    })
}

fn num(x: f64) -> String {
    x.to_string()
}

fn load_hand_arg(arg: Option<&str>) -> CliResult<HandConfig> {
    match arg {
        None | Some("default") => Ok(default_hand()),
        Some(p) => Ok(load_hand(p)?),
    }
}

#[derive(Serialize)]
struct CombinedGroup {
    pair: (FingerRole, FingerRole),
    group: MotionGroup,
}

#[derive(Serialize)]
struct ModeGroupReport {
    palm_rotation: f64,
    phi_max: f64,
    lock_state: hydra_core::LockState,
    lock_feasible: bool,
    fingers: BTreeMap<FingerRole, MotionGroup>,
    #[serde(skip_serializing_if = "Option::is_none")]
    combined: Option<Vec<CombinedGroup>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    combined_error: Option<String>,
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let hand = || load_hand_arg(cli.hand.as_deref());
    match cli.command {
        Command::EnergyMap { finger, n } => {
            let hand = hand()?;
            let g = energy_grid(hand.finger(finger.finger), n, n)?;
            let rows = g.samples.iter().map(|s| {
                vec![
                    num(s.state.q1),
                    num(s.state.q2),
                    num(s.total_tendon_length),
                    num(s.elastic_energy),
                ]
            });
            emit(out, &csv_bytes(&["q1", "q2", "L_total", "E"], rows)?)
        }
        Command::Contour {
            finger,
            target,
            retraction,
            resolution,
        } => {
            let hand = hand()?;
            let design = hand.finger(finger.finger);
            let target = match (target, retraction) {
                (Some(t), _) => t,
                (None, Some(r)) => LevelSet::from_retraction(design, r).target(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let c = contour(design, target, resolution)?;
            let mut rows = Vec::with_capacity(c.samples.len());
            for s in &c.samples {
                rows.push(vec![
                    num(s.q1),
                    num(s.q2),
                    num(hydra_core::energy::total_tendon_length(design, *s)?),
                    num(elastic_energy(design, *s)?),
                ]);
            }
            emit(out, &csv_bytes(&["q1", "q2", "L_total", "E"], rows)?)
        }
        Command::Trajectory { finger, steps } => {
            let hand = hand()?;
            let t = min_energy_trajectory(hand.finger(finger.finger), steps)?;
            let rows = t.points.iter().enumerate().map(|(i, p)| {
                vec![
                    i.to_string(),
                    num(p.retracted_tendon),
                    num(p.state.q1),
                    num(p.state.q2),
                    num(p.elastic_energy),
                ]
            });
            emit(
                out,
                &csv_bytes(&["step", "retracted", "q1", "q2", "E"], rows)?,
            )
        }
        Command::Bistability { finger, contours } => {
            let hand = hand()?;
            if contours < 2 {
                return Err(Error::Domain {
                    quantity: "contours".into(),
                    value: contours as f64,
                    lo: 2.0,
                    hi: f64::INFINITY,
                }
                .into());
            }
            let r = detect_bistability_with(hand.finger(finger.finger), contours);
            emit(out, &json_bytes(&r))
        }
        Command::ModeGroup { phi, lock } => {
            let base = hand()?;
            let mut h = sweep_palm(&base, phi.unwrap_or(base.phi_max))?;
            h = if lock { h.locked()? } else { h.unlocked() };
            let rest = FingerRole::ALL.map(|r| h.finger(r).rest_state());
            let fingers = FingerRole::ALL
                .into_iter()
                .map(|r| (r, finger_motion_group(&h, r)))
                .collect();
            let pairs = [FingerRole::ALeft, FingerRole::ARight].map(|r| (r, r.lock_partner()));
            let combined: Result<Vec<CombinedGroup>, Error> = pairs
                .into_iter()
                .map(|(a, b)| {
                    Ok(CombinedGroup {
                        pair: (a, b),
                        group: combined_finger_group(&h, a, b)?,
                    })
                })
                .collect();
            let (combined, combined_error) = match combined {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let report = ModeGroupReport {
                palm_rotation: h.palm_rotation,
                phi_max: h.phi_max,
                lock_state: h.lock_state,
                lock_feasible: lock_feasible(&h, &rest),
                fingers,
                combined,
                combined_error,
            };
            emit(out, &json_bytes(&report))
        }
        Command::MeetingHeight {
            mode,
            tips,
            path_steps,
        } => {
            let hand = hand()?;
            let modes: Vec<GraspMode> = match mode {
                PowerMode::Cylindrical => vec![GraspMode::Cylindrical],
                PowerMode::Spherical => vec![GraspMode::Spherical],
                PowerMode::Both => vec![GraspMode::Cylindrical, GraspMode::Spherical],
            };
            let mut heights = BTreeMap::new();
            let mut rows = Vec::new();
            for m in modes {
                heights.insert(m, meeting_height(&hand, m)?);
                if tips.is_some() {
                    let h = configure_mode(&hand, m)?;
                    for (t, p) in closing_path(&h, path_steps)? {
                        for r in FingerRole::ALL {
                            let x = p[r.index()];
                            rows.push(vec![
                                m.to_string(),
                                num(t),
                                r.to_string(),
                                num(x.x),
                                num(x.y),
                                num(x.z),
                            ]);
                        }
                    }
                }
            }
            if let Some(path) = tips {
                write_atomic(
                    &path,
                    &csv_bytes(&["mode", "t", "finger", "x", "y", "z"], rows)?,
                )?;
            }
            emit(out, &json_bytes(&heights))
        }
        Command::Grasp {
            scenario,
            mode,
            step,
            jitter,
            no_trajectory,
        } => {
            let mut sc = GraspScenario::load(&scenario)?;
            let hand = match (cli.hand.as_deref(), &sc.hand) {
                (Some(h), _) => load_hand_arg(Some(h))?,
                (None, Some(rel)) => {
                    let base = scenario.parent().unwrap_or(Path::new("."));
                    load_hand(base.join(rel))?
                }
                (None, None) => default_hand(),
            };
            if let Some(s) = step {
                sc.options.step = s;
            }
            if !(jitter >= 0.0) || !jitter.is_finite() {
                return Err(Error::Domain {
                    quantity: "jitter".into(),
                    value: jitter,
                    lo: 0.0,
                    hi: f64::INFINITY,
                }
                .into());
            }
            if jitter > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                sc.offset[0] += rng.gen_range(-jitter..=jitter);
                sc.offset[1] += rng.gen_range(-jitter..=jitter);
            }
            let mut outcome = sc.run(&hand, mode)?;
            if no_trajectory {
                outcome.trajectory.clear();
            }
            emit(out, &json_bytes(&outcome))
        }
        Command::Score {
            trials,
            weights,
            markdown,
        } => {
            let log = TrialLog::load(&trials)?;
            let w = match weights {
                Some(p) => YcbWeights::load(&p)?,
                None => YcbWeights::builtin(),
            };
            let report = score_log(&log, &w)?;
            if let Some(md) = markdown {
                write_atomic(&md, report.to_markdown().as_bytes())?;
            }
            emit(out, &json_bytes(&report))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
