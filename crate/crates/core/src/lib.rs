//! Kinematics, energy landscapes, mode switching, hydraulic actuation and
//! quasi-static grasp simulation for a reconfigurable, underactuated,
//! tendon-driven four-finger gripper.
//!
//! Units: millimetres, radians, newtons, kilopascals and millilitres, unless a
//! name says otherwise.

pub mod actuation;
pub mod benchmark;
pub mod config;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grasp;
pub mod motion_group;
pub mod tendon;
pub mod types;

pub use actuation::{distribute_volume, muscle_force, HydraulicCircuit, MuscleParams, MuscleState};
pub use benchmark::{
    score_log, score_soft_a, score_soft_c, score_soft_d, score_ycb, ScoreReport, TrialLog,
    YcbTrial, YcbWeights,
};
pub use config::{hand_to_string, load_hand, parse_hand, save_hand};
pub use energy::{
    contour, detect_bistability, elastic_energy, energy_grid, min_energy_on_contour,
    min_energy_trajectory, BistabilityReport, Contour, EnergyGrid, EnergySample, LevelSet,
    Trajectory, TrajectoryPoint,
};
pub use error::{Error, Result};
pub use geometry::{
    configure_mode, fingertip_positions, meeting_height, sweep_palm, HandPose, MeetingHeight,
};
pub use grasp::{
    classify_outcome, close_grasp, close_grasp_with, Contact, GraspClass, GraspObject,
    GraspOutcome, GraspScenario, Profile, SimOptions,
};
pub use motion_group::{
    combined_finger_group, finger_motion_group, intersect_rotation_subgroups, lock_feasible,
    LockConstraint, MotionGroup, RotationSubgroup,
};
pub use tendon::{
    cable_state, cord_length, elastic_moment_arm, tendon_length, tendon_moment_arm, CableState,
};
pub use types::{
    default_hand, FingerDesign, FingerRole, FingerType, GraspMode, HandConfig, Joint, JointDesign,
    JointLimits, JointState, LockState,
};
