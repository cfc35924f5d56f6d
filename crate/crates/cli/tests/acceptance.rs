//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hydra_core::actuation::{distribute_volume, HydraulicCircuit, MuscleParams};
use hydra_core::benchmark::{
    full_success_log, score_soft_c, score_soft_d, score_ycb, ObjectKind, Position, SoftCTrial,
    SoftDTrial, YcbObject, YcbTrial, YcbWeights,
};
use hydra_core::grasp::{ClearanceProbe, GraspScenario, Link, SimOptions};
use hydra_core::motion_group::{finger_motion_group, intersect_rotation_subgroups};
use hydra_core::{
    combined_finger_group, configure_mode, cord_length, default_hand, elastic_moment_arm,
    meeting_height, min_energy_trajectory, tendon_length, tendon_moment_arm, FingerDesign,
    FingerRole, GraspClass, GraspMode, GraspObject, Joint, JointState, LevelSet, MotionGroup,
    Profile, RotationSubgroup,
};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn within(t: Instant, limit: Duration) -> Outcome {
    let e = t.elapsed();
    check(
        e < limit,
        format!("{e:.2?}"),
        format!("took {e:.2?}, limit {limit:?}"),
    )
}

fn random_design(rng: &mut ChaCha8Rng) -> FingerDesign {
    let mut d = FingerDesign::type_a();
    for j in &mut d.joints {
        j.tendon_offset_prev = rng.gen_range(2.0..8.0);
        j.tendon_offset_next = rng.gen_range(2.0..8.0);
        j.tendon_offset_angle = rng.gen_range(j.limits.hi + 0.2..j.limits.lo + PI - 0.2);
        j.elastic_offset = rng.gen_range(1.0..10.0);
    }
    d.validate().expect("random design valid");
    d
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut designs = vec![FingerDesign::type_a(), FingerDesign::type_b()];
    designs.extend((0..4).map(|_| random_design(&mut rng)));
    let mut worst: f64 = 0.0;
    for d in &designs {
        for joint in [Joint::Proximal, Joint::Distal] {
            let jd = &d.joints[joint as usize];
            let (lo, hi) = (jd.limits.lo, jd.limits.hi);
            for i in 0..1000 {
                let q = lo + (hi - lo) * i as f64 / 999.0;
                let x = q - jd.cord_rest_angle;
                let e = jd.elastic_offset;
                worst = worst
                    .max((cord_length(d, joint, q).unwrap() - 2.0 * e * (x / 2.0).sin()).abs());
                worst = worst
                    .max((elastic_moment_arm(d, joint, q).unwrap() - e * (x / 2.0).cos()).abs());
            }
        }
    }
    check(
        worst < 1e-12,
        format!("max error {worst:.2e} mm < 1e-12"),
        format!("max error {worst:.2e} mm"),
    )?;
    within(t, Duration::from_secs(1))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for joint in [Joint::Proximal, Joint::Distal] {
        for _ in 0..50 {
            let d = random_design(&mut rng);
            let jd = &d.joints[joint as usize];
            let q = rng.gen_range(jd.limits.lo + h..jd.limits.hi - h);
            let fd = (tendon_length(&d, joint, q + h).unwrap()
                - tendon_length(&d, joint, q - h).unwrap())
                / (2.0 * h);
            let arm = tendon_moment_arm(&d, joint, q).unwrap();
            worst = worst.max((fd.abs() - arm).abs() / arm.abs());
            let fe = (cord_length(&d, joint, q + h).unwrap()
                - cord_length(&d, joint, q - h).unwrap())
                / (2.0 * h);
            let ea = elastic_moment_arm(&d, joint, q).unwrap();
            worst = worst.max((fe - ea).abs() / ea.abs());
        }
    }
    check(
        worst < 1e-6,
        format!("max relative error {worst:.2e} < 1e-6"),
        format!("max relative error {worst:.2e}"),
    )?;
    within(t, Duration::from_secs(1))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    for d in [FingerDesign::type_a(), FingerDesign::type_b()] {
        let tr = min_energy_trajectory(&d, 100).map_err(|e| e.to_string())?;
        let first = tr.points[0].state;
        let last = tr.points.last().unwrap().state;
        let ok_ends = (first.q1 + FRAC_PI_6).abs() < 1e-9
            && first.q2.abs() < 1e-9
            && (last.q1 - FRAC_PI_3).abs() < 1e-9
            && (last.q2 - FRAC_PI_2).abs() < 1e-9;
        check(
            ok_ends,
            "",
            format!("trajectory runs {first:?} -> {last:?}"),
        )?;
        let held = tr
            .points
            .iter()
            .filter(|p| p.state.q2 < FRAC_PI_2)
            .all(|p| (p.state.q1 + FRAC_PI_6).abs() <= 1e-9);
        check(held, "", "q1 leaves its lower limit before q2 reaches pi/2")?;
    }
    let dt = within(t, Duration::from_secs(10))?;
    Ok(format!(
        "(-pi/6, 0) -> (pi/3, pi/2), distal first within 1e-9 rad, {dt}"
    ))
}

fn random_subgroup(rng: &mut ChaCha8Rng) -> RotationSubgroup {
    let p = Vector3::new(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
    );
    let a = Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    RotationSubgroup::new(p, a.normalize()).unwrap()
}

fn related(g: &RotationSubgroup, rng: &mut ChaCha8Rng) -> RotationSubgroup {
    match rng.gen_range(0..4) {
        0 => random_subgroup(rng),
        1 => RotationSubgroup::new(g.point + g.axis * rng.gen_range(-30.0..30.0), -g.axis).unwrap(),
        2 => {
            let off =
                g.axis.cross(&Vector3::new(0.3, -0.5, 0.8)).normalize() * rng.gen_range(1.0..20.0);
            RotationSubgroup::new(g.point + off, g.axis).unwrap()
        }
        _ => RotationSubgroup::new(g.point, (g.axis + Vector3::new(0.2, 0.1, -0.3)).normalize())
            .unwrap(),
    }
}

fn criterion_4() -> Outcome {
    let hand = configure_mode(&default_hand(), GraspMode::Precision).map_err(|e| e.to_string())?;
    for (a, b) in [
        (FingerRole::ALeft, FingerRole::BLeft),
        (FingerRole::ARight, FingerRole::BRight),
    ] {
        let g = combined_finger_group(&hand, a, b).map_err(|e| e.to_string())?;
        let prox = finger_motion_group(&hand, a).factors[0];
        check(
            g.factors.len() == 1 && g.factors[0].same_line(&prox),
            "",
            format!("combined {a}+{b} has {} factors", g.factors.len()),
        )?;
        let da = finger_motion_group(&hand, a).factors[1];
        let db = finger_motion_group(&hand, b).factors[1];
        check(
            da.is_parallel(&db) && intersect_rotation_subgroups(&da, &db).is_identity(),
            "",
            "offset distal axes do not intersect to identity",
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let g = random_subgroup(&mut rng);
        let h = related(&g, &mut rng);
        let gh = intersect_rotation_subgroups(&g, &h);
        let hg = intersect_rotation_subgroups(&h, &g);
        check(gh.equivalent(&hg), "", "intersection not commutative")?;
        let gg = intersect_rotation_subgroups(&g, &g);
        check(
            gg.equivalent(&MotionGroup::single(g)),
            "",
            "intersection not idempotent",
        )?;
    }
    Ok("one factor on the shared proximal axis; distal axes meet in identity; 1000 pairs commute and are idempotent".into())
}

fn uptake(c: &HydraulicCircuit, loads: [f64; 2], p: f64) -> [f64; 2] {
    let m = &c.params;
    std::array::from_fn(|i| {
        if !loads[i].is_finite() {
            return 0.0;
        }
        let now = c.contraction_ratio(i);
        let eq = m
            .equilibrium_ratio(p, loads[i])
            .clamp(now, m.max_contraction_ratio);
        (m.volume(eq) - c.muscles[i].volume).max(0.0)
    })
}

fn criterion_5() -> Outcome {
    let params = MuscleParams::default();
    let c0 = HydraulicCircuit::new(params).unwrap();
    let blocked = distribute_volume(&c0, [f64::INFINITY, 30.0], 0.37).unwrap();
    check(
        blocked.muscles[0].volume == 0.0 && blocked.muscles[1].volume == 0.37,
        "",
        "blocked muscle took volume",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut c = c0.clone();
        for _ in 0..50 {
            let load = |r: &mut ChaCha8Rng| {
                if r.gen_bool(0.15) {
                    f64::INFINITY
                } else {
                    r.gen_range(0.0..120.0)
                }
            };
            let loads = [load(&mut rng), load(&mut rng)];
            let dv = rng.gen_range(0.0..0.05);
            match distribute_volume(&c, loads, dv) {
                Ok(n) => c = n,
                Err(_) => continue,
            }
            let held = c.muscles[0].volume + c.muscles[1].volume;
            worst =
                worst.max((held - c.pumped_volume).abs() / c.pumped_volume.max(f64::MIN_POSITIVE));
        }
    }
    check(worst <= 1e-12, "", format!("volume drift {worst:.2e}"))?;

    let mut rel: f64 = 0.0;
    let mut split = 0;
    for loads in [[10.0, 11.0], [5.0, 15.0], [20.0, 20.5], [0.0, 30.0]] {
        for dv in [0.5, 2.0, 6.0] {
            let got = distribute_volume(&c0, loads, dv).map_err(|e| e.to_string())?;
            let p = (0..=(params.overpressure * 1000.0) as usize)
                .map(|i| i as f64 / 1000.0)
                .find(|&p| {
                    let u = uptake(&c0, loads, p);
                    u[0] + u[1] >= dv
                })
                .ok_or("brute-force scan never absorbs the volume")?;
            // Linear interpolation between the bracketing 1 Pa samples.
            let (ua, ub) = (
                uptake(&c0, loads, (p - 1e-3).max(0.0)),
                uptake(&c0, loads, p),
            );
            let (ta, tb) = (ua[0] + ua[1], ub[0] + ub[1]);
            let f = if tb > ta { (dv - ta) / (tb - ta) } else { 1.0 };
            let u: [f64; 2] = std::array::from_fn(|i| ua[i] + f * (ub[i] - ua[i]));
            let share0 = dv * u[0] / (u[0] + u[1]);
            let oracle =
                [share0, dv - share0].map(|v| params.ratio_for_volume(v) * params.rest_length);
            if oracle.iter().all(|c| *c > 0.0) {
                split += 1;
            }
            for i in 0..2 {
                let (g, o) = (got.muscles[i].contraction, oracle[i]);
                let e = if o == 0.0 { g.abs() } else { (g - o).abs() / o };
                if !e.is_finite() {
                    return Err(format!("non-finite contraction error for loads {loads:?}"));
                }
                rel = rel.max(e);
            }
        }
    }
    check(
        rel < 1e-3 && split >= 4,
        format!("blocked muscle exact; volume drift {worst:.1e} <= 1e-12; 1 Pa oracle agrees to {rel:.1e} < 0.1% over 12 cases ({split} shared)"),
        format!("pressure-balance split off by {rel:.2e} ({split} shared cases)"),
    )
}

const GRID: usize = 500;

fn grid_point(lo: f64, hi: f64, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (GRID - 1) as f64
}

/// Dense joint-grid minimiser: lowest-energy penetration-free cell on the
/// terminal contour of one finger.
fn grid_oracle(
    design: &FingerDesign,
    probe: &ClearanceProbe,
    target: f64,
    q2_band: Option<(f64, f64)>,
) -> Option<(JointState, f64, f64)> {
    let [j1, j2] = &design.joints;
    let d1 = (j1.limits.hi - j1.limits.lo) / (GRID - 1) as f64;
    let d2 = (j2.limits.hi - j2.limits.lo) / (GRID - 1) as f64;
    // A locked distal joint is a band that may fall between grid rows, so
    // its end points are sampled as well.
    let q2s: Vec<f64> = match q2_band {
        None => (0..GRID)
            .map(|j| grid_point(j2.limits.lo, j2.limits.hi, j))
            .collect(),
        Some((a, b)) => {
            let mut v: Vec<f64> = (0..GRID)
                .map(|j| grid_point(j2.limits.lo, j2.limits.hi, j))
                .filter(|q| *q > a && *q < b)
                .collect();
            v.push(a);
            v.push(b);
            v
        }
    };
    // Half a cell of fingertip sweep: a sim state pressed against the object
    // may sit on a sliver of the contour thinner than one cell.
    let reach = design.proximal_length + design.distal_length;
    let slack = 0.5 * (reach * d1 + design.distal_length * d2);
    let mut best: Option<(JointState, f64)> = None;
    for i in 0..GRID {
        let q1 = grid_point(j1.limits.lo, j1.limits.hi, i);
        let l1 = j1.tendon_length_at(q1);
        let s1 = j1.tendon_moment_arm_at(q1).unwrap_or(0.0).abs();
        for &q2 in &q2s {
            let l = l1 + j2.tendon_length_at(q2);
            let s2 = j2.tendon_moment_arm_at(q2).unwrap_or(0.0).abs();
            let tol = if q2_band.is_some() {
                0.5 * s1 * d1
            } else {
                0.5 * (s1 * d1 + s2 * d2)
            };
            if (l - target).abs() > tol {
                continue;
            }
            let s = JointState::new(q1, q2);
            if probe.clearance(s) < -slack {
                continue;
            }
            let e = hydra_core::elastic_energy(design, s).unwrap();
            if best.is_none_or(|(_, be)| e < be) {
                best = Some((s, e));
            }
        }
    }
    best.map(|(s, _)| (s, d1, d2))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let hand = default_hand();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut classes = Vec::new();
    for n in 0..20 {
        let mode = if rng.gen_bool(0.5) {
            GraspMode::Cylindrical
        } else {
            GraspMode::Precision
        };
        let r = rng.gen_range(10.0..40.0);
        let dx = rng.gen_range(-15.0..15.0);
        let sc = GraspScenario {
            hand: None,
            object: GraspObject::Planar {
                profile: Profile::Circle {
                    center: [0.0, r],
                    radius: r,
                },
            },
            mode,
            offset: [dx, 0.0, 0.0],
            options: SimOptions::default(),
        };
        let out = sc
            .run(&hand, None)
            .map_err(|e| format!("scenario {n}: {e}"))?;
        classes.push(out.classification);
        let h = configure_mode(&hand, mode).unwrap();
        let last = out.trajectory.last().unwrap();
        for (k, role) in FingerRole::ALL.into_iter().enumerate() {
            let design = h.finger(role);
            let probe = ClearanceProbe::new(&h, role, &out.final_object, out.table_z);
            let target = LevelSet::from_retraction(design, last.retraction[k]).target();
            let band = (mode == GraspMode::Precision).then(|| {
                let q2 = out.trajectory[0].states[k].q2;
                (q2 - h.lock_compliance, q2 + h.lock_compliance)
            });
            let (q, d1, d2) = grid_oracle(design, &probe, target, band)
                .ok_or_else(|| {
                    let s = out.final_states[k];
                    format!(
                        "scenario {n} ({mode}, r = {r:.2}, dx = {dx:.2}) finger {role}: no feasible grid cell; sim {s:?} clearance {:.3e} length {:.6} target {target:.6} band {band:?} {:?}",
                        probe.clearance(s),
                        design.joints[0].tendon_length_at(s.q1) + design.joints[1].tendon_length_at(s.q2),
                        out.termination
                    )
                })?;
            let s = out.final_states[k];
            let cells = ((s.q1 - q.q1).abs() / d1).max((s.q2 - q.q2).abs() / d2);
            worst = worst.max(cells);
            if cells > 1.0 + 1e-9 {
                return Err(format!(
                    "scenario {n} ({mode}, r = {r:.2}, dx = {dx:.2}) finger {role}: sim {s:?} vs grid {q:?} ({cells:.2} cells)"
                ));
            }
        }
    }
    let dt = within(t, Duration::from_secs(300))?;
    let wraps = classes.iter().filter(|c| **c != GraspClass::Miss).count();
    Ok(format!(
        "20 scenarios ({wraps} with contact), worst {worst:.2} grid cells <= 1, {dt}"
    ))
}

fn sphere(d: f64) -> GraspObject {
    GraspObject::Sphere {
        center: [0.0, 0.0, d / 2.0],
        radius: d / 2.0,
    }
}

fn scenario(object: GraspObject, mode: GraspMode, offset: [f64; 3]) -> GraspScenario {
    GraspScenario {
        hand: None,
        object,
        mode,
        offset,
        options: SimOptions::default(),
    }
}

fn criterion_7() -> Outcome {
    let hand = default_hand();
    let golf = scenario(sphere(43.0), GraspMode::Spherical, [0.0; 3])
        .run(&hand, None)
        .map_err(|e| e.to_string())?;
    check(
        golf.classification == GraspClass::FingertipPinch,
        "",
        format!("(a) golf ball: {}", golf.classification),
    )?;
    let big = scenario(sphere(60.0), GraspMode::Spherical, [0.0; 3])
        .run(&hand, None)
        .map_err(|e| e.to_string())?;
    check(
        big.classification == GraspClass::Enveloping && big.contacts.len() >= 3,
        "",
        format!(
            "(b) 60 mm sphere: {} with {} contacts",
            big.classification,
            big.contacts.len()
        ),
    )?;
    let cyl = meeting_height(&hand, GraspMode::Cylindrical).map_err(|e| e.to_string())?;
    let sph = meeting_height(&hand, GraspMode::Spherical).map_err(|e| e.to_string())?;
    check(
        sph.height < cyl.height,
        "",
        format!(
            "(c) meeting heights spherical {} vs cylindrical {}",
            sph.height, cyl.height
        ),
    )?;
    let washer = GraspObject::Planar {
        profile: Profile::ConvexPolygon {
            vertices: vec![[-20.0, 0.0], [20.0, 0.0], [20.0, 2.0], [-20.0, 2.0]],
        },
    };
    let pinch = scenario(washer, GraspMode::Precision, [10.0, 0.0, 0.0])
        .run(&hand, None)
        .map_err(|e| e.to_string())?;
    let q2_0 = pinch.trajectory[0].states.map(|s| s.q2);
    let rigid = pinch
        .trajectory
        .iter()
        .all(|s| (0..4).all(|k| s.states[k].q2 == q2_0[k]));
    let centre = pinch.final_object.reference_point().x;
    let sides = pinch.contacts.iter().any(|c| c.point.x < 0.0)
        && pinch.contacts.iter().any(|c| c.point.x > 0.0);
    let tips = pinch
        .contacts
        .iter()
        .all(|c| c.link == Link::Distal && c.fingertip);
    check(
        rigid && pinch.classification == GraspClass::FingertipPinch && centre.abs() < 1e-3 && sides && tips,
        format!(
            "(a) 43 mm {}; (b) 60 mm {} x{}; (c) meet {:.3} < {:.3} mm; (d) distal fixed, {} centred at {:.1e} mm",
            golf.classification,
            big.classification,
            big.contacts.len(),
            sph.height,
            cyl.height,
            pinch.classification,
            centre
        ),
        format!(
            "(d) rigid {rigid}, {} centre {centre}, both sides {sides}, tips only {tips}",
            pinch.classification
        ),
    )
}

fn criterion_8() -> Outcome {
    let w = YcbWeights::builtin();
    let full = score_ycb(&full_success_log(&w), &w).map_err(|e| e.to_string())?;
    check(
        full.combined == 404.0 && full.max_score == 404.0,
        "",
        format!("full log scores {}", full.combined),
    )?;

    let fixture = YcbWeights {
        version: 1,
        cell_weights: [1.0; 4],
        objects: ["obj1", "obj2", "obj3"]
            .into_iter()
            .map(|id| YcbObject {
                id: id.into(),
                kind: ObjectKind::Rigid {
                    positions: Position::ALL.to_vec(),
                },
            })
            .collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut trials = Vec::new();
    let mut expect = 0.0;
    for o in &fixture.objects {
        let mut best: f64 = 0.0;
        for m in GraspMode::ALL {
            let mut mode_score = 0.0;
            for p in Position::ALL {
                let k = rng.gen_range(0..=4);
                let cells: Vec<bool> = (0..4).map(|i| i < k).collect();
                mode_score += k as f64;
                trials.push(YcbTrial {
                    object_id: o.id.clone(),
                    mode: m,
                    position: p,
                    cells,
                });
            }
            best = best.max(mode_score);
        }
        expect += best;
    }
    let r = score_ycb(&trials, &fixture).map_err(|e| e.to_string())?;
    check(
        r.combined == expect,
        "",
        format!("combined {} vs best-of-mode sum {expect}", r.combined),
    )?;

    let d = |g: &'static str, n: usize| {
        (0..5).map(move |i| SoftDTrial {
            garment_id: g.into(),
            success: i < n,
        })
    };
    let soft_d: Vec<SoftDTrial> = d("socks", 5)
        .chain(d("t-shirt", 4))
        .chain(d("jeans", 0))
        .collect();
    let rd = score_soft_d(&soft_d).map_err(|e| e.to_string())?;
    let rate = |g: &str| rd.by_garment[g].success_rate;
    check(
        rate("socks") == 1.0 && rate("t-shirt") == 0.8 && rate("jeans") == 0.0,
        "",
        "soft D rates differ",
    )?;
    let soft_c: Vec<SoftCTrial> = (0..5)
        .map(|i| SoftCTrial {
            garment_id: "jeans".into(),
            success: i < 2,
            lift_height: (i < 2).then_some(250.0 + 50.0 * i as f64),
        })
        .collect();
    let rc = score_soft_c(&soft_c).map_err(|e| e.to_string())?;
    check(
        rc.by_garment["jeans"].success_rate == 0.4,
        format!("full log 404/404; combined {expect} = sum of best modes; socks 1.0, t-shirt 0.8, jeans 0.0; jeans lift rate 0.4"),
        "soft C jeans rate differs",
    )
}

fn hydra(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_hydra"))
        .args(args)
        .output()
        .expect("run hydra");
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let scen = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/golfball.json");
    let trials = d.join("trials.jsonl");
    let log = hydra_core::benchmark::TrialLog {
        ycb: full_success_log(&YcbWeights::builtin()),
        ..Default::default()
    };
    std::fs::write(&trials, log.to_jsonl()).map_err(|e| e.to_string())?;
    let scen = scen.to_str().unwrap().to_string();
    let trials = trials.to_str().unwrap().to_string();
    let runs: Vec<(&str, Vec<String>, Vec<&str>)> = vec![
        (
            "energy-map",
            vec!["energy-map".into(), "--n".into(), "60".into()],
            vec![],
        ),
        (
            "contour",
            vec!["contour".into(), "--retraction".into(), "4".into()],
            vec![],
        ),
        (
            "trajectory",
            vec!["trajectory".into(), "--steps".into(), "100".into()],
            vec![],
        ),
        ("bistability", vec!["bistability".into()], vec![]),
        (
            "mode-group",
            vec!["mode-group".into(), "--lock".into()],
            vec![],
        ),
        (
            "meeting-height",
            vec!["meeting-height".into(), "--tips".into(), "TIPS".into()],
            vec!["TIPS"],
        ),
        (
            "grasp",
            vec![
                "grasp".into(),
                "--scenario".into(),
                scen,
                "--jitter".into(),
                "2".into(),
                "--seed".into(),
                "7".into(),
            ],
            vec![],
        ),
        (
            "score",
            vec![
                "score".into(),
                "--trials".into(),
                trials,
                "--markdown".into(),
                "MD".into(),
            ],
            vec!["MD"],
        ),
    ];
    for (name, args, extra) in runs {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let sub = d.join(format!("{name}-{run}"));
            std::fs::create_dir_all(&sub).unwrap();
            let out_path = sub.join("out");
            let mut a: Vec<String> = args
                .iter()
                .map(|x| {
                    if extra.contains(&x.as_str()) {
                        sub.join(x).to_str().unwrap().to_string()
                    } else {
                        x.clone()
                    }
                })
                .collect();
            a.push("--out".into());
            a.push(out_path.to_str().unwrap().into());
            let refs: Vec<&str> = a.iter().map(String::as_str).collect();
            let (_, code) = hydra(&refs);
            check(code == 0, "", format!("{name} exited with {code}"))?;
            let mut bytes = std::fs::read(&out_path).map_err(|e| e.to_string())?;
            for x in &extra {
                bytes.extend(std::fs::read(sub.join(x)).map_err(|e| e.to_string())?);
            }
            outputs.push(bytes);
        }
        check(
            outputs[0] == outputs[1] && !outputs[0].is_empty(),
            "",
            format!("{name} output differs between runs"),
        )?;
    }
    Ok("8 subcommands byte-identical across two runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed-form cord identities", criterion_1),
        ("moment-arm / derivative duality", criterion_2),
        ("distal-first minimum-energy trajectory", criterion_3),
        ("motion-group algebra", criterion_4),
        ("hydraulic differential", criterion_5),
        ("grasp closure vs dense joint-grid oracle", criterion_6),
        ("failure-mode reproduction", criterion_7),
        ("benchmark arithmetic", criterion_8),
        ("CLI determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
