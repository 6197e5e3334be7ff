//! Acceptance suite. Prints one `PASS` / `FAIL` line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{Isometry3, Matrix4, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dq_handover::cli::{execute, Command, RunConfig};
use dq_handover::controllers::search::translation_subtask;
use dq_handover::controllers::{random_search, rollout, ControllerConfig, Greedy, LinearPolicy, SearchConfig};
use dq_handover::metrics::{
    dq_pose_distance, dq_pose_rotation_distance, euler_distance, matrix_angle, matrix_distance, MetricWeights,
    Pose,
};
use dq_handover::quat::{dq_conj, dq_from_pose, dq_mul, dq_to_pose, DualQuaternion, Quaternion};
use dq_handover::reward::{
    sensor_index, total_reward, ContactState, Finger, FrameSet, Phalanx, PhaseState, RewardConfig, PALM,
};
use dq_handover::sim::{contact_proxy, EpisodeLog, ObjectKind, Outcome, Perturbation, SimConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

type PoseDistance = Box<dyn Fn(&Pose, &Pose) -> f64>;

/// Palm x, back x, object x, contacts, expected reward, expected m_t, expected eta.
type FixtureStep = (f64, f64, f64, Vec<usize>, f64, i32, f64);

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_unit_quat(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-3 && n2 <= 1.0 {
            return UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(v[0], v[1], v[2], v[3]));
        }
    }
}

fn random_isometry(rng: &mut ChaCha8Rng) -> Isometry3<f64> {
    let t = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    Isometry3::from_parts(Translation3::from(t), random_unit_quat(rng))
}

fn to_quat(q: &UnitQuaternion<f64>) -> Quaternion {
    Quaternion::new(q.w, q.i, q.j, q.k)
}

fn to_pose(iso: &Isometry3<f64>) -> Pose {
    Pose::new(iso.translation.vector, to_quat(&iso.rotation))
}

fn dq_of(iso: &Isometry3<f64>) -> DualQuaternion {
    dq_from_pose(&to_quat(&iso.rotation), &iso.translation.vector).expect("unit rotation")
}

/// Homogeneous matrix of a dual quaternion via its recovered rotation and translation.
fn dq_matrix(dq: &DualQuaternion) -> Matrix4<f64> {
    let (q, t) = dq_to_pose(dq).expect("unit dual quaternion");
    let uq = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q.w, q.x, q.y, q.z));
    Isometry3::from_parts(Translation3::from(t), uq).to_homogeneous()
}

fn max_abs(m: &Matrix4<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut compose, mut round_trip, mut inverse) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let a = random_isometry(&mut rng);
        let b = random_isometry(&mut rng);
        let (da, db) = (dq_of(&a), dq_of(&b));

        let oracle = a.to_homogeneous() * b.to_homogeneous();
        compose = compose.max(max_abs(&(dq_matrix(&dq_mul(&da, &db)) - oracle)));

        let (q, t) = dq_to_pose(&da).expect("unit");
        let uq = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q.w, q.x, q.y, q.z));
        round_trip = round_trip.max((t - a.translation.vector).abs().max());
        round_trip = round_trip.max(uq.angle_to(&a.rotation));

        let id = dq_mul(&da, &dq_conj(&da)).canonical();
        let err = DualQuaternion::IDENTITY
            .to_array()
            .iter()
            .zip(id.to_array())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        inverse = inverse.max(err);
        inverse = inverse.max(max_abs(&(dq_matrix(&dq_conj(&da)) - a.inverse().to_homogeneous())));
    }
    let elapsed = start.elapsed();
    let worst = compose.max(round_trip).max(inverse);
    verdict(
        worst < 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "1000 samples: compose err {compose:.2e}, round-trip err {round_trip:.2e}, conj-inverse err {inverse:.2e} \
             (< 1e-9), {:.0} ms (< 1000 ms)",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let a = to_pose(&random_isometry(&mut rng));
        let b = to_pose(&random_isometry(&mut rng));
        let lhs = dq_pose_rotation_distance(&a, &b);
        let rhs = 2.0 * (matrix_angle(&a, &b) / 4.0).sin().abs();
        worst = worst.max((lhs - rhs).abs());
    }
    verdict(worst < 1e-9, format!("1000 pairs: max |dq_rot - 2 sin(theta/4)| = {worst:.2e} (< 1e-9)"))
}

fn criterion_3() -> Verdict {
    let w = MetricWeights::default();
    let metrics: [(&str, PoseDistance); 3] = [
        ("dq", Box::new(dq_pose_distance)),
        ("euler", Box::new(move |a, b| euler_distance(a, b, &w))),
        ("matrix", Box::new(move |a, b| matrix_distance(a, b, &w))),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(Pose, Pose)> =
        (0..1000).map(|_| (to_pose(&random_isometry(&mut rng)), to_pose(&random_isometry(&mut rng)))).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, d) in &metrics {
        let (mut negative, mut self_dist, mut asym) = (0usize, 0.0_f64, 0.0_f64);
        for (a, b) in &pairs {
            let ab = d(a, b);
            if ab < 0.0 || !ab.is_finite() {
                negative += 1;
            }
            self_dist = self_dist.max(d(a, a));
            asym = asym.max((ab - d(b, a)).abs());
        }
        ok &= negative == 0 && self_dist < 1e-9 && asym < 1e-9;
        notes.push(format!("{name}: neg {negative}, d(a,a) {self_dist:.1e}, asym {asym:.1e}"));
    }

    // Gimbal witness: pitch just below and just above pi/2 about the same roll/yaw.
    let delta = 1e-4;
    let a = Pose::from_euler(Vector3::zeros(), Vector3::new(0.0, FRAC_PI_2 - delta, 0.0));
    let b = Pose::from_euler(Vector3::zeros(), Vector3::new(0.0, FRAC_PI_2 + delta, 0.0));
    let (de, dd, dm) = (euler_distance(&a, &b, &w), dq_pose_distance(&a, &b), matrix_distance(&a, &b, &w));
    let witness = de > 0.5 && dd < 1e-3 && dm < 1e-3;
    notes.push(format!("gimbal witness: euler {de:.4} (> 0.5), dq {dd:.1e}, matrix {dm:.1e} (< 1e-3)"));
    verdict(ok && witness, notes.join("; "))
}

fn at(x: f64) -> Pose {
    Pose::from_translation(Vector3::new(x, 0.0, 0.0))
}

fn criterion_4() -> Verdict {
    let cfg = RewardConfig::default();
    let w = [0.28, 0.09, 0.06, 0.03];
    let palm_w = w[0];
    let prox = w[1];
    let index_p = sensor_index(Finger::Index, Phalanx::Proximal);
    let middle_p = sensor_index(Finger::Middle, Phalanx::Proximal);
    let thumb_p = sensor_index(Finger::Thumb, Phalanx::Proximal);

    // With identity rotations the dual-quaternion distance is |dx| / 2.
    let e = f64::exp;
    let steps: Vec<FixtureStep> = vec![
        // no previous distance: penalized
        (0.0, -0.5, 1.0, vec![], -e(-0.5), -1, 1.0),
        // strict progress from a valid zone
        (0.2, -0.3, 1.0, vec![], e(-0.4), 1, 1.0),
        // moving away
        (0.1, -0.4, 1.0, vec![], -e(-0.45), -1, 1.0),
        // progress but the back of the hand faces the object; palm contact
        (0.3, 1.0, 1.0, vec![PALM], -0.5 * e(-0.35) + palm_w, -1, 0.5),
        // progress with three contacts, no thumb yet
        (0.4, -0.1, 1.0, vec![PALM, index_p, middle_p], 0.25 * e(-0.3) + palm_w + 2.0 * prox, 1, 0.25),
        // thumb + index: grasp, manipulation term from the object's home distance, grasp bonus
        (0.5, 0.0, 1.0, vec![PALM, index_p, thumb_p], 12.0 * e(-0.5) + palm_w + 2.0 * prox + 5.0, -1, 0.25),
        // object carried within tolerance of home: target bonus
        (0.06, -0.44, 0.06, vec![PALM, index_p, thumb_p], 12.0 * e(-0.03) + palm_w + 2.0 * prox + 10.0, -1, 0.25),
        // contacts lost: indicator stays set, no bonus repeats
        (0.02, -0.48, 0.02, vec![], 12.0 * e(-0.01), -1, 1.0),
    ];

    let mut state = PhaseState::default();
    let mut worst = 0.0_f64;
    let mut flags_ok = true;
    let mut bonuses = Vec::new();
    for (i, (palm, back, obj, contacts, expected, m_t, eta)) in steps.iter().enumerate() {
        let frames = FrameSet {
            hand_palm: at(*palm),
            hand_back: at(*back),
            giver_palm: at(3.0),
            object_grasp: at(*obj),
            home: Pose::IDENTITY,
        };
        let out = total_reward(&frames, &ContactState::with(contacts), &state, &cfg);
        worst = worst.max((out.reward - expected).abs());
        let pre_grasp = i < 5;
        if pre_grasp {
            flags_ok &= out.terms.m_t == *m_t;
        }
        flags_ok &= (out.terms.eta - eta).abs() < 1e-15;
        flags_ok &= out.state.grasped == (i >= 5);
        bonuses.push(out.terms.bonus);
        state = out.state;
    }
    let bonus_ok = bonuses == [0.0, 0.0, 0.0, 0.0, 0.0, 5.0, 10.0, 0.0];
    verdict(
        worst < 1e-12 && flags_ok && bonus_ok,
        format!("8 steps: max reward err {worst:.1e} (< 1e-12), m_t/eta/grasp flags ok {flags_ok}, bonuses {bonuses:?}"),
    )
}

struct DescentStats {
    success_pct: f64,
    initial_rot: f64,
    final_rot: f64,
    elapsed: Duration,
    logs: Vec<EpisodeLog>,
}

fn greedy_batch(object: ObjectKind, perturbation: Perturbation) -> DescentStats {
    let cfg = SimConfig { object: object.spec(), perturbation, ..SimConfig::default() };
    let ctrl = Greedy(ControllerConfig::default());
    let seeds: Vec<u64> = (0..100).collect();
    let start = Instant::now();
    let logs = rollout(&ctrl, &cfg, &seeds).expect("rollout");
    let elapsed = start.elapsed();
    let wins = logs
        .iter()
        .filter(|l| {
            let last = l.steps.last().expect("non-empty episode");
            l.outcome() == Outcome::Success && last.d_tgt < 0.05 && l.len() <= 500
        })
        .count();
    let n = logs.len() as f64;
    let initial_rot = logs.iter().map(|l| l.initial.expect("initial distances").rotation).sum::<f64>() / n;
    let final_rot = logs.iter().map(|l| l.steps.last().expect("non-empty").d_rot).sum::<f64>() / n;
    DescentStats { success_pct: 100.0 * wins as f64 / n, initial_rot, final_rot, elapsed, logs }
}

fn criterion_5(base: &DescentStats) -> Verdict {
    let ratio = base.final_rot / base.initial_rot;
    verdict(
        base.success_pct >= 90.0 && ratio < 0.5 && base.elapsed < Duration::from_secs(60),
        format!(
            "greedy-dq, 100 seeds: success {:.0}% (>= 90%), final/initial rotation distance {:.4}/{:.4} = {:.1}% (< 50%), {:.2} s (< 60 s)",
            base.success_pct,
            base.final_rot,
            base.initial_rot,
            100.0 * ratio,
            base.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6(base: &DescentStats) -> Verdict {
    let moved = greedy_batch(ObjectKind::Prism, Perturbation::moving());
    let drop = base.success_pct - moved.success_pct;
    verdict(
        drop <= 20.0,
        format!(
            "giver moving at 0.03 m/s, 0.16 rad/s: success {:.0}% vs {:.0}% static, drop {drop:.0} points (<= 20)",
            moved.success_pct, base.success_pct
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in ObjectKind::ALL {
        let stats = greedy_batch(kind, Perturbation::Off);
        let fired = stats.logs.iter().any(|l| l.steps.iter().any(|s| s.contact_mask != 0));
        ok &= stats.success_pct >= 85.0 && fired;
        notes.push(format!("{kind} {:.0}%", stats.success_pct));
    }
    // direct proxy check at the grasp frame with a closed hand
    let cfg = SimConfig::default();
    for kind in [ObjectKind::Prism, ObjectKind::Cylinder] {
        let grasp = cfg.nominal_grasp_pose();
        let c = contact_proxy(&grasp, &[1.6; 3], &kind.spec(), &grasp, &cfg.contact);
        ok &= c.count() > 1;
        notes.push(format!("{kind} proxy fires {} sensors", c.count()));
    }
    verdict(ok, format!("{} (each >= 85%, proxy must fire)", notes.join(", ")))
}

fn criterion_8() -> Verdict {
    let cfg = translation_subtask(&SimConfig::default());
    let search = SearchConfig {
        iterations: 200,
        population: 32,
        noise_scale: 0.01,
        seeds: (0..8).collect(),
        rng_seed: 0,
        mask: Some(SearchConfig::translation_mask()),
    };
    let start = Instant::now();
    let r = random_search(&LinearPolicy::zeros(), &search, &cfg).expect("search");
    let elapsed = start.elapsed();
    let improvement = (r.final_score() - r.init_score) / r.init_score.abs();
    let mut prev = r.init_score;
    let mut monotone = true;
    for h in &r.history {
        monotone &= h.incumbent_score >= prev;
        prev = h.incumbent_score;
    }
    verdict(
        improvement >= 0.5 && monotone && elapsed < Duration::from_secs(300),
        format!(
            "200 x 32 on 8 seeds: mean return {:.3} -> {:.3}, improvement {:.0}% (>= 50%), monotone {monotone}, {:.1} s (< 300 s)",
            r.init_score,
            r.final_score(),
            100.0 * improvement,
            elapsed.as_secs_f64()
        ),
    )
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("read_dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("prefix").display().to_string();
                out.push((rel, fs::read(&path).expect("read")));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().expect("tempdir");
    let commands = [
        (Command::Run, vec!["episodes=4", "seed=7"]),
        (Command::Sweep, vec!["episodes=3", "sweep.metrics=dq,euler,matrix", "sweep.objects=prism,cylinder"]),
        (Command::Trace, vec!["episodes=3", "metric=euler"]),
        (Command::Optimize, vec!["iterations=3", "population=4", "eval_episodes=2", "sim.max_steps=40"]),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (cmd, overrides) in commands {
        let name = cmd.label();
        let mut first = RunConfig::new(cmd, tmp.path().join(format!("{name}-a")));
        first.overrides = overrides.iter().map(|s| s.to_string()).collect();
        let mut second = first.clone();
        second.output_dir = tmp.path().join(format!("{name}-b"));
        // third run reads back the echoed configuration only
        let mut third = RunConfig::new(cmd, tmp.path().join(format!("{name}-c")));
        third.config_path = Some(tmp.path().join(format!("{name}-a")).join("resolved.conf"));

        let ran = execute(&first).is_ok() && execute(&second).is_ok() && execute(&third).is_ok();
        let a = read_tree(&first.output_dir);
        let same = ran && a == read_tree(&second.output_dir) && a == read_tree(&third.output_dir);
        ok &= same && !a.is_empty();
        notes.push(format!("{name} {} files {}", a.len(), if same { "identical" } else { "DIFFER" }));
    }
    verdict(ok, format!("{} (repeat and resolved-config re-run)", notes.join(", ")))
}

fn main() {
    let base = greedy_batch(ObjectKind::Prism, Perturbation::Off);
    let results = [
        ("1 algebra oracle", criterion_1()),
        ("2 cross-metric identity", criterion_2()),
        ("3 metric laws + gimbal witness", criterion_3()),
        ("4 reward fixture trace", criterion_4()),
        ("5 descent convergence", criterion_5(&base)),
        ("6 perturbation robustness", criterion_6(&base)),
        ("7 object generalization", criterion_7()),
        ("8 optimizer smoke", criterion_8()),
        ("9 CLI determinism", criterion_9()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!("criterion {name}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
