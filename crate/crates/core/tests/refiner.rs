use interhand_core::collision::{build_mesh, penetration_report};
use interhand_core::hand_model::{generate_mini_hand, HandModel};
use interhand_core::metrics::mmpd;
use interhand_core::objectives::check_gradient;
use interhand_core::refiner::{
    refine_objective, refine_sequence, synthesize_sequence, RefineConfig, RefineError, Scenario,
};
use interhand_core::sequence::Sequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn models() -> (HandModel, HandModel) {
    let r = generate_mini_hand(0);
    let l = r.mirrored();
    (r, l)
}

fn params(seq: &Sequence) -> Vec<f64> {
    seq.frames
        .iter()
        .flat_map(|f| {
            f.theta_r
                .iter()
                .chain(&f.beta_r)
                .chain(&f.theta_l)
                .chain(&f.beta_l)
                .chain(&f.translation_c)
                .copied()
                .collect::<Vec<_>>()
        })
        .collect()
}

fn with_params(template: &Sequence, x: &[f64]) -> Sequence {
    let mut out = template.clone();
    let mut it = x.iter().copied();
    for f in &mut out.frames {
        for v in f
            .theta_r
            .iter_mut()
            .chain(f.beta_r.iter_mut())
            .chain(f.theta_l.iter_mut())
            .chain(f.beta_l.iter_mut())
            .chain(f.translation_c.iter_mut())
        {
            *v = it.next().unwrap();
        }
    }
    out
}

fn change(a: &Sequence, b: &Sequence) -> f64 {
    params(a).iter().zip(params(b)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn sequence_mmpd(r: &HandModel, l: &HandModel, seq: &Sequence) -> Vec<f64> {
    let posed = seq.pose(r, l).unwrap();
    let (mr, ml) = posed.meshes(r, l).unwrap();
    mr.iter()
        .zip(&ml)
        .map(|(a, b)| mmpd(&[penetration_report(a, b)]))
        .collect()
}

#[test]
fn objective_gradient_matches_central_differences() {
    let (r, l) = models();
    let mut anchor = synthesize_sequence(&r, &l, Scenario::Colliding, 5, 2, 30.0).unwrap();
    let gt = anchor.pose(&r, &l).unwrap();
    for (t, f) in anchor.frames.iter_mut().enumerate() {
        f.gt_joints_r = Some(gt.right[t].joints.iter().map(|p| [p.x + 0.003, p.y, p.z]).collect());
        f.gt_joints_l = Some(gt.left[t].joints.iter().map(|p| [p.x, p.y - 0.002, p.z]).collect());
        f.labeled = t % 2 == 0;
    }
    let config = RefineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x0 = params(&anchor);
    for _ in 0..3 {
        let x: Vec<f64> = x0.iter().map(|v| v + rng.random_range(-0.01..0.01)).collect();
        let err = check_gradient(
            |p| {
                let o = refine_objective(&r, &l, &with_params(&anchor, p), &anchor, &config).unwrap();
                (o.objective, o.gradient)
            },
            &x,
            1e-7,
        )
        .unwrap();
        assert!(err < 1e-4, "gradient error {err}");
    }
}

#[test]
fn colliding_sequence_is_separated_without_added_jitter() {
    let (r, l) = models();
    let init = synthesize_sequence(&r, &l, Scenario::Colliding, 10, 0, 30.0).unwrap();
    let (out, trace) = refine_sequence(&r, &l, &init, &RefineConfig::default()).unwrap();
    assert!(trace.initial.mmpd_mm > 0.1);
    assert!(trace.records.len() <= 500);
    let last = trace.last();
    assert!(last.mmpd_mm < 0.1, "final MMPD {} mm", last.mmpd_mm);
    assert!(last.smooth <= 1.1 * trace.initial.smooth);
    assert!(last.objective <= trace.initial.objective);
    let mut prev = trace.initial.objective;
    for rec in &trace.records {
        assert!(rec.objective <= prev);
        prev = rec.objective;
    }
    let recomputed = sequence_mmpd(&r, &l, &out).iter().sum::<f64>() / 10.0;
    assert!((recomputed - last.mmpd_mm).abs() < 1e-9);
}

#[test]
fn static_optimum_is_left_alone() {
    let (r, l) = models();
    let mut seq = synthesize_sequence(&r, &l, Scenario::Disjoint, 10, 0, 30.0).unwrap();
    let c = seq.frames[0].translation_c;
    for f in &mut seq.frames {
        for v in f.theta_r.iter_mut().chain(&mut f.theta_l).chain(&mut f.beta_r).chain(&mut f.beta_l) {
            *v = 0.0;
        }
        f.translation_c = c;
    }
    let (out, trace) = refine_sequence(&r, &l, &seq, &RefineConfig::default()).unwrap();
    assert!(trace.records.len() <= 1);
    assert!(change(&out, &seq) < 1e-9);
}

#[test]
fn large_anchor_suppresses_the_step() {
    let (r, l) = models();
    let seq = synthesize_sequence(&r, &l, Scenario::Jittery { noise: 0.05 }, 10, 0, 30.0).unwrap();
    let step = |anchor_weight| {
        let config = RefineConfig {
            max_iters: 1,
            anchor_weight,
            ..RefineConfig::default()
        };
        change(&refine_sequence(&r, &l, &seq, &config).unwrap().0, &seq)
    };
    let (free, anchored) = (step(0.0), step(1e6));
    assert!(free > 0.0);
    assert!(anchored < 1e-3 * free, "{anchored} vs {free}");
}

#[test]
fn anchored_step_obeys_the_per_coordinate_bound() {
    // each coordinate moves by D / (D + 2a) of its free step, D = (|g| + eps) / eta
    let (r, l) = models();
    let seq = synthesize_sequence(&r, &l, Scenario::Colliding, 10, 0, 30.0).unwrap();
    let config = RefineConfig::default();
    let g = refine_objective(&r, &l, &seq, &seq, &config).unwrap().gradient;
    let max_g = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let a = 1e6;
    let run = |anchor_weight| {
        let config = RefineConfig {
            max_iters: 1,
            anchor_weight,
            ..config
        };
        refine_sequence(&r, &l, &seq, &config).unwrap().0
    };
    let ratio = change(&run(a), &seq) / change(&run(0.0), &seq);
    assert!(ratio <= (max_g + config.epsilon) / (2.0 * a * config.step_size));
}

#[test]
fn freezing_translation_keeps_c() {
    let (r, l) = models();
    let init = synthesize_sequence(&r, &l, Scenario::Colliding, 6, 1, 30.0).unwrap();
    let config = RefineConfig {
        freeze_translation: true,
        max_iters: 20,
        ..RefineConfig::default()
    };
    let (out, _) = refine_sequence(&r, &l, &init, &config).unwrap();
    for (a, b) in out.frames.iter().zip(&init.frames) {
        assert_eq!(a.translation_c, b.translation_c);
    }
    assert!(change(&out, &init) > 0.0);
}

#[test]
fn refinement_is_deterministic_across_thread_counts() {
    let (r, l) = models();
    let init = synthesize_sequence(&r, &l, Scenario::Colliding, 10, 4, 30.0).unwrap();
    let config = RefineConfig {
        max_iters: 30,
        ..RefineConfig::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| refine_sequence(&r, &l, &init, &config).unwrap())
    };
    let (a, ta) = run(1);
    let (b, tb) = run(4);
    assert_eq!(ta.to_csv(), tb.to_csv());
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn invalid_config_is_rejected() {
    let (r, l) = models();
    let init = synthesize_sequence(&r, &l, Scenario::Disjoint, 4, 0, 30.0).unwrap();
    let config = RefineConfig {
        max_iters: 0,
        ..RefineConfig::default()
    };
    assert!(matches!(refine_sequence(&r, &l, &init, &config), Err(RefineError::Config(_))));
}

#[test]
fn scenarios_have_the_advertised_collisions() {
    let (r, l) = models();
    let disjoint = synthesize_sequence(&r, &l, Scenario::Disjoint, 10, 5, 30.0).unwrap();
    assert!(sequence_mmpd(&r, &l, &disjoint).iter().all(|&d| d == 0.0));
    let colliding = synthesize_sequence(&r, &l, Scenario::Colliding, 10, 5, 30.0).unwrap();
    let depths = sequence_mmpd(&r, &l, &colliding);
    assert!(depths.iter().any(|&d| d > 0.0));
    assert_eq!((depths[0], depths[9]), (0.0, 0.0));
    let still = synthesize_sequence(&r, &l, Scenario::Jittery { noise: 0.0 }, 10, 5, 30.0).unwrap();
    assert_eq!(still, disjoint);
    let noisy = synthesize_sequence(&r, &l, Scenario::Jittery { noise: 0.05 }, 10, 5, 30.0).unwrap();
    assert_ne!(noisy, disjoint);
    assert_eq!(noisy, synthesize_sequence(&r, &l, Scenario::Jittery { noise: 0.05 }, 10, 5, 30.0).unwrap());
    assert!(synthesize_sequence(&r, &l, Scenario::Disjoint, 2, 5, 30.0).is_err());
}

#[test]
fn posed_frames_build_valid_meshes() {
    let (r, l) = models();
    let init = synthesize_sequence(&r, &l, Scenario::Colliding, 4, 0, 30.0).unwrap();
    let posed = init.pose(&r, &l).unwrap();
    for m in &posed.right {
        assert!(build_mesh(m.vertices.clone(), r.faces.clone()).is_ok());
    }
}
