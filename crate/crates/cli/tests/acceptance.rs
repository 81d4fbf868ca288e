//! The ten acceptance criteria, each checked at its stated tolerance and time
//! budget. Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use interhand_core::collision::shapes::{box_mesh, icosphere};
use interhand_core::collision::{build_mesh, inside_mask, penetration_report};
use interhand_core::config::RunConfig;
use interhand_core::encoder::{encoder_forward, EncoderConfig, EncoderWeights, FeatureSet};
use interhand_core::hand_model::{forward, generate_mini_hand, HandModel, HandParamsFrame};
use interhand_core::metrics::{accel_error, mpjpe, pa_mpjpe};
use interhand_core::objectives::{
    check_gradient, flatten_gradients, interpenetration_loss_fixed_mask, joint_loss, mano_loss, reg_loss,
    smooth_loss, total_loss, InterMasks, LossComponents, LossValue, LossWeights,
};
use interhand_core::refiner::{refine_sequence, synthesize_sequence, Scenario};
use nalgebra::{Rotation3, Vector3};
use ndarray::{Array3, ArrayView2, ArrayView3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type V3 = Vector3<f64>;
type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn view3(x: &[f64], t: usize, n: usize) -> ArrayView3<'_, f64> {
    ArrayView3::from_shape((t, n, 3), x).unwrap()
}

fn view2(x: &[f64], t: usize, n: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((t, n), x).unwrap()
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3<f64> {
    Rotation3::new(V3::new(
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
    ))
}

// 1
fn constants_fidelity() -> Check {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let c = RunConfig::load(path).map_err(|e| e.to_string())?;
    let got = [
        c.loss.lambda_j,
        c.loss.lambda_i,
        c.loss.lambda_m,
        c.loss.lambda_r,
        c.loss.lambda_consist,
        c.loss.lambda_beta,
        c.loss.alpha,
        c.sequence.length as f64,
        c.model.vertex_count as f64,
        c.model.joint_count as f64,
    ];
    let want = [100.0, 10.0, 1.0, 0.1, 1.0, 0.1, 0.02, 10.0, 778.0, 21.0];
    ensure(got == want, || format!("config constants {got:?} != {want:?}"))?;
    ensure(c == RunConfig::default(), || "default.toml differs from built-in defaults".into())?;
    Ok("weights 100/10/1/0.1, consist 1, beta 0.1, alpha 0.02 m, T 10, 778 vertices, 21 joints".into())
}

// 2
fn random_masks(rng: &mut ChaCha8Rng, t: usize, vr: usize, vl: usize) -> InterMasks {
    InterMasks {
        right_in_left: (0..t).map(|_| (0..vr).map(|_| rng.random_bool(0.4)).collect()).collect(),
        left_in_right: (0..t).map(|_| (0..vl).map(|_| rng.random_bool(0.4)).collect()).collect(),
    }
}

fn gradient_suite() -> Check {
    const POINTS: u64 = 20;
    const STEP: f64 = 1e-6;
    let (t, j, vr, vl, b, d) = (4, 5, 10, 12, 3, 6);
    let w = LossWeights::default();
    let mut worst = Vec::new();

    let mut run = |name: &str, seed_base: u64, f: &mut dyn FnMut(&mut ChaCha8Rng) -> f64| {
        let mut max_err = 0.0f64;
        for seed in 0..POINTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_base + seed);
            max_err = max_err.max(f(&mut rng));
        }
        worst.push((name.to_string(), max_err));
    };

    let nj = t * j * 3;
    run("smooth", 0, &mut |rng| {
        let x = random_vec(rng, 2 * nj, 0.1);
        check_gradient(
            |x| {
                let l = smooth_loss(view3(&x[..nj], t, j), view3(&x[nj..], t, j)).unwrap();
                (l.value, flatten_gradients(&l, &["joints_right", "joints_left"]))
            },
            &x,
            STEP,
        )
        .unwrap()
    });
    let nr = t * vr * 3;
    run("inter", 100, &mut |rng| {
        let masks = random_masks(rng, t, vr, vl);
        let x = random_vec(rng, nr + t * vl * 3, 0.03);
        check_gradient(
            |x| {
                let l = interpenetration_loss_fixed_mask(view3(&x[..nr], t, vr), view3(&x[nr..], t, vl), &masks, w.alpha)
                    .unwrap();
                (l.value, flatten_gradients(&l, &["vertices_right", "vertices_left"]))
            },
            &x,
            STEP,
        )
        .unwrap()
    });
    run("joint", 200, &mut |rng| {
        let gt = random_vec(rng, nj, 0.1);
        let labeled: Vec<bool> = (0..t).map(|_| rng.random_bool(0.7)).collect();
        let x = random_vec(rng, nj, 0.1);
        check_gradient(
            |x| {
                let l = joint_loss(view3(x, t, j), view3(&gt, t, j), &labeled).unwrap();
                (l.value, flatten_gradients(&l, &["pred"]))
            },
            &x,
            STEP,
        )
        .unwrap()
    });
    let nb = t * b;
    run("mano", 300, &mut |rng| {
        let gt = random_vec(rng, 2 * nb, 1.0);
        let labeled: Vec<bool> = (0..t).map(|_| rng.random_bool(0.7)).collect();
        let x = random_vec(rng, 2 * nb, 1.0);
        check_gradient(
            |x| {
                let l = mano_loss(
                    view2(&x[..nb], t, b),
                    view2(&x[nb..], t, b),
                    view2(&gt[..nb], t, b),
                    view2(&gt[nb..], t, b),
                    &labeled,
                    w.lambda_consist,
                )
                .unwrap();
                (l.value, flatten_gradients(&l, &["beta_right", "beta_left"]))
            },
            &x,
            STEP,
        )
        .unwrap()
    });
    let nd = t * d;
    run("reg", 400, &mut |rng| {
        let x = random_vec(rng, nd + nb, 1.0);
        check_gradient(
            |x| {
                let l = reg_loss(view2(&x[..nd], t, d), view2(&x[nd..], t, b), w.lambda_beta).unwrap();
                (l.value, flatten_gradients(&l, &["theta", "beta"]))
            },
            &x,
            STEP,
        )
        .unwrap()
    });
    // total over one input vector [J_r, J_l, V_r, V_l, beta_r, beta_l, theta_r, theta_l]
    let sizes = [nj, nj, nr, t * vl * 3, nb, nb, nd, nd];
    let names = [
        "joints_right",
        "joints_left",
        "vertices_right",
        "vertices_left",
        "beta_right",
        "beta_left",
        "theta_right",
        "theta_left",
    ];
    run("total", 500, &mut |rng| {
        let masks = random_masks(rng, t, vr, vl);
        let gt_joints = random_vec(rng, 2 * nj, 0.1);
        let gt_beta = random_vec(rng, 2 * nb, 1.0);
        let labeled: Vec<bool> = (0..t).map(|_| rng.random_bool(0.7)).collect();
        // positions in metres, shape coefficients and angles at their natural scale
        let scales = [0.05, 0.05, 0.05, 0.05, 1.0, 1.0, 0.5, 0.5];
        let x: Vec<f64> = sizes.iter().zip(scales).flat_map(|(&n, s)| random_vec(rng, n, s)).collect();
        check_gradient(
            |x| {
                let mut p = Vec::new();
                let mut rest = x;
                for n in sizes {
                    let (h, tail) = rest.split_at(n);
                    p.push(h);
                    rest = tail;
                }
                let mut joint = LossValue::default();
                for (k, name) in [(0, "joints_right"), (1, "joints_left")] {
                    let l = joint_loss(view3(p[k], t, j), view3(&gt_joints[k * nj..(k + 1) * nj], t, j), &labeled).unwrap();
                    joint.accumulate(&l.renamed(&[("pred", name)]), 1.0);
                }
                let mut reg = reg_loss(view2(p[6], t, d), view2(p[4], t, b), w.lambda_beta)
                    .unwrap()
                    .renamed(&[("theta", "theta_right"), ("beta", "beta_right")]);
                reg.accumulate(
                    &reg_loss(view2(p[7], t, d), view2(p[5], t, b), w.lambda_beta)
                        .unwrap()
                        .renamed(&[("theta", "theta_left"), ("beta", "beta_left")]),
                    1.0,
                );
                let components = LossComponents {
                    smooth: smooth_loss(view3(p[0], t, j), view3(p[1], t, j)).unwrap(),
                    joint,
                    inter: interpenetration_loss_fixed_mask(view3(p[2], t, vr), view3(p[3], t, vl), &masks, w.alpha)
                        .unwrap(),
                    mano: mano_loss(
                        view2(p[4], t, b),
                        view2(p[5], t, b),
                        view2(&gt_beta[..nb], t, b),
                        view2(&gt_beta[nb..], t, b),
                        &labeled,
                        w.lambda_consist,
                    )
                    .unwrap(),
                    reg,
                };
                let total = total_loss(&components, &w);
                (total.value, flatten_gradients(&total, &names))
            },
            &x,
            STEP,
        )
        .unwrap()
    });

    let detail = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    ensure(worst.iter().all(|(_, e)| *e < 1e-4), || format!("max relative error too large: {detail}"))?;
    Ok(format!("max relative error over 20 points: {detail}"))
}

// 3
fn convex_signed_distance(vertices: &[V3], faces: &[[usize; 3]], p: &V3) -> f64 {
    faces
        .iter()
        .map(|f| {
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            (b - a).cross(&(c - a)).normalize().dot(&(p - a))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn inside_test_oracle() -> Check {
    const BAND: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cloud = |half: f64| -> Vec<V3> {
        (0..10_000)
            .map(|_| V3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half)))
            .collect()
    };

    let (sv, sf) = icosphere(V3::zeros(), 0.5, 3);
    let sphere = build_mesh(sv.clone(), sf.clone()).map_err(|e| e.to_string())?;
    let points = cloud(0.75);
    let (mut agree, mut checked) = (0, 0);
    for (p, inside) in points.iter().zip(inside_mask(&points, &sphere)) {
        let s = convex_signed_distance(&sv, &sf, p);
        if s.abs() > BAND {
            checked += 1;
            agree += usize::from(inside == (s < 0.0));
        }
    }
    ensure(agree == checked, || format!("sphere: {agree}/{checked} agree"))?;
    let sphere_detail = format!("sphere {agree}/{checked}");

    let half = V3::new(0.4, 0.25, 0.15);
    let rot = Rotation3::new(V3::new(0.3, -0.7, 0.2));
    let shift = V3::new(0.05, 0.0, -0.1);
    let (bv, bf) = box_mesh(V3::zeros(), half, 3);
    let placed = bv.iter().map(|p| rot * p + shift).collect();
    let cuboid = build_mesh(placed, bf).map_err(|e| e.to_string())?;
    let points = cloud(0.6);
    let (mut agree, mut checked) = (0, 0);
    for (p, inside) in points.iter().zip(inside_mask(&points, &cuboid)) {
        let local = rot.inverse() * (p - shift);
        let margin = (0..3).map(|a| local[a].abs() - half[a]).fold(f64::NEG_INFINITY, f64::max);
        if margin.abs() > BAND {
            checked += 1;
            agree += usize::from(inside == (margin < 0.0));
        }
    }
    ensure(agree == checked, || format!("box: {agree}/{checked} agree"))?;
    Ok(format!("100% agreement outside the 1e-6 band: {sphere_detail}, rotated box {agree}/{checked}"))
}

// 4
fn penetration_depth_oracle() -> Check {
    let cube = |x: f64, n: usize| {
        let (v, f) = box_mesh(V3::new(x, 0.0, 0.0), V3::repeat(0.5), n);
        build_mesh(v, f).unwrap()
    };
    let overlap = penetration_report(&cube(0.0, 2), &cube(0.5, 2));
    ensure((overlap.max_depth - 0.5).abs() < 1e-9, || {
        format!("overlapping max_depth {}", overlap.max_depth)
    })?;
    let apart = penetration_report(&cube(0.0, 2), &cube(1.5, 2));
    ensure(apart.max_depth == 0.0 && apart.penetrating_count == 0, || {
        format!("disjoint max_depth {}", apart.max_depth)
    })?;
    let coarse = penetration_report(&cube(0.0, 1), &cube(0.5, 1));
    Ok(format!(
        "max_depth {:.12} m (2x2-subdivided faces), disjoint 0; 8-vertex cubes give {} (all vertices on the other surface)",
        overlap.max_depth, coarse.max_depth
    ))
}

// 5
fn procrustes_property() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_pa = 0.0f64;
    for _ in 0..100 {
        let gt = Array3::from_shape_vec((1, 21, 3), random_vec(&mut rng, 63, 0.1)).unwrap();
        let rot = random_rotation(&mut rng);
        let scale = rng.random_range(0.5..2.0);
        let shift = V3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let mut pred = gt.clone();
        for j in 0..21 {
            let p = rot * V3::new(gt[[0, j, 0]], gt[[0, j, 1]], gt[[0, j, 2]]) * scale + shift;
            for c in 0..3 {
                pred[[0, j, c]] = p[c];
            }
        }
        worst_pa = worst_pa.max(pa_mpjpe(pred.view(), gt.view()).map_err(|e| e.to_string())?);
    }
    ensure(worst_pa < 1e-6, || format!("PA-MPJPE after similarity {worst_pa} mm"))?;
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..100 {
        let gt = Array3::from_shape_vec((1, 21, 3), random_vec(&mut rng, 63, 0.1)).unwrap();
        let noise = Array3::from_shape_vec((1, 21, 3), random_vec(&mut rng, 63, 0.02)).unwrap();
        let pred = &gt + &noise;
        let pa = pa_mpjpe(pred.view(), gt.view()).map_err(|e| e.to_string())?;
        let plain = mpjpe(pred.view(), gt.view(), 0).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(pa - plain);
    }
    ensure(worst_gap <= 0.0, || format!("PA-MPJPE exceeded MPJPE by {worst_gap} mm"))?;
    Ok(format!(
        "max PA-MPJPE {worst_pa:.2e} mm over 100 similarities; max(PA - MPJPE) {worst_gap:.3} mm over 100 noisy pairs"
    ))
}

// 6
fn accel_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (t, j) = (12, 21);
    let start = random_vec(&mut rng, j * 3, 0.1);
    let velocity = random_vec(&mut rng, j * 3, 0.05);
    let linear = Array3::from_shape_fn((t, j, 3), |(f, k, c)| start[k * 3 + c] + velocity[k * 3 + c] * f as f64);
    let constant = accel_error(linear.view(), Array3::zeros((t, j, 3)).view(), 30.0).map_err(|e| e.to_string())?;
    let drift = Array3::from_shape_fn((t, j, 3), |(f, k, c)| velocity[(k * 3 + c + 7) % (j * 3)] * f as f64);
    let shifted = accel_error((&linear + &drift).view(), linear.view(), 30.0).map_err(|e| e.to_string())?;
    ensure(constant < 1e-9 && shifted < 1e-9, || {
        format!("constant-velocity Accel_E {constant}, {shifted}")
    })?;

    let pred = Array3::from_shape_vec((t, j, 3), random_vec(&mut rng, t * j * 3, 0.1)).unwrap();
    let gt = Array3::from_shape_vec((t, j, 3), random_vec(&mut rng, t * j * 3, 0.1)).unwrap();
    let base = accel_error(pred.view(), gt.view(), 30.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for s in [0.5, 2.0, 3.7] {
        let scaled = accel_error(pred.view(), gt.view(), 30.0 * s).map_err(|e| e.to_string())?;
        worst = worst.max((scaled / (base * s * s) - 1.0).abs());
    }
    ensure(worst < 1e-9, || format!("fps scaling relative error {worst}"))?;
    Ok(format!(
        "constant velocity {constant:.1e} and {shifted:.1e} mm/s^2; fps scaling relative error {worst:.1e}"
    ))
}

// 7
fn refiner_efficacy() -> Check {
    let r = generate_mini_hand(0);
    let l = r.mirrored();
    let init = synthesize_sequence(&r, &l, Scenario::Colliding, 10, 0, 30.0).map_err(|e| e.to_string())?;
    let config = RunConfig::default().refine_config();
    let (_, trace) = refine_sequence(&r, &l, &init, &config).map_err(|e| e.to_string())?;
    let last = trace.last();
    let detail = format!(
        "MMPD {:.4} -> {:.4} mm in {} iterations; smooth {:.4} -> {:.4} ({:.3}x)",
        trace.initial.mmpd_mm,
        last.mmpd_mm,
        trace.records.len(),
        trace.initial.smooth,
        last.smooth,
        last.smooth / trace.initial.smooth
    );
    ensure(trace.initial.mmpd_mm > 0.0, || format!("scenario does not collide: {detail}"))?;
    ensure(trace.records.len() <= 500 && last.mmpd_mm < 0.1, || detail.clone())?;
    ensure(last.smooth <= 1.1 * trace.initial.smooth, || detail.clone())?;
    Ok(detail)
}

// 8
fn oracle_joints(model: &HandModel, frame: &HandParamsFrame) -> Vec<V3> {
    let (nv, k) = (model.num_vertices(), model.num_nodes());
    let mut shaped = model.template_vertices.clone();
    for (i, v) in shaped.iter_mut().enumerate() {
        for (b, beta) in frame.beta.iter().enumerate() {
            for c in 0..3 {
                v[c] += model.shape_basis[(3 * i + c, b)] * beta;
            }
        }
    }
    let rest: Vec<V3> = (0..k)
        .map(|n| (0..nv).map(|i| shaped[i] * model.joint_regressor[(n, i)]).sum())
        .collect();
    let rotations: Vec<Rotation3<f64>> = (0..k)
        .map(|n| Rotation3::new(V3::new(frame.theta[3 * n], frame.theta[3 * n + 1], frame.theta[3 * n + 2])))
        .collect();
    let posed: Vec<V3> = (0..nv)
        .map(|i| {
            let mut out = V3::zeros();
            for node in 0..k {
                let w = model.skin_weights[(i, node)];
                if w == 0.0 {
                    continue;
                }
                let mut x = shaped[i];
                let mut cur = node as i64;
                while cur >= 0 {
                    let n = cur as usize;
                    x = rotations[n] * (x - rest[n]) + rest[n];
                    cur = model.kinematic_parents[n];
                }
                out += x * w;
            }
            out + frame.translation
        })
        .collect();
    (0..model.num_joints())
        .map(|j| (0..nv).map(|i| posed[i] * model.joint_regressor[(j, i)]).sum())
        .collect()
}

fn kinematics_oracle() -> Check {
    let model = generate_mini_hand(0);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let frame = HandParamsFrame {
            theta: random_vec(&mut rng, model.pose_dim(), 1.0),
            beta: random_vec(&mut rng, model.num_shape(), 1.0),
            translation: V3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)),
        };
        let ours = forward(&model, &frame).map_err(|e| e.to_string())?;
        for (a, b) in ours.joints.iter().zip(oracle_joints(&model, &frame)) {
            worst = worst.max((a - b).norm());
        }
    }
    ensure(worst < 1e-6, || format!("joint mismatch {worst} m"))?;
    let rest = forward(&model, &HandParamsFrame::zeros(&model)).map_err(|e| e.to_string())?;
    let template_err = rest
        .vertices
        .iter()
        .zip(&model.template_vertices)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    ensure(template_err < 1e-12, || format!("zero pose moved the template by {template_err} m"))?;
    Ok(format!("max joint error {worst:.1e} m over 20 poses; zero-pose template error {template_err:.1e} m"))
}

// 9
fn encoder_invariants() -> Check {
    let config = EncoderConfig::default();
    let run = || -> Result<_, String> {
        let weights = EncoderWeights::random(&config, 17).map_err(|e| e.to_string())?;
        let seqs = FeatureSet::random(&config, 10, 18).sequences().map_err(|e| e.to_string())?;
        encoder_forward(&seqs, &weights).map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    let [c1, c2, c3] = config.dims;
    ensure(c1 > c2 && c2 > c3, || format!("dims {:?} do not decrease", config.dims))?;
    ensure(a.right.dim() == (10, c3) && a.left.dim() == (10, c3), || {
        format!("output shapes {:?} {:?}", a.right.dim(), a.left.dim())
    })?;
    let mut worst = 0.0f64;
    for map in &a.attention {
        for row in map.matrix.rows() {
            ensure(row.iter().all(|&p| p >= 0.0), || "negative attention weight".into())?;
            worst = worst.max((row.sum() - 1.0).abs());
        }
    }
    ensure(worst < 1e-6, || format!("attention row sum off by {worst}"))?;
    let bitwise = a.right.iter().chain(&a.left).zip(b.right.iter().chain(&b.left)).all(|(x, y)| x.to_bits() == y.to_bits())
        && a.attention == b.attention;
    ensure(bitwise, || "two runs differ".into())?;
    Ok(format!(
        "outputs 10x{c3} from 10x{c1}; {} maps, max |row sum - 1| {worst:.1e}; two runs bitwise identical",
        a.attention.len()
    ))
}

// 10
fn pipeline_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let bin = env!("CARGO_BIN_EXE_interhand");
    for args in [
        &["--seed", "7", "synth", "colliding", "10"][..],
        &["--seed", "7", "refine", "out/colliding.json"],
        &["--seed", "7", "evaluate", "out/refined.json", "out/colliding.json"],
    ] {
        let out = Command::new(bin).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
        })?;
    }
    let mut files: Vec<_> = fs::read_dir(dir.join("out"))
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn end_to_end_determinism() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline_files(a.path())?;
    let second = pipeline_files(b.path())?;
    ensure(first.len() >= 6, || format!("only {} output files", first.len()))?;
    ensure(first == second, || "output files differ between runs".into())?;
    let names: Vec<_> = first.iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("{} files byte-identical: {}", first.len(), names.join(", ")))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    check: fn() -> Check,
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { id: 1, name: "constants fidelity", budget: Duration::from_secs(1), check: constants_fidelity },
        Criterion { id: 2, name: "gradient suite", budget: Duration::from_secs(30), check: gradient_suite },
        Criterion { id: 3, name: "inside-test oracle", budget: Duration::from_secs(10), check: inside_test_oracle },
        Criterion { id: 4, name: "penetration-depth oracle", budget: Duration::from_secs(1), check: penetration_depth_oracle },
        Criterion { id: 5, name: "procrustes property", budget: Duration::from_secs(5), check: procrustes_property },
        Criterion { id: 6, name: "accel_e properties", budget: Duration::from_secs(1), check: accel_properties },
        Criterion { id: 7, name: "refiner efficacy", budget: Duration::from_secs(60), check: refiner_efficacy },
        Criterion { id: 8, name: "kinematics oracle", budget: Duration::from_secs(5), check: kinematics_oracle },
        Criterion { id: 9, name: "encoder invariants", budget: Duration::from_secs(5), check: encoder_invariants },
        Criterion { id: 10, name: "end-to-end determinism", budget: Duration::from_secs(90), check: end_to_end_determinism },
    ];
    let mut failures = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let result = (c.check)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(e) => (false, e),
        };
        println!(
            "[{}] {:>2} {}: {} ({:.2} s, budget {} s)",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
        if !ok {
            failures.push(c.id);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
