//! Direct optimization of a two-hand parameter sequence against the smoothness,
//! interpenetration, joint and regularization losses, plus an anchor that keeps
//! the result near the initial estimate. Also generates synthetic test
//! sequences.
//!
//! The optimizer is Adam with the anchor handled in closed form: after the
//! usual moment update, each coordinate solves the per-coordinate quadratic
//! model plus `a (x - x0)^2` exactly. Steps that raise the objective are
//! halved until they do not.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DVector, Vector3};
use ndarray::{Array2, Array3, ArrayView3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{penetration_report, CollisionReport};
use crate::hand_model::{forward, forward_jacobian, HandModel, HandParamsFrame};
use crate::metrics::mmpd;
use crate::objectives::{
    interpenetration_loss_fixed_mask, joint_loss, reg_loss, smooth_loss, InterMasks, LossError, LossValue, LossWeights,
};
use crate::sequence::{stack, Sequence, SequenceError, SequenceFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Loss weights; filled from the run configuration's loss section.
    #[serde(skip)]
    pub weights: LossWeights,
    pub anchor_weight: f64,
    pub max_iters: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop once an accepted step improves the objective by less than this
    /// fraction.
    pub tol: f64,
    pub mask_refresh_every: usize,
    pub max_backtracks: usize,
    /// Keep the relative translation `c` at its initial value.
    pub freeze_translation: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            anchor_weight: 1.0,
            max_iters: 500,
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            tol: 1e-9,
            mask_refresh_every: 1,
            max_backtracks: 20,
            freeze_translation: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.weights.validate()?;
        if self.max_iters < 1 {
            return Err("max_iters must be at least 1".into());
        }
        if self.mask_refresh_every < 1 {
            return Err("mask_refresh_every must be at least 1".into());
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(format!("step_size must be positive, got {}", self.step_size));
        }
        for (name, d) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(d > 0.0 && d < 1.0) {
                return Err(format!("{name} must lie in (0, 1), got {d}"));
            }
        }
        for (name, x) in [("anchor_weight", self.anchor_weight), ("epsilon", self.epsilon), ("tol", self.tol)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {x}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("invalid refine configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("objective became non-finite at iteration {iteration}")]
    Divergence { iteration: usize, trace: Box<RefineTrace> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub smooth: f64,
    pub joint: f64,
    pub inter: f64,
    pub reg: f64,
    pub anchor: f64,
    pub mmpd_mm: f64,
    pub max_gradient: f64,
    /// Fraction of the proposed step that was taken; 0 when every trial was
    /// rejected.
    pub step_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RefineTrace {
    /// State before the first iteration.
    pub initial: TraceRecord,
    /// One record per executed iteration.
    pub records: Vec<TraceRecord>,
}

pub const TRACE_CSV_HEADER: &str = "iteration,objective,smooth,joint,inter,reg,anchor,mmpd_mm,max_gradient,step_scale";

impl RefineTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().unwrap_or(&self.initial)
    }

    /// CSV with the initial state as iteration 0.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{TRACE_CSV_HEADER}\n");
        for r in std::iter::once(&self.initial).chain(&self.records) {
            let _ = writeln!(
                out,
                "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.6},{:.9e},{}",
                r.iteration,
                r.objective,
                r.smooth,
                r.joint,
                r.inter,
                r.reg,
                r.anchor,
                r.mmpd_mm,
                r.max_gradient,
                r.step_scale
            );
        }
        out
    }
}

/// Per-frame parameter block: `[theta_r, beta_r, theta_l, beta_l, c]`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    theta: usize,
    beta: usize,
}

impl Layout {
    fn stride(&self) -> usize {
        2 * (self.theta + self.beta) + 3
    }

    fn hand(&self, x: &[f64], t: usize, left: bool) -> HandParamsFrame {
        let base = t * self.stride() + if left { self.theta + self.beta } else { 0 };
        HandParamsFrame {
            theta: x[base..base + self.theta].to_vec(),
            beta: x[base + self.theta..base + self.theta + self.beta].to_vec(),
            translation: Vector3::zeros(),
        }
    }

    fn c_offset(&self, t: usize) -> usize {
        t * self.stride() + 2 * (self.theta + self.beta)
    }

    fn c(&self, x: &[f64], t: usize) -> Vector3<f64> {
        let o = self.c_offset(t);
        Vector3::new(x[o], x[o + 1], x[o + 2])
    }

    fn pack(&self, seq: &Sequence) -> Vec<f64> {
        let mut x = Vec::with_capacity(seq.len() * self.stride());
        for f in &seq.frames {
            x.extend(&f.theta_r);
            x.extend(&f.beta_r);
            x.extend(&f.theta_l);
            x.extend(&f.beta_l);
            x.extend(f.translation_c);
        }
        x
    }

    fn unpack(&self, x: &[f64], template: &Sequence) -> Sequence {
        let mut out = template.clone();
        for (t, f) in out.frames.iter_mut().enumerate() {
            let r = self.hand(x, t, false);
            let l = self.hand(x, t, true);
            f.theta_r = r.theta;
            f.beta_r = r.beta;
            f.theta_l = l.theta;
            f.beta_l = l.beta;
            f.translation_c = self.c(x, t).into();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Parts {
    smooth: f64,
    joint: f64,
    inter: f64,
    reg: f64,
    anchor: f64,
}

struct Evaluation {
    objective: f64,
    parts: Parts,
    /// Gradient of everything but the anchor term.
    gradient: Vec<f64>,
    /// Masks classified at this point.
    masks: InterMasks,
    reports: Vec<CollisionReport>,
}

struct Problem<'a> {
    model_r: &'a HandModel,
    model_l: &'a HandModel,
    layout: Layout,
    t_len: usize,
    x0: Vec<f64>,
    ground_truth: Option<[Array3<f64>; 2]>,
    labeled: Vec<bool>,
    config: RefineConfig,
}

fn to_array2(rows: impl Iterator<Item = Vec<f64>>, t_len: usize, width: usize) -> Array2<f64> {
    Array2::from_shape_vec((t_len, width), rows.flatten().collect()).expect("consistent widths")
}

fn flat(a: &ArrayView3<f64>, t: usize) -> DVector<f64> {
    DVector::from_iterator(a.dim().1 * 3, a.slice(ndarray::s![t, .., ..]).iter().copied())
}

impl Problem<'_> {
    fn anchor(&self, x: &[f64]) -> f64 {
        self.config.anchor_weight * x.iter().zip(&self.x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    }

    fn evaluate(&self, x: &[f64], held_masks: Option<&InterMasks>) -> Result<Evaluation, RefineError> {
        let (layout, t_len) = (self.layout, self.t_len);
        let w = self.config.weights;
        let posed: Vec<_> = (0..t_len)
            .into_par_iter()
            .map(|t| {
                let pr = layout.hand(x, t, false);
                let pl = layout.hand(x, t, true);
                let r = forward(self.model_r, &pr).expect("checked dims");
                let mut l = forward(self.model_l, &pl).expect("checked dims");
                let c = layout.c(x, t);
                l.vertices.iter_mut().chain(l.joints.iter_mut()).for_each(|p| *p += c);
                let jr = forward_jacobian(self.model_r, &pr).expect("checked dims");
                let jl = forward_jacobian(self.model_l, &pl).expect("checked dims");
                (r, l, jr, jl)
            })
            .collect();

        let meshes: Vec<_> = posed
            .par_iter()
            .map(|(r, l, _, _)| {
                let mr = crate::collision::build_mesh(r.vertices.clone(), self.model_r.faces.clone());
                let ml = crate::collision::build_mesh(l.vertices.clone(), self.model_l.faces.clone());
                (mr, ml)
            })
            .collect();
        let mut meshes_r = Vec::with_capacity(t_len);
        let mut meshes_l = Vec::with_capacity(t_len);
        for (t, (mr, ml)) in meshes.into_iter().enumerate() {
            meshes_r.push(mr.map_err(|source| SequenceError::Mesh { frame: t, source })?);
            meshes_l.push(ml.map_err(|source| SequenceError::Mesh { frame: t, source })?);
        }
        let masks = InterMasks::compute(&meshes_r, &meshes_l);
        let reports: Vec<_> = meshes_r
            .par_iter()
            .zip(&meshes_l)
            .map(|(r, l)| penetration_report(r, l))
            .collect();

        let joints_r = stack(posed.iter().map(|p| &p.0.joints[..]));
        let joints_l = stack(posed.iter().map(|p| &p.1.joints[..]));
        let verts_r = stack(posed.iter().map(|p| &p.0.vertices[..]));
        let verts_l = stack(posed.iter().map(|p| &p.1.vertices[..]));

        let smooth = if t_len >= 2 {
            smooth_loss(joints_r.view(), joints_l.view())?
        } else {
            LossValue {
                value: 0.0,
                gradients: [
                    ("joints_right".to_string(), Array3::<f64>::zeros(joints_r.raw_dim()).into_dyn()),
                    ("joints_left".to_string(), Array3::<f64>::zeros(joints_l.raw_dim()).into_dyn()),
                ]
                .into(),
            }
        };
        let inter_exact = interpenetration_loss_fixed_mask(verts_r.view(), verts_l.view(), &masks, w.alpha)?;
        let inter_grad = match held_masks {
            Some(m) if *m != masks => interpenetration_loss_fixed_mask(verts_r.view(), verts_l.view(), m, w.alpha)?,
            _ => inter_exact.clone(),
        };

        let hand_rows = |left: bool, beta: bool| {
            (0..t_len).map(move |t| {
                let p = layout.hand(x, t, left);
                if beta {
                    p.beta
                } else {
                    p.theta
                }
            })
        };
        let reg_r = reg_loss(
            to_array2(hand_rows(false, false), t_len, layout.theta).view(),
            to_array2(hand_rows(false, true), t_len, layout.beta).view(),
            w.lambda_beta,
        )?;
        let reg_l = reg_loss(
            to_array2(hand_rows(true, false), t_len, layout.theta).view(),
            to_array2(hand_rows(true, true), t_len, layout.beta).view(),
            w.lambda_beta,
        )?;

        let mut g_joints_r = smooth.gradients["joints_right"].clone().into_dimensionality::<ndarray::Ix3>().unwrap();
        let mut g_joints_l = smooth.gradients["joints_left"].clone().into_dimensionality::<ndarray::Ix3>().unwrap();
        let mut joint = 0.0;
        if let Some([gt_r, gt_l]) = &self.ground_truth {
            let lr = joint_loss(joints_r.view(), gt_r.view(), &self.labeled)?;
            let ll = joint_loss(joints_l.view(), gt_l.view(), &self.labeled)?;
            joint = lr.value + ll.value;
            g_joints_r.scaled_add(w.lambda_j, &lr.gradients["pred"]);
            g_joints_l.scaled_add(w.lambda_j, &ll.gradients["pred"]);
        }
        let g_verts_r = inter_grad.gradients["vertices_right"].mapv(|g| g * w.lambda_i);
        let g_verts_l = inter_grad.gradients["vertices_left"].mapv(|g| g * w.lambda_i);
        let g_verts_r = g_verts_r.into_dimensionality::<ndarray::Ix3>().unwrap();
        let g_verts_l = g_verts_l.into_dimensionality::<ndarray::Ix3>().unwrap();

        let n_hand = layout.theta + layout.beta;
        let per_frame: Vec<Vec<f64>> = (0..t_len)
            .into_par_iter()
            .map(|t| {
                let (_, _, jac_r, jac_l) = &posed[t];
                let mut g = vec![0.0; layout.stride()];
                for (offset, jac, gv, gj) in [
                    (0, jac_r, &g_verts_r, &g_joints_r),
                    (n_hand, jac_l, &g_verts_l, &g_joints_l),
                ] {
                    let total = jac.vertices.tr_mul(&flat(&gv.view(), t)) + jac.joints.tr_mul(&flat(&gj.view(), t));
                    g[offset..offset + n_hand].copy_from_slice(&total.as_slice()[..n_hand]);
                }
                if !self.config.freeze_translation {
                    let o = 2 * n_hand;
                    let rows_v = g_verts_l.slice(ndarray::s![t, .., ..]);
                    let rows_j = g_joints_l.slice(ndarray::s![t, .., ..]);
                    for row in rows_v.rows().into_iter().chain(rows_j.rows()) {
                        for c in 0..3 {
                            g[o + c] += row[c];
                        }
                    }
                }
                g
            })
            .collect();
        let mut gradient: Vec<f64> = per_frame.into_iter().flatten().collect();
        for (left, reg) in [(false, &reg_r), (true, &reg_l)] {
            let gt = &reg.gradients["theta"];
            let gb = &reg.gradients["beta"];
            for t in 0..t_len {
                let base = t * layout.stride() + if left { n_hand } else { 0 };
                for k in 0..layout.theta {
                    gradient[base + k] += w.lambda_r * gt[[t, k]];
                }
                for k in 0..layout.beta {
                    gradient[base + layout.theta + k] += w.lambda_r * gb[[t, k]];
                }
            }
        }

        let parts = Parts {
            smooth: smooth.value,
            joint,
            inter: inter_exact.value,
            reg: reg_r.value + reg_l.value,
            anchor: self.anchor(x),
        };
        let objective = parts.smooth + w.lambda_j * parts.joint + w.lambda_i * parts.inter + w.lambda_r * parts.reg + parts.anchor;
        Ok(Evaluation {
            objective,
            parts,
            gradient,
            masks,
            reports,
        })
    }

    fn record(&self, iteration: usize, e: &Evaluation, x: &[f64], step_scale: f64) -> TraceRecord {
        let a = self.config.anchor_weight;
        let max_gradient = e
            .gradient
            .iter()
            .zip(x.iter().zip(&self.x0))
            .map(|(g, (xi, x0))| (g + 2.0 * a * (xi - x0)).abs())
            .fold(0.0, f64::max);
        TraceRecord {
            iteration,
            objective: e.objective,
            smooth: e.parts.smooth,
            joint: e.parts.joint,
            inter: e.parts.inter,
            reg: e.parts.reg,
            anchor: e.parts.anchor,
            mmpd_mm: mmpd(&e.reports),
            max_gradient,
            step_scale,
        }
    }
}

/// Objective terms and gradient of a sequence as seen by the refiner, with
/// masks classified at that sequence.
#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    pub objective: f64,
    pub smooth: f64,
    pub joint: f64,
    pub inter: f64,
    pub reg: f64,
    pub anchor: f64,
    pub mmpd_mm: f64,
    /// Gradient over `[theta_r, beta_r, theta_l, beta_l, c]` per frame,
    /// including the anchor term.
    pub gradient: Vec<f64>,
}

fn problem<'a>(
    model_r: &'a HandModel,
    model_l: &'a HandModel,
    anchor_to: &Sequence,
    config: &RefineConfig,
) -> Result<Problem<'a>, RefineError> {
    config.validate().map_err(RefineError::Config)?;
    anchor_to.validate()?;
    anchor_to.check_models(model_r, model_l)?;
    let layout = Layout {
        theta: model_r.pose_dim(),
        beta: model_r.num_shape(),
    };
    let f0 = &anchor_to.frames[0];
    let ground_truth = match (&f0.gt_joints_r, &f0.gt_joints_l) {
        (Some(_), Some(_)) => {
            let gt = anchor_to.ground_truth(model_r, model_l)?;
            Some(gt.joints())
        }
        _ => None,
    };
    Ok(Problem {
        model_r,
        model_l,
        layout,
        t_len: anchor_to.len(),
        x0: layout.pack(anchor_to),
        ground_truth,
        labeled: anchor_to.labeled(),
        config: *config,
    })
}

/// Evaluates the refinement objective of `seq` with the anchor at `anchor_to`.
pub fn refine_objective(
    model_r: &HandModel,
    model_l: &HandModel,
    seq: &Sequence,
    anchor_to: &Sequence,
    config: &RefineConfig,
) -> Result<ObjectiveValue, RefineError> {
    let p = problem(model_r, model_l, anchor_to, config)?;
    let x = p.layout.pack(seq);
    if x.len() != p.x0.len() {
        return Err(RefineError::Config("sequence and anchor differ in length".into()));
    }
    let e = p.evaluate(&x, None)?;
    let a = config.anchor_weight;
    let gradient = e
        .gradient
        .iter()
        .zip(x.iter().zip(&p.x0))
        .map(|(g, (xi, x0))| g + 2.0 * a * (xi - x0))
        .collect();
    Ok(ObjectiveValue {
        objective: e.objective,
        smooth: e.parts.smooth,
        joint: e.parts.joint,
        inter: e.parts.inter,
        reg: e.parts.reg,
        anchor: e.parts.anchor,
        mmpd_mm: mmpd(&e.reports),
        gradient,
    })
}

/// Refines `init` in place of a learned predictor. The returned sequence keeps
/// every non-parameter field of `init`; its objective never exceeds the
/// initial one.
pub fn refine_sequence(
    model_r: &HandModel,
    model_l: &HandModel,
    init: &Sequence,
    config: &RefineConfig,
) -> Result<(Sequence, RefineTrace), RefineError> {
    let p = problem(model_r, model_l, init, config)?;
    let n = p.x0.len();
    let a = config.anchor_weight;
    let mut x = p.x0.clone();
    let mut trace = RefineTrace::default();
    let mut current = p.evaluate(&x, None)?;
    trace.initial = p.record(0, &current, &x, 0.0);
    if !current.objective.is_finite() || current.gradient.iter().any(|g| !g.is_finite()) {
        return Err(RefineError::Divergence {
            iteration: 0,
            trace: Box::new(trace),
        });
    }

    let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
    let mut moment_steps = 0i32;
    let mut held = current.masks.clone();
    for iteration in 1..=config.max_iters {
        moment_steps += 1;
        let bc1 = 1.0 - config.beta1.powi(moment_steps);
        let bc2 = 1.0 - config.beta2.powi(moment_steps);
        let mut proposal = vec![0.0; n];
        for i in 0..n {
            let g = current.gradient[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            let d = ((v[i] / bc2).sqrt() + config.epsilon) / config.step_size;
            proposal[i] = (d * x[i] - m[i] / bc1 + 2.0 * a * p.x0[i]) / (d + 2.0 * a);
        }

        let refresh_next = iteration % config.mask_refresh_every == 0;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&proposal).map(|(xi, pi)| xi + scale * (pi - xi)).collect();
            let e = p.evaluate(&trial, if refresh_next { None } else { Some(&held) })?;
            if !e.objective.is_finite() || e.gradient.iter().any(|g| !g.is_finite()) {
                trace.records.push(p.record(iteration, &e, &trial, scale));
                return Err(RefineError::Divergence {
                    iteration,
                    trace: Box::new(trace),
                });
            }
            if e.objective <= current.objective {
                accepted = Some((trial, e));
                break;
            }
            scale *= 0.5;
        }

        match accepted {
            Some((trial, e)) => {
                let improvement = (current.objective - e.objective) / current.objective.abs().max(f64::MIN_POSITIVE);
                x = trial;
                current = e;
                if refresh_next {
                    held = current.masks.clone();
                }
                trace.records.push(p.record(iteration, &current, &x, scale));
                if improvement < config.tol {
                    break;
                }
            }
            None => {
                trace.records.push(p.record(iteration, &current, &x, 0.0));
                if moment_steps == 1 {
                    break;
                }
                // momentum pointed uphill; restart the moments from the current gradient
                m.fill(0.0);
                v.fill(0.0);
                moment_steps = 0;
            }
        }
    }
    Ok((p.layout.unpack(&x, init), trace))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// Smooth finger motion with the hands held 2 cm apart.
    Disjoint,
    /// As `Disjoint`, but the gap closes to a 1 cm overlap mid-sequence.
    Colliding,
    /// `Disjoint` plus seeded Gaussian pose noise of the given standard
    /// deviation (radians).
    Jittery { noise: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Disjoint => "disjoint",
            Scenario::Colliding => "colliding",
            Scenario::Jittery { .. } => "jittery",
        }
    }
}

pub const SCENARIO_GAP: f64 = 0.02;
pub const SCENARIO_OVERLAP: f64 = 0.01;
/// Off-axis offset of the left hand, so facing surfaces of the two hands
/// never coincide.
pub const SCENARIO_OFFSET_YZ: [f64; 2] = [0.004, 0.003];

fn flexion_pose(model: &HandModel, t: usize, t_len: usize) -> Vec<f64> {
    let mut theta = vec![0.0; model.pose_dim()];
    let phase = 2.0 * PI * t as f64 / t_len as f64;
    match model.pose_pca {
        None => {
            for node in 1..model.num_nodes() {
                theta[3 * node] = 0.25 + 0.15 * (phase + 0.7 * node as f64).sin();
            }
        }
        Some(_) => {
            for (d, th) in theta.iter_mut().enumerate().skip(3) {
                *th = 0.1 * (phase + 0.7 * d as f64).sin();
            }
        }
    }
    theta
}

/// Deterministic test sequence for a model pair. All frames are labeled and no
/// ground-truth arrays are stored. The left hand sits along +x of the right
/// hand; the x gap between their bounding boxes is [`SCENARIO_GAP`], shrinking
/// to `-SCENARIO_OVERLAP` at the middle frame for `Colliding`.
pub fn synthesize_sequence(
    model_r: &HandModel,
    model_l: &HandModel,
    scenario: Scenario,
    t_len: usize,
    seed: u64,
    fps: f64,
) -> Result<Sequence, RefineError> {
    if t_len < 3 {
        return Err(RefineError::Config(format!("synthetic sequences need T >= 3, got {t_len}")));
    }
    if model_r.pose_dim() != model_l.pose_dim() || model_r.num_shape() != model_l.num_shape() {
        return Err(RefineError::Config("the two models must share parameter sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Uniform::new(-0.5, 0.5).expect("valid range");
    let beta: Vec<f64> = (0..model_r.num_shape()).map(|_| shape.sample(&mut rng)).collect();

    let mut frames = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let u = t as f64 / (t_len - 1) as f64;
        let gap = match scenario {
            Scenario::Colliding => SCENARIO_GAP - (SCENARIO_GAP + SCENARIO_OVERLAP) * (1.0 - (2.0 * u - 1.0).powi(2)),
            _ => SCENARIO_GAP,
        };
        let mut right = HandParamsFrame::zeros(model_r);
        right.theta = flexion_pose(model_r, t, t_len);
        right.beta = beta.clone();
        let mut left = HandParamsFrame::zeros(model_l);
        left.theta = flexion_pose(model_l, t, t_len);
        left.beta = beta.clone();
        let max_r = forward(model_r, &right)
            .expect("sized for model")
            .vertices
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| m.max(v.x));
        let min_l = forward(model_l, &left)
            .expect("sized for model")
            .vertices
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.x));
        frames.push(SequenceFrame {
            theta_r: right.theta,
            beta_r: right.beta,
            theta_l: left.theta,
            beta_l: left.beta,
            translation_c: [max_r - min_l + gap, SCENARIO_OFFSET_YZ[0], SCENARIO_OFFSET_YZ[1]],
            gt_joints_r: None,
            gt_joints_l: None,
            gt_vertices_r: None,
            gt_vertices_l: None,
            labeled: true,
        });
    }
    if let Scenario::Jittery { noise } = scenario {
        if noise != 0.0 {
            for f in &mut frames {
                for th in f.theta_r.iter_mut().chain(f.theta_l.iter_mut()) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *th += noise * z;
                }
            }
        }
    }
    Ok(Sequence::new(fps, frames)?)
}
