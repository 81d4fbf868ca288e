//! Pose, mesh, temporal and penetration metrics. Inputs are in meters; every
//! reported value is in millimeters (or mm/s² for acceleration).

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use ndarray::{ArrayView2, ArrayView3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::CollisionReport;

pub const MM_PER_M: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{what}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("{what}: need at least {min}, got {got}")]
    TooSmall { what: String, min: usize, got: usize },
    #[error("Procrustes alignment is degenerate in frame {frame}: joints are (nearly) collinear")]
    Degenerate { frame: usize },
    #[error("root index {root} out of range for {joints} joints")]
    BadRoot { root: usize, joints: usize },
    #[error("fps must be positive and finite, got {0}")]
    BadFps(f64),
}

fn check_same(what: &str, a: &[usize], b: &[usize]) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::ShapeMismatch {
            what: what.into(),
            expected: a.to_vec(),
            got: b.to_vec(),
        });
    }
    Ok(())
}

fn check_pair(pred: &ArrayView3<f64>, gt: &ArrayView3<f64>) -> Result<(), MetricsError> {
    check_same("gt", pred.shape(), gt.shape())?;
    if pred.dim().2 != 3 {
        return Err(MetricsError::ShapeMismatch {
            what: "pred".into(),
            expected: vec![pred.dim().0, pred.dim().1, 3],
            got: pred.shape().to_vec(),
        });
    }
    Ok(())
}

fn at(a: &ArrayView3<f64>, t: usize, j: usize) -> Vector3<f64> {
    Vector3::new(a[[t, j, 0]], a[[t, j, 1]], a[[t, j, 2]])
}

fn frame(a: &ArrayView3<f64>, t: usize) -> Vec<Vector3<f64>> {
    (0..a.dim().1).map(|j| at(a, t, j)).collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Root-aligned per-point errors of one frame, in mm.
fn aligned_errors(
    pred: &[Vector3<f64>],
    gt: &[Vector3<f64>],
    pred_root: &Vector3<f64>,
    gt_root: &Vector3<f64>,
) -> Vec<f64> {
    pred.iter()
        .zip(gt)
        .map(|(p, g)| ((p - pred_root) - (g - gt_root)).norm() * MM_PER_M)
        .collect()
}

fn root_checked(root: usize, joints: usize) -> Result<(), MetricsError> {
    if root >= joints {
        return Err(MetricsError::BadRoot { root, joints });
    }
    Ok(())
}

/// Mean root-aligned joint error of each frame, mm.
pub fn mpjpe_per_frame(pred: ArrayView3<f64>, gt: ArrayView3<f64>, root_index: usize) -> Result<Vec<f64>, MetricsError> {
    check_pair(&pred, &gt)?;
    root_checked(root_index, pred.dim().1)?;
    Ok((0..pred.dim().0)
        .map(|t| {
            let errs = aligned_errors(&frame(&pred, t), &frame(&gt, t), &at(&pred, t, root_index), &at(&gt, t, root_index));
            mean(errs).unwrap_or(0.0)
        })
        .collect())
}

pub fn mpjpe(pred: ArrayView3<f64>, gt: ArrayView3<f64>, root_index: usize) -> Result<f64, MetricsError> {
    if pred.dim().0 == 0 {
        return Err(MetricsError::TooSmall {
            what: "frames".into(),
            min: 1,
            got: 0,
        });
    }
    Ok(mean(mpjpe_per_frame(pred, gt, root_index)?).unwrap_or(0.0))
}

/// Similarity transform `x -> s R x + t` minimizing the squared distance from
/// the transformed `source` points to `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Similarity {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p * self.scale + self.translation
    }
}

/// Closed-form least-squares similarity (with reflection correction) mapping
/// `source` onto `target`. Returns `None` when either configuration is
/// collinear or coincident.
pub fn procrustes(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> Option<Similarity> {
    let n = source.len() as f64;
    let mu_s = source.iter().sum::<Vector3<f64>>() / n;
    let mu_t = target.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, t) in source.iter().zip(target) {
        let (x, y) = (s - mu_s, t - mu_t);
        cov += y * x.transpose();
        var_s += x.norm_squared();
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut sv = svd.singular_values;
    // sort descending; nalgebra does not guarantee order
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    if var_s == 0.0 || !(sv[order[1]] > 1e-12 * sv[order[0]]) {
        return None;
    }
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(order[2], order[2])] = -1.0;
    }
    let rotation = u * d * v_t;
    for i in 0..3 {
        sv[i] *= d[(i, i)];
    }
    let scale = sv.sum() / var_s;
    let translation = mu_t - rotation * mu_s * scale;
    Some(Similarity {
        scale,
        rotation,
        translation,
    })
}

/// Per-frame mean joint error after optimal similarity alignment, mm.
pub fn pa_mpjpe_per_frame(pred: ArrayView3<f64>, gt: ArrayView3<f64>) -> Result<Vec<f64>, MetricsError> {
    check_pair(&pred, &gt)?;
    if pred.dim().1 < 3 {
        return Err(MetricsError::TooSmall {
            what: "joints for Procrustes alignment".into(),
            min: 3,
            got: pred.dim().1,
        });
    }
    (0..pred.dim().0)
        .map(|t| {
            let (p, g) = (frame(&pred, t), frame(&gt, t));
            let sim = procrustes(&p, &g).ok_or(MetricsError::Degenerate { frame: t })?;
            Ok(mean(p.iter().zip(&g).map(|(x, y)| (sim.apply(x) - y).norm() * MM_PER_M)).unwrap_or(0.0))
        })
        .collect()
}

pub fn pa_mpjpe(pred: ArrayView3<f64>, gt: ArrayView3<f64>) -> Result<f64, MetricsError> {
    Ok(mean(pa_mpjpe_per_frame(pred, gt)?).unwrap_or(0.0))
}

/// Per-frame mean vertex error after subtracting each mesh's root joint, mm.
pub fn mpvpe_per_frame(
    pred_vertices: ArrayView3<f64>,
    gt_vertices: ArrayView3<f64>,
    pred_roots: ArrayView2<f64>,
    gt_roots: ArrayView2<f64>,
) -> Result<Vec<f64>, MetricsError> {
    check_pair(&pred_vertices, &gt_vertices)?;
    let t_len = pred_vertices.dim().0;
    check_same("pred_roots", &[t_len, 3], pred_roots.shape())?;
    check_same("gt_roots", &[t_len, 3], gt_roots.shape())?;
    let root = |a: &ArrayView2<f64>, t: usize| Vector3::new(a[[t, 0]], a[[t, 1]], a[[t, 2]]);
    Ok((0..t_len)
        .map(|t| {
            let errs = aligned_errors(
                &frame(&pred_vertices, t),
                &frame(&gt_vertices, t),
                &root(&pred_roots, t),
                &root(&gt_roots, t),
            );
            mean(errs).unwrap_or(0.0)
        })
        .collect())
}

pub fn mpvpe(
    pred_vertices: ArrayView3<f64>,
    gt_vertices: ArrayView3<f64>,
    pred_roots: ArrayView2<f64>,
    gt_roots: ArrayView2<f64>,
) -> Result<f64, MetricsError> {
    Ok(mean(mpvpe_per_frame(pred_vertices, gt_vertices, pred_roots, gt_roots)?).unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pck {
    /// `(threshold_mm, fraction of errors <= threshold)`.
    pub curve: Vec<(f64, f64)>,
    pub auc: f64,
}

pub const PCK_MAX_MM: f64 = 50.0;
pub const PCK_STEPS: usize = 51;

/// PCK over `steps` uniform thresholds in `[0, max_threshold_mm]` and the
/// trapezoidal area under it divided by the range.
pub fn pck_from_errors(errors_mm: &[f64], max_threshold_mm: f64, steps: usize) -> Pck {
    assert!(steps >= 2 && max_threshold_mm > 0.0);
    let n = errors_mm.len().max(1) as f64;
    let curve: Vec<(f64, f64)> = (0..steps)
        .map(|k| {
            let tau = max_threshold_mm * k as f64 / (steps - 1) as f64;
            (tau, errors_mm.iter().filter(|&&e| e <= tau).count() as f64 / n)
        })
        .collect();
    let area: f64 = curve.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Pck {
        curve,
        auc: area / max_threshold_mm,
    }
}

/// All root-aligned joint errors of the sequence, mm, frame-major.
pub fn joint_errors(pred: ArrayView3<f64>, gt: ArrayView3<f64>, root_index: usize) -> Result<Vec<f64>, MetricsError> {
    check_pair(&pred, &gt)?;
    root_checked(root_index, pred.dim().1)?;
    Ok((0..pred.dim().0)
        .flat_map(|t| aligned_errors(&frame(&pred, t), &frame(&gt, t), &at(&pred, t, root_index), &at(&gt, t, root_index)))
        .collect())
}

pub fn pck_auc(
    pred: ArrayView3<f64>,
    gt: ArrayView3<f64>,
    root_index: usize,
    max_threshold_mm: f64,
    steps: usize,
) -> Result<Pck, MetricsError> {
    Ok(pck_from_errors(&joint_errors(pred, gt, root_index)?, max_threshold_mm, steps))
}

fn check_fps(fps: f64) -> Result<(), MetricsError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(MetricsError::BadFps(fps));
    }
    Ok(())
}

/// Mean acceleration error over joints at interior frame `t`, mm/s².
fn accel_at(pred: &ArrayView3<f64>, gt: &ArrayView3<f64>, t: usize, fps: f64) -> f64 {
    let j_len = pred.dim().1;
    let second = |a: &ArrayView3<f64>, j: usize| at(a, t + 1, j) - at(a, t, j) * 2.0 + at(a, t - 1, j);
    let sum: f64 = (0..j_len)
        .map(|j| (second(pred, j) - second(gt, j)).norm() * fps * fps * MM_PER_M)
        .sum();
    sum / j_len as f64
}

/// Acceleration error of each interior frame `1..T-1` (0-based), mm/s².
pub fn accel_error_per_frame(pred: ArrayView3<f64>, gt: ArrayView3<f64>, fps: f64) -> Result<Vec<f64>, MetricsError> {
    check_pair(&pred, &gt)?;
    check_fps(fps)?;
    let t_len = pred.dim().0;
    if t_len < 3 {
        return Err(MetricsError::TooSmall {
            what: "frames for acceleration".into(),
            min: 3,
            got: t_len,
        });
    }
    Ok((1..t_len - 1).map(|t| accel_at(&pred, &gt, t, fps)).collect())
}

pub fn accel_error(pred: ArrayView3<f64>, gt: ArrayView3<f64>, fps: f64) -> Result<f64, MetricsError> {
    Ok(mean(accel_error_per_frame(pred, gt, fps)?).unwrap_or(0.0))
}

/// Mean over frames of the per-frame maximum penetration depth, mm.
pub fn mmpd(reports: &[CollisionReport]) -> f64 {
    mean(reports.iter().map(|r| r.max_depth * MM_PER_M)).unwrap_or(0.0)
}

/// Joints (and optionally vertices) of one hand over a sequence.
#[derive(Debug, Clone, Copy)]
pub struct HandTrack<'a> {
    pub joints: ArrayView3<'a, f64>,
    pub vertices: Option<ArrayView3<'a, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    pub root_index: usize,
    pub pck_max_mm: f64,
    pub pck_steps: usize,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            root_index: 0,
            pck_max_mm: PCK_MAX_MM,
            pck_steps: PCK_STEPS,
        }
    }
}

/// Per-frame breakdown; `None` where the frame is unlabeled or the metric
/// is undefined (missing ground truth, boundary frame for acceleration).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub labeled: bool,
    pub mpjpe_right_mm: Option<f64>,
    pub mpjpe_left_mm: Option<f64>,
    pub pa_mpjpe_right_mm: Option<f64>,
    pub pa_mpjpe_left_mm: Option<f64>,
    pub mpvpe_right_mm: Option<f64>,
    pub mpvpe_left_mm: Option<f64>,
    pub accel_right_mm_s2: Option<f64>,
    pub accel_left_mm_s2: Option<f64>,
    pub max_depth_mm: f64,
    pub penetrating_count: usize,
}

/// Sequence-level metrics. Hand-specific metrics are averaged over labeled
/// frames per hand, then over the two hands with equal weight; `None` means
/// no frame qualified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mpjpe_mm: Option<f64>,
    pub pa_mpjpe_mm: Option<f64>,
    pub mpvpe_mm: Option<f64>,
    pub auc: Option<f64>,
    pub pck_curve: Vec<(f64, f64)>,
    pub accel_err_mm_s2: Option<f64>,
    pub mmpd_mm: f64,
    pub per_frame: Vec<FrameMetrics>,
}

fn hand_average(r: Option<f64>, l: Option<f64>) -> Option<f64> {
    match (r, l) {
        (Some(a), Some(b)) => Some(0.5 * (a + b)),
        _ => None,
    }
}

struct HandMetrics {
    mpjpe: Vec<Option<f64>>,
    pa: Vec<Option<f64>>,
    mpvpe: Vec<Option<f64>>,
    accel: Vec<Option<f64>>,
    errors: Vec<f64>,
}

fn hand_metrics(
    pred: &HandTrack,
    gt: &HandTrack,
    labeled: &[bool],
    fps: f64,
    options: &MetricOptions,
) -> Result<HandMetrics, MetricsError> {
    let t_len = labeled.len();
    check_pair(&pred.joints, &gt.joints)?;
    check_same("labels", &[pred.joints.dim().0], &[t_len])?;
    let root = options.root_index;
    let labeled_frames: Vec<usize> = (0..t_len).filter(|&t| labeled[t]).collect();
    let mut out = HandMetrics {
        mpjpe: vec![None; t_len],
        pa: vec![None; t_len],
        mpvpe: vec![None; t_len],
        accel: vec![None; t_len],
        errors: Vec::new(),
    };
    let per = mpjpe_per_frame(pred.joints, gt.joints, root)?;
    let pa = pa_mpjpe_per_frame(
        pred.joints.select(ndarray::Axis(0), &labeled_frames).view(),
        gt.joints.select(ndarray::Axis(0), &labeled_frames).view(),
    )?;
    for (k, &t) in labeled_frames.iter().enumerate() {
        out.mpjpe[t] = Some(per[t]);
        out.pa[t] = Some(pa[k]);
        out.errors.extend(aligned_errors(
            &frame(&pred.joints, t),
            &frame(&gt.joints, t),
            &at(&pred.joints, t, root),
            &at(&gt.joints, t, root),
        ));
    }
    if let (Some(pv), Some(gv)) = (pred.vertices, gt.vertices) {
        let roots = |j: &ArrayView3<f64>| j.index_axis(ndarray::Axis(1), root).to_owned();
        let per = mpvpe_per_frame(pv, gv, roots(&pred.joints).view(), roots(&gt.joints).view())?;
        for &t in &labeled_frames {
            out.mpvpe[t] = Some(per[t]);
        }
    }
    if t_len >= 3 {
        check_fps(fps)?;
        for t in 1..t_len - 1 {
            if labeled[t - 1] && labeled[t] && labeled[t + 1] {
                out.accel[t] = Some(accel_at(&pred.joints, &gt.joints, t, fps));
            }
        }
    }
    Ok(out)
}

fn mean_some(xs: &[Option<f64>]) -> Option<f64> {
    mean(xs.iter().flatten().copied())
}

/// Full evaluation of a predicted two-hand sequence against ground truth.
/// `reports` holds the per-frame penetration of the predicted meshes.
pub fn evaluate(
    pred: [HandTrack; 2],
    gt: [HandTrack; 2],
    labeled: &[bool],
    fps: f64,
    reports: &[CollisionReport],
    options: &MetricOptions,
) -> Result<MetricsReport, MetricsError> {
    let t_len = labeled.len();
    check_same("collision reports", &[t_len], &[reports.len()])?;
    let right = hand_metrics(&pred[0], &gt[0], labeled, fps, options)?;
    let left = hand_metrics(&pred[1], &gt[1], labeled, fps, options)?;

    let per_frame = (0..t_len)
        .map(|t| FrameMetrics {
            frame: t,
            labeled: labeled[t],
            mpjpe_right_mm: right.mpjpe[t],
            mpjpe_left_mm: left.mpjpe[t],
            pa_mpjpe_right_mm: right.pa[t],
            pa_mpjpe_left_mm: left.pa[t],
            mpvpe_right_mm: right.mpvpe[t],
            mpvpe_left_mm: left.mpvpe[t],
            accel_right_mm_s2: right.accel[t],
            accel_left_mm_s2: left.accel[t],
            max_depth_mm: reports[t].max_depth * MM_PER_M,
            penetrating_count: reports[t].penetrating_count,
        })
        .collect();

    let any_labeled = labeled.iter().any(|&l| l);
    let (auc, pck_curve) = if any_labeled {
        let pr = pck_from_errors(&right.errors, options.pck_max_mm, options.pck_steps);
        let pl = pck_from_errors(&left.errors, options.pck_max_mm, options.pck_steps);
        let curve = pr.curve.iter().zip(&pl.curve).map(|(a, b)| (a.0, 0.5 * (a.1 + b.1))).collect();
        (Some(0.5 * (pr.auc + pl.auc)), curve)
    } else {
        (None, Vec::new())
    };

    Ok(MetricsReport {
        mpjpe_mm: hand_average(mean_some(&right.mpjpe), mean_some(&left.mpjpe)),
        pa_mpjpe_mm: hand_average(mean_some(&right.pa), mean_some(&left.pa)),
        mpvpe_mm: hand_average(mean_some(&right.mpvpe), mean_some(&left.mpvpe)),
        auc,
        pck_curve,
        accel_err_mm_s2: hand_average(mean_some(&right.accel), mean_some(&left.accel)),
        mmpd_mm: mmpd(reports),
        per_frame,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

impl MetricsReport {
    /// `metric,value,unit` table.
    pub fn summary_csv(&self) -> String {
        let rows = [
            ("mpjpe", fmt_opt(self.mpjpe_mm), "mm"),
            ("pa_mpjpe", fmt_opt(self.pa_mpjpe_mm), "mm"),
            ("mpvpe", fmt_opt(self.mpvpe_mm), "mm"),
            ("auc", fmt_opt(self.auc), "fraction"),
            ("accel_error", fmt_opt(self.accel_err_mm_s2), "mm/s^2"),
            ("mmpd", format!("{:.6}", self.mmpd_mm), "mm"),
        ];
        let mut out = String::from("metric,value,unit\n");
        for (name, value, unit) in rows {
            let _ = writeln!(out, "{name},{value},{unit}");
        }
        out
    }

    pub fn per_frame_csv(&self) -> String {
        let mut out = String::from(
            "frame,labeled,mpjpe_right_mm,mpjpe_left_mm,pa_mpjpe_right_mm,pa_mpjpe_left_mm,\
             mpvpe_right_mm,mpvpe_left_mm,accel_right_mm_s2,accel_left_mm_s2,max_depth_mm,penetrating_count\n",
        );
        for f in &self.per_frame {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{:.6},{}",
                f.frame,
                f.labeled,
                fmt_opt(f.mpjpe_right_mm),
                fmt_opt(f.mpjpe_left_mm),
                fmt_opt(f.pa_mpjpe_right_mm),
                fmt_opt(f.pa_mpjpe_left_mm),
                fmt_opt(f.mpvpe_right_mm),
                fmt_opt(f.mpvpe_left_mm),
                fmt_opt(f.accel_right_mm_s2),
                fmt_opt(f.accel_left_mm_s2),
                f.max_depth_mm,
                f.penetrating_count
            );
        }
        out
    }

    pub fn pck_csv(&self) -> String {
        let mut out = String::from("threshold_mm,pck\n");
        for (tau, frac) in &self.pck_curve {
            let _ = writeln!(out, "{tau:.1},{frac:.6}");
        }
        out
    }
}
