//! Training losses over two-hand sequences and their analytic gradients.
//!
//! Every loss returns a [`LossValue`] whose gradients are keyed by the name of
//! the input tensor they belong to. Per-joint and per-vertex Euclidean norms are
//! summed, and a norm of exactly zero contributes a zero subgradient.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use ndarray::{Array2, Array3, ArrayD, ArrayView2, ArrayView3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{inside_mask, TriMesh, VertexSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("{what}: need at least {min} frames, got {got}")]
    TooFewFrames { what: String, min: usize, got: usize },
    #[error("{what}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

fn check_shape(what: &str, expected: &[usize], got: &[usize]) -> Result<(), LossError> {
    if expected != got {
        return Err(LossError::ShapeMismatch {
            what: what.to_string(),
            expected: expected.to_vec(),
            got: got.to_vec(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossValue {
    pub value: f64,
    pub gradients: BTreeMap<String, ArrayD<f64>>,
}

impl LossValue {
    pub fn gradient(&self, name: &str) -> Option<&ArrayD<f64>> {
        self.gradients.get(name)
    }

    /// Adds `weight * other` into `self`, summing gradients that share a name.
    pub fn accumulate(&mut self, other: &LossValue, weight: f64) {
        self.value += weight * other.value;
        for (name, g) in &other.gradients {
            match self.gradients.get_mut(name) {
                Some(acc) => acc.scaled_add(weight, g),
                None => {
                    self.gradients.insert(name.clone(), g * weight);
                }
            }
        }
    }

    /// Renames gradient keys; keys missing from `names` are kept.
    pub fn renamed(mut self, names: &[(&str, &str)]) -> Self {
        for (from, to) in names {
            if let Some(g) = self.gradients.remove(*from) {
                self.gradients.insert(to.to_string(), g);
            }
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradients.values().all(|g| g.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_j: f64,
    pub lambda_i: f64,
    pub lambda_m: f64,
    pub lambda_r: f64,
    pub lambda_consist: f64,
    pub lambda_beta: f64,
    /// Saturation scale of the interpenetration penalty, meters.
    pub alpha: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_j: 100.0,
            lambda_i: 10.0,
            lambda_m: 1.0,
            lambda_r: 0.1,
            lambda_consist: 1.0,
            lambda_beta: 0.1,
            alpha: 0.02,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("lambda_j", self.lambda_j),
            ("lambda_i", self.lambda_i),
            ("lambda_m", self.lambda_m),
            ("lambda_r", self.lambda_r),
            ("lambda_consist", self.lambda_consist),
            ("lambda_beta", self.lambda_beta),
            ("alpha", self.alpha),
        ];
        for (name, x) in fields {
            if !(x.is_finite() && x >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {x}"));
            }
        }
        if self.alpha == 0.0 {
            return Err("alpha must be positive".into());
        }
        Ok(())
    }
}

/// `alpha * tanh(x / alpha)`: close to `x` for small distances, saturating at `alpha`.
pub fn l_alpha(x: f64, alpha: f64) -> f64 {
    alpha * (x / alpha).tanh()
}

pub fn l_alpha_derivative(x: f64, alpha: f64) -> f64 {
    let c = (x / alpha).cosh();
    1.0 / (c * c)
}

fn v3(a: &ArrayView3<f64>, t: usize, j: usize) -> Vector3<f64> {
    Vector3::new(a[[t, j, 0]], a[[t, j, 1]], a[[t, j, 2]])
}

fn add3(g: &mut Array3<f64>, t: usize, j: usize, d: &Vector3<f64>) {
    for c in 0..3 {
        g[[t, j, c]] += d[c];
    }
}

/// Euclidean norm and its gradient, with the zero subgradient at the origin.
fn norm_and_unit(d: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let n = d.norm();
    if n == 0.0 {
        (0.0, Vector3::zeros())
    } else {
        (n, d / n)
    }
}

fn sequence_smoothness(joints: &ArrayView3<f64>) -> (f64, Array3<f64>) {
    let (t_len, j_len, _) = joints.dim();
    let mut grad = Array3::zeros(joints.raw_dim());
    let mut value = 0.0;
    for t in 1..t_len {
        for j in 0..j_len {
            let (n, u) = norm_and_unit(&(v3(joints, t, j) - v3(joints, t - 1, j)));
            value += n;
            add3(&mut grad, t, j, &u);
            add3(&mut grad, t - 1, j, &-u);
        }
    }
    (value, grad)
}

/// Sum over hands, frames `t >= 1` and joints of `|J_t - J_{t-1}|`.
/// Gradient keys: `joints_right`, `joints_left`.
pub fn smooth_loss(joint_seq_right: ArrayView3<f64>, joint_seq_left: ArrayView3<f64>) -> Result<LossValue, LossError> {
    for (name, seq) in [("joints_right", &joint_seq_right), ("joints_left", &joint_seq_left)] {
        if seq.dim().0 < 2 {
            return Err(LossError::TooFewFrames {
                what: name.into(),
                min: 2,
                got: seq.dim().0,
            });
        }
        if seq.dim().2 != 3 {
            check_shape(name, &[seq.dim().0, seq.dim().1, 3], seq.shape())?;
        }
    }
    let (vr, gr) = sequence_smoothness(&joint_seq_right);
    let (vl, gl) = sequence_smoothness(&joint_seq_left);
    Ok(LossValue {
        value: vr + vl,
        gradients: BTreeMap::from([
            ("joints_right".to_string(), gr.into_dyn()),
            ("joints_left".to_string(), gl.into_dyn()),
        ]),
    })
}

/// Per-frame inside masks: right vertices inside the left mesh, and left
/// vertices inside the right mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct InterMasks {
    pub right_in_left: Vec<Vec<bool>>,
    pub left_in_right: Vec<Vec<bool>>,
}

impl InterMasks {
    pub fn compute(meshes_right: &[TriMesh], meshes_left: &[TriMesh]) -> Self {
        let (right_in_left, left_in_right) = meshes_right
            .iter()
            .zip(meshes_left)
            .map(|(r, l)| (inside_mask(r.vertices(), l), inside_mask(l.vertices(), r)))
            .unzip();
        Self {
            right_in_left,
            left_in_right,
        }
    }

    pub fn count(&self) -> usize {
        self.right_in_left.iter().chain(&self.left_in_right).flatten().filter(|&&x| x).count()
    }
}

fn frame_points(a: &ArrayView3<f64>, t: usize) -> Vec<Vector3<f64>> {
    (0..a.dim().1).map(|j| v3(a, t, j)).collect()
}

/// Penalty of the flagged vertices of `own` against the vertex set `other` in
/// one frame; returns the value and the gradients for both point sets.
fn frame_penetration(
    own: &[Vector3<f64>],
    other: &[Vector3<f64>],
    mask: &[bool],
    alpha: f64,
) -> (f64, Vec<(usize, Vector3<f64>)>, Vec<(usize, Vector3<f64>)>) {
    let mut value = 0.0;
    let mut g_own = Vec::new();
    let mut g_other = Vec::new();
    if !mask.iter().any(|&m| m) {
        return (value, g_own, g_other);
    }
    let set = VertexSet::new(other).expect("vertex set is non-empty");
    for (i, p) in own.iter().enumerate() {
        if !mask[i] {
            continue;
        }
        let (d, k) = set.nearest(p);
        value += l_alpha(d, alpha);
        if d > 0.0 {
            let g = (p - other[k]) * (l_alpha_derivative(d, alpha) / d);
            g_own.push((i, g));
            g_other.push((k, -g));
        }
    }
    (value, g_own, g_other)
}

/// Interpenetration penalty with the inside masks held fixed:
/// `sum_h sum_t sum_{v flagged} l_alpha(d(v, V_t^other))`, where `d` is the
/// distance to the nearest vertex of the other hand.
/// Gradient keys: `vertices_right`, `vertices_left`.
pub fn interpenetration_loss_fixed_mask(
    vertices_right: ArrayView3<f64>,
    vertices_left: ArrayView3<f64>,
    masks: &InterMasks,
    alpha: f64,
) -> Result<LossValue, LossError> {
    let (t_len, vr, _) = vertices_right.dim();
    let vl = vertices_left.dim().1;
    check_shape("vertices_right", &[t_len, vr, 3], vertices_right.shape())?;
    check_shape("vertices_left", &[t_len, vl, 3], vertices_left.shape())?;
    check_shape("right_in_left mask", &[t_len], &[masks.right_in_left.len()])?;
    check_shape("left_in_right mask", &[t_len], &[masks.left_in_right.len()])?;
    for t in 0..t_len {
        check_shape("right_in_left mask", &[vr], &[masks.right_in_left[t].len()])?;
        check_shape("left_in_right mask", &[vl], &[masks.left_in_right[t].len()])?;
    }

    let per_frame: Vec<_> = (0..t_len)
        .into_par_iter()
        .map(|t| {
            let right = frame_points(&vertices_right, t);
            let left = frame_points(&vertices_left, t);
            let a = frame_penetration(&right, &left, &masks.right_in_left[t], alpha);
            let b = frame_penetration(&left, &right, &masks.left_in_right[t], alpha);
            (a, b)
        })
        .collect();

    let mut value = 0.0;
    let mut grad_r = Array3::zeros(vertices_right.raw_dim());
    let mut grad_l = Array3::zeros(vertices_left.raw_dim());
    for (t, ((va, ga_r, ga_l), (vb, gb_l, gb_r))) in per_frame.into_iter().enumerate() {
        value += va + vb;
        for (i, g) in ga_r.iter().chain(&gb_r) {
            add3(&mut grad_r, t, *i, g);
        }
        for (i, g) in ga_l.iter().chain(&gb_l) {
            add3(&mut grad_l, t, *i, g);
        }
    }
    Ok(LossValue {
        value,
        gradients: BTreeMap::from([
            ("vertices_right".to_string(), grad_r.into_dyn()),
            ("vertices_left".to_string(), grad_l.into_dyn()),
        ]),
    })
}

fn stack_vertices(meshes: &[TriMesh]) -> Array3<f64> {
    let v = meshes.first().map_or(0, |m| m.vertices().len());
    let mut out = Array3::zeros((meshes.len(), v, 3));
    for (t, m) in meshes.iter().enumerate() {
        for (i, p) in m.vertices().iter().enumerate() {
            for c in 0..3 {
                out[[t, i, c]] = p[c];
            }
        }
    }
    out
}

/// Interpenetration penalty with masks classified from the meshes themselves.
pub fn interpenetration_loss(
    meshes_right: &[TriMesh],
    meshes_left: &[TriMesh],
    alpha: f64,
) -> Result<LossValue, LossError> {
    check_shape("meshes_left", &[meshes_right.len()], &[meshes_left.len()])?;
    for (name, meshes) in [("meshes_right", meshes_right), ("meshes_left", meshes_left)] {
        if let Some(first) = meshes.first() {
            for m in meshes {
                check_shape(name, &[first.vertices().len()], &[m.vertices().len()])?;
            }
        }
    }
    let masks = InterMasks::compute(meshes_right, meshes_left);
    let vr = stack_vertices(meshes_right);
    let vl = stack_vertices(meshes_left);
    interpenetration_loss_fixed_mask(vr.view(), vl.view(), &masks, alpha)
}

/// `(1/T) sum_t 1(t) sum_j |pred - gt|` for one hand. Gradient key: `pred`.
pub fn joint_loss(pred: ArrayView3<f64>, gt: ArrayView3<f64>, labeled: &[bool]) -> Result<LossValue, LossError> {
    check_shape("gt", pred.shape(), gt.shape())?;
    let (t_len, j_len, c) = pred.dim();
    check_shape("pred", &[t_len, j_len, 3], &[t_len, j_len, c])?;
    check_shape("labeled", &[t_len], &[labeled.len()])?;
    let mut grad = Array3::zeros(pred.raw_dim());
    let mut value = 0.0;
    if t_len > 0 {
        let inv_t = 1.0 / t_len as f64;
        for t in (0..t_len).filter(|&t| labeled[t]) {
            for j in 0..j_len {
                let (n, u) = norm_and_unit(&(v3(&pred, t, j) - v3(&gt, t, j)));
                value += n * inv_t;
                add3(&mut grad, t, j, &(u * inv_t));
            }
        }
    }
    Ok(LossValue {
        value,
        gradients: BTreeMap::from([("pred".to_string(), grad.into_dyn())]),
    })
}

fn row_difference(a: &ArrayView2<f64>, b: &ArrayView2<f64>, t: usize) -> Vec<f64> {
    a.row(t).iter().zip(b.row(t).iter()).map(|(x, y)| x - y).collect()
}

/// Labeled-frame L2 distances of predicted shapes to ground truth, plus the
/// squared L2 distance between the two predicted hands' shapes weighted by
/// `lambda_consist`. Gradient keys: `beta_right`, `beta_left`.
pub fn mano_loss(
    beta_pred_r: ArrayView2<f64>,
    beta_pred_l: ArrayView2<f64>,
    beta_gt_r: ArrayView2<f64>,
    beta_gt_l: ArrayView2<f64>,
    labeled: &[bool],
    lambda_consist: f64,
) -> Result<LossValue, LossError> {
    let shape = beta_pred_r.shape();
    check_shape("beta_pred_l", shape, beta_pred_l.shape())?;
    check_shape("beta_gt_r", shape, beta_gt_r.shape())?;
    check_shape("beta_gt_l", shape, beta_gt_l.shape())?;
    let (t_len, _) = beta_pred_r.dim();
    check_shape("labeled", &[t_len], &[labeled.len()])?;

    let mut grad_r = Array2::zeros(beta_pred_r.raw_dim());
    let mut grad_l = Array2::zeros(beta_pred_l.raw_dim());
    let mut value = 0.0;
    for t in 0..t_len {
        if labeled[t] {
            for (pred, gt, grad) in [(&beta_pred_r, &beta_gt_r, &mut grad_r), (&beta_pred_l, &beta_gt_l, &mut grad_l)] {
                let d = row_difference(pred, gt, t);
                let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                value += n;
                if n > 0.0 {
                    for (g, x) in grad.row_mut(t).iter_mut().zip(&d) {
                        *g += x / n;
                    }
                }
            }
        }
        let d = row_difference(&beta_pred_r, &beta_pred_l, t);
        value += lambda_consist * d.iter().map(|x| x * x).sum::<f64>();
        for (k, x) in d.iter().enumerate() {
            grad_r[[t, k]] += 2.0 * lambda_consist * x;
            grad_l[[t, k]] -= 2.0 * lambda_consist * x;
        }
    }
    Ok(LossValue {
        value,
        gradients: BTreeMap::from([
            ("beta_right".to_string(), grad_r.into_dyn()),
            ("beta_left".to_string(), grad_l.into_dyn()),
        ]),
    })
}

/// `|theta|^2 + lambda_beta |beta|^2` over all frames of one hand.
/// Gradient keys: `theta`, `beta`.
pub fn reg_loss(theta: ArrayView2<f64>, beta: ArrayView2<f64>, lambda_beta: f64) -> Result<LossValue, LossError> {
    if theta.iter().chain(beta.iter()).any(|x| !x.is_finite()) {
        return Err(LossError::NonFinite("reg_loss input".into()));
    }
    let value = theta.iter().map(|x| x * x).sum::<f64>() + lambda_beta * beta.iter().map(|x| x * x).sum::<f64>();
    Ok(LossValue {
        value,
        gradients: BTreeMap::from([
            ("theta".to_string(), theta.mapv(|x| 2.0 * x).into_dyn()),
            ("beta".to_string(), beta.mapv(|x| 2.0 * lambda_beta * x).into_dyn()),
        ]),
    })
}

/// Component losses entering the weighted total.
#[derive(Debug, Clone, Default)]
pub struct LossComponents {
    pub smooth: LossValue,
    pub joint: LossValue,
    pub inter: LossValue,
    pub mano: LossValue,
    pub reg: LossValue,
}

/// `smooth + lambda_j joint + lambda_i inter + lambda_m mano + lambda_r reg`.
pub fn total_loss(components: &LossComponents, weights: &LossWeights) -> LossValue {
    let mut total = LossValue::default();
    total.accumulate(&components.smooth, 1.0);
    total.accumulate(&components.joint, weights.lambda_j);
    total.accumulate(&components.inter, weights.lambda_i);
    total.accumulate(&components.mano, weights.lambda_m);
    total.accumulate(&components.reg, weights.lambda_r);
    total
}

/// Worst coordinate-wise disagreement between the analytic gradient returned
/// by `f` at `x` and central differences with the given step. Errors are
/// relative to the larger magnitude, or absolute when both are below 1e-8.
pub fn check_gradient<F>(mut f: F, x: &[f64], step: f64) -> Result<f64, LossError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (value, grad) = f(x);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(LossError::NonFinite("loss at the base point".into()));
    }
    check_shape("gradient", &[x.len()], &[grad.len()])?;
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe).0;
        probe[i] = x[i] - step;
        let minus = f(&probe).0;
        probe[i] = x[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(LossError::NonFinite(format!("loss near coordinate {i}")));
        }
        let fd = (plus - minus) / (2.0 * step);
        let scale = fd.abs().max(grad[i].abs());
        let err = (fd - grad[i]).abs();
        worst = worst.max(if scale < 1e-8 { err } else { err / scale });
    }
    Ok(worst)
}

/// Flattens the named gradients in order into one vector.
pub fn flatten_gradients(loss: &LossValue, names: &[&str]) -> Vec<f64> {
    names
        .iter()
        .flat_map(|n| loss.gradients[*n].iter().copied().collect::<Vec<_>>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};

    #[test]
    fn default_weights() {
        let w = LossWeights::default();
        assert_eq!(
            (w.lambda_j, w.lambda_i, w.lambda_m, w.lambda_r, w.lambda_consist, w.lambda_beta, w.alpha),
            (100.0, 10.0, 1.0, 0.1, 1.0, 0.1, 0.02)
        );
        assert!(w.validate().is_ok());
        assert!(LossWeights { lambda_i: -1.0, ..w }.validate().is_err());
    }

    #[test]
    fn l_alpha_bounds_and_small_argument() {
        let alpha = 0.02;
        let mut prev = -1.0;
        for k in 0..2000 {
            let x = k as f64 * 1e-4;
            let y = l_alpha(x, alpha);
            assert!((0.0..alpha).contains(&y));
            assert!(y > prev);
            prev = y;
            if x > 0.0 && x < alpha / 100.0 {
                assert!((y - x).abs() / x < 1e-3);
            }
        }
    }

    #[test]
    fn smooth_loss_examples() {
        let mut right = Array3::zeros((3, 1, 3));
        right[[1, 0, 2]] = 1.0;
        right[[2, 0, 2]] = 2.0;
        let left = Array3::zeros((3, 1, 3));
        let l = smooth_loss(right.view(), left.view()).unwrap();
        assert_eq!(l.value, 2.0);
        assert!(l.gradient("joints_left").unwrap().iter().all(|&g| g == 0.0));
        let one = Array3::<f64>::zeros((1, 1, 3));
        assert!(matches!(smooth_loss(one.view(), one.view()), Err(LossError::TooFewFrames { .. })));
    }

    #[test]
    fn joint_loss_unlabeled_is_zero() {
        let pred = Array::from_shape_fn((2, 3, 3), |(t, j, c)| (t + j + c) as f64);
        let gt = Array3::zeros((2, 3, 3));
        let l = joint_loss(pred.view(), gt.view(), &[false, false]).unwrap();
        assert_eq!(l.value, 0.0);
        assert!(l.gradients["pred"].iter().all(|&g| g == 0.0));
        assert_eq!(joint_loss(pred.view(), pred.view(), &[true, true]).unwrap().value, 0.0);
        let bad = Array3::zeros((2, 2, 3));
        assert!(joint_loss(pred.view(), bad.view(), &[true, true]).is_err());
    }

    #[test]
    fn mano_consistency_unit_vector() {
        let r = array![[1.0, 0.0], [0.0, 1.0]];
        let l = Array2::zeros((2, 2));
        let loss = mano_loss(r.view(), l.view(), r.view(), l.view(), &[true, true], 1.0).unwrap();
        assert_eq!(loss.value, 2.0);
        let same = mano_loss(r.view(), r.view(), r.view(), r.view(), &[true, true], 1.0).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn reg_loss_examples() {
        let mut theta = Array2::zeros((1, 6));
        theta[[0, 4]] = 2.0;
        let beta = Array2::zeros((1, 2));
        let l = reg_loss(theta.view(), beta.view(), 0.1).unwrap();
        assert_eq!(l.value, 4.0);
        assert_eq!(l.gradients["theta"][[0, 4]], 4.0);
        let zero = reg_loss(Array2::zeros((2, 3)).view(), beta.view(), 0.1).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn total_of_unit_components() {
        let unit = LossValue {
            value: 1.0,
            gradients: BTreeMap::new(),
        };
        let components = LossComponents {
            smooth: unit.clone(),
            joint: unit.clone(),
            inter: unit.clone(),
            mano: unit.clone(),
            reg: unit,
        };
        let total = total_loss(&components, &LossWeights::default());
        assert!((total.value - 112.1).abs() < 1e-12);
        assert_eq!(total_loss(&LossComponents::default(), &LossWeights::default()).value, 0.0);
    }

    #[test]
    fn check_gradient_on_quadratic() {
        let f = |x: &[f64]| {
            let v = x[0] * x[0] + 3.0 * x[0] * x[1] + 0.5 * x[1] * x[1];
            (v, vec![2.0 * x[0] + 3.0 * x[1], 3.0 * x[0] + x[1]])
        };
        assert!(check_gradient(f, &[0.3, -1.7], 1e-5).unwrap() < 1e-9);
        let nan = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(check_gradient(nan, &[0.0], 1e-5).is_err());
    }
}
