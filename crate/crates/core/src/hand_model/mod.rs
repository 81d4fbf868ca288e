//! Differentiable parametric hand model.
//!
//! A [`HandModel`] maps pose and shape parameters to a posed mesh and a set of
//! regressed joints:
//!
//! 1. shape blendshapes are added to the template,
//! 2. the rest positions of the kinematic nodes are regressed from the shaped mesh
//!    (the first `K` rows of the joint regressor),
//! 3. optional pose-corrective blendshapes are driven by `R_k - I` of every
//!    non-root node,
//! 4. vertices are skinned with per-node rigid transforms accumulated along the
//!    kinematic tree, then translated,
//! 5. output joints are the regressor applied to the posed vertices.
//!
//! [`forward_jacobian`] differentiates the whole chain analytically with respect to
//! `(theta, beta, translation)`.

mod io;
mod mini_hand;
pub mod rotation;

pub use io::{load_model, parse_model, save_model, write_model, MODEL_FORMAT};
pub use mini_hand::generate_mini_hand;
pub use rotation::rodrigues;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::find_non_manifold_edge;

/// Vertex count of the full-resolution hand mesh.
pub const MANO_VERTEX_COUNT: usize = 778;
/// Joint count of the full-resolution hand model.
pub const MANO_JOINT_COUNT: usize = 21;

const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to parse model field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("model invariant violated: {0}")]
    Validation(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandSide {
    Left,
    Right,
}

/// Template mesh, blendshape bases, skinning weights, joint regressor and
/// kinematic tree for one hand.
#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    pub side: HandSide,
    /// Rest-pose vertices in meters.
    pub template_vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    /// `3V x B`; row `3v + c` holds coordinate `c` of vertex `v`.
    pub shape_basis: DMatrix<f64>,
    /// `3V x P` with `P = 9 (K - 1)`, or `3V x 0` when pose correctives are absent.
    pub pose_basis: DMatrix<f64>,
    /// `V x K`.
    pub skin_weights: DMatrix<f64>,
    /// `J x V`; the first `K` rows locate the kinematic nodes.
    pub joint_regressor: DMatrix<f64>,
    /// Parent of each kinematic node, `-1` for the root.
    pub kinematic_parents: Vec<i64>,
    /// Optional `D x 3(K - 1)` projection for a reduced pose space.
    pub pose_pca: Option<DMatrix<f64>>,
}

/// Pose, shape and translation of one hand in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HandParamsFrame {
    /// Axis-angle per kinematic node (root first), or root axis-angle followed by
    /// the PCA coefficients when the model carries a pose projection.
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub translation: Vector3<f64>,
}

impl HandParamsFrame {
    /// All-zero parameters sized for `model`.
    pub fn zeros(model: &HandModel) -> Self {
        Self {
            theta: vec![0.0; model.pose_dim()],
            beta: vec![0.0; model.num_shape()],
            translation: Vector3::zeros(),
        }
    }
}

/// Posed vertices and regressed joints of one hand.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFrame {
    pub vertices: Vec<Vector3<f64>>,
    pub joints: Vec<Vector3<f64>>,
}

/// Column layout of a [`ForwardJacobian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub theta: usize,
    pub beta: usize,
}

impl ParamLayout {
    pub fn beta_offset(&self) -> usize {
        self.theta
    }

    pub fn translation_offset(&self) -> usize {
        self.theta + self.beta
    }

    pub fn len(&self) -> usize {
        self.theta + self.beta + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Derivatives of the flattened vertices (`3V` rows) and joints (`3J` rows) with
/// respect to `[theta, beta, translation]`.
#[derive(Debug, Clone)]
pub struct ForwardJacobian {
    pub layout: ParamLayout,
    pub vertices: DMatrix<f64>,
    pub joints: DMatrix<f64>,
}

impl HandModel {
    pub fn num_vertices(&self) -> usize {
        self.template_vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.kinematic_parents.len()
    }

    pub fn num_joints(&self) -> usize {
        self.joint_regressor.nrows()
    }

    pub fn num_shape(&self) -> usize {
        self.shape_basis.ncols()
    }

    pub fn num_pose_correctives(&self) -> usize {
        self.pose_basis.ncols()
    }

    /// Length of the pose vector accepted by [`forward`].
    pub fn pose_dim(&self) -> usize {
        match &self.pose_pca {
            Some(pca) => 3 + pca.nrows(),
            None => 3 * self.num_nodes(),
        }
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        usize::try_from(self.kinematic_parents[node]).ok()
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), ModelError> {
        let v = self.num_vertices();
        let k = self.num_nodes();
        let invalid = |msg: String| Err(ModelError::Validation(msg));

        if v == 0 || k == 0 {
            return invalid("model must have at least one vertex and one kinematic node".into());
        }
        if self.shape_basis.nrows() != 3 * v {
            return invalid(format!(
                "shape_basis has {} rows, expected 3V = {}",
                self.shape_basis.nrows(),
                3 * v
            ));
        }
        if self.pose_basis.nrows() != 3 * v {
            return invalid(format!(
                "pose_basis has {} rows, expected 3V = {}",
                self.pose_basis.nrows(),
                3 * v
            ));
        }
        let p = self.pose_basis.ncols();
        if p != 0 && p != 9 * (k - 1) {
            return invalid(format!(
                "pose_basis has {p} components, expected 0 or 9(K-1) = {}",
                9 * (k - 1)
            ));
        }
        if self.skin_weights.shape() != (v, k) {
            return invalid(format!(
                "skin_weights is {:?}, expected ({v}, {k})",
                self.skin_weights.shape()
            ));
        }
        if self.joint_regressor.ncols() != v || self.joint_regressor.nrows() < k {
            return invalid(format!(
                "joint_regressor is {:?}, expected (J >= {k}, {v})",
                self.joint_regressor.shape()
            ));
        }
        if let Some(pca) = &self.pose_pca {
            if pca.ncols() != 3 * (k - 1) {
                return invalid(format!(
                    "pose_pca has {} columns, expected 3(K-1) = {}",
                    pca.ncols(),
                    3 * (k - 1)
                ));
            }
        }

        let all_finite = self.template_vertices.iter().all(|x| x.iter().all(|c| c.is_finite()))
            && self.shape_basis.iter().all(|c| c.is_finite())
            && self.pose_basis.iter().all(|c| c.is_finite())
            && self.skin_weights.iter().all(|c| c.is_finite())
            && self.joint_regressor.iter().all(|c| c.is_finite())
            && self.pose_pca.as_ref().is_none_or(|m| m.iter().all(|c| c.is_finite()));
        if !all_finite {
            return invalid("model contains non-finite values".into());
        }

        for (row, weights) in self.skin_weights.row_iter().enumerate() {
            if weights.iter().any(|&w| w < 0.0) {
                return invalid(format!("skin_weights row {row} has a negative entry"));
            }
            let s = weights.sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return invalid(format!("skin_weights row {row} sums to {s}, expected 1"));
            }
        }
        for (row, weights) in self.joint_regressor.row_iter().enumerate() {
            let s = weights.sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return invalid(format!("joint_regressor row {row} sums to {s}, expected 1"));
            }
        }

        if self.kinematic_parents[0] != -1 {
            return invalid("kinematic_parents[0] must be -1 (root)".into());
        }
        for (node, &parent) in self.kinematic_parents.iter().enumerate().skip(1) {
            if parent < 0 || parent as usize >= node {
                return invalid(format!(
                    "kinematic_parents[{node}] = {parent} must satisfy 0 <= parent < {node}"
                ));
            }
        }

        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&idx| idx >= v) {
                return invalid(format!("face {i} references a vertex outside 0..{v}"));
            }
        }
        if let Some(edge) = find_non_manifold_edge(&self.faces) {
            return invalid(format!("faces are not a closed 2-manifold: {edge}"));
        }
        Ok(())
    }

    /// Mirror image of this model across the `x = 0` plane, with face winding
    /// reversed so normals keep pointing outward.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.side = match self.side {
            HandSide::Left => HandSide::Right,
            HandSide::Right => HandSide::Left,
        };
        for v in &mut out.template_vertices {
            v.x = -v.x;
        }
        for f in &mut out.faces {
            f.swap(1, 2);
        }
        for vi in 0..self.num_vertices() {
            out.shape_basis.row_mut(3 * vi).neg_mut();
            out.pose_basis.row_mut(3 * vi).neg_mut();
        }
        out
    }

    fn check_frame(&self, frame: &HandParamsFrame) -> Result<(), ModelError> {
        if frame.theta.len() != self.pose_dim() {
            return Err(ModelError::Dimension {
                what: "theta",
                expected: self.pose_dim(),
                got: frame.theta.len(),
            });
        }
        if frame.beta.len() != self.num_shape() {
            return Err(ModelError::Dimension {
                what: "beta",
                expected: self.num_shape(),
                got: frame.beta.len(),
            });
        }
        Ok(())
    }

    /// Expands `theta` into one axis-angle vector per kinematic node.
    fn full_pose(&self, theta: &[f64]) -> Vec<Vector3<f64>> {
        let k = self.num_nodes();
        let mut out = vec![Vector3::new(theta[0], theta[1], theta[2])];
        match &self.pose_pca {
            None => out.extend((1..k).map(|n| Vector3::new(theta[3 * n], theta[3 * n + 1], theta[3 * n + 2]))),
            Some(pca) => {
                let mut rest = vec![0.0; 3 * (k - 1)];
                for (d, &coeff) in theta[3..].iter().enumerate() {
                    for (j, r) in rest.iter_mut().enumerate() {
                        *r += coeff * pca[(d, j)];
                    }
                }
                out.extend(rest.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])));
            }
        }
        out
    }

    fn shaped_vertices(&self, beta: &[f64]) -> Vec<Vector3<f64>> {
        self.template_vertices
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut v = *t;
                for (b, &coeff) in beta.iter().enumerate() {
                    for c in 0..3 {
                        v[c] += self.shape_basis[(3 * i + c, b)] * coeff;
                    }
                }
                v
            })
            .collect()
    }

    /// Regressor rows `0..K` applied to `vertices`.
    fn node_positions(&self, vertices: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        (0..self.num_nodes())
            .map(|n| regress_row(&self.joint_regressor, n, vertices))
            .collect()
    }
}

fn regress_row(regressor: &DMatrix<f64>, row: usize, vertices: &[Vector3<f64>]) -> Vector3<f64> {
    vertices
        .iter()
        .enumerate()
        .fold(Vector3::zeros(), |acc, (i, v)| acc + v * regressor[(row, i)])
}

fn regress_all(regressor: &DMatrix<f64>, vertices: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    (0..regressor.nrows())
        .map(|j| regress_row(regressor, j, vertices))
        .collect()
}

/// Intermediate quantities of one forward evaluation.
struct Kinematics {
    rotations: Vec<Matrix3<f64>>,
    rotation_derivs: Vec<[Matrix3<f64>; 3]>,
    /// Rest positions of the kinematic nodes.
    rest_nodes: Vec<Vector3<f64>>,
    /// Shaped (and pose-corrected) vertices before skinning.
    posed_template: Vec<Vector3<f64>>,
    /// World rotation and translation of each node; `global_t[k]` is the posed
    /// position of node `k`.
    global_r: Vec<Matrix3<f64>>,
    global_t: Vec<Vector3<f64>>,
    /// Skinned vertices before translation.
    skinned: Vec<Vector3<f64>>,
}

impl Kinematics {
    fn evaluate(model: &HandModel, frame: &HandParamsFrame) -> Self {
        let k = model.num_nodes();
        let pose = model.full_pose(&frame.theta);
        let (rotations, rotation_derivs): (Vec<_>, Vec<_>) =
            pose.iter().map(rotation::rodrigues_with_derivatives).unzip();

        let shaped = model.shaped_vertices(&frame.beta);
        let rest_nodes = model.node_positions(&shaped);

        let mut posed_template = shaped;
        if model.num_pose_correctives() > 0 {
            let feature: Vec<f64> = rotations[1..]
                .iter()
                .flat_map(|r| {
                    let d = r - Matrix3::identity();
                    // row-major flattening
                    (0..9).map(move |q| d[(q / 3, q % 3)])
                })
                .collect();
            for (i, v) in posed_template.iter_mut().enumerate() {
                for (q, &f) in feature.iter().enumerate() {
                    for c in 0..3 {
                        v[c] += model.pose_basis[(3 * i + c, q)] * f;
                    }
                }
            }
        }

        let mut global_r = Vec::with_capacity(k);
        let mut global_t = Vec::with_capacity(k);
        for node in 0..k {
            match model.parent(node) {
                None => {
                    global_r.push(rotations[node]);
                    global_t.push(rest_nodes[node]);
                }
                Some(p) => {
                    let r = global_r[p] * rotations[node];
                    let t = global_r[p] * (rest_nodes[node] - rest_nodes[p]) + global_t[p];
                    global_r.push(r);
                    global_t.push(t);
                }
            }
        }

        let skinned = posed_template
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (0..k).fold(Vector3::zeros(), |acc, m| {
                    let w = model.skin_weights[(i, m)];
                    if w == 0.0 {
                        acc
                    } else {
                        acc + (global_r[m] * (p - rest_nodes[m]) + global_t[m]) * w
                    }
                })
            })
            .collect();

        Self {
            rotations,
            rotation_derivs,
            rest_nodes,
            posed_template,
            global_r,
            global_t,
            skinned,
        }
    }
}

/// Poses `model` with `frame`.
pub fn forward(model: &HandModel, frame: &HandParamsFrame) -> Result<MeshFrame, ModelError> {
    model.check_frame(frame)?;
    let kin = Kinematics::evaluate(model, frame);
    let vertices: Vec<_> = kin.skinned.iter().map(|v| v + frame.translation).collect();
    let joints = regress_all(&model.joint_regressor, &vertices);
    Ok(MeshFrame { vertices, joints })
}

/// Analytic Jacobian of [`forward`] with respect to `(theta, beta, translation)`.
pub fn forward_jacobian(model: &HandModel, frame: &HandParamsFrame) -> Result<ForwardJacobian, ModelError> {
    model.check_frame(frame)?;
    let kin = Kinematics::evaluate(model, frame);
    let nv = model.num_vertices();
    let k = model.num_nodes();
    let layout = ParamLayout {
        theta: model.pose_dim(),
        beta: model.num_shape(),
    };

    // descendant[a][m]: node m lies in the subtree rooted at a (inclusive)
    let mut descendant = vec![vec![false; k]; k];
    for m in 0..k {
        let mut cur = Some(m);
        while let Some(a) = cur {
            descendant[a][m] = true;
            cur = model.parent(a);
        }
    }

    // Derivatives with respect to the full axis-angle pose (3K columns).
    let mut d_full = DMatrix::<f64>::zeros(3 * nv, 3 * k);
    let weighted_world: Vec<Vec<Vector3<f64>>> = (0..nv)
        .map(|i| {
            (0..k)
                .map(|m| {
                    let p = kin.posed_template[i];
                    (kin.global_r[m] * (p - kin.rest_nodes[m]) + kin.global_t[m]) * model.skin_weights[(i, m)]
                })
                .collect()
        })
        .collect();

    for node in 0..k {
        let parent_r = model.parent(node).map_or(Matrix3::identity(), |p| kin.global_r[p]);
        let pivot = kin.global_t[node];
        for c in 0..3 {
            let omega = parent_r * kin.rotation_derivs[node][c] * kin.rotations[node].transpose() * parent_r.transpose();
            for i in 0..nv {
                let mut lever = Vector3::zeros();
                let mut weight = 0.0;
                for m in (0..k).filter(|&m| descendant[node][m]) {
                    lever += weighted_world[i][m];
                    weight += model.skin_weights[(i, m)];
                }
                let dv = omega * (lever - pivot * weight);
                for r in 0..3 {
                    d_full[(3 * i + r, 3 * node + c)] += dv[r];
                }
            }
        }
    }

    if model.num_pose_correctives() > 0 {
        for node in 1..k {
            for c in 0..3 {
                let dr = kin.rotation_derivs[node][c];
                let slot = 9 * (node - 1);
                for i in 0..nv {
                    let mut dp = Vector3::zeros();
                    for q in 0..9 {
                        let df = dr[(q / 3, q % 3)];
                        if df != 0.0 {
                            for r in 0..3 {
                                dp[r] += model.pose_basis[(3 * i + r, slot + q)] * df;
                            }
                        }
                    }
                    let dv = (0..k).fold(Vector3::zeros(), |acc, m| {
                        acc + kin.global_r[m] * dp * model.skin_weights[(i, m)]
                    });
                    for r in 0..3 {
                        d_full[(3 * i + r, 3 * node + c)] += dv[r];
                    }
                }
            }
        }
    }

    let mut vertices = DMatrix::<f64>::zeros(3 * nv, layout.len());
    match &model.pose_pca {
        None => vertices.columns_mut(0, 3 * k).copy_from(&d_full),
        Some(pca) => {
            vertices.columns_mut(0, 3).copy_from(&d_full.columns(0, 3));
            // d/dcoeff_d = sum_j pca[d, j] * d/dfull[3 + j]
            let projected = d_full.columns(3, 3 * (k - 1)) * pca.transpose();
            vertices.columns_mut(3, pca.nrows()).copy_from(&projected);
        }
    }

    // Shape derivatives.
    for b in 0..layout.beta {
        let d_shaped: Vec<Vector3<f64>> = (0..nv)
            .map(|i| {
                Vector3::new(
                    model.shape_basis[(3 * i, b)],
                    model.shape_basis[(3 * i + 1, b)],
                    model.shape_basis[(3 * i + 2, b)],
                )
            })
            .collect();
        let d_nodes = model.node_positions(&d_shaped);
        let mut d_global_t = Vec::with_capacity(k);
        for node in 0..k {
            let dt = match model.parent(node) {
                None => d_nodes[node],
                Some(p) => kin.global_r[p] * (d_nodes[node] - d_nodes[p]) + d_global_t[p],
            };
            d_global_t.push(dt);
        }
        for i in 0..nv {
            let dv = (0..k).fold(Vector3::zeros(), |acc, m| {
                let w = model.skin_weights[(i, m)];
                if w == 0.0 {
                    acc
                } else {
                    acc + (kin.global_r[m] * (d_shaped[i] - d_nodes[m]) + d_global_t[m]) * w
                }
            });
            for r in 0..3 {
                vertices[(3 * i + r, layout.beta_offset() + b)] = dv[r];
            }
        }
    }

    let t0 = layout.translation_offset();
    for i in 0..nv {
        for r in 0..3 {
            vertices[(3 * i + r, t0 + r)] = 1.0;
        }
    }

    let nj = model.num_joints();
    let mut joints = DMatrix::<f64>::zeros(3 * nj, layout.len());
    for j in 0..nj {
        for i in 0..nv {
            let w = model.joint_regressor[(j, i)];
            if w == 0.0 {
                continue;
            }
            for r in 0..3 {
                for col in 0..layout.len() {
                    joints[(3 * j + r, col)] += w * vertices[(3 * i + r, col)];
                }
            }
        }
    }

    Ok(ForwardJacobian {
        layout,
        vertices,
        joints,
    })
}

/// Expresses the left hand in the right hand's coordinate system by shifting it by
/// the relative translation `c`; the right hand is returned unchanged.
pub fn compose_two_hands(right: &MeshFrame, left: &MeshFrame, c: &Vector3<f64>) -> (MeshFrame, MeshFrame) {
    let shifted = MeshFrame {
        vertices: left.vertices.iter().map(|v| v + c).collect(),
        joints: left.joints.iter().map(|j| j + c).collect(),
    };
    (right.clone(), shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_reproduce_template() {
        let model = generate_mini_hand(0);
        let out = forward(&model, &HandParamsFrame::zeros(&model)).unwrap();
        for (a, b) in out.vertices.iter().zip(&model.template_vertices) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_beta_adds_first_shape_component() {
        let model = generate_mini_hand(0);
        let mut frame = HandParamsFrame::zeros(&model);
        frame.beta[0] = 1.0;
        let out = forward(&model, &frame).unwrap();
        for (i, v) in out.vertices.iter().enumerate() {
            for c in 0..3 {
                let expected = model.template_vertices[i][c] + model.shape_basis[(3 * i + c, 0)];
                assert!((v[c] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joints_are_regressed_from_vertices() {
        let model = generate_mini_hand(3);
        let mut frame = HandParamsFrame::zeros(&model);
        frame.theta.iter_mut().enumerate().for_each(|(i, t)| *t = 0.1 * (i as f64).sin());
        frame.translation = Vector3::new(0.01, -0.02, 0.3);
        let out = forward(&model, &frame).unwrap();
        let joints = regress_all(&model.joint_regressor, &out.vertices);
        for (a, b) in out.joints.iter().zip(&joints) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn wrong_theta_length_is_rejected() {
        let model = generate_mini_hand(0);
        let mut frame = HandParamsFrame::zeros(&model);
        frame.theta.pop();
        assert!(matches!(
            forward(&model, &frame),
            Err(ModelError::Dimension { what: "theta", .. })
        ));
    }

    #[test]
    fn translation_jacobian_is_identity() {
        let model = generate_mini_hand(0);
        let jac = forward_jacobian(&model, &HandParamsFrame::zeros(&model)).unwrap();
        let t0 = jac.layout.translation_offset();
        for row in 0..jac.vertices.nrows() {
            for c in 0..3 {
                let expected = if row % 3 == c { 1.0 } else { 0.0 };
                assert_eq!(jac.vertices[(row, t0 + c)], expected);
            }
        }
    }

    #[test]
    fn shape_jacobian_at_rest_is_shape_basis() {
        let model = generate_mini_hand(1);
        let jac = forward_jacobian(&model, &HandParamsFrame::zeros(&model)).unwrap();
        let b0 = jac.layout.beta_offset();
        for b in 0..model.num_shape() {
            for row in 0..jac.vertices.nrows() {
                assert!((jac.vertices[(row, b0 + b)] - model.shape_basis[(row, b)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn compose_shifts_only_left() {
        let model = generate_mini_hand(0);
        let right = forward(&model, &HandParamsFrame::zeros(&model)).unwrap();
        let left = forward(&model.mirrored(), &HandParamsFrame::zeros(&model)).unwrap();
        let c = Vector3::new(0.1, 0.0, 0.0);
        let (r, l) = compose_two_hands(&right, &left, &c);
        assert_eq!(r, right);
        for (a, b) in l.vertices.iter().zip(&left.vertices) {
            assert_eq!(a.x, b.x + 0.1);
            assert_eq!(a.y, b.y);
        }
        let (_, same) = compose_two_hands(&right, &left, &Vector3::zeros());
        assert_eq!(same, left);
    }

    #[test]
    fn mirrored_model_stays_valid() {
        let model = generate_mini_hand(2);
        let m = model.mirrored();
        m.validate().unwrap();
        assert_eq!(m.side, HandSide::Left);
        assert_eq!(m.mirrored(), model);
    }
}
