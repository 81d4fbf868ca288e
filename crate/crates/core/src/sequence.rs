//! Two-hand parameter sequences and their JSON file format.
//!
//! The left hand is posed in its own frame and then shifted by the relative
//! translation `c` into the right hand's frame; both hands' own translations
//! are zero.

use std::path::Path;

use nalgebra::Vector3;
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{build_mesh, MeshError, TriMesh};
use crate::hand_model::{compose_two_hands, forward, HandModel, HandParamsFrame, MeshFrame, ModelError};

pub const SEQUENCE_FORMAT: &str = "interhand-sequence";
pub const SEQUENCE_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("frame {frame}, field `{field}`: {message}")]
    Field {
        frame: usize,
        field: &'static str,
        message: String,
    },
    #[error("header: {0}")]
    Header(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("frame {frame}: {source}")]
    Model { frame: usize, source: ModelError },
    #[error("frame {frame}: {source}")]
    Mesh { frame: usize, source: MeshError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Array sizes shared by every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDims {
    pub frames: usize,
    pub theta: usize,
    pub beta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFrame {
    pub theta_r: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub theta_l: Vec<f64>,
    pub beta_l: Vec<f64>,
    /// Left hand offset in the right hand's frame, meters.
    pub translation_c: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_joints_r: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_joints_l: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_vertices_r: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_vertices_l: Option<Vec<[f64; 3]>>,
    pub labeled: bool,
}

impl SequenceFrame {
    pub fn right_params(&self) -> HandParamsFrame {
        HandParamsFrame {
            theta: self.theta_r.clone(),
            beta: self.beta_r.clone(),
            translation: Vector3::zeros(),
        }
    }

    pub fn left_params(&self) -> HandParamsFrame {
        HandParamsFrame {
            theta: self.theta_l.clone(),
            beta: self.beta_l.clone(),
            translation: Vector3::zeros(),
        }
    }

    pub fn c(&self) -> Vector3<f64> {
        Vector3::from(self.translation_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sequence {
    pub format: String,
    pub version: u64,
    pub fps: f64,
    pub dims: SequenceDims,
    pub frames: Vec<SequenceFrame>,
}

/// Posed meshes and joints of both hands, left already shifted by `c`.
#[derive(Debug, Clone)]
pub struct PosedSequence {
    pub right: Vec<MeshFrame>,
    pub left: Vec<MeshFrame>,
}

impl PosedSequence {
    pub fn joints(&self) -> [Array3<f64>; 2] {
        [stack(self.right.iter().map(|m| &m.joints[..])), stack(self.left.iter().map(|m| &m.joints[..]))]
    }

    pub fn vertices(&self) -> [Array3<f64>; 2] {
        [
            stack(self.right.iter().map(|m| &m.vertices[..])),
            stack(self.left.iter().map(|m| &m.vertices[..])),
        ]
    }

    pub fn meshes(&self, model_r: &HandModel, model_l: &HandModel) -> Result<(Vec<TriMesh>, Vec<TriMesh>), SequenceError> {
        let build = |frames: &[MeshFrame], model: &HandModel| {
            frames
                .iter()
                .enumerate()
                .map(|(t, m)| {
                    build_mesh(m.vertices.clone(), model.faces.clone())
                        .map_err(|source| SequenceError::Mesh { frame: t, source })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok((build(&self.right, model_r)?, build(&self.left, model_l)?))
    }
}

/// Stacks per-frame point lists into a `T x N x 3` array.
pub fn stack<'a>(frames: impl ExactSizeIterator<Item = &'a [Vector3<f64>]> + Clone) -> Array3<f64> {
    let t_len = frames.len();
    let n = frames.clone().next().map_or(0, <[_]>::len);
    let mut out = Array3::zeros((t_len, n, 3));
    for (t, pts) in frames.enumerate() {
        for (i, p) in pts.iter().enumerate() {
            for c in 0..3 {
                out[[t, i, c]] = p[c];
            }
        }
    }
    out
}

fn to_points(rows: &[[f64; 3]]) -> Vec<Vector3<f64>> {
    rows.iter().map(|r| Vector3::from(*r)).collect()
}

impl Sequence {
    pub fn new(fps: f64, frames: Vec<SequenceFrame>) -> Result<Self, SequenceError> {
        let first = frames
            .first()
            .ok_or_else(|| SequenceError::Header("a sequence needs at least one frame".into()))?;
        let seq = Self {
            format: SEQUENCE_FORMAT.into(),
            version: SEQUENCE_VERSION,
            fps,
            dims: SequenceDims {
                frames: frames.len(),
                theta: first.theta_r.len(),
                beta: first.beta_r.len(),
            },
            frames,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn labeled(&self) -> Vec<bool> {
        self.frames.iter().map(|f| f.labeled).collect()
    }

    /// Checks the header and that every frame has consistent, finite arrays.
    pub fn validate(&self) -> Result<(), SequenceError> {
        if self.format != SEQUENCE_FORMAT {
            return Err(SequenceError::Header(format!(
                "expected format \"{SEQUENCE_FORMAT}\", found \"{}\"",
                self.format
            )));
        }
        if self.version != SEQUENCE_VERSION {
            return Err(SequenceError::Header(format!("unsupported version {}", self.version)));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(SequenceError::Header(format!("fps must be positive, got {}", self.fps)));
        }
        if self.dims.frames != self.frames.len() || self.frames.is_empty() {
            return Err(SequenceError::Header(format!(
                "dims.frames is {} but the file holds {} frames",
                self.dims.frames,
                self.frames.len()
            )));
        }
        let first = &self.frames[0];
        let sizes = |f: &SequenceFrame| {
            [
                f.gt_joints_r.as_ref().map(Vec::len),
                f.gt_joints_l.as_ref().map(Vec::len),
                f.gt_vertices_r.as_ref().map(Vec::len),
                f.gt_vertices_l.as_ref().map(Vec::len),
            ]
        };
        let reference = sizes(first);
        for (t, f) in self.frames.iter().enumerate() {
            let field_err = |field, message: String| SequenceError::Field {
                frame: t,
                field,
                message,
            };
            for (field, v, n) in [
                ("theta_r", &f.theta_r, self.dims.theta),
                ("theta_l", &f.theta_l, self.dims.theta),
                ("beta_r", &f.beta_r, self.dims.beta),
                ("beta_l", &f.beta_l, self.dims.beta),
            ] {
                if v.len() != n {
                    return Err(field_err(field, format!("expected {n} values, found {}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(field_err(field, "non-finite value".into()));
                }
            }
            if f.translation_c.iter().any(|x| !x.is_finite()) {
                return Err(field_err("translation_c", "non-finite value".into()));
            }
            let names = ["gt_joints_r", "gt_joints_l", "gt_vertices_r", "gt_vertices_l"];
            let arrays = [&f.gt_joints_r, &f.gt_joints_l, &f.gt_vertices_r, &f.gt_vertices_l];
            for ((name, (got, want)), arr) in names.iter().zip(sizes(f).into_iter().zip(reference)).zip(arrays) {
                if got != want {
                    return Err(field_err(
                        name,
                        format!("present with {got:?} rows here but {want:?} in frame 0"),
                    ));
                }
                if arr.iter().flatten().flatten().any(|x| !x.is_finite()) {
                    return Err(field_err(name, "non-finite value".into()));
                }
            }
        }
        Ok(())
    }

    /// Checks the parameter sizes against a model pair.
    pub fn check_models(&self, model_r: &HandModel, model_l: &HandModel) -> Result<(), SequenceError> {
        for (what, got, want) in [
            ("theta (right model)", self.dims.theta, model_r.pose_dim()),
            ("theta (left model)", self.dims.theta, model_l.pose_dim()),
            ("beta (right model)", self.dims.beta, model_r.num_shape()),
            ("beta (left model)", self.dims.beta, model_l.num_shape()),
        ] {
            if got != want {
                return Err(SequenceError::Header(format!("{what}: model expects {want}, file has {got}")));
            }
        }
        let f = &self.frames[0];
        for (field, rows, want) in [
            ("gt_joints_r", &f.gt_joints_r, model_r.num_joints()),
            ("gt_joints_l", &f.gt_joints_l, model_l.num_joints()),
            ("gt_vertices_r", &f.gt_vertices_r, model_r.num_vertices()),
            ("gt_vertices_l", &f.gt_vertices_l, model_l.num_vertices()),
        ] {
            if let Some(rows) = rows {
                if rows.len() != want {
                    return Err(SequenceError::Field {
                        frame: 0,
                        field,
                        message: format!("model expects {want} rows, found {}", rows.len()),
                    });
                }
            }
        }
        Ok(())
    }

    /// Runs both models on every frame and shifts the left hand by `c`.
    pub fn pose(&self, model_r: &HandModel, model_l: &HandModel) -> Result<PosedSequence, SequenceError> {
        self.check_models(model_r, model_l)?;
        let mut right = Vec::with_capacity(self.len());
        let mut left = Vec::with_capacity(self.len());
        for (t, f) in self.frames.iter().enumerate() {
            let r = forward(model_r, &f.right_params()).map_err(|source| SequenceError::Model { frame: t, source })?;
            let l = forward(model_l, &f.left_params()).map_err(|source| SequenceError::Model { frame: t, source })?;
            let (r, l) = compose_two_hands(&r, &l, &f.c());
            right.push(r);
            left.push(l);
        }
        Ok(PosedSequence { right, left })
    }

    /// Ground-truth joints and vertices: stored arrays where present, otherwise
    /// the posed parameters of this sequence.
    pub fn ground_truth(&self, model_r: &HandModel, model_l: &HandModel) -> Result<PosedSequence, SequenceError> {
        let f0 = &self.frames[0];
        let complete = f0.gt_joints_r.is_some()
            && f0.gt_joints_l.is_some()
            && f0.gt_vertices_r.is_some()
            && f0.gt_vertices_l.is_some();
        let mut posed = if complete {
            self.check_models(model_r, model_l)?;
            PosedSequence {
                right: Vec::new(),
                left: Vec::new(),
            }
        } else {
            self.pose(model_r, model_l)?
        };
        if complete {
            for f in &self.frames {
                let pts = |a: &Option<Vec<[f64; 3]>>| to_points(a.as_deref().unwrap_or_default());
                posed.right.push(MeshFrame {
                    vertices: pts(&f.gt_vertices_r),
                    joints: pts(&f.gt_joints_r),
                });
                posed.left.push(MeshFrame {
                    vertices: pts(&f.gt_vertices_l),
                    joints: pts(&f.gt_joints_l),
                });
            }
            return Ok(posed);
        }
        for (t, f) in self.frames.iter().enumerate() {
            if let Some(j) = &f.gt_joints_r {
                posed.right[t].joints = to_points(j);
            }
            if let Some(j) = &f.gt_joints_l {
                posed.left[t].joints = to_points(j);
            }
            if let Some(v) = &f.gt_vertices_r {
                posed.right[t].vertices = to_points(v);
            }
            if let Some(v) = &f.gt_vertices_l {
                posed.left[t].vertices = to_points(v);
            }
        }
        Ok(posed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sequence serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SequenceError> {
        let seq: Self = serde_json::from_str(text).map_err(|e| SequenceError::Parse(e.to_string()))?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SequenceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SequenceError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand_model::generate_mini_hand;

    fn sample() -> (HandModel, HandModel, Sequence) {
        let r = generate_mini_hand(0);
        let l = r.mirrored();
        let frames = (0..3)
            .map(|t| SequenceFrame {
                theta_r: vec![0.01 * t as f64; r.pose_dim()],
                beta_r: vec![0.1; r.num_shape()],
                theta_l: vec![-0.02; r.pose_dim()],
                beta_l: vec![0.0; r.num_shape()],
                translation_c: [0.2, 0.0, 0.0],
                gt_joints_r: None,
                gt_joints_l: None,
                gt_vertices_r: None,
                gt_vertices_l: None,
                labeled: t != 1,
            })
            .collect();
        (r, l, Sequence::new(30.0, frames).unwrap())
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let (_, _, seq) = sample();
        let text = seq.to_json();
        let back = Sequence::from_json(&text).unwrap();
        assert_eq!(back, seq);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn bad_field_names_frame() {
        let (_, _, mut seq) = sample();
        seq.frames[2].beta_l.push(1.0);
        match seq.validate().unwrap_err() {
            SequenceError::Field { frame, field, .. } => assert_eq!((frame, field), (2, "beta_l")),
            other => panic!("unexpected {other}"),
        }
        let (_, _, mut seq) = sample();
        seq.frames[1].gt_joints_r = Some(vec![[0.0; 3]; 7]);
        assert!(matches!(seq.validate(), Err(SequenceError::Field { frame: 1, field: "gt_joints_r", .. })));
    }

    #[test]
    fn left_hand_is_shifted_by_c() {
        let (r, l, seq) = sample();
        let posed = seq.pose(&r, &l).unwrap();
        let own = forward(&l, &seq.frames[0].left_params()).unwrap();
        assert!((posed.left[0].joints[0] - own.joints[0] - Vector3::new(0.2, 0.0, 0.0)).norm() < 1e-15);
        let [jr, jl] = posed.joints();
        assert_eq!(jr.shape(), &[3, r.num_joints(), 3]);
        assert_eq!(jl.shape(), jr.shape());
    }

    #[test]
    fn stored_ground_truth_overrides_posed_values() {
        let (r, l, mut seq) = sample();
        for f in &mut seq.frames {
            f.gt_joints_r = Some(vec![[1.0, 2.0, 3.0]; r.num_joints()]);
        }
        let gt = seq.ground_truth(&r, &l).unwrap();
        assert_eq!(gt.right[2].joints[4], Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(gt.left[0].joints, seq.pose(&r, &l).unwrap().left[0].joints);
    }
}
