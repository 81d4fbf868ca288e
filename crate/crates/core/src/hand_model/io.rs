//! Model file reading and writing.
//!
//! The model file is a JSON object with dimension headers (`V`, `F`, `K`, `J`,
//! `B`, `P`, `D_pca`) and one flat row-major numeric array per model field:
//!
//! | field               | shape        |
//! |---------------------|--------------|
//! | `template_vertices` | `V x 3`      |
//! | `faces`             | `F x 3`      |
//! | `shape_basis`       | `V x 3 x B`  |
//! | `pose_basis`        | `V x 3 x P`  |
//! | `skin_weights`      | `V x K`      |
//! | `joint_regressor`   | `J x V`      |
//! | `kinematic_parents` | `K`          |
//! | `pose_pca`          | `D_pca x 3(K-1)` (empty when `D_pca = 0`) |

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;
use serde_json::{Map, Value};

use super::{HandModel, HandSide, ModelError};

pub const MODEL_FORMAT: &str = "interhand-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Serialize)]
struct ModelDocument<'a> {
    format: &'a str,
    version: u64,
    side: HandSide,
    #[serde(rename = "V")]
    v: usize,
    #[serde(rename = "F")]
    f: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "B")]
    b: usize,
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "D_pca")]
    d_pca: usize,
    template_vertices: Vec<f64>,
    faces: Vec<usize>,
    shape_basis: Vec<f64>,
    pose_basis: Vec<f64>,
    skin_weights: Vec<f64>,
    joint_regressor: Vec<f64>,
    kinematic_parents: &'a [i64],
    pose_pca: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect()
}

/// Serializes `model` to the model file format.
pub fn write_model<W: Write>(model: &HandModel, mut out: W) -> Result<(), ModelError> {
    let doc = ModelDocument {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        side: model.side,
        v: model.num_vertices(),
        f: model.num_faces(),
        k: model.num_nodes(),
        j: model.num_joints(),
        b: model.num_shape(),
        p: model.num_pose_correctives(),
        d_pca: model.pose_pca.as_ref().map_or(0, |m| m.nrows()),
        template_vertices: model.template_vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect(),
        faces: model.faces.iter().flatten().copied().collect(),
        // (3V x B) with row 3v+c is already V x 3 x B in row-major order
        shape_basis: row_major(&model.shape_basis),
        pose_basis: row_major(&model.pose_basis),
        skin_weights: row_major(&model.skin_weights),
        joint_regressor: row_major(&model.joint_regressor),
        kinematic_parents: &model.kinematic_parents,
        pose_pca: model.pose_pca.as_ref().map_or_else(Vec::new, row_major),
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

pub fn save_model(model: &HandModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<HandModel, ModelError> {
    parse_model(&fs::read_to_string(path)?)
}

fn parse_err(field: &str, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        field: field.to_string(),
        message: message.into(),
    }
}

struct Fields<'a>(&'a Map<String, Value>);

impl Fields<'_> {
    fn get(&self, name: &str) -> Result<&Value, ModelError> {
        self.0.get(name).ok_or_else(|| parse_err(name, "missing"))
    }

    fn dim(&self, name: &str) -> Result<usize, ModelError> {
        self.get(name)?
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| parse_err(name, "expected a non-negative integer"))
    }

    fn array(&self, name: &str) -> Result<&Vec<Value>, ModelError> {
        self.get(name)?
            .as_array()
            .ok_or_else(|| parse_err(name, "expected an array"))
    }

    fn reals(&self, name: &str, len: usize) -> Result<Vec<f64>, ModelError> {
        let arr = self.array(name)?;
        if arr.len() != len {
            return Err(parse_err(name, format!("expected {len} values, found {}", arr.len())));
        }
        arr.iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_f64()
                    .ok_or_else(|| parse_err(name, format!("entry {i} is not a number")))
            })
            .collect()
    }

    fn integers(&self, name: &str, len: usize) -> Result<Vec<i64>, ModelError> {
        let arr = self.array(name)?;
        if arr.len() != len {
            return Err(parse_err(name, format!("expected {len} values, found {}", arr.len())));
        }
        arr.iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_i64()
                    .ok_or_else(|| parse_err(name, format!("entry {i} is not an integer")))
            })
            .collect()
    }

    fn matrix(&self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>, ModelError> {
        Ok(DMatrix::from_row_slice(rows, cols, &self.reals(name, rows * cols)?))
    }
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<HandModel, ModelError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_err("<document>", e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err("<document>", "expected a JSON object"))?;
    let fields = Fields(obj);

    let format = fields.get("format")?.as_str().unwrap_or_default();
    if format != MODEL_FORMAT {
        return Err(parse_err("format", format!("expected \"{MODEL_FORMAT}\", found \"{format}\"")));
    }
    let side: HandSide = serde_json::from_value(fields.get("side")?.clone())
        .map_err(|e| parse_err("side", e.to_string()))?;
    let v = fields.dim("V")?;
    let f = fields.dim("F")?;
    let k = fields.dim("K")?;
    let j = fields.dim("J")?;
    let b = fields.dim("B")?;
    let p = fields.dim("P")?;
    let d_pca = fields.dim("D_pca")?;
    if k == 0 {
        return Err(parse_err("K", "must be at least 1"));
    }

    let template_vertices = fields
        .reals("template_vertices", 3 * v)?
        .chunks_exact(3)
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .collect();
    let faces = fields
        .integers("faces", 3 * f)?
        .chunks_exact(3)
        .map(|c| {
            let idx = |x: i64| usize::try_from(x).map_err(|_| parse_err("faces", "negative vertex index"));
            Ok([idx(c[0])?, idx(c[1])?, idx(c[2])?])
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let pose_pca = if d_pca == 0 {
        fields.reals("pose_pca", 0)?;
        None
    } else {
        Some(fields.matrix("pose_pca", d_pca, 3 * (k - 1))?)
    };

    let model = HandModel {
        side,
        template_vertices,
        faces,
        shape_basis: fields.matrix("shape_basis", 3 * v, b)?,
        pose_basis: fields.matrix("pose_basis", 3 * v, p)?,
        skin_weights: fields.matrix("skin_weights", v, k)?,
        joint_regressor: fields.matrix("joint_regressor", j, v)?,
        kinematic_parents: fields.integers("kinematic_parents", k)?,
        pose_pca,
    };
    model.validate()?;
    Ok(model)
}
