//! Procedural low-poly stand-in for the full hand model.
//!
//! The mesh is a single closed tube bent into a U: one finger runs down into a
//! box-shaped palm, which runs across into the second finger. Each finger ends in
//! a pointed cap. Every cross-section is a four-vertex rectangle, so the surface
//! has 16 rings x 4 vertices + 2 cap apexes = 66 vertices and 128 triangles, with
//! the topology of a sphere.

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HandModel, HandSide};

const RINGS: usize = 16;
const APEX_A: usize = 4 * RINGS;
const APEX_B: usize = APEX_A + 1;
/// Fractions of finger length at which finger rings sit (tip side first for finger A).
const FINGER_FRACTIONS: [f64; 5] = [0.9, 0.7, 0.5, 0.3, 0.1];
const PALM_FRACTIONS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

struct Proportions {
    palm_width: f64,
    palm_height: f64,
    palm_depth: f64,
    finger_width: f64,
    finger_depth: f64,
    finger_length: f64,
}

impl Proportions {
    fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut jitter = |nominal: f64| nominal * (1.0 + 0.1 * rng.random_range(-1.0..=1.0));
        Self {
            palm_width: jitter(0.08),
            palm_height: jitter(0.05),
            palm_depth: jitter(0.03),
            finger_width: jitter(0.018),
            finger_depth: jitter(0.018),
            finger_length: jitter(0.07),
        }
    }
}

/// Ring vertex order: outer z-, outer z+, inner z+, inner z-.
fn ring(outer: (f64, f64), inner: (f64, f64), half_depth: f64) -> [Vector3<f64>; 4] {
    [
        Vector3::new(outer.0, outer.1, -half_depth),
        Vector3::new(outer.0, outer.1, half_depth),
        Vector3::new(inner.0, inner.1, half_depth),
        Vector3::new(inner.0, inner.1, -half_depth),
    ]
}

/// Deterministic articulated two-finger hand with `V = 66`, `F = 128`, `K = 5`
/// kinematic nodes, `J = 7` joints (5 nodes + 2 fingertips) and `B = 2` shape
/// components (palm width, finger length). The seed perturbs proportions by up to
/// 10%.
pub fn generate_mini_hand(seed: u64) -> HandModel {
    let p = Proportions::sample(seed);
    let half_w = p.palm_width / 2.0;
    let half_h = p.palm_height / 2.0;
    let finger_center = half_w - p.finger_width / 2.0;
    let inner_a = -finger_center + p.finger_width / 2.0;
    let inner_b = -inner_a;
    let finger_y = |f: f64| half_h + f * p.finger_length;

    let mut rings: Vec<[Vector3<f64>; 4]> = Vec::with_capacity(RINGS);
    for f in FINGER_FRACTIONS {
        rings.push(ring((-half_w, finger_y(f)), (inner_a, finger_y(f)), p.finger_depth / 2.0));
    }
    rings.push(ring((-half_w, -half_h), (inner_a, half_h), p.palm_depth / 2.0));
    for s in PALM_FRACTIONS {
        let x = inner_a + s * (inner_b - inner_a);
        rings.push(ring((x, -half_h), (x, half_h), p.palm_depth / 2.0));
    }
    rings.push(ring((half_w, -half_h), (inner_b, half_h), p.palm_depth / 2.0));
    for f in FINGER_FRACTIONS.iter().rev() {
        rings.push(ring((half_w, finger_y(*f)), (inner_b, finger_y(*f)), p.finger_depth / 2.0));
    }

    let mut vertices: Vec<Vector3<f64>> = rings.iter().flatten().copied().collect();
    let tip_y = half_h + p.finger_length;
    vertices.push(Vector3::new(-finger_center, tip_y, 0.0));
    vertices.push(Vector3::new(finger_center, tip_y, 0.0));

    let mut faces = Vec::with_capacity(128);
    for j in 0..4 {
        let jn = (j + 1) % 4;
        faces.push([APEX_A, jn, j]);
    }
    for r in 0..RINGS - 1 {
        let (a, b) = (4 * r, 4 * (r + 1));
        for j in 0..4 {
            let jn = (j + 1) % 4;
            faces.push([a + j, a + jn, b + jn]);
            faces.push([a + j, b + jn, b + j]);
        }
    }
    let last = 4 * (RINGS - 1);
    for j in 0..4 {
        let jn = (j + 1) % 4;
        faces.push([APEX_B, last + j, last + jn]);
    }
    if signed_volume(&vertices, &faces) < 0.0 {
        for f in &mut faces {
            f.swap(1, 2);
        }
    }

    let nv = vertices.len();
    let k = 5;

    // Node 0 palm, 1/2 finger A proximal/distal, 3/4 finger B proximal/distal.
    let kinematic_parents = vec![-1, 0, 1, 0, 3];
    let mut skin_weights = DMatrix::<f64>::zeros(nv, k);
    let finger_weights: [&[(usize, f64)]; 5] = [
        &[(2, 1.0)],
        &[(2, 1.0)],
        &[(1, 0.5), (2, 0.5)],
        &[(1, 1.0)],
        &[(0, 0.3), (1, 0.7)],
    ];
    for r in 0..RINGS {
        let weights: Vec<(usize, f64)> = match r {
            0..=4 => finger_weights[r].to_vec(),
            5..=10 => vec![(0, 1.0)],
            _ => finger_weights[RINGS - 1 - r]
                .iter()
                .map(|&(node, w)| (if node == 0 { 0 } else { node + 2 }, w))
                .collect(),
        };
        for j in 0..4 {
            for &(node, w) in &weights {
                skin_weights[(4 * r + j, node)] = w;
            }
        }
    }
    skin_weights[(APEX_A, 2)] = 1.0;
    skin_weights[(APEX_B, 4)] = 1.0;

    let mut joint_regressor = DMatrix::<f64>::zeros(7, nv);
    let mut average_rings = |row: usize, rs: &[usize]| {
        let w = 1.0 / (4 * rs.len()) as f64;
        for &r in rs {
            for j in 0..4 {
                joint_regressor[(row, 4 * r + j)] = w;
            }
        }
    };
    average_rings(0, &[6, 7, 8, 9]);
    average_rings(1, &[4]);
    average_rings(2, &[2]);
    average_rings(3, &[11]);
    average_rings(4, &[13]);
    joint_regressor[(5, APEX_A)] = 1.0;
    joint_regressor[(6, APEX_B)] = 1.0;

    let mut shape_basis = DMatrix::<f64>::zeros(3 * nv, 2);
    for (i, v) in vertices.iter().enumerate() {
        shape_basis[(3 * i, 0)] = 0.1 * v.x;
        let on_finger = !(20..44).contains(&i);
        if on_finger {
            shape_basis[(3 * i + 1, 1)] = 0.1 * (v.y - half_h);
        }
    }

    HandModel {
        side: HandSide::Right,
        template_vertices: vertices,
        faces,
        shape_basis,
        pose_basis: DMatrix::zeros(3 * nv, 0),
        skin_weights,
        joint_regressor,
        kinematic_parents,
        pose_pca: None,
    }
}

pub(crate) fn signed_volume(vertices: &[Vector3<f64>], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|f| vertices[f[0]].dot(&vertices[f[1]].cross(&vertices[f[2]])) / 6.0)
        .sum()
}
