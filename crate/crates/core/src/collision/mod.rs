//! Inside/outside classification of points against closed triangle meshes, and
//! point-to-set and point-to-surface distances.

mod grid;
pub mod shapes;
mod triangle;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::LazyLock;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::topology::{find_non_manifold_edge, BadEdge};
pub use grid::Aabb;
use grid::UniformGrid;
use triangle::RayHit;

type V3 = Vector3<f64>;

/// Faces with area at or below this (square meters) are rejected.
pub const MIN_FACE_AREA: f64 = 1e-14;
/// Points this close to the surface classify as outside.
pub const SURFACE_TOLERANCE: f64 = 1e-10;
const MAX_RETRIES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("mesh is not a closed 2-manifold: {0}")]
    Topology(BadEdge),
    #[error("face {face} is degenerate (area {area:e})")]
    Degenerate { face: usize, area: f64 },
    #[error("mesh has no faces")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("vertex set is empty")]
    EmptyVertexSet,
}

/// Validated closed triangle mesh with a triangle grid for queries.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<V3>,
    faces: Vec<[usize; 3]>,
    bounds: Aabb,
    grid: UniformGrid,
}

impl TriMesh {
    pub fn vertices(&self) -> &[V3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    fn corners(&self, face: u32) -> (&V3, &V3, &V3) {
        let f = &self.faces[face as usize];
        (&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]])
    }

    fn squared_distance_to_face(&self, p: &V3, face: u32) -> f64 {
        let (a, b, c) = self.corners(face);
        triangle::squared_distance(p, a, b, c)
    }
}

pub fn build_mesh(vertices: Vec<V3>, faces: Vec<[usize; 3]>) -> Result<TriMesh, MeshError> {
    if faces.is_empty() {
        return Err(MeshError::Empty);
    }
    for (fi, f) in faces.iter().enumerate() {
        if let Some(&index) = f.iter().find(|&&i| i >= vertices.len()) {
            return Err(MeshError::IndexOutOfRange {
                face: fi,
                index,
                count: vertices.len(),
            });
        }
    }
    if let Some(edge) = find_non_manifold_edge(&faces) {
        return Err(MeshError::Topology(edge));
    }
    let mut boxes = Vec::with_capacity(faces.len());
    for (fi, f) in faces.iter().enumerate() {
        let (a, b, c) = (&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        if area.is_nan() || area <= MIN_FACE_AREA {
            return Err(MeshError::Degenerate { face: fi, area });
        }
        boxes.push(Aabb::from_points([a, b, c]));
    }
    let bounds = boxes.iter().fold(Aabb::empty(), |acc, b| acc.union(b));
    let grid = UniformGrid::build(&boxes);
    Ok(TriMesh {
        vertices,
        faces,
        bounds,
        grid,
    })
}

const BASE_DIRECTION: [f64; 3] = [1.0, 0.6180339887498949, 0.3819660112501051];

/// The fixed ray direction followed by the retry directions, each a seeded
/// perturbation of the base.
static DIRECTIONS: LazyLock<Vec<V3>> = LazyLock::new(|| {
    let base = V3::from(BASE_DIRECTION).normalize();
    let mut dirs = vec![base];
    for k in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let jitter = V3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        dirs.push((base + jitter * 0.5).normalize());
    }
    dirs
});

fn crossing_parity(mesh: &TriMesh, p: &V3, dir: &V3) -> Option<bool> {
    let mut odd = false;
    for face in mesh.grid.ray_candidates(p, dir) {
        let (a, b, c) = mesh.corners(face);
        match triangle::ray_triangle(p, dir, a, b, c) {
            RayHit::Miss => {}
            RayHit::Hit => odd = !odd,
            RayHit::Ambiguous => return None,
        }
    }
    Some(odd)
}

fn winding_number(mesh: &TriMesh, p: &V3) -> f64 {
    let total: f64 = (0..mesh.faces.len() as u32)
        .map(|f| {
            let (a, b, c) = mesh.corners(f);
            triangle::solid_angle(p, a, b, c)
        })
        .sum();
    total / (4.0 * PI)
}

fn on_surface(mesh: &TriMesh, p: &V3) -> bool {
    let tol = SURFACE_TOLERANCE * SURFACE_TOLERANCE;
    mesh.grid
        .items(mesh.grid.clamped(p))
        .iter()
        .any(|&f| mesh.squared_distance_to_face(p, f) <= tol)
}

/// Odd-parity inside test for a single point.
pub fn point_inside(mesh: &TriMesh, p: &V3) -> bool {
    if !mesh.bounds.contains(p) || on_surface(mesh, p) {
        return false;
    }
    DIRECTIONS
        .iter()
        .find_map(|dir| crossing_parity(mesh, p, dir))
        .unwrap_or_else(|| winding_number(mesh, p).abs() > 0.5)
}

/// Inside flags for every point; points on the surface are outside.
pub fn inside_mask(points: &[V3], mesh: &TriMesh) -> Vec<bool> {
    points.par_iter().map(|p| point_inside(mesh, p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearestVertices {
    pub distances: Vec<f64>,
    pub indices: Vec<usize>,
}

/// Point-set lookup structure, reusable across many queries.
#[derive(Debug, Clone)]
pub struct VertexSet<'a> {
    points: &'a [V3],
    grid: UniformGrid,
}

impl<'a> VertexSet<'a> {
    pub fn new(points: &'a [V3]) -> Result<Self, QueryError> {
        if points.is_empty() {
            return Err(QueryError::EmptyVertexSet);
        }
        let boxes: Vec<Aabb> = points.iter().map(|p| Aabb { min: *p, max: *p }).collect();
        Ok(Self {
            points,
            grid: UniformGrid::build(&boxes),
        })
    }

    /// Distance to, and index of, the closest set point (lowest index on ties).
    pub fn nearest(&self, p: &V3) -> (f64, usize) {
        let (d2, id) = self
            .grid
            .nearest(p, |i| (self.points[i as usize] - p).norm_squared())
            .expect("vertex set is non-empty");
        (d2.sqrt(), id as usize)
    }
}

pub fn nearest_vertex_distance(points: &[V3], vertex_set: &[V3]) -> Result<NearestVertices, QueryError> {
    let set = VertexSet::new(vertex_set)?;
    let (distances, indices) = points.par_iter().map(|p| set.nearest(p)).unzip();
    Ok(NearestVertices { distances, indices })
}

/// Distance from `p` to the closest point of any face.
pub fn surface_distance(mesh: &TriMesh, p: &V3) -> f64 {
    let (d2, _) = mesh
        .grid
        .nearest(p, |f| mesh.squared_distance_to_face(p, f))
        .expect("mesh has faces");
    d2.sqrt()
}

pub fn point_to_surface_distance(points: &[V3], mesh: &TriMesh) -> Vec<f64> {
    points.par_iter().map(|p| surface_distance(mesh, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollisionReport {
    pub inside_mask_right_in_left: Vec<bool>,
    pub inside_mask_left_in_right: Vec<bool>,
    pub max_depth: f64,
    pub penetrating_count: usize,
    /// Right-hand vertex index to its distance from the left surface.
    pub per_vertex_depth: BTreeMap<usize, f64>,
}

pub const REPORT_CSV_HEADER: &str = "frame,penetrating_count,max_depth_mm,vertex_ids";

impl CollisionReport {
    /// One CSV row; penetrating vertex ids are `;`-separated in ascending order.
    pub fn csv_record(&self, frame: usize) -> String {
        let ids: Vec<String> = self.per_vertex_depth.keys().map(|i| i.to_string()).collect();
        format!(
            "{frame},{},{:.6},{}",
            self.penetrating_count,
            self.max_depth * 1000.0,
            ids.join(";")
        )
    }
}

/// Penetration of the right mesh's vertices into the left mesh, with depths
/// measured to the left surface. The reverse mask is kept for diagnostics.
pub fn penetration_report(mesh_right: &TriMesh, mesh_left: &TriMesh) -> CollisionReport {
    let right_in_left = inside_mask(mesh_right.vertices(), mesh_left);
    let left_in_right = inside_mask(mesh_left.vertices(), mesh_right);
    let penetrating: Vec<usize> = (0..right_in_left.len()).filter(|&i| right_in_left[i]).collect();
    let depths: Vec<f64> = penetrating
        .par_iter()
        .map(|&i| surface_distance(mesh_left, &mesh_right.vertices[i]))
        .collect();
    let max_depth = depths.iter().fold(0.0f64, |m, &d| m.max(d));
    CollisionReport {
        inside_mask_right_in_left: right_in_left,
        inside_mask_left_in_right: left_in_right,
        max_depth,
        penetrating_count: penetrating.len(),
        per_vertex_depth: penetrating.into_iter().zip(depths).collect(),
    }
}
