//! Closed reference meshes: subdivided boxes and geodesic spheres.

use std::collections::HashMap;

use nalgebra::Vector3;

type V3 = Vector3<f64>;

/// Axis-aligned box with every face split into an `n x n` grid of quads,
/// two outward-facing triangles each. `n = 1` gives the 8-vertex, 12-triangle box.
pub fn box_mesh(center: V3, half_extent: V3, n: usize) -> (Vec<V3>, Vec<[usize; 3]>) {
    assert!(n >= 1, "box subdivision must be at least 1");
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |lattice: [usize; 3]| -> usize {
        *index.entry(lattice).or_insert_with(|| {
            let p = V3::from_fn(|a, _| center[a] - half_extent[a] + 2.0 * half_extent[a] * lattice[a] as f64 / n as f64);
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let at = |di: usize, dj: usize| {
                        let mut l = [0; 3];
                        l[axis] = side;
                        l[u] = i + di;
                        l[w] = j + dj;
                        l
                    };
                    let (p00, p10, p11, p01) = (vertex(at(0, 0)), vertex(at(1, 0)), vertex(at(1, 1)), vertex(at(0, 1)));
                    // (u, w, axis) is right-handed, so counter-clockwise in (u, w) faces +axis
                    if side == n {
                        faces.push([p00, p10, p11]);
                        faces.push([p00, p11, p01]);
                    } else {
                        faces.push([p00, p11, p10]);
                        faces.push([p00, p01, p11]);
                    }
                }
            }
        }
    }
    (vertices, faces)
}

/// Icosahedron refined `level` times with edge midpoints pushed onto the sphere.
pub fn icosphere(center: V3, radius: f64, level: usize) -> (Vec<V3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut unit: Vec<V3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| V3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = |a: usize, b: usize| {
                *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    unit.push(((unit[a] + unit[b]) / 2.0).normalize());
                    unit.len() - 1
                })
            };
            let (ab, bc, ca) = (mid(f[0], f[1]), mid(f[1], f[2]), mid(f[2], f[0]));
            refined.extend([[f[0], ab, ca], [f[1], bc, ab], [f[2], ca, bc], [ab, bc, ca]]);
        }
        faces = refined;
    }
    let vertices = unit.iter().map(|u| center + u * radius).collect();
    (vertices, faces)
}
