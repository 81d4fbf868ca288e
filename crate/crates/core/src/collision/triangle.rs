//! Exact single-triangle primitives.

use nalgebra::Vector3;

type V3 = Vector3<f64>;

/// Barycentric tolerance below which a ray hit counts as grazing an edge or vertex.
pub const BARYCENTRIC_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayHit {
    Miss,
    Hit,
    /// The ray passes too close to an edge or vertex, or runs inside the
    /// triangle's plane, for the crossing to be counted reliably.
    Ambiguous,
}

/// Determinant-based ray/triangle test for the ray `origin + t * dir`, `t > 0`.
pub fn ray_triangle(origin: &V3, dir: &V3, a: &V3, b: &V3, c: &V3) -> RayHit {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-12 * scale {
        let normal = e1.cross(&e2);
        let offset = (origin - a).dot(&normal) / normal.norm();
        return if offset.abs() <= 1e-12 * (1.0 + e1.norm()) {
            RayHit::Ambiguous
        } else {
            RayHit::Miss
        };
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    let t = e2.dot(&q) * inv;
    let w = 1.0 - u - v;
    if t <= 0.0 || u < -BARYCENTRIC_EPS || v < -BARYCENTRIC_EPS || w < -BARYCENTRIC_EPS {
        return RayHit::Miss;
    }
    if u <= BARYCENTRIC_EPS || v <= BARYCENTRIC_EPS || w <= BARYCENTRIC_EPS {
        return RayHit::Ambiguous;
    }
    RayHit::Hit
}

/// Closest point to `p` on triangle `abc`, following the Voronoi-region walk.
pub fn closest_point(p: &V3, a: &V3, b: &V3, c: &V3) -> V3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn squared_distance(p: &V3, a: &V3, b: &V3, c: &V3) -> f64 {
    (closest_point(p, a, b, c) - p).norm_squared()
}

/// Signed solid angle subtended by triangle `abc` at `p`.
pub fn solid_angle(p: &V3, a: &V3, b: &V3, c: &V3) -> f64 {
    let (a, b, c) = (a - p, b - p, c - p);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let numer = a.dot(&b.cross(&c));
    let denom = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
    2.0 * numer.atan2(denom)
}
