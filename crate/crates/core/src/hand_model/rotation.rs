//! Axis-angle exponential map and its derivative.

use nalgebra::{Matrix3, Vector3};

/// Below this angle the trigonometric coefficients switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-4;

/// Skew-symmetric cross-product matrix of `v`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Coefficients `a = sin θ/θ`, `b = (1 - cos θ)/θ²` and their radial
/// derivatives `a'/θ`, `b'/θ`.
fn coefficients(theta: f64) -> (f64, f64, f64, f64) {
    let t2 = theta * theta;
    if theta < SMALL_ANGLE {
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            -1.0 / 3.0 + t2 / 30.0,
            -1.0 / 12.0 + t2 / 180.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let t3 = t2 * theta;
        (
            s / theta,
            (1.0 - c) / t2,
            (theta * c - s) / t3,
            (theta * s - 2.0 * (1.0 - c)) / (t2 * t2),
        )
    }
}

/// Rotation matrix for an axis-angle vector (Rodrigues' formula).
///
/// The zero vector maps to the identity; small angles use a series
/// expansion so the result stays orthonormal to machine precision.
pub fn rodrigues(axis_angle: &Vector3<f64>) -> Matrix3<f64> {
    let (a, b, _, _) = coefficients(axis_angle.norm());
    let k = hat(axis_angle);
    Matrix3::identity() + k * a + k * k * b
}

/// Rotation matrix together with its partial derivatives with respect to
/// the three axis-angle components.
pub fn rodrigues_with_derivatives(axis_angle: &Vector3<f64>) -> (Matrix3<f64>, [Matrix3<f64>; 3]) {
    let (a, b, da, db) = coefficients(axis_angle.norm());
    let k = hat(axis_angle);
    let k2 = k * k;
    let rot = Matrix3::identity() + k * a + k2 * b;
    let derivs = [0, 1, 2].map(|i| {
        let e = hat(&Vector3::ith(i, 1.0));
        let vi = axis_angle[i];
        k * (da * vi) + e * a + k2 * (db * vi) + (e * k + k * e) * b
    });
    (rot, derivs)
}
