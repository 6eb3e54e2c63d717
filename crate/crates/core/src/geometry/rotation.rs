//! Continuous 6D rotation parameterization.
//!
//! A rotation is stored as the first two columns `a1`, `a2` of a (possibly
//! unnormalized) matrix; the orthonormal frame is recovered by normalizing
//! `a1`, removing its component from `a2`, and completing with a cross product.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{Real, M3, V3};

/// Relative tolerance under which the two columns count as colinear.
const COLINEAR_TOL: f64 = 1e-9;

/// Generic orthonormalization; returns a row-major matrix whose columns are
/// `b1, b2, b3`.
pub fn rot6d_to_matrix_generic<T: Real>(r: &[T; 6]) -> Result<M3<T>> {
    let a1 = V3::new(r[0], r[1], r[2]);
    let a2 = V3::new(r[3], r[4], r[5]);
    let n1 = a1.norm();
    if !(n1.value() > 0.0) || !n1.value().is_finite() {
        return Err(Error::InvalidParameter(
            "rot6 first column is zero or non-finite".into(),
        ));
    }
    let b1 = a1.scaled(T::cst(1.0) / n1);
    let u = a2 - b1.scaled(b1.dot(&a2));
    let nu = u.norm();
    let n2 = a2.norm().value();
    if !(nu.value() > COLINEAR_TOL * n2) || !nu.value().is_finite() {
        return Err(Error::InvalidParameter(
            "rot6 columns are zero or colinear".into(),
        ));
    }
    let b2 = u.scaled(T::cst(1.0) / nu);
    let b3 = b1.cross(&b2);
    Ok([[b1.x, b2.x, b3.x], [b1.y, b2.y, b3.y], [b1.z, b2.z, b3.z]])
}

/// Maps a 6D rotation representation to a proper rotation matrix.
pub fn rot6d_to_matrix(r: &[f64; 6]) -> Result<Matrix3<f64>> {
    let m = rot6d_to_matrix_generic(r)?;
    Ok(Matrix3::from_fn(|i, j| m[i][j]))
}

/// The canonical 6D representation of a rotation matrix (its first two columns).
pub fn matrix_to_rot6d(m: &Matrix3<f64>) -> [f64; 6] {
    [
        m[(0, 0)],
        m[(1, 0)],
        m[(2, 0)],
        m[(0, 1)],
        m[(1, 1)],
        m[(2, 1)],
    ]
}

/// Haar-uniform random rotation (normalized Gaussian quaternion).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q = nalgebra::Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if q.norm() > 1e-6 {
            return UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .into_inner();
        }
    }
}

/// Geodesic angle between two rotations, radians.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let c = ((a.transpose() * b).trace() - 1.0) / 2.0;
    c.clamp(-1.0, 1.0).acos()
}

/// Rotation by `angle` radians about `axis`.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}
