//! Rigid transforms, poses, clip planes and perspective projections.
//!
//! Conventions: right-handed, meters, +Y up. A camera looks down its local
//! −Z axis with +X to the right. Rotations given as yaw-pitch-roll degrees
//! compose as `Ry(yaw) · Rx(pitch) · Rz(roll)`.

use std::ops::Mul;

use nalgebra::{Isometry3, Matrix4, Point3, Translation3, Unit, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;

/// A rigid transform (rotation followed by translation).
///
/// Backed by an isometry so composition and inversion can never leave the
/// rigid group; [`Transform::to_matrix`] gives the homogeneous 4×4 form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform(Isometry3<f64>);

impl Default for Transform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform(Isometry3::from_parts(
        Translation3::new(0.0, 0.0, 0.0),
        UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(1.0, 0.0, 0.0, 0.0)),
    ));

    pub fn from_parts(translation: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Self(Isometry3::from_parts(translation.into(), rotation))
    }

    pub fn translation(offset: Vec3) -> Self {
        Self::from_parts(offset, UnitQuaternion::identity())
    }

    pub fn rotation_about(axis: Vec3, angle: f64) -> Self {
        Self::from_parts(
            Vec3::zeros(),
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
        )
    }

    pub fn from_position_ypr_deg(position: [f64; 3], ypr_deg: [f64; 3]) -> Self {
        Self::from_parts(Vec3::from(position), rotation_from_ypr_deg(ypr_deg))
    }

    pub fn isometry(&self) -> &Isometry3<f64> {
        &self.0
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    pub fn offset(&self) -> Vec3 {
        self.0.translation.vector
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn then(&self, next: &Transform) -> Self {
        *next * *self
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.0.transform_point(&Point3::from(*p)).coords
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.0.transform_vector(v)
    }

    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        Pose {
            position: self.apply_point(&pose.position),
            orientation: self.0.rotation * pose.orientation,
        }
    }

    pub fn apply_plane(&self, plane: &Plane) -> Plane {
        let normal = self.apply_vector(&plane.normal);
        let point = self.apply_point(&(plane.normal * -plane.offset));
        Plane::from_point_normal(point, normal)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        self.0.to_homogeneous()
    }

    /// True when the upper-left 3×3 block is orthonormal with determinant +1.
    pub fn is_rigid(&self, tol: f64) -> bool {
        let m = self.to_matrix();
        let r = m.fixed_view::<3, 3>(0, 0).into_owned();
        let gram = r.transpose() * r;
        (gram - nalgebra::Matrix3::identity()).abs().max() <= tol
            && (r.determinant() - 1.0).abs() <= tol
            && m[(3, 0)] == 0.0
            && m[(3, 1)] == 0.0
            && m[(3, 2)] == 0.0
            && m[(3, 3)] == 1.0
    }
}

impl Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        Transform(self.0 * rhs.0)
    }
}

pub fn rotation_from_ypr_deg(ypr_deg: [f64; 3]) -> UnitQuaternion<f64> {
    let [yaw, pitch, roll] = ypr_deg.map(f64::to_radians);
    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), pitch)
        * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), roll)
}

/// Position plus orientation. The local frame looks down −Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }
}

impl Pose {
    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_position_ypr_deg(position: [f64; 3], ypr_deg: [f64; 3]) -> Self {
        Self::new(Vec3::from(position), rotation_from_ypr_deg(ypr_deg))
    }

    /// Pose at `position` looking along `forward` with +Y kept up.
    pub fn looking_along(position: Vec3, forward: Vec3) -> Self {
        let f = forward.normalize();
        let yaw = (-f.x).atan2(-f.z);
        let pitch = f.y.clamp(-1.0, 1.0).asin();
        let orientation = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw)
            * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), pitch);
        Self::new(position, orientation)
    }

    /// Local → world.
    pub fn to_transform(&self) -> Transform {
        Transform::from_parts(self.position, self.orientation)
    }

    /// World → local (the view transform of a camera at this pose).
    pub fn view_transform(&self) -> Transform {
        self.to_transform().inverse()
    }

    pub fn forward(&self) -> Vec3 {
        self.orientation * -Vec3::z()
    }

    pub fn right(&self) -> Vec3 {
        self.orientation * Vec3::x()
    }

    pub fn up(&self) -> Vec3 {
        self.orientation * Vec3::y()
    }
}

/// An oriented plane; the kept half-space is `normal · p + offset >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn from_point_normal(point: Vec3, normal: Vec3) -> Self {
        let normal = normal.normalize();
        Self {
            normal,
            offset: -normal.dot(&point),
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }
}

/// Symmetric perspective frustum with an optional extra (oblique) near clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub fov_y: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
    /// View-space plane; geometry on its negative side is clipped away.
    pub oblique: Option<Plane>,
}

impl Projection {
    pub fn new(fov_y: f64, aspect: f64, near: f64, far: f64) -> Self {
        Self {
            fov_y,
            aspect,
            near,
            far,
            oblique: None,
        }
    }

    pub fn with_oblique(mut self, plane: Option<Plane>) -> Self {
        self.oblique = plane;
        self
    }

    pub fn tan_half_y(&self) -> f64 {
        (self.fov_y * 0.5).tan()
    }

    pub fn tan_half_x(&self) -> f64 {
        self.tan_half_y() * self.aspect
    }

    /// Inward-facing view-space planes of the frustum: near, far, left,
    /// right, bottom, top, then the oblique plane when present.
    pub fn frustum_planes(&self) -> Vec<Plane> {
        let tx = self.tan_half_x();
        let ty = self.tan_half_y();
        let mut planes = vec![
            Plane {
                normal: -Vec3::z(),
                offset: -self.near,
            },
            Plane {
                normal: Vec3::z(),
                offset: self.far,
            },
            Plane {
                normal: Vec3::new(1.0, 0.0, -tx).normalize(),
                offset: 0.0,
            },
            Plane {
                normal: Vec3::new(-1.0, 0.0, -tx).normalize(),
                offset: 0.0,
            },
            Plane {
                normal: Vec3::new(0.0, 1.0, -ty).normalize(),
                offset: 0.0,
            },
            Plane {
                normal: Vec3::new(0.0, -1.0, -ty).normalize(),
                offset: 0.0,
            },
        ];
        planes.extend(self.oblique);
        planes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn composition_and_inverse_stay_rigid() {
        let a = Transform::from_position_ypr_deg([1.0, 2.0, 3.0], [30.0, 10.0, -5.0]);
        let b = Transform::from_position_ypr_deg([-4.0, 0.5, 9.0], [170.0, -40.0, 12.0]);
        assert!((a * b).is_rigid(1e-9));
        assert!(a.inverse().is_rigid(1e-9));
        let round = a * a.inverse();
        assert!((round.to_matrix() - Matrix4::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn yaw_turns_forward_left() {
        let pose = Pose::from_position_ypr_deg([0.0; 3], [90.0, 0.0, 0.0]);
        assert!((pose.forward() - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        let half = Pose::from_position_ypr_deg([0.0; 3], [180.0, 0.0, 0.0]);
        assert!((half.forward() - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn looking_along_recovers_direction() {
        for dir in [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.3, -0.2, -1.0),
            Vec3::new(-2.0, 0.5, 1.0),
        ] {
            let pose = Pose::looking_along(Vec3::zeros(), dir);
            assert!((pose.forward() - dir.normalize()).norm() < 1e-12);
            assert!(pose.right().y.abs() < 1e-12);
        }
    }

    #[test]
    fn plane_transform_keeps_side() {
        let plane = Plane::from_point_normal(Vec3::new(0.0, 0.0, 1.0), Vec3::z());
        let t = Transform::rotation_about(Vec3::y(), FRAC_PI_2) * Transform::translation(Vec3::x());
        let moved = t.apply_plane(&plane);
        let p = Vec3::new(0.3, 0.1, 2.0);
        assert!(
            (moved.signed_distance(&t.apply_point(&p)) - plane.signed_distance(&p)).abs() < 1e-12
        );
        let _ = PI;
    }
}
