//! Oriented 3D boxes, rigid poses and bird's-eye-view overlap.
//!
//! Boxes live in either the sensor (LiDAR) frame or the world frame. Poses map
//! sensor coordinates into the world; yaw follows the pose's ground-plane
//! heading, so pitch and roll of the ego vehicle are ignored for box
//! orientation. Overlap is computed on the ground plane only: each box becomes
//! a rotated rectangle, the intersection is obtained by convex polygon clipping
//! and its area by the shoelace formula.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("box dimensions must be strictly positive and finite (l={length}, w={width}, h={height})")]
    InvalidDimensions { length: f64, width: f64, height: f64 },
    #[error("box center and yaw must be finite")]
    NonFinite,
    #[error("pose rotation is not orthonormal (max |RᵀR − I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("pose rotation has determinant {det}, expected +1")]
    NotProperRotation { det: f64 },
    #[error("expected a box in the {expected:?} frame, got {actual:?}")]
    FrameMismatch { expected: Frame, actual: Frame },
}

/// Coordinate frame a box is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Lidar,
    World,
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let wrapped = yaw.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Smallest signed difference `a - b` between two angles.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_yaw(a - b)
}

/// An oriented 3D box. `yaw` rotates about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
    pub frame: Frame,
}

impl Box3D {
    pub fn new(
        center: [f64; 3],
        length: f64,
        width: f64,
        height: f64,
        yaw: f64,
        frame: Frame,
    ) -> Result<Self, GeometryError> {
        let b = Box3D {
            cx: center[0],
            cy: center[1],
            cz: center[2],
            length,
            width,
            height,
            yaw: normalize_yaw(yaw),
            frame,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let dims_ok = [self.length, self.width, self.height]
            .iter()
            .all(|d| d.is_finite() && *d > 0.0);
        if !dims_ok {
            return Err(GeometryError::InvalidDimensions {
                length: self.length,
                width: self.width,
                height: self.height,
            });
        }
        if ![self.cx, self.cy, self.cz, self.yaw].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(self.cx, self.cy, self.cz)
    }

    /// Ground-plane center.
    pub fn xy(&self) -> [f64; 2] {
        [self.cx, self.cy]
    }

    pub fn bev_area(&self) -> f64 {
        self.length * self.width
    }

    /// Ground-plane footprint corners in counter-clockwise order.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        let local = [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]];
        local.map(|[u, v]| [self.cx + c * u - s * v, self.cy + s * u + c * v])
    }
}

/// Rigid transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let pose = Pose {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::from(t),
        }
    }

    /// Planar pose: rotation `yaw` about the vertical axis, then translation.
    pub fn from_yaw(yaw: f64, t: [f64; 3]) -> Self {
        let (s, c) = yaw.sin_cos();
        Pose {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::from(t),
        }
    }

    /// Largest absolute entry of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let deviation = self.orthonormality_error();
        if !(deviation <= ORTHONORMAL_TOL) || !self.translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NotOrthonormal { deviation });
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(GeometryError::NotProperRotation { det });
        }
        Ok(())
    }

    /// Projects the rotation onto the nearest proper rotation (polar
    /// decomposition via SVD). Fails for reflections.
    pub fn orthonormalized(&self) -> Result<Self, GeometryError> {
        let svd = SVD::new(self.rotation, true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => {
                return Err(GeometryError::NotOrthonormal {
                    deviation: f64::NAN,
                })
            }
        };
        let rotation = u * v_t;
        let det = rotation.determinant();
        if det < 0.0 {
            return Err(GeometryError::NotProperRotation { det });
        }
        Pose::new(rotation, self.translation)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Ground-plane heading of the rotation.
    pub fn heading(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Maps a box through this pose and tags the result with `target`,
    /// without checking the source frame.
    pub fn map_box(&self, b: &Box3D, target: Frame) -> Box3D {
        let c = self.apply_point(&b.center());
        Box3D {
            cx: c.x,
            cy: c.y,
            cz: c.z,
            length: b.length,
            width: b.width,
            height: b.height,
            yaw: normalize_yaw(b.yaw + self.heading()),
            frame: target,
        }
    }
}

/// Moves a sensor-frame box into the world frame.
pub fn transform_box(b: &Box3D, pose: &Pose) -> Result<Box3D, GeometryError> {
    if b.frame != Frame::Lidar {
        return Err(GeometryError::FrameMismatch {
            expected: Frame::Lidar,
            actual: b.frame,
        });
    }
    pose.validate()?;
    Ok(pose.map_box(b, Frame::World))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_line_intersection(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    // p + t (q − p) on line ab
    let dp = [q[0] - p[0], q[1] - p[1]];
    let db = [b[0] - a[0], b[1] - a[1]];
    let denom = dp[0] * db[1] - dp[1] * db[0];
    if denom == 0.0 {
        return p;
    }
    let t = ((a[0] - p[0]) * db[1] - (a[1] - p[1]) * db[0]) / denom;
    [p[0] + t * dp[0], p[1] + t * dp[1]]
}

/// Sutherland–Hodgman clipping of `subject` against the convex CCW polygon
/// `clip`.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        let mut prev_inside = cross(a, b, prev) >= 0.0;
        for &cur in &input {
            let cur_inside = cross(a, b, cur) >= 0.0;
            if cur_inside {
                if !prev_inside {
                    output.push(segment_line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_inside {
                output.push(segment_line_intersection(prev, cur, a, b));
            }
            prev = cur;
            prev_inside = cur_inside;
        }
    }
    output
}

/// Shoelace area (absolute value).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice.abs()
}

/// Intersection-over-union of the ground-plane footprints. Height is ignored.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    // Cheap reject on bounding circles.
    let reach = 0.5 * (a.length.hypot(a.width) + b.length.hypot(b.width));
    if (a.cx - b.cx).hypot(a.cy - b.cy) > reach {
        return 0.0;
    }
    let inter = polygon_area(&clip_convex(&a.bev_corners(), &b.bev_corners()));
    let union = a.bev_area() + b.bev_area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, l: f64, w: f64, yaw: f64) -> Box3D {
        Box3D::new([x, y, 0.0], l, w, 1.5, yaw, Frame::Lidar).unwrap()
    }

    fn axis_aligned_iou(a: &Box3D, b: &Box3D) -> f64 {
        let ix = ((a.cx + a.length / 2.0).min(b.cx + b.length / 2.0)
            - (a.cx - a.length / 2.0).max(b.cx - b.length / 2.0))
        .max(0.0);
        let iy = ((a.cy + a.width / 2.0).min(b.cy + b.width / 2.0)
            - (a.cy - a.width / 2.0).max(b.cy - b.width / 2.0))
        .max(0.0);
        let inter = ix * iy;
        inter / (a.bev_area() + b.bev_area() - inter)
    }

    #[test]
    fn yaw_normalization_range() {
        assert_eq!(normalize_yaw(PI), PI);
        assert!((normalize_yaw(-PI) - PI).abs() < 1e-15);
        assert!((normalize_yaw(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(normalize_yaw(0.25), 0.25);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(Box3D::new([0.0; 3], 0.0, 1.0, 1.0, 0.0, Frame::Lidar).is_err());
        assert!(Box3D::new([0.0; 3], 1.0, -1.0, 1.0, 0.0, Frame::Lidar).is_err());
        assert!(Box3D::new([0.0; 3], 1.0, 1.0, f64::NAN, 0.0, Frame::Lidar).is_err());
        assert!(Box3D::new([f64::INFINITY, 0.0, 0.0], 1.0, 1.0, 1.0, 0.0, Frame::Lidar).is_err());
    }

    #[test]
    fn identity_pose_only_retags() {
        let b = bx(1.0, -2.0, 4.0, 1.8, 0.3);
        let w = transform_box(&b, &Pose::identity()).unwrap();
        assert_eq!(w.frame, Frame::World);
        assert_eq!((w.cx, w.cy, w.cz, w.yaw), (b.cx, b.cy, b.cz, b.yaw));
        assert_eq!((w.length, w.width, w.height), (b.length, b.width, b.height));
    }

    #[test]
    fn translation_is_additive() {
        let b = bx(1.0, 2.0, 4.0, 1.8, 0.0);
        let w = transform_box(&b, &Pose::from_translation([10.0, 0.0, 0.0])).unwrap();
        assert_eq!((w.cx, w.cy, w.cz), (11.0, 2.0, 0.0));
    }

    #[test]
    fn quarter_turn_rotates_center_and_yaw() {
        let b = bx(1.0, 0.0, 4.0, 1.8, 0.0);
        let w = transform_box(&b, &Pose::from_yaw(PI / 2.0, [0.0; 3])).unwrap();
        assert!(w.cx.abs() < 1e-12);
        assert!((w.cy - 1.0).abs() < 1e-12);
        assert!((w.yaw - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn transform_rejects_world_boxes_and_bad_poses() {
        let mut b = bx(0.0, 0.0, 1.0, 1.0, 0.0);
        let skewed = Pose {
            rotation: Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::zeros(),
        };
        assert!(matches!(
            transform_box(&b, &skewed),
            Err(GeometryError::NotOrthonormal { .. })
        ));
        let reflection = Pose {
            rotation: Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::zeros(),
        };
        assert!(matches!(
            transform_box(&b, &reflection),
            Err(GeometryError::NotProperRotation { .. })
        ));
        b.frame = Frame::World;
        assert!(matches!(
            transform_box(&b, &Pose::identity()),
            Err(GeometryError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn orthonormalize_repairs_small_drift() {
        let mut p = Pose::from_yaw(0.7, [1.0, 2.0, 3.0]);
        p.rotation[(0, 1)] += 1e-5;
        assert!(p.validate().is_err());
        let fixed = p.orthonormalized().unwrap();
        assert!(fixed.orthonormality_error() < 1e-12);
        assert!((fixed.heading() - 0.7).abs() < 1e-4);
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 4.0, 1.8, 0.4);
        assert!((bev_iou(&a, &a) - 1.0).abs() < 1e-12);

        let u1 = bx(0.0, 0.0, 1.0, 1.0, 0.0);
        let u2 = bx(2.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(bev_iou(&u1, &u2), 0.0);

        let s1 = bx(0.0, 0.0, 2.0, 2.0, 0.0);
        let s2 = bx(1.0, 0.0, 2.0, 2.0, 0.0);
        assert!((bev_iou(&s1, &s2) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_square_inside_square() {
        // A unit square rotated 45° centered in a 2×2 square is fully covered.
        let inner = bx(0.0, 0.0, 1.0, 1.0, PI / 4.0);
        let outer = bx(0.0, 0.0, 2.0, 2.0, 0.0);
        assert!((bev_iou(&inner, &outer) - 0.25).abs() < 1e-12);
    }

    fn arb_box() -> impl Strategy<Value = Box3D> {
        (
            -5.0..5.0f64,
            -5.0..5.0f64,
            -1.0..1.0f64,
            0.3..6.0f64,
            0.3..3.0f64,
            0.3..3.0f64,
            -PI..PI,
        )
            .prop_map(|(x, y, z, l, w, h, yaw)| {
                Box3D::new([x, y, z], l, w, h, yaw, Frame::Lidar).unwrap()
            })
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (-PI..PI, -50.0..50.0f64, -50.0..50.0f64, -2.0..2.0f64)
            .prop_map(|(yaw, x, y, z)| Pose::from_yaw(yaw, [x, y, z]))
    }

    proptest! {
        #[test]
        fn round_trip_through_inverse(b in arb_box(), p in arb_pose()) {
            let w = transform_box(&b, &p).unwrap();
            let back = p.inverse().map_box(&w, Frame::Lidar);
            prop_assert!((back.cx - b.cx).abs() < 1e-9);
            prop_assert!((back.cy - b.cy).abs() < 1e-9);
            prop_assert!((back.cz - b.cz).abs() < 1e-9);
            prop_assert!(angle_diff(back.yaw, b.yaw).abs() < 1e-9);
            prop_assert_eq!((back.length, back.width, back.height), (b.length, b.width, b.height));
        }

        #[test]
        fn iou_is_symmetric(a in arb_box(), b in arb_box()) {
            prop_assert!((bev_iou(&a, &b) - bev_iou(&b, &a)).abs() < 1e-12);
        }

        #[test]
        fn iou_is_pose_invariant(a in arb_box(), b in arb_box(), p in arb_pose()) {
            let before = bev_iou(&a, &b);
            let after = bev_iou(&p.map_box(&a, Frame::World), &p.map_box(&b, Frame::World));
            prop_assert!((before - after).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&before));
        }

        #[test]
        fn iou_matches_axis_aligned_closed_form(
            x in -3.0..3.0f64, y in -3.0..3.0f64,
            l1 in 0.5..4.0f64, w1 in 0.5..4.0f64, l2 in 0.5..4.0f64, w2 in 0.5..4.0f64,
        ) {
            let a = bx(0.0, 0.0, l1, w1, 0.0);
            let b = bx(x, y, l2, w2, 0.0);
            prop_assert!((bev_iou(&a, &b) - axis_aligned_iou(&a, &b)).abs() < 1e-12);
        }
    }
}
