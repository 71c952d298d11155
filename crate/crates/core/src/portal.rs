//! Portal geometry: the teleport transform between partners, head-center
//! crossing detection and the portal box mesh.

use std::f64::consts::PI;

use thiserror::Error;

use crate::math::{Plane, Pose, Transform, Vec3};
use crate::scene::{Material, Mesh, Portal, PortalId, Rgba, Triangle};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PortalError {
    #[error("portal {src} is not partnered with portal {dst}")]
    NotPartnered { src: PortalId, dst: PortalId },
    #[error("portal {0} has non-positive box depth")]
    NonPositiveDepth(PortalId),
}

/// Tolerance for the quad extent test of a crossing, in meters.
pub const QUAD_TOLERANCE: f64 = 1e-9;

/// How far behind the destination plane the portal-view clip plane sits.
pub const CLIP_PLANE_OFFSET: f64 = 1e-4;

/// Maps coordinates around `src` to the corresponding coordinates around
/// `dst`: `dst.pose · Ry(π) · src.pose⁻¹`.
///
/// A viewer in front of `src` lands behind `dst`, looking out of its front.
pub fn portal_view_transform(src: &Portal, dst: &Portal) -> Result<Transform, PortalError> {
    if src.partner != dst.id {
        return Err(PortalError::NotPartnered {
            src: src.id,
            dst: dst.id,
        });
    }
    Ok(dst.pose * Transform::rotation_about(Vec3::y(), PI) * src.pose.inverse())
}

/// The head center crossing a portal plane from front to back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub portal: PortalId,
    /// Segment parameter of the plane intersection, in [0, 1].
    pub t: f64,
    /// Intersection point in world coordinates.
    pub entry: Vec3,
}

/// Detects a front-to-back crossing of `portal` by the segment `prev → new`.
///
/// A point exactly on the plane has not crossed yet, so the segment must
/// start at local z ≥ 0 and end at z < 0. Disabled portals never fire.
pub fn detect_crossing(prev: &Vec3, new: &Vec3, portal: &Portal) -> Option<CrossingEvent> {
    if !portal.enabled {
        return None;
    }
    let a = portal.to_local(prev);
    let b = portal.to_local(new);
    if !(a.z >= 0.0 && b.z < 0.0) {
        return None;
    }
    let t = a.z / (a.z - b.z);
    let local = a + (b - a) * t;
    let inside = local.x.abs() <= portal.width * 0.5 + QUAD_TOLERANCE
        && local.y.abs() <= portal.height * 0.5 + QUAD_TOLERANCE;
    inside.then(|| CrossingEvent {
        portal: portal.id,
        t,
        entry: prev + (new - prev) * t,
    })
}

/// Moves a head pose from `src` to its partner `dst`.
pub fn teleport(head: &Pose, src: &Portal, dst: &Portal) -> Result<Pose, PortalError> {
    Ok(portal_view_transform(src, dst)?.apply_pose(head))
}

/// True iff `eye` lies strictly inside the box volume behind the quad.
pub fn eye_inside_box(eye: &Vec3, portal: &Portal) -> bool {
    let p = portal.to_local(eye);
    p.x.abs() < portal.width * 0.5
        && p.y.abs() < portal.height * 0.5
        && p.z < 0.0
        && p.z > -portal.box_depth
}

/// The eight corners of the box volume in world space; the first four are
/// the quad.
pub fn box_corners(portal: &Portal) -> [Vec3; 8] {
    let (hw, hh, d) = (portal.width * 0.5, portal.height * 0.5, portal.box_depth);
    [
        Vec3::new(-hw, -hh, 0.0),
        Vec3::new(hw, -hh, 0.0),
        Vec3::new(hw, hh, 0.0),
        Vec3::new(-hw, hh, 0.0),
        Vec3::new(-hw, -hh, -d),
        Vec3::new(hw, -hh, -d),
        Vec3::new(hw, hh, -d),
        Vec3::new(-hw, hh, -d),
    ]
    .map(|c| portal.pose.apply_point(&c))
}

/// Base color of portal surfaces; only visible where the view has not been
/// composited in.
pub const PORTAL_SURFACE_COLOR: Rgba = Rgba::rgb(255, 0, 255);

/// Box mesh for a portal, extruded `box_depth` behind the quad.
///
/// The front face (the quad itself) faces out of the portal; the back and
/// side faces face into the box. With back-face culling, an eye in front
/// sees the box interior through the quad, while an eye that has slipped
/// behind the plane sees the interior walls and looks back out through the
/// culled front face.
pub fn make_portal_box(portal: &Portal) -> Result<Mesh, PortalError> {
    if portal.box_depth.is_nan() || portal.box_depth <= 0.0 {
        return Err(PortalError::NonPositiveDepth(portal.id));
    }
    let [a, b, c, d, e, f, g, h] = box_corners(portal);
    let color = PORTAL_SURFACE_COLOR;
    // Quads are listed counter-clockwise as seen from their front side.
    let quads = [
        [a, b, c, d], // front, seen from outside
        [e, f, g, h], // back, seen from inside
        [a, e, h, d], // left side
        [b, c, g, f], // right side
        [a, b, f, e], // bottom
        [d, h, g, c], // top
    ];
    let triangles = quads
        .iter()
        .flat_map(|&[p, q, r, s]| {
            [
                Triangle::new(p, q, r, color),
                Triangle::new(p, r, s, color),
            ]
        })
        .collect();
    Ok(portal_mesh(portal, triangles))
}

/// Plane-only portal: just the quad, facing out of the portal.
pub fn make_portal_plane(portal: &Portal) -> Mesh {
    let [a, b, c, d] = portal.corners();
    let color = PORTAL_SURFACE_COLOR;
    portal_mesh(
        portal,
        vec![
            Triangle::new(a, b, c, color),
            Triangle::new(a, c, d, color),
        ],
    )
}

fn portal_mesh(portal: &Portal, triangles: Vec<Triangle>) -> Mesh {
    Mesh::new(triangles, portal.space).with_material(Material::PortalSurface(portal.id))
}

/// Color of portals that are drawn closed (disabled, or seen through
/// another portal).
pub const PLACEHOLDER_COLOR: Rgba = Rgba::rgb(36, 36, 44);

/// Opaque stand-in quad for a portal that is not rendered through.
pub fn make_placeholder(portal: &Portal) -> Mesh {
    let [a, b, c, d] = portal.corners();
    let color = PLACEHOLDER_COLOR;
    Mesh::new(
        vec![
            Triangle::new(a, b, c, color),
            Triangle::new(a, c, d, color),
        ],
        portal.space,
    )
}

/// World-space plane that keeps geometry in front of `dst`, shifted
/// slightly behind it so the destination quad itself is never clipped.
pub fn destination_clip_plane(dst: &Portal) -> Plane {
    let n = dst.normal();
    Plane::from_point_normal(dst.center() - n * CLIP_PLANE_OFFSET, n)
}
