//! World model: spaces, meshes, portals, the stereo rig and the tracked play
//! area.

mod document;
mod fixtures;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Pose, Projection, Transform, Vec3};

pub use document::{MeshDoc, PortalDoc, Primitive, RigDoc, SceneDocument, SpaceDoc, TriangleDoc};
pub use fixtures::{build_test_scene, four_room_scene, transition_scene, TransitionIds};
pub use validate::{validate_impossible_space, SpaceReport, ValidationReport, DEFAULT_SAMPLE_SPACING};

/// Identifies a room. `SpaceId(0)` is reserved for background pixels.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SpaceId(pub u32);

impl SpaceId {
    pub const BACKGROUND: SpaceId = SpaceId(0);
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PortalId(pub u32);

impl fmt::Display for PortalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rgba(pub [u8; 4]);

impl Rgba {
    pub const BLACK: Rgba = Rgba([0, 0, 0, 255]);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Rgba([r, g, b, 255])
    }

    /// Scales the color channels, leaving alpha alone.
    pub fn shade(self, factor: f64) -> Self {
        let [r, g, b, a] = self.0;
        let s = |c: u8| ((c as f64 * factor).round()).clamp(0.0, 255.0) as u8;
        Rgba([s(r), s(g), s(b), a])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [Vec3; 3],
    pub color: Rgba,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3, color: Rgba) -> Self {
        Self {
            vertices: [a, b, c],
            color,
        }
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        (b - a).cross(&(c - a)).norm() * 0.5
    }

    /// Front-face normal for counter-clockwise winding (unnormalized).
    pub fn normal(&self) -> Vec3 {
        let [a, b, c] = &self.vertices;
        (b - a).cross(&(c - a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Material {
    Opaque,
    /// Opaque and walkable; feeds the impossible-space containment check.
    Floor,
    /// Displays the view through the given portal.
    PortalSurface(PortalId),
}

/// Minimum triangle area accepted by the scene loader, in m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Triangle list in world coordinates. Counter-clockwise = front.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub triangles: Vec<Triangle>,
    /// Base color before per-face shading.
    pub color: Rgba,
    pub space: SpaceId,
    pub cull_backfaces: bool,
    pub material: Material,
    /// Shorthand the mesh was generated from, kept for lossless saving.
    pub primitive: Option<Primitive>,
}

impl Mesh {
    pub fn new(triangles: Vec<Triangle>, space: SpaceId) -> Self {
        Self {
            color: triangles.first().map_or(Rgba::BLACK, |t| t.color),
            triangles,
            space,
            cull_backfaces: true,
            material: Material::Opaque,
            primitive: None,
        }
    }

    pub fn from_primitive(primitive: Primitive, color: Rgba, space: SpaceId) -> Self {
        Self {
            triangles: primitive.triangulate(color),
            color,
            space,
            cull_backfaces: true,
            material: Material::Opaque,
            primitive: Some(primitive),
        }
    }

    pub fn with_material(mut self, material: Material) -> Self {
        self.material = material;
        self
    }

    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flat_map(|t| t.vertices.iter());
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub id: SpaceId,
    pub name: String,
}

/// Oriented rectangular opening. Local frame: origin at the quad center,
/// +Z is the front normal (pointing into the space the portal is viewed
/// from), +Y up. The box volume extends `box_depth` behind the quad.
#[derive(Debug, Clone, PartialEq)]
pub struct Portal {
    pub id: PortalId,
    pub partner: PortalId,
    pub space: SpaceId,
    pub pose: Transform,
    pub position: [f64; 3],
    pub yaw_pitch_roll_deg: [f64; 3],
    pub width: f64,
    pub height: f64,
    pub box_depth: f64,
    pub enabled: bool,
}

impl Portal {
    pub fn new(
        id: u32,
        partner: u32,
        space: SpaceId,
        position: [f64; 3],
        yaw_pitch_roll_deg: [f64; 3],
        width: f64,
        height: f64,
    ) -> Self {
        Self {
            id: PortalId(id),
            partner: PortalId(partner),
            space,
            pose: Transform::from_position_ypr_deg(position, yaw_pitch_roll_deg),
            position,
            yaw_pitch_roll_deg,
            width,
            height,
            box_depth: DEFAULT_BOX_DEPTH,
            enabled: true,
        }
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.pose.inverse().apply_point(p)
    }

    pub fn normal(&self) -> Vec3 {
        self.pose.apply_vector(&Vec3::z())
    }

    pub fn center(&self) -> Vec3 {
        self.pose.offset()
    }

    /// Quad corners in world space, counter-clockwise seen from the front.
    pub fn corners(&self) -> [Vec3; 4] {
        let (hw, hh) = (self.width * 0.5, self.height * 0.5);
        [
            Vec3::new(-hw, -hh, 0.0),
            Vec3::new(hw, -hh, 0.0),
            Vec3::new(hw, hh, 0.0),
            Vec3::new(-hw, hh, 0.0),
        ]
        .map(|c| self.pose.apply_point(&c))
    }
}

pub const DEFAULT_BOX_DEPTH: f64 = 0.5;

/// Axis-aligned rectangle on the floor plane (x, z): the real play area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedBounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl TrackedBounds {
    pub fn contains(&self, x: f64, z: f64, tol: f64) -> bool {
        x >= self.min[0] - tol
            && x <= self.max[0] + tol
            && z >= self.min[1] - tol
            && z <= self.max[1] + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EyeSide {
    Left,
    Right,
}

/// Head pose plus interpupillary distance. Eye poses are always derived
/// from `head`; they are never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub head: Pose,
    pub ipd: f64,
    pub fov_y: f64,
    pub near: f64,
    pub far: f64,
    /// Space the head is currently in.
    pub space: SpaceId,
}

impl StereoRig {
    pub fn eye(&self, side: EyeSide) -> Pose {
        let sign = match side {
            EyeSide::Left => -1.0,
            EyeSide::Right => 1.0,
        };
        Pose::new(
            self.head.position + self.head.right() * (sign * self.ipd * 0.5),
            self.head.orientation,
        )
    }

    pub fn left_eye(&self) -> Pose {
        self.eye(EyeSide::Left)
    }

    pub fn right_eye(&self) -> Pose {
        self.eye(EyeSide::Right)
    }

    pub fn projection(&self, aspect: f64) -> Projection {
        Projection::new(self.fov_y, aspect, self.near, self.far)
    }

    pub fn with_head(mut self, head: Pose) -> Self {
        self.head = head;
        self
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed scene document: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("portal {portal} references missing partner {partner}")]
    DanglingPartner { portal: PortalId, partner: PortalId },
    #[error("portal {portal} partners {partner}, which partners {other}")]
    AsymmetricPartner {
        portal: PortalId,
        partner: PortalId,
        other: PortalId,
    },
    #[error("portal {0} is its own partner")]
    SelfPartner(PortalId),
    #[error("portal {portal}: {field} must be positive, got {value}")]
    NonPositiveDimension {
        portal: PortalId,
        field: &'static str,
        value: f64,
    },
    #[error("portal {portal}: box depth {depth} m must exceed ipd/2 + near = {required} m")]
    BoxTooShallow {
        portal: PortalId,
        depth: f64,
        required: f64,
    },
    #[error("portal {0} quad lies outside the geometry of its space")]
    PortalOutsideEnvelope(PortalId),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("unknown space {0}")]
    UnknownSpace(SpaceId),
    #[error("space id 0 is reserved for the background")]
    ReservedSpaceId,
    #[error("unknown portal {0}")]
    UnknownPortal(PortalId),
    #[error("mesh {mesh} triangle {triangle} is degenerate")]
    DegenerateTriangle { mesh: usize, triangle: usize },
    #[error("mesh {0} has neither a primitive nor triangles")]
    EmptyMesh(usize),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error("test scene supports 0..=3 portal pairs, got {0}")]
    PairsOutOfRange(u32),
}

/// Tolerance used for envelope and containment checks, in meters.
pub const ENVELOPE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spaces: Vec<Space>,
    pub meshes: Vec<Mesh>,
    pub portals: Vec<Portal>,
    pub tracked_bounds: TrackedBounds,
    pub rig: StereoRig,
    /// Rig placement as authored, kept for lossless saving.
    pub rig_placement: RigDoc,
    pub start_space: SpaceId,
}

impl Scene {
    pub fn portal(&self, id: PortalId) -> Option<&Portal> {
        self.portals.iter().find(|p| p.id == id)
    }

    pub fn partner_of(&self, portal: &Portal) -> Option<&Portal> {
        self.portal(portal.partner)
    }

    pub fn space(&self, id: SpaceId) -> Option<&Space> {
        self.spaces.iter().find(|s| s.id == id)
    }

    pub fn enabled_portals(&self) -> impl Iterator<Item = &Portal> {
        self.portals.iter().filter(|p| p.enabled)
    }

    /// Bounding box of all meshes belonging to `space`.
    pub fn space_envelope(&self, space: SpaceId) -> Option<(Vec3, Vec3)> {
        self.meshes
            .iter()
            .filter(|m| m.space == space)
            .filter_map(Mesh::bounds)
            .reduce(|(lo, hi), (l, h)| (lo.inf(&l), hi.sup(&h)))
    }

    /// Checks every structural invariant the loader promises.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut space_ids = BTreeSet::new();
        for space in &self.spaces {
            if space.id == SpaceId::BACKGROUND {
                return Err(SceneError::ReservedSpaceId);
            }
            if !space_ids.insert(space.id) {
                return Err(SceneError::DuplicateId {
                    kind: "space",
                    id: space.id.0,
                });
            }
        }
        let known = |id: SpaceId| {
            if space_ids.contains(&id) {
                Ok(())
            } else {
                Err(SceneError::UnknownSpace(id))
            }
        };
        known(self.start_space)?;
        known(self.rig.space)?;

        let rig = &self.rig;
        if rig.ipd.is_nan() || rig.ipd <= 0.0 {
            return Err(SceneError::InvalidRig(format!("ipd must be positive, got {}", rig.ipd)));
        }
        if !(rig.near > 0.0 && rig.far > rig.near) {
            return Err(SceneError::InvalidRig(format!(
                "need 0 < near < far, got near={} far={}",
                rig.near, rig.far
            )));
        }
        if !(rig.fov_y > 0.0 && rig.fov_y < std::f64::consts::PI) {
            return Err(SceneError::InvalidRig(format!("fov out of range: {}", rig.fov_y)));
        }

        for (mi, mesh) in self.meshes.iter().enumerate() {
            known(mesh.space)?;
            for (ti, tri) in mesh.triangles.iter().enumerate() {
                if tri.area().is_nan() || tri.area() <= MIN_TRIANGLE_AREA {
                    return Err(SceneError::DegenerateTriangle {
                        mesh: mi,
                        triangle: ti,
                    });
                }
            }
        }

        let mut by_id = BTreeMap::new();
        for portal in &self.portals {
            if by_id.insert(portal.id, portal).is_some() {
                return Err(SceneError::DuplicateId {
                    kind: "portal",
                    id: portal.id.0,
                });
            }
        }
        let min_depth = rig.ipd * 0.5 + rig.near;
        for portal in &self.portals {
            known(portal.space)?;
            for (field, value) in [
                ("width", portal.width),
                ("height", portal.height),
                ("box_depth", portal.box_depth),
            ] {
                if value.is_nan() || value <= 0.0 {
                    return Err(SceneError::NonPositiveDimension {
                        portal: portal.id,
                        field,
                        value,
                    });
                }
            }
            if portal.box_depth <= min_depth {
                return Err(SceneError::BoxTooShallow {
                    portal: portal.id,
                    depth: portal.box_depth,
                    required: min_depth,
                });
            }
            if portal.partner == portal.id {
                return Err(SceneError::SelfPartner(portal.id));
            }
            let partner = by_id
                .get(&portal.partner)
                .ok_or(SceneError::DanglingPartner {
                    portal: portal.id,
                    partner: portal.partner,
                })?;
            if partner.partner != portal.id {
                return Err(SceneError::AsymmetricPartner {
                    portal: portal.id,
                    partner: portal.partner,
                    other: partner.partner,
                });
            }
            let (lo, hi) = self
                .space_envelope(portal.space)
                .ok_or(SceneError::PortalOutsideEnvelope(portal.id))?;
            let inside = portal.corners().iter().all(|c| {
                (0..3).all(|k| {
                    c[k] >= lo[k] - ENVELOPE_TOLERANCE && c[k] <= hi[k] + ENVELOPE_TOLERANCE
                })
            });
            if !inside {
                return Err(SceneError::PortalOutsideEnvelope(portal.id));
            }
        }
        Ok(())
    }

    /// Enables or disables a portal together with its partner.
    pub fn set_portal_enabled(&mut self, id: PortalId, enabled: bool) -> Result<(), SceneError> {
        let partner = self.portal(id).ok_or(SceneError::UnknownPortal(id))?.partner;
        for portal in &mut self.portals {
            if portal.id == id || portal.id == partner {
                portal.enabled = enabled;
            }
        }
        Ok(())
    }

    /// Builder-style variant of [`Scene::set_portal_enabled`].
    pub fn with_portal_enabled(mut self, id: PortalId, enabled: bool) -> Result<Self, SceneError> {
        self.set_portal_enabled(id, enabled)?;
        Ok(self)
    }

    /// Rig as placed by the scene, in the start space.
    pub fn start_rig(&self) -> StereoRig {
        self.rig
    }
}
