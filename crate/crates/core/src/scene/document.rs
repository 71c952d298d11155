//! TOML scene documents and the mesh primitives they may use.
//!
//! Field reference lives in `docs/scene-format.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Material, Mesh, Portal, PortalId, Rgba, Scene, SceneError, Space, SpaceId, StereoRig,
    TrackedBounds, Triangle,
};
use crate::math::{rotation_from_ypr_deg, Pose, Transform, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_space: Option<u32>,
    pub tracked_bounds: TrackedBounds,
    pub rig: RigDoc,
    pub spaces: Vec<SpaceDoc>,
    #[serde(default)]
    pub meshes: Vec<MeshDoc>,
    #[serde(default)]
    pub portals: Vec<PortalDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub id: u32,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigDoc {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw_pitch_roll_deg: [f64; 3],
    pub ipd: f64,
    pub fov_deg: f64,
    pub near: f64,
    pub far: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialDoc {
    #[default]
    Opaque,
    Floor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDoc {
    pub space: u32,
    #[serde(default = "default_color")]
    pub color: [u8; 4],
    #[serde(default = "yes")]
    pub cull_backfaces: bool,
    #[serde(default)]
    pub material: MaterialDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<Primitive>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub triangles: Vec<TriangleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleDoc {
    pub vertices: [[f64; 3]; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[u8; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortalDoc {
    pub id: u32,
    pub partner: u32,
    pub space: u32,
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw_pitch_roll_deg: [f64; 3],
    pub width: f64,
    pub height: f64,
    #[serde(default = "default_box_depth")]
    pub box_depth: f64,
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn default_color() -> [u8; 4] {
    [255, 255, 255, 255]
}

fn yes() -> bool {
    true
}

fn default_box_depth() -> f64 {
    super::DEFAULT_BOX_DEPTH
}

/// Box faces named by their outward axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::PosX,
        Face::NegX,
        Face::PosY,
        Face::NegY,
        Face::PosZ,
        Face::NegZ,
    ];

    /// Outward normal and two tangents `(u, v)` with `u × v = normal`.
    fn frame(self) -> (Vec3, Vec3, Vec3) {
        let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
        match self {
            Face::PosX => (x, y, z),
            Face::NegX => (-x, z, y),
            Face::PosY => (y, z, x),
            Face::NegY => (-y, x, z),
            Face::PosZ => (z, x, y),
            Face::NegZ => (-z, y, x),
        }
    }

    /// Fixed per-face brightness so flat-shaded boxes stay readable.
    fn brightness(self) -> f64 {
        match self {
            Face::PosY => 1.0,
            Face::NegY => 0.55,
            Face::PosX | Face::NegX => 0.8,
            Face::PosZ | Face::NegZ => 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opening {
    /// Center in the wall's local (x, y).
    pub center: [f64; 2],
    pub size: [f64; 2],
}

/// Shorthand geometry expanded into triangles at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    /// Closed box, faces wound outward.
    Box { center: [f64; 3], size: [f64; 3] },
    /// Box seen from inside: faces wound inward. `open_faces` are omitted.
    Room {
        center: [f64; 3],
        size: [f64; 3],
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        open_faces: Vec<Face>,
    },
    /// Rectangle in its local XY plane facing local +Z.
    Quad {
        center: [f64; 3],
        size: [f64; 2],
        #[serde(default)]
        yaw_pitch_roll_deg: [f64; 3],
    },
    /// Like `quad`, with an optional rectangular hole.
    Wall {
        center: [f64; 3],
        size: [f64; 2],
        #[serde(default)]
        yaw_pitch_roll_deg: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        opening: Option<Opening>,
    },
}

fn push_quad(out: &mut Vec<Triangle>, center: Vec3, u: Vec3, v: Vec3, color: Rgba) {
    let a = center - u - v;
    let b = center + u - v;
    let c = center + u + v;
    let d = center - u + v;
    out.push(Triangle::new(a, b, c, color));
    out.push(Triangle::new(a, c, d, color));
}

/// Rectangle `[x0,x1]×[y0,y1]` in a local frame, facing local +Z.
fn push_local_rect(
    out: &mut Vec<Triangle>,
    frame: &Transform,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    color: Rgba,
) {
    let p = |x: f64, y: f64| frame.apply_point(&Vec3::new(x, y, 0.0));
    let (a, b, c, d) = (p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1));
    out.push(Triangle::new(a, b, c, color));
    out.push(Triangle::new(a, c, d, color));
}

impl Primitive {
    pub fn triangulate(&self, color: Rgba) -> Vec<Triangle> {
        let mut out = Vec::new();
        match self {
            Primitive::Box { center, size } | Primitive::Room { center, size, .. } => {
                let inward = matches!(self, Primitive::Room { .. });
                let open: &[Face] = match self {
                    Primitive::Room { open_faces, .. } => open_faces,
                    _ => &[],
                };
                let c = Vec3::from(*center);
                let half = Vec3::from(*size) * 0.5;
                for face in Face::ALL.into_iter().filter(|f| !open.contains(f)) {
                    let (n, u, v) = face.frame();
                    let u = u.component_mul(&half);
                    let v = v.component_mul(&half);
                    let face_center = c + n.component_mul(&half);
                    let shade = color.shade(face.brightness());
                    if inward {
                        push_quad(&mut out, face_center, v, u, shade);
                    } else {
                        push_quad(&mut out, face_center, u, v, shade);
                    }
                }
            }
            Primitive::Quad {
                center,
                size,
                yaw_pitch_roll_deg,
            } => {
                let frame = Transform::from_position_ypr_deg(*center, *yaw_pitch_roll_deg);
                let (hw, hh) = (size[0] * 0.5, size[1] * 0.5);
                push_local_rect(&mut out, &frame, (-hw, hw), (-hh, hh), color);
            }
            Primitive::Wall {
                center,
                size,
                yaw_pitch_roll_deg,
                opening,
            } => {
                let frame = Transform::from_position_ypr_deg(*center, *yaw_pitch_roll_deg);
                let (hw, hh) = (size[0] * 0.5, size[1] * 0.5);
                match opening {
                    None => push_local_rect(&mut out, &frame, (-hw, hw), (-hh, hh), color),
                    Some(o) => {
                        // 3×3 grid minus the center cell: no T-junctions, so
                        // shared edges rasterize without cracks.
                        let xs = [
                            -hw,
                            (o.center[0] - o.size[0] * 0.5).max(-hw),
                            (o.center[0] + o.size[0] * 0.5).min(hw),
                            hw,
                        ];
                        let ys = [
                            -hh,
                            (o.center[1] - o.size[1] * 0.5).max(-hh),
                            (o.center[1] + o.size[1] * 0.5).min(hh),
                            hh,
                        ];
                        for i in 0..3 {
                            for j in 0..3 {
                                if i == 1 && j == 1 {
                                    continue;
                                }
                                let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[j], ys[j + 1]);
                                if x1 - x0 > 1e-9 && y1 - y0 > 1e-9 {
                                    push_local_rect(&mut out, &frame, (x0, x1), (y0, y1), color);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl SceneDocument {
    pub fn from_toml(text: &str) -> Result<Self, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene documents always serialize")
    }

    pub fn into_scene(self) -> Result<Scene, SceneError> {
        let spaces = self
            .spaces
            .iter()
            .map(|s| Space {
                id: SpaceId(s.id),
                name: s.name.clone(),
            })
            .collect::<Vec<_>>();

        let meshes = self
            .meshes
            .iter()
            .enumerate()
            .map(|(i, m)| mesh_from_doc(i, m))
            .collect::<Result<Vec<_>, _>>()?;

        let portals = self
            .portals
            .iter()
            .map(|p| Portal {
                id: PortalId(p.id),
                partner: PortalId(p.partner),
                space: SpaceId(p.space),
                pose: Transform::from_position_ypr_deg(p.position, p.yaw_pitch_roll_deg),
                position: p.position,
                yaw_pitch_roll_deg: p.yaw_pitch_roll_deg,
                width: p.width,
                height: p.height,
                box_depth: p.box_depth,
                enabled: p.enabled,
            })
            .collect();

        let start_space = SpaceId(
            self.start_space
                .or_else(|| self.spaces.first().map(|s| s.id))
                .ok_or_else(|| SceneError::Parse("scene has no spaces".into()))?,
        );
        let scene = Scene {
            spaces,
            meshes,
            portals,
            tracked_bounds: self.tracked_bounds,
            rig: rig_from_doc(&self.rig, start_space),
            rig_placement: self.rig,
            start_space,
        };
        scene.validate()?;
        Ok(scene)
    }
}

fn rig_from_doc(doc: &RigDoc, space: SpaceId) -> StereoRig {
    StereoRig {
        head: Pose::new(
            Vec3::from(doc.position),
            rotation_from_ypr_deg(doc.yaw_pitch_roll_deg),
        ),
        ipd: doc.ipd,
        fov_y: doc.fov_deg.to_radians(),
        near: doc.near,
        far: doc.far,
        space,
    }
}

fn mesh_from_doc(index: usize, doc: &MeshDoc) -> Result<Mesh, SceneError> {
    let color = Rgba(doc.color);
    let mut mesh = match (&doc.primitive, doc.triangles.is_empty()) {
        (Some(p), true) => Mesh::from_primitive(p.clone(), color, SpaceId(doc.space)),
        (None, false) => {
            let triangles = doc
                .triangles
                .iter()
                .map(|t| {
                    let [a, b, c] = t.vertices.map(Vec3::from);
                    Triangle::new(a, b, c, t.color.map_or(color, Rgba))
                })
                .collect();
            let mut m = Mesh::new(triangles, SpaceId(doc.space));
            m.color = color;
            m
        }
        (Some(_), false) => {
            return Err(SceneError::Parse(format!(
                "mesh {index} has both a primitive and a triangle list"
            )))
        }
        (None, true) => return Err(SceneError::EmptyMesh(index)),
    };
    mesh.cull_backfaces = doc.cull_backfaces;
    mesh.material = match doc.material {
        MaterialDoc::Opaque => Material::Opaque,
        MaterialDoc::Floor => Material::Floor,
    };
    Ok(mesh)
}

impl Scene {
    pub fn from_toml(text: &str) -> Result<Scene, SceneError> {
        SceneDocument::from_toml(text)?.into_scene()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
        Scene::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_document(&self) -> SceneDocument {
        SceneDocument {
            start_space: Some(self.start_space.0),
            tracked_bounds: self.tracked_bounds,
            rig: self.rig_placement,
            spaces: self
                .spaces
                .iter()
                .map(|s| SpaceDoc {
                    id: s.id.0,
                    name: s.name.clone(),
                })
                .collect(),
            meshes: self.meshes.iter().map(mesh_to_doc).collect(),
            portals: self
                .portals
                .iter()
                .map(|p| PortalDoc {
                    id: p.id.0,
                    partner: p.partner.0,
                    space: p.space.0,
                    position: p.position,
                    yaw_pitch_roll_deg: p.yaw_pitch_roll_deg,
                    width: p.width,
                    height: p.height,
                    box_depth: p.box_depth,
                    enabled: p.enabled,
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        self.to_document().to_toml()
    }

    /// Builds a scene from parts, placing the rig as authored.
    pub(crate) fn assemble(
        spaces: Vec<Space>,
        meshes: Vec<Mesh>,
        portals: Vec<Portal>,
        tracked_bounds: TrackedBounds,
        rig: RigDoc,
        start_space: SpaceId,
    ) -> Result<Scene, SceneError> {
        let scene = Scene {
            spaces,
            meshes,
            portals,
            tracked_bounds,
            rig: rig_from_doc(&rig, start_space),
            rig_placement: rig,
            start_space,
        };
        scene.validate()?;
        Ok(scene)
    }
}

fn mesh_to_doc(mesh: &Mesh) -> MeshDoc {
    let triangles = if mesh.primitive.is_some() {
        Vec::new()
    } else {
        mesh.triangles
            .iter()
            .map(|t| TriangleDoc {
                vertices: t.vertices.map(|v| [v.x, v.y, v.z]),
                color: (t.color != mesh.color).then_some(t.color.0),
            })
            .collect()
    };
    MeshDoc {
        space: mesh.space.0,
        color: mesh.color.0,
        cull_backfaces: mesh.cull_backfaces,
        material: match mesh.material {
            Material::Floor => MaterialDoc::Floor,
            Material::Opaque | Material::PortalSurface(_) => MaterialDoc::Opaque,
        },
        primitive: mesh.primitive.clone(),
        triangles,
    }
}
