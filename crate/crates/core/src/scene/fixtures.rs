//! Built-in scenes.
//!
//! Dimensions are artifact choices: portals are 1 × 2 m with a 0.5 m box,
//! the rig has a 64 mm IPD, 90° vertical field of view and a 5 cm near
//! plane.

use super::document::{Face, Opening, Primitive, RigDoc};
use super::{
    Material, Mesh, Portal, PortalId, Rgba, Scene, SceneError, Space, SpaceId, TrackedBounds,
};

const IPD: f64 = 0.064;
const FOV_DEG: f64 = 90.0;
const NEAR: f64 = 0.05;
const FAR: f64 = 100.0;

fn rig_at(position: [f64; 3], yaw_deg: f64) -> RigDoc {
    RigDoc {
        position,
        yaw_pitch_roll_deg: [yaw_deg, 0.0, 0.0],
        ipd: IPD,
        fov_deg: FOV_DEG,
        near: NEAR,
        far: FAR,
    }
}

fn space(id: u32, name: &str) -> Space {
    Space {
        id: SpaceId(id),
        name: name.to_owned(),
    }
}

fn solid(primitive: Primitive, color: Rgba, space: u32) -> Mesh {
    Mesh::from_primitive(primitive, color, SpaceId(space))
}

fn floor(center: [f64; 3], size: [f64; 2], color: Rgba, space: u32) -> Mesh {
    solid(
        Primitive::Quad {
            center,
            size,
            yaw_pitch_roll_deg: [0.0, -90.0, 0.0],
        },
        color,
        space,
    )
    .with_material(Material::Floor)
}

const SLOT_X: [f64; 6] = [-4.5, -2.7, -0.9, 0.9, 2.7, 4.5];
const SLOT_COLORS: [Rgba; 6] = [
    Rgba::rgb(40, 90, 230),  // blue
    Rgba::rgb(40, 190, 70),  // green
    Rgba::rgb(220, 50, 50),  // red
    Rgba::rgb(40, 200, 210), // cyan
    Rgba::rgb(210, 50, 200), // magenta
    Rgba::rgb(240, 150, 40), // orange
];
const PLATFORM_Z: f64 = -3.0;
const PLATFORM_TOP: f64 = 0.3;
/// Gap between platform top and the portal box floor, avoids coplanar faces.
const PORTAL_LIFT: f64 = 0.02;

/// The benchmark scene: six colored platforms in an arc in front of the rig,
/// with `pairs` connected portal pairs (blue–green, red–cyan,
/// magenta–orange, enabled in that order) and opaque occluders (a green
/// "bowl" and stacked yellow cubes) that hide parts of some portals.
pub fn build_test_scene(pairs: u32) -> Result<Scene, SceneError> {
    if pairs > 3 {
        return Err(SceneError::PairsOutOfRange(pairs));
    }
    let spaces = vec![
        space(1, "hub"),
        space(2, "blue-green"),
        space(3, "red-cyan"),
        space(4, "magenta-orange"),
    ];

    let mut meshes = vec![
        solid(
            Primitive::Room {
                center: [0.0, 7.5, -4.0],
                size: [40.0, 15.0, 40.0],
                open_faces: vec![Face::NegY],
            },
            Rgba::rgb(70, 80, 120),
            1,
        ),
        floor([0.0, 0.0, -4.0], [40.0, 40.0], Rgba::rgb(110, 110, 105), 1),
        // bowl
        solid(
            Primitive::Box {
                center: [-2.7, 0.35, -1.6],
                size: [1.2, 0.7, 0.9],
            },
            Rgba::rgb(60, 160, 80),
            1,
        ),
    ];
    for center in [[2.5, 0.25, -1.7], [3.0, 0.25, -1.5], [2.75, 0.75, -1.6]] {
        meshes.push(solid(
            Primitive::Box {
                center,
                size: [0.5, 0.5, 0.5],
            },
            Rgba::rgb(230, 210, 40),
            1,
        ));
    }

    let mut portals = Vec::new();
    for (slot, (&x, &color)) in SLOT_X.iter().zip(SLOT_COLORS.iter()).enumerate() {
        let pair = slot as u32 / 2;
        let space_id = pair + 2;
        meshes.push(solid(
            Primitive::Box {
                center: [x, PLATFORM_TOP * 0.5, PLATFORM_Z],
                size: [1.6, PLATFORM_TOP, 1.4],
            },
            color.shade(0.7),
            space_id,
        ));
        if pair >= pairs {
            continue;
        }
        let bottom = PLATFORM_TOP + PORTAL_LIFT;
        let top = bottom + 2.0;
        let frame_z = PLATFORM_Z + 0.05;
        for side in [-1.0, 1.0] {
            meshes.push(solid(
                Primitive::Box {
                    center: [x + side * 0.56, (PLATFORM_TOP + top) * 0.5, frame_z],
                    size: [0.12, top - PLATFORM_TOP, 0.1],
                },
                color,
                space_id,
            ));
        }
        meshes.push(solid(
            Primitive::Box {
                center: [x, top + 0.06, frame_z],
                size: [1.24, 0.12, 0.1],
            },
            color,
            space_id,
        ));
        let id = slot as u32 + 1;
        let partner = if slot % 2 == 0 { id + 1 } else { id - 1 };
        portals.push(Portal::new(
            id,
            partner,
            SpaceId(space_id),
            [x, bottom + 1.0, PLATFORM_Z],
            [0.0; 3],
            1.0,
            2.0,
        ));
    }

    Scene::assemble(
        spaces,
        meshes,
        portals,
        TrackedBounds {
            min: [-20.0, -24.0],
            max: [20.0, 16.0],
        },
        rig_at([0.0, 1.6, 4.0], 0.0),
        SpaceId(1),
    )
}

/// Room spacing in world coordinates for [`four_room_scene`].
pub const FOUR_ROOM_SPACING: f64 = 12.0;

/// Four 4 × 4 m rooms chained by three portal pairs. Each pair maps the next
/// room exactly onto the previous one, so every room overlays the same
/// 4 × 4 m tracked area.
pub fn four_room_scene() -> Scene {
    let colors = [
        Rgba::rgb(200, 180, 150),
        Rgba::rgb(150, 190, 210),
        Rgba::rgb(190, 160, 210),
        Rgba::rgb(170, 210, 150),
    ];
    let mut spaces = Vec::new();
    let mut meshes = Vec::new();
    for (k, color) in colors.iter().enumerate() {
        let id = k as u32 + 1;
        let ox = FOUR_ROOM_SPACING * k as f64;
        spaces.push(space(id, &format!("room-{id}")));
        meshes.push(solid(
            Primitive::Room {
                center: [ox, 1.5, 0.0],
                size: [4.0, 3.0, 4.0],
                open_faces: vec![Face::NegY],
            },
            *color,
            id,
        ));
        meshes.push(floor([ox, 0.0, 0.0], [4.0, 4.0], color.shade(0.6), id));
    }
    // (room-local x, z, yaw of the portal in the earlier room)
    let links = [(0.0, -1.0, 0.0), (1.0, 0.5, 90.0), (-1.0, 1.0, 180.0)];
    let mut portals = Vec::new();
    for (k, &(x, z, yaw)) in links.iter().enumerate() {
        let near_room = k as u32 + 1;
        let far_room = near_room + 1;
        let (a, b) = (2 * k as u32 + 1, 2 * k as u32 + 2);
        let ox = FOUR_ROOM_SPACING * k as f64;
        portals.push(Portal::new(
            a,
            b,
            SpaceId(near_room),
            [ox + x, 1.1, z],
            [yaw, 0.0, 0.0],
            1.0,
            2.0,
        ));
        portals.push(Portal::new(
            b,
            a,
            SpaceId(far_room),
            [ox + FOUR_ROOM_SPACING + x, 1.1, z],
            [yaw + 180.0, 0.0, 0.0],
            1.0,
            2.0,
        ));
    }
    Scene::assemble(
        spaces,
        meshes,
        portals,
        TrackedBounds {
            min: [-2.0, -2.0],
            max: [2.0, 2.0],
        },
        rig_at([0.0, 1.6, 1.2], 0.0),
        SpaceId(1),
    )
    .expect("four-room fixture is valid")
}

/// Space and portal ids of [`transition_scene`].
#[derive(Debug, Clone, Copy)]
pub struct TransitionIds {
    /// Room the rig starts in.
    pub source: SpaceId,
    /// Room behind the portal.
    pub destination: SpaceId,
    /// Geometry behind the source portal wall.
    pub behind_source: SpaceId,
    /// Geometry behind the destination portal wall.
    pub behind_destination: SpaceId,
    pub source_portal: PortalId,
    pub destination_portal: PortalId,
}

/// Separation between the two rooms of [`transition_scene`] along x.
pub const TRANSITION_OFFSET: f64 = 20.0;

/// Two closed rooms, each with a portal set into a wall, and a back room
/// hidden behind each portal wall. Walking through the source portal
/// leads into the destination room.
pub fn transition_scene() -> (Scene, TransitionIds) {
    let ids = TransitionIds {
        source: SpaceId(1),
        destination: SpaceId(2),
        behind_source: SpaceId(3),
        behind_destination: SpaceId(4),
        source_portal: PortalId(1),
        destination_portal: PortalId(2),
    };
    let spaces = vec![
        space(1, "source-room"),
        space(2, "destination-room"),
        space(3, "behind-source-wall"),
        space(4, "behind-destination-wall"),
    ];
    let mut meshes = Vec::new();
    let mut room = |ox: f64, walls: Rgba, floor_color: Rgba, id: SpaceId| {
        meshes.push(solid(
            Primitive::Room {
                center: [ox, 1.5, 3.0],
                size: [6.0, 3.0, 6.0],
                open_faces: vec![Face::NegY, Face::NegZ],
            },
            walls,
            id.0,
        ));
        meshes.push(floor([ox, 0.0, 3.0], [6.0, 6.0], floor_color, id.0));
        meshes.push(solid(
            Primitive::Wall {
                center: [ox, 1.5, 0.0],
                size: [6.0, 3.0],
                yaw_pitch_roll_deg: [0.0; 3],
                opening: Some(Opening {
                    center: [0.0, -0.5],
                    size: [1.0, 2.0],
                }),
            },
            walls.shade(0.85),
            id.0,
        ));
        meshes.push(solid(
            Primitive::Box {
                center: [ox + 1.8, 0.4, 4.5],
                size: [0.8, 0.8, 0.8],
            },
            floor_color.shade(1.3),
            id.0,
        ));
    };
    room(
        0.0,
        Rgba::rgb(200, 190, 170),
        Rgba::rgb(150, 120, 90),
        ids.source,
    );
    room(
        TRANSITION_OFFSET,
        Rgba::rgb(150, 170, 220),
        Rgba::rgb(90, 110, 160),
        ids.destination,
    );
    for (ox, color, id) in [
        (0.0, Rgba::rgb(200, 60, 60), ids.behind_source),
        (TRANSITION_OFFSET, Rgba::rgb(60, 180, 60), ids.behind_destination),
    ] {
        meshes.push(solid(
            Primitive::Room {
                center: [ox, 1.5, -3.5],
                size: [6.0, 3.0, 5.0],
                open_faces: vec![],
            },
            color,
            id.0,
        ));
        meshes.push(solid(
            Primitive::Box {
                center: [ox + 0.6, 1.0, -3.0],
                size: [0.5, 2.0, 0.5],
            },
            color.shade(0.6),
            id.0,
        ));
    }
    let portals = vec![
        Portal::new(1, 2, ids.source, [0.0, 1.0, 0.0], [0.0; 3], 1.0, 2.0),
        Portal::new(2, 1, ids.destination, [TRANSITION_OFFSET, 1.0, 0.0], [0.0; 3], 1.0, 2.0),
    ];
    let scene = Scene::assemble(
        spaces,
        meshes,
        portals,
        TrackedBounds {
            min: [-3.0, -6.0],
            max: [3.0, 6.0],
        },
        rig_at([0.0, 1.6, 3.0], 0.0),
        ids.source,
    )
    .expect("transition fixture is valid");
    (scene, ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_scene_portal_counts_follow_pairs() {
        for (pairs, expected) in [(0, 0), (1, 2), (2, 4), (3, 6)] {
            let scene = build_test_scene(pairs).unwrap();
            assert_eq!(scene.portals.len(), expected);
            assert!(scene.portals.iter().all(|p| p.enabled));
            assert_eq!(scene.spaces.len(), 4);
        }
    }

    #[test]
    fn first_pair_is_blue_and_green() {
        let scene = build_test_scene(1).unwrap();
        let ids: Vec<_> = scene.portals.iter().map(|p| (p.id, p.partner)).collect();
        assert_eq!(ids, vec![(PortalId(1), PortalId(2)), (PortalId(2), PortalId(1))]);
        assert_eq!(scene.portals[0].position[0], SLOT_X[0]);
        assert_eq!(scene.portals[1].position[0], SLOT_X[1]);
    }

    #[test]
    fn too_many_pairs_is_an_error() {
        assert!(matches!(build_test_scene(4), Err(SceneError::PairsOutOfRange(4))));
    }

    #[test]
    fn fixtures_validate() {
        four_room_scene().validate().unwrap();
        transition_scene().0.validate().unwrap();
    }
}
