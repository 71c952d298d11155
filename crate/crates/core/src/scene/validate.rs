//! Impossible-space validation: every space must be reachable from the
//! start space through enabled portals, and every walkable floor, mapped
//! back into real coordinates, must stay inside the tracked area.

use std::collections::{BTreeMap, VecDeque};

use super::{Material, Scene, SpaceId, Triangle};
use crate::math::{Transform, Vec3};
use crate::portal::portal_view_transform;

/// Default floor sampling grid, in meters.
pub const DEFAULT_SAMPLE_SPACING: f64 = 0.05;

const CONTAINMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceReport {
    pub space: SpaceId,
    pub reachable: bool,
    /// Virtual → real transform along the first portal path found.
    pub to_real: Option<Transform>,
    pub samples: usize,
    /// Sampled floor points (real coordinates, x/z) outside the tracked area.
    pub violations: Vec<[f64; 2]>,
}

impl SpaceReport {
    pub fn contained(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub spaces: Vec<SpaceReport>,
}

impl ValidationReport {
    pub fn all_reachable(&self) -> bool {
        self.spaces.iter().all(|s| s.reachable)
    }

    pub fn contained(&self) -> bool {
        self.spaces.iter().all(SpaceReport::contained)
    }

    pub fn is_valid(&self) -> bool {
        self.all_reachable() && self.contained()
    }

    pub fn unreachable(&self) -> Vec<SpaceId> {
        self.spaces
            .iter()
            .filter(|s| !s.reachable)
            .map(|s| s.space)
            .collect()
    }
}

pub fn validate_impossible_space(scene: &Scene) -> ValidationReport {
    validate_impossible_space_with(scene, DEFAULT_SAMPLE_SPACING)
}

/// As [`validate_impossible_space`] with an explicit sampling grid.
pub fn validate_impossible_space_with(scene: &Scene, spacing: f64) -> ValidationReport {
    let to_real = reachable_transforms(scene);
    let spaces = scene
        .spaces
        .iter()
        .map(|space| {
            let transform = to_real.get(&space.id).copied();
            let mut samples = 0;
            let mut violations = Vec::new();
            if let Some(m) = transform {
                let floors = scene
                    .meshes
                    .iter()
                    .filter(|mesh| mesh.space == space.id && mesh.material == Material::Floor);
                for tri in floors.flat_map(|mesh| mesh.triangles.iter()) {
                    for p in sample_triangle(tri, spacing) {
                        samples += 1;
                        let r = m.apply_point(&p);
                        if !scene.tracked_bounds.contains(r.x, r.z, CONTAINMENT_TOLERANCE) {
                            violations.push([r.x, r.z]);
                        }
                    }
                }
            }
            SpaceReport {
                space: space.id,
                reachable: transform.is_some(),
                to_real: transform,
                samples,
                violations,
            }
        })
        .collect();
    ValidationReport { spaces }
}

/// Breadth-first search over enabled portals, visiting portals in id order.
fn reachable_transforms(scene: &Scene) -> BTreeMap<SpaceId, Transform> {
    let mut portals: Vec<_> = scene.enabled_portals().collect();
    portals.sort_by_key(|p| p.id);
    let mut found = BTreeMap::from([(scene.start_space, Transform::IDENTITY)]);
    let mut queue = VecDeque::from([scene.start_space]);
    while let Some(space) = queue.pop_front() {
        let m = found[&space];
        for portal in portals.iter().filter(|p| p.space == space) {
            let Some(partner) = scene.partner_of(portal).filter(|q| q.enabled) else {
                continue;
            };
            if found.contains_key(&partner.space) {
                continue;
            }
            let Ok(back) = portal_view_transform(partner, portal) else {
                continue;
            };
            found.insert(partner.space, m * back);
            queue.push_back(partner.space);
        }
    }
    found
}

/// Points on a barycentric lattice whose spacing along each edge is at most
/// `spacing`; always includes the vertices.
fn sample_triangle(tri: &Triangle, spacing: f64) -> impl Iterator<Item = Vec3> + '_ {
    let [a, b, c] = tri.vertices;
    let longest = [(b - a).norm(), (c - b).norm(), (a - c).norm()]
        .into_iter()
        .fold(0.0, f64::max);
    let n = ((longest / spacing).ceil() as usize).max(1);
    (0..=n).flat_map(move |i| {
        (0..=n - i).map(move |j| {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            a + (b - a) * u + (c - a) * v
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{four_room_scene, PortalId, Rgba};

    #[test]
    fn four_rooms_are_reachable_and_contained() {
        let report = validate_impossible_space(&four_room_scene());
        assert!(report.all_reachable(), "{:?}", report.unreachable());
        assert!(report.contained());
        assert!(report.spaces.iter().all(|s| s.samples > 1000));
    }

    #[test]
    fn disconnected_space_is_unreachable() {
        let mut scene = four_room_scene();
        scene.set_portal_enabled(PortalId(1), false).unwrap();
        let report = validate_impossible_space(&scene);
        assert_eq!(report.unreachable(), vec![SpaceId(2), SpaceId(3), SpaceId(4)]);
    }

    #[test]
    fn floor_outside_tracked_area_is_reported() {
        let mut scene = four_room_scene();
        scene.tracked_bounds.max[0] = 1.0;
        let report = validate_impossible_space(&scene);
        assert!(report.all_reachable());
        assert!(report.spaces.iter().all(|s| !s.contained()));
    }

    #[test]
    fn lattice_covers_vertices_and_spacing() {
        let tri = Triangle::new(
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Rgba::BLACK,
        );
        let pts: Vec<_> = sample_triangle(&tri, 0.25).collect();
        // n = ceil(sqrt(2) / 0.25) = 6 → 28 lattice points
        assert_eq!(pts.len(), 28);
        for v in tri.vertices {
            assert!(pts.iter().any(|p| (p - v).norm() < 1e-15));
        }
    }
}
