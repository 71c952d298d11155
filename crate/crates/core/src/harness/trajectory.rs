use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{Pose, Vec3};
use crate::scene::Scene;

/// Head offset radius of the orbit path, in meters.
pub const ORBIT_RADIUS: f64 = 0.3;
/// Angle between the walk direction and the portal normal.
pub const WALK_ENTRY_ANGLE_DEG: f64 = 30.0;
const WALK_APPROACH: f64 = 1.5;
const WALK_EXIT: f64 = 1.0;

/// Scripted head path. Poses are expressed in the starting space; the
/// harness maps them through any teleports that happen along the way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trajectory {
    /// The scene's starting pose on every frame.
    Fixed,
    /// Head circles the start position horizontally while looking ahead;
    /// the starting phase comes from the seed.
    Orbit,
    /// Straight walk through the first enabled portal, entering obliquely.
    Walk,
}

impl Trajectory {
    pub const ALL: [Trajectory; 3] = [Trajectory::Fixed, Trajectory::Orbit, Trajectory::Walk];

    pub fn name(self) -> &'static str {
        match self {
            Trajectory::Fixed => "fixed",
            Trajectory::Orbit => "orbit",
            Trajectory::Walk => "walk",
        }
    }

    pub fn poses(self, scene: &Scene, frames: usize, seed: u64) -> Vec<Pose> {
        let start = scene.start_rig().head;
        match self {
            Trajectory::Fixed => vec![start; frames],
            Trajectory::Orbit => {
                let phase = ChaCha8Rng::seed_from_u64(seed).random::<f64>() * TAU;
                (0..frames)
                    .map(|i| {
                        let a = phase + TAU * i as f64 / frames as f64;
                        let offset = Vec3::new(a.cos(), 0.0, a.sin()) * ORBIT_RADIUS;
                        Pose::new(start.position + offset, start.orientation)
                    })
                    .collect()
            }
            Trajectory::Walk => {
                let (from, to) = walk_endpoints(scene, &start);
                let forward = to - from;
                (0..frames)
                    .map(|i| {
                        let s = if frames > 1 { i as f64 / (frames - 1) as f64 } else { 0.0 };
                        Pose::looking_along(from + forward * s, forward)
                    })
                    .collect()
            }
        }
    }
}

/// Start and end of the walk. Without portals the walk just heads forward.
fn walk_endpoints(scene: &Scene, start: &Pose) -> (Vec3, Vec3) {
    let Some(portal) = scene.enabled_portals().next() else {
        let mut ahead = start.forward();
        ahead.y = 0.0;
        let ahead = if ahead.norm() > 1e-9 { ahead.normalize() } else { Vec3::new(0.0, 0.0, -1.0) };
        return (start.position, start.position + ahead * (WALK_APPROACH + WALK_EXIT));
    };
    let angle = WALK_ENTRY_ANGLE_DEG.to_radians();
    let dir = Vec3::new(angle.sin(), 0.0, -angle.cos());
    let height = start.position.y - portal.center().y;
    let pose = portal.pose;
    let local = |d: f64| Vec3::new(dir.x * d, height, dir.z * d);
    (pose.apply_point(&local(-WALK_APPROACH)), pose.apply_point(&local(WALK_EXIT)))
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trajectory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Trajectory::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown trajectory `{s}` (expected fixed, orbit or walk)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::build_test_scene;

    #[test]
    fn orbit_is_seeded_and_stays_on_its_circle() {
        let scene = build_test_scene(3).unwrap();
        let a = Trajectory::Orbit.poses(&scene, 20, 7);
        let b = Trajectory::Orbit.poses(&scene, 20, 7);
        let c = Trajectory::Orbit.poses(&scene, 20, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let center = scene.rig.head.position;
        for pose in &a {
            assert!(((pose.position - center).norm() - ORBIT_RADIUS).abs() < 1e-12);
            assert_eq!(pose.orientation, scene.rig.head.orientation);
        }
    }

    #[test]
    fn walk_crosses_the_first_portal_at_an_angle() {
        let scene = build_test_scene(1).unwrap();
        let path = Trajectory::Walk.poses(&scene, 50, 0);
        let portal = scene.enabled_portals().next().unwrap();
        let first = portal.to_local(&path[0].position);
        let last = portal.to_local(&path[49].position);
        assert!(first.z > 0.0 && last.z < 0.0);
        let dir = (last - first).normalize();
        let angle = dir.x.atan2(-dir.z).to_degrees();
        assert!((angle - WALK_ENTRY_ANGLE_DEG).abs() < 1e-9);
        // crossing point is inside the quad
        let t = first.z / (first.z - last.z);
        let hit = first + (last - first) * t;
        assert!(hit.x.abs() < portal.width / 2.0 && hit.y.abs() < portal.height / 2.0);
    }

    #[test]
    fn names_parse() {
        for t in Trajectory::ALL {
            assert_eq!(t.name().parse::<Trajectory>().unwrap(), t);
        }
        assert!("spiral".parse::<Trajectory>().is_err());
    }
}
