use crate::math::{Pose, Vec3};
use crate::portal::{detect_crossing, portal_view_transform, CrossingEvent};
use crate::scene::{Scene, StereoRig};

/// Upper bound on teleports applied within one step.
pub const MAX_CROSSINGS_PER_STEP: usize = 16;

/// Moves the rig's head from `prev` to `new_head`, teleporting the whole rig
/// whenever the head center crosses an enabled portal. Crossings are
/// handled in order along the motion; after each teleport the rest of the
/// motion continues from the partner portal.
pub fn frame_step(
    scene: &Scene,
    rig: &StereoRig,
    prev: &Vec3,
    new_head: &Pose,
) -> (StereoRig, Vec<CrossingEvent>) {
    let mut from = *prev;
    let mut head = *new_head;
    let mut space = rig.space;
    let mut events = Vec::new();
    for _ in 0..MAX_CROSSINGS_PER_STEP {
        let first = scene
            .enabled_portals()
            .filter_map(|p| detect_crossing(&from, &head.position, p))
            .min_by(|a, b| a.t.total_cmp(&b.t).then(a.portal.cmp(&b.portal)));
        let Some(event) = first else { break };
        let src = scene.portal(event.portal).expect("portal from scene");
        let Some(dst) = scene.partner_of(src) else { break };
        let Ok(transform) = portal_view_transform(src, dst) else { break };
        head = transform.apply_pose(&head);
        from = transform.apply_point(&event.entry);
        space = dst.space;
        events.push(event);
    }
    (
        StereoRig {
            head,
            space,
            ..*rig
        },
        events,
    )
}
