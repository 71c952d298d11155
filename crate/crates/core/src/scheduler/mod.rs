//! Render-pass planning for the four stereo pipelines.
//!
//! | mode | passes per frame (N planned portals) |
//! |---|---|
//! | naive multi-pass | 2 + 2N |
//! | stencil multi-pass | 4 + 2N (one mark pass per eye) |
//! | instanced single-pass | 1 + N |
//! | stencil + instanced | 2 + N |
//!
//! Optional hidden-area mask passes are listed in the plan but not counted
//! in `pass_count`.

mod execute;
mod step;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::math::Projection;
use crate::portal::{box_corners, destination_clip_plane, portal_view_transform, PortalError};
use crate::raster::{
    EyeView, StencilCompare, StencilPolicy, Viewport, HIDDEN_AREA_STENCIL,
};
use crate::scene::{EyeSide, PortalId, Rgba, Scene, SpaceId, StereoRig};

pub use execute::{FrameMetrics, PassMetrics, Renderer};
pub use step::{frame_step, MAX_CROSSINGS_PER_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RenderMode {
    NaiveMultiPass,
    StencilMultiPass,
    InstancedSinglePass,
    StencilInstanced,
}

impl RenderMode {
    pub const ALL: [RenderMode; 4] = [
        RenderMode::NaiveMultiPass,
        RenderMode::StencilMultiPass,
        RenderMode::InstancedSinglePass,
        RenderMode::StencilInstanced,
    ];

    pub fn uses_stencil(self) -> bool {
        matches!(self, Self::StencilMultiPass | Self::StencilInstanced)
    }

    pub fn is_instanced(self) -> bool {
        matches!(self, Self::InstancedSinglePass | Self::StencilInstanced)
    }

    pub fn from_flags(stencil: bool, instanced: bool) -> Self {
        match (stencil, instanced) {
            (false, false) => Self::NaiveMultiPass,
            (true, false) => Self::StencilMultiPass,
            (false, true) => Self::InstancedSinglePass,
            (true, true) => Self::StencilInstanced,
        }
    }

    /// Passes for `portals` planned portals, hidden-area passes excluded.
    pub fn pass_law(self, portals: usize) -> usize {
        match self {
            Self::NaiveMultiPass => 2 + 2 * portals,
            Self::StencilMultiPass => 4 + 2 * portals,
            Self::InstancedSinglePass => 1 + portals,
            Self::StencilInstanced => 2 + portals,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NaiveMultiPass => "naive",
            Self::StencilMultiPass => "stencil",
            Self::InstancedSinglePass => "instanced",
            Self::StencilInstanced => "stencil-instanced",
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (naive|stencil|instanced|stencil-instanced)"))
    }
}

/// How enabled portals are drawn in the main scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortalGeometry {
    /// Box extruded behind the quad; hides single-eye clipping at
    /// transitions.
    Box,
    /// The bare quad.
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Per-eye resolution.
    pub width: usize,
    pub height: usize,
    /// Plan only portals whose box intersects an eye frustum.
    pub frustum_cull: bool,
    pub hidden_area: bool,
    pub portal_geometry: PortalGeometry,
    /// Clip portal views at the destination plane.
    pub oblique_clip: bool,
    pub clear_color: Rgba,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            frustum_cull: true,
            hidden_area: false,
            portal_geometry: PortalGeometry::Box,
            oblique_clip: true,
            clear_color: Rgba::BLACK,
        }
    }
}

impl RenderOptions {
    pub fn with_resolution(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    pub fn viewport(&self, side: EyeSide) -> Viewport {
        let x = match side {
            EyeSide::Left => 0,
            EyeSide::Right => self.width,
        };
        Viewport::new(x, 0, self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassPurpose {
    StencilMark,
    PortalView,
    MainScene,
    HiddenAreaMask,
}

impl PassPurpose {
    pub fn name(self) -> &'static str {
        match self {
            Self::StencilMark => "stencil-mark",
            Self::PortalView => "portal-view",
            Self::MainScene => "main-scene",
            Self::HiddenAreaMask => "hidden-area",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassEye {
    Left,
    Right,
    /// One traversal emitting both eyes.
    Both,
}

impl PassEye {
    pub fn name(self) -> &'static str {
        match self {
            Self::Left => "left",
            Self::Right => "right",
            Self::Both => "both",
        }
    }
}

impl From<EyeSide> for PassEye {
    fn from(side: EyeSide) -> Self {
        match side {
            EyeSide::Left => Self::Left,
            EyeSide::Right => Self::Right,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderPass {
    pub purpose: PassPurpose,
    pub eye: PassEye,
    /// One camera per eye this pass draws (two when instanced).
    pub views: Vec<EyeView>,
    pub stencil: StencilPolicy,
    /// Space the pass renders from.
    pub space: SpaceId,
    /// Source portal of a portal-view pass.
    pub portal: Option<PortalId>,
}

/// A portal rendered through this frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedPortal {
    pub id: PortalId,
    pub partner: PortalId,
    /// Stencil value marking this portal's pixels (index + 1).
    pub reference: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub mode: RenderMode,
    pub options: RenderOptions,
    pub passes: Vec<RenderPass>,
    pub portals: Vec<PlannedPortal>,
    /// Every enabled portal with its frustum visibility.
    pub visibility: Vec<(PortalId, bool)>,
}

impl FramePlan {
    /// Passes excluding hidden-area mask passes.
    pub fn pass_count(&self) -> usize {
        self.passes
            .iter()
            .filter(|p| p.purpose != PassPurpose::HiddenAreaMask)
            .count()
    }

    pub fn pass_spaces(&self) -> Vec<SpaceId> {
        self.passes.iter().map(|p| p.space).collect()
    }

    pub fn planned(&self, id: PortalId) -> Option<&PlannedPortal> {
        self.portals.iter().find(|p| p.id == id)
    }

    /// One line per pass: index, purpose, eye, space and portal.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, pass) in self.passes.iter().enumerate() {
            let portal = pass.portal.map_or_else(|| "-".to_owned(), |p| p.to_string());
            let _ = writeln!(
                out,
                "{i:>3} {:<12} {:<5} space={} portal={portal}",
                pass.purpose.name(),
                pass.eye.name(),
                pass.space
            );
        }
        out
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanError {
    #[error("{0} portals planned, but stencil references allow at most 254")]
    TooManyPortals(usize),
    #[error("portal {0} has no partner in the scene")]
    MissingPartner(PortalId),
    #[error(transparent)]
    Portal(#[from] PortalError),
    #[error("plan does not match scene: {0}")]
    SceneMismatch(String),
}

/// Largest number of portals a plan can hold; 255 is the hidden-area value.
pub const MAX_PLANNED_PORTALS: usize = HIDDEN_AREA_STENCIL as usize - 1;

/// Enabled portals whose box volume intersects either eye frustum.
/// Conservative: occluded portals are kept.
pub fn visible_portals(scene: &Scene, rig: &StereoRig, aspect: f64) -> Vec<PortalId> {
    let projection = rig.projection(aspect);
    let planes = projection.frustum_planes();
    let views = [rig.left_eye(), rig.right_eye()].map(|eye| eye.view_transform());
    scene
        .enabled_portals()
        .filter(|portal| {
            let corners = box_corners(portal);
            views.iter().any(|view| {
                let local = corners.map(|c| view.apply_point(&c));
                !planes
                    .iter()
                    .any(|plane| local.iter().all(|c| plane.signed_distance(c) < 0.0))
            })
        })
        .map(|p| p.id)
        .collect()
}

fn main_view(rig: &StereoRig, side: EyeSide, options: &RenderOptions) -> EyeView {
    EyeView {
        side,
        view: rig.eye(side).view_transform(),
        projection: rig.projection(options.aspect()),
        viewport: options.viewport(side),
    }
}

fn portal_view(
    scene: &Scene,
    rig: &StereoRig,
    side: EyeSide,
    portal: PortalId,
    options: &RenderOptions,
) -> Result<EyeView, PlanError> {
    let src = scene.portal(portal).ok_or(PlanError::MissingPartner(portal))?;
    let dst = scene.partner_of(src).ok_or(PlanError::MissingPartner(portal))?;
    let transform = portal_view_transform(src, dst)?;
    let view = transform.apply_pose(&rig.eye(side)).view_transform();
    let clip = options
        .oblique_clip
        .then(|| view.apply_plane(&destination_clip_plane(dst)));
    Ok(EyeView {
        side,
        view,
        projection: Projection::with_oblique(rig.projection(options.aspect()), clip),
        viewport: options.viewport(side),
    })
}

/// Builds the ordered pass list for one frame. Portal-view passes always
/// precede the main pass of the same eye.
pub fn plan_passes(
    scene: &Scene,
    rig: &StereoRig,
    mode: RenderMode,
    options: &RenderOptions,
) -> Result<FramePlan, PlanError> {
    let visible = visible_portals(scene, rig, options.aspect());
    let visibility: Vec<_> = scene
        .enabled_portals()
        .map(|p| (p.id, visible.contains(&p.id)))
        .collect();
    let planned_ids: Vec<PortalId> = if options.frustum_cull {
        visible
    } else {
        scene.enabled_portals().map(|p| p.id).collect()
    };
    if planned_ids.len() > MAX_PLANNED_PORTALS {
        return Err(PlanError::TooManyPortals(planned_ids.len()));
    }
    let mut portals = Vec::with_capacity(planned_ids.len());
    for (k, id) in planned_ids.iter().enumerate() {
        let portal = scene.portal(*id).ok_or(PlanError::MissingPartner(*id))?;
        scene.partner_of(portal).ok_or(PlanError::MissingPartner(*id))?;
        portals.push(PlannedPortal {
            id: *id,
            partner: portal.partner,
            reference: k as u8 + 1,
        });
    }

    let visible_region =
        StencilPolicy::OPAQUE.with_compare(StencilCompare::NotEqual, HIDDEN_AREA_STENCIL);
    let mark = StencilPolicy::mark_only(0).with_compare(StencilCompare::NotEqual, HIDDEN_AREA_STENCIL);

    let eye_groups: Vec<Vec<EyeSide>> = if mode.is_instanced() {
        vec![vec![EyeSide::Left, EyeSide::Right]]
    } else {
        vec![vec![EyeSide::Left], vec![EyeSide::Right]]
    };
    let pass_eye = |group: &[EyeSide]| {
        if group.len() == 2 {
            PassEye::Both
        } else {
            PassEye::from(group[0])
        }
    };

    let mut passes = Vec::new();
    if options.hidden_area {
        for group in &eye_groups {
            passes.push(RenderPass {
                purpose: PassPurpose::HiddenAreaMask,
                eye: pass_eye(group),
                views: group.iter().map(|&s| main_view(rig, s, options)).collect(),
                stencil: StencilPolicy::OPAQUE,
                space: rig.space,
                portal: None,
            });
        }
    }
    for group in &eye_groups {
        let eye = pass_eye(group);
        let main_views: Vec<_> = group.iter().map(|&s| main_view(rig, s, options)).collect();
        if mode.uses_stencil() {
            passes.push(RenderPass {
                purpose: PassPurpose::StencilMark,
                eye,
                views: main_views.clone(),
                stencil: mark,
                space: rig.space,
                portal: None,
            });
        }
        for planned in &portals {
            let dst = scene
                .portal(planned.partner)
                .ok_or(PlanError::MissingPartner(planned.id))?;
            let views = group
                .iter()
                .map(|&s| portal_view(scene, rig, s, planned.id, options))
                .collect::<Result<Vec<_>, _>>()?;
            let stencil = if mode.uses_stencil() {
                StencilPolicy::OPAQUE.with_compare(StencilCompare::Equal, planned.reference)
            } else {
                visible_region
            };
            passes.push(RenderPass {
                purpose: PassPurpose::PortalView,
                eye,
                views,
                stencil,
                space: dst.space,
                portal: Some(planned.id),
            });
        }
        let stencil = if mode.uses_stencil() {
            StencilPolicy::OPAQUE.with_compare(StencilCompare::Equal, 0)
        } else {
            visible_region
        };
        passes.push(RenderPass {
            purpose: PassPurpose::MainScene,
            eye,
            views: main_views,
            stencil,
            space: rig.space,
            portal: None,
        });
    }

    Ok(FramePlan {
        mode,
        options: *options,
        passes,
        portals,
        visibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::build_test_scene;

    fn no_cull() -> RenderOptions {
        RenderOptions {
            frustum_cull: false,
            ..RenderOptions::default()
        }
    }

    #[test]
    fn naive_pass_counts_follow_the_two_to_six_rule() {
        for (pairs, expected) in [(0, 2), (1, 6), (2, 10), (3, 14)] {
            let scene = build_test_scene(pairs).unwrap();
            let plan = plan_passes(&scene, &scene.rig, RenderMode::NaiveMultiPass, &no_cull()).unwrap();
            assert_eq!(plan.pass_count(), expected);
        }
    }

    #[test]
    fn pass_law_holds_for_every_mode_and_count() {
        let full = build_test_scene(3).unwrap();
        for n in 0..=6usize {
            // switch portals off individually to reach odd counts too
            let mut scene = full.clone();
            for portal in &mut scene.portals[n..] {
                portal.enabled = false;
            }
            for mode in RenderMode::ALL {
                let plan = plan_passes(&scene, &scene.rig, mode, &no_cull()).unwrap();
                assert_eq!(plan.pass_count(), mode.pass_law(n), "{mode} with {n} portals");
                assert_eq!(plan.portals.len(), n);
            }
        }
        let mut scene = full;
        scene.set_portal_enabled(PortalId(1), false).unwrap();
        let plan = plan_passes(&scene, &scene.rig, RenderMode::NaiveMultiPass, &no_cull()).unwrap();
        assert_eq!(plan.pass_count(), 10);
    }

    #[test]
    fn portal_views_precede_their_main_pass() {
        let scene = build_test_scene(3).unwrap();
        for mode in RenderMode::ALL {
            let plan = plan_passes(&scene, &scene.rig, mode, &no_cull()).unwrap();
            for (i, pass) in plan.passes.iter().enumerate() {
                if pass.purpose == PassPurpose::PortalView {
                    let main = plan.passes[i..]
                        .iter()
                        .position(|p| p.purpose == PassPurpose::MainScene && p.eye == pass.eye);
                    assert!(main.is_some(), "{mode}: pass {i} has no later main pass");
                }
            }
            let instanced = plan.passes.iter().all(|p| p.eye == PassEye::Both);
            assert_eq!(instanced, mode.is_instanced());
        }
    }

    #[test]
    fn hidden_area_passes_are_not_counted() {
        let scene = build_test_scene(1).unwrap();
        let options = RenderOptions {
            hidden_area: true,
            ..no_cull()
        };
        let plan = plan_passes(&scene, &scene.rig, RenderMode::StencilMultiPass, &options).unwrap();
        assert_eq!(plan.passes.len(), 10);
        assert_eq!(plan.pass_count(), 8);
    }

    #[test]
    fn portal_behind_rig_is_not_visible() {
        let scene = build_test_scene(3).unwrap();
        let mut rig = scene.rig;
        assert_eq!(visible_portals(&scene, &rig, 1.0).len(), 6);
        rig.head = crate::math::Pose::from_position_ypr_deg([0.0, 1.6, 4.0], [180.0, 0.0, 0.0]);
        assert!(visible_portals(&scene, &rig, 1.0).is_empty());
        let plan = plan_passes(&scene, &rig, RenderMode::NaiveMultiPass, &RenderOptions::default()).unwrap();
        assert_eq!(plan.pass_count(), 2);
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in RenderMode::ALL {
            assert_eq!(mode.name().parse::<RenderMode>().unwrap(), mode);
        }
        assert!("fast".parse::<RenderMode>().is_err());
    }

    #[test]
    fn dump_lists_every_pass() {
        let scene = build_test_scene(1).unwrap();
        let plan = plan_passes(&scene, &scene.rig, RenderMode::NaiveMultiPass, &no_cull()).unwrap();
        let text = plan.dump();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(text.lines().next().unwrap(), "  0 portal-view  left  space=2 portal=1");
        assert_eq!(text.lines().nth(2).unwrap(), "  2 main-scene   left  space=1 portal=-");
    }
}
