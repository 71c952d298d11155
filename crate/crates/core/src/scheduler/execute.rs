use std::time::Instant;

use super::{
    plan_passes, FramePlan, PassEye, PassPurpose, PlanError, PortalGeometry, RenderMode,
    RenderOptions, RenderPass,
};
use crate::portal::{make_placeholder, make_portal_box, make_portal_plane};
use crate::raster::{
    apply_hidden_area_mask, default_hidden_area_mask, draw_meshes, draw_meshes_instanced,
    Counters, DrawItem, FrameTarget, MaskTriangle, Shading, StencilOp, StencilPolicy,
    StereoTarget,
};
use crate::scene::{Mesh, PortalId, Scene, SpaceId, StereoRig};

#[derive(Debug, Clone, PartialEq)]
pub struct PassMetrics {
    pub purpose: PassPurpose,
    pub eye: PassEye,
    pub space: SpaceId,
    pub portal: Option<PortalId>,
    pub counters: Counters,
}

/// Per-frame measurements. Counts are deterministic; times are wall-clock.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub mode: RenderMode,
    pub total_ms: f64,
    pub plan_ms: f64,
    pub raster_ms: f64,
    pub pass_count: usize,
    /// Totals over every target written this frame.
    pub counters: Counters,
    pub passes: Vec<PassMetrics>,
    /// Space the rig was in.
    pub space: SpaceId,
}

impl FrameMetrics {
    pub fn fragments_shaded(&self) -> u64 {
        self.counters.fragments_shaded
    }

    pub fn triangles_submitted(&self) -> u64 {
        self.counters.triangles_submitted
    }

    /// Color fragments produced for one eye.
    pub fn eye_fragments(&self, eye: usize) -> u64 {
        self.counters.eye_fragments[eye]
    }
}

/// Owns the stereo target and the per-portal scratch targets used by the
/// non-stencil modes.
pub struct Renderer {
    options: RenderOptions,
    target: StereoTarget,
    scratch: Vec<FrameTarget>,
    mask: Vec<MaskTriangle>,
    frame: usize,
}

impl Renderer {
    pub fn new(options: RenderOptions) -> Self {
        Self {
            target: StereoTarget::new(options.width, options.height),
            options,
            scratch: Vec::new(),
            mask: default_hidden_area_mask(),
            frame: 0,
        }
    }

    pub fn options(&self) -> &RenderOptions {
        &self.options
    }

    pub fn set_options(&mut self, options: RenderOptions) {
        if (options.width, options.height) != (self.options.width, self.options.height) {
            self.target = StereoTarget::new(options.width, options.height);
            self.scratch.clear();
        }
        self.options = options;
    }

    pub fn set_hidden_area_mask(&mut self, mask: Vec<MaskTriangle>) {
        self.mask = mask;
    }

    pub fn target(&self) -> &StereoTarget {
        &self.target
    }

    /// Plans and executes one frame.
    pub fn render(
        &mut self,
        scene: &Scene,
        rig: &StereoRig,
        mode: RenderMode,
    ) -> Result<FrameMetrics, PlanError> {
        let start = Instant::now();
        let plan = plan_passes(scene, rig, mode, &self.options)?;
        let plan_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut metrics = self.execute(&plan, scene)?;
        metrics.plan_ms = plan_ms;
        metrics.space = rig.space;
        metrics.total_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(metrics)
    }

    /// Runs a plan's passes in order against the owned targets.
    pub fn execute(&mut self, plan: &FramePlan, scene: &Scene) -> Result<FrameMetrics, PlanError> {
        let start = Instant::now();
        if (plan.options.width, plan.options.height) != (self.options.width, self.options.height) {
            return Err(PlanError::SceneMismatch(format!(
                "plan is {}×{} per eye, renderer is {}×{}",
                plan.options.width, plan.options.height, self.options.width, self.options.height
            )));
        }
        for planned in &plan.portals {
            let ok = scene.portal(planned.id).is_some_and(|p| p.enabled && p.partner == planned.partner)
                && scene.portal(planned.partner).is_some();
            if !ok {
                return Err(PlanError::SceneMismatch(format!(
                    "portal {} is not an enabled partnered portal of this scene",
                    planned.id
                )));
            }
        }

        let geometry = FrameGeometry::build(scene, plan)?;
        let clear = plan.options.clear_color;
        self.target.clear(clear);
        let stencil_mode = plan.mode.uses_stencil();
        if !stencil_mode {
            let (w, h) = (self.target.width(), self.target.height());
            self.scratch.resize_with(plan.portals.len(), || FrameTarget::new(w, h));
            for scratch in &mut self.scratch[..plan.portals.len()] {
                scratch.clear(clear);
                if plan.options.hidden_area {
                    for vp in [self.target.left_viewport(), self.target.right_viewport()] {
                        apply_hidden_area_mask(scratch, vp, &self.mask);
                    }
                }
            }
        }

        let mut passes = Vec::with_capacity(plan.passes.len());
        for pass in &plan.passes {
            let counters = match pass.purpose {
                PassPurpose::MainScene => {
                    let mut items = geometry.world_items(None);
                    if !stencil_mode {
                        for (k, planned) in plan.portals.iter().enumerate() {
                            items.push(DrawItem {
                                mesh: geometry.surface(planned.id),
                                shading: Shading::Sampled(&self.scratch[k]),
                            });
                        }
                    }
                    measured(self.target.frame_mut(), |t| resolve_and_shade(t, &items, pass))
                }
                PassPurpose::PortalView => {
                    let src = pass.portal.expect("portal-view pass names its portal");
                    let k = plan.portals.iter().position(|p| p.id == src).expect("planned");
                    let items = geometry.world_items(Some(plan.portals[k].partner));
                    let target = if stencil_mode {
                        self.target.frame_mut()
                    } else {
                        &mut self.scratch[k]
                    };
                    measured(target, |t| resolve_and_shade(t, &items, pass))
                }
                PassPurpose::StencilMark => measured(self.target.frame_mut(), |t| {
                    t.begin_pass();
                    let world = geometry.world_items(None);
                    draw_pass(t, &world, pass, &pass.stencil.with_op(StencilOp::Keep));
                    for planned in &plan.portals {
                        let item = [DrawItem::flat(geometry.surface(planned.id))];
                        let policy = pass.stencil.with_op(StencilOp::Replace(planned.reference));
                        draw_pass(t, &item, pass, &policy);
                    }
                    for view in &pass.views {
                        t.clear_depth(view.viewport);
                    }
                }),
                PassPurpose::HiddenAreaMask => {
                    let mask = &self.mask;
                    measured(self.target.frame_mut(), |t| {
                        for view in &pass.views {
                            apply_hidden_area_mask(t, view.viewport, mask);
                        }
                    })
                }
            };
            passes.push(pass_metrics(pass, counters));
        }

        let counters = passes.iter().fold(Counters::default(), |acc, p| acc + p.counters);
        let raster_ms = start.elapsed().as_secs_f64() * 1e3;
        let frame = self.frame;
        self.frame += 1;
        Ok(FrameMetrics {
            frame,
            mode: plan.mode,
            total_ms: raster_ms,
            plan_ms: 0.0,
            raster_ms,
            pass_count: plan.pass_count(),
            counters,
            passes,
            space: SpaceId::BACKGROUND,
        })
    }
}

fn measured(target: &mut FrameTarget, f: impl FnOnce(&mut FrameTarget)) -> Counters {
    let before = target.counters;
    f(target);
    target.counters - before
}

fn pass_metrics(pass: &RenderPass, counters: Counters) -> PassMetrics {
    PassMetrics {
        purpose: pass.purpose,
        eye: pass.eye,
        space: pass.space,
        portal: pass.portal,
        counters,
    }
}

fn draw_pass(target: &mut FrameTarget, items: &[DrawItem<'_>], pass: &RenderPass, policy: &StencilPolicy) {
    match pass.views.as_slice() {
        [one] => draw_meshes(target, items, one, policy),
        [left, right] => draw_meshes_instanced(target, items, &[*left, *right], policy),
        _ => unreachable!("passes carry one or two views"),
    }
}

/// Depth-only pass, then a shading pass that colors each pixel once with
/// its nearest surface.
fn resolve_and_shade(target: &mut FrameTarget, items: &[DrawItem<'_>], pass: &RenderPass) {
    target.begin_pass();
    draw_pass(target, items, pass, &pass.stencil.depth_prepass());
    draw_pass(target, items, pass, &pass.stencil.resolved());
}

/// Meshes drawn this frame besides the scene's own.
struct FrameGeometry<'s> {
    scene: &'s Scene,
    /// Surface mesh per planned portal.
    surfaces: Vec<(PortalId, Mesh)>,
    /// Closed stand-in per scene portal, in scene order.
    placeholders: Vec<(PortalId, Mesh)>,
    /// Portals drawn through this frame.
    planned: Vec<PortalId>,
}

impl<'s> FrameGeometry<'s> {
    fn build(scene: &'s Scene, plan: &FramePlan) -> Result<Self, PlanError> {
        let mut surfaces = Vec::new();
        for planned in &plan.portals {
            let portal = scene.portal(planned.id).expect("checked");
            let mesh = match plan.options.portal_geometry {
                PortalGeometry::Box => make_portal_box(portal)?,
                PortalGeometry::Plane => make_portal_plane(portal),
            };
            surfaces.push((planned.id, mesh));
        }
        Ok(Self {
            scene,
            surfaces,
            placeholders: scene.portals.iter().map(|p| (p.id, make_placeholder(p))).collect(),
            planned: plan.portals.iter().map(|p| p.id).collect(),
        })
    }

    fn surface(&self, id: PortalId) -> &Mesh {
        &self.surfaces.iter().find(|(p, _)| *p == id).expect("planned portal").1
    }

    /// Scene meshes plus closed portals. In the main view (`through` is
    /// `None`) planned portals are left out for the caller to add; in a view
    /// through a portal every portal but the destination is closed.
    fn world_items(&self, through: Option<PortalId>) -> Vec<DrawItem<'_>> {
        let mut items: Vec<_> = self.scene.meshes.iter().map(DrawItem::flat).collect();
        for (id, mesh) in &self.placeholders {
            let skip = match through {
                Some(dst) => *id == dst,
                None => self.planned.contains(id),
            };
            if !skip {
                items.push(DrawItem::flat(mesh));
            }
        }
        items
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Pose;
    use crate::scene::build_test_scene;

    fn render(scene: &Scene, rig: &StereoRig, mode: RenderMode, size: usize) -> (FrameMetrics, Vec<u8>) {
        let mut renderer = Renderer::new(RenderOptions::default().with_resolution(size, size));
        let metrics = renderer.render(scene, rig, mode).unwrap();
        (metrics, renderer.target().color_bytes())
    }

    fn rigs(scene: &Scene) -> Vec<StereoRig> {
        let base = scene.rig;
        [
            ([0.0, 1.6, 4.0], [0.0, 0.0, 0.0]),
            ([0.7, 1.5, 2.5], [12.0, -6.0, 0.0]),
            ([-1.2, 1.7, 1.0], [-25.0, 4.0, 3.0]),
        ]
        .into_iter()
        .map(|(p, ypr)| base.with_head(Pose::from_position_ypr_deg(p, ypr)))
        .collect()
    }

    #[test]
    fn empty_scene_takes_two_passes() {
        let scene = build_test_scene(0).unwrap();
        let (m, _) = render(&scene, &scene.rig, RenderMode::NaiveMultiPass, 64);
        assert_eq!(m.pass_count, 2);
        assert!(m.fragments_shaded() <= 2 * 64 * 64);
        assert_eq!(m.passes.len(), 2);
    }

    #[test]
    fn stencil_fill_stays_within_one_screen_per_eye() {
        let scene = build_test_scene(3).unwrap();
        let size = 128;
        let (stencil, _) = render(&scene, &scene.rig, RenderMode::StencilMultiPass, size);
        let (naive, _) = render(&scene, &scene.rig, RenderMode::NaiveMultiPass, size);
        let screen = (size * size) as u64;
        assert!(stencil.eye_fragments(0) <= screen);
        assert!(stencil.eye_fragments(1) <= screen);
        assert!(naive.fragments_shaded() > 2 * screen);
        let marks: u64 = stencil
            .passes
            .iter()
            .filter(|p| p.purpose == PassPurpose::StencilMark)
            .map(|p| p.counters.fragments_shaded)
            .sum();
        assert_eq!(marks, 0);
    }

    #[test]
    fn every_mode_produces_the_same_image() {
        let scene = build_test_scene(3).unwrap();
        for rig in rigs(&scene) {
            let (_, reference) = render(&scene, &rig, RenderMode::NaiveMultiPass, 96);
            for mode in [
                RenderMode::StencilMultiPass,
                RenderMode::InstancedSinglePass,
                RenderMode::StencilInstanced,
            ] {
                let (_, image) = render(&scene, &rig, mode, 96);
                assert!(image == reference, "{mode} differs at {:?}", rig.head.position);
            }
        }
    }

    #[test]
    fn instancing_halves_submitted_triangles() {
        let scene = build_test_scene(3).unwrap();
        for rig in rigs(&scene) {
            let (naive, _) = render(&scene, &rig, RenderMode::NaiveMultiPass, 64);
            let (instanced, _) = render(&scene, &rig, RenderMode::InstancedSinglePass, 64);
            assert_eq!(naive.triangles_submitted(), 2 * instanced.triangles_submitted());
        }
    }

    #[test]
    fn portal_openings_show_their_destination() {
        let scene = build_test_scene(3).unwrap();
        let mut renderer = Renderer::new(RenderOptions::default().with_resolution(128, 128));
        renderer.render(&scene, &scene.rig, RenderMode::StencilMultiPass).unwrap();
        let left = renderer.target().left_viewport();
        let spaces = renderer.target().spaces_in(left);
        for pair in 2..=4 {
            assert!(spaces.contains(&SpaceId(pair)), "space {pair} missing from {spaces:?}");
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let scene = build_test_scene(3).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| render(&scene, &scene.rig, RenderMode::StencilMultiPass, 96))
        };
        let (a, image_a) = run(1);
        let (b, image_b) = run(4);
        assert_eq!(a.counters, b.counters);
        assert!(image_a == image_b);
    }

    #[test]
    fn foreign_plan_is_rejected() {
        let three = build_test_scene(3).unwrap();
        let none = build_test_scene(0).unwrap();
        let options = RenderOptions::default().with_resolution(32, 32);
        let plan = plan_passes(&three, &three.rig, RenderMode::NaiveMultiPass, &options).unwrap();
        let mut renderer = Renderer::new(options);
        assert!(matches!(renderer.execute(&plan, &none), Err(PlanError::SceneMismatch(_))));
        let small = RenderOptions::default().with_resolution(16, 16);
        let mut renderer = Renderer::new(small);
        assert!(matches!(renderer.execute(&plan, &three), Err(PlanError::SceneMismatch(_))));
    }

    #[test]
    fn hidden_area_mask_reduces_fill() {
        let scene = build_test_scene(3).unwrap();
        let masked = RenderOptions {
            hidden_area: true,
            ..RenderOptions::default().with_resolution(64, 64)
        };
        let mut a = Renderer::new(masked);
        let with_mask = a.render(&scene, &scene.rig, RenderMode::StencilMultiPass).unwrap();
        let (without, _) = render(&scene, &scene.rig, RenderMode::StencilMultiPass, 64);
        assert!(with_mask.fragments_shaded() < without.fragments_shaded());
        let mut b = Renderer::new(masked);
        b.render(&scene, &scene.rig, RenderMode::NaiveMultiPass).unwrap();
        assert!(a.target().color_bytes() == b.target().color_bytes());
    }
}
