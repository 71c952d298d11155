//! Deterministic stereo software renderer for traversable portals.
//!
//! The pieces, bottom up: [`math`] (transforms and projections), [`scene`]
//! (spaces, meshes, portals, the stereo rig and the scene file format),
//! [`portal`] (crossing detection, teleports, portal meshes), [`raster`]
//! (the rasterizer and its targets), [`scheduler`] (pass planning and
//! execution, per-frame stepping) and [`harness`] (benchmarks and output).

pub mod harness;
pub mod math;
pub mod portal;
pub mod raster;
pub mod scene;
pub mod scheduler;

pub use harness::{run_bench, BenchConfig, BenchError, BenchRun, SceneSelector, Summary, Trajectory};
pub use math::{Pose, Projection, Transform, Vec3};
pub use portal::{detect_crossing, portal_view_transform, teleport, CrossingEvent};
pub use raster::{Counters, FrameTarget, StereoTarget, Viewport};
pub use scene::{
    build_test_scene, four_room_scene, validate_impossible_space, EyeSide, Portal, PortalId, Scene,
    SceneError, SpaceId, StereoRig,
};
pub use scheduler::{
    frame_step, plan_passes, FrameMetrics, FramePlan, PlanError, RenderMode, RenderOptions,
    RenderPass, Renderer,
};
