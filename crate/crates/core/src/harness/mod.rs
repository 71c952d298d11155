//! Benchmark harness: renders scripted camera paths frame by frame and
//! reports pass, fragment and timing statistics.

mod output;
mod trajectory;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::math::Transform;
use crate::portal::portal_view_transform;
use crate::scene::{build_test_scene, Scene, SceneError};
use crate::scheduler::{frame_step, FrameMetrics, PlanError, RenderMode, RenderOptions, Renderer};

pub use output::{emit_csv, emit_frames, summary_path, FrameRow, SUMMARY_FOOTER, SUMMARY_ROWS};
pub use trajectory::{Trajectory, ORBIT_RADIUS, WALK_ENTRY_ANGLE_DEG};

/// Smallest accepted per-eye resolution.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("no frames to write")]
    EmptySeries,
    #[error("frame {0} was not captured")]
    NotCaptured(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("image error: {0}")]
    Image(String),
}

/// Where the benchmarked scene comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SceneSelector {
    /// Built-in test scene with this many portal pairs.
    Test(u32),
    File(PathBuf),
}

impl SceneSelector {
    pub fn load(&self) -> Result<Scene, BenchError> {
        Ok(match self {
            SceneSelector::Test(pairs) => build_test_scene(*pairs)?,
            SceneSelector::File(path) => Scene::load(path)?,
        })
    }
}

impl fmt::Display for SceneSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneSelector::Test(pairs) => write!(f, "test:{pairs}"),
            SceneSelector::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl FromStr for SceneSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("test:") {
            Some(n) => n
                .parse()
                .map(SceneSelector::Test)
                .map_err(|_| format!("bad test scene selector `{s}`")),
            None if s.is_empty() => Err("empty scene selector".into()),
            None => Ok(SceneSelector::File(PathBuf::from(s))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scene: SceneSelector,
    pub mode: RenderMode,
    pub frames: usize,
    /// Per-eye width and height.
    pub width: usize,
    pub height: usize,
    pub trajectory: Trajectory,
    pub seed: u64,
    /// Keep a PNG of every k-th frame for [`emit_frames`].
    pub capture_every: Option<usize>,
    /// Rendering switches other than the resolution, which comes from
    /// `width` and `height`.
    pub render: RenderOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scene: SceneSelector::Test(3),
            mode: RenderMode::NaiveMultiPass,
            frames: 60,
            width: 256,
            height: 256,
            trajectory: Trajectory::Fixed,
            seed: 0,
            capture_every: None,
            render: RenderOptions::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.frames < 1 {
            return Err(BenchError::InvalidConfig("frames must be at least 1".into()));
        }
        if self.width < MIN_RESOLUTION || self.height < MIN_RESOLUTION {
            return Err(BenchError::InvalidConfig(format!(
                "resolution {}x{} is below {MIN_RESOLUTION}x{MIN_RESOLUTION}",
                self.width, self.height
            )));
        }
        if self.capture_every == Some(0) {
            return Err(BenchError::InvalidConfig("capture interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn render_options(&self) -> RenderOptions {
        self.render.with_resolution(self.width, self.height)
    }
}

/// Averages over a run; one column of the summary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mode: RenderMode,
    /// Enabled portals in the scene.
    pub portals: usize,
    pub fps: f64,
    pub frame_ms: f64,
    pub plan_ms: f64,
    pub raster_ms: f64,
    pub passes: f64,
    pub fragments: f64,
}

impl Summary {
    pub fn from_series(mode: RenderMode, portals: usize, series: &[FrameMetrics]) -> Option<Self> {
        if series.is_empty() {
            return None;
        }
        let n = series.len() as f64;
        let avg = |f: &dyn Fn(&FrameMetrics) -> f64| series.iter().map(f).sum::<f64>() / n;
        let frame_ms = avg(&|m| m.total_ms);
        Some(Self {
            mode,
            portals,
            fps: if frame_ms > 0.0 { 1000.0 / frame_ms } else { f64::INFINITY },
            frame_ms,
            plan_ms: avg(&|m| m.plan_ms),
            raster_ms: avg(&|m| m.raster_ms),
            passes: avg(&|m| m.pass_count as f64),
            fragments: avg(&|m| m.fragments_shaded() as f64),
        })
    }

    /// Value for one summary row name.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "fps" => self.fps,
            "frame_ms" => self.frame_ms,
            "plan_ms" => self.plan_ms,
            "raster_ms" => self.raster_ms,
            "passes" => self.passes,
            "fragments" => self.fragments,
            _ => return None,
        })
    }
}

/// Result of one configuration.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub config: BenchConfig,
    pub portals: usize,
    pub series: Vec<FrameMetrics>,
    pub summary: Summary,
    /// PNG-encoded stereo frames keyed by frame index.
    pub captures: Vec<(usize, Vec<u8>)>,
    pub teleports: usize,
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchRun, BenchError> {
    config.validate()?;
    let scene = config.scene.load()?;
    run_bench_on(&scene, config)
}

/// Runs a configuration against an already loaded scene.
pub fn run_bench_on(scene: &Scene, config: &BenchConfig) -> Result<BenchRun, BenchError> {
    config.validate()?;
    let path = config.trajectory.poses(scene, config.frames, config.seed);
    let mut renderer = Renderer::new(config.render_options());
    let mut rig = scene.start_rig();
    // accumulated teleport, mapping scripted poses into the rig's space
    let mut carried = Transform::IDENTITY;
    let mut series = Vec::with_capacity(config.frames);
    let mut captures = Vec::new();
    let mut teleports = 0;
    for (index, scripted) in path.iter().enumerate() {
        let target = carried.apply_pose(scripted);
        let (next, events) = frame_step(scene, &rig, &rig.head.position, &target);
        for event in &events {
            let src = scene.portal(event.portal).expect("event from scene portal");
            let dst = scene.partner_of(src).expect("crossed portals are partnered");
            let step = portal_view_transform(src, dst).map_err(PlanError::from)?;
            carried = carried.then(&step);
        }
        teleports += events.len();
        rig = next;
        series.push(renderer.render(scene, &rig, config.mode)?);
        if config.capture_every.is_some_and(|k| index % k == 0) {
            let png = renderer.target().encode_png().map_err(|e| BenchError::Image(e.to_string()))?;
            captures.push((index, png));
        }
    }
    let portals = scene.enabled_portals().count();
    let summary = Summary::from_series(config.mode, portals, &series).expect("frames >= 1");
    Ok(BenchRun {
        config: config.clone(),
        portals,
        series,
        summary,
        captures,
        teleports,
    })
}
