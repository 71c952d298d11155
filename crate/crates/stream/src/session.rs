use std::f64::consts::FRAC_PI_2;
use std::io::Cursor;
use std::time::Instant;

use image::{ImageFormat, RgbaImage};
use stereoportal::math::{Pose, Vec3};
use stereoportal::scheduler::{PortalGeometry, RenderMode, RenderOptions, Renderer};
use stereoportal::{frame_step, PlanError, Scene, StereoRig};

use crate::protocol::{checksum, FrameHeader, FrameMessage, InputAction, InputEvent, MetricsSnapshot, ModeFlags};

/// Walking speed at full stick deflection, m/s.
pub const DEFAULT_SPEED: f64 = 1.5;
/// Pitch stays strictly inside (−π/2, π/2).
pub const PITCH_LIMIT: f64 = FRAC_PI_2 - 1e-3;

/// Input state that persists between ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Controls {
    /// Held movement, forward and strafe, length ≤ 1.
    pub movement: [f64; 2],
    pub flags: ModeFlags,
    /// Set when a respawn was requested this tick.
    pub respawn: bool,
}

/// Yaw and pitch of a pose's viewing direction, in radians.
pub fn heading(pose: &Pose) -> (f64, f64) {
    let f = pose.forward();
    ((-f.x).atan2(-f.z), f.y.clamp(-1.0, 1.0).asin())
}

fn limit_movement(forward: f64, strafe: f64) -> [f64; 2] {
    let (forward, strafe) = if forward.is_finite() && strafe.is_finite() { (forward, strafe) } else { (0.0, 0.0) };
    let len = forward.hypot(strafe);
    if len > 1.0 {
        [forward / len, strafe / len]
    } else {
        [forward, strafe]
    }
}

/// Applies one tick of input: look changes first, then movement along the
/// new facing in the horizontal plane. Toggles and respawn requests are
/// recorded in `controls`.
pub fn apply_inputs(
    rig: &StereoRig,
    controls: &mut Controls,
    events: &[InputEvent],
    dt: f64,
    speed: f64,
) -> StereoRig {
    controls.respawn = false;
    let (mut yaw, mut pitch) = heading(&rig.head);
    let mut looked = false;
    for event in events {
        match event.action {
            InputAction::Move { forward, strafe } => controls.movement = limit_movement(forward, strafe),
            InputAction::Look { yaw: dy, pitch: dp } if dy.is_finite() && dp.is_finite() => {
                yaw += dy;
                pitch = (pitch + dp).clamp(-PITCH_LIMIT, PITCH_LIMIT);
                looked = true;
            }
            InputAction::Look { .. } => {}
            InputAction::Toggle { toggle } => controls.flags.flip(toggle),
            InputAction::Respawn => controls.respawn = true,
        }
    }
    let mut head = rig.head;
    if looked {
        head = Pose::from_position_ypr_deg(head.position.into(), [yaw.to_degrees(), pitch.to_degrees(), 0.0]);
    }
    let [forward, strafe] = controls.movement;
    if forward != 0.0 || strafe != 0.0 {
        let ahead = Vec3::new(-yaw.sin(), 0.0, -yaw.cos());
        let right = Vec3::new(yaw.cos(), 0.0, -yaw.sin());
        head.position += (ahead * forward + right * strafe) * (speed * dt);
    }
    rig.with_head(head)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    /// Per-eye resolution.
    pub width: usize,
    pub height: usize,
    pub speed: f64,
    pub rate_hz: u32,
    pub flags: ModeFlags,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            speed: DEFAULT_SPEED,
            rate_hz: 30,
            flags: ModeFlags::default(),
        }
    }
}

/// One simulated rig in one scene, rendered on demand.
pub struct Session {
    scene: Scene,
    rig: StereoRig,
    controls: Controls,
    speed: f64,
    renderer: Renderer,
    frame: u64,
    frozen_left: Option<RgbaImage>,
}

impl Session {
    pub fn new(scene: Scene, config: SessionConfig) -> Self {
        let rig = scene.start_rig();
        Self {
            scene,
            rig,
            controls: Controls {
                flags: config.flags,
                ..Controls::default()
            },
            speed: config.speed,
            renderer: Renderer::new(RenderOptions::default().with_resolution(config.width, config.height)),
            frame: 0,
            frozen_left: None,
        }
    }

    pub fn rig(&self) -> &StereoRig {
        &self.rig
    }

    pub fn flags(&self) -> ModeFlags {
        self.controls.flags
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Drains one batch of input, advances the rig by `dt` seconds
    /// (teleporting if the head crosses a portal) and renders a frame.
    pub fn tick(&mut self, events: &[InputEvent], dt: f64) -> Result<FrameMessage, PlanError> {
        let start = Instant::now();
        let moved = apply_inputs(&self.rig, &mut self.controls, events, dt, self.speed);
        let teleports = if self.controls.respawn {
            self.rig = self.scene.start_rig();
            0
        } else {
            let (next, crossings) = frame_step(&self.scene, &self.rig, &self.rig.head.position, &moved.head);
            self.rig = next;
            crossings.len()
        };

        let flags = self.controls.flags;
        let options = RenderOptions {
            portal_geometry: if flags.portal_box { PortalGeometry::Box } else { PortalGeometry::Plane },
            hidden_area: flags.hidden_area,
            ..*self.renderer.options()
        };
        self.renderer.set_options(options);
        let mode = RenderMode::from_flags(flags.stencil, flags.instanced);
        let metrics = self.renderer.render(&self.scene, &self.rig, mode)?;

        let target = self.renderer.target();
        let mut image = target.to_rgba_image(target.full_viewport());
        if flags.freeze_left_eye {
            let left = target.to_rgba_image(target.left_viewport());
            let frozen = self.frozen_left.get_or_insert(left);
            image::imageops::replace(&mut image, frozen, 0, 0);
        } else {
            self.frozen_left = None;
        }
        let mut png = Vec::new();
        image
            .write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
            .expect("in-memory PNG encoding");

        let (yaw, pitch) = heading(&self.rig.head);
        let p = self.rig.head.position;
        let header = FrameHeader {
            frame: self.frame,
            width: options.width,
            height: options.height,
            checksum: checksum(&png),
            metrics: MetricsSnapshot {
                pass_count: metrics.pass_count,
                fragments: metrics.fragments_shaded(),
                frame_ms: start.elapsed().as_secs_f64() * 1e3,
                space: self.rig.space.0,
                head_position: [p.x, p.y, p.z],
                yaw,
                pitch,
                teleports,
            },
            flags,
        };
        self.frame += 1;
        Ok(FrameMessage { header, png })
    }
}
