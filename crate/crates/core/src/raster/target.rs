use std::ops::{Add, AddAssign, Deref, DerefMut, Sub};

use thiserror::Error;

use crate::scene::{EyeSide, Rgba, SpaceId};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("pixel ({x}, {y}) outside {width}×{height} target")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("image encoding failed: {0}")]
    Image(String),
}

/// Pixel rectangle inside a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Viewport {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Viewport {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    pub fn area(&self) -> u64 {
        (self.width * self.height) as u64
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

/// Raster statistics. Fragment counters count per-pixel tests; triangle
/// counters count source triangles (submitted) and per-view instances that
/// produced no coverage (culled).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Fragments that wrote color.
    pub fragments_shaded: u64,
    pub fragments_stencil_rejected: u64,
    pub fragments_depth_rejected: u64,
    pub triangles_submitted: u64,
    pub triangles_culled: u64,
    /// `fragments_shaded` split by the eye that produced them.
    pub eye_fragments: [u64; 2],
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Counters) {
        self.fragments_shaded += o.fragments_shaded;
        self.fragments_stencil_rejected += o.fragments_stencil_rejected;
        self.fragments_depth_rejected += o.fragments_depth_rejected;
        self.triangles_submitted += o.triangles_submitted;
        self.triangles_culled += o.triangles_culled;
        self.eye_fragments[0] += o.eye_fragments[0];
        self.eye_fragments[1] += o.eye_fragments[1];
    }
}

impl Add for Counters {
    type Output = Counters;

    fn add(mut self, o: Counters) -> Counters {
        self += o;
        self
    }
}

impl Sub for Counters {
    type Output = Counters;

    fn sub(self, o: Counters) -> Counters {
        Counters {
            fragments_shaded: self.fragments_shaded - o.fragments_shaded,
            fragments_stencil_rejected: self.fragments_stencil_rejected
                - o.fragments_stencil_rejected,
            fragments_depth_rejected: self.fragments_depth_rejected - o.fragments_depth_rejected,
            triangles_submitted: self.triangles_submitted - o.triangles_submitted,
            triangles_culled: self.triangles_culled - o.triangles_culled,
            eye_fragments: [
                self.eye_fragments[0] - o.eye_fragments[0],
                self.eye_fragments[1] - o.eye_fragments[1],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub color: Rgba,
    pub depth: f32,
    pub stencil: u8,
    pub space: SpaceId,
}

/// Color, depth, stencil and space-id buffers plus counters.
///
/// Depth holds view-space distance along −Z as `f32`; cleared depth is
/// `+∞`.
#[derive(Debug, Clone)]
pub struct FrameTarget {
    width: usize,
    height: usize,
    pub(crate) color: Vec<Rgba>,
    pub(crate) depth: Vec<f32>,
    pub(crate) stencil: Vec<u8>,
    pub(crate) space: Vec<SpaceId>,
    /// Pass number that last wrote color, for shade-once passes.
    pub(crate) stamp: Vec<u32>,
    pub(crate) pass: u32,
    pub counters: Counters,
}

impl FrameTarget {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            color: vec![Rgba::BLACK; n],
            depth: vec![f32::INFINITY; n],
            stencil: vec![0; n],
            space: vec![SpaceId::BACKGROUND; n],
            stamp: vec![0; n],
            pass: 0,
            counters: Counters::default(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn full_viewport(&self) -> Viewport {
        Viewport::new(0, 0, self.width, self.height)
    }

    /// Resets every buffer and the counters.
    pub fn clear(&mut self, color: Rgba) {
        self.color.fill(color);
        self.depth.fill(f32::INFINITY);
        self.stencil.fill(0);
        self.space.fill(SpaceId::BACKGROUND);
        self.stamp.fill(0);
        self.pass = 0;
        self.counters = Counters::default();
    }

    pub fn clear_depth(&mut self, viewport: Viewport) {
        for y in viewport.y..viewport.y + viewport.height {
            let row = y * self.width;
            self.depth[row + viewport.x..row + viewport.x + viewport.width].fill(f32::INFINITY);
        }
    }

    /// Starts a new pass; a [`super::DepthTest::Resolved`] draw shades each
    /// pixel at most once per pass.
    pub fn begin_pass(&mut self) {
        if self.pass == u32::MAX {
            self.stamp.fill(0);
            self.pass = 0;
        }
        self.pass += 1;
    }

    pub fn read_pixel(&self, x: usize, y: usize) -> Result<PixelSample, RasterError> {
        if x >= self.width || y >= self.height {
            return Err(RasterError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        let i = y * self.width + x;
        Ok(PixelSample {
            color: self.color[i],
            depth: self.depth[i],
            stencil: self.stencil[i],
            space: self.space[i],
        })
    }

    pub fn color_buffer(&self) -> &[Rgba] {
        &self.color
    }

    pub fn depth_buffer(&self) -> &[f32] {
        &self.depth
    }

    pub fn stencil_buffer(&self) -> &[u8] {
        &self.stencil
    }

    pub fn space_buffer(&self) -> &[SpaceId] {
        &self.space
    }

    /// Mutable stencil access, for seeding masks directly.
    pub fn stencil_buffer_mut(&mut self) -> &mut [u8] {
        &mut self.stencil
    }

    /// RGBA bytes, row-major.
    pub fn color_bytes(&self) -> Vec<u8> {
        self.color.iter().flat_map(|c| c.0).collect()
    }

    /// Distinct space ids present in a viewport.
    pub fn spaces_in(&self, viewport: Viewport) -> std::collections::BTreeSet<SpaceId> {
        (viewport.y..viewport.y + viewport.height)
            .flat_map(|y| {
                let row = y * self.width;
                self.space[row + viewport.x..row + viewport.x + viewport.width].iter().copied()
            })
            .collect()
    }
}

/// Side-by-side stereo target: left eye in columns `[0, W)`, right eye in
/// `[W, 2W)`.
#[derive(Debug, Clone)]
pub struct StereoTarget {
    frame: FrameTarget,
    eye_width: usize,
}

impl StereoTarget {
    pub fn new(eye_width: usize, height: usize) -> Self {
        Self {
            frame: FrameTarget::new(eye_width * 2, height),
            eye_width,
        }
    }

    pub fn eye_width(&self) -> usize {
        self.eye_width
    }

    pub fn viewport(&self, side: EyeSide) -> Viewport {
        let x = match side {
            EyeSide::Left => 0,
            EyeSide::Right => self.eye_width,
        };
        Viewport::new(x, 0, self.eye_width, self.frame.height())
    }

    pub fn left_viewport(&self) -> Viewport {
        self.viewport(EyeSide::Left)
    }

    pub fn right_viewport(&self) -> Viewport {
        self.viewport(EyeSide::Right)
    }

    pub fn frame(&self) -> &FrameTarget {
        &self.frame
    }

    pub fn frame_mut(&mut self) -> &mut FrameTarget {
        &mut self.frame
    }
}

impl Deref for StereoTarget {
    type Target = FrameTarget;

    fn deref(&self) -> &FrameTarget {
        &self.frame
    }
}

impl DerefMut for StereoTarget {
    fn deref_mut(&mut self) -> &mut FrameTarget {
        &mut self.frame
    }
}
