//! Deterministic software rasterizer.
//!
//! Triangles are transformed to view space, back-face culled, clipped as
//! polygons against the near, far and optional oblique planes and a guard
//! band, then filled with a top-left rule on a 1/256 pixel grid. Depth is
//! evaluated from the original triangle plane at pixel centers and stored as
//! `f32` view distance. Fragments are depth tested, then stencil tested;
//! buffers are written only when both pass.

mod dump;
mod pipeline;
mod target;

pub use pipeline::{
    apply_hidden_area_mask, default_hidden_area_mask, draw_mesh, draw_mesh_instanced_stereo,
    draw_meshes, draw_meshes_instanced, DrawItem, EyeView, MaskTriangle, Shading, GUARD_BAND,
    SUBPIXEL_STEPS,
};
pub use target::{Counters, FrameTarget, PixelSample, RasterError, StereoTarget, Viewport};

/// Stencil value reserved for pixels hidden by the headset mask.
pub const HIDDEN_AREA_STENCIL: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilCompare {
    Always,
    Equal,
    NotEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOp {
    Keep,
    Replace(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthTest {
    Less,
    /// Passes where the fragment depth equals the stored depth and the pixel
    /// has not been shaded yet this pass. Used after a depth-only pass so
    /// every pixel is shaded exactly once.
    Resolved,
    Always,
}

/// Per-draw fragment state: stencil compare and write, color and depth
/// write enables, and the depth test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilPolicy {
    pub compare: StencilCompare,
    pub reference: u8,
    pub on_pass: StencilOp,
    pub color_write: bool,
    pub depth_write: bool,
    pub depth_test: DepthTest,
}

impl Default for StencilPolicy {
    fn default() -> Self {
        Self::OPAQUE
    }
}

impl StencilPolicy {
    /// Ordinary opaque drawing; the stencil is ignored.
    pub const OPAQUE: StencilPolicy = StencilPolicy {
        compare: StencilCompare::Always,
        reference: 0,
        on_pass: StencilOp::Keep,
        color_write: true,
        depth_write: true,
        depth_test: DepthTest::Less,
    };

    /// Writes `value` into the stencil (and depth) of the nearest covered
    /// surface; color and space ids are untouched.
    pub fn mark_only(value: u8) -> Self {
        Self {
            on_pass: StencilOp::Replace(value),
            color_write: false,
            ..Self::OPAQUE
        }
    }

    pub fn with_compare(mut self, compare: StencilCompare, reference: u8) -> Self {
        self.compare = compare;
        self.reference = reference;
        self
    }

    pub fn with_depth(mut self, test: DepthTest, write: bool) -> Self {
        self.depth_test = test;
        self.depth_write = write;
        self
    }

    pub fn with_color(mut self, write: bool) -> Self {
        self.color_write = write;
        self
    }

    pub fn with_op(mut self, op: StencilOp) -> Self {
        self.on_pass = op;
        self
    }

    /// Depth-only variant used to resolve visibility before shading.
    pub fn depth_prepass(self) -> Self {
        Self {
            on_pass: StencilOp::Keep,
            color_write: false,
            depth_write: true,
            depth_test: DepthTest::Less,
            ..self
        }
    }

    /// Shading variant that follows [`StencilPolicy::depth_prepass`].
    pub fn resolved(self) -> Self {
        Self {
            color_write: true,
            depth_write: false,
            depth_test: DepthTest::Resolved,
            ..self
        }
    }

    pub fn stencil_passes(&self, value: u8) -> bool {
        match self.compare {
            StencilCompare::Always => true,
            StencilCompare::Equal => value == self.reference,
            StencilCompare::NotEqual => value != self.reference,
        }
    }
}
