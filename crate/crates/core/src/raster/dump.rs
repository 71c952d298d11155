//! PNG dumps of target buffers.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, Luma, RgbaImage};

use super::target::{FrameTarget, RasterError, Viewport};

fn image_error(e: image::ImageError) -> RasterError {
    RasterError::Image(e.to_string())
}

impl FrameTarget {
    pub fn to_rgba_image(&self, viewport: Viewport) -> RgbaImage {
        RgbaImage::from_fn(viewport.width as u32, viewport.height as u32, |x, y| {
            let i = (y as usize + viewport.y) * self.width() + x as usize + viewport.x;
            image::Rgba(self.color[i].0)
        })
    }

    fn gray(&self, viewport: Viewport, f: impl Fn(usize) -> u8) -> GrayImage {
        GrayImage::from_fn(viewport.width as u32, viewport.height as u32, |x, y| {
            Luma([f((y as usize + viewport.y) * self.width() + x as usize + viewport.x)])
        })
    }

    /// Depth as brightness: near is white, `max_depth` and beyond are black.
    pub fn depth_image(&self, viewport: Viewport, max_depth: f32) -> GrayImage {
        self.gray(viewport, |i| {
            let d = self.depth[i];
            if d.is_finite() {
                (255.0 * (1.0 - (d / max_depth).clamp(0.0, 1.0))).round() as u8
            } else {
                0
            }
        })
    }

    pub fn stencil_image(&self, viewport: Viewport) -> GrayImage {
        self.gray(viewport, |i| self.stencil[i])
    }

    /// Space ids spread over the gray range; background stays black.
    pub fn space_image(&self, viewport: Viewport) -> GrayImage {
        self.gray(viewport, |i| match self.space[i].0 {
            0 => 0,
            id => (40 + (id * 53) % 216) as u8,
        })
    }

    /// Lossless PNG of the whole color buffer.
    pub fn encode_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut bytes = Vec::new();
        self.to_rgba_image(self.full_viewport())
            .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
            .map_err(image_error)?;
        Ok(bytes)
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        self.to_rgba_image(self.full_viewport())
            .save_with_format(path, ImageFormat::Png)
            .map_err(image_error)
    }

    /// Writes `<stem>_depth.png`, `<stem>_stencil.png` and `<stem>_space.png`
    /// into `dir`.
    pub fn write_debug_pngs(
        &self,
        dir: impl AsRef<Path>,
        stem: &str,
        max_depth: f32,
    ) -> Result<(), RasterError> {
        let dir = dir.as_ref();
        let vp = self.full_viewport();
        let save = |img: GrayImage, suffix: &str| {
            img.save_with_format(dir.join(format!("{stem}_{suffix}.png")), ImageFormat::Png)
                .map_err(image_error)
        };
        save(self.depth_image(vp, max_depth), "depth")?;
        save(self.stencil_image(vp), "stencil")?;
        save(self.space_image(vp), "space")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Rgba;

    #[test]
    fn png_round_trip_is_lossless() {
        let mut t = FrameTarget::new(5, 3);
        t.clear(Rgba([10, 20, 30, 255]));
        t.color[7] = Rgba([1, 2, 3, 4]);
        let bytes = t.encode_png().unwrap();
        let img = image::load_from_memory(&bytes).unwrap().to_rgba8();
        assert_eq!(img.as_raw(), &t.color_bytes());
    }

    #[test]
    fn debug_dumps_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let t = FrameTarget::new(4, 4);
        t.write_debug_pngs(dir.path(), "f", 10.0).unwrap();
        for s in ["depth", "stencil", "space"] {
            assert!(dir.path().join(format!("f_{s}.png")).exists());
        }
    }
}
