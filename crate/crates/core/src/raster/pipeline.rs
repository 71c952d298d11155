use rayon::prelude::*;

use super::target::{Counters, FrameTarget, StereoTarget, Viewport};
use super::{DepthTest, StencilOp, StencilPolicy, HIDDEN_AREA_STENCIL};
use crate::math::{Plane, Projection, Transform, Vec3};
use crate::scene::{EyeSide, Mesh, Rgba, SpaceId};

/// Sub-pixel grid resolution: screen positions snap to 1/256 pixel.
pub const SUBPIXEL_STEPS: i64 = 256;

/// Clip-space guard band, in multiples of the viewport half-extent.
pub const GUARD_BAND: f64 = 8.0;

/// Rows per parallel work item.
const BAND_ROWS: usize = 8;

const MAX_POLY: usize = 16;

/// Where a mesh takes its fragment color from.
#[derive(Debug, Clone, Copy)]
pub enum Shading<'a> {
    /// Per-face color and the mesh's space id.
    Flat,
    /// Color and space id copied from the same pixel of another target
    /// (portal surfaces showing a previously rendered view).
    Sampled(&'a FrameTarget),
}

#[derive(Debug, Clone, Copy)]
pub struct DrawItem<'a> {
    pub mesh: &'a Mesh,
    pub shading: Shading<'a>,
}

impl<'a> DrawItem<'a> {
    pub fn flat(mesh: &'a Mesh) -> Self {
        Self {
            mesh,
            shading: Shading::Flat,
        }
    }
}

/// One eye's camera: world → view transform, projection and viewport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeView {
    pub side: EyeSide,
    pub view: Transform,
    pub projection: Projection,
    pub viewport: Viewport,
}

fn eye_index(side: EyeSide) -> usize {
    match side {
        EyeSide::Left => 0,
        EyeSide::Right => 1,
    }
}

#[derive(Clone, Copy)]
struct Edge {
    ax: i64,
    ay: i64,
    dx: i64,
    dy: i64,
    inclusive: bool,
}

impl Edge {
    fn new(a: [i64; 2], b: [i64; 2]) -> Self {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        Self {
            ax: a[0],
            ay: a[1],
            dx,
            dy,
            // top-left rule: exactly one of two opposite edges owns the tie
            inclusive: (dy == 0 && dx > 0) || dy < 0,
        }
    }

    fn at(&self, px: i64, py: i64) -> i64 {
        self.dx * (py - self.ay) - self.dy * (px - self.ax)
    }
}

/// Edge setup for a snapped triangle, oriented so the interior is E ≥ 0.
/// Returns `None` for zero area. The bounding box is in viewport-local
/// pixels, clamped to `[0, w) × [0, h)`.
fn setup_edges(
    mut p: [[i64; 2]; 3],
    w: usize,
    h: usize,
) -> Option<([Edge; 3], [usize; 4])> {
    let area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    if area == 0 {
        return None;
    }
    if area < 0 {
        p.swap(1, 2);
    }
    let edges = [
        Edge::new(p[0], p[1]),
        Edge::new(p[1], p[2]),
        Edge::new(p[2], p[0]),
    ];
    let half = SUBPIXEL_STEPS / 2;
    let lo = |k: usize| p.iter().map(|v| v[k]).min().unwrap();
    let hi = |k: usize| p.iter().map(|v| v[k]).max().unwrap();
    // pixel x is sampled at 256x + 128
    let x0 = (lo(0) - half + SUBPIXEL_STEPS - 1).div_euclid(SUBPIXEL_STEPS).max(0);
    let x1 = (hi(0) - half).div_euclid(SUBPIXEL_STEPS).min(w as i64 - 1);
    let y0 = (lo(1) - half + SUBPIXEL_STEPS - 1).div_euclid(SUBPIXEL_STEPS).max(0);
    let y1 = (hi(1) - half).div_euclid(SUBPIXEL_STEPS).min(h as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return Some((edges, [1, 0, 1, 0]));
    }
    Some((edges, [x0 as usize, x1 as usize + 1, y0 as usize, y1 as usize + 1]))
}

/// A fan piece ready to fill.
struct Prepared<'a> {
    eye: usize,
    origin: [usize; 2],
    /// Absolute pixel box: x in [0, 1), y in [2, 3).
    bbox: [usize; 4],
    edges: [Edge; 3],
    /// 1 / depth = a·x + b·y + c over viewport-local pixel coordinates.
    depth: [f64; 3],
    color: Rgba,
    space: SpaceId,
    source: Option<&'a FrameTarget>,
}

#[derive(Clone, Copy)]
struct Poly {
    pts: [Vec3; MAX_POLY],
    len: usize,
}

impl Poly {
    fn clip(&self, plane: &Plane) -> Poly {
        let mut out = Poly {
            pts: [Vec3::zeros(); MAX_POLY],
            len: 0,
        };
        for i in 0..self.len {
            let p = self.pts[i];
            let q = self.pts[(i + 1) % self.len];
            let dp = plane.signed_distance(&p);
            let dq = plane.signed_distance(&q);
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                // interpolate from the inside vertex so shared edges clip
                // to the same point from either triangle
                let (inside, outside, di, d_out) = if dp >= 0.0 {
                    (p, q, dp, dq)
                } else {
                    (q, p, dq, dp)
                };
                let t = di / (di - d_out);
                out.push(inside + (outside - inside) * t);
            }
        }
        out
    }

    fn push(&mut self, p: Vec3) {
        debug_assert!(self.len < MAX_POLY);
        if self.len < MAX_POLY {
            self.pts[self.len] = p;
            self.len += 1;
        }
    }
}

/// Clip planes in view space: near, far, oblique (if any), guard band.
fn clip_planes(proj: &Projection) -> Vec<Plane> {
    let (gx, gy) = (GUARD_BAND * proj.tan_half_x(), GUARD_BAND * proj.tan_half_y());
    let mut planes = vec![
        Plane {
            normal: -Vec3::z(),
            offset: -proj.near,
        },
        Plane {
            normal: Vec3::z(),
            offset: proj.far,
        },
    ];
    planes.extend(proj.oblique);
    planes.extend([
        Plane {
            normal: Vec3::new(1.0, 0.0, -gx),
            offset: 0.0,
        },
        Plane {
            normal: Vec3::new(-1.0, 0.0, -gx),
            offset: 0.0,
        },
        Plane {
            normal: Vec3::new(0.0, 1.0, -gy),
            offset: 0.0,
        },
        Plane {
            normal: Vec3::new(0.0, -1.0, -gy),
            offset: 0.0,
        },
    ]);
    planes
}

struct EyeSetup<'e> {
    eye: &'e EyeView,
    index: usize,
    planes: Vec<Plane>,
    tx: f64,
    ty: f64,
}

impl<'e> EyeSetup<'e> {
    fn new(eye: &'e EyeView) -> Self {
        Self {
            eye,
            index: eye_index(eye.side),
            planes: clip_planes(&eye.projection),
            tx: eye.projection.tan_half_x(),
            ty: eye.projection.tan_half_y(),
        }
    }

    fn snap(&self, v: &Vec3) -> [i64; 2] {
        let vp = &self.eye.viewport;
        let fx = (v.x / -v.z / self.tx + 1.0) * 0.5 * vp.width as f64;
        let fy = (1.0 - v.y / -v.z / self.ty) * 0.5 * vp.height as f64;
        [
            (fx * SUBPIXEL_STEPS as f64).round() as i64,
            (fy * SUBPIXEL_STEPS as f64).round() as i64,
        ]
    }

    /// Appends fill work for one triangle; returns false if nothing of it
    /// can produce coverage.
    fn prepare<'a>(
        &self,
        vertices: &[Vec3; 3],
        color: Rgba,
        mesh: &Mesh,
        source: Option<&'a FrameTarget>,
        out: &mut Vec<Prepared<'a>>,
    ) -> bool {
        let v = vertices.map(|p| self.eye.view.apply_point(&p));
        let n = (v[1] - v[0]).cross(&(v[2] - v[0]));
        let k = n.dot(&v[0]);
        // front-facing (counter-clockwise seen from the eye) iff n · (eye − v0) > 0
        if k == 0.0 || (mesh.cull_backfaces && k > 0.0) {
            return false;
        }
        let mut poly = Poly {
            pts: [Vec3::zeros(); MAX_POLY],
            len: 3,
        };
        poly.pts[..3].copy_from_slice(&v);
        for plane in &self.planes {
            if (0..poly.len).all(|i| plane.signed_distance(&poly.pts[i]) >= 0.0) {
                continue;
            }
            poly = poly.clip(plane);
            if poly.len < 3 {
                return false;
            }
        }
        let vp = &self.eye.viewport;
        let (w, h) = (vp.width as f64, vp.height as f64);
        let depth = [
            2.0 * n.x * self.tx / (w * k),
            -2.0 * n.y * self.ty / (h * k),
            (-n.x * self.tx + n.y * self.ty - n.z) / k,
        ];
        let snapped: Vec<[i64; 2]> = poly.pts[..poly.len].iter().map(|p| self.snap(p)).collect();
        let mut any = false;
        for i in 1..snapped.len() - 1 {
            let Some((edges, local)) =
                setup_edges([snapped[0], snapped[i], snapped[i + 1]], vp.width, vp.height)
            else {
                continue;
            };
            any = true;
            if local[0] >= local[1] || local[2] >= local[3] {
                continue;
            }
            out.push(Prepared {
                eye: self.index,
                origin: [vp.x, vp.y],
                bbox: [local[0] + vp.x, local[1] + vp.x, local[2] + vp.y, local[3] + vp.y],
                edges,
                depth,
                color,
                space: mesh.space,
                source,
            });
        }
        any
    }
}

fn prepare_items<'a>(
    items: &[DrawItem<'a>],
    eyes: &[EyeSetup<'_>],
    target: &FrameTarget,
    counters: &mut Counters,
) -> Vec<Prepared<'a>> {
    let mut out = Vec::new();
    for item in items {
        let source = match item.shading {
            Shading::Flat => None,
            Shading::Sampled(src) => {
                assert_eq!(
                    (src.width(), src.height()),
                    (target.width(), target.height()),
                    "sampled target must match the render target"
                );
                Some(src)
            }
        };
        for tri in &item.mesh.triangles {
            counters.triangles_submitted += 1;
            for eye in eyes {
                if !eye.prepare(&tri.vertices, tri.color, item.mesh, source, &mut out) {
                    counters.triangles_culled += 1;
                }
            }
        }
    }
    out
}

/// Fills prepared triangles in submission order, in parallel over row
/// bands. Every band sees the same triangle order, so output and counter
/// totals do not depend on the worker count.
fn fill(target: &mut FrameTarget, work: &[Prepared<'_>], policy: &StencilPolicy) -> Counters {
    if work.is_empty() {
        return Counters::default();
    }
    let width = target.width();
    let pass = target.pass;
    let chunk = BAND_ROWS * width;
    let FrameTarget {
        color,
        depth,
        stencil,
        space,
        stamp,
        ..
    } = target;
    color
        .par_chunks_mut(chunk)
        .zip(depth.par_chunks_mut(chunk))
        .zip(stencil.par_chunks_mut(chunk))
        .zip(space.par_chunks_mut(chunk))
        .zip(stamp.par_chunks_mut(chunk))
        .enumerate()
        .map(|(band, ((((color, depth), stencil), space), stamp))| {
            let row0 = band * BAND_ROWS;
            let rows = color.len() / width;
            let mut c = Counters::default();
            for tri in work {
                let y0 = tri.bbox[2].max(row0);
                let y1 = tri.bbox[3].min(row0 + rows);
                for y in y0..y1 {
                    let py = SUBPIXEL_STEPS * (y - tri.origin[1]) as i64 + SUBPIXEL_STEPS / 2;
                    let lx0 = tri.bbox[0] - tri.origin[0];
                    let px0 = SUBPIXEL_STEPS * lx0 as i64 + SUBPIXEL_STEPS / 2;
                    let mut e = tri.edges.map(|edge| edge.at(px0, py));
                    let step = tri.edges.map(|edge| -edge.dy * SUBPIXEL_STEPS);
                    let fy = (y - tri.origin[1]) as f64 + 0.5;
                    let row = (y - row0) * width;
                    for x in tri.bbox[0]..tri.bbox[1] {
                        let inside = (0..3).all(|k| e[k] > 0 || (e[k] == 0 && tri.edges[k].inclusive));
                        if inside {
                            let fx = (x - tri.origin[0]) as f64 + 0.5;
                            let inv = tri.depth[0] * fx + tri.depth[1] * fy + tri.depth[2];
                            let z = if inv > 0.0 { (1.0 / inv) as f32 } else { f32::INFINITY };
                            let i = row + x;
                            let depth_ok = match policy.depth_test {
                                DepthTest::Less => z < depth[i],
                                DepthTest::Resolved => z == depth[i] && stamp[i] != pass,
                                DepthTest::Always => true,
                            };
                            if !depth_ok {
                                c.fragments_depth_rejected += 1;
                            } else if !policy.stencil_passes(stencil[i]) {
                                c.fragments_stencil_rejected += 1;
                            } else {
                                if policy.depth_write {
                                    depth[i] = z;
                                }
                                if let StencilOp::Replace(v) = policy.on_pass {
                                    stencil[i] = v;
                                }
                                if policy.color_write {
                                    let (col, sid) = match tri.source {
                                        None => (tri.color, tri.space),
                                        Some(src) => {
                                            let j = (row0 * width) + i;
                                            (src.color[j], src.space[j])
                                        }
                                    };
                                    color[i] = col;
                                    space[i] = sid;
                                    stamp[i] = pass;
                                    c.fragments_shaded += 1;
                                    c.eye_fragments[tri.eye] += 1;
                                }
                            }
                        }
                        for k in 0..3 {
                            e[k] += step[k];
                        }
                    }
                }
            }
            c
        })
        .reduce(Counters::default, |a, b| a + b)
}

/// Draws meshes from one eye into `target`.
pub fn draw_meshes(
    target: &mut FrameTarget,
    items: &[DrawItem<'_>],
    eye: &EyeView,
    policy: &StencilPolicy,
) {
    let eyes = [EyeSetup::new(eye)];
    let mut counters = Counters::default();
    let work = prepare_items(items, &eyes, target, &mut counters);
    counters += fill(target, &work, policy);
    target.counters += counters;
}

/// Single-traversal stereo draw: each source triangle is prepared once per
/// eye and filled into that eye's viewport. Pixels match two
/// [`draw_meshes`] calls exactly; `triangles_submitted` counts each source
/// triangle once.
pub fn draw_meshes_instanced(
    target: &mut FrameTarget,
    items: &[DrawItem<'_>],
    eyes: &[EyeView; 2],
    policy: &StencilPolicy,
) {
    let setups = [EyeSetup::new(&eyes[0]), EyeSetup::new(&eyes[1])];
    let mut counters = Counters::default();
    let work = prepare_items(items, &setups, target, &mut counters);
    counters += fill(target, &work, policy);
    target.counters += counters;
}

/// Draws one flat-shaded mesh.
pub fn draw_mesh(
    target: &mut FrameTarget,
    mesh: &Mesh,
    view: &Transform,
    projection: &Projection,
    policy: &StencilPolicy,
    viewport: Viewport,
) {
    let eye = EyeView {
        side: EyeSide::Left,
        view: *view,
        projection: *projection,
        viewport,
    };
    draw_meshes(target, &[DrawItem::flat(mesh)], &eye, policy);
}

/// Draws one flat-shaded mesh into both halves of a stereo target with a
/// single traversal.
pub fn draw_mesh_instanced_stereo(
    target: &mut StereoTarget,
    mesh: &Mesh,
    left_view: &Transform,
    right_view: &Transform,
    projection: &Projection,
    policy: &StencilPolicy,
) {
    let eyes = [
        EyeView {
            side: EyeSide::Left,
            view: *left_view,
            projection: *projection,
            viewport: target.left_viewport(),
        },
        EyeView {
            side: EyeSide::Right,
            view: *right_view,
            projection: *projection,
            viewport: target.right_viewport(),
        },
    ];
    draw_meshes_instanced(target.frame_mut(), &[DrawItem::flat(mesh)], &eyes, policy);
}

/// Triangle in normalized viewport coordinates: (0, 0) is the top-left
/// corner, (1, 1) the bottom-right.
pub type MaskTriangle = [[f64; 2]; 3];

/// Sets the stencil to [`HIDDEN_AREA_STENCIL`] under the mask and returns
/// how many pixels became masked.
pub fn apply_hidden_area_mask(
    target: &mut FrameTarget,
    viewport: Viewport,
    mask: &[MaskTriangle],
) -> u64 {
    let width = target.width();
    let mut masked = 0;
    for tri in mask {
        let p = tri.map(|[u, v]| {
            [
                (u * viewport.width as f64 * SUBPIXEL_STEPS as f64).round() as i64,
                (v * viewport.height as f64 * SUBPIXEL_STEPS as f64).round() as i64,
            ]
        });
        let Some((edges, bbox)) = setup_edges(p, viewport.width, viewport.height) else {
            continue;
        };
        for y in bbox[2]..bbox[3] {
            let py = SUBPIXEL_STEPS * y as i64 + SUBPIXEL_STEPS / 2;
            for x in bbox[0]..bbox[1] {
                let px = SUBPIXEL_STEPS * x as i64 + SUBPIXEL_STEPS / 2;
                let inside = edges.iter().all(|e| {
                    let v = e.at(px, py);
                    v > 0 || (v == 0 && e.inclusive)
                });
                let i = (y + viewport.y) * width + x + viewport.x;
                if inside && target.stencil[i] != HIDDEN_AREA_STENCIL {
                    target.stencil[i] = HIDDEN_AREA_STENCIL;
                    masked += 1;
                }
            }
        }
    }
    masked
}

/// Corner wedges approximating the region a headset lens cannot show.
pub fn default_hidden_area_mask() -> Vec<MaskTriangle> {
    let c = 0.18;
    vec![
        [[0.0, 0.0], [c, 0.0], [0.0, c]],
        [[1.0, 0.0], [1.0, c], [1.0 - c, 0.0]],
        [[0.0, 1.0], [0.0, 1.0 - c], [c, 1.0]],
        [[1.0, 1.0], [1.0 - c, 1.0], [1.0, 1.0 - c]],
    ]
}

#[cfg(test)]
mod tests {
    use super::super::{StencilCompare, StencilPolicy};
    use super::*;
    use crate::scene::Triangle;

    fn proj() -> Projection {
        Projection::new(90f64.to_radians(), 1.0, 0.1, 100.0)
    }

    fn tri_mesh(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Mesh {
        Mesh::new(
            vec![Triangle::new(a.into(), b.into(), c.into(), Rgba::rgb(200, 10, 10))],
            SpaceId(7),
        )
    }

    fn quad_mesh(z: f64, half: f64) -> Mesh {
        let (a, b, c, d) = (
            Vec3::new(-half, -half, z),
            Vec3::new(half, -half, z),
            Vec3::new(half, half, z),
            Vec3::new(-half, half, z),
        );
        Mesh::new(
            vec![
                Triangle::new(a, b, c, Rgba::rgb(0, 200, 0)),
                Triangle::new(a, c, d, Rgba::rgb(0, 200, 0)),
            ],
            SpaceId(3),
        )
    }

    #[test]
    fn clear_resets_everything() {
        let mut t = FrameTarget::new(8, 4);
        t.counters.fragments_shaded = 9;
        t.clear(Rgba::rgb(1, 2, 3));
        let px = t.read_pixel(7, 3).unwrap();
        assert_eq!(px.color, Rgba::rgb(1, 2, 3));
        assert_eq!(px.stencil, 0);
        assert_eq!(px.space, SpaceId::BACKGROUND);
        assert!(px.depth.is_infinite());
        assert_eq!(t.counters, Counters::default());
        assert!(t.read_pixel(8, 0).is_err());
    }

    #[test]
    fn shared_diagonal_shades_each_pixel_once() {
        let mut t = FrameTarget::new(32, 32);
        let vp = t.full_viewport();
        // the quad covers the whole viewport at z = -1 with 90° fov
        draw_mesh(
            &mut t,
            &quad_mesh(-1.0, 1.0),
            &Transform::IDENTITY,
            &proj(),
            &StencilPolicy::OPAQUE.with_depth(DepthTest::Always, true),
            vp,
        );
        assert_eq!(t.counters.fragments_shaded, 32 * 32);
        assert_eq!(t.counters.triangles_submitted, 2);
    }

    #[test]
    fn reversed_winding_is_culled() {
        let mut t = FrameTarget::new(16, 16);
        let vp = t.full_viewport();
        let mesh = tri_mesh([0.0, 0.5, -2.0], [0.5, -0.5, -2.0], [-0.5, -0.5, -2.0]);
        draw_mesh(&mut t, &mesh, &Transform::IDENTITY, &proj(), &StencilPolicy::OPAQUE, vp);
        assert_eq!(t.counters.fragments_shaded, 0);
        assert_eq!(t.counters.triangles_culled, 1);
    }

    #[test]
    fn mark_only_leaves_color_alone() {
        let mut t = FrameTarget::new(16, 16);
        let vp = t.full_viewport();
        t.clear(Rgba::rgb(9, 9, 9));
        draw_mesh(
            &mut t,
            &quad_mesh(-1.0, 0.5),
            &Transform::IDENTITY,
            &proj(),
            &StencilPolicy::mark_only(4),
            vp,
        );
        assert!(t.color_buffer().iter().all(|c| *c == Rgba::rgb(9, 9, 9)));
        assert!(t.space_buffer().iter().all(|s| *s == SpaceId::BACKGROUND));
        assert_eq!(t.read_pixel(8, 8).unwrap().stencil, 4);
        assert_eq!(t.read_pixel(0, 0).unwrap().stencil, 0);
        assert_eq!(t.counters.fragments_shaded, 0);
    }

    #[test]
    fn nearer_triangle_wins_regardless_of_order() {
        for near_first in [false, true] {
            let mut t = FrameTarget::new(16, 16);
            let vp = t.full_viewport();
            let near = quad_mesh(-1.0, 0.4);
            let mut far = quad_mesh(-2.0, 2.0);
            far.space = SpaceId(9);
            let order = if near_first { [&near, &far] } else { [&far, &near] };
            for m in order {
                draw_mesh(&mut t, m, &Transform::IDENTITY, &proj(), &StencilPolicy::OPAQUE, vp);
            }
            let px = t.read_pixel(8, 8).unwrap();
            assert_eq!(px.space, SpaceId(3));
            assert_eq!(px.depth, 1.0);
        }
    }

    #[test]
    fn near_plane_clips_geometry() {
        let mut t = FrameTarget::new(16, 16);
        let vp = t.full_viewport();
        // triangle pokes through the near plane
        let mesh = tri_mesh([-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [0.0, 1.0, 0.5]);
        draw_mesh(&mut t, &mesh, &Transform::IDENTITY, &proj(), &StencilPolicy::OPAQUE, vp);
        assert!(t.counters.fragments_shaded > 0);
        assert!(t.depth_buffer().iter().all(|d| d.is_infinite() || *d >= 0.1 - 1e-6));
    }

    #[test]
    fn oblique_plane_discards_geometry_behind_it() {
        let mut t = FrameTarget::new(16, 16);
        let vp = t.full_viewport();
        // keeps only what lies beyond z = -1.5
        let plane = Plane::from_point_normal(Vec3::new(0.0, 0.0, -1.5), -Vec3::z());
        let p = proj().with_oblique(Some(plane));
        draw_mesh(&mut t, &quad_mesh(-1.0, 2.0), &Transform::IDENTITY, &p, &StencilPolicy::OPAQUE, vp);
        assert_eq!(t.counters.fragments_shaded, 0);
        draw_mesh(&mut t, &quad_mesh(-2.0, 2.0), &Transform::IDENTITY, &p, &StencilPolicy::OPAQUE, vp);
        assert_eq!(t.counters.fragments_shaded, 256);
    }

    #[test]
    fn stencil_equal_restricts_shading() {
        let mut t = FrameTarget::new(16, 16);
        let vp = t.full_viewport();
        for x in 0..8 {
            for y in 0..16 {
                t.stencil_buffer_mut()[y * 16 + x] = 1;
            }
        }
        let policy = StencilPolicy::OPAQUE.with_compare(StencilCompare::Equal, 1);
        draw_mesh(&mut t, &quad_mesh(-1.0, 2.0), &Transform::IDENTITY, &proj(), &policy, vp);
        assert_eq!(t.counters.fragments_shaded, 128);
        assert_eq!(t.counters.fragments_stencil_rejected, 128);
    }

    #[test]
    fn instanced_matches_two_single_draws() {
        let mesh = tri_mesh([-0.7, -0.6, -2.0], [0.9, -0.2, -3.0], [0.1, 0.8, -2.5]);
        let left = Transform::translation(Vec3::new(0.03, 0.0, 0.0));
        let right = Transform::translation(Vec3::new(-0.03, 0.0, 0.0));
        let mut a = StereoTarget::new(24, 20);
        draw_mesh_instanced_stereo(&mut a, &mesh, &left, &right, &proj(), &StencilPolicy::OPAQUE);
        let mut b = StereoTarget::new(24, 20);
        let (lv, rv) = (b.left_viewport(), b.right_viewport());
        draw_mesh(&mut b, &mesh, &left, &proj(), &StencilPolicy::OPAQUE, lv);
        draw_mesh(&mut b, &mesh, &right, &proj(), &StencilPolicy::OPAQUE, rv);
        assert_eq!(a.color_buffer(), b.color_buffer());
        assert_eq!(a.depth_buffer(), b.depth_buffer());
        assert_eq!(a.counters.triangles_submitted, 1);
        assert_eq!(b.counters.triangles_submitted, 2);
        assert_eq!(a.counters.fragments_shaded, b.counters.fragments_shaded);
    }

    #[test]
    fn left_pass_stays_in_left_half() {
        let mut t = StereoTarget::new(16, 16);
        let lv = t.left_viewport();
        draw_mesh(&mut t, &quad_mesh(-1.0, 5.0), &Transform::IDENTITY, &proj(), &StencilPolicy::OPAQUE, lv);
        for y in 0..16 {
            for x in 16..32 {
                assert_eq!(t.read_pixel(x, y).unwrap().space, SpaceId::BACKGROUND);
            }
        }
        assert_eq!(t.counters.fragments_shaded, 256);
    }

    #[test]
    fn hidden_area_mask_counts() {
        let mut t = FrameTarget::new(20, 20);
        let vp = t.full_viewport();
        assert_eq!(apply_hidden_area_mask(&mut t, vp, &[]), 0);
        let full = [[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]];
        assert_eq!(apply_hidden_area_mask(&mut t, vp, &full), 400);
        let policy = StencilPolicy::OPAQUE.with_compare(StencilCompare::NotEqual, HIDDEN_AREA_STENCIL);
        draw_mesh(&mut t, &quad_mesh(-1.0, 2.0), &Transform::IDENTITY, &proj(), &policy, vp);
        assert_eq!(t.counters.fragments_shaded, 0);
    }

    #[test]
    fn resolved_pass_shades_each_pixel_once() {
        let mut t = FrameTarget::new(16, 16);
        let a = quad_mesh(-1.0, 2.0);
        let b = quad_mesh(-1.0, 2.0);
        let vp = t.full_viewport();
        let eye = EyeView {
            side: EyeSide::Left,
            view: Transform::IDENTITY,
            projection: proj(),
            viewport: vp,
        };
        let items = [DrawItem::flat(&a), DrawItem::flat(&b)];
        t.begin_pass();
        draw_meshes(&mut t, &items, &eye, &StencilPolicy::OPAQUE.depth_prepass());
        draw_meshes(&mut t, &items, &eye, &StencilPolicy::OPAQUE.resolved());
        assert_eq!(t.counters.fragments_shaded, 256);
    }
}
