use criterion::{criterion_group, criterion_main, Criterion};
use stereoportal::math::{Projection, Transform, Vec3};
use stereoportal::raster::{draw_mesh, draw_mesh_instanced_stereo, FrameTarget, StencilPolicy, StereoTarget};
use stereoportal::scene::{Mesh, Rgba, SpaceId, Triangle};

fn quad(depth: f64) -> Mesh {
    let v = |x: f64, y: f64| Vec3::new(x, y, -depth);
    let color = Rgba::rgb(200, 100, 50);
    Mesh::new(
        vec![
            Triangle::new(v(-5.0, -5.0), v(5.0, -5.0), v(5.0, 5.0), color),
            Triangle::new(v(-5.0, -5.0), v(5.0, 5.0), v(-5.0, 5.0), color),
        ],
        SpaceId(1),
    )
}

fn fill(c: &mut Criterion) {
    let mesh = quad(2.0);
    let projection = Projection::new(90f64.to_radians(), 1.0, 0.05, 100.0);
    let mut target = FrameTarget::new(256, 256);
    let vp = target.full_viewport();
    c.bench_function("raster/full-screen-256", |b| {
        b.iter(|| {
            target.clear(Rgba::BLACK);
            draw_mesh(&mut target, &mesh, &Transform::IDENTITY, &projection, &StencilPolicy::OPAQUE, vp)
        })
    });
    let mut stereo = StereoTarget::new(256, 256);
    let left = Transform::translation(Vec3::new(0.032, 0.0, 0.0));
    let right = Transform::translation(Vec3::new(-0.032, 0.0, 0.0));
    c.bench_function("raster/instanced-stereo-256", |b| {
        b.iter(|| {
            stereo.clear(Rgba::BLACK);
            draw_mesh_instanced_stereo(&mut stereo, &mesh, &left, &right, &projection, &StencilPolicy::OPAQUE)
        })
    });
}

criterion_group!(benches, fill);
criterion_main!(benches);
