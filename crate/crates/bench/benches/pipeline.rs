use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use scatterfield::mcscatter::{render_lightfield, ScatterScene, SimConfig};
use scatterfield::*;

fn test_image(n: usize) -> Image {
    Image::from_fn(n, n, |x, y| ((x * 7 + y * 3) % 11) as f64 / 11.0).unwrap()
}

fn wiener(c: &mut Criterion) {
    let kernel = rasterize_kernel(&MediumParams::new(0.5, 5.0, 0.0).unwrap(), 0.05, 1e-3).unwrap();
    let cfg = WienerConfig::new(1e4);
    let mut group = c.benchmark_group("wiener");
    for n in [128, 256, 512] {
        let img = test_image(n);
        group.throughput(Throughput::Elements((n * n) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &img, |b, img| {
            b.iter(|| wiener_deconv(img, &kernel, &cfg).unwrap())
        });
    }
    group.finish();
}

fn convolution(c: &mut Criterion) {
    let kernel = rasterize_kernel(&MediumParams::new(0.5, 5.0, 0.0).unwrap(), 0.05, 1e-3).unwrap();
    let img = test_image(256);
    c.bench_function("conv2/256/zero-pad", |b| b.iter(|| conv2(&img, kernel.kernel(), Padding::ZeroPad).unwrap()));
}

fn refocusing(c: &mut Criterion) {
    let geom = CameraArrayGeometry::new(5, 5, 0.0225, 0.004, 3.45e-6, 2.0).unwrap();
    let lf = LightField::from_fn(geom, |_| Ok(test_image(256))).unwrap();
    let cfg = RefocusConfig::at_depth(1.5);
    c.bench_function("refocus/5x5/256", |b| b.iter(|| refocus(&lf, &cfg).unwrap()));
}

fn monte_carlo(c: &mut Criterion) {
    let (z, f, s) = (4.0, 0.01, 0.05);
    let geom = CameraArrayGeometry::new(5, 5, 5.0 * s, f, s * f / z, z).unwrap();
    let scene = ScatterScene::new(
        test_image(64),
        ObjectPlane::new(s, (0.0, 0.0)).unwrap(),
        1.0,
        MediumParams::new(0.6, 5.4, 0.0).unwrap(),
        geom,
    )
    .unwrap();
    let cfg = SimConfig::new(20_000, 1);
    let mut group = c.benchmark_group("render");
    group.sample_size(10);
    group.throughput(Throughput::Elements(cfg.n_photons));
    group.bench_function("tau6/20k-photons", |b| b.iter(|| render_lightfield(&scene, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, wiener, convolution, refocusing, monte_carlo);
criterion_main!(benches);
