use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterfield::backscatter::{reconstruct_dlimj, DcpConfig, ReconstructMode};
use scatterfield::deconv::{conv4d, refocus_kernel4d, AngularBoundary, Kernel4D};
use scatterfield::io::{load_lightfield, quantize_f32, save_lightfield};
use scatterfield::mcscatter::{render_lightfield, ScatterScene, SimConfig};
use scatterfield::refocus::{Boundary, Interpolation, Normalization};
use scatterfield::*;

fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Image {
    Image::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
}

fn random_kernel(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Kernel2D {
    Kernel2D::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn refocus_commutes_with_4d_filtering() {
    // Two pixels of shift per camera step.
    let geom = CameraArrayGeometry::new(5, 5, 0.02, 0.01, 1e-4, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let lf = LightField::from_fn(geom, |_| Ok(random_image(24, 20, &mut rng))).unwrap();
    let cfg = RefocusConfig::at_depth(1.0)
        .with_normalization(Normalization::Sum)
        .with_boundary(Boundary::Periodic)
        .with_interpolation(Interpolation::Nearest);
    let kernels = [
        Kernel4D::separable(&random_kernel(3, 3, &mut rng), &random_kernel(5, 3, &mut rng)).unwrap(),
        Kernel4D::new([3, 3, 3, 5], (0..135).map(|_| rng.random::<f64>()).collect()).unwrap(),
    ];
    for k in &kernels {
        let lhs = refocus(&conv4d(&lf, k, AngularBoundary::Extend).unwrap(), &cfg).unwrap();
        let rk = refocus_kernel4d(k, &cfg, &geom).unwrap();
        let rhs = conv2(&refocus(&lf, &cfg).unwrap(), &rk, Padding::Periodic).unwrap();
        let scale = rhs.max_value();
        assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * scale, "{}", lhs.max_abs_diff(&rhs) / scale);
    }
}

fn bordered_target(n: usize, margin: usize) -> Image {
    Image::from_fn(n, n, |x, y| {
        let inside = (margin..n - margin).contains(&x) && (margin..n - margin).contains(&y);
        if !inside {
            0.0
        } else if ((x / 6) + (y / 9)) % 3 == 0 {
            0.9
        } else {
            0.1 + 0.5 * ((x * 7 + y * 3) % 11) as f64 / 11.0
        }
    })
    .unwrap()
}

#[test]
fn wiener_error_falls_as_zeta_rises() {
    let kernel = rasterize_kernel(&MediumParams::new(0.5, 5.0, 0.0).unwrap(), 0.1, 1e-3).unwrap();
    let truth = bordered_target(96, kernel.half_width() + 1);
    let blurred = conv2(&truth, &kernel.kernel().plus_impulse(1.0).unwrap(), Padding::ZeroPad).unwrap();
    let errors: Vec<f64> = [1e2, 1e4, 1e6, 1e8]
        .into_iter()
        .map(|zeta| {
            let out = wiener_deconv(&blurred, &kernel, &WienerConfig::new(zeta)).unwrap();
            out.as_slice().iter().zip(truth.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(psnr(&truth, &wiener_deconv(&blurred, &kernel, &WienerConfig::new(1e8)).unwrap(), 1.0).unwrap() > 60.0);
}

#[test]
fn self_luminous_undoes_attenuation() {
    let kernel = rasterize_kernel(&MediumParams::new(0.5, 5.0, 0.0).unwrap(), 0.1, 1e-3).unwrap();
    let truth = bordered_target(80, kernel.half_width() + 1);
    let gamma = 0.2;
    let blurred =
        conv2(&truth, &kernel.kernel().plus_impulse(1.0).unwrap(), Padding::ZeroPad).unwrap().scaled(gamma).unwrap();
    let dcp = DcpConfig::default();
    let rec =
        reconstruct_dlimj(&blurred, &kernel, &dcp, &WienerConfig::new(1e8), ReconstructMode::SelfLuminous { gamma })
            .unwrap();
    assert!(psnr(&truth, &rec.image, 1.0).unwrap() > 60.0);
    assert!(rec.transmission.is_none());
    for gamma in [0.0, 1.5, f64::NAN] {
        let mode = ReconstructMode::SelfLuminous { gamma };
        assert!(reconstruct_dlimj(&blurred, &kernel, &dcp, &WienerConfig::new(1e8), mode).is_err());
    }
}

#[test]
fn passive_mode_removes_airlight() {
    let kernel = rasterize_kernel(&MediumParams::new(1.0, 5.0, 0.0).unwrap(), 0.1, 1e-3).unwrap();
    let n = 96;
    // Dark bars give every DCP window a near-black pixel.
    let plane = |gain: f64| {
        Image::from_fn(
            n,
            n,
            |x, y| if (x / 3) % 3 == 0 { 0.0 } else { gain * (0.4 + 0.6 * ((x + 2 * y) % 13) as f64 / 13.0) },
        )
        .unwrap()
    };
    let truth = Image::from_channels(&[plane(1.0), plane(0.8), plane(0.6)]).unwrap();
    let forward = conv2(&truth, &kernel.kernel().plus_impulse(0.02).unwrap(), Padding::ZeroPad).unwrap();
    let forward = forward.scaled(1.0 / forward.max_value()).unwrap();
    // Transmission falls from left to right; airlight is gray.
    let b = 0.7;
    let t = |x: usize| 0.9 - 0.5 * x as f64 / n as f64;
    let mut hazy = forward.clone();
    for c in 0..3 {
        for y in 0..n {
            for x in 0..n {
                hazy.set(x, y, c, forward.get(x, y, c) * t(x) + b * (1.0 - t(x)));
            }
        }
    }
    let dcp = DcpConfig { window: 7, ..DcpConfig::default() };
    let cfg = WienerConfig::new(1e4).with_scatter_weight(0.02);
    let passive = reconstruct_dlimj(&hazy, &kernel, &dcp, &cfg, ReconstructMode::Passive).unwrap();
    let naive = reconstruct_dlimj(&hazy, &kernel, &dcp, &cfg, ReconstructMode::SelfLuminous { gamma: 1.0 }).unwrap();
    let atmo = passive.atmosphere.as_ref().unwrap();
    assert!(atmo.b_inf.iter().all(|v| (v - b).abs() < 0.15), "{:?}", atmo.b_inf);
    let score = |img: &Image| psnr(&truth.peak_normalized(), &img.peak_normalized(), 1.0).unwrap();
    assert!(score(&passive.image) > score(&naive.image) + 3.0, "{} vs {}", score(&passive.image), score(&naive.image));
    let tmap = passive.transmission.unwrap();
    assert!(tmap.t.as_slice().iter().all(|v| (dcp.t_min..=1.0).contains(v)));
}

#[test]
fn brighter_airlight_estimates_rise() {
    let kernel = rasterize_kernel(&MediumParams::new(1.0, 5.0, 0.0).unwrap(), 0.1, 1e-3).unwrap();
    let base = bordered_target(48, 0);
    let dcp = DcpConfig::default();
    let mut last = 0.0;
    for b in [0.2, 0.4, 0.6, 0.8] {
        let hazy = Image::from_vec(48, 48, 1, base.as_slice().iter().map(|v| 0.3 * v + 0.7 * b).collect()).unwrap();
        let rec = reconstruct_dlimj(&hazy, &kernel, &dcp, &WienerConfig::new(1e4), ReconstructMode::Passive).unwrap();
        let est = rec.atmosphere.unwrap().b_inf[0];
        assert!(est > last, "{est} <= {last}");
        last = est;
    }
}

#[test]
fn saved_lightfield_refocuses_identically() {
    let (z, f, s) = (4.0, 0.01, 0.05);
    let geom = CameraArrayGeometry::new(3, 3, 3.0 * s, f, s * f / z, z).unwrap();
    let emitter = bordered_target(24, 4);
    let scene = ScatterScene::new(
        emitter,
        ObjectPlane::new(s, (0.0, 0.0)).unwrap(),
        1.0,
        MediumParams::new(0.2, 2.0, 0.3).unwrap(),
        geom,
    )
    .unwrap();
    let lf = render_lightfield(&scene, &SimConfig::new(20_000, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_lightfield(dir.path(), &lf, None).unwrap();
    let loaded = load_lightfield(dir.path()).unwrap().lightfield;
    let quantized = LightField::new(geom, lf.views().iter().map(quantize_f32).collect()).unwrap();
    assert_eq!(loaded, quantized);
    let cfg = RefocusConfig::at_depth(z);
    let a = refocus(&loaded, &cfg).unwrap();
    let b = refocus(&quantized, &cfg).unwrap();
    assert!(a.max_abs_diff(&b) <= 1e-12);
    assert!(a.max_abs_diff(&refocus(&lf, &cfg).unwrap()) <= 1e-6 * a.max_value());
}
