//! Frequency-domain convolution, Wiener inversion, and a dense 4-D light-field
//! convolution used to check that refocusing commutes with filtering.

use serde::{Deserialize, Serialize};

use crate::diffusion::DiffuseKernel;
use crate::error::{ensure_positive, Error, Result};
use crate::fft::{next_fast_len, Fft2};
use crate::geometry::CameraArrayGeometry;
use crate::image::Image;
use crate::kernel::Kernel2D;
use crate::lightfield::LightField;
use crate::refocus::{self, Boundary, RefocusConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Linear convolution: pad to at least `N + K - 1` (rounded up to a fast
    /// transform size) and crop back.
    #[default]
    ZeroPad,
    /// Circular convolution on the image grid itself.
    Periodic,
}

/// Frequency-dependent noise-to-signal ratio, sampled on a centered grid of
/// normalized frequencies `[-0.5, 0.5)` per axis and looked up by nearest
/// neighbor. Replaces the scalar `1 / zeta` when supplied. Only non-negative
/// horizontal frequencies are looked up, so the map should be symmetric under
/// `f -> -f`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsrMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl NsrMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::invalid("NSR map dimensions do not match its data"));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("NSR map entries must be finite and >= 0"));
        }
        Ok(Self { width, height, data })
    }

    fn lookup(&self, fx: f64, fy: f64) -> f64 {
        let x = (((fx + 0.5) * self.width as f64).floor() as i64).clamp(0, self.width as i64 - 1) as usize;
        let y = (((fy + 0.5) * self.height as f64).floor() as i64).clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WienerConfig {
    /// Signal-to-noise weight; the filter adds `1 / zeta` to `|K|^2`.
    pub zeta: f64,
    pub padding: Padding,
    /// Deconvolve with `delta + scatter_weight * kernel` instead of the kernel
    /// alone, letting the ballistic component through unblurred.
    pub include_ballistic_impulse: bool,
    /// Energy of the scattered halo relative to the ballistic image (1 for
    /// the plain `kernel + delta` model).
    pub scatter_weight: f64,
    pub nsr_map: Option<NsrMap>,
}

impl WienerConfig {
    pub fn new(zeta: f64) -> Self {
        Self { zeta, padding: Padding::ZeroPad, include_ballistic_impulse: true, scatter_weight: 1.0, nsr_map: None }
    }

    pub fn with_padding(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_ballistic_impulse(mut self, on: bool) -> Self {
        self.include_ballistic_impulse = on;
        self
    }

    pub fn with_scatter_weight(mut self, weight: f64) -> Self {
        self.scatter_weight = weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("zeta", self.zeta)?;
        if !(self.scatter_weight.is_finite() && self.scatter_weight >= 0.0) {
            return Err(Error::invalid(format!(
                "scatter_weight must be finite and >= 0 (got {})",
                self.scatter_weight
            )));
        }
        Ok(())
    }

    /// Kernel actually inverted for a given diffuse kernel.
    pub fn effective_kernel(&self, kernel: &Kernel2D) -> Result<Kernel2D> {
        if self.include_ballistic_impulse {
            kernel.plus_impulse(self.scatter_weight)
        } else {
            kernel.scaled(self.scatter_weight)
        }
    }
}

/// Wiener output plus the transform grid used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerOutput {
    pub image: Image,
    pub transform_size: (usize, usize),
}

/// FFT grid for `padding`. Only forward convolution requires the kernel to fit
/// inside the image; the padded grid always holds the full linear result.
fn transform_size(img: &Image, kernel: &Kernel2D, padding: Padding, kernel_must_fit: bool) -> Result<(usize, usize)> {
    match padding {
        Padding::Periodic => Ok((img.width(), img.height())),
        Padding::ZeroPad => {
            if kernel_must_fit && (kernel.width() > img.width() || kernel.height() > img.height()) {
                return Err(Error::invalid(format!(
                    "{}x{} kernel is larger than the {}x{} image",
                    kernel.width(),
                    kernel.height(),
                    img.width(),
                    img.height()
                )));
            }
            Ok((next_fast_len(img.width() + kernel.width() - 1), next_fast_len(img.height() + kernel.height() - 1)))
        }
    }
}

/// Convolves every channel of `image` with `kernel`.
pub fn conv2(image: &Image, kernel: &Kernel2D, padding: Padding) -> Result<Image> {
    let (pw, ph) = transform_size(image, kernel, padding, true)?;
    let (w, h, channels) = image.dims();
    let fft = Fft2::new(pw, ph);
    let kf = fft.forward_kernel(kernel);
    let scale = 1.0 / (pw * ph) as f64;
    let mut out = Vec::with_capacity(w * h * channels);
    for c in 0..channels {
        let mut g = fft.forward_plane(image.channel(c), w, h);
        g.data.iter_mut().zip(&kf.data).for_each(|(a, b)| *a *= b);
        fft.inverse_into(&mut g, w, h, scale, &mut out);
    }
    // Non-negative inputs: anything below zero is transform round-off.
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(Image::from_raw(w, h, channels, out))
}

/// Wiener deconvolution of a diffuse-kernel blur; see [`WienerConfig`].
pub fn wiener_deconv(image: &Image, kernel: &DiffuseKernel, config: &WienerConfig) -> Result<Image> {
    wiener_deconv_detailed(image, kernel, config).map(|o| o.image)
}

pub fn wiener_deconv_detailed(image: &Image, kernel: &DiffuseKernel, config: &WienerConfig) -> Result<WienerOutput> {
    config.validate()?;
    let effective = config.effective_kernel(kernel.kernel())?;
    wiener_with_kernel(image, &effective, config)
}

/// Wiener deconvolution with `kernel` used exactly as given (the impulse and
/// scatter weight settings of `config` are ignored).
pub fn wiener_with_kernel(image: &Image, kernel: &Kernel2D, config: &WienerConfig) -> Result<WienerOutput> {
    config.validate()?;
    if kernel.is_zero() {
        return Err(Error::invalid("deconvolution kernel is all zeros"));
    }
    let (pw, ph) = transform_size(image, kernel, config.padding, false)?;
    let (w, h, channels) = image.dims();

    // The kernel spectrum becomes the filter in place, with the inverse
    // transform's normalization folded in.
    let fft = Fft2::new(pw, ph);
    let mut filter = fft.forward_kernel(kernel);
    let scale = 1.0 / (pw * ph) as f64;
    let inv_zeta = 1.0 / config.zeta;
    for (i, k) in filter.data.iter_mut().enumerate() {
        let nsr = match &config.nsr_map {
            Some(map) => {
                let (kx, ky) = fft.frequency(i);
                map.lookup(centered_freq(kx, pw), centered_freq(ky, ph))
            }
            None => inv_zeta,
        };
        *k = k.conj() * (scale / (k.norm_sqr() + nsr));
    }

    let mut out = Vec::with_capacity(w * h * channels);
    for c in 0..channels {
        let mut g = fft.forward_plane(image.channel(c), w, h);
        g.data.iter_mut().zip(&filter.data).for_each(|(a, f)| *a *= f);
        fft.inverse_into(&mut g, w, h, 1.0, &mut out);
    }
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(WienerOutput { image: Image::from_raw(w, h, channels, out), transform_size: (pw, ph) })
}

fn centered_freq(i: usize, n: usize) -> f64 {
    let k = if i < n.div_ceil(2) { i as f64 } else { i as f64 - n as f64 };
    k / n as f64
}

/// Dense filter over `(du, dv, ds, dt)` offsets, all extents odd.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel4D {
    extents: [usize; 4],
    data: Vec<f64>,
}

impl Kernel4D {
    /// `data` is indexed `[du][dv][dt][ds]` (angular outer, then a row-major
    /// spatial slice).
    pub fn new(extents: [usize; 4], data: Vec<f64>) -> Result<Self> {
        if extents.iter().any(|e| e % 2 == 0) {
            return Err(Error::invalid(format!("4-D kernel extents must be odd (got {extents:?})")));
        }
        if data.len() != extents.iter().product::<usize>() {
            return Err(Error::DimensionMismatch("4-D kernel data length does not match extents".into()));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("4-D kernel samples must be finite and >= 0"));
        }
        Ok(Self { extents, data })
    }

    pub fn impulse() -> Self {
        Self { extents: [1, 1, 1, 1], data: vec![1.0] }
    }

    /// Outer product of an angular filter and a spatial filter.
    pub fn separable(angular: &Kernel2D, spatial: &Kernel2D) -> Result<Self> {
        let mut data = Vec::with_capacity(angular.as_slice().len() * spatial.as_slice().len());
        for du in 0..angular.width() {
            for dv in 0..angular.height() {
                let a = angular.as_slice()[dv * angular.width() + du];
                data.extend(spatial.as_slice().iter().map(|b| a * b));
            }
        }
        Self::new([angular.width(), angular.height(), spatial.width(), spatial.height()], data)
    }

    pub fn extents(&self) -> [usize; 4] {
        self.extents
    }

    /// Spatial slice for angular offset index `(iu, iv)` (0-based).
    pub fn slice(&self, iu: usize, iv: usize) -> &[f64] {
        let n = self.extents[2] * self.extents[3];
        let start = (iu * self.extents[1] + iv) * n;
        &self.data[start..start + n]
    }

    pub fn spatial_kernel(&self, iu: usize, iv: usize) -> Kernel2D {
        Kernel2D::new(self.extents[2], self.extents[3], self.slice(iu, iv).to_vec())
            .expect("slices inherit the kernel invariants")
    }
}

/// Treatment of the angular (view) axes in [`conv4d`]; spatial axes always wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngularBoundary {
    /// View indices wrap around the grid.
    #[default]
    Periodic,
    /// Full linear convolution: the output grid grows by the kernel's angular
    /// extent minus one, with the same camera spacing.
    Extend,
}

/// Upper bound on `views * pixels * kernel samples` accepted by [`conv4d`].
pub const DEFAULT_CONV4D_BUDGET: usize = 200_000_000;

/// Direct 4-D convolution of a light field (test-scale).
pub fn conv4d(lf: &LightField, k: &Kernel4D, angular: AngularBoundary) -> Result<LightField> {
    conv4d_with_budget(lf, k, angular, DEFAULT_CONV4D_BUDGET)
}

pub fn conv4d_with_budget(
    lf: &LightField,
    k: &Kernel4D,
    angular: AngularBoundary,
    budget: usize,
) -> Result<LightField> {
    let g = lf.geometry();
    let (w, h, channels) = lf.view_dims();
    let [ku, kv, ks, kt] = k.extents();
    let (out_u, out_v) = match angular {
        AngularBoundary::Periodic => (g.grid_u, g.grid_v),
        AngularBoundary::Extend => (g.grid_u + ku - 1, g.grid_v + kv - 1),
    };
    let work =
        (out_u * out_v).checked_mul(w * h * channels).and_then(|n| n.checked_mul(k.data.len())).unwrap_or(usize::MAX);
    if work > budget {
        return Err(Error::TooLarge(format!("4-D convolution needs {work} multiply-adds (budget {budget})")));
    }
    let out_geom = CameraArrayGeometry::new(out_u, out_v, g.baseline, g.focal_length, g.pixel_pitch, g.object_depth)?;
    let (hu, hv, hs, ht) = ((ku / 2) as i64, (kv / 2) as i64, (ks / 2) as i64, (kt / 2) as i64);

    let mut views = Vec::with_capacity(out_u * out_v);
    for ov in 0..out_v as i64 {
        for ou in 0..out_u as i64 {
            let mut data = vec![0.0; w * h * channels];
            for iu in 0..ku as i64 {
                for iv in 0..kv as i64 {
                    // Source view index in input-grid coordinates.
                    let (su, sv) = match angular {
                        AngularBoundary::Periodic => {
                            ((ou - (iu - hu)).rem_euclid(g.grid_u as i64), (ov - (iv - hv)).rem_euclid(g.grid_v as i64))
                        }
                        AngularBoundary::Extend => (ou - iu, ov - iv),
                    };
                    if su < 0 || sv < 0 || su >= g.grid_u as i64 || sv >= g.grid_v as i64 {
                        continue;
                    }
                    let src = &lf.views()[sv as usize * g.grid_u + su as usize];
                    let slice = k.slice(iu as usize, iv as usize);
                    for c in 0..channels {
                        let plane = src.channel(c);
                        let dst = &mut data[c * w * h..(c + 1) * w * h];
                        accumulate_periodic(dst, plane, w, h, slice, ks, kt, hs, ht);
                    }
                }
            }
            views.push(Image::from_raw(w, h, channels, data));
        }
    }
    LightField::new(out_geom, views)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_periodic(
    dst: &mut [f64],
    plane: &[f64],
    w: usize,
    h: usize,
    slice: &[f64],
    ks: usize,
    kt: usize,
    hs: i64,
    ht: i64,
) {
    for jt in 0..kt {
        for js in 0..ks {
            let kval = slice[jt * ks + js];
            if kval == 0.0 {
                continue;
            }
            let ds = js as i64 - hs;
            let dt = jt as i64 - ht;
            for y in 0..h {
                let sy = (y as i64 - dt).rem_euclid(h as i64) as usize;
                for x in 0..w {
                    let sx = (x as i64 - ds).rem_euclid(w as i64) as usize;
                    dst[y * w + x] += kval * plane[sy * w + sx];
                }
            }
        }
    }
}

/// Refocuses a 4-D kernel with the same shift-and-add as [`refocus::refocus`]:
/// each angular slice is translated by its view offset times the per-step
/// shift and the slices are reduced with the configured normalization.
pub fn refocus_kernel4d(k: &Kernel4D, config: &RefocusConfig, geometry: &CameraArrayGeometry) -> Result<Kernel2D> {
    let step = refocus::shift_per_step(config, geometry)?;
    let [ku, kv, ks, kt] = k.extents();
    let (hu, hv) = ((ku / 2) as f64, (kv / 2) as f64);
    let reach_u = (hu * step.abs()).ceil() as usize + 1;
    let reach_v = (hv * step.abs()).ceil() as usize + 1;
    let (w, h) = (ks + 2 * reach_u, kt + 2 * reach_v);

    // Embed each slice centered in a canvas wide enough that no shifted
    // sample wraps.
    let mut canvases = Vec::with_capacity(ku * kv);
    let mut shifts = Vec::with_capacity(ku * kv);
    for iv in 0..kv {
        for iu in 0..ku {
            let slice = k.slice(iu, iv);
            let mut canvas = vec![0.0; w * h];
            for y in 0..kt {
                for x in 0..ks {
                    canvas[(y + reach_v) * w + x + reach_u] = slice[y * ks + x];
                }
            }
            canvases.push(canvas);
            shifts.push(((iu as f64 - hu) * step, (iv as f64 - hv) * step));
        }
    }
    let sources: Vec<(&[f64], (f64, f64))> = canvases.iter().map(|c| c.as_slice()).zip(shifts).collect();
    let data = refocus::shift_and_add(&sources, w, h, config.interpolation, Boundary::Periodic, config.normalization);
    Kernel2D::new(w, h, data.into_iter().map(|v| v.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{rasterize_kernel, MediumParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
    }

    fn random_kernel(w: usize, h: usize, seed: u64) -> Kernel2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Kernel2D::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    /// Spatial-domain double sum with zeros outside the image.
    fn direct_conv(img: &Image, k: &Kernel2D, periodic: bool) -> Vec<f64> {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let (hw, hh) = (k.half_width() as i64, k.half_height() as i64);
        let mut out = vec![0.0; (w * h) as usize];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in -hh..=hh {
                    for dx in -hw..=hw {
                        let (mut sx, mut sy) = (x - dx, y - dy);
                        if periodic {
                            sx = sx.rem_euclid(w);
                            sy = sy.rem_euclid(h);
                        } else if sx < 0 || sy < 0 || sx >= w || sy >= h {
                            continue;
                        }
                        acc += k.at(dx, dy) * img.get(sx as usize, sy as usize, 0);
                    }
                }
                out[(y * w + x) as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn impulse_is_identity() {
        let img = random_image(9, 7, 1);
        for p in [Padding::ZeroPad, Padding::Periodic] {
            let out = conv2(&img, &Kernel2D::impulse(), p).unwrap();
            assert!(out.max_abs_diff(&img) < 1e-14);
        }
    }

    #[test]
    fn periodic_preserves_constant() {
        let img = Image::constant(12, 10, 1, 0.3).unwrap();
        let mut k = random_kernel(5, 5, 3);
        k = k.scaled(1.0 / k.sum()).unwrap();
        let out = conv2(&img, &k, Padding::Periodic).unwrap();
        assert!(out.as_slice().iter().all(|v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn matches_direct_double_sum() {
        let img = random_image(16, 16, 7);
        let k = random_kernel(5, 5, 8);
        for (p, periodic) in [(Padding::ZeroPad, false), (Padding::Periodic, true)] {
            let fast = conv2(&img, &k, p).unwrap();
            let slow = direct_conv(&img, &k, periodic);
            let err = fast.as_slice().iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{p:?}: {err}");
        }
    }

    #[test]
    fn zero_pad_rejects_oversized_kernel() {
        let img = random_image(4, 4, 1);
        assert!(conv2(&img, &random_kernel(5, 3, 2), Padding::ZeroPad).is_err());
        assert!(conv2(&img, &random_kernel(5, 3, 2), Padding::Periodic).is_ok());
    }

    #[test]
    fn parseval() {
        let img = random_image(12, 10, 4);
        let k = random_kernel(3, 5, 5);
        let out = conv2(&img, &k, Padding::Periodic).unwrap();
        let fft = Fft2::new(12, 10);
        let (gi, gk) = (fft.forward_plane(img.as_slice(), 12, 10), fft.forward_kernel(&k));
        // Half spectrum: interior columns stand for themselves and their mirror.
        let freq: f64 = gi
            .data
            .iter()
            .zip(&gk.data)
            .enumerate()
            .map(|(i, (a, b))| {
                let kx = fft.frequency(i).0;
                let weight = if kx == 0 || kx == 6 { 1.0 } else { 2.0 };
                weight * (a * b).norm_sqr()
            })
            .sum::<f64>()
            / 120.0;
        let spatial: f64 = out.as_slice().iter().map(|v| v * v).sum();
        assert!((freq - spatial).abs() <= 1e-9 * spatial);
    }

    #[test]
    fn wiener_identity_kernel() {
        let img = random_image(20, 14, 9);
        let cfg = WienerConfig::new(1e6).with_ballistic_impulse(false);
        let out = wiener_with_kernel(&img, &Kernel2D::impulse(), &cfg).unwrap().image;
        assert!(out.max_abs_diff(&img) <= 1e-6);
    }

    #[test]
    fn wiener_zero_input_and_zero_kernel() {
        let zero = Image::zeros(8, 8, 1).unwrap();
        let k = random_kernel(3, 3, 1);
        let out = wiener_with_kernel(&zero, &k, &WienerConfig::new(1e4)).unwrap().image;
        assert!(out.as_slice().iter().all(|v| *v == 0.0));
        let zk = Kernel2D::new(3, 3, vec![0.0; 9]).unwrap();
        assert!(wiener_with_kernel(&zero, &zk, &WienerConfig::new(1e4)).is_err());
        assert!(WienerConfig::new(0.0).validate().is_err());
        assert!(WienerConfig::new(f64::INFINITY).validate().is_err());
    }

    #[test]
    fn wiener_records_transform_size() {
        let img = random_image(30, 20, 2);
        let k = random_kernel(7, 7, 3);
        let out = wiener_with_kernel(&img, &k, &WienerConfig::new(1e4)).unwrap();
        assert_eq!(out.transform_size, (36, 27));
        let per = wiener_with_kernel(&img, &k, &WienerConfig::new(1e4).with_padding(Padding::Periodic)).unwrap();
        assert_eq!(per.transform_size, (30, 20));
    }

    #[test]
    fn wiener_inverts_forward_blur() {
        // Content kept away from the border so the cropped blur loses nothing.
        let img = Image::from_fn(64, 64, |x, y| {
            if (12..52).contains(&x) && (12..52).contains(&y) {
                (((x * 13 + y * 7) % 11) as f64) / 10.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = MediumParams::new(0.2, 3.0, 0.0).unwrap();
        let dk = rasterize_kernel(&m, 0.5, 1e-3).unwrap();
        assert!(dk.half_width() <= 12);
        let cfg = WienerConfig::new(1e8);
        let blurred = conv2(&img, &cfg.effective_kernel(dk.kernel()).unwrap(), Padding::ZeroPad).unwrap();
        let rec = wiener_deconv(&blurred, &dk, &cfg).unwrap();
        assert!(rec.max_abs_diff(&img) < 1e-5);
    }

    #[test]
    fn nsr_map_constant_matches_scalar() {
        let img = random_image(16, 12, 11);
        let k = random_kernel(5, 5, 12);
        let scalar = WienerConfig::new(100.0);
        let mut mapped = scalar.clone();
        mapped.nsr_map = Some(NsrMap::new(4, 4, vec![0.01; 16]).unwrap());
        let a = wiener_with_kernel(&img, &k, &scalar).unwrap().image;
        let b = wiener_with_kernel(&img, &k, &mapped).unwrap().image;
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn centered_frequencies() {
        assert_eq!(centered_freq(0, 4), 0.0);
        assert_eq!(centered_freq(2, 4), -0.5);
        assert_eq!(centered_freq(3, 4), -0.25);
        assert_eq!(centered_freq(2, 5), 0.4);
        assert_eq!(centered_freq(3, 5), -0.4);
    }

    #[test]
    fn refocused_4d_impulse() {
        let g = CameraArrayGeometry::new(3, 3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let k = refocus_kernel4d(&Kernel4D::impulse(), &RefocusConfig::at_alpha(1.0), &g).unwrap();
        assert_eq!(k.center(), 1.0);
        assert_eq!(k.sum(), 1.0);

        // 3x3 angular impulse at alpha = 1: nine coincident copies averaged.
        let mut data = vec![0.0; 9];
        data[4] = 1.0;
        let spatial = Kernel2D::new(1, 1, vec![1.0]).unwrap();
        let ang = Kernel2D::new(3, 3, data).unwrap();
        let k4 = Kernel4D::separable(&ang, &spatial).unwrap();
        let r = refocus_kernel4d(&k4, &RefocusConfig::at_alpha(1.0), &g).unwrap();
        assert!((r.center() - 1.0 / 9.0).abs() < 1e-15);
        assert!((r.sum() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn refocused_separable_kernel_at_alpha_one() {
        let g = CameraArrayGeometry::new(3, 3, 1.0, 1.0, 1.0, 1.0).unwrap();
        let ang = Kernel2D::new(3, 1, vec![0.2, 0.5, 0.3]).unwrap();
        let spatial = Kernel2D::new(3, 3, vec![0.0, 1.0, 0.0, 2.0, 4.0, 2.0, 0.0, 1.0, 0.0]).unwrap();
        let k4 = Kernel4D::separable(&ang, &spatial).unwrap();
        let cfg = RefocusConfig::at_alpha(1.0).with_normalization(crate::refocus::Normalization::Sum);
        let r = refocus_kernel4d(&k4, &cfg, &g).unwrap();
        // Hand sum: angular weights add to 1, so the result is the spatial kernel.
        for dy in -1..=1 {
            for dx in -1..=1 {
                assert!((r.at(dx, dy) - spatial.at(dx, dy)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn conv4d_budget() {
        let g = CameraArrayGeometry::new(2, 2, 1.0, 1.0, 1.0, 1.0).unwrap();
        let lf = LightField::from_fn(g, |_| Image::zeros(8, 8, 1)).unwrap();
        let k = Kernel4D::new([1, 1, 3, 3], vec![1.0; 9]).unwrap();
        assert!(matches!(conv4d_with_budget(&lf, &k, AngularBoundary::Periodic, 100), Err(Error::TooLarge(_))));
        assert!(conv4d_with_budget(&lf, &k, AngularBoundary::Periodic, 10_000).is_ok());
    }
}
