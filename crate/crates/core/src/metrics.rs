//! PSNR and SSIM. Multi-channel images are scored per channel and averaged.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Peak signal-to-noise ratio in dB; `+inf` for identical images.
    #[serde(with = "inf_as_string")]
    pub psnr_db: f64,
    pub ssim: f64,
}

/// SSIM parameters; the defaults are the usual 11x11 Gaussian window with
/// sigma 1.5 and `K1 = 0.01`, `K2 = 0.03`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03 }
    }
}

fn check_pair(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!("cannot compare {:?} with {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

pub fn psnr(a: &Image, b: &Image, max_value: f64) -> Result<f64> {
    check_pair(a, b)?;
    ensure_positive("max_value", max_value)?;
    let per_channel = (0..a.channels()).map(|c| {
        let n = a.pixels_per_channel() as f64;
        let mse = a.channel(c).iter().zip(b.channel(c)).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
        if mse == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (max_value * max_value / mse).log10()
        }
    });
    Ok(per_channel.sum::<f64>() / a.channels() as f64)
}

/// SSIM with the default window and constants.
pub fn ssim(a: &Image, b: &Image, max_value: f64) -> Result<f64> {
    ssim_with(a, b, max_value, &SsimParams::default())
}

pub fn ssim_with(a: &Image, b: &Image, max_value: f64, params: &SsimParams) -> Result<f64> {
    check_pair(a, b)?;
    ensure_positive("max_value", max_value)?;
    ensure_positive("sigma", params.sigma)?;
    if params.window.is_multiple_of(2) {
        return Err(Error::invalid(format!("SSIM window must be odd (got {})", params.window)));
    }
    if params.window > a.width() || params.window > a.height() {
        return Err(Error::invalid(format!(
            "SSIM window {} exceeds the {}x{} image",
            params.window,
            a.width(),
            a.height()
        )));
    }
    let weights = gaussian_weights(params.window, params.sigma);
    let c1 = (params.k1 * max_value).powi(2);
    let c2 = (params.k2 * max_value).powi(2);
    let (w, h) = (a.width(), a.height());

    let mut total = 0.0;
    for c in 0..a.channels() {
        let (pa, pb) = (a.channel(c), b.channel(c));
        let sq_a: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let sq_b: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let prod: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(pa, w, h, &weights);
        let mu_b = filter_valid(pb, w, h, &weights);
        let e_aa = filter_valid(&sq_a, w, h, &weights);
        let e_bb = filter_valid(&sq_b, w, h, &weights);
        let e_ab = filter_valid(&prod, w, h, &weights);

        let n = mu_a.len();
        let mut sum = 0.0;
        for i in 0..n {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        }
        total += sum / n as f64;
    }
    Ok((total / a.channels() as f64).clamp(-1.0, 1.0))
}

pub fn evaluate(a: &Image, b: &Image, max_value: f64) -> Result<QualityReport> {
    Ok(QualityReport { psnr_db: psnr(a, b, max_value)?, ssim: ssim(a, b, max_value)? })
}

fn gaussian_weights(window: usize, sigma: f64) -> Vec<f64> {
    let r = (window / 2) as f64;
    let raw: Vec<f64> = (0..window).map(|i| (-(i as f64 - r).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Separable filtering keeping only positions where the window fits.
fn filter_valid(plane: &[f64], w: usize, h: usize, weights: &[f64]) -> Vec<f64> {
    let k = weights.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = weights.iter().enumerate().map(|(j, wt)| wt * plane[y * w + x + j]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = weights.iter().enumerate().map(|(j, wt)| wt * rows[(y + j) * ow + x]).sum();
        }
    }
    out
}

mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_image() -> Image {
        Image::from_fn(64, 64, |x, y| {
            let fx = x as f64 / 64.0;
            let fy = y as f64 / 64.0;
            0.5 + 0.3 * (6.0 * fx).sin() * (4.0 * fy).cos() + if (20..40).contains(&x) { 0.15 } else { 0.0 }
        })
        .unwrap()
    }

    #[test]
    fn psnr_cases() {
        let a = Image::zeros(8, 8, 1).unwrap();
        let b = Image::constant(8, 8, 1, 0.1).unwrap();
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(psnr(&b, &a, 1.0).unwrap(), psnr(&a, &b, 1.0).unwrap());
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &Image::zeros(8, 7, 1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn ssim_identity_is_exactly_one() {
        let a = test_image();
        assert_eq!(ssim(&a, &a, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ssim_constant_images() {
        let a = Image::zeros(16, 16, 1).unwrap();
        let b = Image::constant(16, 16, 1, 1.0).unwrap();
        // Constant windows: (C1)(C2) / ((1 + C1)(C2)) = C1 / (1 + C1)
        let c1 = 1e-4;
        assert!((ssim(&a, &b, 1.0).unwrap() - c1 / (1.0 + c1)).abs() < 1e-12);
    }

    #[test]
    fn ssim_prefers_noise_over_shuffle() {
        let a = test_image();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut shuffled = a.as_slice().to_vec();
        shuffled.shuffle(&mut rng);
        let shuffled = Image::from_vec(64, 64, 1, shuffled).unwrap();
        let noisy =
            Image::from_vec(64, 64, 1, a.as_slice().iter().map(|v| v + 0.02 * rng.random::<f64>()).collect()).unwrap();
        let s_shuffle = ssim(&a, &shuffled, 1.0).unwrap();
        let s_noise = ssim(&a, &noisy, 1.0).unwrap();
        assert!(s_shuffle < s_noise, "{s_shuffle} vs {s_noise}");
    }

    #[test]
    fn ssim_symmetric() {
        let a = test_image();
        let b = Image::from_vec(64, 64, 1, a.as_slice().iter().map(|v| v * 0.8 + 0.05).collect()).unwrap();
        assert!((ssim(&a, &b, 1.0).unwrap() - ssim(&b, &a, 1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn report_json_handles_infinity() {
        let r = QualityReport { psnr_db: f64::INFINITY, ssim: 1.0 };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"inf\""));
        let back: QualityReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
