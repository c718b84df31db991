//! Backscatter handling and the full reconstruction pipeline.
//!
//! The refocused capture is modelled as
//! `J* = gamma J (x) (O + delta) + B (1 - gamma)`: an attenuated object image
//! blurred by the diffuse kernel `O` (plus its undiffused ballistic part),
//! over an additive airlight term. Passive scenes estimate `B` and `gamma`
//! with the dark channel prior; self-luminous scenes have no airlight and a
//! known scalar attenuation.

use serde::{Deserialize, Serialize};

use crate::deconv::{wiener_deconv_detailed, WienerConfig};
use crate::diffusion::{attenuation_ratio, DiffuseKernel};
use crate::error::{Error, Result};
use crate::image::Image;

/// Per-channel atmosphere light `B_inf`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereEstimate {
    pub b_inf: Vec<f64>,
}

impl AtmosphereEstimate {
    pub fn new(b_inf: Vec<f64>) -> Result<Self> {
        if b_inf.is_empty() || b_inf.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::invalid(format!("atmosphere light must be in [0, 1] per channel (got {b_inf:?})")));
        }
        Ok(Self { b_inf })
    }

    pub fn uniform(value: f64, channels: usize) -> Result<Self> {
        Self::new(vec![value; channels])
    }
}

/// Single-channel transmission map clamped to `[t_min, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    pub t: Image,
    pub t_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcpConfig {
    /// Odd side of the square min-filter window.
    pub window: usize,
    /// Fraction of haze removed, in (0, 1]. Zero disables removal.
    pub omega: f64,
    pub t_min: f64,
    /// Fraction of brightest dark-channel pixels averaged for `B_inf`.
    pub atmosphere_fraction: f64,
}

impl Default for DcpConfig {
    fn default() -> Self {
        Self { window: 15, omega: 0.95, t_min: 0.1, atmosphere_fraction: 0.001 }
    }
}

impl DcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!("DCP window must be odd (got {})", self.window)));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::invalid(format!("omega must lie in [0, 1] (got {})", self.omega)));
        }
        if !(self.t_min > 0.0 && self.t_min <= 1.0) {
            return Err(Error::invalid(format!("t_min must lie in (0, 1] (got {})", self.t_min)));
        }
        if !(self.atmosphere_fraction > 0.0 && self.atmosphere_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "atmosphere fraction must lie in (0, 1] (got {})",
                self.atmosphere_fraction
            )));
        }
        Ok(())
    }
}

/// Channel minimum followed by a `window x window` minimum filter with
/// replicated edges.
pub fn dark_channel(image: &Image, window: usize) -> Result<Image> {
    if window.is_multiple_of(2) {
        return Err(Error::invalid(format!("window must be odd (got {window})")));
    }
    let (w, h, channels) = image.dims();
    let mut min_c: Vec<f64> = image.channel(0).to_vec();
    for c in 1..channels {
        min_c.iter_mut().zip(image.channel(c)).for_each(|(m, v)| *m = m.min(*v));
    }
    let r = (window / 2) as i64;
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;

    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = (-r..=r).map(|d| min_c[y * w + clamp(x as i64 + d, w)]).fold(f64::INFINITY, f64::min);
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-r..=r).map(|d| rows[clamp(y as i64 + d, h) * w + x]).fold(f64::INFINITY, f64::min);
        }
    }
    Image::from_vec(w, h, 1, out)
}

/// Mean color of the brightest `atmosphere_fraction` of dark-channel pixels.
/// Falls back to the brightest pixel when the fraction selects nothing.
pub fn estimate_atmosphere(image: &Image, dark: &Image, cfg: &DcpConfig) -> Result<AtmosphereEstimate> {
    cfg.validate()?;
    if dark.width() != image.width() || dark.height() != image.height() || dark.channels() != 1 {
        return Err(Error::DimensionMismatch("dark channel must be single-channel and match the image".into()));
    }
    let n = image.pixels_per_channel();
    let count = (cfg.atmosphere_fraction * n as f64).floor() as usize;
    let selected: Vec<usize> = if count == 0 {
        let brightest = (0..n)
            .max_by(|&i, &j| {
                let si: f64 = (0..image.channels()).map(|c| image.channel(c)[i]).sum();
                let sj: f64 = (0..image.channels()).map(|c| image.channel(c)[j]).sum();
                si.total_cmp(&sj).then(j.cmp(&i))
            })
            .expect("images are non-empty");
        vec![brightest]
    } else {
        let d = dark.channel(0);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
        idx.truncate(count);
        idx
    };
    let b = (0..image.channels())
        .map(|c| {
            let plane = image.channel(c);
            (selected.iter().map(|&i| plane[i]).sum::<f64>() / selected.len() as f64).min(1.0)
        })
        .collect();
    AtmosphereEstimate::new(b)
}

/// `t = clamp(1 - omega * dark_channel(image / B), t_min, 1)`.
pub fn estimate_transmission(image: &Image, b: &AtmosphereEstimate, cfg: &DcpConfig) -> Result<TransmissionMap> {
    cfg.validate()?;
    if b.b_inf.len() != image.channels() {
        return Err(Error::DimensionMismatch("atmosphere estimate has the wrong channel count".into()));
    }
    if b.b_inf.iter().any(|v| *v <= 0.0) {
        return Err(Error::invalid("atmosphere light must be positive in every channel"));
    }
    let (w, h, channels) = image.dims();
    let mut normalized = Vec::with_capacity(w * h * channels);
    for c in 0..channels {
        normalized.extend(image.channel(c).iter().map(|v| v / b.b_inf[c]));
    }
    let dark = dark_channel(&Image::from_vec(w, h, channels, normalized)?, cfg.window)?;
    let t = dark.as_slice().iter().map(|d| (1.0 - cfg.omega * d).clamp(cfg.t_min, 1.0)).collect();
    Ok(TransmissionMap { t: Image::from_vec(w, h, 1, t)?, t_min: cfg.t_min })
}

/// Subtracts the airlight term `B (1 - t)`, clamping at zero.
pub fn remove_backscatter(image: &Image, b: &AtmosphereEstimate, t: &TransmissionMap) -> Result<Image> {
    if t.t.width() != image.width() || t.t.height() != image.height() || b.b_inf.len() != image.channels() {
        return Err(Error::DimensionMismatch("transmission map or atmosphere does not match the image".into()));
    }
    let tmap = t.t.channel(0);
    let mut out = Vec::with_capacity(image.as_slice().len());
    for c in 0..image.channels() {
        let bc = b.b_inf[c];
        out.extend(image.channel(c).iter().zip(tmap).map(|(v, tv)| (v - bc * (1.0 - tv)).max(0.0)));
    }
    let (w, h, ch) = image.dims();
    Image::from_vec(w, h, ch, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ReconstructMode {
    /// Emitting objects: no airlight; divide by the known ballistic attenuation.
    SelfLuminous { gamma: f64 },
    /// Externally lit objects: estimate airlight and transmission first.
    Passive,
}

impl ReconstructMode {
    /// Self-luminous mode with `gamma = exp(-mu_s z)` from the kernel's medium.
    pub fn self_luminous_through(kernel: &DiffuseKernel, path_length: f64) -> Result<Self> {
        Ok(Self::SelfLuminous { gamma: attenuation_ratio(kernel.params.mu_s, path_length)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: Image,
    /// Present in passive mode.
    pub transmission: Option<TransmissionMap>,
    pub atmosphere: Option<AtmosphereEstimate>,
    /// FFT grid used by the Wiener step.
    pub transform_size: (usize, usize),
}

/// Full inversion of a refocused capture.
pub fn reconstruct_dlimj(
    refocused: &Image,
    kernel: &DiffuseKernel,
    dcp: &DcpConfig,
    wiener: &WienerConfig,
    mode: ReconstructMode,
) -> Result<Reconstruction> {
    wiener.validate()?;
    match mode {
        ReconstructMode::SelfLuminous { gamma } => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(Error::invalid(format!("attenuation ratio must lie in (0, 1] (got {gamma})")));
            }
            let out = wiener_deconv_detailed(refocused, kernel, wiener)?;
            Ok(Reconstruction {
                image: out.image.scaled(1.0 / gamma)?,
                transmission: None,
                atmosphere: None,
                transform_size: out.transform_size,
            })
        }
        ReconstructMode::Passive => {
            dcp.validate()?;
            let dark = dark_channel(refocused, dcp.window)?;
            let b = estimate_atmosphere(refocused, &dark, dcp)?;
            // A black capture carries no airlight to estimate.
            let b = if b.b_inf.iter().all(|v| *v > 0.0) {
                b
            } else {
                AtmosphereEstimate::new(b.b_inf.iter().map(|v| v.max(f64::MIN_POSITIVE)).collect())?
            };
            let t = estimate_transmission(refocused, &b, dcp)?;
            let forward = remove_backscatter(refocused, &b, &t)?;
            let out = wiener_deconv_detailed(&forward, kernel, wiener)?;
            let tmap = t.t.channel(0);
            let (w, h, channels) = out.image.dims();
            let mut data = Vec::with_capacity(w * h * channels);
            for c in 0..channels {
                data.extend(out.image.channel(c).iter().zip(tmap).map(|(v, tv)| v / tv.max(dcp.t_min)));
            }
            Ok(Reconstruction {
                image: Image::from_vec(w, h, channels, data)?,
                transmission: Some(t),
                atmosphere: Some(b),
                transform_size: out.transform_size,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dark_channel_constant_and_white() {
        let gray = Image::constant(9, 7, 3, 0.4).unwrap();
        assert!(dark_channel(&gray, 5).unwrap().as_slice().iter().all(|v| *v == 0.4));
        let white = Image::constant(9, 7, 1, 1.0).unwrap();
        assert!(dark_channel(&white, 15).unwrap().as_slice().iter().all(|v| *v == 1.0));
        assert!(dark_channel(&white, 4).is_err());
    }

    #[test]
    fn dark_channel_spreads_zero() {
        let mut img = Image::constant(7, 7, 1, 1.0).unwrap();
        img.set(3, 3, 0, 0.0);
        let d = dark_channel(&img, 3).unwrap();
        // Brute-force 3x3 min filter.
        for y in 0..7 {
            for x in 0..7 {
                let expected = if (2..=4).contains(&x) && (2..=4).contains(&y) { 0.0 } else { 1.0 };
                assert_eq!(d.get(x, y, 0), expected, "({x}, {y})");
            }
        }
    }

    #[test]
    fn dark_channel_uses_channel_minimum() {
        let img = Image::from_vec(1, 1, 3, vec![0.7, 0.2, 0.9]).unwrap();
        assert_eq!(dark_channel(&img, 1).unwrap().as_slice(), &[0.2]);
    }

    #[test]
    fn atmosphere_cases() {
        let cfg = DcpConfig { atmosphere_fraction: 0.01, ..DcpConfig::default() };
        let img = Image::constant(20, 20, 3, 0.6).unwrap();
        let dark = dark_channel(&img, 15).unwrap();
        assert_eq!(estimate_atmosphere(&img, &dark, &cfg).unwrap().b_inf, vec![0.6; 3]);

        let all = DcpConfig { atmosphere_fraction: 1.0, ..cfg };
        let ramp = Image::from_fn(10, 10, |x, _| x as f64 / 10.0).unwrap();
        let dark = dark_channel(&ramp, 1).unwrap();
        assert!((estimate_atmosphere(&ramp, &dark, &all).unwrap().b_inf[0] - ramp.mean()).abs() < 1e-15);

        // Too small a fraction for the image: brightest pixel.
        let tiny = DcpConfig { atmosphere_fraction: 1e-6, ..cfg };
        assert_eq!(estimate_atmosphere(&ramp, &dark, &tiny).unwrap().b_inf, vec![0.9]);
    }

    #[test]
    fn airlight_with_dark_object() {
        let b = 0.8;
        let img = Image::from_fn(60, 60, |x, y| if (20..30).contains(&x) && (20..30).contains(&y) { 0.05 } else { b })
            .unwrap();
        let cfg = DcpConfig::default();
        let dark = dark_channel(&img, cfg.window).unwrap();
        let est = estimate_atmosphere(&img, &dark, &cfg).unwrap();
        assert!((est.b_inf[0] - b).abs() < 1e-15);
    }

    #[test]
    fn transmission_cases() {
        let cfg = DcpConfig::default();
        let b = AtmosphereEstimate::uniform(0.8, 1).unwrap();
        let airlight = Image::constant(16, 16, 1, 0.8).unwrap();
        let t = estimate_transmission(&airlight, &b, &cfg).unwrap();
        assert!(t.t.as_slice().iter().all(|v| (*v - 0.1).abs() < 1e-12));
        let loose = DcpConfig { t_min: 0.01, ..cfg };
        let t = estimate_transmission(&airlight, &b, &loose).unwrap();
        assert!(t.t.as_slice().iter().all(|v| (*v - 0.05).abs() < 1e-12));
        let off = DcpConfig { omega: 0.0, ..cfg };
        assert!(estimate_transmission(&airlight, &b, &off).unwrap().t.as_slice().iter().all(|v| *v == 1.0));
        let clear = Image::from_fn(16, 16, |x, y| if (x + y) % 3 == 0 { 0.0 } else { 0.5 }).unwrap();
        assert!(estimate_transmission(&clear, &b, &cfg).unwrap().t.as_slice().iter().all(|v| *v == 1.0));
        let zero = AtmosphereEstimate::uniform(0.0, 1).unwrap();
        assert!(estimate_transmission(&airlight, &zero, &cfg).is_err());
    }

    #[test]
    fn backscatter_identities() {
        let img = Image::from_fn(8, 8, |x, y| (x * y) as f64 / 64.0).unwrap();
        let t_half = TransmissionMap { t: Image::constant(8, 8, 1, 0.5).unwrap(), t_min: 0.1 };
        let zero_b = AtmosphereEstimate::uniform(0.0, 1).unwrap();
        assert_eq!(remove_backscatter(&img, &zero_b, &t_half).unwrap(), img);
        let t_one = TransmissionMap { t: Image::constant(8, 8, 1, 1.0).unwrap(), t_min: 0.1 };
        let b = AtmosphereEstimate::uniform(0.7, 1).unwrap();
        assert_eq!(remove_backscatter(&img, &b, &t_one).unwrap(), img);
    }
}
