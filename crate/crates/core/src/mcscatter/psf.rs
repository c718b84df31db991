//! Point-spread studies: render a single emitting pixel, refocus onto it and
//! reduce the result to a radial profile.

use serde::{Deserialize, Serialize};

use super::render::render_lightfield_detailed;
use super::{EnergyLedger, ScatterScene, SimConfig};
use crate::diffusion::DiffuseKernel;
use crate::error::{Error, Result};
use crate::geometry::displacement_to_pixel;
use crate::image::Image;
use crate::lightfield::LightField;
use crate::refocus::{refocus, RefocusConfig};

/// Azimuthal average around a center, binned by rounded radius in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    /// Mean value per bin, divided by the largest bin mean.
    pub values: Vec<f64>,
    /// Pixels contributing to each bin.
    pub counts: Vec<usize>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsfStudy {
    pub lightfield: LightField,
    pub refocused: Image,
    /// Refocused image of the unscattered light only.
    pub refocused_ballistic: Image,
    /// Refocused image of the scattered light only.
    pub refocused_scattered: Image,
    /// Pixel position of the emitter in the refocused frame.
    pub center: (f64, f64),
    pub profile: RadialProfile,
    pub scattered_profile: RadialProfile,
    /// Scattered over unscattered energy in the refocused frame.
    pub scatter_to_ballistic: f64,
    pub refocus_depth: f64,
    pub ledger: EnergyLedger,
}

/// Peak-normalized radial profile of channel 0 for radii `0..=max_radius`.
pub fn radial_profile(image: &Image, center: (f64, f64), max_radius: usize) -> RadialProfile {
    let mut sums = vec![0.0; max_radius + 1];
    let mut counts = vec![0usize; max_radius + 1];
    let plane = image.channel(0);
    for y in 0..image.height() {
        for x in 0..image.width() {
            let r = ((x as f64 - center.0).hypot(y as f64 - center.1)).round() as usize;
            if r <= max_radius {
                sums[r] += plane[y * image.width() + x];
                counts[r] += 1;
            }
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
    let peak = means.iter().cloned().fold(0.0, f64::max);
    let values = if peak > 0.0 { means.iter().map(|m| m / peak).collect() } else { means };
    RadialProfile { values, counts }
}

/// Root-mean-square difference over the bins of `empirical`, divided by the
/// range of `analytic`. Analytic samples beyond its length count as zero.
pub fn profile_nrmse(empirical: &[f64], analytic: &[f64]) -> Result<f64> {
    if empirical.is_empty() {
        return Err(Error::invalid("empty profile"));
    }
    let a = |i: usize| analytic.get(i).copied().unwrap_or(0.0);
    let (lo, hi) =
        (0..empirical.len()).map(a).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::invalid("analytic profile is flat"));
    }
    let mse = empirical.iter().enumerate().map(|(i, e)| (e - a(i)).powi(2)).sum::<f64>() / empirical.len() as f64;
    Ok(mse.sqrt() / range)
}

impl PsfStudy {
    /// Kernel samples along one axis from the center, peak-normalized, for
    /// comparison with [`PsfStudy::scattered_profile`].
    pub fn analytic_profile(kernel: &DiffuseKernel) -> Vec<f64> {
        let samples = kernel.radial_samples();
        let peak = samples.iter().cloned().fold(0.0, f64::max);
        samples.iter().map(|s| if peak > 0.0 { s / peak } else { 0.0 }).collect()
    }

    /// Weight `w` of the kernel in `delta + w O` that reproduces the measured
    /// scattered energy, counting only the part of `O` that lands on the
    /// sensor when centered on the emitter.
    pub fn scatter_weight(&self, kernel: &DiffuseKernel) -> Result<f64> {
        let k = kernel.kernel();
        let (w, h) = (self.refocused.width() as i64, self.refocused.height() as i64);
        let (cx, cy) = (self.center.0.round() as i64, self.center.1.round() as i64);
        let (hw, hh) = (k.half_width() as i64, k.half_height() as i64);
        let mut inside = 0.0;
        for dy in -hh..=hh {
            for dx in -hw..=hw {
                if (0..w).contains(&(cx + dx)) && (0..h).contains(&(cy + dy)) {
                    inside += k.at(dx, dy);
                }
            }
        }
        let ballistic = self.refocused_ballistic.sum();
        if !(inside > 0.0 && ballistic > 0.0) {
            return Err(Error::invalid("PSF study has no ballistic signal or the kernel misses the sensor"));
        }
        Ok(self.refocused_scattered.sum() / (ballistic * inside))
    }
}

/// Renders a single-pixel emitter and refocuses onto its plane with the
/// default refocus settings. Profiles extend to the largest radius that fits
/// inside the sensor.
pub fn psf_study(scene: &ScatterScene, config: &SimConfig) -> Result<PsfStudy> {
    scene.validate()?;
    if scene.emitters.len() != 1 || scene.channels() != 1 {
        return Err(Error::invalid("a PSF study needs one single-channel emitter"));
    }
    let emitter = &scene.emitters[0];
    let lit: Vec<usize> =
        (0..emitter.image.pixels_per_channel()).filter(|&i| emitter.image.as_slice()[i] > 0.0).collect();
    if lit.len() != 1 {
        return Err(Error::invalid(format!("PSF emitter must have exactly one lit pixel (found {})", lit.len())));
    }
    let (px, py) = (lit[0] % emitter.image.width(), lit[0] / emitter.image.width());
    let (ox, oy) = emitter.plane.pixel_to_object(px as f64, py as f64, emitter.image.width(), emitter.image.height());

    let out = render_lightfield_detailed(scene, config)?;
    let geom = &scene.geometry;
    let depth = geom.object_depth - emitter.z;
    let cfg = RefocusConfig::at_depth(depth);
    let refocused = refocus(&out.lightfield, &cfg)?;
    let refocused_ballistic = refocus(&out.ballistic, &cfg)?;
    let refocused_scattered = refocus(&out.scattered, &cfg)?;

    let m = geom.focal_length / (depth * geom.pixel_pitch);
    let (w, h) = scene.sensor;
    let center = displacement_to_pixel((ox * m, oy * m), w, h);
    let max_radius = [center.0, center.1, w as f64 - 1.0 - center.0, h as f64 - 1.0 - center.1]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .floor()
        .max(0.0) as usize;

    let ballistic_energy = refocused_ballistic.sum();
    let scatter_to_ballistic =
        if ballistic_energy > 0.0 { refocused_scattered.sum() / ballistic_energy } else { f64::INFINITY };
    Ok(PsfStudy {
        profile: radial_profile(&refocused, center, max_radius),
        scattered_profile: radial_profile(&refocused_scattered, center, max_radius),
        lightfield: out.lightfield,
        refocused,
        refocused_ballistic,
        refocused_scattered,
        center,
        scatter_to_ballistic,
        refocus_depth: depth,
        ledger: out.ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_profile_of_cone() {
        let img = Image::from_fn(21, 21, |x, y| {
            let r = (x as f64 - 10.0).hypot(y as f64 - 10.0);
            (10.0 - r).max(0.0)
        })
        .unwrap();
        let p = radial_profile(&img, (10.0, 10.0), 10);
        assert_eq!(p.values[0], 1.0);
        assert_eq!(p.counts[0], 1);
        assert_eq!(p.counts[1], 8);
        assert!(p.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn nrmse_cases() {
        assert_eq!(profile_nrmse(&[1.0, 0.5, 0.0], &[1.0, 0.5, 0.0]).unwrap(), 0.0);
        let e = profile_nrmse(&[1.0, 0.5, 0.1], &[1.0, 0.5]).unwrap();
        assert!((e - (0.01f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(profile_nrmse(&[1.0], &[1.0]).is_err());
    }
}
