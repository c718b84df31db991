//! Diffusion-approximation coefficients and the analytic diffuse kernel.
//!
//! The Green profile `(exp(-k r) + exp(-k (r + 2d))) / (2 sqrt(mu_a D))`,
//! `k = sqrt(mu_a / D)`, is applied radially over the refocus plane and
//! rasterized at the object-plane sampling of the refocused image.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::kernel::Kernel2D;

/// Absorption substituted for `mu_a = 0`, as a fraction of `mu_s'`.
pub const ABSORPTION_FLOOR_FRACTION: f64 = 1e-4;

/// Widest kernel (in pixels per side) `rasterize_kernel` will produce.
pub const DEFAULT_MAX_KERNEL_WIDTH: usize = 1025;

/// Homogeneous medium: absorption and scattering coefficients (1/m) and the
/// Henyey-Greenstein anisotropy `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub mu_a: f64,
    pub mu_s: f64,
    pub g: f64,
}

/// Quantities derived from [`MediumParams`] under the diffusion approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionCoefficients {
    /// Diffusion coefficient `1 / (3 (mu_a + mu_s (1 - g)))` (m).
    pub d: f64,
    /// Reduced scattering coefficient `mu_s (1 - g)`.
    pub mu_s_prime: f64,
    /// `mu_a + mu_s'`.
    pub mu_eff: f64,
    /// Transport mean free path `1 / mu_s'` (infinite without scattering).
    pub transport_mfp: f64,
}

impl MediumParams {
    pub fn new(mu_a: f64, mu_s: f64, g: f64) -> Result<Self> {
        let m = Self { mu_a, mu_s, g };
        m.validate()?;
        Ok(m)
    }

    pub fn vacuum() -> Self {
        Self { mu_a: 0.0, mu_s: 0.0, g: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_a.is_finite() && self.mu_a >= 0.0) {
            return Err(Error::invalid(format!("mu_a must be finite and >= 0 (got {})", self.mu_a)));
        }
        if !(self.mu_s.is_finite() && self.mu_s >= 0.0) {
            return Err(Error::invalid(format!("mu_s must be finite and >= 0 (got {})", self.mu_s)));
        }
        if !(0.0..1.0).contains(&self.g) {
            return Err(Error::invalid(format!("g must lie in [0, 1) (got {})", self.g)));
        }
        Ok(())
    }

    /// Extinction coefficient `mu_a + mu_s`.
    pub fn mu_t(&self) -> f64 {
        self.mu_a + self.mu_s
    }

    /// Single-scattering albedo; zero for a non-interacting medium.
    pub fn albedo(&self) -> f64 {
        let t = self.mu_t();
        if t > 0.0 {
            self.mu_s / t
        } else {
            0.0
        }
    }

    pub fn optical_thickness(&self, length: f64) -> f64 {
        self.mu_t() * length
    }

    pub fn derive_coefficients(&self) -> Result<DiffusionCoefficients> {
        derive_coefficients(self.mu_a, self.mu_s, self.g)
    }

    /// Replaces `mu_a = 0` by `ABSORPTION_FLOOR_FRACTION * mu_s'` so the Green
    /// profile decays.
    pub fn with_absorption_floor(&self) -> Self {
        if self.mu_a > 0.0 {
            *self
        } else {
            Self { mu_a: ABSORPTION_FLOOR_FRACTION * self.mu_s * (1.0 - self.g), ..*self }
        }
    }
}

pub fn derive_coefficients(mu_a: f64, mu_s: f64, g: f64) -> Result<DiffusionCoefficients> {
    MediumParams { mu_a, mu_s, g }.validate()?;
    let mu_s_prime = mu_s * (1.0 - g);
    let mu_eff = mu_a + mu_s_prime;
    if mu_eff <= 0.0 {
        return Err(Error::DegenerateMedium("mu_a + mu_s (1 - g) = 0: the diffusion coefficient is undefined".into()));
    }
    Ok(DiffusionCoefficients {
        d: 1.0 / (3.0 * mu_eff),
        mu_s_prime,
        mu_eff,
        transport_mfp: if mu_s_prime > 0.0 { 1.0 / mu_s_prime } else { f64::INFINITY },
    })
}

/// Beer-Lambert ballistic attenuation `exp(-mu_s z)`.
pub fn attenuation_ratio(mu_s: f64, path_length: f64) -> Result<f64> {
    if !(mu_s.is_finite() && mu_s >= 0.0) {
        return Err(Error::invalid(format!("mu_s must be finite and >= 0 (got {mu_s})")));
    }
    if !(path_length.is_finite() && path_length >= 0.0) {
        return Err(Error::invalid(format!("path length must be finite and >= 0 (got {path_length})")));
    }
    Ok((-mu_s * path_length).exp())
}

/// Diffusion Green profile at distance `r` from the source, with an image
/// source at `mirror_distance` (pass `f64::INFINITY` to disable it).
pub fn green_profile(r: f64, mu_a: f64, d: f64, mirror_distance: f64) -> Result<f64> {
    if !(mu_a > 0.0) {
        return Err(Error::NeedsRegularization { mu_a });
    }
    ensure_positive("D", d)?;
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(format!("radius must be finite and >= 0 (got {r})")));
    }
    if !(mirror_distance >= 0.0) {
        return Err(Error::invalid(format!("mirror distance must be >= 0 (got {mirror_distance})")));
    }
    let kappa = (mu_a / d).sqrt();
    let direct = (-kappa * r).exp();
    let mirror = if mirror_distance.is_infinite() { 0.0 } else { (-kappa * (r + 2.0 * mirror_distance)).exp() };
    Ok((direct + mirror) / (2.0 * (mu_a * d).sqrt()))
}

/// Rasterization controls for [`rasterize_kernel_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Meters per kernel pixel (object-plane sampling of the refocused image).
    pub pixel_scale: f64,
    /// Relative profile level at which the kernel is truncated, in (0, 0.1).
    pub truncation_eps: f64,
    pub mirror_distance: f64,
    pub normalize: bool,
    pub max_width: usize,
}

impl KernelOptions {
    pub fn new(pixel_scale: f64, truncation_eps: f64) -> Self {
        Self {
            pixel_scale,
            truncation_eps,
            mirror_distance: f64::INFINITY,
            normalize: true,
            max_width: DEFAULT_MAX_KERNEL_WIDTH,
        }
    }
}

/// Rasterized diffuse kernel plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffuseKernel {
    kernel: Kernel2D,
    pub pixel_scale: f64,
    /// Medium snapshot after the absorption floor was applied.
    pub params: MediumParams,
    pub mirror_distance: f64,
    pub normalized: bool,
}

impl DiffuseKernel {
    /// Wraps externally produced samples (e.g. a kernel read back from disk).
    pub fn from_parts(
        kernel: Kernel2D,
        pixel_scale: f64,
        params: MediumParams,
        mirror_distance: f64,
        normalized: bool,
    ) -> Result<Self> {
        if kernel.width() != kernel.height() {
            return Err(Error::invalid(format!(
                "diffuse kernels are square (got {}x{})",
                kernel.width(),
                kernel.height()
            )));
        }
        ensure_positive("pixel_scale", pixel_scale)?;
        params.validate()?;
        Ok(Self { kernel, pixel_scale, params, mirror_distance, normalized })
    }

    pub fn kernel(&self) -> &Kernel2D {
        &self.kernel
    }

    pub fn size(&self) -> usize {
        self.kernel.width()
    }

    pub fn half_width(&self) -> usize {
        self.kernel.half_width()
    }

    /// Samples along the +x axis, starting at the center.
    pub fn radial_samples(&self) -> Vec<f64> {
        (0..=self.half_width() as i64).map(|dx| self.kernel.at(dx, 0)).collect()
    }
}

/// Rasterizes the normalized kernel with default limits and no mirror source.
pub fn rasterize_kernel(params: &MediumParams, pixel_scale: f64, truncation_eps: f64) -> Result<DiffuseKernel> {
    rasterize_kernel_with(params, &KernelOptions::new(pixel_scale, truncation_eps))
}

/// Half-width in pixels for a profile with decay rate `kappa_px` (1/pixel):
/// every pixel whose footprint starts inside the radius where the profile has
/// fallen to `eps` of its peak is kept.
pub fn kernel_half_width(kappa_px: f64, eps: f64) -> f64 {
    let cutoff = (1.0 / eps).ln() / kappa_px;
    (cutoff - 0.5).ceil().max(0.0)
}

pub fn rasterize_kernel_with(params: &MediumParams, opts: &KernelOptions) -> Result<DiffuseKernel> {
    params.validate()?;
    ensure_positive("pixel_scale", opts.pixel_scale)?;
    if !(opts.truncation_eps > 0.0 && opts.truncation_eps < 0.1) {
        return Err(Error::invalid(format!("truncation_eps must lie in (0, 0.1) (got {})", opts.truncation_eps)));
    }
    let floored = params.with_absorption_floor();
    let coeffs = floored.derive_coefficients()?;
    if !(floored.mu_a > 0.0) {
        return Err(Error::NeedsRegularization { mu_a: floored.mu_a });
    }
    let kappa = (floored.mu_a / coeffs.d).sqrt();

    // The mirror term scales the whole profile, so the truncation radius does
    // not depend on it.
    let half = kernel_half_width(kappa * opts.pixel_scale, opts.truncation_eps);
    let width = 2.0 * half + 1.0;
    if !(width <= opts.max_width as f64) {
        return Err(Error::KernelTooLarge {
            width: if width.is_finite() { width as usize } else { usize::MAX },
            limit: opts.max_width,
        });
    }
    let half = half as i64;
    let n = 2 * half as usize + 1;

    let mut data = Vec::with_capacity(n * n);
    for dy in -half..=half {
        for dx in -half..=half {
            let r = ((dx * dx + dy * dy) as f64).sqrt() * opts.pixel_scale;
            data.push(green_profile(r, floored.mu_a, coeffs.d, opts.mirror_distance)?);
        }
    }
    if opts.normalize {
        let s: f64 = data.iter().sum();
        data.iter_mut().for_each(|v| *v /= s);
    }
    Ok(DiffuseKernel {
        kernel: Kernel2D::new(n, n, data)?,
        pixel_scale: opts.pixel_scale,
        params: floored,
        mirror_distance: opts.mirror_distance,
        normalized: opts.normalize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_medium_coefficients() {
        let c = derive_coefficients(0.0, 1.0, 0.0).unwrap();
        assert_eq!(c.d, 1.0 / 3.0);
        assert_eq!(c.mu_s_prime, 1.0);
        assert_eq!(c.mu_eff, 1.0);
        assert_eq!(c.transport_mfp, 1.0);
    }

    #[test]
    fn forward_peaked_medium_coefficients() {
        // mu_s' = 0.1, mu_eff = 0.11, D = 1 / 0.33
        let c = derive_coefficients(0.01, 1.0, 0.9).unwrap();
        assert!((c.mu_s_prime - 0.1).abs() < 1e-15);
        assert!((c.mu_eff - 0.11).abs() < 1e-15);
        assert!((c.d - 3.030_303_030_303_03).abs() < 1e-12);
    }

    #[test]
    fn high_anisotropy_limit_is_absorption_only() {
        let c = derive_coefficients(0.5, 1.0, 1.0 - 1e-12).unwrap();
        assert!((c.d - 1.0 / 1.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_medium() {
        assert!(matches!(derive_coefficients(0.0, 0.0, 0.5), Err(Error::DegenerateMedium(_))));
        assert!(derive_coefficients(0.0, 1.0, 1.0).is_err());
        assert!(derive_coefficients(-0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn beer_lambert() {
        assert_eq!(attenuation_ratio(3.0, 0.0).unwrap(), 1.0);
        assert!((attenuation_ratio(6.4, 1.0).unwrap() - 1.661_557_273e-3).abs() < 1e-12);
        assert!((attenuation_ratio(1.0, 10.0).unwrap() - 4.539_992_976e-5).abs() < 1e-13);
        assert!(attenuation_ratio(-1.0, 1.0).is_err());
        assert!(attenuation_ratio(1.0, -1.0).is_err());
    }

    #[test]
    fn green_profile_values() {
        let d = 1.0 / 3.0;
        let peak = green_profile(0.0, 0.01, d, f64::INFINITY).unwrap();
        assert!((peak - 1.0 / (2.0 * (0.01_f64 * d).sqrt())).abs() < 1e-12);
        let v = green_profile(10.0, 0.01, d, f64::INFINITY).unwrap();
        assert!((v - 1.532_182_59).abs() < 1e-7, "{v}");
        for r in [0.0, 1.0, 7.5] {
            let far = green_profile(r, 0.01, d, f64::INFINITY).unwrap();
            let near = green_profile(r, 0.01, d, 0.0).unwrap();
            assert!((near - 2.0 * far).abs() < 1e-12 * far);
        }
        assert!(matches!(green_profile(1.0, 0.0, d, f64::INFINITY), Err(Error::NeedsRegularization { .. })));
    }

    #[test]
    fn kernel_half_width_matches_hand_solution() {
        let m = MediumParams::new(0.01, 0.99, 0.0).unwrap();
        // D = 1/3, kappa = sqrt(0.03); ln(1000) / kappa = 39.88 -> 40
        let k = rasterize_kernel(&m, 1.0, 1e-3).unwrap();
        assert_eq!(k.size(), 81);
        assert!((k.kernel().sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn strong_absorption_gives_unit_kernel() {
        let m = MediumParams::new(1e3, 1.0, 0.0).unwrap();
        let k = rasterize_kernel(&m, 1.0, 1e-3).unwrap();
        assert_eq!(k.size(), 1);
        assert_eq!(k.kernel().as_slice(), &[1.0]);
    }

    #[test]
    fn zero_absorption_is_floored() {
        let m = MediumParams::new(0.0, 10.0, 0.5).unwrap();
        let k = rasterize_kernel(&m, 1.0, 1e-2).unwrap();
        assert!((k.params.mu_a - 5e-4).abs() < 1e-15);
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let m = MediumParams::new(1e-6, 1.0, 0.0).unwrap();
        assert!(matches!(rasterize_kernel(&m, 1e-3, 1e-3), Err(Error::KernelTooLarge { .. })));
    }

    #[test]
    fn kernel_symmetry() {
        let m = MediumParams::new(0.05, 2.0, 0.3).unwrap();
        let k = rasterize_kernel(&m, 0.7, 1e-3).unwrap();
        let h = k.half_width() as i64;
        let kk = k.kernel();
        for dy in -h..=h {
            for dx in -h..=h {
                let v = kk.at(dx, dy);
                assert_eq!(v, kk.at(-dx, dy));
                assert_eq!(v, kk.at(dy, dx));
                assert!(v <= kk.center());
            }
        }
    }
}
