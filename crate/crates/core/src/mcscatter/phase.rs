//! Henyey-Greenstein phase function.

use std::f64::consts::PI;

use rand::Rng;

/// Below this `|g|` the sampler uses the isotropic closed form.
const ISOTROPIC_G: f64 = 1e-6;

/// Draws `cos(theta)` from the HG distribution with anisotropy `g`.
pub fn sample_hg<R: Rng + ?Sized>(g: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if g.abs() < ISOTROPIC_G {
        return 2.0 * u - 1.0;
    }
    let s = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
    ((1.0 + g * g - s * s) / (2.0 * g)).clamp(-1.0, 1.0)
}

/// HG density per steradian at scattering cosine `cos_theta`.
pub fn hg_phase(g: f64, cos_theta: f64) -> f64 {
    let denom = 1.0 + g * g - 2.0 * g * cos_theta;
    (1.0 - g * g) / (4.0 * PI * denom * denom.sqrt())
}

/// Turns `dir` by polar cosine `cos_theta` and azimuth `phi`.
pub fn scatter_direction(dir: [f64; 3], cos_theta: f64, phi: f64) -> [f64; 3] {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let [ux, uy, uz] = dir;
    let out = if uz.abs() > 0.99999 {
        [sin_theta * cos_phi, sin_theta * sin_phi, uz.signum() * cos_theta]
    } else {
        let t = (1.0 - uz * uz).sqrt();
        [
            sin_theta * (ux * uz * cos_phi - uy * sin_phi) / t + ux * cos_theta,
            sin_theta * (uy * uz * cos_phi + ux * sin_phi) / t + uy * cos_theta,
            -sin_theta * cos_phi * t + uz * cos_theta,
        ]
    };
    let n = (out[0] * out[0] + out[1] * out[1] + out[2] * out[2]).sqrt();
    [out[0] / n, out[1] / n, out[2] / n]
}
