//! Optical thickness from a simulated collimated-beam power measurement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transport::{trace_photon, Fate, Slab};
use super::{EnergyLedger, PhotonState, SimConfig};
use crate::diffusion::MediumParams;
use crate::error::{ensure_positive, Error, Result};

/// Contrast threshold defining the visibility range: an object stays visible
/// while its attenuation is above 5 %.
pub const VISIBILITY_CONTRAST: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtMeasurement {
    /// `ln(P_o / P_a)`, or `ln(n)` when no photon got through unscattered.
    pub optical_thickness: f64,
    /// True when no unscattered photon reached the detector.
    pub lower_bound: bool,
    pub launched: u64,
    pub unscattered: u64,
    /// Scattered photons that still left within the acceptance cone; the
    /// filter and diaphragm reject them.
    pub scattered_in_aperture: u64,
}

/// `T = ln(P_o / P_a)` from measured powers.
pub fn optical_thickness_from_powers(p_o: f64, p_a: f64) -> Result<f64> {
    ensure_positive("P_o", p_o)?;
    ensure_positive("P_a", p_a)?;
    Ok((p_o / p_a).ln())
}

/// Visibility gain `T / |ln 0.05|` relative to a clear-air observer.
pub fn visibility_from_ot(optical_thickness: f64) -> Result<f64> {
    ensure_positive("optical thickness", optical_thickness)?;
    Ok(optical_thickness / VISIBILITY_CONTRAST.ln().abs())
}

/// Fires `n_photons` along +z through `path_length` of the medium and counts
/// the ones that leave the far face unscattered inside the acceptance cone.
pub fn measure_ot(
    medium: &MediumParams,
    path_length: f64,
    n_photons: u64,
    aperture_half_angle: f64,
    seed: u64,
) -> Result<OtMeasurement> {
    medium.validate()?;
    ensure_positive("path_length", path_length)?;
    if !(aperture_half_angle > 0.0 && aperture_half_angle <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid(format!("aperture half-angle must lie in (0, pi/2] (got {aperture_half_angle})")));
    }
    let config = SimConfig::new(n_photons, seed);
    config.validate()?;
    let slab = Slab { medium: *medium, thickness: path_length };
    let cos_accept = aperture_half_angle.cos();

    let counts: Vec<(u64, u64)> = (0..config.batch_count())
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = config.batch_size.min(n_photons - b * config.batch_size);
            let mut ledger = EnergyLedger::default();
            let (mut direct, mut leaked) = (0, 0);
            for _ in 0..n {
                let state =
                    PhotonState { position: [0.0; 3], direction: [0.0, 0.0, 1.0], weight: 1.0, scatter_events: 0 };
                let exit = trace_photon(&slab, &config, state, &mut rng, None, &mut ledger);
                if exit.fate == Fate::Transmitted && exit.state.direction[2] >= cos_accept {
                    if exit.state.scatter_events == 0 {
                        direct += 1;
                    } else {
                        leaked += 1;
                    }
                }
            }
            (direct, leaked)
        })
        .collect();
    let unscattered: u64 = counts.iter().map(|c| c.0).sum();
    let scattered_in_aperture: u64 = counts.iter().map(|c| c.1).sum();
    let lower_bound = unscattered == 0;
    let optical_thickness =
        if lower_bound { (n_photons as f64).ln() } else { (n_photons as f64 / unscattered as f64).ln() };
    Ok(OtMeasurement { optical_thickness, lower_bound, launched: n_photons, unscattered, scattered_in_aperture })
}
