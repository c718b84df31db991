//! Photon random walk with next-event estimation towards the pinholes.

use std::f64::consts::PI;

use rand::Rng;

use super::phase::{hg_phase, sample_hg, scatter_direction};
use super::{EnergyLedger, PhotonState, SimConfig};
use crate::diffusion::MediumParams;
use crate::geometry::CameraArrayGeometry;

/// Homogeneous slab `0 <= z <= thickness`, laterally unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub medium: MediumParams,
    pub thickness: f64,
}

impl Slab {
    /// `exp(-mu_t * path)` from height `z` to the front face along a ray
    /// with polar cosine `cos_z`.
    fn exit_transmittance(&self, z: f64, cos_z: f64) -> f64 {
        let mu_t = self.medium.mu_t();
        if mu_t == 0.0 {
            1.0
        } else {
            (-mu_t * (self.thickness - z) / cos_z).exp()
        }
    }
}

/// Per-view radiance accumulators, split into unscattered (emission
/// vertex) and scattered contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Film {
    cameras: Vec<(f64, f64)>,
    camera_z: f64,
    focal_over_pitch: f64,
    width: usize,
    height: usize,
    ballistic: Vec<f64>,
    scattered: Vec<f64>,
}

impl Film {
    pub fn new(geometry: &CameraArrayGeometry, sensor: (usize, usize)) -> Self {
        let n = geometry.view_count() * sensor.0 * sensor.1;
        Self {
            cameras: geometry.views().map(|v| geometry.camera_offset(v)).collect(),
            camera_z: geometry.object_depth,
            focal_over_pitch: geometry.focal_length / geometry.pixel_pitch,
            width: sensor.0,
            height: sensor.1,
            ballistic: vec![0.0; n],
            scattered: vec![0.0; n],
        }
    }

    pub fn view_count(&self) -> usize {
        self.cameras.len()
    }

    pub fn ballistic_view(&self, view: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.ballistic[view * n..(view + 1) * n]
    }

    pub fn scattered_view(&self, view: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.scattered[view * n..(view + 1) * n]
    }

    /// Adds `other` pixel by pixel.
    pub fn merge(&mut self, other: &Film) {
        self.ballistic.iter_mut().zip(&other.ballistic).for_each(|(a, b)| *a += b);
        self.scattered.iter_mut().zip(&other.scattered).for_each(|(a, b)| *a += b);
    }

    pub fn scale(&mut self, factor: f64) {
        self.ballistic.iter_mut().for_each(|v| *v *= factor);
        self.scattered.iter_mut().for_each(|v| *v *= factor);
    }

    /// Connects a vertex to every pinhole. `pdf` gives the directional density
    /// (per steradian) towards a unit direction. Each view pixel receives
    /// `weight * pdf * T / (r^2 cos^3)`, i.e. flux per unit pinhole area over
    /// the pixel's solid angle (up to the global `f^2 / p^2` factor).
    pub(crate) fn connect(
        &mut self,
        slab: &Slab,
        position: [f64; 3],
        weight: f64,
        ballistic: bool,
        pdf: impl Fn([f64; 3]) -> f64,
    ) {
        let [x, y, z] = position;
        let dz = self.camera_z - z;
        if !(dz > 0.0) {
            return;
        }
        let m = self.focal_over_pitch / dz;
        let (hx, hy) = ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0);
        let plane = self.width * self.height;
        let dz3 = dz * dz * dz;
        let target = if ballistic { &mut self.ballistic } else { &mut self.scattered };
        for (k, &(cx, cy)) in self.cameras.iter().enumerate() {
            let px = ((x - cx) * m + hx).round();
            let py = ((y - cy) * m + hy).round();
            if !(px >= 0.0 && py >= 0.0 && px < self.width as f64 && py < self.height as f64) {
                continue;
            }
            let (dx, dy) = (cx - x, cy - y);
            let r = (dx * dx + dy * dy + dz * dz).sqrt();
            let dir = [dx / r, dy / r, dz / r];
            let density = pdf(dir);
            if density == 0.0 {
                continue;
            }
            let t = slab.exit_transmittance(z, dir[2]);
            // r^2 cos^3 = dz^3 / r
            target[k * plane + py as usize * self.width + px as usize] += weight * density * t * r / dz3;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    /// Left through the camera-side face.
    Transmitted,
    /// Left through the back face.
    Reflected,
    /// Weight exhausted (zero albedo).
    Absorbed,
    RouletteKilled,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonExit {
    pub fate: Fate,
    /// State at termination; for exits, the position on the slab face.
    pub state: PhotonState,
}

/// Follows one packet until it leaves the slab or is terminated, peeling off
/// towards `film` at every scattering vertex. The caller handles emission.
pub fn trace_photon<R: Rng + ?Sized>(
    slab: &Slab,
    config: &SimConfig,
    mut state: PhotonState,
    rng: &mut R,
    mut film: Option<&mut Film>,
    ledger: &mut EnergyLedger,
) -> PhotonExit {
    ledger.launched += state.weight;
    let abort = |state: PhotonState, ledger: &mut EnergyLedger| {
        ledger.aborted += state.weight;
        ledger.aborted_photons += 1;
        PhotonExit { fate: Fate::Aborted, state }
    };
    if !state.is_valid() || !(0.0..=slab.thickness).contains(&state.position[2]) {
        return abort(state, ledger);
    }
    let mu_t = slab.medium.mu_t();
    let albedo = slab.medium.albedo();
    let g = slab.medium.g;

    loop {
        let [_, _, uz] = state.direction;
        let z = state.position[2];
        let to_face = if uz > 0.0 {
            (slab.thickness - z) / uz
        } else if uz < 0.0 {
            -z / uz
        } else {
            f64::INFINITY
        };
        let free_path = if mu_t > 0.0 { -(1.0 - rng.random::<f64>()).ln() / mu_t } else { f64::INFINITY };

        if free_path >= to_face {
            if to_face.is_infinite() {
                return abort(state, ledger);
            }
            advance(&mut state, to_face);
            state.position[2] = if uz > 0.0 { slab.thickness } else { 0.0 };
            return if uz > 0.0 {
                ledger.transmitted += state.weight;
                PhotonExit { fate: Fate::Transmitted, state }
            } else {
                ledger.reflected += state.weight;
                PhotonExit { fate: Fate::Reflected, state }
            };
        }

        advance(&mut state, free_path);
        state.scatter_events += 1;
        if state.scatter_events > config.max_events || !state.position.iter().all(|p| p.is_finite()) {
            return abort(state, ledger);
        }
        ledger.absorbed += state.weight * (1.0 - albedo);
        state.weight *= albedo;
        if state.weight == 0.0 {
            return PhotonExit { fate: Fate::Absorbed, state };
        }

        if let Some(film) = film.as_deref_mut() {
            let d = state.direction;
            film.connect(slab, state.position, state.weight, false, |to| {
                hg_phase(g, d[0] * to[0] + d[1] * to[1] + d[2] * to[2])
            });
        }

        let cos_theta = sample_hg(g, rng);
        let phi = 2.0 * PI * rng.random::<f64>();
        state.direction = scatter_direction(state.direction, cos_theta, phi);

        if state.weight < config.russian_roulette_threshold {
            if rng.random::<f64>() * config.roulette_boost < 1.0 {
                ledger.roulette_gained += state.weight * (config.roulette_boost - 1.0);
                state.weight *= config.roulette_boost;
            } else {
                ledger.roulette_killed += state.weight;
                return PhotonExit { fate: Fate::RouletteKilled, state };
            }
        }
    }
}

fn advance(state: &mut PhotonState, distance: f64) {
    for k in 0..3 {
        state.position[k] += distance * state.direction[k];
    }
}
