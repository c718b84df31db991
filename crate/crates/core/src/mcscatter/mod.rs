//! Monte Carlo photon transport through a homogeneous slab.
//!
//! Emitters are textured planes inside the slab `0 <= z <= slab_thickness`;
//! the camera pinholes sit in the plane `z = geometry.object_depth`. Photons
//! take exponential free paths, lose `1 - albedo` of their weight at each
//! scattering vertex and turn by a Henyey-Greenstein angle. Every vertex
//! (including the emission point) is connected to each pinhole by next-event
//! estimation, so the views accumulate radiance directly.

mod ot;
mod phase;
mod psf;
mod render;
mod transport;

use serde::{Deserialize, Serialize};

use crate::diffusion::MediumParams;
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::geometry::{CameraArrayGeometry, ObjectPlane};
use crate::image::Image;

pub use ot::{measure_ot, optical_thickness_from_powers, visibility_from_ot, OtMeasurement, VISIBILITY_CONTRAST};
pub use phase::{hg_phase, sample_hg, scatter_direction};
pub use psf::{profile_nrmse, psf_study, radial_profile, PsfStudy, RadialProfile};
pub use render::{render_lightfield, render_lightfield_detailed, RenderOutput};
pub use transport::{trace_photon, Fate, Film, PhotonExit, Slab};

/// Angular distribution of emitted light over the forward (+z) hemisphere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Emission {
    /// Radiance independent of direction (pdf `cos / pi`).
    #[default]
    Lambertian,
    /// Uniform over the hemisphere (pdf `1 / 2 pi`).
    IsotropicForward,
}

impl Emission {
    /// Directional pdf (per steradian) at polar cosine `cos_z`.
    pub fn pdf(self, cos_z: f64) -> f64 {
        if cos_z <= 0.0 {
            return 0.0;
        }
        match self {
            Emission::Lambertian => cos_z * std::f64::consts::FRAC_1_PI,
            Emission::IsotropicForward => 0.5 * std::f64::consts::FRAC_1_PI,
        }
    }

    /// Emitted power per unit area for unit on-axis radiance.
    pub fn exitance_factor(self) -> f64 {
        match self {
            Emission::Lambertian => std::f64::consts::PI,
            Emission::IsotropicForward => 2.0 * std::f64::consts::PI,
        }
    }
}

/// One textured emitting plane. `z` is its height above the slab's back face.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitter {
    pub image: Image,
    pub plane: ObjectPlane,
    pub z: f64,
}

impl Emitter {
    pub fn new(image: Image, plane: ObjectPlane) -> Self {
        Self { image, plane, z: 0.0 }
    }

    pub fn at_height(mut self, z: f64) -> Self {
        self.z = z;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterScene {
    pub emitters: Vec<Emitter>,
    pub slab_thickness: f64,
    pub medium: MediumParams,
    pub geometry: CameraArrayGeometry,
    /// Rendered view size `(width, height)`.
    pub sensor: (usize, usize),
    pub emission: Emission,
}

impl ScatterScene {
    /// Single emitter at `z = 0`, sensor sized like the emitter image.
    pub fn new(
        emitter: Image,
        plane: ObjectPlane,
        slab_thickness: f64,
        medium: MediumParams,
        geometry: CameraArrayGeometry,
    ) -> Result<Self> {
        let sensor = (emitter.width(), emitter.height());
        let scene = Self {
            emitters: vec![Emitter::new(emitter, plane)],
            slab_thickness,
            medium,
            geometry,
            sensor,
            emission: Emission::Lambertian,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_sensor(mut self, width: usize, height: usize) -> Self {
        self.sensor = (width, height);
        self
    }

    pub fn with_emission(mut self, emission: Emission) -> Self {
        self.emission = emission;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("slab_thickness", self.slab_thickness)?;
        self.medium.validate()?;
        self.geometry.validate()?;
        if self.geometry.object_depth <= self.slab_thickness {
            return Err(Error::invalid(format!(
                "cameras at {} m must lie outside the {} m slab",
                self.geometry.object_depth, self.slab_thickness
            )));
        }
        if self.sensor.0 == 0 || self.sensor.1 == 0 {
            return Err(Error::invalid("sensor must be at least 1x1"));
        }
        let Some(first) = self.emitters.first() else {
            return Err(Error::invalid("scene has no emitter"));
        };
        for e in &self.emitters {
            if e.image.channels() != first.image.channels() {
                return Err(Error::DimensionMismatch("emitters differ in channel count".into()));
            }
            ensure_finite("emitter z", e.z)?;
            if !(0.0..self.slab_thickness).contains(&e.z) {
                return Err(Error::invalid(format!("emitter at z = {} lies outside the slab", e.z)));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.emitters[0].image.channels()
    }

    pub fn slab(&self) -> Slab {
        Slab { medium: self.medium, thickness: self.slab_thickness }
    }
}

/// Transport state of one photon packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonState {
    pub position: [f64; 3],
    pub direction: [f64; 3],
    /// Packet weight relative to launch, in `(0, 1]`.
    pub weight: f64,
    pub scatter_events: u32,
}

impl PhotonState {
    pub fn new(position: [f64; 3], direction: [f64; 3]) -> Result<Self> {
        let s = Self { position, direction, weight: 1.0, scatter_events: 0 };
        if !s.is_valid() {
            return Err(Error::invalid(format!("invalid photon state {s:?}")));
        }
        Ok(s)
    }

    pub fn is_valid(&self) -> bool {
        let norm2: f64 = self.direction.iter().map(|d| d * d).sum();
        self.position.iter().all(|p| p.is_finite())
            && (norm2.sqrt() - 1.0).abs() <= 1e-12
            && self.weight > 0.0
            && self.weight <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_photons: u64,
    pub seed: u64,
    pub batch_size: u64,
    pub russian_roulette_threshold: f64,
    /// Survival odds are `1 / roulette_boost`; survivors are scaled by it.
    pub roulette_boost: f64,
    /// Scattering events after which a photon is abandoned.
    pub max_events: u32,
}

impl SimConfig {
    pub fn new(n_photons: u64, seed: u64) -> Self {
        Self { n_photons, seed, ..Self::default() }
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_photons == 0 {
            return Err(Error::invalid("n_photons must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.russian_roulette_threshold > 0.0 && self.russian_roulette_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "roulette threshold must lie in (0, 1) (got {})",
                self.russian_roulette_threshold
            )));
        }
        if !(self.roulette_boost > 1.0 && self.roulette_boost * self.russian_roulette_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "roulette boost must exceed 1 and keep boosted weights <= 1 (got {})",
                self.roulette_boost
            )));
        }
        Ok(())
    }

    pub fn batch_count(&self) -> u64 {
        self.n_photons.div_ceil(self.batch_size)
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_photons: 100_000,
            seed: 0,
            batch_size: 10_000,
            russian_roulette_threshold: 1e-3,
            roulette_boost: 10.0,
            max_events: 100_000,
        }
    }
}

/// Weight bookkeeping; every launched unit of weight ends up in exactly one
/// bucket, with roulette adding or removing weight on the side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub launched: f64,
    /// Left through the face towards the cameras.
    pub transmitted: f64,
    /// Left through the back face.
    pub reflected: f64,
    pub absorbed: f64,
    pub roulette_killed: f64,
    pub roulette_gained: f64,
    /// Non-finite states, grazing paths that never leave, or the event cap.
    pub aborted: f64,
    pub aborted_photons: u64,
}

impl EnergyLedger {
    pub fn merge(&mut self, other: &EnergyLedger) {
        self.launched += other.launched;
        self.transmitted += other.transmitted;
        self.reflected += other.reflected;
        self.absorbed += other.absorbed;
        self.roulette_killed += other.roulette_killed;
        self.roulette_gained += other.roulette_gained;
        self.aborted += other.aborted;
        self.aborted_photons += other.aborted_photons;
    }

    /// `|in - out| / launched`.
    pub fn relative_imbalance(&self) -> f64 {
        let inflow = self.launched + self.roulette_gained;
        let outflow = self.transmitted + self.reflected + self.absorbed + self.roulette_killed + self.aborted;
        (inflow - outflow).abs() / self.launched.max(f64::MIN_POSITIVE)
    }
}
