//! Simulation scene files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_image, read_json};
use crate::diffusion::MediumParams;
use crate::error::{Error, Result};
use crate::geometry::{CameraArrayGeometry, ObjectPlane};
use crate::mcscatter::{Emission, Emitter, ScatterScene, SimConfig};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    /// Image path, relative to the scene file.
    pub path: String,
    pub pixel_scale_m: f64,
    #[serde(default)]
    pub origin_m: (f64, f64),
    /// Height above the slab's back face.
    #[serde(default)]
    pub z_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub schema_version: u32,
    /// A single emitter, or use `emitters` for several planes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emitter: Option<EmitterSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub emitters: Vec<EmitterSpec>,
    pub slab_thickness_m: f64,
    pub mu_a: f64,
    pub mu_s: f64,
    pub g: f64,
    pub grid_u: usize,
    pub grid_v: usize,
    pub baseline_m: f64,
    pub focal_length_m: f64,
    pub pixel_pitch_m: f64,
    pub object_depth_m: f64,
    /// Defaults to the first emitter's size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_height: Option<usize>,
    #[serde(default)]
    pub emission: Emission,
    pub n_photons: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u64>,
}

impl SceneFile {
    pub fn medium(&self) -> Result<MediumParams> {
        MediumParams::new(self.mu_a, self.mu_s, self.g)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(self.n_photons, self.seed);
        if let Some(b) = self.batch_size {
            cfg.batch_size = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn all_emitters(&self) -> Vec<&EmitterSpec> {
        self.emitter.iter().chain(self.emitters.iter()).collect()
    }
}

/// Parses a scene file and loads its emitter images.
pub fn load_scene(path: &Path) -> Result<(ScatterScene, SimConfig, SceneFile)> {
    let raw: serde_json::Value = read_json(path)?;
    let found = raw
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format { what: "scene", detail: "missing schema_version".into() })?;
    if found != SCENE_SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion { found: found as u32, expected: SCENE_SCHEMA_VERSION });
    }
    let file: SceneFile = serde_json::from_value(raw)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let specs = file.all_emitters();
    if specs.is_empty() {
        return Err(Error::invalid("scene declares no emitter"));
    }
    let emitters = specs
        .iter()
        .map(|s| {
            let image = load_image(&base.join(&s.path))?;
            Ok(Emitter::new(image, ObjectPlane::new(s.pixel_scale_m, s.origin_m)?).at_height(s.z_m))
        })
        .collect::<Result<Vec<_>>>()?;
    let geometry = CameraArrayGeometry::new(
        file.grid_u,
        file.grid_v,
        file.baseline_m,
        file.focal_length_m,
        file.pixel_pitch_m,
        file.object_depth_m,
    )?;
    let sensor = (
        file.sensor_width.unwrap_or(emitters[0].image.width()),
        file.sensor_height.unwrap_or(emitters[0].image.height()),
    );
    let scene = ScatterScene {
        emitters,
        slab_thickness: file.slab_thickness_m,
        medium: file.medium()?,
        geometry,
        sensor,
        emission: file.emission,
    };
    scene.validate()?;
    Ok((scene, file.sim_config()?, file))
}
