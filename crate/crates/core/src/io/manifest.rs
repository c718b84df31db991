//! Light-field directories: a `manifest.json` plus one image per view.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_image, read_json, save_image, write_json, Provenance};
use crate::diffusion::MediumParams;
use crate::error::{Error, Result};
use crate::geometry::{CameraArrayGeometry, ViewIndex};
use crate::lightfield::LightField;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_FILE_PATTERN: &str = "view_{u:02}_{v:02}.pfm";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumBlock {
    pub mu_a: f64,
    pub mu_s: f64,
    pub g: f64,
    pub slab_thickness_m: f64,
}

impl MediumBlock {
    pub fn params(&self) -> Result<MediumParams> {
        MediumParams::new(self.mu_a, self.mu_s, self.g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightFieldManifest {
    pub schema_version: u32,
    pub grid_u: usize,
    pub grid_v: usize,
    pub baseline_m: f64,
    pub focal_length_m: f64,
    pub pixel_pitch_m: f64,
    pub object_depth_m: f64,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub file_pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumBlock>,
    /// Relative to the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl LightFieldManifest {
    pub fn for_lightfield(lf: &LightField) -> Self {
        let g = lf.geometry();
        let (width, height, channels) = lf.view_dims();
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            grid_u: g.grid_u,
            grid_v: g.grid_v,
            baseline_m: g.baseline,
            focal_length_m: g.focal_length,
            pixel_pitch_m: g.pixel_pitch,
            object_depth_m: g.object_depth,
            width,
            height,
            channels,
            file_pattern: DEFAULT_FILE_PATTERN.to_string(),
            medium: None,
            ground_truth: None,
            provenance: None,
        }
    }

    pub fn geometry(&self) -> Result<CameraArrayGeometry> {
        CameraArrayGeometry::new(
            self.grid_u,
            self.grid_v,
            self.baseline_m,
            self.focal_length_m,
            self.pixel_pitch_m,
            self.object_depth_m,
        )
    }

    pub fn view_file(&self, view: ViewIndex) -> Result<String> {
        expand_pattern(&self.file_pattern, view)
    }
}

/// Substitutes `{u}`, `{v}` and zero-padded forms such as `{u:02}`.
pub fn expand_pattern(pattern: &str, view: ViewIndex) -> Result<String> {
    let bad = |detail: String| Error::Format { what: "file pattern", detail };
    let mut out = String::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..].find('}').ok_or_else(|| bad(format!("unclosed brace in {pattern:?}")))? + open;
        let field = &rest[open + 1..close];
        let (name, spec) = field.split_once(':').unwrap_or((field, ""));
        let value = match name {
            "u" => view.u,
            "v" => view.v,
            _ => return Err(bad(format!("unknown field {name:?} in {pattern:?}"))),
        };
        let width = if spec.is_empty() {
            0
        } else {
            spec.strip_prefix('0')
                .and_then(|w| w.parse::<usize>().ok())
                .ok_or_else(|| bad(format!("unsupported format {spec:?} in {pattern:?}")))?
        };
        out.push_str(&format!("{value:0width$}"));
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedLightField {
    pub lightfield: LightField,
    pub manifest: LightFieldManifest,
    pub directory: PathBuf,
}

impl LoadedLightField {
    pub fn ground_truth_path(&self) -> Option<PathBuf> {
        self.manifest.ground_truth.as_ref().map(|p| self.directory.join(p))
    }
}

/// Reads a manifest (or the `manifest.json` inside a directory) and its views.
pub fn load_lightfield(path: &Path) -> Result<LoadedLightField> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let raw: serde_json::Value = read_json(&manifest_path)?;
    let found = raw
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format { what: "manifest", detail: "missing schema_version".into() })?;
    if found != MANIFEST_SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion { found: found as u32, expected: MANIFEST_SCHEMA_VERSION });
    }
    let manifest: LightFieldManifest = serde_json::from_value(raw)?;
    let geometry = manifest.geometry()?;
    let directory = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();

    let files: Vec<(ViewIndex, PathBuf)> =
        geometry.views().map(|v| Ok((v, directory.join(manifest.view_file(v)?)))).collect::<Result<_>>()?;
    if let Some((v, missing)) = files.iter().find(|(_, p)| !p.is_file()) {
        return Err(Error::MissingFile {
            path: missing.clone(),
            detail: format!("view (u = {}, v = {}) of the {}x{} grid", v.u, v.v, geometry.grid_u, geometry.grid_v),
        });
    }
    let mut views = Vec::with_capacity(files.len());
    for (v, p) in &files {
        let img = load_image(p)?;
        if img.dims() != (manifest.width, manifest.height, manifest.channels) {
            return Err(Error::DimensionMismatch(format!(
                "view (u = {}, v = {}) in {} is {:?}, manifest declares {:?}",
                v.u,
                v.v,
                p.display(),
                img.dims(),
                (manifest.width, manifest.height, manifest.channels)
            )));
        }
        views.push(img);
    }
    Ok(LoadedLightField { lightfield: LightField::new(geometry, views)?, manifest, directory })
}

/// Writes every view as PFM (per `manifest.file_pattern`) and the manifest.
/// Geometry and image-size fields are taken from `lf`.
pub fn save_lightfield(
    dir: &Path,
    lf: &LightField,
    template: Option<&LightFieldManifest>,
) -> Result<LightFieldManifest> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = LightFieldManifest::for_lightfield(lf);
    if let Some(t) = template {
        manifest.file_pattern = t.file_pattern.clone();
        manifest.medium = t.medium;
        manifest.ground_truth = t.ground_truth.clone();
        manifest.provenance = t.provenance.clone();
    }
    for (v, img) in lf.indexed_views() {
        save_image(&dir.join(manifest.view_file(v)?), img)?;
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
