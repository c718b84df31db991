//! File formats: PFM/PNG images, light-field manifests, scene files,
//! kernels with metadata, CSV profiles and JSON reports.

mod manifest;
mod pfm;
mod png16;
mod scene;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffuseKernel, MediumParams};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::Kernel2D;

pub use manifest::{
    expand_pattern, load_lightfield, save_lightfield, LightFieldManifest, LoadedLightField, MediumBlock,
    DEFAULT_FILE_PATTERN, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION,
};
pub use pfm::{read_pfm, write_pfm};
pub use png16::{read_png, write_png};
pub use scene::{load_scene, EmitterSpec, SceneFile, SCENE_SCHEMA_VERSION};

/// How a run can be repeated: the tool, its arguments and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command_line: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub manifest_schema_version: u32,
    pub scene_schema_version: u32,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

impl Provenance {
    pub fn new(tool: impl Into<String>, version: impl Into<String>, command_line: Vec<String>) -> Self {
        Self {
            tool: tool.into(),
            version: version.into(),
            command_line,
            seed: None,
            manifest_schema_version: MANIFEST_SCHEMA_VERSION,
            scene_schema_version: SCENE_SCHEMA_VERSION,
            parameters: serde_json::Value::Null,
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile { path: path.to_path_buf(), detail: e.to_string() },
        _ => Error::Io(e),
    })
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Loads a `.pfm` or `.png` image.
pub fn load_image(path: &Path) -> Result<Image> {
    match extension(path).as_str() {
        "pfm" => read_pfm(BufReader::new(open(path)?)),
        "png" => read_png(BufReader::new(open(path)?)),
        other => Err(Error::invalid(format!("unsupported image extension {other:?} for {}", path.display()))),
    }
}

/// Saves as `.pfm` (lossless up to `f32`) or `.png` (16-bit preview).
pub fn save_image(path: &Path, image: &Image) -> Result<()> {
    let ext = extension(path);
    if ext != "pfm" && ext != "png" {
        return Err(Error::invalid(format!("unsupported image extension {ext:?} for {}", path.display())));
    }
    let mut out = BufWriter::new(File::create(path)?);
    if ext == "pfm" {
        write_pfm(&mut out, image)?;
    } else {
        write_png(&mut out, image)?;
    }
    out.flush()?;
    Ok(())
}

/// Rounds every sample to `f32`, matching what a PFM round trip yields.
pub fn quantize_f32(image: &Image) -> Image {
    let data = image.as_slice().iter().map(|&v| v as f32 as f64).collect();
    Image::from_vec(image.width(), image.height(), image.channels(), data).expect("rounding keeps samples valid")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

/// Writes `radius_px,empirical,analytic` rows; missing analytic samples are 0.
pub fn write_profile_csv(path: &Path, empirical: &[f64], analytic: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "radius_px,empirical,analytic")?;
    for (r, e) in empirical.iter().enumerate() {
        writeln!(out, "{r},{e},{}", analytic.get(r).copied().unwrap_or(0.0))?;
    }
    out.flush()?;
    Ok(())
}

/// Sidecar describing a kernel image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMetadata {
    pub pixel_scale_m: f64,
    pub mu_a: f64,
    pub mu_s: f64,
    pub g: f64,
    /// `None` for an unbounded medium.
    pub mirror_distance_m: Option<f64>,
    pub normalized: bool,
    #[serde(default)]
    pub truncation_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// `kernel.pfm` pairs with `kernel.json`.
pub fn kernel_metadata_path(image_path: &Path) -> PathBuf {
    image_path.with_extension("json")
}

pub fn save_kernel(
    path: &Path,
    kernel: &DiffuseKernel,
    truncation_eps: Option<f64>,
    provenance: Option<Provenance>,
) -> Result<()> {
    let k = kernel.kernel();
    let img = Image::from_vec(k.width(), k.height(), 1, k.as_slice().to_vec())?;
    save_image(path, &img)?;
    let meta = KernelMetadata {
        pixel_scale_m: kernel.pixel_scale,
        mu_a: kernel.params.mu_a,
        mu_s: kernel.params.mu_s,
        g: kernel.params.g,
        mirror_distance_m: kernel.mirror_distance.is_finite().then_some(kernel.mirror_distance),
        normalized: kernel.normalized,
        truncation_eps,
        provenance,
    };
    write_json(&kernel_metadata_path(path), &meta)
}

pub fn load_kernel(path: &Path) -> Result<(DiffuseKernel, KernelMetadata)> {
    let img = load_image(path)?;
    if img.channels() != 1 {
        return Err(Error::Format { what: "kernel", detail: "kernel images must be single-channel".into() });
    }
    let meta: KernelMetadata = read_json(&kernel_metadata_path(path))?;
    let k = Kernel2D::new(img.width(), img.height(), img.into_vec())?;
    let params = MediumParams::new(meta.mu_a, meta.mu_s, meta.g)?;
    let kernel = DiffuseKernel::from_parts(
        k,
        meta.pixel_scale_m,
        params,
        meta.mirror_distance_m.unwrap_or(f64::INFINITY),
        meta.normalized,
    )?;
    Ok((kernel, meta))
}
