use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::Serialize;

use scatterfield::backscatter::{reconstruct_dlimj, DcpConfig, ReconstructMode};
use scatterfield::diffusion::{attenuation_ratio, rasterize_kernel_with, KernelOptions, DEFAULT_MAX_KERNEL_WIDTH};
use scatterfield::io::{
    load_image, load_kernel, load_lightfield, load_scene, save_image, save_kernel, save_lightfield, write_json,
    write_profile_csv, LightFieldManifest, MediumBlock, Provenance,
};
use scatterfield::mcscatter::{
    measure_ot, optical_thickness_from_powers, psf_study, render_lightfield_detailed, visibility_from_ot, PsfStudy,
};
use scatterfield::metrics::evaluate as quality;
use scatterfield::refocus::{Boundary, Interpolation, Normalization, RefocusTarget};
use scatterfield::{rasterize_kernel, Image, MediumParams, RefocusConfig, WienerConfig};

fn provenance<T: Serialize>(args: &T, seed: Option<u64>) -> anyhow::Result<Provenance> {
    let mut p = Provenance::new("scatterfield", env!("CARGO_PKG_VERSION"), std::env::args().collect());
    p.seed = seed;
    p.parameters = serde_json::to_value(args)?;
    Ok(p)
}

/// `recon.pfm` gets `recon.provenance.json`.
fn provenance_path(out: &Path) -> PathBuf {
    out.with_extension("provenance.json")
}

fn create_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Scene description (JSON).
    #[arg(long)]
    scene: PathBuf,
    /// Output light-field directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scene's photon count.
    #[arg(long)]
    n_photons: Option<u64>,
    /// Overrides the scene's seed.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let (scene, mut cfg, file) = load_scene(&args.scene)?;
    if let Some(n) = args.n_photons {
        cfg.n_photons = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = render_lightfield_detailed(&scene, &cfg)?;

    let mut manifest = LightFieldManifest::for_lightfield(&out.lightfield);
    manifest.medium = Some(MediumBlock {
        mu_a: scene.medium.mu_a,
        mu_s: scene.medium.mu_s,
        g: scene.medium.g,
        slab_thickness_m: scene.slab_thickness,
    });
    // The emitter doubles as ground truth when it maps pixel for pixel onto
    // the sensor at the object plane.
    let geom = &scene.geometry;
    if let [e] = scene.emitters.as_slice() {
        let matches_scale = (e.plane.pixel_scale / geom.object_pixel_scale() - 1.0).abs() < 1e-9;
        let centered = e.plane.origin == (0.0, 0.0) && e.z == 0.0;
        if matches_scale && centered && (e.image.width(), e.image.height()) == scene.sensor {
            std::fs::create_dir_all(&args.out)?;
            save_image(&args.out.join("ground_truth.pfm"), &e.image)?;
            manifest.ground_truth = Some("ground_truth.pfm".into());
        }
    }
    let mut prov = provenance(&args, Some(cfg.seed))?;
    prov.parameters = serde_json::json!({
        "arguments": prov.parameters,
        "scene": file,
        "sim_config": cfg,
        "ledger": out.ledger,
    });
    manifest.provenance = Some(prov);
    save_lightfield(&args.out, &out.lightfield, Some(&manifest))?;
    println!(
        "wrote {} views of {}x{} to {} (energy imbalance {:.2e})",
        geom.view_count(),
        scene.sensor.0,
        scene.sensor.1,
        args.out.display(),
        out.ledger.relative_imbalance()
    );
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct PsfArgs {
    /// Scene whose single emitter has exactly one lit pixel.
    #[arg(long)]
    scene: PathBuf,
    /// Directory for the refocused images and the summary.
    #[arg(long)]
    out: PathBuf,
    /// Radial profile CSV (radius_px, empirical, analytic).
    #[arg(long)]
    profile: PathBuf,
    /// Kernel truncation level.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long)]
    n_photons: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct PsfSummary {
    center_px: (f64, f64),
    refocus_depth_m: f64,
    kernel_pixel_scale_m: f64,
    kernel_size_px: usize,
    /// Scattered light only, against the kernel.
    nrmse_scattered: f64,
    /// Ballistic plus scattered light, against the kernel.
    nrmse_total: f64,
    scatter_to_ballistic: f64,
    scatter_weight: f64,
    profile: Vec<f64>,
    scattered_profile: Vec<f64>,
    analytic_profile: Vec<f64>,
    ledger: scatterfield::mcscatter::EnergyLedger,
    provenance: Provenance,
}

pub fn psf(args: PsfArgs) -> anyhow::Result<()> {
    let (scene, mut cfg, _) = load_scene(&args.scene)?;
    if let Some(n) = args.n_photons {
        cfg.n_photons = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let study = psf_study(&scene, &cfg)?;
    let g = &scene.geometry;
    let pixel_scale = study.refocus_depth * g.pixel_pitch / g.focal_length;
    let kernel = rasterize_kernel(&scene.medium, pixel_scale, args.eps)?;
    let analytic = PsfStudy::analytic_profile(&kernel);
    let nrmse_scattered = scatterfield::mcscatter::profile_nrmse(&study.scattered_profile.values, &analytic)?;
    let nrmse_total = scatterfield::mcscatter::profile_nrmse(&study.profile.values, &analytic)?;

    std::fs::create_dir_all(&args.out)?;
    save_image(&args.out.join("refocused.pfm"), &study.refocused)?;
    save_image(&args.out.join("refocused_ballistic.pfm"), &study.refocused_ballistic)?;
    save_image(&args.out.join("refocused_scattered.pfm"), &study.refocused_scattered)?;
    create_parent(&args.profile)?;
    write_profile_csv(&args.profile, &study.scattered_profile.values, &analytic)?;
    let summary = PsfSummary {
        center_px: study.center,
        refocus_depth_m: study.refocus_depth,
        kernel_pixel_scale_m: pixel_scale,
        kernel_size_px: kernel.size(),
        nrmse_scattered,
        nrmse_total,
        scatter_to_ballistic: study.scatter_to_ballistic,
        scatter_weight: study.scatter_weight(&kernel)?,
        profile: study.profile.values.clone(),
        scattered_profile: study.scattered_profile.values.clone(),
        analytic_profile: analytic,
        ledger: study.ledger,
        provenance: provenance(&args, Some(cfg.seed))?,
    };
    write_json(&args.out.join("psf.json"), &summary)?;
    println!("profile NRMSE {nrmse_scattered:.4} (scattered), {nrmse_total:.4} (total)");
    println!("scatter weight {:.4}", summary.scatter_weight);
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InterpArg {
    Nearest,
    Bilinear,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum NormArg {
    Mean,
    Sum,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BoundaryArg {
    Exclude,
    Periodic,
}

/// Refocus plane and resampling options shared by `refocus` and `reconstruct`.
#[derive(Debug, Args, Serialize)]
struct FocusArgs {
    /// Camera-to-plane distance in meters (defaults to the manifest's object depth).
    #[arg(long, conflicts_with = "alpha")]
    depth: Option<f64>,
    /// Relative focus position z / (z + f), in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = InterpArg::Bilinear)]
    interpolation: InterpArg,
    #[arg(long, value_enum, default_value_t = NormArg::Mean)]
    normalization: NormArg,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Exclude)]
    boundary: BoundaryArg,
}

impl FocusArgs {
    fn config(&self, manifest: &LightFieldManifest) -> RefocusConfig {
        let target = match (self.depth, self.alpha) {
            (_, Some(a)) => RefocusTarget::Alpha(a),
            (Some(z), None) => RefocusTarget::Depth(z),
            (None, None) => RefocusTarget::Depth(manifest.object_depth_m),
        };
        RefocusConfig {
            target,
            interpolation: match self.interpolation {
                InterpArg::Nearest => Interpolation::Nearest,
                InterpArg::Bilinear => Interpolation::Bilinear,
            },
            normalization: match self.normalization {
                NormArg::Mean => Normalization::Mean,
                NormArg::Sum => Normalization::Sum,
            },
            boundary: match self.boundary {
                BoundaryArg::Exclude => Boundary::Exclude,
                BoundaryArg::Periodic => Boundary::Periodic,
            },
        }
    }
}

/// Object-plane size of one refocused pixel.
fn refocused_pixel_scale(cfg: &RefocusConfig, manifest: &LightFieldManifest) -> f64 {
    let depth = match cfg.target {
        RefocusTarget::Depth(z) => z,
        RefocusTarget::Alpha(a) => a * manifest.focal_length_m / (1.0 - a),
    };
    depth * manifest.pixel_pitch_m / manifest.focal_length_m
}

#[derive(Debug, Args, Serialize)]
pub struct RefocusArgs {
    /// Light-field directory or manifest.
    #[arg(long)]
    lf: PathBuf,
    #[command(flatten)]
    focus: FocusArgs,
    #[arg(long)]
    out: PathBuf,
}

pub fn refocus(args: RefocusArgs) -> anyhow::Result<()> {
    let loaded = load_lightfield(&args.lf)?;
    let cfg = args.focus.config(&loaded.manifest);
    let img = scatterfield::refocus(&loaded.lightfield, &cfg)?;
    create_parent(&args.out)?;
    save_image(&args.out, &img)?;
    write_json(&provenance_path(&args.out), &provenance(&args, None)?)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    /// Absorption coefficient (1/m).
    #[arg(long)]
    mu_a: f64,
    /// Scattering coefficient (1/m).
    #[arg(long)]
    mu_s: f64,
    /// Henyey-Greenstein anisotropy.
    #[arg(long, default_value_t = 0.0)]
    g: f64,
    /// Meters per kernel pixel.
    #[arg(long)]
    pixel_scale: f64,
    /// Truncation level relative to the peak, in (0, 0.1).
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Distance to a mirror source plane; unbounded medium when omitted.
    #[arg(long)]
    mirror_distance: Option<f64>,
    /// Keep the raw profile scale instead of normalizing to unit sum.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_KERNEL_WIDTH)]
    max_width: usize,
    #[arg(long)]
    out: PathBuf,
}

pub fn kernel(args: KernelArgs) -> anyhow::Result<()> {
    let params = MediumParams::new(args.mu_a, args.mu_s, args.g)?;
    let opts = KernelOptions {
        mirror_distance: args.mirror_distance.unwrap_or(f64::INFINITY),
        normalize: !args.no_normalize,
        max_width: args.max_width,
        ..KernelOptions::new(args.pixel_scale, args.eps)
    };
    let kernel = rasterize_kernel_with(&params, &opts)?;
    create_parent(&args.out)?;
    save_kernel(&args.out, &kernel, Some(args.eps), Some(provenance(&args, None)?))?;
    println!("wrote {0}x{0} kernel to {1}", kernel.size(), args.out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    /// Self-luminous object: no airlight, divide by the ballistic attenuation.
    #[value(name = "self")]
    SelfLuminous,
    /// Externally lit object: estimate and remove airlight first.
    Passive,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    lf: PathBuf,
    /// Kernel image with its JSON sidecar.
    #[arg(long)]
    kernel: PathBuf,
    /// Signal-to-noise ratio of the Wiener filter.
    #[arg(long, default_value_t = 1e4)]
    zeta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::SelfLuminous)]
    mode: ModeArg,
    /// Ballistic attenuation for self-luminous mode; derived from the
    /// manifest's medium block when omitted.
    #[arg(long)]
    gamma: Option<f64>,
    /// Weight of the diffuse kernel relative to the ballistic impulse.
    #[arg(long, default_value_t = 1.0)]
    scatter_weight: f64,
    /// Invert the diffuse kernel alone, without the ballistic impulse.
    #[arg(long)]
    no_impulse: bool,
    #[command(flatten)]
    focus: FocusArgs,
    /// Dark-channel window (odd).
    #[arg(long, default_value_t = 15)]
    window: usize,
    #[arg(long, default_value_t = 0.95)]
    omega: f64,
    #[arg(long, default_value_t = 0.1)]
    t_min: f64,
    #[arg(long, default_value_t = 0.001)]
    atmosphere_fraction: f64,
    #[arg(long)]
    out: PathBuf,
    /// Transmission map output (passive mode).
    #[arg(long)]
    tmap: Option<PathBuf>,
    /// Airlight estimate output (passive mode, JSON).
    #[arg(long)]
    atmo: Option<PathBuf>,
}

pub fn reconstruct(args: ReconstructArgs) -> anyhow::Result<()> {
    let loaded = load_lightfield(&args.lf)?;
    let (kernel, meta) = load_kernel(&args.kernel)?;
    let cfg = args.focus.config(&loaded.manifest);
    let refocused = scatterfield::refocus(&loaded.lightfield, &cfg)?;

    let scale = refocused_pixel_scale(&cfg, &loaded.manifest);
    if (kernel.pixel_scale / scale - 1.0).abs() > 0.01 {
        eprintln!(
            "scatterfield: warning: kernel pixel scale {:.4e} m differs from the refocused pixel scale {:.4e} m",
            kernel.pixel_scale, scale
        );
    }
    let mode = match args.mode {
        ModeArg::Passive => ReconstructMode::Passive,
        ModeArg::SelfLuminous => {
            let gamma = match (args.gamma, loaded.manifest.medium) {
                (Some(g), _) => g,
                (None, Some(m)) => attenuation_ratio(m.mu_s, m.slab_thickness_m)?,
                (None, None) => bail!(scatterfield::Error::InvalidArgument(
                    "self-luminous mode needs --gamma or a medium block in the manifest".into()
                )),
            };
            ReconstructMode::SelfLuminous { gamma }
        }
    };
    if matches!(args.mode, ModeArg::SelfLuminous) && (args.tmap.is_some() || args.atmo.is_some()) {
        eprintln!("scatterfield: warning: --tmap and --atmo are only written in passive mode");
    }
    let dcp = DcpConfig {
        window: args.window,
        omega: args.omega,
        t_min: args.t_min,
        atmosphere_fraction: args.atmosphere_fraction,
    };
    let wiener =
        WienerConfig::new(args.zeta).with_scatter_weight(args.scatter_weight).with_ballistic_impulse(!args.no_impulse);
    let rec = reconstruct_dlimj(&refocused, &kernel, &dcp, &wiener, mode)?;

    create_parent(&args.out)?;
    save_image(&args.out, &rec.image)?;
    if let (Some(path), Some(t)) = (&args.tmap, &rec.transmission) {
        create_parent(path)?;
        save_image(path, &t.t)?;
    }
    if let (Some(path), Some(b)) = (&args.atmo, &rec.atmosphere) {
        create_parent(path)?;
        write_json(path, b)?;
    }
    let mut prov = provenance(&args, None)?;
    prov.parameters = serde_json::json!({
        "arguments": prov.parameters,
        "reconstruct_mode": mode,
        "kernel": meta,
        "transform_size": rec.transform_size,
        "light_field_provenance": loaded.manifest.provenance,
    });
    write_json(&provenance_path(&args.out), &prov)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Image under test.
    #[arg(long)]
    a: PathBuf,
    /// Reference image.
    #[arg(long)]
    b: PathBuf,
    /// JSON report output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Dynamic range used by PSNR and SSIM.
    #[arg(long, default_value_t = 1.0)]
    max_value: f64,
    /// Divide each image by its maximum before scoring.
    #[arg(long)]
    peak_normalize: bool,
}

#[derive(Serialize)]
struct EvaluateReport {
    #[serde(flatten)]
    quality: scatterfield::QualityReport,
    provenance: Provenance,
}

pub fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let prepare = |p: &Path| -> anyhow::Result<Image> {
        let img = load_image(p)?;
        Ok(if args.peak_normalize { img.peak_normalized() } else { img })
    };
    let quality = quality(&prepare(&args.a)?, &prepare(&args.b)?, args.max_value)?;
    let report = EvaluateReport { quality, provenance: provenance(&args, None)? };
    if let Some(path) = &args.report {
        create_parent(path)?;
        write_json(path, &report)?;
    }
    println!("{}", serde_json::to_string(&report.quality)?);
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct OtArgs {
    /// Beam power without the medium.
    #[arg(long, requires = "pa", conflicts_with = "mu_s")]
    po: Option<f64>,
    /// Beam power through the medium.
    #[arg(long, requires = "po")]
    pa: Option<f64>,
    /// Scattering coefficient of a simulated slab (1/m).
    #[arg(long, requires = "length")]
    mu_s: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    mu_a: f64,
    #[arg(long, default_value_t = 0.0)]
    g: f64,
    /// Slab thickness (m).
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    photons: u64,
    /// Detector acceptance half-angle (rad).
    #[arg(long, default_value_t = 0.01)]
    aperture: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Optional JSON report with provenance.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn ot(args: OtArgs) -> anyhow::Result<()> {
    let (t, measurement) = match (args.po, args.pa, args.mu_s, args.length) {
        (Some(po), Some(pa), _, _) => (optical_thickness_from_powers(po, pa)?, None),
        (_, _, Some(mu_s), Some(length)) => {
            let medium = MediumParams::new(args.mu_a, mu_s, args.g)?;
            let m = measure_ot(&medium, length, args.photons, args.aperture, args.seed)?;
            (m.optical_thickness, Some(m))
        }
        _ => bail!(scatterfield::Error::InvalidArgument("give --po and --pa, or --mu-s and --length".into())),
    };
    let visibility = if t > 0.0 { Some(visibility_from_ot(t)?) } else { None };
    println!("T = {t:.4}");
    if let Some(m) = &measurement {
        if m.lower_bound {
            println!("(lower bound: no unscattered photon reached the detector)");
        }
    }
    match visibility {
        Some(v) => println!("visibility multiplier = {v:.4}"),
        None => println!("visibility multiplier = n/a"),
    }
    if let Some(path) = &args.out {
        create_parent(path)?;
        let report = serde_json::json!({
            "optical_thickness": t,
            "visibility_multiplier": visibility,
            "measurement": measurement,
            "provenance": provenance(&args, measurement.map(|_| args.seed))?,
        });
        write_json(path, &report)?;
    }
    Ok(())
}
