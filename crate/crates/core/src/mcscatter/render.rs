//! Light-field rendering by batched photon tracing.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::transport::{trace_photon, Film};
use super::{EnergyLedger, PhotonState, ScatterScene, SimConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::lightfield::LightField;

/// Largest per-batch film (in samples) a render may allocate.
const MAX_FILM_SAMPLES: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    /// Ballistic plus scattered radiance.
    pub lightfield: LightField,
    /// Light that reached the pinholes without scattering.
    pub ballistic: LightField,
    pub scattered: LightField,
    pub ledger: EnergyLedger,
}

/// Renders the scene; see [`render_lightfield_detailed`].
pub fn render_lightfield(scene: &ScatterScene, config: &SimConfig) -> Result<LightField> {
    Ok(render_lightfield_detailed(scene, config)?.lightfield)
}

/// Renders each channel independently. View pixels hold radiance in the
/// emitter's units, so a vacuum view reproduces the emitter texture. Results
/// depend only on the seed and batch size, not on the thread count.
pub fn render_lightfield_detailed(scene: &ScatterScene, config: &SimConfig) -> Result<RenderOutput> {
    scene.validate()?;
    config.validate()?;
    let geom = &scene.geometry;
    let samples = geom.view_count() * scene.sensor.0 * scene.sensor.1;
    if samples > MAX_FILM_SAMPLES {
        return Err(Error::TooLarge(format!("{samples} view samples exceed the {MAX_FILM_SAMPLES} limit")));
    }
    let (w, h) = scene.sensor;
    let channels = scene.channels();
    let sources: Vec<Sources> = (0..channels).map(|c| Sources::new(scene, c)).collect();
    if sources.iter().all(|s| s.power == 0.0) {
        return Err(Error::invalid("emitter has zero total intensity"));
    }

    let mut ledger = EnergyLedger::default();
    let mut planes: Vec<(Vec<Image>, Vec<Image>)> = Vec::with_capacity(channels);
    for (c, src) in sources.iter().enumerate() {
        let mut film = Film::new(geom, scene.sensor);
        if src.power > 0.0 {
            let (f, l) = render_channel(scene, config, src, c as u64);
            film = f;
            ledger.merge(&l);
            let fp = geom.focal_length / geom.pixel_pitch;
            film.scale(src.power / config.n_photons as f64 * fp * fp);
        }
        let views = |ballistic: bool| {
            (0..film.view_count())
                .map(|k| {
                    let data = if ballistic { film.ballistic_view(k) } else { film.scattered_view(k) };
                    Image::from_vec(w, h, 1, data.to_vec())
                })
                .collect::<Result<Vec<_>>>()
        };
        planes.push((views(true)?, views(false)?));
    }

    let assemble = |pick: &dyn Fn(usize, usize) -> Image| -> Result<LightField> {
        let views = (0..geom.view_count())
            .map(|k| Image::from_channels(&(0..channels).map(|c| pick(c, k)).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        LightField::new(*geom, views)
    };
    let ballistic = assemble(&|c, k| planes[c].0[k].clone())?;
    let scattered = assemble(&|c, k| planes[c].1[k].clone())?;
    let lightfield = ballistic.combine(1.0, &scattered, 1.0)?;
    Ok(RenderOutput { lightfield, ballistic, scattered, ledger })
}

/// Emission sampling table for one channel.
struct Sources {
    /// Cumulative power, one entry per emitting pixel.
    cdf: Vec<f64>,
    /// `(emitter, x, y)` for each entry.
    pixels: Vec<(usize, usize, usize)>,
    /// Total emitted power.
    power: f64,
}

impl Sources {
    fn new(scene: &ScatterScene, channel: usize) -> Self {
        let mut cdf = Vec::new();
        let mut pixels = Vec::new();
        let mut acc = 0.0;
        for (e, emitter) in scene.emitters.iter().enumerate() {
            let area = emitter.plane.pixel_scale * emitter.plane.pixel_scale;
            let img = &emitter.image;
            for (i, &v) in img.channel(channel).iter().enumerate() {
                if v > 0.0 {
                    acc += v * area;
                    cdf.push(acc);
                    pixels.push((e, i % img.width(), i / img.width()));
                }
            }
        }
        Self { cdf, pixels, power: acc * scene.emission.exitance_factor() }
    }

    fn pick(&self, u: f64) -> (usize, usize, usize) {
        let target = u * self.cdf[self.cdf.len() - 1];
        let i = self.cdf.partition_point(|&c| c <= target).min(self.cdf.len() - 1);
        self.pixels[i]
    }
}

fn render_channel(scene: &ScatterScene, config: &SimConfig, src: &Sources, channel: u64) -> (Film, EnergyLedger) {
    let batches = config.batch_count();
    let group = (rayon::current_num_threads() as u64).max(1) * 2;
    let mut film = Film::new(&scene.geometry, scene.sensor);
    let mut ledger = EnergyLedger::default();
    let mut start = 0;
    while start < batches {
        let end = (start + group).min(batches);
        let results: Vec<(Film, EnergyLedger)> =
            (start..end).into_par_iter().map(|b| render_batch(scene, config, src, channel, b)).collect();
        for (f, l) in &results {
            film.merge(f);
            ledger.merge(l);
        }
        start = end;
    }
    (film, ledger)
}

fn render_batch(
    scene: &ScatterScene,
    config: &SimConfig,
    src: &Sources,
    channel: u64,
    batch: u64,
) -> (Film, EnergyLedger) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream((channel << 40) | batch);
    let n = config.batch_size.min(config.n_photons - batch * config.batch_size);
    let slab = scene.slab();
    let mut film = Film::new(&scene.geometry, scene.sensor);
    let mut ledger = EnergyLedger::default();
    for _ in 0..n {
        let (e, px, py) = src.pick(rng.random());
        let emitter = &scene.emitters[e];
        let (x, y) = emitter.plane.pixel_to_object(
            px as f64 + rng.random::<f64>() - 0.5,
            py as f64 + rng.random::<f64>() - 0.5,
            emitter.image.width(),
            emitter.image.height(),
        );
        let position = [x, y, emitter.z];
        let u: f64 = rng.random();
        let cos_z = match scene.emission {
            super::Emission::Lambertian => u.sqrt(),
            super::Emission::IsotropicForward => u,
        };
        let sin_z = (1.0 - cos_z * cos_z).max(0.0).sqrt();
        let (s, c) = (2.0 * PI * rng.random::<f64>()).sin_cos();
        let direction = [sin_z * c, sin_z * s, cos_z];

        film.connect(&slab, position, 1.0, true, |to| scene.emission.pdf(to[2]));
        let state = PhotonState { position, direction, weight: 1.0, scatter_events: 0 };
        trace_photon(&slab, config, state, &mut rng, Some(&mut film), &mut ledger);
    }
    (film, ledger)
}
