//! Synthetic bi-temporal scenes with known change masks.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::evaluation::CHANGED;
use crate::raster::{write_raster, Raster, RasterFormat};
use crate::rng::{stage_rng, STAGE_SYNTH};

pub const SYNTH_CHANNELS: usize = 3;
const BLOCK: usize = 16;
const MATERIALS: usize = 5;
/// Material that changed areas turn into; it also occurs in unchanged blocks.
const BUILT: usize = 0;
const MIN_MATERIAL_DISTANCE: f64 = 0.35;
const JITTER: f64 = 0.04;
const PLACEMENT_TRIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub y: usize,
    pub x: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn contains(&self, y: usize, x: usize) -> bool {
        y >= self.y && y < self.y + self.height && x >= self.x && x < self.x + self.width
    }

    fn overlaps(&self, o: &Rect) -> bool {
        self.y < o.y + o.height && o.y < self.y + self.height && self.x < o.x + o.width && o.x < self.x + self.width
    }
}

pub struct SynthScene {
    pub t1: Raster,
    pub t2: Raster,
    pub reference: Raster,
    pub changes: Vec<Rect>,
}

type Color = [f64; SYNTH_CHANNELS];

fn palette<R: Rng>(rng: &mut R) -> Vec<Color> {
    loop {
        let colors: Vec<Color> = (0..MATERIALS)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.1..0.9)))
            .collect();
        let separated = colors.iter().enumerate().all(|(i, a)| {
            colors[i + 1..].iter().all(|b| {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                d2.sqrt() >= MIN_MATERIAL_DISTANCE
            })
        });
        if separated {
            return colors;
        }
    }
}

fn jittered<R: Rng>(base: &Color, rng: &mut R) -> Color {
    std::array::from_fn(|k| base[k] + rng.random_range(-JITTER..JITTER))
}

/// Land-cover scene on a grid of `BLOCK`-sized tiles, each one of a few
/// well-separated materials. Inside `n_changes` disjoint rectangles with
/// sides in `[dim/8, dim/4]`, `t2` turns into the built-up material; tiles
/// under a rectangle are never built-up in `t1`. Both dates get independent
/// Gaussian noise and are clamped to `[0, 1]`.
pub fn synth(height: usize, width: usize, n_changes: usize, noise_sigma: f64, seed: u64) -> Result<SynthScene> {
    if height < 32 || width < 32 {
        return Err(Error::Parameter(format!("synthetic scenes need at least 32x32, got {height}x{width}")));
    }
    if n_changes == 0 {
        return Err(Error::Parameter("at least one change is required".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Parameter(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    let mut rng = stage_rng(seed, STAGE_SYNTH);
    let materials = palette(&mut rng);

    let mut changes: Vec<Rect> = Vec::with_capacity(n_changes);
    let mut tries = 0;
    while changes.len() < n_changes {
        tries += 1;
        if tries > PLACEMENT_TRIES {
            return Err(Error::Parameter(format!(
                "cannot fit {n_changes} disjoint change rectangles into {height}x{width}"
            )));
        }
        let rh = rng.random_range(height / 8..=height / 4);
        let rw = rng.random_range(width / 8..=width / 4);
        let rect = Rect {
            y: rng.random_range(0..=height - rh),
            x: rng.random_range(0..=width - rw),
            height: rh,
            width: rw,
        };
        if changes.iter().all(|c| !c.overlaps(&rect)) {
            changes.push(rect);
        }
    }

    let (by, bx) = (height.div_ceil(BLOCK), width.div_ceil(BLOCK));
    let touched = |b: usize| {
        let (y0, x0) = ((b / bx) * BLOCK, (b % bx) * BLOCK);
        let block = Rect {
            y: y0,
            x: x0,
            height: BLOCK.min(height - y0),
            width: BLOCK.min(width - x0),
        };
        changes.iter().any(|r| r.overlaps(&block))
    };
    let blocks: Vec<Color> = (0..by * bx)
        .map(|b| {
            let m = if touched(b) {
                rng.random_range(1..MATERIALS)
            } else {
                rng.random_range(0..MATERIALS)
            };
            jittered(&materials[m], &mut rng)
        })
        .collect();
    let built: Vec<Color> = changes.iter().map(|_| jittered(&materials[BUILT], &mut rng)).collect();

    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut sample = |v: f64| -> f32 {
        let n = if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        (v + n).clamp(0.0, 1.0) as f32
    };
    let mut t1 = Vec::with_capacity(height * width * SYNTH_CHANNELS);
    let mut t2 = Vec::with_capacity(height * width * SYNTH_CHANNELS);
    let mut reference = Vec::with_capacity(height * width);
    for y in 0..height {
        for x in 0..width {
            let before = blocks[(y / BLOCK) * bx + x / BLOCK];
            let change = changes.iter().position(|r| r.contains(y, x));
            reference.push(if change.is_some() { CHANGED } else { 0 });
            let after = change.map_or(before, |c| built[c]);
            for &v in &before {
                t1.push(sample(v));
            }
            for &v in &after {
                t2.push(sample(v));
            }
        }
    }
    Ok(SynthScene {
        t1: Raster::from_f32(height, width, SYNTH_CHANNELS, t1)?,
        t2: Raster::from_f32(height, width, SYNTH_CHANNELS, t2)?,
        reference: Raster::from_u8(height, width, 1, reference)?,
        changes,
    })
}

pub const SYNTH_T1: &str = "t1.dnhg";
pub const SYNTH_T2: &str = "t2.dnhg";
pub const SYNTH_REFERENCE: &str = "reference.pgm";

impl SynthScene {
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_raster(&self.t1, dir.join(SYNTH_T1), RasterFormat::Dnhg)?;
        write_raster(&self.t2, dir.join(SYNTH_T2), RasterFormat::Dnhg)?;
        write_raster(&self.reference, dir.join(SYNTH_REFERENCE), RasterFormat::Pgm)
    }
}
