//! Synthetic depth/RGB scenes for training smoke tests, examples and the
//! bundled toy dataset.
//!
//! A scene is a stack of random rectangles and discs over a background. Each
//! region has one depth and one colour, so depth discontinuities line up
//! exactly with colour edges. Optionally a stripe texture is painted into the
//! colour image only, which a joint filter must learn not to copy.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{write_image_with_maxval, Manifest, SamplePair};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct SceneParams {
    pub height: usize,
    pub width: usize,
    pub min_shapes: usize,
    pub max_shapes: usize,
    /// Amplitude of the colour-only stripe texture (0 disables it).
    pub texture: f32,
}

impl SceneParams {
    pub fn new(height: usize, width: usize) -> Self {
        SceneParams {
            height,
            width,
            min_shapes: 3,
            max_shapes: 7,
            texture: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    /// `1 × H × W` depth on [0, 1].
    pub depth: Tensor<f32>,
    /// `3 × H × W` colour on [0, 1].
    pub rgb: Tensor<f32>,
}

enum Shape {
    Rect { y0: f32, x0: f32, y1: f32, x1: f32 },
    Disc { cy: f32, cx: f32, r: f32 },
}

impl Shape {
    fn contains(&self, y: f32, x: f32) -> bool {
        match *self {
            Shape::Rect { y0, x0, y1, x1 } => y >= y0 && y < y1 && x >= x0 && x < x1,
            Shape::Disc { cy, cx, r } => (y - cy) * (y - cy) + (x - cx) * (x - cx) < r * r,
        }
    }
}

struct Region {
    shape: Shape,
    depth: f32,
    color: [f32; 3],
    stripes: Option<(f32, f32, f32)>,
}

fn random_color(rng: &mut ChaCha8Rng) -> [f32; 3] {
    [rng.random(), rng.random(), rng.random()]
}

pub fn scene(params: &SceneParams, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (params.height as f32, params.width as f32);
    let background_depth = rng.random_range(0.6f32..1.0);
    let background = random_color(&mut rng);
    let n = rng.random_range(params.min_shapes..=params.max_shapes.max(params.min_shapes));
    let regions: Vec<Region> = (0..n)
        .map(|_| {
            let shape = if rng.random_bool(0.5) {
                let (sh, sw) = (rng.random_range(0.15..0.6) * h, rng.random_range(0.15..0.6) * w);
                let y0 = rng.random_range(0.0..(h - sh).max(1.0));
                let x0 = rng.random_range(0.0..(w - sw).max(1.0));
                Shape::Rect {
                    y0,
                    x0,
                    y1: y0 + sh,
                    x1: x0 + sw,
                }
            } else {
                Shape::Disc {
                    cy: rng.random_range(0.0..h),
                    cx: rng.random_range(0.0..w),
                    r: rng.random_range(0.1..0.35) * h.min(w),
                }
            };
            let stripes = (params.texture > 0.0 && rng.random_bool(0.5)).then(|| {
                let angle: f32 = rng.random_range(0.0..std::f32::consts::PI);
                let period: f32 = rng.random_range(2.5..6.0);
                (angle.cos(), angle.sin(), period)
            });
            Region {
                shape,
                depth: rng.random_range(0.05f32..0.95),
                color: random_color(&mut rng),
                stripes,
            }
        })
        .collect();

    let top = |y: usize, x: usize| {
        let (fy, fx) = (y as f32 + 0.5, x as f32 + 0.5);
        regions.iter().rev().find(|r| r.shape.contains(fy, fx))
    };
    let depth = Tensor::from_fn(1, params.height, params.width, |_, y, x| {
        top(y, x).map_or(background_depth, |r| r.depth)
    });
    let rgb = Tensor::from_fn(3, params.height, params.width, |c, y, x| match top(y, x) {
        None => background[c],
        Some(r) => {
            let base = r.color[c];
            match r.stripes {
                Some((dy, dx, period)) => {
                    let phase = (y as f32 * dy + x as f32 * dx) * std::f32::consts::TAU / period;
                    (base + params.texture * phase.sin()).clamp(0.0, 1.0)
                }
                None => base,
            }
        }
    });
    Scene { depth, rgb }
}

/// `count` scenes with seeds derived from `seed`.
pub fn scenes(params: &SceneParams, count: usize, seed: u64) -> Vec<Scene> {
    (0..count)
        .map(|i| scene(params, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)))
        .collect()
}

/// Writes `count` scenes to `dir` as `depth_NNN.pgm` (16-bit) and
/// `rgb_NNN.ppm` (8-bit) plus `manifest.jsonl`, and returns the manifest
/// with paths relative to `dir`.
pub fn write_dataset(dir: &Path, params: &SceneParams, count: usize, seed: u64, name: &str) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest {
        dataset: name.to_string(),
        ..Manifest::default()
    };
    for (i, s) in scenes(params, count, seed).iter().enumerate() {
        let depth = format!("depth_{i:03}.pgm");
        let rgb = format!("rgb_{i:03}.ppm");
        write_image_with_maxval(dir.join(&depth), &s.depth, 65535)?;
        write_image_with_maxval(dir.join(&rgb), &s.rgb, 255)?;
        let mut pair = SamplePair::new(&depth, &rgb);
        pair.gt_path = Some(depth.into());
        manifest.pairs.push(pair);
    }
    let path = dir.join("manifest.jsonl");
    std::fs::write(&path, manifest.to_jsonl()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// A colour image with large flat regions overlaid by a fine texture, for
/// structure/texture separation.
pub fn textured_image(height: usize, width: usize, seed: u64) -> Tensor<f32> {
    textured_pair(height, width, seed).0
}

/// A textured colour image together with its texture-free structure.
pub fn textured_pair(height: usize, width: usize, seed: u64) -> (Tensor<f32>, Tensor<f32>) {
    let base = scene(&SceneParams::new(height, width), seed).rgb;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let period: f32 = rng.random_range(3.0..5.0);
    let textured = Tensor::from_fn(3, height, width, |c, y, x| {
        let t = ((y as f32 / period).sin() * (x as f32 / period).sin()) * 0.12;
        (base.get(c, y, x) + t).clamp(0.0, 1.0)
    });
    (textured, base)
}
