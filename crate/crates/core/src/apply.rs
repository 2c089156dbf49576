//! Application wrappers around a trained model: joint upsampling, denoising,
//! iterative structure/texture separation and feature-map dumps.

use serde::{Deserialize, Serialize};

use crate::baseline::bicubic_resize;
use crate::error::{Error, Result};
use crate::net::{forward, Model, SubNetwork};
use crate::tensor::{Real, Tensor};

/// Rec. 601 luma of a 3-channel image; a 1-channel image is returned as is.
pub fn luminance<T: Real>(image: &Tensor<T>) -> Result<Tensor<T>> {
    match image.channels() {
        1 => Ok(image.clone()),
        3 => {
            let (r, g, b) = (image.channel(0), image.channel(1), image.channel(2));
            let (wr, wg, wb) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
            let data = (0..image.plane_len()).map(|i| wr * r[i] + wg * g[i] + wb * b[i]).collect();
            Tensor::new(1, image.height(), image.width(), data)
        }
        c => Err(Error::InvalidArgument(format!(
            "luminance needs 1 or 3 channels, got {c}"
        ))),
    }
}

fn fit_guidance<T: Real>(model: &Model<T>, guidance: &Tensor<T>) -> Result<Tensor<T>> {
    let want = model.config().guidance_channels;
    match guidance.channels() {
        c if c == want => Ok(guidance.clone()),
        1 if want == 3 => guidance.replicate_channel(3),
        c => Err(Error::InvalidArgument(format!(
            "guidance has {c} channels; expected 1 or {want}"
        ))),
    }
}

/// Filters every target channel independently under the same guidance.
///
/// Single-channel guidance is replicated to three channels when the model
/// expects colour guidance.
pub fn joint_filter<T: Real>(model: &Model<T>, target: &Tensor<T>, guidance: &Tensor<T>) -> Result<Tensor<T>> {
    if (target.height(), target.width()) != (guidance.height(), guidance.width()) {
        return Err(Error::shape(format!(
            "target is {}x{} but guidance is {}x{}",
            target.height(),
            target.width(),
            guidance.height(),
            guidance.width()
        )));
    }
    let guidance = fit_guidance(model, guidance)?;
    let per = model.config().target_channels;
    if !target.channels().is_multiple_of(per) {
        return Err(Error::InvalidArgument(format!(
            "target has {} channels; the model filters groups of {per}",
            target.channels()
        )));
    }
    let outputs = (0..target.channels() / per)
        .map(|g| {
            let part = target.crop_channels(g * per, per)?;
            Ok(forward(model, &part, &guidance, false)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Tensor<T>> = outputs.iter().collect();
    Tensor::concat_channels(&refs)
}

/// Bicubic upsampling of `low` to the guidance size followed by [`joint_filter`].
pub fn upsample<T: Real>(model: &Model<T>, low: &Tensor<T>, guidance: &Tensor<T>, scale: usize) -> Result<Tensor<T>> {
    if scale == 0 || low.height() * scale != guidance.height() || low.width() * scale != guidance.width() {
        return Err(Error::shape(format!(
            "low-resolution target {}x{} times {scale} does not match guidance {}x{}",
            low.height(),
            low.width(),
            guidance.height(),
            guidance.width()
        )));
    }
    let up = bicubic_resize(low, guidance.height(), guidance.width())?;
    joint_filter(model, &up, guidance)
}

pub fn denoise<T: Real>(model: &Model<T>, noisy: &Tensor<T>, guidance: &Tensor<T>) -> Result<Tensor<T>> {
    joint_filter(model, noisy, guidance)
}

/// Which guidance the iterations of [`texture_separate`] use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    /// Luminance of the original image at every iteration.
    #[default]
    Fixed,
    /// Luminance of the previous iterate.
    Rolling,
}

impl std::str::FromStr for GuidanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(GuidanceMode::Fixed),
            "rolling" => Ok(GuidanceMode::Rolling),
            _ => Err(Error::InvalidArgument(format!(
                "guidance mode must be fixed or rolling, got {s:?}"
            ))),
        }
    }
}

/// Self-guided iterative filtering: each iteration filters the previous
/// output with guidance derived from the image itself.
pub fn texture_separate<T: Real>(
    model: &Model<T>,
    image: &Tensor<T>,
    iterations: usize,
    mode: GuidanceMode,
) -> Result<Tensor<T>> {
    texture_separate_with(image, iterations, mode, |x, g| joint_filter(model, x, g))
}

/// [`texture_separate`] with the per-iteration filter supplied by the caller.
pub fn texture_separate_with<T: Real>(
    image: &Tensor<T>,
    iterations: usize,
    mode: GuidanceMode,
    mut filter: impl FnMut(&Tensor<T>, &Tensor<T>) -> Result<Tensor<T>>,
) -> Result<Tensor<T>> {
    let original = luminance(image)?;
    let mut x = image.clone();
    for _ in 0..iterations {
        let guidance = match mode {
            GuidanceMode::Fixed => original.clone(),
            GuidanceMode::Rolling => luminance(&x)?,
        };
        x = filter(&x, &guidance)?;
    }
    Ok(x)
}

/// Selects one layer of one sub-network; `layer` counts from 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSelector {
    pub subnetwork: SubNetwork,
    pub layer: usize,
}

/// Post-activation feature maps of the selected layer, each rescaled to
/// `[0, 1]`. Constant maps become all zero.
pub fn dump_features<T: Real>(
    model: &Model<T>,
    target: &Tensor<T>,
    guidance: &Tensor<T>,
    which: LayerSelector,
) -> Result<Vec<Tensor<T>>> {
    let depth = model.config().depth(which.subnetwork);
    if which.layer >= depth {
        return Err(Error::InvalidArgument(format!(
            "{} has {depth} layers; layer index {} is out of range",
            which.subnetwork, which.layer
        )));
    }
    let guidance = fit_guidance(model, guidance)?;
    let (_, trace) = forward(model, target, &guidance, true)?;
    let trace = trace.expect("trace kept");
    let maps = trace
        .branch(which.subnetwork)
        .post_activation(which.layer)
        .expect("layer index checked");
    Ok((0..maps.channels())
        .map(|c| {
            let m = maps.channel_tensor(c);
            let (lo, hi) = m.min_max();
            if hi > lo {
                let span = hi - lo;
                m.map(|v| (v - lo) / span)
            } else {
                m.zeros_like()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_network, NetworkConfig, WeightInit};

    fn small(skip: bool) -> Model<f64> {
        build_network(&NetworkConfig {
            n1: 4,
            n2: 3,
            f1: 3,
            f2: 1,
            f3: 3,
            skip_connection: skip,
            init: WeightInit::He,
            seed: 2,
            ..NetworkConfig::default()
        })
        .unwrap()
    }

    fn img(c: usize, seed: u64) -> Tensor<f64> {
        Tensor::from_fn(c, 6, 7, |c, y, x| ((c * 31 + y * 7 + x + seed as usize) as f64 * 0.37).sin() * 0.5 + 0.5)
    }

    #[test]
    fn multi_channel_target_is_per_channel() {
        let m = small(true);
        let t = img(3, 0);
        let g = img(3, 1);
        let all = joint_filter(&m, &t, &g).unwrap();
        for c in 0..3 {
            let one = joint_filter(&m, &t.channel_tensor(c), &g).unwrap();
            assert_eq!(all.channel(c), one.data());
        }
    }

    #[test]
    fn single_channel_guidance_is_replicated() {
        let m = small(true);
        let t = img(1, 0);
        let g = img(1, 4);
        let a = joint_filter(&m, &t, &g).unwrap();
        let b = joint_filter(&m, &t, &Tensor::concat_channels(&[&g, &g, &g]).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(joint_filter(&m, &t, &img(2, 0)).is_err());
        assert!(joint_filter(&m, &t, &img(4, 0)).is_err());
    }

    #[test]
    fn zero_fusion_is_identity_per_channel() {
        let mut m = small(true);
        m.zero_fusion_output();
        let t = img(3, 5);
        assert_eq!(joint_filter(&m, &t, &img(3, 6)).unwrap(), t);
        assert_eq!(texture_separate(&m, &t, 3, GuidanceMode::Rolling).unwrap(), t);
        assert_eq!(denoise(&m, &t, &img(1, 0)).unwrap(), t);
    }

    #[test]
    fn upsample_contract() {
        let mut m = small(true);
        m.zero_fusion_output();
        let low = img(1, 0);
        assert_eq!(upsample(&m, &low, &img(3, 1), 1).unwrap(), low);
        let g = Tensor::zeros(3, 12, 14);
        assert_eq!(upsample(&m, &low, &g, 2).unwrap().shape(), (1, 12, 14));
        assert!(upsample(&m, &low, &Tensor::zeros(3, 12, 13), 2).is_err());
    }

    #[test]
    fn separation_counts_and_composes() {
        let m = small(true);
        let x = img(3, 2);
        let mut calls = 0;
        let out = texture_separate_with(&x, 4, GuidanceMode::Fixed, |t, g| {
            calls += 1;
            joint_filter(&m, t, g)
        })
        .unwrap();
        assert_eq!(calls, 4);
        assert_eq!(out, texture_separate(&m, &x, 4, GuidanceMode::Fixed).unwrap());
        assert_eq!(texture_separate(&m, &x, 0, GuidanceMode::Fixed).unwrap(), x);

        // rolling guidance depends only on the current iterate, so iterations compose
        let once = texture_separate(&m, &x, 1, GuidanceMode::Rolling).unwrap();
        let twice = texture_separate(&m, &once, 1, GuidanceMode::Rolling).unwrap();
        assert_eq!(twice, texture_separate(&m, &x, 2, GuidanceMode::Rolling).unwrap());
    }

    #[test]
    fn feature_maps_are_normalized() {
        let m = small(true);
        let sel = LayerSelector {
            subnetwork: SubNetwork::Target,
            layer: 0,
        };
        let maps = dump_features(&m, &img(1, 0), &img(3, 0), sel).unwrap();
        assert_eq!(maps.len(), 4);
        for map in &maps {
            let (lo, hi) = map.min_max();
            assert!(lo == 0.0 && (hi == 1.0 || hi == 0.0));
        }
        let mut z = m.clone();
        z.zero_subnetwork(SubNetwork::Guidance);
        let sel = LayerSelector {
            subnetwork: SubNetwork::Guidance,
            layer: 1,
        };
        for map in dump_features(&z, &img(1, 0), &img(3, 0), sel).unwrap() {
            assert!(map.data().iter().all(|&v| v == 0.0));
        }
        let bad = LayerSelector {
            subnetwork: SubNetwork::Fusion,
            layer: 3,
        };
        assert!(dump_features(&m, &img(1, 0), &img(3, 0), bad).is_err());
    }
}
