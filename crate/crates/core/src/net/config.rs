use serde::{Deserialize, Serialize};

use super::SubNetwork;
use crate::error::{Error, Result};

/// How initial weights are drawn. Biases always start at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// Zero-mean Gaussian with a fixed standard deviation for every layer.
    Gaussian { std: f64 },
    /// Zero-mean Gaussian with per-layer standard deviation `sqrt(2 / fan_in)`.
    He,
    /// [`WeightInit::He`] with the last fusion layer zeroed, so a model with
    /// the skip connection starts as the identity on its target.
    HeResidual,
}

/// Hyper-parameters of the network.
///
/// Each branch has `depth` layers: the first has `n1` filters of size `f1`,
/// the last produces the branch output with filters of size `f3`, and every
/// layer in between has `n2` filters of size `f2`. Target and guidance
/// branches end in `n3` channels; the fusion branch ends in
/// `target_channels`. A branch depth of 0 feeds the raw images straight into
/// the fusion branch.
///
/// Missing fields take their defaults when deserialising, so a JSON object
/// can override just the fields it names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub f1: usize,
    pub f2: usize,
    pub f3: usize,
    pub depth_t: usize,
    pub depth_g: usize,
    pub depth_f: usize,
    pub target_channels: usize,
    pub guidance_channels: usize,
    pub skip_connection: bool,
    pub seed: u64,
    pub init: WeightInit,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n1: 96,
            n2: 48,
            n3: 1,
            f1: 9,
            f2: 1,
            f3: 5,
            depth_t: 3,
            depth_g: 3,
            depth_f: 3,
            target_channels: 1,
            guidance_channels: 3,
            skip_connection: true,
            seed: 0,
            init: WeightInit::Gaussian { std: 1e-3 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
}

impl LayerShape {
    pub fn param_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_size * self.kernel_size
            + self.out_channels
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n1", self.n1), ("n2", self.n2), ("n3", self.n3)] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        for (name, f) in [("f1", self.f1), ("f2", self.f2), ("f3", self.f3)] {
            if f % 2 == 0 {
                return Err(Error::config(format!(
                    "{name} = {f}: filter sizes must be odd"
                )));
            }
        }
        if self.depth_t != self.depth_g {
            return Err(Error::config(format!(
                "target depth {} differs from guidance depth {}",
                self.depth_t, self.depth_g
            )));
        }
        if self.depth_f == 0 {
            return Err(Error::config("fusion branch needs at least one layer"));
        }
        if self.target_channels == 0 || self.guidance_channels == 0 {
            return Err(Error::config("image channel counts must be positive"));
        }
        if let WeightInit::Gaussian { std } = self.init {
            if !(std.is_finite() && std >= 0.0) {
                return Err(Error::config(format!("invalid init std {std}")));
            }
        }
        Ok(())
    }

    fn chain(&self, in_channels: usize, out_channels: usize, depth: usize) -> Vec<LayerShape> {
        let mut layers = Vec::with_capacity(depth);
        let mut cin = in_channels;
        for i in 0..depth {
            let (cout, k) = if i + 1 == depth {
                // a single-layer branch keeps the wide first-layer support
                (out_channels, if depth == 1 { self.f1 } else { self.f3 })
            } else if i == 0 {
                (self.n1, self.f1)
            } else {
                (self.n2, self.f2)
            };
            layers.push(LayerShape {
                in_channels: cin,
                out_channels: cout,
                kernel_size: k,
            });
            cin = cout;
        }
        layers
    }

    /// Channels leaving the target branch.
    pub fn target_features(&self) -> usize {
        if self.depth_t == 0 {
            self.target_channels
        } else {
            self.n3
        }
    }

    /// Channels leaving the guidance branch.
    pub fn guidance_features(&self) -> usize {
        if self.depth_g == 0 {
            self.guidance_channels
        } else {
            self.n3
        }
    }

    /// Layer shapes of one sub-network.
    pub fn plan(&self, which: SubNetwork) -> Vec<LayerShape> {
        match which {
            SubNetwork::Target => self.chain(self.target_channels, self.n3, self.depth_t),
            SubNetwork::Guidance => self.chain(self.guidance_channels, self.n3, self.depth_g),
            SubNetwork::Fusion => self.chain(
                self.target_features() + self.guidance_features(),
                self.target_channels,
                self.depth_f,
            ),
        }
    }

    pub fn depth(&self, which: SubNetwork) -> usize {
        match which {
            SubNetwork::Target => self.depth_t,
            SubNetwork::Guidance => self.depth_g,
            SubNetwork::Fusion => self.depth_f,
        }
    }

    /// Branch depth `branch` for target and guidance, `total - branch` for fusion.
    pub fn with_merge(self, branch: usize, total: usize) -> Self {
        NetworkConfig {
            depth_t: branch,
            depth_g: branch,
            depth_f: total - branch,
            ..self
        }
    }

    /// Same depth for all three sub-networks.
    pub fn with_depth(self, depth: usize) -> Self {
        NetworkConfig {
            depth_t: depth,
            depth_g: depth,
            depth_f: depth,
            ..self
        }
    }
}

/// Every configuration of the filter-number, output-channel, filter-size,
/// depth and merge-layer ablations, labelled by table and setting.
pub fn ablation_grid() -> Vec<(String, NetworkConfig)> {
    let base = NetworkConfig::default();
    let mut grid = Vec::new();
    for skip in [false, true] {
        let tag = if skip { "skip" } else { "noskip" };
        for (n1, n2) in [(256, 128), (128, 64), (96, 48), (64, 32)] {
            grid.push((
                format!("filters n1={n1} n2={n2} {tag}"),
                NetworkConfig {
                    n1,
                    n2,
                    skip_connection: skip,
                    ..base.clone()
                },
            ));
        }
        for n3 in [1, 16, 32, 64] {
            grid.push((
                format!("branch outputs n3={n3} {tag}"),
                NetworkConfig {
                    n3,
                    skip_connection: skip,
                    ..base.clone()
                },
            ));
        }
        for (f1, f2, f3) in [(11, 3, 7), (9, 3, 7), (9, 1, 5), (7, 1, 5), (5, 1, 3)] {
            grid.push((
                format!("filter sizes {f1}/{f2}/{f3} {tag}"),
                NetworkConfig {
                    f1,
                    f2,
                    f3,
                    skip_connection: skip,
                    ..base.clone()
                },
            ));
        }
    }
    for d in 3..=8 {
        grid.push((
            format!("fusion-only residual d={d}"),
            base.clone().with_merge(0, d),
        ));
    }
    for d in 2..=5 {
        grid.push((format!("depth d={d}"), base.clone().with_depth(d)));
    }
    for k in [0, 2, 3, 4] {
        grid.push((
            format!("merge {k}/{k}-{}", 6 - k),
            base.clone().with_merge(k, 6),
        ));
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::param_count;

    #[test]
    fn default_plan_matches_branch_sums() {
        let c = NetworkConfig::default();
        let sum = |s| c.plan(s).iter().map(LayerShape::param_count).sum::<usize>();
        assert_eq!(sum(SubNetwork::Target), 13_729);
        assert_eq!(sum(SubNetwork::Guidance), 29_281);
        assert_eq!(sum(SubNetwork::Fusion), 21_505);
    }

    #[test]
    fn doubling_n1_matches_closed_form() {
        // with f2 = 1 only layers 1 and 2 depend on n1:
        //   branch(in) = n1*in*f1^2 + n1 + n2*n1 + n2 + n3*n2*f3^2 + n3
        let closed = |c: &NetworkConfig| {
            let b = |cin: usize, cout: usize| {
                c.n1 * cin * c.f1 * c.f1 + c.n1 + c.n2 * c.n1 + c.n2 + cout * c.n2 * c.f3 * c.f3 + cout
            };
            b(1, c.n3) + b(3, c.n3) + b(2 * c.n3, 1)
        };
        let base = NetworkConfig::default();
        let doubled = NetworkConfig {
            n1: 2 * base.n1,
            ..base.clone()
        };
        assert_eq!(param_count(&base), closed(&base));
        assert_eq!(param_count(&doubled), closed(&doubled));
        // layer-1 and layer-2 weights scale linearly in n1
        let w12 = |c: &NetworkConfig| c.n1 * (1 + 3 + 2) * c.f1 * c.f1 + 3 * c.n2 * c.n1;
        assert_eq!(w12(&doubled), 2 * w12(&base));
    }

    #[test]
    fn partial_json_overrides_defaults() {
        let c: NetworkConfig = serde_json::from_str(r#"{"n1": 16, "skip_connection": false}"#).unwrap();
        assert_eq!(c.n1, 16);
        assert!(!c.skip_connection);
        assert_eq!(c.n2, 48);
        assert!(serde_json::from_str::<NetworkConfig>(r#"{"n9": 1}"#).is_err());
    }

    #[test]
    fn deeper_variant_inserts_middle_layers() {
        let c = NetworkConfig::default().with_depth(5);
        let ks: Vec<_> = c.plan(SubNetwork::Target).iter().map(|l| (l.out_channels, l.kernel_size)).collect();
        assert_eq!(ks, vec![(96, 9), (48, 1), (48, 1), (48, 1), (1, 5)]);
    }

    #[test]
    fn zero_depth_branches_stack_raw_inputs() {
        let c = NetworkConfig::default().with_merge(0, 6);
        assert!(c.plan(SubNetwork::Target).is_empty());
        let f = c.plan(SubNetwork::Fusion);
        assert_eq!(f.len(), 6);
        assert_eq!(f[0].in_channels, 4);
        assert_eq!(f[5].out_channels, 1);
    }

    #[test]
    fn grid_is_valid() {
        let grid = ablation_grid();
        assert_eq!(grid.len(), 2 * (4 + 4 + 5) + 6 + 4 + 4);
        for (name, c) in grid {
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
