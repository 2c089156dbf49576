// Dumps the first-layer responses of the target and guidance branches as
// normalized PGM images.

use djf::apply::{dump_features, LayerSelector};
use djf::net::{build_network, WeightInit};
use djf::synth::{scene, SceneParams};
use djf::{NetworkConfig, SubNetwork};

pub fn run_example() -> djf::Result<()> {
    let s = scene(&SceneParams::new(40, 40), 9);
    let model = build_network::<f32>(&NetworkConfig {
        n1: 12,
        n2: 6,
        init: WeightInit::He,
        ..NetworkConfig::default()
    })?;
    let dir = tempfile::tempdir().expect("temp dir");
    for subnetwork in [SubNetwork::Target, SubNetwork::Guidance] {
        let maps = dump_features(&model, &s.depth, &s.rgb, LayerSelector { subnetwork, layer: 0 })?;
        for (i, m) in maps.iter().enumerate() {
            djf::io::write_image(dir.path().join(format!("{subnetwork}_{i:02}.pgm")), m)?;
        }
        let active = maps.iter().filter(|m| m.min_max().1 > 0.0).count();
        println!("{subnetwork}: {} maps, {active} non-constant", maps.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
