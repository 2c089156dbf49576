// Saves the default network, reloads it and reports its size.

use djf::net::{build_network, deserialize, param_count, payload_offset, serialize};
use djf::{Model, NetworkConfig, SubNetwork};

pub fn run_example() -> djf::Result<()> {
    let config = NetworkConfig::default();
    let model: Model = build_network(&config)?;
    for which in SubNetwork::ALL {
        let n: usize = model.layers.get(which).iter().map(|l| l.param_count()).sum();
        println!("{which:>9}: {n} parameters");
    }
    let bytes = serialize(&model);
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("default.djf");
    std::fs::write(&path, &bytes).expect("write checkpoint");

    let back: Model = deserialize(&std::fs::read(&path).expect("read checkpoint"))?;
    assert_eq!(back, model);
    let payload = bytes.len() - payload_offset(&bytes).unwrap();
    println!(
        "total {} parameters, {} payload bytes ({:.0} KB), {} bytes on disk",
        param_count(&config),
        payload,
        payload as f64 / 1024.0,
        bytes.len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
