// Writes a synthetic depth/RGB dataset with a JSON-Lines manifest.
//
// ```text
// cargo run --example synthetic_dataset -- <dir> [count] [size] [seed]
// ```
//
// The bundled toy fixture was made with `tests/fixtures/toy 8 32 7`.

use std::path::Path;

use djf::synth::{write_dataset, SceneParams};

pub fn run_example() -> djf::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let manifest = write_dataset(dir.path(), &SceneParams::new(48, 64), 4, 1, "synthetic")?;
    let back = djf::io::read_manifest(dir.path().join("manifest.jsonl"))?;
    assert_eq!(back.len(), manifest.len());
    for pair in &back.pairs {
        let depth = djf::io::read_image(pair.ground_truth_path())?;
        let rgb = djf::io::read_image(&pair.guidance_path)?;
        println!(
            "{}: depth {:?}, rgb {:?}",
            pair.target_path.file_name().unwrap().to_string_lossy(),
            depth.shape(),
            rgb.shape()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        return run_example();
    };
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (count, size, seed) = (arg(1, 8) as usize, arg(2, 32) as usize, arg(3, 7));
    let m = write_dataset(Path::new(dir), &SceneParams::new(size, size), count, seed, "toy")?;
    println!("wrote {} pairs to {dir}", m.len());
    Ok(())
}
