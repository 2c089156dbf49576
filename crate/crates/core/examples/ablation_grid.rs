// Lists every configuration of the architecture ablations with its size.

use djf::net::{ablation_grid, param_count};

pub fn run_example() -> djf::Result<()> {
    for (name, config) in ablation_grid() {
        config.validate()?;
        println!(
            "{name:<34} T/G/F depth {}/{}/{}  {:>9} parameters",
            config.depth_t,
            config.depth_g,
            config.depth_f,
            param_count(&config)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> djf::Result<()> {
    run_example()
}
