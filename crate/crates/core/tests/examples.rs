macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(ablation_grid, "ablation_grid.rs", ablation_grid_example_runs);
example!(baselines, "baselines.rs", baselines_example_runs);
example!(benchmark, "benchmark.rs", benchmark_example_runs);
example!(checkpoint, "checkpoint.rs", checkpoint_example_runs);
example!(denoise, "denoise.rs", denoise_example_runs);
example!(feature_maps, "feature_maps.rs", feature_maps_example_runs);
example!(gradient_check, "gradient_check.rs", gradient_check_example_runs);
example!(synthetic_dataset, "synthetic_dataset.rs", synthetic_dataset_example_runs);
example!(texture_separation, "texture_separation.rs", texture_separation_example_runs);
example!(upsample_depth, "upsample_depth.rs", upsample_depth_example_runs);
