//! Writes a ready-to-run directory for the `advlogo` binary: person OBJs,
//! background PNGs, a logo region and `config.json`.
//!
//! ```text
//! cargo run --release --example make_dataset -- --out data
//! cargo run --release -- detector-train data/config.json
//! cargo run --release -- attack-train data/config.json
//! ```

mod shared;

use advlogo::mesh::{write_obj, LogoRegion, RegionSpec};
use advlogo::synth::{chest_and_thighs, write_backgrounds};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shared::{ensure_dir, people, Opts};

fn main() -> advlogo::Result<()> {
    let opts = Opts::parse();
    let root = &opts.out;
    for (dir, meshes) in [("meshes", people(203, 2)), ("detector_meshes", people(201, 40))] {
        ensure_dir(&root.join(dir));
        for (i, m) in meshes.iter().enumerate() {
            write_obj(m, root.join(dir).join(format!("person_{i:03}.obj")))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    write_backgrounds(&root.join("backgrounds_train"), "train", opts.backgrounds, opts.size, &mut rng)?;
    write_backgrounds(&root.join("backgrounds_test"), "test", opts.backgrounds, opts.size, &mut rng)?;
    let mesh = &people(203, 1)[0];
    let region = LogoRegion::select(mesh, &RegionSpec::Boxes(chest_and_thighs()))?;
    region.write_faces(root.join("region.faces"))?;

    let size = opts.size;
    let config = serde_json::json!({
        "paths": {
            "meshes": "meshes",
            "detector_meshes": "detector_meshes",
            "backgrounds_train": "backgrounds_train",
            "backgrounds_test": "backgrounds_test",
            "region": "region.faces",
            "output": "runs"
        },
        "scene": { "image_size": size, "translation_range": 50 * size / 416 },
        "plan": { "epochs": opts.epochs, "batch_size": 4 },
        "loss": { "lambda_dis": (416.0 / size as f64).powi(2), "lambda_tv": 2.5 },
        "dataset": { "azimuth_range": 90.0 },
        "detector": {
            "epochs": opts.detector_epochs,
            "learning_rate": 0.02,
            "decay_epochs": [opts.detector_epochs * 7 / 10, opts.detector_epochs * 9 / 10]
        }
    });
    let path = root.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config)? + "\n").map_err(|e| advlogo::Error::Io { path: path.clone(), source: e })?;
    println!("wrote {} ({} region faces)", path.display(), region.len());
    Ok(())
}
