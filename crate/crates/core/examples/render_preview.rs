//! Renders one synthetic person from several azimuths and distances.
//!
//! ```text
//! cargo run --release --example render_preview -- --size 160
//! ```

mod shared;

use advlogo::render::{render, CameraPose};
use clap::Parser;
use shared::{backgrounds, people, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let mesh = &people(203, 1)[0];
    let bg = &backgrounds(205, 1, desk.opts.size)[0];
    let atlas = mesh.base_atlas();
    for (azimuth, distance) in [(-90.0, 2.2), (-30.0, 2.2), (0.0, 2.2), (30.0, 2.2), (90.0, 2.2), (0.0, 1.4), (0.0, 3.0)] {
        let product = render(mesh, &CameraPose::new(distance, 6.0, azimuth), &desk.scene, &atlas, bg)?;
        let path = desk.path(&format!("preview_az{azimuth}_d{distance}.png"));
        product.rgb.save_png(&path)?;
        match product.gt_box {
            Some(b) => println!("{}: box x {}..{} y {}..{}", path.display(), b.x0, b.x1, b.y0, b.y1),
            None => println!("{}: person out of frame", path.display()),
        }
    }
    Ok(())
}
