//! Picks logo faces by axis-aligned boxes and shows that the same face
//! indices carry over to every other body.

mod shared;

use advlogo::mesh::{LogoRegion, RegionSpec};
use advlogo::render::{render, CameraPose};
use advlogo::synth::{chest, chest_and_thighs};
use clap::Parser;
use shared::{backgrounds, people, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let bodies = people(203, 3);
    let bg = &backgrounds(205, 1, desk.opts.size)[0];
    for (name, boxes) in [("chest", chest()), ("chest_and_thighs", chest_and_thighs())] {
        let region = LogoRegion::select(&bodies[0], &RegionSpec::Boxes(boxes))?;
        println!(
            "{name}: {} of {} faces, {} interior edges",
            region.len(),
            region.mesh_face_count(),
            region.interior_edges().len()
        );
        region.write_faces(desk.path(&format!("{name}.faces")))?;
        for (i, body) in bodies.iter().enumerate() {
            let moved = region.transfer(body)?;
            let mut atlas = body.base_atlas();
            for &f in moved.face_ids() {
                atlas.set(f as usize, [1.0, 0.1, 0.6]);
            }
            let img = render(body, &CameraPose::new(2.2, 6.0, 20.0), &desk.scene, &atlas, bg)?.rgb;
            img.save_png(desk.path(&format!("{name}_{i}.png")))?;
        }
    }
    Ok(())
}
