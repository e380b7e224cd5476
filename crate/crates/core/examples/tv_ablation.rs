//! Trains with and without the smoothness term and compares atlas TV and
//! success at angles not seen during training.

mod shared;

use advlogo::attack::{loss_tv, snapshot_image, LossWeights};
use advlogo::eval::SweepSpec;
use advlogo::image::save_rgb8;
use clap::Parser;
use shared::{print_sweep, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let det = desk.whitebox();
    let with = desk.weights();
    for (label, weights) in [("tv", with), ("no_tv", LossWeights { lambda_tv: 0.0, ..with })] {
        let run = desk.attack(&det, &desk.plan(), &weights);
        let (tv, _) = loss_tv(&run.atlas, &desk.region)?;
        let r = desk.sweep(Some(&run.atlas), &det, &SweepSpec::narrow());
        let unseen = r.mean_rate_where(|c| c.azimuth.abs() == 10.0);
        println!("{label:<6} TV {tv:.3}  success at +-10: {unseen:.3}");
        print_sweep(label, &r);
        let (w, h, rgb) = snapshot_image(&run.atlas, &desk.region, 6);
        save_rgb8(desk.path(&format!("{label}_atlas.png")), w, h, &rgb)?;
    }
    Ok(())
}
