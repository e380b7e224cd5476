//! Trains against the whitebox detector and measures the same logo against
//! the blackbox one.

mod shared;

use advlogo::eval::{transfer_eval, Patch, SweepSpec};
use clap::Parser;
use shared::{print_sweep, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let (a, b) = (desk.whitebox(), desk.blackbox());
    let run = desk.attack(&a, &desk.plan(), &desk.weights());
    let spec = SweepSpec::narrow();
    let t = transfer_eval(&desk.meshes, &desk.test_bgs, Patch::logo(&run.atlas, &desk.region), &a, &b, &desk.scene, &spec)?;
    print_sweep("none vs B", &desk.sweep(None, &b, &spec));
    print_sweep("logo vs B", &t.target);
    print_sweep("logo vs A", &t.source);
    Ok(())
}
