//! Single-angle against multi-angle training, measured from -50 to 50
//! degrees.

mod shared;

use advlogo::attack::TrainPlan;
use advlogo::eval::{emit_report, ReportEntry, SweepSpec};
use clap::Parser;
use shared::{print_sweep, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let det = desk.whitebox();
    let single = desk.attack(&det, &desk.plan(), &desk.weights());
    let multi = desk.attack(
        &det,
        &TrainPlan {
            azimuths: TrainPlan::multi_angle_azimuths(),
            ..desk.plan()
        },
        &desk.weights(),
    );
    let mut entries = Vec::new();
    for (label, atlas) in [("none", None), ("single", Some(&single.atlas)), ("multi", Some(&multi.atlas))] {
        let r = desk.sweep(atlas, &det, &SweepSpec::wide());
        print_sweep(label, &r);
        entries.push(ReportEntry { label: label.into(), result: r });
    }
    let (_, svg) = emit_report(desk.path("angles"), &entries)?;
    println!("{}", svg.display());
    Ok(())
}
