//! Fixed against randomized camera distance during training, evaluated from
//! 1.4 to 3.0.

mod shared;

use advlogo::attack::{DistanceMode, TrainPlan};
use advlogo::eval::{emit_report, ReportEntry, SweepSpec};
use clap::Parser;
use shared::{print_sweep, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let det = desk.whitebox();
    let mut entries = Vec::new();
    for (label, distance) in [("fixed", DistanceMode::Fixed(2.2)), ("random", DistanceMode::Uniform { min: 1.4, max: 3.0 })] {
        let run = desk.attack(&det, &TrainPlan { distance, ..desk.plan() }, &desk.weights());
        let r = desk.sweep(Some(&run.atlas), &det, &SweepSpec::distance());
        print_sweep(label, &r);
        entries.push(ReportEntry { label: label.into(), result: r });
    }
    emit_report(desk.path("distance"), &entries)?;
    Ok(())
}
