//! Optimizes the logo against the whitebox detector from the front only,
//! then saves the checkpoint, an atlas strip and a success-rate chart.

mod shared;

use advlogo::attack::{save_checkpoint, snapshot_strip, TrainPlan};
use advlogo::eval::{emit_report, ReportEntry, SweepSpec};
use advlogo::image::save_rgb8;
use clap::Parser;
use shared::{print_sweep, Desk, Opts};

fn main() -> advlogo::Result<()> {
    let desk = Desk::new(Opts::parse());
    let det = desk.whitebox();
    let plan = TrainPlan {
        snapshot_period: 5,
        ..desk.plan()
    };
    let run = desk.attack(&det, &plan, &desk.weights());
    save_checkpoint(desk.path("single.ckpt"), &run.atlas, &desk.region, plan.epochs)?;
    let frames: Vec<_> = run.snapshots.iter().map(|(_, a)| a).collect();
    let (w, h, rgb) = snapshot_strip(&frames, &desk.region, 4);
    save_rgb8(desk.path("single_strip.png"), w, h, &rgb)?;

    let none = desk.sweep(None, &det, &SweepSpec::wide());
    let logo = desk.sweep(Some(&run.atlas), &det, &SweepSpec::wide());
    print_sweep("none", &none);
    print_sweep("single", &logo);
    let (csv, svg) = emit_report(
        &desk.opts.out,
        &[
            ReportEntry { label: "none".into(), result: none },
            ReportEntry { label: "single".into(), result: logo },
        ],
    )?;
    println!("{}\n{}", csv.display(), svg.display());
    Ok(())
}
