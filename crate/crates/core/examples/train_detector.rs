//! Trains the whitebox and blackbox detectors on rendered people and
//! reports how often each misses an unperturbed person.

mod shared;

use advlogo::eval::SweepSpec;
use clap::Parser;
use shared::{print_sweep, Desk, Opts};

fn main() {
    let desk = Desk::new(Opts::parse());
    for (name, det) in [("whitebox", desk.whitebox()), ("blackbox", desk.blackbox())] {
        println!("{name}: {} parameters, {}x{} grid", det.parameter_count(), det.grid_size(), det.grid_size());
        print_sweep(name, &desk.sweep(None, &det, &SweepSpec::wide()));
    }
}
