//! Batch driver for the strip/duct Schrödinger solver.

fn main() {
    std::process::exit(schrotbc::harness::cli_main(std::env::args()));
}
