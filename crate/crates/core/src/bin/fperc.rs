use frozen_percolation::harness::cli::cli;

fn main() {
    std::process::exit(cli(std::env::args()));
}
