use std::process::exit;

fn main() {
    exit(focused_reading::cli::dispatch(std::env::args_os()));
}
