use clap::Parser;

fn main() {
    let args = fracdg::cli::Args::parse();
    std::process::exit(fracdg::cli::main_with(args));
}
