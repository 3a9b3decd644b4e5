use clap::Parser;

fn main() {
    let args = vfcsim::cli::Args::parse();
    if let Err(e) = vfcsim::cli::main_with(args) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
