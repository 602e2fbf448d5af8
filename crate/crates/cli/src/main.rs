use clap::Parser;

fn main() {
    let cli = apt_align::Cli::parse();
    if let Err(e) = apt_align::run(cli) {
        eprintln!("apt-align: {e}");
        std::process::exit(e.exit_code());
    }
}
