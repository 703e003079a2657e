fn main() {
    std::process::exit(epr_chain::cli::run_command(std::env::args_os()));
}
