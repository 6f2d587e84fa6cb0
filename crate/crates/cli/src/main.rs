fn main() {
    std::process::exit(spatial_sim_cli::run(std::env::args_os()));
}
