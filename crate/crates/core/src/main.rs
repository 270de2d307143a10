fn main() {
    std::process::exit(cctld_amass::cli::run(std::env::args_os()));
}
