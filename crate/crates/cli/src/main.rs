fn main() {
    std::process::exit(rtpd_cli::run(std::env::args_os()));
}
