fn main() {
    std::process::exit(reward_audit::cli::run(std::env::args_os()));
}
