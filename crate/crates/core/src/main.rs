fn main() {
    std::process::exit(dq_handover::cli::main_with_args(std::env::args_os()));
}
