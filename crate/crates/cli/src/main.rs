fn main() {
    std::process::exit(procstar_cli::main_with_args(std::env::args_os()));
}
