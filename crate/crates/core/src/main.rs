fn main() {
    std::process::exit(homeostasis::harness::main_with_args(std::env::args_os()));
}
