fn main() {
    std::process::exit(causal_pipeline::cli::main_with(std::env::args_os()));
}
