fn main() {
    std::process::exit(brownscope::cli::main());
}
