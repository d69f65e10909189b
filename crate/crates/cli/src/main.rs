fn main() {
    std::process::exit(autonomy_cli::main_with(std::env::args_os()));
}
