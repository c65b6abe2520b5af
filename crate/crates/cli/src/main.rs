fn main() {
    std::process::exit(gapmaps::main_with_args(std::env::args_os()));
}
