fn main() {
    std::process::exit(daivl::app::main_with_args(std::env::args_os()));
}
