fn main() {
    std::process::exit(fns_lab::run_command(std::env::args_os()));
}
