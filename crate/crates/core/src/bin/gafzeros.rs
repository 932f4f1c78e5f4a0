fn main() {
    std::process::exit(gafzeros::harness::cli_main(std::env::args_os()));
}
