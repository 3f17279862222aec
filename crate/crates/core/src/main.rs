fn main() {
    std::process::exit(ssaudit::report::cli_main(std::env::args_os()));
}
