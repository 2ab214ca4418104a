fn main() {
    std::process::exit(postsel::cli::main(std::env::args_os()));
}
