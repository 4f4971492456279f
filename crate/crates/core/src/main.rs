fn main() -> std::process::ExitCode {
    confdim::cli::main()
}
