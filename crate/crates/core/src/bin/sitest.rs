fn main() -> std::process::ExitCode {
    sitest::cli::main()
}
