fn main() -> std::process::ExitCode {
    dynent_core::cli::main()
}
