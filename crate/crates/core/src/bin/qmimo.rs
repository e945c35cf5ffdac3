fn main() -> std::process::ExitCode {
    qmimo::cli::main()
}
