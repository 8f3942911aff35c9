fn main() -> std::process::ExitCode {
    zn_thomae::cli::main()
}
