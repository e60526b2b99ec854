fn main() -> std::process::ExitCode {
    stegga::cli::main()
}
