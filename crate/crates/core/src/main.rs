fn main() -> std::process::ExitCode {
    stokes_dtn::cli::main()
}
