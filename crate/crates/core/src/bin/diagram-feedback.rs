fn main() -> std::process::ExitCode {
    diagram_feedback::cli::main()
}
