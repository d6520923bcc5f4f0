fn main() -> std::process::ExitCode {
    capwit::cli::main_entry()
}
