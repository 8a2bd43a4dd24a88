fn main() -> std::process::ExitCode {
    triavatar::cli::run(std::env::args_os())
}
