fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(bessel_inverse::cli::main_with_args(std::env::args_os()))
}
