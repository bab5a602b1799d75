fn main() {
    std::process::exit(pareto_descent::cli::run_cli(std::env::args_os()));
}
