use std::io;

fn main() {
    let code = rotqudit::cli::run_with_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
