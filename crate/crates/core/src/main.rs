use std::io;

fn main() {
    errctl::par::init_threads_from_env();
    let code = errctl::cli::main_with_args(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
