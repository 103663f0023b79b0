use std::panic;

fn main() {
    let code = match panic::catch_unwind(|| mapf_select_cli::main_with_args(std::env::args_os())) {
        Ok(code) => code,
        // the panic message has already been printed
        Err(_) => 3,
    };
    std::process::exit(code);
}
