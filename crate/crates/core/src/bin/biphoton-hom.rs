use std::process::ExitCode;

use biphoton_hom::cli::{parse_args, run};

fn main() -> ExitCode {
    let code = match parse_args(std::env::args_os()) {
        Ok(config) => run(&config),
        Err(e) => {
            e.print();
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
