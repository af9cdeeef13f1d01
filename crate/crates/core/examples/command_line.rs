// Drive the `alh` front end in process.

use alhier::cli;

pub fn run_example() -> i32 {
    let mut out = Vec::new();
    let code = cli::run(["alh", "theta", "--alpha", "1", "--kmax", "2", "--method", "cross"], &mut out, &mut std::io::stderr());
    println!("{}", String::from_utf8_lossy(&out));
    code
}

#[allow(dead_code)]
fn main() {
    std::process::exit(run_example());
}
