//! Drives a campaign from a TOML config, the same way the command-line tool
//! does, and prints the CSV it would write.
//!
//! cargo run --release --example run_config [path/to/config.toml]

use narrow_tube::harness::{prepare, run_kind, validate};

const DEFAULT: &str = r#"
kind = "exit-stats"
dim = 2
eps = [0.08, 0.04]
seed = 11

[graph]
vertices = [[0.0, 0.0], [1.5, 0.0], [-1.5, 0.0]]
edges = [{ ends = [1, 2], lambda = 1.0 }, { ends = [1, 3], lambda = 1.0 }]

[scaling]
beta = 0.4

[exit_stats]
vertex = 1
n = 300
start = "random-collar"
"#;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable config"),
        None => DEFAULT.to_string(),
    };
    match validate(&text) {
        Ok(s) => print!("{s}"),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
    let p = prepare(&text).unwrap();
    let out = run_kind(&p, p.config.seed, 0).unwrap();
    print!("{}", out.summary);
    print!("{}", String::from_utf8(out.csv.to_csv(&p.hash[..12])).unwrap());
}
