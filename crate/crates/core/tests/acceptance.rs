//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use inclab::suite::{verify_all, SuiteConfig};

fn main() -> ExitCode {
    let seed = std::env::var("INCLAB_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let config = SuiteConfig {
        seed,
        ..SuiteConfig::default()
    };
    println!("acceptance suite, seed {seed}");
    let results = match verify_all(&config, |r| println!("{}", r.line())) {
        Ok(r) => r,
        Err(e) => {
            println!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
