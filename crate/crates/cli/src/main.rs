mod commands;
mod config;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use inclab::report::{csv_table, Artifact};
use inclab::suite::{verify_all, SuiteConfig};

use config::{Cli, Command, ExperimentConfig};

const EXIT_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;

fn run(c: &ExperimentConfig) -> inclab::Result<bool> {
    if c.command == Command::VerifyAll {
        return run_verify_all(c);
    }
    let out = match c.command {
        Command::Energy => commands::energy(c),
        Command::IncidenceSweep => commands::incidence_sweep(c),
        Command::XrayCheck => commands::xray_check(c),
        Command::Smoothing => commands::smoothing(c),
        Command::Content => commands::content(c),
        Command::Furstenberg => commands::furstenberg(c),
        Command::Slicing => commands::slicing(c),
        Command::Radial => commands::radial(c),
        Command::VerifyAll => unreachable!(),
    }?;
    for a in &out.artifacts {
        a.write(&c.out, c.format)?;
    }
    let pass = out.pass();
    for l in &out.lines {
        println!("{l}");
    }
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn run_verify_all(c: &ExperimentConfig) -> inclab::Result<bool> {
    let sc = SuiteConfig {
        seed: c.seed,
        n: c.n.unwrap_or(512),
    };
    let mut written = Ok(());
    let results = verify_all(&sc, |r| {
        println!("{}", r.line());
        if written.is_ok() {
            written = r.artifact.write(&c.out, c.format).map(|_| ());
        }
    })?;
    written?;
    let pass = results.iter().all(|r| r.pass);
    let csv = csv_table(
        &["criterion", "name", "pass", "seconds", "budget_seconds"],
        results.iter().map(|r| {
            vec![
                r.id.to_string(),
                r.name.to_string(),
                r.pass.to_string(),
                format!("{:.3}", r.seconds),
                format!("{}", r.budget_seconds),
            ]
        }),
    );
    let rows: Vec<_> = results
        .iter()
        .map(|r| serde_json::json!({"criterion": r.id, "name": r.name, "pass": r.pass, "detail": r.detail}))
        .collect();
    let summary = serde_json::json!({"seed": c.seed, "criteria": rows, "pass": pass});
    Artifact::new("verify_all", csv, summary).write(&c.out, c.format)?;
    let n = results.iter().filter(|r| r.pass).count();
    println!("{n}/{} criteria passed", results.len());
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let c = match ExperimentConfig::resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if let Some(n) = c.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    match run(&c) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
