//! Drives the batch front end in-process: synthesize a panel, fit it,
//! run a window test and build the report tables.

use clap::Parser;
use gibs::cli::{run, Cli};

fn main() {
    let out = std::env::temp_dir().join("gibs-cli-pipeline");
    let out = out.to_str().expect("utf-8 temp path");
    let conf = format!("{out}/run.conf");
    let steps: [&[&str]; 4] = [
        &["gibs", "synth", "--seed", "12", "--out", out],
        &["gibs", "fit", "--config", &conf],
        &["gibs", "test", "invariance", "--config", &conf],
        &["gibs", "report", "--config", &conf],
    ];
    for args in steps {
        let cli = Cli::parse_from(args.iter().copied());
        match run(cli) {
            Ok(()) => println!("ok: {}", args[1..].join(" ")),
            Err(f) => {
                eprintln!("{} failed ({}): {}", args[1], f.code, f.message);
                std::process::exit(f.code);
            }
        }
    }
    let results = std::path::Path::new(out).join("out");
    for f in ["selection.csv", "test_invariance.csv", "report_heatmap.csv"] {
        let text = std::fs::read_to_string(results.join(f)).unwrap_or_default();
        println!("--- {f}");
        for line in text.lines().take(4) {
            println!("{line}");
        }
    }
}
