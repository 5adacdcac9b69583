//! Writes a seeded synthetic QA corpus as train/dev/test JSONL.
//!
//! cargo run -p qaret-core --example synthetic_corpus -- <out-dir> [pairs] [gap-fraction] [seed]

use std::path::PathBuf;
use std::process::ExitCode;

use qaret::corpus::save_jsonl;
use qaret::synthetic::{generate, SyntheticConfig};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(out) = args.first().map(PathBuf::from) else {
        eprintln!("usage: synthetic_corpus <out-dir> [pairs] [gap-fraction] [seed]");
        return ExitCode::from(1);
    };
    let parse = |i: usize, default: &str| {
        args.get(i)
            .map(String::as_str)
            .unwrap_or(default)
            .to_owned()
    };
    let (Ok(pairs), Ok(gap_fraction), Ok(seed)) = (
        parse(1, "200").parse::<usize>(),
        parse(2, "0.3").parse::<f64>(),
        parse(3, "7").parse::<u64>(),
    ) else {
        eprintln!("pairs, gap-fraction and seed must be numbers");
        return ExitCode::from(1);
    };
    if pairs < 10 {
        eprintln!("need at least 10 pairs");
        return ExitCode::from(1);
    }
    let data = generate(&SyntheticConfig {
        pairs,
        seed,
        gap_fraction,
        decoys: true,
        ..SyntheticConfig::default()
    });
    // 80 / 10 / 10
    let a = pairs * 8 / 10;
    let b = pairs * 9 / 10;
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("cannot create {}: {e}", out.display());
        return ExitCode::from(2);
    }
    for (name, part) in [
        ("train", &data[..a]),
        ("dev", &data[a..b]),
        ("test", &data[b..]),
    ] {
        let path = out.join(format!("{name}.jsonl"));
        if let Err(e) = save_jsonl(&path, part) {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
        println!("wrote {} ({} pairs)", path.display(), part.len());
    }
    ExitCode::SUCCESS
}
