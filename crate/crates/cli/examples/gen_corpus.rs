//! Writes a synthetic labeled corpus and simulated external scores.
//!
//! ```text
//! cargo run -p muboost-cli --example gen_corpus -- --out-dir data --rows 10000
//! ```

use std::path::PathBuf;

use clap::Parser;
use muboost_core::ensemble::probabilities_csv;
use muboost_core::synth::{
    generate_corpus, simulate_external_scores, ExternalScoreConfig, SynthConfig,
};

#[derive(Parser)]
struct Args {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    external_seed: u64,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    std::fs::create_dir_all(&args.out_dir)?;
    let data = generate_corpus(&SynthConfig {
        rows: args.rows,
        seed: args.seed,
        ..Default::default()
    })?;
    let corpus = args.out_dir.join("corpus.csv");
    data.write_csv(&corpus)?;
    let labels = data.labels().unwrap_or_default();
    let scores = simulate_external_scores(
        &labels,
        &ExternalScoreConfig {
            seed: args.external_seed,
            ..Default::default()
        },
    )?;
    let external = args.out_dir.join("external.csv");
    std::fs::write(&external, probabilities_csv(&scores, None))?;
    println!("wrote {} and {}", corpus.display(), external.display());
    Ok(())
}
