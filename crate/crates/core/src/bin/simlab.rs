//! Experiment harness CLI: replay corpora against synthetic profiles,
//! probe knowledge tiers across trust values, and generate seeded
//! profiles or the bundled corpus. Exit code 0 on success, 2 on
//! validation errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trustrail::config::Config;
use trustrail::simlab::{
    gen, gen_profiles, load_corpus, load_profiles, replay, tier_probe, write_profiles,
    write_report, ReplayOptions, SimlabError,
};
use trustrail::trust::OmitSet;

#[derive(Parser)]
#[command(name = "simlab", about = "Guardrail replay and probing harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay profile scripts through the guardrail engine and write
    /// metrics.csv / trace.jsonl / summary.txt.
    Replay {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated authority-trust factors to neutralize
        /// (AR, A, S, C, NR).
        #[arg(long)]
        omit: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep a prompt across configured trust values and show which
    /// knowledge entries unlock at each value.
    TierProbe {
        /// Profile id from the configured profiles file.
        #[arg(long)]
        profile: String,
        /// Prompt id from the configured corpus.
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate seeded synthetic user profiles.
    GenProfiles {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the bundled corpus and canonical profiles.
    GenCorpus {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output directory for dataset.csv, labels.csv, and
        /// canonical_profiles.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Replay { dataset, labels, profiles, config, omit, out } => {
            let config = Config::load(&config).map_err(|e| e.to_string())?;
            let corpus = load_corpus(&dataset, &labels).map_err(|e| e.to_string())?;
            let (in_domain, out_domain, benign) = corpus.counts();
            println!(
                "loaded {} prompts ({in_domain} in-domain harmful, {out_domain} out-of-domain \
                 harmful, {benign} benign; {} unlabeled rows dropped)",
                corpus.len(),
                corpus.unlabeled
            );
            let profiles = load_profiles(&profiles).map_err(|e| e.to_string())?;
            let omit = match omit {
                Some(keys) => OmitSet::parse_keys(&keys)?,
                None => OmitSet::default(),
            };
            let options = ReplayOptions { omit, auto_revalidate: config.simlab.auto_revalidate };
            let report = replay(&corpus, &profiles, &config, options).map_err(|e| e.to_string())?;
            write_report(&report, &out).map_err(|e| e.to_string())?;
            print!("{}", trustrail::simlab::report::render_summary(&report));
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::TierProbe { profile, prompt, config } => {
            let config = Config::load(&config).map_err(|e| e.to_string())?;
            let dataset = config
                .simlab
                .dataset
                .clone()
                .ok_or("config has no [simlab] dataset path for tier-probe")?;
            let labels = config
                .simlab
                .labels
                .clone()
                .ok_or("config has no [simlab] labels path for tier-probe")?;
            let profiles_path = config
                .simlab
                .profiles
                .clone()
                .ok_or("config has no [simlab] profiles path for tier-probe")?;
            let corpus = load_corpus(&dataset, &labels).map_err(|e| e.to_string())?;
            let profiles = load_profiles(&profiles_path).map_err(|e| e.to_string())?;
            let profile = profiles
                .iter()
                .find(|p| p.user_id == profile)
                .ok_or_else(|| SimlabError::UnknownProfile { id: profile.clone() }.to_string())?;
            let record = corpus
                .get(&prompt)
                .ok_or_else(|| format!("unknown prompt id `{prompt}`"))?;
            let rows = tier_probe(profile, record, &config).map_err(|e| e.to_string())?;
            println!("prompt {}: {}", record.id, record.text);
            println!("{:>8}  {:>4}  {:>9}  entries (tier/min_trust)", "trust", "tier", "unlocked");
            for row in rows {
                let entries: Vec<String> = row
                    .entries
                    .iter()
                    .map(|e| {
                        format!(
                            "{}{}/{}",
                            if e.included { "+" } else { "-" },
                            e.tier,
                            e.min_trust.map_or("none".to_string(), |m| format!("{m}")),
                        )
                    })
                    .collect();
                println!(
                    "{:>8.2}  {:>4}  {:>9}  {}",
                    row.trust,
                    row.tier,
                    row.included_count(),
                    entries.join(" ")
                );
            }
            Ok(())
        }
        Command::GenProfiles { count, seed, out } => {
            let profiles = gen_profiles(count, seed);
            write_profiles(&profiles, &out).map_err(|e| e.to_string())?;
            println!("wrote {count} profiles to {}", out.display());
            Ok(())
        }
        Command::GenCorpus { seed, out } => {
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            let generated = gen::generate(seed);
            std::fs::write(out.join("dataset.csv"), &generated.dataset_csv)
                .map_err(|e| e.to_string())?;
            std::fs::write(out.join("labels.csv"), &generated.labels_csv)
                .map_err(|e| e.to_string())?;
            std::fs::write(out.join("canonical_profiles.json"), &generated.profiles_json)
                .map_err(|e| e.to_string())?;
            println!("wrote corpus (seed {seed}) to {}", out.display());
            Ok(())
        }
    }
}
