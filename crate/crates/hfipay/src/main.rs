//! Command-line entry point: scenario runs, privacy games, conformance
//! checking, attack demonstrations, and the combined report.

use clap::{Parser, Subcommand};
use hfipay::codec::{check_vector, ConformanceVector};
use hfipay::harness::{
    attack_cross_sender, attack_post_claim_linkage, attack_relay_compromise, check_lemma1,
    game_g1, game_g2, G1Adversary, G2Adversary, G2MetadataMode, Metadata,
};
use hfipay::relay::BindingMode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hfipay", about = "Identifier-routed payment protocol simulator")]
struct Cli {
    /// Master seed for all randomized components.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Emit JSON instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    /// Binding-epoch length in seconds.
    #[arg(long, global = true, default_value_t = 7 * 86_400)]
    epoch_len: u64,
    /// Deployment binding mode for scenario overrides.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<BindingMode>,
    #[command(subcommand)]
    command: Command,
}

fn parse_mode(s: &str) -> Result<BindingMode, String> {
    match s {
        "baseline" => Ok(BindingMode::Baseline),
        "verified" => Ok(BindingMode::VerifiedQuote),
        other => Err(format!("unknown mode {other:?}; use baseline or verified")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and print its report.
    Run { scenario: PathBuf },
    /// Run a privacy game with a built-in adversary.
    Game {
        /// g1 (enumeration) or g2 (pre-claim unlinkability).
        game: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value = "random")]
        adversary: String,
        /// For g2: draw amounts from per-recipient preference buckets
        /// instead of matched metadata.
        #[arg(long)]
        unmatched_metadata: bool,
    },
    /// Check pinned encoding vectors.
    Conformance {
        #[arg(long)]
        vectors: PathBuf,
    },
    /// Run an attack demonstration: post-claim-linkage, cross-sender, or
    /// relay-compromise.
    Attack { name: String },
    /// Run the full experiment battery and write a JSON report.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { scenario } => {
            let text = std::fs::read_to_string(&scenario).map_err(|e| e.to_string())?;
            let mut parsed: hfipay::harness::Scenario =
                serde_json::from_str(&text).map_err(|e| e.to_string())?;
            if let Some(mode) = cli.mode {
                parsed.mode = mode;
            }
            let report = hfipay::harness::scenario::run(&parsed).map_err(|e| e.to_string())?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                for step in &report.steps {
                    println!("[{}] {} -> {}", tick(step.pass), step.step, step.outcome);
                }
                for a in &report.assertions {
                    println!("[{}] assert {}", tick(a.pass), a.assertion);
                }
                println!("scenario {}: {}", report.scenario, verdict(report.pass));
            }
            Ok(exit_for(report.pass))
        }
        Command::Game {
            game,
            trials,
            adversary,
            unmatched_metadata,
        } => {
            let metadata = Metadata {
                epoch: hfipay::identity::epoch_of(0, cli.epoch_len),
                ..Metadata::default()
            };
            let result = match game.as_str() {
                "g1" => {
                    let adversary: G1Adversary = adversary.parse()?;
                    game_g1(adversary, trials, &metadata, cli.seed)
                }
                "g2" => {
                    let adversary: G2Adversary = adversary.parse()?;
                    let mode = if unmatched_metadata {
                        G2MetadataMode::RecipientBuckets {
                            buckets: 8,
                            base: metadata.clone(),
                        }
                    } else {
                        G2MetadataMode::Matched(metadata.clone(), metadata)
                    };
                    game_g2(adversary, trials, &mode, cli.seed)
                }
                other => return Err(format!("unknown game {other:?}; use g1 or g2")),
            };
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&result).unwrap());
            } else {
                println!(
                    "{} vs {}: {}/{} successes, advantage {:.4} (95% CI ±{:.4})",
                    result.game,
                    result.adversary,
                    result.successes,
                    result.trials,
                    result.advantage,
                    result.ci_half_width
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Conformance { vectors } => {
            let text = std::fs::read_to_string(&vectors).map_err(|e| e.to_string())?;
            let mut checked = 0usize;
            let mut failures = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let vector: ConformanceVector =
                    serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
                checked += 1;
                if let Err(e) = check_vector(&vector) {
                    failures.push(format!("line {}: {e}", i + 1));
                }
            }
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({ "checked": checked, "failures": failures })
                );
            } else {
                println!("checked {checked} vectors, {} failures", failures.len());
                for f in &failures {
                    println!("  {f}");
                }
            }
            Ok(exit_for(failures.is_empty()))
        }
        Command::Attack { name } => match name.as_str() {
            "post-claim-linkage" => {
                let report = attack_post_claim_linkage(20, 5, cli.seed);
                let pass = report.post_claim_purity == 1.0;
                emit(cli.json, &report, || {
                    format!(
                        "post-claim: {} clusters (purity {:.2}); pre-claim pair accuracy {:.3}",
                        report.post_claim_clusters,
                        report.post_claim_purity,
                        report.pre_claim_pair_accuracy
                    )
                });
                Ok(exit_for(pass))
            }
            "cross-sender" => {
                let report = attack_cross_sender(&[3600, cli.epoch_len], cli.seed);
                let pass = report.commitment_absent_from_observer_feed
                    && report.per_epoch_len.iter().all(|e| {
                        e.same_epoch_commitments_equal && e.different_epoch_commitments_differ
                    });
                emit(cli.json, &report, || {
                    format!(
                        "cross-sender linkage shown for {} epoch lengths; commitment off-chain: {}",
                        report.per_epoch_len.len(),
                        report.commitment_absent_from_observer_feed
                    )
                });
                Ok(exit_for(pass))
            }
            "relay-compromise" => {
                let report = attack_relay_compromise(20, 5, cli.seed);
                let pass = report.linkage_accuracy == 1.0;
                emit(cli.json, &report, || {
                    format!(
                        "relay compromise links {}/{} intents (accuracy {:.2})",
                        (report.linkage_accuracy * report.intents as f64).round() as u64,
                        report.intents,
                        report.linkage_accuracy
                    )
                });
                Ok(exit_for(pass))
            }
            other => Err(format!(
                "unknown attack {other:?}; use post-claim-linkage, cross-sender, or relay-compromise"
            )),
        },
        Command::Report { out } => {
            let metadata = Metadata::default();
            let matched = G2MetadataMode::Matched(metadata.clone(), metadata.clone());
            let report = serde_json::json!({
                "seed": cli.seed,
                "g1": [
                    game_g1(G1Adversary::Random, 2000, &metadata, cli.seed),
                    game_g1(G1Adversary::MetadataMatching, 2000, &metadata, cli.seed),
                    game_g1(G1Adversary::LeakedHandle, 2000, &metadata, cli.seed),
                    game_g1(G1Adversary::Omniscient, 2000, &metadata, cli.seed),
                ],
                "g2": [
                    game_g2(G2Adversary::Random, 2000, &matched, cli.seed),
                    game_g2(G2Adversary::Equality, 2000, &matched, cli.seed),
                    game_g2(G2Adversary::ByteCorrelation, 2000, &matched, cli.seed),
                    game_g2(G2Adversary::LeakedHandles, 2000, &matched, cli.seed),
                ],
                "lemma1": check_lemma1(200, cli.seed),
                "post_claim_linkage": attack_post_claim_linkage(20, 5, cli.seed),
                "cross_sender": attack_cross_sender(&[3600, cli.epoch_len], cli.seed),
                "relay_compromise": attack_relay_compromise(20, 5, cli.seed),
            });
            std::fs::write(&out, serde_json::to_string_pretty(&report).unwrap())
                .map_err(|e| e.to_string())?;
            if !cli.json {
                println!("report written to {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit<R: serde::Serialize>(json: bool, report: &R, text: impl Fn() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).unwrap());
    } else {
        println!("{}", text());
    }
}

fn tick(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "FAIL"
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn exit_for(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
