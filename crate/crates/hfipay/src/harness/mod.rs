//! Experiment harness: the scenario runner, the G1/G2 indistinguishability
//! games with pluggable adversaries, the claim-composition check, and the
//! linkage attack demonstrations.
//!
//! Challengers reuse the production identity, codec, relay, and ledger code
//! paths; the harness adds only sampling, bookkeeping, and statistics.

pub mod attacks;
pub mod games;
pub mod scenario;

pub use attacks::{attack_cross_sender, attack_post_claim_linkage, attack_relay_compromise};
pub use games::{check_lemma1, game_g1, game_g2, G1Adversary, G2Adversary, G2MetadataMode};
pub use scenario::{run_scenario, run_scenario_str, Report, Scenario};

use serde::{Deserialize, Serialize};

/// The explicitly public metadata tuple `m = (c, a, v, e, t, status)` a game
/// conditions on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub chain: String,
    pub asset: String,
    pub amount: u64,
    pub epoch: u64,
    pub time: u64,
    pub status: String,
}

impl Default for Metadata {
    fn default() -> Self {
        Metadata {
            chain: "evm-1".into(),
            asset: "ETH".into(),
            amount: 1000,
            epoch: 4,
            time: 0,
            status: "FUNDED".into(),
        }
    }
}

/// Outcome of a statistical game run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameResult {
    pub game: String,
    pub adversary: String,
    pub trials: u64,
    pub successes: u64,
    /// `|successes/trials - 1/2|`
    pub advantage: f64,
    /// 95% CI half-width on the success rate, normal approximation.
    pub ci_half_width: f64,
}

impl GameResult {
    pub fn from_counts(game: &str, adversary: &str, trials: u64, successes: u64) -> Self {
        let p = successes as f64 / trials as f64;
        GameResult {
            game: game.to_string(),
            adversary: adversary.to_string(),
            trials,
            successes,
            advantage: (p - 0.5).abs(),
            ci_half_width: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}
