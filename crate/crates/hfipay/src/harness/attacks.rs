//! Linkage attack demonstrations: post-claim clustering by the disclosed
//! identity commitment, cross-sender collusion on the binding-key
//! commitment, and full de-anonymization from a relay-directory compromise.
//!
//! These are measurements of designed-in leakage, not bugs: each report
//! states what an adversary in the given position learns.

use crate::codec::{self, Digest, DomainTag};
use crate::identity::{self, IdentityRoot};
use crate::ledger::{Address, ChainLedger, ViewFilter};
use crate::parties::{IntentTuple, RecipientSession};
use crate::proofsys::{BindingIssuer, MockBackend};
use crate::relay::{BindingMode, QuoteRequest, Relay, RelayConfig};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::collections::HashMap;

const DEP: &[u8] = b"dep-1";

fn fresh_root(rng: &mut ChaCha20Rng) -> IdentityRoot {
    let mut rev = [0u8; 32];
    let mut salt = [0u8; 32];
    rng.fill_bytes(&mut rev);
    rng.fill_bytes(&mut salt);
    IdentityRoot::from_entropy(rev, salt)
}

/// Post-claim linkage measurement.
#[derive(Clone, Debug, Serialize)]
pub struct PostClaimReport {
    pub recipients: usize,
    pub claims_each: usize,
    /// Clusters formed by grouping claim events on the disclosed id_com.
    pub post_claim_clusters: usize,
    /// Fraction of claims placed in the correct cluster (1.0 = perfect).
    pub post_claim_purity: f64,
    /// Balanced same/different pair classification accuracy from the
    /// pre-claim view only (~0.5 = chance).
    pub pre_claim_pair_accuracy: f64,
}

/// Build `n` recipients with `k` claimed intents each, then measure what an
/// observer links: post-claim, the disclosed identity commitment clusters
/// every claim perfectly; pre-claim, binding features carry no signal.
pub fn attack_post_claim_linkage(n: usize, k: usize, seed: u64) -> PostClaimReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let backend = MockBackend::from_seed(42);
    let mut ledger = ChainLedger::new("evm-1", DEP, backend.clone());
    let from = Address([0x11; 20]);
    ledger.credit(from, "ETH", (n * k) as u64 * 1000);

    // recipient index -> intents, for ground truth
    let mut truth: Vec<Vec<[u8; 32]>> = Vec::with_capacity(n);
    let mut sessions: Vec<RecipientSession> = Vec::with_capacity(n);
    for _ in 0..n {
        let root = fresh_root(&mut rng);
        let binding = identity::derive_epoch_binding(&root, 4);
        let mut intents = Vec::with_capacity(k);
        for _ in 0..k {
            let mut intent_id = [0u8; 32];
            rng.fill_bytes(&mut intent_id);
            let mut payload = Vec::with_capacity(64);
            payload.extend_from_slice(binding.handle().as_bytes());
            payload.extend_from_slice(&intent_id);
            let rho = codec::hash_domain(DomainTag::Bind, &payload);
            ledger
                .register_intent(intent_id, rho, "ETH", 1000, 4, 1_000_000, None, None)
                .unwrap();
            ledger.fund(&intent_id, &from, "ETH", 1000).unwrap();
            intents.push(intent_id);
        }
        truth.push(intents);
        sessions.push(RecipientSession::new(root, backend.clone()));
    }

    // ---- pre-claim signal: balanced pair classification on (alpha, rho)
    let pre_view = ledger.observer_view(&ViewFilter {
        from: None,
        to: None,
        status: None,
        pre_claim: true,
    });
    let rho_of: HashMap<String, String> = pre_view
        .iter()
        .map(|r| (r.intent_id.clone(), r.rho.clone()))
        .collect();
    let mut correct = 0usize;
    let mut total = 0usize;
    for r in 0..n {
        for i in 0..k {
            for j in (i + 1)..k {
                // a same-recipient pair and a matched different-recipient pair
                let same = (truth[r][i], truth[r][j]);
                let other_r = (r + 1 + rng.gen_range(0..n - 1)) % n;
                let diff = (truth[r][i], truth[other_r][rng.gen_range(0..k)]);
                for (pair, is_same) in [(same, true), (diff, false)] {
                    let a = &rho_of[&hex::encode(pair.0)];
                    let b = &rho_of[&hex::encode(pair.1)];
                    // best cheap feature: any shared byte between bindings
                    let shared = a
                        .as_bytes()
                        .chunks(2)
                        .zip(b.as_bytes().chunks(2))
                        .filter(|(x, y)| x == y)
                        .count();
                    let guess_same = shared >= 1;
                    if guess_same == is_same {
                        correct += 1;
                    }
                    total += 1;
                }
            }
        }
    }
    let pre_claim_pair_accuracy = correct as f64 / total as f64;

    // ---- claim everything, fresh destination per claim
    for (r, session) in sessions.iter_mut().enumerate() {
        for intent_id in &truth[r] {
            let tuple = IntentTuple::from_ledger(&ledger, intent_id).unwrap();
            let mut dest = [0u8; 20];
            rng.fill_bytes(&mut dest);
            let (publics, proof) = session.recipient_build_claim(&tuple, &dest, None).unwrap();
            ledger.claim(intent_id, &publics, &proof).unwrap();
        }
    }

    // ---- post-claim clustering by disclosed id_com
    let post_view = ledger.observer_view(&ViewFilter {
        from: None,
        to: None,
        status: None,
        pre_claim: false,
    });
    let mut clusters: HashMap<String, Vec<String>> = HashMap::new();
    for record in &post_view {
        for event in &record.events {
            if let Some(id_com) = &event.id_com {
                clusters
                    .entry(id_com.clone())
                    .or_default()
                    .push(record.intent_id.clone());
            }
        }
    }
    let mut pure = 0usize;
    for members in clusters.values() {
        // purity: all members of a cluster share one true recipient
        let owner = truth
            .iter()
            .position(|intents| intents.iter().any(|i| hex::encode(i) == members[0]));
        if let Some(owner) = owner {
            if members
                .iter()
                .all(|m| truth[owner].iter().any(|i| &hex::encode(i) == m))
            {
                pure += members.len();
            }
        }
    }
    PostClaimReport {
        recipients: n,
        claims_each: k,
        post_claim_clusters: clusters.len(),
        post_claim_purity: pure as f64 / (n * k) as f64,
        pre_claim_pair_accuracy,
    }
}

/// Cross-sender collusion measurement for one epoch length.
#[derive(Clone, Debug, Serialize)]
pub struct CrossSenderEpochReport {
    pub epoch_len_secs: u64,
    /// Two senders quoting in the same epoch see the same key commitment.
    pub same_epoch_commitments_equal: bool,
    /// Quotes one epoch apart carry different key commitments.
    pub different_epoch_commitments_differ: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossSenderReport {
    pub per_epoch_len: Vec<CrossSenderEpochReport>,
    /// The binding-key commitment never appears in the observer feed.
    pub commitment_absent_from_observer_feed: bool,
}

/// Demonstrate cross-sender linkability in verified-quote mode: the shared
/// binding-key commitment links two senders' quotes within an epoch, shorter
/// epochs shrink the window, and the commitment stays off-chain throughout.
pub fn attack_cross_sender(epoch_lens: &[u64], seed: u64) -> CrossSenderReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let issuer = BindingIssuer::from_seed(7);
    let backend = MockBackend::from_seed(42);
    let mut per_epoch_len = Vec::new();
    let mut commitment_absent = true;

    for &epoch_len in epoch_lens {
        let root = fresh_root(&mut rng);
        let t0 = 0u64;
        let e0 = identity::epoch_of(t0, epoch_len);
        let e1 = identity::epoch_of(t0 + epoch_len, epoch_len);
        let b0 = identity::derive_epoch_binding(&root, e0);
        let b1 = identity::derive_epoch_binding(&root, e1);

        let mut relay = Relay::new(
            RelayConfig::default(),
            backend.clone(),
            issuer.clone(),
            ChaCha20Rng::seed_from_u64(seed ^ epoch_len),
        );
        relay.dep_tag_for_quotes = DEP.to_vec();
        let evidence = issuer.run_otp("b@example.com", 0);
        let att = issuer
            .issue_attestation("b@example.com", &b0.key_commitment, e0, 1_000_000, Some(&evidence), 0)
            .unwrap();
        relay
            .enroll(
                "b@example.com",
                identity::derive_commitment(&root, identity::DOMAIN_ID).id_com,
                &b0,
                BindingMode::VerifiedQuote,
                Some(att),
            )
            .unwrap();
        let token_a = relay.register_sender("sender-a");
        let token_b = relay.register_sender("sender-b");
        let request = QuoteRequest {
            identifier: "b@example.com".into(),
            asset: "ETH".into(),
            amount: 1000,
            chain: "evm-1".into(),
            refund_dest: None,
            expiry: 10_000,
        };
        let qa = relay.create_quote(&token_a, &request).unwrap();
        let qb = relay.create_quote(&token_b, &request).unwrap();
        let same_epoch_commitments_equal = qa.key_commitment.is_some()
            && qa.key_commitment == qb.key_commitment
            && qa.key_commitment == Some(b0.key_commitment);

        // rotate to the next epoch and quote again
        let evidence = issuer.run_otp("b@example.com", 0);
        let att = issuer
            .issue_attestation("b@example.com", &b1.key_commitment, e1, 1_000_000, Some(&evidence), 0)
            .unwrap();
        relay.rotate_epoch("b@example.com", &b1, Some(att)).unwrap();
        let qc = relay.create_quote(&token_a, &request).unwrap();
        let different_epoch_commitments_differ = qc.key_commitment != qa.key_commitment;

        // the commitment never reaches the ledger
        let mut ledger = ChainLedger::new("evm-1", DEP, backend.clone());
        relay.register_and_confirm(&qa, None, &mut ledger).unwrap();
        relay.register_and_confirm(&qb, None, &mut ledger).unwrap();
        let feed = ledger.export_observer_jsonl();
        for k in [qa.key_commitment, qb.key_commitment, qc.key_commitment]
            .into_iter()
            .flatten()
        {
            if feed.contains(&k.to_hex()) {
                commitment_absent = false;
            }
        }

        per_epoch_len.push(CrossSenderEpochReport {
            epoch_len_secs: epoch_len,
            same_epoch_commitments_equal,
            different_epoch_commitments_differ,
        });
    }
    CrossSenderReport {
        per_epoch_len,
        commitment_absent_from_observer_feed: commitment_absent,
    }
}

/// Relay-compromise linkage measurement.
#[derive(Clone, Debug, Serialize)]
pub struct RelayCompromiseReport {
    pub recipients: usize,
    pub intents: usize,
    /// Fraction of on-chain intents the dump holder links to the correct
    /// identifier by recomputing the binding (1.0 expected).
    pub linkage_accuracy: f64,
}

/// An adversary with the relay's directory dump recomputes every public
/// binding against the leaked handles and maps intents back to identifiers.
pub fn attack_relay_compromise(recipients: usize, intents_each: usize, seed: u64) -> RelayCompromiseReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let backend = MockBackend::from_seed(42);
    let issuer = BindingIssuer::from_seed(7);
    let mut relay = Relay::new(
        RelayConfig {
            rate_limit_per_window: u32::MAX,
            ..RelayConfig::default()
        },
        backend.clone(),
        issuer,
        ChaCha20Rng::seed_from_u64(seed ^ 0xD0),
    );
    relay.dep_tag_for_quotes = DEP.to_vec();
    let mut ledger = ChainLedger::new("evm-1", DEP, backend);

    let mut truth: HashMap<[u8; 32], String> = HashMap::new();
    let token = relay.register_sender("sender");
    let from = Address([0x11; 20]);
    ledger.credit(from, "ETH", (recipients * intents_each) as u64 * 1000);
    for r in 0..recipients {
        let root = fresh_root(&mut rng);
        let identifier = format!("r{r}@example.com");
        relay
            .enroll(
                &identifier,
                identity::derive_commitment(&root, identity::DOMAIN_ID).id_com,
                &identity::derive_epoch_binding(&root, 4),
                BindingMode::Baseline,
                None,
            )
            .unwrap();
        for _ in 0..intents_each {
            let quote = relay
                .create_quote(
                    &token,
                    &QuoteRequest {
                        identifier: identifier.clone(),
                        asset: "ETH".into(),
                        amount: 1000,
                        chain: "evm-1".into(),
                        refund_dest: None,
                        expiry: 10_000,
                    },
                )
                .unwrap();
            relay.register_and_confirm(&quote, None, &mut ledger).unwrap();
            ledger.fund(&quote.intent_id, &from, "ETH", 1000).unwrap();
            truth.insert(quote.intent_id, identifier.clone());
        }
    }

    // the attack: dump the directory, recompute rho for every public intent
    let dump = relay.dump_compromise();
    let handles: Vec<(String, Digest)> = dump
        .directory
        .iter()
        .flat_map(|entry| {
            entry.epochs.iter().map(|e| {
                (
                    entry.normalized_id.clone(),
                    Digest::from_hex(&e.handle_hex).unwrap(),
                )
            })
        })
        .collect();
    let view = ledger.observer_view(&ViewFilter {
        from: None,
        to: None,
        status: None,
        pre_claim: true,
    });
    let mut linked = 0usize;
    let mut total = 0usize;
    for record in &view {
        total += 1;
        let intent_id: [u8; 32] = hex::decode(&record.intent_id).unwrap().try_into().unwrap();
        for (identifier, handle) in &handles {
            let mut payload = Vec::with_capacity(64);
            payload.extend_from_slice(handle.as_bytes());
            payload.extend_from_slice(&intent_id);
            if codec::hash_domain(DomainTag::Bind, &payload).to_hex() == record.rho {
                if truth.get(&intent_id) == Some(identifier) {
                    linked += 1;
                }
                break;
            }
        }
    }
    RelayCompromiseReport {
        recipients,
        intents: total,
        linkage_accuracy: linked as f64 / total as f64,
    }
}
