//! Deterministic scenario runner: a JSON description of parties, relay
//! configuration, chains, ordered steps, and assertions is executed against
//! the production stack and reduced to a JSON report.
//!
//! Identical seed and scenario yield a byte-identical report.

use crate::codec;
use crate::identity::{self, IdentityRoot};
use crate::ledger::{Address, ChainLedger};
use crate::parties::{IntentTuple, PaymentRequest, RecipientSession, SenderSession};
use crate::proofsys::{BindingIssuer, MockBackend, PartyKey};
use crate::relay::{normalize, BindingMode, MaliceFlags, Quote, QuoteRequest, Relay, RelayConfig};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

const DEP: &[u8] = b"dep-1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario references unknown {kind} {name}")]
    UnknownRef { kind: &'static str, name: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSpec {
    pub id: String,
    #[serde(default)]
    pub confirmation_depth: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecipientSpec {
    pub identifier: String,
    pub epoch: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FundsSpec {
    pub chain: String,
    pub asset: String,
    pub amount: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SenderSpec {
    pub name: String,
    #[serde(default)]
    pub funds: Vec<FundsSpec>,
}

/// Expected outcome of a fallible step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Ok,
    Reject,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Quote {
        label: String,
        sender: String,
        identifier: String,
        asset: String,
        amount: u64,
        chain: String,
        expiry: u64,
        #[serde(default)]
        refund: bool,
    },
    VerifyQuote {
        label: String,
        expect: Expect,
    },
    Register {
        label: String,
    },
    CheckTuple {
        label: String,
        expect: bool,
    },
    Fund {
        label: String,
        expect: Expect,
    },
    Claim {
        label: String,
        recipient: String,
        via: ClaimRoute,
        expect: Expect,
    },
    Refund {
        label: String,
        expect: Expect,
    },
    Notify {
        label: String,
        expect_notified: bool,
    },
    AdvanceTime {
        secs: u64,
    },
    AdvanceBlocks {
        chain: String,
        n: u64,
    },
    Gc {
        chain: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimRoute {
    Relay,
    SelfSubmit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assertion {
    Status {
        label: String,
        equals: String,
    },
    Balance {
        chain: String,
        address_hex: String,
        asset: String,
        equals: u64,
    },
    /// The claim destination derived for a recipient holds `equals` units.
    RecipientBalance {
        chain: String,
        recipient: String,
        asset: String,
        equals: u64,
    },
    /// Total units of an asset on a chain equal everything ever credited.
    Conservation {
        chain: String,
        asset: String,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub mode: BindingMode,
    #[serde(default)]
    pub malice: MaliceFlags,
    pub chains: Vec<ChainSpec>,
    pub recipients: Vec<RecipientSpec>,
    pub senders: Vec<SenderSpec>,
    pub steps: Vec<Step>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepOutcome {
    pub step: String,
    pub outcome: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssertionOutcome {
    pub assertion: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub steps: Vec<StepOutcome>,
    pub assertions: Vec<AssertionOutcome>,
    pub pass: bool,
}

/// Stable 20-byte account address for a named party.
pub fn party_address(name: &str) -> Address {
    let d = codec::hash_internal("hfipay:sim-party", name.as_bytes());
    let mut bytes = [0u8; 20];
    bytes.copy_from_slice(&d.0[..20]);
    Address(bytes)
}

struct LabeledQuote {
    quote: Quote,
    sender: String,
    chain: String,
}

struct Runner {
    relay: Relay,
    ledgers: HashMap<String, ChainLedger>,
    tokens: HashMap<String, String>,
    sender_keys: HashMap<String, PartyKey>,
    recipients: HashMap<String, RecipientSession>,
    quotes: HashMap<String, LabeledQuote>,
    sessions: HashMap<String, SenderSession>,
    credited: HashMap<(String, String), u64>,
    issuer: BindingIssuer,
    backend: MockBackend,
    mode: BindingMode,
}

impl Runner {
    fn ledger(&mut self, chain: &str) -> Result<&mut ChainLedger, ScenarioError> {
        self.ledgers
            .get_mut(chain)
            .ok_or_else(|| ScenarioError::UnknownRef {
                kind: "chain",
                name: chain.to_string(),
            })
    }
}

fn setup(scenario: &Scenario) -> Result<Runner, ScenarioError> {
    let backend = MockBackend::from_seed(42);
    let issuer = BindingIssuer::from_seed(7);
    let mut relay = Relay::new(
        RelayConfig {
            malice: scenario.malice,
            ..RelayConfig::default()
        },
        backend.clone(),
        issuer.clone(),
        ChaCha20Rng::seed_from_u64(scenario.seed),
    );
    relay.dep_tag_for_quotes = DEP.to_vec();

    let mut ledgers = HashMap::new();
    let mut credited = HashMap::new();
    for chain in &scenario.chains {
        let mut ledger = ChainLedger::new(&chain.id, DEP, backend.clone());
        ledger.set_confirmation_depth(chain.confirmation_depth);
        ledgers.insert(chain.id.clone(), ledger);
    }

    let mut root_rng = ChaCha20Rng::seed_from_u64(scenario.seed ^ 0x0520);
    let mut recipients = HashMap::new();
    for spec in &scenario.recipients {
        let mut rev = [0u8; 32];
        let mut salt = [0u8; 32];
        root_rng.fill_bytes(&mut rev);
        root_rng.fill_bytes(&mut salt);
        let root = IdentityRoot::from_entropy(rev, salt);
        let binding = identity::derive_epoch_binding(&root, spec.epoch);
        let attestation = if scenario.mode == BindingMode::VerifiedQuote {
            let norm = normalize(&spec.identifier);
            let evidence = issuer.run_otp(&norm, 0);
            Some(
                issuer
                    .issue_attestation(&norm, &binding.key_commitment, spec.epoch, u64::MAX / 2, Some(&evidence), 0)
                    .expect("fresh evidence"),
            )
        } else {
            None
        };
        relay
            .enroll(
                &spec.identifier,
                identity::derive_commitment(&root, identity::DOMAIN_ID).id_com,
                &binding,
                scenario.mode,
                attestation,
            )
            .expect("unique scenario recipients");
        recipients.insert(
            normalize(&spec.identifier),
            RecipientSession::new(root, backend.clone()),
        );
    }

    let mut tokens = HashMap::new();
    let mut sender_keys = HashMap::new();
    for (i, spec) in scenario.senders.iter().enumerate() {
        tokens.insert(spec.name.clone(), relay.register_sender(&spec.name));
        let key = PartyKey::from_seed(scenario.seed ^ (1000 + i as u64));
        for funds in &spec.funds {
            let ledger = ledgers.get_mut(&funds.chain).ok_or_else(|| {
                ScenarioError::UnknownRef {
                    kind: "chain",
                    name: funds.chain.clone(),
                }
            })?;
            ledger.credit(party_address(&spec.name), &funds.asset, funds.amount);
            ledger.register_refund_policy(party_address(&spec.name), key.clone());
            *credited
                .entry((funds.chain.clone(), funds.asset.clone()))
                .or_insert(0) += funds.amount;
        }
        sender_keys.insert(spec.name.clone(), key);
    }

    Ok(Runner {
        relay,
        ledgers,
        tokens,
        sender_keys,
        recipients,
        quotes: HashMap::new(),
        sessions: HashMap::new(),
        credited,
        issuer,
        backend,
        mode: scenario.mode,
    })
}

fn expect_outcome<T, E: std::fmt::Display>(
    result: &Result<T, E>,
    expect: Expect,
) -> (String, bool) {
    match (result, expect) {
        (Ok(_), Expect::Ok) => ("ok".into(), true),
        (Ok(_), Expect::Reject) => ("unexpectedly succeeded".into(), false),
        (Err(e), Expect::Reject) => (format!("rejected: {e}"), true),
        (Err(e), Expect::Ok) => (format!("unexpectedly failed: {e}"), false),
    }
}

fn run_step(runner: &mut Runner, step: &Step) -> Result<StepOutcome, ScenarioError> {
    let step_desc = serde_json::to_string(step).expect("step serializes");
    let (outcome, pass) = match step {
        Step::Quote {
            label,
            sender,
            identifier,
            asset,
            amount,
            chain,
            expiry,
            refund,
        } => {
            let token = runner
                .tokens
                .get(sender)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "sender",
                    name: sender.clone(),
                })?
                .clone();
            let refund_dest = refund.then(|| party_address(sender));
            let request = QuoteRequest {
                identifier: identifier.clone(),
                asset: asset.clone(),
                amount: *amount,
                chain: chain.clone(),
                refund_dest,
                expiry: *expiry,
            };
            match runner.relay.create_quote(&token, &request) {
                Ok(quote) => {
                    let session = SenderSession::new(
                        PaymentRequest {
                            identifier: identifier.clone(),
                            asset: asset.clone(),
                            amount: *amount,
                            chain: chain.clone(),
                            refund_dest,
                            expiry: *expiry,
                        },
                        runner.mode,
                        DEP,
                        runner.issuer.clone(),
                        runner.backend.clone(),
                        runner.sender_keys.get(sender).cloned(),
                    );
                    runner.sessions.insert(label.clone(), session);
                    runner.quotes.insert(
                        label.clone(),
                        LabeledQuote {
                            quote,
                            sender: sender.clone(),
                            chain: chain.clone(),
                        },
                    );
                    ("ok".into(), true)
                }
                Err(e) => (format!("quote failed: {e}"), false),
            }
        }
        Step::VerifyQuote { label, expect } => {
            let now = runner.relay.now;
            let quote = quote_of(runner, label)?.quote.clone();
            let session = session_of(runner, label)?;
            let result = session.sender_verify_quote(&quote, now);
            expect_outcome(&result, *expect)
        }
        Step::Register { label } => {
            let quote = quote_of(runner, label)?.quote.clone();
            let chain = quote_of(runner, label)?.chain.clone();
            // pre-authorize the refund path when the quote carries one
            let commitment = {
                let session = session_of(runner, label)?;
                if quote.refund_dest.is_some() && session.accepted.is_some() {
                    session.sender_authorize_refund();
                }
                session.refund_commitment()
            };
            let ledger = runner
                .ledgers
                .get_mut(&chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: chain.clone(),
                })?;
            match runner.relay.register_and_confirm(&quote, commitment, ledger) {
                Ok(_) => ("ok".into(), true),
                Err(e) => (format!("register failed: {e}"), false),
            }
        }
        Step::CheckTuple { label, expect } => {
            let chain = quote_of(runner, label)?.chain.clone();
            let ledger = runner.ledgers.remove(&chain).unwrap();
            let result = {
                let session = session_of(runner, label)?;
                session.sender_check_registered_tuple(&ledger)
            };
            runner.ledgers.insert(chain, ledger);
            (
                format!("tuple check: {result}"),
                result == *expect,
            )
        }
        Step::Fund { label, expect } => {
            let (chain, sender) = {
                let q = quote_of(runner, label)?;
                (q.chain.clone(), q.sender.clone())
            };
            let from = party_address(&sender);
            let mut ledger = runner.ledgers.remove(&chain).unwrap();
            let result = {
                let session = session_of(runner, label)?;
                session.sender_fund(&mut ledger, &from)
            };
            runner.ledgers.insert(chain, ledger);
            expect_outcome(&result, *expect)
        }
        Step::Claim {
            label,
            recipient,
            via,
            expect,
        } => {
            let (chain, intent_id) = {
                let q = quote_of(runner, label)?;
                (q.chain.clone(), q.quote.intent_id)
            };
            let dest = party_address(&format!("dest:{recipient}"));
            let norm = normalize(recipient);
            let mut ledger = runner.ledgers.remove(&chain).unwrap();
            let result: Result<(), String> = (|| {
                let session = runner
                    .recipients
                    .get_mut(&norm)
                    .ok_or_else(|| format!("unknown recipient {recipient}"))?;
                let tuple =
                    IntentTuple::from_ledger(&ledger, &intent_id).map_err(|e| e.to_string())?;
                let (publics, proof) = session
                    .recipient_build_claim(&tuple, &dest.0, None)
                    .map_err(|e| e.to_string())?;
                match via {
                    ClaimRoute::Relay => runner
                        .relay
                        .submit_claim_for(&intent_id, &publics, &proof, &mut ledger)
                        .map(|_| ())
                        .map_err(|e| e.to_string()),
                    ClaimRoute::SelfSubmit => ledger
                        .claim(&intent_id, &publics, &proof)
                        .map(|_| ())
                        .map_err(|e| e.to_string()),
                }
            })();
            runner.ledgers.insert(chain, ledger);
            expect_outcome(&result, *expect)
        }
        Step::Refund { label, expect } => {
            let (chain, intent_id) = {
                let q = quote_of(runner, label)?;
                (q.chain.clone(), q.quote.intent_id)
            };
            let sig = {
                let session = session_of(runner, label)?;
                session.refund_auth.as_ref().map(|a| a.sig)
            };
            let mut ledger = runner.ledgers.remove(&chain).unwrap();
            let result: Result<(), String> = match sig {
                Some(sig) => runner
                    .relay
                    .submit_refund_for(&intent_id, &sig, &mut ledger)
                    .map(|_| ())
                    .map_err(|e| e.to_string()),
                None => Err("no refund authorization held".into()),
            };
            runner.ledgers.insert(chain, ledger);
            expect_outcome(&result, *expect)
        }
        Step::Notify {
            label,
            expect_notified,
        } => {
            let (chain, intent_id) = {
                let q = quote_of(runner, label)?;
                (q.chain.clone(), q.quote.intent_id)
            };
            let ledger = runner
                .ledgers
                .get(&chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: chain.clone(),
                })?;
            let notified = runner.relay.notify(&intent_id, ledger).is_ok();
            (
                format!("notified: {notified}"),
                notified == *expect_notified,
            )
        }
        Step::AdvanceTime { secs } => {
            runner.relay.advance_time(*secs);
            for ledger in runner.ledgers.values_mut() {
                ledger.advance_time(*secs);
            }
            ("ok".into(), true)
        }
        Step::AdvanceBlocks { chain, n } => {
            runner.ledger(chain)?.advance_blocks(*n);
            ("ok".into(), true)
        }
        Step::Gc { chain } => {
            let ledger = runner
                .ledgers
                .get(chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: chain.clone(),
                })?;
            let purged = {
                let ledger: &ChainLedger = ledger;
                runner.relay.gc_unfunded(ledger)
            };
            (format!("purged {purged}"), true)
        }
    };
    Ok(StepOutcome {
        step: step_desc,
        outcome,
        pass,
    })
}

fn quote_of<'a>(runner: &'a Runner, label: &str) -> Result<&'a LabeledQuote, ScenarioError> {
    runner
        .quotes
        .get(label)
        .ok_or_else(|| ScenarioError::UnknownRef {
            kind: "quote label",
            name: label.to_string(),
        })
}

fn session_of<'a>(
    runner: &'a mut Runner,
    label: &str,
) -> Result<&'a mut SenderSession, ScenarioError> {
    runner
        .sessions
        .get_mut(label)
        .ok_or_else(|| ScenarioError::UnknownRef {
            kind: "quote label",
            name: label.to_string(),
        })
}

fn check_assertion(runner: &Runner, assertion: &Assertion) -> Result<bool, ScenarioError> {
    Ok(match assertion {
        Assertion::Status { label, equals } => {
            let q = quote_of(runner, label)?;
            let ledger = runner
                .ledgers
                .get(&q.chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: q.chain.clone(),
                })?;
            match ledger.read_intent(&q.quote.intent_id) {
                Ok(meta) => meta.effective_status(ledger.now).to_string() == *equals,
                Err(_) => equals == "MISSING",
            }
        }
        Assertion::Balance {
            chain,
            address_hex,
            asset,
            equals,
        } => {
            let ledger = runner
                .ledgers
                .get(chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: chain.clone(),
                })?;
            let address = Address::from_hex(address_hex).ok_or_else(|| {
                ScenarioError::UnknownRef {
                    kind: "address",
                    name: address_hex.clone(),
                }
            })?;
            ledger.balance(&address, asset) == *equals
        }
        Assertion::RecipientBalance {
            chain,
            recipient,
            asset,
            equals,
        } => {
            let ledger = runner
                .ledgers
                .get(chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: chain.clone(),
                })?;
            let dest = party_address(&format!("dest:{}", normalize(recipient)));
            ledger.balance(&dest, asset) == *equals
        }
        Assertion::Conservation { chain, asset } => {
            let ledger = runner
                .ledgers
                .get(chain)
                .ok_or_else(|| ScenarioError::UnknownRef {
                    kind: "chain",
                    name: chain.clone(),
                })?;
            let expected = runner
                .credited
                .get(&(chain.clone(), asset.clone()))
                .copied()
                .unwrap_or(0);
            ledger.total_supply(asset) == expected
        }
    })
}

/// Execute a parsed scenario.
pub fn run(scenario: &Scenario) -> Result<Report, ScenarioError> {
    let mut runner = setup(scenario)?;
    let mut steps = Vec::with_capacity(scenario.steps.len());
    for step in &scenario.steps {
        steps.push(run_step(&mut runner, step)?);
    }
    let mut assertions = Vec::with_capacity(scenario.assertions.len());
    for assertion in &scenario.assertions {
        assertions.push(AssertionOutcome {
            assertion: serde_json::to_string(assertion).expect("assertion serializes"),
            pass: check_assertion(&runner, assertion)?,
        });
    }
    let pass = steps.iter().all(|s| s.pass) && assertions.iter().all(|a| a.pass);
    Ok(Report {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        steps,
        assertions,
        pass,
    })
}

/// Parse and run a scenario from a JSON string.
pub fn run_scenario_str(json: &str) -> Result<Report, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(json)?;
    run(&scenario)
}

/// Parse and run a scenario file.
pub fn run_scenario(path: &std::path::Path) -> Result<Report, ScenarioError> {
    let json = std::fs::read_to_string(path)?;
    run_scenario_str(&json)
}
