//! The off-chain relay/directory service: enrollment in both binding modes,
//! the private intent table, quote generation, notification gating, rate
//! limiting, garbage collection, epoch rotation and retention, and the
//! compromise dump consumed by the attack harness.
//!
//! Malicious-relay behaviors are explicit configuration flags so attacks are
//! reproducible scenarios rather than code forks. The relay never holds the
//! recipient root and cannot move ledger funds except through claim/refund
//! transactions that verify independently.

use crate::codec::{self, Digest, DomainTag};
use crate::identity::EpochBinding;
use crate::ledger::{self, Address, ChainLedger, IntentId, LedgerError, Receipt};
use crate::proofsys::{
    Attestation, BindingIssuer, ClaimPublicInputs, MockBackend, Proof, QuotePublicInputs,
};
use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub mod api;

/// Deployment binding mode for a directory entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingMode {
    Baseline,
    VerifiedQuote,
}

/// Which quote field a malicious relay substitutes between directory truth
/// and the quote it returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteMutation {
    Rho,
    Asset,
    Amount,
    Epoch,
    Expiry,
    RefundDest,
    Address,
}

impl QuoteMutation {
    pub const ALL: &'static [QuoteMutation] = &[
        QuoteMutation::Rho,
        QuoteMutation::Asset,
        QuoteMutation::Amount,
        QuoteMutation::Epoch,
        QuoteMutation::Expiry,
        QuoteMutation::RefundDest,
        QuoteMutation::Address,
    ];
}

/// Reproducible malicious-relay configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaliceFlags {
    /// Substitute one quote field relative to directory truth.
    pub quote_mutation: Option<QuoteMutation>,
    /// Register an on-chain tuple that differs from the returned quote.
    pub mutate_registered_tuple: bool,
    /// Drop relayed claim submissions.
    pub censor_claims: bool,
    /// Notify before funding without a fee.
    pub over_notify: bool,
}

/// Operational constants. The mechanisms are mandatory; these defaults are
/// deployment knobs.
#[derive(Clone, Debug)]
pub struct RelayConfig {
    pub rate_limit_per_window: u32,
    pub rate_window_secs: u64,
    pub quote_ttl_secs: u64,
    pub unfunded_gc_ttl_secs: u64,
    pub settled_retention_secs: u64,
    pub malice: MaliceFlags,
}

impl Default for RelayConfig {
    fn default() -> Self {
        RelayConfig {
            rate_limit_per_window: 10,
            rate_window_secs: 60,
            quote_ttl_secs: 15 * 60,
            unfunded_gc_ttl_secs: 24 * 3600,
            settled_retention_secs: 30 * 86_400,
            malice: MaliceFlags::default(),
        }
    }
}

/// One retained binding epoch in a directory entry.
#[derive(Clone, Debug)]
pub struct EpochRecord {
    pub epoch: u64,
    handle: Digest,
    pub key_commitment: Digest,
    pub settled: bool,
    pub retired_at: Option<u64>,
}

/// Relay-private mapping from a normalized identifier to binding state.
#[derive(Clone, Debug)]
pub struct DirectoryEntry {
    pub normalized_id: String,
    pub id_com: Digest,
    pub epochs: Vec<EpochRecord>,
    pub mode: BindingMode,
    pub attestation: Option<Attestation>,
    pub enrolled_at: u64,
}

impl DirectoryEntry {
    pub fn current_epoch(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Relay-private per-intent record. Never exported except through
/// [`Relay::dump_compromise`].
#[derive(Clone, Debug)]
pub struct PrivateIntentRecord {
    pub identifier: String,
    pub intent_id: IntentId,
    pub rho: Digest,
    pub asset: String,
    pub amount: u64,
    pub chain: String,
    pub epoch: u64,
    pub refund_dest: Option<Address>,
    pub expiry: u64,
    pub created_at: u64,
    pub notified: bool,
    pub fee_paid: bool,
}

/// The quote returned to a sender. In verified-quote mode it additionally
/// carries the binding-key commitment, attestation, and quote proof.
#[derive(Clone, Debug)]
pub struct Quote {
    pub intent_id: IntentId,
    pub alpha: Address,
    pub rho: Digest,
    pub asset: String,
    pub amount: u64,
    pub chain: String,
    pub epoch: u64,
    pub refund_dest: Option<Address>,
    pub expiry: u64,
    pub key_commitment: Option<Digest>,
    pub binding_validity: Option<u64>,
    pub attestation: Option<Attestation>,
    pub quote_proof: Option<Proof>,
    pub quote_expiry: u64,
}

/// A sender's quote request.
#[derive(Clone, Debug)]
pub struct QuoteRequest {
    pub identifier: String,
    pub asset: String,
    pub amount: u64,
    pub chain: String,
    pub refund_dest: Option<Address>,
    pub expiry: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelayError {
    #[error("identifier not enrolled")]
    UnknownIdentifier,
    #[error("identifier already enrolled")]
    AlreadyEnrolled,
    #[error("attestation missing, expired, or over a different binding")]
    InvalidAttestation,
    #[error("quote rate limit exceeded for sender")]
    RateLimited,
    #[error("unknown sender token")]
    Unauthenticated,
    #[error("intent not funded at required confirmation depth")]
    NotFunded,
    #[error("unknown intent")]
    UnknownIntent,
    #[error("relay is censoring this submission")]
    Censored,
    #[error("cannot purge epoch with pending intents")]
    PendingIntents,
    #[error("ledger error: {0}")]
    Ledger(#[from] LedgerError),
}

/// Snapshot taken by the relay-compromise adversary: the full directory
/// (including retained secret handles) and the private intent table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompromiseDump {
    pub directory: Vec<DumpedDirectoryEntry>,
    pub intents: Vec<DumpedIntentRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DumpedDirectoryEntry {
    pub normalized_id: String,
    pub id_com_hex: String,
    pub epochs: Vec<DumpedEpoch>,
    pub mode: BindingMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DumpedEpoch {
    pub epoch: u64,
    /// The secret binding handle. Its presence here is the whole point of
    /// the compromise scenario.
    pub handle_hex: String,
    pub key_commitment_hex: String,
    pub settled: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DumpedIntentRecord {
    pub identifier: String,
    pub intent_id_hex: String,
    pub rho_hex: String,
    pub asset: String,
    pub amount: u64,
    pub chain: String,
    pub epoch: u64,
    pub expiry: u64,
    pub created_at: u64,
}

/// Trim, Unicode NFC, full lowercase.
pub fn normalize(identifier: &str) -> String {
    identifier.trim().nfc().collect::<String>().to_lowercase()
}

/// The relay service. State sits behind one value; callers serialize access.
pub struct Relay {
    pub config: RelayConfig,
    directory: HashMap<String, DirectoryEntry>,
    intents: HashMap<IntentId, PrivateIntentRecord>,
    sender_tokens: HashMap<String, String>,
    quote_times: HashMap<String, Vec<u64>>,
    backend: MockBackend,
    issuer: BindingIssuer,
    rng: ChaCha20Rng,
    pub now: u64,
    /// Deployment tag used for quote address derivation; set once at
    /// deployment wiring time and shared with the ledgers.
    pub dep_tag_for_quotes: Vec<u8>,
}

impl Relay {
    pub fn new(
        config: RelayConfig,
        backend: MockBackend,
        issuer: BindingIssuer,
        rng: ChaCha20Rng,
    ) -> Self {
        Relay {
            config,
            directory: HashMap::new(),
            intents: HashMap::new(),
            sender_tokens: HashMap::new(),
            quote_times: HashMap::new(),
            backend,
            issuer,
            rng,
            now: 0,
            dep_tag_for_quotes: Vec::new(),
        }
    }

    pub fn advance_time(&mut self, secs: u64) {
        self.now += secs;
    }

    /// Issue an API token for a sender. Stands in for the operational
    /// "authenticated API call" requirement.
    pub fn register_sender(&mut self, sender: &str) -> String {
        let token = format!("tok-{}", codec::hash_internal("hfipay:sim-token", sender.as_bytes()));
        self.sender_tokens.insert(token.clone(), sender.to_string());
        token
    }

    fn authenticate(&self, token: &str) -> Result<String, RelayError> {
        self.sender_tokens
            .get(token)
            .cloned()
            .ok_or(RelayError::Unauthenticated)
    }

    // ---- enrollment and rotation -------------------------------------

    /// Insert a directory entry. Verified-quote entries require a currently
    /// valid attestation over exactly the presented binding.
    pub fn enroll(
        &mut self,
        identifier: &str,
        id_com: Digest,
        binding: &EpochBinding,
        mode: BindingMode,
        attestation: Option<Attestation>,
    ) -> Result<(), RelayError> {
        let norm = normalize(identifier);
        if self.directory.contains_key(&norm) {
            return Err(RelayError::AlreadyEnrolled);
        }
        if mode == BindingMode::VerifiedQuote {
            let att = attestation.as_ref().ok_or(RelayError::InvalidAttestation)?;
            if !self.issuer.verify_attestation(
                att,
                &norm,
                &binding.key_commitment,
                binding.epoch,
                att.valid_until,
                self.now,
            ) {
                return Err(RelayError::InvalidAttestation);
            }
        }
        self.directory.insert(
            norm.clone(),
            DirectoryEntry {
                normalized_id: norm,
                id_com,
                epochs: vec![EpochRecord {
                    epoch: binding.epoch,
                    handle: *binding.handle(),
                    key_commitment: binding.key_commitment,
                    settled: false,
                    retired_at: None,
                }],
                mode,
                attestation,
                enrolled_at: self.now,
            },
        );
        Ok(())
    }

    /// Add a new binding epoch, retaining prior epochs until their intents
    /// settle.
    pub fn rotate_epoch(
        &mut self,
        identifier: &str,
        binding: &EpochBinding,
        attestation: Option<Attestation>,
    ) -> Result<(), RelayError> {
        let norm = normalize(identifier);
        let now = self.now;
        let verified = {
            let entry = self
                .directory
                .get(&norm)
                .ok_or(RelayError::UnknownIdentifier)?;
            entry.mode == BindingMode::VerifiedQuote
        };
        if verified {
            let att = attestation.as_ref().ok_or(RelayError::InvalidAttestation)?;
            if !self.issuer.verify_attestation(
                att,
                &norm,
                &binding.key_commitment,
                binding.epoch,
                att.valid_until,
                now,
            ) {
                return Err(RelayError::InvalidAttestation);
            }
        }
        let entry = self.directory.get_mut(&norm).unwrap();
        for old in entry.epochs.iter_mut() {
            if old.retired_at.is_none() {
                old.retired_at = Some(now);
            }
        }
        entry.epochs.push(EpochRecord {
            epoch: binding.epoch,
            handle: *binding.handle(),
            key_commitment: binding.key_commitment,
            settled: false,
            retired_at: None,
        });
        if attestation.is_some() {
            entry.attestation = attestation;
        }
        Ok(())
    }

    /// Drop retired epochs whose intents have all settled on the ledger.
    /// Refuses removal while any intent tied to the epoch is pending.
    pub fn purge_settled(
        &mut self,
        identifier: &str,
        ledger: &ChainLedger,
    ) -> Result<usize, RelayError> {
        let norm = normalize(identifier);
        let pending_epochs: Vec<u64> = self
            .intents
            .values()
            .filter(|r| {
                normalize(&r.identifier) == norm
                    && ledger
                        .read_intent(&r.intent_id)
                        .map(|m| {
                            !matches!(
                                m.effective_status(ledger.now),
                                ledger::Status::Claimed
                                    | ledger::Status::Refunded
                                    | ledger::Status::Expired
                            ) || m.status == ledger::Status::Funded && ledger.now <= m.expiry
                        })
                        .unwrap_or(false)
            })
            .map(|r| r.epoch)
            .collect();
        let entry = self
            .directory
            .get_mut(&norm)
            .ok_or(RelayError::UnknownIdentifier)?;
        let before = entry.epochs.len();
        let mut refused = false;
        entry.epochs.retain(|e| {
            let retired = e.retired_at.is_some();
            let pending = pending_epochs.contains(&e.epoch);
            if retired && pending {
                refused = true;
            }
            !(retired && !pending)
        });
        if refused && before == entry.epochs.len() {
            return Err(RelayError::PendingIntents);
        }
        Ok(before - entry.epochs.len())
    }

    // ---- quote generation --------------------------------------------

    fn rate_limited(&mut self, sender: &str) -> bool {
        let window_start = self.now.saturating_sub(self.config.rate_window_secs);
        let times = self.quote_times.entry(sender.to_string()).or_default();
        times.retain(|t| *t >= window_start);
        if times.len() as u32 >= self.config.rate_limit_per_window {
            return true;
        }
        times.push(self.now);
        false
    }

    /// Steps 1-7 of intent creation: directory lookup, random intent id,
    /// address derivation, blinded binding, quote proof (verified mode), and
    /// the private intent record.
    pub fn create_quote(
        &mut self,
        sender_token: &str,
        request: &QuoteRequest,
    ) -> Result<Quote, RelayError> {
        let sender = self.authenticate(sender_token)?;
        if self.rate_limited(&sender) {
            return Err(RelayError::RateLimited);
        }
        let norm = normalize(&request.identifier);
        let entry = self
            .directory
            .get(&norm)
            .ok_or(RelayError::UnknownIdentifier)?
            .clone();
        let current = entry.current_epoch().ok_or(RelayError::UnknownIdentifier)?;

        let mut intent_id = [0u8; 32];
        self.rng.fill_bytes(&mut intent_id);

        let mut bind_payload = Vec::with_capacity(64);
        bind_payload.extend_from_slice(current.handle.as_bytes());
        bind_payload.extend_from_slice(&intent_id);
        let rho = codec::hash_domain(DomainTag::Bind, &bind_payload);
        let alpha = self.derive_quote_address(&request.chain, &intent_id);

        let mut quote = Quote {
            intent_id,
            alpha,
            rho,
            asset: request.asset.clone(),
            amount: request.amount,
            chain: request.chain.clone(),
            epoch: current.epoch,
            refund_dest: request.refund_dest,
            expiry: request.expiry,
            key_commitment: None,
            binding_validity: None,
            attestation: None,
            quote_proof: None,
            quote_expiry: self.now + self.config.quote_ttl_secs,
        };

        if entry.mode == BindingMode::VerifiedQuote {
            let proof = self
                .backend
                .prove_quote(
                    &current.handle,
                    &QuotePublicInputs {
                        rho,
                        key_commitment: current.key_commitment,
                        intent_id,
                    },
                )
                .expect("directory handle satisfies the quote relation");
            quote.key_commitment = Some(current.key_commitment);
            quote.binding_validity = entry.attestation.as_ref().map(|a| a.valid_until);
            quote.attestation = entry.attestation.clone();
            quote.quote_proof = Some(proof);
        }

        self.apply_quote_malice(&mut quote, &entry);

        self.intents.insert(
            quote.intent_id,
            PrivateIntentRecord {
                identifier: norm,
                intent_id: quote.intent_id,
                rho: quote.rho,
                asset: quote.asset.clone(),
                amount: quote.amount,
                chain: quote.chain.clone(),
                epoch: quote.epoch,
                refund_dest: quote.refund_dest,
                expiry: quote.expiry,
                created_at: self.now,
                notified: false,
                fee_paid: false,
            },
        );
        Ok(quote)
    }

    /// The relay's own address derivation for a quote; the deployment tag is
    /// fixed per deployment and shared with the ledgers.
    fn derive_quote_address(&self, chain: &str, intent_id: &IntentId) -> Address {
        ledger::derive_address(&self.dep_tag_for_quotes, chain, intent_id)
    }

    fn apply_quote_malice(&mut self, quote: &mut Quote, entry: &DirectoryEntry) {
        let Some(mutation) = self.config.malice.quote_mutation else {
            return;
        };
        match mutation {
            QuoteMutation::Rho => {
                // Substitute an accomplice binding: fresh handle, matching
                // rho, and a proof valid for the accomplice publics only.
                let mut accomplice_seed = [0u8; 32];
                self.rng.fill_bytes(&mut accomplice_seed);
                let handle = codec::hash_internal("hfipay:sim-accomplice", &accomplice_seed);
                let mut payload = Vec::with_capacity(64);
                payload.extend_from_slice(handle.as_bytes());
                payload.extend_from_slice(&quote.intent_id);
                quote.rho = codec::hash_domain(DomainTag::Bind, &payload);
                if entry.mode == BindingMode::VerifiedQuote {
                    let accomplice_k = codec::hash_domain(DomainTag::BindKey, handle.as_bytes());
                    quote.quote_proof = self
                        .backend
                        .prove_quote(
                            &handle,
                            &QuotePublicInputs {
                                rho: quote.rho,
                                key_commitment: accomplice_k,
                                intent_id: quote.intent_id,
                            },
                        )
                        .ok();
                }
            }
            QuoteMutation::Asset => quote.asset = format!("{}-alt", quote.asset),
            QuoteMutation::Amount => quote.amount = quote.amount.saturating_sub(1).max(1),
            QuoteMutation::Epoch => quote.epoch += 1,
            QuoteMutation::Expiry => quote.expiry += 3600,
            QuoteMutation::RefundDest => {
                quote.refund_dest = Some(Address([0xEE; 20]));
            }
            QuoteMutation::Address => {
                let mut bytes = quote.alpha.0;
                bytes[0] ^= 0xFF;
                quote.alpha = Address(bytes);
            }
        }
    }

    /// Register the quoted tuple on the ledger. A malicious relay may
    /// register a mutated tuple; the sender's read-back check catches it.
    pub fn register_and_confirm(
        &mut self,
        quote: &Quote,
        refund_commitment: Option<Digest>,
        ledger: &mut ChainLedger,
    ) -> Result<Receipt, RelayError> {
        let mut amount = quote.amount;
        if self.config.malice.mutate_registered_tuple {
            amount = amount.saturating_sub(1).max(1);
        }
        let receipt = ledger.register_intent(
            quote.intent_id,
            quote.rho,
            &quote.asset,
            amount,
            quote.epoch,
            quote.expiry,
            quote.refund_dest,
            refund_commitment,
        )?;
        Ok(receipt)
    }

    // ---- notification, gc, relaying ----------------------------------

    /// Mark a non-refundable relay fee as paid for an intent, unlocking
    /// pre-funding notification.
    pub fn accept_fee(&mut self, intent_id: &IntentId) -> Result<(), RelayError> {
        let record = self
            .intents
            .get_mut(intent_id)
            .ok_or(RelayError::UnknownIntent)?;
        record.fee_paid = true;
        Ok(())
    }

    /// Notify the recipient, gated on confirmed funding or an accepted fee.
    pub fn notify(&mut self, intent_id: &IntentId, ledger: &ChainLedger) -> Result<(), RelayError> {
        let over_notify = self.config.malice.over_notify;
        let record = self
            .intents
            .get_mut(intent_id)
            .ok_or(RelayError::UnknownIntent)?;
        if !over_notify && !record.fee_paid && !ledger.confirmed_funded(intent_id) {
            return Err(RelayError::NotFunded);
        }
        record.notified = true;
        Ok(())
    }

    pub fn is_notified(&self, intent_id: &IntentId) -> bool {
        self.intents
            .get(intent_id)
            .map(|r| r.notified)
            .unwrap_or(false)
    }

    /// Purge private records of unfunded intents older than the TTL.
    pub fn gc_unfunded(&mut self, ledger: &ChainLedger) -> usize {
        let cutoff = self.now.saturating_sub(self.config.unfunded_gc_ttl_secs);
        let before = self.intents.len();
        self.intents.retain(|id, record| {
            let unfunded = ledger
                .read_intent(id)
                .map(|m| m.status == ledger::Status::Created)
                .unwrap_or(true);
            !(unfunded && record.created_at < cutoff)
        });
        before - self.intents.len()
    }

    /// Relay a claim transaction (relayer-pays). A censoring relay drops it;
    /// the recipient can always self-submit to the ledger.
    pub fn submit_claim_for(
        &mut self,
        intent_id: &IntentId,
        publics: &ClaimPublicInputs,
        proof: &Proof,
        ledger: &mut ChainLedger,
    ) -> Result<Receipt, RelayError> {
        if self.config.malice.censor_claims {
            return Err(RelayError::Censored);
        }
        let receipt = ledger.claim(intent_id, publics, proof)?;
        if let Some(entry_epoch) = self.intents.get(intent_id).map(|r| r.epoch) {
            self.mark_epoch_settled(intent_id, entry_epoch, ledger);
        }
        Ok(receipt)
    }

    pub fn submit_refund_for(
        &mut self,
        intent_id: &IntentId,
        sig: &[u8; 32],
        ledger: &mut ChainLedger,
    ) -> Result<Receipt, RelayError> {
        if self.config.malice.censor_claims {
            return Err(RelayError::Censored);
        }
        Ok(ledger.refund(intent_id, sig)?)
    }

    fn mark_epoch_settled(&mut self, intent_id: &IntentId, epoch: u64, ledger: &ChainLedger) {
        let Some(record) = self.intents.get(intent_id) else {
            return;
        };
        let norm = normalize(&record.identifier);
        let any_pending = self.intents.values().any(|r| {
            normalize(&r.identifier) == norm
                && r.epoch == epoch
                && ledger
                    .read_intent(&r.intent_id)
                    .map(|m| {
                        matches!(m.status, ledger::Status::Created | ledger::Status::Funded)
                            && m.effective_status(ledger.now) != ledger::Status::Expired
                    })
                    .unwrap_or(false)
        });
        if !any_pending {
            if let Some(entry) = self.directory.get_mut(&norm) {
                for e in entry.epochs.iter_mut().filter(|e| e.epoch == epoch) {
                    e.settled = true;
                }
            }
        }
    }

    // ---- compromise --------------------------------------------------

    /// Full snapshot of the private directory and intent table, as obtained
    /// by an adversary that compromises the relay database.
    pub fn dump_compromise(&self) -> CompromiseDump {
        let mut directory: Vec<_> = self
            .directory
            .values()
            .map(|entry| DumpedDirectoryEntry {
                normalized_id: entry.normalized_id.clone(),
                id_com_hex: entry.id_com.to_hex(),
                epochs: entry
                    .epochs
                    .iter()
                    .map(|e| DumpedEpoch {
                        epoch: e.epoch,
                        handle_hex: e.handle.to_hex(),
                        key_commitment_hex: e.key_commitment.to_hex(),
                        settled: e.settled,
                    })
                    .collect(),
                mode: entry.mode,
            })
            .collect();
        directory.sort_by(|a, b| a.normalized_id.cmp(&b.normalized_id));
        let mut intents: Vec<_> = self
            .intents
            .values()
            .map(|r| DumpedIntentRecord {
                identifier: r.identifier.clone(),
                intent_id_hex: hex::encode(r.intent_id),
                rho_hex: r.rho.to_hex(),
                asset: r.asset.clone(),
                amount: r.amount,
                chain: r.chain.clone(),
                epoch: r.epoch,
                expiry: r.expiry,
                created_at: r.created_at,
            })
            .collect();
        intents.sort_by(|a, b| a.intent_id_hex.cmp(&b.intent_id_hex));
        CompromiseDump { directory, intents }
    }

    /// Directory lookup for tests and the harness challenger; relay-internal
    /// view, not an API response.
    pub fn directory_entry(&self, identifier: &str) -> Option<&DirectoryEntry> {
        self.directory.get(&normalize(identifier))
    }

    pub fn private_record(&self, intent_id: &IntentId) -> Option<&PrivateIntentRecord> {
        self.intents.get(intent_id)
    }

    /// Run the simulated control check with the relay's configured issuer.
    pub fn issuer_run_otp(&self, normalized_id: &str, now: u64) -> crate::proofsys::ControlEvidence {
        self.issuer.run_otp(normalized_id, now)
    }

    /// Ask the relay's configured issuer for an attestation; fails without
    /// fresh control evidence.
    pub fn issuer_issue_attestation(
        &self,
        normalized_id: &str,
        key_commitment: &Digest,
        epoch: u64,
        valid_until: u64,
        evidence: Option<&crate::proofsys::ControlEvidence>,
        now: u64,
    ) -> Result<Attestation, crate::proofsys::AttestError> {
        self.issuer
            .issue_attestation(normalized_id, key_commitment, epoch, valid_until, evidence, now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{derive_commitment, derive_epoch_binding, IdentityRoot, DOMAIN_ID};
    use rand::SeedableRng;

    fn relay() -> Relay {
        let mut r = Relay::new(
            RelayConfig::default(),
            MockBackend::from_seed(42),
            BindingIssuer::from_seed(7),
            ChaCha20Rng::seed_from_u64(1),
        );
        r.dep_tag_for_quotes = b"dep-1".to_vec();
        r
    }

    fn enroll_baseline(r: &mut Relay, identifier: &str) -> IdentityRoot {
        let root = IdentityRoot::from_entropy([1; 32], [2; 32]);
        let binding = derive_epoch_binding(&root, 3);
        r.enroll(
            identifier,
            derive_commitment(&root, DOMAIN_ID).id_com,
            &binding,
            BindingMode::Baseline,
            None,
        )
        .unwrap();
        root
    }

    #[test]
    fn normalize_rules() {
        assert_eq!(normalize("Alice@Example.COM "), "alice@example.com");
        assert_eq!(normalize("alice@example.com"), "alice@example.com");
        assert_eq!(normalize("ALICE@example.com"), normalize("alice@EXAMPLE.com"));
    }

    #[test]
    fn enroll_and_duplicate() {
        let mut r = relay();
        enroll_baseline(&mut r, "alice@example.com");
        let root = IdentityRoot::from_entropy([1; 32], [2; 32]);
        let binding = derive_epoch_binding(&root, 3);
        assert_eq!(
            r.enroll(
                "Alice@Example.com",
                derive_commitment(&root, DOMAIN_ID).id_com,
                &binding,
                BindingMode::Baseline,
                None
            ),
            Err(RelayError::AlreadyEnrolled)
        );
    }

    #[test]
    fn verified_enroll_requires_valid_attestation() {
        let mut r = relay();
        let issuer = BindingIssuer::from_seed(7);
        let root = IdentityRoot::from_entropy([1; 32], [2; 32]);
        let binding = derive_epoch_binding(&root, 3);
        let id_com = derive_commitment(&root, DOMAIN_ID).id_com;

        // no attestation at all
        assert_eq!(
            r.enroll("a@x.com", id_com, &binding, BindingMode::VerifiedQuote, None),
            Err(RelayError::InvalidAttestation)
        );
        // attestation over a different key commitment
        let evidence = issuer.run_otp("a@x.com", 0);
        let wrong = issuer
            .issue_attestation("a@x.com", &Digest([9; 32]), 3, 10_000, Some(&evidence), 0)
            .unwrap();
        assert_eq!(
            r.enroll("a@x.com", id_com, &binding, BindingMode::VerifiedQuote, Some(wrong)),
            Err(RelayError::InvalidAttestation)
        );
        // expired attestation
        let expired = issuer
            .issue_attestation(
                "a@x.com",
                &binding.key_commitment,
                3,
                10,
                Some(&evidence),
                0,
            )
            .unwrap();
        r.advance_time(100);
        assert_eq!(
            r.enroll("a@x.com", id_com, &binding, BindingMode::VerifiedQuote, Some(expired)),
            Err(RelayError::InvalidAttestation)
        );
        // valid
        let evidence = issuer.run_otp("a@x.com", 100);
        let good = issuer
            .issue_attestation(
                "a@x.com",
                &binding.key_commitment,
                3,
                100_000,
                Some(&evidence),
                100,
            )
            .unwrap();
        r.enroll("a@x.com", id_com, &binding, BindingMode::VerifiedQuote, Some(good))
            .unwrap();
    }

    fn request() -> QuoteRequest {
        QuoteRequest {
            identifier: "alice@example.com".into(),
            asset: "ETH".into(),
            amount: 1000,
            chain: "evm-1".into(),
            refund_dest: None,
            expiry: 10_000,
        }
    }

    #[test]
    fn quotes_are_intent_unique() {
        let mut r = relay();
        enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        let q1 = r.create_quote(&token, &request()).unwrap();
        let q2 = r.create_quote(&token, &request()).unwrap();
        assert_ne!(q1.intent_id, q2.intent_id);
        assert_ne!(q1.rho, q2.rho);
    }

    #[test]
    fn quote_rho_consistent_with_directory() {
        let mut r = relay();
        let root = enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        let q = r.create_quote(&token, &request()).unwrap();
        let binding = derive_epoch_binding(&root, 3);
        let mut payload = Vec::new();
        payload.extend_from_slice(binding.handle().as_bytes());
        payload.extend_from_slice(&q.intent_id);
        assert_eq!(q.rho, codec::hash_domain(DomainTag::Bind, &payload));
    }

    #[test]
    fn unknown_identifier_and_auth() {
        let mut r = relay();
        let token = r.register_sender("sender-a");
        assert!(matches!(
            r.create_quote(&token, &request()),
            Err(RelayError::UnknownIdentifier)
        ));
        enroll_baseline(&mut r, "alice@example.com");
        assert!(matches!(
            r.create_quote("bogus", &request()),
            Err(RelayError::Unauthenticated)
        ));
    }

    #[test]
    fn rate_limit_per_sender_window() {
        let mut r = relay();
        enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        for _ in 0..10 {
            r.create_quote(&token, &request()).unwrap();
        }
        assert!(matches!(
            r.create_quote(&token, &request()),
            Err(RelayError::RateLimited)
        ));
        // window rolls over
        r.advance_time(61);
        r.create_quote(&token, &request()).unwrap();
    }

    #[test]
    fn notification_gating() {
        let mut r = relay();
        enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        let q = r.create_quote(&token, &request()).unwrap();
        let mut l = ChainLedger::new("evm-1", b"dep-1", MockBackend::from_seed(42));
        r.register_and_confirm(&q, None, &mut l).unwrap();

        assert_eq!(r.notify(&q.intent_id, &l), Err(RelayError::NotFunded));
        // fee-paid unfunded notification is allowed
        r.accept_fee(&q.intent_id).unwrap();
        r.notify(&q.intent_id, &l).unwrap();

        // funded path
        let q2 = r.create_quote(&token, &request()).unwrap();
        r.register_and_confirm(&q2, None, &mut l).unwrap();
        let sender = Address([0xAA; 20]);
        l.credit(sender, "ETH", 1000);
        l.fund(&q2.intent_id, &sender, "ETH", 1000).unwrap();
        r.notify(&q2.intent_id, &l).unwrap();
        assert!(r.is_notified(&q2.intent_id));
    }

    #[test]
    fn gc_unfunded_after_ttl() {
        let mut r = relay();
        enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        let q1 = r.create_quote(&token, &request()).unwrap();
        let q2 = r.create_quote(&token, &request()).unwrap();
        let mut l = ChainLedger::new("evm-1", b"dep-1", MockBackend::from_seed(42));
        r.register_and_confirm(&q1, None, &mut l).unwrap();
        r.register_and_confirm(&q2, None, &mut l).unwrap();
        let sender = Address([0xAA; 20]);
        l.credit(sender, "ETH", 1000);
        l.fund(&q2.intent_id, &sender, "ETH", 1000).unwrap();

        assert_eq!(r.gc_unfunded(&l), 0);
        r.advance_time(24 * 3600 + 1);
        assert_eq!(r.gc_unfunded(&l), 1);
        assert!(r.private_record(&q1.intent_id).is_none());
        assert!(r.private_record(&q2.intent_id).is_some());
        assert_eq!(r.gc_unfunded(&l), 0);
    }

    #[test]
    fn rotation_and_purge() {
        let mut r = relay();
        let root = enroll_baseline(&mut r, "alice@example.com");
        let new_binding = derive_epoch_binding(&root, 4);
        r.rotate_epoch("alice@example.com", &new_binding, None).unwrap();
        let entry = r.directory_entry("alice@example.com").unwrap();
        assert_eq!(entry.epochs.len(), 2);
        assert_eq!(entry.current_epoch().unwrap().epoch, 4);

        // no intents on the old epoch: purge drops it
        let l = ChainLedger::new("evm-1", b"dep-1", MockBackend::from_seed(42));
        assert_eq!(r.purge_settled("alice@example.com", &l).unwrap(), 1);
        assert_eq!(r.directory_entry("alice@example.com").unwrap().epochs.len(), 1);
    }

    #[test]
    fn purge_refuses_pending_epoch() {
        let mut r = relay();
        let root = enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        let q = r.create_quote(&token, &request()).unwrap();
        let mut l = ChainLedger::new("evm-1", b"dep-1", MockBackend::from_seed(42));
        r.register_and_confirm(&q, None, &mut l).unwrap();
        let sender = Address([0xAA; 20]);
        l.credit(sender, "ETH", 1000);
        l.fund(&q.intent_id, &sender, "ETH", 1000).unwrap();

        let new_binding = derive_epoch_binding(&root, 4);
        r.rotate_epoch("alice@example.com", &new_binding, None).unwrap();
        assert_eq!(
            r.purge_settled("alice@example.com", &l),
            Err(RelayError::PendingIntents)
        );
    }

    #[test]
    fn dump_contains_retained_handles_but_not_purged() {
        let mut r = relay();
        let root = enroll_baseline(&mut r, "alice@example.com");
        let binding3 = derive_epoch_binding(&root, 3);
        let binding4 = derive_epoch_binding(&root, 4);
        r.rotate_epoch("alice@example.com", &binding4, None).unwrap();
        let dump = r.dump_compromise();
        let handles: Vec<_> = dump.directory[0]
            .epochs
            .iter()
            .map(|e| e.handle_hex.clone())
            .collect();
        assert!(handles.contains(&binding3.handle().to_hex()));
        assert!(handles.contains(&binding4.handle().to_hex()));

        let l = ChainLedger::new("evm-1", b"dep-1", MockBackend::from_seed(42));
        r.purge_settled("alice@example.com", &l).unwrap();
        let dump = r.dump_compromise();
        let handles: Vec<_> = dump.directory[0]
            .epochs
            .iter()
            .map(|e| e.handle_hex.clone())
            .collect();
        assert!(!handles.contains(&binding3.handle().to_hex()));
    }

    #[test]
    fn api_responses_never_contain_handles() {
        let mut r = relay();
        let root = enroll_baseline(&mut r, "alice@example.com");
        let token = r.register_sender("sender-a");
        let q = r.create_quote(&token, &request()).unwrap();
        let handle_hex = derive_epoch_binding(&root, 3).handle().to_hex();
        let debug = format!("{q:?}");
        assert!(!debug.contains(&handle_hex));
    }
}
