//! Simulated per-chain ledger: asset balances, intent registry,
//! deterministic deposit addresses, funding, exact-amount claim release,
//! pre-authorized refund, the intent lifecycle state machine, the public
//! observer feed, and a mempool with adversarial copy/reorder.
//!
//! One `ChainLedger` value models one chain. Multi-chain deployments are a
//! set of independent ledgers sharing a deployment-domain tag. Time is a
//! logical clock advanced by the caller.

use crate::codec::{self, AuthKind, Digest};
use crate::proofsys::{self, ClaimPublicInputs, MockBackend, PartyKey, Proof};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

pub type IntentId = [u8; 32];

/// A 20-byte simulated account address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(Address(bytes.try_into().ok()?))
    }
}

impl std::fmt::Debug for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

/// Stored lifecycle status. `Expired` is a derived predicate
/// (`Funded` and past expiry), not a stored state; see [`IntentMeta::effective_status`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Created,
    Funded,
    Claimed,
    Expired,
    Refunded,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Created => "CREATED",
            Status::Funded => "FUNDED",
            Status::Claimed => "CLAIMED",
            Status::Expired => "EXPIRED",
            Status::Refunded => "REFUNDED",
        };
        f.write_str(s)
    }
}

/// The on-chain intent tuple committed before funding. All fields are public.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntentMeta {
    pub intent_id: IntentId,
    pub rho: Digest,
    pub asset: String,
    pub amount: u64,
    pub epoch: u64,
    pub expiry: u64,
    pub refund_dest: Option<Address>,
    pub refund_commitment: Option<Digest>,
    pub status: Status,
    pub funded_balance: u64,
    pub created_at: u64,
    pub funded_at: Option<u64>,
    pub settled_at: Option<u64>,
    pub funded_block: Option<u64>,
}

impl IntentMeta {
    /// Lifecycle status with the derived post-expiry phase applied.
    pub fn effective_status(&self, now: u64) -> Status {
        if self.status == Status::Funded && now > self.expiry {
            Status::Expired
        } else {
            self.status
        }
    }
}

/// One public per-intent record of the observer feed. Carries no identifier,
/// no epoch handle, no binding-key commitment, and no directory data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObserverRecord {
    pub intent_id: String,
    pub alpha: String,
    pub rho: String,
    pub asset: String,
    pub amount: u64,
    pub epoch: u64,
    pub timestamp: u64,
    pub events: Vec<ObserverEvent>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObserverEvent {
    pub kind: String,
    pub time: u64,
    /// Claim-time disclosures: destination address and identity commitment
    /// become public at claim.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id_com: Option<String>,
}

/// Filter for [`ChainLedger::observer_view`].
#[derive(Clone, Debug, Default)]
pub struct ViewFilter {
    pub from: Option<u64>,
    pub to: Option<u64>,
    pub status: Option<Status>,
    /// Restrict to funded-but-unclaimed intents and strip claim-time
    /// disclosures.
    pub pre_claim: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("intent id already registered")]
    DuplicateIntent,
    #[error("intent not found")]
    NotFound,
    #[error("funded asset does not match the quoted asset")]
    AssetMismatch,
    #[error("sender account balance insufficient")]
    InsufficientSenderBalance,
    #[error("intent already settled")]
    AlreadySettled,
    #[error("claim publics do not match the stored intent tuple")]
    TupleMismatch,
    #[error("claim proof invalid")]
    ProofInvalid,
    #[error("nonce already used for this identity commitment")]
    NonceReused,
    #[error("intent expired")]
    Expired,
    #[error("operation not allowed in current status")]
    WrongStatus,
    #[error("intent not yet expired")]
    NotExpired,
    #[error("no refund path: refund commitment absent")]
    NoRefundPath,
    #[error("refund authorization invalid")]
    BadAuthorization,
    #[error("no authorization policy registered for refund destination")]
    UnknownRefundPolicy,
}

/// Receipt for a state-changing ledger operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Receipt {
    pub intent_id: IntentId,
    pub status: Status,
    pub block: u64,
}

/// A mempool transaction. Anything here may be copied and resubmitted by
/// another party before execution.
#[derive(Clone, Debug)]
pub enum Transaction {
    Claim {
        intent_id: IntentId,
        publics: ClaimPublicInputs,
        proof: Proof,
    },
    Refund {
        intent_id: IntentId,
        sig: [u8; 32],
    },
}

/// Deterministic simulated deposit address: first 20 bytes of the
/// domain-separated hash of (deployment tag, chain id, intent id). Stands in
/// for CREATE2/PDA derivation; a chain-exact adapter can replace it.
pub fn derive_address(dep_tag: &[u8], chain: &str, intent_id: &IntentId) -> Address {
    let mut payload = Vec::with_capacity(dep_tag.len() + chain.len() + 32);
    payload.extend_from_slice(dep_tag);
    payload.extend_from_slice(chain.as_bytes());
    payload.extend_from_slice(intent_id);
    let digest = codec::hash_internal("hfipay:sim-addr", &payload);
    Address(digest.as_bytes()[..20].try_into().unwrap())
}

/// One simulated chain. Transactions apply through a single writer; reads
/// are snapshots.
pub struct ChainLedger {
    pub chain_id: String,
    pub dep_tag: Vec<u8>,
    backend: MockBackend,
    accounts: HashMap<Address, HashMap<String, u64>>,
    intents: HashMap<IntentId, IntentMeta>,
    nonces: HashSet<(Digest, u64)>,
    observer_log: HashMap<IntentId, ObserverRecord>,
    observer_order: Vec<IntentId>,
    refund_policies: HashMap<Address, PartyKey>,
    mempool: Vec<Transaction>,
    pub now: u64,
    pub block_height: u64,
    confirmation_depth: u64,
}

impl ChainLedger {
    pub fn new(chain_id: &str, dep_tag: &[u8], backend: MockBackend) -> Self {
        ChainLedger {
            chain_id: chain_id.to_string(),
            dep_tag: dep_tag.to_vec(),
            backend,
            accounts: HashMap::new(),
            intents: HashMap::new(),
            nonces: HashSet::new(),
            observer_log: HashMap::new(),
            observer_order: Vec::new(),
            refund_policies: HashMap::new(),
            mempool: Vec::new(),
            now: 0,
            block_height: 0,
            confirmation_depth: 0,
        }
    }

    pub fn derive_address(&self, intent_id: &IntentId) -> Address {
        derive_address(&self.dep_tag, &self.chain_id, intent_id)
    }

    // ---- accounts ----------------------------------------------------

    pub fn credit(&mut self, account: Address, asset: &str, amount: u64) {
        *self
            .accounts
            .entry(account)
            .or_default()
            .entry(asset.to_string())
            .or_insert(0) += amount;
    }

    pub fn balance(&self, account: &Address, asset: &str) -> u64 {
        self.accounts
            .get(account)
            .and_then(|m| m.get(asset))
            .copied()
            .unwrap_or(0)
    }

    /// Remove units from an account, failing on insufficient balance. Used
    /// by funding and by bridge deposits.
    pub fn debit(&mut self, account: &Address, asset: &str, amount: u64) -> Result<(), LedgerError> {
        let balance = self
            .accounts
            .get_mut(account)
            .and_then(|m| m.get_mut(asset))
            .ok_or(LedgerError::InsufficientSenderBalance)?;
        if *balance < amount {
            return Err(LedgerError::InsufficientSenderBalance);
        }
        *balance -= amount;
        Ok(())
    }

    /// Register the authorization policy for a refund destination, so the
    /// refund verifier can rebuild and check the revealed signature.
    pub fn register_refund_policy(&mut self, dest: Address, key: PartyKey) {
        self.refund_policies.insert(dest, key);
    }

    /// Per-asset conservation quantity: account balances plus retained
    /// intent balances. Constant across any transaction sequence.
    pub fn total_supply(&self, asset: &str) -> u64 {
        let in_accounts: u64 = self
            .accounts
            .values()
            .filter_map(|m| m.get(asset))
            .sum();
        let in_intents: u64 = self
            .intents
            .values()
            .filter(|i| i.asset == asset)
            .map(|i| i.funded_balance)
            .sum();
        in_accounts + in_intents
    }

    // ---- clock and blocks --------------------------------------------

    pub fn advance_time(&mut self, secs: u64) {
        self.now += secs;
    }

    pub fn advance_blocks(&mut self, n: u64) {
        self.block_height += n;
    }

    pub fn set_confirmation_depth(&mut self, depth: u64) {
        self.confirmation_depth = depth;
    }

    /// Whether funding has reached the configured confirmation depth.
    pub fn confirmed_funded(&self, intent_id: &IntentId) -> bool {
        match self.intents.get(intent_id) {
            Some(meta) => match (meta.status, meta.funded_block) {
                (Status::Funded | Status::Claimed, Some(b)) => {
                    self.block_height >= b + self.confirmation_depth
                }
                _ => false,
            },
            None => false,
        }
    }

    // ---- intent lifecycle --------------------------------------------

    /// Commit the intent tuple. Emits the initial observer record.
    pub fn register_intent(
        &mut self,
        intent_id: IntentId,
        rho: Digest,
        asset: &str,
        amount: u64,
        epoch: u64,
        expiry: u64,
        refund_dest: Option<Address>,
        refund_commitment: Option<Digest>,
    ) -> Result<Receipt, LedgerError> {
        if self.intents.contains_key(&intent_id) {
            return Err(LedgerError::DuplicateIntent);
        }
        let meta = IntentMeta {
            intent_id,
            rho,
            asset: asset.to_string(),
            amount,
            epoch,
            expiry,
            refund_dest,
            refund_commitment,
            status: Status::Created,
            funded_balance: 0,
            created_at: self.now,
            funded_at: None,
            settled_at: None,
            funded_block: None,
        };
        let alpha = self.derive_address(&intent_id);
        self.observer_log.insert(
            intent_id,
            ObserverRecord {
                intent_id: hex::encode(intent_id),
                alpha: alpha.to_hex(),
                rho: rho.to_hex(),
                asset: asset.to_string(),
                amount,
                epoch,
                timestamp: self.now,
                events: vec![ObserverEvent {
                    kind: "registered".into(),
                    time: self.now,
                    dest: None,
                    id_com: None,
                }],
            },
        );
        self.observer_order.push(intent_id);
        self.intents.insert(intent_id, meta);
        Ok(Receipt {
            intent_id,
            status: Status::Created,
            block: self.block_height,
        })
    }

    /// Public read of the committed tuple; every field is observable.
    pub fn read_intent(&self, intent_id: &IntentId) -> Result<&IntentMeta, LedgerError> {
        self.intents.get(intent_id).ok_or(LedgerError::NotFound)
    }

    fn log_event(&mut self, intent_id: &IntentId, event: ObserverEvent) {
        if let Some(rec) = self.observer_log.get_mut(intent_id) {
            rec.events.push(event);
        }
    }

    /// Transfer quoted-asset units from a sender account into the intent's
    /// funded balance. Partial funding accumulates; the intent becomes
    /// FUNDED once the balance reaches the quoted amount.
    pub fn fund(
        &mut self,
        intent_id: &IntentId,
        from: &Address,
        asset: &str,
        amount: u64,
    ) -> Result<Receipt, LedgerError> {
        let meta = self.intents.get(intent_id).ok_or(LedgerError::NotFound)?;
        match meta.status {
            Status::Created => {}
            _ => return Err(LedgerError::AlreadySettled),
        }
        if meta.asset != asset {
            return Err(LedgerError::AssetMismatch);
        }
        self.debit(from, asset, amount)?;
        let now = self.now;
        let height = self.block_height;
        let meta = self.intents.get_mut(intent_id).unwrap();
        meta.funded_balance += amount;
        if meta.funded_balance >= meta.amount {
            meta.status = Status::Funded;
            meta.funded_at = Some(now);
            meta.funded_block = Some(height);
            let status = meta.status;
            self.log_event(
                intent_id,
                ObserverEvent {
                    kind: "funded".into(),
                    time: now,
                    dest: None,
                    id_com: None,
                },
            );
            return Ok(Receipt {
                intent_id: *intent_id,
                status,
                block: height,
            });
        }
        Ok(Receipt {
            intent_id: *intent_id,
            status: Status::Created,
            block: height,
        })
    }

    /// Verify a claim against the stored tuple and release exactly the
    /// quoted amount to the destination. Surplus stays in the intent.
    pub fn claim(
        &mut self,
        intent_id: &IntentId,
        publics: &ClaimPublicInputs,
        proof: &Proof,
    ) -> Result<Receipt, LedgerError> {
        let meta = self.intents.get(intent_id).ok_or(LedgerError::NotFound)?;
        match meta.status {
            Status::Funded => {}
            _ => return Err(LedgerError::WrongStatus),
        }
        if self.now > meta.expiry {
            return Err(LedgerError::Expired);
        }
        // stored tuple equality: (rho, a, e, v) plus the intent id itself
        if publics.intent_id != *intent_id
            || publics.rho != meta.rho
            || publics.asset != meta.asset
            || publics.epoch != meta.epoch
            || publics.amount != meta.amount
            || publics.expiry != meta.expiry
            || publics.chain != self.chain_id
            || publics.dep_tag != self.dep_tag
        {
            return Err(LedgerError::TupleMismatch);
        }
        if self.nonces.contains(&(publics.id_com, publics.nonce)) {
            return Err(LedgerError::NonceReused);
        }
        if !self.backend.verify_claim(proof, publics) {
            return Err(LedgerError::ProofInvalid);
        }
        let amount = meta.amount;
        let asset = meta.asset.clone();
        let dest_bytes: [u8; 20] = publics
            .dest
            .as_slice()
            .try_into()
            .map_err(|_| LedgerError::TupleMismatch)?;
        let dest = Address(dest_bytes);
        let now = self.now;
        let height = self.block_height;
        {
            let meta = self.intents.get_mut(intent_id).unwrap();
            meta.funded_balance -= amount;
            meta.status = Status::Claimed;
            meta.settled_at = Some(now);
        }
        self.credit(dest, &asset, amount);
        self.nonces.insert((publics.id_com, publics.nonce));
        self.log_event(
            intent_id,
            ObserverEvent {
                kind: "claimed".into(),
                time: now,
                dest: Some(dest.to_hex()),
                id_com: Some(publics.id_com.to_hex()),
            },
        );
        Ok(Receipt {
            intent_id: *intent_id,
            status: Status::Claimed,
            block: height,
        })
    }

    /// Execute a pre-authorized refund after expiry. Rebuilds the canonical
    /// refund message from the stored fields, verifies the revealed
    /// signature against the refund destination's policy and the stored
    /// commitment, and releases exactly the quoted amount.
    pub fn refund(&mut self, intent_id: &IntentId, sig: &[u8; 32]) -> Result<Receipt, LedgerError> {
        let meta = self.intents.get(intent_id).ok_or(LedgerError::NotFound)?;
        match meta.status {
            Status::Funded => {}
            _ => return Err(LedgerError::WrongStatus),
        }
        if self.now <= meta.expiry {
            return Err(LedgerError::NotExpired);
        }
        let commitment = meta.refund_commitment.ok_or(LedgerError::NoRefundPath)?;
        let dest = meta.refund_dest.ok_or(LedgerError::NoRefundPath)?;
        let policy = self
            .refund_policies
            .get(&dest)
            .ok_or(LedgerError::UnknownRefundPolicy)?;
        let message = codec::encode_auth_message(
            AuthKind::Refund,
            &codec::refund_fields(
                &self.dep_tag,
                &self.chain_id,
                &meta.asset,
                intent_id,
                &meta.rho,
                meta.amount,
                &dest.0,
                meta.expiry,
            ),
        )
        .map_err(|_| LedgerError::BadAuthorization)?;
        if !proofsys::verify_refund(sig, &commitment, policy, &message) {
            return Err(LedgerError::BadAuthorization);
        }
        let amount = meta.amount;
        let asset = meta.asset.clone();
        let now = self.now;
        let height = self.block_height;
        {
            let meta = self.intents.get_mut(intent_id).unwrap();
            meta.funded_balance -= amount;
            meta.status = Status::Refunded;
            meta.settled_at = Some(now);
        }
        self.credit(dest, &asset, amount);
        self.log_event(
            intent_id,
            ObserverEvent {
                kind: "refunded".into(),
                time: now,
                dest: None,
                id_com: None,
            },
        );
        Ok(Receipt {
            intent_id: *intent_id,
            status: Status::Refunded,
            block: height,
        })
    }

    // ---- observer feed -----------------------------------------------

    /// The public per-intent record stream, optionally filtered. With
    /// `pre_claim` set, claimed intents and claim-time disclosures are
    /// excluded, matching what an observer sees before any claim.
    pub fn observer_view(&self, filter: &ViewFilter) -> Vec<ObserverRecord> {
        self.observer_order
            .iter()
            .filter_map(|id| {
                let rec = self.observer_log.get(id)?;
                let meta = self.intents.get(id)?;
                if let Some(from) = filter.from {
                    if rec.timestamp < from {
                        return None;
                    }
                }
                if let Some(to) = filter.to {
                    if rec.timestamp > to {
                        return None;
                    }
                }
                let effective = meta.effective_status(self.now);
                if let Some(status) = filter.status {
                    if effective != status {
                        return None;
                    }
                }
                if filter.pre_claim {
                    if effective != Status::Funded {
                        return None;
                    }
                    let mut rec = rec.clone();
                    rec.events.retain(|e| e.kind != "claimed");
                    return Some(rec);
                }
                Some(rec.clone())
            })
            .collect()
    }

    /// Export the observer feed as JSON lines; the input format of the
    /// privacy harness.
    pub fn export_observer_jsonl(&self) -> String {
        self.observer_view(&ViewFilter::default())
            .iter()
            .map(|r| serde_json::to_string(r).expect("observer record serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    // ---- mempool -----------------------------------------------------

    pub fn mempool_submit(&mut self, tx: Transaction) {
        self.mempool.push(tx);
    }

    /// Adversarial copy: duplicate a pending transaction (optionally byte
    /// mutated by the caller) to the front of the queue.
    pub fn mempool_adversary_copy(&mut self, index: usize, mutate: Option<fn(&mut Transaction)>) {
        if let Some(tx) = self.mempool.get(index) {
            let mut copy = tx.clone();
            if let Some(f) = mutate {
                f(&mut copy);
            }
            self.mempool.insert(0, copy);
        }
    }

    pub fn mempool_reorder(&mut self, order: &[usize]) {
        let drained: Vec<_> = self.mempool.drain(..).collect();
        for &i in order {
            if let Some(tx) = drained.get(i) {
                self.mempool.push(tx.clone());
            }
        }
    }

    /// Drain and execute the mempool in queue order.
    pub fn execute_mempool(&mut self) -> Vec<Result<Receipt, LedgerError>> {
        let pending: Vec<_> = self.mempool.drain(..).collect();
        pending
            .into_iter()
            .map(|tx| match tx {
                Transaction::Claim {
                    intent_id,
                    publics,
                    proof,
                } => self.claim(&intent_id, &publics, &proof),
                Transaction::Refund { intent_id, sig } => self.refund(&intent_id, &sig),
            })
            .collect()
    }

    pub fn intent_ids(&self) -> Vec<IntentId> {
        self.observer_order.clone()
    }
}
