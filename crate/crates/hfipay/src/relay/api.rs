//! In-process JSON request/response surface over the relay and its attached
//! ledgers. Each call is one JSON object in, one JSON object out, shaped so
//! the handler can later sit behind a real transport unchanged.
//!
//! Endpoints: `enroll`, `quote`, `register`, `notify-status`, `claim-relay`,
//! `refund-relay`, `admin/gc`, `admin/rotate`, `admin/dump`.

use super::{BindingMode, Quote, Relay, RelayError};
use crate::codec::Digest;
use crate::identity::EpochBinding;
use crate::ledger::{Address, ChainLedger, IntentId};
use crate::proofsys::{ClaimPublicInputs, Proof};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;

/// Attestation validity window granted on simulated enrollment.
const ATTESTATION_VALIDITY_SECS: u64 = 30 * 86_400;

/// The relay plus the ledgers it can read and submit to, exposed as a JSON
/// endpoint handler.
pub struct ApiServer {
    pub relay: Relay,
    pub ledgers: HashMap<String, ChainLedger>,
    issued_quotes: HashMap<IntentId, Quote>,
}

#[derive(Deserialize)]
struct Envelope {
    endpoint: String,
    #[serde(default)]
    body: Value,
}

#[derive(Deserialize)]
struct EnrollBody {
    identifier: String,
    id_com_hex: String,
    epoch: u64,
    handle_hex: String,
    mode: BindingMode,
}

#[derive(Deserialize)]
struct QuoteBody {
    sender_token: String,
    identifier: String,
    asset: String,
    amount: u64,
    chain: String,
    refund_dest_hex: Option<String>,
    expiry: u64,
}

#[derive(Deserialize)]
struct RegisterBody {
    intent_id_hex: String,
    refund_commitment_hex: Option<String>,
}

#[derive(Deserialize)]
struct IntentBody {
    chain: String,
    intent_id_hex: String,
}

#[derive(Deserialize)]
struct ClaimRelayBody {
    intent_id_hex: String,
    publics: ClaimPublicsWire,
    proof_hex: String,
}

#[derive(Deserialize)]
struct RefundRelayBody {
    chain: String,
    intent_id_hex: String,
    sig_hex: String,
}

#[derive(Deserialize)]
struct GcBody {
    chain: String,
}

#[derive(Deserialize)]
struct RotateBody {
    identifier: String,
    epoch: u64,
    handle_hex: String,
}

/// Hex-encoded wire form of the claim public inputs.
#[derive(Serialize, Deserialize)]
pub struct ClaimPublicsWire {
    pub id_com_hex: String,
    pub rho_hex: String,
    pub asset: String,
    pub epoch: u64,
    pub intent_id_hex: String,
    pub amount: u64,
    pub dest_hex: String,
    pub expiry: u64,
    pub nonce: u64,
    pub dep_tag_hex: String,
    pub chain: String,
    pub dest_chain: Option<String>,
}

impl ClaimPublicsWire {
    pub fn from_publics(p: &ClaimPublicInputs) -> Self {
        ClaimPublicsWire {
            id_com_hex: p.id_com.to_hex(),
            rho_hex: p.rho.to_hex(),
            asset: p.asset.clone(),
            epoch: p.epoch,
            intent_id_hex: hex::encode(p.intent_id),
            amount: p.amount,
            dest_hex: hex::encode(&p.dest),
            expiry: p.expiry,
            nonce: p.nonce,
            dep_tag_hex: hex::encode(&p.dep_tag),
            chain: p.chain.clone(),
            dest_chain: p.dest_chain.clone(),
        }
    }

    fn to_publics(&self) -> Result<ClaimPublicInputs, String> {
        Ok(ClaimPublicInputs {
            id_com: parse_digest(&self.id_com_hex)?,
            rho: parse_digest(&self.rho_hex)?,
            asset: self.asset.clone(),
            epoch: self.epoch,
            intent_id: parse_intent_id(&self.intent_id_hex)?,
            amount: self.amount,
            dest: hex::decode(&self.dest_hex).map_err(|e| e.to_string())?,
            expiry: self.expiry,
            nonce: self.nonce,
            dep_tag: hex::decode(&self.dep_tag_hex).map_err(|e| e.to_string())?,
            chain: self.chain.clone(),
            dest_chain: self.dest_chain.clone(),
        })
    }
}

fn parse_digest(s: &str) -> Result<Digest, String> {
    Digest::from_hex(s).map_err(|_| format!("bad digest hex: {s}"))
}

fn parse_intent_id(s: &str) -> Result<IntentId, String> {
    let bytes = hex::decode(s).map_err(|e| e.to_string())?;
    bytes
        .try_into()
        .map_err(|_| "intent id must be 32 bytes".to_string())
}

fn parse_address(s: &str) -> Result<Address, String> {
    Address::from_hex(s).ok_or_else(|| format!("bad address hex: {s}"))
}

fn quote_to_json(q: &Quote) -> Value {
    json!({
        "intent_id_hex": hex::encode(q.intent_id),
        "alpha_hex": q.alpha.to_hex(),
        "rho_hex": q.rho.to_hex(),
        "asset": q.asset,
        "amount": q.amount,
        "chain": q.chain,
        "epoch": q.epoch,
        "refund_dest_hex": q.refund_dest.map(|a| a.to_hex()),
        "expiry": q.expiry,
        "key_commitment_hex": q.key_commitment.map(|k| k.to_hex()),
        "binding_validity": q.binding_validity,
        "quote_proof_hex": q.quote_proof.as_ref().map(|p| hex::encode(p.to_bytes())),
        "quote_expiry": q.quote_expiry,
    })
}

fn ok(result: Value) -> Value {
    json!({ "ok": true, "result": result })
}

fn err(message: impl std::fmt::Display) -> Value {
    json!({ "ok": false, "error": message.to_string() })
}

impl ApiServer {
    pub fn new(relay: Relay) -> Self {
        ApiServer {
            relay,
            ledgers: HashMap::new(),
            issued_quotes: HashMap::new(),
        }
    }

    pub fn attach_ledger(&mut self, ledger: ChainLedger) {
        self.ledgers.insert(ledger.chain_id.clone(), ledger);
    }

    /// Out-of-band sender onboarding; returns the API token used by `quote`.
    pub fn register_sender(&mut self, sender: &str) -> String {
        self.relay.register_sender(sender)
    }

    /// Handle one JSON request string: `{"endpoint": ..., "body": {...}}`.
    pub fn handle(&mut self, request: &str) -> String {
        let response = match serde_json::from_str::<Envelope>(request) {
            Ok(envelope) => self.dispatch(&envelope.endpoint, envelope.body),
            Err(e) => err(format!("malformed request: {e}")),
        };
        response.to_string()
    }

    fn dispatch(&mut self, endpoint: &str, body: Value) -> Value {
        match endpoint {
            "enroll" => self.enroll(body),
            "quote" => self.quote(body),
            "register" => self.register(body),
            "notify-status" => self.notify_status(body),
            "claim-relay" => self.claim_relay(body),
            "refund-relay" => self.refund_relay(body),
            "admin/gc" => self.admin_gc(body),
            "admin/rotate" => self.admin_rotate(body),
            "admin/dump" => ok(serde_json::to_value(self.relay.dump_compromise()).unwrap()),
            other => err(format!("unknown endpoint: {other}")),
        }
    }

    fn enroll(&mut self, body: Value) -> Value {
        let body: EnrollBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let id_com = match parse_digest(&body.id_com_hex) {
            Ok(d) => d,
            Err(e) => return err(e),
        };
        let handle = match parse_digest(&body.handle_hex) {
            Ok(d) => d,
            Err(e) => return err(e),
        };
        let binding = EpochBinding::from_handle(body.epoch, handle);
        // In verified mode the enrollment call stands in for the recipient's
        // interactive session with the issuer: control check, then
        // attestation over the presented binding.
        let attestation = if body.mode == BindingMode::VerifiedQuote {
            let norm = super::normalize(&body.identifier);
            let now = self.relay.now;
            let evidence = self.relay.issuer_run_otp(&norm, now);
            match self.relay.issuer_issue_attestation(
                &norm,
                &binding.key_commitment,
                body.epoch,
                now + ATTESTATION_VALIDITY_SECS,
                Some(&evidence),
                now,
            ) {
                Ok(att) => Some(att),
                Err(e) => return err(e),
            }
        } else {
            None
        };
        match self
            .relay
            .enroll(&body.identifier, id_com, &binding, body.mode, attestation)
        {
            Ok(()) => ok(json!({ "identifier": super::normalize(&body.identifier) })),
            Err(e) => err(e),
        }
    }

    fn quote(&mut self, body: Value) -> Value {
        let body: QuoteBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let refund_dest = match body.refund_dest_hex.as_deref().map(parse_address) {
            Some(Ok(a)) => Some(a),
            Some(Err(e)) => return err(e),
            None => None,
        };
        let request = super::QuoteRequest {
            identifier: body.identifier,
            asset: body.asset,
            amount: body.amount,
            chain: body.chain,
            refund_dest,
            expiry: body.expiry,
        };
        match self.relay.create_quote(&body.sender_token, &request) {
            Ok(quote) => {
                let value = quote_to_json(&quote);
                self.issued_quotes.insert(quote.intent_id, quote);
                ok(value)
            }
            Err(e) => err(e),
        }
    }

    fn register(&mut self, body: Value) -> Value {
        let body: RegisterBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let intent_id = match parse_intent_id(&body.intent_id_hex) {
            Ok(id) => id,
            Err(e) => return err(e),
        };
        let refund_commitment = match body.refund_commitment_hex.as_deref().map(parse_digest) {
            Some(Ok(d)) => Some(d),
            Some(Err(e)) => return err(e),
            None => None,
        };
        let Some(quote) = self.issued_quotes.get(&intent_id).cloned() else {
            return err(RelayError::UnknownIntent);
        };
        let Some(ledger) = self.ledgers.get_mut(&quote.chain) else {
            return err(format!("no ledger attached for chain {}", quote.chain));
        };
        match self
            .relay
            .register_and_confirm(&quote, refund_commitment, ledger)
        {
            Ok(receipt) => ok(json!({
                "intent_id_hex": hex::encode(receipt.intent_id),
                "status": receipt.status.to_string(),
                "block": receipt.block,
            })),
            Err(e) => err(e),
        }
    }

    fn notify_status(&mut self, body: Value) -> Value {
        let body: IntentBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let intent_id = match parse_intent_id(&body.intent_id_hex) {
            Ok(id) => id,
            Err(e) => return err(e),
        };
        let Some(ledger) = self.ledgers.get(&body.chain) else {
            return err(format!("no ledger attached for chain {}", body.chain));
        };
        let notify_result = self.relay.notify(&intent_id, ledger);
        let status = ledger
            .read_intent(&intent_id)
            .map(|m| m.effective_status(ledger.now).to_string())
            .unwrap_or_else(|_| "UNKNOWN".to_string());
        match notify_result {
            Ok(()) => ok(json!({ "notified": true, "status": status })),
            Err(RelayError::NotFunded) => ok(json!({ "notified": false, "status": status })),
            Err(e) => err(e),
        }
    }

    fn claim_relay(&mut self, body: Value) -> Value {
        let body: ClaimRelayBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let intent_id = match parse_intent_id(&body.intent_id_hex) {
            Ok(id) => id,
            Err(e) => return err(e),
        };
        let publics = match body.publics.to_publics() {
            Ok(p) => p,
            Err(e) => return err(e),
        };
        let proof_bytes = match hex::decode(&body.proof_hex) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let Some(proof) = Proof::from_bytes(&proof_bytes) else {
            return err("malformed proof bytes");
        };
        let Some(ledger) = self.ledgers.get_mut(&publics.chain) else {
            return err(format!("no ledger attached for chain {}", publics.chain));
        };
        match self
            .relay
            .submit_claim_for(&intent_id, &publics, &proof, ledger)
        {
            Ok(receipt) => ok(json!({
                "intent_id_hex": hex::encode(receipt.intent_id),
                "status": receipt.status.to_string(),
                "block": receipt.block,
            })),
            Err(e) => err(e),
        }
    }

    fn refund_relay(&mut self, body: Value) -> Value {
        let body: RefundRelayBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let intent_id = match parse_intent_id(&body.intent_id_hex) {
            Ok(id) => id,
            Err(e) => return err(e),
        };
        let sig_bytes = match hex::decode(&body.sig_hex) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let sig: [u8; 32] = match sig_bytes.try_into() {
            Ok(s) => s,
            Err(_) => return err("signature must be 32 bytes"),
        };
        let Some(ledger) = self.ledgers.get_mut(&body.chain) else {
            return err(format!("no ledger attached for chain {}", body.chain));
        };
        match self.relay.submit_refund_for(&intent_id, &sig, ledger) {
            Ok(receipt) => ok(json!({
                "intent_id_hex": hex::encode(receipt.intent_id),
                "status": receipt.status.to_string(),
                "block": receipt.block,
            })),
            Err(e) => err(e),
        }
    }

    fn admin_gc(&mut self, body: Value) -> Value {
        let body: GcBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let Some(ledger) = self.ledgers.get(&body.chain) else {
            return err(format!("no ledger attached for chain {}", body.chain));
        };
        let purged = self.relay.gc_unfunded(ledger);
        ok(json!({ "purged": purged }))
    }

    fn admin_rotate(&mut self, body: Value) -> Value {
        let body: RotateBody = match serde_json::from_value(body) {
            Ok(b) => b,
            Err(e) => return err(e),
        };
        let handle = match parse_digest(&body.handle_hex) {
            Ok(d) => d,
            Err(e) => return err(e),
        };
        let binding = EpochBinding::from_handle(body.epoch, handle);
        let norm = super::normalize(&body.identifier);
        let verified = self
            .relay
            .directory_entry(&norm)
            .map(|e| e.mode == BindingMode::VerifiedQuote)
            .unwrap_or(false);
        let attestation = if verified {
            let now = self.relay.now;
            let evidence = self.relay.issuer_run_otp(&norm, now);
            match self.relay.issuer_issue_attestation(
                &norm,
                &binding.key_commitment,
                body.epoch,
                now + ATTESTATION_VALIDITY_SECS,
                Some(&evidence),
                now,
            ) {
                Ok(att) => Some(att),
                Err(e) => return err(e),
            }
        } else {
            None
        };
        match self.relay.rotate_epoch(&body.identifier, &binding, attestation) {
            Ok(()) => ok(json!({ "epoch": body.epoch })),
            Err(e) => err(e),
        }
    }
}
