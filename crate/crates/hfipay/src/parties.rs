//! Sender, recipient, and binding-issuer workflow clients. Each session owns
//! the verification duties of its role: the sender gates funding on quote and
//! tuple checks, the recipient rebuilds its identity material and proves the
//! claim relation, and the issuer only attests after an independent control
//! check.
//!
//! Sessions are independent values; parties share nothing except the ledger
//! and the relay endpoints.

use crate::codec::{self, Digest};
use crate::identity::{self, IdentityRoot};
use crate::ledger::{self, Address, ChainLedger, IntentId, LedgerError, Receipt};
use crate::proofsys::{
    self, BindingIssuer, ClaimClause, ClaimPublicInputs, ClaimWitness, ControlEvidence,
    MockBackend, PartyKey, Proof, ProofError, QuotePublicInputs, RefundAuthorization,
};
use crate::relay::{normalize, BindingMode, Quote};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartyError {
    #[error("attestation missing or does not verify over the quoted binding")]
    BadAttestation,
    #[error("quote proof missing or does not verify against the quoted binding")]
    BadQuoteProof,
    #[error("quote has expired")]
    StaleQuote,
    #[error("quoted address does not match local derivation")]
    AddressMismatch,
    #[error("quoted field {0} does not match the request")]
    FieldMismatch(&'static str),
    #[error("funding attempted before all required checks passed")]
    ChecksNotPassed,
    #[error("identity root does not produce the binding stored for this epoch")]
    EpochUnavailable,
    #[error("claim relation unsatisfied at clause {0}")]
    ProofFailed(ClaimClause),
    #[error("ledger error: {0}")]
    Ledger(#[from] LedgerError),
}

/// What the sender asked the relay for. Quoted fields are verified against
/// this before funding.
#[derive(Clone, Debug)]
pub struct PaymentRequest {
    pub identifier: String,
    pub asset: String,
    pub amount: u64,
    pub chain: String,
    pub refund_dest: Option<Address>,
    pub expiry: u64,
}

/// Sender-side state for one payment: the request, the checks it has passed,
/// and the artifacts produced along the way.
pub struct SenderSession {
    pub request: PaymentRequest,
    pub mode: BindingMode,
    dep_tag: Vec<u8>,
    issuer: BindingIssuer,
    backend: MockBackend,
    refund_key: Option<PartyKey>,
    pub accepted: Option<Quote>,
    pub refund_auth: Option<RefundAuthorization>,
    tuple_checked: bool,
    pub funding_receipt: Option<Receipt>,
}

impl SenderSession {
    pub fn new(
        request: PaymentRequest,
        mode: BindingMode,
        dep_tag: &[u8],
        issuer: BindingIssuer,
        backend: MockBackend,
        refund_key: Option<PartyKey>,
    ) -> Self {
        SenderSession {
            request,
            mode,
            dep_tag: dep_tag.to_vec(),
            issuer,
            backend,
            refund_key,
            accepted: None,
            refund_auth: None,
            tuple_checked: false,
            funding_receipt: None,
        }
    }

    /// Run the mode's quote checks and accept the quote if all pass.
    ///
    /// Verified-quote mode runs all five: attestation, quote proof,
    /// freshness, address recomputation, and field match. Baseline mode
    /// skips the first two — the sender trusts the relay for binding
    /// correctness — but still recomputes the address and compares fields.
    pub fn sender_verify_quote(&mut self, quote: &Quote, now: u64) -> Result<(), PartyError> {
        if self.mode == BindingMode::VerifiedQuote {
            let key_commitment = quote.key_commitment.ok_or(PartyError::BadAttestation)?;
            let att = quote.attestation.as_ref().ok_or(PartyError::BadAttestation)?;
            let norm = normalize(&self.request.identifier);
            if !self.issuer.verify_attestation(
                att,
                &norm,
                &key_commitment,
                quote.epoch,
                att.valid_until,
                now,
            ) {
                return Err(PartyError::BadAttestation);
            }
            let proof = quote.quote_proof.as_ref().ok_or(PartyError::BadQuoteProof)?;
            let publics = QuotePublicInputs {
                rho: quote.rho,
                key_commitment,
                intent_id: quote.intent_id,
            };
            if !self.backend.verify_quote(proof, &publics) {
                return Err(PartyError::BadQuoteProof);
            }
        }
        if now > quote.quote_expiry {
            return Err(PartyError::StaleQuote);
        }
        let local = ledger::derive_address(&self.dep_tag, &quote.chain, &quote.intent_id);
        if local != quote.alpha {
            return Err(PartyError::AddressMismatch);
        }
        if quote.asset != self.request.asset {
            return Err(PartyError::FieldMismatch("asset"));
        }
        if quote.amount != self.request.amount {
            return Err(PartyError::FieldMismatch("amount"));
        }
        if quote.chain != self.request.chain {
            return Err(PartyError::FieldMismatch("chain"));
        }
        if quote.expiry != self.request.expiry {
            return Err(PartyError::FieldMismatch("expiry"));
        }
        if quote.refund_dest != self.request.refund_dest {
            return Err(PartyError::FieldMismatch("refund_dest"));
        }
        self.accepted = Some(quote.clone());
        Ok(())
    }

    /// Read the committed tuple back from the ledger and compare it field by
    /// field with the accepted quote. Must pass before funding.
    pub fn sender_check_registered_tuple(&mut self, ledger: &ChainLedger) -> bool {
        let Some(quote) = &self.accepted else {
            return false;
        };
        let ok = match ledger.read_intent(&quote.intent_id) {
            Ok(meta) => {
                meta.rho == quote.rho
                    && meta.asset == quote.asset
                    && meta.amount == quote.amount
                    && meta.epoch == quote.epoch
                    && meta.expiry == quote.expiry
                    && meta.refund_dest == quote.refund_dest
                    && ledger.chain_id == quote.chain
            }
            Err(_) => false,
        };
        self.tuple_checked = ok;
        ok
    }

    /// Pre-authorize the refund path: sign the canonical refund message over
    /// the accepted quote. Returns `None` when the request carries no refund
    /// destination — the refund path is then absent by construction.
    pub fn sender_authorize_refund(&mut self) -> Option<&RefundAuthorization> {
        let quote = self.accepted.as_ref()?;
        let refund_dest = quote.refund_dest?;
        let key = self.refund_key.as_ref()?;
        let message = codec::encode_auth_message(
            codec::AuthKind::Refund,
            &codec::refund_fields(
                &self.dep_tag,
                &quote.chain,
                &quote.asset,
                &quote.intent_id,
                &quote.rho,
                quote.amount,
                &refund_dest.0,
                quote.expiry,
            ),
        )
        .expect("accepted quote yields a well-formed refund message");
        self.refund_auth = Some(proofsys::sign_refund(key, &message));
        self.refund_auth.as_ref()
    }

    /// The refund commitment to place on-chain at registration, if any.
    pub fn refund_commitment(&self) -> Option<Digest> {
        self.refund_auth.as_ref().map(|a| a.commitment)
    }

    /// Fund the accepted intent. Refuses with `ChecksNotPassed` unless quote
    /// verification and the tuple read-back check have both succeeded; no
    /// ledger call is made in that case.
    pub fn sender_fund(
        &mut self,
        ledger: &mut ChainLedger,
        from: &Address,
    ) -> Result<Receipt, PartyError> {
        let Some(quote) = self.accepted.clone() else {
            return Err(PartyError::ChecksNotPassed);
        };
        if !self.tuple_checked {
            return Err(PartyError::ChecksNotPassed);
        }
        let receipt = ledger.fund(&quote.intent_id, from, &quote.asset, quote.amount)?;
        self.funding_receipt = Some(receipt.clone());
        Ok(receipt)
    }
}

/// The on-chain tuple the recipient reads before claiming. The on-chain
/// values win over any retained quote transcript.
#[derive(Clone, Debug)]
pub struct IntentTuple {
    pub intent_id: IntentId,
    pub rho: Digest,
    pub asset: String,
    pub amount: u64,
    pub epoch: u64,
    pub expiry: u64,
    pub chain: String,
    pub dep_tag: Vec<u8>,
}

impl IntentTuple {
    pub fn from_ledger(ledger: &ChainLedger, intent_id: &IntentId) -> Result<Self, LedgerError> {
        let meta = ledger.read_intent(intent_id)?;
        Ok(IntentTuple {
            intent_id: *intent_id,
            rho: meta.rho,
            asset: meta.asset.clone(),
            amount: meta.amount,
            epoch: meta.epoch,
            expiry: meta.expiry,
            chain: ledger.chain_id.clone(),
            dep_tag: ledger.dep_tag.clone(),
        })
    }
}

/// Recipient-side state: the identity root and a fresh nonce per claim
/// attempt.
pub struct RecipientSession {
    root: IdentityRoot,
    backend: MockBackend,
    next_nonce: u64,
    /// Check that the root reproduces the stored binding before attempting
    /// the proof, surfacing `EpochUnavailable` instead of a clause failure.
    pub verify_binding_first: bool,
}

impl RecipientSession {
    pub fn new(root: IdentityRoot, backend: MockBackend) -> Self {
        RecipientSession {
            root,
            backend,
            next_nonce: 0,
            verify_binding_first: false,
        }
    }

    fn fresh_nonce(&mut self) -> u64 {
        let n = self.next_nonce;
        self.next_nonce += 1;
        n
    }

    /// Build and prove a claim against the on-chain tuple: re-derive the
    /// identity commitment and the epoch handle from the root, assemble the
    /// public inputs (same-chain or cross-chain depending on `dest_chain`),
    /// and prove the claim relation.
    pub fn recipient_build_claim(
        &mut self,
        tuple: &IntentTuple,
        dest: &[u8],
        dest_chain: Option<&str>,
    ) -> Result<(ClaimPublicInputs, Proof), PartyError> {
        let binding = identity::derive_epoch_binding(&self.root, tuple.epoch);
        if self.verify_binding_first {
            let mut payload = Vec::with_capacity(64);
            payload.extend_from_slice(binding.handle().as_bytes());
            payload.extend_from_slice(&tuple.intent_id);
            let expected_rho = codec::hash_domain(codec::DomainTag::Bind, &payload);
            if expected_rho != tuple.rho {
                return Err(PartyError::EpochUnavailable);
            }
        }
        let publics = ClaimPublicInputs {
            id_com: identity::derive_commitment(&self.root, identity::DOMAIN_ID).id_com,
            rho: tuple.rho,
            asset: tuple.asset.clone(),
            epoch: tuple.epoch,
            intent_id: tuple.intent_id,
            amount: tuple.amount,
            dest: dest.to_vec(),
            expiry: tuple.expiry,
            nonce: self.fresh_nonce(),
            dep_tag: tuple.dep_tag.clone(),
            chain: tuple.chain.clone(),
            dest_chain: dest_chain.map(str::to_string),
        };
        let witness = ClaimWitness {
            root: &self.root,
            handle: *binding.handle(),
        };
        let proof = self
            .backend
            .prove_claim(&witness, &publics)
            .map_err(|e| match e {
                ProofError::ClaimUnsatisfied(clause) => PartyError::ProofFailed(clause),
                ProofError::QuoteUnsatisfied => PartyError::ProofFailed(ClaimClause::Commitment),
            })?;
        Ok((publics, proof))
    }
}

/// Run the issuer's independent control check for an identifier. The
/// evidence is what `issue_attestation` later demands; a relay assertion is
/// never a substitute.
pub fn issuer_run_otp(issuer: &BindingIssuer, identifier: &str, now: u64) -> ControlEvidence {
    issuer.run_otp(&normalize(identifier), now)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{derive_commitment, derive_epoch_binding, DOMAIN_ID};
    use crate::relay::{MaliceFlags, QuoteMutation, Relay, RelayConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const DEP: &[u8] = b"dep-1";

    struct Setup {
        relay: Relay,
        ledger: ChainLedger,
        root: IdentityRoot,
        token: String,
    }

    fn setup(mode: BindingMode, malice: MaliceFlags) -> Setup {
        let backend = MockBackend::from_seed(42);
        let issuer = BindingIssuer::from_seed(7);
        let mut relay = Relay::new(
            RelayConfig {
                malice,
                ..RelayConfig::default()
            },
            backend.clone(),
            issuer.clone(),
            ChaCha20Rng::seed_from_u64(5),
        );
        relay.dep_tag_for_quotes = DEP.to_vec();
        let ledger = ChainLedger::new("evm-1", DEP, backend);
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let binding = derive_epoch_binding(&root, 9);
        let attestation = if mode == BindingMode::VerifiedQuote {
            let evidence = issuer.run_otp("alice@example.com", 0);
            Some(
                issuer
                    .issue_attestation(
                        "alice@example.com",
                        &binding.key_commitment,
                        9,
                        1_000_000,
                        Some(&evidence),
                        0,
                    )
                    .unwrap(),
            )
        } else {
            None
        };
        relay
            .enroll(
                "alice@example.com",
                derive_commitment(&root, DOMAIN_ID).id_com,
                &binding,
                mode,
                attestation,
            )
            .unwrap();
        let token = relay.register_sender("sender-a");
        Setup {
            relay,
            ledger,
            root,
            token,
        }
    }

    fn request() -> PaymentRequest {
        PaymentRequest {
            identifier: "alice@example.com".into(),
            asset: "ETH".into(),
            amount: 1000,
            chain: "evm-1".into(),
            refund_dest: Some(Address([0xAB; 20])),
            expiry: 10_000,
        }
    }

    fn quote_request(r: &PaymentRequest) -> crate::relay::QuoteRequest {
        crate::relay::QuoteRequest {
            identifier: r.identifier.clone(),
            asset: r.asset.clone(),
            amount: r.amount,
            chain: r.chain.clone(),
            refund_dest: r.refund_dest,
            expiry: r.expiry,
        }
    }

    fn session(mode: BindingMode) -> SenderSession {
        SenderSession::new(
            request(),
            mode,
            DEP,
            BindingIssuer::from_seed(7),
            MockBackend::from_seed(42),
            Some(PartyKey::from_seed(99)),
        )
    }

    #[test]
    fn honest_verified_flow_end_to_end() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        sender.sender_authorize_refund().unwrap();
        s.relay
            .register_and_confirm(&quote, sender.refund_commitment(), &mut s.ledger)
            .unwrap();
        assert!(sender.sender_check_registered_tuple(&s.ledger));
        let from = Address([0x11; 20]);
        s.ledger.credit(from, "ETH", 1000);
        let receipt = sender.sender_fund(&mut s.ledger, &from).unwrap();
        assert_eq!(receipt.status, ledger::Status::Funded);

        let mut recipient = RecipientSession::new(s.root.clone(), MockBackend::from_seed(42));
        let tuple = IntentTuple::from_ledger(&s.ledger, &quote.intent_id).unwrap();
        let (publics, proof) = recipient
            .recipient_build_claim(&tuple, &[0x22; 20], None)
            .unwrap();
        let receipt = s.ledger.claim(&quote.intent_id, &publics, &proof).unwrap();
        assert_eq!(receipt.status, ledger::Status::Claimed);
        assert_eq!(s.ledger.balance(&Address([0x22; 20]), "ETH"), 1000);
    }

    #[test]
    fn substituted_rho_rejected_in_verified_mode() {
        let mut s = setup(
            BindingMode::VerifiedQuote,
            MaliceFlags {
                quote_mutation: Some(QuoteMutation::Rho),
                ..MaliceFlags::default()
            },
        );
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        assert_eq!(
            sender.sender_verify_quote(&quote, s.relay.now),
            Err(PartyError::BadQuoteProof)
        );
        assert!(sender.accepted.is_none());
    }

    #[test]
    fn every_quote_mutation_rejected_before_funding() {
        for &mutation in QuoteMutation::ALL {
            let mut s = setup(
                BindingMode::VerifiedQuote,
                MaliceFlags {
                    quote_mutation: Some(mutation),
                    ..MaliceFlags::default()
                },
            );
            let mut sender = session(BindingMode::VerifiedQuote);
            let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
            let verdict = sender.sender_verify_quote(&quote, s.relay.now);
            assert!(verdict.is_err(), "mutation {mutation:?} was accepted");
            assert!(sender.accepted.is_none());
            // the funding gate holds even if fund is attempted anyway
            let from = Address([0x11; 20]);
            s.ledger.credit(from, "ETH", 1000);
            assert_eq!(
                sender.sender_fund(&mut s.ledger, &from),
                Err(PartyError::ChecksNotPassed)
            );
        }
    }

    #[test]
    fn baseline_mode_misses_rho_substitution_but_catches_fields() {
        // rho substitution passes baseline checks: the paper's trust gap
        let mut s = setup(
            BindingMode::Baseline,
            MaliceFlags {
                quote_mutation: Some(QuoteMutation::Rho),
                ..MaliceFlags::default()
            },
        );
        let mut sender = session(BindingMode::Baseline);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        assert!(sender.sender_verify_quote(&quote, s.relay.now).is_ok());

        // but amount mutation is still caught
        let mut s = setup(
            BindingMode::Baseline,
            MaliceFlags {
                quote_mutation: Some(QuoteMutation::Amount),
                ..MaliceFlags::default()
            },
        );
        let mut sender = session(BindingMode::Baseline);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        assert_eq!(
            sender.sender_verify_quote(&quote, s.relay.now),
            Err(PartyError::FieldMismatch("amount"))
        );
    }

    #[test]
    fn stale_quote_rejected() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        s.relay.advance_time(15 * 60 + 1);
        assert_eq!(
            sender.sender_verify_quote(&quote, s.relay.now),
            Err(PartyError::StaleQuote)
        );
    }

    #[test]
    fn mutated_registration_fails_tuple_check() {
        let mut s = setup(
            BindingMode::VerifiedQuote,
            MaliceFlags {
                mutate_registered_tuple: true,
                ..MaliceFlags::default()
            },
        );
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        s.relay
            .register_and_confirm(&quote, None, &mut s.ledger)
            .unwrap();
        assert!(!sender.sender_check_registered_tuple(&s.ledger));
        let from = Address([0x11; 20]);
        s.ledger.credit(from, "ETH", 1000);
        assert_eq!(
            sender.sender_fund(&mut s.ledger, &from),
            Err(PartyError::ChecksNotPassed)
        );
    }

    #[test]
    fn missing_registration_fails_tuple_check() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        assert!(!sender.sender_check_registered_tuple(&s.ledger));
    }

    #[test]
    fn refund_auth_absent_without_refund_dest() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        sender.request.refund_dest = None;
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        assert!(sender.sender_authorize_refund().is_none());
        assert!(sender.refund_commitment().is_none());
    }

    #[test]
    fn refund_auth_verifies_against_rebuilt_message() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        let auth = sender.sender_authorize_refund().unwrap().clone();
        let key = PartyKey::from_seed(99);
        assert!(proofsys::verify_refund(
            &auth.sig,
            &auth.commitment,
            &key,
            &auth.message
        ));
    }

    #[test]
    fn wrong_root_fails_binding_clause() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        s.relay
            .register_and_confirm(&quote, None, &mut s.ledger)
            .unwrap();
        let tuple = IntentTuple::from_ledger(&s.ledger, &quote.intent_id).unwrap();

        let wrong = IdentityRoot::from_entropy([7; 32], [7; 32]);
        let mut imposter = RecipientSession::new(wrong.clone(), MockBackend::from_seed(42));
        assert_eq!(
            imposter.recipient_build_claim(&tuple, &[0x22; 20], None),
            Err(PartyError::ProofFailed(ClaimClause::Binding))
        );

        let mut early_check = RecipientSession::new(wrong, MockBackend::from_seed(42));
        early_check.verify_binding_first = true;
        assert_eq!(
            early_check.recipient_build_claim(&tuple, &[0x22; 20], None),
            Err(PartyError::EpochUnavailable)
        );
    }

    #[test]
    fn recovered_root_builds_identical_claim() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        s.relay
            .register_and_confirm(&quote, None, &mut s.ledger)
            .unwrap();
        let tuple = IntentTuple::from_ledger(&s.ledger, &quote.intent_id).unwrap();

        // same root bytes, as after passphrase recovery on a new device
        let recovered = s.root.clone();
        let mut a = RecipientSession::new(s.root.clone(), MockBackend::from_seed(42));
        let mut b = RecipientSession::new(recovered, MockBackend::from_seed(42));
        let (pa, proof_a) = a.recipient_build_claim(&tuple, &[0x22; 20], None).unwrap();
        let (pb, proof_b) = b.recipient_build_claim(&tuple, &[0x22; 20], None).unwrap();
        assert_eq!(pa.message_digest().unwrap(), pb.message_digest().unwrap());
        assert_eq!(proof_a.to_bytes(), proof_b.to_bytes());
    }

    #[test]
    fn nonces_are_fresh_per_attempt() {
        let mut s = setup(BindingMode::VerifiedQuote, MaliceFlags::default());
        let mut sender = session(BindingMode::VerifiedQuote);
        let quote = s.relay.create_quote(&s.token, &quote_request(&sender.request)).unwrap();
        sender.sender_verify_quote(&quote, s.relay.now).unwrap();
        s.relay
            .register_and_confirm(&quote, None, &mut s.ledger)
            .unwrap();
        let tuple = IntentTuple::from_ledger(&s.ledger, &quote.intent_id).unwrap();
        let mut r = RecipientSession::new(s.root.clone(), MockBackend::from_seed(42));
        let (p1, _) = r.recipient_build_claim(&tuple, &[0x22; 20], None).unwrap();
        let (p2, _) = r.recipient_build_claim(&tuple, &[0x22; 20], None).unwrap();
        assert_ne!(p1.nonce, p2.nonce);
    }

    #[test]
    fn otp_evidence_is_identifier_bound() {
        let issuer = BindingIssuer::from_seed(7);
        let evidence = issuer_run_otp(&issuer, " Alice@Example.COM", 50);
        // evidence for a normalized identifier attests that identifier only
        let ok = issuer.issue_attestation(
            "alice@example.com",
            &Digest([1; 32]),
            1,
            1000,
            Some(&evidence),
            50,
        );
        assert!(ok.is_ok());
        let other = issuer.issue_attestation(
            "bob@example.com",
            &Digest([1; 32]),
            1,
            1000,
            Some(&evidence),
            50,
        );
        assert!(other.is_err());
    }
}
