//! Quote and claim relations, a sound mock proof backend, binding
//! attestations, and the sender refund-authorization scheme.
//!
//! The backend checks each relation in the clear and then emits an
//! authenticator: a keyed MAC over the relation id and the canonical public
//! inputs under a simulator-held key. Verification re-MACs. This models
//! soundness and zero knowledge well enough for protocol testing; a real
//! SNARK backend slots in behind the same prove/verify contract.

use crate::codec::{self, AuthKind, Digest, DomainTag};
use crate::identity::{self, IdentityRoot};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relation identifiers for the proof objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Quote,
    Claim,
    CrossClaim,
}

impl Relation {
    const fn id_byte(&self) -> u8 {
        match self {
            Relation::Quote => 1,
            Relation::Claim => 2,
            Relation::CrossClaim => 3,
        }
    }

    fn from_id_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Relation::Quote),
            2 => Some(Relation::Claim),
            3 => Some(Relation::CrossClaim),
            _ => None,
        }
    }
}

/// Public inputs of the quote relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotePublicInputs {
    pub rho: Digest,
    pub key_commitment: Digest,
    pub intent_id: [u8; 32],
}

impl QuotePublicInputs {
    fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(96);
        out.extend_from_slice(self.rho.as_bytes());
        out.extend_from_slice(self.key_commitment.as_bytes());
        out.extend_from_slice(&self.intent_id);
        out
    }
}

/// Public inputs of the claim relation (same-chain and cross-VM). A
/// populated `dest_chain` selects the cross-claim message kind and field
/// order; `chain` then denotes the source chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimPublicInputs {
    pub id_com: Digest,
    pub rho: Digest,
    pub asset: String,
    pub epoch: u64,
    pub intent_id: [u8; 32],
    pub amount: u64,
    pub dest: Vec<u8>,
    pub expiry: u64,
    pub nonce: u64,
    pub dep_tag: Vec<u8>,
    pub chain: String,
    pub dest_chain: Option<String>,
}

impl ClaimPublicInputs {
    pub fn relation(&self) -> Relation {
        if self.dest_chain.is_some() {
            Relation::CrossClaim
        } else {
            Relation::Claim
        }
    }

    /// Rebuild the authorization message digest from the public fields via
    /// the canonical codec path. Fails if any field violates the encoding
    /// contract.
    pub fn message_digest(&self) -> Result<Digest, codec::CodecError> {
        match &self.dest_chain {
            None => codec::auth_message_digest(
                AuthKind::Claim,
                &codec::claim_fields(
                    &self.dep_tag,
                    &self.chain,
                    &self.asset,
                    self.epoch,
                    &self.intent_id,
                    &self.rho,
                    self.amount,
                    &self.dest,
                    self.expiry,
                    self.nonce,
                ),
            ),
            Some(dest_chain) => codec::auth_message_digest(
                AuthKind::CrossClaim,
                &codec::cross_claim_fields(
                    &self.dep_tag,
                    &self.chain,
                    &self.asset,
                    self.epoch,
                    dest_chain,
                    &self.intent_id,
                    &self.rho,
                    self.amount,
                    &self.dest,
                    self.expiry,
                    self.nonce,
                ),
            ),
        }
    }

    fn canonical_bytes(&self) -> Result<Vec<u8>, codec::CodecError> {
        // Bind every public field, id_com included, through the message
        // digest plus the commitment.
        let m = self.message_digest()?;
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(self.id_com.as_bytes());
        out.extend_from_slice(m.as_bytes());
        Ok(out)
    }
}

/// Opaque authorization object for a named relation over public inputs.
/// Verifies only against the exact publics it was created for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proof {
    pub relation: Relation,
    pub publics_hash: Digest,
    pub authenticator: [u8; 32],
}

impl Proof {
    /// Tagged binary form: relation id byte + 32 + 32 bytes.
    pub fn to_bytes(&self) -> [u8; 65] {
        let mut out = [0u8; 65];
        out[0] = self.relation.id_byte();
        out[1..33].copy_from_slice(self.publics_hash.as_bytes());
        out[33..65].copy_from_slice(&self.authenticator);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != 65 {
            return None;
        }
        Some(Proof {
            relation: Relation::from_id_byte(bytes[0])?,
            publics_hash: Digest::from_slice(&bytes[1..33]).ok()?,
            authenticator: bytes[33..65].try_into().ok()?,
        })
    }
}

/// Clause index for claim-relation failures, for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimClause {
    /// (a) the commitment does not open to the witness root
    Commitment,
    /// (b) the supplied handle is not the root's derivative for the epoch
    EpochHandle,
    /// (c) the blinded binding does not open to the handle and intent id
    Binding,
    /// (d) the authorization message cannot be rebuilt from the publics
    Authorization,
}

impl std::fmt::Display for ClaimClause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            ClaimClause::Commitment => 'a',
            ClaimClause::EpochHandle => 'b',
            ClaimClause::Binding => 'c',
            ClaimClause::Authorization => 'd',
        };
        write!(f, "{c}")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProofError {
    #[error("quote relation unsatisfied: witness does not open both hashes")]
    QuoteUnsatisfied,
    #[error("claim relation unsatisfied at clause ({0})")]
    ClaimUnsatisfied(ClaimClause),
}

fn mac(key: &[u8; 32], label: &str, data: &[u8]) -> [u8; 32] {
    let mut payload = Vec::with_capacity(32 + data.len());
    payload.extend_from_slice(key);
    payload.extend_from_slice(data);
    codec::hash_internal(label, &payload).0
}

/// Witness for the claim relation: the identity root (which opens the
/// commitment) and the epoch handle claimed to derive from it.
pub struct ClaimWitness<'a> {
    pub root: &'a IdentityRoot,
    pub handle: Digest,
}

/// The mock proof backend. The key is immutable after setup; prove and
/// verify are reentrant.
#[derive(Clone)]
pub struct MockBackend {
    key: [u8; 32],
}

impl MockBackend {
    pub fn from_key(key: [u8; 32]) -> Self {
        MockBackend { key }
    }

    pub fn from_seed(seed: u64) -> Self {
        let key = codec::hash_internal("hfipay:sim-backend", &seed.to_be_bytes()).0;
        MockBackend { key }
    }

    fn authenticate(&self, relation: Relation, publics_hash: &Digest) -> [u8; 32] {
        let mut data = Vec::with_capacity(33);
        data.push(relation.id_byte());
        data.extend_from_slice(publics_hash.as_bytes());
        mac(&self.key, "hfipay:sim-proof", &data)
    }

    /// Prove the quote relation: the witness handle must open both the key
    /// commitment and the blinded binding.
    pub fn prove_quote(
        &self,
        witness_handle: &Digest,
        publics: &QuotePublicInputs,
    ) -> Result<Proof, ProofError> {
        let expected_k = codec::hash_domain(DomainTag::BindKey, witness_handle.as_bytes());
        let mut bind_payload = Vec::with_capacity(64);
        bind_payload.extend_from_slice(witness_handle.as_bytes());
        bind_payload.extend_from_slice(&publics.intent_id);
        let expected_rho = codec::hash_domain(DomainTag::Bind, &bind_payload);
        if expected_k != publics.key_commitment || expected_rho != publics.rho {
            return Err(ProofError::QuoteUnsatisfied);
        }
        let publics_hash = codec::hash_internal("hfipay:sim-publics", &publics.canonical_bytes());
        Ok(Proof {
            relation: Relation::Quote,
            publics_hash,
            authenticator: self.authenticate(Relation::Quote, &publics_hash),
        })
    }

    pub fn verify_quote(&self, proof: &Proof, publics: &QuotePublicInputs) -> bool {
        if proof.relation != Relation::Quote {
            return false;
        }
        let publics_hash = codec::hash_internal("hfipay:sim-publics", &publics.canonical_bytes());
        proof.publics_hash == publics_hash
            && proof.authenticator == self.authenticate(Relation::Quote, &publics_hash)
    }

    /// Prove the four-clause claim relation.
    pub fn prove_claim(
        &self,
        witness: &ClaimWitness<'_>,
        publics: &ClaimPublicInputs,
    ) -> Result<Proof, ProofError> {
        // (a) commitment opening
        if identity::derive_commitment(witness.root, identity::DOMAIN_ID).id_com != publics.id_com
        {
            return Err(ProofError::ClaimUnsatisfied(ClaimClause::Commitment));
        }
        // (b) epoch-handle derivation
        let derived = identity::derive_epoch_binding(witness.root, publics.epoch);
        if *derived.handle() != witness.handle {
            return Err(ProofError::ClaimUnsatisfied(ClaimClause::EpochHandle));
        }
        // (c) blinded-binding opening
        let mut bind_payload = Vec::with_capacity(64);
        bind_payload.extend_from_slice(witness.handle.as_bytes());
        bind_payload.extend_from_slice(&publics.intent_id);
        if codec::hash_domain(DomainTag::Bind, &bind_payload) != publics.rho {
            return Err(ProofError::ClaimUnsatisfied(ClaimClause::Binding));
        }
        // (d) the authorization message must rebuild canonically
        let canonical = publics
            .canonical_bytes()
            .map_err(|_| ProofError::ClaimUnsatisfied(ClaimClause::Authorization))?;
        let relation = publics.relation();
        let publics_hash = codec::hash_internal("hfipay:sim-publics", &canonical);
        Ok(Proof {
            relation,
            publics_hash,
            authenticator: self.authenticate(relation, &publics_hash),
        })
    }

    pub fn verify_claim(&self, proof: &Proof, publics: &ClaimPublicInputs) -> bool {
        let relation = publics.relation();
        if proof.relation != relation {
            return false;
        }
        let canonical = match publics.canonical_bytes() {
            Ok(c) => c,
            Err(_) => return false,
        };
        let publics_hash = codec::hash_internal("hfipay:sim-publics", &canonical);
        proof.publics_hash == publics_hash
            && proof.authenticator == self.authenticate(relation, &publics_hash)
    }
}

/// Fresh challenge-response token proving identifier control, generated by
/// the issuer itself (simulated OTP). The relay cannot mint these because it
/// does not hold the issuer key.
#[derive(Clone, Debug)]
pub struct ControlEvidence {
    pub normalized_id: String,
    pub issued_at: u64,
    token: [u8; 32],
}

/// Attestation over (normalized identifier, key commitment, epoch, validity
/// horizon) under the issuer's key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attestation {
    pub normalized_id: String,
    pub key_commitment: Digest,
    pub epoch: u64,
    pub valid_until: u64,
    issuer_sig: [u8; 32],
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttestError {
    #[error("no issuer-generated control evidence for the identifier")]
    NoControlEvidence,
    #[error("control evidence older than the freshness window")]
    StaleEvidence,
}

/// OTP freshness window in logical seconds.
pub const OTP_FRESHNESS_SECS: u64 = 600;

/// The binding issuer: verifies identifier control independently of the
/// relay and signs attestations.
#[derive(Clone)]
pub struct BindingIssuer {
    key: [u8; 32],
}

impl BindingIssuer {
    pub fn from_seed(seed: u64) -> Self {
        BindingIssuer {
            key: codec::hash_internal("hfipay:sim-issuer", &seed.to_be_bytes()).0,
        }
    }

    /// Run the simulated OTP loop with the party controlling the identifier.
    pub fn run_otp(&self, normalized_id: &str, now: u64) -> ControlEvidence {
        let mut data = Vec::new();
        data.extend_from_slice(normalized_id.as_bytes());
        data.extend_from_slice(&now.to_be_bytes());
        ControlEvidence {
            normalized_id: normalized_id.to_string(),
            issued_at: now,
            token: mac(&self.key, "hfipay:sim-otp", &data),
        }
    }

    fn attest_payload(
        normalized_id: &str,
        key_commitment: &Digest,
        epoch: u64,
        valid_until: u64,
    ) -> Digest {
        let mut data = Vec::new();
        data.extend_from_slice(&(normalized_id.len() as u32).to_be_bytes());
        data.extend_from_slice(normalized_id.as_bytes());
        data.extend_from_slice(key_commitment.as_bytes());
        data.extend_from_slice(&epoch.to_be_bytes());
        data.extend_from_slice(&valid_until.to_be_bytes());
        codec::hash_domain(DomainTag::BindAttest, &data)
    }

    /// Issue an attestation, but only against fresh issuer-generated control
    /// evidence for exactly this identifier. A relay-presented key commitment
    /// without recipient OTP is rejected.
    pub fn issue_attestation(
        &self,
        normalized_id: &str,
        key_commitment: &Digest,
        epoch: u64,
        valid_until: u64,
        evidence: Option<&ControlEvidence>,
        now: u64,
    ) -> Result<Attestation, AttestError> {
        let evidence = evidence.ok_or(AttestError::NoControlEvidence)?;
        let mut data = Vec::new();
        data.extend_from_slice(evidence.normalized_id.as_bytes());
        data.extend_from_slice(&evidence.issued_at.to_be_bytes());
        let expected = mac(&self.key, "hfipay:sim-otp", &data);
        if evidence.normalized_id != normalized_id || evidence.token != expected {
            return Err(AttestError::NoControlEvidence);
        }
        if now.saturating_sub(evidence.issued_at) > OTP_FRESHNESS_SECS {
            return Err(AttestError::StaleEvidence);
        }
        let payload = Self::attest_payload(normalized_id, key_commitment, epoch, valid_until);
        Ok(Attestation {
            normalized_id: normalized_id.to_string(),
            key_commitment: *key_commitment,
            epoch,
            valid_until,
            issuer_sig: mac(&self.key, "hfipay:sim-attest", payload.as_bytes()),
        })
    }

    /// Verify an attestation against the exact expected tuple and the clock.
    pub fn verify_attestation(
        &self,
        att: &Attestation,
        expected_id: &str,
        expected_key: &Digest,
        expected_epoch: u64,
        expected_valid_until: u64,
        now: u64,
    ) -> bool {
        if att.normalized_id != expected_id
            || att.key_commitment != *expected_key
            || att.epoch != expected_epoch
            || att.valid_until != expected_valid_until
            || now > att.valid_until
        {
            return false;
        }
        let payload = Self::attest_payload(
            &att.normalized_id,
            &att.key_commitment,
            att.epoch,
            att.valid_until,
        );
        att.issuer_sig == mac(&self.key, "hfipay:sim-attest", payload.as_bytes())
    }
}

/// Per-party authorization credential standing in for a chain signature
/// scheme. Symmetric in the simulation: the verifier holds the same key.
#[derive(Clone)]
pub struct PartyKey {
    key: [u8; 32],
}

impl PartyKey {
    pub fn from_seed(seed: u64) -> Self {
        PartyKey {
            key: codec::hash_internal("hfipay:sim-party", &seed.to_be_bytes()).0,
        }
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 32] {
        mac(&self.key, "hfipay:sim-auth", message)
    }

    pub fn verify(&self, message: &[u8], sig: &[u8; 32]) -> bool {
        self.sign(message) == *sig
    }
}

/// Sender refund authorization: the signed canonical refund message plus the
/// on-chain commitment `h_ref = H(sig)`.
#[derive(Clone, Debug)]
pub struct RefundAuthorization {
    pub message: Vec<u8>,
    pub sig: [u8; 32],
    pub commitment: Digest,
}

pub fn sign_refund(key: &PartyKey, refund_message: &[u8]) -> RefundAuthorization {
    let sig = key.sign(refund_message);
    RefundAuthorization {
        message: refund_message.to_vec(),
        sig,
        commitment: codec::hash_internal("hfipay:sim-refund-com", &sig),
    }
}

/// True iff the signature is valid for the refund policy's key over the
/// rebuilt message and its hash equals the stored commitment.
pub fn verify_refund(
    sig: &[u8; 32],
    stored_commitment: &Digest,
    policy: &PartyKey,
    rebuilt_message: &[u8],
) -> bool {
    policy.verify(rebuilt_message, sig)
        && codec::hash_internal("hfipay:sim-refund-com", sig) == *stored_commitment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{derive_commitment, derive_epoch_binding, IdentityRoot, DOMAIN_ID};

    fn backend() -> MockBackend {
        MockBackend::from_seed(42)
    }

    fn quote_publics(handle: &Digest, intent_id: [u8; 32]) -> QuotePublicInputs {
        let mut payload = Vec::new();
        payload.extend_from_slice(handle.as_bytes());
        payload.extend_from_slice(&intent_id);
        QuotePublicInputs {
            rho: codec::hash_domain(DomainTag::Bind, &payload),
            key_commitment: codec::hash_domain(DomainTag::BindKey, handle.as_bytes()),
            intent_id,
        }
    }

    #[test]
    fn quote_completeness() {
        let root = IdentityRoot::from_entropy([1; 32], [2; 32]);
        let binding = derive_epoch_binding(&root, 3);
        let publics = quote_publics(binding.handle(), [7; 32]);
        let proof = backend().prove_quote(binding.handle(), &publics).unwrap();
        assert!(backend().verify_quote(&proof, &publics));
    }

    #[test]
    fn accomplice_handle_against_victim_key_fails() {
        let victim = derive_epoch_binding(&IdentityRoot::from_entropy([1; 32], [2; 32]), 3);
        let accomplice = derive_epoch_binding(&IdentityRoot::from_entropy([9; 32], [9; 32]), 3);
        // rho from the accomplice, K attested for the victim
        let mut publics = quote_publics(accomplice.handle(), [7; 32]);
        publics.key_commitment = victim.key_commitment;
        assert_eq!(
            backend().prove_quote(accomplice.handle(), &publics),
            Err(ProofError::QuoteUnsatisfied)
        );
    }

    #[test]
    fn quote_proof_binds_all_publics() {
        let root = IdentityRoot::from_entropy([1; 32], [2; 32]);
        let binding = derive_epoch_binding(&root, 3);
        let publics = quote_publics(binding.handle(), [7; 32]);
        let proof = backend().prove_quote(binding.handle(), &publics).unwrap();

        let mut mutated = publics.clone();
        mutated.rho.0[0] ^= 1;
        assert!(!backend().verify_quote(&proof, &mutated));
        let mut mutated = publics.clone();
        mutated.key_commitment.0[31] ^= 1;
        assert!(!backend().verify_quote(&proof, &mutated));
        let mut mutated = publics.clone();
        mutated.intent_id[5] ^= 1;
        assert!(!backend().verify_quote(&proof, &mutated));
    }

    fn claim_publics(root: &IdentityRoot, epoch: u64, intent_id: [u8; 32]) -> ClaimPublicInputs {
        let binding = derive_epoch_binding(root, epoch);
        let mut payload = Vec::new();
        payload.extend_from_slice(binding.handle().as_bytes());
        payload.extend_from_slice(&intent_id);
        ClaimPublicInputs {
            id_com: derive_commitment(root, DOMAIN_ID).id_com,
            rho: codec::hash_domain(DomainTag::Bind, &payload),
            asset: "ETH".into(),
            epoch,
            intent_id,
            amount: 1000,
            dest: vec![0x33; 20],
            expiry: 86_400,
            nonce: 1,
            dep_tag: b"dep-1".to_vec(),
            chain: "evm-1".into(),
            dest_chain: None,
        }
    }

    #[test]
    fn claim_completeness() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 5).handle(),
        };
        let proof = backend().prove_claim(&witness, &publics).unwrap();
        assert!(backend().verify_claim(&proof, &publics));
    }

    #[test]
    fn wrong_epoch_fails_clause_b_or_c() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        // handle for a different epoch than the public label
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 6).handle(),
        };
        assert_eq!(
            backend().prove_claim(&witness, &publics),
            Err(ProofError::ClaimUnsatisfied(ClaimClause::EpochHandle))
        );
        // right derivation but intent stored a different epoch
        let mut mutated = publics;
        mutated.epoch = 6;
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 6).handle(),
        };
        assert_eq!(
            backend().prove_claim(&witness, &mutated),
            Err(ProofError::ClaimUnsatisfied(ClaimClause::Binding))
        );
    }

    #[test]
    fn wrong_root_fails_clause_c() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let other = IdentityRoot::from_entropy([5; 32], [6; 32]);
        let mut publics_for_other = publics.clone();
        publics_for_other.id_com = derive_commitment(&other, DOMAIN_ID).id_com;
        let witness = ClaimWitness {
            root: &other,
            handle: *derive_epoch_binding(&other, 5).handle(),
        };
        assert_eq!(
            backend().prove_claim(&witness, &publics_for_other),
            Err(ProofError::ClaimUnsatisfied(ClaimClause::Binding))
        );
    }

    #[test]
    fn dest_mutation_after_proving_fails_verification() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 5).handle(),
        };
        let proof = backend().prove_claim(&witness, &publics).unwrap();
        let mut mutated = publics;
        mutated.dest = vec![0x44; 20];
        assert!(!backend().verify_claim(&proof, &mutated));
    }

    #[test]
    fn replayed_proof_with_new_nonce_fails() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 5).handle(),
        };
        let proof = backend().prove_claim(&witness, &publics).unwrap();
        let mut replay = publics;
        replay.nonce = 2;
        assert!(!backend().verify_claim(&proof, &replay));
    }

    #[test]
    fn cross_deployment_replay_fails() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 5).handle(),
        };
        let proof = backend().prove_claim(&witness, &publics).unwrap();
        let mut other_dep = publics;
        other_dep.dep_tag = b"dep-2".to_vec();
        assert!(!backend().verify_claim(&proof, &other_dep));
    }

    #[test]
    fn same_chain_proof_rejected_as_cross_claim() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 5).handle(),
        };
        let proof = backend().prove_claim(&witness, &publics).unwrap();
        let mut cross = publics;
        cross.dest_chain = Some("svm-1".into());
        assert!(!backend().verify_claim(&proof, &cross));
    }

    #[test]
    fn proof_roundtrips_through_tagged_binary() {
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let witness = ClaimWitness {
            root: &root,
            handle: *derive_epoch_binding(&root, 5).handle(),
        };
        let proof = backend().prove_claim(&witness, &publics).unwrap();
        assert_eq!(Proof::from_bytes(&proof.to_bytes()).unwrap(), proof);
    }

    #[test]
    fn attestation_requires_fresh_issuer_otp() {
        let issuer = BindingIssuer::from_seed(7);
        let k = Digest([0xAA; 32]);
        let evidence = issuer.run_otp("alice@example.com", 100);
        let att = issuer
            .issue_attestation("alice@example.com", &k, 3, 10_000, Some(&evidence), 150)
            .unwrap();
        assert!(issuer.verify_attestation(&att, "alice@example.com", &k, 3, 10_000, 200));

        // relay-presented key with no recipient OTP
        assert_eq!(
            issuer.issue_attestation("alice@example.com", &k, 3, 10_000, None, 150),
            Err(AttestError::NoControlEvidence)
        );
        // stale OTP
        assert_eq!(
            issuer.issue_attestation(
                "alice@example.com",
                &k,
                3,
                10_000,
                Some(&evidence),
                100 + OTP_FRESHNESS_SECS + 1
            ),
            Err(AttestError::StaleEvidence)
        );
        // evidence for a different identifier
        let other = issuer.run_otp("mallory@example.com", 100);
        assert_eq!(
            issuer.issue_attestation("alice@example.com", &k, 3, 10_000, Some(&other), 150),
            Err(AttestError::NoControlEvidence)
        );
    }

    #[test]
    fn attestation_binds_tuple_and_expiry() {
        let issuer = BindingIssuer::from_seed(7);
        let k = Digest([0xAA; 32]);
        let evidence = issuer.run_otp("alice@example.com", 100);
        let att = issuer
            .issue_attestation("alice@example.com", &k, 3, 10_000, Some(&evidence), 150)
            .unwrap();
        let other_k = Digest([0xBB; 32]);
        assert!(!issuer.verify_attestation(&att, "alice@example.com", &other_k, 3, 10_000, 200));
        assert!(!issuer.verify_attestation(&att, "alice@example.com", &k, 3, 10_000, 10_001));
    }

    #[test]
    fn refund_sign_and_verify() {
        let key = PartyKey::from_seed(9);
        let msg = b"refund message bytes".to_vec();
        let auth = sign_refund(&key, &msg);
        assert!(verify_refund(&auth.sig, &auth.commitment, &key, &msg));
        // altered message
        assert!(!verify_refund(&auth.sig, &auth.commitment, &key, b"other"));
        // commitment mismatch
        let wrong = Digest([0; 32]);
        assert!(!verify_refund(&auth.sig, &wrong, &key, &msg));
    }

    #[test]
    fn forging_without_backend_key_fails() {
        use rand::{RngCore, SeedableRng};
        let b = backend();
        let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
        let publics = claim_publics(&root, 5, [8; 32]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let mut auth = [0u8; 32];
            rng.fill_bytes(&mut auth);
            let mut ph = [0u8; 32];
            rng.fill_bytes(&mut ph);
            let forged = Proof {
                relation: Relation::Claim,
                publics_hash: Digest(ph),
                authenticator: auth,
            };
            assert!(!b.verify_claim(&forged, &publics));
        }
    }
}
