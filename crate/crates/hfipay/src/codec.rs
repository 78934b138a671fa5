//! Canonical byte encoding of authorization messages and the domain-separated
//! protocol hash `H`.
//!
//! Every party that builds or checks an authorization message -- the relay,
//! the ledger verifier, and the client workflows -- goes through this module,
//! so the byte layout here is the single source of truth. Each field
//! (including the domain tag itself) is serialized as a 4-byte big-endian
//! length prefix followed by the raw bytes, which makes the encoding
//! injective: distinct field sequences always produce distinct byte strings.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Output length of the protocol hash, in bytes.
pub const DIGEST_LEN: usize = 32;

/// Fields longer than this are rejected at encode time.
pub const MAX_FIELD_LEN: usize = 1 << 16;

/// A 32-byte protocol hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CodecError> {
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| CodecError::BadDigestLength(bytes.len()))?;
        Ok(Digest(arr))
    }

    pub fn from_hex(s: &str) -> Result<Self, CodecError> {
        let bytes = hex::decode(s).map_err(|_| CodecError::BadDigestLength(0))?;
        Self::from_slice(&bytes)
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl std::fmt::Display for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Authorization-domain labels. The set is closed; unknown labels are
/// rejected at construction. Implementation-local derivation seeds (address
/// derivation, identity KDF state, etc.) deliberately do not live here --
/// they are not replay-sensitive authorization messages and go through
/// [`hash_internal`] instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainTag {
    Bind,
    BindKey,
    BindAttest,
    Claim,
    CrossClaim,
    Refund,
}

impl DomainTag {
    pub const ALL: &'static [DomainTag] = &[
        DomainTag::Bind,
        DomainTag::BindKey,
        DomainTag::BindAttest,
        DomainTag::Claim,
        DomainTag::CrossClaim,
        DomainTag::Refund,
    ];

    pub const fn label(&self) -> &'static str {
        match self {
            DomainTag::Bind => "hfipay:bind",
            DomainTag::BindKey => "hfipay:bind-key",
            DomainTag::BindAttest => "hfipay:bind-attest",
            DomainTag::Claim => "hfipay:claim",
            DomainTag::CrossClaim => "hfipay:cross-claim",
            DomainTag::Refund => "hfipay:refund",
        }
    }

    pub fn parse(label: &str) -> Result<Self, CodecError> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.label() == label)
            .ok_or_else(|| CodecError::UnknownDomainTag(label.to_string()))
    }
}

/// Hash backend seam. The protocol hash is SHA-256 by default; a chain-native
/// primitive (e.g. keccak) can be swapped in behind this trait without
/// touching any message layout.
pub trait HashBackend {
    fn hash(&self, data: &[u8]) -> Digest;
    fn name(&self) -> &'static str;
}

/// Default backend: SHA-256.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sha256Backend;

impl HashBackend for Sha256Backend {
    fn hash(&self, data: &[u8]) -> Digest {
        let mut h = Sha256::new();
        h.update(data);
        Digest(h.finalize().into())
    }

    fn name(&self) -> &'static str {
        "sha256"
    }
}

fn hash_prefixed(backend: &impl HashBackend, label: &[u8], payload: &[u8]) -> Digest {
    // The tag is length-prefixed exactly like a field so that
    // tag || payload can never be ambiguous across labels.
    let mut buf = Vec::with_capacity(4 + label.len() + payload.len());
    buf.extend_from_slice(&(label.len() as u32).to_be_bytes());
    buf.extend_from_slice(label);
    buf.extend_from_slice(payload);
    backend.hash(&buf)
}

/// Domain-separated protocol hash `H(tag || payload)` under a chosen backend.
pub fn hash_domain_with(backend: &impl HashBackend, tag: DomainTag, payload: &[u8]) -> Digest {
    hash_prefixed(backend, tag.label().as_bytes(), payload)
}

/// Domain-separated protocol hash under the default SHA-256 backend.
pub fn hash_domain(tag: DomainTag, payload: &[u8]) -> Digest {
    hash_domain_with(&Sha256Backend, tag, payload)
}

/// Hash under an implementation-local label that is not part of the closed
/// authorization-tag namespace (KDF state, simulated address derivation, MAC
/// keying, ...). Same length-prefixed layout as [`hash_domain`].
pub fn hash_internal(label: &str, payload: &[u8]) -> Digest {
    hash_prefixed(&Sha256Backend, label.as_bytes(), payload)
}

/// A named, length-prefixed byte field of an authorization message.
///
/// Names are schema metadata used for order validation; only the bytes are
/// serialized. Decoding re-attaches names from the message kind's schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Field {
    pub fn new(name: &str, bytes: impl Into<Vec<u8>>) -> Self {
        Field {
            name: name.to_string(),
            bytes: bytes.into(),
        }
    }

    /// Integer fields (v, T_exp, n, e) serialize as 8-byte big-endian.
    pub fn u64(name: &str, value: u64) -> Self {
        Field::new(name, value.to_be_bytes().to_vec())
    }

    /// Chain ids and asset descriptors serialize as UTF-8 strings.
    pub fn str(name: &str, value: &str) -> Self {
        Field::new(name, value.as_bytes().to_vec())
    }

    pub fn digest(name: &str, value: &Digest) -> Self {
        Field::new(name, value.as_bytes().to_vec())
    }
}

/// The three authorization message kinds of the canonical field-order table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AuthKind {
    Claim,
    CrossClaim,
    Refund,
}

impl AuthKind {
    pub const fn tag(&self) -> DomainTag {
        match self {
            AuthKind::Claim => DomainTag::Claim,
            AuthKind::CrossClaim => DomainTag::CrossClaim,
            AuthKind::Refund => DomainTag::Refund,
        }
    }

    /// Canonical field order for this message kind.
    pub const fn field_names(&self) -> &'static [&'static str] {
        match self {
            AuthKind::Claim => &[
                "tag", "d_dep", "c", "a", "e", "intent_id", "rho", "v", "beta", "t_exp", "n",
            ],
            AuthKind::CrossClaim => &[
                "tag", "d_dep", "c_s", "a", "e", "c_d", "intent_id", "rho", "v", "beta", "t_exp",
                "n",
            ],
            AuthKind::Refund => &[
                "tag", "d_dep", "c", "a", "intent_id", "rho", "v", "gamma_a", "t_exp",
            ],
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "claim" => Some(AuthKind::Claim),
            "cross_claim" | "cross-claim" => Some(AuthKind::CrossClaim),
            "refund" => Some(AuthKind::Refund),
            _ => None,
        }
    }

    pub const fn as_str(&self) -> &'static str {
        match self {
            AuthKind::Claim => "claim",
            AuthKind::CrossClaim => "cross_claim",
            AuthKind::Refund => "refund",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unknown domain tag label {0:?}")]
    UnknownDomainTag(String),
    #[error("wrong field count: expected {expected}, got {got}")]
    WrongFieldCount { expected: usize, got: usize },
    #[error("wrong field order at index {index}: expected {expected:?}, got {got:?}")]
    WrongFieldOrder {
        index: usize,
        expected: String,
        got: String,
    },
    #[error("tag field does not match message kind (got {0:?})")]
    TagMismatch(String),
    #[error("field {name:?} exceeds maximum length ({len} bytes)")]
    OversizeField { name: String, len: usize },
    #[error("input truncated mid-field")]
    TruncatedInput,
    #[error("trailing bytes after final field")]
    TrailingBytes,
    #[error("digest must be {DIGEST_LEN} bytes, got {0}")]
    BadDigestLength(usize),
}

fn validate(kind: AuthKind, fields: &[Field]) -> Result<(), CodecError> {
    let names = kind.field_names();
    if fields.len() != names.len() {
        return Err(CodecError::WrongFieldCount {
            expected: names.len(),
            got: fields.len(),
        });
    }
    for (i, (field, expected)) in fields.iter().zip(names.iter()).enumerate() {
        if field.name != *expected {
            return Err(CodecError::WrongFieldOrder {
                index: i,
                expected: expected.to_string(),
                got: field.name.clone(),
            });
        }
        if field.bytes.len() > MAX_FIELD_LEN {
            return Err(CodecError::OversizeField {
                name: field.name.clone(),
                len: field.bytes.len(),
            });
        }
    }
    if fields[0].bytes != kind.tag().label().as_bytes() {
        return Err(CodecError::TagMismatch(
            String::from_utf8_lossy(&fields[0].bytes).into_owned(),
        ));
    }
    Ok(())
}

/// Encode an authorization message as the concatenation of length-prefixed
/// fields in the kind's canonical order. The first field must be the kind's
/// own domain tag.
pub fn encode_auth_message(kind: AuthKind, fields: &[Field]) -> Result<Vec<u8>, CodecError> {
    validate(kind, fields)?;
    let mut out = Vec::with_capacity(fields.iter().map(|f| 4 + f.bytes.len()).sum());
    for field in fields {
        out.extend_from_slice(&(field.bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&field.bytes);
    }
    Ok(out)
}

/// Decode an authorization message back to its ordered field list, attaching
/// names from the kind's schema. Inverse of [`encode_auth_message`].
pub fn decode_auth_message(kind: AuthKind, bytes: &[u8]) -> Result<Vec<Field>, CodecError> {
    let names = kind.field_names();
    let mut fields = Vec::with_capacity(names.len());
    let mut pos = 0usize;
    for name in names {
        if pos + 4 > bytes.len() {
            return Err(CodecError::TruncatedInput);
        }
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + len > bytes.len() {
            return Err(CodecError::TruncatedInput);
        }
        fields.push(Field::new(name, bytes[pos..pos + len].to_vec()));
        pos += len;
    }
    if pos != bytes.len() {
        return Err(CodecError::TrailingBytes);
    }
    validate(kind, &fields)?;
    Ok(fields)
}

/// Digest of an authorization message: `H` over the canonical encoding.
/// The encoding already carries the message's own domain tag as its first
/// length-prefixed field, so this matches `H(tag || d_dep || ...)`.
pub fn auth_message_digest(kind: AuthKind, fields: &[Field]) -> Result<Digest, CodecError> {
    let encoded = encode_auth_message(kind, fields)?;
    Ok(Sha256Backend.hash(&encoded))
}

/// Ordered field list for a same-chain claim message.
#[allow(clippy::too_many_arguments)]
pub fn claim_fields(
    dep_tag: &[u8],
    chain: &str,
    asset: &str,
    epoch: u64,
    intent_id: &[u8; 32],
    rho: &Digest,
    amount: u64,
    dest: &[u8],
    expiry: u64,
    nonce: u64,
) -> Vec<Field> {
    vec![
        Field::new("tag", DomainTag::Claim.label().as_bytes().to_vec()),
        Field::new("d_dep", dep_tag.to_vec()),
        Field::str("c", chain),
        Field::str("a", asset),
        Field::u64("e", epoch),
        Field::new("intent_id", intent_id.to_vec()),
        Field::digest("rho", rho),
        Field::u64("v", amount),
        Field::new("beta", dest.to_vec()),
        Field::u64("t_exp", expiry),
        Field::u64("n", nonce),
    ]
}

/// Ordered field list for a cross-VM claim message.
#[allow(clippy::too_many_arguments)]
pub fn cross_claim_fields(
    dep_tag: &[u8],
    source_chain: &str,
    asset: &str,
    epoch: u64,
    dest_chain: &str,
    intent_id: &[u8; 32],
    rho: &Digest,
    amount: u64,
    dest: &[u8],
    expiry: u64,
    nonce: u64,
) -> Vec<Field> {
    vec![
        Field::new("tag", DomainTag::CrossClaim.label().as_bytes().to_vec()),
        Field::new("d_dep", dep_tag.to_vec()),
        Field::str("c_s", source_chain),
        Field::str("a", asset),
        Field::u64("e", epoch),
        Field::str("c_d", dest_chain),
        Field::new("intent_id", intent_id.to_vec()),
        Field::digest("rho", rho),
        Field::u64("v", amount),
        Field::new("beta", dest.to_vec()),
        Field::u64("t_exp", expiry),
        Field::u64("n", nonce),
    ]
}

/// Ordered field list for a refund authorization message. Note the canonical
/// refund row carries no nonce.
#[allow(clippy::too_many_arguments)]
pub fn refund_fields(
    dep_tag: &[u8],
    chain: &str,
    asset: &str,
    intent_id: &[u8; 32],
    rho: &Digest,
    amount: u64,
    refund_dest: &[u8],
    expiry: u64,
) -> Vec<Field> {
    vec![
        Field::new("tag", DomainTag::Refund.label().as_bytes().to_vec()),
        Field::new("d_dep", dep_tag.to_vec()),
        Field::str("c", chain),
        Field::str("a", asset),
        Field::new("intent_id", intent_id.to_vec()),
        Field::digest("rho", rho),
        Field::u64("v", amount),
        Field::new("gamma_a", refund_dest.to_vec()),
        Field::u64("t_exp", expiry),
    ]
}

/// One line of the conformance vector file: a full input/output pair that
/// every role must reproduce byte-exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConformanceVector {
    pub kind: String,
    pub fields: Vec<VectorField>,
    pub encoded_hex: String,
    pub digest_hex: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorField {
    pub name: String,
    pub hex: String,
}

impl ConformanceVector {
    pub fn fields(&self) -> Result<Vec<Field>, CodecError> {
        self.fields
            .iter()
            .map(|f| {
                let bytes = hex::decode(&f.hex).map_err(|_| CodecError::TruncatedInput)?;
                Ok(Field::new(&f.name, bytes))
            })
            .collect()
    }

    pub fn kind(&self) -> Option<AuthKind> {
        AuthKind::parse(&self.kind)
    }
}

/// Check one conformance vector against this module's encoder and digest.
pub fn check_vector(vector: &ConformanceVector) -> Result<(), String> {
    let kind = vector
        .kind()
        .ok_or_else(|| format!("unknown message kind {:?}", vector.kind))?;
    let fields = vector.fields().map_err(|e| e.to_string())?;
    let encoded = encode_auth_message(kind, &fields).map_err(|e| e.to_string())?;
    if hex::encode(&encoded) != vector.encoded_hex {
        return Err(format!("encoding mismatch for kind {}", vector.kind));
    }
    let digest = auth_message_digest(kind, &fields).map_err(|e| e.to_string())?;
    if digest.to_hex() != vector.digest_hex {
        return Err(format!("digest mismatch for kind {}", vector.kind));
    }
    // Round trip must also hold for conformant external writers.
    let decoded = decode_auth_message(kind, &encoded).map_err(|e| e.to_string())?;
    if decoded != fields {
        return Err("decode(encode(f)) != f".into());
    }
    Ok(())
}
