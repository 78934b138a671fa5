//! Cross-chain settlement: deterministic per-VM address derivation, a bridge
//! with an explicit deposit-verification trust boundary, wrap/lock of source
//! assets, cross-chain claims over the stored tuple, destination-form
//! resolution on unwrap, and source-side refunds.
//!
//! Wrapped units are conserved: minted minus burned always equals the sum of
//! outstanding locks, and a faulty bridge that mints without a matching
//! deposit is flagged rather than hidden.

use crate::codec::{self, Digest};
use crate::ledger::{Address, ChainLedger, IntentId, LedgerError};
use crate::proofsys::{self, ClaimPublicInputs, MockBackend, PartyKey, Proof};
use sha2::{Digest as _, Sha256};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Supported virtual-machine families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Vm {
    Evm,
    Svm,
    Bvm,
    Native,
}

/// A VM-specific deposit address derived from an identity commitment:
/// 20 bytes for EVM (the tail of the digest), 32 bytes otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VmAddress {
    pub vm: Vm,
    pub bytes: Vec<u8>,
}

impl VmAddress {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

/// Derive the deposit address for a VM family from an identity commitment.
///
/// Raw SHA-256 over `"<family>:" || id_com`, independent of the protocol's
/// configurable hash: EVM keeps bytes 12..32, SVM and BVM keep all 32, and
/// the native form is the commitment itself.
pub fn derive_vm_address(vm: Vm, id_com: &Digest) -> VmAddress {
    let labeled = |label: &str| -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(label.as_bytes());
        h.update(b":");
        h.update(id_com.as_bytes());
        h.finalize().into()
    };
    let bytes = match vm {
        Vm::Evm => labeled("evm")[12..32].to_vec(),
        Vm::Svm => labeled("svm").to_vec(),
        Vm::Bvm => labeled("bvm").to_vec(),
        Vm::Native => id_com.as_bytes().to_vec(),
    };
    VmAddress { vm, bytes }
}

/// Map a chain id to its VM family by prefix: `evm-*`, `svm-*`, `bvm-*`;
/// anything else is its own native family.
pub fn vm_of_chain(chain: &str) -> Vm {
    match chain.split('-').next() {
        Some("evm") => Vm::Evm,
        Some("svm") => Vm::Svm,
        Some("bvm") => Vm::Bvm,
        _ => Vm::Native,
    }
}

/// Whether the bridge's deposit verifier actually checks the source chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BridgeHonesty {
    Honest,
    Faulty,
}

/// Proof-of-deposit issued by the bridge's verifier. Single-use.
#[derive(Clone, Debug)]
pub struct DepositAttestation {
    pub source_chain: String,
    pub asset: String,
    pub amount: u64,
    serial: u64,
    mac: Digest,
}

/// Lifecycle of a wrapped lock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LockStatus {
    Locked,
    Claimed { dest_chain: String, dest: Vec<u8> },
    Released,
    Refunded,
}

/// Wrapped units locked against one intent, carrying the tuple the
/// cross-claim is verified against.
#[derive(Clone, Debug)]
pub struct WrappedLock {
    pub intent_id: IntentId,
    pub rho: Digest,
    pub source_chain: String,
    pub asset: String,
    pub epoch: u64,
    pub amount: u64,
    pub expiry: u64,
    pub refund_dest: Option<Address>,
    pub refund_commitment: Option<Digest>,
    pub status: LockStatus,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CrosschainError {
    #[error("deposit attestation invalid or already consumed")]
    BadAttestation,
    #[error("claim names a source chain different from the lock")]
    WrongSourceChain,
    #[error("public inputs do not match the stored tuple")]
    TupleMismatch,
    #[error("claim proof does not verify")]
    ProofInvalid,
    #[error("claim nonce already consumed")]
    NonceReused,
    #[error("lock has expired")]
    Expired,
    #[error("lock has not expired yet")]
    NotExpired,
    #[error("lock is not in the required state")]
    WrongStatus,
    #[error("unknown intent")]
    NotFound,
    #[error("no refund path was pre-authorized")]
    NoRefundPath,
    #[error("refund authorization does not verify")]
    BadAuthorization,
    #[error("source ledger error: {0}")]
    Ledger(#[from] LedgerError),
}

/// The bridge: verifies deposits, mints and burns wrapped units, and holds
/// the per-intent locks. One bridge instance per deployment.
pub struct Bridge {
    pub honesty: BridgeHonesty,
    pub dep_tag: Vec<u8>,
    backend: MockBackend,
    key: [u8; 32],
    locks: HashMap<IntentId, WrappedLock>,
    used_attestations: HashSet<u64>,
    next_serial: u64,
    nonces: HashSet<(Digest, u64)>,
    /// Per wrapped asset (keyed by source asset name).
    minted: HashMap<String, u64>,
    burned: HashMap<String, u64>,
    deposited: HashMap<String, u64>,
    pub now: u64,
}

impl Bridge {
    pub fn new(honesty: BridgeHonesty, dep_tag: &[u8], backend: MockBackend, seed: u64) -> Self {
        Bridge {
            honesty,
            dep_tag: dep_tag.to_vec(),
            backend,
            key: codec::hash_internal("hfipay:sim-bridge", &seed.to_be_bytes()).0,
            locks: HashMap::new(),
            used_attestations: HashSet::new(),
            next_serial: 0,
            nonces: HashSet::new(),
            minted: HashMap::new(),
            burned: HashMap::new(),
            deposited: HashMap::new(),
            now: 0,
        }
    }

    pub fn advance_time(&mut self, secs: u64) {
        self.now += secs;
    }

    fn attestation_mac(&self, source_chain: &str, asset: &str, amount: u64, serial: u64) -> Digest {
        let mut data = Vec::new();
        data.extend_from_slice(&self.key);
        data.extend_from_slice(source_chain.as_bytes());
        data.extend_from_slice(asset.as_bytes());
        data.extend_from_slice(&amount.to_be_bytes());
        data.extend_from_slice(&serial.to_be_bytes());
        codec::hash_internal("hfipay:sim-bridge-att", &data)
    }

    /// Verify a source-chain deposit and attest to it. Honest mode performs
    /// the debit on the source ledger and fails if it cannot; this is the
    /// external-chain trust boundary made executable.
    pub fn bridge_deposit(
        &mut self,
        source: &mut ChainLedger,
        from: &Address,
        asset: &str,
        amount: u64,
    ) -> Result<DepositAttestation, CrosschainError> {
        source.debit(from, asset, amount)?;
        self.deposited
            .entry(asset.to_string())
            .and_modify(|d| *d += amount)
            .or_insert(amount);
        Ok(self.attest(&source.chain_id, asset, amount))
    }

    /// A faulty verifier attesting to a deposit that never happened. Only
    /// available when the bridge is configured faulty; the conservation
    /// report flags the resulting gap.
    pub fn attest_without_deposit(
        &mut self,
        source_chain: &str,
        asset: &str,
        amount: u64,
    ) -> Result<DepositAttestation, CrosschainError> {
        if self.honesty != BridgeHonesty::Faulty {
            return Err(CrosschainError::BadAttestation);
        }
        Ok(self.attest(source_chain, asset, amount))
    }

    fn attest(&mut self, source_chain: &str, asset: &str, amount: u64) -> DepositAttestation {
        let serial = self.next_serial;
        self.next_serial += 1;
        DepositAttestation {
            source_chain: source_chain.to_string(),
            asset: asset.to_string(),
            amount,
            serial,
            mac: self.attestation_mac(source_chain, asset, amount, serial),
        }
    }

    /// Mint wrapped units against a deposit attestation and lock them under
    /// the intent tuple `(rho, c_s, a, e, v)`. Attestations are single-use.
    #[allow(clippy::too_many_arguments)]
    pub fn wrap_and_lock(
        &mut self,
        attestation: &DepositAttestation,
        intent_id: IntentId,
        rho: Digest,
        epoch: u64,
        expiry: u64,
        refund_dest: Option<Address>,
        refund_commitment: Option<Digest>,
    ) -> Result<&WrappedLock, CrosschainError> {
        let expected = self.attestation_mac(
            &attestation.source_chain,
            &attestation.asset,
            attestation.amount,
            attestation.serial,
        );
        if attestation.mac != expected || self.used_attestations.contains(&attestation.serial) {
            return Err(CrosschainError::BadAttestation);
        }
        if self.locks.contains_key(&intent_id) {
            return Err(CrosschainError::WrongStatus);
        }
        self.used_attestations.insert(attestation.serial);
        self.minted
            .entry(attestation.asset.clone())
            .and_modify(|m| *m += attestation.amount)
            .or_insert(attestation.amount);
        self.locks.insert(
            intent_id,
            WrappedLock {
                intent_id,
                rho,
                source_chain: attestation.source_chain.clone(),
                asset: attestation.asset.clone(),
                epoch,
                amount: attestation.amount,
                expiry,
                refund_dest,
                refund_commitment,
                status: LockStatus::Locked,
            },
        );
        Ok(&self.locks[&intent_id])
    }

    pub fn lock(&self, intent_id: &IntentId) -> Option<&WrappedLock> {
        self.locks.get(intent_id)
    }

    /// Verify a cross-chain claim against the stored tuple and bind release
    /// authority to the destination address on the named destination chain.
    pub fn cross_claim(
        &mut self,
        intent_id: &IntentId,
        publics: &ClaimPublicInputs,
        proof: &Proof,
    ) -> Result<(), CrosschainError> {
        let lock = self.locks.get(intent_id).ok_or(CrosschainError::NotFound)?;
        if lock.status != LockStatus::Locked {
            return Err(CrosschainError::WrongStatus);
        }
        if self.now > lock.expiry {
            return Err(CrosschainError::Expired);
        }
        let Some(dest_chain) = publics.dest_chain.clone() else {
            return Err(CrosschainError::TupleMismatch);
        };
        if publics.chain != lock.source_chain {
            return Err(CrosschainError::WrongSourceChain);
        }
        if publics.intent_id != *intent_id
            || publics.rho != lock.rho
            || publics.asset != lock.asset
            || publics.epoch != lock.epoch
            || publics.amount != lock.amount
            || publics.expiry != lock.expiry
            || publics.dep_tag != self.dep_tag
        {
            return Err(CrosschainError::TupleMismatch);
        }
        if self.nonces.contains(&(publics.id_com, publics.nonce)) {
            return Err(CrosschainError::NonceReused);
        }
        if !self.backend.verify_claim(proof, publics) {
            return Err(CrosschainError::ProofInvalid);
        }
        self.nonces.insert((publics.id_com, publics.nonce));
        let lock = self.locks.get_mut(intent_id).unwrap();
        lock.status = LockStatus::Claimed {
            dest_chain,
            dest: publics.dest.clone(),
        };
        Ok(())
    }

    /// Burn the wrapped units and release the resolved asset form on the
    /// destination chain: native when source and destination share a VM
    /// family, wrapped otherwise. The form comes from the stored asset, not
    /// from any claim input.
    pub fn unwrap_release(
        &mut self,
        intent_id: &IntentId,
        dest_ledger: &mut ChainLedger,
    ) -> Result<(Address, String), CrosschainError> {
        let lock = self.locks.get(intent_id).ok_or(CrosschainError::NotFound)?;
        let LockStatus::Claimed { dest_chain, dest } = lock.status.clone() else {
            return Err(CrosschainError::WrongStatus);
        };
        if dest_ledger.chain_id != dest_chain {
            return Err(CrosschainError::WrongStatus);
        }
        let dest_bytes: [u8; 20] = dest
            .as_slice()
            .try_into()
            .map_err(|_| CrosschainError::TupleMismatch)?;
        let dest_addr = Address(dest_bytes);
        let released_asset =
            if vm_of_chain(&lock.source_chain) == vm_of_chain(&dest_chain) {
                lock.asset.clone()
            } else {
                format!("w{}", lock.asset)
            };
        let amount = lock.amount;
        let asset = lock.asset.clone();
        self.burned
            .entry(asset)
            .and_modify(|b| *b += amount)
            .or_insert(amount);
        dest_ledger.credit(dest_addr, &released_asset, amount);
        self.locks.get_mut(intent_id).unwrap().status = LockStatus::Released;
        Ok((dest_addr, released_asset))
    }

    /// Source-side refund of an expired, unclaimed lock: burn the wrapped
    /// units and return the deposit to the pre-authorized destination on the
    /// source chain.
    pub fn cross_refund(
        &mut self,
        intent_id: &IntentId,
        sig: &[u8; 32],
        source_ledger: &mut ChainLedger,
        policy: &PartyKey,
    ) -> Result<Address, CrosschainError> {
        let lock = self.locks.get(intent_id).ok_or(CrosschainError::NotFound)?;
        match lock.status {
            LockStatus::Locked => {}
            _ => return Err(CrosschainError::WrongStatus),
        }
        if self.now <= lock.expiry {
            return Err(CrosschainError::NotExpired);
        }
        let dest = lock.refund_dest.ok_or(CrosschainError::NoRefundPath)?;
        let commitment = lock.refund_commitment.ok_or(CrosschainError::NoRefundPath)?;
        if source_ledger.chain_id != lock.source_chain {
            return Err(CrosschainError::WrongStatus);
        }
        let message = codec::encode_auth_message(
            codec::AuthKind::Refund,
            &codec::refund_fields(
                &self.dep_tag,
                &lock.source_chain,
                &lock.asset,
                intent_id,
                &lock.rho,
                lock.amount,
                &dest.0,
                lock.expiry,
            ),
        )
        .map_err(|_| CrosschainError::BadAuthorization)?;
        if !proofsys::verify_refund(sig, &commitment, policy, &message) {
            return Err(CrosschainError::BadAuthorization);
        }
        let amount = lock.amount;
        let asset = lock.asset.clone();
        self.burned
            .entry(asset.clone())
            .and_modify(|b| *b += amount)
            .or_insert(amount);
        source_ledger.credit(dest, &asset, amount);
        self.locks.get_mut(intent_id).unwrap().status = LockStatus::Refunded;
        Ok(dest)
    }

    /// Conservation of wrapped units: minted − burned must equal the sum of
    /// outstanding (still locked or claimed-not-released) lock amounts.
    pub fn conservation_holds(&self, asset: &str) -> bool {
        let minted = self.minted.get(asset).copied().unwrap_or(0);
        let burned = self.burned.get(asset).copied().unwrap_or(0);
        let outstanding: u64 = self
            .locks
            .values()
            .filter(|l| {
                l.asset == asset
                    && matches!(l.status, LockStatus::Locked | LockStatus::Claimed { .. })
            })
            .map(|l| l.amount)
            .sum();
        minted - burned == outstanding
    }

    /// Trust-boundary report: assets where the bridge minted more than was
    /// verifiably deposited. Empty for an honest bridge.
    pub fn deposit_violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .minted
            .iter()
            .filter(|(asset, minted)| {
                **minted > self.deposited.get(*asset).copied().unwrap_or(0)
            })
            .map(|(asset, _)| asset.clone())
            .collect();
        out.sort();
        out
    }
}
