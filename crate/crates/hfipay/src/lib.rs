//! Desk-scale model of an identifier-routed, relay-assisted, non-custodial
//! payment protocol.
//!
//! A relay resolves a human-friendly identifier off-chain and commits only a
//! per-intent blinded binding plus the quoted payment tuple on-chain. The
//! recipient later proves, through a mock zero-knowledge backend, that the
//! funded intent's binding matches a handle derived from their deterministic
//! identity, releasing exactly the quoted amount to a chosen destination.
//!
//! Modules:
//! - [`codec`]: canonical message encoding and the domain-separated hash
//! - [`identity`]: deterministic recipient identity and epoch bindings
//! - [`proofsys`]: quote/claim relations, mock proof backend, attestations
//! - [`ledger`]: simulated per-chain ledger and intent lifecycle
//! - [`relay`]: off-chain directory, quotes, notifications, abuse controls
//! - [`parties`]: sender/recipient/issuer workflow clients
//! - [`crosschain`]: multi-VM addresses, bridge wrap/claim/unwrap
//! - [`harness`]: scenario runner, privacy games, attack experiments

pub mod codec;
pub mod crosschain;
pub mod harness;
pub mod identity;
pub mod ledger;
pub mod parties;
pub mod proofsys;
pub mod relay;
