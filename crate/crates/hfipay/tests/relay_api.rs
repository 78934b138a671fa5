//! End-to-end exercise of the relay's JSON endpoint surface: enrollment,
//! quoting, registration, funding-gated notification, relayed claim and
//! refund, garbage collection, epoch rotation, and the compromise dump.

use hfipay::codec::Digest;
use hfipay::identity::{derive_commitment, derive_epoch_binding, IdentityRoot, DOMAIN_ID};
use hfipay::ledger::{Address, ChainLedger};
use hfipay::parties::{IntentTuple, RecipientSession};
use hfipay::proofsys::{BindingIssuer, MockBackend, PartyKey};
use hfipay::relay::api::{ApiServer, ClaimPublicsWire};
use hfipay::relay::{Relay, RelayConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

const DEP: &[u8] = b"dep-1";

fn server() -> ApiServer {
    let mut relay = Relay::new(
        RelayConfig::default(),
        MockBackend::from_seed(42),
        BindingIssuer::from_seed(7),
        ChaCha20Rng::seed_from_u64(11),
    );
    relay.dep_tag_for_quotes = DEP.to_vec();
    let mut server = ApiServer::new(relay);
    server.attach_ledger(ChainLedger::new("evm-1", DEP, MockBackend::from_seed(42)));
    server
}

fn call(server: &mut ApiServer, endpoint: &str, body: Value) -> Value {
    let request = json!({ "endpoint": endpoint, "body": body }).to_string();
    serde_json::from_str(&server.handle(&request)).expect("handler returns JSON")
}

fn expect_ok(response: &Value) -> &Value {
    assert_eq!(
        response["ok"],
        Value::Bool(true),
        "endpoint failed: {response}"
    );
    &response["result"]
}

#[test]
fn full_payment_flow_over_json_endpoints() {
    let mut server = server();
    let root = IdentityRoot::from_entropy([3; 32], [4; 32]);
    let binding = derive_epoch_binding(&root, 4);

    // enroll in verified mode; the server runs the control check
    let enrolled = call(
        &mut server,
        "enroll",
        json!({
            "identifier": " Alice@Example.COM ",
            "id_com_hex": derive_commitment(&root, DOMAIN_ID).id_com.to_hex(),
            "epoch": 4,
            "handle_hex": binding.handle().to_hex(),
            "mode": "verified_quote",
        }),
    );
    assert_eq!(
        expect_ok(&enrolled)["identifier"],
        json!("alice@example.com")
    );

    // duplicate enrollment is refused
    let duplicate = call(
        &mut server,
        "enroll",
        json!({
            "identifier": "alice@example.com",
            "id_com_hex": derive_commitment(&root, DOMAIN_ID).id_com.to_hex(),
            "epoch": 4,
            "handle_hex": binding.handle().to_hex(),
            "mode": "verified_quote",
        }),
    );
    assert_eq!(duplicate["ok"], json!(false));

    // quote with a registered sender token
    let token = server.register_sender("sender-a");
    let quote = call(
        &mut server,
        "quote",
        json!({
            "sender_token": token,
            "identifier": "alice@example.com",
            "asset": "ETH",
            "amount": 1000,
            "chain": "evm-1",
            "refund_dest_hex": null,
            "expiry": 10_000,
        }),
    );
    let quote = expect_ok(&quote).clone();
    let intent_id_hex = quote["intent_id_hex"].as_str().unwrap().to_string();
    assert!(quote["quote_proof_hex"].is_string());
    assert!(quote["key_commitment_hex"].is_string());

    // a bad sender token is rejected
    let unauthenticated = call(
        &mut server,
        "quote",
        json!({
            "sender_token": "tok-invalid",
            "identifier": "alice@example.com",
            "asset": "ETH",
            "amount": 1,
            "chain": "evm-1",
            "refund_dest_hex": null,
            "expiry": 10_000,
        }),
    );
    assert_eq!(unauthenticated["ok"], json!(false));

    // register the tuple on-chain
    let registered = call(
        &mut server,
        "register",
        json!({ "intent_id_hex": intent_id_hex, "refund_commitment_hex": null }),
    );
    assert_eq!(expect_ok(&registered)["status"], json!("CREATED"));

    // not funded yet: notification is withheld
    let status = call(
        &mut server,
        "notify-status",
        json!({ "chain": "evm-1", "intent_id_hex": intent_id_hex }),
    );
    let result = expect_ok(&status);
    assert_eq!(result["notified"], json!(false));
    assert_eq!(result["status"], json!("CREATED"));

    // fund on the attached ledger
    let intent_id: [u8; 32] = hex::decode(&intent_id_hex).unwrap().try_into().unwrap();
    let from = Address([0x11; 20]);
    {
        let ledger = server.ledgers.get_mut("evm-1").unwrap();
        ledger.credit(from, "ETH", 1000);
        ledger.fund(&intent_id, &from, "ETH", 1000).unwrap();
    }
    let status = call(
        &mut server,
        "notify-status",
        json!({ "chain": "evm-1", "intent_id_hex": intent_id_hex }),
    );
    let result = expect_ok(&status);
    assert_eq!(result["notified"], json!(true));
    assert_eq!(result["status"], json!("FUNDED"));

    // recipient builds the claim locally and submits it through the relay
    let (publics, proof) = {
        let ledger = server.ledgers.get("evm-1").unwrap();
        let tuple = IntentTuple::from_ledger(ledger, &intent_id).unwrap();
        let mut recipient = RecipientSession::new(root.clone(), MockBackend::from_seed(42));
        recipient
            .recipient_build_claim(&tuple, &[0x22; 20], None)
            .unwrap()
    };
    let claimed = call(
        &mut server,
        "claim-relay",
        json!({
            "intent_id_hex": intent_id_hex,
            "publics": serde_json::to_value(ClaimPublicsWire::from_publics(&publics)).unwrap(),
            "proof_hex": hex::encode(proof.to_bytes()),
        }),
    );
    assert_eq!(expect_ok(&claimed)["status"], json!("CLAIMED"));
    assert_eq!(
        server
            .ledgers
            .get("evm-1")
            .unwrap()
            .balance(&Address([0x22; 20]), "ETH"),
        1000
    );

    // a second submission of the same claim is refused
    let replay = call(
        &mut server,
        "claim-relay",
        json!({
            "intent_id_hex": intent_id_hex,
            "publics": serde_json::to_value(ClaimPublicsWire::from_publics(&publics)).unwrap(),
            "proof_hex": hex::encode(proof.to_bytes()),
        }),
    );
    assert_eq!(replay["ok"], json!(false));
}

#[test]
fn refund_flow_and_admin_endpoints() {
    let mut server = server();
    let root = IdentityRoot::from_entropy([5; 32], [6; 32]);
    let binding = derive_epoch_binding(&root, 4);
    let enrolled = call(
        &mut server,
        "enroll",
        json!({
            "identifier": "bob@example.com",
            "id_com_hex": derive_commitment(&root, DOMAIN_ID).id_com.to_hex(),
            "epoch": 4,
            "handle_hex": binding.handle().to_hex(),
            "mode": "baseline",
        }),
    );
    expect_ok(&enrolled);

    let token = server.register_sender("sender-b");
    let gamma = Address([0xAB; 20]);
    let quote = call(
        &mut server,
        "quote",
        json!({
            "sender_token": token,
            "identifier": "bob@example.com",
            "asset": "ETH",
            "amount": 500,
            "chain": "evm-1",
            "refund_dest_hex": gamma.to_hex(),
            "expiry": 5_000,
        }),
    );
    let quote = expect_ok(&quote).clone();
    let intent_id_hex = quote["intent_id_hex"].as_str().unwrap().to_string();
    let intent_id: [u8; 32] = hex::decode(&intent_id_hex).unwrap().try_into().unwrap();

    // pre-authorize the refund out of band and register with its commitment
    let key = PartyKey::from_seed(99);
    let rho = Digest::from_hex(quote["rho_hex"].as_str().unwrap()).unwrap();
    let message = hfipay::codec::encode_auth_message(
        hfipay::codec::AuthKind::Refund,
        &hfipay::codec::refund_fields(
            DEP, "evm-1", "ETH", &intent_id, &rho, 500, &gamma.0, 5_000,
        ),
    )
    .unwrap();
    let auth = hfipay::proofsys::sign_refund(&key, &message);
    let registered = call(
        &mut server,
        "register",
        json!({
            "intent_id_hex": intent_id_hex,
            "refund_commitment_hex": auth.commitment.to_hex(),
        }),
    );
    expect_ok(&registered);

    let from = Address([0x11; 20]);
    {
        let ledger = server.ledgers.get_mut("evm-1").unwrap();
        ledger.register_refund_policy(gamma, key);
        ledger.credit(from, "ETH", 500);
        ledger.fund(&intent_id, &from, "ETH", 500).unwrap();
        ledger.advance_time(5_001);
    }
    let refunded = call(
        &mut server,
        "refund-relay",
        json!({
            "chain": "evm-1",
            "intent_id_hex": intent_id_hex,
            "sig_hex": hex::encode(auth.sig),
        }),
    );
    assert_eq!(expect_ok(&refunded)["status"], json!("REFUNDED"));
    assert_eq!(
        server.ledgers.get("evm-1").unwrap().balance(&gamma, "ETH"),
        500
    );

    // admin/rotate installs a new epoch binding
    let next = derive_epoch_binding(&root, 5);
    let rotated = call(
        &mut server,
        "admin/rotate",
        json!({
            "identifier": "bob@example.com",
            "epoch": 5,
            "handle_hex": next.handle().to_hex(),
        }),
    );
    assert_eq!(expect_ok(&rotated)["epoch"], json!(5));

    // admin/gc reports the number of purged unfunded records
    let gc = call(&mut server, "admin/gc", json!({ "chain": "evm-1" }));
    assert!(expect_ok(&gc)["purged"].is_u64());

    // admin/dump exposes directory state including both epochs
    let dump = call(&mut server, "admin/dump", json!({}));
    let directory = expect_ok(&dump)["directory"].as_array().unwrap();
    assert_eq!(directory.len(), 1);
    assert_eq!(directory[0]["epochs"].as_array().unwrap().len(), 2);

    // unknown endpoints and malformed requests fail cleanly
    let unknown = call(&mut server, "steal-funds", json!({}));
    assert_eq!(unknown["ok"], json!(false));
    let malformed: Value = serde_json::from_str(&server.handle("not json")).unwrap();
    assert_eq!(malformed["ok"], json!(false));
}
