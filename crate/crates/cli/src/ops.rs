//! Client operations. Each drives one protocol state machine over a channel
//! and files the result in the wallet.

use std::path::Path;

use poe_core::rng::{self, PoeRng};
use poe_core::{DisclosurePackage, KeyPair, PublicKey};
use poe_ledger::{LedgerApi, PoeRef};
use poe_protocol::session::new_session_id;
use poe_protocol::{
    ClientEngagement, ClientExhibition, ClientMachine, DisclosurePolicy, EngageOutcome, Envelope, ExhibitTarget,
    IssueMode, VerdictBody,
};
use poe_reward::Voucher;
use poe_transport::{run_channel, ConnectConfig, Dialer, Endpoint, RemoteLedger, RemoteRewards, TransportError};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::wallet::{poe_id, EntryMeta, Holding, WalletEntry, WalletStore};

/// Client randomness: fixed by `--seed`, otherwise fresh.
pub fn client_rng(seed: Option<u64>) -> PoeRng {
    match seed {
        Some(s) => rng::derive(s, "client"),
        None => rng::from_entropy(),
    }
}

/// Run a client machine on a fresh channel. The transcript is returned even
/// when the run fails part way.
pub fn drive<C: ClientMachine>(
    at: &Endpoint,
    config: &ConnectConfig,
    client: &mut C,
) -> (Result<C::Outcome, TransportError>, Vec<Envelope>) {
    let mut chan = match at.open(config) {
        Ok(c) => c,
        Err(e) => return (Err(e), Vec::new()),
    };
    let out = run_channel(client, &mut chan);
    (out, chan.take_transcript())
}

pub struct Engaged {
    pub id: String,
    pub outcome: EngageOutcome,
    pub transcript: Vec<Envelope>,
}

#[allow(clippy::too_many_arguments)]
pub fn engage(
    wallet: &WalletStore,
    es: &Endpoint,
    config: &ConnectConfig,
    data: Map<String, Value>,
    policy: DisclosurePolicy,
    mode: IssueMode,
    algorithm: &str,
    rng: PoeRng,
) -> Result<Engaged> {
    let mut client = ClientEngagement::new(data, policy, mode, rng).algorithm(algorithm);
    let (outcome, transcript) = drive(es, config, &mut client);
    let outcome = outcome?;
    let id = wallet.store_outcome(&outcome, mode)?;
    Ok(Engaged { id, outcome, transcript })
}

pub struct Exhibited {
    pub verdict: VerdictBody,
    pub transcript: Vec<Envelope>,
}

/// What a client shows for a wallet entry: the PoE itself, or its ledger
/// reference.
pub fn exhibit_target(entry: &WalletEntry) -> Result<ExhibitTarget> {
    match (entry.meta.mode, &entry.meta.poe_ref, entry.signed()) {
        (IssueMode::Ledger, Some(r), _) => Ok(ExhibitTarget::Ref(r.clone())),
        (_, _, Some(signed)) => Ok(ExhibitTarget::Poe(signed)),
        _ => Err(CliError::usage(format!("wallet entry {} holds neither a signed PoE nor a reference", entry.id()))),
    }
}

pub fn exhibition(entry: &WalletEntry, fields: &[String], rng: &mut PoeRng) -> Result<ClientExhibition> {
    let pkg: DisclosurePackage = entry.disclosure.select(fields.iter().map(String::as_str))?;
    let session = new_session_id(rng);
    Ok(ClientExhibition::new(exhibit_target(entry)?, entry.keys.clone(), entry.document.clone(), session).disclose(pkg))
}

pub fn exhibit(
    wallet: &WalletStore,
    tp: &Endpoint,
    config: &ConnectConfig,
    id: &str,
    fields: &[String],
    mut rng: PoeRng,
) -> Result<Exhibited> {
    let entry = wallet.load(id)?;
    let mut client = exhibition(&entry, fields, &mut rng)?;
    let (verdict, transcript) = drive(tp, config, &mut client);
    Ok(Exhibited { verdict: verdict?, transcript })
}

/// Refusals a transfer gets before anything reaches the ledger.
pub fn check_transferable(entry: &WalletEntry) -> Result<PoeRef> {
    if !entry.document.transferable {
        return Err(CliError::refused("NotTransferable", "the PoE is not transferable"));
    }
    if entry.meta.status != Holding::Held {
        return Err(CliError::refused("NotOwner", "the PoE was already transferred away"));
    }
    match (&entry.meta.poe_ref, entry.meta.mode) {
        (Some(r), IssueMode::Ledger) => Ok(r.clone()),
        _ => Err(CliError::refused("NotOnLedger", "only PoEs issued on a ledger can be transferred")),
    }
}

pub fn transfer(wallet: &WalletStore, ledger: &Endpoint, config: &ConnectConfig, id: &str, to: &PublicKey) -> Result<PoeRef> {
    let entry = wallet.load(id)?;
    let poe_ref = check_transferable(&entry)?;
    let remote = RemoteLedger::new(Dialer::new(ledger.clone(), config.clone()));
    let new_ref = poe_protocol::transfer_poe(&entry.keys, &poe_ref, to, &remote)?;
    wallet.mark_transferred(id, &new_ref)?;
    Ok(new_ref)
}

/// Make a key pair to receive a transfer with. The wallet keeps the pair;
/// the public half goes to the current owner.
pub fn new_receive_key(wallet: &WalletStore, algorithm: &str, rng: &mut PoeRng) -> Result<PublicKey> {
    let keys = KeyPair::generate_with(algorithm, rng)?;
    wallet.store_receive_key(&keys)?;
    Ok(keys.public)
}

/// Wallet entry for a PoE whose asset is now owned by `keys`.
pub fn received_entry(ledger: &dyn LedgerApi, poe_ref: &PoeRef, keys: KeyPair) -> Result<WalletEntry> {
    let tx = ledger.resolve(poe_ref)?;
    if ledger.head_owner(tx.asset_id())? != keys.public {
        return Err(CliError::refused("NotOwner", "the asset is owned by another key"));
    }
    let minted = ledger.minted_poe(poe_ref)?;
    let head = ledger.history(tx.asset_id())?.pop().expect("resolved asset has a history");
    Ok(WalletEntry {
        meta: EntryMeta {
            id: poe_id(&minted.document)?,
            mode: IssueMode::Ledger,
            signer_key_id: Some(minted.signer_key_id.clone()),
            poe_ref: Some(PoeRef::new(poe_ref.chain_id.clone(), head.tx_id)),
            status: Holding::Held,
        },
        document: minted.document,
        signature: Some(minted.signature),
        keys,
        disclosure: DisclosurePackage::default(),
        ticket: None,
    })
}

/// File a PoE transferred to one of the wallet's receive keys.
pub fn receive(wallet: &WalletStore, ledger: &dyn LedgerApi, poe_ref: &PoeRef) -> Result<String> {
    let tx = ledger.resolve(poe_ref)?;
    let keys = wallet.receive_key(&ledger.head_owner(tx.asset_id())?)?;
    let entry = received_entry(ledger, poe_ref, keys)?;
    wallet.save(&entry)?;
    Ok(entry.meta.id)
}

pub fn redeem(wallet: &WalletStore, rs: &Endpoint, config: &ConnectConfig, otc: &str) -> Result<Voucher> {
    let entry = wallet.find_by_otc(otc)?;
    let pwd = &entry.ticket.as_ref().expect("found by its ticket").pwd;
    let voucher = RemoteRewards::new(Dialer::new(rs.clone(), config.clone())).redeem(otc, pwd)?;
    wallet.put_voucher(&voucher)?;
    Ok(voucher)
}

pub fn spend(wallet: &WalletStore, rs: &Endpoint, config: &ConnectConfig, voucher_id: &str) -> Result<Voucher> {
    let voucher = RemoteRewards::new(Dialer::new(rs.clone(), config.clone())).spend(voucher_id)?;
    wallet.put_voucher(&voucher)?;
    Ok(voucher)
}

/// One canonical envelope per line.
pub fn write_transcript(path: &Path, transcript: &[Envelope]) -> Result<()> {
    let mut out = String::new();
    for env in transcript {
        out.push_str(std::str::from_utf8(&env.to_bytes()).expect("canonical JSON is UTF-8"));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
