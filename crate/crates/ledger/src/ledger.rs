//! The single-writer, totally ordered transaction log standing in for a
//! blockchain.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Mutex, RwLock};

use poe_core::digest::sha256_concat;
use poe_core::{Digest, PublicKey, TrustStore};

use crate::api::LedgerApi;
use crate::chain::{check_mint, check_transfer, verify_history};
use crate::error::{LedgerError, Result};
use crate::tx::{LedgerTransaction, PoeRef, TxBody, TxId, TxSubmission};

#[derive(Debug, Clone)]
struct AssetState {
    /// Indexes into `State::txs`, mint first.
    chain: Vec<usize>,
    owner: PublicKey,
    transferable: bool,
}

#[derive(Debug, Default)]
struct State {
    txs: Vec<LedgerTransaction>,
    by_id: HashMap<TxId, usize>,
    assets: HashMap<Digest, AssetState>,
    rolling: Digest,
}

impl State {
    fn head_of(&self, asset: &AssetState) -> &LedgerTransaction {
        &self.txs[*asset.chain.last().expect("asset chains start with a mint")]
    }
}

/// Fold one transaction into the running ledger digest.
fn roll(prev: &Digest, tx: &LedgerTransaction) -> Digest {
    sha256_concat(&[prev.as_bytes(), tx.tx_id.as_bytes(), &tx.height.to_be_bytes()])
}

pub struct Ledger {
    chain_id: String,
    minters: TrustStore,
    state: RwLock<State>,
    log: Option<Mutex<File>>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger").field("chain_id", &self.chain_id).field("len", &self.len()).finish()
    }
}

impl Ledger {
    /// In-memory ledger.
    pub fn new(chain_id: impl Into<String>, minters: TrustStore) -> Self {
        Self { chain_id: chain_id.into(), minters, state: RwLock::new(State::default()), log: None }
    }

    /// Open (or create) a ledger backed by a newline-delimited log, replaying
    /// and re-validating every recorded transaction.
    pub fn open(chain_id: impl Into<String>, minters: TrustStore, path: &Path) -> Result<Self> {
        let mut ledger = Self::new(chain_id, minters);
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let tx: LedgerTransaction = serde_json::from_str(&line)?;
                let expected = lineno as u64;
                if tx.height != expected {
                    return Err(LedgerError::ChainInvalid {
                        height: tx.height,
                        reason: format!("log line {} holds height {}", lineno + 1, tx.height),
                    });
                }
                let recorded_id = tx.tx_id;
                let applied = ledger.apply(TxSubmission { body: tx.body, signature: tx.signature })?;
                if applied.tx_id != recorded_id {
                    return Err(LedgerError::ChainInvalid {
                        height: applied.height,
                        reason: "recorded id does not match body".into(),
                    });
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        ledger.log = Some(Mutex::new(file));
        Ok(ledger)
    }

    /// Load transactions without validating them, for auditing a log whose
    /// integrity is in question. Use [`Ledger::verify_chain`] afterwards.
    pub fn load_unverified(chain_id: impl Into<String>, minters: TrustStore, txs: Vec<LedgerTransaction>) -> Self {
        let ledger = Self::new(chain_id, minters);
        {
            let mut st = ledger.state.write().unwrap();
            for tx in txs {
                let idx = st.txs.len();
                st.by_id.insert(tx.tx_id, idx);
                let asset = *tx.asset_id();
                match st.assets.get_mut(&asset) {
                    Some(a) => a.chain.push(idx),
                    None => {
                        let (owner, transferable) = match &tx.body {
                            TxBody::Mint { payload, .. } => (
                                payload.document.holder_key().unwrap_or_else(|_| tx.body.signer_pk().clone()),
                                payload.document.transferable,
                            ),
                            TxBody::Transfer { payload, .. } => (payload.clone(), false),
                        };
                        st.assets.insert(asset, AssetState { chain: vec![idx], owner, transferable });
                    }
                }
                st.rolling = roll(&st.rolling, &tx);
                st.txs.push(tx);
            }
        }
        ledger
    }

    pub fn chain_id(&self) -> &str {
        &self.chain_id
    }

    pub fn minters(&self) -> &TrustStore {
        &self.minters
    }

    pub fn len(&self) -> usize {
        self.state.read().unwrap().txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Validate and append. The write lock serializes appends, so the first
    /// of two transfers spending the same previous transaction wins.
    pub fn append(&self, sub: TxSubmission) -> Result<LedgerTransaction> {
        let tx = self.apply(sub)?;
        if let Some(log) = &self.log {
            let mut file = log.lock().unwrap();
            writeln!(file, "{}", tx.to_line()?)?;
            file.flush()?;
        }
        Ok(tx)
    }

    fn apply(&self, sub: TxSubmission) -> Result<LedgerTransaction> {
        let tx_id = sub.body.tx_id()?;
        let mut st = self.state.write().unwrap();
        let asset_id = *sub.body.asset_id();

        let update = match &sub.body {
            TxBody::Mint { payload, .. } => {
                let owner = check_mint(&sub.body, &sub.signature, &self.minters)?;
                if st.assets.contains_key(&asset_id) {
                    return Err(LedgerError::AssetExists(asset_id.to_hex()));
                }
                AssetUpdate::Mint { owner, transferable: payload.document.transferable }
            }
            TxBody::Transfer { prev_tx, .. } => {
                let prev_idx = *st.by_id.get(prev_tx).ok_or(LedgerError::BadPrev)?;
                let prev = &st.txs[prev_idx];
                if *prev.asset_id() != asset_id {
                    return Err(LedgerError::BadPrev);
                }
                let asset = st.assets.get(&asset_id).ok_or(LedgerError::BadPrev)?;
                let prev_owner = prev.body.resulting_owner()?;
                let owner = check_transfer(&sub.body, &sub.signature, &prev_owner, asset.transferable)?;
                if st.head_of(asset).tx_id != *prev_tx {
                    return Err(LedgerError::DoubleTransfer(*prev_tx));
                }
                AssetUpdate::Transfer { owner }
            }
        };

        let height = st.txs.len() as u64;
        let tx = LedgerTransaction { tx_id, height, body: sub.body, signature: sub.signature };
        let idx = st.txs.len();
        match update {
            AssetUpdate::Mint { owner, transferable } => {
                st.assets.insert(asset_id, AssetState { chain: vec![idx], owner, transferable });
            }
            AssetUpdate::Transfer { owner } => {
                let asset = st.assets.get_mut(&asset_id).expect("checked above");
                asset.chain.push(idx);
                asset.owner = owner;
            }
        }
        st.by_id.insert(tx_id, idx);
        st.rolling = roll(&st.rolling, &tx);
        st.txs.push(tx.clone());
        Ok(tx)
    }

    pub fn get(&self, tx_id: &TxId) -> Result<LedgerTransaction> {
        let st = self.state.read().unwrap();
        st.by_id
            .get(tx_id)
            .map(|&i| st.txs[i].clone())
            .ok_or_else(|| LedgerError::RefNotFound(tx_id.to_hex()))
    }

    pub fn head_owner(&self, asset_id: &Digest) -> Result<PublicKey> {
        let st = self.state.read().unwrap();
        st.assets
            .get(asset_id)
            .map(|a| a.owner.clone())
            .ok_or_else(|| LedgerError::AssetNotFound(asset_id.to_hex()))
    }

    /// The asset's transactions, mint first.
    pub fn history(&self, asset_id: &Digest) -> Result<Vec<LedgerTransaction>> {
        let st = self.state.read().unwrap();
        let asset = st.assets.get(asset_id).ok_or_else(|| LedgerError::AssetNotFound(asset_id.to_hex()))?;
        Ok(asset.chain.iter().map(|&i| st.txs[i].clone()).collect())
    }

    /// Re-verify every signature and link from mint to head.
    pub fn verify_chain(&self, asset_id: &Digest) -> Result<()> {
        let history = self.history(asset_id)?;
        verify_history(&history, &self.minters).map(|_| ())
    }

    /// Running digest maintained on every append.
    pub fn digest(&self) -> Digest {
        self.state.read().unwrap().rolling
    }

    /// The same digest recomputed from scratch over the full log.
    pub fn recompute_digest(&self) -> Digest {
        let st = self.state.read().unwrap();
        st.txs.iter().fold(Digest::ZERO, |acc, tx| roll(&acc, tx))
    }

    pub fn transactions(&self) -> Vec<LedgerTransaction> {
        self.state.read().unwrap().txs.clone()
    }
}

enum AssetUpdate {
    Mint { owner: PublicKey, transferable: bool },
    Transfer { owner: PublicKey },
}

impl LedgerApi for Ledger {
    fn chain_id(&self) -> Result<String> {
        Ok(self.chain_id.clone())
    }

    fn append(&self, tx: TxSubmission) -> Result<LedgerTransaction> {
        Ledger::append(self, tx)
    }

    fn get(&self, tx_id: &TxId) -> Result<LedgerTransaction> {
        Ledger::get(self, tx_id)
    }

    fn head_owner(&self, asset_id: &Digest) -> Result<PublicKey> {
        Ledger::head_owner(self, asset_id)
    }

    fn history(&self, asset_id: &Digest) -> Result<Vec<LedgerTransaction>> {
        Ledger::history(self, asset_id)
    }
}

impl Ledger {
    /// Resolve a reference issued by this ledger.
    pub fn resolve(&self, r: &PoeRef) -> Result<LedgerTransaction> {
        LedgerApi::resolve(self, r)
    }
}
