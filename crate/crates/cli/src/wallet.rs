//! The client's on-disk wallet: one directory per PoE.
//!
//! ```text
//! <root>/poes/<id>/poe.json         the document, pretty-printed
//! <root>/poes/<id>/poe.sig          issuer signature, base64 (when held)
//! <root>/poes/<id>/keys.json        holder key pair (owner-only permissions)
//! <root>/poes/<id>/disclosure.json  openings of committed fields
//! <root>/poes/<id>/ticket.json      reward password and one-time code
//! <root>/poes/<id>/meta.json        issuance mode, ledger reference, status
//! <root>/keys/<key-id>.json         key pairs generated to receive a transfer
//! <root>/vouchers.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use poe_core::{DisclosurePackage, Gps, KeyPair, PoeDocument, PoeTime, PublicKey, Pwd, Signature, SignedPoe};
use poe_ledger::PoeRef;
use poe_protocol::{EngageOutcome, IssueMode};
use poe_reward::{Voucher, VoucherState};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holding {
    Held,
    /// Transferred to someone else; kept for the record.
    TransferredAway,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub id: String,
    pub mode: IssueMode,
    pub signer_key_id: Option<String>,
    pub poe_ref: Option<PoeRef>,
    pub status: Holding,
}

/// Reward claim material. The password is the client's secret; the code
/// arrives with the PoE when the engagement earned a reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TicketStub {
    pub pwd: Pwd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub otc: Option<String>,
}

#[derive(Clone, Debug)]
pub struct WalletEntry {
    pub meta: EntryMeta,
    pub document: PoeDocument,
    pub signature: Option<Signature>,
    pub keys: KeyPair,
    pub disclosure: DisclosurePackage,
    pub ticket: Option<TicketStub>,
}

impl WalletEntry {
    pub fn from_outcome(out: &EngageOutcome, mode: IssueMode) -> Result<Self> {
        let ticket = TicketStub { pwd: out.pwd.clone(), otc: out.reward.as_ref().map(|r| r.otc.clone()) };
        Ok(Self {
            meta: EntryMeta {
                id: poe_id(&out.document)?,
                mode,
                signer_key_id: out.poe.as_ref().map(|p| p.signer_key_id.clone()),
                poe_ref: out.poe_ref.clone(),
                status: Holding::Held,
            },
            document: out.document.clone(),
            signature: out.poe.as_ref().map(|p| p.signature.clone()),
            keys: out.keys.clone(),
            disclosure: out.disclosure.clone(),
            ticket: Some(ticket),
        })
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    /// The signed PoE, when the wallet holds the issuer signature.
    pub fn signed(&self) -> Option<SignedPoe> {
        Some(SignedPoe {
            document: self.document.clone(),
            signature: self.signature.clone()?,
            signer_key_id: self.meta.signer_key_id.clone()?,
        })
    }

    pub fn summary(&self) -> PoeSummary {
        PoeSummary {
            id: self.meta.id.clone(),
            mode: self.meta.mode,
            status: self.meta.status,
            issuer: self.meta.signer_key_id.clone(),
            transferable: self.document.transferable,
            timestamp: self.document.timestamp.time,
            gps: self.document.gps,
            expiration: self.document.expiration().ok().flatten(),
            poe_ref: self.meta.poe_ref.clone(),
            committed_fields: self.disclosure.entries.keys().cloned().collect(),
            reward_otc: self.ticket.as_ref().and_then(|t| t.otc.clone()),
        }
    }
}

/// What the wallet shows about a PoE. Never contains key material or the
/// reward password.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoeSummary {
    pub id: String,
    pub mode: IssueMode,
    pub status: Holding,
    pub issuer: Option<String>,
    pub transferable: bool,
    pub timestamp: PoeTime,
    pub gps: Option<Gps>,
    pub expiration: Option<PoeTime>,
    pub poe_ref: Option<PoeRef>,
    pub committed_fields: Vec<String>,
    pub reward_otc: Option<String>,
}

#[derive(Clone, Debug)]
pub struct WalletStore {
    root: PathBuf,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes(), false)
}

/// Write through a temporary file so a crash never leaves half a file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8], private: bool) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        use std::io::Write;
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        if private {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        #[cfg(not(unix))]
        let _ = private;
        let mut f = opts.open(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

/// Wallet id of a document: the first 16 hex digits of its digest.
pub fn poe_id(document: &PoeDocument) -> Result<String> {
    Ok(document.digest()?.short(16))
}

impl WalletStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("poes"))?;
        fs::create_dir_all(root.join("keys"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(CliError::usage(format!("invalid PoE id {id:?}")));
        }
        Ok(self.root.join("poes").join(id))
    }

    /// File the outcome of a generation run.
    pub fn store_outcome(&self, out: &EngageOutcome, mode: IssueMode) -> Result<String> {
        let entry = WalletEntry::from_outcome(out, mode)?;
        self.save(&entry)?;
        Ok(entry.meta.id)
    }

    pub fn save(&self, entry: &WalletEntry) -> Result<()> {
        let dir = self.dir(&entry.meta.id)?;
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("poe.json"), entry.document.to_pretty()?.as_bytes(), false)?;
        if let Some(sig) = &entry.signature {
            write_atomic(&dir.join("poe.sig"), format!("{}\n", sig.to_base64()).as_bytes(), false)?;
        }
        let keys = serde_json::to_string_pretty(&entry.keys)?;
        write_atomic(&dir.join("keys.json"), keys.as_bytes(), true)?;
        write_json(&dir.join("disclosure.json"), &entry.disclosure)?;
        if let Some(t) = &entry.ticket {
            let text = serde_json::to_string_pretty(t)?;
            write_atomic(&dir.join("ticket.json"), text.as_bytes(), true)?;
        }
        write_json(&dir.join("meta.json"), &entry.meta)
    }

    pub fn load(&self, id: &str) -> Result<WalletEntry> {
        let dir = self.dir(id)?;
        if !dir.is_dir() {
            return Err(CliError::refused("PoeNotFound", format!("no PoE {id} in the wallet")));
        }
        let meta: EntryMeta = read_json(&dir.join("meta.json"))?;
        let document = PoeDocument::from_json(&fs::read_to_string(dir.join("poe.json"))?)?;
        let sig_path = dir.join("poe.sig");
        let signature = match sig_path.exists() {
            true => Some(Signature::from_base64(fs::read_to_string(sig_path)?.trim())?),
            false => None,
        };
        let ticket_path = dir.join("ticket.json");
        Ok(WalletEntry {
            meta,
            document,
            signature,
            keys: read_json(&dir.join("keys.json"))?,
            disclosure: read_json(&dir.join("disclosure.json"))?,
            ticket: if ticket_path.exists() { Some(read_json(&ticket_path)?) } else { None },
        })
    }

    pub fn ids(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for e in fs::read_dir(self.root.join("poes"))? {
            let e = e?;
            if e.path().join("meta.json").exists() {
                ids.push(e.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn list(&self) -> Result<Vec<PoeSummary>> {
        self.ids()?.iter().map(|id| self.load(id).map(|e| e.summary())).collect()
    }

    /// The entry holding a reward code.
    pub fn find_by_otc(&self, otc: &str) -> Result<WalletEntry> {
        for id in self.ids()? {
            let e = self.load(&id)?;
            if e.ticket.as_ref().and_then(|t| t.otc.as_deref()) == Some(otc) {
                return Ok(e);
            }
        }
        Err(CliError::refused("TicketNotFound", "no wallet entry holds this one-time code"))
    }

    pub fn mark_transferred(&self, id: &str, new_ref: &PoeRef) -> Result<()> {
        let mut entry = self.load(id)?;
        entry.meta.status = Holding::TransferredAway;
        entry.meta.poe_ref = Some(new_ref.clone());
        write_json(&self.dir(id)?.join("meta.json"), &entry.meta)
    }

    /// Keep a fresh key pair for receiving a transfer.
    pub fn store_receive_key(&self, keys: &KeyPair) -> Result<()> {
        let path = self.root.join("keys").join(format!("{}.json", &keys.public.key_id()[..16]));
        write_atomic(&path, serde_json::to_string_pretty(keys)?.as_bytes(), true)
    }

    pub fn receive_key(&self, public: &PublicKey) -> Result<KeyPair> {
        let path = self.root.join("keys").join(format!("{}.json", &public.key_id()[..16]));
        if !path.exists() {
            return Err(CliError::refused("NotOwner", "the wallet holds no key for this owner"));
        }
        read_json(&path)
    }

    pub fn vouchers(&self) -> Result<Vec<Voucher>> {
        let path = self.root.join("vouchers.json");
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_json(&path)
    }

    pub fn put_voucher(&self, v: &Voucher) -> Result<()> {
        let mut all = self.vouchers()?;
        match all.iter_mut().find(|x| x.voucher_id == v.voucher_id) {
            Some(x) => *x = v.clone(),
            None => all.push(v.clone()),
        }
        write_json(&self.root.join("vouchers.json"), &all)
    }

    pub fn live_vouchers(&self) -> Result<Vec<Voucher>> {
        Ok(self.vouchers()?.into_iter().filter(|v| v.state == VoucherState::Live).collect())
    }
}
