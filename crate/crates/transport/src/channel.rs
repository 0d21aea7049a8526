//! The secure-channel contract every deployment satisfies.

use poe_protocol::Envelope;
use serde::{Deserialize, Serialize};

use crate::credential::{Credential, PeerIdentity, PinnedPeers};
use crate::error::{Result, TransportError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthMode {
    /// Only the server proves its identity.
    #[default]
    OneWay,
    /// Both ends prove their identity.
    Mutual,
}

/// Whether a listening node asks connecting clients for a credential.
#[derive(Clone, Debug, Default)]
pub enum ClientAuth {
    #[default]
    None,
    /// Anonymous clients are admitted; credentialed ones must be pinned.
    Optional(PinnedPeers),
    Required(PinnedPeers),
}

#[derive(Clone, Debug)]
pub struct ListenConfig {
    pub credential: Credential,
    pub client_auth: ClientAuth,
}

impl ListenConfig {
    pub fn new(credential: Credential) -> Self {
        Self { credential, client_auth: ClientAuth::None }
    }

    pub fn client_auth(mut self, auth: ClientAuth) -> Self {
        self.client_auth = auth;
        self
    }
}

#[derive(Clone, Debug)]
pub struct ConnectConfig {
    pub mode: AuthMode,
    pub credential: Option<Credential>,
    /// Servers this client is willing to talk to.
    pub servers: PinnedPeers,
}

impl ConnectConfig {
    pub fn one_way(servers: PinnedPeers) -> Self {
        Self { mode: AuthMode::OneWay, credential: None, servers }
    }

    pub fn mutual(servers: PinnedPeers, credential: Option<Credential>) -> Self {
        Self { mode: AuthMode::Mutual, credential, servers }
    }

    /// Checks that do not need the peer.
    pub(crate) fn preflight(&self) -> Result<Option<&Credential>> {
        if self.servers.is_empty() {
            return Err(TransportError::ChannelAuth("no pinned server identities".into()));
        }
        match self.mode {
            AuthMode::OneWay => Ok(None),
            AuthMode::Mutual => self
                .credential
                .as_ref()
                .map(Some)
                .ok_or_else(|| TransportError::ChannelAuth("mutual mode requires a client credential".into())),
        }
    }
}

/// Raw frame transport under a [`SecureChannel`].
pub trait FrameChannel: Send {
    fn send_frame(&mut self, payload: &[u8]) -> Result<()>;
    /// `Ok(None)` once the peer has closed cleanly.
    fn recv_frame(&mut self) -> Result<Option<Vec<u8>>>;
    fn peer_identity(&self) -> Option<&PeerIdentity>;
}

/// An authenticated channel carrying envelopes, recording each one sent or
/// received in order.
pub struct SecureChannel {
    inner: Box<dyn FrameChannel>,
    transcript: Vec<Envelope>,
}

impl std::fmt::Debug for SecureChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecureChannel")
            .field("peer", &self.inner.peer_identity())
            .field("frames", &self.transcript.len())
            .finish()
    }
}

impl SecureChannel {
    pub fn new(inner: Box<dyn FrameChannel>) -> Self {
        Self { inner, transcript: Vec::new() }
    }

    pub fn peer_identity(&self) -> Option<&PeerIdentity> {
        self.inner.peer_identity()
    }

    pub fn send(&mut self, env: &Envelope) -> Result<()> {
        self.inner.send_frame(&env.to_bytes())?;
        self.transcript.push(env.clone());
        Ok(())
    }

    /// Next envelope, or `None` once the peer has closed.
    pub fn try_recv(&mut self) -> Result<Option<Envelope>> {
        let Some(frame) = self.inner.recv_frame()? else {
            return Ok(None);
        };
        let env = Envelope::from_bytes(&frame).map_err(|e| TransportError::Malformed(e.to_string()))?;
        self.transcript.push(env.clone());
        Ok(Some(env))
    }

    pub fn recv(&mut self) -> Result<Envelope> {
        self.try_recv()?.ok_or(TransportError::Closed)
    }

    /// Send a request and wait for its single reply.
    pub fn call(&mut self, env: &Envelope) -> Result<Envelope> {
        self.send(env)?;
        self.recv()
    }

    pub fn send_frame(&mut self, payload: &[u8]) -> Result<()> {
        self.inner.send_frame(payload)
    }

    pub fn recv_frame(&mut self) -> Result<Option<Vec<u8>>> {
        self.inner.recv_frame()
    }

    pub fn transcript(&self) -> &[Envelope] {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Vec<Envelope> {
        std::mem::take(&mut self.transcript)
    }
}

impl ClientAuth {
    /// Decide whether a client presenting `presented` may connect; returns
    /// the identity the server will see.
    pub fn admit(&self, presented: Option<&PeerIdentity>) -> Result<Option<PeerIdentity>> {
        match (self, presented) {
            (ClientAuth::None, _) => Ok(None),
            (ClientAuth::Optional(_), None) => Ok(None),
            (ClientAuth::Required(_), None) => Err(TransportError::ChannelAuth("server requires a client credential".into())),
            (ClientAuth::Optional(pins) | ClientAuth::Required(pins), Some(id)) => pins
                .lookup(&id.fingerprint)
                .map(Some)
                .ok_or_else(|| TransportError::ChannelAuth(format!("client {id} is not pinned"))),
        }
    }
}
