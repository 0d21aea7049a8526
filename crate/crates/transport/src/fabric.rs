//! In-memory fabric: named endpoints in one process, with the same
//! authentication rules and framing as the socket deployment.

use std::collections::HashMap;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use crate::channel::{AuthMode, ClientAuth, ConnectConfig, FrameChannel, ListenConfig, SecureChannel};
use crate::credential::PeerIdentity;
use crate::error::{Result, TransportError};
use crate::frame::{encode_frame, read_frame};

/// Rewrites client-to-server frames in flight, for fault injection. Gets
/// the endpoint name and the frame payload.
pub type TamperFn = Arc<dyn Fn(&str, &mut Vec<u8>) + Send + Sync>;

struct Registration {
    identity: PeerIdentity,
    client_auth: ClientAuth,
    accept: Sender<SecureChannel>,
}

#[derive(Default)]
struct FabricState {
    endpoints: HashMap<String, Registration>,
    tamper: Option<TamperFn>,
}

#[derive(Clone, Default)]
pub struct Fabric {
    state: Arc<Mutex<FabricState>>,
}

impl std::fmt::Debug for Fabric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let st = self.state.lock().unwrap();
        f.debug_struct("Fabric").field("endpoints", &st.endpoints.keys().collect::<Vec<_>>()).finish()
    }
}

impl Fabric {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn listen(&self, endpoint: &str, config: &ListenConfig) -> Result<FabricListener> {
        let mut st = self.state.lock().unwrap();
        if st.endpoints.contains_key(endpoint) {
            return Err(TransportError::Io(std::io::Error::new(
                std::io::ErrorKind::AddrInUse,
                format!("fabric endpoint {endpoint} is taken"),
            )));
        }
        let (tx, rx) = channel();
        st.endpoints.insert(
            endpoint.to_owned(),
            Registration { identity: config.credential.identity(), client_auth: config.client_auth.clone(), accept: tx },
        );
        Ok(FabricListener { endpoint: endpoint.to_owned(), rx, fabric: self.clone() })
    }

    /// Remove an endpoint; its listener stops accepting.
    pub fn close(&self, endpoint: &str) {
        self.state.lock().unwrap().endpoints.remove(endpoint);
    }

    pub fn set_tamper(&self, tamper: Option<TamperFn>) {
        self.state.lock().unwrap().tamper = tamper;
    }

    pub fn connect(&self, endpoint: &str, config: &ConnectConfig) -> Result<SecureChannel> {
        let credential = config.preflight()?;
        let st = self.state.lock().unwrap();
        let reg = st.endpoints.get(endpoint).ok_or_else(|| TransportError::Unreachable(endpoint.to_owned()))?;
        let server = config
            .servers
            .lookup(&reg.identity.fingerprint)
            .ok_or_else(|| TransportError::ChannelAuth(format!("server {} is not pinned", reg.identity)))?;
        let presented = match config.mode {
            AuthMode::Mutual => credential.map(|c| c.identity()),
            AuthMode::OneWay => None,
        };
        let client = reg.client_auth.admit(presented.as_ref())?;

        let (c2s_tx, c2s_rx) = channel();
        let (s2c_tx, s2c_rx) = channel();
        let tamper = st.tamper.clone().map(|t| (endpoint.to_owned(), t));
        let server_side = FabricChannel { tx: s2c_tx, rx: c2s_rx, peer: client, tamper: None };
        reg.accept
            .send(SecureChannel::new(Box::new(server_side)))
            .map_err(|_| TransportError::Unreachable(endpoint.to_owned()))?;
        Ok(SecureChannel::new(Box::new(FabricChannel { tx: c2s_tx, rx: s2c_rx, peer: Some(server), tamper })))
    }
}

pub struct FabricListener {
    endpoint: String,
    rx: Receiver<SecureChannel>,
    fabric: Fabric,
}

impl FabricListener {
    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Block for the next channel; `None` once the endpoint is closed.
    pub fn accept(&self) -> Option<SecureChannel> {
        self.rx.recv().ok()
    }
}

impl Drop for FabricListener {
    fn drop(&mut self) {
        self.fabric.close(&self.endpoint);
    }
}

struct FabricChannel {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    peer: Option<PeerIdentity>,
    tamper: Option<(String, TamperFn)>,
}

impl FrameChannel for FabricChannel {
    fn send_frame(&mut self, payload: &[u8]) -> Result<()> {
        let mut payload = payload.to_vec();
        if let Some((endpoint, tamper)) = &self.tamper {
            tamper(endpoint, &mut payload);
        }
        // Frames cross the fabric in their wire encoding.
        let frame = encode_frame(&payload)?;
        self.tx.send(frame).map_err(|_| TransportError::Closed)
    }

    fn recv_frame(&mut self) -> Result<Option<Vec<u8>>> {
        match self.rx.recv() {
            Ok(frame) => match read_frame(&mut &frame[..])? {
                Some(payload) => Ok(Some(payload)),
                None => Err(TransportError::Malformed("empty frame".into())),
            },
            Err(_) => Ok(None),
        }
    }

    fn peer_identity(&self) -> Option<&PeerIdentity> {
        self.peer.as_ref()
    }
}
