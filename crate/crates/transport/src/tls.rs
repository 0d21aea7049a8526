//! TLS over TCP with certificates pinned by fingerprint. The handshake is
//! rustls's; this module only decides which certificates are acceptable.

use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::time::Duration;

use rustls::client::danger::{HandshakeSignatureValid, ServerCertVerified, ServerCertVerifier};
use rustls::crypto::{ring, verify_tls12_signature, verify_tls13_signature, CryptoProvider, WebPkiSupportedAlgorithms};
use rustls::pki_types::{CertificateDer, PrivateKeyDer, PrivatePkcs8KeyDer, ServerName, UnixTime};
use rustls::server::danger::{ClientCertVerified, ClientCertVerifier};
use rustls::{
    ClientConfig, ClientConnection, DigitallySignedStruct, DistinguishedName, ServerConfig, ServerConnection,
    SignatureScheme, StreamOwned,
};

use crate::channel::{AuthMode, ClientAuth, ConnectConfig, FrameChannel, ListenConfig, SecureChannel};
use crate::credential::{fingerprint, Credential, PeerIdentity, PinnedPeers};
use crate::error::{Result, TransportError};
use crate::frame::{read_frame, write_frame};

/// Name sent in the handshake; identity comes from the pinned fingerprint.
const SNI: &str = "poe-node";

/// Idle limit on a socket read, so abandoned channels free their thread.
pub const READ_TIMEOUT: Duration = Duration::from_secs(60);

fn provider() -> Arc<CryptoProvider> {
    Arc::new(ring::default_provider())
}

fn tls_err(e: rustls::Error) -> TransportError {
    TransportError::ChannelAuth(e.to_string())
}

fn unpinned() -> rustls::Error {
    rustls::Error::InvalidCertificate(rustls::CertificateError::ApplicationVerificationFailure)
}

fn cert_chain(c: &Credential) -> (Vec<CertificateDer<'static>>, PrivateKeyDer<'static>) {
    (
        vec![CertificateDer::from(c.cert_der.clone())],
        PrivateKeyDer::Pkcs8(PrivatePkcs8KeyDer::from(c.key_der.clone())),
    )
}

#[derive(Debug)]
struct PinnedServer {
    pins: PinnedPeers,
    algs: WebPkiSupportedAlgorithms,
}

impl ServerCertVerifier for PinnedServer {
    fn verify_server_cert(
        &self,
        end_entity: &CertificateDer<'_>,
        _intermediates: &[CertificateDer<'_>],
        _server_name: &ServerName<'_>,
        _ocsp: &[u8],
        _now: UnixTime,
    ) -> Result<ServerCertVerified, rustls::Error> {
        match self.pins.lookup(&fingerprint(end_entity)) {
            Some(_) => Ok(ServerCertVerified::assertion()),
            None => Err(unpinned()),
        }
    }

    fn verify_tls12_signature(
        &self,
        message: &[u8],
        cert: &CertificateDer<'_>,
        dss: &DigitallySignedStruct,
    ) -> Result<HandshakeSignatureValid, rustls::Error> {
        verify_tls12_signature(message, cert, dss, &self.algs)
    }

    fn verify_tls13_signature(
        &self,
        message: &[u8],
        cert: &CertificateDer<'_>,
        dss: &DigitallySignedStruct,
    ) -> Result<HandshakeSignatureValid, rustls::Error> {
        verify_tls13_signature(message, cert, dss, &self.algs)
    }

    fn supported_verify_schemes(&self) -> Vec<SignatureScheme> {
        self.algs.supported_schemes()
    }
}

#[derive(Debug)]
struct PinnedClients {
    pins: PinnedPeers,
    mandatory: bool,
    algs: WebPkiSupportedAlgorithms,
}

impl ClientCertVerifier for PinnedClients {
    fn root_hint_subjects(&self) -> &[DistinguishedName] {
        &[]
    }

    fn client_auth_mandatory(&self) -> bool {
        self.mandatory
    }

    fn verify_client_cert(
        &self,
        end_entity: &CertificateDer<'_>,
        _intermediates: &[CertificateDer<'_>],
        _now: UnixTime,
    ) -> Result<ClientCertVerified, rustls::Error> {
        match self.pins.lookup(&fingerprint(end_entity)) {
            Some(_) => Ok(ClientCertVerified::assertion()),
            None => Err(unpinned()),
        }
    }

    fn verify_tls12_signature(
        &self,
        message: &[u8],
        cert: &CertificateDer<'_>,
        dss: &DigitallySignedStruct,
    ) -> Result<HandshakeSignatureValid, rustls::Error> {
        verify_tls12_signature(message, cert, dss, &self.algs)
    }

    fn verify_tls13_signature(
        &self,
        message: &[u8],
        cert: &CertificateDer<'_>,
        dss: &DigitallySignedStruct,
    ) -> Result<HandshakeSignatureValid, rustls::Error> {
        verify_tls13_signature(message, cert, dss, &self.algs)
    }

    fn supported_verify_schemes(&self) -> Vec<SignatureScheme> {
        self.algs.supported_schemes()
    }
}

/// Server side of a TLS deployment.
pub struct TlsAcceptor {
    config: Arc<ServerConfig>,
    client_auth: ClientAuth,
}

impl TlsAcceptor {
    pub fn new(listen: &ListenConfig) -> Result<Self> {
        let provider = provider();
        let algs = provider.signature_verification_algorithms;
        let builder = ServerConfig::builder_with_provider(provider).with_safe_default_protocol_versions().map_err(tls_err)?;
        let builder = match &listen.client_auth {
            ClientAuth::None => builder.with_no_client_auth(),
            ClientAuth::Optional(pins) => {
                builder.with_client_cert_verifier(Arc::new(PinnedClients { pins: pins.clone(), mandatory: false, algs }))
            }
            ClientAuth::Required(pins) => {
                builder.with_client_cert_verifier(Arc::new(PinnedClients { pins: pins.clone(), mandatory: true, algs }))
            }
        };
        let (chain, key) = cert_chain(&listen.credential);
        let config = builder.with_single_cert(chain, key).map_err(tls_err)?;
        Ok(Self { config: Arc::new(config), client_auth: listen.client_auth.clone() })
    }

    /// Complete the handshake on an accepted socket.
    pub fn accept(&self, mut tcp: TcpStream) -> Result<SecureChannel> {
        tcp.set_read_timeout(Some(READ_TIMEOUT))?;
        tcp.set_nodelay(true)?;
        let mut conn = ServerConnection::new(self.config.clone()).map_err(tls_err)?;
        while conn.is_handshaking() {
            if let Err(e) = conn.complete_io(&mut tcp) {
                refuse(&mut conn, &mut tcp);
                return Err(TransportError::ChannelAuth(e.to_string()));
            }
        }
        let presented = conn.peer_certificates().and_then(|c| c.first()).map(|c| fingerprint(c));
        let peer = match presented {
            Some(fp) => self.client_auth.admit(Some(&PeerIdentity { name: String::new(), fingerprint: fp }))?,
            None => self.client_auth.admit(None)?,
        };
        Ok(SecureChannel::new(Box::new(TlsChannel { stream: Stream::Server(StreamOwned::new(conn, tcp)), peer })))
    }
}

/// Deliver the pending alert and close without a reset. Closing with the
/// client's first frame still unread would send RST, which can discard
/// the alert before the client reads it.
fn refuse(conn: &mut ServerConnection, tcp: &mut TcpStream) {
    while conn.wants_write() {
        if conn.write_tls(tcp).is_err() {
            return;
        }
    }
    let _ = tcp.shutdown(std::net::Shutdown::Write);
    let _ = tcp.set_read_timeout(Some(Duration::from_secs(2)));
    let mut sink = [0u8; 4096];
    while matches!(tcp.read(&mut sink), Ok(n) if n > 0) {}
}

/// Open a channel to a TLS node.
pub fn connect(addr: &str, config: &ConnectConfig) -> Result<SecureChannel> {
    let credential = config.preflight()?;
    let provider = provider();
    let algs = provider.signature_verification_algorithms;
    let builder = ClientConfig::builder_with_provider(provider)
        .with_safe_default_protocol_versions()
        .map_err(tls_err)?
        .dangerous()
        .with_custom_certificate_verifier(Arc::new(PinnedServer { pins: config.servers.clone(), algs }));
    let client_config = match (config.mode, credential) {
        (AuthMode::Mutual, Some(c)) => {
            let (chain, key) = cert_chain(c);
            builder.with_client_auth_cert(chain, key).map_err(tls_err)?
        }
        _ => builder.with_no_client_auth(),
    };
    let addr = addr
        .to_socket_addrs()
        .map_err(|_| TransportError::Unreachable(addr.to_owned()))?
        .next()
        .ok_or_else(|| TransportError::Unreachable(addr.to_owned()))?;
    let mut tcp = TcpStream::connect(addr).map_err(|_| TransportError::Unreachable(addr.to_string()))?;
    tcp.set_read_timeout(Some(READ_TIMEOUT))?;
    tcp.set_nodelay(true)?;
    let name = ServerName::try_from(SNI).expect("static server name is valid");
    let mut conn = ClientConnection::new(Arc::new(client_config), name).map_err(tls_err)?;
    while conn.is_handshaking() {
        conn.complete_io(&mut tcp).map_err(|e| TransportError::ChannelAuth(e.to_string()))?;
    }
    let peer = conn
        .peer_certificates()
        .and_then(|c| c.first())
        .and_then(|c| config.servers.lookup(&fingerprint(c)))
        .ok_or_else(|| TransportError::ChannelAuth("server presented no pinned certificate".into()))?;
    Ok(SecureChannel::new(Box::new(TlsChannel { stream: Stream::Client(StreamOwned::new(conn, tcp)), peer: Some(peer) })))
}

enum Stream {
    Client(StreamOwned<ClientConnection, TcpStream>),
    Server(StreamOwned<ServerConnection, TcpStream>),
}

impl Read for Stream {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        match self {
            Stream::Client(s) => s.read(buf),
            Stream::Server(s) => s.read(buf),
        }
    }
}

impl Write for Stream {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        match self {
            Stream::Client(s) => s.write(buf),
            Stream::Server(s) => s.write(buf),
        }
    }

    fn flush(&mut self) -> std::io::Result<()> {
        match self {
            Stream::Client(s) => s.flush(),
            Stream::Server(s) => s.flush(),
        }
    }
}

struct TlsChannel {
    stream: Stream,
    peer: Option<PeerIdentity>,
}

/// A TLS alert after the handshake means the peer refused us.
fn map_io(e: TransportError) -> TransportError {
    if let TransportError::Io(io) = &e {
        if let Some(inner) = io.get_ref().and_then(|r| r.downcast_ref::<rustls::Error>()) {
            return TransportError::ChannelAuth(inner.to_string());
        }
    }
    e
}

impl FrameChannel for TlsChannel {
    fn send_frame(&mut self, payload: &[u8]) -> Result<()> {
        match write_frame(&mut self.stream, payload) {
            Err(TransportError::Io(e)) => {
                // A server that refused our certificate has sent an alert
                // and closed; reading surfaces the alert instead of EPIPE.
                let mut probe = [0u8; 1];
                match self.stream.read(&mut probe) {
                    Err(alert) if alert.get_ref().is_some_and(|r| r.is::<rustls::Error>()) => {
                        Err(map_io(TransportError::Io(alert)))
                    }
                    _ => Err(TransportError::Io(e)),
                }
            }
            other => other.map_err(map_io),
        }
    }

    fn recv_frame(&mut self) -> Result<Option<Vec<u8>>> {
        read_frame(&mut self.stream).map_err(map_io)
    }

    fn peer_identity(&self) -> Option<&PeerIdentity> {
        self.peer.as_ref()
    }
}

impl Drop for TlsChannel {
    fn drop(&mut self) {
        match &mut self.stream {
            Stream::Client(s) => s.conn.send_close_notify(),
            Stream::Server(s) => s.conn.send_close_notify(),
        }
        let _ = self.stream.flush();
    }
}
