use poe_protocol::ProtocolError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("frame of {len} bytes exceeds the {max} byte limit")]
    FrameTooLarge { len: usize, max: usize },
    /// Truncated frames and payloads that are not envelopes.
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("channel authentication failed: {0}")]
    ChannelAuth(String),
    #[error("no node listening at {0}")]
    Unreachable(String),
    #[error("channel closed by peer")]
    Closed,
    #[error("credential: {0}")]
    Credential(String),
    #[error(transparent)]
    Session(#[from] ProtocolError),
    #[error("transport i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl TransportError {
    pub fn code(&self) -> String {
        match self {
            TransportError::FrameTooLarge { .. } => "FrameTooLarge".into(),
            TransportError::Malformed(_) => "ProtocolError".into(),
            TransportError::ChannelAuth(_) => "ChannelAuthError".into(),
            TransportError::Unreachable(_) => "Unreachable".into(),
            TransportError::Closed => "ChannelClosed".into(),
            TransportError::Credential(_) => "CredentialError".into(),
            TransportError::Session(e) => e.code(),
            TransportError::Io(_) => "TransportIo".into(),
        }
    }
}

pub type Result<T, E = TransportError> = std::result::Result<T, E>;
