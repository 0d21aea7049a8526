use crate::channel::{ConnectConfig, SecureChannel};
use crate::error::Result;
use crate::fabric::Fabric;
use crate::tls;

/// Where a node can be reached.
#[derive(Clone, Debug)]
pub enum Endpoint {
    Fabric { fabric: Fabric, name: String },
    /// `host:port` of a TLS node.
    Tcp(String),
}

impl Endpoint {
    pub fn fabric(fabric: &Fabric, name: &str) -> Self {
        Endpoint::Fabric { fabric: fabric.clone(), name: name.to_owned() }
    }

    pub fn open(&self, config: &ConnectConfig) -> Result<SecureChannel> {
        match self {
            Endpoint::Fabric { fabric, name } => fabric.connect(name, config),
            Endpoint::Tcp(addr) => tls::connect(addr, config),
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Fabric { name, .. } => write!(f, "fabric:{name}"),
            Endpoint::Tcp(addr) => f.write_str(addr),
        }
    }
}

/// An endpoint plus the settings for opening channels to it.
#[derive(Clone, Debug)]
pub struct Dialer {
    pub endpoint: Endpoint,
    pub config: ConnectConfig,
}

impl Dialer {
    pub fn new(endpoint: Endpoint, config: ConnectConfig) -> Self {
        Self { endpoint, config }
    }

    pub fn open(&self) -> Result<SecureChannel> {
        self.endpoint.open(&self.config)
    }
}
