//! Running a service on a fabric endpoint or a TCP port, one thread per
//! channel.

use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use log::{info, warn};

use crate::channel::ListenConfig;
use crate::dial::Endpoint;
use crate::error::Result;
use crate::fabric::Fabric;
use crate::service::{serve_channel, Service};
use crate::tls::TlsAcceptor;

enum Bound {
    Fabric(Fabric, String),
    Tcp(SocketAddr),
}

/// A running node. Dropping it stops accepting new channels; channels
/// already open run to completion.
pub struct Node {
    bound: Bound,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Node {
    pub fn on_fabric(fabric: &Fabric, name: &str, config: &ListenConfig, service: Arc<dyn Service>) -> Result<Self> {
        let listener = fabric.listen(name, config)?;
        let label = name.to_owned();
        let thread = thread::Builder::new().name(format!("fabric:{name}")).spawn(move || {
            while let Some(chan) = listener.accept() {
                let (service, label) = (service.clone(), label.clone());
                thread::spawn(move || {
                    if let Err(e) = serve_channel(chan, &*service) {
                        warn!("{label}: {e}");
                    }
                });
            }
        })?;
        Ok(Self { bound: Bound::Fabric(fabric.clone(), name.to_owned()), stop: Arc::default(), thread: Some(thread) })
    }

    /// Listen for TLS on `bind` (`host:port`; port 0 picks a free one).
    pub fn on_tcp(bind: &str, config: &ListenConfig, service: Arc<dyn Service>) -> Result<Self> {
        let acceptor = Arc::new(TlsAcceptor::new(config)?);
        let listener = TcpListener::bind(bind)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        info!("listening on {addr}");
        let thread = thread::Builder::new().name(format!("tcp:{addr}")).spawn(move || {
            for tcp in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                let tcp = match tcp {
                    Ok(t) => t,
                    Err(e) => {
                        warn!("accept: {e}");
                        continue;
                    }
                };
                let (acceptor, service) = (acceptor.clone(), service.clone());
                thread::spawn(move || {
                    let peer = tcp.peer_addr().map(|a| a.to_string()).unwrap_or_default();
                    match acceptor.accept(tcp) {
                        Ok(chan) => {
                            if let Err(e) = serve_channel(chan, &*service) {
                                warn!("{peer}: {e}");
                            }
                        }
                        Err(e) => warn!("{peer}: handshake refused: {e}"),
                    }
                });
            }
        })?;
        Ok(Self { bound: Bound::Tcp(addr), stop, thread: Some(thread) })
    }

    pub fn endpoint(&self) -> Endpoint {
        match &self.bound {
            Bound::Fabric(fabric, name) => Endpoint::fabric(fabric, name),
            Bound::Tcp(addr) => Endpoint::Tcp(addr.to_string()),
        }
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        match self.bound {
            Bound::Tcp(addr) => Some(addr),
            Bound::Fabric(..) => None,
        }
    }

    /// Block until the node stops (for daemons).
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        match &self.bound {
            Bound::Fabric(fabric, name) => fabric.close(name),
            // Wake the accept loop so it sees the flag.
            Bound::Tcp(addr) => drop(TcpStream::connect(addr)),
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Node {
    fn drop(&mut self) {
        self.stop();
    }
}
