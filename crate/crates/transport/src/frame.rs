//! Length-prefixed framing: a 4-byte big-endian length followed by that
//! many payload bytes.

use std::io::{self, Read, Write};

use crate::error::{Result, TransportError};

pub const PREFIX_LEN: usize = 4;

/// Largest payload a frame may carry.
pub const MAX_FRAME: usize = 1 << 20;

fn check_len(len: usize) -> Result<()> {
    if len > MAX_FRAME {
        return Err(TransportError::FrameTooLarge { len, max: MAX_FRAME });
    }
    Ok(())
}

pub fn encode_frame(payload: &[u8]) -> Result<Vec<u8>> {
    check_len(payload.len())?;
    let mut out = Vec::with_capacity(PREFIX_LEN + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Write one frame and flush.
pub fn write_frame<W: Write + ?Sized>(w: &mut W, payload: &[u8]) -> Result<()> {
    check_len(payload.len())?;
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

/// Read one frame. `Ok(None)` means the stream ended cleanly between
/// frames; ending anywhere else is a truncated frame.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Option<Vec<u8>>> {
    let mut prefix = [0u8; PREFIX_LEN];
    let mut got = 0;
    while got < PREFIX_LEN {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(TransportError::Malformed(format!("truncated length prefix ({got} of 4 bytes)"))),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof && got == 0 => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    check_len(len)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => TransportError::Malformed(format!("truncated frame: expected {len} payload bytes")),
        _ => e.into(),
    })?;
    Ok(Some(payload))
}
