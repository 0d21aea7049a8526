use poe_protocol::{ClientMachine, Step};

use crate::channel::SecureChannel;
use crate::error::Result;

/// Run a client state machine over a channel. The channel's transcript then
/// holds the same envelopes an in-process run records.
pub fn run_channel<C: ClientMachine>(client: &mut C, chan: &mut SecureChannel) -> Result<C::Outcome> {
    let mut outbound = client.start()?;
    loop {
        chan.send(&outbound)?;
        match client.on_message(chan.recv()?)? {
            Step::Send(env) => outbound = env,
            Step::Done(out) => return Ok(out),
        }
    }
}
