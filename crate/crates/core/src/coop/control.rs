use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SessionError;
use crate::wire::{decode_ctrl, encode_ctrl, ControlMessage};

/// Endpoints of the control channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Server,
    Requester,
    Assistant(u32),
}

#[derive(Debug)]
struct InFlight {
    at: f64,
    seq: u64,
    from: Node,
    to: Node,
    frame: Vec<u8>,
}

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for InFlight {}
impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for InFlight {
    // Min-heap on (time, send order).
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Reliable, ordered, fixed-latency message delivery. Every message is
/// serialized and parsed through the wire codec on its way.
#[derive(Debug)]
pub struct ControlPlane {
    latency: f64,
    queue: BinaryHeap<InFlight>,
    seq: u64,
    sent: u32,
}

impl ControlPlane {
    pub fn new(latency: f64) -> Self {
        Self { latency, queue: BinaryHeap::new(), seq: 0, sent: 0 }
    }

    pub fn send(&mut self, from: Node, to: Node, msg: &ControlMessage, now: f64) -> Result<(), SessionError> {
        let frame = encode_ctrl(msg)?;
        self.queue.push(InFlight { at: now + self.latency, seq: self.seq, from, to, frame });
        self.seq += 1;
        self.sent += 1;
        Ok(())
    }

    pub fn next_time(&self) -> Option<f64> {
        self.queue.peek().map(|m| m.at)
    }

    /// Messages due by `now` in delivery order, as `(from, to, message)`.
    pub fn deliver(&mut self, now: f64) -> Result<Vec<(Node, Node, ControlMessage)>, SessionError> {
        let mut out = Vec::new();
        while self.queue.peek().is_some_and(|m| m.at <= now) {
            let m = self.queue.pop().unwrap();
            let (msg, _) = decode_ctrl(&m.frame)?;
            out.push((m.from, m.to, msg));
        }
        Ok(out)
    }

    pub fn sent(&self) -> u32 {
        self.sent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_by_time_then_send_order() {
        let mut cp = ControlPlane::new(0.5);
        cp.send(Node::Requester, Node::Server, &ControlMessage::Ready { client_id: 0 }, 1.0).unwrap();
        cp.send(Node::Assistant(2), Node::Server, &ControlMessage::Ready { client_id: 2 }, 0.0).unwrap();
        cp.send(Node::Assistant(1), Node::Server, &ControlMessage::Ready { client_id: 1 }, 0.0).unwrap();
        assert_eq!(cp.next_time(), Some(0.5));
        let got = cp.deliver(0.5).unwrap();
        assert_eq!(got.iter().map(|m| m.0).collect::<Vec<_>>(), vec![Node::Assistant(2), Node::Assistant(1)]);
        assert!(cp.deliver(1.49).unwrap().is_empty());
        assert_eq!(cp.deliver(1.5).unwrap().len(), 1);
        assert_eq!(cp.sent(), 3);
    }
}
