//! Topology, churn and the register / request / group / ready / terminate
//! workflow shared by the LT and ARQ sessions.

use std::collections::HashSet;

use super::config::{ChurnAction, ChurnEvent, SessionConfig};
use super::control::{ControlPlane, Node};
use super::{PathReport, SessionError};
use crate::channel::{LinkParams, SimLink, Transport};
use crate::lt::CodingParams;
use crate::wire::{ControlMessage, Role};

pub(super) const RU_ID: u32 = 0;
pub(super) const FILE_ID: u32 = 1;
const REVERSE_SEED_SALT: u64 = 0xA5A5_5A5A_C3C3_3C3C;

pub(super) struct PathState {
    pub label: String,
    pub au: Option<u32>,
    /// Server to RU, through the AU when there is one.
    pub hops: Vec<SimLink>,
    /// RU to server along the same route.
    pub reverse: Vec<SimLink>,
    /// Server may send on this path.
    pub active: bool,
    /// The AU is reachable (never left, or rejoined).
    pub present: bool,
    pub forwarded: u64,
    pub delivered: u64,
}

impl PathState {
    fn new(label: String, au: Option<u32>, route: &[LinkParams], present: bool) -> Result<Self, SessionError> {
        let hops = route.iter().map(|p| SimLink::new(*p)).collect::<Result<Vec<_>, _>>()?;
        let reverse = route
            .iter()
            .rev()
            .map(|p| SimLink::new(LinkParams { seed: p.seed ^ REVERSE_SEED_SALT, ..*p }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { label, au, hops, reverse, active: false, present, forwarded: 0, delivered: 0 })
    }

    pub fn first_hop(&mut self) -> &mut SimLink {
        &mut self.hops[0]
    }

    /// Forward and reverse round trip for one data packet and one ack.
    pub fn round_trip(&self, data_bytes: usize, ack_bytes: usize) -> f64 {
        let fwd: f64 = self.hops.iter().map(|l| l.params().latency() + l.params().serialization(data_bytes)).sum();
        let rev: f64 = self.reverse.iter().map(|l| l.params().latency() + l.params().serialization(ack_bytes)).sum();
        fwd + rev
    }
}

pub(super) enum ServerEvent {
    BlockAck(u32),
    Terminate,
}

pub(super) struct Engine {
    pub now: f64,
    pub paths: Vec<PathState>,
    pub control: ControlPlane,
    churn: Vec<ChurnEvent>,
    churn_next: usize,
    registered: HashSet<u32>,
    grouped: bool,
    coding: CodingParams,
    ssid: String,
    pub dissemination_start: Option<f64>,
    pub terminate_signals: u32,
    pub terminated: bool,
}

impl Engine {
    pub fn new(cfg: &SessionConfig) -> Result<Self, SessionError> {
        cfg.validate()?;
        let mut paths = vec![PathState::new("direct".into(), None, &[cfg.direct], true)?];
        for a in &cfg.assistants {
            paths.push(PathState::new(format!("au-{}", a.id), Some(a.id), &[a.uplink, a.relay], a.present_at_start)?);
        }
        let mut churn = cfg.churn.clone();
        churn.sort_by(|a, b| a.at.total_cmp(&b.at));
        Ok(Self {
            now: 0.0,
            paths,
            control: ControlPlane::new(cfg.control_latency_ms / 1000.0),
            churn,
            churn_next: 0,
            registered: HashSet::new(),
            grouped: false,
            coding: cfg.coding,
            ssid: format!("coop-{:08x}", crate::exec::trial_seed(cfg.session_seed, 0) as u32),
            dissemination_start: None,
            terminate_signals: 0,
            terminated: false,
        })
    }

    /// Registration of every present client, then the RU's help request.
    pub fn start(&mut self) -> Result<(), SessionError> {
        let reg = |id| ControlMessage::Register { client_id: id, lat: 31.3, lon: 121.5, battery: 80 };
        self.control.send(Node::Requester, Node::Server, &reg(RU_ID), 0.0)?;
        let present: Vec<u32> = self.paths.iter().filter(|p| p.present).filter_map(|p| p.au).collect();
        for id in present {
            self.control.send(Node::Assistant(id), Node::Server, &reg(id), 0.0)?;
        }
        self.control.send(Node::Requester, Node::Server, &ControlMessage::HelpRequest { client_id: RU_ID, file_id: FILE_ID }, 0.0)
    }

    fn path_of(&self, au: u32) -> Option<usize> {
        self.paths.iter().position(|p| p.au == Some(au))
    }

    fn group_assign(&self, role: Role, peers: Vec<u32>) -> ControlMessage {
        ControlMessage::GroupAssign { ssid: self.ssid.clone(), role, coding: self.coding, peers }
    }

    fn assign_au(&mut self, id: u32, now: f64) -> Result<(), SessionError> {
        let msg = self.group_assign(Role::Assistant, vec![RU_ID]);
        self.control.send(Node::Server, Node::Assistant(id), &msg, now)
    }

    fn activate(&mut self, idx: usize, now: f64) {
        let p = &mut self.paths[idx];
        if p.present && !p.active {
            p.active = true;
            self.dissemination_start.get_or_insert(now);
        }
    }

    /// Delivers due control messages and runs each endpoint's reaction.
    pub fn handle_control(&mut self, now: f64) -> Result<Vec<ServerEvent>, SessionError> {
        let mut events = Vec::new();
        for (_, to, msg) in self.control.deliver(now)? {
            match (to, msg) {
                (Node::Server, ControlMessage::Register { client_id, .. }) => {
                    self.registered.insert(client_id);
                    if self.grouped && client_id != RU_ID {
                        self.assign_au(client_id, now)?;
                    }
                }
                (Node::Server, ControlMessage::HelpRequest { .. }) => {
                    self.grouped = true;
                    let mut helpers: Vec<u32> = self
                        .paths
                        .iter()
                        .filter(|p| p.present)
                        .filter_map(|p| p.au)
                        .filter(|id| self.registered.contains(id))
                        .collect();
                    helpers.sort_unstable();
                    let msg = self.group_assign(Role::Requester, helpers.clone());
                    self.control.send(Node::Server, Node::Requester, &msg, now)?;
                    for id in helpers {
                        self.assign_au(id, now)?;
                    }
                }
                (Node::Server, ControlMessage::Ready { client_id }) => {
                    let idx = if client_id == RU_ID { Some(0) } else { self.path_of(client_id) };
                    if let Some(idx) = idx {
                        self.activate(idx, now);
                    }
                }
                (Node::Server, ControlMessage::BlockAck { block_id, .. }) => events.push(ServerEvent::BlockAck(block_id)),
                (Node::Server, ControlMessage::Terminate { .. }) => {
                    self.terminated = true;
                    events.push(ServerEvent::Terminate);
                }
                (Node::Requester, ControlMessage::GroupAssign { .. }) => {
                    self.control.send(Node::Requester, Node::Server, &ControlMessage::Ready { client_id: RU_ID }, now)?;
                }
                (Node::Assistant(id), ControlMessage::GroupAssign { .. }) => {
                    if self.path_of(id).is_some_and(|i| self.paths[i].present) {
                        self.control.send(Node::Assistant(id), Node::Server, &ControlMessage::Ready { client_id: id }, now)?;
                    }
                }
                _ => {}
            }
        }
        Ok(events)
    }

    pub fn ru_send(&mut self, msg: &ControlMessage, now: f64) -> Result<(), SessionError> {
        if matches!(msg, ControlMessage::Terminate { .. }) {
            self.terminate_signals += 1;
        }
        self.control.send(Node::Requester, Node::Server, msg, now)
    }

    /// Applies due churn; returns indices of paths that just went away.
    pub fn apply_churn(&mut self, now: f64) -> Result<Vec<usize>, SessionError> {
        let mut gone = Vec::new();
        while self.churn_next < self.churn.len() && self.churn[self.churn_next].at <= now {
            let ev = self.churn[self.churn_next];
            self.churn_next += 1;
            let Some(idx) = self.path_of(ev.au) else { continue };
            match ev.action {
                ChurnAction::Leave => {
                    let p = &mut self.paths[idx];
                    if p.present {
                        p.present = false;
                        p.active = false;
                        p.hops.iter_mut().chain(p.reverse.iter_mut()).for_each(|l| {
                            l.clear();
                        });
                        gone.push(idx);
                    }
                }
                ChurnAction::Join => {
                    if !self.paths[idx].present {
                        self.paths[idx].present = true;
                        let reg = ControlMessage::Register { client_id: ev.au, lat: 31.3, lon: 121.5, battery: 80 };
                        self.control.send(Node::Assistant(ev.au), Node::Server, &reg, now)?;
                    }
                }
            }
        }
        Ok(gone)
    }

    pub fn next_churn(&self) -> Option<f64> {
        self.churn.get(self.churn_next).map(|e| e.at)
    }

    /// Moves data one hop at a time; returns packets reaching the RU as `(path, bytes)`.
    pub fn forward(&mut self, now: f64) -> Result<Vec<(usize, Vec<u8>)>, SessionError> {
        let mut arrivals = Vec::new();
        for (idx, p) in self.paths.iter_mut().enumerate() {
            let last = p.hops.len() - 1;
            for h in 0..=last {
                let due = p.hops[h].poll(now);
                if h < last {
                    for pkt in due {
                        p.hops[h + 1].send(&pkt, now)?;
                        p.forwarded += 1;
                    }
                } else {
                    p.delivered += due.len() as u64;
                    arrivals.extend(due.into_iter().map(|b| (idx, b)));
                }
            }
        }
        Ok(arrivals)
    }

    /// Same as [`forward`](Self::forward) for the RU-to-server direction.
    pub fn backward(&mut self, now: f64) -> Result<Vec<(usize, Vec<u8>)>, SessionError> {
        let mut arrivals = Vec::new();
        for (idx, p) in self.paths.iter_mut().enumerate() {
            let last = p.reverse.len() - 1;
            for h in 0..=last {
                let due = p.reverse[h].poll(now);
                if h < last {
                    for pkt in due {
                        p.reverse[h + 1].send(&pkt, now)?;
                    }
                } else {
                    arrivals.extend(due.into_iter().map(|b| (idx, b)));
                }
            }
        }
        Ok(arrivals)
    }

    /// Earliest pending delivery on any link, or control or churn event.
    pub fn next_event(&self) -> Option<f64> {
        let links = self
            .paths
            .iter()
            .flat_map(|p| p.hops.iter().chain(p.reverse.iter()))
            .filter_map(SimLink::next_delivery);
        links
            .chain(self.control.next_time())
            .chain(self.next_churn())
            .min_by(f64::total_cmp)
    }

    pub fn path_reports(&self) -> Vec<PathReport> {
        self.paths
            .iter()
            .map(|p| PathReport {
                path: p.label.clone(),
                sent: p.hops[0].stats().sent,
                forwarded: p.forwarded,
                delivered: p.delivered,
            })
            .collect()
    }

    pub fn live_paths(&self) -> usize {
        self.paths.iter().filter(|p| p.present).count()
    }
}
