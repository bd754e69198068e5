//! MAC behaviours plugged into the slot-level simulator.
//!
//! The engine owns the clock, the channel and the packets; a policy owns the
//! per-vehicle MAC state and answers three questions: what to do when a
//! packet is generated, whether to transmit at the start of a slot, and how
//! to update after the slot was sensed idle or busy.

pub mod dcf;
pub mod spcdc;

use std::fmt;
use std::str::FromStr;

pub use dcf::{DcfPolicy, DcfVehicleState};
pub use spcdc::{SpcdcPolicy, SpcdcVehicleState};

use crate::error::Error;
use crate::params::{DerivedTiming, ScenarioParams};
use crate::rng::SplitMix64;

pub type VehicleId = usize;

/// What the channel looks like to a vehicle at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelView {
    pub slot: u64,
    /// A transmission started in an earlier slot still occupies this one.
    pub ongoing_busy: bool,
    /// First slot after the ongoing transmission (equals `slot` or less when idle).
    pub busy_until: u64,
}

/// A packet generation event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub vehicle: VehicleId,
    pub gen_time: f64,
    pub slot: u64,
    /// 1-based position inside the ongoing busy period; 1 on an idle slot.
    pub mini_slot: u64,
    /// True count of other vehicles holding a packet not yet on air. Only
    /// the oracle variant of SpCDC reads it.
    pub pending_others: usize,
}

/// Metadata carried by every broadcast packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketMeta {
    pub owner: VehicleId,
    pub gen_time: f64,
    pub gen_slot: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxIntent {
    Wait,
    /// Backoff expired: transmit at the slot boundary.
    Slotted,
    /// DIFS elapsed after an idle-channel arrival: transmit DIFS after
    /// generation, which falls inside the slot.
    Immediate,
}

pub trait MacPolicy {
    fn on_arrival(&mut self, arrival: &Arrival, channel: &ChannelView, rng: &mut SplitMix64);

    fn intent(&self, vehicle: VehicleId, channel: &ChannelView) -> TxIntent;

    /// Called once per waiting vehicle after the slot's transmitters are
    /// known. Repeated busy calls must be idempotent: the engine collapses
    /// runs of busy slots into one call.
    fn on_slot_end(&mut self, vehicle: VehicleId, busy: bool, rng: &mut SplitMix64);

    /// The vehicle's packet left the buffer, either on air or dropped.
    fn on_release(&mut self, vehicle: VehicleId);

    /// A packet was received collision-free by every other vehicle.
    fn on_delivered(&mut self, _packet: &PacketMeta) {}

    /// A busy period starting at `start_slot` could not be decoded. Policies
    /// may use how many packets collided and whether they were among them,
    /// but not who the other senders were.
    fn on_collision(&mut self, _senders: &[VehicleId], _start_slot: u64) {}
}

/// Which MAC to simulate, as named on the command line and in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// 802.11p with the given contention window; `None` uses the scenario's.
    Dot11p { cw: Option<u32> },
    /// SpCDC; `oracle` reads the true contender count instead of estimating it.
    Spcdc { oracle: bool },
}

impl PolicyKind {
    /// Effective contention window for 802.11p, if this is 802.11p.
    pub fn cw(&self, params: &ScenarioParams) -> Option<u32> {
        match self {
            PolicyKind::Dot11p { cw } => Some(cw.unwrap_or(params.cw)),
            PolicyKind::Spcdc { .. } => None,
        }
    }

    /// Scenario with this policy's overrides applied.
    pub fn apply(&self, params: &ScenarioParams) -> ScenarioParams {
        match self.cw(params) {
            Some(cw) => params.with_cw(cw),
            None => params.clone(),
        }
    }

    /// Label used in result rows, with the window resolved.
    pub fn label(&self, params: &ScenarioParams) -> String {
        match self {
            PolicyKind::Dot11p { .. } => format!("dot11p:{}", self.cw(params).unwrap()),
            PolicyKind::Spcdc { oracle: false } => "spcdc".into(),
            PolicyKind::Spcdc { oracle: true } => "spcdc-oracle".into(),
        }
    }

    pub fn is_spcdc(&self) -> bool {
        matches!(self, PolicyKind::Spcdc { .. })
    }

    pub fn build(&self, params: &ScenarioParams, timing: &DerivedTiming) -> Box<dyn MacPolicy> {
        match *self {
            PolicyKind::Dot11p { .. } => Box::new(DcfPolicy::new(&self.apply(params), timing)),
            PolicyKind::Spcdc { oracle } => Box::new(SpcdcPolicy::new(params, oracle)),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "dot11p" => return Ok(PolicyKind::Dot11p { cw: None }),
            "spcdc" => return Ok(PolicyKind::Spcdc { oracle: false }),
            "spcdc-oracle" => return Ok(PolicyKind::Spcdc { oracle: true }),
            _ => {}
        }
        if let Some(cw) = s.strip_prefix("dot11p:") {
            if let Ok(cw) = cw.parse::<u32>() {
                if cw >= 1 {
                    return Ok(PolicyKind::Dot11p { cw: Some(cw) });
                }
            }
        }
        Err(Error::InvalidPolicy(s.to_string()))
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Dot11p { cw: None } => write!(f, "dot11p"),
            PolicyKind::Dot11p { cw: Some(cw) } => write!(f, "dot11p:{cw}"),
            PolicyKind::Spcdc { oracle: false } => write!(f, "spcdc"),
            PolicyKind::Spcdc { oracle: true } => write!(f, "spcdc-oracle"),
        }
    }
}
