//! Scenario parameters and the timing constants derived from them.
//!
//! All quantities are SI: seconds, bits per second, bytes for lengths.
//! Scenario files are flat `key = value` text (TOML syntax) or a JSON
//! object with the same keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when checking that DIFS sits on the slot grid.
const GRID_EPS: f64 = 1e-9;

/// Inputs of one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Packet generation rate per vehicle, packets/s.
    pub lambda: f64,
    /// Vehicles in the fully connected network.
    pub n_vehicles: usize,
    /// Contention window of 802.11p, slots.
    pub cw: u32,
    /// Backoff slot duration, s.
    pub slot: f64,
    pub difs: f64,
    /// Mean payload length (MAC header excluded), bytes.
    pub payload_bytes: f64,
    /// Channel data rate, bit/s.
    pub data_rate: f64,
    pub phy_preamble: f64,
    pub plcp_header: f64,
    pub mac_header_bytes: f64,
    pub prop_delay: f64,
    /// SpCDC multiplier: idle slots reserved per contender.
    pub spcdc_c: u32,
    /// SpCDC semi-persistent period, s.
    pub spcdc_period: f64,
}

impl Default for ScenarioParams {
    /// 6 Mbit/s, 10 packets/s, 200 byte payload, 100 vehicles, CW = 16.
    fn default() -> Self {
        Self {
            lambda: 10.0,
            n_vehicles: 100,
            cw: 16,
            slot: 16e-6,
            difs: 64e-6,
            payload_bytes: 200.0,
            data_rate: 6e6,
            phy_preamble: 28e-6,
            plcp_header: 4e-6,
            mac_header_bytes: 50.0,
            prop_delay: 0.0,
            spcdc_c: 3,
            spcdc_period: 1.0,
        }
    }
}

/// Timing constants shared by the analytic models and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedTiming {
    /// PHY preamble + PLCP header + MAC header airtime, s.
    pub t_header: f64,
    /// Airtime of one packet including headers and propagation, s.
    pub t_tr: f64,
    /// Slots one transmission occupies on the simulator grid.
    pub slots_per_tx: u64,
    /// DIFS expressed in slots.
    pub difs_slots: u64,
}

impl ScenarioParams {
    /// One of the operating points of the standard DSRC parameter table.
    pub fn table1(data_rate: f64, lambda: f64, payload_bytes: f64, n_vehicles: usize) -> Self {
        Self {
            data_rate,
            lambda,
            payload_bytes,
            n_vehicles,
            ..Self::default()
        }
    }

    pub fn with_vehicles(&self, n_vehicles: usize) -> Self {
        Self {
            n_vehicles,
            ..self.clone()
        }
    }

    pub fn with_cw(&self, cw: u32) -> Self {
        Self { cw, ..self.clone() }
    }

    /// Generation period 1/lambda, s.
    pub fn period(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Checks every field invariant, then returns the derived timing.
    pub fn validate(&self) -> Result<DerivedTiming> {
        derive_timing(self)
    }

    /// Parses a scenario from TOML-style `key = value` text.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Accepts either rendering; JSON is recognised by a leading `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_kv_str(text)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Flat `key = value` rendering, one parameter per line.
    pub fn to_kv_string(&self) -> String {
        toml::to_string(self).expect("scenario parameters always serialise")
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

/// Airtime of one packet and its footprint on the slot grid.
///
/// The header airtime is the PHY preamble plus PLCP header plus the MAC
/// header bits sent at the data rate; the payload excludes the MAC header.
pub fn derive_timing(params: &ScenarioParams) -> Result<DerivedTiming> {
    positive("lambda", params.lambda)?;
    if params.n_vehicles < 1 {
        return Err(Error::invalid("n_vehicles", "need at least one vehicle"));
    }
    if params.cw < 1 {
        return Err(Error::invalid("cw", "contention window must be >= 1"));
    }
    positive("slot", params.slot)?;
    positive("difs", params.difs)?;
    positive("data_rate", params.data_rate)?;
    non_negative("payload_bytes", params.payload_bytes)?;
    non_negative("phy_preamble", params.phy_preamble)?;
    non_negative("plcp_header", params.plcp_header)?;
    non_negative("mac_header_bytes", params.mac_header_bytes)?;
    non_negative("prop_delay", params.prop_delay)?;
    positive("spcdc_period", params.spcdc_period)?;

    let ratio = params.difs / params.slot;
    let difs_slots = ratio.round();
    if (ratio - difs_slots).abs() > GRID_EPS * ratio.max(1.0) || difs_slots < 1.0 {
        return Err(Error::invalid(
            "difs",
            format!("must be a whole number of slots, got {ratio} slots"),
        ));
    }

    let t_header =
        params.phy_preamble + params.plcp_header + params.mac_header_bytes * 8.0 / params.data_rate;
    let t_tr = params.payload_bytes * 8.0 / params.data_rate + t_header + params.prop_delay;
    if t_tr <= 0.0 {
        return Err(Error::invalid(
            "payload_bytes",
            "transmission time is zero; a packet must occupy at least one slot",
        ));
    }
    if params.period() <= t_tr {
        return Err(Error::invalid(
            "lambda",
            format!(
                "generation period {} s does not exceed transmission time {t_tr} s",
                params.period()
            ),
        ));
    }
    // Absorb float noise so an exact multiple does not round up a slot.
    let slots = t_tr / params.slot;
    let slots_per_tx = if (slots - slots.round()).abs() < GRID_EPS * slots {
        slots.round()
    } else {
        slots.ceil()
    }
    .max(1.0) as u64;

    Ok(DerivedTiming {
        t_header,
        t_tr,
        slots_per_tx,
        difs_slots: difs_slots as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    #[test]
    fn timing_6mbps_200b() {
        let t = derive_timing(&ScenarioParams::table1(6e6, 10.0, 200.0, 10)).unwrap();
        // 28 + 4 + 400/6 us and 1600/6 us more for the payload.
        assert!(close(t.t_header, 32e-6 + 400.0 / 6e6));
        assert!(close(t.t_tr, 32e-6 + 2000.0 / 6e6));
        assert!((t.t_header - 98.667e-6).abs() < 1e-9);
        assert!((t.t_tr - 365.333e-6).abs() < 1e-9);
        assert_eq!(t.slots_per_tx, 23);
        assert_eq!(t.difs_slots, 4);
    }

    #[test]
    fn timing_24mbps_400b() {
        let t = derive_timing(&ScenarioParams::table1(24e6, 2.0, 400.0, 10)).unwrap();
        assert!(close(t.t_tr, 182.0e-6));
        assert_eq!(t.slots_per_tx, 12);
    }

    #[test]
    fn zero_airtime_is_rejected() {
        let p = ScenarioParams {
            payload_bytes: 0.0,
            phy_preamble: 0.0,
            plcp_header: 0.0,
            mac_header_bytes: 0.0,
            ..ScenarioParams::default()
        };
        match derive_timing(&p) {
            Err(Error::InvalidParams { field, .. }) => assert_eq!(field, "payload_bytes"),
            other => panic!("expected invalid params, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let cases: Vec<(ScenarioParams, &str)> = vec![
            (
                ScenarioParams {
                    lambda: 0.0,
                    ..Default::default()
                },
                "lambda",
            ),
            (
                ScenarioParams {
                    n_vehicles: 0,
                    ..Default::default()
                },
                "n_vehicles",
            ),
            (
                ScenarioParams {
                    cw: 0,
                    ..Default::default()
                },
                "cw",
            ),
            (
                ScenarioParams {
                    slot: -1.0,
                    ..Default::default()
                },
                "slot",
            ),
            (
                ScenarioParams {
                    difs: 50e-6,
                    ..Default::default()
                },
                "difs",
            ),
            (
                ScenarioParams {
                    data_rate: 0.0,
                    ..Default::default()
                },
                "data_rate",
            ),
            (
                ScenarioParams {
                    lambda: 5000.0,
                    ..Default::default()
                },
                "lambda",
            ),
        ];
        for (p, want) in cases {
            match derive_timing(&p) {
                Err(Error::InvalidParams { field, .. }) => assert_eq!(field, want),
                other => panic!("{want}: expected invalid params, got {other:?}"),
            }
        }
    }

    #[test]
    fn kv_and_json_are_interchangeable() {
        let kv = "lambda = 2.0\nn_vehicles = 40\ndata_rate = 24e6\n# comment\npayload_bytes = 400.0\n";
        let json = r#"{"lambda": 2.0, "n_vehicles": 40, "data_rate": 24e6, "payload_bytes": 400}"#;
        let a = ScenarioParams::parse(kv).unwrap();
        let b = ScenarioParams::parse(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cw, 16);
        assert_eq!(ScenarioParams::parse(&a.to_kv_string()).unwrap(), a);
    }
}
