//! Per-packet records and their CSV export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mac::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Delivered,
    Collided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub vehicle_id: VehicleId,
    pub gen_time_s: f64,
    pub tx_start_s: f64,
    pub outcome: Outcome,
    pub access_delay_s: f64,
    pub service_time_s: f64,
}

/// Resolved packets of one replication in transmission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub records: Vec<PacketRecord>,
}

impl SimTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let records = r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }

    /// Outcome sequence of one vehicle ordered by generation time.
    pub fn vehicle_sequence(&self, vehicle: VehicleId) -> Vec<(Outcome, f64)> {
        let mut rows: Vec<&PacketRecord> = self.records.iter().filter(|r| r.vehicle_id == vehicle).collect();
        rows.sort_by(|a, b| a.gen_time_s.total_cmp(&b.gen_time_s));
        rows.iter().map(|r| (r.outcome, r.service_time_s)).collect()
    }
}
