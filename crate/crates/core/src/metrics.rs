//! Key-size reports and per-slot choice histograms.

use std::io::Write;

use serde::Serialize;

use crate::alloc::{PairAllocation, PairSet};
use crate::channel::ChannelTable;
use crate::num::Real;
use crate::orbit::VisibilityTable;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairReport {
    pub station_a: u32,
    pub station_b: u32,
    pub bits: u64,
    pub excluded: bool,
}

/// Optional run details; absent fields are omitted from the JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_multiplier_change: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_bound: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_gap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_nodes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase2_rounds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scheduler: String,
    /// Smallest pair total over pairs not excluded (0 if none remain).
    pub min_key_bits: u64,
    pub total_key_bits: u64,
    pub scheduled_links: u64,
    pub pairs: Vec<PairReport>,
    pub excluded_pairs: Vec<(u32, u32)>,
    pub metadata: RunMetadata,
}

/// Builds the report of an allocation. `excluded` pairs (by station index)
/// count towards the total but not towards the minimum.
pub fn summarize(scheduler: &str, alloc: &PairAllocation, excluded: &PairSet) -> RunReport {
    let ids = alloc.station_ids();
    let totals = alloc.pair_totals();
    let pairs: Vec<PairReport> = alloc
        .pairs()
        .pairs()
        .iter()
        .zip(&totals)
        .map(|(&(a, b), &bits)| PairReport {
            station_a: ids[a],
            station_b: ids[b],
            bits,
            excluded: excluded.index_of(a, b).is_some(),
        })
        .collect();
    RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scheduler: scheduler.to_string(),
        min_key_bits: pairs.iter().filter(|p| !p.excluded).map(|p| p.bits).min().unwrap_or(0),
        total_key_bits: totals.iter().sum(),
        scheduled_links: 0,
        excluded_pairs: pairs.iter().filter(|p| p.excluded).map(|p| (p.station_a, p.station_b)).collect(),
        pairs,
        metadata: RunMetadata::default(),
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV `station_a,station_b,bits,excluded`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "station_a,station_b,bits,excluded")?;
        for p in &self.pairs {
            writeln!(w, "{},{},{},{}", p.station_a, p.station_b, p.bits, u8::from(p.excluded))?;
        }
        w.flush()
    }
}

/// One comparison row per scheduler.
pub fn write_comparison<W: Write>(reports: &[RunReport], out: W) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "scheduler,min_key_bits,total_key_bits,scheduled_links,excluded_pairs")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.scheduler,
            r.min_key_bits,
            r.total_key_bits,
            r.scheduled_links,
            r.excluded_pairs.len()
        )?;
    }
    w.flush()
}

/// `counts[k]`: number of (entity, slot) cells with exactly `k` choices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn mass(&self) -> u64 {
        self.counts.iter().sum()
    }
    /// Largest choice count that occurs.
    pub fn max_support(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).unwrap_or(0)
    }
    /// Smallest nonzero choice count that occurs.
    pub fn min_positive_support(&self) -> Option<usize> {
        self.counts.iter().skip(1).position(|&c| c > 0).map(|k| k + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceHistograms {
    /// Stations a satellite can choose from.
    pub satellite_view: Histogram,
    /// Satellites a station can choose from.
    pub station_view: Histogram,
}

impl ChoiceHistograms {
    /// CSV `choices,satellite_view,station_view`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "choices,satellite_view,station_view")?;
        let n = self.satellite_view.counts.len().max(self.station_view.counts.len());
        for k in 0..n {
            let a = self.satellite_view.counts.get(k).copied().unwrap_or(0);
            let b = self.station_view.counts.get(k).copied().unwrap_or(0);
            writeln!(w, "{k},{a},{b}")?;
        }
        w.flush()
    }
}

/// Histograms over all slots from `(satellite, station, slot)` links, each
/// listed once and grouped by slot.
pub fn choice_histograms_from_links(
    satellite_count: usize,
    station_count: usize,
    slot_count: u32,
    links: impl Iterator<Item = (u32, u32, u32)>,
) -> ChoiceHistograms {
    let mut sat_counts = vec![0u64; station_count + 1];
    let mut sta_counts = vec![0u64; satellite_count + 1];
    let mut per_sat = vec![0usize; satellite_count];
    let mut per_sta = vec![0usize; station_count];
    let mut flush = |per_sat: &mut Vec<usize>, per_sta: &mut Vec<usize>| {
        for c in per_sat.iter_mut() {
            sat_counts[*c] += 1;
            *c = 0;
        }
        for c in per_sta.iter_mut() {
            sta_counts[*c] += 1;
            *c = 0;
        }
    };
    let mut current = 0u32;
    let mut flushed = 0u32;
    for (s, g, t) in links {
        while current < t {
            flush(&mut per_sat, &mut per_sta);
            flushed += 1;
            current += 1;
        }
        per_sat[s as usize] += 1;
        per_sta[g as usize] += 1;
    }
    while flushed < slot_count {
        flush(&mut per_sat, &mut per_sta);
        flushed += 1;
    }
    ChoiceHistograms {
        satellite_view: Histogram { counts: sat_counts },
        station_view: Histogram { counts: sta_counts },
    }
}

/// Choice histograms of geometric visibility.
pub fn choice_histograms<T: Real>(vis: &VisibilityTable<T>) -> ChoiceHistograms {
    choice_histograms_from_links(
        vis.satellite_count(),
        vis.station_count(),
        vis.slot_count(),
        vis.samples().iter().map(|s| (s.satellite, s.station, s.slot)),
    )
}

/// Choice histograms of the usable links of a channel table.
pub fn choice_histograms_for_table<T: Real>(table: &ChannelTable<T>) -> ChoiceHistograms {
    choice_histograms_from_links(
        table.satellite_count(),
        table.station_count(),
        table.slot_count(),
        table.rows().iter().map(|r| (r.satellite, r.station, r.slot)),
    )
}
