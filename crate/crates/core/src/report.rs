//! Output serialization: mapping tables, stats reports, run manifests.
//!
//! Everything here is deterministic: rows sort by read id, JSON objects
//! use fixed field order, and manifests carry no timestamps, so re-running
//! with the same inputs reproduces outputs byte for byte.

use crate::system::{
    compute_area, compute_energy, compute_time, AreaBreakdown, EnergyBreakdown, MappingResult,
    RunStats, SystemConfig, TimeBreakdown,
};
use serde::Serialize;

pub const STATS_VERSION: u32 = 1;

/// `read_id<TAB>ref_pos<TAB>strand<TAB>affine_distance<TAB>traceback`,
/// sorted by read id; unmapped reads keep placeholders.
pub fn write_mapping_tsv(results: &[MappingResult]) -> String {
    let mut rows: Vec<&MappingResult> = results.iter().collect();
    rows.sort_by(|a, b| a.read_id.cmp(&b.read_id));
    let mut out = String::from("read_id\tref_pos\tstrand\taffine_distance\ttraceback\n");
    for r in rows {
        match r.ref_pos {
            Some(pos) => {
                let trace = r.trace.as_ref().map_or_else(|| "*".into(), |t| t.rle());
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    r.read_id,
                    pos,
                    r.strand.symbol(),
                    r.distance,
                    trace
                ));
            }
            None => out.push_str(&format!("{}\t.\t.\t.\t.\n", r.read_id)),
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleTotals {
    pub linear: u64,
    pub affine: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchTotals {
    pub linear_magic: u64,
    pub linear_write: u64,
    pub affine_magic: u64,
    pub affine_write: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeReport {
    pub dp_memory_s: f64,
    pub transfer_s: f64,
    pub riscv_s: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub crossbars_j: f64,
    pub controllers_j: f64,
    pub peripherals_j: f64,
    pub riscv_j: f64,
    pub transfer_j: f64,
    pub total_j: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaReport {
    pub crossbar_um2: f64,
    pub crossbars_mm2: f64,
    pub controllers_mm2: f64,
    pub peripherals_mm2: f64,
    pub riscv_mm2: f64,
    pub total_mm2: f64,
}

/// The full stats report serialized after a mapping run.
#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub stats_version: u32,
    pub k_l: u64,
    pub k_a: u64,
    pub j_l: u64,
    pub j_a: u64,
    pub riscv_instances: u64,
    pub crossbars_used: u64,
    pub reads_total: u64,
    pub reads_mapped: u64,
    pub bits_written: u64,
    pub bits_read: u64,
    pub cycles: CycleTotals,
    pub switches: SwitchTotals,
    pub time: TimeReport,
    pub energy: EnergyReport,
    pub area: AreaReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

pub fn build_stats_report(
    stats: &RunStats,
    cfg: &SystemConfig,
    accuracy: Option<f64>,
) -> StatsReport {
    let time = compute_time(stats, cfg);
    let energy = compute_energy(stats, cfg, &time);
    let area = compute_area(cfg, stats.crossbars_used);
    stats_report_from_parts(stats, cfg, &time, &energy, &area, accuracy)
}

pub fn stats_report_from_parts(
    stats: &RunStats,
    cfg: &SystemConfig,
    time: &TimeBreakdown,
    energy: &EnergyBreakdown,
    area: &AreaBreakdown,
    accuracy: Option<f64>,
) -> StatsReport {
    let linear_cycles = stats.k_l * cfg.instance.linear_cycles;
    let affine_cycles = stats.k_a * cfg.instance.affine_cycles;
    let sw = SwitchTotals {
        linear_magic: stats.j_l * cfg.instance.linear_magic_switches,
        linear_write: stats.j_l * cfg.instance.linear_write_switches,
        affine_magic: stats.j_a * cfg.instance.affine_magic_switches,
        affine_write: stats.j_a * cfg.instance.affine_write_switches,
        total: 0,
    };
    let sw_total = sw.linear_magic + sw.linear_write + sw.affine_magic + sw.affine_write;
    StatsReport {
        stats_version: STATS_VERSION,
        k_l: stats.k_l,
        k_a: stats.k_a,
        j_l: stats.j_l,
        j_a: stats.j_a,
        riscv_instances: stats.riscv_instances,
        crossbars_used: stats.crossbars_used,
        reads_total: stats.reads_total,
        reads_mapped: stats.reads_mapped,
        bits_written: stats.bits_written,
        bits_read: stats.bits_read,
        cycles: CycleTotals {
            linear: linear_cycles,
            affine: affine_cycles,
            total: linear_cycles + affine_cycles,
        },
        switches: SwitchTotals {
            total: sw_total,
            ..sw
        },
        time: TimeReport {
            dp_memory_s: time.dp_memory_s,
            transfer_s: time.transfer_s,
            riscv_s: time.riscv_s,
            wall_s: time.wall_s,
        },
        energy: EnergyReport {
            crossbars_j: energy.crossbars_j,
            controllers_j: energy.controllers_j,
            peripherals_j: energy.peripherals_j,
            riscv_j: energy.riscv_j,
            transfer_j: energy.transfer_j,
            total_j: energy.total_j,
        },
        area: AreaReport {
            crossbar_um2: area.crossbar_um2,
            crossbars_mm2: area.crossbars_mm2,
            controllers_mm2: area.controllers_mm2,
            peripherals_mm2: area.peripherals_mm2,
            riscv_mm2: area.riscv_mm2,
            total_mm2: area.total_mm2,
        },
        accuracy,
    }
}

pub fn stats_json(report: &StatsReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("stats serialize");
    out.push('\n');
    out
}

/// Reproducibility manifest written next to every output: the resolved
/// configuration, input digests, and the seed. No timestamps, so reruns
/// are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub input_digests: Vec<(String, String)>,
    pub config: SystemConfig,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, cfg: &SystemConfig) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            input_digests: Vec::new(),
            config: cfg.clone(),
        }
    }

    pub fn with_input(mut self, name: &str, digest: [u8; 32]) -> Self {
        self.input_digests.push((name.to_string(), hex(&digest)));
        self
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("manifest serialize");
        out.push('\n');
        out
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of arbitrary file bytes for manifests.
pub fn digest_bytes(bytes: &[u8]) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Strand;
    use crate::wf::{EditOp, Traceback};

    #[test]
    fn tsv_is_sorted_and_handles_unmapped() {
        let results = vec![
            MappingResult {
                read_id: "b".into(),
                read_idx: 1,
                ref_pos: None,
                strand: Strand::Forward,
                distance: 0,
                trace: None,
                saturated: false,
            },
            MappingResult {
                read_id: "a".into(),
                read_idx: 0,
                ref_pos: Some(17),
                strand: Strand::Reverse,
                distance: 2,
                trace: Some(Traceback {
                    ops: vec![EditOp::Match, EditOp::Substitute],
                    window_start: 0,
                }),
                saturated: false,
            },
        ];
        let tsv = write_mapping_tsv(&results);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "read_id\tref_pos\tstrand\taffine_distance\ttraceback");
        assert_eq!(lines[1], "a\t17\t-\t2\t1M1X");
        assert_eq!(lines[2], "b\t.\t.\t.\t.");
    }

    #[test]
    fn stats_report_reconciles_totals() {
        let cfg = SystemConfig::default();
        let stats = RunStats {
            k_l: 3,
            j_l: 7,
            k_a: 2,
            j_a: 9,
            ..RunStats::default()
        };
        let report = build_stats_report(&stats, &cfg, Some(0.5));
        assert_eq!(report.cycles.linear, 3 * 258_620);
        assert_eq!(report.cycles.affine, 2 * 1_308_699);
        assert_eq!(
            report.switches.total,
            7 * 509_883 + 9 * (1_271_921 + 1_277_495)
        );
        let json = stats_json(&report);
        assert!(json.contains("\"stats_version\": 1"));
        assert!(json.contains("\"accuracy\": 0.5"));
    }

    #[test]
    fn manifest_is_deterministic() {
        let cfg = SystemConfig::default();
        let a = RunManifest::new("map", 7, &cfg).with_input("ref", [1; 32]);
        let b = RunManifest::new("map", 7, &cfg).with_input("ref", [1; 32]);
        assert_eq!(a.to_json(), b.to_json());
    }
}
