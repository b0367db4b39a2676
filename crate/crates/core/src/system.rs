//! End-to-end pipeline orchestration and the time/energy/area models.
//!
//! `run_mapping` drives the architecture: reads stream into per-crossbar
//! FIFOs until one fills, every loaded crossbar then drains through linear
//! iterations and affine batches, and infrequent minimizers route to the
//! scalar-core offload pool instead. Candidates merge into one best
//! placement per read. `flat_pipeline` computes the same filter/align
//! pipeline with no architectural structure at all, and `oracle_map` goes
//! further and aligns every candidate segment with an unbanded full DP;
//! both serve as references the architecture is checked against.

use crate::cost::{EnergyTimeConstants, InstanceCost};
use crate::crossbar::{
    candidate_readout_bits, min_extract, CandidateResult, CostCounters, CrossbarConfig,
    CrossbarError, CrossbarState, QueuedRead,
};
use crate::genome::{reverse_complement_codes, Code, Read, Strand};
use crate::index::{
    read_minimizers, CrossbarLayout, IndexError, IndexParams, MinimizerIndex, ReferenceGenome,
};
use crate::wf::{linear_wf_banded, affine_wf_banded, Traceback, WfParams, WfWeights};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("layout/config mismatch: {0}")]
    ParameterMismatch(String),
    #[error("read {id} has length {got}, index was built for {want}")]
    ReadLength { id: String, got: usize, want: usize },
    #[error(transparent)]
    Crossbar(#[from] CrossbarError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Wf(#[from] crate::wf::WfError),
}

/// Memory hierarchy dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hierarchy {
    pub chips: u64,
    pub banks_per_chip: u64,
    pub crossbars_per_bank: u64,
}

impl Default for Hierarchy {
    fn default() -> Self {
        Self {
            chips: 32,
            banks_per_chip: 512,
            crossbars_per_bank: 512,
        }
    }
}

impl Hierarchy {
    pub fn total_crossbars(&self) -> u64 {
        self.chips * self.banks_per_chip * self.crossbars_per_bank
    }

    pub fn total_banks(&self) -> u64 {
        self.chips * self.banks_per_chip
    }
}

/// The scalar-core offload pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiscvConfig {
    pub cores: u64,
    /// Latency of one affine instance on a core, seconds.
    pub instance_latency_s: f64,
    pub core_power_w: f64,
    pub cache_power_w: f64,
    pub core_area_mm2: f64,
    pub cache_area_mm2: f64,
}

impl Default for RiscvConfig {
    fn default() -> Self {
        Self {
            cores: 128,
            instance_latency_s: 88e-6,
            core_power_w: 40e-3,
            cache_power_w: 8e-3,
            core_area_mm2: 0.11,
            cache_area_mm2: 0.05,
        }
    }
}

/// Bus bandwidth and per-bit transfer energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    pub bus_bytes_per_s: f64,
    pub write_j_per_bit: f64,
    pub read_j_per_bit: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            bus_bytes_per_s: 32e9,
            write_j_per_bit: 11.7e-12,
            read_j_per_bit: 5.64e-12,
        }
    }
}

/// One synthesized controller kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCost {
    pub power_w: f64,
    pub area_um2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub crossbar: UnitCost,
    pub bank: UnitCost,
    pub chip: UnitCost,
    pub pim: UnitCost,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            crossbar: UnitCost {
                power_w: 9.43e-6,
                area_um2: 21.0,
            },
            bank: UnitCost {
                power_w: 0.42e-3,
                area_um2: 939.0,
            },
            chip: UnitCost {
                power_w: 9.4e-3,
                area_um2: 20_091.0,
            },
            pim: UnitCost {
                power_w: 0.5e-3,
                area_um2: 938.0,
            },
        }
    }
}

/// Memory peripheral circuits: decode/drive per bank, read-write circuit
/// per crossbar, pass gates per bitline and wordline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeripheralConfig {
    pub decode_drive: UnitCost,
    pub rw_circuit: UnitCost,
    pub selector_passgate: UnitCost,
    pub driver_passgate: UnitCost,
}

impl Default for PeripheralConfig {
    fn default() -> Self {
        Self {
            decode_drive: UnitCost {
                power_w: 129.1e-6,
                area_um2: 277.0,
            },
            rw_circuit: UnitCost {
                power_w: 10e-12,
                area_um2: 0.06,
            },
            selector_passgate: UnitCost {
                power_w: 20e-12,
                area_um2: 0.001,
            },
            driver_passgate: UnitCost {
                power_w: 20e-12,
                area_um2: 0.001,
            },
        }
    }
}

/// Memristive device resistances; stored for completeness, unused by the
/// cost model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceConstants {
    pub r_on_ohm: f64,
    pub r_off_ohm: f64,
}

impl Default for DeviceConstants {
    fn default() -> Self {
        Self {
            r_on_ohm: 50e3,
            r_off_ohm: 5e6,
        }
    }
}

/// Per-instance cycle and switch constants used by the time and energy
/// formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerInstanceConstants {
    pub linear_cycles: u64,
    pub linear_magic_switches: u64,
    pub linear_write_switches: u64,
    pub affine_cycles: u64,
    pub affine_magic_switches: u64,
    pub affine_write_switches: u64,
}

impl Default for PerInstanceConstants {
    fn default() -> Self {
        Self::calibrated_default()
    }
}

impl PerInstanceConstants {
    /// The single-crossbar constants at the default geometry (rl=150,
    /// eth=6, 3-bit linear cells, 5-bit affine cells, 32 buffer rows). The
    /// linear values equal the composed model exactly; the affine values
    /// are the calibrated reference the composed model must stay within
    /// 15% of.
    pub fn calibrated_default() -> Self {
        Self {
            linear_cycles: 258_620,
            linear_magic_switches: 254_384,
            linear_write_switches: 255_499,
            affine_cycles: 1_308_699,
            affine_magic_switches: 1_271_921,
            affine_write_switches: 1_277_495,
        }
    }

    /// Compose the constants for a non-default geometry.
    pub fn composed(rl: u64, eth: u64, linear_bits: u64, affine_bits: u64, rows: u64) -> Self {
        let l = crate::cost::linear_instance_cost(rl, eth, linear_bits, rows);
        let a = crate::cost::affine_instance_cost(rl, eth, affine_bits);
        Self {
            linear_cycles: l.total_cycles(),
            linear_magic_switches: l.magic_switches,
            linear_write_switches: l.write_switches,
            affine_cycles: a.total_cycles(),
            affine_magic_switches: a.magic_switches,
            affine_write_switches: a.write_switches,
        }
    }

    pub fn linear_instance(&self) -> InstanceCost {
        InstanceCost {
            magic_switches: self.linear_magic_switches,
            write_switches: self.linear_write_switches,
            ..InstanceCost::default()
        }
    }

    pub fn affine_instance(&self) -> InstanceCost {
        InstanceCost {
            magic_switches: self.affine_magic_switches,
            write_switches: self.affine_write_switches,
            ..InstanceCost::default()
        }
    }
}

/// Feature size of a memory cell, fixing the crossbar array area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AreaConstants {
    pub feature_nm: f64,
}

impl Default for AreaConstants {
    fn default() -> Self {
        Self { feature_nm: 30.0 }
    }
}

/// Everything the simulator needs to run and cost a mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub index: IndexParams,
    pub crossbar: CrossbarConfig,
    pub hierarchy: Hierarchy,
    pub riscv: RiscvConfig,
    pub transfer: TransferConfig,
    pub controllers: ControllerConfig,
    pub peripherals: PeripheralConfig,
    pub energy: EnergyTimeConstants,
    pub instance: PerInstanceConstants,
    pub device: DeviceConstants,
    pub area: AreaConstants,
    pub weights: WfWeights,
    /// Affine saturation value (5-bit cells).
    pub affine_sat: u8,
    /// Minimizer frequency at or below which work routes to the offload
    /// pool.
    pub low_th: usize,
    /// Per-crossbar read intake cap for a whole run; `u64::MAX` disables
    /// the cap.
    pub max_reads: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            index: IndexParams::default(),
            crossbar: CrossbarConfig::default(),
            hierarchy: Hierarchy::default(),
            riscv: RiscvConfig::default(),
            transfer: TransferConfig::default(),
            controllers: ControllerConfig::default(),
            peripherals: PeripheralConfig::default(),
            energy: EnergyTimeConstants::default(),
            instance: PerInstanceConstants::default(),
            device: DeviceConstants::default(),
            area: AreaConstants::default(),
            weights: WfWeights::default(),
            affine_sat: 31,
            low_th: 3,
            max_reads: 25_000,
        }
    }
}

impl SystemConfig {
    pub fn linear_params(&self) -> WfParams {
        WfParams {
            weights: self.weights,
            ..WfParams::linear(self.index.eth)
        }
    }

    pub fn affine_params(&self) -> WfParams {
        WfParams {
            weights: self.weights,
            ..WfParams::affine(self.index.eth, self.affine_sat)
        }
    }

    /// Refresh the per-instance constants after geometry overrides; the
    /// calibrated defaults are kept when the geometry is the default one.
    pub fn refresh_instance_constants(&mut self) {
        let default_geometry = self.index.rl == 150
            && self.index.eth == 6
            && self.affine_sat == 31
            && self.crossbar.linear_rows == 32;
        self.instance = if default_geometry {
            PerInstanceConstants::calibrated_default()
        } else {
            PerInstanceConstants::composed(
                self.index.rl as u64,
                self.index.eth as u64,
                u64::from(self.linear_params().bits),
                u64::from(self.affine_params().bits),
                self.crossbar.linear_rows as u64,
            )
        };
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        self.index
            .validate()
            .map_err(|e| SystemError::ParameterMismatch(e.to_string()))?;
        self.crossbar.validate(self.index.rl)?;
        self.linear_params()
            .validate()
            .map_err(|e| SystemError::ParameterMismatch(e.to_string()))?;
        self.affine_params()
            .validate()
            .map_err(|e| SystemError::ParameterMismatch(e.to_string()))?;
        if self.max_reads == 0 {
            return Err(SystemError::ParameterMismatch(
                "max_reads must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregate run counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    /// Linear iterations (cycle-level unit of the time model).
    pub k_l: u64,
    /// Linear row instances (unit of the energy model).
    pub j_l: u64,
    /// Affine batches.
    pub k_a: u64,
    /// Affine slot instances.
    pub j_a: u64,
    /// Affine instances offloaded to the scalar cores.
    pub riscv_instances: u64,
    pub bits_written: u64,
    pub bits_read: u64,
    pub crossbars_used: u64,
    pub reads_total: u64,
    pub reads_mapped: u64,
}

impl RunStats {
    fn absorb(&mut self, counters: &CostCounters) {
        self.k_l += counters.linear_iterations;
        self.j_l += counters.linear_instances;
        self.k_a += counters.affine_batches;
        self.j_a += counters.affine_instances;
        self.bits_written += counters.bits_written;
        self.bits_read += counters.bits_read;
    }
}

/// Final placement decision for one read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingResult {
    pub read_id: String,
    pub read_idx: usize,
    /// Best reference position; `None` when no candidate survived.
    pub ref_pos: Option<usize>,
    pub strand: Strand,
    pub distance: u32,
    pub trace: Option<Traceback>,
    /// The best candidate hit the affine saturation ceiling.
    pub saturated: bool,
}

impl MappingResult {
    fn unmapped(read_id: String, read_idx: usize) -> Self {
        Self {
            read_id,
            read_idx,
            ref_pos: None,
            strand: Strand::Forward,
            distance: 0,
            trace: None,
            saturated: false,
        }
    }
}

#[derive(Debug, Clone)]
struct Dispatch {
    strand: Strand,
    minimizer: u64,
    minimizer_offset: usize,
    route: Route,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Route {
    Crossbar(usize),
    Riscv,
}

struct ReadPrep {
    fwd: Arc<Vec<Code>>,
    rev: Arc<Vec<Code>>,
    dispatches: Vec<Dispatch>,
}

struct XbarRun {
    state: CrossbarState,
    candidates: Vec<CandidateResult>,
    error: Option<CrossbarError>,
}

impl XbarRun {
    fn drain(&mut self) {
        if self.error.is_some() {
            return;
        }
        while self.state.fifo_len() > 0 {
            if let Err(e) = self.state.run_linear_iteration() {
                self.error = Some(e);
                return;
            }
            if self.state.affine_buffer_full() {
                match self.state.run_affine_iteration(false) {
                    Ok(batch) => self.candidates.extend(batch),
                    Err(e) => {
                        self.error = Some(e);
                        return;
                    }
                }
            }
        }
    }

    fn flush(&mut self) {
        if self.error.is_some() {
            return;
        }
        match self.state.run_affine_iteration(true) {
            Ok(batch) => self.candidates.extend(batch),
            Err(e) => self.error = Some(e),
        }
    }
}

struct RiscvJob {
    read_idx: usize,
    strand: Strand,
    minimizer: u64,
    minimizer_offset: usize,
    codes: Arc<Vec<Code>>,
}

/// Map every read through the crossbar architecture.
///
/// Reads are seeded in both orientations. Each distinct minimizer routes
/// the read either to that minimizer's crossbars (bounded by the per-run
/// intake cap) or to the offload pool. The read stream pauses whenever a
/// FIFO fills; all loaded crossbars then drain before streaming resumes.
/// Partially filled affine buffers flush once the stream ends.
pub fn run_mapping(
    layout: &CrossbarLayout,
    index: &MinimizerIndex,
    reference: &ReferenceGenome,
    reads: &[Read],
    cfg: &SystemConfig,
) -> Result<(Vec<MappingResult>, RunStats), SystemError> {
    cfg.validate()?;
    if index.params != cfg.index {
        return Err(SystemError::ParameterMismatch(format!(
            "index parameters {:?} differ from configured {:?}",
            index.params, cfg.index
        )));
    }
    if layout.rows_per_crossbar != cfg.crossbar.linear_rows {
        return Err(SystemError::ParameterMismatch(format!(
            "layout used {} rows per crossbar, config says {}",
            layout.rows_per_crossbar, cfg.crossbar.linear_rows
        )));
    }
    if layout.low_th != cfg.low_th {
        return Err(SystemError::ParameterMismatch(format!(
            "layout used low_th {}, config says {}",
            layout.low_th, cfg.low_th
        )));
    }
    for read in reads {
        if read.seq.len() != cfg.index.rl {
            return Err(SystemError::ReadLength {
                id: read.id.clone(),
                got: read.seq.len(),
                want: cfg.index.rl,
            });
        }
    }

    let mut route_map: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for a in &layout.assignments {
        route_map.entry(a.minimizer).or_default().push(a.id);
    }
    let riscv_set = &layout.riscv_minimizers;
    let preps: Vec<ReadPrep> = crate::exec::map_indexed(reads, |_, read| {
        let fwd = Arc::new(read.seq.unpack());
        let rev = Arc::new(reverse_complement_codes(&fwd));
        let mut dispatches = Vec::new();
        for (strand, codes) in [(Strand::Forward, &fwd), (Strand::Reverse, &rev)] {
            for hit in read_minimizers(codes, &cfg.index) {
                if riscv_set.contains(&hit.minimizer) {
                    dispatches.push(Dispatch {
                        strand,
                        minimizer: hit.minimizer,
                        minimizer_offset: hit.position,
                        route: Route::Riscv,
                    });
                } else if let Some(ids) = route_map.get(&hit.minimizer) {
                    for &id in ids {
                        dispatches.push(Dispatch {
                            strand,
                            minimizer: hit.minimizer,
                            minimizer_offset: hit.position,
                            route: Route::Crossbar(id),
                        });
                    }
                }
            }
        }
        ReadPrep {
            fwd,
            rev,
            dispatches,
        }
    });

    let linear_params = cfg.linear_params();
    let affine_params = cfg.affine_params();
    let mut runs: Vec<XbarRun> = layout
        .assignments
        .iter()
        .map(|a| {
            let segments = a
                .segments
                .iter()
                .map(|loc| (*loc, index.extract_segment(reference, *loc)))
                .collect();
            CrossbarState::new(
                a.id,
                a.minimizer,
                segments,
                cfg.crossbar,
                linear_params,
                affine_params,
            )
            .map(|state| XbarRun {
                state,
                candidates: Vec::new(),
                error: None,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut riscv_jobs: Vec<RiscvJob> = Vec::new();
    for (read_idx, prep) in preps.iter().enumerate() {
        for d in &prep.dispatches {
            let codes = match d.strand {
                Strand::Forward => &prep.fwd,
                Strand::Reverse => &prep.rev,
            };
            match d.route {
                Route::Riscv => riscv_jobs.push(RiscvJob {
                    read_idx,
                    strand: d.strand,
                    minimizer: d.minimizer,
                    minimizer_offset: d.minimizer_offset,
                    codes: Arc::clone(codes),
                }),
                Route::Crossbar(id) => {
                    if runs[id].state.accepted >= cfg.max_reads {
                        continue;
                    }
                    let queued = QueuedRead {
                        read_idx,
                        strand: d.strand,
                        codes: Arc::clone(codes),
                        minimizer_offset: d.minimizer_offset,
                    };
                    if !runs[id].state.enqueue_read(queued.clone()) {
                        // Batch boundary: a FIFO filled, drain everything.
                        crate::exec::for_each_mut(&mut runs, XbarRun::drain);
                        let accepted = runs[id].state.enqueue_read(queued);
                        debug_assert!(accepted, "fifo must accept after a drain");
                    }
                }
            }
        }
    }
    crate::exec::for_each_mut(&mut runs, XbarRun::drain);
    crate::exec::for_each_mut(&mut runs, XbarRun::flush);
    for run in &mut runs {
        if let Some(e) = run.error.take() {
            return Err(e.into());
        }
    }

    // Offload pool: the same filter/align pipeline per (read, minimizer),
    // costed per affine instance instead of per crossbar iteration.
    let riscv_results: Vec<Option<CandidateResult>> =
        crate::exec::map_indexed(&riscv_jobs, |_, job| {
            riscv_align(job, index, reference, &linear_params, &affine_params).ok()?
        });

    let mut stats = RunStats {
        crossbars_used: layout.crossbar_count() as u64,
        reads_total: reads.len() as u64,
        ..RunStats::default()
    };
    let mut per_read: Vec<Vec<CandidateResult>> = (0..reads.len()).map(|_| Vec::new()).collect();
    for run in &runs {
        stats.absorb(&run.state.counters);
        for c in &run.candidates {
            per_read[c.read_idx].push(c.clone());
        }
    }
    for (job, result) in riscv_jobs.iter().zip(&riscv_results) {
        stats.bits_written += cfg.crossbar.read_slot_bits(job.codes.len()) as u64;
        if let Some(c) = result {
            stats.riscv_instances += 1;
            per_read[c.read_idx].push(c.clone());
        }
    }
    debug_assert!(stats.k_a <= stats.k_l);

    let results = finalize_results(reads, per_read, cfg.affine_sat);
    stats.reads_mapped = results.iter().filter(|r| r.ref_pos.is_some()).count() as u64;
    Ok((results, stats))
}

fn riscv_align(
    job: &RiscvJob,
    index: &MinimizerIndex,
    reference: &ReferenceGenome,
    linear_params: &WfParams,
    affine_params: &WfParams,
) -> Result<Option<CandidateResult>, SystemError> {
    let segments = match index.segments(job.minimizer) {
        Some(segs) => segs,
        None => return Ok(None),
    };
    let eth = linear_params.eth;
    let need = job.codes.len() + 2 * eth;
    let seg_len = index.params.segment_len();
    let mut distances = Vec::with_capacity(segments.len());
    let mut offsets = Vec::with_capacity(segments.len());
    for loc in segments {
        let seg = index.extract_segment(reference, *loc);
        let m_in_seg = loc.ref_pos - loc.seg_start;
        let ideal = m_in_seg as isize - job.minimizer_offset as isize - eth as isize;
        let woff = ideal.clamp(0, (seg_len - need) as isize) as usize;
        distances.push(linear_wf_banded(&job.codes, &seg[woff..woff + need], linear_params)?);
        offsets.push((loc, woff, seg));
    }
    let best = min_extract(&distances)?;
    if distances[best] >= linear_params.sat {
        return Ok(None);
    }
    let (loc, woff, seg) = &offsets[best];
    let window = &seg[*woff..*woff + need];
    let (distance, trace) = affine_wf_banded(&job.codes, window, affine_params)?;
    Ok(Some(CandidateResult {
        read_idx: job.read_idx,
        ref_pos: loc.seg_start + woff + trace.window_start,
        strand: job.strand,
        distance,
        trace,
    }))
}

/// Pick the best candidate per read: minimal affine distance, ties to the
/// lowest position, forward strand preferred.
fn finalize_results(
    reads: &[Read],
    per_read: Vec<Vec<CandidateResult>>,
    affine_sat: u8,
) -> Vec<MappingResult> {
    reads
        .iter()
        .zip(per_read)
        .enumerate()
        .map(|(read_idx, (read, candidates))| {
            let best = candidates.into_iter().min_by_key(|c| {
                (
                    c.distance,
                    c.ref_pos,
                    matches!(c.strand, Strand::Reverse) as u8,
                )
            });
            match best {
                None => MappingResult::unmapped(read.id.clone(), read_idx),
                Some(c) => MappingResult {
                    read_id: read.id.clone(),
                    read_idx,
                    ref_pos: Some(c.ref_pos),
                    strand: c.strand,
                    distance: u32::from(c.distance),
                    saturated: c.distance >= affine_sat,
                    trace: Some(c.trace),
                },
            }
        })
        .collect()
}

/// The architecture-free pipeline: per (read orientation, minimizer), the
/// banded filter runs over every indexed segment of that minimizer, the
/// per-minimizer winner goes through the banded affine pass, and the global
/// argmin decides. Equivalent to `run_mapping` up to crossbar chunking and
/// intake caps.
pub fn flat_pipeline(
    index: &MinimizerIndex,
    reference: &ReferenceGenome,
    reads: &[Read],
    cfg: &SystemConfig,
) -> Result<Vec<MappingResult>, SystemError> {
    cfg.validate()?;
    let linear_params = cfg.linear_params();
    let affine_params = cfg.affine_params();
    let results = crate::exec::map_indexed(reads, |read_idx, read| {
        let fwd = Arc::new(read.seq.unpack());
        let rev = Arc::new(reverse_complement_codes(&fwd));
        let mut candidates = Vec::new();
        for (strand, codes) in [(Strand::Forward, &fwd), (Strand::Reverse, &rev)] {
            for hit in read_minimizers(codes, &cfg.index) {
                let job = RiscvJob {
                    read_idx,
                    strand,
                    minimizer: hit.minimizer,
                    minimizer_offset: hit.position,
                    codes: Arc::clone(codes),
                };
                if let Ok(Some(c)) = riscv_align(&job, index, reference, &linear_params, &affine_params)
                {
                    candidates.push(c);
                }
            }
        }
        candidates
    });
    Ok(finalize_results(reads, results, cfg.affine_sat))
}

/// The exact mapper: every (minimizer, segment) candidate is aligned with
/// an unbanded full-matrix affine DP over the whole segment and the global
/// argmin wins. Replaces an external gold-standard mapper at desk scale.
pub fn oracle_map(
    index: &MinimizerIndex,
    reference: &ReferenceGenome,
    reads: &[Read],
    cfg: &SystemConfig,
) -> Vec<MappingResult> {
    let per_read = crate::exec::map_indexed(reads, |read_idx, read| {
        let fwd = Arc::new(read.seq.unpack());
        let rev = Arc::new(reverse_complement_codes(&fwd));
        let mut candidates: Vec<(u64, usize, Strand, Traceback)> = Vec::new();
        for (strand, codes) in [(Strand::Forward, &fwd), (Strand::Reverse, &rev)] {
            for hit in read_minimizers(codes, &cfg.index) {
                let Some(segments) = index.segments(hit.minimizer) else {
                    continue;
                };
                for loc in segments {
                    let seg = index.extract_segment(reference, *loc);
                    let aln = crate::wf::oracle::affine_semiglobal(codes, &seg, &cfg.weights);
                    candidates.push((
                        aln.distance,
                        loc.seg_start + aln.start,
                        strand,
                        aln.trace,
                    ));
                }
            }
        }
        let best = candidates.into_iter().min_by_key(|(d, pos, strand, _)| {
            (*d, *pos, matches!(strand, Strand::Reverse) as u8)
        });
        (read_idx, read.id.clone(), best)
    });
    per_read
        .into_iter()
        .map(|(read_idx, read_id, best)| match best {
            None => MappingResult::unmapped(read_id, read_idx),
            Some((distance, pos, strand, trace)) => MappingResult {
                read_id,
                read_idx,
                ref_pos: Some(pos),
                strand,
                distance: distance.min(u64::from(u32::MAX)) as u32,
                saturated: false,
                trace: Some(trace),
            },
        })
        .collect()
}

/// Latency of running `instances` affine alignments on the offload pool,
/// assuming perfectly parallel waves across the cores.
pub fn riscv_offload(instances: u64, cfg: &SystemConfig) -> f64 {
    instances.div_ceil(cfg.riscv.cores) as f64 * cfg.riscv.instance_latency_s
}

/// Wall time is the maximum of the in-memory compute time, the bus
/// transfer time, and the offload pool latency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeBreakdown {
    /// Exact in-memory compute time in nanoseconds.
    pub dp_memory_ns: f64,
    pub dp_memory_s: f64,
    pub transfer_s: f64,
    pub riscv_s: f64,
    pub wall_s: f64,
}

pub fn compute_time(stats: &RunStats, cfg: &SystemConfig) -> TimeBreakdown {
    let cycles = stats.k_l * cfg.instance.linear_cycles + stats.k_a * cfg.instance.affine_cycles;
    let dp_memory_ns = cycles as f64 * cfg.energy.t_clk_ns;
    let dp_memory_s = dp_memory_ns * 1e-9;
    let bytes = (stats.bits_written + stats.bits_read) as f64 / 8.0;
    let transfer_s = bytes / cfg.transfer.bus_bytes_per_s;
    let riscv_s = riscv_offload(stats.riscv_instances, cfg);
    TimeBreakdown {
        dp_memory_ns,
        dp_memory_s,
        transfer_s,
        riscv_s,
        wall_s: dp_memory_s.max(transfer_s).max(riscv_s),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub crossbars_j: f64,
    pub controllers_j: f64,
    pub peripherals_j: f64,
    pub riscv_j: f64,
    pub transfer_j: f64,
    pub total_j: f64,
}

/// Aggregate controller power across the hierarchy.
pub fn controller_power_w(cfg: &SystemConfig) -> f64 {
    let h = &cfg.hierarchy;
    cfg.controllers.crossbar.power_w * h.total_crossbars() as f64
        + cfg.controllers.bank.power_w * h.total_banks() as f64
        + cfg.controllers.chip.power_w * h.chips as f64
        + cfg.controllers.pim.power_w
}

/// Aggregate peripheral power across the hierarchy.
pub fn peripheral_power_w(cfg: &SystemConfig) -> f64 {
    let h = &cfg.hierarchy;
    let xbars = h.total_crossbars() as f64;
    cfg.peripherals.decode_drive.power_w * h.total_banks() as f64
        + cfg.peripherals.rw_circuit.power_w * xbars
        + cfg.peripherals.selector_passgate.power_w * xbars * cfg.crossbar.cols as f64
        + cfg.peripherals.driver_passgate.power_w * xbars * cfg.crossbar.rows as f64
}

pub fn riscv_power_w(cfg: &SystemConfig) -> f64 {
    cfg.riscv.cores as f64 * (cfg.riscv.core_power_w + cfg.riscv.cache_power_w)
}

/// Crossbar energy: per-instance switch counts weighted by the switch
/// energies, times the instance counts. Power-proportional components
/// (controllers, peripherals, cores) integrate over wall time; transfers
/// pay per bit moved.
pub fn compute_energy(stats: &RunStats, cfg: &SystemConfig, time: &TimeBreakdown) -> EnergyBreakdown {
    let e = &cfg.energy;
    let fj = 1e-15;
    let linear = (e.e_magic_fj * cfg.instance.linear_magic_switches as f64
        + e.e_write_fj * cfg.instance.linear_write_switches as f64)
        * stats.j_l as f64;
    let affine = (e.e_magic_fj * cfg.instance.affine_magic_switches as f64
        + e.e_write_fj * cfg.instance.affine_write_switches as f64)
        * stats.j_a as f64;
    let crossbars_j = (linear + affine) * fj;
    let controllers_j = controller_power_w(cfg) * time.wall_s;
    let peripherals_j = peripheral_power_w(cfg) * time.wall_s;
    let riscv_j = riscv_power_w(cfg) * time.wall_s;
    let transfer_j = stats.bits_written as f64 * cfg.transfer.write_j_per_bit
        + stats.bits_read as f64 * cfg.transfer.read_j_per_bit;
    EnergyBreakdown {
        crossbars_j,
        controllers_j,
        peripherals_j,
        riscv_j,
        transfer_j,
        total_j: crossbars_j + controllers_j + peripherals_j + riscv_j + transfer_j,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AreaBreakdown {
    pub crossbar_um2: f64,
    pub crossbars_mm2: f64,
    pub controllers_mm2: f64,
    pub peripherals_mm2: f64,
    pub riscv_mm2: f64,
    pub total_mm2: f64,
}

/// Area model: a memory cell occupies `4F^2`; controllers and peripherals
/// use their synthesized unit areas times the hierarchy counts.
pub fn compute_area(cfg: &SystemConfig, crossbar_count: u64) -> AreaBreakdown {
    let cell_nm2 = 4.0 * cfg.area.feature_nm * cfg.area.feature_nm;
    let crossbar_um2 = cfg.crossbar.rows as f64 * cfg.crossbar.cols as f64 * cell_nm2 * 1e-6;
    let crossbars_mm2 = crossbar_count as f64 * crossbar_um2 * 1e-6;
    let h = &cfg.hierarchy;
    let xbars = h.total_crossbars() as f64;
    let controllers_um2 = cfg.controllers.crossbar.area_um2 * xbars
        + cfg.controllers.bank.area_um2 * h.total_banks() as f64
        + cfg.controllers.chip.area_um2 * h.chips as f64
        + cfg.controllers.pim.area_um2;
    let peripherals_um2 = cfg.peripherals.decode_drive.area_um2 * h.total_banks() as f64
        + cfg.peripherals.rw_circuit.area_um2 * xbars
        + cfg.peripherals.selector_passgate.area_um2 * xbars * cfg.crossbar.cols as f64
        + cfg.peripherals.driver_passgate.area_um2 * xbars * cfg.crossbar.rows as f64;
    let riscv_mm2 =
        cfg.riscv.cores as f64 * (cfg.riscv.core_area_mm2 + cfg.riscv.cache_area_mm2);
    let controllers_mm2 = controllers_um2 * 1e-6;
    let peripherals_mm2 = peripherals_um2 * 1e-6;
    AreaBreakdown {
        crossbar_um2,
        crossbars_mm2,
        controllers_mm2,
        peripherals_mm2,
        riscv_mm2,
        total_mm2: crossbars_mm2 + controllers_mm2 + peripherals_mm2 + riscv_mm2,
    }
}

/// Fraction of reads whose reported position and strand exactly match the
/// supplied ground truth. Unmapped reads count as misses.
pub fn score_accuracy(
    results: &[MappingResult],
    truth: &BTreeMap<String, (usize, Strand)>,
) -> Option<f64> {
    let mut total = 0usize;
    let mut exact = 0usize;
    for r in results {
        let Some(&(pos, strand)) = truth.get(&r.read_id) else {
            continue;
        };
        total += 1;
        if r.ref_pos == Some(pos) && r.strand == strand {
            exact += 1;
        }
    }
    (total > 0).then(|| exact as f64 / total as f64)
}

/// Readout bits all candidates of a mapping would occupy; proxy used by
/// tests that reason about transfer volume.
pub fn result_readout_bits(results: &[MappingResult]) -> u64 {
    results
        .iter()
        .filter_map(|r| r.trace.as_ref())
        .map(candidate_readout_bits)
        .sum()
}
