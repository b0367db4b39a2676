//! Per-crossbar state machine.
//!
//! A crossbar owns one minimizer: its reference segments are resident in
//! the linear buffer rows since indexing, reads carrying that minimizer
//! queue in the FIFO, each linear iteration pops one read and filters it
//! against every resident segment in parallel rows, and winners accumulate
//! in the affine buffer until eight slots fill and an affine batch runs.

use crate::cost::{affine_instance_cost, linear_instance_cost, InstanceCost};
use crate::genome::{Code, Strand};
use crate::index::SegmentLoc;
use crate::wf::{affine_wf_banded, linear_wf_banded, Traceback, WfParams};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrossbarError {
    #[error("crossbar has no resident segments (layout bug)")]
    NoSegments,
    #[error("min extraction over an empty list")]
    EmptyMin,
    #[error("geometry does not fit the crossbar: {0}")]
    Geometry(String),
    #[error(transparent)]
    Wf(#[from] crate::wf::WfError),
}

/// Row partition and capacities of one crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    pub fifo_rows: usize,
    pub reads_per_fifo_row: usize,
    pub linear_rows: usize,
    pub affine_rows: usize,
    pub rows_per_affine_instance: usize,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self {
            rows: 256,
            cols: 1024,
            fifo_rows: 160,
            reads_per_fifo_row: 3,
            linear_rows: 32,
            affine_rows: 64,
            rows_per_affine_instance: 8,
        }
    }
}

impl CrossbarConfig {
    pub fn fifo_capacity(&self) -> usize {
        self.fifo_rows * self.reads_per_fifo_row
    }

    pub fn affine_slots(&self) -> usize {
        self.affine_rows / self.rows_per_affine_instance
    }

    /// Bits a queued read occupies: 2 per base plus an offset byte.
    pub fn read_slot_bits(&self, rl: usize) -> usize {
        2 * rl + 8
    }

    pub fn validate(&self, rl: usize) -> Result<(), CrossbarError> {
        if self.fifo_rows + self.linear_rows + self.affine_rows != self.rows {
            return Err(CrossbarError::Geometry(format!(
                "row partition {}+{}+{} does not equal {} rows",
                self.fifo_rows, self.linear_rows, self.affine_rows, self.rows
            )));
        }
        if self.reads_per_fifo_row * self.read_slot_bits(rl) > self.cols {
            return Err(CrossbarError::Geometry(format!(
                "{} reads of {} bits do not fit a {}-bit row",
                self.reads_per_fifo_row,
                self.read_slot_bits(rl),
                self.cols
            )));
        }
        // A row must hold the read, the reference-equivalent span, and
        // roughly 80 bits of working cells for the in-row computation.
        if 2 * rl + 4 * rl + 80 > self.cols {
            return Err(CrossbarError::Geometry(format!(
                "read length {rl} needs {} row bits, more than {}",
                6 * rl + 80,
                self.cols
            )));
        }
        if self.rows_per_affine_instance == 0 || self.affine_rows % self.rows_per_affine_instance != 0
        {
            return Err(CrossbarError::Geometry(
                "affine rows must split evenly into instances".into(),
            ));
        }
        Ok(())
    }
}

/// A read queued in the FIFO: its codes in mapping orientation plus the
/// offset of the crossbar's minimizer within the read.
#[derive(Debug, Clone)]
pub struct QueuedRead {
    pub read_idx: usize,
    pub strand: Strand,
    pub codes: Arc<Vec<Code>>,
    pub minimizer_offset: usize,
}

#[derive(Debug, Clone)]
struct ResidentSegment {
    loc: SegmentLoc,
    codes: Vec<Code>,
}

/// A filter winner parked in the affine buffer.
#[derive(Debug, Clone)]
struct AffineSlot {
    read_idx: usize,
    strand: Strand,
    codes: Arc<Vec<Code>>,
    /// The aligned sub-window of the winning segment.
    window: Vec<Code>,
    /// Absolute reference position of the window start.
    window_abs_start: usize,
}

/// One candidate alignment reported back from an affine batch.
#[derive(Debug, Clone)]
pub struct CandidateResult {
    pub read_idx: usize,
    pub ref_pos: usize,
    pub strand: Strand,
    pub distance: u8,
    pub trace: Traceback,
}

/// Aggregate counters a crossbar emits; cycles come per iteration, switch
/// energy scales with the rows actually occupied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounters {
    /// Linear iterations (each runs all resident rows concurrently).
    pub linear_iterations: u64,
    /// Linear row instances: iterations times occupied rows.
    pub linear_instances: u64,
    /// Affine batches.
    pub affine_batches: u64,
    /// Affine instances: occupied slots over all batches.
    pub affine_instances: u64,
    /// Bits written into crossbars (read copy-in).
    pub bits_written: u64,
    /// Bits read out of crossbars (candidate readout).
    pub bits_read: u64,
}

impl CostCounters {
    pub fn merge(&mut self, other: &CostCounters) {
        self.linear_iterations += other.linear_iterations;
        self.linear_instances += other.linear_instances;
        self.affine_batches += other.affine_batches;
        self.affine_instances += other.affine_instances;
        self.bits_written += other.bits_written;
        self.bits_read += other.bits_read;
    }
}

/// Runtime state of one crossbar.
#[derive(Debug)]
pub struct CrossbarState {
    pub id: usize,
    pub minimizer: u64,
    config: CrossbarConfig,
    segments: Vec<ResidentSegment>,
    fifo: VecDeque<QueuedRead>,
    slots: Vec<AffineSlot>,
    /// Reads accepted over the whole run, for the intake cap.
    pub accepted: u64,
    pub counters: CostCounters,
    linear_params: WfParams,
    affine_params: WfParams,
}

impl CrossbarState {
    pub fn new(
        id: usize,
        minimizer: u64,
        segments: Vec<(SegmentLoc, Vec<Code>)>,
        config: CrossbarConfig,
        linear_params: WfParams,
        affine_params: WfParams,
    ) -> Result<Self, CrossbarError> {
        if segments.is_empty() {
            return Err(CrossbarError::NoSegments);
        }
        if segments.len() > config.linear_rows {
            return Err(CrossbarError::Geometry(format!(
                "{} segments exceed {} linear rows",
                segments.len(),
                config.linear_rows
            )));
        }
        Ok(Self {
            id,
            minimizer,
            config,
            segments: segments
                .into_iter()
                .map(|(loc, codes)| ResidentSegment { loc, codes })
                .collect(),
            fifo: VecDeque::new(),
            slots: Vec::new(),
            accepted: 0,
            counters: CostCounters::default(),
            linear_params,
            affine_params,
        })
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    pub fn pending_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn resident_segments(&self) -> usize {
        self.segments.len()
    }

    /// Queue a read; rejection signals the controller to pause the stream.
    pub fn enqueue_read(&mut self, read: QueuedRead) -> bool {
        if self.fifo.len() >= self.config.fifo_capacity() {
            return false;
        }
        self.counters.bits_written += self.config.read_slot_bits(read.codes.len()) as u64;
        self.fifo.push_back(read);
        self.accepted += 1;
        true
    }

    /// Pop one read, filter it against every resident segment, and promote
    /// the minimum-distance winner to an affine slot if it beats the
    /// saturation threshold.
    pub fn run_linear_iteration(&mut self) -> Result<(), CrossbarError> {
        let read = match self.fifo.pop_front() {
            Some(read) => read,
            None => return Ok(()),
        };
        if self.segments.is_empty() {
            return Err(CrossbarError::NoSegments);
        }
        let eth = self.linear_params.eth;
        let need = read.codes.len() + 2 * eth;
        let seg_len = self.segments[0].codes.len();
        let mut distances = Vec::with_capacity(self.segments.len());
        let mut windows = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            // Band window start inside the segment, from the minimizer
            // offsets of segment and read; clamped shifts are recorded via
            // the returned absolute start.
            let m_in_seg = seg.loc.ref_pos - seg.loc.seg_start;
            let ideal = m_in_seg as isize - read.minimizer_offset as isize - eth as isize;
            let woff = ideal.clamp(0, (seg_len - need) as isize) as usize;
            let window = &seg.codes[woff..woff + need];
            distances.push(linear_wf_banded(&read.codes, window, &self.linear_params)?);
            windows.push((woff, window.to_vec()));
        }
        self.counters.linear_iterations += 1;
        self.counters.linear_instances += self.segments.len() as u64;
        let best = min_extract(&distances)?;
        if distances[best] < self.linear_params.sat {
            let (woff, window) = windows.swap_remove(best);
            self.slots.push(AffineSlot {
                read_idx: read.read_idx,
                strand: read.strand,
                codes: read.codes,
                window_abs_start: self.segments[best].loc.seg_start + woff,
                window,
            });
        }
        Ok(())
    }

    pub fn affine_buffer_full(&self) -> bool {
        self.slots.len() >= self.config.affine_slots()
    }

    /// Run the affine pass over the current slots. Only called when the
    /// buffer is full, or with `flush` at end of stream.
    pub fn run_affine_iteration(&mut self, flush: bool) -> Result<Vec<CandidateResult>, CrossbarError> {
        if self.slots.is_empty() || (!flush && !self.affine_buffer_full()) {
            return Ok(Vec::new());
        }
        let slots = std::mem::take(&mut self.slots);
        self.counters.affine_batches += 1;
        self.counters.affine_instances += slots.len() as u64;
        let mut results = Vec::with_capacity(slots.len());
        for slot in slots {
            let (distance, trace) = affine_wf_banded(&slot.codes, &slot.window, &self.affine_params)?;
            self.counters.bits_read += candidate_readout_bits(&trace);
            results.push(CandidateResult {
                read_idx: slot.read_idx,
                ref_pos: slot.window_abs_start + trace.window_start,
                strand: slot.strand,
                distance,
                trace,
            });
        }
        Ok(results)
    }

    /// Per-iteration cycle cost of this crossbar's linear pass.
    pub fn linear_cost(&self, rl: usize) -> InstanceCost {
        linear_instance_cost(
            rl as u64,
            self.linear_params.eth as u64,
            u64::from(self.linear_params.bits),
            self.config.linear_rows as u64,
        )
    }

    pub fn affine_cost(&self, rl: usize) -> InstanceCost {
        affine_instance_cost(
            rl as u64,
            self.affine_params.eth as u64,
            u64::from(self.affine_params.bits),
        )
    }
}

/// Readout volume per candidate: read id (8 bytes), position (4), distance
/// (1), and the traceback packed two bits per operation.
pub fn candidate_readout_bits(trace: &Traceback) -> u64 {
    let trace_bytes = trace.ops.len().div_ceil(4) as u64;
    (8 + 4 + 1 + trace_bytes) * 8
}

/// Index of the minimum; ties take the smallest index.
pub fn min_extract(distances: &[u8]) -> Result<usize, CrossbarError> {
    if distances.is_empty() {
        return Err(CrossbarError::EmptyMin);
    }
    let mut best = 0usize;
    for (i, &d) in distances.iter().enumerate().skip(1) {
        if d < distances[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_codes(rng: &mut ChaCha8Rng, len: usize) -> Vec<Code> {
        (0..len).map(|_| rng.gen_range(0..4) as Code).collect()
    }

    fn test_state(segments: Vec<(SegmentLoc, Vec<Code>)>) -> CrossbarState {
        CrossbarState::new(
            0,
            42,
            segments,
            CrossbarConfig::default(),
            WfParams::linear(6),
            WfParams::affine(6, 31),
        )
        .unwrap()
    }

    fn queued(read_idx: usize, codes: Vec<Code>, offset: usize) -> QueuedRead {
        QueuedRead {
            read_idx,
            strand: Strand::Forward,
            codes: Arc::new(codes),
            minimizer_offset: offset,
        }
    }

    /// A segment whose centered 150-base slice is `read`, with the nominal
    /// minimizer geometry (offset 0 in the read).
    fn segment_for(rng: &mut ChaCha8Rng, read: &[Code], ref_pos: usize) -> (SegmentLoc, Vec<Code>) {
        // seg_start = ref_pos - (rl - k) - eth with rl=150, k=12, eth=6.
        let seg_start = ref_pos - 144;
        let mut seg = random_codes(rng, 300);
        // The read aligns at segment-local offset 144 + 6 = 150 when its
        // minimizer offset is 0... the band window starts at 144 - 0 - 6 =
        // 138 and the read sits eth inside it.
        let read_local = 144;
        seg[read_local..read_local + read.len()].copy_from_slice(read);
        (SegmentLoc { ref_pos, seg_start }, seg)
    }

    #[test]
    fn fifo_capacity_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let read = random_codes(&mut rng, 150);
        let seg = segment_for(&mut rng, &read, 1000);
        let mut state = test_state(vec![seg]);
        for i in 0..480 {
            assert!(state.enqueue_read(queued(i, read.clone(), 0)), "accept {i}");
        }
        assert!(!state.enqueue_read(queued(480, read.clone(), 0)));
        assert_eq!(state.fifo_len(), 480);
        assert_eq!(state.accepted, 480);
    }

    #[test]
    fn exact_match_read_is_promoted_with_distance_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let read = random_codes(&mut rng, 150);
        let seg = segment_for(&mut rng, &read, 1000);
        let mut state = test_state(vec![seg]);
        state.enqueue_read(queued(0, read.clone(), 0));
        state.run_linear_iteration().unwrap();
        assert_eq!(state.pending_slots(), 1);
        let results = state.run_affine_iteration(true).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].distance, 0);
        // seg_start + woff + trace start = (1000-144) + 138 + 6 = 1000.
        assert_eq!(results[0].ref_pos, 1000);
    }

    #[test]
    fn unrelated_read_is_filtered_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seg = (
            SegmentLoc {
                ref_pos: 500,
                seg_start: 356,
            },
            random_codes(&mut rng, 300),
        );
        let mut state = test_state(vec![seg]);
        let read = random_codes(&mut rng, 150);
        state.enqueue_read(queued(0, read, 75));
        state.run_linear_iteration().unwrap();
        assert_eq!(state.pending_slots(), 0);
        assert_eq!(state.counters.linear_iterations, 1);
        assert_eq!(state.counters.linear_instances, 1);
    }

    #[test]
    fn promotion_takes_minimum_distance_then_lowest_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let read = random_codes(&mut rng, 150);
        // Segment A at distance 5 (five substitutions), segment B at 2.
        let mut read_a = read.clone();
        for i in 0..5 {
            read_a[10 + i * 7] ^= 1;
        }
        let mut read_b = read.clone();
        for i in 0..2 {
            read_b[20 + i * 11] ^= 2;
        }
        let seg_a = segment_for(&mut rng, &read_a, 1000);
        let seg_b = segment_for(&mut rng, &read_b, 5000);
        let mut state = test_state(vec![seg_a, seg_b]);
        state.enqueue_read(queued(0, read.clone(), 0));
        state.run_linear_iteration().unwrap();
        let results = state.run_affine_iteration(true).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].ref_pos, 5000 - 144 + 138 + 6);

        // Tie at equal distance: the lower reference position wins because
        // segments are resident in ascending position order.
        let seg_a = segment_for(&mut rng, &read, 1000);
        let seg_b = segment_for(&mut rng, &read, 5000);
        let mut state = test_state(vec![seg_a, seg_b]);
        state.enqueue_read(queued(0, read.clone(), 0));
        state.run_linear_iteration().unwrap();
        let results = state.run_affine_iteration(true).unwrap();
        assert_eq!(results[0].ref_pos, 1000);
    }

    #[test]
    fn affine_batches_of_eight_and_flush() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let read = random_codes(&mut rng, 150);
        let seg = segment_for(&mut rng, &read, 1000);
        let mut state = test_state(vec![seg]);
        for i in 0..11 {
            state.enqueue_read(queued(i, read.clone(), 0));
        }
        let mut batch_results = Vec::new();
        while state.fifo_len() > 0 {
            state.run_linear_iteration().unwrap();
            if state.affine_buffer_full() {
                batch_results.extend(state.run_affine_iteration(false).unwrap());
            }
        }
        assert_eq!(batch_results.len(), 8);
        assert!(batch_results.iter().all(|r| r.distance == 0));
        assert_eq!(state.pending_slots(), 3);
        let flushed = state.run_affine_iteration(true).unwrap();
        assert_eq!(flushed.len(), 3);
        assert_eq!(state.counters.affine_batches, 2);
        assert_eq!(state.counters.affine_instances, 11);
        assert_eq!(state.counters.linear_iterations, 11);
    }

    #[test]
    fn planted_edits_match_the_full_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let original = random_codes(&mut rng, 150);
        let mut read = original.clone();
        read[40] ^= 1;
        read[90] ^= 3;
        let seg = segment_for(&mut rng, &original, 2000);
        let seg_codes = seg.1.clone();
        let mut state = test_state(vec![seg]);
        state.enqueue_read(queued(0, read.clone(), 0));
        state.run_linear_iteration().unwrap();
        let results = state.run_affine_iteration(true).unwrap();
        let window = &seg_codes[138..138 + 162];
        let expect = crate::wf::oracle::affine_banded_matrix(&read, window, &WfParams::affine(6, 31));
        assert_eq!(u32::from(results[0].distance), expect);
        assert_eq!(results[0].distance, 2);
    }

    #[test]
    fn min_extract_examples() {
        assert_eq!(min_extract(&[3, 1, 2]).unwrap(), 1);
        assert_eq!(min_extract(&[7, 7, 7]).unwrap(), 0);
        assert!(min_extract(&[]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let list: Vec<u8> = (0..rng.gen_range(1..20)).map(|_| rng.gen_range(0..8)).collect();
            let got = min_extract(&list).unwrap();
            let want = list
                .iter()
                .enumerate()
                .min_by_key(|&(i, &d)| (d, i))
                .unwrap()
                .0;
            assert_eq!(got, want);
        }
    }

    #[test]
    fn config_row_partition_is_validated() {
        let config = CrossbarConfig::default();
        assert!(config.validate(150).is_ok());
        assert_eq!(config.fifo_capacity(), 480);
        assert_eq!(config.affine_slots(), 8);
        // Reads longer than the row budget are rejected.
        assert!(config.validate(158).is_err());
        let bad = CrossbarConfig {
            fifo_rows: 159,
            ..config
        };
        assert!(bad.validate(150).is_err());
    }
}
