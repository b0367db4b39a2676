//! Banded Wagner-Fischer alignment kernels.
//!
//! Two variants run inside a crossbar row: a linear-cost pass used for
//! pre-alignment filtering and an affine-gap pass with traceback used for
//! final alignment. Both keep only a `2*eth+1`-cell band buffer per matrix
//! and saturate every cell at a small maximum so values fit in 3 (linear)
//! or 5 (affine) bits.
//!
//! Band geometry: for a read of length `n` the window must supply exactly
//! `n + 2*eth` characters. Band cell `j` at read row `i` compares `read[i]`
//! with `window[i + j]`. The band buffer is initialized to zero, so the
//! alignment may start at any of the first `2*eth + 1` window offsets for
//! free, and the reported distance is the band-center cell after the last
//! read row, i.e. the alignment consumes exactly `n + eth` window
//! characters. Cells outside the band behave as saturated.
//!
//! The [`oracle`] module holds independent full-matrix implementations of
//! the same recurrences, used by the test suites to verify the band-buffer
//! kernels cell for cell.

pub mod oracle;

use crate::genome::Code;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WfError {
    #[error("window of {got} characters is too short: need at least {need}")]
    WindowTooShort { need: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed traceback string: {0}")]
    MalformedTrace(String),
}

/// Edit weights. The affine gap penalty follows the recurrence convention
/// where opening a gap costs `w_op + w_ex` and each further extension adds
/// `w_ex`, so a gap of length L costs `w_op + w_ex * L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WfWeights {
    pub w_del: u32,
    pub w_ins: u32,
    pub w_sub: u32,
    pub w_op: u32,
    pub w_ex: u32,
}

impl Default for WfWeights {
    fn default() -> Self {
        Self {
            w_del: 1,
            w_ins: 1,
            w_sub: 1,
            w_op: 1,
            w_ex: 1,
        }
    }
}

impl WfWeights {
    /// Preset for the alternative gap convention where a length-L gap costs
    /// `open + ex * (L - 1)`: equivalent to the default convention with the
    /// opening cost reduced by one extension.
    pub fn gap_open_includes_first_extension(open: u32, ex: u32) -> Self {
        Self {
            w_op: open.saturating_sub(ex),
            w_ex: ex,
            ..Self::default()
        }
    }
}

/// Band geometry and saturation for one WF variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WfParams {
    /// Band half-width: the buffer holds `2*eth + 1` cells.
    pub eth: usize,
    /// Saturation value; cells never exceed it.
    pub sat: u8,
    /// Cell bit width; `sat < 2^bits`.
    pub bits: u8,
    pub weights: WfWeights,
}

impl WfParams {
    /// Linear filtering pass: 3-bit cells saturating at eth+1.
    pub fn linear(eth: usize) -> Self {
        let sat = (eth + 1) as u8;
        Self {
            eth,
            sat,
            bits: bits_for(sat),
            weights: WfWeights::default(),
        }
    }

    /// Affine alignment pass: same band geometry as the linear pass but
    /// 5-bit cells saturating at 31.
    pub fn affine(eth: usize, sat: u8) -> Self {
        Self {
            eth,
            sat,
            bits: bits_for(sat),
            weights: WfWeights::default(),
        }
    }

    pub fn band_cells(&self) -> usize {
        2 * self.eth + 1
    }

    pub fn validate(&self) -> Result<(), WfError> {
        if self.eth == 0 {
            return Err(WfError::InvalidParams(
                "band half-width must be at least 1".into(),
            ));
        }
        if self.sat == 0 {
            return Err(WfError::InvalidParams("saturation value must be positive".into()));
        }
        if self.bits >= 8 || u32::from(self.sat) >= (1u32 << self.bits) {
            return Err(WfError::InvalidParams(format!(
                "saturation {} does not fit in {} bits",
                self.sat, self.bits
            )));
        }
        Ok(())
    }
}

fn bits_for(sat: u8) -> u8 {
    (8 - sat.leading_zeros()) as u8
}

/// The rolling distance buffer of a linear WF instance.
#[derive(Debug, Clone)]
pub struct BandState {
    cells: Vec<u8>,
}

impl BandState {
    pub fn new(params: &WfParams) -> Self {
        Self {
            cells: vec![0; params.band_cells()],
        }
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }
}

#[inline]
fn add_sat(value: u8, weight: u32, sat: u8) -> u8 {
    (u32::from(value) + weight).min(u32::from(sat)) as u8
}

/// One linear WF cell evaluated as the in-memory gate sequence does it for
/// unit weights: a two-step min tree, an increment, a saturation mux keyed
/// on the min already being saturated, and an equality mux that passes the
/// diagonal through on a character match.
#[inline]
pub fn linear_cell_dataflow(top: u8, left: u8, diag: u8, chars_equal: bool, sat: u8) -> u8 {
    debug_assert!(top <= sat && left <= sat && diag <= sat);
    let x = top.min(left);
    let y = x.min(diag);
    let z = y + 1;
    let sat_select = y == sat;
    let mux1 = if sat_select { y } else { z };
    if chars_equal {
        diag
    } else {
        mux1
    }
}

/// Banded linear WF distance between `read` and the first
/// `read.len() + 2*eth` characters of `window`, saturated at `params.sat`.
pub fn linear_wf_banded(read: &[Code], window: &[Code], params: &WfParams) -> Result<u8, WfError> {
    params.validate()?;
    let n = read.len();
    let need = n + 2 * params.eth;
    if window.len() < need {
        return Err(WfError::WindowTooShort {
            need,
            got: window.len(),
        });
    }
    let band = params.band_cells();
    let sat = params.sat;
    let w = &params.weights;
    let mut prev = BandState::new(params).cells;
    let mut cur = vec![0u8; band];
    for i in 0..n {
        for j in 0..band {
            let diag = prev[j];
            let top = if j + 1 < band { prev[j + 1] } else { sat };
            let left = if j > 0 { cur[j - 1] } else { sat };
            cur[j] = if read[i] == window[i + j] {
                diag
            } else {
                add_sat(diag, w.w_sub, sat)
                    .min(add_sat(top, w.w_del, sat))
                    .min(add_sat(left, w.w_ins, sat))
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[params.eth])
}

/// Alignment edit operations, read-relative: `Insert` consumes a read
/// character only, `Delete` a window character only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditOp {
    Match,
    Substitute,
    Insert,
    Delete,
}

impl EditOp {
    pub fn symbol(self) -> char {
        match self {
            EditOp::Match => 'M',
            EditOp::Substitute => 'X',
            EditOp::Insert => 'I',
            EditOp::Delete => 'D',
        }
    }
}

/// A recovered alignment: the edit operations plus the implied start offset
/// of the alignment within the reference window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Traceback {
    pub ops: Vec<EditOp>,
    pub window_start: usize,
}

impl Traceback {
    /// Window characters consumed by the alignment.
    pub fn window_span(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, EditOp::Match | EditOp::Substitute | EditOp::Delete))
            .count()
    }

    /// Read characters consumed by the alignment.
    pub fn read_span(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, EditOp::Match | EditOp::Substitute | EditOp::Insert))
            .count()
    }

    /// Run-length encoding over {M, X, I, D}, e.g. "72M1X77M".
    pub fn rle(&self) -> String {
        let mut out = String::new();
        let mut idx = 0;
        while idx < self.ops.len() {
            let op = self.ops[idx];
            let mut len = 0usize;
            while idx < self.ops.len() && self.ops[idx] == op {
                len += 1;
                idx += 1;
            }
            out.push_str(&len.to_string());
            out.push(op.symbol());
        }
        if out.is_empty() {
            out.push('*');
        }
        out
    }

    /// Walk read and window together and check that every operation is
    /// consistent: matches align equal characters, substitutions unequal
    /// ones, and the spans cover exactly the read and the claimed window
    /// region.
    pub fn is_consistent(&self, read: &[Code], window: &[Code]) -> bool {
        let mut r = 0usize;
        let mut w = self.window_start;
        for op in &self.ops {
            match op {
                EditOp::Match => {
                    if r >= read.len() || w >= window.len() || read[r] != window[w] {
                        return false;
                    }
                    r += 1;
                    w += 1;
                }
                EditOp::Substitute => {
                    if r >= read.len() || w >= window.len() || read[r] == window[w] {
                        return false;
                    }
                    r += 1;
                    w += 1;
                }
                EditOp::Insert => {
                    if r >= read.len() {
                        return false;
                    }
                    r += 1;
                }
                EditOp::Delete => {
                    if w >= window.len() {
                        return false;
                    }
                    w += 1;
                }
            }
        }
        r == read.len()
    }
}

/// Parse a run-length trace string back into operations.
pub fn parse_rle(text: &str) -> Result<Vec<EditOp>, WfError> {
    if text == "*" {
        return Ok(Vec::new());
    }
    let mut ops = Vec::new();
    let mut count = 0usize;
    let mut saw_digit = false;
    for c in text.chars() {
        if let Some(d) = c.to_digit(10) {
            count = count * 10 + d as usize;
            saw_digit = true;
            continue;
        }
        let op = match c {
            'M' => EditOp::Match,
            'X' => EditOp::Substitute,
            'I' => EditOp::Insert,
            'D' => EditOp::Delete,
            other => return Err(WfError::MalformedTrace(format!("bad op {other:?}"))),
        };
        if !saw_digit || count == 0 {
            return Err(WfError::MalformedTrace("missing run length".into()));
        }
        ops.extend(std::iter::repeat(op).take(count));
        count = 0;
        saw_digit = false;
    }
    if saw_digit {
        return Err(WfError::MalformedTrace("trailing run length".into()));
    }
    Ok(ops)
}

/// Score a trace: substitutions cost `w_sub` each and a gap run of length L
/// costs `w_op + w_ex * L`.
pub fn trace_cost(ops: &[EditOp], weights: &WfWeights) -> u64 {
    let mut cost = 0u64;
    let mut idx = 0usize;
    while idx < ops.len() {
        match ops[idx] {
            EditOp::Match => idx += 1,
            EditOp::Substitute => {
                cost += u64::from(weights.w_sub);
                idx += 1;
            }
            op @ (EditOp::Insert | EditOp::Delete) => {
                let mut len = 0u64;
                while idx < ops.len() && ops[idx] == op {
                    len += 1;
                    idx += 1;
                }
                cost += u64::from(weights.w_op) + u64::from(weights.w_ex) * len;
            }
        }
    }
    cost
}

// Direction nibble layout: bits 0-1 give the distance matrix origin, bit 2
// the gap-in-window matrix origin, bit 3 the gap-in-read matrix origin.
const DIR_MATCH: u8 = 0;
const DIR_SUB: u8 = 1;
const DIR_DEL: u8 = 2;
const DIR_INS: u8 = 3;
const M_EXTEND: u8 = 1;
const M_OPEN: u8 = 0;

/// Per-cell origin directions packed four bits per matrix cell, mirroring
/// the traceback rows a crossbar sets aside for the affine pass.
#[derive(Debug, Clone)]
pub struct DirectionStore {
    nibbles: Vec<u8>,
    band: usize,
    cells: usize,
}

impl DirectionStore {
    pub fn new(rows: usize, band: usize) -> Self {
        let cells = rows * band;
        Self {
            nibbles: vec![0; cells.div_ceil(2)],
            band,
            cells,
        }
    }

    #[inline]
    fn set(&mut self, row: usize, j: usize, value: u8) {
        let idx = row * self.band + j;
        let byte = &mut self.nibbles[idx / 2];
        if idx % 2 == 0 {
            *byte = (*byte & 0xf0) | (value & 0x0f);
        } else {
            *byte = (*byte & 0x0f) | (value << 4);
        }
    }

    #[inline]
    fn get(&self, row: usize, j: usize) -> u8 {
        let idx = row * self.band + j;
        let byte = self.nibbles[idx / 2];
        if idx % 2 == 0 {
            byte & 0x0f
        } else {
            byte >> 4
        }
    }

    /// Total stored direction bits: rows x band x 4.
    pub fn direction_bits(&self) -> usize {
        self.cells * 4
    }
}

/// Band buffers of an affine WF instance: one rolling row per matrix plus
/// the packed direction store for traceback.
#[derive(Debug, Clone)]
pub struct AffineBandState {
    pub d: Vec<u8>,
    pub m1: Vec<u8>,
    pub m2: Vec<u8>,
    pub dirs: DirectionStore,
}

impl AffineBandState {
    pub fn new(read_len: usize, params: &WfParams) -> Self {
        let band = params.band_cells();
        Self {
            d: vec![0; band],
            m1: vec![params.sat; band],
            m2: vec![params.sat; band],
            dirs: DirectionStore::new(read_len, band),
        }
    }
}

/// Banded affine WF distance and traceback.
///
/// The distance matrix takes the diagonal on a character match and
/// otherwise the minimum of substitution and the two gap matrices; gap
/// matrices either extend themselves or open from the distance matrix at
/// cost `w_op + w_ex`. Ties resolve substitution over deletion over
/// insertion, and gap extension over opening. The traceback is recovered
/// from the stored direction bits without re-running the recurrence.
pub fn affine_wf_banded(
    read: &[Code],
    window: &[Code],
    params: &WfParams,
) -> Result<(u8, Traceback), WfError> {
    params.validate()?;
    let n = read.len();
    let need = n + 2 * params.eth;
    if window.len() < need {
        return Err(WfError::WindowTooShort {
            need,
            got: window.len(),
        });
    }
    let band = params.band_cells();
    let sat = params.sat;
    let w = &params.weights;
    let open_cost = w.w_op + w.w_ex;

    let mut state = AffineBandState::new(n, params);
    let mut d_prev = std::mem::take(&mut state.d);
    let mut m1_prev = std::mem::take(&mut state.m1);
    let mut d_cur = vec![0u8; band];
    let mut m1_cur = vec![sat; band];
    let mut m2_cur = std::mem::take(&mut state.m2);

    for i in 0..n {
        for j in 0..band {
            let (d_top, m1_top) = if j + 1 < band {
                (d_prev[j + 1], m1_prev[j + 1])
            } else {
                (sat, sat)
            };
            let m1_ext = add_sat(m1_top, w.w_ex, sat);
            let m1_opn = add_sat(d_top, open_cost, sat);
            let (m1v, m1dir) = if m1_ext <= m1_opn {
                (m1_ext, M_EXTEND)
            } else {
                (m1_opn, M_OPEN)
            };
            let (d_left, m2_left) = if j > 0 {
                (d_cur[j - 1], m2_cur[j - 1])
            } else {
                (sat, sat)
            };
            let m2_ext = add_sat(m2_left, w.w_ex, sat);
            let m2_opn = add_sat(d_left, open_cost, sat);
            let (m2v, m2dir) = if m2_ext <= m2_opn {
                (m2_ext, M_EXTEND)
            } else {
                (m2_opn, M_OPEN)
            };
            let diag = d_prev[j];
            let (dv, ddir) = if read[i] == window[i + j] {
                (diag, DIR_MATCH)
            } else {
                let mut best = add_sat(diag, w.w_sub, sat);
                let mut dir = DIR_SUB;
                if m2v < best {
                    best = m2v;
                    dir = DIR_DEL;
                }
                if m1v < best {
                    best = m1v;
                    dir = DIR_INS;
                }
                (best, dir)
            };
            m1_cur[j] = m1v;
            m2_cur[j] = m2v;
            d_cur[j] = dv;
            state.dirs.set(i, j, ddir | (m1dir << 2) | (m2dir << 3));
        }
        std::mem::swap(&mut d_prev, &mut d_cur);
        std::mem::swap(&mut m1_prev, &mut m1_cur);
    }

    let distance = d_prev[params.eth];
    let trace = recover_trace(&state.dirs, n, band, params.eth);
    Ok((distance, trace))
}

fn recover_trace(dirs: &DirectionStore, n: usize, band: usize, eth: usize) -> Traceback {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Dist,
        GapRead,
        GapWindow,
    }
    let mut ops = Vec::with_capacity(n + eth);
    let mut i = n as isize - 1;
    let mut j = eth;
    let mut state = State::Dist;
    while i >= 0 {
        let nib = dirs.get(i as usize, j);
        match state {
            State::Dist => match nib & 3 {
                DIR_MATCH => {
                    ops.push(EditOp::Match);
                    i -= 1;
                }
                DIR_SUB => {
                    ops.push(EditOp::Substitute);
                    i -= 1;
                }
                DIR_DEL => state = State::GapWindow,
                _ => state = State::GapRead,
            },
            State::GapRead => {
                ops.push(EditOp::Insert);
                state = if (nib >> 2) & 1 == M_EXTEND {
                    State::GapRead
                } else {
                    State::Dist
                };
                i -= 1;
                j += 1;
                if j >= band {
                    break; // only reachable on saturated paths
                }
            }
            State::GapWindow => {
                ops.push(EditOp::Delete);
                state = if (nib >> 3) & 1 == M_EXTEND {
                    State::GapWindow
                } else {
                    State::Dist
                };
                if j == 0 {
                    break;
                }
                j -= 1;
            }
        }
    }
    ops.reverse();
    let consumed = ops
        .iter()
        .filter(|op| matches!(op, EditOp::Match | EditOp::Substitute | EditOp::Delete))
        .count();
    Traceback {
        window_start: (n + eth).saturating_sub(consumed),
        ops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::DnaSequence;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn codes(text: &str) -> Vec<Code> {
        DnaSequence::from_text(text.as_bytes()).unwrap().unpack()
    }

    fn random_codes(rng: &mut ChaCha8Rng, len: usize) -> Vec<Code> {
        (0..len).map(|_| rng.gen_range(0..4) as Code).collect()
    }

    /// Plant up to `max_edits` edits into the centered slice of `window`,
    /// returning a read of length `n`.
    pub(crate) fn plant_read(
        rng: &mut ChaCha8Rng,
        window: &[Code],
        n: usize,
        eth: usize,
        max_edits: usize,
    ) -> Vec<Code> {
        let edits = rng.gen_range(0..=max_edits);
        let mut read = Vec::with_capacity(n);
        let mut t = eth;
        while read.len() < n {
            if t >= window.len() {
                read.push(rng.gen_range(0..4) as Code);
                continue;
            }
            read.push(window[t]);
            t += 1;
        }
        for _ in 0..edits {
            match rng.gen_range(0..3) {
                0 => {
                    let p = rng.gen_range(0..read.len());
                    read[p] = (read[p] + rng.gen_range(1..4)) & 3;
                }
                1 => {
                    let p = rng.gen_range(0..read.len());
                    read.insert(p, rng.gen_range(0..4) as Code);
                    read.pop();
                }
                _ => {
                    let p = rng.gen_range(0..read.len());
                    read.remove(p);
                    read.push(rng.gen_range(0..4) as Code);
                }
            }
        }
        read
    }

    #[test]
    fn linear_centered_exact_match_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = WfParams::linear(6);
        for _ in 0..50 {
            let window = random_codes(&mut rng, 162);
            let read = window[6..156].to_vec();
            assert_eq!(linear_wf_banded(&read, &window, &p).unwrap(), 0);
        }
    }

    #[test]
    fn linear_single_substitution_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = WfParams::linear(6);
        let window = random_codes(&mut rng, 162);
        let mut read = window[6..156].to_vec();
        read[70] = (read[70] + 1) & 3;
        assert_eq!(linear_wf_banded(&read, &window, &p).unwrap(), 1);
    }

    #[test]
    fn linear_unrelated_window_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = WfParams::linear(6);
        for _ in 0..20 {
            let window = random_codes(&mut rng, 162);
            let read = random_codes(&mut rng, 150);
            let banded = linear_wf_banded(&read, &window, &p).unwrap();
            let exact = oracle::linear_banded_matrix(&read, &window, &p);
            assert!(exact >= u32::from(p.sat));
            assert_eq!(banded, p.sat);
        }
    }

    #[test]
    fn linear_window_too_short_errors() {
        let p = WfParams::linear(6);
        let read = codes("ACGTACGTAC");
        let window = codes("ACGTACGTACGT");
        assert!(matches!(
            linear_wf_banded(&read, &window, &p),
            Err(WfError::WindowTooShort { need: 22, got: 12 })
        ));
    }

    #[test]
    fn linear_matches_banded_oracle_on_planted_edits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = WfParams::linear(6);
        for _ in 0..500 {
            let window = random_codes(&mut rng, 162);
            let read = plant_read(&mut rng, &window, 150, 6, 6);
            let banded = linear_wf_banded(&read, &window, &p).unwrap();
            let exact = oracle::linear_banded_matrix(&read, &window, &p);
            assert_eq!(u32::from(banded), exact.min(u32::from(p.sat)));
        }
    }

    #[test]
    fn cellwise_dataflow_matches_direct_recurrence_exhaustively() {
        let sat = 7u8;
        for top in 0..=sat {
            for left in 0..=sat {
                for diag in 0..=sat {
                    for eq in [false, true] {
                        let hw = linear_cell_dataflow(top, left, diag, eq, sat);
                        let direct = if eq {
                            diag
                        } else {
                            (diag.min(left).min(top) + 1).min(sat)
                        };
                        assert_eq!(hw, direct, "top={top} left={left} diag={diag} eq={eq}");
                    }
                }
            }
        }
    }

    #[test]
    fn full_oracle_examples() {
        let w = WfWeights::default();
        assert_eq!(oracle::linear_full(&[], &[], &w), 0);
        assert_eq!(oracle::linear_full(&codes("ACGT"), &codes("ACGT"), &w), 0);
        assert_eq!(oracle::linear_full(&codes("ACGT"), &codes("AGT"), &w), 1);
    }

    #[test]
    fn full_oracle_is_symmetric_for_symmetric_weights() {
        let w = WfWeights::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_codes(&mut rng, rng.gen_range(0..30));
            let b = random_codes(&mut rng, rng.gen_range(0..30));
            assert_eq!(
                oracle::linear_full(&a, &b, &w),
                oracle::linear_full(&b, &a, &w)
            );
        }
    }

    #[test]
    fn affine_identical_strings() {
        let p = WfParams::affine(6, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let window = random_codes(&mut rng, 162);
        let read = window[6..156].to_vec();
        let (d, trace) = affine_wf_banded(&read, &window, &p).unwrap();
        assert_eq!(d, 0);
        assert!(trace.ops.iter().all(|op| *op == EditOp::Match));
        assert_eq!(trace.ops.len(), 150);
        assert_eq!(trace.window_start, 6);
        assert!(trace.is_consistent(&read, &window));
    }

    #[test]
    fn affine_single_substitution() {
        let p = WfParams::affine(6, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let window = random_codes(&mut rng, 162);
        let mut read = window[6..156].to_vec();
        read[42] = (read[42] + 2) & 3;
        let (d, trace) = affine_wf_banded(&read, &window, &p).unwrap();
        assert_eq!(d, 1);
        let subs = trace
            .ops
            .iter()
            .filter(|op| **op == EditOp::Substitute)
            .count();
        assert_eq!(subs, 1);
        assert_eq!(trace_cost(&trace.ops, &p.weights), 1);
        assert!(trace.is_consistent(&read, &window));
    }

    #[test]
    fn affine_single_insertion_costs_open_plus_extend() {
        let p = WfParams::affine(6, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // A read with one extra base relative to the window centerline.
        let window = random_codes(&mut rng, 162);
        let mut read = window[6..155].to_vec();
        read.insert(75, (window[6 + 75] + 1) & 3);
        assert_eq!(read.len(), 150);
        let (d, trace) = affine_wf_banded(&read, &window, &p).unwrap();
        let exact = oracle::affine_banded_matrix(&read, &window, &p);
        assert_eq!(u32::from(d), exact.min(u32::from(p.sat)));
        assert_eq!(d, 2);
        assert_eq!(trace_cost(&trace.ops, &p.weights), 2);
        assert!(trace.is_consistent(&read, &window));
    }

    #[test]
    fn affine_matches_banded_oracle_on_planted_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = WfParams::affine(6, 31);
        for _ in 0..300 {
            let window = random_codes(&mut rng, 162);
            let read = plant_read(&mut rng, &window, 150, 6, 6);
            let (d, trace) = affine_wf_banded(&read, &window, &p).unwrap();
            let exact = oracle::affine_banded_matrix(&read, &window, &p);
            assert_eq!(u32::from(d), exact.min(u32::from(p.sat)));
            if d < p.sat {
                assert_eq!(trace_cost(&trace.ops, &p.weights), u64::from(d));
                assert!(trace.is_consistent(&read, &window));
            }
        }
    }

    #[test]
    fn affine_unrelated_window_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = WfParams::affine(6, 31);
        for _ in 0..20 {
            let window = random_codes(&mut rng, 162);
            let read = random_codes(&mut rng, 150);
            let (d, _) = affine_wf_banded(&read, &window, &p).unwrap();
            assert!(oracle::affine_banded_matrix(&read, &window, &p) >= u32::from(p.sat));
            assert_eq!(d, p.sat);
        }
    }

    #[test]
    fn trace_cost_examples() {
        let w = WfWeights::default();
        assert_eq!(trace_cost(&[EditOp::Match; 10], &w), 0);
        assert_eq!(trace_cost(&[EditOp::Insert], &w), 2);
        assert_eq!(trace_cost(&[EditOp::Insert, EditOp::Insert], &w), 3);
        assert_eq!(
            trace_cost(&[EditOp::Insert, EditOp::Delete, EditOp::Delete], &w),
            2 + 3
        );
    }

    #[test]
    fn rle_roundtrip() {
        let trace = Traceback {
            ops: vec![
                EditOp::Match,
                EditOp::Match,
                EditOp::Substitute,
                EditOp::Delete,
                EditOp::Delete,
                EditOp::Match,
            ],
            window_start: 0,
        };
        let rle = trace.rle();
        assert_eq!(rle, "2M1X2D1M");
        assert_eq!(parse_rle(&rle).unwrap(), trace.ops);
        assert!(parse_rle("3Q").is_err());
        assert!(parse_rle("M").is_err());
        assert_eq!(parse_rle("*").unwrap(), Vec::new());
    }

    #[test]
    fn gap_preset_shifts_open_cost() {
        let w = WfWeights::gap_open_includes_first_extension(1, 1);
        assert_eq!(w.w_op, 0);
        assert_eq!(trace_cost(&[EditOp::Insert, EditOp::Insert], &w), 2);
    }

    #[test]
    fn direction_store_size_is_four_bits_per_cell() {
        let store = DirectionStore::new(150, 13);
        assert_eq!(store.direction_bits(), 150 * 13 * 4);
    }

    #[test]
    fn eth_zero_rejected() {
        let p = WfParams::linear(0);
        assert!(p.validate().is_err());
    }
}
