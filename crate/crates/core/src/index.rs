//! Minimizer selection, reference indexing, and crossbar assignment.
//!
//! The reference is scanned in sliding windows of `w + k - 1` bases; each
//! window is represented by its minimal k-mer under a fixed 64-bit hash
//! ordering with leftmost tie-break. Consecutive windows that elect the
//! same minimizer value collapse to the leftmost occurrence. For every
//! retained (minimizer, position) pair the index records a reference
//! segment long enough to align any read containing that minimizer at any
//! offset; segments are duplicated per occurrence so each crossbar works
//! from resident data only.

use crate::genome::{code_to_char, mix64, Code, DnaSequence, FastaRecord};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid index parameters: {0}")]
    InvalidParams(String),
    #[error("reference of {len} bases is too short: need at least {need}")]
    ReferenceTooShort { len: usize, need: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an index file: bad magic bytes")]
    BadMagic,
    #[error("index file is truncated or corrupt: {0}")]
    Corrupt(String),
    #[error("reference digest mismatch: index was built from a different reference")]
    DigestMismatch,
}

/// Parameters of the minimizer scheme and the derived segment geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IndexParams {
    /// Minimizer length in bases.
    pub k: usize,
    /// Window size in k-mers.
    pub w: usize,
    /// Read length the index is built for.
    pub rl: usize,
    /// Linear band half-width; fixes the segment length.
    pub eth: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            k: 12,
            w: 30,
            rl: 150,
            eth: 6,
        }
    }
}

impl IndexParams {
    /// Segment length: `2(rl + eth) - k`, enough to cover the band window
    /// of a read whose minimizer sits at either read edge.
    pub fn segment_len(&self) -> usize {
        2 * (self.rl + self.eth) - self.k
    }

    /// Characters covered by one minimizer window.
    pub fn window_span(&self) -> usize {
        self.w + self.k - 1
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        if self.k == 0 || self.k > 31 {
            return Err(IndexError::InvalidParams(format!(
                "minimizer length {} must be in 1..=31",
                self.k
            )));
        }
        if self.w == 0 {
            return Err(IndexError::InvalidParams("window size must be positive".into()));
        }
        if self.rl < self.k {
            return Err(IndexError::InvalidParams(format!(
                "read length {} is shorter than the minimizer length {}",
                self.rl, self.k
            )));
        }
        if self.eth == 0 {
            return Err(IndexError::InvalidParams(
                "error threshold must be at least 1 (a zero-width band degenerates)".into(),
            ));
        }
        if 2 * (self.rl + self.eth) <= self.k {
            return Err(IndexError::InvalidParams("segment length must be positive".into()));
        }
        Ok(())
    }
}

/// One selected minimizer occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimizerHit {
    /// The k-mer value, 2 bits per base.
    pub minimizer: u64,
    /// 0-based offset of the k-mer within its sequence.
    pub position: usize,
}

/// Ordering key: hashed k-mer value. Raw lexicographic order would
/// over-select poly-A k-mers.
#[inline]
fn rank(kmer: u64) -> u64 {
    mix64(kmer)
}

/// The reference as a flat code array plus the positions excluded from
/// minimizer selection (ambiguous input bases and record boundaries).
#[derive(Debug, Clone)]
pub struct ReferenceGenome {
    codes: Vec<Code>,
    /// excluded_prefix[i] = number of excluded positions < i.
    excluded_prefix: Vec<u32>,
    record_names: Vec<String>,
    digest: [u8; 32],
}

impl ReferenceGenome {
    pub fn from_records(records: &[FastaRecord]) -> Self {
        let total: usize = records.iter().map(|r| r.seq.len()).sum();
        let mut codes = Vec::with_capacity(total);
        let mut excluded = vec![false; total];
        let mut names = Vec::with_capacity(records.len());
        let mut hasher = Sha256::new();
        for (ri, rec) in records.iter().enumerate() {
            let offset = codes.len();
            if ri > 0 {
                // K-mers spanning a record boundary contain this position
                // and are excluded along with ambiguous bases.
                excluded[offset] = true;
            }
            names.push(rec.name.clone());
            hasher.update(rec.name.as_bytes());
            hasher.update([0u8]);
            let mut ambiguous = rec.ambiguous.iter().peekable();
            for i in 0..rec.seq.len() {
                let code = rec.seq.get(i);
                codes.push(code);
                if ambiguous.peek() == Some(&&i) {
                    ambiguous.next();
                    excluded[offset + i] = true;
                    hasher.update([b'N']);
                } else {
                    hasher.update([code_to_char(code) as u8]);
                }
            }
            hasher.update([b'\n']);
        }
        let mut excluded_prefix = Vec::with_capacity(total + 1);
        let mut acc = 0u32;
        excluded_prefix.push(0);
        for &e in &excluded {
            acc += u32::from(e);
            excluded_prefix.push(acc);
        }
        Self {
            codes,
            excluded_prefix,
            record_names: names,
            digest: hasher.finalize().into(),
        }
    }

    pub fn from_sequence(seq: &DnaSequence) -> Self {
        Self::from_records(&[FastaRecord {
            name: "ref".into(),
            seq: seq.clone(),
            ambiguous: Vec::new(),
        }])
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[Code] {
        &self.codes
    }

    pub fn record_names(&self) -> &[String] {
        &self.record_names
    }

    /// Content digest over record names and sequences with ambiguous bases
    /// canonicalized, so it does not depend on line wrapping or on the
    /// ambiguity fill seed.
    pub fn digest(&self) -> [u8; 32] {
        self.digest
    }

    /// True when `[pos, pos + k)` contains no excluded position.
    #[inline]
    fn kmer_valid(&self, pos: usize, k: usize) -> bool {
        self.excluded_prefix[pos + k] == self.excluded_prefix[pos]
    }
}

/// Minimizers of a plain code slice (no exclusions): one hit per window,
/// consecutive same-value hits collapsed to the leftmost.
pub fn window_minimizers(codes: &[Code], params: &IndexParams) -> Vec<MinimizerHit> {
    window_minimizers_impl(codes, params, |_pos| true)
}

fn reference_minimizers(reference: &ReferenceGenome, params: &IndexParams) -> Vec<MinimizerHit> {
    let k = params.k;
    window_minimizers_impl(reference.codes(), params, |pos| reference.kmer_valid(pos, k))
}

fn window_minimizers_impl(
    codes: &[Code],
    params: &IndexParams,
    valid: impl Fn(usize) -> bool + Sync,
) -> Vec<MinimizerHit> {
    let span = params.window_span();
    if codes.len() < span {
        return Vec::new();
    }
    let n_windows = codes.len() - span + 1;
    // Windows are independent, so the scan splits into chunks whose
    // concatenation equals the sequential result; the value-collapse runs
    // globally afterwards.
    let chunk = 64 * 1024;
    let starts: Vec<usize> = (0..n_windows).step_by(chunk).collect();
    let pieces = crate::exec::map_indexed(&starts, |_, &w0| {
        scan_windows(codes, params, &valid, w0, (w0 + chunk).min(n_windows))
    });
    let mut hits: Vec<MinimizerHit> = Vec::new();
    for piece in pieces {
        for hit in piece {
            if hits.last().map(|h| h.minimizer) != Some(hit.minimizer) {
                hits.push(hit);
            }
        }
    }
    hits
}

/// Scan windows `[w0, w1)`, emitting one hit per window with deduplication
/// against the previous emitted hit's value.
fn scan_windows(
    codes: &[Code],
    params: &IndexParams,
    valid: &(impl Fn(usize) -> bool + Sync),
    w0: usize,
    w1: usize,
) -> Vec<MinimizerHit> {
    let k = params.k;
    let w = params.w;
    let mask = if k == 32 { u64::MAX } else { (1u64 << (2 * k)) - 1 };
    let mut out = Vec::new();
    // Monotone deque of (kmer position, kmer value, rank); fronts are the
    // current window minimum, equal ranks keep the leftmost.
    let mut deque: std::collections::VecDeque<(usize, u64, u64)> = std::collections::VecDeque::new();
    let mut value = 0u64;
    // K-mer at position p covers codes[p..p+k]; window wi covers k-mers
    // wi..wi+w-1. Prime the rolling value with the k-mer ending before w0.
    for t in w0..w0 + k - 1 {
        value = (value << 2) | u64::from(codes[t]);
    }
    for p in w0..w1 + w - 1 {
        value = ((value << 2) | u64::from(codes[p + k - 1])) & mask;
        if valid(p) {
            let r = rank(value);
            while deque.back().is_some_and(|&(_, _, br)| br > r) {
                deque.pop_back();
            }
            deque.push_back((p, value, r));
        }
        if p + 1 < w0 + w {
            continue;
        }
        let wi = p + 1 - w;
        while deque.front().is_some_and(|&(fp, _, _)| fp < wi) {
            deque.pop_front();
        }
        if let Some(&(fp, fv, _)) = deque.front() {
            if out.last().map(|h: &MinimizerHit| h.minimizer) != Some(fv) {
                out.push(MinimizerHit {
                    minimizer: fv,
                    position: fp,
                });
            }
        }
    }
    out
}

/// Distinct minimizers of a read with the offset of their leftmost
/// occurrence; reads shorter than one window fall back to a single window
/// spanning the whole read.
pub fn read_minimizers(codes: &[Code], params: &IndexParams) -> Vec<MinimizerHit> {
    let hits = if codes.len() >= params.window_span() {
        window_minimizers(codes, params)
    } else if codes.len() >= params.k {
        let short = IndexParams {
            w: codes.len() - params.k + 1,
            ..*params
        };
        window_minimizers(codes, &short)
    } else {
        return Vec::new();
    };
    let mut seen = BTreeSet::new();
    hits.into_iter()
        .filter(|h| seen.insert(h.minimizer))
        .collect()
}

/// Where one duplicated reference segment lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentLoc {
    /// Offset of the minimizer occurrence in the reference.
    pub ref_pos: usize,
    /// Start of the extracted segment (clamped at reference edges).
    pub seg_start: usize,
}

/// The offline index: per-minimizer segment locations, ordered by
/// minimizer value and by reference position within each minimizer.
#[derive(Debug, Clone)]
pub struct MinimizerIndex {
    pub params: IndexParams,
    table: BTreeMap<u64, Vec<SegmentLoc>>,
    reference_digest: [u8; 32],
    total_hits: usize,
}

impl MinimizerIndex {
    pub fn table(&self) -> &BTreeMap<u64, Vec<SegmentLoc>> {
        &self.table
    }

    pub fn frequency(&self, minimizer: u64) -> usize {
        self.table.get(&minimizer).map_or(0, Vec::len)
    }

    pub fn segments(&self, minimizer: u64) -> Option<&[SegmentLoc]> {
        self.table.get(&minimizer).map(Vec::as_slice)
    }

    pub fn total_hits(&self) -> usize {
        self.total_hits
    }

    pub fn distinct_minimizers(&self) -> usize {
        self.table.len()
    }

    pub fn reference_digest(&self) -> [u8; 32] {
        self.reference_digest
    }

    /// Extract a segment's codes from the reference.
    pub fn extract_segment(&self, reference: &ReferenceGenome, loc: SegmentLoc) -> Vec<Code> {
        let len = self.params.segment_len();
        reference.codes()[loc.seg_start..loc.seg_start + len].to_vec()
    }
}

/// Build the index: every retained (minimizer, position) pair of the
/// reference gets a segment placed so that `seg_start =
/// ref_pos - (rl - k) - eth`, clamped to the reference bounds.
pub fn build_index(
    reference: &ReferenceGenome,
    params: &IndexParams,
) -> Result<MinimizerIndex, IndexError> {
    params.validate()?;
    let seg_len = params.segment_len();
    let need = params.window_span().max(seg_len);
    if reference.len() < need {
        return Err(IndexError::ReferenceTooShort {
            len: reference.len(),
            need,
        });
    }
    let hits = reference_minimizers(reference, params);
    let mut table: BTreeMap<u64, Vec<SegmentLoc>> = BTreeMap::new();
    let back = params.rl - params.k + params.eth;
    let max_start = reference.len() - seg_len;
    for hit in &hits {
        let seg_start = hit.position.saturating_sub(back).min(max_start);
        table.entry(hit.minimizer).or_default().push(SegmentLoc {
            ref_pos: hit.position,
            seg_start,
        });
    }
    Ok(MinimizerIndex {
        params: *params,
        table,
        reference_digest: reference.digest(),
        total_hits: hits.len(),
    })
}

/// One crossbar's workload: a minimizer and a slice of its segments.
#[derive(Debug, Clone)]
pub struct CrossbarAssignment {
    pub id: usize,
    pub minimizer: u64,
    pub segments: Vec<SegmentLoc>,
}

/// The offline placement: crossbar assignments plus the minimizers whose
/// alignment work routes to the scalar-core pool instead.
#[derive(Debug, Clone)]
pub struct CrossbarLayout {
    pub assignments: Vec<CrossbarAssignment>,
    pub riscv_minimizers: BTreeSet<u64>,
    pub low_th: usize,
    pub rows_per_crossbar: usize,
}

impl CrossbarLayout {
    pub fn crossbar_count(&self) -> usize {
        self.assignments.len()
    }
}

/// Route minimizers with frequency at most `low_th` to the offload pool;
/// chunk the rest into crossbars of at most `rows` segments each, in
/// (minimizer, chunk) order so ids are dense and deterministic.
pub fn assign_crossbars(index: &MinimizerIndex, low_th: usize, rows: usize) -> CrossbarLayout {
    let mut assignments = Vec::new();
    let mut riscv = BTreeSet::new();
    for (&minimizer, segments) in index.table() {
        if segments.len() <= low_th {
            riscv.insert(minimizer);
            continue;
        }
        for chunk in segments.chunks(rows) {
            assignments.push(CrossbarAssignment {
                id: assignments.len(),
                minimizer,
                segments: chunk.to_vec(),
            });
        }
    }
    CrossbarLayout {
        assignments,
        riscv_minimizers: riscv,
        low_th,
        rows_per_crossbar: rows,
    }
}

const FILE_MAGIC: &[u8; 4] = b"DPI1";

/// Serialize the index. Segments are re-extracted from the reference on
/// load, so only their coordinates are stored.
pub fn write_index_file(
    index: &MinimizerIndex,
    low_th: usize,
    ref_path: &str,
    out: &mut impl IoWrite,
) -> Result<(), IndexError> {
    out.write_all(FILE_MAGIC)?;
    for v in [
        index.params.k as u32,
        index.params.w as u32,
        index.params.rl as u32,
        index.params.eth as u32,
        low_th as u32,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&index.reference_digest)?;
    let path = ref_path.as_bytes();
    out.write_all(&(path.len() as u16).to_le_bytes())?;
    out.write_all(path)?;
    out.write_all(&(index.table.len() as u64).to_le_bytes())?;
    for (minimizer, segments) in &index.table {
        out.write_all(&minimizer.to_le_bytes())?;
        out.write_all(&(segments.len() as u32).to_le_bytes())?;
        for seg in segments {
            out.write_all(&(seg.ref_pos as u64).to_le_bytes())?;
            out.write_all(&(seg.seg_start as u64).to_le_bytes())?;
        }
    }
    Ok(())
}

/// An index loaded from disk, before it is bound to a reference.
#[derive(Debug)]
pub struct LoadedIndex {
    pub params: IndexParams,
    pub low_th: usize,
    pub reference_digest: [u8; 32],
    pub reference_path: String,
    table: BTreeMap<u64, Vec<SegmentLoc>>,
    total_hits: usize,
}

impl LoadedIndex {
    /// Bind to a reference, verifying the content digest.
    pub fn bind(self, reference: &ReferenceGenome) -> Result<MinimizerIndex, IndexError> {
        if reference.digest() != self.reference_digest {
            return Err(IndexError::DigestMismatch);
        }
        Ok(MinimizerIndex {
            params: self.params,
            table: self.table,
            reference_digest: self.reference_digest,
            total_hits: self.total_hits,
        })
    }
}

pub fn read_index_file(input: &mut impl IoRead) -> Result<LoadedIndex, IndexError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != FILE_MAGIC {
        return Err(IndexError::BadMagic);
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |input: &mut dyn IoRead| -> Result<u32, IndexError> {
        input.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let k = read_u32(input)? as usize;
    let w = read_u32(input)? as usize;
    let rl = read_u32(input)? as usize;
    let eth = read_u32(input)? as usize;
    let low_th = read_u32(input)? as usize;
    let params = IndexParams { k, w, rl, eth };
    params.validate()?;
    let mut digest = [0u8; 32];
    input.read_exact(&mut digest)?;
    let mut u16buf = [0u8; 2];
    input.read_exact(&mut u16buf)?;
    let path_len = u16::from_le_bytes(u16buf) as usize;
    let mut path = vec![0u8; path_len];
    input.read_exact(&mut path)?;
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf)?;
    let n_minimizers = u64::from_le_bytes(u64buf);
    let mut table = BTreeMap::new();
    let mut total_hits = 0usize;
    let mut prev_min: Option<u64> = None;
    for _ in 0..n_minimizers {
        input.read_exact(&mut u64buf)?;
        let minimizer = u64::from_le_bytes(u64buf);
        if prev_min.is_some_and(|p| p >= minimizer) {
            return Err(IndexError::Corrupt("minimizers out of order".into()));
        }
        prev_min = Some(minimizer);
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf)?;
        let count = u32::from_le_bytes(u32buf);
        let mut segments = Vec::with_capacity(count as usize);
        for _ in 0..count {
            input.read_exact(&mut u64buf)?;
            let ref_pos = u64::from_le_bytes(u64buf) as usize;
            input.read_exact(&mut u64buf)?;
            let seg_start = u64::from_le_bytes(u64buf) as usize;
            segments.push(SegmentLoc { ref_pos, seg_start });
        }
        total_hits += segments.len();
        table.insert(minimizer, segments);
    }
    Ok(LoadedIndex {
        params,
        low_th,
        reference_digest: digest,
        reference_path: String::from_utf8_lossy(&path).into_owned(),
        table,
        total_hits,
    })
}

pub fn write_index_to_path(
    index: &MinimizerIndex,
    low_th: usize,
    ref_path: &str,
    path: &Path,
) -> Result<(), IndexError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_index_file(index, low_th, ref_path, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_index_from_path(path: &Path) -> Result<LoadedIndex, IndexError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_index_file(&mut file)
}
