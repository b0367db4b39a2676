//! DNA sequences, FASTA/FASTQ parsing, and synthetic read generation.
//!
//! Bases are stored 2 bits each (A=0, C=1, G=2, T=3). Parsing uppercases
//! input and replaces ambiguity codes (N and friends) with a base derived
//! deterministically from the position and a global seed; the positions of
//! replaced bases are reported so downstream indexing can exclude them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A 2-bit base code in 0..=3.
pub type Code = u8;

pub const CODE_A: Code = 0;
pub const CODE_C: Code = 1;
pub const CODE_G: Code = 2;
pub const CODE_T: Code = 3;

#[derive(Debug, Error)]
pub enum GenomeError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("fastq record {record}: {msg}")]
    FastqRecord { record: usize, msg: String },
    #[error("invalid base {0:?}")]
    InvalidBase(char),
    #[error("reference length {ref_len} is shorter than read length {read_len}")]
    ReferenceTooShort { ref_len: usize, read_len: usize },
    #[error("error rates must lie in [0,1] and sum to less than 1")]
    InvalidRates,
}

/// 64-bit finalizer mix; a fixed constant of the artifact so that minimizer
/// selection and ambiguity replacement are reproducible everywhere.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

/// Deterministic replacement base for an ambiguous input character.
#[inline]
fn ambiguity_fill(position: usize, seed: u64) -> Code {
    (mix64((position as u64) ^ seed.rotate_left(17)) & 3) as Code
}

#[inline]
pub fn code_to_char(code: Code) -> char {
    match code & 3 {
        CODE_A => 'A',
        CODE_C => 'C',
        CODE_G => 'G',
        _ => 'T',
    }
}

#[inline]
pub fn char_to_code(c: u8) -> Option<Code> {
    match c {
        b'A' | b'a' => Some(CODE_A),
        b'C' | b'c' => Some(CODE_C),
        b'G' | b'g' => Some(CODE_G),
        b'T' | b't' => Some(CODE_T),
        _ => None,
    }
}

/// A DNA sequence packed four bases per byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct DnaSequence {
    packed: Vec<u8>,
    len: usize,
}

impl DnaSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bases: usize) -> Self {
        Self {
            packed: Vec::with_capacity(bases.div_ceil(4)),
            len: 0,
        }
    }

    /// Parse a strict A/C/G/T string.
    pub fn from_text(text: &[u8]) -> Result<Self, GenomeError> {
        let mut seq = Self::with_capacity(text.len());
        for &b in text {
            match char_to_code(b) {
                Some(code) => seq.push(code),
                None => return Err(GenomeError::InvalidBase(b as char)),
            }
        }
        Ok(seq)
    }

    pub fn from_codes(codes: &[Code]) -> Self {
        let mut seq = Self::with_capacity(codes.len());
        for &c in codes {
            seq.push(c);
        }
        seq
    }

    #[inline]
    pub fn push(&mut self, code: Code) {
        debug_assert!(code < 4);
        let slot = self.len % 4;
        if slot == 0 {
            self.packed.push(0);
        }
        let last = self.packed.last_mut().unwrap();
        *last |= (code & 3) << (slot * 2);
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> Code {
        debug_assert!(i < self.len);
        (self.packed[i / 4] >> ((i % 4) * 2)) & 3
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unpack into one code per byte; the working representation for the
    /// alignment kernels.
    pub fn unpack(&self) -> Vec<Code> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn subseq(&self, start: usize, len: usize) -> DnaSequence {
        assert!(start + len <= self.len);
        let mut out = Self::with_capacity(len);
        for i in start..start + len {
            out.push(self.get(i));
        }
        out
    }

    pub fn to_text(&self) -> String {
        (0..self.len).map(|i| code_to_char(self.get(i))).collect()
    }
}

/// result[i] = complement(s[len-1-i]); an involution.
pub fn reverse_complement(s: &DnaSequence) -> DnaSequence {
    let mut out = DnaSequence::with_capacity(s.len());
    for i in (0..s.len()).rev() {
        out.push(s.get(i) ^ 3);
    }
    out
}

pub fn reverse_complement_codes(codes: &[Code]) -> Vec<Code> {
    codes.iter().rev().map(|&c| c ^ 3).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Strand {
    Forward,
    Reverse,
}

impl Strand {
    pub fn symbol(self) -> char {
        match self {
            Strand::Forward => '+',
            Strand::Reverse => '-',
        }
    }
}

/// Ground-truth origin of a synthetic read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOrigin {
    /// 0-based offset of the read's source window in the reference.
    pub ref_pos: usize,
    pub strand: Strand,
    /// Number of edits injected while generating the read.
    pub edits: u32,
}

#[derive(Debug, Clone)]
pub struct Read {
    pub id: String,
    pub seq: DnaSequence,
    pub truth: Option<ReadOrigin>,
}

/// One FASTA record after ambiguity cleanup.
#[derive(Debug, Clone)]
pub struct FastaRecord {
    pub name: String,
    pub seq: DnaSequence,
    /// Positions whose input character was not A/C/G/T, in ascending order.
    pub ambiguous: Vec<usize>,
}

/// Parse FASTA text. Records may span multiple lines; CRLF is accepted.
/// Ambiguous bases are replaced deterministically using `ambiguity_seed`.
pub fn parse_fasta(text: &[u8], ambiguity_seed: u64) -> Result<Vec<FastaRecord>, GenomeError> {
    let mut records: Vec<FastaRecord> = Vec::new();
    let mut current: Option<(FastaRecord, usize)> = None; // record + header line

    for (line_no, raw) in text.split(|&b| b == b'\n').enumerate() {
        let line = trim_cr(raw);
        let line_no = line_no + 1;
        if line.is_empty() {
            continue;
        }
        if line[0] == b'>' {
            if let Some((rec, header_line)) = current.take() {
                if rec.seq.is_empty() {
                    return Err(GenomeError::Parse {
                        line: header_line,
                        msg: format!("record {:?} has no sequence", rec.name),
                    });
                }
                records.push(rec);
            }
            let name = String::from_utf8_lossy(&line[1..])
                .split_whitespace()
                .next()
                .unwrap_or("")
                .to_string();
            if name.is_empty() {
                return Err(GenomeError::Parse {
                    line: line_no,
                    msg: "empty FASTA header".into(),
                });
            }
            current = Some((
                FastaRecord {
                    name,
                    seq: DnaSequence::new(),
                    ambiguous: Vec::new(),
                },
                line_no,
            ));
        } else {
            let (rec, _) = current.as_mut().ok_or(GenomeError::Parse {
                line: line_no,
                msg: "sequence data before any FASTA header".into(),
            })?;
            for &b in line {
                let pos = rec.seq.len();
                match char_to_code(b) {
                    Some(code) => rec.seq.push(code),
                    None => {
                        if b.is_ascii_whitespace() {
                            return Err(GenomeError::Parse {
                                line: line_no,
                                msg: "embedded whitespace in sequence line".into(),
                            });
                        }
                        rec.seq.push(ambiguity_fill(pos, ambiguity_seed));
                        rec.ambiguous.push(pos);
                    }
                }
            }
        }
    }
    if let Some((rec, header_line)) = current.take() {
        if rec.seq.is_empty() {
            return Err(GenomeError::Parse {
                line: header_line,
                msg: format!("record {:?} has no sequence", rec.name),
            });
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(GenomeError::Parse {
            line: 1,
            msg: "no FASTA records found".into(),
        });
    }
    Ok(records)
}

/// Parse 4-line FASTQ records. Qualities are length-checked and dropped.
pub fn parse_fastq(text: &[u8], ambiguity_seed: u64) -> Result<Vec<Read>, GenomeError> {
    let mut lines = text.split(|&b| b == b'\n').map(trim_cr);
    let mut reads = Vec::new();
    let mut record = 0usize;
    loop {
        let header = match lines.next() {
            None => break,
            Some(l) if l.is_empty() => continue,
            Some(l) => l,
        };
        record += 1;
        if header[0] != b'@' {
            return Err(GenomeError::FastqRecord {
                record,
                msg: "header does not start with '@'".into(),
            });
        }
        let id = String::from_utf8_lossy(&header[1..])
            .split_whitespace()
            .next()
            .unwrap_or("")
            .to_string();
        let seq_line = lines.next().ok_or(GenomeError::FastqRecord {
            record,
            msg: "truncated record: missing sequence line".into(),
        })?;
        let plus = lines.next().ok_or(GenomeError::FastqRecord {
            record,
            msg: "truncated record: missing separator line".into(),
        })?;
        if plus.first() != Some(&b'+') {
            return Err(GenomeError::FastqRecord {
                record,
                msg: "separator line does not start with '+'".into(),
            });
        }
        let qual = lines.next().ok_or(GenomeError::FastqRecord {
            record,
            msg: "truncated record: missing quality line".into(),
        })?;
        if qual.len() != seq_line.len() {
            return Err(GenomeError::FastqRecord {
                record,
                msg: format!(
                    "quality length {} does not match sequence length {}",
                    qual.len(),
                    seq_line.len()
                ),
            });
        }
        let mut seq = DnaSequence::with_capacity(seq_line.len());
        for &b in seq_line {
            let pos = seq.len();
            match char_to_code(b) {
                Some(code) => seq.push(code),
                None => seq.push(ambiguity_fill(pos, ambiguity_seed)),
            }
        }
        reads.push(Read {
            id,
            seq,
            truth: None,
        });
    }
    Ok(reads)
}

fn trim_cr(line: &[u8]) -> &[u8] {
    match line.last() {
        Some(b'\r') => &line[..line.len() - 1],
        _ => line,
    }
}

/// Per-base error rates used by the synthetic read generator.
#[derive(Debug, Clone, Copy)]
pub struct ReadErrorModel {
    pub substitution: f64,
    pub insertion: f64,
    pub deletion: f64,
    pub seed: u64,
}

impl ReadErrorModel {
    pub fn error_free(seed: u64) -> Self {
        Self {
            substitution: 0.0,
            insertion: 0.0,
            deletion: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        let rates = [self.substitution, self.insertion, self.deletion];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(GenomeError::InvalidRates);
        }
        if rates.iter().sum::<f64>() >= 1.0 {
            return Err(GenomeError::InvalidRates);
        }
        Ok(())
    }
}

/// Generate `n` reads of length `rl` from uniformly random positions and
/// strands of `reference`, mutated per `model`, with ground truth recorded.
///
/// Each read draws from its own seeded substream, so the output is identical
/// whether reads are generated sequentially or in parallel.
pub fn generate_reads(
    reference: &DnaSequence,
    n: usize,
    rl: usize,
    model: &ReadErrorModel,
) -> Result<Vec<Read>, GenomeError> {
    model.validate()?;
    if reference.len() < rl {
        return Err(GenomeError::ReferenceTooShort {
            ref_len: reference.len(),
            read_len: rl,
        });
    }
    let ref_codes = reference.unpack();
    let reads = crate::exec::map_indexed(&vec![(); n], |i, _| {
        generate_one_read(&ref_codes, i, rl, model)
    });
    Ok(reads)
}

fn generate_one_read(ref_codes: &[Code], idx: usize, rl: usize, model: &ReadErrorModel) -> Read {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(model.seed ^ (idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    let max_start = ref_codes.len() - rl;
    let start = rng.gen_range(0..=max_start);
    let strand = if rng.gen_bool(0.5) {
        Strand::Forward
    } else {
        Strand::Reverse
    };
    // Template in read orientation: reverse-strand reads are the reverse
    // complement of the reference window.
    let window: Vec<Code> = if strand == Strand::Forward {
        ref_codes[start..start + rl].to_vec()
    } else {
        reverse_complement_codes(&ref_codes[start..start + rl])
    };
    // Walk the template emitting exactly rl bases. A deletion consumes a
    // template base without emitting; an insertion emits a random base
    // without consuming; a substitution emits a different base. If the
    // template runs out (net deletions at the tail), random bases pad.
    let mut out = Vec::with_capacity(rl);
    let mut t = 0usize;
    let mut edits = 0u32;
    while out.len() < rl {
        if t >= window.len() {
            out.push(rng.gen_range(0..4) as Code);
            edits += 1;
            continue;
        }
        let roll: f64 = rng.gen();
        if roll < model.deletion {
            t += 1;
            edits += 1;
        } else if roll < model.deletion + model.insertion {
            out.push(rng.gen_range(0..4) as Code);
            edits += 1;
        } else if roll < model.deletion + model.insertion + model.substitution {
            let orig = window[t];
            let sub = (orig + rng.gen_range(1..4)) & 3;
            out.push(sub);
            t += 1;
            edits += 1;
        } else {
            out.push(window[t]);
            t += 1;
        }
    }
    Read {
        id: format!("read{idx:06}"),
        seq: DnaSequence::from_codes(&out),
        truth: Some(ReadOrigin {
            ref_pos: start,
            strand,
            edits,
        }),
    }
}

/// Write a FASTA record wrapped at 80 columns.
pub fn write_fasta(name: &str, seq: &DnaSequence) -> String {
    let text = seq.to_text();
    let mut out = String::with_capacity(text.len() + text.len() / 80 + name.len() + 3);
    out.push('>');
    out.push_str(name);
    out.push('\n');
    for chunk in text.as_bytes().chunks(80) {
        out.push_str(std::str::from_utf8(chunk).unwrap());
        out.push('\n');
    }
    out
}

/// Write FASTQ with constant placeholder qualities.
pub fn write_fastq(reads: &[Read]) -> String {
    let mut out = String::new();
    for read in reads {
        let text = read.seq.to_text();
        out.push('@');
        out.push_str(&read.id);
        out.push('\n');
        out.push_str(&text);
        out.push_str("\n+\n");
        out.extend(std::iter::repeat('I').take(text.len()));
        out.push('\n');
    }
    out
}

/// Ground-truth table: `read_id<TAB>ref_pos<TAB>strand`.
pub fn write_truth_tsv(reads: &[Read]) -> String {
    let mut out = String::from("read_id\tref_pos\tstrand\n");
    for read in reads {
        if let Some(t) = &read.truth {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                read.id,
                t.ref_pos,
                t.strand.symbol()
            ));
        }
    }
    out
}

/// Parse a truth TSV produced by [`write_truth_tsv`].
pub fn parse_truth_tsv(text: &str) -> Result<Vec<(String, usize, Strand)>, GenomeError> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 && line.starts_with("read_id") {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (id, pos, strand) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(GenomeError::Parse {
                    line: line_no + 1,
                    msg: "truth row needs 3 tab-separated fields".into(),
                })
            }
        };
        let pos: usize = pos.parse().map_err(|_| GenomeError::Parse {
            line: line_no + 1,
            msg: format!("bad position {pos:?}"),
        })?;
        let strand = match strand {
            "+" => Strand::Forward,
            "-" => Strand::Reverse,
            other => {
                return Err(GenomeError::Parse {
                    line: line_no + 1,
                    msg: format!("bad strand {other:?}"),
                })
            }
        };
        out.push((id.to_string(), pos, strand));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fasta_minimal_record() {
        let recs = parse_fasta(b">r\nACGT", 0).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].name, "r");
        assert_eq!(recs[0].seq.to_text(), "ACGT");
    }

    #[test]
    fn fasta_line_folding() {
        let recs = parse_fasta(b">r\nAC\nGT", 0).unwrap();
        assert_eq!(recs[0].seq.to_text(), "ACGT");
    }

    #[test]
    fn fasta_multi_record() {
        let recs = parse_fasta(b">a\nAAAA\n>b\nCCCC", 0).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].seq.len(), 4);
        assert_eq!(recs[1].seq.len(), 4);
    }

    #[test]
    fn fasta_errors_name_line() {
        let err = parse_fasta(b">a\n>b\nCCCC", 0).unwrap_err();
        assert!(matches!(err, GenomeError::Parse { line: 1, .. }), "{err}");
        let err = parse_fasta(b"ACGT\n", 0).unwrap_err();
        assert!(matches!(err, GenomeError::Parse { line: 1, .. }));
    }

    #[test]
    fn fasta_ambiguity_replacement_is_deterministic_and_reported() {
        let a = parse_fasta(b">r\nACNNGT", 7).unwrap();
        let b = parse_fasta(b">r\nACNNGT", 7).unwrap();
        assert_eq!(a[0].seq, b[0].seq);
        assert_eq!(a[0].ambiguous, vec![2, 3]);
        let c = parse_fasta(b">r\nACNNGT", 8).unwrap();
        assert_eq!(c[0].ambiguous, vec![2, 3]);
    }

    #[test]
    fn fastq_basic() {
        let reads = parse_fastq(b"@x\nACGT\n+\nIIII", 0).unwrap();
        assert_eq!(reads.len(), 1);
        assert_eq!(reads[0].id, "x");
        assert_eq!(reads[0].seq.len(), 4);
    }

    #[test]
    fn fastq_two_records_in_order() {
        let reads = parse_fastq(b"@x\nACGT\n+\nIIII\n@y\nTTTT\n+\nIIII\n", 0).unwrap();
        assert_eq!(reads.len(), 2);
        assert_eq!(reads[0].id, "x");
        assert_eq!(reads[1].id, "y");
    }

    #[test]
    fn fastq_quality_length_mismatch() {
        let err = parse_fastq(b"@x\nACGT\n+\nIII", 0).unwrap_err();
        assert!(matches!(err, GenomeError::FastqRecord { record: 1, .. }), "{err}");
    }

    #[test]
    fn rc_examples() {
        let s = DnaSequence::from_text(b"ACGT").unwrap();
        assert_eq!(reverse_complement(&s).to_text(), "ACGT");
        let s = DnaSequence::from_text(b"AAAA").unwrap();
        assert_eq!(reverse_complement(&s).to_text(), "TTTT");
    }

    #[test]
    fn generate_zero_error_reads_are_exact_substrings() {
        let reference = random_reference(2000, 3);
        let reads = generate_reads(&reference, 50, 150, &ReadErrorModel::error_free(11)).unwrap();
        for read in &reads {
            let t = read.truth.unwrap();
            assert_eq!(t.edits, 0);
            let window = reference.subseq(t.ref_pos, 150);
            let expect = match t.strand {
                Strand::Forward => window,
                Strand::Reverse => reverse_complement(&window),
            };
            assert_eq!(read.seq, expect);
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let reference = random_reference(2000, 3);
        let model = ReadErrorModel {
            substitution: 0.01,
            insertion: 0.005,
            deletion: 0.005,
            seed: 42,
        };
        let a = generate_reads(&reference, 100, 150, &model).unwrap();
        let b = generate_reads(&reference, 100, 150, &model).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seq, y.seq);
            assert_eq!(x.truth, y.truth);
        }
    }

    #[test]
    fn substitution_rate_matches_binomial_expectation() {
        // Mean per-read Hamming distance for sub=0.01, rl=150 is 1.5;
        // the sample mean over 1000 reads has sigma = sqrt(150*.01*.99/1000)
        // = 0.03854, so a 3-sigma bound is 0.1157.
        let reference = random_reference(20_000, 5);
        let model = ReadErrorModel {
            substitution: 0.01,
            insertion: 0.0,
            deletion: 0.0,
            seed: 99,
        };
        let reads = generate_reads(&reference, 1000, 150, &model).unwrap();
        let total: u64 = reads
            .iter()
            .map(|r| {
                let t = r.truth.unwrap();
                let window = reference.subseq(t.ref_pos, 150);
                let tmpl = match t.strand {
                    Strand::Forward => window,
                    Strand::Reverse => reverse_complement(&window),
                };
                (0..150).filter(|&i| tmpl.get(i) != r.seq.get(i)).count() as u64
            })
            .sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - 1.5).abs() <= 0.1157, "mean hamming {mean}");
    }

    #[test]
    fn short_reference_rejected() {
        let reference = random_reference(100, 3);
        let err = generate_reads(&reference, 1, 150, &ReadErrorModel::error_free(0)).unwrap_err();
        assert!(matches!(err, GenomeError::ReferenceTooShort { .. }));
    }

    pub(crate) fn random_reference(len: usize, seed: u64) -> DnaSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seq = DnaSequence::with_capacity(len);
        for _ in 0..len {
            seq.push(rng.gen_range(0..4) as Code);
        }
        seq
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(text in "[ACGT]{0,200}") {
            let seq = DnaSequence::from_text(text.as_bytes()).unwrap();
            prop_assert_eq!(seq.to_text(), text);
            prop_assert_eq!(seq.len(), seq.unpack().len());
        }

        #[test]
        fn rc_is_involution(text in "[ACGT]{1,150}") {
            let seq = DnaSequence::from_text(text.as_bytes()).unwrap();
            prop_assert_eq!(reverse_complement(&reverse_complement(&seq)), seq);
        }

        #[test]
        fn subseq_matches_unpack(text in "[ACGT]{10,100}", start in 0usize..5, len in 1usize..5) {
            let seq = DnaSequence::from_text(text.as_bytes()).unwrap();
            let sub = seq.subseq(start, len);
            prop_assert_eq!(sub.unpack().as_slice(), &seq.unpack()[start..start+len]);
        }
    }
}
