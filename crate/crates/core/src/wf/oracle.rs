//! Full-matrix reference implementations of the alignment recurrences.
//!
//! These allocate the whole dynamic-programming matrix and evaluate the
//! textbook recurrences directly, with cells outside the band held at a
//! large sentinel. They share no code with the band-buffer kernels and are
//! the ground truth the kernel tests compare against. The unbanded
//! semiglobal variant additionally serves as the architecture-free mapper
//! used to score end-to-end accuracy.

use super::{EditOp, Traceback, WfParams, WfWeights};
use crate::genome::Code;

/// Effectively-infinite distance for out-of-band and unreachable cells.
pub const INF: u32 = u32::MAX / 4;

#[inline]
fn add(value: u32, weight: u32) -> u32 {
    if value >= INF {
        INF
    } else {
        value + weight
    }
}

/// Textbook full-matrix edit distance with first row/column initialized to
/// cumulative insertion/deletion costs. No band, no saturation.
pub fn linear_full(s1: &[Code], s2: &[Code], weights: &WfWeights) -> u64 {
    let m = s2.len();
    let mut prev: Vec<u64> = (0..=m as u64).map(|j| j * u64::from(weights.w_ins)).collect();
    let mut cur = vec![0u64; m + 1];
    for (i, &c1) in s1.iter().enumerate() {
        cur[0] = (i as u64 + 1) * u64::from(weights.w_del);
        for (j, &c2) in s2.iter().enumerate() {
            cur[j + 1] = if c1 == c2 {
                prev[j]
            } else {
                (prev[j] + u64::from(weights.w_sub))
                    .min(cur[j] + u64::from(weights.w_ins))
                    .min(prev[j + 1] + u64::from(weights.w_del))
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Banded linear distance computed over the explicit matrix: row 0 is free
/// across the band, cells beyond the band stay at the sentinel, and the
/// result is the cell whose alignment consumed `n + eth` window characters.
/// The value is unclamped; saturating it at `params.sat` reproduces the
/// band-buffer kernel exactly.
pub fn linear_banded_matrix(read: &[Code], window: &[Code], params: &WfParams) -> u32 {
    let n = read.len();
    let eth = params.eth;
    let m = n + 2 * eth;
    assert!(window.len() >= m, "window too short for banded oracle");
    let w = &params.weights;
    let cols = m + 1;
    let mut d = vec![INF; (n + 1) * cols];
    for c in 0..=2 * eth {
        d[c] = 0;
    }
    for a in 1..=n {
        for c in a..=a + 2 * eth {
            let eq = read[a - 1] == window[c - 1];
            let diag = d[(a - 1) * cols + (c - 1)];
            let cell = if eq {
                diag
            } else {
                add(diag, w.w_sub)
                    .min(add(d[(a - 1) * cols + c], w.w_del))
                    .min(add(d[a * cols + (c - 1)], w.w_ins))
            };
            d[a * cols + c] = cell;
        }
    }
    d[n * cols + (n + eth)]
}

/// Banded affine distance over explicit matrices. On a character match the
/// distance matrix takes its diagonal; otherwise the minimum of the
/// substitution step and the two gap matrices, which extend at `w_ex` or
/// open from the distance matrix at `w_op + w_ex`. Unclamped, as above.
pub fn affine_banded_matrix(read: &[Code], window: &[Code], params: &WfParams) -> u32 {
    let n = read.len();
    let eth = params.eth;
    let m = n + 2 * eth;
    assert!(window.len() >= m, "window too short for banded oracle");
    let w = &params.weights;
    let open = w.w_op + w.w_ex;
    let cols = m + 1;
    let mut d = vec![INF; (n + 1) * cols];
    let mut gr = vec![INF; (n + 1) * cols]; // gap in window (read char unmatched)
    let mut gw = vec![INF; (n + 1) * cols]; // gap in read (window char unmatched)
    for c in 0..=2 * eth {
        d[c] = 0;
    }
    for a in 1..=n {
        for c in a..=a + 2 * eth {
            let up = (a - 1) * cols + c;
            let left = a * cols + (c - 1);
            let g1 = add(gr[up], w.w_ex).min(add(d[up], open));
            let g2 = add(gw[left], w.w_ex).min(add(d[left], open));
            gr[a * cols + c] = g1;
            gw[a * cols + c] = g2;
            let diag = d[(a - 1) * cols + (c - 1)];
            d[a * cols + c] = if read[a - 1] == window[c - 1] {
                diag
            } else {
                add(diag, w.w_sub).min(g1).min(g2)
            };
        }
    }
    d[n * cols + (n + eth)]
}

/// Result of an unbanded semiglobal affine alignment.
#[derive(Debug, Clone)]
pub struct SemiglobalAlignment {
    pub distance: u64,
    /// Start of the alignment within the reference segment.
    pub start: usize,
    pub trace: Traceback,
}

/// Full unbanded affine alignment of `read` against any substring of
/// `segment`: the read must be consumed entirely, the segment start and end
/// are free. Ties prefer the leftmost end column. Used as the exact,
/// architecture-free mapping oracle.
pub fn affine_semiglobal(
    read: &[Code],
    segment: &[Code],
    weights: &WfWeights,
) -> SemiglobalAlignment {
    let n = read.len();
    let m = segment.len();
    let cols = m + 1;
    let open = weights.w_op + weights.w_ex;
    let mut d = vec![INF; (n + 1) * cols];
    let mut gr = vec![INF; (n + 1) * cols];
    let mut gw = vec![INF; (n + 1) * cols];
    // Direction bytes: bits 0-1 distance origin, bit 2 gap-read origin,
    // bit 3 gap-window origin.
    let mut dirs = vec![0u8; (n + 1) * cols];
    for c in 0..=m {
        d[c] = 0;
    }
    for a in 1..=n {
        for c in 0..=m {
            let idx = a * cols + c;
            let up = (a - 1) * cols + c;
            let (g1, g1dir) = {
                let ext = add(gr[up], weights.w_ex);
                let opn = add(d[up], open);
                if ext <= opn {
                    (ext, 1u8)
                } else {
                    (opn, 0u8)
                }
            };
            gr[idx] = g1;
            let (g2, g2dir) = if c > 0 {
                let left = idx - 1;
                let ext = add(gw[left], weights.w_ex);
                let opn = add(d[left], open);
                if ext <= opn {
                    (ext, 1u8)
                } else {
                    (opn, 0u8)
                }
            } else {
                (INF, 0u8)
            };
            gw[idx] = g2;
            let (dv, ddir) = if c > 0 {
                let diag = d[up - 1];
                if read[a - 1] == segment[c - 1] {
                    (diag, 0u8)
                } else {
                    let mut best = add(diag, weights.w_sub);
                    let mut dir = 1u8;
                    if g2 < best {
                        best = g2;
                        dir = 2;
                    }
                    if g1 < best {
                        best = g1;
                        dir = 3;
                    }
                    (best, dir)
                }
            } else {
                (g1, 3u8)
            };
            d[idx] = dv;
            dirs[idx] = ddir | (g1dir << 2) | (g2dir << 3);
        }
    }
    let mut best_c = 0usize;
    let mut best = INF;
    for c in 0..=m {
        let v = d[n * cols + c];
        if v < best {
            best = v;
            best_c = c;
        }
    }
    // Traceback.
    let mut ops = Vec::new();
    let mut a = n;
    let mut c = best_c;
    let mut state = 0u8; // 0 = distance, 1 = gap-read, 2 = gap-window
    while a > 0 {
        let nib = dirs[a * cols + c];
        match state {
            0 => match nib & 3 {
                0 => {
                    ops.push(EditOp::Match);
                    a -= 1;
                    c -= 1;
                }
                1 => {
                    ops.push(EditOp::Substitute);
                    a -= 1;
                    c -= 1;
                }
                2 => state = 2,
                _ => state = 1,
            },
            1 => {
                ops.push(EditOp::Insert);
                state = if (nib >> 2) & 1 == 1 { 1 } else { 0 };
                a -= 1;
            }
            _ => {
                ops.push(EditOp::Delete);
                state = if (nib >> 3) & 1 == 1 { 2 } else { 0 };
                c -= 1;
            }
        }
    }
    ops.reverse();
    SemiglobalAlignment {
        distance: u64::from(best.min(INF)),
        start: c,
        trace: Traceback {
            ops,
            window_start: c,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::DnaSequence;

    fn codes(text: &str) -> Vec<Code> {
        DnaSequence::from_text(text.as_bytes()).unwrap().unpack()
    }

    #[test]
    fn semiglobal_exact_substring() {
        let seg = codes("ACGTACGTACGTACGT");
        let read = codes("TACGTA");
        let aln = affine_semiglobal(&read, &seg, &WfWeights::default());
        assert_eq!(aln.distance, 0);
        assert_eq!(aln.start, 3);
        assert!(aln.trace.is_consistent(&read, &seg));
    }

    #[test]
    fn semiglobal_single_gap() {
        let seg = codes("AACCGGTTAACCGGTT");
        let read = codes("CCGGTAACC"); // one T dropped from the middle
        let aln = affine_semiglobal(&read, &seg, &WfWeights::default());
        assert_eq!(aln.distance, 2); // open + extend for a length-1 gap
        assert!(aln.trace.is_consistent(&read, &seg));
        assert_eq!(
            super::super::trace_cost(&aln.trace.ops, &WfWeights::default()),
            aln.distance
        );
    }

    #[test]
    fn banded_matrix_agrees_with_full_for_centered_exact() {
        let seg = codes("ACGTTGCAACGTTGCAACGTACGT");
        let p = WfParams::linear(6);
        let read = seg[6..18].to_vec();
        assert_eq!(linear_banded_matrix(&read, &seg, &p), 0);
        assert_eq!(affine_banded_matrix(&read, &seg, &p), 0);
    }
}
