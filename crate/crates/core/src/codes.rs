//! Benchmark broadcast codes (LT, RLNC, chunked, IDNC) and receiver-side
//! decoders.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::gfield::{Elem, Field};
use crate::gfmatrix::{self, LinalgError, Matrix, Solution};
use crate::ops;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodesError {
    #[error("bad soliton parameters: N={n}, c={c}, delta={delta}")]
    BadParams { n: usize, c: f64, delta: f64 },
    #[error("chunk size {c} does not divide N={n}")]
    BadChunk { n: usize, c: usize },
    #[error("no user is missing a packet")]
    NoMissing,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A coded packet: its encoding vector and the matching combination of the
/// source payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPacket {
    pub coeffs: Vec<Elem>,
    pub payload: Vec<Elem>,
}

impl EncodedPacket {
    /// Combines `sources` with `coeffs`; the work is charged to the caller.
    pub fn combine(field: &Field, coeffs: Vec<Elem>, sources: &[Vec<Elem>]) -> Self {
        let len = sources.first().map_or(0, Vec::len);
        let mut payload = vec![0; len];
        for (&c, src) in coeffs.iter().zip(sources) {
            if c != 0 {
                field.axpy(&mut payload, c, src);
            }
        }
        EncodedPacket { coeffs, payload }
    }

    pub fn weight(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// True iff the payload matches the coefficients over `sources`.
    pub fn is_consistent(&self, field: &Field, sources: &[Vec<Elem>]) -> bool {
        ops::uncounted(|| EncodedPacket::combine(field, self.coeffs.clone(), sources).payload == self.payload)
    }
}

/// Robust Soliton degree distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustSoliton {
    n: usize,
    c: f64,
    delta: f64,
    /// `pmf[d - 1]` is the probability of degree `d`.
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl RobustSoliton {
    pub fn new(n: usize, c: f64, delta: f64) -> Result<Self, CodesError> {
        if n == 0 || c.is_nan() || c <= 0.0 || delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
            return Err(CodesError::BadParams { n, c, delta });
        }
        let nf = n as f64;
        let r = c * (nf / delta).ln() * nf.sqrt();
        let spike = ((nf / r).ceil() as usize).clamp(1, n);
        let mut mu: Vec<f64> = (1..=n)
            .map(|d| {
                let rho = if d == 1 { 1.0 / nf } else { 1.0 / (d * (d - 1)) as f64 };
                let tau = if d < spike {
                    r / (d as f64 * nf)
                } else if d == spike {
                    (r * (r / delta).ln() / nf).max(0.0)
                } else {
                    0.0
                };
                rho + tau
            })
            .collect();
        let beta: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= beta);
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = mu
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        *cdf.last_mut().expect("n >= 1") = 1.0;
        Ok(RobustSoliton {
            n,
            c,
            delta,
            pmf: mu,
            cdf,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// The degree carrying the extra spike mass.
    pub fn spike(&self) -> usize {
        let nf = self.n as f64;
        let r = self.c * (nf / self.delta).ln() * nf.sqrt();
        ((nf / r).ceil() as usize).clamp(1, self.n)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.n - 1) + 1
    }
}

/// Sum of `degree` distinct sources chosen uniformly.
pub fn lt_encode_degree(field: &Field, sources: &[Vec<Elem>], degree: usize, rng: &mut impl Rng) -> EncodedPacket {
    let n = sources.len();
    let mut coeffs = vec![0; n];
    for i in index::sample(rng, n, degree.min(n)) {
        coeffs[i] = 1;
    }
    EncodedPacket::combine(field, coeffs, sources)
}

pub fn lt_encode(field: &Field, sources: &[Vec<Elem>], dist: &RobustSoliton, rng: &mut impl Rng) -> EncodedPacket {
    let d = dist.sample(rng);
    lt_encode_degree(field, sources, d, rng)
}

/// Incremental belief-propagation (peeling) decoder for 0/1 packets.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    field: Field,
    decoded: Vec<Option<Vec<Elem>>>,
    n_decoded: usize,
    /// Unresolved packets: remaining source indices and reduced payload.
    pending: Vec<Option<(Vec<usize>, Vec<Elem>)>>,
    by_source: Vec<Vec<usize>>,
}

impl BpDecoder {
    pub fn new(field: &Field, n: usize) -> Self {
        BpDecoder {
            field: field.clone(),
            decoded: vec![None; n],
            n_decoded: 0,
            pending: Vec::new(),
            by_source: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.decoded.len()
    }

    pub fn decoded_count(&self) -> usize {
        self.n_decoded
    }

    pub fn is_complete(&self) -> bool {
        self.n_decoded == self.n()
    }

    pub fn is_decoded(&self, i: usize) -> bool {
        self.decoded[i].is_some()
    }

    /// Adds a packet and peels as far as possible. Returns the number of
    /// sources newly decoded.
    pub fn add(&mut self, pkt: &EncodedPacket) -> usize {
        let f = self.field.clone();
        let mut payload = pkt.payload.clone();
        let mut rest = Vec::new();
        for (i, &c) in pkt.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            match &self.decoded[i] {
                Some(src) => {
                    f.axpy(&mut payload, f.neg(c), src);
                }
                None => rest.push(i),
            }
        }
        let before = self.n_decoded;
        match rest.len() {
            0 => {}
            1 => {
                let i = rest[0];
                let c = pkt.coeffs[i];
                if c != 1 {
                    f.scale(&mut payload, f.inv(c).expect("nonzero"));
                }
                self.resolve(i, payload);
            }
            _ => {
                let id = self.pending.len();
                for &i in &rest {
                    self.by_source[i].push(id);
                }
                // 0/1 coefficients: the reduced packet is the plain sum of `rest`
                self.pending.push(Some((rest, payload)));
            }
        }
        self.n_decoded - before
    }

    fn resolve(&mut self, first: usize, value: Vec<Elem>) {
        let f = self.field.clone();
        let mut queue = vec![(first, value)];
        while let Some((i, value)) = queue.pop() {
            if self.decoded[i].is_some() {
                continue;
            }
            for id in std::mem::take(&mut self.by_source[i]) {
                let Some((rest, payload)) = &mut self.pending[id] else {
                    continue;
                };
                rest.retain(|&j| j != i);
                f.axpy(payload, f.neg(1), &value);
                if rest.len() == 1 {
                    let (rest, payload) = self.pending[id].take().expect("pending");
                    queue.push((rest[0], payload));
                }
            }
            self.decoded[i] = Some(value);
            self.n_decoded += 1;
        }
    }

    pub fn sources(&self) -> Option<Vec<Vec<Elem>>> {
        self.decoded.iter().cloned().collect()
    }
}

/// Outcome of a batch decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Complete(Vec<Vec<Elem>>),
    /// Which sources were recovered, if the decoder can tell.
    Incomplete(Vec<bool>),
}

impl Decoded {
    pub fn complete(self) -> Option<Vec<Vec<Elem>>> {
        match self {
            Decoded::Complete(s) => Some(s),
            Decoded::Incomplete(_) => None,
        }
    }
}

/// Peels a batch of 0/1 packets.
pub fn lt_bp_decode(field: &Field, received: &[EncodedPacket], n: usize) -> Decoded {
    let mut dec = BpDecoder::new(field, n);
    for p in received {
        dec.add(p);
    }
    match dec.sources() {
        Some(s) => Decoded::Complete(s),
        None => Decoded::Incomplete((0..n).map(|i| dec.is_decoded(i)).collect()),
    }
}

/// Uniform coefficients over the whole field, zero included.
pub fn rlnc_encode(field: &Field, sources: &[Vec<Elem>], rng: &mut impl Rng) -> EncodedPacket {
    let q = field.q();
    let coeffs = (0..sources.len()).map(|_| rng.gen_range(0..q) as Elem).collect();
    EncodedPacket::combine(field, coeffs, sources)
}

/// Uniform coefficients within one uniformly chosen chunk of `chunk` packets.
pub fn chunked_encode(
    field: &Field,
    sources: &[Vec<Elem>],
    chunk: usize,
    rng: &mut impl Rng,
) -> Result<EncodedPacket, CodesError> {
    let n = sources.len();
    if chunk == 0 || !n.is_multiple_of(chunk) {
        return Err(CodesError::BadChunk { n, c: chunk });
    }
    let start = rng.gen_range(0..n / chunk) * chunk;
    let q = field.q();
    let mut coeffs = vec![0; n];
    for c in &mut coeffs[start..start + chunk] {
        *c = rng.gen_range(0..q) as Elem;
    }
    Ok(EncodedPacket::combine(field, coeffs, sources))
}

/// Picks the packets to XOR by maximum weight vertex search over the IDNC
/// graph. `has[i][j]` says user `i` holds packet `j`; `p[i]` is its erasure
/// probability. Returns the sorted packet indices.
pub fn idnc_mwvs(has: &[Vec<bool>], p: &[f64]) -> Result<Vec<usize>, CodesError> {
    let k = has.len();
    let n = has.first().map_or(0, Vec::len);
    let words = n.div_ceil(64);
    let to_bits = |v: &mut dyn Iterator<Item = bool>| {
        let mut b = vec![0u64; words];
        for (j, x) in v.enumerate() {
            if x {
                b[j / 64] |= 1 << (j % 64);
            }
        }
        b
    };
    let has_bits: Vec<Vec<u64>> = has.iter().map(|h| to_bits(&mut h.iter().copied())).collect();
    // live[i]: wanted packets of user i still in the candidate set
    let mut live: Vec<Vec<u64>> = has.iter().map(|h| to_bits(&mut h.iter().map(|&x| !x))).collect();
    let t: Vec<f64> = (0..k)
        .map(|i| (n - has[i].iter().filter(|&&x| x).count()) as f64 / (1.0 - p[i]))
        .collect();
    let bit = |b: &[u64], j: usize| b[j / 64] >> (j % 64) & 1 == 1;
    if live.iter().all(|l| l.iter().all(|&w| w == 0)) {
        return Err(CodesError::NoMissing);
    }
    let mut chosen = Vec::new();
    loop {
        // c[i][k] = |live_k ∩ has_i|
        let c: Vec<Vec<u32>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|kk| live[kk].iter().zip(&has_bits[i]).map(|(a, b)| (a & b).count_ones()).sum())
                    .collect()
            })
            .collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..k {
            for j in 0..n {
                if !bit(&live[i], j) {
                    continue;
                }
                let mut s = 0.0;
                for kk in (0..k).filter(|&kk| kk != i) {
                    let same = bit(&live[kk], j) as u32;
                    let cross = if bit(&has_bits[kk], j) { c[i][kk] } else { 0 };
                    s += t[kk] * (same + cross) as f64;
                }
                let w = t[i] * s;
                if best.is_none_or(|(bw, _, _)| w > bw) {
                    best = Some((w, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else {
            break;
        };
        ops::record(0, 1);
        chosen.push(j);
        // keep only neighbours of (i, j)
        for kk in 0..k {
            if kk == i {
                live[kk].iter_mut().for_each(|w| *w = 0);
                continue;
            }
            let mut keep = vec![0u64; words];
            if bit(&live[kk], j) {
                keep[j / 64] |= 1 << (j % 64);
            }
            if bit(&has_bits[kk], j) {
                for (w, (l, h)) in keep.iter_mut().zip(live[kk].iter().zip(&has_bits[i])) {
                    *w |= l & h;
                }
            }
            live[kk] = keep;
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    Ok(chosen)
}

/// XOR of the packets selected by [`idnc_mwvs`].
pub fn idnc_mwvs_encode(
    field: &Field,
    sources: &[Vec<Elem>],
    has: &[Vec<bool>],
    p: &[f64],
) -> Result<EncodedPacket, CodesError> {
    let picked = idnc_mwvs(has, p)?;
    let mut coeffs = vec![0; sources.len()];
    for j in picked {
        coeffs[j] = 1;
    }
    Ok(EncodedPacket::combine(field, coeffs, sources))
}

fn stack(field: &Field, received: &[EncodedPacket], n: usize) -> Result<(Matrix, Matrix), CodesError> {
    let len = received.first().map_or(0, |p| p.payload.len());
    let mut a = Matrix::zeros(field, 0, n);
    let mut b = Matrix::zeros(field, 0, len);
    for p in received {
        a.push_row(&p.coeffs)?;
        b.push_row(&p.payload)?;
    }
    Ok((a, b))
}

fn finish(sol: Solution, n: usize) -> Decoded {
    match sol {
        Solution::Found { x, rank } if rank == n => Decoded::Complete(x.row_iter().map(<[Elem]>::to_vec).collect()),
        _ => Decoded::Incomplete(vec![false; n]),
    }
}

/// Gauss-Jordan decode of the stacked packets.
pub fn ge_decode(field: &Field, received: &[EncodedPacket], n: usize) -> Result<Decoded, CodesError> {
    let (a, b) = stack(field, received, n)?;
    Ok(finish(gfmatrix::solve_dense(&a, &b)?, n))
}

/// Sparse elimination decode; packets heavier than `w` are rejected.
pub fn sparse_decode(field: &Field, received: &[EncodedPacket], n: usize, w: usize) -> Result<Decoded, CodesError> {
    let (a, b) = stack(field, received, n)?;
    Ok(finish(gfmatrix::solve_sparse(&a, &b, w)?, n))
}
