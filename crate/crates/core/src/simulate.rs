//! Time-slotted erasure broadcast with feedback: a systematic phase followed
//! by coded retransmissions, per-trial metrics and parameter sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{self, BpDecoder, CodesError, EncodedPacket, RobustSoliton};
use crate::gfield::{Elem, Field, FieldError};
use crate::gfmatrix::NullTracker;
use crate::hitting::DEFAULT_NODE_BUDGET;
use crate::innovate::{self, InnovateError, Method, UserState};
use crate::ops::{self, OpCount};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("user {0} never collects N packets within the realization")]
    Unreachable(usize),
    #[error("user {user} decoded wrong source data")]
    DecodeMismatch { user: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Innovate(#[from] InnovateError),
    #[error(transparent)]
    Codes(#[from] CodesError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Lt,
    Rlnc,
    Chunked,
    Idnc,
    Oh,
    Gh,
    GhSbes,
    FhSbes,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::Lt,
        Scheme::Rlnc,
        Scheme::Chunked,
        Scheme::Idnc,
        Scheme::Oh,
        Scheme::Gh,
        Scheme::GhSbes,
        Scheme::FhSbes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lt => "lt",
            Scheme::Rlnc => "rlnc",
            Scheme::Chunked => "chunked",
            Scheme::Idnc => "idnc",
            Scheme::Oh => "oh",
            Scheme::Gh => "gh",
            Scheme::GhSbes => "gh-sbes",
            Scheme::FhSbes => "fh-sbes",
        }
    }

    fn method(self) -> Option<Method> {
        match self {
            Scheme::Oh => Some(Method::Oh),
            Scheme::Gh => Some(Method::Gh),
            Scheme::GhSbes => Some(Method::GhSbes),
            Scheme::FhSbes => Some(Method::FhSbes),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| SimError::Config(format!("unknown scheme {s:?}")))
    }
}

/// One simulation setting. Field names double as the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub q: u32,
    /// Reduction polynomial for binary extension fields; default if absent.
    pub poly: Option<u32>,
    pub scheme: Scheme,
    /// Downlink erasure probability shared by all users.
    pub pe: f64,
    /// Per-user downlink erasure probabilities, overriding `pe`.
    pub pe_per_user: Option<Vec<f64>>,
    pub pe_up: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub payload_len: usize,
    pub chunk_size: usize,
    pub lt_c: f64,
    pub lt_delta: f64,
    /// Defaults to `50 * n`.
    pub max_slots: Option<usize>,
    pub hitting_budget: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 32,
            k: 40,
            q: 256,
            poly: None,
            scheme: Scheme::Gh,
            pe: 0.3,
            pe_per_user: None,
            pe_up: 0.0,
            trials: 100,
            master_seed: 1,
            payload_len: 1,
            chunk_size: 8,
            lt_c: 0.1,
            lt_delta: 0.1,
            max_slots: None,
            hitting_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl SimConfig {
    pub fn field(&self) -> Result<Field, SimError> {
        Ok(match self.poly {
            Some(p) => Field::with_poly(self.q, p)?,
            None => Field::new(self.q)?,
        })
    }

    pub fn max_slots(&self) -> usize {
        self.max_slots.unwrap_or(50 * self.n)
    }

    pub fn erasure_probs(&self) -> Vec<f64> {
        match &self.pe_per_user {
            Some(p) => p.clone(),
            None => vec![self.pe; self.k],
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        let f = self.field()?;
        if self.n == 0 || self.k == 0 {
            return bad("n and k must be positive".into());
        }
        if let Some(p) = &self.pe_per_user {
            if p.len() != self.k {
                return bad(format!("{} per-user erasure probabilities for {} users", p.len(), self.k));
            }
        }
        let in_unit = |p: f64| (0.0..1.0).contains(&p);
        if !self.erasure_probs().into_iter().all(in_unit) {
            return bad("downlink erasure probabilities must lie in [0, 1)".into());
        }
        if !in_unit(self.pe_up) {
            return bad(format!("pe_up = {} outside [0, 1)", self.pe_up));
        }
        if self.max_slots() < self.n {
            return bad(format!("max_slots {} below n = {}", self.max_slots(), self.n));
        }
        if self.payload_len == 0 {
            return bad("payload_len must be positive".into());
        }
        match self.scheme {
            Scheme::Chunked if self.chunk_size == 0 || !self.n.is_multiple_of(self.chunk_size) => {
                bad(format!("chunk size {} does not divide n = {}", self.chunk_size, self.n))
            }
            Scheme::Oh | Scheme::Gh if (f.q() as usize) < self.k => bad(format!(
                "{} needs q >= K (q = {}, K = {}); use gh-sbes or fh-sbes",
                self.scheme,
                f.q(),
                self.k
            )),
            Scheme::Lt => RobustSoliton::new(self.n, self.lt_c, self.lt_delta).map(|_| ()).map_err(Into::into),
            _ => Ok(()),
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index`. It does not depend on the grid point, so every
/// scheme in a sweep sees the same channel realizations.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

const DOWNLINK_STREAM: u64 = 1;
const UPLINK_STREAM: u64 = 2;
const ENCODER_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Per-user and overall lower bound on completion: the slot of each user's
/// N-th reception. `received[t][k]` says user k got slot t + 1.
pub fn lower_bound_of(received: &[Vec<bool>], n: usize, k: usize) -> Result<(Vec<usize>, usize), SimError> {
    let per_user = (0..k)
        .map(|u| {
            let mut count = 0;
            received
                .iter()
                .position(|slot| {
                    count += slot[u] as usize;
                    count == n
                })
                .map(|t| t + 1)
                .ok_or(SimError::Unreachable(u))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let overall = per_user.iter().copied().max().unwrap_or(0);
    Ok((per_user, overall))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub seed: u64,
    /// Slots until every user decoded, or `max_slots` if that never happened.
    pub completion_time: usize,
    pub completed: bool,
    pub per_user_delay: Vec<Option<usize>>,
    pub per_user_bound: Vec<Option<usize>>,
    /// `None` if some user did not collect N packets within the run.
    pub lower_bound: Option<usize>,
    pub slots_phase2: usize,
    /// Hamming weight of every coded packet.
    pub weights: Vec<usize>,
    /// `innovative_hist[c]` counts coded packets innovative to exactly `c`
    /// unfinished users.
    pub innovative_hist: Vec<usize>,
    pub innovative_frac: f64,
    /// Every coded packet was innovative to every unfinished user.
    pub all_innovative: bool,
    pub encode_ops: OpCount,
    pub decode_ops: OpCount,
    pub resync_events: usize,
}

impl TrialMetrics {
    pub fn mean_weight(&self) -> f64 {
        if self.weights.is_empty() {
            0.0
        } else {
            self.weights.iter().sum::<usize>() as f64 / self.weights.len() as f64
        }
    }

    pub fn max_weight(&self) -> usize {
        self.weights.iter().copied().max().unwrap_or(0)
    }
}

/// Receiver-side state of one user.
enum Receiver {
    Linear { tracker: NullTracker, packets: Vec<EncodedPacket> },
    Bp { decoder: BpDecoder, rank: NullTracker },
    Idnc { known: Vec<Option<Vec<Elem>>>, count: usize },
}

impl Receiver {
    fn finished(&self) -> bool {
        match self {
            Receiver::Linear { tracker, .. } => tracker.is_full(),
            Receiver::Bp { decoder, .. } => decoder.is_complete(),
            Receiver::Idnc { known, count } => *count == known.len(),
        }
    }

    /// Whether `pkt` would change this receiver's knowledge; not charged.
    fn useful(&self, pkt: &EncodedPacket) -> bool {
        ops::uncounted(|| match self {
            Receiver::Linear { tracker, .. } => tracker.is_innovative(&pkt.coeffs).expect("length n"),
            Receiver::Bp { rank, .. } => rank.is_innovative(&pkt.coeffs).expect("length n"),
            Receiver::Idnc { known, .. } => missing_in(known, pkt).len() == 1,
        })
    }

    /// Absorbs a packet; returns whether knowledge changed.
    fn deliver(&mut self, field: &Field, pkt: &EncodedPacket) -> bool {
        match self {
            Receiver::Linear { tracker, packets } => {
                if tracker.is_innovative(&pkt.coeffs).expect("length n") {
                    tracker.update(&pkt.coeffs).expect("innovative");
                    packets.push(pkt.clone());
                    true
                } else {
                    false
                }
            }
            Receiver::Bp { decoder, rank } => {
                ops::uncounted(|| {
                    if rank.is_innovative(&pkt.coeffs).expect("length n") {
                        rank.update(&pkt.coeffs).expect("innovative");
                    }
                });
                decoder.add(pkt) > 0
            }
            Receiver::Idnc { known, count } => {
                let missing = missing_in(known, pkt);
                let [j] = missing[..] else {
                    return false;
                };
                let mut value = pkt.payload.clone();
                for (i, &c) in pkt.coeffs.iter().enumerate() {
                    if c != 0 && i != j {
                        field.axpy(&mut value, field.neg(c), known[i].as_ref().expect("known"));
                    }
                }
                let cj = pkt.coeffs[j];
                if cj != 1 {
                    field.scale(&mut value, field.inv(cj).expect("nonzero"));
                }
                known[j] = Some(value);
                *count += 1;
                true
            }
        }
    }

    /// Recovers the sources once finished.
    fn decode(&self, field: &Field, n: usize, sparse: bool) -> Result<Vec<Vec<Elem>>, SimError> {
        Ok(match self {
            Receiver::Linear { packets, .. } => {
                let out = if sparse {
                    codes::sparse_decode(field, packets, n, n)?
                } else {
                    codes::ge_decode(field, packets, n)?
                };
                out.complete().unwrap_or_default()
            }
            Receiver::Bp { decoder, .. } => decoder.sources().unwrap_or_default(),
            Receiver::Idnc { known, .. } => known.iter().map(|k| k.clone().unwrap_or_default()).collect(),
        })
    }

    fn has_mask(&self) -> Vec<bool> {
        match self {
            Receiver::Idnc { known, .. } => known.iter().map(Option::is_some).collect(),
            _ => unreachable!("only IDNC receivers expose a packet mask"),
        }
    }
}

fn missing_in(known: &[Option<Vec<Elem>>], pkt: &EncodedPacket) -> Vec<usize> {
    pkt.coeffs
        .iter()
        .enumerate()
        .filter(|&(i, &c)| c != 0 && known[i].is_none())
        .map(|(i, _)| i)
        .collect()
}

/// What the sender believes about each user.
enum Beliefs {
    /// Only decoded-ACKs are used.
    AckOnly,
    Subspaces(Vec<UserState>),
    Masks(Vec<Vec<bool>>),
}

/// Runs one trial. Fully determined by `(cfg, seed)`.
pub fn run_trial(cfg: &SimConfig, seed: u64) -> Result<TrialMetrics, SimError> {
    cfg.validate()?;
    let field = cfg.field()?;
    let (n, k) = (cfg.n, cfg.k);
    let p = cfg.erasure_probs();
    let max_slots = cfg.max_slots();
    let mut down = stream(seed, DOWNLINK_STREAM);
    let mut up = stream(seed, UPLINK_STREAM);
    let mut enc = stream(seed, ENCODER_STREAM);
    let q = field.q();
    let sources: Vec<Vec<Elem>> = (0..n)
        .map(|_| (0..cfg.payload_len).map(|_| enc.gen_range(0..q) as Elem).collect())
        .collect();
    let soliton = match cfg.scheme {
        Scheme::Lt => Some(RobustSoliton::new(n, cfg.lt_c, cfg.lt_delta)?),
        _ => None,
    };

    let mut receivers: Vec<Receiver> = (0..k)
        .map(|_| match cfg.scheme {
            Scheme::Lt => Receiver::Bp {
                decoder: BpDecoder::new(&field, n),
                rank: NullTracker::new(n, &field),
            },
            Scheme::Idnc => Receiver::Idnc {
                known: vec![None; n],
                count: 0,
            },
            _ => Receiver::Linear {
                tracker: NullTracker::new(n, &field),
                packets: Vec::new(),
            },
        })
        .collect();
    let mut beliefs = match cfg.scheme {
        Scheme::Lt | Scheme::Rlnc | Scheme::Chunked => Beliefs::AckOnly,
        Scheme::Idnc => Beliefs::Masks(vec![vec![false; n]; k]),
        _ => Beliefs::Subspaces((0..k).map(|i| UserState::new(i, n, &field)).collect()),
    };
    let sparse_decode = cfg.scheme.method().is_some();

    let mut finished = vec![false; k];
    let mut stale = vec![false; k];
    let mut receptions = vec![0usize; k];
    let mut bound = vec![None; k];
    let mut delay = vec![None; k];
    let mut m = TrialMetrics {
        seed,
        completion_time: 0,
        completed: false,
        per_user_delay: Vec::new(),
        per_user_bound: Vec::new(),
        lower_bound: None,
        slots_phase2: 0,
        weights: Vec::new(),
        innovative_hist: vec![0; k + 1],
        innovative_frac: 0.0,
        all_innovative: true,
        encode_ops: OpCount::default(),
        decode_ops: OpCount::default(),
        resync_events: 0,
    };
    let mut frac_sum = 0.0;
    let mut slot = 0;

    while finished.iter().any(|&f| !f) && slot < max_slots {
        slot += 1;
        let (pkt, enc_ops) = ops::measure(|| -> Result<EncodedPacket, SimError> {
            if slot <= n {
                let mut e = vec![0; n];
                e[slot - 1] = 1;
                return Ok(EncodedPacket::combine(&field, e, &sources));
            }
            let active: Vec<usize> = (0..k).filter(|&i| !finished[i]).collect();
            Ok(match (cfg.scheme, &beliefs) {
                (Scheme::Lt, _) => codes::lt_encode(&field, &sources, soliton.as_ref().expect("lt"), &mut enc),
                (Scheme::Rlnc, _) => codes::rlnc_encode(&field, &sources, &mut enc),
                (Scheme::Chunked, _) => codes::chunked_encode(&field, &sources, cfg.chunk_size, &mut enc)?,
                (Scheme::Idnc, Beliefs::Masks(has)) => {
                    let has: Vec<Vec<bool>> = active.iter().map(|&i| has[i].clone()).collect();
                    let probs: Vec<f64> = active.iter().map(|&i| p[i]).collect();
                    codes::idnc_mwvs_encode(&field, &sources, &has, &probs)?
                }
                (scheme, Beliefs::Subspaces(users)) => {
                    let refs: Vec<&UserState> = active.iter().map(|&i| &users[i]).collect();
                    let method = scheme.method().expect("subspace scheme");
                    let x = innovate::generate_for(method, &refs, cfg.hitting_budget)?;
                    EncodedPacket::combine(&field, x, &sources)
                }
                _ => unreachable!("beliefs match the scheme"),
            })
        });
        let pkt = pkt?;
        m.encode_ops += enc_ops;
        #[cfg(any(test, feature = "paranoid"))]
        assert!(pkt.is_consistent(&field, &sources));

        if slot > n {
            m.slots_phase2 += 1;
            m.weights.push(pkt.weight());
            let unfinished: Vec<usize> = (0..k).filter(|&i| !finished[i]).collect();
            let hits = unfinished.iter().filter(|&&i| receivers[i].useful(&pkt)).count();
            m.innovative_hist[hits] += 1;
            m.all_innovative &= hits == unfinished.len();
            frac_sum += hits as f64 / unfinished.len() as f64;
        }

        let mut changed = vec![false; k];
        for i in 0..k {
            let got = down.gen::<f64>() >= p[i];
            if !got {
                continue;
            }
            receptions[i] += 1;
            if receptions[i] == n {
                bound[i] = Some(slot);
            }
            if finished[i] {
                continue;
            }
            let (c, dec_ops) = ops::measure(|| receivers[i].deliver(&field, &pkt));
            m.decode_ops += dec_ops;
            changed[i] = c;
            if receivers[i].finished() {
                let (decoded, dec_ops) = ops::measure(|| receivers[i].decode(&field, n, sparse_decode));
                m.decode_ops += dec_ops;
                if decoded? != sources {
                    return Err(SimError::DecodeMismatch { user: i });
                }
                finished[i] = true;
                delay[i] = Some(slot);
            }
        }

        for i in 0..k {
            let delivered = up.gen::<f64>() >= cfg.pe_up;
            if finished[i] {
                continue;
            }
            if !delivered {
                stale[i] |= changed[i];
                continue;
            }
            if stale[i] {
                m.resync_events += 1;
                stale[i] = false;
            }
            let ((), sync_ops) = ops::measure(|| match &mut beliefs {
                Beliefs::AckOnly => {}
                Beliefs::Masks(has) => has[i] = receivers[i].has_mask(),
                Beliefs::Subspaces(users) => {
                    let Receiver::Linear { tracker, .. } = &receivers[i] else {
                        unreachable!("subspace schemes use linear receivers");
                    };
                    for r in users[i].rank()..tracker.rank() {
                        let row = tracker.c_tilde().row(r).to_vec();
                        users[i].receive(&row).expect("rows are independent");
                    }
                }
            });
            m.encode_ops += sync_ops;
        }
    }

    m.completed = finished.iter().all(|&f| f);
    m.completion_time = slot;
    m.per_user_delay = delay;
    m.lower_bound = bound.iter().copied().collect::<Option<Vec<_>>>().map(|b| b.into_iter().max().unwrap_or(0));
    m.per_user_bound = bound;
    m.innovative_frac = if m.slots_phase2 == 0 {
        1.0
    } else {
        frac_sum / m.slots_phase2 as f64
    };
    if let Some(lb) = m.lower_bound {
        debug_assert!(!m.completed || m.completion_time >= lb, "completion below the lower bound");
    }
    Ok(m)
}

/// Cartesian parameter grid over a base configuration. Empty axes fall back
/// to the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub base: SimConfig,
    pub schemes: Vec<Scheme>,
    pub qs: Vec<u32>,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub pes: Vec<f64>,
    pub pe_ups: Vec<f64>,
}

impl Grid {
    /// Grid points in scheme, q, N, K, pe, pe_up order.
    pub fn points(&self) -> Vec<SimConfig> {
        fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let b = &self.base;
        let mut out = Vec::new();
        for scheme in axis(&self.schemes, b.scheme) {
            for q in axis(&self.qs, b.q) {
                for n in axis(&self.ns, b.n) {
                    for k in axis(&self.ks, b.k) {
                        for pe in axis(&self.pes, b.pe) {
                            for pe_up in axis(&self.pe_ups, b.pe_up) {
                                out.push(SimConfig {
                                    scheme,
                                    q,
                                    n,
                                    k,
                                    pe,
                                    pe_up,
                                    // a per-user override only fits the base K
                                    pe_per_user: b.pe_per_user.clone().filter(|v| v.len() == k),
                                    poly: if q == b.q { b.poly } else { None },
                                    ..b.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Metrics of one grid point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub cfg: SimConfig,
    pub trials: Vec<TrialMetrics>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl PointResult {
    /// Mean and sample standard deviation of a per-trial metric.
    pub fn stat(&self, metric: impl Fn(&TrialMetrics) -> f64) -> (f64, f64) {
        mean_std(&self.trials.iter().map(metric).collect::<Vec<_>>())
    }
}

/// Runs every trial of every grid point. `threads == 0` lets rayon decide.
pub fn run_experiment(grid: &Grid, threads: usize) -> Result<Vec<PointResult>, SimError> {
    let points = grid.points();
    for p in &points {
        p.validate()?;
    }
    let jobs: Vec<(usize, u64)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| (0..p.trials as u64).map(move |t| (i, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let results: Vec<Result<TrialMetrics, SimError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, t)| run_trial(&points[i], trial_seed(points[i].master_seed, t)))
            .collect()
    });
    let mut out: Vec<PointResult> = points
        .into_iter()
        .map(|cfg| PointResult {
            cfg,
            trials: Vec::new(),
        })
        .collect();
    for (&(i, _), r) in jobs.iter().zip(results) {
        out[i].trials.push(r?);
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "scheme,q,N,K,pe,pe_up,trial,seed,completion_time,lower_bound,slots_phase2,mean_weight,max_weight,innovative_frac,encode_ops,decode_ops,resync_events";

/// One row per trial, then one `agg` row per grid point whose metric cells
/// hold `mean;std`.
pub fn write_csv(results: &[PointResult], out: &mut impl Write) -> Result<(), SimError> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        let c = &r.cfg;
        let key = format!("{},{},{},{},{},{}", c.scheme, c.q, c.n, c.k, c.pe, c.pe_up);
        for (t, m) in r.trials.iter().enumerate() {
            let lb = m.lower_bound.map_or("NA".to_string(), |b| b.to_string());
            writeln!(
                out,
                "{key},{t},{},{},{lb},{},{:.4},{},{:.6},{},{},{}",
                m.seed,
                m.completion_time,
                m.slots_phase2,
                m.mean_weight(),
                m.max_weight(),
                m.innovative_frac,
                m.encode_ops.total(),
                m.decode_ops.total(),
                m.resync_events
            )?;
        }
        let metrics: [&dyn Fn(&TrialMetrics) -> f64; 8] = [
            &|m| m.completion_time as f64,
            &|m| m.slots_phase2 as f64,
            &|m| m.mean_weight(),
            &|m| m.max_weight() as f64,
            &|m| m.innovative_frac,
            &|m| m.encode_ops.total() as f64,
            &|m| m.decode_ops.total() as f64,
            &|m| m.resync_events as f64,
        ];
        let cell = |(mean, std): (f64, f64)| format!("{mean:.4};{std:.4}");
        let mut cells: Vec<String> = metrics.iter().map(|f| cell(r.stat(f))).collect();
        let bounds: Vec<f64> = r.trials.iter().filter_map(|m| m.lower_bound.map(|b| b as f64)).collect();
        let lb = if bounds.is_empty() { "NA".to_string() } else { cell(mean_std(&bounds)) };
        cells.insert(1, lb);
        writeln!(out, "{key},agg,-,{}", cells.join(","))?;
    }
    Ok(())
}
