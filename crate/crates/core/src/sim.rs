//! BI-AWGN Monte Carlo with flooding sum-product decoding.
//!
//! Only the all-zero codeword is sent (BPSK +1 for bit 0); the channel and the
//! decoder are symmetric, so error rates equal those of any codeword. Punctured
//! columns receive LLR 0 and are excluded from bit-error counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::capacity::ebn0_to_sigma;

use crate::error::{Error, Result};
use crate::lifting::SparsePcm;
use crate::optimize::derive_seed;

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_LLR_CLAMP: f64 = 30.0;

/// Channel LLRs for the all-zero codeword: `2 (1 + n) / sigma^2`, punctured columns 0.
pub fn transmit_all_zero<R: Rng + ?Sized>(pcm: &SparsePcm, sigma: f64, rng: &mut R) -> Vec<f64> {
    let scale = 2.0 / (sigma * sigma);
    let mut llr: Vec<f64> = (0..pcm.cols())
        .map(|_| {
            let n: f64 = rng.sample(StandardNormal);
            scale * (1.0 + sigma * n)
        })
        .collect();
    for &c in pcm.punctured() {
        llr[c] = 0.0;
    }
    llr
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iter: usize,
    /// Magnitude bound on every message entering and leaving a check node.
    pub llr_clamp: f64,
    /// Stop as soon as the hard decisions form a codeword. Without it the
    /// decoder runs until the messages stop changing or `max_iter` is reached.
    #[serde(default = "early_stop_default")]
    pub early_stop: bool,
}

fn early_stop_default() -> bool {
    true
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            llr_clamp: DEFAULT_LLR_CLAMP,
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub decisions: Vec<u8>,
    pub iterations: usize,
    pub syndrome_ok: bool,
    /// No message changed during the last iteration.
    pub stationary: bool,
}

/// Sum-product decoder with buffers sized for one matrix.
///
/// Edges are numbered row by row; `col_edges[c]` lists the edges of column `c`.
#[derive(Debug, Clone)]
pub struct SpaDecoder<'a> {
    pcm: &'a SparsePcm,
    config: DecoderConfig,
    row_start: Vec<usize>,
    edge_col: Vec<usize>,
    col_edges: Vec<Vec<usize>>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> SpaDecoder<'a> {
    pub fn new(pcm: &'a SparsePcm, config: DecoderConfig) -> Self {
        let mut row_start = Vec::with_capacity(pcm.rows() + 1);
        let mut edge_col = Vec::with_capacity(pcm.edge_count());
        let mut col_edges = vec![Vec::new(); pcm.cols()];
        for r in 0..pcm.rows() {
            row_start.push(edge_col.len());
            for &c in pcm.row(r) {
                col_edges[c].push(edge_col.len());
                edge_col.push(c);
            }
        }
        row_start.push(edge_col.len());
        let e = edge_col.len();
        Self {
            pcm,
            config,
            row_start,
            edge_col,
            col_edges,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            scratch: Vec::new(),
        }
    }

    pub fn decode(&mut self, llr: &[f64]) -> DecodeResult {
        assert_eq!(
            llr.len(),
            self.pcm.cols(),
            "LLR length must equal the number of columns"
        );
        let clamp = self.config.llr_clamp;
        for (e, &c) in self.edge_col.iter().enumerate() {
            self.v2c[e] = llr[c];
        }
        let mut decisions = vec![0u8; llr.len()];
        let mut previous = Vec::new();
        let max_iter = self.config.max_iter.max(1);
        for it in 1..=max_iter {
            if !self.config.early_stop {
                previous.clone_from(&self.c2v);
            }
            for r in 0..self.pcm.rows() {
                let (a, b) = (self.row_start[r], self.row_start[r + 1]);
                check_node(
                    &self.v2c[a..b],
                    &mut self.c2v[a..b],
                    &mut self.scratch,
                    clamp,
                );
            }
            for (c, edges) in self.col_edges.iter().enumerate() {
                let total = llr[c] + edges.iter().map(|&e| self.c2v[e]).sum::<f64>();
                for &e in edges {
                    self.v2c[e] = total - self.c2v[e];
                }
                decisions[c] = u8::from(total <= 0.0);
            }
            if self.config.early_stop {
                if self.pcm.is_codeword(&decisions) {
                    return DecodeResult {
                        decisions,
                        iterations: it,
                        syndrome_ok: true,
                        stationary: false,
                    };
                }
            } else if it > 1 && previous == self.c2v {
                return self.finish(decisions, it, true);
            }
        }
        self.finish(decisions, max_iter, false)
    }

    fn finish(&self, decisions: Vec<u8>, iterations: usize, stationary: bool) -> DecodeResult {
        DecodeResult {
            syndrome_ok: self.pcm.is_codeword(&decisions),
            decisions,
            iterations,
            stationary,
        }
    }
}

/// Tanh-rule update: `out[e] = 2 atanh(prod_{f != e} tanh(in[f] / 2))`.
fn check_node(input: &[f64], out: &mut [f64], scratch: &mut Vec<f64>, clamp: f64) {
    let d = input.len();
    scratch.clear();
    scratch.extend(input.iter().map(|&x| half_tanh(x.clamp(-clamp, clamp))));
    // prefix products in `out`, then sweep suffix products from the right
    let mut acc = 1.0;
    for k in 0..d {
        out[k] = acc;
        acc *= scratch[k];
    }
    let mut suffix = 1.0;
    for k in (0..d).rev() {
        let p = out[k] * suffix;
        suffix *= scratch[k];
        out[k] = two_atanh(p).clamp(-clamp, clamp);
    }
}

/// `tanh(x / 2)` with a single `exp`.
#[inline]
fn half_tanh(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

/// `2 atanh(p)` with a single `ln`; infinite at `|p| = 1`. Exactly odd.
#[inline]
fn two_atanh(p: f64) -> f64 {
    let a = p.abs();
    ((1.0 + a) / (1.0 - a)).ln().copysign(p)
}

/// Decodes once with a fresh decoder.
pub fn spa_decode(pcm: &SparsePcm, llr: &[f64], max_iter: usize) -> DecodeResult {
    SpaDecoder::new(
        pcm,
        DecoderConfig {
            max_iter,
            ..DecoderConfig::default()
        },
    )
    .decode(llr)
}

/// Per-point stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub rate: f64,
    pub ebn0_db: Vec<f64>,
    pub stop: StopRule,
    pub decoder: DecoderConfig,
    pub seed: u64,
    /// Frames decoded per parallel batch. Results do not depend on it.
    pub batch: usize,
}

impl SweepConfig {
    pub fn new(rate: f64, ebn0_db: Vec<f64>, seed: u64) -> Self {
        Self {
            rate,
            ebn0_db,
            stop: StopRule::default(),
            decoder: DecoderConfig::default(),
            seed,
            batch: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub fer: f64,
    pub mean_iters: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "ebn0_db,frames,frame_errors,bit_errors,bits,ber,fer,mean_iters,seed";

impl SimPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{},{}",
            self.ebn0_db,
            self.frames,
            self.frame_errors,
            self.bit_errors,
            self.bits,
            self.ber,
            self.fer,
            self.mean_iters,
            self.seed
        )
    }
}

pub fn to_csv(points: &[SimPoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct FrameOutcome {
    bit_errors: u64,
    failed: bool,
    iterations: u64,
}

/// Simulates one frame; its noise depends only on `(seed, point, frame)`.
fn run_frame(
    decoder: &mut SpaDecoder<'_>,
    counted: &[bool],
    sigma: f64,
    seed: u64,
    point: usize,
    frame: u64,
) -> FrameOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[point as u64, frame]));
    let llr = transmit_all_zero(decoder.pcm, sigma, &mut rng);
    let out = decoder.decode(&llr);
    let bit_errors = out
        .decisions
        .iter()
        .zip(counted)
        .filter(|(&b, &c)| c && b != 0)
        .count() as u64;
    FrameOutcome {
        bit_errors,
        failed: bit_errors > 0 || !out.syndrome_ok,
        iterations: out.iterations as u64,
    }
}

/// Runs every point of `config`. Frames are decoded in parallel batches and
/// accumulated in frame order; a point stops at the first frame that brings
/// the error count to `min_frame_errors`, so counts do not depend on threads.
pub fn run_sweep(pcm: &SparsePcm, config: &SweepConfig) -> Result<Vec<SimPoint>> {
    if config.stop.max_frames == 0 || config.batch == 0 {
        return Err(Error::Domain(
            "max_frames and batch must be positive".into(),
        ));
    }
    let mut counted = vec![true; pcm.cols()];
    for &c in pcm.punctured() {
        counted[c] = false;
    }
    let per_frame = counted.iter().filter(|&&c| c).count() as u64;
    let mut points = Vec::with_capacity(config.ebn0_db.len());
    for (p, &db) in config.ebn0_db.iter().enumerate() {
        let sigma = ebn0_to_sigma(db, config.rate)?;
        let (mut frames, mut frame_errors, mut bit_errors, mut iterations) =
            (0u64, 0u64, 0u64, 0u64);
        'point: while frames < config.stop.max_frames {
            let count = (config.batch as u64).min(config.stop.max_frames - frames);
            let outcomes: Vec<FrameOutcome> = (frames..frames + count)
                .into_par_iter()
                .map_init(
                    || SpaDecoder::new(pcm, config.decoder),
                    |dec, f| run_frame(dec, &counted, sigma, config.seed, p, f),
                )
                .collect();
            for o in outcomes {
                frames += 1;
                bit_errors += o.bit_errors;
                iterations += o.iterations;
                if o.failed {
                    frame_errors += 1;
                    if frame_errors >= config.stop.min_frame_errors {
                        break 'point;
                    }
                }
            }
        }
        let bits = frames * per_frame;
        points.push(SimPoint {
            ebn0_db: db,
            frames,
            frame_errors,
            bit_errors,
            bits,
            ber: if bits > 0 {
                bit_errors as f64 / bits as f64
            } else {
                0.0
            },
            fer: frame_errors as f64 / frames as f64,
            mean_iters: iterations as f64 / frames as f64,
            seed: config.seed,
        });
        log::info!("{db:.3} dB: {frame_errors}/{frames} frame errors");
    }
    Ok(points)
}
