//! Monte Carlo time-tag generation for the three-detector channel monitor.
//!
//! Photons reaching each detector form independent Poisson processes once
//! the source flux is split by category: which subset of the three detectors
//! a pair illuminates, plus the per-detector background processes (broadband
//! light, injected light, dark counts). Each (category, quarter-second
//! segment) gets its own counter-seeded RNG, so output is reproducible and
//! independent of how segments are later consumed.
//!
//! Detector physics applied on top of the arrival processes: Gaussian timing
//! jitter (clamped at eight sigma, evaluated at the expected recorded rate)
//! and a non-paralyzable dead time that drops any event closer than the dead
//! time to the previously recorded one. Recorded timestamps are integer
//! picoseconds, strictly increasing per detector.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::rates::{window_split, CoincidenceWindows, PeakLocation};
use super::scenario::{expected_rates, ScenarioSpec};
use super::stream::{TimeTagStream, CHANNEL_ALICE_TAP, CHANNEL_BOB_TAP, CHANNEL_IDLER};
use crate::error::{Error, Result};
use crate::monitor::CountRates;

/// Generation proceeds in fixed wall-clock segments of this length.
pub(crate) const SEGMENT_S: f64 = 0.25;
const SEGMENT_PS: i64 = 250_000_000_000;

/// Jitter draws are clamped to this many standard deviations, which bounds
/// how far an event can stray from its segment.
const JITTER_CLAMP_SIGMA: f64 = 8.0;

/// Longest supported run. Keeps timestamps well inside the range where
/// picosecond arithmetic in f64 is exact.
pub const MAX_DURATION_S: f64 = 9000.0;

/// Event id marking detections with no partner (backgrounds).
const BACKGROUND_ID: u64 = u64::MAX;

// Categories 0..8 are pair categories: the index is the bitmask of member
// detectors (bit 0 idler, bit 1 alice tap, bit 2 bob tap). Mask 0 is pairs
// that no detector sees; they only advance the generated-pair count.
const N_PAIR_CATEGORIES: usize = 8;
const CAT_ASE_ALICE: usize = 8;
const CAT_ASE_BOB: usize = 9;
const CAT_EVE_BOB: usize = 10;
const CAT_DARK_IDLER: usize = 11;
const CAT_DARK_ALICE: usize = 12;
const CAT_DARK_BOB: usize = 13;
const N_CATEGORIES: usize = 14;

/// Pair ids pack (segment, category, index); index must fit in 28 bits.
const MAX_PAIRS_PER_SEGMENT: u64 = 1 << 28;

fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent RNG seed for one (master seed, category, segment) substream.
/// Also reused one level up to give campaign repetitions their own seeds.
pub(crate) fn substream_seed(master: u64, category: u64, segment: u64) -> u64 {
    mix64(mix64(mix64(master) ^ category) ^ segment)
}

#[derive(Clone, Copy)]
struct PendingEvent {
    t_ps: i64,
    pair_id: u64,
}

/// Member detectors for each pair category, indexed by the category mask.
const PAIR_MEMBERS: [&[usize]; N_PAIR_CATEGORIES] = [
    &[],
    &[0],
    &[1],
    &[0, 1],
    &[2],
    &[0, 2],
    &[1, 2],
    &[0, 1, 2],
];

struct PairBucket {
    segment: u64,
    recorded: [Vec<(u64, u64)>; 3],
}

/// What actually happened in one generated run, independent of any later
/// windowed analysis.
#[derive(Debug, Clone)]
pub struct GroundTruthLedger {
    /// Total pairs the source emitted, detected or not.
    pub pairs_generated: u64,
    /// (idler, alice tap) recorded timestamp pairs from the same pair.
    pub alice_pairs: Vec<(u64, u64)>,
    /// (idler, bob tap) recorded timestamp pairs from the same pair.
    pub bob_pairs: Vec<(u64, u64)>,
    pub duration_s: f64,
}

impl GroundTruthLedger {
    pub fn true_alice_rate_hz(&self) -> f64 {
        self.alice_pairs.len() as f64 / self.duration_s
    }

    pub fn true_bob_rate_hz(&self) -> f64 {
        self.bob_pairs.len() as f64 / self.duration_s
    }

    /// Recorded (idler, alice) pairs whose time difference falls in the
    /// window of `window_ps` picoseconds around `center_ps`.
    pub fn alice_pairs_within(&self, center_ps: i64, window_ps: u64) -> u64 {
        pairs_within(&self.alice_pairs, center_ps, window_ps)
    }

    pub fn bob_pairs_within(&self, center_ps: i64, window_ps: u64) -> u64 {
        pairs_within(&self.bob_pairs, center_ps, window_ps)
    }
}

fn pairs_within(pairs: &[(u64, u64)], center_ps: i64, window_ps: u64) -> u64 {
    let (lo, hi) = window_split(window_ps);
    pairs
        .iter()
        .filter(|&&(t_idler, t_tap)| {
            let d = t_tap as i64 - t_idler as i64;
            d >= center_ps - lo && d < center_ps + hi
        })
        .count() as u64
}

fn close_bucket(
    bucket: PairBucket,
    alice_pairs: &mut Vec<(u64, u64)>,
    bob_pairs: &mut Vec<(u64, u64)>,
) {
    let [mut idler, alice, bob] = bucket.recorded;
    idler.sort_unstable_by_key(|e| e.0);
    for (mut tap, out) in [(alice, alice_pairs), (bob, bob_pairs)] {
        tap.sort_unstable_by_key(|e| e.0);
        let mut i = 0usize;
        for &(id, t_tap) in &tap {
            while i < idler.len() && idler[i].0 < id {
                i += 1;
            }
            if i < idler.len() && idler[i].0 == id {
                out.push((idler[i].1, t_tap));
            }
        }
    }
}

fn bucket_mut(buckets: &mut VecDeque<PairBucket>, segment: u64) -> &mut PairBucket {
    while buckets.back().is_none_or(|b| b.segment < segment) {
        let next = buckets.back().map_or(segment, |b| b.segment + 1);
        buckets.push_back(PairBucket {
            segment: next,
            recorded: [Vec::new(), Vec::new(), Vec::new()],
        });
    }
    let idx = buckets
        .iter()
        .rposition(|b| b.segment == segment)
        .expect("pair bucket closed while its events were still pending");
    &mut buckets[idx]
}

/// Generate one run, handing every recorded detection to `on_recorded` as
/// `(detector, timestamp_ps)` with detectors 0 idler, 1 alice tap, 2 bob
/// tap. Timestamps arrive in increasing order per detector.
///
/// Returns the ground-truth ledger of what the source and detectors did, so
/// windowed analyses can be checked against reality.
pub fn drive(
    scenario: &ScenarioSpec,
    mut on_recorded: impl FnMut(usize, u64),
) -> Result<GroundTruthLedger> {
    let rates = expected_rates(scenario)?;
    if scenario.duration_s > MAX_DURATION_S {
        return Err(Error::invalid(
            "duration_s",
            format!("runs longer than {MAX_DURATION_S} s are not supported"),
        ));
    }
    let dur_ps = (scenario.duration_s * 1e12).round() as i64;
    let detectors = [
        &scenario.detectors.idler,
        &scenario.detectors.alice_tap,
        &scenario.detectors.bob_tap,
    ];
    let loads = [&rates.idler, &rates.alice_tap, &rates.bob_tap];
    let sigma_ps: [f64; 3] = [
        loads[0].jitter_sigma_s * 1e12,
        loads[1].jitter_sigma_s * 1e12,
        loads[2].jitter_sigma_s * 1e12,
    ];
    let sigma_max = sigma_ps.iter().fold(0.0f64, |a, &b| a.max(b));
    let margin = (JITTER_CLAMP_SIGMA * sigma_max).ceil() as i64 + 1000;
    if margin >= SEGMENT_PS / 2 {
        return Err(Error::invalid(
            "base_jitter_s",
            "timing jitter too large for segmented generation",
        ));
    }
    let dead_ps: [i64; 3] = [
        ((detectors[0].effective_dead_time_s() * 1e12).round() as i64).max(1),
        ((detectors[1].effective_dead_time_s() * 1e12).round() as i64).max(1),
        ((detectors[2].effective_dead_time_s() * 1e12).round() as i64).max(1),
    ];

    let p = [rates.p_idler, rates.p_alice, rates.p_bob];
    let mut cat_rate = [0.0f64; N_CATEGORIES];
    for (mask, rate) in cat_rate.iter_mut().enumerate().take(N_PAIR_CATEGORIES) {
        let mut r = rates.pair_flux_hz;
        for (d, &p_d) in p.iter().enumerate() {
            r *= if mask & (1 << d) != 0 { p_d } else { 1.0 - p_d };
        }
        *rate = r;
    }
    cat_rate[CAT_ASE_ALICE] = rates.ase_flux_hz * rates.p_alice;
    cat_rate[CAT_ASE_BOB] = rates.ase_flux_hz * rates.p_bob;
    cat_rate[CAT_EVE_BOB] = rates.eve_rate_hz;
    cat_rate[CAT_DARK_IDLER] = detectors[0].dark_count_rate_hz;
    cat_rate[CAT_DARK_ALICE] = detectors[1].dark_count_rate_hz;
    cat_rate[CAT_DARK_BOB] = detectors[2].dark_count_rate_hz;

    let n_segments = ((scenario.duration_s / SEGMENT_S).ceil() as u64).max(1);
    let mut pending: [Vec<PendingEvent>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut commit_buf: Vec<PendingEvent> = Vec::new();
    let mut last_recorded = [i64::MIN / 4; 3];
    let mut buckets: VecDeque<PairBucket> = VecDeque::new();
    let mut ledger = GroundTruthLedger {
        pairs_generated: 0,
        alice_pairs: Vec::new(),
        bob_pairs: Vec::new(),
        duration_s: scenario.duration_s,
    };

    for s in 0..n_segments {
        let seg_start_s = s as f64 * SEGMENT_S;
        let seg_len_s = (scenario.duration_s - seg_start_s).min(SEGMENT_S);
        for (cat, &rate) in cat_rate.iter().enumerate() {
            let lambda = rate * seg_len_s;
            if lambda <= 0.0 {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(scenario.seed, cat as u64, s));
            let n = Poisson::new(lambda)
                .expect("positive lambda")
                .sample(&mut rng) as u64;
            let is_pair = cat < N_PAIR_CATEGORIES;
            if is_pair {
                ledger.pairs_generated += n;
                if cat == 0 {
                    continue;
                }
                if n >= MAX_PAIRS_PER_SEGMENT {
                    return Err(Error::invalid(
                        "source",
                        "pair flux exceeds the per-segment event budget",
                    ));
                }
            }
            let members: &[usize] = if is_pair {
                PAIR_MEMBERS[cat]
            } else {
                match cat {
                    CAT_ASE_ALICE | CAT_DARK_ALICE => &[1],
                    CAT_ASE_BOB | CAT_EVE_BOB | CAT_DARK_BOB => &[2],
                    _ => &[0],
                }
            };
            for k in 0..n {
                let u: f64 = rng.random();
                let base_ps = (seg_start_s + u * seg_len_s) * 1e12;
                let id = if is_pair {
                    (s << 32) | ((cat as u64) << 28) | k
                } else {
                    BACKGROUND_ID
                };
                for &d in members {
                    let mut t = base_ps;
                    // Backgrounds are uniform in time, so jitter would not
                    // change their statistics; skip the draws.
                    if is_pair && sigma_ps[d] > 0.0 {
                        let z: f64 = rng.sample(StandardNormal);
                        t += z.clamp(-JITTER_CLAMP_SIGMA, JITTER_CLAMP_SIGMA) * sigma_ps[d];
                    }
                    let t = t.round() as i64;
                    if t >= 0 && t <= dur_ps {
                        pending[d].push(PendingEvent { t_ps: t, pair_id: id });
                    }
                }
            }
        }

        // Commit everything that can no longer be preceded by later events:
        // jitter from the next segment reaches back less than the margin.
        let boundary = if s + 1 == n_segments {
            i64::MAX
        } else {
            (s as i64 + 1) * SEGMENT_PS - margin
        };
        for d in 0..3 {
            commit_buf.clear();
            let mut kept = 0usize;
            for i in 0..pending[d].len() {
                let e = pending[d][i];
                if e.t_ps < boundary {
                    commit_buf.push(e);
                } else {
                    pending[d][kept] = e;
                    kept += 1;
                }
            }
            pending[d].truncate(kept);
            commit_buf.sort_unstable_by_key(|e| (e.t_ps, e.pair_id));
            for e in &commit_buf {
                if e.t_ps - last_recorded[d] >= dead_ps[d] {
                    last_recorded[d] = e.t_ps;
                    let t = e.t_ps as u64;
                    on_recorded(d, t);
                    if e.pair_id != BACKGROUND_ID {
                        bucket_mut(&mut buckets, e.pair_id >> 32).recorded[d].push((e.pair_id, t));
                    }
                }
            }
        }
        while buckets
            .front()
            .is_some_and(|b| b.segment + 2 <= s)
        {
            let bucket = buckets.pop_front().expect("checked nonempty");
            close_bucket(bucket, &mut ledger.alice_pairs, &mut ledger.bob_pairs);
        }
    }
    while let Some(bucket) = buckets.pop_front() {
        close_bucket(bucket, &mut ledger.alice_pairs, &mut ledger.bob_pairs);
    }
    Ok(ledger)
}

/// The three recorded monitor streams plus the ground truth behind them.
#[derive(Debug, Clone)]
pub struct GeneratedStreams {
    pub idler: TimeTagStream,
    pub alice_tap: TimeTagStream,
    pub bob_tap: TimeTagStream,
    pub ledger: GroundTruthLedger,
}

/// Generate and materialize all three recorded streams.
pub fn generate_streams(scenario: &ScenarioSpec) -> Result<GeneratedStreams> {
    let rates = expected_rates(scenario)?;
    let expect = |r: f64| (r * scenario.duration_s * 1.05) as usize + 64;
    let mut tags: [Vec<u64>; 3] = [
        Vec::with_capacity(expect(rates.idler.recorded_rate_hz)),
        Vec::with_capacity(expect(rates.alice_tap.recorded_rate_hz)),
        Vec::with_capacity(expect(rates.bob_tap.recorded_rate_hz)),
    ];
    let ledger = drive(scenario, |d, t| tags[d].push(t))?;
    let [idler, alice, bob] = tags;
    Ok(GeneratedStreams {
        idler: TimeTagStream::new(CHANNEL_IDLER, idler, scenario.duration_s)?,
        alice_tap: TimeTagStream::new(CHANNEL_ALICE_TAP, alice, scenario.duration_s)?,
        bob_tap: TimeTagStream::new(CHANNEL_BOB_TAP, bob, scenario.duration_s)?,
        ledger,
    })
}

struct TapFifo {
    queue: VecDeque<u64>,
    floor_t: u64,
}

/// Windowed coincidence counting that consumes detections as they are
/// generated, keeping only the idler tail the windows can still reach.
struct StreamingCounter {
    center: i64,
    off: i64,
    lo: i64,
    hi: i64,
    idler: Vec<u64>,
    head: usize,
    coverage: i64,
    taps: [TapFifo; 2],
    aligned: [u64; 2],
    offset: [u64; 2],
    singles: [u64; 2],
}

const COMPACT_MIN_HEAD: usize = 65_536;

impl StreamingCounter {
    fn new(center: i64, off: i64, lo: i64, hi: i64) -> Self {
        StreamingCounter {
            center,
            off,
            lo,
            hi,
            idler: Vec::new(),
            head: 0,
            coverage: i64::MIN,
            taps: [
                TapFifo {
                    queue: VecDeque::new(),
                    floor_t: 0,
                },
                TapFifo {
                    queue: VecDeque::new(),
                    floor_t: 0,
                },
            ],
            aligned: [0; 2],
            offset: [0; 2],
            singles: [0; 2],
        }
    }

    fn on_event(&mut self, detector: usize, t: u64) {
        if detector == 0 {
            self.idler.push(t);
            self.coverage = t as i64;
        } else {
            let tap = detector - 1;
            self.singles[tap] += 1;
            self.taps[tap].queue.push_back(t);
            self.taps[tap].floor_t = t;
        }
        self.drain_ready(false);
    }

    fn range_count(&self, lo_t: i64, hi_t: i64) -> u64 {
        // Inclusive [lo_t, hi_t] over the retained idler tail.
        if hi_t < 0 || hi_t < lo_t {
            return 0;
        }
        let lo_t = lo_t.max(0) as u64;
        let hi_t = hi_t as u64;
        let tail = &self.idler[self.head..];
        let a = tail.partition_point(|&x| x < lo_t);
        let b = tail.partition_point(|&x| x <= hi_t);
        (b - a) as u64
    }

    fn drain_ready(&mut self, finish: bool) {
        for tap in 0..2 {
            while let Some(&front) = self.taps[tap].queue.front() {
                let t = front as i64;
                // The latest idler this tap event can pair with.
                if !finish && t - self.center + self.lo > self.coverage {
                    break;
                }
                self.taps[tap].queue.pop_front();
                self.aligned[tap] +=
                    self.range_count(t - self.center - self.hi + 1, t - self.center + self.lo);
                self.offset[tap] += self.range_count(
                    t - self.center - self.off - self.hi + 1,
                    t - self.center - self.off + self.lo,
                );
            }
        }
        self.prune();
    }

    fn prune(&mut self) {
        // The earliest idler any future tap event could still need.
        let needed_from = self
            .taps
            .iter()
            .map(|f| {
                let t = f.queue.front().copied().unwrap_or(f.floor_t) as i64;
                t - self.center - self.off - self.hi + 1
            })
            .min()
            .expect("two taps");
        if needed_from <= 0 {
            return;
        }
        let needed_from = needed_from as u64;
        while self.head < self.idler.len() && self.idler[self.head] < needed_from {
            self.head += 1;
        }
        if self.head > COMPACT_MIN_HEAD && self.head > self.idler.len() / 2 {
            self.idler.drain(..self.head);
            self.head = 0;
        }
    }

    fn finish(&mut self) {
        self.drain_ready(true);
    }
}

/// Generate a run and reduce it straight to monitor observables without ever
/// materializing the streams.
///
/// Needs a calibrated peak center; searching requires a histogram over the
/// full streams, so export or generate them instead when the delay is
/// unknown.
pub fn run_measurement(
    scenario: &ScenarioSpec,
    windows: &CoincidenceWindows,
) -> Result<(CountRates, GroundTruthLedger)> {
    windows.validate()?;
    let PeakLocation::Calibrated { center_s } = windows.peak else {
        return Err(Error::invalid(
            "peak",
            "streaming measurement needs a calibrated peak center; locate the peak on \
             materialized streams first",
        ));
    };
    let center = (center_s * 1e12).round() as i64;
    let (lo, hi) = window_split(windows.window_ps());
    let mut counter = StreamingCounter::new(center, windows.offset_ps(), lo, hi);
    let ledger = drive(scenario, |d, t| counter.on_event(d, t))?;
    counter.finish();
    let duration_s = scenario.duration_s;
    Ok((
        CountRates {
            s_a: counter.singles[0] as f64 / duration_s,
            s_b: counter.singles[1] as f64 / duration_s,
            c_ia: counter.aligned[0] as f64 / duration_s,
            c_ia_acc: counter.offset[0] as f64 / duration_s,
            c_ib: counter.aligned[1] as f64 / duration_s,
            c_ib_acc: counter.offset[1] as f64 / duration_s,
            duration_s,
            window_s: windows.window_s,
        },
        ledger,
    ))
}
