//! Cross-correlation histograms between detection-time streams.

use serde::{Deserialize, Serialize};

use super::stream::TimeTagStream;
use crate::error::{Error, Result};

/// Upper bound on histogram bins, to catch range/bin mistakes before they
/// allocate gigabytes.
pub const MAX_HISTOGRAM_BINS: usize = 50_000_000;

/// Histogram of time differences `t_data - t_sync` over bins centered on
/// zero offset.
///
/// Bin `i` covers `[start_ps + i * bin_ps, start_ps + (i + 1) * bin_ps)`;
/// the middle bin is centered on zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_s: f64,
    /// Left edge of bin 0, picoseconds (negative: bins straddle zero).
    pub start_ps: i64,
    /// Bin width on the integer picosecond grid.
    pub bin_width_ps: i64,
    pub counts: Vec<u64>,
    pub sync_channel_id: u8,
    pub data_channel_id: u8,
}

impl CoincidenceHistogram {
    /// Offset axis: the center of each bin, in seconds.
    pub fn offsets_s(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.bin_center_s(i))
            .collect()
    }

    /// Center of bin `i`, in seconds.
    pub fn bin_center_s(&self, i: usize) -> f64 {
        (self.start_ps as f64 + (i as f64 + 0.5) * self.bin_width_ps as f64) * 1e-12
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index and height of the tallest bin (lowest index on ties); `None`
    /// for an empty histogram.
    pub fn peak_bin(&self) -> Option<(usize, u64)> {
        let (mut best, mut height) = (0usize, 0u64);
        if self.counts.is_empty() {
            return None;
        }
        for (i, &c) in self.counts.iter().enumerate() {
            if c > height {
                best = i;
                height = c;
            }
        }
        Some((best, height))
    }
}

/// Histogram all `t_data - t_sync` differences within `±range_s`.
///
/// Sync plays the role of the trigger channel; every (data, sync) pair whose
/// difference falls in range contributes one count, via a two-pointer sweep
/// over the two sorted streams, so the cost is linear in events plus matches
/// rather than quadratic.
///
/// Empty streams yield an all-zero histogram with a warning rather than an
/// error.
pub fn cross_correlate(
    data: &TimeTagStream,
    sync: &TimeTagStream,
    bin_width_s: f64,
    range_s: f64,
) -> Result<CoincidenceHistogram> {
    if !bin_width_s.is_finite() || bin_width_s <= 0.0 {
        return Err(Error::invalid(
            "bin_width_s",
            format!("must be > 0, got {bin_width_s}"),
        ));
    }
    if !range_s.is_finite() || range_s < bin_width_s {
        return Err(Error::invalid(
            "range_s",
            format!("must be >= bin_width_s, got {range_s}"),
        ));
    }
    let bin_ps = (bin_width_s * 1e12).round().max(1.0) as i64;
    // Symmetric layout: an odd number of bins with the middle one centered
    // on zero time difference.
    let half_bins = ((range_s * 1e12) / bin_ps as f64).round().max(1.0) as i64;
    let n_bins = (2 * half_bins + 1) as usize;
    if n_bins > MAX_HISTOGRAM_BINS {
        return Err(Error::invalid(
            "range_s",
            format!("range/bin would need {n_bins} bins (cap {MAX_HISTOGRAM_BINS})"),
        ));
    }
    let lo = bin_ps / 2;
    let start_ps = -half_bins * bin_ps - lo;
    let span_ps = n_bins as i64 * bin_ps;

    let mut counts = vec![0u64; n_bins];
    if data.timestamps_ps.is_empty() || sync.timestamps_ps.is_empty() {
        tracing::warn!(
            data_events = data.timestamps_ps.len(),
            sync_events = sync.timestamps_ps.len(),
            "cross-correlating an empty stream; histogram will be empty"
        );
    }

    // Sliding window of sync events with difference in [start, start + span).
    let syncs = &sync.timestamps_ps;
    let mut window_start = 0usize;
    let mut window_end = 0usize;
    for &t_data in &data.timestamps_ps {
        let t = t_data as i64;
        // Difference < start + span  =>  t_sync > t - start - span.
        while window_start < syncs.len() && (syncs[window_start] as i64) <= t - start_ps - span_ps
        {
            window_start += 1;
        }
        if window_end < window_start {
            window_end = window_start;
        }
        // Difference >= start  =>  t_sync <= t - start.
        while window_end < syncs.len() && (syncs[window_end] as i64) <= t - start_ps {
            window_end += 1;
        }
        for &t_sync in &syncs[window_start..window_end] {
            let diff = t - t_sync as i64;
            let idx = (diff - start_ps) / bin_ps;
            counts[idx as usize] += 1;
        }
    }

    Ok(CoincidenceHistogram {
        bin_width_s,
        start_ps,
        bin_width_ps: bin_ps,
        counts,
        sync_channel_id: sync.channel_id,
        data_channel_id: data.channel_id,
    })
}

/// Exponential-gap Poisson stream on the picosecond grid; test fixture.
#[cfg(test)]
pub(crate) fn poisson_stream(
    channel: u8,
    rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> TimeTagStream {
    use rand::prelude::*;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0f64;
    let mut tags = Vec::new();
    let dur_ps = duration_s * 1e12;
    loop {
        let u: f64 = rng.random();
        t += -u.ln() / rate_hz * 1e12;
        if t >= dur_ps {
            break;
        }
        let t_ps = t.round() as u64;
        if tags.last().is_none_or(|&last| t_ps > last) {
            tags.push(t_ps);
        }
    }
    TimeTagStream::new(channel, tags, duration_s).unwrap()
}
