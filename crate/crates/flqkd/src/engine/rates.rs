//! Monitor-observable extraction from recorded streams.

use serde::{Deserialize, Serialize};

use super::histogram::cross_correlate;
use super::stream::TimeTagStream;
use crate::error::{Error, Result};
use crate::monitor::{estimate_injection_fraction, estimate_std_error, CountRates};

/// How to place the coincidence window on the time-difference axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PeakLocation {
    /// The pair peak's center is known (calibrated sync path); use it as is.
    Calibrated { center_s: f64 },
    /// Find the peak by histogramming over `±range_s` first.
    Search { range_s: f64 },
}

/// Window geometry for turning streams into monitor observables.
///
/// The aligned window has width `window_s` around the pair peak; the
/// misaligned (accidental) window has the same width, displaced by
/// `accidental_offset_s`, far enough that no true pairs land in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoincidenceWindows {
    pub window_s: f64,
    pub accidental_offset_s: f64,
    /// Bin width for peak-search histograms.
    pub histogram_bin_s: f64,
    pub peak: PeakLocation,
}

impl Default for CoincidenceWindows {
    /// 3.2 ns window, accidentals 16 ns away, 256 ps search bins, peak
    /// calibrated to zero delay.
    fn default() -> Self {
        CoincidenceWindows {
            window_s: 3.2e-9,
            accidental_offset_s: 1.6e-8,
            histogram_bin_s: 2.56e-10,
            peak: PeakLocation::Calibrated { center_s: 0.0 },
        }
    }
}

/// The misaligned window must sit at least this many window-widths away.
pub const MIN_OFFSET_WINDOWS: f64 = 5.0;

impl CoincidenceWindows {
    pub fn validate(&self) -> Result<()> {
        if !self.window_s.is_finite() || self.window_s <= 0.0 || self.window_s > 1e-3 {
            return Err(Error::invalid(
                "window_s",
                format!("must be in (0, 1e-3] s, got {}", self.window_s),
            ));
        }
        let min_offset = MIN_OFFSET_WINDOWS * self.window_s * (1.0 - 1e-12);
        if !self.accidental_offset_s.is_finite()
            || self.accidental_offset_s < min_offset
            || self.accidental_offset_s > 1.0
        {
            return Err(Error::invalid(
                "accidental_offset_s",
                format!(
                    "must be >= {MIN_OFFSET_WINDOWS} windows ({:.3e} s) to stay clear of the \
                     pair peak, got {}",
                    MIN_OFFSET_WINDOWS * self.window_s,
                    self.accidental_offset_s
                ),
            ));
        }
        if !self.histogram_bin_s.is_finite()
            || self.histogram_bin_s <= 0.0
            || self.histogram_bin_s > 1e-3
        {
            return Err(Error::invalid(
                "histogram_bin_s",
                format!("must be in (0, 1e-3] s, got {}", self.histogram_bin_s),
            ));
        }
        match self.peak {
            PeakLocation::Calibrated { center_s } => {
                if !center_s.is_finite() || center_s.abs() > 1.0 {
                    return Err(Error::invalid(
                        "peak.center_s",
                        format!("must be within +-1 s, got {center_s}"),
                    ));
                }
            }
            PeakLocation::Search { range_s } => {
                if !range_s.is_finite() || range_s < self.histogram_bin_s {
                    return Err(Error::invalid(
                        "peak.range_s",
                        format!(
                            "must be >= histogram_bin_s, got {range_s} vs {}",
                            self.histogram_bin_s
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn window_ps(&self) -> u64 {
        ((self.window_s * 1e12).round() as u64).max(1)
    }

    pub(crate) fn offset_ps(&self) -> i64 {
        (self.accidental_offset_s * 1e12).round() as i64
    }
}

/// Integer-grid window split: a window of `w` ps around center `c` covers
/// differences in `[c - w/2, c + (w - w/2))`, exactly `w` ps wide.
pub(crate) fn window_split(window_ps: u64) -> (i64, i64) {
    let lo = (window_ps / 2) as i64;
    let hi = window_ps as i64 - lo;
    (lo, hi)
}

/// Count (data, sync) pairs whose difference `t_data - t_sync` lies in
/// `[lo_edge, hi_edge)`, by a two-pointer sweep.
pub(crate) fn count_window_pairs(
    data: &[u64],
    sync: &[u64],
    lo_edge: i64,
    hi_edge: i64,
) -> u64 {
    let mut n = 0u64;
    let (mut i0, mut i1) = (0usize, 0usize);
    for &td in data {
        let t = td as i64;
        while i0 < sync.len() && (sync[i0] as i64) <= t - hi_edge {
            i0 += 1;
        }
        if i1 < i0 {
            i1 = i0;
        }
        while i1 < sync.len() && (sync[i1] as i64) <= t - lo_edge {
            i1 += 1;
        }
        n += (i1 - i0) as u64;
    }
    n
}

/// Locate the pair peak on the `data` vs `sync` histogram and return its
/// center, in seconds.
///
/// The accidental floor is the mean bin height away from the peak
/// (excluding the tallest bin and two neighbors on each side). The peak must
/// clear `floor + 3 * sqrt(max(floor, 1))`, else the monitor cannot lock and
/// a peak-not-found error is returned. The returned center refines the
/// tallest bin by the floor-subtracted centroid of it and its two neighbors.
pub fn locate_coincidence_peak(
    data: &TimeTagStream,
    sync: &TimeTagStream,
    histogram_bin_s: f64,
    range_s: f64,
) -> Result<f64> {
    let hist = cross_correlate(data, sync, histogram_bin_s, range_s)?;
    let (i_max, c_max) = hist.peak_bin().expect("histograms always have bins");
    let mut sum = 0u64;
    let mut n_floor = 0u64;
    for (i, &c) in hist.counts.iter().enumerate() {
        if (i as i64 - i_max as i64).abs() > 2 {
            sum += c;
            n_floor += 1;
        }
    }
    let floor = if n_floor > 0 {
        sum as f64 / n_floor as f64
    } else {
        0.0
    };
    let threshold = floor + 3.0 * floor.max(1.0).sqrt();
    if (c_max as f64) < threshold {
        return Err(Error::PeakNotFound(format!(
            "tallest histogram bin holds {c_max} counts at {:.4e} s, below the accidental \
             floor {floor:.2} + 3 sigma ({threshold:.2}); cannot lock the coincidence peak",
            hist.bin_center_s(i_max)
        )));
    }
    let mut weight_sum = 0.0;
    let mut center_sum = 0.0;
    for i in i_max.saturating_sub(1)..=(i_max + 1).min(hist.counts.len() - 1) {
        let w = (hist.counts[i] as f64 - floor).max(0.0);
        weight_sum += w;
        center_sum += w * hist.bin_center_s(i);
    }
    Ok(center_sum / weight_sum)
}

fn resolve_center_ps(
    idler: &TimeTagStream,
    alice: &TimeTagStream,
    windows: &CoincidenceWindows,
) -> Result<i64> {
    match windows.peak {
        PeakLocation::Calibrated { center_s } => Ok((center_s * 1e12).round() as i64),
        PeakLocation::Search { range_s } => {
            // The transmitter tap sees the stronger pair flux, so the search
            // runs there; both taps share the sync path, hence the center.
            let center_s =
                locate_coincidence_peak(alice, idler, windows.histogram_bin_s, range_s)?;
            Ok((center_s * 1e12).round() as i64)
        }
    }
}

fn check_common_duration(streams: [&TimeTagStream; 3]) -> Result<f64> {
    let t = streams[0].duration_s;
    for s in streams {
        s.validate()?;
        if (s.duration_s - t).abs() > 1e-9 * t {
            return Err(Error::invalid(
                "duration_s",
                format!(
                    "streams disagree on duration: {} s vs {} s",
                    s.duration_s, t
                ),
            ));
        }
    }
    Ok(t)
}

/// Turn the three monitor streams into the six monitor observables.
///
/// Both coincidence rates count every (tap, idler) pair whose time
/// difference falls in the aligned window; the misaligned window, displaced
/// by the accidental offset, measures the accidental rate with the same
/// width. Singles rates are recorded counts over duration.
pub fn extract_rates(
    idler: &TimeTagStream,
    alice_tap: &TimeTagStream,
    bob_tap: &TimeTagStream,
    windows: &CoincidenceWindows,
) -> Result<CountRates> {
    windows.validate()?;
    let duration_s = check_common_duration([idler, alice_tap, bob_tap])?;
    let center = resolve_center_ps(idler, alice_tap, windows)?;
    let (lo, hi) = window_split(windows.window_ps());
    let off = windows.offset_ps();
    let count = |tap: &TimeTagStream, shift: i64| {
        count_window_pairs(
            &tap.timestamps_ps,
            &idler.timestamps_ps,
            center + shift - lo,
            center + shift + hi,
        ) as f64
            / duration_s
    };
    Ok(CountRates {
        s_a: alice_tap.recorded_rate_hz(),
        s_b: bob_tap.recorded_rate_hz(),
        c_ia: count(alice_tap, 0),
        c_ia_acc: count(alice_tap, off),
        c_ib: count(bob_tap, 0),
        c_ib_acc: count(bob_tap, off),
        duration_s,
        window_s: windows.window_s,
    })
}

/// One row of a coincidence-window sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSweepPoint {
    pub window_s: f64,
    pub f_e: f64,
    pub std_error: f64,
}

/// Run the injection estimate across several coincidence windows in one pass
/// over the streams.
///
/// The peak center is resolved once (searched if requested) and reused for
/// every window, so the sweep isolates the window-width effect.
pub fn sweep_window(
    idler: &TimeTagStream,
    alice_tap: &TimeTagStream,
    bob_tap: &TimeTagStream,
    windows: &CoincidenceWindows,
    window_list: &[f64],
) -> Result<Vec<WindowSweepPoint>> {
    windows.validate()?;
    if window_list.is_empty() {
        return Err(Error::invalid("window_list", "must be nonempty"));
    }
    let mut max_window_ps = 0u64;
    for &w in window_list {
        let probe = CoincidenceWindows {
            window_s: w,
            accidental_offset_s: windows.accidental_offset_s,
            ..*windows
        };
        probe.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::InvalidParameter {
                name,
                reason: format!("window {w} in window_list: {reason}"),
            },
            other => other,
        })?;
        max_window_ps = max_window_ps.max(probe.window_ps());
    }
    let duration_s = check_common_duration([idler, alice_tap, bob_tap])?;
    let center = resolve_center_ps(idler, alice_tap, windows)?;
    let off = windows.offset_ps();
    let reach = max_window_ps as i64;

    // Collect each tap's time differences near both window regions once;
    // individual windows then reduce to binary searches over these arrays.
    let collect = |tap: &TimeTagStream, shift: i64| -> Vec<i64> {
        let mut lags = Vec::new();
        let (mut i0, mut i1) = (0usize, 0usize);
        let sync = &idler.timestamps_ps;
        for &td in &tap.timestamps_ps {
            let t = td as i64;
            while i0 < sync.len() && (sync[i0] as i64) < t - (center + shift) - reach {
                i0 += 1;
            }
            if i1 < i0 {
                i1 = i0;
            }
            while i1 < sync.len() && (sync[i1] as i64) <= t - (center + shift) + reach {
                i1 += 1;
            }
            for &ts in &sync[i0..i1] {
                lags.push(t - ts as i64);
            }
        }
        lags.sort_unstable();
        lags
    };
    let lags_alice = collect(alice_tap, 0);
    let lags_alice_acc = collect(alice_tap, off);
    let lags_bob = collect(bob_tap, 0);
    let lags_bob_acc = collect(bob_tap, off);
    let ranged = |lags: &[i64], lo_edge: i64, hi_edge: i64| -> f64 {
        let a = lags.partition_point(|&d| d < lo_edge);
        let b = lags.partition_point(|&d| d < hi_edge);
        (b - a) as f64 / duration_s
    };

    let s_a = alice_tap.recorded_rate_hz();
    let s_b = bob_tap.recorded_rate_hz();
    let mut points = Vec::with_capacity(window_list.len());
    for &w in window_list {
        let w_ps = ((w * 1e12).round() as u64).max(1);
        let (lo, hi) = window_split(w_ps);
        let rates = CountRates {
            s_a,
            s_b,
            c_ia: ranged(&lags_alice, center - lo, center + hi),
            c_ia_acc: ranged(&lags_alice_acc, center + off - lo, center + off + hi),
            c_ib: ranged(&lags_bob, center - lo, center + hi),
            c_ib_acc: ranged(&lags_bob_acc, center + off - lo, center + off + hi),
            duration_s,
            window_s: w,
        };
        points.push(WindowSweepPoint {
            window_s: w,
            f_e: estimate_injection_fraction(&rates)?,
            std_error: estimate_std_error(&rates)?,
        });
    }
    Ok(points)
}
