//! Detection-time streams as a time tagger would record them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel index the idler detector records on.
pub const CHANNEL_IDLER: u8 = 0;
/// Channel index of the transmitter-tap detector.
pub const CHANNEL_ALICE_TAP: u8 = 1;
/// Channel index of the receiver-tap detector.
pub const CHANNEL_BOB_TAP: u8 = 2;

/// One detector's recorded detection times over a measurement.
///
/// Timestamps are integer picoseconds from the measurement start, strictly
/// increasing (dead time guarantees separation), and all within
/// `[0, duration_s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTagStream {
    pub channel_id: u8,
    pub timestamps_ps: Vec<u64>,
    pub duration_s: f64,
}

impl TimeTagStream {
    pub fn new(channel_id: u8, timestamps_ps: Vec<u64>, duration_s: f64) -> Result<Self> {
        let stream = TimeTagStream {
            channel_id,
            timestamps_ps,
            duration_s,
        };
        stream.validate()?;
        Ok(stream)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::invalid(
                "duration_s",
                format!("must be > 0, got {}", self.duration_s),
            ));
        }
        let duration_ps = (self.duration_s * 1e12).round() as u64;
        let mut last: Option<u64> = None;
        for &t in &self.timestamps_ps {
            if let Some(prev) = last {
                if t <= prev {
                    return Err(Error::invalid(
                        "timestamps_ps",
                        format!("must be strictly increasing, saw {prev} then {t}"),
                    ));
                }
            }
            if t > duration_ps {
                return Err(Error::invalid(
                    "timestamps_ps",
                    format!("timestamp {t} ps exceeds the {duration_ps} ps duration"),
                ));
            }
            last = Some(t);
        }
        Ok(())
    }

    pub fn recorded_count(&self) -> u64 {
        self.timestamps_ps.len() as u64
    }

    pub fn recorded_rate_hz(&self) -> f64 {
        self.recorded_count() as f64 / self.duration_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_sorted_in_range_tags() {
        let s = TimeTagStream::new(CHANNEL_IDLER, vec![0, 5, 1_000_000], 1e-5).unwrap();
        assert_eq!(s.recorded_count(), 3);
        assert_eq!(s.recorded_rate_hz(), 3e5);
    }

    #[test]
    fn rejects_disorder_duplicates_and_overruns() {
        assert!(TimeTagStream::new(0, vec![5, 4], 1.0).is_err());
        assert!(TimeTagStream::new(0, vec![5, 5], 1.0).is_err());
        assert!(TimeTagStream::new(0, vec![2_000_000_000_000], 1.0).is_err());
        assert!(TimeTagStream::new(0, vec![], 0.0).is_err());
    }

    #[test]
    fn boundary_timestamp_is_legal() {
        assert!(TimeTagStream::new(CHANNEL_BOB_TAP, vec![1_000_000_000_000], 1.0).is_ok());
    }
}
