//! On-disk formats for time-tag streams and monitor count summaries.
//!
//! Tag files hold all three monitor channels merged into one record
//! sequence, ordered by (timestamp, channel). Two encodings exist: a CSV
//! with a `channel,timestamp_ps` header, and a binary format with magic
//! `FLQTTAG1`, a little-endian u32 record count, four reserved zero bytes,
//! then 16-byte records (u64 LE picosecond timestamp, u8 channel, seven
//! zero pad bytes). Timestamps are exact in both, so write/read round-trips
//! reproduce streams bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::engine::stream::{
    TimeTagStream, CHANNEL_ALICE_TAP, CHANNEL_BOB_TAP, CHANNEL_IDLER,
};
use crate::error::{Error, Result};
use crate::fmt::format_g10;
use crate::monitor::CountRates;

const TAG_MAGIC: &[u8; 8] = b"FLQTTAG1";
const TAG_HEADER_LEN: usize = 16;
const TAG_RECORD_LEN: usize = 16;
const TAGS_CSV_HEADER: &str = "channel,timestamp_ps";
const RATES_CSV_HEADER: &str = "s_a,s_b,c_ia,c_ia_acc,c_ib,c_ib_acc,duration_s,window_s";

fn check_monitor_channels(
    idler: &TimeTagStream,
    alice_tap: &TimeTagStream,
    bob_tap: &TimeTagStream,
) -> Result<()> {
    for (stream, want) in [
        (idler, CHANNEL_IDLER),
        (alice_tap, CHANNEL_ALICE_TAP),
        (bob_tap, CHANNEL_BOB_TAP),
    ] {
        if stream.channel_id != want {
            return Err(Error::invalid(
                "channel_id",
                format!("expected channel {want}, got {}", stream.channel_id),
            ));
        }
    }
    Ok(())
}

/// Visit the three streams' events merged in (timestamp, channel) order.
fn for_each_merged(
    streams: [&TimeTagStream; 3],
    mut emit: impl FnMut(u64, u8) -> std::io::Result<()>,
) -> std::io::Result<()> {
    let mut idx = [0usize; 3];
    loop {
        let mut best: Option<(u64, u8, usize)> = None;
        for (s, stream) in streams.iter().enumerate() {
            if let Some(&t) = stream.timestamps_ps.get(idx[s]) {
                let key = (t, stream.channel_id);
                if best.is_none_or(|(bt, bc, _)| key < (bt, bc)) {
                    best = Some((t, stream.channel_id, s));
                }
            }
        }
        let Some((t, ch, s)) = best else {
            return Ok(());
        };
        idx[s] += 1;
        emit(t, ch)?;
    }
}

fn split_channels(
    path: &Path,
    records: Vec<(u64, u8)>,
    duration_s: f64,
) -> Result<(TimeTagStream, TimeTagStream, TimeTagStream)> {
    let mut tags: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (t, ch) in records {
        match ch {
            CHANNEL_IDLER | CHANNEL_ALICE_TAP | CHANNEL_BOB_TAP => {
                tags[ch as usize].push(t);
            }
            other => {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    reason: format!("unknown channel {other}"),
                });
            }
        }
    }
    let [idler, alice, bob] = tags;
    let build = |ch: u8, v: Vec<u64>| {
        TimeTagStream::new(ch, v, duration_s).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("channel {ch}: {e}"),
        })
    };
    Ok((
        build(CHANNEL_IDLER, idler)?,
        build(CHANNEL_ALICE_TAP, alice)?,
        build(CHANNEL_BOB_TAP, bob)?,
    ))
}

/// Write the three monitor streams as a merged CSV tag file.
pub fn write_tags_csv(
    path: &Path,
    idler: &TimeTagStream,
    alice_tap: &TimeTagStream,
    bob_tap: &TimeTagStream,
) -> Result<()> {
    check_monitor_channels(idler, alice_tap, bob_tap)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "{TAGS_CSV_HEADER}").map_err(io_err)?;
    for_each_merged([idler, alice_tap, bob_tap], |t, ch| {
        writeln!(out, "{ch},{t}")
    })
    .map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Read a CSV tag file back into the three monitor streams.
///
/// The file does not carry the run duration, so the caller supplies it; all
/// timestamps must fall inside it.
pub fn read_tags_csv(
    path: &Path,
    duration_s: f64,
) -> Result<(TimeTagStream, TimeTagStream, TimeTagStream)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut records = Vec::new();
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end_matches('\r') == TAGS_CSV_HEADER => {}
        Some((_, Ok(header))) => {
            return Err(malformed(format!("bad header line {header:?}")));
        }
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        None => return Err(malformed("empty file".into())),
    }
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (ch, t) = line
            .split_once(',')
            .ok_or_else(|| malformed(format!("line {}: expected 2 fields", lineno + 1)))?;
        let ch: u8 = ch
            .parse()
            .map_err(|_| malformed(format!("line {}: bad channel {ch:?}", lineno + 1)))?;
        let t: u64 = t
            .parse()
            .map_err(|_| malformed(format!("line {}: bad timestamp {t:?}", lineno + 1)))?;
        records.push((t, ch));
    }
    split_channels(path, records, duration_s)
}

/// Write the three monitor streams as a binary tag file.
pub fn write_tags_binary(
    path: &Path,
    idler: &TimeTagStream,
    alice_tap: &TimeTagStream,
    bob_tap: &TimeTagStream,
) -> Result<()> {
    check_monitor_channels(idler, alice_tap, bob_tap)?;
    let total = idler.recorded_count() + alice_tap.recorded_count() + bob_tap.recorded_count();
    let count: u32 = total.try_into().map_err(|_| {
        Error::invalid(
            "streams",
            format!("{total} records exceed the binary format's u32 count field"),
        )
    })?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    let mut header = [0u8; TAG_HEADER_LEN];
    header[..8].copy_from_slice(TAG_MAGIC);
    header[8..12].copy_from_slice(&count.to_le_bytes());
    out.write_all(&header).map_err(io_err)?;
    for_each_merged([idler, alice_tap, bob_tap], |t, ch| {
        let mut record = [0u8; TAG_RECORD_LEN];
        record[..8].copy_from_slice(&t.to_le_bytes());
        record[8] = ch;
        out.write_all(&record)
    })
    .map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Read a binary tag file back into the three monitor streams.
pub fn read_tags_binary(
    path: &Path,
    duration_s: f64,
) -> Result<(TimeTagStream, TimeTagStream, TimeTagStream)> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < TAG_HEADER_LEN {
        return Err(malformed("file shorter than the 16-byte header".into()));
    }
    if &bytes[..8] != TAG_MAGIC {
        return Err(malformed("bad magic, not a binary tag file".into()));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if bytes[12..16] != [0u8; 4] {
        return Err(malformed("reserved header bytes must be zero".into()));
    }
    let body = &bytes[TAG_HEADER_LEN..];
    if body.len() != count * TAG_RECORD_LEN {
        return Err(malformed(format!(
            "header promises {count} records ({} bytes), file holds {} bytes",
            count * TAG_RECORD_LEN,
            body.len()
        )));
    }
    let mut records = Vec::with_capacity(count);
    for (i, record) in body.chunks_exact(TAG_RECORD_LEN).enumerate() {
        if record[9..] != [0u8; 7] {
            return Err(malformed(format!("record {i}: pad bytes must be zero")));
        }
        let t = u64::from_le_bytes(record[..8].try_into().expect("8 bytes"));
        records.push((t, record[8]));
    }
    split_channels(path, records, duration_s)
}

/// Write monitor count summaries, one CSV row per measurement.
///
/// Values carry 10 significant digits, so a round-trip is close but not
/// bit-exact.
pub fn write_count_rates_csv(path: &Path, rows: &[CountRates]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "{RATES_CSV_HEADER}").map_err(io_err)?;
    for r in rows {
        let fields = [
            r.s_a, r.s_b, r.c_ia, r.c_ia_acc, r.c_ib, r.c_ib_acc, r.duration_s, r.window_s,
        ];
        let line: Vec<String> = fields.iter().map(|&x| format_g10(x)).collect();
        writeln!(out, "{}", line.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Read monitor count summaries written by [`write_count_rates_csv`] (or any
/// CSV with the same header).
pub fn read_count_rates_csv(path: &Path) -> Result<Vec<CountRates>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut rows = Vec::new();
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end_matches('\r') == RATES_CSV_HEADER => {}
        Some((_, Ok(header))) => {
            return Err(malformed(format!("bad header line {header:?}")));
        }
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        None => return Err(malformed("empty file".into())),
    }
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut v = [0.0f64; 8];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                malformed(format!("line {}: bad number {field:?}", lineno + 1))
            })?;
        }
        let row = CountRates {
            s_a: v[0],
            s_b: v[1],
            c_ia: v[2],
            c_ia_acc: v[3],
            c_ib: v[4],
            c_ib_acc: v[5],
            duration_s: v[6],
            window_s: v[7],
        };
        row.validate().map_err(|e| {
            malformed(format!("line {}: {e}", lineno + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use tempfile::tempdir;

    fn sample_streams() -> (TimeTagStream, TimeTagStream, TimeTagStream) {
        let duration = 1e-6;
        (
            TimeTagStream::new(CHANNEL_IDLER, vec![5, 100, 2_000], duration).unwrap(),
            TimeTagStream::new(CHANNEL_ALICE_TAP, vec![100, 1_500], duration).unwrap(),
            TimeTagStream::new(CHANNEL_BOB_TAP, vec![0, 100, 999_999], duration).unwrap(),
        )
    }

    #[test]
    fn csv_tags_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        let (idler, alice, bob) = sample_streams();
        write_tags_csv(&path, &idler, &alice, &bob).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // Ties at t = 100 come out in channel order.
        assert_eq!(
            text,
            "channel,timestamp_ps\n2,0\n0,5\n0,100\n1,100\n2,100\n1,1500\n0,2000\n2,999999\n"
        );
        let (i2, a2, b2) = read_tags_csv(&path, idler.duration_s).unwrap();
        assert_eq!(i2, idler);
        assert_eq!(a2, alice);
        assert_eq!(b2, bob);
    }

    #[test]
    fn binary_tags_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tags.bin");
        let (idler, alice, bob) = sample_streams();
        write_tags_binary(&path, &idler, &alice, &bob).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"FLQTTAG1");
        assert_eq!(bytes.len(), 16 + 16 * 8);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        // First record: channel 2 at t = 0.
        assert_eq!(bytes[16..24], 0u64.to_le_bytes());
        assert_eq!(bytes[24], 2);
        let (i2, a2, b2) = read_tags_binary(&path, idler.duration_s).unwrap();
        assert_eq!(i2, idler);
        assert_eq!(a2, alice);
        assert_eq!(b2, bob);
    }

    #[test]
    fn corrupt_binary_files_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tags.bin");
        let (idler, alice, bob) = sample_streams();
        write_tags_binary(&path, &idler, &alice, &bob).unwrap();
        let good = std::fs::read(&path).unwrap();

        let cases: Vec<(&str, Vec<u8>)> = vec![
            ("bad magic", {
                let mut b = good.clone();
                b[0] = b'X';
                b
            }),
            ("bad count", {
                let mut b = good.clone();
                b[8] = 99;
                b
            }),
            ("nonzero pad", {
                let mut b = good.clone();
                b[16 + 10] = 1;
                b
            }),
            ("truncated", good[..good.len() - 1].to_vec()),
            ("bad channel", {
                let mut b = good.clone();
                b[16 + 8] = 7;
                b
            }),
        ];
        for (what, bytes) in cases {
            std::fs::write(&path, bytes).unwrap();
            let err = read_tags_binary(&path, idler.duration_s).unwrap_err();
            assert!(matches!(err, Error::Malformed { .. }), "{what}: {err}");
        }
    }

    #[test]
    fn csv_rejects_disorder_within_a_channel() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        std::fs::write(&path, "channel,timestamp_ps\n0,100\n0,50\n").unwrap();
        assert!(matches!(
            read_tags_csv(&path, 1e-6).unwrap_err(),
            Error::Malformed { .. }
        ));
        std::fs::write(&path, "time,chan\n").unwrap();
        assert!(matches!(
            read_tags_csv(&path, 1e-6).unwrap_err(),
            Error::Malformed { .. }
        ));
    }

    #[test]
    fn count_rates_round_trip_to_ten_digits() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rates.csv");
        let rows = vec![
            CountRates {
                s_a: 158_437.25,
                s_b: 28_900.125,
                c_ia: 21.4375,
                c_ia_acc: 0.40625,
                c_ib: 9.875,
                c_ib_acc: 0.1875,
                duration_s: 1800.0,
                window_s: 3.2e-9,
            },
            CountRates {
                s_a: 1.0 / 3.0,
                s_b: 2.0 / 7.0,
                c_ia: 0.123456789123,
                c_ia_acc: 0.0,
                c_ib: 0.1,
                c_ib_acc: 0.05,
                duration_s: 60.0,
                window_s: 1e-9,
            },
        ];
        write_count_rates_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("s_a,s_b,c_ia,c_ia_acc,c_ib,c_ib_acc,duration_s,window_s\n"));
        assert!(text.contains("158437.25,28900.125,21.4375,0.40625,9.875,0.1875,1800,3.2e-09"));
        let back = read_count_rates_csv(&path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_relative_eq!(a.s_a, b.s_a, max_relative = 1e-9);
            assert_relative_eq!(a.c_ia, b.c_ia, max_relative = 1e-9);
            assert_relative_eq!(a.window_s, b.window_s, max_relative = 1e-9);
        }
    }

    #[test]
    fn empty_streams_still_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        let duration = 1e-9;
        let empty = |ch| TimeTagStream::new(ch, vec![], duration).unwrap();
        write_tags_csv(
            &path,
            &empty(CHANNEL_IDLER),
            &empty(CHANNEL_ALICE_TAP),
            &empty(CHANNEL_BOB_TAP),
        )
        .unwrap();
        let (i2, a2, b2) = read_tags_csv(&path, duration).unwrap();
        assert_eq!(i2.recorded_count(), 0);
        assert_eq!(a2.recorded_count(), 0);
        assert_eq!(b2.recorded_count(), 0);
    }
}
