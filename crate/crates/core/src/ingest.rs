//! Logger parsing, canonical CSV, resampling and alignment.
//!
//! The canonical on-disk form of a [`SensorSeries`] is
//!
//! ```text
//! timestamp_s,co2_ppm,rh_pct,temp_c
//! 1700000000,412.5,45.2,24.1
//! ```
//!
//! with integer epoch seconds and floats printed in Rust's shortest
//! round-trip form, so `parse(serialize(s)) == s` exactly.
//!
//! Two logger dialects are accepted:
//! * `phytobits_csv`: `timestamp,co2,rh,temp` per line, optional header.
//! * `phytobits_serial`: `[timestamp] CO2=412.5 RH=45.2 T=24.1` per line,
//!   keys in any order.

use std::io::BufRead;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Sample, SensorSeries};

pub const CANONICAL_HEADER: &str = "timestamp_s,co2_ppm,rh_pct,temp_c";
/// Out-of-order samples within this many seconds are re-sorted.
pub const JITTER_WINDOW_S: i64 = 5;
/// Maximum tolerated fraction of malformed data lines.
pub const MALFORMED_TOLERANCE: f64 = 0.01;
/// A source hole longer than this many resampling periods becomes a gap.
pub const GAP_FACTOR: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    PhytobitsCsv,
    PhytobitsSerial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampKind {
    EpochMs,
    EpochS,
    Iso8601,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFormat {
    pub dialect: Dialect,
    pub timestamp_kind: TimestampKind,
    pub device_id: String,
}

impl LogFormat {
    /// The canonical CSV written by this toolkit.
    pub fn canonical(device_id: impl Into<String>) -> Self {
        LogFormat {
            dialect: Dialect::PhytobitsCsv,
            timestamp_kind: TimestampKind::EpochS,
            device_id: device_id.into(),
        }
    }
}

/// A parsed log plus bookkeeping about what was dropped or fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub series: SensorSeries,
    pub data_lines: usize,
    pub malformed_lines: usize,
    /// Samples that arrived out of order within the jitter window.
    pub resorted: usize,
    /// Samples dropped because their timestamp repeated an earlier one.
    pub duplicates: usize,
}

pub(crate) fn parse_timestamp(raw: &str, kind: TimestampKind) -> Option<i64> {
    let raw = raw.trim();
    match kind {
        TimestampKind::EpochMs => {
            let ms: f64 = raw.parse().ok()?;
            ms.is_finite().then(|| (ms / 1000.0).round() as i64)
        }
        TimestampKind::EpochS => {
            if let Ok(s) = raw.parse::<i64>() {
                return Some(s);
            }
            let s: f64 = raw.parse().ok()?;
            s.is_finite().then(|| s.round() as i64)
        }
        TimestampKind::Iso8601 => DateTime::parse_from_rfc3339(raw)
            .map(|d| d.timestamp())
            .ok()
            .or_else(|| {
                NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
                    .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
                    .ok()
                    .map(|d| d.and_utc().timestamp())
            }),
    }
}

fn physical(co2: f64, rh: f64, temp: f64) -> bool {
    co2.is_finite() && co2 >= 0.0 && rh.is_finite() && (0.0..=100.0).contains(&rh) && temp.is_finite()
}

fn parse_csv_line(line: &str, kind: TimestampKind) -> Option<Sample> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return None;
    }
    let timestamp = parse_timestamp(fields[0], kind)?;
    let co2: f64 = fields[1].parse().ok()?;
    let rh: f64 = fields[2].parse().ok()?;
    let temp: f64 = fields[3].parse().ok()?;
    physical(co2, rh, temp).then_some(Sample { timestamp, co2, rh, temp })
}

fn parse_serial_line(line: &str, kind: TimestampKind) -> Option<Sample> {
    let rest = line.strip_prefix('[')?;
    let (ts, rest) = rest.split_once(']')?;
    let timestamp = parse_timestamp(ts, kind)?;
    let (mut co2, mut rh, mut temp) = (None, None, None);
    for token in rest.split_whitespace() {
        let (key, value) = token.split_once('=')?;
        let value: f64 = value.trim_end_matches(',').parse().ok()?;
        match key.to_ascii_uppercase().as_str() {
            "CO2" => co2 = Some(value),
            "RH" => rh = Some(value),
            "T" | "TEMP" => temp = Some(value),
            _ => return None,
        }
    }
    let (co2, rh, temp) = (co2?, rh?, temp?);
    physical(co2, rh, temp).then_some(Sample { timestamp, co2, rh, temp })
}

fn looks_like_header(line: &str) -> bool {
    line.split(',')
        .next()
        .map(|f| f.trim().chars().next().is_some_and(|c| c.is_ascii_alphabetic()))
        .unwrap_or(false)
}

/// Parses a logger stream into a canonical series.
///
/// Malformed lines are skipped as long as they stay within 1% of the data
/// lines. Samples up to 5 s out of order are re-sorted; anything later is
/// rejected.
pub fn parse_log<R: BufRead>(input: R, fmt: &LogFormat) -> Result<ParsedLog> {
    let mut raw = Vec::new();
    let mut data_lines = 0;
    let mut malformed = 0;
    let mut first = true;
    for line in input.lines() {
        let line = line.map_err(|e| Error::Input(format!("unreadable input: {e}")))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if first && fmt.dialect == Dialect::PhytobitsCsv && fmt.timestamp_kind != TimestampKind::Iso8601 && looks_like_header(line) {
            first = false;
            continue;
        }
        if first && fmt.dialect == Dialect::PhytobitsCsv && line.starts_with("timestamp") {
            first = false;
            continue;
        }
        first = false;
        data_lines += 1;
        let parsed = match fmt.dialect {
            Dialect::PhytobitsCsv => parse_csv_line(line, fmt.timestamp_kind),
            Dialect::PhytobitsSerial => parse_serial_line(line, fmt.timestamp_kind),
        };
        match parsed {
            Some(s) => raw.push(s),
            None => malformed += 1,
        }
    }
    if raw.is_empty() {
        return Err(Error::Input(format!("{}: no samples", fmt.device_id)));
    }
    if malformed as f64 > MALFORMED_TOLERANCE * data_lines as f64 {
        return Err(Error::Input(format!(
            "{}: {malformed} of {data_lines} lines malformed (limit 1%)",
            fmt.device_id
        )));
    }

    let mut resorted = 0;
    let mut latest = i64::MIN;
    for s in &raw {
        if s.timestamp < latest {
            if latest - s.timestamp > JITTER_WINDOW_S {
                return Err(Error::Input(format!(
                    "{}: timestamp {} is {} s behind its predecessor",
                    fmt.device_id,
                    s.timestamp,
                    latest - s.timestamp
                )));
            }
            resorted += 1;
        }
        latest = latest.max(s.timestamp);
    }
    raw.sort_by_key(|s| s.timestamp);
    let before = raw.len();
    raw.dedup_by_key(|s| s.timestamp);
    let duplicates = before - raw.len();

    Ok(ParsedLog {
        series: SensorSeries::new(fmt.device_id.clone(), raw),
        data_lines,
        malformed_lines: malformed,
        resorted,
        duplicates,
    })
}

/// Parses canonical CSV text.
pub fn parse_canonical(text: &str, device_id: &str) -> Result<SensorSeries> {
    parse_log(text.as_bytes(), &LogFormat::canonical(device_id)).map(|p| p.series)
}

/// Writes the canonical CSV form.
pub fn serialize_canonical(series: &SensorSeries) -> String {
    let mut out = String::with_capacity(32 * (series.len() + 1));
    out.push_str(CANONICAL_HEADER);
    out.push('\n');
    for s in &series.samples {
        out.push_str(&format!("{},{},{},{}\n", s.timestamp, s.co2, s.rh, s.temp));
    }
    out
}

/// Nearest-sample lookup onto `n` grid points `start + k·period`. Grid
/// points inside a source hole longer than `GAP_FACTOR·period`, or inside
/// an existing gap marker, come back as `None`. Each run of dropped points
/// is reported as a marker spanning the kept grid points around it.
fn sample_grid(series: &SensorSeries, start: i64, period: i64, n: usize) -> (Vec<Option<Sample>>, Vec<(i64, i64)>) {
    let ts = series.timestamps();
    let mut values = Vec::with_capacity(n);
    let mut gaps: Vec<(i64, i64)> = Vec::new();
    let mut last_kept: Option<i64> = None;
    let mut open_hole: Option<(i64, i64)> = None;
    for k in 0..n {
        let t = start + k as i64 * period;
        let idx = ts.partition_point(|&x| x < t);
        let exact = idx < ts.len() && ts[idx] == t;
        let hole = if exact || idx == 0 || idx == ts.len() {
            None
        } else {
            let (a, b) = (ts[idx - 1], ts[idx]);
            let marked = series.gap_markers.iter().any(|&(gs, ge)| gs < b && ge > a);
            (b - a > GAP_FACTOR * period || marked).then_some((a, b))
        };
        if let Some(h) = hole {
            open_hole.get_or_insert(h);
            values.push(None);
            continue;
        }
        if let Some((a, _)) = open_hole.take() {
            gaps.push((last_kept.unwrap_or(a), t));
        }
        last_kept = Some(t);
        let nearest = match idx {
            0 => 0,
            i if i == ts.len() => i - 1,
            i if ts[i] - t < t - ts[i - 1] => i,
            i => i - 1,
        };
        let s = series.samples[nearest];
        values.push(Some(Sample { timestamp: t, ..s }));
    }
    if let Some((a, b)) = open_hole {
        gaps.push((last_kept.unwrap_or(a), b));
    }
    (values, gaps)
}

fn merge_markers(mut markers: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    markers.sort_unstable();
    markers.dedup();
    markers
}

/// Resamples onto a uniform grid starting at the first sample.
pub fn resample(series: &SensorSeries, period: i64) -> Result<SensorSeries> {
    if period <= 0 {
        return Err(Error::Input("resampling period must be > 0".into()));
    }
    let (Some(start), Some(end)) = (series.start(), series.end()) else {
        return Ok(series.clone());
    };
    let span = end - start;
    let n = (span + period - 1).div_euclid(period) as usize + 1;
    let (values, gaps) = sample_grid(series, start, period, n);
    let mut markers = series.gap_markers.clone();
    markers.extend(gaps);
    Ok(SensorSeries {
        channel_id: series.channel_id.clone(),
        samples: values.into_iter().flatten().collect(),
        gap_markers: merge_markers(markers),
        corrected: series.corrected,
    })
}

/// Puts every series on one grid: the coarsest nominal period, starting at
/// the latest start and cropped to the common span. Grid points that are a
/// gap in any series are dropped from all of them.
pub fn align(series_list: &[SensorSeries]) -> Result<Vec<SensorSeries>> {
    if series_list.len() < 2 {
        return Err(Error::Input("align needs at least two series".into()));
    }
    let mut period = 0;
    let mut start = i64::MIN;
    let mut end = i64::MAX;
    for s in series_list {
        let (Some(a), Some(b)) = (s.start(), s.end()) else {
            return Err(Error::Input(format!("{}: empty series", s.channel_id)));
        };
        period = period.max(s.nominal_period().unwrap_or(1));
        start = start.max(a);
        end = end.min(b);
    }
    if start > end {
        return Err(Error::Input("series do not overlap in time".into()));
    }
    let n = ((end - start) / period) as usize + 1;
    let grids: Vec<_> = series_list.iter().map(|s| sample_grid(s, start, period, n)).collect();
    let mut markers: Vec<(i64, i64)> = Vec::new();
    for (s, (_, gaps)) in series_list.iter().zip(&grids) {
        markers.extend(s.gap_markers.iter().copied().filter(|&(a, b)| b >= start && a <= end));
        markers.extend(gaps.iter().copied());
    }
    let markers = merge_markers(markers);
    let keep: Vec<bool> = (0..n).map(|k| grids.iter().all(|(v, _)| v[k].is_some())).collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::Input("no common samples after alignment".into()));
    }
    Ok(series_list
        .iter()
        .zip(grids)
        .map(|(s, (values, _))| SensorSeries {
            channel_id: s.channel_id.clone(),
            samples: values.into_iter().zip(&keep).filter_map(|(v, &k)| if k { v } else { None }).collect(),
            gap_markers: markers.clone(),
            corrected: s.corrected,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Watering,
    LightsOn,
    LightsOff,
    Inversion,
    OccupancyStart,
    OccupancyEnd,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: i64,
    pub kind: EventKind,
    #[serde(default)]
    pub payload: String,
}

/// Hand-annotated experiment events, stored as JSON Lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut events: Vec<Event> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ev: Event = serde_json::from_str(line)
                .map_err(|e| Error::Input(format!("event line {}: {e}", i + 1)))?;
            if events.last().is_some_and(|p| p.timestamp > ev.timestamp) {
                return Err(Error::Input(format!("event line {}: timestamps must be non-decreasing", i + 1)));
            }
            events.push(ev);
        }
        Ok(EventLog { events })
    }

    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
            .collect()
    }

    pub fn times_of(&self, kind: EventKind) -> Vec<i64> {
        self.events.iter().filter(|e| e.kind == kind).map(|e| e.timestamp).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(start: i64, period: i64, n: usize) -> SensorSeries {
        SensorSeries::new(
            "u",
            (0..n)
                .map(|k| Sample {
                    timestamp: start + k as i64 * period,
                    co2: 400.0 + k as f64,
                    rh: 50.0,
                    temp: 22.0,
                })
                .collect(),
        )
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(parse_log("".as_bytes(), &LogFormat::canonical("x")).is_err());
        assert!(parse_log("timestamp_s,co2_ppm,rh_pct,temp_c\n".as_bytes(), &LogFormat::canonical("x")).is_err());
    }

    #[test]
    fn epoch_ms_csv() {
        let fmt = LogFormat {
            dialect: Dialect::PhytobitsCsv,
            timestamp_kind: TimestampKind::EpochMs,
            device_id: "pod1".into(),
        };
        let text = "1700000000000,410.5,45,22.5\n1700000060000,409,45.5,22.6\n1700000120400,408.25,46,22.7\n";
        let p = parse_log(text.as_bytes(), &fmt).unwrap();
        assert_eq!(p.series.len(), 3);
        assert_eq!(p.series.timestamps(), vec![1_700_000_000, 1_700_000_060, 1_700_000_120]);
        assert_eq!(p.series.samples[2].co2, 408.25);
        assert_eq!(p.malformed_lines, 0);
    }

    #[test]
    fn serial_and_iso_dialects() {
        let fmt = LogFormat {
            dialect: Dialect::PhytobitsSerial,
            timestamp_kind: TimestampKind::Iso8601,
            device_id: "esp32".into(),
        };
        let text = "[2024-01-01T00:00:00Z] CO2=410 RH=40 T=21\n[2024-01-01T00:01:00Z] RH=41 T=21.1 CO2=409\n";
        let p = parse_log(text.as_bytes(), &fmt).unwrap();
        assert_eq!(p.series.timestamps(), vec![1_704_067_200, 1_704_067_260]);
        assert_eq!(p.series.samples[1].rh, 41.0);
    }

    #[test]
    fn malformed_tolerance() {
        let mut text = String::new();
        for k in 0..1000 {
            if k % 200 == 7 {
                text.push_str("garbage,,\n");
            } else {
                text.push_str(&format!("{},400,50,20\n", k * 60));
            }
        }
        let p = parse_log(text.as_bytes(), &LogFormat::canonical("x")).unwrap();
        assert_eq!(p.malformed_lines, 5);
        assert_eq!(p.series.len(), 995);

        let mut bad = String::new();
        for k in 0..100 {
            if k % 20 == 0 {
                bad.push_str("1,2\n");
            } else {
                bad.push_str(&format!("{},400,50,20\n", k * 60));
            }
        }
        assert!(parse_log(bad.as_bytes(), &LogFormat::canonical("x")).is_err());
    }

    #[test]
    fn jitter_resorted_but_large_disorder_rejected() {
        let ok = "0,400,50,20\n63,400,50,20\n60,401,50,20\n120,400,50,20\n";
        let p = parse_log(ok.as_bytes(), &LogFormat::canonical("x")).unwrap();
        assert_eq!(p.resorted, 1);
        assert_eq!(p.series.timestamps(), vec![0, 60, 63, 120]);
        let bad = "0,400,50,20\n120,400,50,20\n60,401,50,20\n";
        assert!(parse_log(bad.as_bytes(), &LogFormat::canonical("x")).is_err());
    }

    #[test]
    fn resample_uniform_is_identity() {
        let s = uniform(1000, 60, 50);
        assert_eq!(resample(&s, 60).unwrap(), s);
    }

    #[test]
    fn resample_marks_holes() {
        let mut s = uniform(0, 60, 400);
        s.samples.retain(|x| x.timestamp <= 1200 || x.timestamp > 1200 + 3 * 3600);
        let r = resample(&s, 60).unwrap();
        assert_eq!(r.gap_markers.len(), 1);
        let (a, b) = r.gap_markers[0];
        assert_eq!(a, 1200);
        assert!(b > 1200 + 3 * 3600);
        assert!(r.samples.iter().all(|x| x.timestamp <= a || x.timestamp >= b));
        // neighbours are untouched
        let left = r.samples.iter().find(|x| x.timestamp == 1200).unwrap();
        assert_eq!(left.co2, s.samples.iter().find(|x| x.timestamp == 1200).unwrap().co2);
    }

    #[test]
    fn resample_ten_second_source() {
        let s = uniform(0, 10, 365); // span 3640 s
        let r = resample(&s, 60).unwrap();
        assert_eq!(r.len(), (3640f64 / 60.0).ceil() as usize + 1);
        for x in &r.samples {
            // brute force nearest
            let best = s
                .samples
                .iter()
                .min_by_key(|y| ((y.timestamp - x.timestamp).abs(), y.timestamp))
                .unwrap();
            assert!((best.timestamp - x.timestamp).abs() <= 5 || x.timestamp > s.end().unwrap());
            assert_eq!(best.co2, x.co2);
        }
    }

    #[test]
    fn align_cases() {
        let a = uniform(0, 60, 100);
        let out = align(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(out[0], a);
        assert_eq!(out[1], a);

        let fine = uniform(30, 60, 200);
        let coarse = uniform(600, 300, 30);
        let out = align(&[fine.clone(), coarse.clone()]).unwrap();
        assert_eq!(out[0].timestamps(), out[1].timestamps());
        let ts = out[0].timestamps();
        assert_eq!(ts[0], 600);
        assert!(ts.windows(2).all(|w| w[1] - w[0] == 300));
        assert!(*ts.last().unwrap() <= fine.end().unwrap().min(coarse.end().unwrap()));
        // independent recomputation of one value: nearest fine sample to 900 s
        let v = out[0].samples.iter().find(|x| x.timestamp == 900).unwrap();
        let expected = fine.samples.iter().min_by_key(|y| ((y.timestamp - 900).abs(), y.timestamp)).unwrap();
        assert_eq!(v.co2, expected.co2);

        let disjoint = uniform(100_000, 60, 10);
        assert!(align(&[a, disjoint]).is_err());
    }

    #[test]
    fn events_round_trip() {
        let text = "{\"timestamp\":10,\"kind\":\"watering\"}\n{\"timestamp\":20,\"kind\":\"annotation\",\"payload\":\"door closed\"}\n";
        let log = EventLog::parse_jsonl(text).unwrap();
        assert_eq!(log.times_of(EventKind::Watering), vec![10]);
        assert_eq!(EventLog::parse_jsonl(&log.to_jsonl()).unwrap(), log);
        assert!(EventLog::parse_jsonl("{\"timestamp\":20,\"kind\":\"watering\"}\n{\"timestamp\":10,\"kind\":\"watering\"}").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_series() -> impl Strategy<Value = SensorSeries> {
            (
                -1_000_000i64..2_000_000_000,
                proptest::collection::vec((1i64..600, 0.0f64..5000.0, 0.0f64..=100.0, -40.0f64..60.0), 1..80),
            )
                .prop_map(|(start, rows)| {
                    let mut t = start;
                    let samples = rows
                        .into_iter()
                        .map(|(dt, co2, rh, temp)| {
                            t += dt;
                            Sample { timestamp: t, co2, rh, temp }
                        })
                        .collect();
                    SensorSeries::new("p", samples)
                })
        }

        proptest! {
            #[test]
            fn parse_serialize_identity(s in arb_series()) {
                let back = parse_canonical(&serialize_canonical(&s), "p").unwrap();
                prop_assert_eq!(back, s);
            }

            #[test]
            fn resample_idempotent(s in arb_series(), period in 1i64..900) {
                let once = resample(&s, period).unwrap();
                let twice = resample(&once, period).unwrap();
                prop_assert_eq!(twice, once);
            }
        }
    }
}
