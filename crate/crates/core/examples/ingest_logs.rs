//! Parses two logger dialects with irregular timing and aligns them on a
//! common one-minute grid.

use phytosim::ingest::{align, parse_log, resample, Dialect, LogFormat, TimestampKind};

fn main() -> phytosim::Result<()> {
    let mut csv = String::from("timestamp,co2,rh,temp\n");
    let mut serial = String::new();
    for i in 0..120i64 {
        let t = 1_700_000_000 + i * 30;
        csv.push_str(&format!("{},{:.1},55.0,22.5\n", t * 1000, 420.0 + (i as f64 / 10.0).sin() * 20.0));
        // the second logger runs 7 s late and writes keys in its own order
        serial.push_str(&format!("[{}] T=22.1 CO2={:.1} RH=60.0\n", t + 7, 430.0 - i as f64 * 0.1));
    }
    serial.push_str("[garbage line\n");

    let a = parse_log(csv.as_bytes(), &LogFormat {
        dialect: Dialect::PhytobitsCsv,
        timestamp_kind: TimestampKind::EpochMs,
        device_id: "pod-a".into(),
    })?;
    let b = parse_log(serial.as_bytes(), &LogFormat {
        dialect: Dialect::PhytobitsSerial,
        timestamp_kind: TimestampKind::EpochS,
        device_id: "pod-b".into(),
    })?;
    println!("pod-b: {} data lines, {} malformed", b.data_lines, b.malformed_lines);

    let aligned = align(&[resample(&a.series, 60)?, resample(&b.series, 60)?])?;
    for s in &aligned {
        println!("{}: {} samples from {:?} to {:?}", s.channel_id, s.len(), s.start(), s.end());
    }
    Ok(())
}
