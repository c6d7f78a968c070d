use crate::error::{Error, Result};
use crate::series::SensorSeries;

/// Median of a scratch buffer; the mean of the two middle values for an
/// even count.
pub(crate) fn median(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (_, &mut hi, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        hi
    } else {
        let lo = buf[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Moving median of `values` over samples in `[t − before, t + after]`.
/// `ts` must be sorted.
pub(crate) fn rolling_median(ts: &[i64], values: &[f64], before: i64, after: i64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut buf = Vec::new();
    let (mut lo, mut hi) = (0, 0);
    for (i, &t) in ts.iter().enumerate() {
        while ts[lo] < t - before {
            lo += 1;
        }
        while hi < ts.len() && ts[hi] <= t + after {
            hi += 1;
        }
        debug_assert!(lo <= i && i < hi);
        buf.clear();
        buf.extend_from_slice(&values[lo..hi]);
        out.push(median(&mut buf));
    }
    out
}

/// Centered moving median of every channel over `window_min` minutes,
/// computed separately on each gap-free segment.
pub fn smooth(series: &SensorSeries, window_min: f64) -> Result<SensorSeries> {
    if series.is_empty() {
        return Err(Error::InsufficientData(format!("{}: cannot smooth an empty series", series.channel_id)));
    }
    if !(window_min > 0.0) {
        return Err(Error::Input("smoothing window must be > 0 minutes".into()));
    }
    let half = (window_min * 30.0).round() as i64;
    let mut out = series.clone();
    for seg in series.segments() {
        let part = &series.samples[seg.clone()];
        let ts: Vec<i64> = part.iter().map(|s| s.timestamp).collect();
        let co2 = rolling_median(&ts, &part.iter().map(|s| s.co2).collect::<Vec<_>>(), half, half);
        let rh = rolling_median(&ts, &part.iter().map(|s| s.rh).collect::<Vec<_>>(), half, half);
        let temp = rolling_median(&ts, &part.iter().map(|s| s.temp).collect::<Vec<_>>(), half, half);
        for (k, s) in out.samples[seg].iter_mut().enumerate() {
            s.co2 = co2[k];
            s.rh = rh[k];
            s.temp = temp[k];
        }
    }
    Ok(out)
}
