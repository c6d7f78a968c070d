use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SensorSeries;

/// Smallest initial departure from ambient that can be calibrated, ppm.
pub const MIN_EXCESS_PPM: f64 = 100.0;
/// Fits below this r² are reported with `low_quality` set.
pub const R_SQUARED_WARNING: f64 = 0.9;

/// Exponential relaxation fit `C(t) = c_inf + (c0 − c_inf)·exp(−k·(t − t0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakFit {
    /// Decay rate, s⁻¹.
    pub k: f64,
    /// Fitted asymptote, ppm.
    pub c_inf: f64,
    /// Fitted concentration at `t0`, ppm.
    pub c0: f64,
    /// Start of the fitted segment.
    pub t0: i64,
    pub r_squared: f64,
    /// Leak conductance `k·volume`, cm³ s⁻¹.
    pub g_leak: f64,
    pub low_quality: bool,
}

fn r_squared(t: &[f64], y: &[f64], c_inf: f64, a: f64, k: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = t.iter().zip(y).map(|(&ti, &yi)| (yi - c_inf - a * (-k * ti).exp()).powi(2)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

/// Solves the 3×3 system `m·x = v` by Cramer's rule.
fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xc) in x.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = v[row];
        }
        *xc = det(mc) / d;
    }
    Some(x)
}

fn sse(t: &[f64], y: &[f64], p: [f64; 3]) -> f64 {
    t.iter().zip(y).map(|(&ti, &yi)| (yi - p[0] - p[1] * (-p[2] * ti).exp()).powi(2)).sum()
}

/// Fits the relaxation of pod CO₂ toward ambient.
///
/// The segment starts at the sample furthest from `c_amb` and runs to the
/// end of the series. Both injections (above ambient) and depletions
/// (below ambient, e.g. after a leaf is removed during uptake) are
/// accepted. A log-linear fit with the asymptote fixed at `c_amb` seeds a
/// damped Gauss–Newton refinement of (c_inf, c0, k).
pub fn fit_leak_decay(series: &SensorSeries, c_amb: f64, volume: f64) -> Result<LeakFit> {
    if !(volume > 0.0) {
        return Err(Error::Domain("volume must be > 0".into()));
    }
    let Some((i0, e0)) = series
        .samples
        .iter()
        .map(|s| s.co2 - c_amb)
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    else {
        return Err(Error::Calibration("empty decay series".into()));
    };
    if e0.abs() < MIN_EXCESS_PPM {
        return Err(Error::Calibration(format!(
            "largest departure from ambient is {:.1} ppm; need at least {MIN_EXCESS_PPM}",
            e0.abs()
        )));
    }
    let seg = &series.samples[i0..];
    let t0 = seg[0].timestamp;
    let t: Vec<f64> = seg.iter().map(|s| (s.timestamp - t0) as f64).collect();
    let y: Vec<f64> = seg.iter().map(|s| s.co2).collect();
    if t.len() < 3 {
        return Err(Error::Calibration("decay segment has fewer than 3 samples".into()));
    }

    // log-linear seed on the part still clearly away from ambient
    let sign = e0.signum();
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(&y) {
        let e = sign * (yi - c_amb);
        if e < 0.1 * e0.abs() {
            break;
        }
        let l = e.ln();
        n += 1.0;
        sx += ti;
        sy += l;
        sxx += ti * ti;
        sxy += ti * l;
    }
    let denom = n * sxx - sx * sx;
    if n < 2.0 || denom == 0.0 {
        return Err(Error::Calibration("no decaying segment found".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut p = [c_amb, sign * intercept.exp(), -slope];
    if !(p[2] > 0.0) {
        return Err(Error::Calibration(format!("series is not decaying toward ambient (k = {:.3e})", p[2])));
    }

    let mut cost = sse(&t, &y, p);
    let mut lambda = 1e-9;
    for _ in 0..200 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&ti, &yi) in t.iter().zip(&y) {
            let ex = (-p[2] * ti).exp();
            let r = yi - p[0] - p[1] * ex;
            let j = [1.0, ex, -p[1] * ti * ex];
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for (d, row) in m.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(f64::MIN_POSITIVE);
            }
            let Some(step) = solve3(m, jtr) else { break };
            let cand = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            let c = sse(&t, &y, cand);
            if c.is_finite() && c <= cost {
                let rel = step.iter().zip(&p).map(|(s, v)| (s / v.abs().max(1e-12)).abs()).fold(0.0, f64::max);
                p = cand;
                cost = c;
                lambda = (lambda * 0.1).max(1e-12);
                improved = rel > 1e-13;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let [c_inf, a, k] = p;
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Calibration(format!("fitted decay rate k = {k:.3e} is not positive")));
    }
    let r2 = r_squared(&t, &y, c_inf, a, k);
    Ok(LeakFit {
        k,
        c_inf,
        c0: c_inf + a,
        t0,
        r_squared: r2,
        g_leak: k * volume,
        low_quality: r2 < R_SQUARED_WARNING,
    })
}
