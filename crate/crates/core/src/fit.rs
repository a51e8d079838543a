//! Damping extraction from a decaying θ–t series.
//!
//! Upper-envelope peaks are fitted by `θ_peak = a·e^(−k·t)` with a straight
//! line in `ln θ_peak`; the damping coefficient follows from `k = C/(2ml)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_PEAKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub theta: f64,
}

/// Strict local maxima (`θ[i−1] < θ[i] ≥ θ[i+1]`), each refined by the
/// parabola through its three samples.
pub fn extract_peaks(t: &[f64], theta: &[f64]) -> Result<Vec<Peak>> {
    if t.len() != theta.len() {
        return Err(Error::invalid("series", format!("{} times but {} angles", t.len(), theta.len())));
    }
    let mut peaks = Vec::new();
    for i in 1..theta.len().saturating_sub(1) {
        let (y0, y1, y2) = (theta[i - 1], theta[i], theta[i + 1]);
        if y0 < y1 && y1 >= y2 {
            peaks.push(refine(t[i - 1], t[i], t[i + 1], y0, y1, y2));
        }
    }
    if peaks.len() < MIN_PEAKS {
        return Err(Error::InsufficientPeaks { found: peaks.len(), needed: MIN_PEAKS });
    }
    Ok(peaks)
}

/// Vertex of the parabola through three points, falling back to the middle
/// sample when the points are collinear.
fn refine(t0: f64, t1: f64, t2: f64, y0: f64, y1: f64, y2: f64) -> Peak {
    let (a, b) = (t0 - t1, t2 - t1);
    let (p, q) = (y0 - y1, y2 - y1);
    // y − y1 = c2·s² + c1·s with s = t − t1
    let den = a * b * (a - b);
    let c2 = (p * b - q * a) / den;
    let c1 = (q * a * a - p * b * b) / den;
    if !(c2 < 0.0) {
        return Peak { t: t1, theta: y1 };
    }
    let s = (-c1 / (2.0 * c2)).clamp(a, b);
    Peak { t: t1 + s, theta: y1 + c1 * s + c2 * s * s }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub amplitude: f64,
    pub k: f64,
    /// RMS of the residuals of `ln θ_peak`.
    pub rms: f64,
}

/// Least-squares line through `(t, ln θ_peak)`.
pub fn fit_envelope(peaks: &[Peak]) -> Result<Envelope> {
    if peaks.len() < MIN_PEAKS {
        return Err(Error::InsufficientPeaks { found: peaks.len(), needed: MIN_PEAKS });
    }
    if let Some(bad) = peaks.iter().find(|p| !(p.theta > 0.0)) {
        return Err(Error::NonPositivePeak { t: bad.t, value: bad.theta });
    }
    let n = peaks.len() as f64;
    let t_mean = peaks.iter().map(|p| p.t).sum::<f64>() / n;
    let y_mean = peaks.iter().map(|p| p.theta.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in peaks {
        let dx = p.t - t_mean;
        sxx += dx * dx;
        sxy += dx * (p.theta.ln() - y_mean);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("peaks", "all peaks share one time"));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let ss: f64 = peaks
        .iter()
        .map(|p| {
            let r = p.theta.ln() - (intercept + slope * p.t);
            r * r
        })
        .sum();
    Ok(Envelope { amplitude: intercept.exp(), k: -slope, rms: (ss / n).sqrt() })
}

/// `C = 2·m·l·k`
pub fn damping_from_decay(k: f64, m: f64, l: f64) -> f64 {
    2.0 * m * l * k
}

/// Fit report of the full peak → envelope → damping pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub k: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub rms: f64,
    pub n_peaks: usize,
}

pub fn fit_decay(t: &[f64], theta: &[f64], m: f64, l: f64) -> Result<DecayFit> {
    for (name, v) in [("m", m), ("l", l)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be > 0, got {v}")));
        }
    }
    let peaks = extract_peaks(t, theta)?;
    let env = fit_envelope(&peaks)?;
    Ok(DecayFit {
        amplitude: env.amplitude,
        k: env.k,
        c: damping_from_decay(env.k, m, l),
        rms: env.rms,
        n_peaks: peaks.len(),
    })
}
