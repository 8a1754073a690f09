//! Spectral post-processing of simulation traces: dominant frequency and
//! oscillation envelope growth.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use slgfm_core::sim::{Signal, SimTrace};

pub const MIN_WINDOW_SAMPLES: usize = 1024;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpectralError {
    #[error("window [{t0}, {t1}] s holds {n} samples; at least {MIN_WINDOW_SAMPLES} are needed")]
    WindowTooShort { t0: f64, t1: f64, n: usize },
    #[error("signal `{0}` was not recorded")]
    MissingSignal(Signal),
    #[error("window [{0}, {1}] s lies outside the trace")]
    OutsideTrace(f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FftReport {
    /// Hz.
    pub dominant_freq: f64,
    /// Peak amplitude of the dominant component, signal units.
    pub amplitude: f64,
    pub window: (f64, f64),
    /// Slope of the log envelope around the dominant frequency, 1/s.
    pub growth_rate: f64,
}

impl std::fmt::Display for FftReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "window_start_s = {}", self.window.0)?;
        writeln!(f, "window_end_s = {}", self.window.1)?;
        writeln!(f, "dominant_freq_hz = {:.3}", self.dominant_freq)?;
        writeln!(f, "amplitude = {:.6e}", self.amplitude)?;
        write!(f, "growth_rate_per_s = {:.4}", self.growth_rate)
    }
}

fn segment(tr: &SimTrace, signal: Signal, window: (f64, f64)) -> Result<(&[f64], &[f64]), SpectralError> {
    let (t0, t1) = window;
    let first = *tr.t.first().ok_or(SpectralError::OutsideTrace(t0, t1))?;
    let last = *tr.t.last().unwrap();
    let slack = tr.sample_interval();
    if !(t0 < t1) || t0 < first - slack || t1 > last + slack {
        return Err(SpectralError::OutsideTrace(t0, t1));
    }
    let x = tr.get(signal).ok_or(SpectralError::MissingSignal(signal))?;
    let r = tr.window(t0, t1);
    if r.len() < MIN_WINDOW_SAMPLES {
        return Err(SpectralError::WindowTooShort { t0, t1, n: r.len() });
    }
    Ok((&tr.t[r.clone()], &x[r]))
}

/// Removes the least-squares line.
fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let tm = (n - 1.0) / 2.0;
    let xm = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        let d = k as f64 - tm;
        sxy += d * (v - xm);
        sxx += d * d;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter()
        .enumerate()
        .map(|(k, v)| v - xm - slope * (k as f64 - tm))
        .collect()
}

fn spectrum(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Dominant frequency over the whole band above DC.
pub fn dominant_frequency(tr: &SimTrace, signal: Signal, window: (f64, f64)) -> Result<FftReport, SpectralError> {
    dominant_frequency_in(tr, signal, window, (0.0, f64::INFINITY))
}

/// Hann-windowed FFT of the detrended segment; the largest bin inside
/// `band` (Hz) is refined by quadratic interpolation of the log magnitude.
/// The growth rate comes from the band-limited envelope around that peak.
pub fn dominant_frequency_in(
    tr: &SimTrace,
    signal: Signal,
    window: (f64, f64),
    band: (f64, f64),
) -> Result<FftReport, SpectralError> {
    let (t, x) = segment(tr, signal, window)?;
    let n = x.len();
    let dt = tr.sample_interval();
    let df = 1.0 / (n as f64 * dt);
    let hann: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
    let xd = detrend(x);
    let xw: Vec<f64> = xd.iter().zip(&hann).map(|(a, w)| a * w).collect();
    let spec = spectrum(&xw);
    let mag: Vec<f64> = spec[..n / 2 + 1].iter().map(|c| c.norm()).collect();

    let lo = ((band.0 / df).ceil() as usize).max(1);
    let hi = ((band.1 / df).floor().min((n / 2) as f64)) as usize;
    let k = (lo..=hi.max(lo))
        .filter(|&k| k < mag.len())
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .unwrap_or(lo.min(mag.len() - 1));
    let offset = if k > 0 && k + 1 < mag.len() && mag[k] > 0.0 {
        let (a, b, c) = (
            mag[k - 1].max(f64::MIN_POSITIVE).ln(),
            mag[k].ln(),
            mag[k + 1].max(f64::MIN_POSITIVE).ln(),
        );
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            (0.5 * (a - c) / den).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let dominant_freq = ((k as f64 + offset) * df).clamp(0.0, 0.5 / dt);
    let amplitude = 2.0 * mag[k] / hann.iter().sum::<f64>();

    let env = band_envelope(&xd, dt, dominant_freq, 0.3 * dominant_freq.max(df));
    let growth_rate = log_slope(t, &env);
    Ok(FftReport {
        dominant_freq,
        amplitude,
        window,
        growth_rate,
    })
}

/// Magnitude of the analytic signal of `x` restricted to `f0 ± half_width`
/// Hz (ideal band-pass in the frequency domain).
pub fn band_envelope(x: &[f64], dt: f64, f0: f64, half_width: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let df = 1.0 / (n as f64 * dt);
    let mut spec = spectrum(x);
    for (k, c) in spec.iter_mut().enumerate() {
        let f = k as f64 * df;
        let keep = k > 0 && k <= n / 2 && (f - f0).abs() <= half_width;
        *c = if keep { *c * 2.0 } else { Complex::new(0.0, 0.0) };
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.norm() / n as f64).collect()
}

/// Least-squares slope of `ln env` against `t`, ignoring the outer 10% at
/// each end where the band-pass rings.
pub fn log_slope(t: &[f64], env: &[f64]) -> f64 {
    let n = env.len();
    let skip = n / 10;
    let pts: Vec<(f64, f64)> = t[skip..n - skip]
        .iter()
        .zip(&env[skip..n - skip])
        .filter(|(_, e)| **e > 0.0)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in &pts {
        sxy += (a - tm) * (b - ym);
        sxx += (a - tm) * (a - tm);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Envelope of `signal` over `window` around `f0` Hz, with its time axis.
pub fn envelope(
    tr: &SimTrace,
    signal: Signal,
    window: (f64, f64),
    f0: f64,
) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
    let (t, x) = segment(tr, signal, window)?;
    let env = band_envelope(&detrend(x), tr.sample_interval(), f0, 0.3 * f0);
    Ok((t.to_vec(), env))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: f64, sigma: f64, dt: f64, n: usize) -> SimTrace {
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let x = t
            .iter()
            .map(|&t| (sigma * t).exp() * (2.0 * PI * f * t + 0.3).sin() + 0.2 + 0.1 * t)
            .collect();
        SimTrace {
            t,
            signals: vec![(Signal::Q, x)],
            diverged_at: None,
        }
    }

    #[test]
    fn unit_sinusoid_830_hz() {
        let dt = 5e-6;
        let tr = synthetic(830.0, 0.0, dt, 40_000);
        let r = dominant_frequency(&tr, Signal::Q, (0.0, 0.2)).unwrap();
        let bin = 1.0 / (40_000.0 * dt);
        assert!((r.dominant_freq - 830.0).abs() < bin, "{}", r.dominant_freq);
        assert!((r.amplitude - 1.0).abs() < 0.2, "{}", r.amplitude);
        assert!(r.growth_rate.abs() < 0.5, "{}", r.growth_rate);
    }

    #[test]
    fn growth_rate_recovered() {
        let tr = synthetic(720.0, 3.0, 1e-4, 20_000);
        let r = dominant_frequency(&tr, Signal::Q, (0.0, 2.0)).unwrap();
        assert!((r.growth_rate - 3.0).abs() < 0.1, "{}", r.growth_rate);
        let tr = synthetic(720.0, -2.0, 1e-4, 20_000);
        let r = dominant_frequency(&tr, Signal::Q, (0.0, 2.0)).unwrap();
        assert!((r.growth_rate + 2.0).abs() < 0.1, "{}", r.growth_rate);
    }

    #[test]
    fn short_window_rejected() {
        let tr = synthetic(100.0, 0.0, 1e-3, 2000);
        assert!(matches!(
            dominant_frequency(&tr, Signal::Q, (0.0, 0.5)),
            Err(SpectralError::WindowTooShort { .. })
        ));
        assert!(matches!(
            dominant_frequency(&tr, Signal::P, (0.0, 1.5)),
            Err(SpectralError::MissingSignal(Signal::P))
        ));
    }
}
