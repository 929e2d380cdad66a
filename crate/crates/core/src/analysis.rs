//! Observables computed from boundary records: normalized spectra, echo
//! windows, efficiency and fidelity, and zero crossings of the field.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::solver::BoundaryRecord;

/// Peaks weaker than this fraction of the input peak intensity are ignored.
pub const ECHO_THRESHOLD: f64 = 1e-4;
/// A record whose final amplitude exceeds this fraction of its peak is flagged as truncated.
pub const TRUNCATION_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Requested angular-frequency spacing (rad/s).
    pub resolution: f64,
    /// Half-width of the reported band (rad/s).
    pub band: f64,
    /// Minimum zero-padding factor.
    pub min_padding: usize,
}

impl SpectrumOptions {
    /// 0.1 Γ0 spacing over ±1000 Γ0.
    pub fn for_linewidth(gamma0: f64) -> Self {
        Self {
            resolution: 0.1 * gamma0,
            band: 1000.0 * gamma0,
            min_padding: 8,
        }
    }
}

/// Continuous Fourier transform ∫Ω(t) e^{iωt} dt of a record, sampled on an
/// ascending ω grid.
#[derive(Debug, Clone)]
pub struct FourierTransform {
    pub omega: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FourierTransform {
    pub fn spacing(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }
}

/// Transform length: a power of two at least `min_padding` times the record
/// and long enough for the requested ω spacing.
pub fn padded_length(n: usize, dt: f64, options: &SpectrumOptions) -> usize {
    let by_resolution = (2.0 * PI / (options.resolution * dt)).ceil() as usize;
    (n * options.min_padding.max(1))
        .max(by_resolution)
        .next_power_of_two()
}

pub fn fourier_transform(record: &BoundaryRecord, padded_len: usize) -> Result<FourierTransform> {
    let n = record.len();
    if padded_len < n {
        return Err(Error::InvalidInput(format!(
            "padded length {padded_len} shorter than record ({n})"
        )));
    }
    let dt = record.dt();
    let mut buf = vec![Complex64::new(0.0, 0.0); padded_len];
    buf[..n].copy_from_slice(&record.omega);
    // rustfft's inverse transform carries the e^{+i...} kernel, unnormalized.
    FftPlanner::new()
        .plan_fft_inverse(padded_len)
        .process(&mut buf);

    let d_omega = 2.0 * PI / (padded_len as f64 * dt);
    let half = padded_len / 2;
    let t_start = record.start();
    let mut omega = Vec::with_capacity(padded_len);
    let mut values = Vec::with_capacity(padded_len);
    for shifted in 0..padded_len {
        // ascending order: k = -half .. half-1
        let k = shifted as i64 - half as i64;
        let idx = k.rem_euclid(padded_len as i64) as usize;
        let w = k as f64 * d_omega;
        omega.push(w);
        values.push(buf[idx] * dt * Complex64::from_polar(1.0, w * t_start));
    }
    Ok(FourierTransform { omega, values })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrumResult {
    /// Angular frequency (rad/s).
    pub omega: Vec<f64>,
    /// S(ω) = |F[Ω_out]|^2 / max |F[Ω_in]|^2.
    pub s_values: Vec<f64>,
    /// Linewidth used for reporting ω in units of Γ0.
    pub gamma0: f64,
    /// The output record had not decayed by the end of the window.
    pub truncated: bool,
}

impl SpectrumResult {
    pub fn omega_in_gamma0(&self) -> impl Iterator<Item = f64> + '_ {
        self.omega.iter().map(move |w| w / self.gamma0)
    }

    /// Linear interpolation of S at ω (rad/s).
    pub fn at(&self, w: f64) -> f64 {
        let dw = self.omega[1] - self.omega[0];
        let pos = (w - self.omega[0]) / dw;
        if pos <= 0.0 {
            return self.s_values[0];
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.omega.len() {
            return self.s_values[self.omega.len() - 1];
        }
        let f = pos - i as f64;
        self.s_values[i] * (1.0 - f) + self.s_values[i + 1] * f
    }

    /// Local minima (`minima = true`) or maxima of S whose ω lies in `[lo, hi]` (rad/s).
    pub fn extrema_in(&self, lo: f64, hi: f64, minima: bool) -> Vec<(f64, f64)> {
        let s = &self.s_values;
        (1..s.len() - 1)
            .filter(|&i| self.omega[i] >= lo && self.omega[i] <= hi)
            .filter(|&i| {
                if minima {
                    s[i] < s[i - 1] && s[i] <= s[i + 1]
                } else {
                    s[i] > s[i - 1] && s[i] >= s[i + 1]
                }
            })
            .map(|i| (self.omega[i], s[i]))
            .collect()
    }
}

fn check_same_grid(a: &BoundaryRecord, b: &BoundaryRecord) -> Result<()> {
    let same = a.len() == b.len()
        && (a.start() - b.start()).abs() <= 1e-9 * a.dt()
        && (a.dt() - b.dt()).abs() <= 1e-12 * a.dt();
    if same {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "records sampled differently ({} samples, dt {}) vs ({} samples, dt {})",
            a.len(),
            a.dt(),
            b.len(),
            b.dt()
        )))
    }
}

pub fn spectrum(
    output: &BoundaryRecord,
    input: &BoundaryRecord,
    gamma0: f64,
    options: &SpectrumOptions,
) -> Result<SpectrumResult> {
    check_same_grid(output, input)?;
    let len = padded_length(output.len(), output.dt(), options);

    let norm = fourier_transform(input, len)?
        .values
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max);
    if norm <= 0.0 {
        return Err(Error::InvalidInput(
            "input record carries no spectral weight".into(),
        ));
    }
    let out = fourier_transform(output, len)?;

    let (omega, s_values) = out
        .omega
        .iter()
        .zip(&out.values)
        .filter(|(w, _)| w.abs() <= options.band)
        .map(|(&w, v)| (w, v.norm_sqr() / norm))
        .unzip();

    let peak = output.omega.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let last = output.omega[output.len() - 1].norm();
    Ok(SpectrumResult {
        omega,
        s_values,
        gamma0,
        truncated: peak > 0.0 && last > TRUNCATION_THRESHOLD * peak,
    })
}

/// Trapezoidal ∫ f over the samples with a ≤ t ≤ b.
fn window_integral<T>(record: &BoundaryRecord, a: f64, b: f64, f: impl Fn(usize) -> T) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default + Copy,
{
    let eps = 1e-9 * record.dt();
    let idx: Vec<usize> = (0..record.len())
        .filter(|&i| record.times[i] >= a - eps && record.times[i] <= b + eps)
        .collect();
    let mut acc = T::default();
    for pair in idx.windows(2) {
        let h = record.times[pair[1]] - record.times[pair[0]];
        acc = acc + (f(pair[0]) + f(pair[1])) * (0.5 * h);
    }
    acc
}

pub fn energy(record: &BoundaryRecord) -> f64 {
    window_integral(record, record.start(), record.end(), |i| {
        record.omega[i].norm_sqr()
    })
}

pub fn window_energy(record: &BoundaryRecord, a: f64, b: f64) -> f64 {
    window_integral(record, a, b, |i| record.omega[i].norm_sqr())
}

fn check_window(record: &BoundaryRecord, a: f64, b: f64) -> Result<()> {
    if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidInput(format!("empty window [{a}, {b}]")));
    }
    let eps = 1e-9 * record.dt();
    if a < record.start() - eps || b > record.end() + eps {
        return Err(Error::InvalidInput(format!(
            "window [{a}, {b}] outside record span [{}, {}]",
            record.start(),
            record.end()
        )));
    }
    if b - a < record.dt() {
        return Err(Error::InvalidInput(format!(
            "window [{a}, {b}] shorter than one sample"
        )));
    }
    Ok(())
}

/// R = ∫_a^b |Ω_out|^2 dt / ∫ |Ω_in|^2 dt.
pub fn echo_efficiency(
    output: &BoundaryRecord,
    input: &BoundaryRecord,
    window: (f64, f64),
) -> Result<f64> {
    let (a, b) = window;
    check_window(output, a, b)?;
    let e_in = energy(input);
    if e_in <= 0.0 {
        return Err(Error::InvalidInput("input record carries no energy".into()));
    }
    Ok(window_energy(output, a, b) / e_in)
}

/// F = |∫_a^b Ω_in*(t-τ) Ω_out(t) dt|^2 / (∫|Ω_in|^2 dt · ∫_a^b |Ω_out|^2 dt).
pub fn echo_fidelity(
    output: &BoundaryRecord,
    input: &BoundaryRecord,
    window: (f64, f64),
    tau: f64,
) -> Result<f64> {
    let (a, b) = window;
    check_window(output, a, b)?;
    if a - tau < input.start() - input.dt() {
        return Err(Error::InvalidInput(format!(
            "shifted input starts at {} s, before the input record",
            a - tau
        )));
    }
    let e_out = window_energy(output, a, b);
    if e_out <= 0.0 {
        return Err(Error::UndefinedFidelity { a, b });
    }
    let e_in = energy(input);
    if e_in <= 0.0 {
        return Err(Error::InvalidInput("input record carries no energy".into()));
    }
    let overlap = window_integral(output, a, b, |i| {
        input.sample(output.times[i] - tau).conj() * output.omega[i]
    });
    Ok(overlap.norm_sqr() / (e_in * e_out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoMetrics {
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub efficiency: f64,
    pub fidelity: f64,
}

pub fn echo_metrics(
    output: &BoundaryRecord,
    input: &BoundaryRecord,
    m: usize,
    window: (f64, f64),
    tau: f64,
) -> Result<EchoMetrics> {
    Ok(EchoMetrics {
        m,
        a: window.0,
        b: window.1,
        tau,
        efficiency: echo_efficiency(output, input, window)?,
        fidelity: echo_fidelity(output, input, window, tau)?,
    })
}

/// Echo period 2π/Δ of a comb with line spacing Δ (rad/s).
pub fn comb_echo_period(delta_comb: f64) -> Result<f64> {
    if !(delta_comb.is_finite() && delta_comb > 0.0) {
        return Err(Error::InvalidInput(format!(
            "comb spacing must be > 0, got {delta_comb}"
        )));
    }
    Ok(2.0 * PI / delta_comb)
}

/// First `count` zero crossings of Re Ω strictly after `after`, located by
/// linear interpolation between the bracketing samples.
pub fn find_temporal_nodes(record: &BoundaryRecord, after: f64, count: usize) -> Result<Vec<f64>> {
    let mut nodes = Vec::with_capacity(count);
    if count == 0 {
        return Ok(nodes);
    }
    let t = &record.times;
    let re: Vec<f64> = record.omega.iter().map(|w| w.re).collect();
    for i in 0..re.len() - 1 {
        if t[i + 1] <= after {
            continue;
        }
        let (r0, r1) = (re[i], re[i + 1]);
        let node = if r0 * r1 < 0.0 {
            Some(t[i] + (t[i + 1] - t[i]) * r0 / (r0 - r1))
        } else if r1 == 0.0 && r0 != 0.0 {
            Some(t[i + 1])
        } else {
            None
        };
        if let Some(tn) = node.filter(|&tn| tn > after) {
            nodes.push(tn);
            if nodes.len() == count {
                return Ok(nodes);
            }
        }
    }
    Err(Error::InsufficientNodes {
        found: nodes.len(),
        requested: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoWindow {
    pub a: f64,
    pub b: f64,
    /// Delay of the echo peak behind the input peak (s).
    pub tau: f64,
    pub peak_time: f64,
    pub peak_intensity: f64,
}

/// Windows around every intensity peak after `input_end`, each bounded by the
/// nearest local minima of |Ω_out|^2 (or by `input_end` and the record end).
pub fn detect_echo_window(
    output: &BoundaryRecord,
    input: &BoundaryRecord,
    input_end: f64,
) -> Result<Vec<EchoWindow>> {
    let in_int: Vec<f64> = input.intensity().collect();
    let (in_peak_idx, in_peak) =
        in_int.iter().enumerate().fold(
            (0, 0.0),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        );
    let input_peak_time = input.times[in_peak_idx];
    let threshold = ECHO_THRESHOLD * in_peak;

    let int: Vec<f64> = output.intensity().collect();
    let n = int.len();
    let is_min = |i: usize| i == 0 || i == n - 1 || (int[i] <= int[i - 1] && int[i] <= int[i + 1]);

    // windows never reach back into the input interval
    let first = output
        .times
        .iter()
        .position(|&t| t >= input_end)
        .unwrap_or(n - 1);

    let mut windows = Vec::new();
    for i in 1..n - 1 {
        let t = output.times[i];
        if t <= input_end || int[i] <= threshold || int[i] <= 0.0 {
            continue;
        }
        if !(int[i] > int[i - 1] && int[i] >= int[i + 1]) {
            continue;
        }
        let lo = (first..i).rev().find(|&j| is_min(j)).unwrap_or(first);
        let hi = (i + 1..n).find(|&j| is_min(j)).unwrap_or(n - 1);
        windows.push(EchoWindow {
            a: output.times[lo],
            b: output.times[hi],
            tau: t - input_peak_time,
            peak_time: t,
            peak_intensity: int[i],
        });
    }
    if windows.is_empty() {
        return Err(Error::NoEchoFound { after: input_end });
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{gaussian_input, InputPulse, TimeGrid};

    fn gauss_record(t0: f64) -> BoundaryRecord {
        let p = InputPulse::new(t0, 10.0);
        BoundaryRecord::from_fn(&TimeGrid::new(250.0, 0.02), |t| gaussian_input(t, &p))
    }

    #[test]
    fn self_spectrum_peaks_at_one() {
        let r = gauss_record(50.0);
        let s = spectrum(
            &r,
            &r,
            1.0 / 1740.0,
            &SpectrumOptions::for_linewidth(1.0 / 1740.0),
        )
        .unwrap();
        let (i, max) =
            s.s_values
                .iter()
                .enumerate()
                .fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        assert!((max - 1.0).abs() < 1e-12);
        assert!(s.omega[i].abs() < 1e-12);
        assert!(s.omega[1] - s.omega[0] <= 0.1 / 1740.0);
        assert!(!s.truncated);
    }

    #[test]
    fn transform_matches_analytic_gaussian() {
        // ∫ exp(-(t-t0)^2/τ^2) e^{iωt} dt = τ√π exp(-ω^2τ^2/4) e^{iωt0}
        let r = gauss_record(50.0);
        let ft = fourier_transform(&r, 1 << 16).unwrap();
        for k in [0usize, 32_700, 32_800, 33_000] {
            let w = ft.omega[k];
            let exact =
                Complex64::from_polar(10.0 * PI.sqrt() * (-w * w * 100.0 / 4.0).exp(), w * 50.0);
            assert!((ft.values[k] - exact).norm() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = gauss_record(50.0);
        let b = BoundaryRecord::from_fn(&TimeGrid::new(100.0, 0.02), |_| Complex64::new(1.0, 0.0));
        assert!(spectrum(&a, &b, 1.0, &SpectrumOptions::for_linewidth(1.0)).is_err());
    }

    #[test]
    fn identity_efficiency_and_fidelity() {
        let r = gauss_record(50.0);
        assert!((echo_efficiency(&r, &r, (0.0, 250.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((echo_fidelity(&r, &r, (0.0, 250.0), 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(echo_efficiency(&r, &r, (100.0, 100.0)).is_err());
    }

    #[test]
    fn delayed_copy_has_unit_fidelity() {
        let input = gauss_record(50.0);
        let output = gauss_record(103.8);
        let f = echo_fidelity(&output, &input, (60.0, 150.0), 53.8).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{f}");
        let r = echo_efficiency(&output, &input, (60.0, 150.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fidelity_undefined_without_output() {
        let input = gauss_record(50.0);
        let zero = input.scaled(Complex64::new(0.0, 0.0));
        assert!(matches!(
            echo_fidelity(&zero, &input, (80.0, 130.0), 53.8),
            Err(Error::UndefinedFidelity { .. })
        ));
    }

    #[test]
    fn comb_period() {
        let g0 = 1.0 / 1740.0;
        assert!((comb_echo_period(193.8 * g0).unwrap() - 56.4).abs() < 0.05);
        let p = comb_echo_period(0.2).unwrap();
        assert!((comb_echo_period(0.4).unwrap() - p / 2.0).abs() < 1e-15);
        assert!(comb_echo_period(0.0).is_err());
        assert!(comb_echo_period(-1.0).is_err());
    }

    #[test]
    fn nodes_of_decaying_cosine() {
        let w0 = 0.7;
        let r = BoundaryRecord::from_fn(&TimeGrid::new(30.0, 0.01), |t| {
            Complex64::new((-0.1 * t).exp() * (w0 * t).cos(), 0.0)
        });
        let nodes = find_temporal_nodes(&r, 0.0, 5).unwrap();
        for (k, tn) in nodes.iter().enumerate() {
            let exact = (2 * k + 1) as f64 * PI / (2.0 * w0);
            assert!((tn - exact).abs() < 0.01, "{tn} vs {exact}");
        }
        assert!(find_temporal_nodes(&r, 0.0, 0).unwrap().is_empty());
        match find_temporal_nodes(&r, 0.0, 100) {
            Err(Error::InsufficientNodes { found, requested }) => {
                assert_eq!(requested, 100);
                assert_eq!(found, 7);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_echo_in_silent_output() {
        let input = gauss_record(50.0);
        let silent = input.scaled(Complex64::new(0.0, 0.0));
        assert!(matches!(
            detect_echo_window(&silent, &input, 75.0),
            Err(Error::NoEchoFound { .. })
        ));
    }

    #[test]
    fn two_gaussians_two_windows() {
        let input = gauss_record(50.0);
        let p1 = InputPulse {
            t0: 110.0,
            tau_s: 8.0,
            amplitude: 0.6,
        };
        let p2 = InputPulse {
            t0: 170.0,
            tau_s: 8.0,
            amplitude: 0.3,
        };
        let out = BoundaryRecord::from_fn(&TimeGrid::new(250.0, 0.02), |t| {
            gaussian_input(t, &p1) + gaussian_input(t, &p2)
        });
        let w = detect_echo_window(&out, &input, 75.0).unwrap();
        assert_eq!(w.len(), 2);
        assert!((w[0].peak_time - 110.0).abs() < 0.05);
        assert!((w[1].peak_time - 170.0).abs() < 0.05);
        assert!((w[0].tau - 60.0).abs() < 0.05);
        assert!(w[0].a < 110.0 && w[0].b > 110.0 && w[0].b < 170.0);
        assert!(w[1].a > 110.0 && w[1].a < 170.0 && w[1].b > 170.0);
        assert_eq!(w[0].b, w[1].a);
    }
}
