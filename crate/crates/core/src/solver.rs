//! Maxwell-Bloch integration through a cascade of targets.
//!
//! Each target carries the nuclear polarization ρ_eg on a uniform grid across
//! its thickness. The field transit time is negligible against the
//! second-scale dynamics, so at any instant the field inside a target is the
//! spatial integral of the current polarization:
//!
//! ```text
//! dρ/dt = -(Γ0/2 + γ + iΔ) ρ + (i/2) Ω
//! dΩ/dx = i η ρ
//! ```
//!
//! The output of target n is the input of target n + 1. Time stepping is
//! classic RK4 on the polarization, with the field chain re-evaluated at every
//! stage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detuning::{cos_exact, rotation_angle, transverse_doppler, RotationProtocol, Target};
use crate::error::{Error, Result};
use crate::units::{redshift_gradient, NumericsConvention, PhysicalConstants};

/// Largest phase a detuning may accumulate in one time step (rad).
pub const MAX_PHASE_PER_STEP: f64 = 0.05;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPulse {
    /// Center time (s).
    pub t0: f64,
    /// 1/e half-width of the amplitude (s).
    pub tau_s: f64,
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

fn unit_amplitude() -> f64 {
    1.0
}

impl InputPulse {
    pub fn new(t0: f64, tau_s: f64) -> Self {
        Self {
            t0,
            tau_s,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.tau_s.is_finite() && self.tau_s > 0.0) {
            return Err(Error::config(
                format!("{path}.tau_s"),
                format!("must be > 0, got {}", self.tau_s),
            ));
        }
        if !(self.t0.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::config(path, "t0 and amplitude must be finite"));
        }
        Ok(())
    }
}

/// Ω(t, -L/2) of the first target: amplitude · exp[-((t - t0)/τ_s)^2].
pub fn gaussian_input(t: f64, pulse: &InputPulse) -> Complex64 {
    let u = (t - pulse.t0) / pulse.tau_s;
    Complex64::new(pulse.amplitude * (-u * u).exp(), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self { t_end, dt }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(
                format!("{path}.dt"),
                format!("must be > 0, got {}", self.dt),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config(
                format!("{path}.t_end"),
                format!("must be > 0, got {}", self.t_end),
            ));
        }
        let n = self.t_end / self.dt;
        if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::config(
                format!("{path}.dt"),
                format!("t_end / dt = {n} is not an integer"),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|i| self.time(i)).collect()
    }
}

/// Field envelope sampled on a uniform time grid at one boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    pub times: Vec<f64>,
    pub omega: Vec<Complex64>,
}

impl BoundaryRecord {
    pub fn new(times: Vec<f64>, omega: Vec<Complex64>) -> Result<Self> {
        if times.len() != omega.len() {
            return Err(Error::InvalidInput(format!(
                "record has {} times but {} samples",
                times.len(),
                omega.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput(
                "record needs at least two samples".into(),
            ));
        }
        Ok(Self { times, omega })
    }

    /// Sample a function of time on a grid.
    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let times = grid.times();
        let omega = times.iter().map(|&t| f(t)).collect();
        Self { times, omega }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn intensity(&self) -> impl Iterator<Item = f64> + '_ {
        self.omega.iter().map(|w| w.norm_sqr())
    }

    /// Linear interpolation; zero outside the record span.
    pub fn sample(&self, t: f64) -> Complex64 {
        let dt = self.dt();
        let pos = (t - self.start()) / dt;
        if pos < 0.0 || pos > (self.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.len() {
            return self.omega[self.len() - 1];
        }
        let frac = pos - i as f64;
        self.omega[i] * (1.0 - frac) + self.omega[i + 1] * frac
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            times: self.times.clone(),
            omega: self.omega.iter().map(|w| w * s).collect(),
        }
    }
}

/// ρ_eg on every node of every target.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationState {
    pub targets: Vec<Vec<Complex64>>,
}

impl PolarizationState {
    pub fn zeros(targets: &[Target]) -> Self {
        Self {
            targets: targets
                .iter()
                .map(|t| vec![Complex64::new(0.0, 0.0); t.n_x])
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.targets
            .iter()
            .flatten()
            .map(|r| r.norm())
            .fold(0.0, f64::max)
    }
}

/// dρ/dt = -(Γ0/2 + γ + iΔ) ρ + (i/2) Ω.
pub fn polarization_rhs(
    rho: Complex64,
    omega: Complex64,
    delta: f64,
    conv: &NumericsConvention,
) -> Complex64 {
    -Complex64::new(conv.dephasing_rate(), delta) * rho + 0.5 * I * omega
}

/// Field at every node from Ω(-L/2) = `omega_in` and dΩ/dx = iηρ, using the
/// trapezoidal rule on a uniform grid of spacing `dx`.
pub fn propagate_field(
    rho: &[Complex64],
    omega_in: Complex64,
    eta: f64,
    dx: f64,
    out: &mut [Complex64],
) {
    debug_assert_eq!(rho.len(), out.len());
    let step = I * (0.5 * eta * dx);
    let mut acc = omega_in;
    out[0] = acc;
    for j in 1..rho.len() {
        acc += step * (rho[j - 1] + rho[j]);
        out[j] = acc;
    }
}

#[derive(Debug, Clone)]
struct PreparedTarget {
    /// z + x_j at every node.
    positions: Vec<f64>,
    dx: f64,
    eta: f64,
    doppler: f64,
}

/// A validated cascade ready to integrate.
#[derive(Debug, Clone)]
pub struct Cascade {
    targets: Vec<PreparedTarget>,
    protocol: RotationProtocol,
    pulse: InputPulse,
    conv: NumericsConvention,
    gradient: f64,
}

impl Cascade {
    pub fn new(
        targets: &[Target],
        protocol: &RotationProtocol,
        pulse: &InputPulse,
        consts: &PhysicalConstants,
        conv: &NumericsConvention,
    ) -> Result<Self> {
        consts.validate()?;
        if targets.is_empty() {
            return Err(Error::config("targets", "at least one target is required"));
        }
        for (i, t) in targets.iter().enumerate() {
            t.validate(&format!("targets[{i}]"))?;
        }
        protocol.validate("protocol")?;
        pulse.validate("pulse")?;
        let prepared = targets
            .iter()
            .map(|t| {
                Ok(PreparedTarget {
                    positions: t.grid().iter().map(|x| t.z + x).collect(),
                    dx: t.spacing(),
                    eta: t.coupling(conv),
                    doppler: transverse_doppler(t.speed, consts)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            targets: prepared,
            protocol: protocol.clone(),
            pulse: *pulse,
            conv: *conv,
            gradient: redshift_gradient(consts),
        })
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn protocol(&self) -> &RotationProtocol {
        &self.protocol
    }

    /// Upper bound of |Δ| at any node over the whole protocol.
    pub fn max_detuning(&self) -> f64 {
        let cos_max = self.protocol.max_abs_cos();
        self.targets
            .iter()
            .map(|t| {
                let reach = t.positions.iter().map(|p| p.abs()).fold(0.0, f64::max);
                self.gradient * reach * cos_max + t.doppler.abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn check_resolution(&self, dt: f64) -> Result<()> {
        let max_detuning = self.max_detuning();
        let phase = dt * max_detuning;
        if phase > MAX_PHASE_PER_STEP {
            return Err(Error::Resolution {
                dt,
                max_detuning,
                phase,
                limit: MAX_PHASE_PER_STEP,
            });
        }
        Ok(())
    }

    /// Field at every node of every target, given ρ and the time.
    pub fn fields(&self, state: &PolarizationState, t: f64, out: &mut [Vec<Complex64>]) {
        let mut omega = gaussian_input(t, &self.pulse);
        for ((target, rho), profile) in self.targets.iter().zip(&state.targets).zip(out.iter_mut())
        {
            propagate_field(rho, omega, target.eta, target.dx, profile);
            omega = profile[profile.len() - 1];
        }
    }

    fn derivative(
        &self,
        state: &PolarizationState,
        t: f64,
        fields: &mut [Vec<Complex64>],
        out: &mut [Vec<Complex64>],
    ) {
        self.fields(state, t, fields);
        let cos = cos_exact(rotation_angle(t, &self.protocol));
        for (n, target) in self.targets.iter().enumerate() {
            let rho = &state.targets[n];
            let field = &fields[n];
            for (j, d) in out[n].iter_mut().enumerate() {
                let delta = -self.gradient * target.positions[j] * cos + target.doppler;
                *d = polarization_rhs(rho[j], field[j], delta, &self.conv);
            }
        }
    }

    /// One RK4 step from t to t + dt, in place.
    pub fn advance_step(&self, state: &mut PolarizationState, t: f64, dt: f64) -> Result<()> {
        let zeros = |s: &PolarizationState| -> Vec<Vec<Complex64>> {
            s.targets
                .iter()
                .map(|v| vec![Complex64::new(0.0, 0.0); v.len()])
                .collect()
        };
        let mut fields = zeros(state);
        let mut k1 = zeros(state);
        let mut k2 = zeros(state);
        let mut k3 = zeros(state);
        let mut k4 = zeros(state);
        let mut stage = state.clone();

        let combine = |stage: &mut PolarizationState, k: &[Vec<Complex64>], h: f64| {
            for ((s, base), kn) in stage.targets.iter_mut().zip(&state.targets).zip(k) {
                for ((sj, bj), kj) in s.iter_mut().zip(base).zip(kn) {
                    *sj = bj + kj * h;
                }
            }
        };

        self.derivative(state, t, &mut fields, &mut k1);
        combine(&mut stage, &k1, 0.5 * dt);
        self.derivative(&stage, t + 0.5 * dt, &mut fields, &mut k2);
        combine(&mut stage, &k2, 0.5 * dt);
        self.derivative(&stage, t + 0.5 * dt, &mut fields, &mut k3);
        combine(&mut stage, &k3, dt);
        self.derivative(&stage, t + dt, &mut fields, &mut k4);

        let w = dt / 6.0;
        for (n, rho) in state.targets.iter_mut().enumerate() {
            for (j, r) in rho.iter_mut().enumerate() {
                *r += (k1[n][j] + 2.0 * k2[n][j] + 2.0 * k3[n][j] + k4[n][j]) * w;
                if !(r.re.is_finite() && r.im.is_finite()) {
                    return Err(Error::NumericalFailure {
                        time: t + dt,
                        target: n + 1,
                        node: j,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Keep ρ_eg at every time sample (memory grows as n_t · n_x · n_targets).
    pub keep_polarization: bool,
}

#[derive(Debug, Clone)]
pub struct CascadeRun {
    /// Ω_n(t, -L/2) for each target.
    pub inputs: Vec<BoundaryRecord>,
    /// Ω_n(t, +L/2) for each target.
    pub outputs: Vec<BoundaryRecord>,
    /// θ(t) on the same samples.
    pub theta: Vec<f64>,
    pub polarization: Option<Vec<PolarizationState>>,
}

impl CascadeRun {
    /// Input of the first target.
    pub fn input(&self) -> &BoundaryRecord {
        &self.inputs[0]
    }

    /// Output of the last target.
    pub fn output(&self) -> &BoundaryRecord {
        &self.outputs[self.outputs.len() - 1]
    }
}

pub fn simulate_cascade(
    targets: &[Target],
    protocol: &RotationProtocol,
    pulse: &InputPulse,
    grid: &TimeGrid,
    consts: &PhysicalConstants,
    conv: &NumericsConvention,
    options: SimulationOptions,
) -> Result<CascadeRun> {
    grid.validate("grid")?;
    let cascade = Cascade::new(targets, protocol, pulse, consts, conv)?;
    cascade.check_resolution(grid.dt)?;

    let n_t = grid.n_steps() + 1;
    let n_targets = targets.len();
    let times = grid.times();
    let mut inputs = vec![Vec::with_capacity(n_t); n_targets];
    let mut outputs = vec![Vec::with_capacity(n_t); n_targets];
    let mut theta = Vec::with_capacity(n_t);
    let mut history = options.keep_polarization.then(|| Vec::with_capacity(n_t));

    let mut state = PolarizationState::zeros(targets);
    let mut fields: Vec<Vec<Complex64>> = targets
        .iter()
        .map(|t| vec![Complex64::new(0.0, 0.0); t.n_x])
        .collect();

    for (i, &t) in times.iter().enumerate() {
        cascade.fields(&state, t, &mut fields);
        for n in 0..n_targets {
            inputs[n].push(fields[n][0]);
            outputs[n].push(fields[n][fields[n].len() - 1]);
        }
        theta.push(rotation_angle(t, protocol));
        if let Some(h) = history.as_mut() {
            h.push(state.clone());
        }
        if i + 1 < n_t {
            cascade.advance_step(&mut state, t, grid.dt)?;
        }
    }

    let wrap = |v: Vec<Vec<Complex64>>| -> Vec<BoundaryRecord> {
        v.into_iter()
            .map(|omega| BoundaryRecord {
                times: times.clone(),
                omega,
            })
            .collect()
    };
    Ok(CascadeRun {
        inputs: wrap(inputs),
        outputs: wrap(outputs),
        theta,
        polarization: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gaussian_peak_and_width() {
        let p = InputPulse::new(300.0, 100.0);
        assert_eq!(gaussian_input(300.0, &p), c(1.0, 0.0));
        let e = (-1.0f64).exp();
        assert!((gaussian_input(200.0, &p).re - e).abs() < 1e-15);
        assert!((gaussian_input(400.0, &p).re - e).abs() < 1e-15);
        assert_eq!(gaussian_input(400.0, &p).im, 0.0);
    }

    #[test]
    fn rhs_zero_and_steady_state() {
        let conv = NumericsConvention::default();
        assert_eq!(
            polarization_rhs(c(0.0, 0.0), c(0.0, 0.0), 0.3, &conv),
            c(0.0, 0.0)
        );
        let omega = c(0.7, -0.2);
        let delta = 0.05;
        let rho_ss = 0.5 * I * omega / c(conv.dephasing_rate(), delta);
        assert!(polarization_rhs(rho_ss, omega, delta, &conv).norm() < 1e-15);
    }

    #[test]
    fn transparent_medium() {
        let rho = vec![c(0.3, 0.1); 8];
        let mut out = vec![c(0.0, 0.0); 8];
        propagate_field(&rho, c(0.5, 0.5), 0.0, 0.01, &mut out);
        assert!(out.iter().all(|&w| w == c(0.5, 0.5)));
    }

    #[test]
    fn uniform_polarization_closed_form() {
        let rho0 = c(0.02, -0.01);
        let eta = 3.7;
        let length = 0.001;
        let n = 16;
        let rho = vec![rho0; n];
        let mut out = vec![c(0.0, 0.0); n];
        propagate_field(&rho, c(1.0, 0.0), eta, length / (n - 1) as f64, &mut out);
        assert_eq!(out[0], c(1.0, 0.0));
        let expected = c(1.0, 0.0) + I * eta * rho0 * length;
        assert!((out[n - 1] - expected).norm() < 1e-15);
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(250.0, 0.02).validate("grid").is_ok());
        assert_eq!(TimeGrid::new(250.0, 0.02).n_steps(), 12_500);
        assert!(TimeGrid::new(250.0, 0.03).validate("grid").is_err());
        assert!(TimeGrid::new(250.0, 0.0).validate("grid").is_err());
    }

    #[test]
    fn record_sampling() {
        let r = BoundaryRecord::new(
            vec![0.0, 1.0, 2.0],
            vec![c(0.0, 0.0), c(2.0, 0.0), c(0.0, 4.0)],
        )
        .unwrap();
        assert_eq!(r.sample(0.5), c(1.0, 0.0));
        assert_eq!(r.sample(1.5), c(1.0, 2.0));
        assert_eq!(r.sample(-0.1), c(0.0, 0.0));
        assert_eq!(r.sample(2.0), c(0.0, 4.0));
        assert!(BoundaryRecord::new(vec![0.0, 1.0], vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn resolution_guard_names_offenders() {
        let targets = vec![Target::new(1, 0.16, 1e-4, 10.0, 4)];
        let err = simulate_cascade(
            &targets,
            &RotationProtocol::default(),
            &InputPulse::new(50.0, 10.0),
            &TimeGrid::new(100.0, 0.5),
            &PhysicalConstants::default(),
            &NumericsConvention::default(),
            SimulationOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Resolution {
                dt, max_detuning, ..
            } => {
                assert_eq!(dt, 0.5);
                assert!(max_detuning > 0.2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quarter_turn_removes_resolution_limit() {
        let targets = vec![Target::new(1, 0.16, 1e-4, 10.0, 4)];
        let cascade = Cascade::new(
            &targets,
            &RotationProtocol::constant(FRAC_PI_2),
            &InputPulse::new(50.0, 10.0),
            &PhysicalConstants::default(),
            &NumericsConvention::default(),
        )
        .unwrap();
        assert_eq!(cascade.max_detuning(), 0.0);
        let inverted = Cascade::new(
            &targets,
            &RotationProtocol::steps(FRAC_PI_2, &[(10.0, PI)]),
            &InputPulse::new(50.0, 10.0),
            &PhysicalConstants::default(),
            &NumericsConvention::default(),
        )
        .unwrap();
        assert!(inverted.max_detuning() > 0.2);
    }

    #[test]
    fn non_finite_state_is_reported() {
        let targets = vec![Target::new(1, 0.0, 1e-3, 1.0, 3)];
        let cascade = Cascade::new(
            &targets,
            &RotationProtocol::default(),
            &InputPulse::new(50.0, 10.0),
            &PhysicalConstants::default(),
            &NumericsConvention::default(),
        )
        .unwrap();
        let mut state = PolarizationState::zeros(&targets);
        state.targets[0][1] = c(f64::NAN, 0.0);
        match cascade.advance_step(&mut state, 3.0, 0.02) {
            Err(Error::NumericalFailure { time, target, node }) => {
                assert!((time - 3.02).abs() < 1e-12);
                assert_eq!(target, 1);
                assert_eq!(node, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
