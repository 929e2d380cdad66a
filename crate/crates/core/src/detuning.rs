//! Gravitational detuning of each target under rotation, plus the transverse
//! Doppler shift of a moving target.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{NumericsConvention, PhysicalConstants};

/// One doped slab in the vertical stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    /// 1-based position in the propagation order.
    pub index: usize,
    /// Initial altitude of the target center relative to the rotation center (m).
    pub z: f64,
    /// Thickness along the propagation axis (m).
    pub thickness: f64,
    /// Optical depth ξ.
    pub optical_depth: f64,
    /// Spatial grid nodes across the thickness.
    pub n_x: usize,
    /// Tangential speed (m/s).
    #[serde(default)]
    pub speed: f64,
}

impl Target {
    pub fn new(index: usize, z: f64, thickness: f64, optical_depth: f64, n_x: usize) -> Self {
        Self {
            index,
            z,
            thickness,
            optical_depth,
            n_x,
            speed: 0.0,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(Error::config(
                format!("{path}.thickness"),
                format!("must be > 0, got {}", self.thickness),
            ));
        }
        // ξ = 0 is a transparent slab and is allowed.
        if !(self.optical_depth.is_finite() && self.optical_depth >= 0.0) {
            return Err(Error::config(
                format!("{path}.optical_depth"),
                format!("must be >= 0, got {}", self.optical_depth),
            ));
        }
        if self.n_x < 2 {
            return Err(Error::config(
                format!("{path}.n_x"),
                format!("need at least 2 nodes, got {}", self.n_x),
            ));
        }
        if !self.z.is_finite() {
            return Err(Error::config(format!("{path}.z"), "must be finite"));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(Error::config(
                format!("{path}.speed"),
                format!("must be >= 0, got {}", self.speed),
            ));
        }
        Ok(())
    }

    /// Light-nucleus coupling η = Γ0 ξ / (2L) (rad s^-1 m^-1).
    pub fn coupling(&self, conv: &NumericsConvention) -> f64 {
        conv.gamma0 * self.optical_depth / (2.0 * self.thickness)
    }

    /// Node positions x_j on [-L/2, L/2].
    pub fn grid(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_x)
            .map(|j| -0.5 * self.thickness + j as f64 * h)
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        self.thickness / (self.n_x - 1) as f64
    }
}

/// Δ = -K (z + x) cos θ.
pub fn detuning(z: f64, x: f64, theta: f64, gradient: f64) -> f64 {
    -gradient * (z + x) * cos_exact(theta)
}

/// cos θ with exact zeros at odd multiples of π/2 so that a quarter turn
/// freezes the phase evolution exactly.
pub fn cos_exact(theta: f64) -> f64 {
    let turns = theta / (0.5 * PI);
    let nearest = turns.round();
    if (turns - nearest).abs() < 1e-12 {
        match (nearest as i64).rem_euclid(4) {
            0 => 1.0,
            1 | 3 => 0.0,
            _ => -1.0,
        }
    } else {
        theta.cos()
    }
}

/// δ = -(E_t / 2ħ)(v/c)^2 (rad/s).
pub fn transverse_doppler(speed: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "speed must be finite and >= 0, got {speed}"
        )));
    }
    if speed >= consts.c {
        return Err(Error::InvalidInput(format!(
            "speed {speed} m/s is not below c"
        )));
    }
    let beta = speed / consts.c;
    Ok(-0.5 * consts.transition_frequency() * beta * beta)
}

/// Speed at which the transverse Doppler shift equals the gravitational
/// detuning at altitude `z`: v_c = sqrt(2 G M_E |z|) / R_E.
pub fn critical_speed(z: f64, consts: &PhysicalConstants) -> Result<f64> {
    if z == 0.0 || !z.is_finite() {
        return Err(Error::InvalidInput(format!(
            "critical speed undefined at z = {z}"
        )));
    }
    Ok((2.0 * consts.g * consts.m_earth * z.abs()).sqrt() / consts.r_earth)
}

/// r_s = |δ/Δ| = v^2 R_E^2 / (2 G M_E |z|).
pub fn shift_ratio(speed: f64, z: f64, consts: &PhysicalConstants) -> Result<f64> {
    if z == 0.0 || !z.is_finite() {
        return Err(Error::InvalidInput(format!(
            "shift ratio undefined at z = {z}"
        )));
    }
    Ok(speed * speed * consts.r_earth * consts.r_earth
        / (2.0 * consts.g * consts.m_earth * z.abs()))
}

/// One switch of the polar angle: starting at `t_switch`, θ moves linearly to
/// `theta` over `ramp` seconds (instantly when `ramp == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_switch: f64,
    pub theta: f64,
    #[serde(default)]
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationProtocol {
    #[serde(default)]
    pub initial_theta: f64,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

impl RotationProtocol {
    pub fn constant(theta: f64) -> Self {
        Self {
            initial_theta: theta,
            segments: Vec::new(),
        }
    }

    /// Instantaneous switches, each `(t_switch, theta)`.
    pub fn steps(initial_theta: f64, switches: &[(f64, f64)]) -> Self {
        Self {
            initial_theta,
            segments: switches
                .iter()
                .map(|&(t_switch, theta)| Segment {
                    t_switch,
                    theta,
                    ramp: 0.0,
                })
                .collect(),
        }
    }

    pub fn with_ramp(mut self, ramp: f64) -> Self {
        for s in &mut self.segments {
            s.ramp = ramp;
        }
        self
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !self.initial_theta.is_finite() {
            return Err(Error::config(
                format!("{path}.initial_theta"),
                "must be finite",
            ));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let p = format!("{path}.segments[{i}]");
            if !(s.t_switch.is_finite() && s.theta.is_finite()) {
                return Err(Error::config(p, "time and angle must be finite"));
            }
            if !(s.ramp.is_finite() && s.ramp >= 0.0) {
                return Err(Error::config(
                    format!("{p}.ramp"),
                    format!("must be >= 0, got {}", s.ramp),
                ));
            }
            if let Some(next) = self.segments.get(i + 1) {
                if next.t_switch <= s.t_switch {
                    return Err(Error::config(
                        format!("{path}.segments[{}].t_switch", i + 1),
                        "switch times must be strictly increasing",
                    ));
                }
                if s.t_switch + s.ramp > next.t_switch {
                    return Err(Error::config(
                        format!("{p}.ramp"),
                        format!(
                            "ramp ends at {} s, after the next switch at {} s",
                            s.t_switch + s.ramp,
                            next.t_switch
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest |cos θ| visited anywhere in the schedule.
    pub fn max_abs_cos(&self) -> f64 {
        let mut best = cos_exact(self.initial_theta).abs();
        let mut prev = self.initial_theta;
        for s in &self.segments {
            let (lo, hi) = if prev <= s.theta {
                (prev, s.theta)
            } else {
                (s.theta, prev)
            };
            let value = if s.ramp > 0.0 && (lo / PI).ceil() <= (hi / PI).floor() {
                // the ramp sweeps through a multiple of π
                1.0
            } else {
                cos_exact(lo).abs().max(cos_exact(hi).abs())
            };
            best = best.max(value);
            prev = s.theta;
        }
        best
    }
}

/// θ(t) for a protocol: piecewise linear, right-continuous at zero-length ramps.
pub fn rotation_angle(t: f64, protocol: &RotationProtocol) -> f64 {
    let mut theta = protocol.initial_theta;
    for s in &protocol.segments {
        if t < s.t_switch {
            break;
        }
        if s.ramp > 0.0 && t < s.t_switch + s.ramp {
            let frac = (t - s.t_switch) / s.ramp;
            return theta + frac * (s.theta - theta);
        }
        theta = s.theta;
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{redshift_gradient, NumericsConvention};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn k() -> f64 {
        redshift_gradient(&PhysicalConstants::default())
    }

    #[test]
    fn reference_detunings() {
        let conv = NumericsConvention::default();
        let d1 = conv.in_gamma0(detuning(-0.044, 0.0, 0.0, k()));
        assert!((d1 - 106.6).abs() < 0.5, "{d1}");
        let d4 = conv.in_gamma0(detuning(0.08, 0.0, 0.0, k()));
        assert!((d4 + 193.8).abs() < 0.5, "{d4}");
    }

    #[test]
    fn quarter_turn_is_exactly_zero() {
        assert_eq!(detuning(0.16, 0.00005, FRAC_PI_2, k()), 0.0);
        assert_eq!(detuning(-0.16, 0.0, 3.0 * FRAC_PI_2, k()), 0.0);
    }

    #[test]
    fn spread_across_thick_target() {
        let conv = NumericsConvention::default();
        let spread = detuning(0.0, -0.024, 0.0, k()) - detuning(0.0, 0.024, 0.0, k());
        // K * 4.8 cm = 116.2 Gamma0 with the default constants
        assert!((conv.in_gamma0(spread) - 116.0).abs() < 0.5);
    }

    #[test]
    fn doppler_values() {
        let consts = PhysicalConstants::default();
        assert_eq!(transverse_doppler(0.0, &consts).unwrap(), 0.0);
        // -(8.4 eV / 2 hbar) (1.77 / c)^2 = -0.2224276 rad/s
        let d = transverse_doppler(1.77, &consts).unwrap();
        assert!((d + 0.222_427_6).abs() < 1e-6, "{d}");
        let d2 = transverse_doppler(3.54, &consts).unwrap();
        assert!((d2 / d - 4.0).abs() < 1e-12);
        assert!(transverse_doppler(consts.c, &consts).is_err());
    }

    #[test]
    fn critical_speed_values() {
        let consts = PhysicalConstants::default();
        let v = critical_speed(0.16, &consts).unwrap();
        assert!((v - 1.77).abs() < 0.01);
        let v4 = critical_speed(0.64, &consts).unwrap();
        assert!((v4 / v - 2.0).abs() < 1e-12);
        assert_eq!(critical_speed(-0.16, &consts).unwrap(), v);
        assert!(critical_speed(0.0, &consts).is_err());
        assert!((shift_ratio(v, 0.16, &consts).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(shift_ratio(0.0, 0.16, &consts).unwrap(), 0.0);
        assert!((shift_ratio(1.77, 0.16, &consts).unwrap() - 1.0).abs() < 0.01);
        assert!(shift_ratio(1.0, 0.0, &consts).is_err());
    }

    #[test]
    fn doppler_cancels_or_doubles_gravity() {
        let consts = PhysicalConstants::default();
        let delta = transverse_doppler(1.77, &consts).unwrap();
        let below = detuning(-0.16, 0.0, 0.0, k());
        assert!((below + delta).abs() < 0.01 * below.abs());
        let above = detuning(0.16, 0.0, 0.0, k());
        assert!(((above + delta) / above - 2.0).abs() < 0.02);
    }

    #[test]
    fn empty_protocol_holds_initial_angle() {
        let p = RotationProtocol::constant(0.3);
        for t in [0.0, 10.0, 1e6] {
            assert_eq!(rotation_angle(t, &p), 0.3);
        }
    }

    #[test]
    fn step_protocol() {
        let p = RotationProtocol::steps(0.0, &[(500.0, PI)]);
        assert_eq!(rotation_angle(499.0, &p), 0.0);
        assert_eq!(rotation_angle(499.999, &p), 0.0);
        assert_eq!(rotation_angle(500.0, &p), PI);
    }

    #[test]
    fn back_and_forth_protocol() {
        let p = RotationProtocol::steps(0.0, &[(70.0, FRAC_PI_2), (100.0, 0.0)]);
        assert_eq!(rotation_angle(85.0, &p), FRAC_PI_2);
        assert_eq!(rotation_angle(110.0, &p), 0.0);
        assert_eq!(p.max_abs_cos(), 1.0);
    }

    #[test]
    fn ramp_interpolates() {
        let p = RotationProtocol::steps(0.0, &[(10.0, PI)]).with_ramp(4.0);
        assert_eq!(rotation_angle(10.0, &p), 0.0);
        assert!((rotation_angle(12.0, &p) - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(rotation_angle(14.0, &p), PI);
    }

    #[test]
    fn overlapping_ramps_rejected() {
        let p = RotationProtocol::steps(0.0, &[(10.0, PI), (12.0, 0.0)]).with_ramp(4.0);
        assert!(p.validate("protocol").is_err());
        let p = RotationProtocol::steps(0.0, &[(10.0, PI), (10.0, 0.0)]);
        assert!(p.validate("protocol").is_err());
    }

    #[test]
    fn freeze_only_protocol_has_zero_cos() {
        let p = RotationProtocol::constant(FRAC_PI_2);
        assert_eq!(p.max_abs_cos(), 0.0);
    }

    proptest! {
        #[test]
        fn inversion_flips_sign(z in -0.2f64..0.2, x in -0.001f64..0.001) {
            let d0 = detuning(z, x, 0.0, k());
            let dpi = detuning(z, x, PI, k());
            prop_assert_eq!(dpi, -d0);
        }

        #[test]
        fn affine_in_position(z in -0.2f64..0.2, x in -0.02f64..0.02, theta in 0.0f64..PI) {
            let slope = -k() * cos_exact(theta);
            let d = detuning(z, x, theta, k()) - detuning(z, 0.0, theta, k());
            prop_assert!((d - slope * x).abs() < 1e-12);
        }

        #[test]
        fn rotation_angle_stays_in_visited_range(t in 0.0f64..300.0, ramp in 0.0f64..20.0) {
            let p = RotationProtocol::steps(0.0, &[(70.0, FRAC_PI_2), (100.0, PI)]).with_ramp(ramp);
            let th = rotation_angle(t, &p);
            prop_assert!((0.0..=PI).contains(&th));
        }
    }
}
