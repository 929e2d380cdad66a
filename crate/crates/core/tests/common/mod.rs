//! Closed-form oracles, written independently of the library's own helpers.
#![allow(dead_code)]

use gravecho::analysis::fourier_transform;
use gravecho::solver::BoundaryRecord;
use gravecho::units::PhysicalConstants;
use num_complex::Complex64;

pub const EV: f64 = 1.602_176_634e-19;

/// K = E_t g / (ħ c²) with g = G M / R², evaluated directly.
pub fn gradient(c: &PhysicalConstants) -> f64 {
    let e_t = c.e_t_ev * EV;
    let g = c.g * c.m_earth / (c.r_earth * c.r_earth);
    e_t * g / (c.hbar * c.c * c.c)
}

/// Constant-drive steady state of dρ/dt = -(Γ0/2 + γ + iΔ)ρ + (i/2)Ω.
pub fn steady_state(omega: Complex64, delta: f64, gamma0: f64, gamma: f64) -> Complex64 {
    Complex64::new(0.0, 0.5) * omega / Complex64::new(gamma0 / 2.0 + gamma, delta)
}

/// Free evolution of ρ over `t` with no drive.
pub fn free_decay(rho0: Complex64, delta: f64, gamma0: f64, gamma: f64, t: f64) -> Complex64 {
    rho0 * (-Complex64::new(gamma0 / 2.0 + gamma, delta) * t).exp()
}

/// Resonant steady-state amplitude transmission through optical depth ξ.
pub fn beer_lambert(xi: f64, gamma0: f64, gamma: f64) -> f64 {
    (-gamma0 * xi / (2.0 * (gamma0 + 2.0 * gamma))).exp()
}

/// Rectangle-rule time energy Σ|Ω|² dt.
pub fn time_energy(r: &BoundaryRecord) -> f64 {
    r.omega.iter().map(|w| w.norm_sqr()).sum::<f64>() * r.dt()
}

/// (1/2π) Σ |F(ω)|² dω over the full transform.
pub fn frequency_energy(r: &BoundaryRecord, padded: usize) -> f64 {
    let ft = fourier_transform(r, padded).unwrap();
    let dw = ft.spacing();
    ft.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dw / (2.0 * std::f64::consts::PI)
}

/// Overlap fidelity of `out` against an arbitrary reference f(t), trapezoid on
/// the samples inside [a, b].
pub fn fidelity_against(
    out: &BoundaryRecord,
    reference: impl Fn(f64) -> Complex64,
    ref_energy: f64,
    a: f64,
    b: f64,
) -> f64 {
    let pts: Vec<(f64, Complex64)> = out
        .times
        .iter()
        .zip(&out.omega)
        .filter(|(t, _)| **t >= a && **t <= b)
        .map(|(t, w)| (*t, *w))
        .collect();
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut e_out = 0.0;
    for p in pts.windows(2) {
        let h = p[1].0 - p[0].0;
        overlap +=
            (reference(p[0].0).conj() * p[0].1 + reference(p[1].0).conj() * p[1].1) * (h / 2.0);
        e_out += (p[0].1.norm_sqr() + p[1].1.norm_sqr()) * (h / 2.0);
    }
    overlap.norm_sqr() / (ref_energy * e_out)
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
