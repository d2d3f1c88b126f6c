//! Closed-form single-excitation dynamics for proportional couplings.
//!
//! When `G_B(t) = p·G_A(t)` the interaction Hamiltonians at different times
//! commute, so the propagator is the exponential of the integrated
//! Hamiltonian. In the basis `{|100⟩, |010⟩, |001⟩}` that integral is the real
//! symmetric matrix `M` with `M₁₃ = G_A`, `M₂₃ = G_B`, and since `M³ = Λ²M`
//! with `Λ² = G_A² + G_B²`,
//!
//! ```text
//! U = I + (cos Λ − 1)/Λ² · M² − i sin Λ/Λ · M.
//! ```
//!
//! The Taylor expansion of `U|100⟩` gives sums over `1/(2n)!` (cosine-type)
//! and `1/(2n−1)!` (sine-type) terms, which [`series_amplitudes`] evaluates
//! term by term.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::coupling::{pulse_area, CouplingProfile, DEFAULT_AREA_TOL};
use crate::error::{domain, Result};
use crate::ode::Trajectory;
use crate::units::AmplitudeVector;
use crate::C64;

/// Below this total area the removable singularity is handled by a series.
const SMALL_LAMBDA: f64 = 1e-6;

/// Integrated couplings (rad) of the two atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseAreas {
    pub g_a: f64,
    pub g_b: f64,
}

impl PulseAreas {
    pub fn new(g_a: f64, g_b: f64) -> Self {
        Self { g_a, g_b }
    }

    /// Areas with total `Λ = lambda` split in ratio `g_b/g_a = p`.
    pub fn from_total(lambda: f64, p: f64) -> Self {
        let g_a = lambda / (1.0 + p * p).sqrt();
        Self { g_a, g_b: p * g_a }
    }

    /// `Λ = sqrt(G_A² + G_B²)`.
    pub fn lambda(&self) -> f64 {
        self.g_a.hypot(self.g_b)
    }

    pub fn swapped(&self) -> Self {
        Self { g_a: self.g_b, g_b: self.g_a }
    }
}

/// Amplitudes of `|100⟩, |010⟩, |001⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub a: C64,
    pub b: C64,
    pub gamma: C64,
}

impl Amplitudes {
    pub fn as_array(&self) -> [C64; 3] {
        [self.a, self.b, self.gamma]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.gamma.norm_sqr()
    }
}

// (cos Λ − 1)/Λ² and sin Λ/Λ, finite at Λ = 0.
fn cos_sin_kernels(lambda: f64) -> (f64, f64) {
    if lambda < SMALL_LAMBDA {
        let l2 = lambda * lambda;
        (-0.5 + l2 / 24.0, 1.0 - l2 / 6.0)
    } else {
        let half = (0.5 * lambda).sin();
        (-2.0 * half * half / (lambda * lambda), lambda.sin() / lambda)
    }
}

/// Final amplitudes starting from `|100⟩`.
pub fn closed_form_amplitudes(areas: PulseAreas) -> Amplitudes {
    let (c, s) = cos_sin_kernels(areas.lambda());
    let PulseAreas { g_a, g_b } = areas;
    Amplitudes { a: C64::new(1.0 + g_a * g_a * c, 0.0), b: C64::new(g_a * g_b * c, 0.0), gamma: C64::new(0.0, -g_a * s) }
}

/// Partial sums of the exponential series through term `n_terms`.
pub fn series_amplitudes(areas: PulseAreas, n_terms: usize) -> Amplitudes {
    let PulseAreas { g_a, g_b } = areas;
    let l2 = g_a * g_a + g_b * g_b;
    let mut cos_sum = 0.0;
    let mut sin_sum = 0.0;
    // term_n = (-1)^n Λ^{2(n-1)} / (2n)!, and the sine-type analogue over (2n-1)!.
    let mut cos_term = -0.5;
    let mut sin_term = -1.0;
    for n in 1..=n_terms {
        cos_sum += cos_term;
        sin_sum += sin_term;
        let k = n as f64;
        cos_term *= -l2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        sin_term *= -l2 / ((2.0 * k) * (2.0 * k + 1.0));
    }
    Amplitudes { a: C64::new(1.0 + g_a * g_a * cos_sum, 0.0), b: C64::new(g_a * g_b * cos_sum, 0.0), gamma: C64::new(0.0, g_a * sin_sum) }
}

/// Single-excitation propagator over `{|100⟩, |010⟩, |001⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalUnitary3(pub Matrix3<C64>);

impl LogicalUnitary3 {
    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.0.adjoint() * self.0;
        (prod - Matrix3::identity()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn column(&self, j: usize) -> [C64; 3] {
        [self.0[(0, j)], self.0[(1, j)], self.0[(2, j)]]
    }
}

/// The integrated-Hamiltonian matrix `M` (rad).
pub fn area_matrix(areas: PulseAreas) -> Matrix3<f64> {
    let PulseAreas { g_a, g_b } = areas;
    Matrix3::new(0.0, 0.0, g_a, 0.0, 0.0, g_b, g_a, g_b, 0.0)
}

pub fn logical_unitary(areas: PulseAreas) -> LogicalUnitary3 {
    let (c, s) = cos_sin_kernels(areas.lambda());
    let m = area_matrix(areas);
    let m2 = m * m;
    let u = Matrix3::from_fn(|i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        C64::new(id + c * m2[(i, j)], -s * m[(i, j)])
    });
    LogicalUnitary3(u)
}

/// Closed-form evolution sampled at `n_points` equally spaced times over the
/// window of `profile_a`, with atom B's coupling `p·G_A(t)`. `input` is the
/// column of the propagator to follow: 0 for `|100⟩`, 1 for `|010⟩`.
/// Partial areas are accumulated segment by segment.
pub fn closed_form_trajectory(profile_a: &CouplingProfile, p: f64, input: usize, n_points: usize) -> Result<Trajectory> {
    if input > 1 {
        return domain("input must be 0 (|100⟩) or 1 (|010⟩)");
    }
    if n_points < 2 {
        return domain("at least two output points are required");
    }
    let (t0, t1) = profile_a.window();
    let times: Vec<f64> =
        (0..n_points).map(|k| if k + 1 == n_points { t1 } else { t0 + (t1 - t0) * k as f64 / (n_points - 1) as f64 }).collect();
    let seg_tol = DEFAULT_AREA_TOL / n_points as f64;
    let mut g_a = 0.0;
    let mut states = Vec::with_capacity(n_points);
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            g_a += pulse_area(profile_a, times[k - 1], t, seg_tol)?;
        }
        let u = logical_unitary(PulseAreas::new(g_a, p * g_a));
        states.push(AmplitudeVector::from_amplitudes(1, u.column(input).to_vec())?);
    }
    Ok(Trajectory { times, states, local_errors: vec![0.0; n_points], accepted_steps: 0, rejected_steps: 0 })
}

/// Largest normalised commutator `|G_B(t)G_A(t') − G_A(t)G_B(t')|` over an
/// `n_samples`-point grid on the common window. Zero certifies that the
/// Hamiltonians commute at all sampled times.
pub fn commutation_check(profile_a: &CouplingProfile, profile_b: &CouplingProfile, n_samples: usize) -> Result<f64> {
    let (a0, a1) = profile_a.window();
    let (b0, b1) = profile_b.window();
    let (t0, t1) = (a0.max(b0), a1.min(b1));
    if !(t0 < t1) {
        return domain("profiles share no common window");
    }
    if n_samples < 2 {
        return domain("commutation check needs at least two samples");
    }
    let step = (t1 - t0) / (n_samples - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..n_samples)
        .map(|k| {
            let t = t0 + k as f64 * step;
            (profile_a.interaction(t), profile_b.interaction(t))
        })
        .collect();
    let peak_a = samples.iter().fold(0.0f64, |m, s| m.max(s.0.abs()));
    let peak_b = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    if peak_a == 0.0 || peak_b == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for (i, (ga_i, gb_i)) in samples.iter().enumerate() {
        for (ga_j, gb_j) in &samples[i + 1..] {
            worst = worst.max((gb_i * ga_j - ga_i * gb_j).abs());
        }
    }
    Ok(worst / (peak_a * peak_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{scaled_pair, GenericProfileParams};
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn close(z: C64, re: f64, im: f64, tol: f64) -> bool {
        (z.re - re).abs() < tol && (z.im - im).abs() < tol
    }

    #[test]
    fn identity_limit() {
        let amp = closed_form_amplitudes(PulseAreas::new(0.0, 0.0));
        assert_eq!(amp.as_array(), [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let tiny = closed_form_amplitudes(PulseAreas::new(1e-9, 3e-10));
        assert!(close(tiny.a, 1.0, 0.0, 1e-15));
        assert!(close(tiny.gamma, 0.0, -1e-9, 1e-20));
    }

    #[test]
    fn half_rabi_single_atom() {
        let amp = closed_form_amplitudes(PulseAreas::new(PI / 2.0, 0.0));
        assert!(close(amp.a, 0.0, 0.0, 1e-15));
        assert!(close(amp.b, 0.0, 0.0, 1e-15));
        assert!(close(amp.gamma, 0.0, -1.0, 1e-15));
    }

    #[test]
    fn entangler_and_not_points() {
        let p = SQRT_2 - 1.0;
        let amp = closed_form_amplitudes(PulseAreas::from_total(PI, p));
        assert!(close(amp.a, -FRAC_1_SQRT_2, 0.0, 1e-14));
        assert!(close(amp.b, -FRAC_1_SQRT_2, 0.0, 1e-14));
        assert!(amp.gamma.norm() < 1e-15);
        let amp = closed_form_amplitudes(PulseAreas::new(PI / SQRT_2, PI / SQRT_2));
        assert!(close(amp.a, 0.0, 0.0, 1e-15));
        assert!(close(amp.b, -1.0, 0.0, 1e-15));
        assert!(amp.gamma.norm() < 1e-15);
    }

    #[test]
    fn single_atom_reduction() {
        for g in [0.1, 1.0, 2.5, 7.0] {
            let amp = closed_form_amplitudes(PulseAreas::new(g, 0.0));
            assert!(close(amp.a, g.cos(), 0.0, 1e-14));
            assert!(close(amp.gamma, 0.0, -g.sin(), 1e-14));
        }
    }

    #[test]
    fn series_low_orders() {
        let s0 = series_amplitudes(PulseAreas::new(0.7, 0.3), 0);
        assert_eq!(s0.as_array(), [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let g = 0.9;
        let s1 = series_amplitudes(PulseAreas::new(g, 0.0), 1);
        assert!((s1.a.re - (1.0 - g * g / 2.0)).abs() < 1e-15);
        assert!((s1.gamma.im + g).abs() < 1e-15);
    }

    #[test]
    fn series_converges_to_closed_form() {
        let areas = PulseAreas::new(1.0, 0.5);
        let s = series_amplitudes(areas, 20).as_array();
        let c = closed_form_amplitudes(areas).as_array();
        for (x, y) in s.iter().zip(&c) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn series_error_monotone_past_turning_point() {
        let areas = PulseAreas::new(4.0, 3.0); // Λ = 5
        let exact = closed_form_amplitudes(areas).as_array();
        let err = |n| {
            let s = series_amplitudes(areas, n).as_array();
            s.iter().zip(&exact).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
        };
        // term ratio Λ²/((2n+1)(2n+2)) drops below 1 once 2n+2 > Λ.
        let turning = 3;
        let errs: Vec<f64> = (turning..40).map(err).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] || w[1] < 1e-13, "{:?}", w);
        }
        assert!(errs.last().unwrap() < &1e-12);
    }

    #[test]
    fn unitary_structure() {
        let id = logical_unitary(PulseAreas::new(0.0, 0.0));
        assert_eq!(id.0, Matrix3::identity());
        let areas = PulseAreas::new(1.3, -0.4);
        let u = logical_unitary(areas);
        assert!(u.unitarity_defect() < 1e-14);
        let amp = closed_form_amplitudes(areas).as_array();
        for (x, y) in u.column(0).iter().zip(&amp) {
            assert!((x - y).norm() < 1e-15);
        }
        assert_eq!(u.0[(0, 1)], u.0[(1, 0)]);
        let swapped = logical_unitary(areas.swapped());
        for i in 0..3 {
            for j in 0..3 {
                let perm = |k: usize| [1, 0, 2][k];
                assert!((swapped.0[(i, j)] - u.0[(perm(i), perm(j))]).norm() < 1e-15);
            }
        }
    }

    fn generic() -> CouplingProfile {
        let l = 6.2788e-7;
        CouplingProfile::Generic(GenericProfileParams {
            omega0: 11e9,
            path_half_length: 10.0 * l,
            defect_radius: l,
            lattice_const: l,
            velocity: 433.0,
            zeta: 0.0,
        })
    }

    #[test]
    fn commutation() {
        let a = generic();
        let b = scaled_pair(&a, 0.414).unwrap().profile;
        assert!(commutation_check(&a, &b, 300).unwrap() <= 1e-12);
        let zero = scaled_pair(&a, 0.0).unwrap().profile;
        assert_eq!(commutation_check(&a, &zero, 300).unwrap(), 0.0);
        let l_over_v = 6.2788e-7 / 433.0;
        let shifted = CouplingProfile::Shifted { base: Box::new(a.clone()), delay: l_over_v };
        let dev = commutation_check(&a, &shifted, 300).unwrap();
        assert!(dev > 0.1, "{dev}");
        assert!(commutation_check(&a, &b, 1).is_err());
        let far = CouplingProfile::Shifted { base: Box::new(a.clone()), delay: 1.0 };
        assert!(commutation_check(&a, &far, 10).is_err());
    }
}
