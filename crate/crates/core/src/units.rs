//! Physical constants, unit helpers and the state types shared by every
//! other module.
//!
//! Conventions: angular frequencies and coupling rates in rad/s, times in s,
//! lengths in m, dipole moments in C·m.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::C64;

/// CODATA 2018 exact / recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants { hbar: 1.054_571_817e-34, eps0: 8.854_187_812_8e-12, c: 299_792_458.0 };

/// Angular frequency of light with vacuum wavelength `lambda` (m).
pub fn omega_from_wavelength(lambda: f64) -> f64 {
    std::f64::consts::TAU * CONSTANTS.c / lambda
}

/// Peak vacuum coupling `(μ/ħ)·sqrt(ħω / (2 ε₀ ε_m V_mode))` in rad/s.
pub fn g0_from_params(mu_eg: f64, omega: f64, eps_m: f64, v_mode: f64) -> Result<f64> {
    check_positive(&[("mu_eg", mu_eg), ("omega", omega), ("eps_m", eps_m), ("v_mode", v_mode)])?;
    let PhysicalConstants { hbar, eps0, .. } = CONSTANTS;
    Ok(mu_eg / hbar * (hbar * omega / (2.0 * eps0 * eps_m * v_mode)).sqrt())
}

/// Mode volume (m³) that produces the coupling `g0` for the given dipole,
/// frequency and peak permittivity. Inverse of [`g0_from_params`].
pub fn mode_volume_for_g0(mu_eg: f64, omega: f64, eps_m: f64, g0: f64) -> Result<f64> {
    check_positive(&[("mu_eg", mu_eg), ("omega", omega), ("eps_m", eps_m), ("g0", g0)])?;
    let PhysicalConstants { hbar, eps0, .. } = CONSTANTS;
    let ratio = mu_eg / (hbar * g0);
    Ok(ratio * ratio * hbar * omega / (2.0 * eps0 * eps_m))
}

/// Cavity photon lifetime `Q/ω` in seconds.
pub fn photon_lifetime(q_factor: f64, omega: f64) -> Result<f64> {
    check_positive(&[("q_factor", q_factor), ("omega", omega)])?;
    Ok(q_factor / omega)
}

fn check_positive(values: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in values {
        if !(v.is_finite() && v > 0.0) {
            return domain(format!("{name} must be finite and > 0, got {v}"));
        }
    }
    Ok(())
}

/// Parameters of one atom crossing the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Transition dipole moment μ_eg (C·m).
    pub dipole_moment: f64,
    /// Angle between the dipole and the local mode polarisation (rad).
    pub zeta: f64,
    /// Straight-line speed (m/s).
    pub velocity: f64,
    /// Transition angular frequency (rad/s).
    pub transition_omega: f64,
}

impl AtomParams {
    pub fn new(dipole_moment: f64, zeta: f64, velocity: f64, transition_omega: f64) -> Result<Self> {
        check_positive(&[("dipole_moment", dipole_moment), ("velocity", velocity), ("transition_omega", transition_omega)])?;
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&zeta) {
            return domain(format!("zeta must lie in [0, π/2], got {zeta}"));
        }
        Ok(Self { dipole_moment, zeta, velocity, transition_omega })
    }
}

/// Single cavity mode, with `g0` tied to the other fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_cav: f64,
    pub eps_m: f64,
    pub mode_volume: f64,
    pub dipole_moment: f64,
    pub g0: f64,
}

impl CavityParams {
    /// Derive `g0` from the mode volume.
    pub fn from_mode_volume(omega_cav: f64, eps_m: f64, mode_volume: f64, dipole_moment: f64) -> Result<Self> {
        let g0 = g0_from_params(dipole_moment, omega_cav, eps_m, mode_volume)?;
        Ok(Self { omega_cav, eps_m, mode_volume, dipole_moment, g0 })
    }

    /// Take `g0` as a calibration input and infer the mode volume it implies.
    pub fn from_g0(omega_cav: f64, eps_m: f64, g0: f64, dipole_moment: f64) -> Result<Self> {
        let mode_volume = mode_volume_for_g0(dipole_moment, omega_cav, eps_m, g0)?;
        Ok(Self { omega_cav, eps_m, mode_volume, dipole_moment, g0 })
    }

    /// Relative mismatch between the stored `g0` and the value recomputed from
    /// the other fields.
    pub fn consistency_error(&self) -> Result<f64> {
        let g = g0_from_params(self.dipole_moment, self.omega_cav, self.eps_m, self.mode_volume)?;
        Ok(((g - self.g0) / self.g0).abs())
    }
}

/// A product ket |atom A, atom B, photon number⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisKet {
    pub a_excited: bool,
    pub b_excited: bool,
    pub photons: u32,
}

impl BasisKet {
    pub const fn new(a_excited: bool, b_excited: bool, photons: u32) -> Self {
        Self { a_excited, b_excited, photons }
    }

    pub fn excitations(&self) -> u32 {
        self.a_excited as u32 + self.b_excited as u32 + self.photons
    }

    /// Short label such as `100` (A excited, B ground, vacuum).
    pub fn label(&self) -> String {
        format!("{}{}{}", self.a_excited as u8, self.b_excited as u8, self.photons)
    }
}

impl fmt::Display for BasisKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.label())
    }
}

/// Canonical basis of the `n`-excitation subspace: ascending photon number,
/// and within one photon number `|ee⟩, |eg⟩, |ge⟩, |gg⟩`.
pub fn canonical_basis(n: u32) -> Vec<BasisKet> {
    let mut out = Vec::new();
    for photons in 0..=n {
        for (a, b) in [(true, true), (true, false), (false, true), (false, false)] {
            let ket = BasisKet::new(a, b, photons);
            if ket.excitations() == n {
                out.push(ket);
            }
        }
    }
    out
}

/// Complex amplitudes over a fixed-excitation subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeVector {
    n_excitations: u32,
    basis: Vec<BasisKet>,
    amplitudes: Vec<C64>,
}

impl AmplitudeVector {
    /// `ket` with unit amplitude in its own excitation subspace.
    pub fn basis_state(ket: BasisKet) -> Self {
        let n = ket.excitations();
        let basis = canonical_basis(n);
        let amplitudes = basis.iter().map(|k| if *k == ket { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
        Self { n_excitations: n, basis, amplitudes }
    }

    pub fn from_amplitudes(n_excitations: u32, amplitudes: Vec<C64>) -> Result<Self> {
        let basis = canonical_basis(n_excitations);
        if basis.len() != amplitudes.len() {
            return domain(format!("{} amplitudes given for a {}-dimensional subspace", amplitudes.len(), basis.len()));
        }
        Ok(Self { n_excitations, basis, amplitudes })
    }

    pub fn n_excitations(&self) -> u32 {
        self.n_excitations
    }

    pub fn basis(&self) -> &[BasisKet] {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, ket: BasisKet) -> Option<C64> {
        self.basis.iter().position(|k| *k == ket).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.basis != other.basis {
            return domain("inner product between states in different bases");
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }
}
