//! Time-dependent coupling strengths seen by atoms crossing the cavity, and
//! their pulse areas.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::export::fmt17;
use crate::quadrature;
use crate::C64;

/// Default absolute tolerance for pulse areas (rad).
pub const DEFAULT_AREA_TOL: f64 = 1e-10;

/// Oscillating, exponentially decaying coupling of an atom moving at constant
/// speed through the defect mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericProfileParams {
    /// Peak Rabi frequency over the defect mode (rad/s).
    pub omega0: f64,
    /// Distance from the entry point to the cavity centre (m).
    pub path_half_length: f64,
    /// Decay length of the mode envelope (m).
    pub defect_radius: f64,
    /// Lattice constant, half the oscillation period of the profile (m).
    pub lattice_const: f64,
    pub velocity: f64,
    /// Dipole/polarisation angle (rad).
    pub zeta: f64,
}

impl GenericProfileParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega0", self.omega0),
            ("path_half_length", self.path_half_length),
            ("defect_radius", self.defect_radius),
            ("lattice_const", self.lattice_const),
            ("velocity", self.velocity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !self.zeta.is_finite() {
            return domain("zeta must be finite");
        }
        Ok(())
    }

    pub fn with_velocity(&self, velocity: f64) -> Self {
        Self { velocity, ..*self }
    }

    /// Entry-to-exit transit window `[0, 2L/V]`.
    pub fn transit_window(&self) -> (f64, f64) {
        (0.0, 2.0 * self.path_half_length / self.velocity)
    }

    /// Time at which the atom sits at the cavity centre.
    pub fn peak_time(&self) -> f64 {
        self.path_half_length / self.velocity
    }
}

/// `Ω₀ cos ζ · exp(-|Vt - L| / R) · cos(π (Vt - L) / l)`.
pub fn generic_coupling(t: f64, p: &GenericProfileParams) -> f64 {
    let x = p.velocity * t - p.path_half_length;
    p.omega0 * p.zeta.cos() * (-x.abs() / p.defect_radius).exp() * (PI * x / p.lattice_const).cos()
}

/// How a complex sampled coupling enters the (real) interaction strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// `|g(t)|`.
    #[default]
    Magnitude,
    /// `Re(g(t) e^{-iφ₀})` with φ₀ the phase at the largest-|g| sample; keeps
    /// the sign changes of a standing-wave mode.
    PhaseAligned,
}

/// Sampled coupling strength along an atom trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTrace {
    times: Vec<f64>,
    values: Vec<C64>,
    mode: CouplingMode,
    interaction: Vec<f64>,
}

impl CouplingTrace {
    pub fn new(times: Vec<f64>, values: Vec<C64>, mode: CouplingMode) -> Result<Self> {
        if times.len() != values.len() {
            return domain(format!("{} times but {} values", times.len(), values.len()));
        }
        if times.len() < 2 {
            return domain("a coupling trace needs at least two samples");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("trace times must be strictly increasing");
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return domain("trace contains non-finite entries");
        }
        let interaction = interaction_values(&values, mode);
        Ok(Self { times, values, mode, interaction })
    }

    pub fn from_real(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values.into_iter().map(|v| C64::new(v, 0.0)).collect(), CouplingMode::PhaseAligned)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    pub fn with_mode(&self, mode: CouplingMode) -> Self {
        Self::new(self.times.clone(), self.values.clone(), mode).expect("already validated")
    }

    /// Real interaction strength at each sample.
    pub fn interaction_samples(&self) -> &[f64] {
        &self.interaction
    }

    pub fn window(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    fn bracket(&self, t: f64) -> Option<(usize, f64)> {
        let (t0, t1) = self.window();
        if t < t0 || t > t1 {
            return None;
        }
        let i = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= self.times.len() => self.times.len() - 2,
            k => k - 1,
        };
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Some((i, w))
    }

    /// Linearly interpolated raw coupling; zero outside the sampled window.
    pub fn value_at(&self, t: f64) -> C64 {
        match self.bracket(t) {
            Some((i, w)) => self.values[i] * (1.0 - w) + self.values[i + 1] * w,
            None => C64::new(0.0, 0.0),
        }
    }

    /// Linearly interpolated interaction strength; zero outside the window.
    pub fn interaction_at(&self, t: f64) -> f64 {
        match self.bracket(t) {
            Some((i, w)) => self.interaction[i] * (1.0 - w) + self.interaction[i + 1] * w,
            None => 0.0,
        }
    }

    /// Exact integral of the piecewise-linear interaction over `[t0, t1]`.
    pub fn area(&self, t0: f64, t1: f64) -> f64 {
        let (w0, w1) = self.window();
        let lo = t0.max(w0);
        let hi = t1.min(w1);
        if !(lo < hi) {
            return 0.0;
        }
        let mut ts = vec![lo];
        let mut vs = vec![self.interaction_at(lo)];
        for (t, v) in self.times.iter().zip(&self.interaction) {
            if *t > lo && *t < hi {
                ts.push(*t);
                vs.push(*v);
            }
        }
        ts.push(hi);
        vs.push(self.interaction_at(hi));
        quadrature::trapezoid(&ts, &vs)
    }

    /// Two-column CSV `time_s,coupling_rad_per_s`; a third
    /// `coupling_im_rad_per_s` column is written when any sample is complex.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let complex = self.values.iter().any(|v| v.im != 0.0);
        if complex {
            writeln!(w, "time_s,coupling_rad_per_s,coupling_im_rad_per_s")?;
        } else {
            writeln!(w, "time_s,coupling_rad_per_s")?;
        }
        for (t, v) in self.times.iter().zip(&self.values) {
            if complex {
                writeln!(w, "{},{},{}", fmt17(*t), fmt17(v.re), fmt17(v.im))?;
            } else {
                writeln!(w, "{},{}", fmt17(*t), fmt17(v.re))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, mode: CouplingMode) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty trace file".into()))??;
        let ncols = header.split(',').count();
        if !header.starts_with("time_s") || !(2..=3).contains(&ncols) {
            return Err(Error::Format(format!("unexpected trace header `{header}`")));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
            if fields.len() != ncols {
                return Err(Error::Format(format!("line {}: expected {ncols} columns", lineno + 2)));
            }
            times.push(fields[0]);
            values.push(C64::new(fields[1], if ncols == 3 { fields[2] } else { 0.0 }));
        }
        Self::new(times, values, mode)
    }
}

fn interaction_values(values: &[C64], mode: CouplingMode) -> Vec<f64> {
    match mode {
        CouplingMode::Magnitude => values.iter().map(|v| v.norm()).collect(),
        CouplingMode::PhaseAligned => {
            // first sample of largest magnitude fixes the phase
            let peak = values.iter().copied().fold(C64::new(0.0, 0.0), |m, v| if v.norm() > m.norm() { v } else { m });
            let reference = if peak.norm() > 0.0 { peak.conj() / peak.norm() } else { C64::new(1.0, 0.0) };
            values.iter().map(|v| (v * reference).re).collect()
        }
    }
}

/// A coupling strength as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingProfile {
    Generic(GenericProfileParams),
    Trace(CouplingTrace),
    /// `value` on `[start, end]`, zero elsewhere.
    Constant {
        value: f64,
        start: f64,
        end: f64,
    },
    Scaled {
        base: Box<CouplingProfile>,
        factor: f64,
    },
    /// `base(t - delay)`.
    Shifted {
        base: Box<CouplingProfile>,
        delay: f64,
    },
}

impl CouplingProfile {
    /// Real interaction strength (rad/s) used by the dynamics.
    pub fn interaction(&self, t: f64) -> f64 {
        match self {
            Self::Generic(p) => generic_coupling(t, p),
            Self::Trace(tr) => tr.interaction_at(t),
            Self::Constant { value, start, end } => {
                if t >= *start && t <= *end {
                    *value
                } else {
                    0.0
                }
            }
            Self::Scaled { base, factor } => factor * base.interaction(t),
            Self::Shifted { base, delay } => base.interaction(t - delay),
        }
    }

    /// Raw (possibly complex) coupling value.
    pub fn value(&self, t: f64) -> C64 {
        match self {
            Self::Trace(tr) => tr.value_at(t),
            Self::Scaled { base, factor } => base.value(t) * *factor,
            Self::Shifted { base, delay } => base.value(t - delay),
            _ => C64::new(self.interaction(t), 0.0),
        }
    }

    /// Natural integration window of the profile.
    pub fn window(&self) -> (f64, f64) {
        match self {
            Self::Generic(p) => p.transit_window(),
            Self::Trace(tr) => tr.window(),
            Self::Constant { start, end, .. } => (*start, *end),
            Self::Scaled { base, .. } => base.window(),
            Self::Shifted { base, delay } => {
                let (a, b) = base.window();
                (a + delay, b + delay)
            }
        }
    }

    /// Largest |interaction| over a dense sampling of the window.
    pub fn peak(&self) -> f64 {
        match self {
            Self::Generic(p) => p.omega0 * p.zeta.cos().abs(),
            Self::Trace(tr) => tr.interaction_samples().iter().fold(0.0, |m, v| m.max(v.abs())),
            Self::Constant { value, .. } => value.abs(),
            Self::Scaled { base, factor } => factor.abs() * base.peak(),
            Self::Shifted { base, .. } => base.peak(),
        }
    }

    /// Points where the integrand has kinks or where quadrature should start
    /// a fresh panel, and a suggested panel count for oscillatory profiles.
    fn oscillation_panels(&self, t0: f64, t1: f64) -> usize {
        match self {
            Self::Generic(p) => {
                let half_periods = p.velocity * (t1 - t0) / p.lattice_const;
                (half_periods.ceil() as usize).clamp(1, 10_000)
            }
            Self::Scaled { base, .. } | Self::Shifted { base, .. } => base.oscillation_panels(t0, t1),
            _ => 1,
        }
    }
}

/// Integrated coupling `∫_{t0}^{t1} G(τ) dτ` (rad). Sampled traces are
/// integrated exactly as piecewise-linear functions; everything else goes
/// through adaptive Gauss–Kronrod quadrature with absolute tolerance `tol`.
pub fn pulse_area(profile: &CouplingProfile, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    if !(t0 < t1) {
        return domain(format!("pulse area needs t0 < t1, got [{t0}, {t1}]"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be > 0, got {tol}"));
    }
    match profile {
        CouplingProfile::Trace(tr) => Ok(tr.area(t0, t1)),
        CouplingProfile::Constant { value, start, end } => {
            let lo = t0.max(*start);
            let hi = t1.min(*end);
            Ok(if hi > lo { value * (hi - lo) } else { 0.0 })
        }
        CouplingProfile::Scaled { base, factor } => {
            if *factor == 0.0 {
                return Ok(0.0);
            }
            Ok(factor * pulse_area(base, t0, t1, tol / factor.abs())?)
        }
        CouplingProfile::Shifted { base, delay } => pulse_area(base, t0 - delay, t1 - delay, tol),
        CouplingProfile::Generic(p) => {
            p.validate()?;
            // Split at the peak so the |Vt - L| kink sits on a panel boundary.
            let tp = p.peak_time();
            let pieces = profile.oscillation_panels(t0, t1);
            let f = |t| generic_coupling(t, p);
            if tp > t0 && tp < t1 {
                let left = pieces_for(pieces, tp - t0, t1 - t0);
                let right = pieces_for(pieces, t1 - tp, t1 - t0);
                Ok(quadrature::integrate(f, t0, tp, 0.5 * tol, left)? + quadrature::integrate(f, tp, t1, 0.5 * tol, right)?)
            } else {
                quadrature::integrate(f, t0, t1, tol, pieces)
            }
        }
    }
}

fn pieces_for(total: usize, part: f64, whole: f64) -> usize {
    ((total as f64 * part / whole).ceil() as usize).max(1)
}

/// Pulse area over the profile's own window at [`DEFAULT_AREA_TOL`].
pub fn transit_area(profile: &CouplingProfile) -> Result<f64> {
    let (t0, t1) = profile.window();
    pulse_area(profile, t0, t1, DEFAULT_AREA_TOL)
}

/// Profile of atom B proportional to atom A's.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPair {
    pub profile: CouplingProfile,
    /// Set when the ratio cannot be realised by a dipole orientation.
    pub warning: Option<String>,
}

/// `p · G_A(t)`. Physically realised through `cos ζ_B = p cos ζ_A`; if that
/// has no solution a warning is attached and the scaled profile is still
/// returned.
pub fn scaled_pair(profile_a: &CouplingProfile, p: f64) -> Result<ScaledPair> {
    if !p.is_finite() {
        return domain(format!("ratio p must be finite, got {p}"));
    }
    let cos_a = match profile_a {
        CouplingProfile::Generic(g) => g.zeta.cos(),
        _ => 1.0,
    };
    let target = p * cos_a;
    let warning = if !(0.0..=1.0).contains(&target) {
        let msg = format!("p = {p} needs cos ζ_B = {target:.6}, which no dipole orientation provides");
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    Ok(ScaledPair { profile: CouplingProfile::Scaled { base: Box::new(profile_a.clone()), factor: p }, warning })
}

/// Orientation angle for atom B that realises the ratio `p`, if one exists.
pub fn zeta_for_ratio(zeta_a: f64, p: f64) -> Option<f64> {
    let c = p * zeta_a.cos();
    (0.0..=1.0).contains(&c).then(|| c.acos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3(v: f64) -> GenericProfileParams {
        let omega = 2.4e15;
        let l = 1.6 * PI * crate::units::CONSTANTS.c / omega;
        GenericProfileParams { omega0: 11e9, path_half_length: 10.0 * l, defect_radius: l, lattice_const: l, velocity: v, zeta: 0.0 }
    }

    // Composite Simpson on a fine uniform grid: independent of the adaptive path.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn generic_peak_and_zero() {
        let p = GenericProfileParams { zeta: 0.3, ..fig3(433.0) };
        let peak = generic_coupling(p.peak_time(), &p);
        assert!((peak - p.omega0 * 0.3f64.cos()).abs() < 1e-3);
        let t_zero = (p.path_half_length + 0.5 * p.lattice_const) / p.velocity;
        assert!(generic_coupling(t_zero, &p).abs() < 1e-6 * p.omega0);
        let at0 = generic_coupling(0.0, &p);
        let expect = p.omega0 * 0.3f64.cos() * (-10.0f64).exp();
        assert!((at0 - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn generic_envelope_symmetric() {
        let p = fig3(433.0);
        let tp = p.peak_time();
        for k in 1..50 {
            let s = k as f64 * 3.7e-11;
            let l = generic_coupling(tp - s, &p);
            let r = generic_coupling(tp + s, &p);
            assert!((l - r).abs() <= 1e-9 * p.omega0);
        }
    }

    #[test]
    fn fig3_transit_area() {
        let p = fig3(433.0);
        let prof = CouplingProfile::Generic(p);
        let area = transit_area(&prof).unwrap();
        let (t0, t1) = p.transit_window();
        let oracle = simpson(|t| generic_coupling(t, &p), t0, p.peak_time(), 200_000)
            + simpson(|t| generic_coupling(t, &p), p.peak_time(), t1, 200_000);
        assert!((area - oracle).abs() < 1e-8, "{area} vs {oracle}");
        let infinite = p.omega0 * p.lattice_const * 2.0 / (1.0 + PI * PI) / p.velocity;
        assert!((area - infinite).abs() < 1e-4 * infinite);
        assert!((area - 2.935).abs() < 5e-3, "{area}");
    }

    #[test]
    fn area_scales_inverse_velocity() {
        let a1 = transit_area(&CouplingProfile::Generic(fig3(300.0))).unwrap();
        let a2 = transit_area(&CouplingProfile::Generic(fig3(600.0))).unwrap();
        assert!((a1 - 2.0 * a2).abs() < 1e-9);
    }

    #[test]
    fn constant_and_zero() {
        let c = CouplingProfile::Constant { value: 3.0, start: 0.0, end: 2.0 };
        assert_eq!(pulse_area(&c, 0.0, 2.0, 1e-10).unwrap(), 6.0);
        let z = CouplingProfile::Constant { value: 0.0, start: 0.0, end: 2.0 };
        assert_eq!(pulse_area(&z, 0.0, 2.0, 1e-10).unwrap(), 0.0);
        assert!(pulse_area(&z, 2.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn scaled_pair_linearity() {
        let a = CouplingProfile::Generic(fig3(433.0));
        let area_a = transit_area(&a).unwrap();
        for p in [0.0, 1.0, 0.414, -0.7] {
            let b = scaled_pair(&a, p).unwrap();
            let area_b = transit_area(&b.profile).unwrap();
            assert!((area_b - p * area_a).abs() < 1e-12, "p={p}");
            assert_eq!(b.warning.is_some(), p < 0.0);
        }
        let b = scaled_pair(&a, 0.0).unwrap().profile;
        assert_eq!(b.interaction(a.window().1 * 0.5), 0.0);
        let big = scaled_pair(&a, 1.5).unwrap();
        assert!(big.warning.is_some());
        assert!(scaled_pair(&a, f64::NAN).is_err());
    }

    #[test]
    fn zeta_ratio() {
        let z = zeta_for_ratio(0.0, 0.414).unwrap();
        assert!((z.cos() - 0.414).abs() < 1e-15);
        assert!(zeta_for_ratio(0.0, 1.2).is_none());
    }

    #[test]
    fn trace_modes_and_area() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let vals = vec![C64::new(0.0, 0.0), C64::new(0.0, 2.0), C64::new(0.0, -2.0), C64::new(0.0, 0.0)];
        let mag = CouplingTrace::new(times.clone(), vals.clone(), CouplingMode::Magnitude).unwrap();
        assert_eq!(mag.interaction_samples(), &[0.0, 2.0, 2.0, 0.0]);
        assert!((mag.area(0.0, 3.0) - 4.0).abs() < 1e-15);
        let signed = mag.with_mode(CouplingMode::PhaseAligned);
        assert_eq!(signed.interaction_samples(), &[0.0, 2.0, -2.0, 0.0]);
        assert!(signed.area(0.0, 3.0).abs() < 1e-15);
        assert!((mag.area(0.5, 1.5) - 1.75).abs() < 1e-15);
        assert!(CouplingTrace::new(vec![0.0, 0.0], vec![C64::new(1.0, 0.0); 2], CouplingMode::Magnitude).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let tr = CouplingTrace::new(
            vec![0.0, 1e-9, 2e-9],
            vec![C64::new(1.0, 0.5), C64::new(-2.0, 0.25), C64::new(0.0, 0.0)],
            CouplingMode::Magnitude,
        )
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = CouplingTrace::read_csv(&buf[..], CouplingMode::Magnitude).unwrap();
        assert_eq!(back, tr);
        assert!(CouplingTrace::read_csv(&b"foo,bar\n1,2\n"[..], CouplingMode::Magnitude).is_err());
    }
}
