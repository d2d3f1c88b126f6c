//! Direct integration of the interaction-picture Schrödinger equation
//! `i dψ/dt = H(t) ψ` in fixed-excitation subspaces, with `H` in rad/s.
//!
//! This path makes no commutation assumption, so it also handles
//! non-proportional and complex couplings, and it is the reference against
//! which the closed forms in [`crate::analytic`] are checked.

use std::io::Write;

use nalgebra::DMatrix;

use crate::analytic::PulseAreas;
use crate::error::{domain, Error, Result};
use crate::export::fmt17;
use crate::units::{canonical_basis, AmplitudeVector, BasisKet};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Atom {
    A,
    B,
}

#[derive(Debug, Clone, Copy)]
struct Coupling {
    row: usize,
    col: usize,
    atom: Atom,
    factor: f64,
    /// Emission (`σ₋a†`) terms carry the conjugate coupling.
    conjugate: bool,
}

/// Jaynes–Cummings interaction restricted to the `n`-excitation subspace.
#[derive(Debug, Clone)]
pub struct SubspaceHamiltonian {
    n_excitations: u32,
    basis: Vec<BasisKet>,
    couplings: Vec<Coupling>,
}

impl SubspaceHamiltonian {
    /// Supported for `n ∈ {0, 1, 2}`.
    pub fn build(n: u32) -> Result<Self> {
        if n > 2 {
            return domain(format!("only 0-, 1- and 2-excitation subspaces are supported, got {n}"));
        }
        let basis = canonical_basis(n);
        let index = |k: BasisKet| basis.iter().position(|b| *b == k).expect("excitation number is conserved");
        let mut couplings = Vec::new();
        for (col, ket) in basis.iter().enumerate() {
            for atom in [Atom::A, Atom::B] {
                let excited = match atom {
                    Atom::A => ket.a_excited,
                    Atom::B => ket.b_excited,
                };
                let flip = |k: BasisKet| match atom {
                    Atom::A => BasisKet { a_excited: !k.a_excited, ..k },
                    Atom::B => BasisKet { b_excited: !k.b_excited, ..k },
                };
                if excited {
                    // σ₋ a†: emit a photon
                    let target = BasisKet { photons: ket.photons + 1, ..flip(*ket) };
                    let factor = f64::from(ket.photons + 1).sqrt();
                    couplings.push(Coupling { row: index(target), col, atom, factor, conjugate: true });
                } else if ket.photons > 0 {
                    // σ₊ a: absorb a photon
                    let target = BasisKet { photons: ket.photons - 1, ..flip(*ket) };
                    let factor = f64::from(ket.photons).sqrt();
                    couplings.push(Coupling { row: index(target), col, atom, factor, conjugate: false });
                }
            }
        }
        Ok(Self { n_excitations: n, basis, couplings })
    }

    pub fn n_excitations(&self) -> u32 {
        self.n_excitations
    }

    pub fn basis(&self) -> &[BasisKet] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn element(&self, c: &Coupling, g_a: C64, g_b: C64) -> C64 {
        let g = match c.atom {
            Atom::A => g_a,
            Atom::B => g_b,
        };
        (if c.conjugate { g.conj() } else { g }) * c.factor
    }

    /// Dense Hermitian matrix for the given couplings (rad/s, or rad when
    /// passed pulse areas).
    pub fn matrix(&self, g_a: C64, g_b: C64) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for c in &self.couplings {
            m[(c.row, c.col)] += self.element(c, g_a, g_b);
        }
        m
    }

    // out = -i H ψ
    fn derivative(&self, g_a: C64, g_b: C64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for c in &self.couplings {
            out[c.row] += self.element(c, g_a, g_b) * psi[c.col];
        }
        for z in out.iter_mut() {
            *z = C64::new(z.im, -z.re);
        }
    }
}

/// Exact propagator `exp(-i M)` for proportional couplings whose integrated
/// generator is `M = H(G_A, G_B)`, via a dense matrix exponential.
pub fn propagator_from_areas(h: &SubspaceHamiltonian, areas: PulseAreas) -> DMatrix<C64> {
    let m = h.matrix(C64::new(areas.g_a, 0.0), C64::new(areas.g_b, 0.0));
    (m * C64::new(0.0, -1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of equally spaced output points, including both endpoints.
    pub output_points: usize,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-11, output_points: 2000, max_steps: 10_000_000 }
    }
}

impl EvolveOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }
}

/// Output of [`evolve`] sampled on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeVector>,
    /// Largest accepted weighted local-error estimate in each output
    /// interval (≤ 1 means within tolerance); the first entry is 0.
    pub local_errors: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &AmplitudeVector {
        self.states.last().expect("trajectory has at least two points")
    }

    /// `max_t |‖ψ(t)‖² − 1|`.
    pub fn norm_drift(&self) -> f64 {
        self.states.iter().fold(0.0, |m, s| m.max((s.norm_sqr() - 1.0).abs()))
    }

    /// CSV with `time_s`, then `P_<ket>` per basis ket, then `re_<ket>`,
    /// `im_<ket>` pairs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let basis = self.states[0].basis();
        let mut header = vec!["time_s".to_string()];
        header.extend(basis.iter().map(|k| format!("P_{}", k.label())));
        for k in basis {
            header.push(format!("re_{}", k.label()));
            header.push(format!("im_{}", k.label()));
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![fmt17(*t)];
            row.extend(s.amplitudes().iter().map(|z| fmt17(z.norm_sqr())));
            for z in s.amplitudes() {
                row.push(fmt17(z.re));
                row.push(fmt17(z.im));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct Stepper<'a, FA, FB> {
    h: &'a SubspaceHamiltonian,
    g_a: &'a FA,
    g_b: &'a FB,
    opts: EvolveOptions,
    k: Vec<Vec<C64>>,
    stage: Vec<C64>,
    next: Vec<C64>,
}

impl<FA, FB> Stepper<'_, FA, FB>
where
    FA: Fn(f64) -> C64,
    FB: Fn(f64) -> C64,
{
    // One trial step of size `dt`; fills `self.next` and returns the weighted
    // error norm.
    #[allow(clippy::needless_range_loop)] // stage sums read clearer with explicit indices
    fn trial(&mut self, t: f64, dt: f64, psi: &[C64]) -> f64 {
        let n = psi.len();
        for s in 0..7 {
            for i in 0..n {
                let mut acc = psi[i];
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += self.k[j][i] * (dt * a);
                }
                self.stage[i] = acc;
            }
            let ts = t + C[s] * dt;
            let (ga, gb) = ((self.g_a)(ts), (self.g_b)(ts));
            self.h.derivative(ga, gb, &self.stage, &mut self.k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut hi = psi[i];
            let mut diff = C64::new(0.0, 0.0);
            for s in 0..7 {
                hi += self.k[s][i] * (dt * B5[s]);
                diff += self.k[s][i] * (dt * (B5[s] - B4[s]));
            }
            self.next[i] = hi;
            let scale = self.opts.abs_tol + self.opts.rel_tol * psi[i].norm().max(hi.norm());
            err = err.max(diff.norm() / scale);
        }
        err
    }
}

/// Integrate from `psi0` at `t0` to `t1` with couplings `g_a(t)`, `g_b(t)`
/// (rad/s). Internal steps are adaptive; output is on a uniform grid of
/// `opts.output_points` times.
pub fn evolve<FA, FB>(
    h: &SubspaceHamiltonian,
    g_a: FA,
    g_b: FB,
    psi0: &AmplitudeVector,
    t0: f64,
    t1: f64,
    opts: EvolveOptions,
) -> Result<Trajectory>
where
    FA: Fn(f64) -> C64,
    FB: Fn(f64) -> C64,
{
    if psi0.basis() != h.basis() {
        return domain("initial state is not in the Hamiltonian's subspace");
    }
    if (psi0.norm_sqr() - 1.0).abs() > 1e-10 {
        return domain(format!("initial state is not normalised (‖ψ‖² = {})", psi0.norm_sqr()));
    }
    if !(t0 < t1) {
        return domain(format!("evolve needs t0 < t1, got [{t0}, {t1}]"));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return domain("tolerances must be > 0");
    }
    if opts.output_points < 2 {
        return domain("at least two output points are required");
    }

    let n = h.dim();
    let mut stepper = Stepper {
        h,
        g_a: &g_a,
        g_b: &g_b,
        opts,
        k: vec![vec![C64::new(0.0, 0.0); n]; 7],
        stage: vec![C64::new(0.0, 0.0); n],
        next: vec![C64::new(0.0, 0.0); n],
    };

    let span = t1 - t0;
    let out_times: Vec<f64> = (0..opts.output_points)
        .map(|k| if k + 1 == opts.output_points { t1 } else { t0 + span * k as f64 / (opts.output_points - 1) as f64 })
        .collect();

    let mut psi = psi0.amplitudes().to_vec();
    let mut states = vec![psi0.clone()];
    let mut local_errors = vec![0.0];
    let mut t = t0;
    let mut dt = span / opts.output_points as f64;
    let (mut accepted, mut rejected) = (0usize, 0usize);

    for &target in &out_times[1..] {
        let mut worst = 0.0f64;
        while t < target {
            let remaining = target - t;
            let last = dt >= remaining;
            let step = if last { remaining } else { dt };
            let min_step = 1e-13 * t.abs().max(span);
            if step < min_step && !last {
                return Err(Error::StepUnderflow { time: t, step });
            }
            let err = stepper.trial(t, step, &psi);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + step };
                psi.copy_from_slice(&stepper.next);
                worst = worst.max(err);
                accepted += 1;
                if !last || factor < 1.0 {
                    dt = step * factor;
                }
            } else {
                rejected += 1;
                dt = step * factor;
                if dt < min_step {
                    return Err(Error::StepUnderflow { time: t, step: dt });
                }
            }
            if accepted + rejected > opts.max_steps {
                return Err(Error::StepUnderflow { time: t, step: dt });
            }
        }
        states.push(AmplitudeVector::from_amplitudes(h.n_excitations(), psi.clone())?);
        local_errors.push(worst);
    }

    Ok(Trajectory { times: out_times, states, local_errors, accepted_steps: accepted, rejected_steps: rejected })
}

/// Return probability `|⟨110|ψ(t1)⟩|²` of the doubly excited atom pair after
/// the given couplings, integrated in the two-excitation subspace.
pub fn two_excitation_return<FA, FB>(g_a: FA, g_b: FB, t0: f64, t1: f64, opts: EvolveOptions) -> Result<f64>
where
    FA: Fn(f64) -> C64,
    FB: Fn(f64) -> C64,
{
    let ket = BasisKet::new(true, true, 0);
    let h = SubspaceHamiltonian::build(2)?;
    let psi0 = AmplitudeVector::basis_state(ket);
    let traj = evolve(&h, g_a, g_b, &psi0, t0, t1, EvolveOptions { output_points: 2, ..opts })?;
    Ok(traj.final_state().amplitude(ket).expect("ket in basis").norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::logical_unitary;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn subspace_shapes() {
        assert!(SubspaceHamiltonian::build(3).is_err());
        let h0 = SubspaceHamiltonian::build(0).unwrap();
        assert_eq!(h0.matrix(c(1.0), c(1.0)), DMatrix::zeros(1, 1));
        let h1 = SubspaceHamiltonian::build(1).unwrap();
        let m = h1.matrix(c(1.0), c(0.414));
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.414, 1.0, 0.414, 0.0]).map(c);
        assert_eq!(m, expect);
        let h2 = SubspaceHamiltonian::build(2).unwrap();
        let m = h2.matrix(c(0.3), c(0.7));
        let s2 = 2f64.sqrt();
        // basis |110⟩, |101⟩, |011⟩, |002⟩
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.7, 0.3, 0.0, 0.7, 0.0, 0.0, s2 * 0.3, 0.3, 0.0, 0.0, s2 * 0.7, 0.0, s2 * 0.3, s2 * 0.7, 0.0],
        )
        .map(c);
        assert!((m - expect).norm() < 1e-15);
    }

    #[test]
    fn complex_coupling_hermitian() {
        let h2 = SubspaceHamiltonian::build(2).unwrap();
        let m = h2.matrix(C64::new(0.3, 0.2), C64::new(-0.1, 0.5));
        assert!((m.adjoint() - &m).norm() < 1e-15);
    }

    #[test]
    fn two_excitation_spectrum() {
        // Oracle: the two-mode operator built from explicit ladder matrices
        // on the full 2⊗2⊗3 space, restricted to the 2-excitation block.
        let g = 0.37;
        let sp = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]); // |e⟩⟨g|, e = index 0
        let id2 = DMatrix::<f64>::identity(2, 2);
        let mut a = DMatrix::<f64>::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 2)] = 2f64.sqrt();
        let spa = sp.kronecker(&id2).kronecker(&a);
        let spb = id2.kronecker(&sp).kronecker(&a);
        let full = (&spa + spa.transpose() + &spb + spb.transpose()) * g;
        let ev = nalgebra::SymmetricEigen::new(full).eigenvalues;
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let h2 = SubspaceHamiltonian::build(2).unwrap();
        let mut sub: Vec<f64> = nalgebra::SymmetricEigen::new(h2.matrix(c(g), c(g)).map(|z| z.re)).eigenvalues.iter().copied().collect();
        sub.sort_by(f64::total_cmp);
        let r6 = 6f64.sqrt() * g;
        let expect = [-r6, 0.0, 0.0, r6];
        for (x, y) in sub.iter().zip(expect) {
            assert!((x - y).abs() < 1e-14);
        }
        // every subspace eigenvalue appears in the full spectrum
        for x in &sub {
            assert!(ev.iter().any(|y| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_coupling_is_identity() {
        let h = SubspaceHamiltonian::build(1).unwrap();
        let psi0 = AmplitudeVector::basis_state(BasisKet::new(true, false, 0));
        let tr = evolve(&h, |_| c(0.0), |_| c(0.0), &psi0, 0.0, 1.0, EvolveOptions::default()).unwrap();
        assert_eq!(tr.final_state(), &psi0);
        assert_eq!(tr.times.len(), 2000);
        let h0 = SubspaceHamiltonian::build(0).unwrap();
        let vac = AmplitudeVector::basis_state(BasisKet::new(false, false, 0));
        let tr = evolve(&h0, |_| c(5.0), |_| c(5.0), &vac, 0.0, 1.0, EvolveOptions::default()).unwrap();
        assert_eq!(tr.final_state(), &vac);
    }

    #[test]
    fn constant_coupling_matches_closed_form() {
        let h = SubspaceHamiltonian::build(1).unwrap();
        let (ga, gb, t) = (1.3e6, 0.6e6, 2.2e-6);
        let psi0 = AmplitudeVector::basis_state(BasisKet::new(true, false, 0));
        let tr = evolve(&h, |_| c(ga), |_| c(gb), &psi0, 0.0, t, EvolveOptions::default()).unwrap();
        let u = logical_unitary(PulseAreas::new(ga * t, gb * t));
        for (x, y) in tr.final_state().amplitudes().iter().zip(u.column(0)) {
            assert!((x - y).norm() < 1e-8);
        }
        assert!(tr.norm_drift() < 1e-8);
        assert!(tr.local_errors.iter().all(|e| *e <= 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        let h = SubspaceHamiltonian::build(1).unwrap();
        let psi0 = AmplitudeVector::basis_state(BasisKet::new(true, false, 0));
        let opts = EvolveOptions::default();
        assert!(evolve(&h, |_| c(0.0), |_| c(0.0), &psi0, 1.0, 0.0, opts).is_err());
        let wrong = AmplitudeVector::basis_state(BasisKet::new(true, true, 0));
        assert!(evolve(&h, |_| c(0.0), |_| c(0.0), &wrong, 0.0, 1.0, opts).is_err());
        let bad = EvolveOptions { rel_tol: 0.0, ..opts };
        assert!(evolve(&h, |_| c(0.0), |_| c(0.0), &psi0, 0.0, 1.0, bad).is_err());
    }

    #[test]
    fn step_underflow_reported() {
        let h = SubspaceHamiltonian::build(1).unwrap();
        let psi0 = AmplitudeVector::basis_state(BasisKet::new(true, false, 0));
        let opts = EvolveOptions { rel_tol: 1e-300, abs_tol: 1e-300, ..EvolveOptions::default() };
        let r = evolve(&h, |t: f64| c(1e3 * (1e3 * t).sin()), |_| c(0.0), &psi0, 0.0, 1.0, opts);
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn two_excitation_zero_coupling() {
        let f = two_excitation_return(|_| c(0.0), |_| c(0.0), 0.0, 1.0, EvolveOptions::default()).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn csv_layout() {
        let h = SubspaceHamiltonian::build(1).unwrap();
        let psi0 = AmplitudeVector::basis_state(BasisKet::new(true, false, 0));
        let opts = EvolveOptions { output_points: 3, ..Default::default() };
        let tr = evolve(&h, |_| c(1.0), |_| c(0.0), &psi0, 0.0, 1.0, opts).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "time_s,P_100,P_010,P_001,re_100,im_100,re_010,im_010,re_001,im_001");
        assert_eq!(lines.count(), 3);
    }
}
