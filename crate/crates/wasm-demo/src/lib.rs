//! Browser bindings: amplitude surfaces, probability evolution and coupling
//! traces for the generic two-atom cavity transit.

use std::f64::consts::PI;

use cavity_gates::analytic::closed_form_trajectory;
use cavity_gates::coupling::{CouplingProfile, GenericProfileParams};
use cavity_gates::ode::{evolve, EvolveOptions, SubspaceHamiltonian};
use cavity_gates::sweep::{linspace, surface, LogicalInput};
use cavity_gates::{AmplitudeVector, BasisKet, C64};
use wasm_bindgen::prelude::wasm_bindgen;
use wasm_bindgen::JsValue;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const TRANSITION_OMEGA: f64 = 2.4e15;

/// Reference cavity: Ω₀ = 11 GHz, l = 1.6πc/ω, L = 10l, R = l.
fn reference_params(velocity: f64) -> GenericProfileParams {
    let l = 1.6 * PI * SPEED_OF_LIGHT / TRANSITION_OMEGA;
    GenericProfileParams { omega0: 11e9, path_half_length: 10.0 * l, defect_radius: l, lattice_const: l, velocity, zeta: 0.0 }
}

fn checked_velocity(velocity: f64) -> Result<GenericProfileParams, String> {
    let params = reference_params(velocity);
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

/// Final `a` values followed by final `b` values, each `n_v × n_p` with
/// velocity as the slow index.
pub fn surface_values(v_min: f64, v_max: f64, n_v: usize, p_min: f64, p_max: f64, n_p: usize, b_excited: bool) -> Result<Vec<f64>, String> {
    let params = checked_velocity(v_min)?;
    let initial = if b_excited { LogicalInput::BExcited } else { LogicalInput::AExcited };
    let grid = surface(&params, &linspace(v_min, v_max, n_v), &linspace(p_min, p_max, n_p), initial).map_err(|e| e.to_string())?;
    Ok(grid.a.into_iter().chain(grid.b).collect())
}

/// Rows `[t, P_100, P_010, P_001]` flattened, starting from `|100⟩`.
pub fn probability_rows(velocity: f64, p: f64, use_ode: bool, n_points: usize) -> Result<Vec<f64>, String> {
    let a = CouplingProfile::Generic(checked_velocity(velocity)?);
    let tr = if use_ode {
        let h = SubspaceHamiltonian::build(1).map_err(|e| e.to_string())?;
        let (t0, t1) = a.window();
        let opts = EvolveOptions { output_points: n_points, ..Default::default() };
        let psi0 = AmplitudeVector::basis_state(BasisKet::new(true, false, 0));
        evolve(&h, |t| C64::new(a.interaction(t), 0.0), |t| C64::new(p * a.interaction(t), 0.0), &psi0, t0, t1, opts)
    } else {
        closed_form_trajectory(&a, p, 0, n_points)
    }
    .map_err(|e| e.to_string())?;
    Ok(tr.times.iter().zip(&tr.states).flat_map(|(t, s)| std::iter::once(*t).chain(s.probabilities())).collect())
}

/// Rows `[t, g_A, g_B]` flattened over the transit window.
pub fn trace_rows(velocity: f64, p: f64, n_points: usize) -> Result<Vec<f64>, String> {
    let a = CouplingProfile::Generic(checked_velocity(velocity)?);
    if n_points < 2 {
        return Err("at least two points are needed".into());
    }
    let (t0, t1) = a.window();
    Ok(linspace(t0, t1, n_points)
        .into_iter()
        .flat_map(|t| {
            let g = a.interaction(t);
            [t, g, p * g]
        })
        .collect())
}

#[wasm_bindgen]
pub fn amplitude_surface(
    v_min: f64,
    v_max: f64,
    n_v: usize,
    p_min: f64,
    p_max: f64,
    n_p: usize,
    b_excited: bool,
) -> Result<Vec<f64>, JsValue> {
    surface_values(v_min, v_max, n_v, p_min, p_max, n_p, b_excited).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn evolve_probabilities(velocity: f64, p: f64, use_ode: bool, n_points: usize) -> Result<Vec<f64>, JsValue> {
    probability_rows(velocity, p, use_ode, n_points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn coupling_traces(velocity: f64, p: f64, n_points: usize) -> Result<Vec<f64>, JsValue> {
    trace_rows(velocity, p, n_points).map_err(|e| JsValue::from_str(&e))
}
