//! Couplings derived from a sampled cavity field: peak-energy point, mode
//! volume, normalised profile along an atom path, and in-plane TM fraction.
//!
//! Grids store samples at `origin + i·spacing` on each axis, each sample
//! standing for one cell of volume `dx·dy·dz`. For a 2D grid (`nz = 1`) the z
//! spacing is the effective height used to turn the mode area into a volume.
//! Arrays are row-major with z fastest: `idx = (ix·ny + iy)·nz + iz`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingMode, CouplingTrace};
use crate::error::{domain, Error, Result};
use crate::units::CavityParams;
use crate::C64;

/// Permittivity of the synthetic rods (silicon).
pub const ROD_EPSILON: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    epsilon: Vec<f64>,
    /// One array per field component: `[E_z]` or `[E_x, E_y, E_z]`.
    field: Vec<Vec<C64>>,
}

/// On-disk JSON layout of a [`FieldGrid`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGridFile {
    pub dims: [usize; 3],
    pub spacing_m: [f64; 3],
    pub origin_m: [f64; 3],
    pub components: usize,
    pub epsilon: Vec<f64>,
    pub field_re: Vec<Vec<f64>>,
    pub field_im: Vec<Vec<f64>>,
}

impl FieldGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], epsilon: Vec<f64>, field: Vec<Vec<C64>>) -> Result<Self> {
        let cells: usize = dims.iter().product();
        if cells == 0 {
            return domain("field grid has no cells");
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return domain(format!("grid spacing must be > 0, got {spacing:?}"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return domain("grid origin must be finite");
        }
        if epsilon.len() != cells {
            return domain(format!("epsilon has {} entries, grid has {cells} cells", epsilon.len()));
        }
        if epsilon.iter().any(|e| !(*e >= 1.0)) {
            return domain("epsilon must be >= 1 everywhere");
        }
        if !(field.len() == 1 || field.len() == 3) {
            return domain(format!("field must have 1 or 3 components, got {}", field.len()));
        }
        if field.iter().any(|c| c.len() != cells) {
            return domain("field component length does not match the grid");
        }
        if field.iter().flatten().any(|z| !z.is_finite()) {
            return domain("field contains non-finite values");
        }
        Ok(Self { dims, spacing, origin, epsilon, field })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn components(&self) -> usize {
        self.field.len()
    }

    /// Field samples, one array per component.
    pub fn field(&self) -> &[Vec<C64>] {
        &self.field
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn is_2d(&self) -> bool {
        self.dims[2] == 1
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let iz = idx % self.dims[2];
        let iy = (idx / self.dims[2]) % self.dims[1];
        let ix = idx / (self.dims[1] * self.dims[2]);
        let i = [ix, iy, iz];
        std::array::from_fn(|a| self.origin[a] + i[a] as f64 * self.spacing[a])
    }

    /// Coordinate extent `[min, max]` along each axis.
    pub fn bounds(&self) -> [(f64, f64); 3] {
        std::array::from_fn(|a| (self.origin[a], self.origin[a] + (self.dims[a] - 1) as f64 * self.spacing[a]))
    }

    /// `|E|²` summed over components at a sample.
    pub fn intensity(&self, idx: usize) -> f64 {
        self.field.iter().map(|c| c[idx].norm_sqr()).sum()
    }

    /// The component that couples to the atoms: `E_z` for both layouts.
    pub fn coupling_component(&self) -> &[C64] {
        self.field.last().expect("at least one component")
    }

    /// Multilinear interpolation of the coupling component; `None` outside the
    /// grid.
    pub fn interpolate(&self, r: [f64; 3]) -> Option<C64> {
        let comp = self.coupling_component();
        let mut lo = [0usize; 3];
        let mut w = [0.0f64; 3];
        for a in 0..3 {
            if self.dims[a] == 1 {
                continue;
            }
            let f = (r[a] - self.origin[a]) / self.spacing[a];
            let max = (self.dims[a] - 1) as f64;
            let tol = 1e-9;
            if f < -tol || f > max + tol {
                return None;
            }
            let f = f.clamp(0.0, max);
            let i = (f.floor() as usize).min(self.dims[a] - 2);
            lo[a] = i;
            w[a] = f - i as f64;
        }
        let mut acc = C64::new(0.0, 0.0);
        for corner in 0..8usize {
            let mut weight = 1.0;
            let mut idx = [0usize; 3];
            let mut skip = false;
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                if self.dims[a] == 1 {
                    if bit == 1 {
                        skip = true;
                    }
                    continue;
                }
                idx[a] = lo[a] + bit;
                weight *= if bit == 1 { w[a] } else { 1.0 - w[a] };
            }
            if skip || weight == 0.0 {
                continue;
            }
            acc += comp[self.index(idx[0], idx[1], idx[2])] * weight;
        }
        Some(acc)
    }

    pub fn from_file_repr(f: FieldGridFile) -> Result<Self> {
        if f.field_re.len() != f.components || f.field_im.len() != f.components {
            return Err(Error::Format(format!("expected {} field components", f.components)));
        }
        let field = f
            .field_re
            .iter()
            .zip(&f.field_im)
            .map(|(re, im)| {
                if re.len() != im.len() {
                    return Err(Error::Format("field_re/field_im length mismatch".into()));
                }
                Ok(re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(f.dims, f.spacing_m, f.origin_m, f.epsilon, field)
    }

    pub fn to_file_repr(&self) -> FieldGridFile {
        FieldGridFile {
            dims: self.dims,
            spacing_m: self.spacing,
            origin_m: self.origin,
            components: self.field.len(),
            epsilon: self.epsilon.clone(),
            field_re: self.field.iter().map(|c| c.iter().map(|z| z.re).collect()).collect(),
            field_im: self.field.iter().map(|c| c.iter().map(|z| z.im).collect()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file_repr(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_file_repr())?)?;
        Ok(())
    }
}

/// Location and permittivity of the maximum of `ε|E|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakPoint {
    pub index: usize,
    pub position: [f64; 3],
    pub eps_m: f64,
    /// `|E(r_m)|`.
    pub field_magnitude: f64,
}

/// Argmax of `ε|E|²`; ties go to the lowest linear index.
pub fn peak_energy_point(grid: &FieldGrid) -> Result<PeakPoint> {
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for idx in 0..grid.epsilon.len() {
        let v = grid.epsilon[idx] * grid.intensity(idx);
        if v > best_val {
            best_val = v;
            best = idx;
        }
    }
    if !(best_val > 0.0) {
        return domain("field is identically zero");
    }
    Ok(PeakPoint { index: best, position: grid.position(best), eps_m: grid.epsilon[best], field_magnitude: grid.intensity(best).sqrt() })
}

/// `Σ ε|E|² dV / (ε_m |E(r_m)|²)` by the midpoint rule.
pub fn mode_volume(grid: &FieldGrid) -> Result<f64> {
    let peak = peak_energy_point(grid)?;
    let total: f64 = (0..grid.epsilon.len()).map(|i| grid.epsilon[i] * grid.intensity(i)).sum();
    Ok(total * grid.cell_volume() / (peak.eps_m * peak.field_magnitude * peak.field_magnitude))
}

/// Mode volume of a 2D grid with an explicit effective height (m).
pub fn mode_volume_2d(grid: &FieldGrid, effective_height: f64) -> Result<f64> {
    if !grid.is_2d() {
        return domain("effective height only applies to 2D grids");
    }
    if !(effective_height > 0.0) {
        return domain("effective height must be > 0");
    }
    Ok(mode_volume(grid)? / grid.spacing[2] * effective_height)
}

/// Straight, constant-speed atom trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub entry: [f64; 3],
    pub direction: [f64; 3],
    pub length: f64,
    pub velocity: f64,
    pub zeta: f64,
}

impl PathSpec {
    /// Normalises `direction`.
    pub fn new(entry: [f64; 3], direction: [f64; 3], length: f64, velocity: f64, zeta: f64) -> Result<Self> {
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return domain("path direction must be a non-zero vector");
        }
        if !(length > 0.0 && velocity > 0.0) {
            return domain("path length and velocity must be > 0");
        }
        Ok(Self { entry, direction: direction.map(|d| d / norm), length, velocity, zeta })
    }

    /// Path along +x through the grid centre line at `(y, z)`, spanning the
    /// full x extent.
    pub fn across(grid: &FieldGrid, y: f64, z: f64, velocity: f64, zeta: f64) -> Result<Self> {
        let [(x0, x1), _, _] = grid.bounds();
        Self::new([x0, y, z], [1.0, 0.0, 0.0], x1 - x0, velocity, zeta)
    }

    pub fn point(&self, s: f64) -> [f64; 3] {
        std::array::from_fn(|a| self.entry[a] + s * self.direction[a])
    }

    pub fn transit_time(&self) -> f64 {
        self.length / self.velocity
    }

    pub fn with_velocity(&self, velocity: f64) -> Self {
        Self { velocity, ..*self }
    }
}

/// `g₀ Ψ(r(t)) cos ζ` sampled at `n_samples` equally spaced arclengths.
/// A path that leaves the grid is clipped to its in-grid part.
pub fn coupling_trace_from_field(
    grid: &FieldGrid,
    path: &PathSpec,
    cavity: &CavityParams,
    n_samples: usize,
    mode: CouplingMode,
) -> Result<CouplingTrace> {
    if n_samples < 2 {
        return domain("at least two samples are needed along the path");
    }
    if grid.interpolate(path.entry).is_none() {
        return domain("path entry point lies outside the grid");
    }
    let length = clipped_length(grid, path);
    if !(length > 0.0) {
        return domain("path has no extent inside the grid");
    }
    if length < path.length {
        log::warn!("path clipped from {} m to {} m at the grid boundary", path.length, length);
    }
    let peak = peak_energy_point(grid)?;
    let scale = cavity.g0 * path.zeta.cos() / peak.field_magnitude;
    let mut times = Vec::with_capacity(n_samples);
    let mut values = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let s = length * k as f64 / (n_samples - 1) as f64;
        let psi = grid.interpolate(path.point(s)).ok_or_else(|| Error::Domain("path sample outside grid".into()))?;
        times.push(s / path.velocity);
        values.push(psi * scale);
    }
    CouplingTrace::new(times, values, mode)
}

#[allow(clippy::needless_range_loop)] // indexes three parallel per-axis arrays
fn clipped_length(grid: &FieldGrid, path: &PathSpec) -> f64 {
    let bounds = grid.bounds();
    let mut s_max = path.length;
    for a in 0..3 {
        if grid.dims[a] == 1 {
            continue;
        }
        let d = path.direction[a];
        let (lo, hi) = bounds[a];
        if d > 0.0 {
            s_max = s_max.min((hi - path.entry[a]) / d);
        } else if d < 0.0 {
            s_max = s_max.min((lo - path.entry[a]) / d);
        }
    }
    s_max.max(0.0)
}

/// `Σ|E_z|² / Σ|E|²` over the z-plane `plane`.
pub fn polarization_fraction(grid: &FieldGrid, plane: usize) -> Result<f64> {
    if grid.components() != 3 {
        return domain("polarization fraction needs a 3-component field");
    }
    if plane >= grid.dims[2] {
        return domain(format!("plane {plane} outside 0..{}", grid.dims[2]));
    }
    let (mut ez, mut total) = (0.0, 0.0);
    for ix in 0..grid.dims[0] {
        for iy in 0..grid.dims[1] {
            let idx = grid.index(ix, iy, plane);
            ez += grid.field[2][idx].norm_sqr();
            total += grid.intensity(idx);
        }
    }
    if total == 0.0 {
        return domain("field vanishes in the requested plane");
    }
    Ok(ez / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Cavity2d,
    Cavity3d,
}

/// Geometry of a synthetic defect mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub lattice_const: f64,
    pub decay_radius: f64,
    /// Samples per side of the centre along x and y (grid is `2n+1` wide).
    pub half_cells: usize,
    /// Samples per side of the centre along z for `cavity3d`.
    #[serde(default)]
    pub half_cells_z: usize,
    pub spacing: f64,
}

/// Transverse field amplitude relative to `E_z` in the 3D synthetic mode.
const TRANSVERSE_RATIO: f64 = 0.08;
/// Global phase given to synthetic fields.
const SYNTH_PHASE: f64 = 0.25;

fn rod_epsilon(x: f64, y: f64, l: f64) -> f64 {
    // triangular lattice a1 = (l, 0), a2 = (l/2, l√3/2); rods r = 0.175 l,
    // central defect rod r = 0.071 l
    let s3 = 3f64.sqrt();
    let j0 = (2.0 * y / (s3 * l)).round() as i64;
    for j in (j0 - 1)..=(j0 + 1) {
        let i0 = ((x - 0.5 * l * j as f64) / l).round() as i64;
        for i in (i0 - 1)..=(i0 + 1) {
            let cx = l * (i as f64 + 0.5 * j as f64);
            let cy = l * 0.5 * s3 * j as f64;
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            let radius = if i == 0 && j == 0 { 0.071 * l } else { 0.175 * l };
            if r <= radius {
                return ROD_EPSILON;
            }
        }
    }
    1.0
}

/// Rod permittivity averaged over the `h × h` cell centred at `(x, y)`.
fn cell_epsilon(x: f64, y: f64, h: f64, l: f64) -> f64 {
    const SUB: usize = 8;
    let mut acc = 0.0;
    for i in 0..SUB {
        for j in 0..SUB {
            let dx = ((i as f64 + 0.5) / SUB as f64 - 0.5) * h;
            let dy = ((j as f64 + 0.5) / SUB as f64 - 0.5) * h;
            acc += rod_epsilon(x + dx, y + dy, l);
        }
    }
    acc / (SUB * SUB) as f64
}

/// Deterministic stand-in for a computed defect mode: a radially decaying
/// field oscillating with period `2l`, centred on a reduced rod in a
/// triangular rod lattice. The maximum of `ε|E|²` is the centre sample.
/// Permittivity is averaged over each cell, so the centre sample keeps
/// `ε = 12` as long as `spacing ≤ l/10`. The 3D variant decays along z as well and carries a small transverse
/// component so that the in-plane TM fraction is about 0.994.
pub fn synthesize_mode(spec: &SynthSpec) -> Result<FieldGrid> {
    let SynthSpec { kind, lattice_const: l, decay_radius: rd, half_cells: n, half_cells_z: nzh, spacing: h } = *spec;
    if !(l > 0.0 && rd > 0.0 && h > 0.0) || n == 0 {
        return domain("synthetic mode needs positive geometry and at least one cell per side");
    }
    let (nz, dz, z0) = match kind {
        SynthKind::Cavity2d => (1, l, 0.0),
        SynthKind::Cavity3d => (2 * nzh + 1, h, -(nzh as f64) * h),
    };
    let nxy = 2 * n + 1;
    let dims = [nxy, nxy, nz];
    let origin = [-(n as f64) * h, -(n as f64) * h, z0];
    let cells = nxy * nxy * nz;
    let phase = C64::from_polar(1.0, SYNTH_PHASE);
    let mut epsilon = Vec::with_capacity(cells);
    let mut ez = Vec::with_capacity(cells);
    let mut ex = Vec::with_capacity(cells);
    let mut ey = Vec::with_capacity(cells);
    for ix in 0..nxy {
        for iy in 0..nxy {
            let x = origin[0] + ix as f64 * h;
            let y = origin[1] + iy as f64 * h;
            let eps = cell_epsilon(x, y, h, l);
            for iz in 0..nz {
                let z = z0 + iz as f64 * dz;
                let r = x.hypot(y);
                let radial = (-r / rd).exp() * (PI * r / l).cos();
                let axial = if nz > 1 { (-z.abs() / rd).exp() } else { 1.0 };
                let e = phase * (radial * axial);
                epsilon.push(eps);
                ez.push(e);
                let phi = y.atan2(x);
                ex.push(e * (TRANSVERSE_RATIO * phi.cos()));
                ey.push(e * (TRANSVERSE_RATIO * phi.sin()));
            }
        }
    }
    let field = match kind {
        SynthKind::Cavity2d => vec![ez],
        SynthKind::Cavity3d => vec![ex, ey, ez],
    };
    FieldGrid::new(dims, [h, h, dz], origin, epsilon, field)
}
