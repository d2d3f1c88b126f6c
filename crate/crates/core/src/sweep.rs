//! Asymptotic amplitude surfaces `a(V, p)`, `b(V, p)` over a velocity/ratio
//! grid, and nearest-gridline slices through them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{logical_unitary, PulseAreas};
use crate::coupling::{transit_area, CouplingProfile, GenericProfileParams};
use crate::error::{domain, Error, Result};
use crate::export::fmt17;

/// Which atom carries the excitation before the transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalInput {
    /// `|10⟩`: atom A excited.
    #[serde(rename = "10")]
    AExcited,
    /// `|01⟩`: atom B excited.
    #[serde(rename = "01")]
    BExcited,
}

impl LogicalInput {
    fn column(self) -> usize {
        match self {
            Self::AExcited => 0,
            Self::BExcited => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub v_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub initial: LogicalInput,
    /// Amplitude on `|100⟩`, row-major with velocity as the slow index.
    pub a: Vec<f64>,
    /// Amplitude on `|010⟩`, same layout.
    pub b: Vec<f64>,
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Default grid: V in [150, 650] m/s with 251 points, p in [0, 1] with 201.
pub fn default_axes() -> (Vec<f64>, Vec<f64>) {
    (linspace(150.0, 650.0, 251), linspace(0.0, 1.0, 201))
}

fn validate_axis(name: &str, values: &[f64], positive: bool) -> Result<()> {
    if values.len() < 2 {
        return domain(format!("{name} axis needs at least two points"));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return domain(format!("{name} axis must be strictly ascending"));
    }
    if positive && !(values[0] > 0.0) {
        return domain(format!("{name} values must be > 0"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return domain(format!("{name} values must be finite"));
    }
    Ok(())
}

fn row(family: &GenericProfileParams, v: f64, p_values: &[f64], col: usize) -> Result<Vec<(f64, f64)>> {
    let g_a = transit_area(&CouplingProfile::Generic(family.with_velocity(v)))?;
    Ok(p_values
        .iter()
        .map(|p| {
            let u = logical_unitary(PulseAreas::new(g_a, p * g_a));
            let m = u.matrix();
            (m[(0, col)].re, m[(1, col)].re)
        })
        .collect())
}

/// Closed-form amplitudes after the full transit at every `(V, p)`. Rows are
/// evaluated in parallel on the current rayon pool; each cell depends only
/// on its own `(V, p)`.
pub fn surface(family: &GenericProfileParams, v_values: &[f64], p_values: &[f64], initial: LogicalInput) -> Result<SweepGrid> {
    validate_axis("velocity", v_values, true)?;
    validate_axis("p", p_values, false)?;
    family.with_velocity(v_values[0]).validate()?;
    let col = initial.column();
    let rows: Vec<Vec<(f64, f64)>> = v_values.par_iter().map(|&v| row(family, v, p_values, col)).collect::<Result<_>>()?;
    let (a, b) = rows.into_iter().flatten().unzip();
    Ok(SweepGrid { v_values: v_values.to_vec(), p_values: p_values.to_vec(), initial, a, b })
}

/// [`surface`] on a dedicated pool of `workers` threads.
pub fn surface_with_workers(
    family: &GenericProfileParams,
    v_values: &[f64],
    p_values: &[f64],
    initial: LogicalInput,
    workers: usize,
) -> Result<SweepGrid> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?;
    pool.install(|| surface(family, v_values, p_values, initial))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceAxis {
    /// Fix the velocity; abscissa is p.
    V,
    /// Fix the ratio; abscissa is V.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceRow {
    pub abscissa: f64,
    pub a: f64,
    pub b: f64,
}

fn nearest(values: &[f64], x: f64) -> usize {
    values.iter().enumerate().min_by(|(_, u), (_, w)| (*u - x).abs().total_cmp(&(*w - x).abs())).map(|(i, _)| i).expect("axis is non-empty")
}

impl SweepGrid {
    pub fn at(&self, iv: usize, ip: usize) -> (f64, f64) {
        let k = iv * self.p_values.len() + ip;
        (self.a[k], self.b[k])
    }

    /// Values along the gridline nearest to `value` (no interpolation).
    pub fn slice(&self, axis: SliceAxis, value: f64) -> Result<Vec<SliceRow>> {
        let fixed = match axis {
            SliceAxis::V => &self.v_values,
            SliceAxis::P => &self.p_values,
        };
        let (lo, hi) = (fixed[0], fixed[fixed.len() - 1]);
        if !(value >= lo && value <= hi) {
            return domain(format!("slice value {value} outside [{lo}, {hi}]"));
        }
        let i = nearest(fixed, value);
        Ok(match axis {
            SliceAxis::V => self
                .p_values
                .iter()
                .enumerate()
                .map(|(ip, p)| {
                    let (a, b) = self.at(i, ip);
                    SliceRow { abscissa: *p, a, b }
                })
                .collect(),
            SliceAxis::P => self
                .v_values
                .iter()
                .enumerate()
                .map(|(iv, v)| {
                    let (a, b) = self.at(iv, i);
                    SliceRow { abscissa: *v, a, b }
                })
                .collect(),
        })
    }

    /// One surface as CSV: header `v_m_s` then the p values; one row per
    /// velocity.
    pub fn write_surface_csv<W: Write>(&self, mut w: W, which: Surface) -> Result<()> {
        let data = match which {
            Surface::A => &self.a,
            Surface::B => &self.b,
        };
        let header: Vec<String> = std::iter::once("v_m_s".to_string()).chain(self.p_values.iter().map(|p| fmt17(*p))).collect();
        writeln!(w, "{}", header.join(","))?;
        let np = self.p_values.len();
        for (iv, v) in self.v_values.iter().enumerate() {
            let cells: Vec<String> = std::iter::once(fmt17(*v)).chain(data[iv * np..(iv + 1) * np].iter().map(|x| fmt17(*x))).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    A,
    B,
}

pub fn write_slice_csv<W: Write>(w: W, axis: SliceAxis, rows: &[SliceRow]) -> Result<()> {
    let x = match axis {
        SliceAxis::V => "p",
        SliceAxis::P => "v_m_s",
    };
    crate::export::write_table(w, &[x, "a", "b"], rows.iter().map(|r| vec![r.abscissa, r.a, r.b]))
}
