//! Browser bindings for the demo page: trace an SLE curve, scan the
//! admissible region and evaluate the discrete observable.
//!
//! Arrays cross the boundary as flat `Float64Array`s; the layout of each is
//! given on the function.

use parafermion::bounds::{region_scan, Axis, BetaChoice};
use parafermion::discrete::{count_walks, local_relation_residual, HexDomain};
use parafermion::loewner_flow::{sample_driving_path, trace_curve_with, TraceOptions};
use wasm_bindgen::prelude::*;

fn js(e: parafermion::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `[x0, y0, x1, y1, …]` of the traced curve, starting at the boundary.
#[wasm_bindgen]
pub fn trace_sle(
    kappa: f64,
    duration: f64,
    step: f64,
    delta: f64,
    stride: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(JsError::new("kappa must be positive"));
    }
    let path = sample_driving_path(seed, duration, step).map_err(js)?;
    let curve = trace_curve_with(&path, 2.0 / kappa, delta, TraceOptions { stride, tol: 1e-9 }).map_err(js)?;
    Ok(curve.points.iter().flat_map(|p| [p.re, p.im]).collect())
}

/// Lower bound on `F(0)` over an `n_a × n_sigma` grid, row-major in `a`;
/// `NaN` where no variance ceiling exists.
#[wasm_bindgen]
pub fn region_lower_bounds(
    a_lo: f64,
    a_hi: f64,
    n_a: usize,
    sigma_lo: f64,
    sigma_hi: f64,
    n_sigma: usize,
    fixed_beta: bool,
) -> Result<Vec<f64>, JsError> {
    let choice = if fixed_beta { BetaChoice::Fixed } else { BetaChoice::Minimal };
    let grid =
        region_scan(Axis { lo: a_lo, hi: a_hi, n: n_a }, Axis { lo: sigma_lo, hi: sigma_hi, n: n_sigma }, choice)
            .map_err(js)?;
    Ok(grid.lower_bound.into_iter().flatten().collect())
}

/// Discrete observable on a cell domain, kept around so the page can redraw
/// without re-enumerating.
#[wasm_bindgen]
pub struct SawView {
    domain: HexDomain,
    start: usize,
    values: Vec<f64>,
    residuals: Vec<f64>,
    walks: f64,
}

#[wasm_bindgen]
impl SawView {
    /// `cells` uses the text format of the CLI (`q r` per line); empty text
    /// selects the seven-cell flower.
    #[wasm_bindgen(constructor)]
    pub fn new(cells: &str, start: usize, x: f64, sigma: f64, max_len: usize) -> Result<SawView, JsError> {
        let domain =
            if cells.trim().is_empty() { HexDomain::flower() } else { HexDomain::from_text(cells).map_err(js)? };
        let boundary = domain.boundary_mid_edges();
        let w = *boundary.get(start).ok_or_else(|| JsError::new("start index out of range"))?;
        let counts = count_walks(&domain, w, max_len).map_err(js)?;
        let field = counts.field(x, sigma);
        let values =
            domain.mid_edges.iter().zip(&field.values).flat_map(|(m, f)| [m.pos.re, m.pos.im, f.re, f.im]).collect();
        let residuals = (0..domain.vertices.len())
            .flat_map(|v| {
                let p = domain.vertices[v].pos;
                let r = local_relation_residual(&domain, &field, v).expect("vertex index in range");
                [p.re, p.im, r.norm()]
            })
            .collect();
        Ok(SawView { domain, start: w, values, residuals, walks: counts.total() as f64 })
    }

    /// `[x, y, Re F, Im F]` per mid-edge.
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// `[x, y, |residual|]` per vertex.
    pub fn residuals(&self) -> Vec<f64> {
        self.residuals.clone()
    }

    /// `[x1, y1, x2, y2]` per edge or half-edge, for drawing the lattice.
    pub fn segments(&self) -> Vec<f64> {
        self.domain
            .mid_edges
            .iter()
            .flat_map(|m| {
                let p = self.domain.vertices[m.ends.0].pos;
                let q = m.ends.1.map_or(m.pos, |j| self.domain.vertices[j].pos);
                [p.re, p.im, q.re, q.im]
            })
            .collect()
    }

    /// `[x, y]` of the starting mid-edge.
    pub fn start(&self) -> Vec<f64> {
        let p = self.domain.mid_edges[self.start].pos;
        vec![p.re, p.im]
    }

    pub fn boundary_count(&self) -> usize {
        self.domain.boundary_mid_edges().len()
    }

    pub fn walks(&self) -> f64 {
        self.walks
    }
}
