use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::domain::HexDomain;
use super::walks::visit_saws_from_step;
use crate::mc::map_paths;
use crate::{Error, Result};

/// Number of walks from `start` ending at each mid-edge, by length and net
/// turn. Exact integers, so any `(x, σ)` can be evaluated afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCounts {
    pub start: usize,
    pub max_len: usize,
    pub truncated: bool,
    mid_edges: usize,
    /// `[mid-edge][length][turn units + max_len]`
    counts: Vec<u64>,
}

impl WalkCounts {
    fn slot(&self, m: usize, len: usize, units: i32) -> usize {
        let width = 2 * self.max_len + 1;
        (m * (self.max_len + 1) + len) * width + (units + self.max_len as i32) as usize
    }

    pub fn count(&self, m: usize, len: usize, units: i32) -> u64 {
        if len > self.max_len || units.unsigned_abs() as usize > self.max_len {
            return 0;
        }
        self.counts[self.slot(m, len, units)]
    }

    /// Total number of walks, the empty one included.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ_γ e^{−iσW_γ} x^{ℓ(γ)}` and `Σ_γ x^{ℓ(γ)}` for every mid-edge.
    pub fn field(&self, x: f64, sigma: f64) -> DiscreteField {
        let width = 2 * self.max_len + 1;
        let phases: Vec<Complex64> = (0..width)
            .map(|u| Complex64::from_polar(1.0, -sigma * (u as f64 - self.max_len as f64) * PI / 3.0))
            .collect();
        let mut values = vec![Complex64::new(0.0, 0.0); self.mid_edges];
        let mut unsigned = vec![0.0; self.mid_edges];
        for m in 0..self.mid_edges {
            for len in 0..=self.max_len {
                let weight = x.powi(len as i32);
                let base = self.slot(m, len, -(self.max_len as i32));
                for (u, &c) in self.counts[base..base + width].iter().enumerate() {
                    if c > 0 {
                        values[m] += phases[u] * (c as f64 * weight);
                        unsigned[m] += c as f64 * weight;
                    }
                }
            }
        }
        DiscreteField {
            values,
            unsigned,
            x,
            sigma,
            start: self.start,
            max_len: self.max_len,
            truncated: self.truncated,
        }
    }
}

/// Counts all walks from `w` of length at most `max_len`; the two possible
/// first steps are enumerated independently and merged.
pub fn count_walks(domain: &HexDomain, w: usize, max_len: usize) -> Result<WalkCounts> {
    domain.require_boundary(w)?;
    if max_len == 0 {
        return Err(Error::InvalidParameter("max_len must be at least 1".into()));
    }
    // no walk is longer than the number of vertices
    let cap = max_len.min(domain.vertices.len());
    let n_mid = domain.mid_edges.len();
    let empty = || WalkCounts {
        start: w,
        max_len: cap,
        truncated: false,
        mid_edges: n_mid,
        counts: vec![0; n_mid * (cap + 1) * (2 * cap + 1)],
    };
    let parts: Vec<Result<WalkCounts>> = map_paths(2, |k| {
        let mut part = empty();
        part.truncated = visit_saws_from_step(domain, w, cap, k, |p| {
            let s = part.slot(p.end(), p.steps.len(), p.turn_units);
            part.counts[s] += 1;
        })?;
        Ok(part)
    });
    let mut total = empty();
    for part in parts {
        let part = part?;
        total.truncated |= part.truncated;
        for (t, c) in total.counts.iter_mut().zip(&part.counts) {
            *t += c;
        }
    }
    let s = total.slot(w, 0, 0);
    total.counts[s] = 1;
    Ok(total)
}

/// The discrete observable `F(z)` on every mid-edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub values: Vec<Complex64>,
    /// `Σ x^ℓ` over the same walks; bounds `|values|` termwise.
    pub unsigned: Vec<f64>,
    pub x: f64,
    pub sigma: f64,
    pub start: usize,
    pub max_len: usize,
    /// Set when `max_len` cut off some walk.
    pub truncated: bool,
}

impl DiscreteField {
    pub fn zeros(n_mid: usize, start: usize) -> Self {
        DiscreteField {
            values: vec![Complex64::new(0.0, 0.0); n_mid],
            unsigned: vec![0.0; n_mid],
            x: 0.0,
            sigma: 0.0,
            start,
            max_len: 0,
            truncated: false,
        }
    }
}

pub fn discrete_observable(domain: &HexDomain, w: usize, x: f64, sigma: f64, max_len: usize) -> Result<DiscreteField> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("x must be positive, got {x}")));
    }
    Ok(count_walks(domain, w, max_len)?.field(x, sigma))
}

/// Critical weight `1/√(2+√2)`.
pub fn critical_x() -> f64 {
    1.0 / (2.0 + 2f64.sqrt()).sqrt()
}

/// `(p − v)F(p) + (q − v)F(q) + (r − v)F(r)` over the three mid-edges of `v`.
pub fn local_relation_residual(domain: &HexDomain, field: &DiscreteField, v: usize) -> Result<Complex64> {
    let vert = domain.vertices.get(v).ok_or(Error::NotInterior(v))?;
    Ok(vert.mid_edges.iter().map(|&m| (domain.mid_edges[m].pos - vert.pos) * field.values[m]).sum())
}

/// Largest `|residual|` over all vertices, with the vertex attaining it.
pub fn max_relation_residual(domain: &HexDomain, field: &DiscreteField) -> (usize, f64) {
    (0..domain.vertices.len())
        .map(|v| (v, local_relation_residual(domain, field, v).expect("valid vertex").norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}
