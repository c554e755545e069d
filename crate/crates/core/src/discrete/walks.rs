use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::domain::HexDomain;
use crate::loewner_flow::principal;
use crate::{Error, Result};

/// Self-avoiding walk from a boundary mid-edge. Each step crosses one vertex
/// and lands on the next mid-edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SAWPath {
    pub start: usize,
    /// `(vertex, mid-edge)` hops.
    pub steps: Vec<(usize, usize)>,
    /// Turn at each vertex in units of π/3.
    pub turns: Vec<i8>,
}

impl SAWPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.1)
    }

    pub fn turn_units(&self) -> i32 {
        self.turns.iter().map(|&t| t as i32).sum()
    }

    /// Sum of the per-vertex turns.
    pub fn turning(&self) -> f64 {
        self.turn_units() as f64 * PI / 3.0
    }

    /// Follows a turn sequence (each `±1`) from `start`.
    pub fn from_turns(domain: &HexDomain, start: usize, turns: &[i8]) -> Result<Self> {
        let mut v = domain.require_boundary(start)?;
        let mut path = SAWPath { start, steps: Vec::new(), turns: Vec::new() };
        let mut visited = vec![false; domain.vertices.len()];
        let mut at = start;
        for (k, &t) in turns.iter().enumerate() {
            if visited[v] {
                return Err(Error::Domain(format!("turn {k} revisits vertex {v}")));
            }
            visited[v] = true;
            let next = domain.vertices[v]
                .mid_edges
                .iter()
                .copied()
                .find(|&m| m != at && domain.turn_units(v, at, m) == t)
                .ok_or_else(|| Error::Domain(format!("turn {k} = {t} is not available")))?;
            path.steps.push((v, next));
            path.turns.push(t);
            at = next;
            if k + 1 < turns.len() {
                v = domain.mid_edges[next]
                    .across(v)
                    .ok_or_else(|| Error::Domain(format!("turn {k} leaves the domain")))?;
            }
        }
        Ok(path)
    }

    /// Embedded polyline `w, v₀, m₁, v₁, …, z`.
    pub fn polyline(&self, domain: &HexDomain) -> Vec<Complex64> {
        let mut pts = vec![domain.mid_edges[self.start].pos];
        for &(v, m) in &self.steps {
            pts.push(domain.vertices[v].pos);
            pts.push(domain.mid_edges[m].pos);
        }
        pts
    }

    /// Checks self-avoidance and that each hop is a lattice move.
    pub fn validate(&self, domain: &HexDomain) -> Result<()> {
        let mut seen_v = vec![false; domain.vertices.len()];
        let mut seen_m = vec![false; domain.mid_edges.len()];
        seen_m[self.start] = true;
        let mut at = self.start;
        for (k, &(v, m)) in self.steps.iter().enumerate() {
            let me = &domain.mid_edges[at];
            let ok = (me.ends.0 == v || me.ends.1 == Some(v)) && domain.vertices[v].mid_edges.contains(&m);
            if !ok || seen_v[v] || seen_m[m] {
                return Err(Error::Domain(format!("step {k} is not a self-avoiding lattice move")));
            }
            if domain.turn_units(v, at, m) != self.turns[k] {
                return Err(Error::Domain(format!("step {k} has the wrong turn")));
            }
            seen_v[v] = true;
            seen_m[m] = true;
            at = m;
        }
        Ok(())
    }
}

/// Turning number from the continuous argument of secants: lift
/// `arg(γ(t) − w)` from the initial direction to `arg(z − w)`, then lift
/// `arg(z − γ(s))` from there to the final direction. For a simple curve
/// the total equals the change of tangent direction.
pub fn secant_turning(points: &[Complex64]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let w = points[0];
    let z = *points.last().expect("non-empty");
    let initial = (points[1] - w).arg();
    let mut theta = initial;
    for k in 2..points.len() {
        theta += principal((points[k] - w).arg() - (points[k - 1] - w).arg());
    }
    for k in 1..points.len() - 1 {
        theta += principal((z - points[k]).arg() - (z - points[k - 1]).arg());
    }
    theta - initial
}

/// Tolerance for agreement of the two turning computations.
pub const TURNING_TOL: f64 = 1e-9;

/// Turning number of `path`, computed both as a sum of vertex turns and by
/// the secant lift of the embedded polyline.
pub fn turning_number(domain: &HexDomain, path: &SAWPath) -> Result<f64> {
    let per_turn = path.turning();
    let lifted = secant_turning(&path.polyline(domain));
    if (per_turn - lifted).abs() > TURNING_TOL {
        return Err(Error::TurningMismatch { per_turn, lifted });
    }
    Ok(per_turn)
}

/// A spiralling walk on the radius-2 hexagon of 19 cells that enters from
/// the left, curls clockwise and stops on an interior mid-edge. Net turning
/// `−7π/3`.
pub fn spiral_fixture() -> (HexDomain, SAWPath) {
    let domain = super::domain::build_domain(&super::domain::hexagon_cells(2)).expect("hexagon is connected");
    let w = domain.mid_edge_by_key((-11, -3)).expect("boundary mid-edge");
    let turns = [1, -1, -1, 1, -1, -1, -1, 1, -1, -1, -1, -1, -1];
    let path = SAWPath::from_turns(&domain, w, &turns).expect("fixture walk is valid");
    (domain, path)
}

/// Current walk during enumeration.
#[derive(Debug, Clone)]
pub struct WalkView<'a> {
    pub start: usize,
    pub steps: &'a [(usize, usize)],
    pub turns: &'a [i8],
    pub turn_units: i32,
}

impl WalkView<'_> {
    pub fn to_path(&self) -> SAWPath {
        SAWPath { start: self.start, steps: self.steps.to_vec(), turns: self.turns.to_vec() }
    }

    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.1)
    }
}

struct Dfs<'d, F> {
    domain: &'d HexDomain,
    max_len: usize,
    visited: Vec<bool>,
    steps: Vec<(usize, usize)>,
    turns: Vec<i8>,
    units: i32,
    truncated: bool,
    start: usize,
    visit: F,
}

impl<F: FnMut(&WalkView)> Dfs<'_, F> {
    /// Extend a walk sitting on mid-edge `at`, entering vertex `v` next.
    fn extend(&mut self, at: usize, v: usize) {
        if self.steps.len() == self.max_len {
            self.truncated = true;
            return;
        }
        self.visited[v] = true;
        for m in self.domain.vertices[v].mid_edges {
            if m == at {
                continue;
            }
            let t = self.domain.turn_units(v, at, m);
            self.steps.push((v, m));
            self.turns.push(t);
            self.units += t as i32;
            (self.visit)(&WalkView {
                start: self.start,
                steps: &self.steps,
                turns: &self.turns,
                turn_units: self.units,
            });
            if let Some(u) = self.domain.mid_edges[m].across(v) {
                if !self.visited[u] {
                    self.extend(m, u);
                }
            }
            self.units -= t as i32;
            self.steps.pop();
            self.turns.pop();
        }
        self.visited[v] = false;
    }
}

/// Walks the first step `first` (an index into the entry vertex's two other
/// mid-edges), or all first steps if `None`.
fn run_dfs<F: FnMut(&WalkView)>(
    domain: &HexDomain,
    w: usize,
    max_len: usize,
    first: Option<usize>,
    visit: F,
) -> Result<bool> {
    let v0 = domain.require_boundary(w)?;
    if max_len == 0 {
        return Err(Error::InvalidParameter("max_len must be at least 1".into()));
    }
    let mut dfs = Dfs {
        domain,
        max_len,
        visited: vec![false; domain.vertices.len()],
        steps: Vec::new(),
        turns: Vec::new(),
        units: 0,
        truncated: false,
        start: w,
        visit,
    };
    match first {
        None => dfs.extend(w, v0),
        Some(k) => {
            let others: Vec<usize> = domain.vertices[v0].mid_edges.iter().copied().filter(|&m| m != w).collect();
            let m = others[k];
            let t = domain.turn_units(v0, w, m);
            dfs.visited[v0] = true;
            dfs.steps.push((v0, m));
            dfs.turns.push(t);
            dfs.units = t as i32;
            (dfs.visit)(&WalkView { start: w, steps: &dfs.steps, turns: &dfs.turns, turn_units: dfs.units });
            if let Some(u) = domain.mid_edges[m].across(v0) {
                if !dfs.visited[u] {
                    dfs.extend(m, u);
                }
            }
        }
    }
    Ok(dfs.truncated)
}

/// Calls `visit` on every non-empty self-avoiding walk from boundary
/// mid-edge `w` of length at most `max_len`, depth first with mid-edges in
/// index order. Returns whether `max_len` cut off any walk.
pub fn visit_saws<F: FnMut(&WalkView)>(domain: &HexDomain, w: usize, max_len: usize, visit: F) -> Result<bool> {
    run_dfs(domain, w, max_len, None, visit)
}

/// Same walks as [`visit_saws`], restricted to the `k`-th first step
/// (`k ∈ {0, 1}`), so the two halves can be enumerated independently.
pub fn visit_saws_from_step<F: FnMut(&WalkView)>(
    domain: &HexDomain,
    w: usize,
    max_len: usize,
    k: usize,
    visit: F,
) -> Result<bool> {
    if k > 1 {
        return Err(Error::InvalidParameter(format!("first step index must be 0 or 1, got {k}")));
    }
    run_dfs(domain, w, max_len, Some(k), visit)
}

/// Collects every walk of [`visit_saws`]. Only for small domains.
pub fn enumerate_saws(domain: &HexDomain, w: usize, max_len: usize) -> Result<Vec<SAWPath>> {
    let mut out = Vec::new();
    visit_saws(domain, w, max_len, |p| out.push(p.to_path()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::domain::{build_domain, hexagon_cells};
    use super::*;
    use std::collections::BTreeSet;

    /// Independent count: recursion over vertices, exploring neighbours in
    /// reverse order and counting the mid-edge endings directly.
    fn brute_count(d: &HexDomain, w: usize, max_len: usize) -> usize {
        fn go(d: &HexDomain, v: usize, from: usize, depth: usize, max_len: usize, seen: &mut Vec<bool>) -> usize {
            seen[v] = true;
            let mut n = 0;
            for &m in d.vertices[v].mid_edges.iter().rev() {
                if m == from {
                    continue;
                }
                n += 1;
                if depth < max_len {
                    if let Some(u) = d.mid_edges[m].across(v) {
                        if !seen[u] {
                            n += go(d, u, m, depth + 1, max_len, seen);
                        }
                    }
                }
            }
            seen[v] = false;
            n
        }
        let mut seen = vec![false; d.vertices.len()];
        go(d, d.mid_edges[w].ends.0, w, 1, max_len, &mut seen)
    }

    #[test]
    fn one_step_walks() {
        let d = HexDomain::flower();
        let w = d.boundary_mid_edges()[0];
        let paths = enumerate_saws(&d, w, 1).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths.iter().all(|p| p.len() == 1 && p.steps[0].0 == d.mid_edges[w].ends.0));
        let units: BTreeSet<i32> = paths.iter().map(|p| p.turn_units()).collect();
        assert_eq!(units, BTreeSet::from([-1, 1]));
    }

    #[test]
    fn counts_match_brute_force() {
        let d = build_domain(&[(0, 0), (1, 0), (0, 1)]).unwrap();
        for w in d.boundary_mid_edges() {
            for max_len in [1, 3, 8] {
                assert_eq!(enumerate_saws(&d, w, max_len).unwrap().len(), brute_count(&d, w, max_len));
            }
        }
        let f = HexDomain::flower();
        let w = f.boundary_mid_edges()[3];
        assert_eq!(enumerate_saws(&f, w, 8).unwrap().len(), brute_count(&f, w, 8));
    }

    #[test]
    fn emitted_walks_are_valid_and_distinct() {
        let d = HexDomain::flower();
        let w = d.boundary_mid_edges()[0];
        let paths = enumerate_saws(&d, w, 10).unwrap();
        for p in &paths {
            p.validate(&d).unwrap();
        }
        let distinct: BTreeSet<Vec<(usize, usize)>> = paths.iter().map(|p| p.steps.clone()).collect();
        assert_eq!(distinct.len(), paths.len());
    }

    #[test]
    fn split_enumeration_covers_everything() {
        let d = HexDomain::flower();
        let w = d.boundary_mid_edges()[5];
        let mut all = Vec::new();
        visit_saws(&d, w, 9, |p| all.push(p.to_path())).unwrap();
        let mut halves = Vec::new();
        for k in 0..2 {
            visit_saws_from_step(&d, w, 9, k, |p| halves.push(p.to_path())).unwrap();
        }
        assert_eq!(all, halves);
    }

    #[test]
    fn truncation_flag() {
        let d = HexDomain::flower();
        let w = d.boundary_mid_edges()[0];
        assert!(visit_saws(&d, w, 5, |_| {}).unwrap());
        assert!(!visit_saws(&d, w, d.vertices.len(), |_| {}).unwrap());
    }

    #[test]
    fn turning_double_computation_on_all_walks() {
        let d = HexDomain::flower();
        for w in d.boundary_mid_edges().into_iter().take(3) {
            visit_saws(&d, w, 24, |p| {
                turning_number(&d, &p.to_path()).unwrap();
            })
            .unwrap();
        }
    }

    #[test]
    fn zigzag_has_zero_turning() {
        let d = build_domain(&hexagon_cells(2)).unwrap();
        let w = d.boundary_mid_edges()[0];
        let p = SAWPath::from_turns(&d, w, &[1, -1, 1, -1]).unwrap();
        assert_eq!(turning_number(&d, &p).unwrap(), 0.0);
    }

    #[test]
    fn extra_left_turn_adds_sixty_degrees() {
        let d = build_domain(&hexagon_cells(2)).unwrap();
        let w = d.boundary_mid_edges()[0];
        let p = SAWPath::from_turns(&d, w, &[1, -1, 1]).unwrap();
        let q = SAWPath::from_turns(&d, w, &[1, -1, 1, 1]).unwrap();
        let (tp, tq) = (turning_number(&d, &p).unwrap(), turning_number(&d, &q).unwrap());
        assert!((tq - tp - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spiral_fixture_turns_minus_seven_thirds_pi() {
        let (d, p) = spiral_fixture();
        p.validate(&d).unwrap();
        assert_eq!(p.turn_units(), -7);
        let lifted = secant_turning(&p.polyline(&d));
        assert!((lifted + 7.0 * PI / 3.0).abs() < 1e-9, "{lifted}");
        assert!((turning_number(&d, &p).unwrap() + 7.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_walk_negates_turning() {
        let (d, p) = spiral_fixture();
        let m = d.mirrored();
        let w = d.mirror_mid_edge(&m, p.start).unwrap();
        let flipped: Vec<i8> = p.turns.iter().map(|t| -t).collect();
        let q = SAWPath::from_turns(&m, w, &flipped).unwrap();
        assert!((turning_number(&m, &q).unwrap() + turning_number(&d, &p).unwrap()).abs() < 1e-12);
        for (&(_, a), &(_, b)) in p.steps.iter().zip(&q.steps) {
            assert_eq!(d.mirror_mid_edge(&m, a), Some(b));
        }
    }

    #[test]
    fn secant_lift_detects_a_full_loop() {
        // unit square traversed counter-clockwise, then a step outward
        let pts = [
            Complex64::new(0.0, -0.25),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(-0.5, 1.0),
            Complex64::new(-0.5, -0.5),
            Complex64::new(2.0, -0.5),
        ];
        // direction: up, right, up, left, down, right → net −π/2 + π/2 + π/2 + π/2 + π/2 = 3π/2
        assert!((secant_turning(&pts) - 1.5 * PI).abs() < 1e-12);
    }
}
