use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lattice point in doubled integer coordinates: the embedding is
/// `x = X·√3/2`, `y = (Y + 2)/2`. Mid-edges use the sum of their endpoint
/// keys, which is unique per edge.
pub type Key = (i32, i32);

/// Axial coordinates `(q, r)` of a hexagonal cell.
pub type Cell = (i32, i32);

const CORNERS: [Key; 6] = [(1, 1), (0, 2), (-1, 1), (-1, -1), (0, -2), (1, -1)];
const CELL_NEIGHBORS: [Cell; 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

fn cell_center((q, r): Cell) -> Key {
    (2 * q + r, 3 * r)
}

/// The three lattice neighbours of a vertex, by sublattice.
fn lattice_neighbors((x, y): Key) -> [Key; 3] {
    if y.rem_euclid(3) == 2 {
        [(x + 1, y - 1), (x - 1, y - 1), (x, y + 2)]
    } else {
        [(x + 1, y + 1), (x - 1, y + 1), (x, y - 2)]
    }
}

/// Embedding with unit edge length; the bottom vertex of cell `(0, 0)` sits
/// at the origin and edges `(0, ±2)` are vertical.
pub fn embed((x, y): Key) -> Complex64 {
    Complex64::new(x as f64 * 3f64.sqrt() / 2.0, (y + 2) as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub key: Key,
    pub pos: Complex64,
    /// Incident mid-edges in increasing index order.
    pub mid_edges: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidEdge {
    /// Sum of the endpoint keys.
    pub key: Key,
    pub pos: Complex64,
    /// Vertex of the domain at one end, and at the other end if the edge is
    /// a full edge. `None` marks a half-edge, i.e. a boundary mid-edge.
    pub ends: (usize, Option<usize>),
}

impl MidEdge {
    pub fn is_boundary(&self) -> bool {
        self.ends.1.is_none()
    }

    /// The endpoint across from `v`, if inside the domain.
    pub fn across(&self, v: usize) -> Option<usize> {
        if self.ends.0 == v {
            self.ends.1
        } else {
            Some(self.ends.0)
        }
    }
}

/// Vertices of a union of hexagonal cells, every lattice edge between them,
/// and a half-edge for every edge leaving the vertex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexDomain {
    pub cells: Vec<Cell>,
    pub vertices: Vec<Vertex>,
    /// Sorted by key, so index order is lexicographic.
    pub mid_edges: Vec<MidEdge>,
}

pub fn build_domain(cells: &[Cell]) -> Result<HexDomain> {
    let cells: BTreeSet<Cell> = cells.iter().copied().collect();
    if cells.is_empty() {
        return Err(Error::Domain("no cells".into()));
    }
    check_connected(&cells)?;

    let keys: BTreeSet<Key> = cells
        .iter()
        .flat_map(|&c| {
            let (cx, cy) = cell_center(c);
            CORNERS.iter().map(move |&(dx, dy)| (cx + dx, cy + dy))
        })
        .collect();
    let index: BTreeMap<Key, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    let mut mids: BTreeMap<Key, (Key, Key, usize, Option<usize>)> = BTreeMap::new();
    for (&k, &i) in &index {
        for n in lattice_neighbors(k) {
            let mk = (k.0 + n.0, k.1 + n.1);
            mids.entry(mk).or_insert((k, n, i, index.get(&n).copied()));
        }
    }
    let mid_index: BTreeMap<Key, usize> = mids.keys().enumerate().map(|(i, &k)| (k, i)).collect();
    let mid_edges: Vec<MidEdge> = mids
        .iter()
        .map(|(&mk, &(k, n, i, j))| MidEdge { key: mk, pos: (embed(k) + embed(n)) / 2.0, ends: (i, j) })
        .collect();
    let vertices = keys
        .iter()
        .map(|&k| {
            let mut m = lattice_neighbors(k).map(|n| mid_index[&(k.0 + n.0, k.1 + n.1)]);
            m.sort_unstable();
            Vertex { key: k, pos: embed(k), mid_edges: m }
        })
        .collect();
    Ok(HexDomain { cells: cells.into_iter().collect(), vertices, mid_edges })
}

fn check_connected(cells: &BTreeSet<Cell>) -> Result<()> {
    let first = *cells.iter().next().expect("non-empty");
    let mut seen = BTreeSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some((q, r)) = queue.pop_front() {
        for (dq, dr) in CELL_NEIGHBORS {
            let n = (q + dq, r + dr);
            if cells.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    if seen.len() != cells.len() {
        return Err(Error::Domain(format!("cells are disconnected ({} of {} reachable)", seen.len(), cells.len())));
    }
    Ok(())
}

/// Cells from text: one `q r` pair per line, `#` starts a comment.
pub fn parse_cells(text: &str) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| s.parse::<i32>().map_err(|e| Error::Domain(format!("line {}: {e}", n + 1)));
        match nums.as_slice() {
            [q, r] => out.push((parse(q)?, parse(r)?)),
            _ => return Err(Error::Domain(format!("line {}: expected two integers", n + 1))),
        }
    }
    Ok(out)
}

/// A cell and its six neighbours.
pub fn flower_cells() -> Vec<Cell> {
    let mut cells = vec![(0, 0)];
    cells.extend(CELL_NEIGHBORS);
    cells
}

pub fn rhombus_cells(m: i32, n: i32) -> Vec<Cell> {
    (0..m).flat_map(|q| (0..n).map(move |r| (q, r))).collect()
}

/// Cells within hex distance `radius` of the origin.
pub fn hexagon_cells(radius: i32) -> Vec<Cell> {
    let mut out = Vec::new();
    for q in -radius..=radius {
        for r in -radius..=radius {
            if (q + r).abs() <= radius {
                out.push((q, r));
            }
        }
    }
    out
}

impl HexDomain {
    pub fn flower() -> Self {
        build_domain(&flower_cells()).expect("flower is connected")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        build_domain(&parse_cells(text)?)
    }

    pub fn boundary_mid_edges(&self) -> Vec<usize> {
        (0..self.mid_edges.len()).filter(|&m| self.mid_edges[m].is_boundary()).collect()
    }

    pub fn mid_edge_by_key(&self, key: Key) -> Option<usize> {
        self.mid_edges.binary_search_by(|m| m.key.cmp(&key)).ok()
    }

    pub fn vertex_by_key(&self, key: Key) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.key.cmp(&key)).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.mid_edges.iter().filter(|m| !m.is_boundary()).count()
    }

    /// Mirror image in the vertical axis through the origin.
    pub fn mirrored(&self) -> Self {
        let cells: Vec<Cell> = self.cells.iter().map(|&(q, r)| (-q - r, r)).collect();
        build_domain(&cells).expect("mirror of a valid domain")
    }

    /// Index of the mirror image of mid-edge `m` inside [`Self::mirrored`].
    pub fn mirror_mid_edge(&self, mirrored: &HexDomain, m: usize) -> Option<usize> {
        let (x, y) = self.mid_edges[m].key;
        mirrored.mid_edge_by_key((-x, y))
    }

    /// Signed turn at `v` when entering through `from` and leaving through
    /// `to`, in units of π/3 (counter-clockwise positive).
    pub fn turn_units(&self, v: usize, from: usize, to: usize) -> i8 {
        let p = self.vertices[v].pos;
        let d_in = p - self.mid_edges[from].pos;
        let d_out = self.mid_edges[to].pos - p;
        ((d_out * d_in.conj()).arg() / (std::f64::consts::PI / 3.0)).round() as i8
    }

    pub fn require_boundary(&self, w: usize) -> Result<usize> {
        match self.mid_edges.get(w) {
            Some(m) if m.is_boundary() => Ok(m.ends.0),
            Some(_) => Err(Error::Domain(format!("mid-edge {w} is not on the boundary"))),
            None => Err(Error::Domain(format!("mid-edge {w} does not exist"))),
        }
    }
}
