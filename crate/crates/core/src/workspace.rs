//! Square gridded workspace and its 4-way adjacency graph.
//!
//! Vertices are numbered row-major starting at the bottom-left corner:
//! id 1 sits at `(-w, -w)`, id `side_count` at `(w, -w)` and id `N_g` at
//! `(w, w)`. Internally a vertex is stored as its zero-based index.

use std::fmt;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;

/// One-based grid vertex identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(usize);

impl VertexId {
    /// Builds an id from its one-based value. Zero is rejected.
    pub fn new(id: usize) -> Result<Self> {
        if id == 0 {
            return Err(Error::InvalidVertex { id, count: 0 });
        }
        Ok(VertexId(id))
    }

    pub fn from_index(index: usize) -> Self {
        VertexId(index + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The square workspace `[-w, w]²` sampled on a `side_count × side_count` grid.
#[derive(Clone, Debug)]
pub struct GridWorld {
    half_width: f64,
    side_count: usize,
    spacing: f64,
    coords: Vec<Point>,
    adjacency: Vec<Vec<VertexId>>,
}

impl GridWorld {
    pub fn new(half_width: f64, side_count: usize) -> Result<Self> {
        if side_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "side_count must be at least 2, got {side_count}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        let spacing = 2.0 * half_width / (side_count - 1) as f64;
        let n = side_count * side_count;
        let mut coords = Vec::with_capacity(n);
        let mut adjacency = Vec::with_capacity(n);
        for row in 0..side_count {
            for col in 0..side_count {
                // Last row/column pinned to +w so the grid covers the square exactly.
                let axis = |k: usize| {
                    if k == side_count - 1 {
                        half_width
                    } else {
                        -half_width + k as f64 * spacing
                    }
                };
                coords.push(Point::new(axis(col), axis(row)));

                let mut nbrs = Vec::with_capacity(4);
                if row > 0 {
                    nbrs.push(VertexId::from_index((row - 1) * side_count + col));
                }
                if col > 0 {
                    nbrs.push(VertexId::from_index(row * side_count + col - 1));
                }
                if col + 1 < side_count {
                    nbrs.push(VertexId::from_index(row * side_count + col + 1));
                }
                if row + 1 < side_count {
                    nbrs.push(VertexId::from_index((row + 1) * side_count + col));
                }
                adjacency.push(nbrs);
            }
        }
        Ok(GridWorld {
            half_width,
            side_count,
            spacing,
            coords,
            adjacency,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn side_count(&self) -> usize {
        self.side_count
    }

    /// Distance δ between adjacent grid points.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        2 * self.side_count * (self.side_count - 1)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.coords.len()).map(VertexId::from_index)
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.get() == 0 || v.get() > self.coords.len() {
            Err(Error::InvalidVertex {
                id: v.get(),
                count: self.coords.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Coordinate of a vertex. Panics on an id outside the grid.
    pub fn coord(&self, v: VertexId) -> Point {
        self.coords[v.index()]
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, v: VertexId) -> Result<&[VertexId]> {
        self.check_vertex(v)?;
        Ok(&self.adjacency[v.index()])
    }

    pub fn are_adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.check_vertex(a).is_ok() && self.adjacency[a.index()].contains(&b)
    }

    /// Grid vertex closest to `p` (ties resolve to the smaller id).
    pub fn nearest_vertex(&self, p: &Point) -> VertexId {
        let snap = |value: f64| {
            let k = ((value + self.half_width) / self.spacing).round();
            k.clamp(0.0, (self.side_count - 1) as f64) as usize
        };
        VertexId::from_index(snap(p.y) * self.side_count + snap(p.x))
    }

    /// Minimum number of edges between two vertices.
    pub fn manhattan(&self, a: VertexId, b: VertexId) -> usize {
        let (ra, ca) = (a.index() / self.side_count, a.index() % self.side_count);
        let (rb, cb) = (b.index() / self.side_count, b.index() % self.side_count);
        ra.abs_diff(rb) + ca.abs_diff(cb)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let tol = 1e-12 * self.half_width;
        p.x.abs() <= self.half_width + tol && p.y.abs() <= self.half_width + tol
    }
}

/// A walk `i_0, …, i_L` over the grid graph with `L ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    vertices: Vec<VertexId>,
}

impl Path {
    pub fn new(grid: &GridWorld, vertices: Vec<VertexId>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "a path needs at least one edge, got {} vertices",
                vertices.len()
            )));
        }
        validate_walk(grid, &vertices)?;
        Ok(Path { vertices })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<VertexId> {
        self.vertices
    }

    /// Number of edges L.
    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("path is never empty")
    }
}

/// Checks every vertex is on the grid and consecutive vertices are adjacent.
pub fn validate_walk(grid: &GridWorld, vertices: &[VertexId]) -> Result<()> {
    for &v in vertices {
        grid.check_vertex(v)?;
    }
    for pair in vertices.windows(2) {
        if !grid.are_adjacent(pair[0], pair[1]) {
            return Err(Error::InvalidPath(format!(
                "vertices {} and {} are not adjacent",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}
