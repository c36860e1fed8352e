//! Undirected simple graphs with a distinguished origin vertex.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};
use crate::operators::SiteSet;

/// Unordered edge stored as `(min, max)`.
pub type Edge = (usize, usize);

pub fn edge(x: usize, y: usize) -> Edge {
    (x.min(y), x.max(y))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    origin: usize,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(invalid("graph", "a graph needs at least one vertex"));
        }
        let mut list: Vec<Edge> = Vec::new();
        for (x, y) in edges {
            if x == y {
                return Err(invalid("graph", format!("self-loop at vertex {x}")));
            }
            for v in [x, y] {
                if v >= n_vertices {
                    return Err(Error::UnknownVertex(v));
                }
            }
            list.push(edge(x, y));
        }
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![Vec::new(); n_vertices];
        for &(x, y) in &list {
            adjacency[x].push(y);
            adjacency[y].push(x);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Ok(Self {
            n_vertices,
            edges: list,
            adjacency,
            origin: 0,
        })
    }

    /// Open chain `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|k| (k - 1, k)))
    }

    /// Periodic chain; needs `n >= 3`.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid("graph", "a ring needs at least 3 vertices"));
        }
        Self::new(n, (0..n).map(|k| (k, (k + 1) % n)))
    }

    /// Open `width x height` grid, vertex `row * width + col`.
    pub fn grid(width: usize, height: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..height {
            for c in 0..width {
                let v = r * width + c;
                if c + 1 < width {
                    edges.push((v, v + 1));
                }
                if r + 1 < height {
                    edges.push((v, v + width));
                }
            }
        }
        Self::new(width * height, edges)
    }

    /// Star with center 0 and leaves `1..=leaves`.
    pub fn star(leaves: usize) -> Result<Self> {
        Self::new(leaves + 1, (1..=leaves).map(|k| (0, k)))
    }

    pub fn with_origin(mut self, origin: usize) -> Result<Self> {
        if origin >= self.n_vertices {
            return Err(Error::UnknownVertex(origin));
        }
        self.origin = origin;
        Ok(self)
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.edges.binary_search(&edge(x, y)).is_ok()
    }

    pub fn vertex_set(&self) -> SiteSet {
        SiteSet::range(self.n_vertices)
    }

    /// BFS distances from `source`; `None` for unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_vertices];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued vertices have a distance");
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, x: usize, y: usize) -> Option<usize> {
        self.distances_from(x)[y]
    }
}
