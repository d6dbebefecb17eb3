//! Structured triangulation of a rectangle with tagged boundary segments.
//!
//! The rectangle `(0, width) x (0, height)` is split into an `nx` by `ny`
//! grid of cells, each cut into two counterclockwise triangles along the
//! diagonal from the lower-left to the upper-right corner. Each of the four
//! sides carries exactly one [`SegmentTag`]; the side tagged [`SegmentTag::G1`]
//! is where the homogeneous essential condition is imposed.

use crate::scalar::{lit, Real};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boundary segment tags.
///
/// `G1`: clamped segment (essential condition), `G2`: traction segment,
/// `G3`: frictional contact segment carrying the multiplier, `G4`: segment
/// with the smooth slip-rate-dependent condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentTag {
    /// Clamped segment.
    G1,
    /// Traction segment.
    G2,
    /// Contact segment with the bounded multiplier.
    G3,
    /// Segment with the smooth boundary nonlinearity.
    G4,
}

impl std::fmt::Display for SegmentTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SegmentTag::G1 => "G1",
            SegmentTag::G2 => "G2",
            SegmentTag::G3 => "G3",
            SegmentTag::G4 => "G4",
        };
        f.write_str(s)
    }
}

/// Assignment of one tag to each side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPartition {
    /// Tag of the side `x = 0`.
    pub left: SegmentTag,
    /// Tag of the side `x = width`.
    pub right: SegmentTag,
    /// Tag of the side `y = 0`.
    pub bottom: SegmentTag,
    /// Tag of the side `y = height`.
    pub top: SegmentTag,
}

impl Default for BoundaryPartition {
    /// Clamped left side, traction on the right, contact on the bottom,
    /// smooth nonlinearity on top.
    fn default() -> Self {
        Self {
            left: SegmentTag::G1,
            right: SegmentTag::G2,
            bottom: SegmentTag::G3,
            top: SegmentTag::G4,
        }
    }
}

impl BoundaryPartition {
    /// Checks that each tag is used exactly once.
    pub fn validate(&self) -> Result<(), MeshError> {
        let tags = [self.left, self.right, self.bottom, self.top];
        for want in [SegmentTag::G1, SegmentTag::G2, SegmentTag::G3, SegmentTag::G4] {
            let count = tags.iter().filter(|&&t| t == want).count();
            if count != 1 {
                return Err(MeshError::PartitionTagCount { tag: want, count });
            }
        }
        Ok(())
    }
}

/// Mesh construction failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    /// Zero cells in one direction.
    #[error("grid must have at least one cell per direction (got {nx} x {ny})")]
    EmptyGrid {
        /// Cells in x.
        nx: usize,
        /// Cells in y.
        ny: usize,
    },
    /// Nonpositive or non-finite rectangle extent.
    #[error("rectangle extents must be positive and finite (got width {width}, height {height})")]
    BadExtent {
        /// Requested width.
        width: f64,
        /// Requested height.
        height: f64,
    },
    /// A tag is missing or repeated in the boundary partition.
    #[error("boundary partition must use tag {tag} exactly once (found {count} times)")]
    PartitionTagCount {
        /// Offending tag.
        tag: SegmentTag,
        /// Number of sides carrying it.
        count: usize,
    },
}

/// One boundary edge: two node indices, its tag and its length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEdge<T> {
    /// Endpoint node indices.
    pub nodes: [usize; 2],
    /// Side tag.
    pub tag: SegmentTag,
    /// Euclidean edge length.
    pub length: T,
}

/// Structured triangulation of the rectangle.
#[derive(Debug, Clone, Serialize)]
pub struct Mesh<T> {
    /// Cells in x.
    pub nx: usize,
    /// Cells in y.
    pub ny: usize,
    /// Rectangle width.
    pub width: T,
    /// Rectangle height.
    pub height: T,
    /// Node coordinates, row-major from the bottom-left corner.
    pub nodes: Vec<[T; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    /// All boundary edges with tags and lengths.
    pub boundary_edges: Vec<BoundaryEdge<T>>,
    /// Sorted node indices on the clamped segment.
    pub dirichlet_nodes: Vec<usize>,
    /// Side assignment used to build the boundary edges.
    pub partition: BoundaryPartition,
}

/// One edge of a boundary trace, ordered along the side.
///
/// `edge` indexes into `mesh.boundary_edges`; `nodes` are the endpoints
/// sorted lexicographically by coordinate, so walking the returned list
/// traverses the side monotonically in arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEdge<T> {
    /// Index into `mesh.boundary_edges`.
    pub edge: usize,
    /// Endpoints in lexicographic coordinate order.
    pub nodes: [usize; 2],
    /// Edge length.
    pub length: T,
}

/// Builds the structured triangulation.
///
/// Node `(i, j)` has index `j * (nx + 1) + i`; the resulting stiffness
/// half-bandwidth is `nx + 2`. Every triangle is counterclockwise.
pub fn build_rect_mesh<T: Real>(
    nx: usize,
    ny: usize,
    width: T,
    height: T,
    partition: BoundaryPartition,
) -> Result<Mesh<T>, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::EmptyGrid { nx, ny });
    }
    if !(width > T::zero()) || !(height > T::zero()) || !width.is_finite() || !height.is_finite() {
        return Err(MeshError::BadExtent {
            width: width.as_f64(),
            height: height.as_f64(),
        });
    }
    partition.validate()?;

    let nxf = lit::<T>(nx as f64);
    let nyf = lit::<T>(ny as f64);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = width * (lit::<T>(i as f64) / nxf);
            let y = height * (lit::<T>(j as f64) / nyf);
            nodes.push([x, y]);
        }
    }

    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n00 = node(i, j);
            let n10 = node(i + 1, j);
            let n01 = node(i, j + 1);
            let n11 = node(i + 1, j + 1);
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }

    let dist = |a: usize, b: usize| {
        let dx = nodes[a][0] - nodes[b][0];
        let dy = nodes[a][1] - nodes[b][1];
        (dx * dx + dy * dy).sqrt()
    };
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        let e = [node(i, 0), node(i + 1, 0)];
        boundary_edges.push(BoundaryEdge {
            nodes: e,
            tag: partition.bottom,
            length: dist(e[0], e[1]),
        });
    }
    for j in 0..ny {
        let e = [node(nx, j), node(nx, j + 1)];
        boundary_edges.push(BoundaryEdge {
            nodes: e,
            tag: partition.right,
            length: dist(e[0], e[1]),
        });
    }
    for i in 0..nx {
        let e = [node(i, ny), node(i + 1, ny)];
        boundary_edges.push(BoundaryEdge {
            nodes: e,
            tag: partition.top,
            length: dist(e[0], e[1]),
        });
    }
    for j in 0..ny {
        let e = [node(0, j), node(0, j + 1)];
        boundary_edges.push(BoundaryEdge {
            nodes: e,
            tag: partition.left,
            length: dist(e[0], e[1]),
        });
    }

    let mut dirichlet_nodes: Vec<usize> = boundary_edges
        .iter()
        .filter(|e| e.tag == SegmentTag::G1)
        .flat_map(|e| e.nodes)
        .collect();
    dirichlet_nodes.sort_unstable();
    dirichlet_nodes.dedup();

    Ok(Mesh {
        nx,
        ny,
        width,
        height,
        nodes,
        triangles,
        boundary_edges,
        dirichlet_nodes,
        partition,
    })
}

impl<T: Real> Mesh<T> {
    /// Number of nodes.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// True if node `i` lies on the clamped segment.
    pub fn is_dirichlet(&self, i: usize) -> bool {
        self.dirichlet_nodes.binary_search(&i).is_ok()
    }

    /// Half-bandwidth of any nodal matrix assembled on this mesh.
    pub fn half_bandwidth(&self) -> usize {
        self.nx + 2
    }

    /// Edges of one boundary segment, sorted lexicographically by midpoint
    /// coordinate `(x, y)`; endpoints of each edge sorted the same way.
    ///
    /// Both sorts are total on a structured grid, so the returned order is
    /// deterministic and traverses the side monotonically.
    pub fn trace_edges(&self, tag: SegmentTag) -> Vec<TraceEdge<T>> {
        let mut out: Vec<TraceEdge<T>> = self
            .boundary_edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tag == tag)
            .map(|(k, e)| {
                let mut nodes = e.nodes;
                if !coord_le(&self.nodes[nodes[0]], &self.nodes[nodes[1]]) {
                    nodes.swap(0, 1);
                }
                TraceEdge {
                    edge: k,
                    nodes,
                    length: e.length,
                }
            })
            .collect();
        out.sort_by(|a, b| {
            let ma = self.edge_midpoint(a);
            let mb = self.edge_midpoint(b);
            ma.partial_cmp(&mb).expect("finite midpoints")
        });
        out
    }

    fn edge_midpoint(&self, e: &TraceEdge<T>) -> (T, T) {
        let p = self.nodes[e.nodes[0]];
        let q = self.nodes[e.nodes[1]];
        let half = lit::<T>(0.5);
        ((p[0] + q[0]) * half, (p[1] + q[1]) * half)
    }

    /// Nodes of one boundary segment in lexicographic coordinate order.
    pub fn trace_nodes(&self, tag: SegmentTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.nodes)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes.sort_by(|&a, &b| {
            self.nodes[a]
                .partial_cmp(&self.nodes[b])
                .expect("finite coordinates")
        });
        nodes
    }

    /// Lexicographically smallest endpoint of a boundary segment; arc length
    /// along the (straight) side is measured from this corner.
    pub fn side_origin(&self, tag: SegmentTag) -> [T; 2] {
        let mut best: Option<[T; 2]> = None;
        for e in self.boundary_edges.iter().filter(|e| e.tag == tag) {
            for &n in &e.nodes {
                let p = self.nodes[n];
                if best.is_none() || coord_le(&p, &best.unwrap()) {
                    best = Some(p);
                }
            }
        }
        best.expect("segment has at least one edge")
    }

    /// Total length of a boundary segment.
    pub fn side_length(&self, tag: SegmentTag) -> T {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| e.length)
            .sum()
    }

    /// Arc-length coordinate of a node on a straight side.
    pub fn arc_coord(&self, tag: SegmentTag, node: usize) -> T {
        let o = self.side_origin(tag);
        let p = self.nodes[node];
        let dx = p[0] - o[0];
        let dy = p[1] - o[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Serializes the mesh to a JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serialization")
    }
}

fn coord_le<T: Real>(a: &[T; 2], b: &[T; 2]) -> bool {
    a.partial_cmp(b)
        .map(|o| o != std::cmp::Ordering::Greater)
        .unwrap_or(false)
}
