//! Structured conforming triangulation of the two stacked rectangles.
//!
//! The geometry is fixed: upper subdomain `(0,1) x (1/2,1)`, lower subdomain
//! `(0,1) x (0,1/2)`, shared interface at `y = 1/2`. Each grid cell is split
//! along its lower-left to upper-right diagonal. Vertices carry integer
//! lattice coordinates so that node identification, boundary classification
//! and refinement nesting are exact.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Which rectangle a triangle belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subdomain {
    /// Upper rectangle (compressible flow).
    Plus,
    /// Lower rectangle (incompressible Stokes).
    Minus,
}

/// Classification of a subdomain-boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Interface edge on `y = 1/2`, shared by one Plus and one Minus triangle.
    Interface,
    /// Outer boundary of the upper rectangle.
    OuterPlus,
    /// Outer boundary of the lower rectangle.
    OuterMinus,
}

impl BoundaryTag {
    /// The subdomain whose boundary this tag can describe; `None` for the
    /// interface, which belongs to both.
    pub fn owner(self) -> Option<Subdomain> {
        match self {
            BoundaryTag::Interface => None,
            BoundaryTag::OuterPlus => Some(Subdomain::Plus),
            BoundaryTag::OuterMinus => Some(Subdomain::Minus),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    /// Grid coordinates: `x = lattice.0 / nx`, `y = lattice.1 / (2 ny_half)`.
    pub lattice: (i64, i64),
}

#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    /// Vertex indices in counterclockwise order.
    pub v: [usize; 3],
    pub subdomain: Subdomain,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    /// Endpoint vertex indices, ordered by increasing lattice coordinate.
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny_half: usize,
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<Triangle>,
    /// All subdomain-boundary edges (interface and outer walls).
    pub edges: Vec<BoundaryEdge>,
    /// Vertex indices on the interface, ordered by x.
    pub interface_vertices: Vec<usize>,
}

/// The partition of subdomain-boundary edges returned by
/// [`classify_boundary`]. Edges are endpoint pairs ordered as in
/// [`Mesh::edges`].
#[derive(Debug, Clone, Default)]
pub struct BoundaryPartition {
    pub interface: Vec<[usize; 2]>,
    pub outer_plus: Vec<[usize; 2]>,
    pub outer_minus: Vec<[usize; 2]>,
}

impl Mesh {
    /// Mesh size `h = max(1/nx, 1/(2 ny_half))`.
    pub fn h(&self) -> f64 {
        let hx = 1.0 / self.nx as f64;
        let hy = 0.5 / self.ny_half as f64;
        hx.max(hy)
    }

    /// Coordinates of a triangle's vertices.
    pub fn tri_coords(&self, t: &Triangle) -> [(f64, f64); 3] {
        let get = |i: usize| {
            let v = &self.vertices[i];
            (v.x, v.y)
        };
        [get(t.v[0]), get(t.v[1]), get(t.v[2])]
    }

    /// Signed area of a triangle (positive for counterclockwise orientation).
    pub fn tri_area(&self, t: &Triangle) -> f64 {
        let [a, b, c] = self.tri_coords(t);
        0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1))
    }

    /// Triangle indices of one subdomain.
    pub fn subdomain_tris(&self, sd: Subdomain) -> impl Iterator<Item = usize> + '_ {
        self.triangles
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.subdomain == sd)
            .map(|(i, _)| i)
    }

    /// Boundary edges of a given tag.
    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.edges.iter().filter(move |e| e.tag == tag)
    }
}

/// Build the structured two-domain mesh with `nx` cells across and `ny_half`
/// cells per half vertically. Every cell is split along its lower-left to
/// upper-right diagonal.
pub fn build_two_domain_mesh(nx: usize, ny_half: usize) -> Result<Mesh> {
    if nx == 0 || ny_half == 0 {
        return Err(Error::Validation(
            "mesh subdivisions nx and ny_half must be at least 1".to_string(),
        ));
    }
    let ny = 2 * ny_half;
    let fx = nx as f64;
    let fy = ny as f64;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vertex {
                x: i as f64 / fx,
                y: j as f64 / fy,
                lattice: (i as i64, j as i64),
            });
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let subdomain = if j < ny_half {
            Subdomain::Minus
        } else {
            Subdomain::Plus
        };
        for i in 0..nx {
            // Lower-right and upper-left triangle of the cell, both CCW.
            triangles.push(Triangle {
                v: [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)],
                subdomain,
            });
            triangles.push(Triangle {
                v: [vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)],
                subdomain,
            });
        }
    }

    let interface_vertices = (0..=nx).map(|i| vid(i, ny_half)).collect();

    let mut mesh = Mesh {
        nx,
        ny_half,
        vertices,
        triangles,
        edges: Vec::new(),
        interface_vertices,
    };
    let partition = classify_boundary(&mesh);
    let mut edges = Vec::new();
    for e in &partition.interface {
        edges.push(BoundaryEdge {
            v: *e,
            tag: BoundaryTag::Interface,
        });
    }
    for e in &partition.outer_plus {
        edges.push(BoundaryEdge {
            v: *e,
            tag: BoundaryTag::OuterPlus,
        });
    }
    for e in &partition.outer_minus {
        edges.push(BoundaryEdge {
            v: *e,
            tag: BoundaryTag::OuterMinus,
        });
    }
    mesh.edges = edges;
    Ok(mesh)
}

/// Partition the subdomain-boundary edges of a mesh by an exhaustive
/// edge-incidence scan: an edge is on the interface iff it is shared by
/// triangles of both subdomains, and on an outer wall iff it has a single
/// incident triangle.
pub fn classify_boundary(mesh: &Mesh) -> BoundaryPartition {
    // edge key -> (plus incidence, minus incidence)
    let mut incidence: BTreeMap<(usize, usize), (u32, u32)> = BTreeMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let a = t.v[k];
            let b = t.v[(k + 1) % 3];
            let key = if a < b { (a, b) } else { (b, a) };
            let e = incidence.entry(key).or_insert((0, 0));
            match t.subdomain {
                Subdomain::Plus => e.0 += 1,
                Subdomain::Minus => e.1 += 1,
            }
        }
    }
    let mut part = BoundaryPartition::default();
    for (&(a, b), &(np, nm)) in &incidence {
        // Endpoints ordered by lattice coordinate (lexicographic x then y).
        let (la, lb) = (mesh.vertices[a].lattice, mesh.vertices[b].lattice);
        let e = if la <= lb { [a, b] } else { [b, a] };
        match (np, nm) {
            (1, 1) => part.interface.push(e),
            (1, 0) => part.outer_plus.push(e),
            (0, 1) => part.outer_minus.push(e),
            _ => {} // interior to one subdomain
        }
    }
    part
}
