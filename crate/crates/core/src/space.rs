//! Conforming finite element spaces on one subdomain: vector-valued P2,
//! scalar P1 and scalar P2, with Dirichlet masks and interface-trace
//! indexing.
//!
//! Nodes live on a half-step integer lattice (vertices at even coordinates,
//! edge midpoints at odd ones), so node identification across spaces and the
//! interface is exact. DOF enumeration is lexicographic by node coordinate,
//! then by component, which makes assembled matrices reproducible.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::{BoundaryTag, Mesh, Subdomain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    VectorP2,
    ScalarP1,
    /// Scalar quadratic space; used by the harmonic-extension solves and the
    /// equal-order inf-sup control probe.
    ScalarP2,
}

impl SpaceKind {
    pub fn components(self) -> usize {
        match self {
            SpaceKind::VectorP2 => 2,
            _ => 1,
        }
    }

    pub fn degree(self) -> usize {
        match self {
            SpaceKind::ScalarP1 => 1,
            _ => 2,
        }
    }

    pub fn nodes_per_elem(self) -> usize {
        match self.degree() {
            1 => 3,
            _ => 6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeNode {
    pub x: f64,
    pub y: f64,
    /// Half-step lattice coordinates: `x = l2.0 / (2 nx)`, `y = l2.1 / (4 ny_half)`.
    pub l2: (i64, i64),
}

#[derive(Debug, Clone, Copy)]
pub struct FeElement {
    /// Index into `Mesh::triangles`.
    pub tri: usize,
    /// Node ids, `[v0, v1, v2]` for P1 and `[v0, v1, v2, m01, m12, m20]` for P2.
    pub nodes: [usize; 6],
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub subdomain: Subdomain,
    pub mesh: Arc<Mesh>,
    pub nodes: Vec<FeNode>,
    pub elems: Vec<FeElement>,
    /// Per-DOF point (nodes repeated per component).
    pub dof_coords: Vec<(f64, f64)>,
    /// True where the DOF coefficient is pinned by a Dirichlet tag.
    pub dirichlet_mask: Vec<bool>,
    /// DOFs whose node lies on the interface, excluding the two corner nodes
    /// at x = 0 and x = 1, ordered by x then component. Recorded whether or
    /// not the interface is in this space's Dirichlet set, so lifting data
    /// and traces index identically on both sides.
    pub interface_dofs: Vec<usize>,
    pub n_free: usize,
    /// Full DOF -> free slot (`usize::MAX` for constrained DOFs).
    pub free_of_dof: Vec<usize>,
    /// Free slot -> full DOF.
    pub dof_of_free: Vec<usize>,
}

impl FeSpace {
    pub fn n_dofs(&self) -> usize {
        self.nodes.len() * self.kind.components()
    }

    pub fn node_of_dof(&self, dof: usize) -> usize {
        dof / self.kind.components()
    }

    pub fn component_of_dof(&self, dof: usize) -> usize {
        dof % self.kind.components()
    }

    /// Restrict a full-DOF vector to free DOFs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dof_of_free.iter().map(|&d| full[d]).collect()
    }

    /// Scatter free-DOF values into a full vector with given constrained values.
    pub fn prolong(&self, free: &[f64], constrained: &[f64]) -> Vec<f64> {
        debug_assert_eq!(constrained.len(), self.n_dofs());
        let mut full = constrained.to_vec();
        for (slot, &dof) in self.dof_of_free.iter().enumerate() {
            full[dof] = free[slot];
        }
        full
    }
}

/// Build a finite element space over one subdomain of the mesh.
///
/// `dirichlet_tags` lists the boundary classes whose nodes are pinned; a tag
/// owned by the other subdomain is rejected.
pub fn build_space(
    mesh: &Arc<Mesh>,
    kind: SpaceKind,
    subdomain: Subdomain,
    dirichlet_tags: &[BoundaryTag],
) -> Result<Arc<FeSpace>> {
    for tag in dirichlet_tags {
        if let Some(owner) = tag.owner() {
            if owner != subdomain {
                return Err(Error::Validation(
                    "dirichlet tag references the other subdomain's boundary".to_string(),
                ));
            }
        }
    }

    let nx = mesh.nx as i64;
    let degree = kind.degree();
    let vertex_l2 = |v: usize| {
        let l = mesh.vertices[v].lattice;
        (2 * l.0, 2 * l.1)
    };

    // Collect node lattice points of this subdomain; BTreeMap keys sort
    // lexicographically, giving the (x, y) DOF order.
    let mut node_ids: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for ti in mesh.subdomain_tris(subdomain) {
        let t = &mesh.triangles[ti];
        for k in 0..3 {
            node_ids.entry(vertex_l2(t.v[k])).or_insert(0);
        }
        if degree == 2 {
            for k in 0..3 {
                let a = vertex_l2(t.v[k]);
                let b = vertex_l2(t.v[(k + 1) % 3]);
                node_ids.entry(((a.0 + b.0) / 2, (a.1 + b.1) / 2)).or_insert(0);
            }
        }
    }
    for (i, (_, id)) in node_ids.iter_mut().enumerate() {
        *id = i;
    }
    let two_nx = 2.0 * mesh.nx as f64;
    let four_ny = 4.0 * mesh.ny_half as f64;
    let nodes: Vec<FeNode> = node_ids
        .keys()
        .map(|&(a, b)| FeNode {
            x: a as f64 / two_nx,
            y: b as f64 / four_ny,
            l2: (a, b),
        })
        .collect();

    let mut elems = Vec::new();
    for ti in mesh.subdomain_tris(subdomain) {
        let t = &mesh.triangles[ti];
        let mut ids = [0usize; 6];
        for k in 0..3 {
            ids[k] = node_ids[&vertex_l2(t.v[k])];
        }
        if degree == 2 {
            for k in 0..3 {
                let a = vertex_l2(t.v[k]);
                let b = vertex_l2(t.v[(k + 1) % 3]);
                ids[3 + k] = node_ids[&((a.0 + b.0) / 2, (a.1 + b.1) / 2)];
            }
        }
        elems.push(FeElement { tri: ti, nodes: ids });
    }

    let ncomp = kind.components();
    let n_dofs = nodes.len() * ncomp;
    let mut dirichlet_mask = vec![false; n_dofs];
    for edge in &mesh.edges {
        if !dirichlet_tags.contains(&edge.tag) {
            continue;
        }
        // Interface edges belong to both subdomains, outer edges to one.
        let a = vertex_l2(edge.v[0]);
        let b = vertex_l2(edge.v[1]);
        let mut edge_nodes = vec![a, b];
        if degree == 2 {
            edge_nodes.push(((a.0 + b.0) / 2, (a.1 + b.1) / 2));
        }
        for l2 in edge_nodes {
            if let Some(&node) = node_ids.get(&l2) {
                for c in 0..ncomp {
                    dirichlet_mask[node * ncomp + c] = true;
                }
            }
        }
    }

    let mut dof_coords = Vec::with_capacity(n_dofs);
    for node in &nodes {
        for _ in 0..ncomp {
            dof_coords.push((node.x, node.y));
        }
    }

    let gamma_l2 = 2 * mesh.ny_half as i64; // doubled lattice height of y = 1/2
    let mut interface: Vec<(i64, usize)> = Vec::new();
    for (ni, node) in nodes.iter().enumerate() {
        if node.l2.1 == gamma_l2 && node.l2.0 != 0 && node.l2.0 != 2 * nx {
            for c in 0..ncomp {
                interface.push((node.l2.0 * ncomp as i64 + c as i64, ni * ncomp + c));
            }
        }
    }
    interface.sort_unstable();
    let interface_dofs: Vec<usize> = interface.into_iter().map(|(_, d)| d).collect();

    let mut free_of_dof = vec![usize::MAX; n_dofs];
    let mut dof_of_free = Vec::new();
    for d in 0..n_dofs {
        if !dirichlet_mask[d] {
            free_of_dof[d] = dof_of_free.len();
            dof_of_free.push(d);
        }
    }

    Ok(Arc::new(FeSpace {
        kind,
        subdomain,
        mesh: mesh.clone(),
        nodes,
        elems,
        dof_coords,
        dirichlet_mask,
        interface_dofs,
        n_free: dof_of_free.len(),
        free_of_dof,
        dof_of_free,
    }))
}

/// A coefficient vector over an FE space. Constrained DOFs store their
/// imposed values.
#[derive(Debug, Clone)]
pub struct FeField {
    pub space: Arc<FeSpace>,
    pub coeffs: Vec<f64>,
}

impl FeField {
    pub fn zero(space: &Arc<FeSpace>) -> Self {
        FeField {
            space: space.clone(),
            coeffs: vec![0.0; space.n_dofs()],
        }
    }

    pub fn from_coeffs(space: &Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Validation(
                "coefficient vector length does not match the space".to_string(),
            ));
        }
        Ok(FeField {
            space: space.clone(),
            coeffs,
        })
    }

    /// Nodal interpolation of a scalar function.
    pub fn interpolate_scalar(space: &Arc<FeSpace>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if space.kind.components() != 1 {
            return Err(Error::Validation(
                "scalar interpolation on a vector space".to_string(),
            ));
        }
        let coeffs = space.nodes.iter().map(|n| f(n.x, n.y)).collect();
        Ok(FeField {
            space: space.clone(),
            coeffs,
        })
    }

    /// Nodal interpolation of a vector function.
    pub fn interpolate_vector(
        space: &Arc<FeSpace>,
        f: impl Fn(f64, f64) -> [f64; 2],
    ) -> Result<Self> {
        if space.kind.components() != 2 {
            return Err(Error::Validation(
                "vector interpolation on a scalar space".to_string(),
            ));
        }
        let mut coeffs = Vec::with_capacity(space.n_dofs());
        for n in &space.nodes {
            let v = f(n.x, n.y);
            coeffs.push(v[0]);
            coeffs.push(v[1]);
        }
        Ok(FeField {
            space: space.clone(),
            coeffs,
        })
    }

    /// Nodal trace on the interface, ordered as `interface_dofs`.
    pub fn trace_on_interface(&self) -> Vec<f64> {
        self.space
            .interface_dofs
            .iter()
            .map(|&d| self.coeffs[d])
            .collect()
    }

    pub fn scaled(&self, c: f64) -> FeField {
        FeField {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
        }
    }

    pub fn eval_scalar(&self, x: f64, y: f64) -> Result<f64> {
        let (elem, xi, eta) = self.space.locate(x, y)?;
        let vals = shape::values(self.space.kind.degree(), xi, eta);
        let nn = self.space.kind.nodes_per_elem();
        let mut s = 0.0;
        for k in 0..nn {
            s += self.coeffs[elem.nodes[k]] * vals[k];
        }
        Ok(s)
    }

    pub fn eval_vector(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (elem, xi, eta) = self.space.locate(x, y)?;
        let vals = shape::values(self.space.kind.degree(), xi, eta);
        let nn = self.space.kind.nodes_per_elem();
        let mut out = [0.0; 2];
        for k in 0..nn {
            for c in 0..2 {
                out[c] += self.coeffs[elem.nodes[k] * 2 + c] * vals[k];
            }
        }
        Ok(out)
    }

    /// Gradient of a scalar field (piecewise polynomial derivative).
    pub fn grad_scalar(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let (elem, xi, eta) = self.space.locate(x, y)?;
        let grads = self.space.physical_grads(elem, xi, eta);
        let nn = self.space.kind.nodes_per_elem();
        let mut out = [0.0; 2];
        for k in 0..nn {
            out[0] += self.coeffs[elem.nodes[k]] * grads[k][0];
            out[1] += self.coeffs[elem.nodes[k]] * grads[k][1];
        }
        Ok(out)
    }

    /// Jacobian of a vector field: `out[i][j] = d u_i / d x_j`.
    pub fn grad_vector(&self, x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
        let (elem, xi, eta) = self.space.locate(x, y)?;
        let grads = self.space.physical_grads(elem, xi, eta);
        let nn = self.space.kind.nodes_per_elem();
        let mut out = [[0.0; 2]; 2];
        for k in 0..nn {
            for c in 0..2 {
                let coeff = self.coeffs[elem.nodes[k] * 2 + c];
                out[c][0] += coeff * grads[k][0];
                out[c][1] += coeff * grads[k][1];
            }
        }
        Ok(out)
    }

    pub fn l2_norm_of_coeffs(&self) -> f64 {
        libm::sqrt(self.coeffs.iter().map(|v| v * v).sum())
    }
}

impl FeSpace {
    /// Locate a point in the subdomain and return (element, reference coords).
    pub fn locate(&self, x: f64, y: f64) -> Result<(&FeElement, f64, f64)> {
        let (ylo, yhi) = match self.subdomain {
            Subdomain::Minus => (0.0, 0.5),
            Subdomain::Plus => (0.5, 1.0),
        };
        let eps = 1e-12;
        if !((-eps..=1.0 + eps).contains(&x) && (ylo - eps..=yhi + eps).contains(&y)) {
            return Err(Error::PointLocation { x, y });
        }
        let nx = self.mesh.nx;
        let ny = 2 * self.mesh.ny_half;
        let fx = (x.clamp(0.0, 1.0) * nx as f64).min(nx as f64 - 0.5);
        let fy = (y.clamp(0.0, 1.0) * ny as f64).min(ny as f64 - 0.5);
        let i = fx as usize;
        let jg = (fy as usize).clamp(
            match self.subdomain {
                Subdomain::Minus => 0,
                Subdomain::Plus => self.mesh.ny_half,
            },
            match self.subdomain {
                Subdomain::Minus => self.mesh.ny_half - 1,
                Subdomain::Plus => ny - 1,
            },
        );
        let s = x * nx as f64 - i as f64;
        let t = y * ny as f64 - jg as f64;
        // mesh triangles are laid out two per cell, row-major
        let mesh_tri = 2 * (jg * nx + i) + if s >= t { 0 } else { 1 };
        let local = match self.subdomain {
            Subdomain::Minus => mesh_tri,
            Subdomain::Plus => mesh_tri - 2 * self.mesh.ny_half * nx,
        };
        let elem = &self.elems[local];
        debug_assert_eq!(elem.tri, mesh_tri);
        let [a, b, c] = self.mesh.tri_coords(&self.mesh.triangles[mesh_tri]);
        // invert the affine map
        let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
        let xi = ((x - a.0) * (c.1 - a.1) - (y - a.1) * (c.0 - a.0)) / det;
        let eta = ((y - a.1) * (b.0 - a.0) - (x - a.0) * (b.1 - a.1)) / det;
        Ok((elem, xi, eta))
    }

    /// Physical shape-function gradients on an element at reference coords.
    pub fn physical_grads(&self, elem: &FeElement, xi: f64, eta: f64) -> [[f64; 2]; 6] {
        let [a, b, c] = self.mesh.tri_coords(&self.mesh.triangles[elem.tri]);
        let j = [[b.0 - a.0, c.0 - a.0], [b.1 - a.1, c.1 - a.1]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // J^{-T}
        let jinv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        let gref = shape::grads(self.kind.degree(), xi, eta);
        let mut out = [[0.0; 2]; 6];
        for k in 0..self.kind.nodes_per_elem() {
            out[k][0] = jinv_t[0][0] * gref[k][0] + jinv_t[0][1] * gref[k][1];
            out[k][1] = jinv_t[1][0] * gref[k][0] + jinv_t[1][1] * gref[k][1];
        }
        out
    }
}

/// Reference-triangle shape functions on `{xi, eta >= 0, xi + eta <= 1}`.
pub(crate) mod shape {
    /// Values of the nodal basis at a reference point. P1 fills 3 slots, P2
    /// all 6 in the order `[v0, v1, v2, m01, m12, m20]`.
    pub fn values(degree: usize, xi: f64, eta: f64) -> [f64; 6] {
        let l1 = 1.0 - xi - eta;
        let l2 = xi;
        let l3 = eta;
        if degree == 1 {
            [l1, l2, l3, 0.0, 0.0, 0.0]
        } else {
            [
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                l3 * (2.0 * l3 - 1.0),
                4.0 * l1 * l2,
                4.0 * l2 * l3,
                4.0 * l3 * l1,
            ]
        }
    }

    /// Reference gradients of the nodal basis.
    pub fn grads(degree: usize, xi: f64, eta: f64) -> [[f64; 2]; 6] {
        let l1 = 1.0 - xi - eta;
        if degree == 1 {
            [
                [-1.0, -1.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [0.0, 0.0],
                [0.0, 0.0],
                [0.0, 0.0],
            ]
        } else {
            [
                [1.0 - 4.0 * l1, 1.0 - 4.0 * l1],
                [4.0 * xi - 1.0, 0.0],
                [0.0, 4.0 * eta - 1.0],
                [4.0 * (l1 - xi), -4.0 * xi],
                [4.0 * eta, 4.0 * xi],
                [-4.0 * eta, 4.0 * (l1 - eta)],
            ]
        }
    }

    /// Reference Hessians of the P2 basis (constant per element).
    pub fn p2_hessians() -> [[[f64; 2]; 2]; 6] {
        [
            [[4.0, 4.0], [4.0, 4.0]],
            [[4.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 4.0]],
            [[-8.0, -4.0], [-4.0, 0.0]],
            [[0.0, 4.0], [4.0, 0.0]],
            [[0.0, -4.0], [-4.0, -8.0]],
        ]
    }
}
