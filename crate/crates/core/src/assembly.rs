//! Quadrature and global assembly of the bilinear and linear forms of the
//! resolvent system.
//!
//! All area terms use one shared rule (7-point, degree 5) so that identities
//! relating loads and form matrices hold exactly at the discrete level;
//! interface and boundary terms use 3-point Gauss per edge.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryTag, Mesh, Subdomain};
use crate::space::{shape, FeElement, FeField, FeSpace};
use crate::{Error, Result};

/// Quadrature rule on the reference triangle; weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// Degree used for every area term in the solver.
pub const AREA_QUAD_DEGREE: usize = 5;

/// Positive-weight rule exact for polynomials up to `degree` (max 5).
pub fn quad_rule(degree: usize) -> Result<QuadRule> {
    match degree {
        0 | 1 => Ok(QuadRule {
            points: vec![(1.0 / 3.0, 1.0 / 3.0)],
            weights: vec![0.5],
        }),
        2 => Ok(QuadRule {
            points: vec![(0.5, 0.0), (0.5, 0.5), (0.0, 0.5)],
            weights: vec![1.0 / 6.0; 3],
        }),
        3 | 4 => {
            // two symmetric orbits, both positive
            let a1 = 0.445948490915965;
            let w1 = 0.223381589678011 / 2.0;
            let a2 = 0.091576213509771;
            let w2 = 0.109951743655322 / 2.0;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for (a, w) in [(a1, w1), (a2, w2)] {
                let b = 1.0 - 2.0 * a;
                points.extend_from_slice(&[(a, a), (b, a), (a, b)]);
                weights.extend_from_slice(&[w, w, w]);
            }
            Ok(QuadRule { points, weights })
        }
        5 => {
            let s15 = libm::sqrt(15.0);
            let a2 = (6.0 + s15) / 21.0;
            let w2 = (155.0 + s15) / 1200.0 / 2.0;
            let a3 = (6.0 - s15) / 21.0;
            let w3 = (155.0 - s15) / 1200.0 / 2.0;
            let mut points = vec![(1.0 / 3.0, 1.0 / 3.0)];
            let mut weights = vec![9.0 / 40.0 / 2.0];
            for (a, w) in [(a2, w2), (a3, w3)] {
                let b = 1.0 - 2.0 * a;
                points.extend_from_slice(&[(a, a), (b, a), (a, b)]);
                weights.extend_from_slice(&[w, w, w]);
            }
            Ok(QuadRule { points, weights })
        }
        d => Err(Error::Config(alloc::format!(
            "triangle quadrature degree {d} not supported (max 5)"
        ))),
    }
}

/// 3-point Gauss rule on [0, 1]; weights sum to 1. Exact to degree 5.
pub fn edge_quad_rule() -> (Vec<f64>, Vec<f64>) {
    let r = libm::sqrt(0.6);
    (
        vec![0.5 * (1.0 - r), 0.5, 0.5 * (1.0 + r)],
        vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
    )
}

/// Ambient background flow on the upper subdomain, with its analytic
/// divergence. Presets satisfy `U . n = 0` on the whole upper boundary.
#[derive(Clone)]
pub struct BackgroundFlow {
    pub name: &'static str,
    velocity: Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>,
    divergence: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl BackgroundFlow {
    pub fn zero() -> Self {
        BackgroundFlow {
            name: "zero",
            velocity: Arc::new(|_, _| [0.0, 0.0]),
            divergence: Arc::new(|_, _| 0.0),
        }
    }

    /// Divergence-free vortex from the stream function
    /// `sin(pi x) sin(2 pi (y - 1/2))`.
    pub fn vortex() -> Self {
        use core::f64::consts::PI;
        BackgroundFlow {
            name: "vortex",
            velocity: Arc::new(|x, y| {
                [
                    2.0 * PI * libm::sin(PI * x) * libm::cos(2.0 * PI * (y - 0.5)),
                    -PI * libm::cos(PI * x) * libm::sin(2.0 * PI * (y - 0.5)),
                ]
            }),
            divergence: Arc::new(|_, _| 0.0),
        }
    }

    pub fn custom(
        name: &'static str,
        velocity: Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>,
        divergence: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    ) -> Self {
        BackgroundFlow {
            name,
            velocity,
            divergence,
        }
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        (self.velocity)(x, y)
    }

    pub fn divergence(&self, x: f64, y: f64) -> f64 {
        (self.divergence)(x, y)
    }

    pub fn is_zero(&self) -> bool {
        self.name == "zero"
    }

    /// Largest `|U . n|` over boundary sample points of the upper rectangle.
    pub fn max_boundary_normal_flux(&self, samples: usize) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=samples {
            let s = k as f64 / samples as f64;
            let checks = [
                (s, 0.5, [0.0, -1.0]),
                (s, 1.0, [0.0, 1.0]),
                (0.0, 0.5 + 0.5 * s, [-1.0, 0.0]),
                (1.0, 0.5 + 0.5 * s, [1.0, 0.0]),
            ];
            for (x, y, n) in checks {
                let u = self.velocity(x, y);
                worst = worst.max(libm::fabs(u[0] * n[0] + u[1] * n[1]));
            }
        }
        worst
    }

    /// Largest mismatch between the provided divergence and a central
    /// finite-difference divergence of the velocity, at interior samples.
    pub fn max_divergence_mismatch(&self, seed: u64, samples: usize) -> f64 {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let h = 1e-6;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = 0.05 + 0.9 * unit();
            let y = 0.55 + 0.4 * unit();
            let fd = (self.velocity(x + h, y)[0] - self.velocity(x - h, y)[0]) / (2.0 * h)
                + (self.velocity(x, y + h)[1] - self.velocity(x, y - h)[1]) / (2.0 * h);
            worst = worst.max(libm::fabs(fd - self.divergence(x, y)));
        }
        worst
    }
}

/// Viscosity, dilational Lame coefficient and resolvent parameter.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams {
    pub nu: f64,
    pub lame_lambda: f64,
    pub lambda_res: f64,
}

impl MaterialParams {
    pub fn new(nu: f64, lame_lambda: f64, lambda_res: f64) -> Result<Self> {
        let p = MaterialParams {
            nu,
            lame_lambda,
            lambda_res,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::Validation("viscosity nu must be positive".to_string()));
        }
        if !(self.lame_lambda >= 0.0) {
            return Err(Error::Validation(
                "lame_lambda must be nonnegative".to_string(),
            ));
        }
        if !(self.lambda_res > 0.0) {
            return Err(Error::Validation(
                "resolvent parameter lambda must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            nu: 1.0,
            lame_lambda: 0.0,
            lambda_res: 1.0,
        }
    }
}

/// The bilinear forms of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// (u, v)
    Mass,
    /// (grad u, grad v)
    Stiffness,
    /// (sigma(u), eps(v)), sigma = 2 nu eps + lame tr(eps) I
    Strain,
    /// (U . grad u, v)
    Advection,
    /// 1/2 (div(U) u, v)
    DivUMass,
    /// -(p, div v); rows velocity, cols pressure
    DivCoupling,
    /// (U . grad p, q)
    ScalarAdvection,
    /// (div u, q); rows pressure, cols velocity
    DivRow,
}

struct ElemGeom {
    a: (f64, f64),
    b: (f64, f64),
    c: (f64, f64),
    det: f64,
    jinv_t: [[f64; 2]; 2],
}

impl ElemGeom {
    fn new(mesh: &Mesh, tri: usize) -> Self {
        let [a, b, c] = mesh.tri_coords(&mesh.triangles[tri]);
        let j = [[b.0 - a.0, c.0 - a.0], [b.1 - a.1, c.1 - a.1]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let jinv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        ElemGeom {
            a,
            b,
            c,
            det,
            jinv_t,
        }
    }

    fn map(&self, xi: f64, eta: f64) -> (f64, f64) {
        (
            self.a.0 + xi * (self.b.0 - self.a.0) + eta * (self.c.0 - self.a.0),
            self.a.1 + xi * (self.b.1 - self.a.1) + eta * (self.c.1 - self.a.1),
        )
    }

    fn phys_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.jinv_t[0][0] * g[0] + self.jinv_t[0][1] * g[1],
            self.jinv_t[1][0] * g[0] + self.jinv_t[1][1] * g[1],
        ]
    }
}

fn check_same_subdomain(row: &FeSpace, col: &FeSpace) -> Result<()> {
    if row.subdomain != col.subdomain {
        return Err(Error::Validation(
            "row and column spaces live on different subdomains".to_string(),
        ));
    }
    if row.elems.len() != col.elems.len() {
        return Err(Error::Validation(
            "row and column spaces have mismatched element lists".to_string(),
        ));
    }
    Ok(())
}

/// Assemble a global form matrix over full (free + constrained) DOF vectors.
pub fn assemble_form(
    kind: FormKind,
    row: &FeSpace,
    col: &FeSpace,
    params: &MaterialParams,
    flow: &BackgroundFlow,
) -> Result<CsrMatrix> {
    check_same_subdomain(row, col)?;
    let needs_vector_row = matches!(kind, FormKind::DivCoupling);
    let needs_scalar_row = matches!(kind, FormKind::DivRow);
    if needs_vector_row && (row.kind.components() != 2 || col.kind.components() != 1) {
        return Err(Error::Validation(
            "DivCoupling needs a vector row space and a scalar column space".to_string(),
        ));
    }
    if needs_scalar_row && (row.kind.components() != 1 || col.kind.components() != 2) {
        return Err(Error::Validation(
            "DivRow needs a scalar row space and a vector column space".to_string(),
        ));
    }
    if matches!(
        kind,
        FormKind::Mass
            | FormKind::Stiffness
            | FormKind::Strain
            | FormKind::Advection
            | FormKind::DivUMass
            | FormKind::ScalarAdvection
    ) && row.kind != col.kind
    {
        return Err(Error::Validation(
            "this form needs identical row and column spaces".to_string(),
        ));
    }
    if matches!(kind, FormKind::Strain | FormKind::Advection) && row.kind.components() != 2 {
        return Err(Error::Validation(
            "Strain/Advection act on vector spaces".to_string(),
        ));
    }
    if kind == FormKind::ScalarAdvection && row.kind.components() != 1 {
        return Err(Error::Validation(
            "ScalarAdvection acts on scalar spaces".to_string(),
        ));
    }

    let rule = quad_rule(AREA_QUAD_DEGREE)?;
    let mesh = &row.mesh;
    let rn = row.kind.nodes_per_elem();
    let cn = col.kind.nodes_per_elem();
    let rdeg = row.kind.degree();
    let cdeg = col.kind.degree();
    let rcomp = row.kind.components();
    let ccomp = col.kind.components();

    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for (er, ec) in row.elems.iter().zip(col.elems.iter()) {
        debug_assert_eq!(er.tri, ec.tri);
        let geom = ElemGeom::new(mesh, er.tri);
        let mut local = vec![0.0f64; rn * rcomp * cn * ccomp];
        for (qi, &(xi, eta)) in rule.points.iter().enumerate() {
            let w = rule.weights[qi] * geom.det;
            let (x, y) = geom.map(xi, eta);
            let rv = shape::values(rdeg, xi, eta);
            let cv = shape::values(cdeg, xi, eta);
            let rgref = shape::grads(rdeg, xi, eta);
            let cgref = shape::grads(cdeg, xi, eta);
            let mut rg = [[0.0; 2]; 6];
            let mut cg = [[0.0; 2]; 6];
            for k in 0..rn {
                rg[k] = geom.phys_grad(rgref[k]);
            }
            for k in 0..cn {
                cg[k] = geom.phys_grad(cgref[k]);
            }
            let (u, divu) = if matches!(
                kind,
                FormKind::Advection | FormKind::DivUMass | FormKind::ScalarAdvection
            ) {
                (flow.velocity(x, y), flow.divergence(x, y))
            } else {
                ([0.0, 0.0], 0.0)
            };

            match kind {
                FormKind::Mass => {
                    for a in 0..rn {
                        for b in 0..cn {
                            let v = w * rv[a] * cv[b];
                            for c in 0..rcomp {
                                local[(a * rcomp + c) * cn * ccomp + b * ccomp + c] += v;
                            }
                        }
                    }
                }
                FormKind::Stiffness => {
                    for a in 0..rn {
                        for b in 0..cn {
                            let v = w * (rg[a][0] * cg[b][0] + rg[a][1] * cg[b][1]);
                            for c in 0..rcomp {
                                local[(a * rcomp + c) * cn * ccomp + b * ccomp + c] += v;
                            }
                        }
                    }
                }
                FormKind::Strain => {
                    // nu [delta_cd grad_a . grad_b + d_c N_b d_d N_a]
                    //   + lame d_d N_b d_c N_a
                    let nu = params.nu;
                    let lam = params.lame_lambda;
                    for a in 0..rn {
                        for b in 0..cn {
                            let gdot = rg[a][0] * cg[b][0] + rg[a][1] * cg[b][1];
                            for c in 0..2 {
                                for d in 0..2 {
                                    let mut v = nu * cg[b][c] * rg[a][d] + lam * cg[b][d] * rg[a][c];
                                    if c == d {
                                        v += nu * gdot;
                                    }
                                    local[(a * 2 + c) * cn * 2 + b * 2 + d] += w * v;
                                }
                            }
                        }
                    }
                }
                FormKind::Advection => {
                    for a in 0..rn {
                        for b in 0..cn {
                            let v = w * (u[0] * cg[b][0] + u[1] * cg[b][1]) * rv[a];
                            for c in 0..2 {
                                local[(a * 2 + c) * cn * 2 + b * 2 + c] += v;
                            }
                        }
                    }
                }
                FormKind::DivUMass => {
                    for a in 0..rn {
                        for b in 0..cn {
                            let v = 0.5 * w * divu * rv[a] * cv[b];
                            for c in 0..rcomp {
                                local[(a * rcomp + c) * cn * ccomp + b * ccomp + c] += v;
                            }
                        }
                    }
                }
                FormKind::DivCoupling => {
                    for a in 0..rn {
                        for c in 0..2 {
                            for b in 0..cn {
                                local[(a * 2 + c) * cn + b] -= w * cv[b] * rg[a][c];
                            }
                        }
                    }
                }
                FormKind::ScalarAdvection => {
                    for a in 0..rn {
                        for b in 0..cn {
                            local[a * cn + b] += w * (u[0] * cg[b][0] + u[1] * cg[b][1]) * rv[a];
                        }
                    }
                }
                FormKind::DivRow => {
                    for a in 0..rn {
                        for b in 0..cn {
                            for d in 0..2 {
                                local[a * cn * 2 + b * 2 + d] += w * cg[b][d] * rv[a];
                            }
                        }
                    }
                }
            }
        }
        scatter(&mut trips, er, ec, rn * rcomp, cn * ccomp, rcomp, ccomp, &local);
    }
    Ok(CsrMatrix::from_triplets(
        row.n_dofs(),
        col.n_dofs(),
        &mut trips,
    ))
}

#[allow(clippy::too_many_arguments)]
fn scatter(
    trips: &mut Vec<(usize, usize, f64)>,
    er: &FeElement,
    ec: &FeElement,
    nr_local: usize,
    nc_local: usize,
    rcomp: usize,
    ccomp: usize,
    local: &[f64],
) {
    for i in 0..nr_local {
        let gi = er.nodes[i / rcomp] * rcomp + i % rcomp;
        for j in 0..nc_local {
            let v = local[i * nc_local + j];
            if v != 0.0 {
                let gj = ec.nodes[j / ccomp] * ccomp + j % ccomp;
                trips.push((gi, gj, v));
            }
        }
    }
}

/// Load vector of an analytic vector-valued function: entry `i = (f, phi_i)`.
pub fn assemble_load_vector(space: &FeSpace, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Result<Vec<f64>> {
    if space.kind.components() != 2 {
        return Err(Error::Validation(
            "vector load on a scalar space".to_string(),
        ));
    }
    let rule = quad_rule(AREA_QUAD_DEGREE)?;
    let nn = space.kind.nodes_per_elem();
    let deg = space.kind.degree();
    let mut out = vec![0.0; space.n_dofs()];
    for elem in &space.elems {
        let geom = ElemGeom::new(&space.mesh, elem.tri);
        for (qi, &(xi, eta)) in rule.points.iter().enumerate() {
            let w = rule.weights[qi] * geom.det;
            let (x, y) = geom.map(xi, eta);
            let val = f(x, y);
            let nv = shape::values(deg, xi, eta);
            for k in 0..nn {
                out[elem.nodes[k] * 2] += w * val[0] * nv[k];
                out[elem.nodes[k] * 2 + 1] += w * val[1] * nv[k];
            }
        }
    }
    Ok(out)
}

/// Load vector of an analytic scalar function.
pub fn assemble_load_scalar(space: &FeSpace, f: &dyn Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    if space.kind.components() != 1 {
        return Err(Error::Validation(
            "scalar load on a vector space".to_string(),
        ));
    }
    let rule = quad_rule(AREA_QUAD_DEGREE)?;
    let nn = space.kind.nodes_per_elem();
    let deg = space.kind.degree();
    let mut out = vec![0.0; space.n_dofs()];
    for elem in &space.elems {
        let geom = ElemGeom::new(&space.mesh, elem.tri);
        for (qi, &(xi, eta)) in rule.points.iter().enumerate() {
            let w = rule.weights[qi] * geom.det;
            let (x, y) = geom.map(xi, eta);
            let val = f(x, y);
            let nv = shape::values(deg, xi, eta);
            for k in 0..nn {
                out[elem.nodes[k]] += w * val * nv[k];
            }
        }
    }
    Ok(out)
}

/// Interface load `<j, phi_i>` over the interface edges, with `j` given as a
/// vector function of x along `y = 1/2`.
pub fn assemble_interface_jump_load(
    space: &FeSpace,
    j: &dyn Fn(f64) -> [f64; 2],
) -> Result<Vec<f64>> {
    if space.kind.components() != 2 {
        return Err(Error::Validation(
            "interface jump load needs a vector space".to_string(),
        ));
    }
    let mut out = vec![0.0; space.n_dofs()];
    edge_load_impl(space, BoundaryTag::Interface, &mut |x, _y, basis, nodes, w| {
        let val = j(x);
        for (k, &node) in nodes.iter().enumerate() {
            out[node * 2] += w * val[0] * basis[k];
            out[node * 2 + 1] += w * val[1] * basis[k];
        }
    })?;
    Ok(out)
}

/// Boundary load `int g chi ds` over all edges of one tag (scalar spaces).
pub fn assemble_boundary_load_scalar(
    space: &FeSpace,
    tag: BoundaryTag,
    g: &dyn Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    if space.kind.components() != 1 {
        return Err(Error::Validation(
            "scalar boundary load on a vector space".to_string(),
        ));
    }
    let mut out = vec![0.0; space.n_dofs()];
    edge_load_impl(space, tag, &mut |x, y, basis, nodes, w| {
        let val = g(x, y);
        for (k, &node) in nodes.iter().enumerate() {
            out[node] += w * val * basis[k];
        }
    })?;
    Ok(out)
}

/// Shared edge-quadrature loop. Calls `accum(x, y, trace_basis, node_ids, w)`
/// at each quadrature point of each tagged edge.
fn edge_load_impl(
    space: &FeSpace,
    tag: BoundaryTag,
    accum: &mut dyn FnMut(f64, f64, &[f64], &[usize], f64),
) -> Result<()> {
    let mesh = &space.mesh;
    let (qs, qw) = edge_quad_rule();
    let degree = space.kind.degree();
    // node lookup by lattice
    let mut by_lattice: alloc::collections::BTreeMap<(i64, i64), usize> =
        alloc::collections::BTreeMap::new();
    for (i, n) in space.nodes.iter().enumerate() {
        by_lattice.insert(n.l2, i);
    }
    for edge in mesh.edges_with_tag(tag) {
        let p1 = &mesh.vertices[edge.v[0]];
        let p2 = &mesh.vertices[edge.v[1]];
        let l1 = (2 * p1.lattice.0, 2 * p1.lattice.1);
        let l2 = (2 * p2.lattice.0, 2 * p2.lattice.1);
        let mid = ((l1.0 + l2.0) / 2, (l1.1 + l2.1) / 2);
        let mut nodes = Vec::with_capacity(3);
        let n1 = match by_lattice.get(&l1) {
            Some(&n) => n,
            None => continue, // edge belongs to the other subdomain
        };
        let n2 = match by_lattice.get(&l2) {
            Some(&n) => n,
            None => continue,
        };
        nodes.push(n1);
        nodes.push(n2);
        if degree == 2 {
            nodes.push(*by_lattice.get(&mid).ok_or_else(|| {
                Error::Validation("missing edge midpoint node".to_string())
            })?);
        }
        let len = libm::hypot(p2.x - p1.x, p2.y - p1.y);
        for (qi, &s) in qs.iter().enumerate() {
            let w = qw[qi] * len;
            let x = p1.x + s * (p2.x - p1.x);
            let y = p1.y + s * (p2.y - p1.y);
            let basis = if degree == 1 {
                vec![1.0 - s, s]
            } else {
                vec![(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
            };
            accum(x, y, &basis, &nodes, w);
        }
    }
    Ok(())
}

/// Load vector of data that may be analytic, an existing field, or zero.
pub enum VectorData<'a> {
    Zero,
    Analytic(&'a dyn Fn(f64, f64) -> [f64; 2]),
    Field(&'a FeField),
}

pub enum ScalarData<'a> {
    Zero,
    Analytic(&'a dyn Fn(f64, f64) -> f64),
    Field(&'a FeField),
}

impl VectorData<'_> {
    /// `(data, phi_i)` against all basis functions; `mass` is the space's
    /// mass matrix, used for the field variant.
    pub fn load(&self, space: &FeSpace, mass: &CsrMatrix) -> Result<Vec<f64>> {
        match self {
            VectorData::Zero => Ok(vec![0.0; space.n_dofs()]),
            VectorData::Analytic(f) => assemble_load_vector(space, *f),
            VectorData::Field(fld) => {
                if fld.space.kind != space.kind
                    || fld.space.subdomain != space.subdomain
                    || fld.space.n_dofs() != space.n_dofs()
                {
                    return Err(Error::Validation(
                        "field data lives on a different space".to_string(),
                    ));
                }
                Ok(mass.matvec(&fld.coeffs))
            }
        }
    }
}

impl ScalarData<'_> {
    pub fn load(&self, space: &FeSpace, mass: &CsrMatrix) -> Result<Vec<f64>> {
        match self {
            ScalarData::Zero => Ok(vec![0.0; space.n_dofs()]),
            ScalarData::Analytic(f) => assemble_load_scalar(space, *f),
            ScalarData::Field(fld) => {
                if fld.space.kind != space.kind
                    || fld.space.subdomain != space.subdomain
                    || fld.space.n_dofs() != space.n_dofs()
                {
                    return Err(Error::Validation(
                        "field data lives on a different space".to_string(),
                    ));
                }
                Ok(mass.matvec(&fld.coeffs))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_two_domain_mesh;
    use crate::space::{build_space, SpaceKind};
    use core::f64::consts::PI;

    fn mesh(nx: usize, ny: usize) -> Arc<Mesh> {
        Arc::new(build_two_domain_mesh(nx, ny).unwrap())
    }

    #[test]
    fn quadrature_examples() {
        // integrate 1, x*y, x^4 over the reference triangle
        for deg in [1usize, 2, 3, 4, 5] {
            let r = quad_rule(deg).unwrap();
            let total: f64 = r.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-15, "degree {deg}");
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
        let r = quad_rule(5).unwrap();
        let ixy: f64 = r
            .points
            .iter()
            .zip(r.weights.iter())
            .map(|(&(x, y), &w)| w * x * y)
            .sum();
        assert!((ixy - 1.0 / 24.0).abs() < 1e-15);
        let ix4: f64 = r
            .points
            .iter()
            .zip(r.weights.iter())
            .map(|(&(x, _), &w)| w * x * x * x * x)
            .sum();
        assert!((ix4 - 1.0 / 30.0).abs() < 1e-15);
        assert!(quad_rule(6).is_err());
    }

    #[test]
    fn strain_energy_of_linear_field() {
        // u = (x, -y): eps = diag(1,-1), div u = 0, integral of 2 eps:eps = 2
        let m = mesh(3, 2);
        let s = build_space(&m, SpaceKind::VectorP2, Subdomain::Minus, &[]).unwrap();
        let params = MaterialParams::new(1.0, 0.0, 1.0).unwrap();
        let strain = assemble_form(FormKind::Strain, &s, &s, &params, &BackgroundFlow::zero())
            .unwrap();
        let u = FeField::interpolate_vector(&s, |x, y| [x, -y]).unwrap();
        let e = strain.bilinear(&u.coeffs, &u.coeffs);
        assert!((e - 2.0).abs() < 1e-13, "strain energy {e}");
    }

    #[test]
    fn mass_stiffness_strain_symmetry_is_exact() {
        let m = mesh(2, 2);
        let s = build_space(&m, SpaceKind::VectorP2, Subdomain::Plus, &[]).unwrap();
        let params = MaterialParams::new(1.3, 0.7, 1.0).unwrap();
        let flow = BackgroundFlow::zero();
        for kind in [FormKind::Mass, FormKind::Stiffness, FormKind::Strain] {
            let a = assemble_form(kind, &s, &s, &params, &flow).unwrap();
            assert_eq!(a.asymmetry(), 0.0, "{kind:?}");
        }
    }

    #[test]
    fn div_row_is_negated_transpose_of_div_coupling() {
        let m = mesh(2, 2);
        let v = build_space(&m, SpaceKind::VectorP2, Subdomain::Minus, &[]).unwrap();
        let q = build_space(&m, SpaceKind::ScalarP1, Subdomain::Minus, &[]).unwrap();
        let params = MaterialParams::default();
        let flow = BackgroundFlow::zero();
        let dc = assemble_form(FormKind::DivCoupling, &v, &q, &params, &flow).unwrap();
        let dr = assemble_form(FormKind::DivRow, &q, &v, &params, &flow).unwrap();
        let diff = dr.add_scaled(&dc.transpose(), 1.0);
        assert_eq!(diff.nnz(), 0, "DivRow != -DivCoupling^T");
    }

    /// Symbolic element-integral oracle: P2 mass entries via the barycentric
    /// monomial formula `int l1^a l2^b l3^c = 2|T| a! b! c! / (a+b+c+2)!`.
    #[test]
    fn p2_mass_matches_symbolic_integrals() {
        use alloc::collections::BTreeMap;
        type Poly = BTreeMap<(u8, u8, u8), f64>;
        fn basis_polys() -> [Poly; 6] {
            let mut out: [Poly; 6] = Default::default();
            // N_i = 2 l_i^2 - l_i ; N_edge = 4 l_a l_b
            let vertex = |i: usize| {
                let mut p = Poly::new();
                let mut e2 = [0u8; 3];
                e2[i] = 2;
                let mut e1 = [0u8; 3];
                e1[i] = 1;
                p.insert((e2[0], e2[1], e2[2]), 2.0);
                p.insert((e1[0], e1[1], e1[2]), -1.0);
                p
            };
            let edge = |a: usize, b: usize| {
                let mut p = Poly::new();
                let mut e = [0u8; 3];
                e[a] = 1;
                e[b] = 1;
                p.insert((e[0], e[1], e[2]), 4.0);
                p
            };
            out[0] = vertex(0);
            out[1] = vertex(1);
            out[2] = vertex(2);
            out[3] = edge(0, 1);
            out[4] = edge(1, 2);
            out[5] = edge(2, 0);
            out
        }
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fn integral(p: &Poly, q: &Poly, area: f64) -> f64 {
            let mut total = 0.0;
            for (&(a1, b1, c1), &v1) in p {
                for (&(a2, b2, c2), &v2) in q {
                    let (a, b, c) = ((a1 + a2) as u32, (b1 + b2) as u32, (c1 + c2) as u32);
                    total += v1 * v2 * 2.0 * area * fact(a) * fact(b) * fact(c)
                        / fact(a + b + c + 2);
                }
            }
            total
        }

        let m = mesh(3, 2);
        let s = build_space(&m, SpaceKind::ScalarP2, Subdomain::Minus, &[]).unwrap();
        let mass = assemble_form(
            FormKind::Mass,
            &s,
            &s,
            &MaterialParams::default(),
            &BackgroundFlow::zero(),
        )
        .unwrap();
        // rebuild the mass matrix from per-element symbolic integrals
        let polys = basis_polys();
        let mut trips = Vec::new();
        for elem in &s.elems {
            let area = m.tri_area(&m.triangles[elem.tri]);
            for i in 0..6 {
                for j in 0..6 {
                    trips.push((
                        elem.nodes[i],
                        elem.nodes[j],
                        integral(&polys[i], &polys[j], area),
                    ));
                }
            }
        }
        let oracle = CsrMatrix::from_triplets(s.n_dofs(), s.n_dofs(), &mut trips);
        let diff = mass.add_scaled(&oracle, -1.0);
        let worst = diff.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(worst < 1e-14, "worst deviation {worst}");
    }

    #[test]
    fn vector_load_partition_of_unity() {
        let m = mesh(3, 3);
        let s = build_space(&m, SpaceKind::VectorP2, Subdomain::Minus, &[]).unwrap();
        let zero = assemble_load_vector(&s, &|_, _| [0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let load = assemble_load_vector(&s, &|_, _| [1.0, 0.0]).unwrap();
        let sx: f64 = load.iter().step_by(2).sum();
        let sy: f64 = load.iter().skip(1).step_by(2).sum();
        assert!((sx - 0.5).abs() < 1e-14); // area of the lower rectangle
        assert!(sy.abs() < 1e-14);
    }

    #[test]
    fn sine_load_matches_analytic_integral() {
        let m = mesh(8, 4);
        let s = build_space(&m, SpaceKind::VectorP2, Subdomain::Minus, &[]).unwrap();
        let load = assemble_load_vector(&s, &|x, _| [libm::sin(PI * x), 0.0]).unwrap();
        let sx: f64 = load.iter().step_by(2).sum();
        // sum over x-entries = int sin(pi x) over the lower rectangle = 1/pi
        assert!((sx - 1.0 / PI).abs() < 1e-8, "{sx}");
    }

    #[test]
    fn interface_jump_load_examples() {
        let m = mesh(4, 2);
        let s = build_space(
            &m,
            SpaceKind::VectorP2,
            Subdomain::Minus,
            &[BoundaryTag::OuterMinus],
        )
        .unwrap();
        let zero = assemble_interface_jump_load(&s, &|_| [0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        // constant (0,1): y-entries sum to |Gamma| = 1
        let l = assemble_interface_jump_load(&s, &|_| [0.0, 1.0]).unwrap();
        let sy: f64 = l.iter().skip(1).step_by(2).sum();
        assert!((sy - 1.0).abs() < 1e-14);
        // j = (x, 0): x-entries sum to 1/2
        let l = assemble_interface_jump_load(&s, &|x| [x, 0.0]).unwrap();
        let sx: f64 = l.iter().step_by(2).sum();
        assert!((sx - 0.5).abs() < 1e-14);
    }

    #[test]
    fn advection_skew_identity_for_divergence_free_flow() {
        // (U . grad u, u) + 1/2 (div(U) u, u) = 0 for zero-trace u and the
        // vortex preset, up to quadrature error of the non-polynomial flow
        let m = mesh(8, 8);
        let s = build_space(
            &m,
            SpaceKind::VectorP2,
            Subdomain::Plus,
            &[BoundaryTag::OuterPlus, BoundaryTag::Interface],
        )
        .unwrap();
        let params = MaterialParams::default();
        let flow = BackgroundFlow::vortex();
        let adv = assemble_form(FormKind::Advection, &s, &s, &params, &flow).unwrap();
        let divm = assemble_form(FormKind::DivUMass, &s, &s, &params, &flow).unwrap();
        // smooth zero-trace field: interpolate then zero out constrained DOFs
        let mut u = FeField::interpolate_vector(&s, |x, y| {
            let b = libm::sin(PI * x) * libm::sin(2.0 * PI * (y - 0.5));
            [b, 0.5 * b]
        })
        .unwrap();
        for d in 0..s.n_dofs() {
            if s.dirichlet_mask[d] {
                u.coeffs[d] = 0.0;
            }
        }
        let skew = adv.bilinear(&u.coeffs, &u.coeffs) + divm.bilinear(&u.coeffs, &u.coeffs);
        assert!(skew.abs() < 1e-10, "skew residual {skew}");
    }

    #[test]
    fn preset_flows_are_tangential_with_exact_divergence() {
        for flow in [BackgroundFlow::zero(), BackgroundFlow::vortex()] {
            assert!(flow.max_boundary_normal_flux(64) < 1e-12, "{}", flow.name);
            assert!(flow.max_divergence_mismatch(1, 32) < 1e-6, "{}", flow.name);
        }
    }

    #[test]
    fn subdomain_mismatch_is_rejected() {
        let m = mesh(2, 2);
        let a = build_space(&m, SpaceKind::VectorP2, Subdomain::Minus, &[]).unwrap();
        let b = build_space(&m, SpaceKind::ScalarP1, Subdomain::Plus, &[]).unwrap();
        let r = assemble_form(
            FormKind::DivCoupling,
            &a,
            &b,
            &MaterialParams::default(),
            &BackgroundFlow::zero(),
        );
        assert!(r.is_err());
    }
}
