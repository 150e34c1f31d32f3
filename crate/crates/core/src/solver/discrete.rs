//! P1 discretization of the PMC energy. The gradient term is exact per
//! triangle (T f is elementwise constant); the curvature and capillary terms
//! use the vertex rule, so the discrete energy, residual and Jacobian are
//! mutually consistent.

use super::problem::{BoundaryCondition, BoundarySpec, MeanCurvatureSpec};
use super::SolveError;
use crate::exec::{map_indexed, Exec};
use crate::geometry::{BoundaryTag, WedgeDomain};
use crate::mesh::Mesh;
use faer::sparse::Triplet;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

/// Vertex-rule weight of a capillary edge end: `(node, length / 2, gamma)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CapTerm {
    pub node: usize,
    pub weight: f64,
    pub gamma: f64,
}

#[derive(Debug)]
pub(crate) struct Discretization {
    pub domain: WedgeDomain,
    pub mesh: Arc<Mesh>,
    pub curvature: MeanCurvatureSpec,
    pub boundary: BoundarySpec,
    pub exec: Exec,
    pub areas: Vec<f64>,
    /// Basis gradients per triangle, in vertex order.
    pub grads: Vec<[[f64; 2]; 3]>,
    /// Lumped mass `sum area / 3` per vertex.
    pub lumped: Vec<f64>,
    pub cap_terms: Vec<CapTerm>,
    pub dirichlet: Vec<Option<f64>>,
    /// Global ids of unknowns.
    pub free: Vec<usize>,
    /// Unknown index per vertex, `usize::MAX` for Dirichlet vertices.
    pub free_index: Vec<usize>,
}

/// Per-triangle energy, gradient and Hessian of `area * sqrt(1 + |grad f|^2)`.
struct Local {
    energy: f64,
    grad: [f64; 3],
    hess: [[f64; 3]; 3],
}

impl Discretization {
    pub fn new(
        domain: &WedgeDomain,
        mesh: Arc<Mesh>,
        curvature: &MeanCurvatureSpec,
        boundary: &BoundarySpec,
        exec: Exec,
    ) -> Result<Self, SolveError> {
        let kappa = curvature.slope();
        if kappa < 0.0 || !kappa.is_finite() {
            return Err(SolveError::IllPosed(format!("curvature slope kappa = {kappa} must be >= 0")));
        }
        if !boundary.any_dirichlet() && kappa <= 0.0 {
            return Err(SolveError::IllPosed(
                "no Dirichlet piece and H does not increase in f; solutions are not unique".into(),
            ));
        }
        let nv = mesh.n_vertices();
        let nt = mesh.n_triangles();
        let mut areas = Vec::with_capacity(nt);
        let mut grads = Vec::with_capacity(nt);
        let mut lumped = vec![0.0; nv];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = mesh.triangle_points(t);
            let area = mesh.triangle_area(t);
            let mut g = [[0.0; 2]; 3];
            for i in 0..3 {
                let a = p[(i + 1) % 3];
                let b = p[(i + 2) % 3];
                g[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
            }
            for &v in tri {
                lumped[v] += area / 3.0;
            }
            areas.push(area);
            grads.push(g);
        }

        let mut cap_terms = Vec::new();
        for e in &mesh.boundary_edges {
            if let BoundaryCondition::Capillary { gamma } = boundary.get(e.tag) {
                let a = mesh.vertices[e.v[0]];
                let b = mesh.vertices[e.v[1]];
                let half = 0.5 * (a[0] - b[0]).hypot(a[1] - b[1]);
                for k in 0..2 {
                    let g = gamma.eval(domain, mesh.vertices[e.v[k]], e.s[k]);
                    if !(0.0..=std::f64::consts::PI).contains(&g) {
                        return Err(SolveError::InvalidBoundaryData(format!(
                            "contact angle {g} outside [0, pi] on {}",
                            e.tag.name()
                        )));
                    }
                    cap_terms.push(CapTerm { node: e.v[k], weight: half, gamma: g });
                }
            }
        }

        let mut dirichlet = vec![None; nv];
        for tag in [BoundaryTag::SidePlus, BoundaryTag::SideMinus, BoundaryTag::OuterArc] {
            if let BoundaryCondition::Dirichlet { value } = boundary.get(tag) {
                for (v, s) in mesh.boundary_nodes(tag) {
                    if dirichlet[v].is_none() {
                        let x = value.eval(domain, mesh.vertices[v], s);
                        if !x.is_finite() {
                            return Err(SolveError::InvalidBoundaryData(format!(
                                "non-finite Dirichlet value on {}",
                                tag.name()
                            )));
                        }
                        dirichlet[v] = Some(x);
                    }
                }
            }
        }
        let mut free = Vec::new();
        let mut free_index = vec![usize::MAX; nv];
        for v in 0..nv {
            if dirichlet[v].is_none() {
                free_index[v] = free.len();
                free.push(v);
            }
        }
        Ok(Discretization {
            domain: domain.clone(),
            mesh,
            curvature: curvature.clone(),
            boundary: boundary.clone(),
            exec,
            areas,
            grads,
            lumped,
            cap_terms,
            dirichlet,
            free,
            free_index,
        })
    }

    /// `sum (length / 2) cos gamma` per vertex, with contact angles moved a
    /// fraction `lambda` of the way from `pi/2` to their targets.
    pub fn capillary_load(&self, lambda: f64) -> Vec<f64> {
        let mut load = vec![0.0; self.mesh.n_vertices()];
        for c in &self.cap_terms {
            let g = if lambda == 1.0 { c.gamma } else { FRAC_PI_2 + lambda * (c.gamma - FRAC_PI_2) };
            load[c.node] += c.weight * g.cos();
        }
        load
    }

    /// Initial iterate: Dirichlet data where prescribed, their mean elsewhere.
    pub fn initial_guess(&self) -> Vec<f64> {
        let data: Vec<f64> = self.dirichlet.iter().flatten().copied().collect();
        let fill = if data.is_empty() {
            match self.curvature {
                MeanCurvatureSpec::Linear { kappa, h0 } if kappa > 0.0 => -h0 / kappa,
                _ => 0.0,
            }
        } else {
            data.iter().sum::<f64>() / data.len() as f64
        };
        self.dirichlet.iter().map(|d| d.unwrap_or(fill)).collect()
    }

    pub fn slope(&self, f: &[f64], t: usize) -> [f64; 2] {
        let tri = self.mesh.triangles[t];
        let g = &self.grads[t];
        let mut p = [0.0; 2];
        for i in 0..3 {
            p[0] += f[tri[i]] * g[i][0];
            p[1] += f[tri[i]] * g[i][1];
        }
        p
    }

    /// `lagged` replaces the Hessian of the area term by its frozen-coefficient
    /// part `grad^T grad / w`.
    fn local(&self, f: &[f64], t: usize, with_hessian: bool, lagged: bool) -> Local {
        let area = self.areas[t];
        let g = &self.grads[t];
        let p = self.slope(f, t);
        let q = 1.0 + p[0] * p[0] + p[1] * p[1];
        let w = q.sqrt();
        let tf = [p[0] / w, p[1] / w];
        let mut grad = [0.0; 3];
        for i in 0..3 {
            grad[i] = area * (tf[0] * g[i][0] + tf[1] * g[i][1]);
        }
        let mut hess = [[0.0; 3]; 3];
        if with_hessian {
            // (I - p p^T / q) / w
            let c = if lagged { 0.0 } else { 1.0 };
            let a = [
                [(1.0 - c * p[0] * p[0] / q) / w, (-c * p[0] * p[1] / q) / w],
                [(-c * p[0] * p[1] / q) / w, (1.0 - c * p[1] * p[1] / q) / w],
            ];
            for i in 0..3 {
                let ag = [a[0][0] * g[i][0] + a[0][1] * g[i][1], a[1][0] * g[i][0] + a[1][1] * g[i][1]];
                for j in 0..3 {
                    hess[j][i] = area * (ag[0] * g[j][0] + ag[1] * g[j][1]);
                }
            }
        }
        Local { energy: area * w, grad, hess }
    }

    pub fn energy(&self, f: &[f64], load: &[f64]) -> f64 {
        let per_tri = map_indexed(self.exec, self.mesh.n_triangles(), |t| self.local(f, t, false, false).energy);
        let mut e: f64 = per_tri.iter().sum();
        for (v, x) in self.mesh.vertices.iter().enumerate() {
            e += self.lumped[v] * self.curvature.potential(&self.domain, *x, f[v]) - load[v] * f[v];
        }
        e
    }

    /// Weak residual tested against every nodal basis function.
    pub fn residual(&self, f: &[f64], load: &[f64]) -> Vec<f64> {
        let locals = map_indexed(self.exec, self.mesh.n_triangles(), |t| self.local(f, t, false, false).grad);
        let mut r = vec![0.0; self.mesh.n_vertices()];
        for (tri, g) in self.mesh.triangles.iter().zip(&locals) {
            for i in 0..3 {
                r[tri[i]] += g[i];
            }
        }
        for (v, x) in self.mesh.vertices.iter().enumerate() {
            r[v] += self.lumped[v] * 2.0 * self.curvature.value(&self.domain, *x, f[v]) - load[v];
        }
        r
    }

    /// Euclidean norm of the residual restricted to unknowns.
    pub fn free_norm(&self, r: &[f64]) -> f64 {
        self.free.iter().map(|&v| r[v] * r[v]).sum::<f64>().sqrt()
    }

    /// Lower triangle of the Jacobian on unknowns (or of its lagged-coefficient
    /// variant), in a fixed order.
    pub fn jacobian(&self, f: &[f64], lagged: bool) -> Vec<Triplet<usize, usize, f64>> {
        let locals = map_indexed(self.exec, self.mesh.n_triangles(), |t| self.local(f, t, true, lagged).hess);
        let mut trip = Vec::with_capacity(6 * locals.len() + self.free.len());
        for (tri, h) in self.mesh.triangles.iter().zip(&locals) {
            for i in 0..3 {
                let fi = self.free_index[tri[i]];
                if fi == usize::MAX {
                    continue;
                }
                for j in 0..3 {
                    let fj = self.free_index[tri[j]];
                    if fj != usize::MAX && fi >= fj {
                        trip.push(Triplet::new(fi, fj, h[i][j]));
                    }
                }
            }
        }
        let kappa2 = 2.0 * self.curvature.slope();
        for (k, &v) in self.free.iter().enumerate() {
            trip.push(Triplet::new(k, k, self.lumped[v] * kappa2));
        }
        trip
    }
}
