//! Piecewise-linear solution fields and the quantities derived from them.

use super::discrete::Discretization;
use super::problem::{BoundaryCondition, BoundarySpec, MeanCurvatureSpec};
use super::{SolveError, SolverDiagnostics};
use crate::exec::Exec;
use crate::geometry::{BoundaryTag, Point, WedgeDomain};
use crate::mesh::{Locator, Mesh};
use std::fmt::Write as _;
use std::sync::Arc;

/// Nodal values of a P1 function on a wedge mesh, with the problem it solves.
#[derive(Clone)]
pub struct ScalarField {
    disc: Arc<Discretization>,
    locator: Arc<Locator>,
    values: Vec<f64>,
    pub diagnostics: SolverDiagnostics,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("n_vertices", &self.values.len())
            .field("diagnostics", &self.diagnostics)
            .finish()
    }
}

impl ScalarField {
    pub(crate) fn new(disc: Arc<Discretization>, values: Vec<f64>, diagnostics: SolverDiagnostics) -> Self {
        let locator = Arc::new(Locator::new(&disc.mesh));
        ScalarField { disc, locator, values, diagnostics }
    }

    /// Nodal interpolant of `f` for the given problem (no solve). Dirichlet
    /// nodes take `f`, not the boundary data.
    pub fn interpolate(
        domain: &WedgeDomain,
        mesh: Arc<Mesh>,
        curvature: &MeanCurvatureSpec,
        boundary: &BoundarySpec,
        f: impl Fn(Point) -> f64,
    ) -> Result<Self, SolveError> {
        let disc = Discretization::new(domain, mesh, curvature, boundary, Exec::default())?;
        let values = disc.mesh.vertices.iter().map(|&x| f(x)).collect();
        Ok(ScalarField::new(Arc::new(disc), values, SolverDiagnostics::default()))
    }

    /// Same problem, different nodal values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len(), "value count must match the mesh");
        ScalarField {
            disc: self.disc.clone(),
            locator: self.locator.clone(),
            values,
            diagnostics: SolverDiagnostics::default(),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.disc.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        self.disc.mesh.clone()
    }

    pub fn domain(&self) -> &WedgeDomain {
        &self.disc.domain
    }

    pub fn curvature(&self) -> &MeanCurvatureSpec {
        &self.disc.curvature
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.disc.boundary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when vertex `v` carries Dirichlet data.
    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.disc.dirichlet[v].is_some()
    }

    /// Linear interpolation at `p`; `None` outside the mesh.
    pub fn evaluate(&self, p: Point) -> Option<f64> {
        let (t, b) = self.locator.locate(&self.disc.mesh, p)?;
        let tri = self.disc.mesh.triangles[t];
        Some(b[0] * self.values[tri[0]] + b[1] * self.values[tri[1]] + b[2] * self.values[tri[2]])
    }

    /// Containing triangle of `p`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        self.locator.locate(&self.disc.mesh, p).map(|(t, _)| t)
    }

    /// Constant gradient on triangle `t`.
    pub fn triangle_gradient(&self, t: usize) -> [f64; 2] {
        self.disc.slope(&self.values, t)
    }

    /// Discrete energy `int sqrt(1 + |grad f|^2) + int Phi(x, f) - oint cos gamma f`.
    pub fn energy(&self) -> f64 {
        self.disc.energy(&self.values, &self.disc.capillary_load(1.0))
    }

    /// Weak residual per vertex; Dirichlet rows are zeroed.
    pub fn residual(&self) -> Vec<f64> {
        let mut r = self.disc.residual(&self.values, &self.disc.capillary_load(1.0));
        for (v, d) in self.disc.dirichlet.iter().enumerate() {
            if d.is_some() {
                r[v] = 0.0;
            }
        }
        r
    }

    pub fn residual_norm(&self) -> f64 {
        self.disc.free_norm(&self.disc.residual(&self.values, &self.disc.capillary_load(1.0)))
    }

    /// Area of the graph: `sum area * sqrt(1 + |grad f|^2)`.
    pub fn graph_area(&self) -> f64 {
        (0..self.disc.mesh.n_triangles())
            .map(|t| {
                let p = self.disc.slope(&self.values, t);
                self.disc.areas[t] * (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()
            })
            .sum()
    }

    /// `(M1, M2)`: sup of nodal |f| and of |H(x, f(x))| over the vertices (the
    /// quadrature points of the curvature term).
    pub fn empirical_bounds(&self) -> (f64, f64) {
        let mut m1 = 0.0f64;
        let mut m2 = 0.0f64;
        for (x, &f) in self.disc.mesh.vertices.iter().zip(&self.values) {
            m1 = m1.max(f.abs());
            m2 = m2.max(self.disc.curvature.value(&self.disc.domain, *x, f).abs());
        }
        (m1, m2)
    }

    /// Edge-averaged defect of the weak contact condition on a capillary
    /// piece: `sum_i |int T f . grad phi_i + int 2 H phi_i - oint cos gamma phi_i|`
    /// over its free vertices, divided by the piece's length. `None` for
    /// Dirichlet pieces.
    pub fn capillary_flux_defect(&self, tag: BoundaryTag) -> Option<f64> {
        if !matches!(self.disc.boundary.get(tag), BoundaryCondition::Capillary { .. }) {
            return None;
        }
        let r = self.residual();
        let nodes = self.disc.mesh.boundary_nodes(tag);
        let total: f64 = nodes.iter().map(|&(v, _)| r[v].abs()).sum();
        let length: f64 = self
            .disc
            .mesh
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| {
                let a = self.disc.mesh.vertices[e.v[0]];
                let b = self.disc.mesh.vertices[e.v[1]];
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .sum();
        Some(total / length)
    }

    /// `# schema=1` CSV with columns `x1,x2,f`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema=1\nx1,x2,f\n");
        for (x, f) in self.disc.mesh.vertices.iter().zip(&self.values) {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", x[0], x[1], f);
        }
        s
    }

    /// Diagnostics block as TOML.
    pub fn diagnostics_text(&self) -> String {
        let (m1, m2) = self.empirical_bounds();
        let d = &self.diagnostics;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
        let flags: Vec<String> = d
            .flags
            .iter()
            .map(|f| format!("\"{}\"", f.name()))
            .collect();
        format!(
            "schema = 1\nresidual_norm = {:e}\niterations = {}\ndamping_history = [{}]\nenergy_history = [{}]\nresidual_history = [{}]\nsup_history = [{}]\nflags = [{}]\ngraph_area = {:e}\nm1 = {:e}\nm2 = {:e}\nvertices = {}\ntriangles = {}\n",
            d.residual_norm,
            d.iterations,
            list(&d.damping_history),
            list(&d.energy_history),
            list(&d.residual_history),
            list(&d.sup_history),
            flags.join(", "),
            self.graph_area(),
            m1,
            m2,
            self.disc.mesh.n_vertices(),
            self.disc.mesh.n_triangles(),
        )
    }
}
