//! Finite-element solution of `div(T f) = 2 H(x, f)`, `T f = grad f / sqrt(1 + |grad f|^2)`,
//! with capillary (`T f . nu = cos gamma`) and Dirichlet boundary pieces.

mod discrete;
mod field;
pub mod problem;

pub use field::ScalarField;
pub use problem::{BoundaryCondition, BoundarySpec, MeanCurvatureSpec, Profile, Variable};

use crate::conditions::concus_finn_admissible;
use crate::exec::Exec;
use crate::geometry::{BoundaryTag, WedgeDomain};
use crate::mesh::Mesh;
use discrete::Discretization;
use faer::linalg::solvers::Solve;
use faer::sparse::SparseColMat;
use faer::{Col, Side};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Armijo constant of the energy line search.
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1.0 / 1048576.0;
/// Newton steps damped below this also try the lagged-coefficient direction.
const POOR_STEP: f64 = 0.1;
/// Continuation stages in the contact angle, as fractions of the way from `pi/2`.
const CONTINUATION: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// sup |f| beyond this multiple of the data scale, attained near the corner
/// and growing for `BLOWUP_PATIENCE` consecutive steps, is treated as corner
/// blow-up. A single damped overshoot is not.
const BLOWUP_FACTOR: f64 = 10.0;
const BLOWUP_PATIENCE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol_newton: f64,
    pub max_iter: usize,
    /// Initial (largest) step length of each line search, in (0, 1].
    pub damping: f64,
    /// Retry with contact-angle continuation after a failed direct solve.
    pub continuation: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol_newton: 1e-10, max_iter: 50, damping: 1.0, continuation: true, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverFlag {
    /// Both sides capillary with corner angles violating Concus-Finn, or the
    /// iterates grew without bound near the corner.
    UnboundedCornerSuspected,
    ContinuationUsed,
}

impl SolverFlag {
    pub fn name(self) -> &'static str {
        match self {
            SolverFlag::UnboundedCornerSuspected => "unbounded_corner_suspected",
            SolverFlag::ContinuationUsed => "continuation_used",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub residual_norm: f64,
    pub iterations: usize,
    /// Accepted step length per Newton iteration.
    pub damping_history: Vec<f64>,
    /// Energy after each accepted step (first entry: initial iterate).
    pub energy_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    /// sup |f| of each iterate.
    pub sup_history: Vec<f64>,
    pub flags: Vec<SolverFlag>,
}

impl SolverDiagnostics {
    pub fn has_flag(&self, flag: SolverFlag) -> bool {
        self.flags.contains(&flag)
    }

    fn flag(&mut self, flag: SolverFlag) {
        if !self.has_flag(flag) {
            self.flags.push(flag);
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error("invalid boundary data: {0}")]
    InvalidBoundaryData(String),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("Newton did not converge (best residual {:.3e})", best.diagnostics.residual_norm)]
    NoConvergence { best: Box<ScalarField> },
    #[error("line search stalled (residual {:.3e})", best.diagnostics.residual_norm)]
    LineSearchStalled { best: Box<ScalarField> },
}

impl SolveError {
    /// Best iterate carried by a convergence failure.
    pub fn best(&self) -> Option<&ScalarField> {
        match self {
            SolveError::NoConvergence { best } | SolveError::LineSearchStalled { best } => Some(best),
            _ => None,
        }
    }
}

enum Outcome {
    Converged,
    MaxIter,
    Stalled,
    BlowUp,
}

struct Run {
    values: Vec<f64>,
    best: Vec<f64>,
    best_norm: f64,
    outcome: Outcome,
}

/// Solves the PMC boundary value problem on `mesh` by damped Newton.
pub fn solve(
    domain: &WedgeDomain,
    mesh: Arc<Mesh>,
    curvature: &MeanCurvatureSpec,
    boundary: &BoundarySpec,
    options: &SolverOptions,
) -> Result<ScalarField, SolveError> {
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(SolveError::InvalidOptions(format!("damping {} not in (0, 1]", options.damping)));
    }
    if !(options.tol_newton > 0.0) || options.max_iter == 0 {
        return Err(SolveError::InvalidOptions("tol_newton must be > 0 and max_iter >= 1".into()));
    }
    let disc = Arc::new(Discretization::new(domain, mesh, curvature, boundary, options.exec)?);
    let mut diag = SolverDiagnostics::default();
    if let (Some(g1), Some(g2)) = (
        boundary.corner_angle(domain, BoundaryTag::SidePlus),
        boundary.corner_angle(domain, BoundaryTag::SideMinus),
    ) {
        if !concus_finn_admissible(domain.alpha(), g1, g2).admissible {
            diag.flag(SolverFlag::UnboundedCornerSuspected);
        }
    }

    let f0 = disc.initial_guess();
    let mut run = newton(&disc, f0.clone(), 1.0, options, &mut diag);
    if matches!(run.outcome, Outcome::MaxIter | Outcome::Stalled) && options.continuation && !disc.cap_terms.is_empty() {
        diag.flag(SolverFlag::ContinuationUsed);
        let mut f = f0;
        for &lambda in &CONTINUATION {
            run = newton(&disc, f, lambda, options, &mut diag);
            if !matches!(run.outcome, Outcome::Converged) {
                break;
            }
            f = run.values.clone();
        }
    }
    match run.outcome {
        Outcome::Converged => {
            diag.residual_norm = run.best_norm;
            Ok(ScalarField::new(disc, run.values, diag))
        }
        outcome => {
            diag.residual_norm = run.best_norm;
            let best = Box::new(ScalarField::new(disc, run.best, diag));
            Err(match outcome {
                Outcome::Stalled => SolveError::LineSearchStalled { best },
                _ => SolveError::NoConvergence { best },
            })
        }
    }
}

fn sup_abs(f: &[f64]) -> (f64, usize) {
    f.iter()
        .enumerate()
        .fold((0.0, 0), |(m, k), (i, v)| if v.abs() > m { (v.abs(), i) } else { (m, k) })
}

fn newton(disc: &Discretization, mut f: Vec<f64>, lambda: f64, options: &SolverOptions, diag: &mut SolverDiagnostics) -> Run {
    let load = disc.capillary_load(lambda);
    let n = disc.free.len();
    let data_scale = 1.0 + disc.dirichlet.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let near_corner = 0.1 * disc.domain.delta_star();

    let mut r = disc.residual(&f, &load);
    let mut norm = disc.free_norm(&r);
    let mut energy = disc.energy(&f, &load);
    let mut best = f.clone();
    let mut best_norm = norm;
    diag.energy_history.push(energy);
    diag.residual_history.push(norm);
    diag.sup_history.push(sup_abs(&f).0);

    let finish = |f: Vec<f64>, best: Vec<f64>, best_norm: f64, outcome| Run { values: f, best, best_norm, outcome };
    if n == 0 || norm <= options.tol_newton {
        return finish(f, best, best_norm, Outcome::Converged);
    }
    let mut prev_sup = sup_abs(&f).0;
    let mut growing = 0;
    for _ in 0..options.max_iter {
        diag.iterations += 1;
        let mut step = direction(disc, &f, &r, false).and_then(|dx| line_search(disc, &f, &dx, &load, energy, norm, options.damping));
        if step.as_ref().is_none_or(|s| s.t < POOR_STEP) {
            // Strongly damped Newton: the lagged-coefficient direction is often
            // better where the graph is steep.
            let lagged = direction(disc, &f, &r, true).and_then(|dx| line_search(disc, &f, &dx, &load, energy, norm, 1.0));
            step = match (step, lagged) {
                (Some(a), Some(b)) => Some(if b.energy < a.energy { b } else { a }),
                (a, b) => a.or(b),
            };
        }
        let Some(Step { values: trial, residual: r_trial, norm: n_trial, energy: e_trial, t }) = step else {
            return finish(f, best, best_norm, Outcome::Stalled);
        };
        f = trial;
        r = r_trial;
        norm = n_trial;
        energy = e_trial;
        let (sup, at) = sup_abs(&f);
        diag.damping_history.push(t);
        diag.energy_history.push(energy);
        diag.residual_history.push(norm);
        diag.sup_history.push(sup);
        if norm < best_norm {
            best_norm = norm;
            best.clone_from(&f);
        }
        if norm <= options.tol_newton {
            return finish(f, best, best_norm, Outcome::Converged);
        }
        let x = disc.mesh.vertices[at];
        if sup > BLOWUP_FACTOR * data_scale && x[0].hypot(x[1]) <= near_corner && sup > prev_sup {
            growing += 1;
        } else {
            growing = 0;
        }
        prev_sup = sup;
        if growing >= BLOWUP_PATIENCE {
            diag.flag(SolverFlag::UnboundedCornerSuspected);
            return finish(f, best, best_norm, Outcome::BlowUp);
        }
    }
    finish(f, best, best_norm, Outcome::MaxIter)
}

struct Step {
    values: Vec<f64>,
    residual: Vec<f64>,
    norm: f64,
    energy: f64,
    t: f64,
}

/// Solves `J dx = -r` on the unknowns with the full or lagged Jacobian.
fn direction(disc: &Discretization, f: &[f64], r: &[f64], lagged: bool) -> Option<Col<f64>> {
    let n = disc.free.len();
    let jac = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &disc.jacobian(f, lagged)).ok()?;
    let llt = jac.sp_cholesky(Side::Lower).ok()?;
    let rhs = Col::<f64>::from_fn(n, |k| -r[disc.free[k]]);
    let dx = llt.solve(&rhs);
    let finite = dx.iter().all(|x| x.is_finite());
    finite.then_some(dx)
}

/// Backtracking from `t0` by halves: Armijo on the energy, or a residual
/// decrease when the energy change is below rounding.
fn line_search(disc: &Discretization, f: &[f64], dx: &Col<f64>, load: &[f64], energy: f64, norm: f64, t0: f64) -> Option<Step> {
    let r0 = disc.residual(f, load);
    let slope: f64 = disc.free.iter().enumerate().map(|(k, &v)| r0[v] * dx[k]).sum();
    let mut t = t0;
    loop {
        let mut trial = f.to_vec();
        for (k, &v) in disc.free.iter().enumerate() {
            trial[v] += t * dx[k];
        }
        let e_trial = disc.energy(&trial, load);
        let armijo = e_trial <= energy + ARMIJO * t * slope;
        // Near convergence energy differences drown in rounding; accept a
        // residual decrease that does not raise the energy beyond it.
        let flat = e_trial <= energy + 1e-13 * energy.abs().max(1.0);
        if armijo || flat {
            let r_trial = disc.residual(&trial, load);
            let n_trial = disc.free_norm(&r_trial);
            if armijo || n_trial < norm {
                return Some(Step { values: trial, residual: r_trial, norm: n_trial, energy: e_trial, t });
            }
        }
        t *= 0.5;
        if t < MIN_STEP {
            return None;
        }
    }
}

#[cfg(test)]
mod tests;
