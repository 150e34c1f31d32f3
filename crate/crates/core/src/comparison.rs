//! Quantitative checks of the comparison argument on computed solutions: the
//! height band `p(delta)`, oscillation on circles about O, an empirical
//! modulus of continuity, and the barrier sandwich `b- < f < b+`.

use crate::exec::{map_indexed, Exec};
use crate::geometry::{cartesian, BoundaryTag, Point};
use crate::radial::RESOLUTION_FACTOR;
use crate::solver::{BoundaryCondition, ScalarField};
use crate::torus::{contact_inequality_check, minor_radius, BarrierPair, MuFamily, TorusError};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Samples per circle in [`oscillation_on_circle`] and the anchor search.
pub const CIRCLE_SAMPLES: usize = 720;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComparisonError {
    #[error("delta = {0} not in (0, 1)")]
    DeltaOutOfRange(f64),
    #[error("graph area M0 = {0} must be positive and finite")]
    InvalidArea(f64),
    #[error("radius {r} is below {RESOLUTION_FACTOR} x local mesh size {h} or outside (0, delta*)")]
    BelowResolution { r: f64, h: f64 },
    #[error("probe region misses the barrier footprint: {0}")]
    BarrierFootprintMiss(String),
    #[error("sandwich preconditions unmet: {0}")]
    PreconditionsUnmet(String),
    #[error(transparent)]
    Torus(#[from] TorusError),
}

/// Height band `p(delta) = sqrt(8 pi M0 / ln(1/delta))`.
pub fn p_of_delta(m0: f64, delta: f64) -> Result<f64, ComparisonError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ComparisonError::DeltaOutOfRange(delta));
    }
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(ComparisonError::InvalidArea(m0));
    }
    Ok((8.0 * PI * m0 / (1.0 / delta).ln()).sqrt())
}

/// Interpolated values on `|x| = r`, `n` angles from the minus to the plus
/// wall inclusive. Endpoints that round outside the mesh are pulled inward.
fn circle_values(field: &ScalarField, r: f64, n: usize) -> Result<Vec<(Point, f64)>, ComparisonError> {
    let domain = field.domain();
    if !(r > 0.0 && r < domain.delta_star()) {
        return Err(ComparisonError::BelowResolution { r, h: f64::NAN });
    }
    let (lo, hi) = (domain.theta_minus(r), domain.theta_plus(r));
    let mid = cartesian(r, 0.5 * (lo + hi));
    let h = field.locate(mid).map_or(f64::NAN, |t| field.mesh().triangle_size(t));
    if !(r >= RESOLUTION_FACTOR * h) {
        return Err(ComparisonError::BelowResolution { r, h });
    }
    (0..n)
        .map(|j| {
            let th = lo + (hi - lo) * j as f64 / (n - 1) as f64;
            let mut p = cartesian(r, th);
            let mut v = field.evaluate(p);
            let mut nudge = 1e-12;
            while v.is_none() && nudge < 1e-6 {
                let t = th + if j == 0 { nudge } else { -nudge };
                p = cartesian(r, t);
                v = field.evaluate(p);
                nudge *= 10.0;
            }
            v.map(|v| (p, v)).ok_or(ComparisonError::BelowResolution { r, h })
        })
        .collect()
}

/// `sup - inf` of `f` over `{|x| = r} cap Omega*`, from 720 samples.
pub fn oscillation_on_circle(field: &ScalarField, r: f64) -> Result<f64, ComparisonError> {
    let v = circle_values(field, r, CIRCLE_SAMPLES)?;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, f)| (a.min(*f), b.max(*f)));
    Ok(hi - lo)
}

/// Empirical modulus of continuity: max `|f(x) - f(y)|` over mesh-vertex
/// pairs in `region` with `|x - y| <= d`. Nondecreasing in `d` exactly,
/// since the pair set only grows.
pub fn uniform_continuity_probe(field: &ScalarField, region: &(dyn Fn(Point) -> bool + Sync), d: f64, exec: Exec) -> f64 {
    if !(d > 0.0) {
        return 0.0;
    }
    let mesh = field.mesh();
    let f = field.values();
    let pts: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| region(mesh.vertices[v])).collect();
    let cell = |p: Point| ((p[0] / d).floor() as i64, (p[1] / d).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for &v in &pts {
        grid.entry(cell(mesh.vertices[v])).or_default().push(v);
    }
    let per = map_indexed(exec, pts.len(), |k| {
        let v = pts[k];
        let x = mesh.vertices[v];
        let (cx, cy) = cell(x);
        let mut m = 0.0f64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &u in grid.get(&(cx + dx, cy + dy)).map_or(&[][..], |c| c.as_slice()) {
                    let y = mesh.vertices[u];
                    if (x[0] - y[0]).hypot(x[1] - y[1]) <= d {
                        m = m.max((f[v] - f[u]).abs());
                    }
                }
            }
        }
        m
    });
    per.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichFlag {
    /// `p(delta) >= 2 M1`: the band is wider than the range of `f`.
    VacuousBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichSample {
    pub x: Point,
    pub f: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub w: Point,
    pub f_w: f64,
    pub delta: f64,
    pub radius: f64,
    pub m0: f64,
    pub p_delta: f64,
    pub r0: f64,
    /// Radius up to which `Omega_0` lies inside the footprint; beyond it the
    /// region is `B cap Delta_mu`, a proper part of the ball.
    pub footprint_radius: f64,
    pub region: Vec<SandwichSample>,
    /// `min (f - b-)` over the region.
    pub min_gap_lower: f64,
    /// `min (b+ - f)` over the region.
    pub min_gap_upper: f64,
    pub flags: Vec<SandwichFlag>,
}

impl SandwichReport {
    pub fn valid(&self) -> bool {
        !self.region.is_empty() && self.min_gap_lower > 0.0 && self.min_gap_upper > 0.0
    }

    pub fn to_text(&self) -> String {
        let flags: Vec<String> = self.flags.iter().map(|f| format!("\"{}\"", serde_name(*f))).collect();
        format!(
            "schema = 1\nvalid = {}\nw = [{:e}, {:e}]\nf_w = {:e}\ndelta = {:e}\nradius = {:e}\nm0 = {:e}\np_delta = {:e}\nr0 = {:e}\nfootprint_radius = {:e}\nsamples = {}\nmin_gap_lower = {:e}\nmin_gap_upper = {:e}\nflags = [{}]\n",
            self.valid(),
            self.w[0],
            self.w[1],
            self.f_w,
            self.delta,
            self.radius,
            self.m0,
            self.p_delta,
            self.r0,
            self.footprint_radius,
            self.region.len(),
            self.min_gap_lower,
            self.min_gap_upper,
            flags.join(", ")
        )
    }

    /// `# schema=1` CSV `x1,x2,f,b_minus,b_plus,gap_lower,gap_upper`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema=1\nx1,x2,f,b_minus,b_plus,gap_lower,gap_upper\n");
        for q in &self.region {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                q.x[0],
                q.x[1],
                q.f,
                q.lower,
                q.upper,
                q.f - q.lower,
                q.upper - q.f
            );
        }
        s
    }
}

fn serde_name(f: SandwichFlag) -> &'static str {
    match f {
        SandwichFlag::VacuousBand => "vacuous_band",
    }
}

/// Minor radius of the barriers for a field: `div(T f) = 2H` with
/// `|H| <= M2` needs barriers with curvature bound `2 M2`.
pub fn barrier_minor_radius(field: &ScalarField) -> Result<f64, ComparisonError> {
    Ok(minor_radius(2.0 * field.empirical_bounds().1)?)
}

/// Probe radius `sqrt(delta) delta*` for a given `delta`.
pub fn probe_radius(field: &ScalarField, delta: f64) -> f64 {
    delta.sqrt() * field.domain().delta_star()
}

/// Evaluates `b+ = f(w) + p(delta) + h-` and `b- = f(w) - p(delta) + h+` at all
/// mesh vertices of `B(O, sqrt(delta) delta*) cap Omega* cap Delta_mu`.
/// `w` defaults to the median-value point of the probe circle inside the
/// footprint.
pub fn sandwich_check(
    field: &ScalarField,
    family: &MuFamily,
    barriers: &BarrierPair,
    w: Option<Point>,
    delta: f64,
) -> Result<SandwichReport, ComparisonError> {
    let domain = field.domain();
    let m0 = field.graph_area();
    let p = p_of_delta(m0, delta)?;
    let radius = probe_radius(field, delta);
    let r0 = barriers.upper.r0;
    if (family.alpha - domain.alpha()).abs() > 1e-12 {
        return Err(ComparisonError::PreconditionsUnmet(format!(
            "family half-angle {} differs from the domain's {}",
            family.alpha,
            domain.alpha()
        )));
    }
    let gamma = match field.boundary().get(BoundaryTag::SideMinus) {
        BoundaryCondition::Capillary { gamma } => gamma.clone(),
        BoundaryCondition::Dirichlet { .. } => {
            return Err(ComparisonError::PreconditionsUnmet("minus side is not capillary".into()));
        }
    };
    let gamma2 = field
        .boundary()
        .corner_angle(domain, BoundaryTag::SideMinus)
        .ok_or_else(|| ComparisonError::PreconditionsUnmet("no contact angle at the corner".into()))?;
    let gamma_at = |s: f64| {
        let r = domain.radius_at_arclength(BoundaryTag::SideMinus, s);
        gamma.eval(domain, domain.arc_point(BoundaryTag::SideMinus, r), s)
    };
    let contact = contact_inequality_check(barriers, domain, gamma2, &gamma_at, BoundaryTag::SideMinus, radius)
        .map_err(|e| ComparisonError::PreconditionsUnmet(e.to_string()))?;
    if !contact.holds || contact.delta1 < radius.min(domain.delta_star()) {
        return Err(ComparisonError::PreconditionsUnmet(format!(
            "contact inequalities hold only up to |x| = {:e} < {:e}",
            contact.delta1, radius
        )));
    }
    let footprint_radius = family.inscribed_radius(domain, r0);

    let in_region = |x: Point| barriers.upper.in_footprint(x) && barriers.lower.in_footprint(x);
    let (w, f_w) = match w {
        Some(w) => (w, field.evaluate(w).ok_or(ComparisonError::BarrierFootprintMiss("anchor w outside the mesh".into()))?),
        None => {
            let circle = circle_values(field, radius.min(0.999 * domain.delta_star()), CIRCLE_SAMPLES)?;
            let mut inside: Vec<(Point, f64)> = circle.iter().copied().filter(|(x, _)| in_region(*x)).collect();
            if inside.is_empty() {
                inside = circle;
            }
            inside.sort_by(|a, b| a.1.total_cmp(&b.1));
            inside[(inside.len() - 1) / 2]
        }
    };

    let mesh = field.mesh();
    let f = field.values();
    let region: Vec<SandwichSample> = (0..mesh.n_vertices())
        .filter_map(|v| {
            let x = mesh.vertices[v];
            if x[0].hypot(x[1]) > radius || !in_region(x) {
                return None;
            }
            let hp = barriers.upper.height(x).ok()?;
            let hm = barriers.lower.height(x).ok()?;
            Some(SandwichSample { x, f: f[v], lower: f_w - p + hp, upper: f_w + p + hm })
        })
        .collect();
    if region.is_empty() {
        return Err(ComparisonError::BarrierFootprintMiss("no mesh vertex in the probe region".into()));
    }
    let min_gap_lower = region.iter().map(|q| q.f - q.lower).fold(f64::INFINITY, f64::min);
    let min_gap_upper = region.iter().map(|q| q.upper - q.f).fold(f64::INFINITY, f64::min);
    let mut flags = Vec::new();
    if p >= 2.0 * field.empirical_bounds().0 {
        flags.push(SandwichFlag::VacuousBand);
    }
    Ok(SandwichReport { w, f_w, delta, radius, m0, p_delta: p, r0, footprint_radius, region, min_gap_lower, min_gap_upper, flags })
}
