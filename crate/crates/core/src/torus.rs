//! Toroidal comparison surfaces.
//!
//! The torus has axis `{(2, y, 0)}`, major radius 2 and minor radius `r0`.
//! Over the footprint `D = {|y| >= r0, 0 <= y1 <= 2, |y2| <= r0}` its inner
//! half splits into an upper sheet `h+ >= 0` and a lower sheet `h- = -h+`:
//!
//! ```text
//! h+(y) = sqrt(rho(y2)^2 - (2 - y1)^2),   rho(y2) = 2 - sqrt(r0^2 - y2^2)
//! ```
//!
//! Both vanish on `C = {|y| = r0, y1 >= 0}`. An anchored barrier moves the
//! point `P = r0 (cos b, sin b)` of `C` to the origin and then rotates by `-a`:
//! `x = R_a(y - P)`, so that the image of the positive `y1`-direction is the
//! ray at angle `-a`.

use crate::conditions::{check_theorem1, Verdict};
use crate::exec::{map_indexed, min_max, Exec};
use crate::geometry::{cartesian, BoundaryTag, Point, WedgeDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

pub const MAJOR_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TorusError {
    #[error("curvature bound M2 = {0} is negative")]
    NegativeCurvatureBound(f64),
    #[error("point ({}, {}) lies outside the barrier footprint", .0[0], .0[1])]
    OutsideFootprint(Point),
    #[error("gradient is unbounded at ({}, {})", .0[0], .0[1])]
    SingularPoint(Point),
    #[error("exclusion band {epsilon:e} too narrow for r0 = {r0} (need >= {min:e})")]
    BandTooNarrow { epsilon: f64, r0: f64, min: f64 },
    #[error("tau = {0} outside (0, pi) or beta outside [-pi/2, pi/2]")]
    BetaOutOfRange(f64),
    #[error("wall segment is not inside the footprint of this barrier")]
    WallNotInFootprint,
    #[error("angle order violated: need tau1 = {tau1} < gamma2 = {gamma2} < tau2 = {tau2}")]
    BadAngleOrder { tau1: f64, gamma2: f64, tau2: f64 },
    #[error("mu = {mu} outside (0, {max})")]
    MuOutOfRange { mu: f64, max: f64 },
    #[error("pi - 2 alpha < gamma2 < 2 alpha with alpha in (pi/4, pi/2] does not hold (alpha = {alpha}, gamma2 = {gamma2})")]
    Condition1Violated { alpha: f64, gamma2: f64 },
    #[error("only the minus side carries the limiting contact angle")]
    UnsupportedSide,
}

/// Minor radius for curvature bound `m2`. Equals 1 at `m2 = 0` and satisfies
/// `1/r0 - 1/(2 - r0) = m2`.
pub fn minor_radius(m2: f64) -> Result<f64, TorusError> {
    if !(m2 >= 0.0) {
        return Err(TorusError::NegativeCurvatureBound(m2));
    }
    // 1/m + 1 - sqrt(1/m^2 + 1), rewritten to avoid cancellation for small m
    Ok(1.0 - m2 / (1.0 + (1.0 + m2 * m2).sqrt()))
}

/// Curvature bound realised by a minor radius; inverse of [`minor_radius`].
pub fn curvature_bound(r0: f64) -> f64 {
    1.0 / r0 - 1.0 / (2.0 - r0)
}

/// Mean-curvature quantity of the torus at the point with tube angle `v`.
pub fn torus_h(r0: f64, cos_v: f64) -> f64 {
    -(2.0 + 2.0 * r0 * cos_v) / (r0 * (2.0 + r0 * cos_v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    fn sign(self) -> f64 {
        match self {
            Sheet::Plus => 1.0,
            Sheet::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    /// Footprint coordinates `y` themselves.
    Canonical,
    /// `x = R_alpha(y - P_beta)`.
    Anchored { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusBarrier {
    pub sheet: Sheet,
    pub r0: f64,
    pub frame: Frame,
}

/// Serialized barrier: `sheet`, curvature bound `m2`, optional `alpha`/`beta`
/// (both absent means the canonical frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub sheet: Sheet,
    pub m2: f64,
    #[serde(default, deserialize_with = "crate::angle::deserialize_opt")]
    pub alpha: Option<f64>,
    #[serde(default, deserialize_with = "crate::angle::deserialize_opt")]
    pub beta: Option<f64>,
}

impl BarrierSpec {
    pub fn build(&self) -> Result<TorusBarrier, TorusError> {
        let r0 = minor_radius(self.m2)?;
        Ok(match (self.alpha, self.beta) {
            (None, None) => TorusBarrier::canonical(self.sheet, r0),
            (a, b) => {
                let beta = b.unwrap_or(0.0);
                if !(beta.abs() <= FRAC_PI_2) {
                    return Err(TorusError::BetaOutOfRange(beta));
                }
                TorusBarrier::anchored(self.sheet, r0, a.unwrap_or(0.0), beta)
            }
        })
    }
}

/// Slack used by footprint membership, relative to `r0`.
const FOOTPRINT_TOL: f64 = 1e-12;

impl TorusBarrier {
    pub fn canonical(sheet: Sheet, r0: f64) -> Self {
        TorusBarrier { sheet, r0, frame: Frame::Canonical }
    }

    pub fn anchored(sheet: Sheet, r0: f64, alpha: f64, beta: f64) -> Self {
        TorusBarrier { sheet, r0, frame: Frame::Anchored { alpha, beta } }
    }

    pub fn curvature_bound(&self) -> f64 {
        curvature_bound(self.r0)
    }

    /// Physical point to footprint coordinates.
    pub fn to_canonical(&self, x: Point) -> Point {
        match self.frame {
            Frame::Canonical => x,
            Frame::Anchored { alpha, beta } => {
                let (s, c) = alpha.sin_cos();
                // R_alpha^{-1} is rotation by +alpha
                [c * x[0] - s * x[1] + self.r0 * beta.cos(), s * x[0] + c * x[1] + self.r0 * beta.sin()]
            }
        }
    }

    /// Footprint coordinates to physical point.
    pub fn from_canonical(&self, y: Point) -> Point {
        match self.frame {
            Frame::Canonical => y,
            Frame::Anchored { alpha, beta } => {
                let v = [y[0] - self.r0 * beta.cos(), y[1] - self.r0 * beta.sin()];
                rotate_frame(alpha, v)
            }
        }
    }

    pub fn in_footprint(&self, x: Point) -> bool {
        canonical_in_footprint(self.r0, self.to_canonical(x))
    }

    pub fn height(&self, x: Point) -> Result<f64, TorusError> {
        let y = self.to_canonical(x);
        if !canonical_in_footprint(self.r0, y) {
            return Err(TorusError::OutsideFootprint(x));
        }
        Ok(self.sheet.sign() * upper_sheet(self.r0, y))
    }

    pub fn gradient(&self, x: Point) -> Result<Point, TorusError> {
        let y = self.to_canonical(x);
        if !canonical_in_footprint(self.r0, y) {
            return Err(TorusError::OutsideFootprint(x));
        }
        let g = upper_sheet_gradient(self.r0, y).ok_or(TorusError::SingularPoint(x))?;
        let g = [self.sheet.sign() * g[0], self.sheet.sign() * g[1]];
        Ok(match self.frame {
            Frame::Canonical => g,
            Frame::Anchored { alpha, .. } => rotate_frame(alpha, g),
        })
    }

    /// `T h = grad h / sqrt(1 + |grad h|^2)`.
    pub fn normalized_gradient(&self, x: Point) -> Result<Point, TorusError> {
        let g = self.gradient(x)?;
        let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        Ok([g[0] / w, g[1] / w])
    }

    /// Exact `div(T h)` at `x`: `-H_T` on the upper sheet, `H_T` on the lower.
    pub fn exact_divergence(&self, x: Point) -> Result<f64, TorusError> {
        let y = self.to_canonical(x);
        if !canonical_in_footprint(self.r0, y) {
            return Err(TorusError::OutsideFootprint(x));
        }
        Ok(-self.sheet.sign() * torus_h(self.r0, cos_v(self.r0, y[1])))
    }

    /// `div(T h)` by fourth-order central differences of the analytic `T h`.
    pub fn numeric_divergence(&self, x: Point, step: f64) -> Result<f64, TorusError> {
        let mut div = 0.0;
        for axis in 0..2 {
            let at = |k: f64| -> Result<f64, TorusError> {
                let mut p = x;
                p[axis] += k * step;
                Ok(self.normalized_gradient(p)?[axis])
            };
            let d = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * step);
            div += d;
        }
        Ok(div)
    }

    /// Distance (in footprint coordinates) to where the gradient is unbounded:
    /// the zero circle and the edges `|y2| = r0`.
    pub fn singular_distance(&self, x: Point) -> f64 {
        let y = self.to_canonical(x);
        let r = y[0].hypot(y[1]);
        (r - self.r0).abs().min(self.r0 - y[1].abs())
    }
}

/// Rotation by `-alpha`: `(c v1 + s v2, -s v1 + c v2)`.
pub fn rotate_frame(alpha: f64, v: Point) -> Point {
    let (s, c) = alpha.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

fn canonical_in_footprint(r0: f64, y: Point) -> bool {
    let tol = FOOTPRINT_TOL * r0;
    y[0].hypot(y[1]) >= r0 - tol && y[0] >= -tol && y[0] <= 2.0 + tol && y[1].abs() <= r0 + tol
}

fn rho(r0: f64, y2: f64) -> f64 {
    2.0 - (r0 * r0 - y2 * y2).max(0.0).sqrt()
}

fn cos_v(r0: f64, y2: f64) -> f64 {
    -(r0 * r0 - y2 * y2).max(0.0).sqrt() / r0
}

fn upper_sheet(r0: f64, y: Point) -> f64 {
    let rh = rho(r0, y[1]);
    let d = 2.0 - y[0];
    (rh * rh - d * d).max(0.0).sqrt()
}

fn upper_sheet_gradient(r0: f64, y: Point) -> Option<Point> {
    let root = r0 * r0 - y[1] * y[1];
    let rh = 2.0 - root.max(0.0).sqrt();
    let d = 2.0 - y[0];
    // within ~1e-13 of the zero circle the radicand is rounding noise
    let radicand = rh * rh - d * d;
    if root <= 0.0 || radicand <= 1e-13 * r0 {
        return None;
    }
    let h = radicand.sqrt();
    let drho = y[1] / root.sqrt();
    Some([(2.0 - y[0]) / h, rh * drho / h])
}

/// Parametric torus point `(x1, x2, z)` for angles `(u, v)`.
pub fn torus_point(r0: f64, u: f64, v: f64) -> [f64; 3] {
    let w = 2.0 + r0 * v.cos();
    [2.0 + w * u.cos(), r0 * v.sin(), w * u.sin()]
}

#[derive(Debug, Clone, Copy)]
pub struct AuditGrid {
    /// Points per axis over the footprint's bounding box.
    pub n: usize,
    /// Width of the excluded band around the singular set.
    pub epsilon: f64,
}

impl AuditGrid {
    pub fn new(n: usize, r0: f64) -> Self {
        AuditGrid { n, epsilon: 1e-3 * r0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRow {
    pub x: Point,
    pub div_t: f64,
    pub h_t: f64,
}

#[derive(Debug, Clone)]
pub struct CurvatureAudit {
    pub rows: Vec<AuditRow>,
    pub min_div: f64,
    pub max_div: f64,
    /// max |numeric div - exact div|
    pub max_error: f64,
}

impl CurvatureAudit {
    /// `x1,x2,divT,H_T` rows under a schema header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=1\nx1,x2,divT,H_T\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e}", r.x[0], r.x[1], r.div_t, r.h_t);
        }
        out
    }
}

/// Numeric `div(T h)` over an `n x n` grid of the footprint, excluding an
/// `epsilon`-band around the singular set.
pub fn mean_curvature_audit(barrier: &TorusBarrier, grid: AuditGrid, exec: Exec) -> Result<CurvatureAudit, TorusError> {
    let r0 = barrier.r0;
    let min_band = 1e-5 * r0;
    if !(grid.epsilon >= min_band) {
        return Err(TorusError::BandTooNarrow { epsilon: grid.epsilon, r0, min: min_band });
    }
    let n = grid.n.max(2);
    let candidates = map_indexed(exec, n * n, |k| {
        let (i, j) = (k / n, k % n);
        let y = [2.0 * i as f64 / (n - 1) as f64, -r0 + 2.0 * r0 * j as f64 / (n - 1) as f64];
        let keep = y[0].hypot(y[1]) >= r0 + grid.epsilon && y[1].abs() <= r0 - grid.epsilon && y[0] <= 2.0 - grid.epsilon;
        if !keep {
            return None;
        }
        let x = barrier.from_canonical(y);
        let step = 1e-3 * barrier.singular_distance(x).min(2.0 - y[0]);
        let div_t = barrier.numeric_divergence(x, step);
        Some(div_t.map(|d| AuditRow { x, div_t: d, h_t: torus_h(r0, cos_v(r0, y[1])) }))
    });
    let rows = candidates.into_iter().flatten().collect::<Result<Vec<_>, _>>()?;
    let (min_div, max_div) = min_max(rows.iter().map(|r| r.div_t)).unwrap_or((f64::NAN, f64::NAN));
    let sign = barrier.sheet.sign();
    let max_error = rows.iter().map(|r| (r.div_t + sign * r.h_t).abs()).fold(0.0, f64::max);
    Ok(CurvatureAudit { rows, min_div, max_div, max_error })
}

/// Anchor angle on `C` for a given tangent-ray angle: `pi/2 - tau` for the
/// lower barrier (`which = 1`), `tau - pi/2` for the upper (`which = 2`).
pub fn beta_from_tau(which: u8, tau: f64) -> Result<f64, TorusError> {
    if !(tau > 0.0 && tau < PI) {
        return Err(TorusError::BetaOutOfRange(tau));
    }
    let beta = match which {
        1 => FRAC_PI_2 - tau,
        2 => tau - FRAC_PI_2,
        _ => return Err(TorusError::BetaOutOfRange(tau)),
    };
    if beta.abs() > FRAC_PI_2 {
        return Err(TorusError::BetaOutOfRange(tau));
    }
    Ok(beta)
}

/// `T h . nu` along the image of the segment `{(t, 0) : 0 < t < 2 - r0}` of
/// the anchored frame (the ray at angle `-alpha` from the origin), with
/// `nu = R_alpha(0, -1)`. Samples are cell midpoints.
pub fn wall_contact_trace(barrier: &TorusBarrier, samples: usize) -> Result<Vec<f64>, TorusError> {
    let Frame::Anchored { alpha, beta } = barrier.frame else {
        return Err(TorusError::WallNotInFootprint);
    };
    if !(beta.abs() < FRAC_PI_2) {
        return Err(TorusError::WallNotInFootprint);
    }
    let len = 2.0 - barrier.r0;
    let nu = rotate_frame(alpha, [0.0, -1.0]);
    (0..samples)
        .map(|k| {
            let t = len * (k as f64 + 0.5) / samples as f64;
            let x = rotate_frame(alpha, [t, 0.0]);
            let th = barrier.normalized_gradient(x).map_err(|_| TorusError::WallNotInFootprint)?;
            Ok(th[0] * nu[0] + th[1] * nu[1])
        })
        .collect()
}

/// Lower barrier `h-` anchored at `beta1` and upper barrier `h+` anchored at
/// `beta2`, both in the frame of the wedge with half-angle `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierPair {
    pub tau1: f64,
    pub tau2: f64,
    pub lower: TorusBarrier,
    pub upper: TorusBarrier,
}

impl BarrierPair {
    pub fn from_taus(alpha: f64, r0: f64, tau1: f64, tau2: f64) -> Result<Self, TorusError> {
        let b1 = beta_from_tau(1, tau1)?;
        let b2 = beta_from_tau(2, tau2)?;
        Ok(BarrierPair {
            tau1,
            tau2,
            lower: TorusBarrier::anchored(Sheet::Minus, r0, alpha, b1),
            upper: TorusBarrier::anchored(Sheet::Plus, r0, alpha, b2),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactCheck {
    pub holds: bool,
    pub delta1: f64,
    /// Smallest `T h- . nu - cos gamma` over the accepted samples.
    pub lower_margin: f64,
    /// Smallest `cos gamma - T h+ . nu` over the accepted samples.
    pub upper_margin: f64,
}

/// Checks `T h-.nu > cos gamma` and `T h+.nu < cos gamma` along the minus side
/// for `|x| < delta_probe`. `gamma(s)` is the contact angle at arclength `s`
/// and `gamma2` its limit at the corner. `delta1` is the radius of the last
/// sample before the first violation (or `delta_probe` if none).
pub fn contact_inequality_check(
    pair: &BarrierPair,
    domain: &WedgeDomain,
    gamma2: f64,
    gamma: &dyn Fn(f64) -> f64,
    side: BoundaryTag,
    delta_probe: f64,
) -> Result<ContactCheck, TorusError> {
    if side != BoundaryTag::SideMinus {
        return Err(TorusError::UnsupportedSide);
    }
    if !(pair.tau1 < gamma2 && gamma2 < pair.tau2) {
        return Err(TorusError::BadAngleOrder { tau1: pair.tau1, gamma2, tau2: pair.tau2 });
    }
    const LINEAR: usize = 2000;
    let mut radii: Vec<f64> = (1..=LINEAR).map(|k| delta_probe * k as f64 / LINEAR as f64).collect();
    radii.extend((1..=6).map(|j| delta_probe / LINEAR as f64 * 10f64.powi(-j)));
    radii.sort_by(f64::total_cmp);

    let mut delta1 = 0.0;
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut violated = false;
    for &r in &radii {
        let r = r.min(domain.delta_star());
        let x = domain.arc_point(side, r);
        let s = domain.arclength(side, r);
        let nu = match domain.exterior_normal(side, s) {
            Ok(n) => n,
            Err(_) => break,
        };
        let cg = gamma(s).cos();
        let traces = pair.lower.normalized_gradient(x).and_then(|lo| Ok((lo, pair.upper.normalized_gradient(x)?)));
        // a vertical tangent plane says nothing either way
        if let Err(TorusError::SingularPoint(_)) = traces {
            continue;
        }
        let ok = match traces {
            Ok((lo, up)) => {
                let m_lo = lo[0] * nu[0] + lo[1] * nu[1] - cg;
                let m_up = cg - (up[0] * nu[0] + up[1] * nu[1]);
                if m_lo > 0.0 && m_up > 0.0 {
                    lower_margin = lower_margin.min(m_lo);
                    upper_margin = upper_margin.min(m_up);
                    true
                } else {
                    false
                }
            }
            Err(_) => false,
        };
        if !ok {
            violated = true;
            break;
        }
        delta1 = r;
    }
    if !violated {
        delta1 = delta_probe.min(domain.delta_star());
    }
    Ok(ContactCheck { holds: delta1 > 0.0, delta1, lower_margin, upper_margin })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlusWallCheck {
    pub h_minus_ok: bool,
    pub h_plus_ok: bool,
}

/// Corner compatibility of the barriers with the plus side when its contact
/// angle stays within `[lambda1, lambda2]` near the corner.
pub fn plus_wall_normals_check(tau1: f64, tau2: f64, alpha: f64, lambda1: f64, lambda2: f64) -> PlusWallCheck {
    let h_minus_ok = tau1 + 2.0 * alpha > PI || -(tau1 + 2.0 * alpha).cos() > lambda1.cos();
    let h_plus_ok = tau2 < 2.0 * alpha || -(tau2 - 2.0 * alpha).cos() < lambda2.cos();
    PlusWallCheck { h_minus_ok, h_plus_ok }
}

/// Barriers with a common anchor: `tau1 = pi - 2a + mu`, `tau2 = 2a - mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuFamily {
    pub alpha: f64,
    pub mu: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub beta: f64,
    /// Angle of the tangent ray to the footprint boundary at the corner.
    pub theta_mu: f64,
}

impl MuFamily {
    pub fn new(alpha: f64, gamma2: f64, mu: f64) -> Result<Self, TorusError> {
        if check_theorem1(alpha, gamma2).condition1.verdict != Verdict::Holds {
            return Err(TorusError::Condition1Violated { alpha, gamma2 });
        }
        let max = (gamma2 - (PI - 2.0 * alpha)).min(2.0 * alpha - gamma2);
        if !(mu > 0.0 && mu < max) {
            return Err(TorusError::MuOutOfRange { mu, max });
        }
        let tau1 = PI - 2.0 * alpha + mu;
        let tau2 = 2.0 * alpha - mu;
        Ok(MuFamily { alpha, mu, tau1, tau2, beta: 2.0 * alpha - mu - FRAC_PI_2, theta_mu: alpha - mu })
    }

    pub fn barriers(&self, r0: f64) -> BarrierPair {
        BarrierPair {
            tau1: self.tau1,
            tau2: self.tau2,
            lower: TorusBarrier::anchored(Sheet::Minus, r0, self.alpha, self.beta),
            upper: TorusBarrier::anchored(Sheet::Plus, r0, self.alpha, self.beta),
        }
    }

    /// Largest `R` such that every point of the domain with `|x| < R` and polar
    /// angle at most `theta_mu` lies in the common footprint. Rays from the
    /// corner leave the footprint at most once, so `R` is the smallest exit
    /// distance over a fan of rays, each found by bisection.
    pub fn inscribed_radius(&self, domain: &WedgeDomain, r0: f64) -> f64 {
        let barrier = TorusBarrier::anchored(Sheet::Plus, r0, self.alpha, self.beta);
        let ds = domain.delta_star();
        let lowest = (0..=256)
            .map(|k| domain.theta_minus(ds * k as f64 / 256.0))
            .fold(-domain.alpha(), f64::min);
        const RAYS: usize = 513;
        let far = 2.0 * (4.0 + r0 * r0).sqrt();
        (0..RAYS)
            .map(|k| {
                let th = lowest + (self.theta_mu - lowest) * k as f64 / (RAYS - 1) as f64;
                let inside = |t: f64| barrier.in_footprint(cartesian(t, th));
                if inside(far) {
                    return far;
                }
                let (mut lo, mut hi) = (0.0, far);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if inside(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Empirical modulus of continuity of `h-` on a `resolution x resolution` grid
/// over the footprint: max `|h(x) - h(y)|` over grid pairs with `|x - y| <= s`.
pub fn modulus_of_continuity(r0: f64, s: f64, resolution: usize, exec: Exec) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let n = resolution.max(2);
    let dx = 2.0 / (n - 1) as f64;
    let dy = 2.0 * r0 / (n - 1) as f64;
    // rows are indexed by y2, columns by y1
    let grid: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let y2 = -r0 + dy * j as f64;
            (0..n)
                .map(|i| {
                    let y = [dx * i as f64, y2];
                    if canonical_in_footprint(r0, y) {
                        -upper_sheet(r0, y)
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect();
    let max_dj = ((s / dy).floor() as usize).min(n - 1);
    let per_offset = map_indexed(exec, max_dj + 1, |dj| {
        let rem = s * s - (dj as f64 * dy).powi(2);
        if rem < 0.0 {
            return 0.0;
        }
        let w = ((rem.sqrt() / dx + 1e-9).floor() as usize).min(n - 1);
        let mut best: f64 = 0.0;
        for a in 0..n - dj {
            let (lo, hi) = sliding_min_max(&grid[a + dj], w);
            for (i, &v) in grid[a].iter().enumerate() {
                if v.is_nan() || lo[i].is_nan() {
                    continue;
                }
                best = best.max(hi[i] - v).max(v - lo[i]);
            }
        }
        best
    });
    per_offset.into_iter().fold(0.0, f64::max)
}

/// Window min/max over `[i - w, i + w]`, ignoring NaN; NaN where the window is empty.
fn sliding_min_max(row: &[f64], w: usize) -> (Vec<f64>, Vec<f64>) {
    use std::collections::VecDeque;
    let n = row.len();
    let mut lo = vec![f64::NAN; n];
    let mut hi = vec![f64::NAN; n];
    let mut qmin: VecDeque<usize> = VecDeque::new();
    let mut qmax: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let right = (i + w).min(n - 1);
        while next <= right {
            let v = row[next];
            if !v.is_nan() {
                while qmin.back().is_some_and(|&b| row[b] >= v) {
                    qmin.pop_back();
                }
                qmin.push_back(next);
                while qmax.back().is_some_and(|&b| row[b] <= v) {
                    qmax.pop_back();
                }
                qmax.push_back(next);
            }
            next += 1;
        }
        let left = i.saturating_sub(w);
        while qmin.front().is_some_and(|&f| f < left) {
            qmin.pop_front();
        }
        while qmax.front().is_some_and(|&f| f < left) {
            qmax.pop_front();
        }
        if let (Some(&a), Some(&b)) = (qmin.front(), qmax.front()) {
            lo[i] = row[a];
            hi[i] = row[b];
        }
    }
    (lo, hi)
}

/// Largest `|h+(x1, x2) - z|` over `samples` seeded random parametric points
/// `(x1, x2, z)` of the torus with `u in (pi/2, pi)`, `v in (pi/2, 3 pi/2)`:
/// the part of the surface the upper sheet is meant to be the graph of.
pub fn graph_certification(r0: f64, samples: usize, seed: u64) -> Result<f64, TorusError> {
    let b = TorusBarrier::canonical(Sheet::Plus, r0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = rng.random_range(FRAC_PI_2..PI);
        let v = rng.random_range(FRAC_PI_2..1.5 * PI);
        let [x1, x2, z] = torus_point(r0, u, v);
        worst = worst.max((b.height([x1, x2])? - z).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8};

    #[test]
    fn minor_radius_examples() {
        assert_eq!(minor_radius(0.0).unwrap(), 1.0);
        assert!((minor_radius(1.0).unwrap() - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        let r = minor_radius(3.0).unwrap();
        // closed form evaluated in 30-digit arithmetic: 0.279240779943873556
        assert!((r - 0.279_240_779_943_873_6).abs() < 1e-15);
        assert!((r - 0.2792408013).abs() < 1e-7);
        assert!((1.0 / r - 1.0 / (2.0 - r) - 3.0).abs() <= 1e-12);
        assert_eq!(minor_radius(-1.0), Err(TorusError::NegativeCurvatureBound(-1.0)));
    }

    #[test]
    fn canonical_heights() {
        let b = TorusBarrier::canonical(Sheet::Plus, 1.0);
        assert_eq!(b.height([1.0, 0.0]).unwrap(), 0.0);
        assert!((b.height([2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((b.height([2.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(b.height([0.5, 0.0]), Err(TorusError::OutsideFootprint(_))));
        assert!(matches!(b.height([2.5, 0.0]), Err(TorusError::OutsideFootprint(_))));
        let lower = TorusBarrier::canonical(Sheet::Minus, 1.0);
        assert!((lower.height([2.0, 1.0]).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let b = TorusBarrier::canonical(Sheet::Plus, 1.0);
        assert_eq!(b.gradient([2.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert!(matches!(b.gradient([1.0, 0.0]), Err(TorusError::SingularPoint(_))));
        let p = [0.6, 0.8];
        assert!(matches!(b.gradient(p), Err(TorusError::SingularPoint(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(r0, frame) in &[
            (1.0, Frame::Canonical),
            (0.6, Frame::Anchored { alpha: 0.7, beta: -0.4 }),
            (0.3, Frame::Anchored { alpha: 1.3, beta: 0.9 }),
        ] {
            let b = TorusBarrier { sheet: Sheet::Minus, r0, frame };
            let canon = TorusBarrier::canonical(Sheet::Minus, r0);
            let mut checked = 0;
            while checked < 1000 {
                let y = [rng.random_range(0.0..2.0), rng.random_range(-r0..r0)];
                if !canon.in_footprint(y) {
                    continue;
                }
                let x = b.from_canonical(y);
                let d = b.singular_distance(x).min(2.0 - y[0]).min(y[0]);
                if d < 0.05 * r0 {
                    continue;
                }
                let g = b.gradient(x).unwrap();
                let e = 1e-6 * d;
                for axis in 0..2 {
                    let mut p = x;
                    let mut m = x;
                    p[axis] += e;
                    m[axis] -= e;
                    let fd = (b.height(p).unwrap() - b.height(m).unwrap()) / (2.0 * e);
                    assert!((fd - g[axis]).abs() <= 1e-6 * g[axis].abs().max(1.0), "{fd} vs {}", g[axis]);
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn parametric_points_lie_on_upper_sheet() {
        for r0 in [1.0, 0.5, 0.2792408013] {
            assert!(graph_certification(r0, 2000, 11).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn curvature_audit_bounds() {
        for m2 in [0.0, 1.0] {
            let r0 = minor_radius(m2).unwrap();
            let plus = mean_curvature_audit(&TorusBarrier::canonical(Sheet::Plus, r0), AuditGrid::new(61, r0), Exec::Sequential).unwrap();
            assert!(plus.min_div >= m2 - 1e-6, "{}", plus.min_div);
            assert!(plus.max_error < 1e-6, "{}", plus.max_error);
            let minus = mean_curvature_audit(&TorusBarrier::canonical(Sheet::Minus, r0), AuditGrid::new(61, r0), Exec::Parallel).unwrap();
            assert!(minus.max_div <= -m2 + 1e-6);
        }
    }

    #[test]
    fn deepest_point_has_curvature_m2() {
        for m2 in [0.0, 0.5, 1.0, 3.0] {
            let r0 = minor_radius(m2).unwrap();
            let b = TorusBarrier::canonical(Sheet::Plus, r0);
            let x = [1.0 + 0.5 * r0, 0.0];
            assert!((b.exact_divergence(x).unwrap() - m2).abs() < 1e-12);
            let numeric = b.numeric_divergence(x, 1e-3 * b.singular_distance(x)).unwrap();
            assert!((numeric - m2).abs() < 1e-8, "{numeric} vs {m2}");
        }
    }

    #[test]
    fn audit_rejects_narrow_band() {
        let b = TorusBarrier::canonical(Sheet::Plus, 1.0);
        let grid = AuditGrid { n: 10, epsilon: 1e-9 };
        assert!(matches!(mean_curvature_audit(&b, grid, Exec::Sequential), Err(TorusError::BandTooNarrow { .. })));
    }

    #[test]
    fn audit_csv_rows() {
        let b = TorusBarrier::canonical(Sheet::Plus, 1.0);
        let audit = mean_curvature_audit(&b, AuditGrid::new(8, 1.0), Exec::Sequential).unwrap();
        let csv = audit.to_csv();
        assert!(csv.starts_with("# schema=1\nx1,x2,divT,H_T\n"));
        assert_eq!(csv.lines().count(), audit.rows.len() + 2);
    }

    #[test]
    fn beta_examples() {
        assert!((beta_from_tau(1, 27.0 * PI / 36.0).unwrap() + FRAC_PI_4).abs() < 1e-15);
        assert_eq!(beta_from_tau(1, FRAC_PI_2).unwrap(), 0.0);
        assert!((beta_from_tau(2, 29.0 * PI / 36.0).unwrap() - 11.0 * PI / 36.0).abs() < 1e-15);
        assert!(beta_from_tau(1, 0.0).is_err());
        assert!(beta_from_tau(3, 1.0).is_err());
    }

    #[test]
    fn wall_traces_are_constant() {
        let r0 = 1.0;
        let lower = TorusBarrier::anchored(Sheet::Minus, r0, 0.0, beta_from_tau(1, 2.0 * FRAC_PI_3).unwrap());
        for v in wall_contact_trace(&lower, 50).unwrap() {
            assert!((v + 0.5).abs() <= 1e-8, "{v}");
        }
        let flat = TorusBarrier::anchored(Sheet::Minus, r0, 0.0, beta_from_tau(1, FRAC_PI_2).unwrap());
        for v in wall_contact_trace(&flat, 50).unwrap() {
            assert!(v.abs() <= 1e-12);
        }
        let tau2 = 29.0 * PI / 36.0;
        let upper = TorusBarrier::anchored(Sheet::Plus, minor_radius(0.7).unwrap(), FRAC_PI_6, beta_from_tau(2, tau2).unwrap());
        for v in wall_contact_trace(&upper, 50).unwrap() {
            assert!((v - tau2.cos()).abs() <= 1e-8);
        }
        assert_eq!(wall_contact_trace(&TorusBarrier::canonical(Sheet::Plus, 1.0), 5), Err(TorusError::WallNotInFootprint));
    }

    #[test]
    fn contact_inequalities() {
        let d = WedgeDomain::straight(FRAC_PI_2, 1.0).unwrap();
        let pair = BarrierPair::from_taus(FRAC_PI_2, 1.0, FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap();
        let g = |_: f64| FRAC_PI_2;
        let c = contact_inequality_check(&pair, &d, FRAC_PI_2, &g, BoundaryTag::SideMinus, 0.5).unwrap();
        assert!(c.holds);
        assert_eq!(c.delta1, 0.5);
        assert!((c.lower_margin - 0.5).abs() < 1e-8 && (c.upper_margin - 0.5).abs() < 1e-8);

        let bad = BarrierPair::from_taus(FRAC_PI_2, 1.0, FRAC_PI_2, 2.0 * FRAC_PI_3).unwrap();
        assert!(matches!(
            contact_inequality_check(&bad, &d, FRAC_PI_2, &g, BoundaryTag::SideMinus, 0.5),
            Err(TorusError::BadAngleOrder { .. })
        ));

        let curved = crate::geometry::build_wedge(
            FRAC_PI_2,
            1.0,
            crate::geometry::ArcSpec::straight(),
            crate::geometry::ArcSpec::Polynomial(vec![0.0, 0.1]),
        )
        .unwrap();
        let c = contact_inequality_check(&pair, &curved, FRAC_PI_2, &g, BoundaryTag::SideMinus, 0.5).unwrap();
        assert!(c.holds && c.delta1 > 0.0 && c.delta1 <= 0.5);
    }

    #[test]
    fn plus_wall_examples() {
        let a = FRAC_PI_6;
        let c = plus_wall_normals_check(27.0 * PI / 36.0, 29.0 * PI / 36.0, a, 0.0, FRAC_PI_2);
        assert!(c.h_minus_ok && c.h_plus_ok);
        let c = plus_wall_normals_check(FRAC_PI_3, 2.0 * FRAC_PI_3, FRAC_PI_2, 1.0, 1.0);
        assert!(c.h_minus_ok && c.h_plus_ok);
        // tau1 + 2a <= pi and the plus-side angle too small
        let c = plus_wall_normals_check(FRAC_PI_4, 2.0, a, PI - FRAC_PI_4 - 2.0 * a - 0.2, FRAC_PI_2);
        assert!(!c.h_minus_ok);
    }

    #[test]
    fn mu_family_examples() {
        let f = MuFamily::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_8).unwrap();
        assert!((f.tau1 - FRAC_PI_8).abs() < 1e-15);
        assert!((f.tau2 - 7.0 * FRAC_PI_8).abs() < 1e-15);
        assert!((f.beta - 3.0 * FRAC_PI_8).abs() < 1e-15);
        assert!((f.theta_mu - 3.0 * FRAC_PI_8).abs() < 1e-15);
        assert!((beta_from_tau(1, f.tau1).unwrap() - beta_from_tau(2, f.tau2).unwrap()).abs() <= 1e-14);
        assert!(matches!(MuFamily::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2), Err(TorusError::MuOutOfRange { .. })));
        let f = MuFamily::new(3.0 * FRAC_PI_8, FRAC_PI_2, PI / 16.0).unwrap();
        assert!(f.tau1 < FRAC_PI_2 && f.tau2 > FRAC_PI_2);
        assert!((f.beta - 3.0 * PI / 16.0).abs() < 1e-15);
        assert!(matches!(MuFamily::new(PI / 5.0, FRAC_PI_2, 0.01), Err(TorusError::Condition1Violated { .. })));
    }

    #[test]
    fn inscribed_radius_is_tight() {
        let d = WedgeDomain::straight(FRAC_PI_2, 1.0).unwrap();
        let f = MuFamily::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_8).unwrap();
        let r0 = 1.0;
        let big_r = f.inscribed_radius(&d, r0);
        assert!(big_r > 0.0 && big_r < 4.0);
        let b = f.barriers(r0).upper;
        for k in 0..=100 {
            let th = -FRAC_PI_2 + (f.theta_mu + FRAC_PI_2) * k as f64 / 100.0;
            assert!(b.in_footprint(cartesian(0.999 * big_r, th)));
        }
        let escapes = (0..=1000).any(|k| {
            let th = -FRAC_PI_2 + (f.theta_mu + FRAC_PI_2) * k as f64 / 1000.0;
            !b.in_footprint(cartesian(1.001 * big_r, th))
        });
        assert!(escapes);
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(modulus_of_continuity(1.0, 0.0, 128, Exec::Sequential), 0.0);
        let q1 = modulus_of_continuity(1.0, 0.1, 128, Exec::Sequential);
        let q2 = modulus_of_continuity(1.0, 0.2, 128, Exec::Parallel);
        assert!(0.0 < q1 && q1 <= q2);
        // the lower sheet ranges over [-2, 0]
        let diam = (4.0f64 + 4.0).sqrt();
        assert!((modulus_of_continuity(1.0, diam, 128, Exec::Parallel) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sliding_window_matches_brute_force() {
        let row = [3.0, f64::NAN, -1.0, 4.0, 1.0, f64::NAN, 5.0, 9.0, 2.0, 6.0];
        for w in 0..5 {
            let (lo, hi) = sliding_min_max(&row, w);
            for i in 0..row.len() {
                let win: Vec<f64> = row[i.saturating_sub(w)..=(i + w).min(row.len() - 1)]
                    .iter()
                    .copied()
                    .filter(|v| !v.is_nan())
                    .collect();
                if win.is_empty() {
                    assert!(lo[i].is_nan());
                } else {
                    assert_eq!(lo[i], win.iter().copied().fold(f64::INFINITY, f64::min));
                    assert_eq!(hi[i], win.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn r0_identity(m2 in 1e-3f64..1e3) {
            let r0 = minor_radius(m2).unwrap();
            prop_assert!(r0 > 0.0 && r0 < 1.0);
            prop_assert!((curvature_bound(r0) - m2).abs() <= 1e-10 * m2.max(1.0));
        }

        #[test]
        fn frame_round_trip(alpha in -3.0f64..3.0, beta in -1.5f64..1.5, y1 in 0.0f64..2.0, y2 in -0.5f64..0.5) {
            let b = TorusBarrier::anchored(Sheet::Plus, 0.5, alpha, beta);
            let canon = TorusBarrier::canonical(Sheet::Plus, 0.5);
            let y = [y1, y2];
            prop_assume!(canon.in_footprint(y));
            let x = b.from_canonical(y);
            prop_assert!((b.height(x).unwrap() - canon.height(y).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn beta_round_trip(tau in 0.01f64..3.13) {
            prop_assert_eq!(FRAC_PI_2 - beta_from_tau(1, tau).unwrap(), FRAC_PI_2 - (FRAC_PI_2 - tau));
            prop_assert!((FRAC_PI_2 - beta_from_tau(1, tau).unwrap() - tau).abs() <= 1e-15);
        }

        #[test]
        fn modulus_is_monotone(s1 in 0.0f64..1.0, ds in 0.0f64..1.0) {
            let a = modulus_of_continuity(0.7, s1, 48, Exec::Sequential);
            let b = modulus_of_continuity(0.7, s1 + ds, 48, Exec::Sequential);
            prop_assert!(a <= b);
        }
    }
}
