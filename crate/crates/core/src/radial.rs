//! Radial limits `Rf(theta) = lim_{r -> 0} f(r cos theta, r sin theta)` at the
//! corner: ray sampling, power-law extrapolation, the side limit along the
//! minus wall, and classification of the limit profile as constant or fan.

use crate::exec::{map_slice, Exec};
use crate::geometry::{cartesian, BoundaryTag, Point};
use crate::solver::ScalarField;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Rays may not sample closer to O than this multiple of the local mesh size.
pub const RESOLUTION_FACTOR: f64 = 3.0;
const P_MIN: f64 = 0.1;
const P_MAX: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadialError {
    #[error("ray theta = {theta} leaves the domain at r = {r}")]
    RayOutsideDomain { theta: f64, r: f64 },
    #[error("radius {r} is below {RESOLUTION_FACTOR} x local mesh size {h}")]
    BelowResolution { r: f64, h: f64 },
    #[error("limit fit is ill-conditioned: {0}")]
    FitIllConditioned(String),
    #[error("side {0:?} has no corner trace to extrapolate")]
    UnsupportedSide(BoundaryTag),
    #[error("error bars exceed tol/4 on {bad} of {total} rays")]
    NoisyProfile { bad: usize, total: usize },
}

/// Dyadic radii `(delta*/4) 2^-k`, `k = 0..levels`.
pub fn default_radii(delta_star: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| 0.25 * delta_star * 0.5f64.powi(k as i32)).collect()
}

/// Longest edge of the triangle containing `p`.
fn local_size(field: &ScalarField, p: Point) -> Option<f64> {
    field.locate(p).map(|t| field.mesh().triangle_size(t))
}

/// Interpolated values of `field` along the ray of angle `theta`.
pub fn sample_ray(field: &ScalarField, theta: f64, radii: &[f64]) -> Result<Vec<f64>, RadialError> {
    let domain = field.domain();
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r < domain.delta_star() && domain.angle_inside(r, theta)) {
                return Err(RadialError::RayOutsideDomain { theta, r });
            }
            let p = cartesian(r, theta);
            let h = local_size(field, p).ok_or(RadialError::RayOutsideDomain { theta, r })?;
            if r < RESOLUTION_FACTOR * h {
                return Err(RadialError::BelowResolution { r, h });
            }
            field.evaluate(p).ok_or(RadialError::RayOutsideDomain { theta, r })
        })
        .collect()
}

/// The radii of `radii` at which every ray of `thetas` is inside the domain and
/// resolved by the mesh.
pub fn resolved_radii(field: &ScalarField, thetas: &[f64], radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .copied()
        .filter(|&r| thetas.iter().all(|&th| sample_ray(field, th, &[r]).is_ok()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitFit {
    pub limit: f64,
    pub error_bar: f64,
    /// Decay rate `p` of `f(r) = L + c r^p`; `None` when the samples are
    /// constant and the exponent is not applicable.
    pub exponent: Option<f64>,
}

/// Least-squares `(L, c)` for fixed `p`, with the residual sum of squares.
fn fit_fixed(values: &[f64], radii: &[f64], p: f64) -> Option<(f64, f64, f64)> {
    let n = values.len() as f64;
    let x: Vec<f64> = radii.iter().map(|r| r.powf(p)).collect();
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sy: f64 = values.iter().sum();
    let sxy: f64 = x.iter().zip(values).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if !(det.abs() > 1e-300 && det.is_finite()) || det <= 1e-14 * n * sxx {
        return None;
    }
    let c = (n * sxy - sx * sy) / det;
    let l = (sy - c * sx) / n;
    let rss = x.iter().zip(values).map(|(a, y)| (l + c * a - y).powi(2)).sum();
    Some((l, c, rss))
}

/// Fits `f(r) = L + c r^p`, `p` in [0.1, 3], to samples at decreasing radii.
/// The error bar is `max(max fit residual, |last sample - L| / 2)`.
pub fn estimate_limit(values: &[f64], radii: &[f64]) -> Result<LimitFit, RadialError> {
    if values.len() != radii.len() || values.len() < 4 {
        return Err(RadialError::FitIllConditioned(format!("need >= 4 samples, got {}", values.len())));
    }
    let (lo, hi) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if !(lo > 0.0 && hi / lo >= 2.0) {
        return Err(RadialError::FitIllConditioned("radii must span at least a factor 2".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RadialError::FitIllConditioned("non-finite sample".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    if spread <= 1e-13 * mean.abs().max(1.0) {
        return Ok(LimitFit { limit: mean, error_bar: spread, exponent: None });
    }
    let rss = |p: f64| fit_fixed(values, radii, p).map_or(f64::INFINITY, |f| f.2);
    // Coarse scan, then golden-section refinement around the best node.
    const SCAN: usize = 59;
    let step = (P_MAX - P_MIN) / SCAN as f64;
    let best = (0..=SCAN)
        .map(|k| P_MIN + step * k as f64)
        .min_by(|a, b| rss(*a).total_cmp(&rss(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - step).max(P_MIN), (best + step).min(P_MAX));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (rss(x1), rss(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = rss(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = rss(x2);
        }
    }
    let p = if f1 <= f2 { x1 } else { x2 };
    let p = if rss(best) < rss(p) { best } else { p };
    let (l, c, _) = fit_fixed(values, radii, p).ok_or_else(|| RadialError::FitIllConditioned("singular normal equations".into()))?;
    let max_res = radii.iter().zip(values).map(|(r, y)| (l + c * r.powf(p) - y).abs()).fold(0.0, f64::max);
    let last = radii.iter().zip(values).min_by(|a, b| a.0.total_cmp(b.0)).unwrap().1;
    if !l.is_finite() {
        return Err(RadialError::FitIllConditioned("non-finite limit".into()));
    }
    Ok(LimitFit { limit: l, error_bar: max_res.max(0.5 * (last - l).abs()), exponent: Some(p) })
}

/// Extrapolated limit of `f` along a side wall toward O (`z2` on the minus side).
pub fn side_limit(field: &ScalarField, side: BoundaryTag, radii: &[f64]) -> Result<LimitFit, RadialError> {
    if side == BoundaryTag::OuterArc {
        return Err(RadialError::UnsupportedSide(side));
    }
    let domain = field.domain();
    let theta = domain.side_theta(side, 0.0);
    let values = radii
        .iter()
        .map(|&r| {
            let p = domain.arc_point(side, r);
            let h = local_size(field, p).ok_or(RadialError::RayOutsideDomain { theta, r })?;
            if r < RESOLUTION_FACTOR * h {
                return Err(RadialError::BelowResolution { r, h });
            }
            field.evaluate(p).ok_or(RadialError::RayOutsideDomain { theta, r })
        })
        .collect::<Result<Vec<_>, _>>()?;
    estimate_limit(&values, radii)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub theta_grid: Vec<f64>,
    pub limits: Vec<f64>,
    pub errors: Vec<f64>,
    pub fit_exponents: Vec<Option<f64>>,
    pub radii: Vec<f64>,
}

/// `n` ray angles at cell midpoints of `(-alpha, alpha)`.
pub fn theta_grid(alpha: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| -alpha + 2.0 * alpha * (j as f64 + 0.5) / n as f64).collect()
}

/// Limits along every ray of `thetas`, evaluated in parallel, kept in order.
pub fn radial_profile(field: &ScalarField, thetas: &[f64], radii: &[f64], exec: Exec) -> Result<RadialProfile, RadialError> {
    if thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RadialError::FitIllConditioned("theta grid must be strictly increasing".into()));
    }
    let fits = map_slice(exec, thetas, |&th| sample_ray(field, th, radii).and_then(|v| estimate_limit(&v, radii)));
    let fits = fits.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RadialProfile {
        theta_grid: thetas.to_vec(),
        limits: fits.iter().map(|f| f.limit).collect(),
        errors: fits.iter().map(|f| f.error_bar).collect(),
        fit_exponents: fits.iter().map(|f| f.exponent).collect(),
        radii: radii.to_vec(),
    })
}

/// A-posteriori error indicator on the circle `|x| = r`: the largest
/// `h_T |[grad f]| / 8` over triangles crossed by the circle and their
/// edge neighbours (the P1 interpolation error scale `h^2 |D^2 f| / 8`).
pub fn discretization_indicator(field: &ScalarField, r: f64) -> f64 {
    let mesh = field.mesh();
    let mut owner: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            owner.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let domain = field.domain();
    let (lo, hi) = (domain.theta_minus(r), domain.theta_plus(r));
    let mut crossed: Vec<usize> = (0..720)
        .filter_map(|j| field.locate(cartesian(r, lo + (hi - lo) * (j as f64 + 0.5) / 720.0)))
        .collect();
    crossed.sort_unstable();
    crossed.dedup();
    let mut eta = 0.0f64;
    for &t in &crossed {
        let tri = mesh.triangles[t];
        let g = field.triangle_gradient(t);
        let h = mesh.triangle_size(t);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            for &n in &owner[&(a.min(b), a.max(b))] {
                if n != t {
                    let gn = field.triangle_gradient(n);
                    eta = eta.max(h * (g[0] - gn[0]).hypot(g[1] - gn[1]) / 8.0);
                }
            }
        }
    }
    eta
}

/// `10 max(indicator at the innermost radius, 90th percentile error bar)`.
pub fn default_tolerance(field: &ScalarField, profile: &RadialProfile) -> f64 {
    let r_min = profile.radii.iter().copied().fold(f64::INFINITY, f64::min);
    let mut e = profile.errors.clone();
    e.sort_by(f64::total_cmp);
    let q90 = e.get(((e.len() as f64 * 0.9).ceil() as usize).saturating_sub(1)).copied().unwrap_or(0.0);
    10.0 * discretization_indicator(field, r_min).max(q90)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    ConstantAll,
    Fan { alpha1: f64, alpha2: f64, direction: Direction },
    Unclassified { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ClassKind,
    pub tol: f64,
    pub total_variation: f64,
    /// `|Rf(-alpha+) - z2|`
    pub side_gap: f64,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self.kind {
            ClassKind::ConstantAll => "constant_all",
            ClassKind::Fan { .. } => "fan",
            ClassKind::Unclassified { .. } => "unclassified",
        }
    }
}

/// Sorts a limit profile into "constant" or "fan": constant (within `tol`) on
/// `[-alpha, alpha1]` and on `[alpha2, alpha)`, monotone in between.
pub fn classify(profile: &RadialProfile, z2: f64, tol: f64) -> Result<Classification, RadialError> {
    let rf = &profile.limits;
    let n = rf.len();
    let bad = profile.errors.iter().filter(|&&e| e > 0.25 * tol).count();
    if n == 0 || (bad as f64) > 0.1 * n as f64 {
        return Err(RadialError::NoisyProfile { bad, total: n });
    }
    let total_variation: f64 = rf.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let side_gap = (rf[0] - z2).abs();
    let done = |kind| Ok(Classification { kind, tol, total_variation, side_gap });
    if side_gap > tol {
        return done(ClassKind::Unclassified { reason: format!("Rf(-alpha+) differs from z2 by {side_gap:.3e}") });
    }
    if total_variation <= tol {
        return done(ClassKind::ConstantAll);
    }
    // Constant blocks at both ends.
    let k1 = (0..n).take_while(|&j| (rf[j] - rf[0]).abs() <= tol).last().unwrap_or(0);
    let k2 = (0..n).rev().take_while(|&j| (rf[j] - rf[n - 1]).abs() <= tol).last().unwrap_or(n - 1);
    if k2 <= k1 {
        return done(ClassKind::Unclassified { reason: "end plateaus overlap without a constant profile".into() });
    }
    // Steps beyond tol/2 must share the sign of the net change, which itself
    // must be resolved.
    let net = rf[k2] - rf[k1];
    if net.abs() <= tol {
        return done(ClassKind::Unclassified { reason: "no resolved change between the end plateaus".into() });
    }
    let direction = if net > 0.0 { Direction::Increasing } else { Direction::Decreasing };
    let sign = net.signum();
    if (k1..k2).any(|j| sign * (rf[j + 1] - rf[j]) < -0.5 * tol) {
        return done(ClassKind::Unclassified { reason: "steps of both signs beyond tol/2".into() });
    }
    // No excursion against the trend beyond tol.
    let mut extreme = sign * rf[k1];
    for &v in &rf[k1..=k2] {
        if sign * v < extreme - tol {
            return done(ClassKind::Unclassified { reason: "interior extremum beyond tol".into() });
        }
        extreme = extreme.max(sign * v);
    }
    // A plateau of one end ray means the fan reaches that wall.
    let alpha = profile.theta_grid[0].abs().max(profile.theta_grid[n - 1].abs());
    let a1 = if k1 == 0 { -alpha } else { profile.theta_grid[k1] };
    let a2 = if k2 == n - 1 { alpha } else { profile.theta_grid[k2] };
    done(ClassKind::Fan { alpha1: a1, alpha2: a2, direction })
}

/// Trend of the last few limits toward `+alpha`; the value at `+alpha` itself
/// is not asserted.
pub fn trend_at_plus(profile: &RadialProfile, tol: f64) -> Option<Direction> {
    let n = profile.limits.len();
    if n < 2 {
        return None;
    }
    let d = profile.limits[n - 1] - profile.limits[n.saturating_sub(4)];
    if d > tol {
        Some(Direction::Increasing)
    } else if d < -tol {
        Some(Direction::Decreasing)
    } else {
        None
    }
}

impl RadialProfile {
    /// `# schema=1` CSV `theta,rf,error_bar,exponent` with the classification
    /// as comment lines.
    pub fn to_csv(&self, classification: Option<&Classification>, z2: Option<&LimitFit>) -> String {
        let mut s = String::from("# schema=1\n");
        if let Some(z) = z2 {
            let _ = writeln!(s, "# z2 = {:e} +- {:e}", z.limit, z.error_bar);
        }
        if let Some(c) = classification {
            let _ = writeln!(s, "# classification = {}", c.name());
            let _ = writeln!(s, "# tol = {:e}", c.tol);
            if let ClassKind::Fan { alpha1, alpha2, direction } = &c.kind {
                let _ = writeln!(s, "# alpha1 = {alpha1:e}\n# alpha2 = {alpha2:e}\n# direction = {direction:?}");
            }
            if let ClassKind::Unclassified { reason } = &c.kind {
                let _ = writeln!(s, "# reason = {reason}");
            }
        }
        s.push_str("theta,rf,error_bar,exponent\n");
        for j in 0..self.theta_grid.len() {
            let p = self.fit_exponents[j].map_or("NA".to_string(), |p| format!("{p:e}"));
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e},{}", self.theta_grid[j], self.limits[j], self.errors[j], p);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_mesh;
    use crate::solver::{BoundaryCondition, BoundarySpec, MeanCurvatureSpec};
    use crate::WedgeDomain;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;
    use std::sync::Arc;

    fn interpolant(alpha: f64, h: f64, f: impl Fn(Point) -> f64) -> ScalarField {
        let d = WedgeDomain::straight(alpha, 1.0).unwrap();
        let m = Arc::new(generate_mesh(&d, h, 1.0).unwrap());
        let bc = BoundarySpec {
            side_plus: BoundaryCondition::capillary(FRAC_PI_2),
            side_minus: BoundaryCondition::capillary(FRAC_PI_2),
            outer_arc: BoundaryCondition::dirichlet(0.0),
        };
        ScalarField::interpolate(&d, m, &MeanCurvatureSpec::default(), &bc, f).unwrap()
    }

    fn synthetic(alpha: f64, n: usize, rf: impl Fn(f64) -> f64) -> RadialProfile {
        let theta_grid = theta_grid(alpha, n);
        RadialProfile {
            limits: theta_grid.iter().map(|&t| rf(t)).collect(),
            errors: vec![0.0; n],
            fit_exponents: vec![None; n],
            radii: default_radii(1.0, 7),
            theta_grid,
        }
    }

    #[test]
    fn ray_sampling() {
        let c = interpolant(1.0, 0.1, |_| 2.5);
        assert!(sample_ray(&c, 0.3, &[0.4, 0.2, 0.1]).unwrap().iter().all(|&v| v == 2.5));
        let lin = interpolant(FRAC_PI_2, 0.05, |x| x[0]);
        let v = sample_ray(&lin, 0.0, &[0.4, 0.2, 0.1]).unwrap();
        for (a, b) in v.iter().zip([0.4, 0.2, 0.1]) {
            assert!((a - b).abs() <= 0.05 * 0.05, "{a} vs {b}");
        }
        assert!(matches!(sample_ray(&c, 1.1, &[0.4]), Err(RadialError::RayOutsideDomain { .. })));
        assert!(matches!(sample_ray(&c, 0.0, &[1e-9]), Err(RadialError::BelowResolution { .. })));
    }

    #[test]
    fn limit_fits_on_synthetic_sequences() {
        let radii = default_radii(1.0, 7);
        let lin: Vec<f64> = radii.iter().map(|r| 2.0 + r).collect();
        let fit = estimate_limit(&lin, &radii).unwrap();
        assert!((fit.limit - 2.0).abs() <= 1e-8);
        assert!((fit.exponent.unwrap() - 1.0).abs() < 1e-4);

        let flat = vec![5.0; 7];
        let fit = estimate_limit(&flat, &radii).unwrap();
        assert_eq!((fit.limit, fit.exponent), (5.0, None));
        assert!(fit.error_bar < 1e-12);

        let root: Vec<f64> = radii.iter().map(|r| 1.0 + r.sqrt()).collect();
        let fit = estimate_limit(&root, &radii).unwrap();
        assert!((fit.limit - 1.0).abs() <= 1e-6);
        assert!((fit.exponent.unwrap() - 0.5).abs() < 1e-4);

        assert!(matches!(estimate_limit(&[1.0, 2.0, 3.0], &[0.4, 0.2, 0.1]), Err(RadialError::FitIllConditioned(_))));
        assert!(matches!(estimate_limit(&[1.0, 2.0, 3.0, 4.0], &[0.1; 4]), Err(RadialError::FitIllConditioned(_))));
    }

    #[test]
    fn side_limits_of_interpolants() {
        let radii = default_radii(1.0, 7);
        let c = interpolant(1.0, 0.1, |_| -0.75);
        assert_eq!(side_limit(&c, BoundaryTag::SideMinus, &radii).unwrap().limit, -0.75);
        let tilt = interpolant(FRAC_PI_2, 0.05, |x| x[0]);
        assert!(side_limit(&tilt, BoundaryTag::SideMinus, &radii).unwrap().limit.abs() <= 1e-6);
        assert!(matches!(side_limit(&c, BoundaryTag::OuterArc, &radii), Err(RadialError::UnsupportedSide(_))));
    }

    #[test]
    fn classification_examples() {
        let flat = synthetic(1.0, 64, |_| 2.0);
        assert_eq!(classify(&flat, 2.0, 1e-3).unwrap().kind, ClassKind::ConstantAll);

        let smooth = |t: f64| {
            if t <= -0.3 {
                0.0
            } else if t >= 0.4 {
                1.0
            } else {
                let s = (t + 0.3) / 0.7;
                s * s * (3.0 - 2.0 * s)
            }
        };
        let fan = synthetic(1.2, 241, smooth);
        match classify(&fan, 0.0, 1e-3).unwrap().kind {
            ClassKind::Fan { alpha1, alpha2, direction } => {
                assert_eq!(direction, Direction::Increasing);
                assert!((alpha1 + 0.3).abs() < 0.03, "{alpha1}");
                assert!((alpha2 - 0.4).abs() < 0.03, "{alpha2}");
            }
            k => panic!("{k:?}"),
        }

        let bump = synthetic(1.0, 64, |t| (-(t * 4.0).powi(2)).exp());
        assert!(matches!(classify(&bump, 0.0, 1e-2).unwrap().kind, ClassKind::Unclassified { .. }));

        let mut noisy = synthetic(1.0, 10, |_| 1.0);
        noisy.errors = vec![1.0; 10];
        assert!(matches!(classify(&noisy, 1.0, 1e-2), Err(RadialError::NoisyProfile { .. })));

        // Rf(-alpha+) must agree with the side limit.
        assert!(matches!(classify(&flat, 2.5, 1e-3).unwrap().kind, ClassKind::Unclassified { .. }));
    }

    #[test]
    fn csv_has_schema_and_rows() {
        let p = synthetic(1.0, 5, |t| t);
        let c = classify(&p, -0.8, 0.01).unwrap();
        let csv = p.to_csv(Some(&c), None);
        assert!(csv.starts_with("# schema=1\n"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 6);
    }

    proptest! {
        #[test]
        fn fan_steps_share_one_sign(a in -1.0f64..-0.1, b in 0.1f64..1.0, lo in -2.0f64..2.0, jump in 0.2f64..3.0) {
            let fan = synthetic(1.2, 120, |t| lo + jump * ((t - a) / (b - a)).clamp(0.0, 1.0));
            let tol = 1e-3;
            let c = classify(&fan, lo, tol).unwrap();
            match c.kind {
                ClassKind::Fan { alpha1, alpha2, .. } => {
                    prop_assert!(-1.2 <= alpha1 && alpha1 < alpha2 && alpha2 <= 1.2);
                    let inner: Vec<f64> = fan.theta_grid.iter().zip(&fan.limits)
                        .filter(|(t, _)| **t > alpha1 && **t < alpha2).map(|(_, v)| *v).collect();
                    prop_assert!(inner.windows(2).all(|w| w[1] - w[0] > -tol / 2.0));
                }
                k => prop_assert!(false, "{:?}", k),
            }
        }

        #[test]
        fn power_law_limits_recovered(l in -3.0f64..3.0, c in -2.0f64..2.0, p in 0.3f64..2.5) {
            prop_assume!(c.abs() > 1e-3);
            let radii = default_radii(1.0, 7);
            let v: Vec<f64> = radii.iter().map(|r| l + c * r.powf(p)).collect();
            let fit = estimate_limit(&v, &radii).unwrap();
            prop_assert!((fit.limit - l).abs() <= 1e-6 * (1.0 + c.abs()));
            prop_assert!(fit.error_bar >= 0.0);
        }
    }
}
