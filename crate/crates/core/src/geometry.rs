//! Wedge domains with a corner at the origin.
//!
//! A domain is the part of the disk of radius `delta_star` lying between two
//! boundary arcs that leave the origin tangent to the rays `theta = +alpha`
//! and `theta = -alpha`. Each arc is stored as an angular perturbation of its
//! ray, `theta(r) = +-alpha + offset(r)` with `offset(0) = 0`, so the straight
//! wedge is the zero case and tangency at the corner holds by construction
//! whenever `r * offset'(r) -> 0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("half-angle {0} outside (0, pi)")]
    InvalidAngle(f64),
    #[error("domain radius {0} must be positive")]
    InvalidRadius(f64),
    #[error("arc offset must vanish at the corner, got constant term {0}")]
    NonzeroCornerOffset(f64),
    #[error("boundary arcs cross away from the corner (near r = {r})")]
    ArcsCross { r: f64 },
    #[error("arc {side:?} is not tangent to its ray at the corner (tangent off by {error:e} rad)")]
    NotTangent { side: BoundaryTag, error: f64 },
    #[error("arclength {s} outside [0, {length}] on {side:?}")]
    OutOfRange { side: BoundaryTag, s: f64, length: f64 },
}

/// The three pieces of the boundary of the truncated wedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    SidePlus,
    SideMinus,
    OuterArc,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 3] = [BoundaryTag::SidePlus, BoundaryTag::SideMinus, BoundaryTag::OuterArc];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::SidePlus => "SidePlus",
            BoundaryTag::SideMinus => "SideMinus",
            BoundaryTag::OuterArc => "OuterArc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcPreset {
    Straight,
}

/// Angular offset of a side arc from its ray: either a named preset or the
/// coefficients `[c0, c1, c2, ..]` of `c0 + c1 r + c2 r^2 + ..` (c0 must be 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArcSpec {
    Preset(ArcPreset),
    Polynomial(Vec<f64>),
}

impl Default for ArcSpec {
    fn default() -> Self {
        ArcSpec::Preset(ArcPreset::Straight)
    }
}

impl ArcSpec {
    pub fn straight() -> Self {
        ArcSpec::Preset(ArcPreset::Straight)
    }

    fn coeffs(&self) -> &[f64] {
        match self {
            ArcSpec::Preset(ArcPreset::Straight) => &[],
            ArcSpec::Polynomial(c) => c,
        }
    }

    pub fn is_straight(&self) -> bool {
        self.coeffs().iter().all(|&c| c == 0.0)
    }

    pub fn offset(&self, r: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }

    pub fn offset_derivative(&self, r: f64) -> f64 {
        let c = self.coeffs();
        (1..c.len()).rev().fold(0.0, |acc, k| acc * r + k as f64 * c[k])
    }
}

/// Serialized form of a [`WedgeDomain`] (keys `alpha`, `delta_star`,
/// `arc_plus`, `arc_minus`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(deserialize_with = "crate::angle::deserialize")]
    pub alpha: f64,
    pub delta_star: f64,
    #[serde(default)]
    pub arc_plus: ArcSpec,
    #[serde(default)]
    pub arc_minus: ArcSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainConfig", into = "DomainConfig")]
pub struct WedgeDomain {
    alpha: f64,
    delta_star: f64,
    arc_plus: ArcSpec,
    arc_minus: ArcSpec,
}

impl TryFrom<DomainConfig> for WedgeDomain {
    type Error = GeometryError;
    fn try_from(c: DomainConfig) -> Result<Self, Self::Error> {
        build_wedge(c.alpha, c.delta_star, c.arc_plus, c.arc_minus)
    }
}

impl From<WedgeDomain> for DomainConfig {
    fn from(d: WedgeDomain) -> Self {
        DomainConfig { alpha: d.alpha, delta_star: d.delta_star, arc_plus: d.arc_plus, arc_minus: d.arc_minus }
    }
}

/// Validates and builds a wedge domain.
pub fn build_wedge(
    alpha: f64,
    delta_star: f64,
    arc_plus: ArcSpec,
    arc_minus: ArcSpec,
) -> Result<WedgeDomain, GeometryError> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(GeometryError::InvalidAngle(alpha));
    }
    if !(delta_star > 0.0 && delta_star.is_finite()) {
        return Err(GeometryError::InvalidRadius(delta_star));
    }
    for arc in [&arc_plus, &arc_minus] {
        let c0 = arc.offset(0.0);
        if c0 != 0.0 {
            return Err(GeometryError::NonzeroCornerOffset(c0));
        }
    }
    let domain = WedgeDomain { alpha, delta_star, arc_plus, arc_minus };

    const SAMPLES: usize = 4096;
    for k in 1..=SAMPLES {
        let r = delta_star * k as f64 / SAMPLES as f64;
        let opening = domain.opening(r);
        if !(opening > 0.0 && opening < 2.0 * PI) {
            return Err(GeometryError::ArcsCross { r });
        }
    }

    let r_probe = 1e-9 * delta_star;
    for side in [BoundaryTag::SidePlus, BoundaryTag::SideMinus] {
        let t = domain.arc_tangent(side, r_probe);
        let ray = if side == BoundaryTag::SidePlus { alpha } else { -alpha };
        let error = wrap_angle(t[1].atan2(t[0]) - ray).abs();
        if error > 1e-6 {
            return Err(GeometryError::NotTangent { side, error });
        }
    }
    Ok(domain)
}

impl WedgeDomain {
    /// Straight-sided wedge.
    pub fn straight(alpha: f64, delta_star: f64) -> Result<Self, GeometryError> {
        build_wedge(alpha, delta_star, ArcSpec::straight(), ArcSpec::straight())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta_star(&self) -> f64 {
        self.delta_star
    }

    pub fn arc_spec(&self, side: BoundaryTag) -> Option<&ArcSpec> {
        match side {
            BoundaryTag::SidePlus => Some(&self.arc_plus),
            BoundaryTag::SideMinus => Some(&self.arc_minus),
            BoundaryTag::OuterArc => None,
        }
    }

    pub fn is_straight(&self) -> bool {
        self.arc_plus.is_straight() && self.arc_minus.is_straight()
    }

    pub fn theta_plus(&self, r: f64) -> f64 {
        self.alpha + self.arc_plus.offset(r)
    }

    pub fn theta_minus(&self, r: f64) -> f64 {
        -self.alpha + self.arc_minus.offset(r)
    }

    /// Angular width of the domain on the circle of radius `r`.
    pub fn opening(&self, r: f64) -> f64 {
        self.theta_plus(r) - self.theta_minus(r)
    }

    /// Polar angle of a side arc at radius `r` (unwrapped, may leave (-pi, pi]).
    pub fn side_theta(&self, side: BoundaryTag, r: f64) -> f64 {
        match side {
            BoundaryTag::SidePlus => self.theta_plus(r),
            BoundaryTag::SideMinus => self.theta_minus(r),
            BoundaryTag::OuterArc => panic!("outer arc has no radial parameterization"),
        }
    }

    fn side_theta_derivative(&self, side: BoundaryTag, r: f64) -> f64 {
        match side {
            BoundaryTag::SidePlus => self.arc_plus.offset_derivative(r),
            BoundaryTag::SideMinus => self.arc_minus.offset_derivative(r),
            BoundaryTag::OuterArc => 0.0,
        }
    }

    pub fn arc_point(&self, side: BoundaryTag, r: f64) -> Point {
        cartesian(r, self.side_theta(side, r))
    }

    /// Unit tangent of a side arc at radius `r`, oriented away from the corner.
    pub fn arc_tangent(&self, side: BoundaryTag, r: f64) -> Point {
        let th = self.side_theta(side, r);
        let dth = self.side_theta_derivative(side, r);
        // d/dr [r cos th, r sin th]
        let v = [th.cos() - r * dth * th.sin(), th.sin() + r * dth * th.cos()];
        normalize(v)
    }

    /// Arclength of a side arc from the corner to radius `r`.
    pub fn arclength(&self, side: BoundaryTag, r: f64) -> f64 {
        if side == BoundaryTag::OuterArc {
            panic!("arclength(OuterArc) is angular; use outer_arc_length");
        }
        let spec = self.arc_spec(side).unwrap();
        if spec.is_straight() {
            return r;
        }
        // Composite 5-point Gauss-Legendre; the integrand is smooth.
        const PANELS: usize = 32;
        let speed = |rho: f64| {
            let d = rho * self.side_theta_derivative(side, rho);
            (1.0 + d * d).sqrt()
        };
        let width = r / PANELS as f64;
        (0..PANELS)
            .map(|p| {
                let a = p as f64 * width;
                GAUSS5
                    .iter()
                    .map(|&(x, w)| w * speed(a + 0.5 * width * (x + 1.0)))
                    .sum::<f64>()
                    * 0.5
                    * width
            })
            .sum()
    }

    /// Inverse of [`Self::arclength`].
    pub fn radius_at_arclength(&self, side: BoundaryTag, s: f64) -> f64 {
        let spec = self.arc_spec(side).expect("side arc");
        if spec.is_straight() {
            return s;
        }
        let (mut lo, mut hi) = (0.0, s);
        while self.arclength(side, hi) < s {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.arclength(side, mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn outer_arc_length(&self) -> f64 {
        self.delta_star * self.opening(self.delta_star)
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        match tag {
            BoundaryTag::OuterArc => self.outer_arc_length(),
            side => self.arclength(side, self.delta_star),
        }
    }

    /// Exterior unit normal at arclength `s`. Side arcs are measured from the
    /// corner; the outer arc from its end on the minus side.
    pub fn exterior_normal(&self, side: BoundaryTag, s: f64) -> Result<Point, GeometryError> {
        let length = self.boundary_length(side);
        let slack = 1e-12 * length.max(1.0);
        if !(s >= -slack && s <= length + slack) {
            return Err(GeometryError::OutOfRange { side, s, length });
        }
        let s = s.clamp(0.0, length);
        Ok(match side {
            BoundaryTag::OuterArc => {
                let th = self.theta_minus(self.delta_star) + s / self.delta_star;
                [th.cos(), th.sin()]
            }
            BoundaryTag::SidePlus => {
                let t = self.arc_tangent(side, self.radius_at_arclength(side, s));
                [-t[1], t[0]]
            }
            BoundaryTag::SideMinus => {
                let t = self.arc_tangent(side, self.radius_at_arclength(side, s));
                [t[1], -t[0]]
            }
        })
    }

    /// Whether the polar angle `theta` (any branch) lies within the opening at radius `r`.
    pub fn angle_inside(&self, r: f64, theta: f64) -> bool {
        let lo = self.theta_minus(r);
        let hi = self.theta_plus(r);
        [-2.0 * PI, 0.0, 2.0 * PI].iter().any(|k| {
            let t = theta + k;
            t > lo && t < hi
        })
    }

    /// Open-set membership in the truncated wedge.
    pub fn contains(&self, p: Point) -> bool {
        let (r, theta) = polar_of(p);
        r > 0.0 && r < self.delta_star && self.angle_inside(r, theta)
    }

    /// Unwrapped polar angle of `p` on the branch that lies in the domain's
    /// angular range at radius `|p|`; falls back to `atan2`.
    pub fn unwrapped_angle(&self, p: Point) -> f64 {
        let (r, theta) = polar_of(p);
        let lo = self.theta_minus(r);
        let hi = self.theta_plus(r);
        for k in [0.0, -2.0 * PI, 2.0 * PI] {
            let t = theta + k;
            if t >= lo - 1e-12 && t <= hi + 1e-12 {
                return t;
            }
        }
        theta
    }
}

/// Polar coordinates `(r, theta)` with `theta` in (-pi, pi]; the origin maps to (0, 0).
pub fn polar_of(p: Point) -> (f64, f64) {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let theta = p[1].atan2(p[0]);
    // atan2 returns -pi for (-x, -0.0)
    let theta = if theta == -PI { PI } else { theta };
    (r, theta)
}

pub fn cartesian(r: f64, theta: f64) -> Point {
    [r * theta.cos(), r * theta.sin()]
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

pub(crate) fn normalize(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[cfg(test)]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
    }

    #[test]
    fn half_disk_membership() {
        let d = WedgeDomain::straight(FRAC_PI_2, 1.0).unwrap();
        assert!(d.contains([0.5, 0.3]));
        assert!(d.contains([0.1, -0.9]));
        assert!(!d.contains([-0.1, 0.2]));
        assert!(!d.contains([0.8, 0.8]));
        assert!((d.opening(0.5) - PI).abs() < 1e-15);
    }

    #[test]
    fn sixty_degree_sector_tangents() {
        let d = WedgeDomain::straight(FRAC_PI_6, 1.0).unwrap();
        for (side, want) in [(BoundaryTag::SidePlus, FRAC_PI_6), (BoundaryTag::SideMinus, -FRAC_PI_6)] {
            let t = d.arc_tangent(side, 0.3);
            assert!((t[1].atan2(t[0]) - want).abs() < 1e-15);
        }
        assert!(d.contains([0.5, 0.2]));
        assert!(!d.contains([0.5, 0.3]));
    }

    #[test]
    fn curved_arc_tangent_finite_difference_audit() {
        let d = build_wedge(FRAC_PI_3, 1.0, ArcSpec::Polynomial(vec![0.0, 0.1]), ArcSpec::Polynomial(vec![0.0, 0.1]))
            .unwrap();
        let r = 1e-6;
        let hstep = 1e-9;
        for (side, ray) in [(BoundaryTag::SidePlus, FRAC_PI_3), (BoundaryTag::SideMinus, -FRAC_PI_3)] {
            let a = d.arc_point(side, r - hstep);
            let b = d.arc_point(side, r + hstep);
            let angle = (b[1] - a[1]).atan2(b[0] - a[0]);
            assert!((angle - ray).abs() < 1e-6, "{side:?}: {angle} vs {ray}");
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        assert_eq!(WedgeDomain::straight(0.0, 1.0), Err(GeometryError::InvalidAngle(0.0)));
        assert_eq!(WedgeDomain::straight(PI, 1.0), Err(GeometryError::InvalidAngle(PI)));
        assert!(matches!(WedgeDomain::straight(1.0, -1.0), Err(GeometryError::InvalidRadius(_))));
        // minus arc swings up past the plus arc
        let crossing = build_wedge(0.3, 1.0, ArcSpec::straight(), ArcSpec::Polynomial(vec![0.0, 1.0]));
        assert!(matches!(crossing, Err(GeometryError::ArcsCross { .. })));
        let shifted = build_wedge(0.3, 1.0, ArcSpec::Polynomial(vec![0.1]), ArcSpec::straight());
        assert!(matches!(shifted, Err(GeometryError::NonzeroCornerOffset(_))));
    }

    #[test]
    fn straight_normals() {
        let d6 = WedgeDomain::straight(FRAC_PI_6, 1.0).unwrap();
        let n = d6.exterior_normal(BoundaryTag::SidePlus, 0.4).unwrap();
        assert!(close(n, [-0.5, 3f64.sqrt() / 2.0], 1e-15));
        let d2 = WedgeDomain::straight(FRAC_PI_2, 1.0).unwrap();
        assert!(close(d2.exterior_normal(BoundaryTag::SidePlus, 0.9).unwrap(), [-1.0, 0.0], 1e-15));
        let d3 = WedgeDomain::straight(FRAC_PI_3, 1.0).unwrap();
        let n = d3.exterior_normal(BoundaryTag::SideMinus, 0.2).unwrap();
        assert!(close(n, [-(3f64.sqrt()) / 2.0, -0.5], 1e-15));
        let n = d3.exterior_normal(BoundaryTag::OuterArc, d3.outer_arc_length() / 2.0).unwrap();
        assert!(close(n, [1.0, 0.0], 1e-15));
        assert!(matches!(
            d3.exterior_normal(BoundaryTag::SidePlus, 1.5),
            Err(GeometryError::OutOfRange { .. })
        ));
    }

    #[test]
    fn curved_normals_point_outward() {
        let d = build_wedge(1.0, 1.0, ArcSpec::Polynomial(vec![0.0, 0.2, -0.1]), ArcSpec::Polynomial(vec![0.0, 0.05]))
            .unwrap();
        for side in [BoundaryTag::SidePlus, BoundaryTag::SideMinus] {
            let len = d.boundary_length(side);
            for k in 1..10 {
                let s = len * k as f64 / 10.0;
                let r = d.radius_at_arclength(side, s);
                assert!((d.arclength(side, r) - s).abs() < 1e-12);
                let p = d.arc_point(side, r);
                let n = d.exterior_normal(side, s).unwrap();
                assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
                assert!(!d.contains([p[0] + 1e-6 * n[0], p[1] + 1e-6 * n[1]]));
                assert!(d.contains([p[0] - 1e-6 * n[0], p[1] - 1e-6 * n[1]]));
            }
        }
    }

    #[test]
    fn polar_examples() {
        assert_eq!(polar_of([0.0, 0.0]), (0.0, 0.0));
        let (r, t) = polar_of([1.0, 1.0]);
        assert!((r - 2f64.sqrt()).abs() < 1e-15 && (t - PI / 4.0).abs() < 1e-15);
        assert_eq!(polar_of([-1.0, 0.0]), (1.0, PI));
        assert_eq!(polar_of([-1.0, -0.0]), (1.0, PI));
    }

    #[test]
    fn config_round_trip() {
        let text = "alpha = \"pi/3\"\ndelta_star = 1.0\narc_plus = \"straight\"\narc_minus = [0.0, 0.1]\n";
        let d: WedgeDomain = toml::from_str(text).unwrap();
        assert!((d.alpha() - FRAC_PI_3).abs() < 1e-15);
        assert_eq!(d.arc_spec(BoundaryTag::SideMinus), Some(&ArcSpec::Polynomial(vec![0.0, 0.1])));
        let back: WedgeDomain = toml::from_str(&toml::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let bad: Result<WedgeDomain, _> = toml::from_str("alpha = 4.0\ndelta_star = 1.0\n");
        assert!(bad.is_err());
    }

    proptest! {
        #[test]
        fn polar_inverts_cartesian(r in 1e-6f64..10.0, theta in -3.1f64..3.1) {
            let (r2, t2) = polar_of(cartesian(r, theta));
            prop_assert!((r2 - r).abs() <= 1e-12 * r.max(1.0));
            prop_assert!((t2 - theta).abs() <= 1e-12);
        }

        #[test]
        fn straight_normals_are_unit_and_orthogonal(alpha in 0.05f64..3.09, frac in 0.0f64..1.0) {
            let d = WedgeDomain::straight(alpha, 2.0).unwrap();
            for side in [BoundaryTag::SidePlus, BoundaryTag::SideMinus] {
                let n = d.exterior_normal(side, 2.0 * frac).unwrap();
                let t = d.arc_tangent(side, 1.0);
                prop_assert!((n[0].hypot(n[1]) - 1.0).abs() <= 1e-12);
                prop_assert!(dot(n, t).abs() <= 1e-12);
            }
        }
    }
}
