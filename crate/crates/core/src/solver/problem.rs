//! Data describing a PMC boundary value problem: mean curvature and per-side
//! boundary conditions.

use crate::geometry::{BoundaryTag, Point, WedgeDomain};
use serde::{Deserialize, Serialize};

/// Coordinate a boundary or field profile is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// Arclength along the boundary piece (sides: from the corner).
    #[default]
    Arclength,
    /// Polar angle about the corner.
    Angle,
    /// Distance to the corner.
    Radius,
    X1,
    X2,
}

/// Scalar function of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        #[serde(deserialize_with = "crate::angle::deserialize")]
        value: f64,
    },
    /// `a + (b - a) (1 + tanh((t - center) / eps)) / 2`
    TanhJump {
        eps: f64,
        #[serde(deserialize_with = "crate::angle::deserialize")]
        a: f64,
        #[serde(deserialize_with = "crate::angle::deserialize")]
        b: f64,
        #[serde(default, deserialize_with = "crate::angle::deserialize")]
        center: f64,
        #[serde(default)]
        variable: Variable,
    },
    /// `c0 + c1 t + c2 t^2 + ..`
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default)]
        variable: Variable,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn tanh_jump(eps: f64, a: f64, b: f64, center: f64, variable: Variable) -> Self {
        Profile::TanhJump { eps, a, b, center, variable }
    }

    /// Value at point `x` with boundary arclength `s` (ignored off the boundary).
    pub fn eval(&self, domain: &WedgeDomain, x: Point, s: f64) -> f64 {
        let coord = |v: Variable| match v {
            Variable::Arclength => s,
            Variable::Angle => domain.unwrapped_angle(x),
            Variable::Radius => x[0].hypot(x[1]),
            Variable::X1 => x[0],
            Variable::X2 => x[1],
        };
        match self {
            Profile::Constant { value } => *value,
            Profile::TanhJump { eps, a, b, center, variable } => {
                let t = coord(*variable);
                a + (b - a) * 0.5 * (1.0 + ((t - center) / eps).tanh())
            }
            Profile::Polynomial { coeffs, variable } => {
                let t = coord(*variable);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

/// `H(x, t)` in `div T f = 2 H(x, f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeanCurvatureSpec {
    Constant { h: f64 },
    SpatialField { field: Profile },
    /// `kappa t + h0`, `kappa >= 0`.
    Linear { kappa: f64, h0: f64 },
}

impl Default for MeanCurvatureSpec {
    fn default() -> Self {
        MeanCurvatureSpec::Constant { h: 0.0 }
    }
}

impl MeanCurvatureSpec {
    pub fn value(&self, domain: &WedgeDomain, x: Point, t: f64) -> f64 {
        match self {
            MeanCurvatureSpec::Constant { h } => *h,
            MeanCurvatureSpec::SpatialField { field } => field.eval(domain, x, 0.0),
            MeanCurvatureSpec::Linear { kappa, h0 } => kappa * t + h0,
        }
    }

    /// `d H / d t`
    pub fn slope(&self) -> f64 {
        match self {
            MeanCurvatureSpec::Linear { kappa, .. } => *kappa,
            _ => 0.0,
        }
    }

    /// Antiderivative `Phi(x, t)` with `Phi' = 2 H`, `Phi(x, 0) = 0`.
    pub fn potential(&self, domain: &WedgeDomain, x: Point, t: f64) -> f64 {
        match self {
            MeanCurvatureSpec::Linear { kappa, h0 } => kappa * t * t + 2.0 * h0 * t,
            other => 2.0 * other.value(domain, x, 0.0) * t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    /// `T f . nu = cos gamma`
    Capillary { gamma: Profile },
    Dirichlet { value: Profile },
}

impl BoundaryCondition {
    pub fn capillary(gamma: f64) -> Self {
        BoundaryCondition::Capillary { gamma: Profile::constant(gamma) }
    }

    pub fn dirichlet(value: f64) -> Self {
        BoundaryCondition::Dirichlet { value: Profile::constant(value) }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub side_plus: BoundaryCondition,
    pub side_minus: BoundaryCondition,
    pub outer_arc: BoundaryCondition,
}

impl BoundarySpec {
    pub fn get(&self, tag: BoundaryTag) -> &BoundaryCondition {
        match tag {
            BoundaryTag::SidePlus => &self.side_plus,
            BoundaryTag::SideMinus => &self.side_minus,
            BoundaryTag::OuterArc => &self.outer_arc,
        }
    }

    pub fn any_dirichlet(&self) -> bool {
        BoundaryTag::ALL.iter().any(|&t| self.get(t).is_dirichlet())
    }

    /// Limiting contact angle at the corner on a capillary side.
    pub fn corner_angle(&self, domain: &WedgeDomain, tag: BoundaryTag) -> Option<f64> {
        match self.get(tag) {
            BoundaryCondition::Capillary { gamma } => Some(gamma.eval(domain, [0.0, 0.0], 0.0)),
            BoundaryCondition::Dirichlet { .. } => None,
        }
    }
}
