//! Admissibility of corner data.
//!
//! All the inequalities involved are strict, so margins within
//! [`BOUNDARY_TOL`] of zero produce [`Verdict::Indeterminate`] instead of a
//! floating-point coin flip.

use crate::torus::beta_from_tau;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

impl Verdict {
    /// 0 holds, 1 fails, 2 indeterminate.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Indeterminate => 2,
        }
    }

    fn from_margins(margins: &[f64]) -> Verdict {
        if margins.iter().any(|&m| m < -BOUNDARY_TOL || m.is_nan()) {
            Verdict::Fails
        } else if margins.iter().any(|&m| m.abs() <= BOUNDARY_TOL) {
            Verdict::Indeterminate
        } else {
            Verdict::Holds
        }
    }

    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Indeterminate, _) | (_, Verdict::Indeterminate) => Verdict::Indeterminate,
            _ => Verdict::Holds,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reason {
    AlphaTooSmall,
    AlphaTooLarge,
    Gamma2TooSmall,
    Gamma2TooLarge,
    LambdaGapNotPositive,
    LambdaGapTooLarge,
    OnBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition1 {
    pub verdict: Verdict,
    /// `gamma2 - (pi - 2 alpha)`
    pub lower_margin: f64,
    /// `2 alpha - gamma2`
    pub upper_margin: f64,
    pub reasons: Vec<Reason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition2 {
    pub verdict: Verdict,
    /// Verdict on `0 < lambda2 - lambda1 < 4 alpha` alone.
    pub prerequisite: Verdict,
    /// `lambda2 - lambda1`
    pub gap_lower_margin: f64,
    /// `4 alpha - (lambda2 - lambda1)`
    pub gap_upper_margin: f64,
    /// `gamma2 - (pi - 2 alpha - lambda1)`
    pub lower_margin: f64,
    /// `pi + 2 alpha - lambda2 - gamma2`
    pub upper_margin: f64,
    pub reasons: Vec<Reason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcusFinn {
    pub admissible: bool,
    /// `2 alpha - |pi - gamma1 - gamma2|`
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChosenAngles {
    pub tau1: f64,
    pub tau2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub alpha: f64,
    pub gamma2: f64,
    pub condition1: Condition1,
    pub condition2: Option<Condition2>,
    pub concus_finn: Option<ConcusFinn>,
    pub chosen: Option<ChosenAngles>,
}

impl ConditionReport {
    /// Verdict of the condition that applies: the second one when it was
    /// requested, otherwise the first.
    pub fn verdict(&self) -> Verdict {
        self.condition2.as_ref().map_or(self.condition1.verdict, |c| c.verdict)
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("alpha = {:.17e}\ngamma2 = {:.17e}\n", self.alpha, self.gamma2);
        let c1 = &self.condition1;
        s += &format!(
            "condition1 = \"{}\"\ncondition1_lower_margin = {:.17e}\ncondition1_upper_margin = {:.17e}\ncondition1_reasons = {:?}\n",
            c1.verdict,
            c1.lower_margin,
            c1.upper_margin,
            c1.reasons.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>()
        );
        if let Some(c2) = &self.condition2 {
            s += &format!(
                "condition2 = \"{}\"\ncondition2_prerequisite = \"{}\"\ncondition2_gap_margins = [{:.17e}, {:.17e}]\ncondition2_lower_margin = {:.17e}\ncondition2_upper_margin = {:.17e}\ncondition2_reasons = {:?}\n",
                c2.verdict,
                c2.prerequisite,
                c2.gap_lower_margin,
                c2.gap_upper_margin,
                c2.lower_margin,
                c2.upper_margin,
                c2.reasons.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>()
            );
        }
        if let Some(cf) = &self.concus_finn {
            s += &format!("concus_finn_admissible = {}\nconcus_finn_slack = {:.17e}\n", cf.admissible, cf.slack);
        }
        if let Some(c) = &self.chosen {
            s += &format!(
                "tau1 = {:.17e}\ntau2 = {:.17e}\nbeta1 = {:.17e}\nbeta2 = {:.17e}\n",
                c.tau1, c.tau2, c.beta1, c.beta2
            );
        }
        s
    }
}

fn condition1(alpha: f64, gamma2: f64) -> Condition1 {
    let lower_margin = gamma2 - (PI - 2.0 * alpha);
    let upper_margin = 2.0 * alpha - gamma2;
    let mut reasons = Vec::new();
    let mut verdict = Verdict::from_margins(&[lower_margin, upper_margin]);
    if alpha <= FRAC_PI_4 + BOUNDARY_TOL {
        reasons.push(Reason::AlphaTooSmall);
        verdict = Verdict::Fails;
    }
    if alpha > FRAC_PI_2 + BOUNDARY_TOL {
        reasons.push(Reason::AlphaTooLarge);
        verdict = Verdict::Fails;
    }
    push_margin_reasons(&mut reasons, lower_margin, Reason::Gamma2TooSmall);
    push_margin_reasons(&mut reasons, upper_margin, Reason::Gamma2TooLarge);
    Condition1 { verdict, lower_margin, upper_margin, reasons }
}

fn push_margin_reasons(reasons: &mut Vec<Reason>, margin: f64, failing: Reason) {
    if margin < -BOUNDARY_TOL {
        reasons.push(failing);
    } else if margin.abs() <= BOUNDARY_TOL && !reasons.contains(&Reason::OnBoundary) {
        reasons.push(Reason::OnBoundary);
    }
}

/// `alpha in (pi/4, pi/2]` and `pi - 2 alpha < gamma2 < 2 alpha`.
pub fn check_theorem1(alpha: f64, gamma2: f64) -> ConditionReport {
    ConditionReport {
        alpha,
        gamma2,
        condition1: condition1(alpha, gamma2),
        condition2: None,
        concus_finn: None,
        chosen: None,
    }
}

/// `0 < lambda2 - lambda1 < 4 alpha` and
/// `pi - 2 alpha - lambda1 < gamma2 < pi + 2 alpha - lambda2`.
pub fn check_theorem2(alpha: f64, gamma2: f64, lambda1: f64, lambda2: f64) -> ConditionReport {
    let gap = lambda2 - lambda1;
    let gap_lower_margin = gap;
    let gap_upper_margin = 4.0 * alpha - gap;
    let lower_margin = gamma2 - (PI - 2.0 * alpha - lambda1);
    let upper_margin = PI + 2.0 * alpha - lambda2 - gamma2;
    let prerequisite = Verdict::from_margins(&[gap_lower_margin, gap_upper_margin]);
    let verdict = prerequisite.and(Verdict::from_margins(&[lower_margin, upper_margin]));
    let mut reasons = Vec::new();
    push_margin_reasons(&mut reasons, gap_lower_margin, Reason::LambdaGapNotPositive);
    push_margin_reasons(&mut reasons, gap_upper_margin, Reason::LambdaGapTooLarge);
    push_margin_reasons(&mut reasons, lower_margin, Reason::Gamma2TooSmall);
    push_margin_reasons(&mut reasons, upper_margin, Reason::Gamma2TooLarge);
    ConditionReport {
        alpha,
        gamma2,
        condition1: condition1(alpha, gamma2),
        condition2: Some(Condition2 {
            verdict,
            prerequisite,
            gap_lower_margin,
            gap_upper_margin,
            lower_margin,
            upper_margin,
            reasons,
        }),
        concus_finn: None,
        chosen: None,
    }
}

/// `|pi - gamma1 - gamma2| <= 2 alpha` (equality admissible).
pub fn concus_finn_admissible(alpha: f64, gamma1: f64, gamma2: f64) -> ConcusFinn {
    let slack = 2.0 * alpha - (PI - gamma1 - gamma2).abs();
    ConcusFinn { admissible: slack >= -BOUNDARY_TOL, slack }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AngleStrategy {
    /// `tau1`, `tau2` at the midpoints of their admissible intervals.
    #[default]
    Midpoint,
    /// `tau1 = gamma2 - t (gamma2 - lo)`, `tau2 = gamma2 + t (hi - gamma2)`, `t in (0, 1)`.
    Fraction(f64),
    /// Contact angle on the plus side bounded by `sigma1 <= gamma <= sigma2`
    /// instead of a limiting value. Experimental: accepted on the command line
    /// but has no worked-out selection rule, so it is always rejected.
    SigmaBounds { sigma1: f64, sigma2: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConditionError {
    #[error("the applicable condition is {0}, comparison angles cannot be chosen")]
    ConditionViolated(Verdict),
    #[error("fraction {0} must lie in (0, 1)")]
    InvalidFraction(f64),
    #[error("sigma-bound strategy is experimental and has no selection rule")]
    Experimental,
}

/// Picks `tau1 in (lo, gamma2)` and `tau2 in (gamma2, hi)` and their anchors.
/// Without `lambdas` the bounds are `(pi - 2 alpha, 2 alpha)`; with them,
/// `(pi - 2 alpha - lambda1, pi + 2 alpha - lambda2)` clipped to `[0, pi]`.
pub fn choose_comparison_angles(
    alpha: f64,
    gamma2: f64,
    lambdas: Option<(f64, f64)>,
    strategy: AngleStrategy,
) -> Result<ChosenAngles, ConditionError> {
    let (report, lo, hi) = match lambdas {
        None => (check_theorem1(alpha, gamma2), PI - 2.0 * alpha, 2.0 * alpha),
        Some((l1, l2)) => (
            check_theorem2(alpha, gamma2, l1, l2),
            (PI - 2.0 * alpha - l1).max(0.0),
            (PI + 2.0 * alpha - l2).min(PI),
        ),
    };
    let verdict = report.verdict();
    if verdict != Verdict::Holds {
        return Err(ConditionError::ConditionViolated(verdict));
    }
    let t = match strategy {
        AngleStrategy::Midpoint => 0.5,
        AngleStrategy::Fraction(t) if t > 0.0 && t < 1.0 => t,
        AngleStrategy::Fraction(t) => return Err(ConditionError::InvalidFraction(t)),
        AngleStrategy::SigmaBounds { .. } => return Err(ConditionError::Experimental),
    };
    let tau1 = gamma2 - t * (gamma2 - lo);
    let tau2 = gamma2 + t * (hi - gamma2);
    let beta1 = beta_from_tau(1, tau1).map_err(|_| ConditionError::ConditionViolated(Verdict::Fails))?;
    let beta2 = beta_from_tau(2, tau2).map_err(|_| ConditionError::ConditionViolated(Verdict::Fails))?;
    Ok(ChosenAngles { tau1, tau2, beta1, beta2 })
}
