use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};
use std::sync::Arc;
use wedgecap::comparison::{barrier_minor_radius, sandwich_check, uniform_continuity_probe};
use wedgecap::config::ProblemConfig;
use wedgecap::radial::{classify, default_radii, default_tolerance, radial_profile, resolved_radii, side_limit, theta_grid, ClassKind, Direction};
use wedgecap::solver::{solve, ScalarField};
use wedgecap::torus::MuFamily;
use wedgecap::{BoundaryTag, Exec, Point};

const CAP: &str = r#"
[domain]
alpha = "pi/2"
delta_star = 1.0

[mesh]
h_max = 0.04

[curvature]
kind = "constant"
h = -0.5

[boundary.side_plus]
type = "capillary"
gamma = { kind = "constant", value = "pi/2" }

[boundary.side_minus]
type = "capillary"
gamma = { kind = "constant", value = "pi/2" }

[boundary.outer_arc]
type = "dirichlet"
value = { kind = "constant", value = 1.7320508075688772 }
"#;

const TANH: &str = r#"
[domain]
alpha = "pi/2"
delta_star = 1.0

[mesh]
h_max = 0.05

[boundary.side_plus]
type = "dirichlet"
value = { kind = "constant", value = 1.0 }

[boundary.side_minus]
type = "capillary"
gamma = { kind = "constant", value = "pi/2" }

[boundary.outer_arc]
type = "dirichlet"
value = { kind = "tanh_jump", eps = 0.05, a = -1.0, b = 1.0, variable = "angle" }
"#;

fn run(text: &str) -> ScalarField {
    let cfg = ProblemConfig::from_toml(text).unwrap();
    let mesh = Arc::new(cfg.build_mesh().unwrap());
    solve(&cfg.domain, mesh, &cfg.curvature, &cfg.boundary, &cfg.solver).unwrap()
}

fn kind(f: &ScalarField) -> ClassKind {
    let d = f.domain();
    let thetas = theta_grid(d.alpha(), 64);
    let radii = resolved_radii(f, &thetas, &default_radii(d.delta_star(), 7));
    assert!(radii.len() >= 4, "{radii:?}");
    let profile = radial_profile(f, &thetas, &radii, Exec::Parallel).unwrap();
    let z2 = side_limit(f, BoundaryTag::SideMinus, &radii).unwrap().limit;
    classify(&profile, z2, default_tolerance(f, &profile)).unwrap().kind
}

#[test]
fn cap_from_config_has_constant_limits() {
    let f = run(CAP);
    assert_eq!(kind(&f), ClassKind::ConstantAll);
}

#[test]
fn tanh_from_config_is_an_increasing_fan() {
    // h_max must resolve the jump width eps = 0.05; coarser meshes smear it
    // below the classification tolerance.
    let f = run(TANH);
    match kind(&f) {
        ClassKind::Fan { alpha1, alpha2, direction } => {
            assert!(-FRAC_PI_2 <= alpha1 && alpha1 < alpha2 && alpha2 <= FRAC_PI_2);
            assert_eq!(direction, Direction::Increasing);
        }
        k => panic!("{k:?}"),
    }
}

#[test]
fn sandwich_margins_persist_under_refinement() {
    let mut gaps = Vec::new();
    for h in ["0.04", "0.02"] {
        let f = run(&CAP.replace("h_max = 0.04", &format!("h_max = {h}")));
        let family = MuFamily::new(FRAC_PI_2, FRAC_PI_2, FRAC_PI_8).unwrap();
        let pair = family.barriers(barrier_minor_radius(&f).unwrap());
        let s = sandwich_check(&f, &family, &pair, None, 0.05).unwrap();
        assert!(s.valid(), "{}", s.to_text());
        gaps.push(s.min_gap_lower.min(s.min_gap_upper));
    }
    assert!(gaps.iter().all(|&g| g > 0.0));
    assert!((gaps[0] - gaps[1]).abs() < 0.1 * gaps[0], "{gaps:?}");
}

#[test]
fn continuity_modulus_shrinks_with_distance() {
    let f = run(TANH);
    let region = |x: Point| x[0] * x[0] + x[1] * x[1] <= 0.25;
    let omega: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&d| uniform_continuity_probe(&f, &region, d, Exec::Parallel)).collect();
    assert!(omega.windows(2).all(|w| w[1] <= w[0]), "{omega:?}");
    // The fan keeps the modulus bounded below: the limits jump across the corner.
    assert!(omega[2] > 0.1, "{omega:?}");
}
