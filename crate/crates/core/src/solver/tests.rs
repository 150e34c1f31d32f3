use super::*;
use crate::mesh::generate_mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

fn wedge(alpha: f64, h_max: f64, g: f64) -> (WedgeDomain, Arc<Mesh>) {
    let d = WedgeDomain::straight(alpha, 1.0).unwrap();
    let m = generate_mesh(&d, h_max, g).unwrap();
    (d, Arc::new(m))
}

fn walls(gamma: f64, outer: f64) -> BoundarySpec {
    BoundarySpec {
        side_plus: BoundaryCondition::capillary(gamma),
        side_minus: BoundaryCondition::capillary(gamma),
        outer_arc: BoundaryCondition::dirichlet(outer),
    }
}

fn cap_problem(h_max: f64) -> ScalarField {
    let (d, m) = wedge(FRAC_PI_3, h_max, 1.0);
    let h = MeanCurvatureSpec::Constant { h: -0.5 };
    solve(&d, m, &h, &walls(FRAC_PI_2, 3f64.sqrt()), &SolverOptions::default()).unwrap()
}

fn cap_error(f: &ScalarField) -> f64 {
    f.mesh()
        .vertices
        .iter()
        .zip(f.values())
        .map(|(x, v)| (v - (4.0 - x[0] * x[0] - x[1] * x[1]).sqrt()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_solves_orthogonal_contact() {
    let (d, m) = wedge(FRAC_PI_2, 0.1, 1.0);
    let f = solve(&d, m, &MeanCurvatureSpec::default(), &walls(FRAC_PI_2, 0.7), &SolverOptions::default()).unwrap();
    assert!(f.diagnostics.residual_norm <= 1e-10);
    assert!(f.values().iter().all(|v| (v - 0.7).abs() < 1e-12));
    assert!((f.graph_area() - FRAC_PI_2).abs() < 1e-10 * 100.0 || (f.graph_area() - f.mesh().total_area()).abs() < 1e-10);
}

#[test]
fn spherical_cap_matches_closed_form() {
    let f = cap_problem(0.02);
    assert!(f.diagnostics.residual_norm <= 1e-10);
    let err = cap_error(&f);
    assert!(err <= 1e-3, "L-infinity error {err}");
    // Closed-form area of the cap over the sector: 2 alpha R (R - sqrt(R^2 - 1)).
    let exact = 2.0 * FRAC_PI_3 * 2.0 * (2.0 - 3f64.sqrt());
    assert!((f.graph_area() - exact).abs() <= 2e-3, "area {} vs {exact}", f.graph_area());
    let (m1, m2) = f.empirical_bounds();
    assert!((m1 - 2.0).abs() <= 1e-3);
    assert_eq!(m2, 0.5);
    let defect = f.capillary_flux_defect(BoundaryTag::SideMinus).unwrap();
    assert!(defect <= 1e-9, "flux defect {defect}");
    assert!(f.capillary_flux_defect(BoundaryTag::OuterArc).is_none());
}

#[test]
fn cap_error_converges_at_second_order() {
    let e1 = cap_error(&cap_problem(0.08));
    let e2 = cap_error(&cap_problem(0.04));
    assert!(e1 / e2 >= 3.0, "ratio {}", e1 / e2);
}

#[test]
fn flat_and_tilted_graph_areas() {
    let (d, m) = wedge(0.9, 0.1, 1.0);
    let flat = ScalarField::interpolate(&d, m, &MeanCurvatureSpec::default(), &walls(FRAC_PI_2, 3.0), |_| 3.0).unwrap();
    assert!((flat.graph_area() - flat.mesh().total_area()).abs() < 1e-12);
    // Polygonal mesh area converges to alpha delta*^2.
    assert!((flat.graph_area() - 0.9).abs() < 5e-3);
    assert_eq!(flat.empirical_bounds(), (3.0, 0.0));

    for h in [0.1, 0.05] {
        let (d, m) = wedge(FRAC_PI_2, h, 1.0);
        let tilted = ScalarField::interpolate(&d, m, &MeanCurvatureSpec::default(), &walls(FRAC_PI_2, 0.0), |x| x[0]).unwrap();
        let exact_on_mesh = 2f64.sqrt() * tilted.mesh().total_area();
        assert!((tilted.graph_area() - exact_on_mesh).abs() < 1e-12);
    }
}

#[test]
fn energy_gradient_matches_residual() {
    let (d, m) = wedge(1.0, 0.12, 1.0);
    let h = MeanCurvatureSpec::Linear { kappa: 0.8, h0: -0.3 };
    let bc = BoundarySpec {
        side_plus: BoundaryCondition::capillary(1.1),
        side_minus: BoundaryCondition::Capillary { gamma: Profile::tanh_jump(0.2, 0.6, 2.0, 0.5, Variable::Arclength) },
        outer_arc: BoundaryCondition::dirichlet(0.2),
    };
    let base = ScalarField::interpolate(&d, m, &h, &bc, |x| 0.3 * x[0] * x[0] - x[1] + 0.1).unwrap();
    let r = base.residual();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        // Random smooth direction vanishing on Dirichlet nodes.
        let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let dir: Vec<f64> = base
            .mesh()
            .vertices
            .iter()
            .enumerate()
            .map(|(v, x)| {
                if base.is_dirichlet(v) {
                    0.0
                } else {
                    c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * (3.0 * x[1]).sin()
                }
            })
            .collect();
        let eps = 1e-5;
        let shifted = |s: f64| {
            let vals = base.values().iter().zip(&dir).map(|(f, p)| f + s * p).collect();
            base.with_values(vals).energy()
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let exact: f64 = r.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "fd {fd} vs {exact}");
    }
}

#[test]
fn energy_descends_over_newton_steps() {
    let (d, m) = wedge(1.2, 0.08, 1.0);
    let bc = BoundarySpec {
        side_plus: BoundaryCondition::capillary(1.3),
        side_minus: BoundaryCondition::capillary(1.0),
        outer_arc: BoundaryCondition::Dirichlet { value: Profile::tanh_jump(0.1, -1.0, 1.0, 0.0, Variable::Angle) },
    };
    let f = solve(&d, m, &MeanCurvatureSpec::Constant { h: 0.2 }, &bc, &SolverOptions::default()).unwrap();
    let e = &f.diagnostics.energy_history;
    assert!(e.len() >= 2);
    for w in e.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
    }
    assert!(f.residual_norm() <= 1e-10);
}

#[test]
fn dirichlet_nodes_take_data_exactly() {
    let (d, m) = wedge(FRAC_PI_2, 0.1, 1.0);
    let profile = Profile::tanh_jump(0.05, -1.0, 1.0, 0.0, Variable::Angle);
    let bc = BoundarySpec {
        side_plus: BoundaryCondition::dirichlet(1.0),
        side_minus: BoundaryCondition::capillary(FRAC_PI_2),
        outer_arc: BoundaryCondition::Dirichlet { value: profile.clone() },
    };
    let f = solve(&d, m.clone(), &MeanCurvatureSpec::default(), &bc, &SolverOptions::default()).unwrap();
    for (v, _) in m.boundary_nodes(BoundaryTag::SidePlus) {
        assert_eq!(f.values()[v], 1.0);
    }
    for (v, s) in m.boundary_nodes(BoundaryTag::OuterArc) {
        if !f.is_dirichlet(v) || m.boundary_nodes(BoundaryTag::SidePlus).iter().any(|n| n.0 == v) {
            continue;
        }
        assert_eq!(f.values()[v], profile.eval(&d, m.vertices[v], s));
    }
}

#[test]
fn linear_curvature_bounds_chase_definition() {
    let (d, m) = wedge(1.0, 0.1, 1.0);
    let h = MeanCurvatureSpec::Linear { kappa: 1.0, h0: 0.0 };
    let bc = BoundarySpec {
        side_plus: BoundaryCondition::capillary(1.2),
        side_minus: BoundaryCondition::capillary(1.4),
        outer_arc: BoundaryCondition::capillary(FRAC_PI_2),
    };
    let f = solve(&d, m, &h, &bc, &SolverOptions::default()).unwrap();
    let (m1, m2) = f.empirical_bounds();
    assert!(m1 > 0.0);
    assert_eq!(m2, m1);
}

#[test]
fn ill_posed_and_invalid_inputs_are_rejected() {
    let (d, m) = wedge(1.0, 0.2, 1.0);
    let all_cap = BoundarySpec {
        side_plus: BoundaryCondition::capillary(1.0),
        side_minus: BoundaryCondition::capillary(1.0),
        outer_arc: BoundaryCondition::capillary(1.0),
    };
    let opts = SolverOptions::default();
    assert!(matches!(solve(&d, m.clone(), &MeanCurvatureSpec::default(), &all_cap, &opts), Err(SolveError::IllPosed(_))));
    let negative = MeanCurvatureSpec::Linear { kappa: -1.0, h0: 0.0 };
    assert!(matches!(solve(&d, m.clone(), &negative, &walls(1.0, 0.0), &opts), Err(SolveError::IllPosed(_))));
    assert!(matches!(
        solve(&d, m.clone(), &MeanCurvatureSpec::default(), &walls(4.0, 0.0), &opts),
        Err(SolveError::InvalidBoundaryData(_))
    ));
    let bad = SolverOptions { damping: 0.0, ..SolverOptions::default() };
    assert!(matches!(solve(&d, m, &MeanCurvatureSpec::default(), &walls(1.0, 0.0), &bad), Err(SolveError::InvalidOptions(_))));
}

#[test]
fn concus_finn_violation_is_flagged() {
    for h in [0.1, 0.05] {
        let (d, m) = wedge(FRAC_PI_6, h, 1.0);
        let result = solve(&d, m, &MeanCurvatureSpec::default(), &walls(FRAC_PI_6, 0.0), &SolverOptions::default());
        let err = result.expect_err("no discrete minimizer exists");
        let best = err.best().unwrap();
        assert!(best.diagnostics.has_flag(SolverFlag::UnboundedCornerSuspected));
        let sup = &best.diagnostics.sup_history;
        assert!(sup.last().unwrap() / sup[1].max(1e-300) >= 2.0, "sup history {sup:?}");
    }
    // Admissible corner angles do not raise the flag.
    let (d, m) = wedge(FRAC_PI_6, 0.1, 1.0);
    let ok = solve(&d, m, &MeanCurvatureSpec::default(), &walls(PI / 2.2, 0.0), &SolverOptions::default()).unwrap();
    assert!(!ok.diagnostics.has_flag(SolverFlag::UnboundedCornerSuspected));
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let run = |exec| {
        let (d, m) = wedge(FRAC_PI_3, 0.05, 1.0);
        let opts = SolverOptions { exec, ..SolverOptions::default() };
        solve(&d, m, &MeanCurvatureSpec::Constant { h: -0.5 }, &walls(1.2, 1.0), &opts).unwrap()
    };
    let a = run(Exec::Sequential);
    let b = run(Exec::Parallel);
    assert_eq!(a.values(), b.values());
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn csv_export_round_trips_values() {
    let f = cap_problem(0.1);
    let csv = f.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("x1,x2,f"));
    let parsed: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(parsed, f.values());
    let diag: toml::Table = toml::from_str(&f.diagnostics_text()).unwrap();
    assert_eq!(diag["schema"].as_integer(), Some(1));
}
