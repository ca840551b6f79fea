//! Closed-form and enumerated reference values for every public operation.
//!
//! Values marked "brute force" are recomputed here by direct enumeration,
//! independently of the engine.

use std::cmp::Ordering;

use coarse_nw::builtins::{analytic_level, builtin, counterexample_s8, CounterexampleLayout, BUILTIN_NAMES};
use coarse_nw::export::check_column_monotonicity;
use coarse_nw::filtration::intervals_1d;
use coarse_nw::finite::CheckStatus;
use coarse_nw::system::DEFAULT_MAX_SAMPLES;
use coarse_nw::{
    build_flow_grid_system, build_grid_system, certify_point, compare_levels, critical_levels,
    definitional_omega, definitional_reachable, diagram, export_levels_csv, find_wandering_certificates,
    flow_level_matrix, flow_link_level, flow_nw_level, flow_robustness_level, integrate, level_matrix,
    link_level, nw_level, omega_membership, reachable_set, render_svg, robustness_level, summarize,
    validate_cost_space, verify_lemmas, Coords, CostSpace, DiagramDocument, Dynamics, Error, ExtendedLevel,
    FiniteInstance, LevelMatrix, LevelSummary, LoadedSystem, MapSystem, MatrixOptions, SystemSpecFile,
};

const H: f64 = 0.01;

fn indexed() -> MatrixOptions {
    MatrixOptions {
        window: None,
        spatial_index: true,
    }
}

fn grid(name: &str, lo: f64, hi: f64, h: f64, n: usize) -> MapSystem {
    build_grid_system(name, &[(lo, hi)], h, n, DEFAULT_MAX_SAMPLES).unwrap()
}

fn analyzed(sys: &dyn Dynamics) -> (LevelMatrix, LevelSummary) {
    let m = level_matrix(sys, None, &indexed()).unwrap();
    let s = summarize(&m, sys.default_tolerance()).unwrap();
    (m, s)
}

fn at(sys: &dyn Dynamics, x: f64) -> usize {
    sys.space().nearest_sample(&[x]).unwrap()
}

fn coord(sys: &dyn Dynamics, i: usize) -> f64 {
    sys.space().coords().unwrap().point(i)[0]
}

fn table(costs: Vec<f64>, map: Vec<usize>) -> MapSystem {
    let n = map.len();
    let h = 2 * n;
    MapSystem::tabulated("table", CostSpace::from_matrix(n, costs, None).unwrap(), map, h).unwrap()
}

/// a -> b -> c -> a, all off-diagonal costs 1.
fn three_cycle() -> MapSystem {
    table(vec![0., 1., 1., 1., 0., 1., 1., 1., 0.], vec![1, 2, 0])
}

/// a -> b, b -> b, c(a, b) = 1.
fn two_point() -> MapSystem {
    table(vec![0., 1., 1., 0.], vec![1, 1])
}

fn two_point_instance() -> FiniteInstance {
    FiniteInstance::new(vec![0., 1., 1., 0.], vec![1, 1], None).unwrap()
}

fn load(json: &str) -> LoadedSystem {
    SystemSpecFile::from_json(json).unwrap().load(DEFAULT_MAX_SAMPLES).unwrap()
}

// ---- grids and cost spaces

#[test]
fn f2_three_point_grid() {
    let sys = grid("f2", -1.0, 1.0, 1.0, 4);
    let xs: Vec<f64> = (0..3).map(|i| coord(&sys, i)).collect();
    assert_eq!(xs, [-1.0, 0.0, 1.0]);
    let coarse_nw::TrajectoryStore::Sampled(t) = sys.trajectories() else { panic!() };
    let images: Vec<f64> = (0..3).map(|z| t.point(z, 1)[0]).collect();
    assert_eq!(images, [-2.0, 0.0, 2.0]);
}

#[test]
fn half_map_single_fixed_sample() {
    let sys = grid("f_half", 0.0, 0.0, 1.0, 4);
    assert_eq!(sys.space().len(), 1);
    let coarse_nw::TrajectoryStore::Sampled(t) = sys.trajectories() else { panic!() };
    assert_eq!(t.steps(), 4);
    assert!((1..=4).all(|n| t.point(0, n) == [0.0]));
}

#[test]
fn default_map_grid_size() {
    assert_eq!(grid("f2", -5.0, 5.0, H, 64).space().len(), (10.0f64 / H).floor() as usize + 1);
}

#[test]
fn cost_space_validation() {
    let euclid = CostSpace::euclidean(Coords::from_points(&[vec![0.0], vec![0.5], vec![2.0]]).unwrap());
    assert!(validate_cost_space(&euclid).is_metric());

    let degenerate = CostSpace::from_matrix(2, vec![0., 0., 0., 0.], None).unwrap();
    assert_eq!(validate_cost_space(&degenerate).non_degenerate, Some((0, 1)));

    let triangle = CostSpace::from_matrix(3, vec![0., 1., 5., 1., 0., 1., 5., 1., 0.], None).unwrap();
    let r = validate_cost_space(&triangle);
    assert_eq!(r.triangle, Some((0, 1, 2)));
    assert!(r.non_degenerate.is_none() && r.symmetry.is_none());
}

#[test]
fn extended_level_order() {
    use ExtendedLevel as L;
    assert_eq!(compare_levels(&L::NEG_ZERO, &L::POS_ZERO), Ordering::Less);
    assert_eq!(compare_levels(&L::neg(2.0), &L::neg(1.0)), Ordering::Less);
    assert_eq!(compare_levels(&L::pos(1.0), &L::pos(f64::INFINITY)), Ordering::Less);
}

// ---- link levels

/// `min over z, n <= n_max of max(|x - z|, |2^n z - y|)`.
fn doubling_brute(x: f64, y: f64, starts: &[f64], n_max: u32) -> f64 {
    let mut best = f64::INFINITY;
    for &z in starts {
        let mut w = z;
        for _ in 0..n_max {
            w *= 2.0;
            best = best.min((x - z).abs().max((w - y).abs()));
        }
    }
    best
}

fn f2_fine() -> MapSystem {
    grid("f2", -2.0, 2.0, H, 64)
}

#[test]
fn f2_link_levels() {
    let sys = f2_fine();
    let starts: Vec<f64> = (0..sys.space().len()).map(|i| coord(&sys, i)).collect();
    let (l00, _) = link_level(&sys, at(&sys, 0.0), at(&sys, 0.0)).unwrap();
    assert_eq!(l00, 0.0);

    let (l10, w) = link_level(&sys, at(&sys, 1.0), at(&sys, 0.0)).unwrap();
    assert!((l10 - 2.0 / 3.0).abs() <= 2.0 * H, "{l10}");
    assert_eq!(w.steps, 1);
    assert!((coord(&sys, w.start_index) - 1.0 / 3.0).abs() <= 2.0 * H);
    assert!((l10 - doubling_brute(1.0, 0.0, &starts, 64)).abs() < 1e-12);

    let (l01, _) = link_level(&sys, at(&sys, 0.0), at(&sys, 1.0)).unwrap();
    assert!((l01 - doubling_brute(0.0, 1.0, &starts, 64)).abs() < 1e-12);
    // best grid start 0.03 doubles to 0.96
    assert!((l01 - 0.04).abs() < 1e-9, "{l01}");
}

/// Sample-grid starts cannot realise `z = 2^-n`; the attained value is 0.04.
#[test]
#[ignore = "not attainable with starts restricted to the 0.01 grid"]
fn f2_link_from_zero_to_one_strict() {
    let sys = f2_fine();
    let (l01, _) = link_level(&sys, at(&sys, 0.0), at(&sys, 1.0)).unwrap();
    assert!(l01 <= 2f64.powi(-64) + H, "{l01}");
}

#[test]
fn identity_matrix_is_min_max_cost() {
    let sys = grid("identity", -1.0, 1.0, 0.25, 3);
    let (m, _) = analyzed(&sys);
    for x in 0..9 {
        assert_eq!(m.level(x, x), 0.0);
        for y in 0..9 {
            let expect = (0..9)
                .map(|z| sys.space().cost(x, z).max(sys.space().cost(z, y)))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(m.level(x, y), expect);
        }
    }
}

#[test]
fn small_tables() {
    let cycle = three_cycle();
    let m = level_matrix(&cycle, None, &MatrixOptions::default()).unwrap();
    assert_eq!(m.level(0, 1), 0.0);
    let w = m.witness(0, 1).unwrap();
    assert_eq!((w.start_index, w.steps), (0, 1));
    assert_eq!(reachable_set(&m, 0, 0.0).unwrap(), [0, 1, 2]);
    assert_eq!(critical_levels(&m), [0.0]);

    let two = two_point();
    let m = level_matrix(&two, None, &MatrixOptions::default()).unwrap();
    assert_eq!([m.level(0, 0), m.level(1, 1), m.level(0, 1), m.level(1, 0)], [1.0, 0.0, 0.0, 1.0]);
    assert_eq!(reachable_set(&m, 1, 0.5).unwrap(), [1]);
    assert_eq!(reachable_set(&m, 0, f64::INFINITY).unwrap(), [0, 1]);
    assert_eq!(critical_levels(&m), [0.0, 1.0]);

    let id = grid("identity", -1.0, 1.0, 0.5, 2);
    let (m, _) = analyzed(&id);
    assert_eq!(critical_levels(&m), [0.0]);
}

#[test]
fn witnesses_are_exact_and_minimal() {
    let sys = grid("f_rep", -1.0, 1.0, 0.05, 12);
    let (m, _) = analyzed(&sys);
    let coarse_nw::TrajectoryStore::Sampled(t) = sys.trajectories() else { panic!() };
    let n = sys.space().len();
    for x in 0..n {
        for y in 0..n {
            let w = m.witness(x, y).unwrap();
            assert!((1..=12).contains(&w.steps));
            let start = sys.space().cost(x, w.start_index);
            let end = (t.point(w.start_index, w.steps)[0] - coord(&sys, y)).abs();
            assert_eq!(m.level(x, y), start.max(end));
        }
    }
    for (x, y, z, k) in [(3, 30, 17, 5), (40, 2, 11, 12), (20, 20, 0, 1)] {
        let probe = sys.space().cost(x, z).max((t.point(z, k)[0] - coord(&sys, y)).abs());
        assert!(m.level(x, y) <= probe);
    }
}

// ---- levels, robustness, slices

#[test]
fn nw_levels() {
    let f2 = grid("f2", -5.0, 5.0, H, 64);
    let m = level_matrix(&f2, Some(&[at(&f2, 3.0), at(&f2, 0.0)]), &indexed()).unwrap();
    assert!((nw_level(&m, at(&f2, 3.0)).unwrap() - 1.0).abs() <= 0.02);
    assert_eq!(nw_level(&m, at(&f2, 0.0)).unwrap(), 0.0);

    let sys = counterexample_s8(50, 50).unwrap();
    let p = CounterexampleLayout { n_max: 50, m_max: 50 }.p();
    let m = level_matrix(&sys, Some(&[p]), &MatrixOptions::default()).unwrap();
    assert!((nw_level(&m, p).unwrap() - 0.5).abs() <= 0.01);
}

#[test]
fn robustness_levels() {
    let rep = grid("f_rep", -5.0, 5.0, H, 64);
    let (m, s) = analyzed(&rep);
    let b = robustness_level(&m, rep.default_tolerance(), at(&rep, -1.0)).unwrap().unwrap();
    assert!((b - 1.0).abs() <= 0.02, "{b}");
    assert!(omega_membership(&s, at(&rep, -2.0), ExtendedLevel::neg(1.5)).unwrap());

    let id = grid("identity", -1.0, 1.0, 0.1, 4);
    let (m, _) = analyzed(&id);
    for x in 0..id.space().len() {
        assert_eq!(robustness_level(&m, id.default_tolerance(), x).unwrap(), Some(f64::INFINITY));
    }

    let f2 = f2_fine();
    let (m, s) = analyzed(&f2);
    let b0 = robustness_level(&m, f2.default_tolerance(), at(&f2, 0.0)).unwrap().unwrap();
    assert!(b0 <= 0.02, "{b0}");
    let three = at(&f2, 1.5);
    assert!(omega_membership(&s, three, ExtendedLevel::pos(0.5)).unwrap());
    assert!(!omega_membership(&s, three, ExtendedLevel::pos(0.45)).unwrap());
    assert!(omega_membership(&s, at(&f2, 0.0), ExtendedLevel::POS_ZERO).unwrap());
}

#[test]
fn f2_membership_at_three() {
    let f2 = grid("f2", -5.0, 5.0, H, 64);
    let (_, s) = analyzed(&f2);
    let x = at(&f2, 3.0);
    assert!(omega_membership(&s, x, ExtendedLevel::pos(1.0)).unwrap());
    assert!(!omega_membership(&s, x, ExtendedLevel::pos(0.9)).unwrap());
}

#[test]
fn half_map_slices() {
    let sys = grid("f_half", -5.0, 5.0, H, 64);
    let (_, s) = analyzed(&sys);
    let zero = at(&sys, 0.0);
    let levels = [
        ExtendedLevel::neg(1.0),
        ExtendedLevel::NEG_ZERO,
        ExtendedLevel::POS_ZERO,
        ExtendedLevel::pos(1.0),
    ];
    let slices = diagram(&s, &levels).unwrap();
    // {0} up to the gate lambda = |x|/3 <= 2h
    for slice in &slices[..3] {
        assert!(slice.members.contains(&zero));
        assert!(slice.members.iter().all(|&i| coord(&sys, i).abs() <= 6.0 * H + 1e-9), "{:?}", slice.members);
    }
    let iv = intervals_1d(sys.space(), &slices[3].members).unwrap();
    assert_eq!(iv.len(), 1);
    assert!((iv[0].0 + 3.0).abs() <= 2.0 * H && (iv[0].1 - 3.0).abs() <= 2.0 * H, "{iv:?}");
}

#[test]
fn identity_slices_are_everything() {
    let sys = grid("identity", -1.0, 1.0, 0.1, 4);
    let (_, s) = analyzed(&sys);
    let levels = [ExtendedLevel::neg(3.0), ExtendedLevel::NEG_ZERO, ExtendedLevel::POS_ZERO, ExtendedLevel::pos(0.2)];
    for slice in diagram(&s, &levels).unwrap() {
        assert_eq!(slice.members.len(), sys.space().len());
    }
}

#[test]
fn f2_negative_slices() {
    let sys = f2_fine();
    let (_, s) = analyzed(&sys);
    let zero = at(&sys, 0.0);
    let neg_zero = diagram(&s, &[ExtendedLevel::NEG_ZERO]).unwrap();
    assert!(neg_zero[0].members.contains(&zero));
    for delta in [2.0 * H, 0.05, 0.5, 1.0] {
        let slice = diagram(&s, &[ExtendedLevel::neg(delta)]).unwrap();
        assert!(slice[0].members.is_empty(), "delta {delta}: {:?}", slice[0].members);
    }
}

#[test]
fn analytic_levels_within_three_h() {
    for name in BUILTIN_NAMES {
        let b = builtin(name).unwrap();
        if !b.has_analytic_form() || b.default_durations.is_some() {
            continue;
        }
        let (lo, hi) = (-2.0, 2.0);
        let sys = grid(name, lo, hi, H, 64);
        let (_, s) = analyzed(&sys);
        for (x, lambda, _) in s.rows() {
            let c = coord(&sys, x);
            // interior: the optimal return start 4|x|/3 stays in the box
            if c.abs() <= 0.75 * hi {
                let a = analytic_level(name, c).unwrap();
                assert!((lambda - a).abs() <= 3.0 * H, "{name} at {c}: {lambda} vs {a}");
            }
        }
    }
}

#[test]
fn analytic_registry_values() {
    assert_eq!(analytic_level("f2", 3.0).unwrap(), 1.0);
    assert_eq!(analytic_level("flow_Z", -0.5).unwrap(), 0.5);
    assert_eq!(analytic_level("identity", 1.7).unwrap(), 0.0);
}

#[test]
fn builtin_evaluation() {
    assert_eq!(builtin("f2").unwrap().evaluate(&[3.0]).unwrap(), [6.0]);
    let rep = builtin("f_rep").unwrap();
    assert_eq!(rep.evaluate(&[-1.0]).unwrap(), [-1.0]);
    assert_eq!(rep.evaluate(&[1.0]).unwrap(), [2.0]);
    assert_eq!(rep.evaluate(&[0.0]).unwrap(), [0.0]);
    let att = builtin("flow_att").unwrap();
    assert_eq!(att.evaluate(&[2.0]).unwrap(), [-2.0]);
    assert_eq!(att.evaluate(&[-2.0]).unwrap(), [0.0]);
}

#[test]
fn counterexample_map() {
    let sys = counterexample_s8(5, 5).unwrap();
    let l = CounterexampleLayout { n_max: 5, m_max: 5 };
    let coords = sys.space().coords().unwrap();
    assert_eq!(sys.iterate_index(l.b(2, 1), 1), Some(l.p()));
    assert_eq!(coords.point(l.p()), [1.0, 0.0]);
    let img = sys.iterate_index(l.b(2, 3), 1).unwrap();
    assert_eq!(img, l.b(3, 2));
    assert_eq!(coords.point(img), [1.0 / 3.0, 0.5]);
}

#[test]
fn counterexample_return_levels_shrink() {
    let mut last = f64::INFINITY;
    for m in [10, 20, 50] {
        let sys = counterexample_s8(m, m).unwrap();
        let l = CounterexampleLayout { n_max: m, m_max: m };
        let targets: Vec<usize> = (1..=m).map(|n| l.a(n)).collect();
        let mat = level_matrix(&sys, Some(&targets), &MatrixOptions::default()).unwrap();
        assert!(mat.level(l.p(), l.p()) >= 0.49);
        let ret = (2..=m).map(|n| mat.level(l.a(n), l.p())).fold(0.0, f64::max);
        assert!(ret < last && ret <= 1.2 / m as f64, "m = {m}: {ret}");
        last = ret;
    }
}

// ---- flows

#[test]
fn integrator_reference_values() {
    let field = |name| match builtin(name).unwrap().rule {
        coarse_nw::builtins::Rule::Field(f) => f,
        _ => unreachable!(),
    };
    let z = integrate(&field("flow_Z"), &[1.0], 1.0, 0.01).unwrap();
    assert!((z.last().unwrap()[0] - (-1f64).exp()).abs() <= 1e-6);
    let y = integrate(&field("flow_Y"), &[1.0], 1.0, 0.01).unwrap();
    assert!((y.last().unwrap()[0] - 1f64.exp()).abs() <= 1e-5);
    let s = integrate(&field("flow_rep"), &[-0.7], 3.0, 0.01).unwrap();
    assert!(s.iter().all(|p| p[0] == -0.7));
}

fn flow(name: &str, lo: f64, hi: f64, h: f64, t: f64, t_max: f64) -> coarse_nw::SemiflowSystem {
    build_flow_grid_system(name, &[(lo, hi)], h, 0.01, t, t_max, DEFAULT_MAX_SAMPLES).unwrap()
}

#[test]
fn flow_link_reference_values() {
    let z = flow("flow_Z", -3.0, 3.0, H, 2.0, 20.0);
    let (l, _) = flow_link_level(&z, at(&z, 1.0), at(&z, 1.0), 2.0).unwrap();
    assert!((l - 1f64.tanh()).abs() <= 0.02, "{l}");
    let (l, _) = flow_link_level(&z, at(&z, 1.0), at(&z, 0.0), 2.0).unwrap();
    assert!(l <= (-20f64).exp() + H);

    let y = flow("flow_Y", -3.0, 3.0, H, 10.0, 20.0);
    let (l, _) = flow_link_level(&y, at(&y, 0.0), at(&y, 0.0), 10.0).unwrap();
    assert_eq!(l, 0.0);
    assert_eq!(flow_nw_level(&y, at(&y, 0.0)).unwrap(), 0.0);

    let z10 = flow("flow_Z", -3.0, 3.0, H, 10.0, 20.0);
    assert!((flow_nw_level(&z10, at(&z10, 1.0)).unwrap() - 1.0).abs() <= 0.03);
}

/// `z = 0` is a fixed point at distance `|x|`, so the level is at most 1.
#[test]
fn expanding_flow_level_at_one() {
    let y = flow("flow_Y", -3.0, 3.0, H, 10.0, 20.0);
    let l = flow_nw_level(&y, at(&y, 1.0)).unwrap();
    assert!((l - 1.0).abs() < 1e-12, "{l}");
}

#[test]
#[ignore = "not attainable: the fixed start 0 bounds the level by |x| = 1"]
fn expanding_flow_level_at_one_strict() {
    let y = flow("flow_Y", -3.0, 3.0, H, 10.0, 20.0);
    assert!(flow_nw_level(&y, at(&y, 1.0)).unwrap() > 1.5);
}

#[test]
fn flow_robustness_reference_values() {
    // the escape from -1 to y > 1 starts at y e^-r, which a 0.02 grid
    // resolves only for short durations
    let rep = flow("flow_rep", -3.0, 3.0, 0.02, 1.0, 10.0);
    let m = flow_level_matrix(&rep, 1.0, None, true).unwrap();
    let b = flow_robustness_level(&rep, &m, at(&rep, -1.0)).unwrap().unwrap();
    assert!((b - 1.0).abs() <= 0.03, "{b}");

    let z = flow("flow_Z", -3.0, 3.0, 0.02, 10.0, 20.0);
    let m = flow_level_matrix(&z, 10.0, None, true).unwrap();
    assert_eq!(flow_robustness_level(&z, &m, at(&z, 0.0)).unwrap(), Some(f64::INFINITY));
}

#[test]
fn flow_slices_are_nested() {
    let z = flow("flow_Z", -1.0, 1.0, 0.02, 5.0, 10.0);
    let m = flow_level_matrix(&z, 5.0, None, true).unwrap();
    let s = summarize(&m, z.default_tolerance()).unwrap();
    let levels: Vec<ExtendedLevel> = [1.0, 0.5, 0.1]
        .map(ExtendedLevel::neg)
        .into_iter()
        .chain([ExtendedLevel::NEG_ZERO, ExtendedLevel::POS_ZERO])
        .chain([0.1, 0.5, 1.0].map(ExtendedLevel::pos))
        .collect();
    let slices = diagram(&s, &levels).unwrap();
    for w in slices.windows(2) {
        assert!(w[0].members.iter().all(|x| w[1].members.contains(x)));
    }
}

// ---- wandering certificates

#[test]
fn certificates() {
    let f2 = f2_fine();
    let (m, _) = analyzed(&f2);
    let certs = find_wandering_certificates(&m, 0.3).unwrap();
    let (x, z) = (at(&f2, 0.0), at(&f2, 1.0));
    let c = certs.iter().find(|c| c.x == x && c.z == z).expect("certificate from 0 to 1");
    assert!((c.gap - (2.0 / 3.0 - 0.04)).abs() <= 2.0 * H, "{c:?}");
    assert!(certs.iter().all(|c| c.gap >= 0.3 && c.gap > 0.0));
    let cert = certify_point(&m, x, z, 0.5).unwrap();
    assert!(cert.certified);

    let id = grid("identity", -1.0, 1.0, 0.1, 4);
    let (m, _) = analyzed(&id);
    for gap in [1e-9, 0.05, 1.0] {
        assert!(find_wandering_certificates(&m, gap).unwrap().is_empty());
    }
    assert!(!certify_point(&m, 3, 3, 0.1).unwrap().certified);

    let cycle = level_matrix(&three_cycle(), None, &MatrixOptions::default()).unwrap();
    assert!(find_wandering_certificates(&cycle, 0.1).unwrap().is_empty());

    let two = level_matrix(&two_point(), None, &MatrixOptions::default()).unwrap();
    assert!(matches!(certify_point(&two, 1, 0, 0.5), Err(Error::EpsPrimeTooSmall { .. })));
    assert!(!certify_point(&two, 1, 0, 1.5).unwrap().certified);
}

#[test]
fn counterexample_has_certificate_at_p() {
    let sys = counterexample_s8(50, 50).unwrap();
    let p = CounterexampleLayout { n_max: 50, m_max: 50 }.p();
    let m = level_matrix(&sys, Some(&(0..50).collect::<Vec<_>>()), &MatrixOptions::default()).unwrap();
    let certs = find_wandering_certificates(&m, coarse_nw::wandering::TABLE_MIN_GAP).unwrap();
    assert!(certs.iter().any(|c| c.x == p), "{} certificates", certs.len());
}

#[test]
fn symmetric_permutations_have_no_certificates() {
    let mut checked = 0;
    for seed in 0..4000 {
        let inst = FiniteInstance::random(seed, 2..=8);
        if !(inst.is_permutation() && inst.is_symmetric()) {
            continue;
        }
        let m = level_matrix(&inst.system(inst.horizon()).unwrap(), None, &MatrixOptions::default()).unwrap();
        for gap in [1e-9, 0.5, 2.0] {
            assert!(find_wandering_certificates(&m, gap).unwrap().is_empty(), "seed {seed}");
        }
        checked += 1;
    }
    assert!(checked >= 100, "{checked}");
}

#[test]
fn certificates_stable_under_refinement() {
    let coarse = grid("f2", -2.0, 2.0, 0.02, 64);
    let fine = grid("f2", -2.0, 2.0, 0.01, 64);
    let (mc, _) = analyzed(&coarse);
    let (mf, _) = analyzed(&fine);
    let pairs = [(0.0, 1.0), (0.5, 1.0), (-0.5, -1.5), (0.25, 2.0)];
    for (x, z) in pairs {
        let c = (mc.level(at(&coarse, x), at(&coarse, z)), mc.level(at(&coarse, z), at(&coarse, x)));
        let f = (mf.level(at(&fine, x), at(&fine, z)), mf.level(at(&fine, z), at(&fine, x)));
        let (eps_c, gap_c) = (c.0, c.1 - c.0);
        let (eps_f, gap_f) = (f.0, f.1 - f.0);
        assert!((eps_c - eps_f).abs() <= 4.0 * 0.02, "{x},{z}: eps {eps_c} vs {eps_f}");
        assert!((gap_c - gap_f).abs() <= 4.0 * 0.02, "{x},{z}: gap {gap_c} vs {gap_f}");
    }
}

// ---- finite oracle

#[test]
fn definitional_sets() {
    let cycle = FiniteInstance::new(vec![0., 1., 1., 1., 0., 1., 1., 1., 0.], vec![1, 2, 0], None).unwrap();
    assert_eq!(definitional_reachable(&cycle, 0, 0.0), [0, 1, 2]);
    assert_eq!(definitional_omega(&cycle, ExtendedLevel::neg(3.0)), [0, 1, 2]);

    let two = two_point_instance();
    assert_eq!(definitional_reachable(&two, 0, 0.0), [1]);
    assert_eq!(definitional_reachable(&two, 0, f64::INFINITY), [0, 1]);
    assert_eq!(definitional_omega(&two, ExtendedLevel::pos(0.5)), [1]);
    assert_eq!(definitional_omega(&two, ExtendedLevel::pos(1.0)), [0, 1]);
    assert_eq!(definitional_omega(&two, ExtendedLevel::neg(5.0)), [1]);
}

#[test]
fn lemma_reports() {
    let seeded = FiniteInstance::random(42, 6..=6);
    assert_eq!(seeded.size(), 6);
    assert!(verify_lemmas(&seeded, None).unwrap().is_clean());

    let degenerate = FiniteInstance::new(vec![0., 0., 1., 0., 0., 1., 1., 1., 0.], vec![1, 2, 2], None).unwrap();
    let r = verify_lemmas(&degenerate, None).unwrap();
    assert!(r.is_clean());
    let orbit = r.checks.iter().find(|c| c.name == "cost-orbit").unwrap();
    assert!(matches!(orbit.status, CheckStatus::Skipped(_)));

    let r = verify_lemmas(&two_point_instance(), None).unwrap();
    for name in ["filtration", "reduction-equivalence"] {
        let c = r.checks.iter().find(|c| c.name == name).unwrap();
        assert_eq!(c.status, CheckStatus::Passed, "{name}");
    }
}

#[test]
fn negative_zero_is_periodic_zero_return_set() {
    for seed in 0..300 {
        let inst = FiniteInstance::random(seed, 2..=7);
        let m = level_matrix(&inst.system(inst.horizon()).unwrap(), None, &MatrixOptions::default()).unwrap();
        let expect: Vec<usize> = (0..inst.size())
            .filter(|&x| {
                let orbit = inst.forward_orbit(x);
                orbit.contains(&x) && orbit.iter().all(|&z| m.level(z, x) == 0.0)
            })
            .collect();
        let got = definitional_omega(&inst, ExtendedLevel::NEG_ZERO);
        if inst.is_non_degenerate() {
            assert_eq!(got, expect, "seed {seed}");
        }
        if inst.is_permutation() && inst.is_non_degenerate() {
            assert_eq!(got, definitional_omega(&inst, ExtendedLevel::POS_ZERO), "seed {seed}");
        }
    }
}

#[test]
fn doubled_horizon_changes_nothing() {
    for seed in 0..100 {
        let inst = FiniteInstance::random(seed, 2..=8);
        let a = level_matrix(&inst.system(inst.horizon()).unwrap(), None, &MatrixOptions::default()).unwrap();
        let b = level_matrix(&inst.system(2 * inst.horizon()).unwrap(), None, &MatrixOptions::default()).unwrap();
        assert_eq!(a.levels(), b.levels(), "seed {seed}");
    }
}

// ---- exports

#[test]
fn csv_rows() {
    let id = grid("identity", -1.0, 1.0, 1.0, 2);
    let (_, s) = analyzed(&id);
    let csv = export_levels_csv(&s, id.space());
    assert_eq!(csv, "index,coord_0,lambda,beta\n0,-1,0,inf\n1,0,0,inf\n2,1,0,inf\n");

    let f2 = grid("f2", -5.0, 5.0, H, 64);
    let (_, s) = analyzed(&f2);
    let csv = export_levels_csv(&s, f2.space());
    let row = csv.lines().find(|l| l.split(',').nth(1) == Some("3")).unwrap();
    let f: Vec<&str> = row.split(',').collect();
    assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() <= 0.02);
    assert_eq!(f[3], "");

    let half = grid("f_half", -5.0, 5.0, H, 64);
    let (_, s) = analyzed(&half);
    let csv = export_levels_csv(&s, half.space());
    assert!(csv.lines().any(|l| l.ends_with(",0,0,inf")));
}

fn document(spec: &str, levels: &[ExtendedLevel]) -> DiagramDocument {
    let sys = load(spec);
    let a = sys.analyze(false).unwrap();
    let slices = diagram(&a.summary, levels).unwrap();
    DiagramDocument::new(sys.meta_with(&a), &a.summary, &slices, sys.dynamics().space()).unwrap()
}

#[test]
fn level_tokens() {
    let j = |l: ExtendedLevel| serde_json::to_string(&l).unwrap();
    assert_eq!(j(ExtendedLevel::NEG_ZERO), "\"-0\"");
    assert_eq!(j(ExtendedLevel::POS_ZERO), "\"+0\"");
    assert_eq!(j(ExtendedLevel::pos(f64::INFINITY)), "\"inf\"");
}

#[test]
fn repelling_slice_intervals() {
    let doc = document(
        r#"{"kind": "map", "source": {"builtin": "f_rep"}, "grid": {"box": [[-5, 5]], "h": 0.05}, "horizon": {"n_max": 32}}"#,
        &[ExtendedLevel::neg(1.0)],
    );
    let iv = doc.slices[0].intervals.as_ref().unwrap();
    assert_eq!(iv.len(), 1);
    // strict boundary: -1 itself has beta = 1
    assert!((iv[0][0] + 5.0).abs() < 1e-9 && (iv[0][1] + 1.0).abs() <= 2.0 * 0.05, "{iv:?}");
}

#[test]
fn svg_documents() {
    let levels: Vec<ExtendedLevel> = [1.0, 0.5]
        .map(ExtendedLevel::neg)
        .into_iter()
        .chain([ExtendedLevel::NEG_ZERO, ExtendedLevel::POS_ZERO])
        .chain([0.5, 1.0].map(ExtendedLevel::pos))
        .collect();
    let f2 = document(
        r#"{"kind": "map", "source": {"builtin": "f2"}, "grid": {"box": [[-3, 3]], "h": 0.05}, "horizon": {"n_max": 32}}"#,
        &levels,
    );
    check_column_monotonicity(&f2).unwrap();
    let sizes: Vec<usize> = f2.slices.iter().map(|s| s.members.len()).collect();
    assert_eq!(&sizes[..2], [0, 0]);
    // {0} up to the gate lambda = |x|/3 <= 2h
    let neg_zero = f2.slices[2].intervals.as_ref().unwrap();
    assert!(neg_zero.iter().any(|iv| iv[0] <= 0.0 && iv[1] >= 0.0));
    assert!(neg_zero.iter().all(|iv| iv[0] >= -6.0 * 0.05 - 1e-9 && iv[1] <= 6.0 * 0.05 + 1e-9), "{neg_zero:?}");
    let svg = render_svg(&f2, 400, 300).unwrap();
    assert!(svg.contains("<rect") && svg.ends_with("</svg>\n"));

    let z = document(
        r#"{"kind": "semiflow", "source": {"builtin": "flow_Z"}, "grid": {"box": [[-1, 1]], "h": 0.05}, "horizon": {"dt": 0.05, "t_min": 4, "t_max": 8}}"#,
        &levels,
    );
    check_column_monotonicity(&z).unwrap();
    for s in &z.slices[..3] {
        assert_eq!(s.intervals.as_ref().unwrap().len(), 1);
    }
    let pos_half = z.slices[4].intervals.as_ref().unwrap();
    assert!((pos_half[0][0] + 0.5).abs() <= 0.05 && (pos_half[0][1] - 0.5).abs() <= 0.05, "{pos_half:?}");

    let t = document(
        r#"{"kind": "semiflow", "source": {"builtin": "translation_flow"}, "grid": {"box": [[-1, 1]], "h": 0.1}, "horizon": {"dt": 0.1, "t_min": 4, "t_max": 6}}"#,
        &levels,
    );
    // lambda = T/2 = 2 exceeds every requested level
    assert!(t.slices.iter().all(|s| s.members.is_empty()));
    let svg = render_svg(&t, 400, 300).unwrap();
    assert!(!svg.contains("fill=\"black\" stroke=\"none\">\n<rect"));
}

#[test]
fn auto_tolerance() {
    let grid_sys = load(r#"{"kind": "map", "source": {"builtin": "f2"}, "grid": {"box": [[-1, 1]], "h": 0.1}}"#);
    assert!((grid_sys.tau - 0.2).abs() < 1e-12);
    let tab = load(r#"{"kind": "map", "source": {"table": {"cost": [[0, 1], [1, 0]], "map": [1, 0]}}}"#);
    assert_eq!(tab.tau, 0.0);
}
