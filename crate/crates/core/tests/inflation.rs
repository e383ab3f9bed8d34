use proptest::prelude::*;
use trinet_core::dists::{TripartiteDistribution, Visibility};
use trinet_core::error::Error;
use trinet_core::inflation::*;

fn vis(n: i64, d: i64) -> Visibility {
    Visibility::new(n, d).unwrap()
}

fn reduced(n: usize, target: &ExactTarget) -> InflationLP {
    assemble_reduced_lp(&build_scenario(n).unwrap(), target, DEFAULT_MAX_INJECTABLE).unwrap()
}

fn product(pa: f64, pb: f64, pc: f64) -> TripartiteDistribution {
    let mut p = [0.0; 8];
    for (i, x) in p.iter_mut().enumerate() {
        let f = |q: f64, bit: usize| if i >> bit & 1 == 0 { q } else { 1.0 - q };
        *x = f(pa, 2) * f(pb, 1) * f(pc, 0);
    }
    TripartiteDistribution::new(p).unwrap()
}

fn feasible_point(lp: &InflationLP) -> Vec<f64> {
    match solve(lp, &SimplexOptions::default()).unwrap() {
        Verdict::Feasible { x, residual } => {
            assert!(residual <= 1e-8, "residual {residual}");
            assert!(x.iter().all(|&v| v >= -1e-10));
            x
        }
        Verdict::Infeasible(_) => panic!("expected a feasible LP"),
    }
}

#[test]
fn below_known_local_region_is_feasible() {
    let lp = reduced(2, &exact_w_target(&vis(11, 20)));
    let x = feasible_point(&lp);
    // the aligned triangle of the expanded event distribution reproduces W
    let events = lp.expand(&x);
    assert!((events.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let w = trinet_core::dists::w_dist(&vis(11, 20));
    let s = build_scenario(2).unwrap();
    let parties = [0usize, 4, 8]; // A_00, B_00, C_00
    let mut marg = [0.0; 8];
    for (e, p) in events.iter().enumerate() {
        let key = parties.iter().fold(0, |acc, &q| (acc << 1) | ((e >> (s.party_count() - 1 - q)) & 1));
        marg[key] += p;
    }
    for (a, b) in marg.iter().zip(w.probs()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn noiseless_w_is_infeasible_with_exact_certificate() {
    let lp = reduced(2, &exact_w_target(&vis(1, 1)));
    let Verdict::Infeasible(mut cert) = solve(&lp, &SimplexOptions::default()).unwrap() else {
        panic!("W_1 should be detected");
    };
    assert!(cert.verified);
    assert!(cert.make_exact(&lp));
    assert!(verify_certificate(&lp, &cert, true));
    // the same multipliers do not refute a feasible right-hand side
    let other = reduced(2, &exact_w_target(&vis(11, 20)));
    let plain = Certificate::new(cert.y.clone());
    assert!(!verify_certificate(&other, &plain, false));
    assert!(!verify_certificate(&other, &plain, true));
}

#[test]
fn zero_certificate_is_rejected() {
    let lp = reduced(2, &exact_w_target(&vis(1, 1)));
    assert!(!verify_certificate(&lp, &Certificate::new(vec![0.0; lp.rows.len()]), false));
    assert!(!verify_certificate(&lp, &Certificate::new(vec![0.0; lp.rows.len()]), true));
}

#[test]
fn reduced_and_unreduced_verdicts_agree() {
    let s = build_scenario(2).unwrap();
    for v in [vis(11, 20), vis(1, 1)] {
        let t = exact_w_target(&v);
        let red = solve(&assemble_reduced_lp(&s, &t, 6).unwrap(), &SimplexOptions::default()).unwrap();
        let full = assemble_lp(&s, &t, 6).unwrap();
        assert!(full.rows.iter().any(|r| matches!(r.kind, RowKind::Symmetry { .. })));
        let unred = solve(&full.without_symmetry_rows(), &SimplexOptions::default()).unwrap();
        assert_eq!(
            matches!(red, Verdict::Feasible { .. }),
            matches!(unred, Verdict::Feasible { .. }),
            "verdicts differ at v = {v}"
        );
    }
}

#[test]
fn detection_is_monotone_on_a_grid() {
    let mut seen_infeasible = false;
    for k in 0..=10 {
        let v = vis(55 + 45 * k / 10, 100);
        let infeasible = matches!(w_verdict(2, &v, 6).unwrap(), Verdict::Infeasible(_));
        assert!(!seen_infeasible || infeasible, "feasible again at v = {v}");
        seen_infeasible |= infeasible;
    }
    assert!(seen_infeasible);
}

#[test]
fn bisection_brackets_the_level_two_boundary() {
    let (lo, hi) = bisect_threshold(2, &vis(11, 20), &vis(1, 1), 10, 6).unwrap();
    assert!(hi.value() - lo.value() < 5e-4);
    assert!(matches!(w_verdict(2, &lo, 6).unwrap(), Verdict::Feasible { .. }));
    assert!(matches!(w_verdict(2, &hi, 6).unwrap(), Verdict::Infeasible(_)));
    // the level-2 boundary lies above the region with known local models
    assert!(lo.value() > 0.5966);
    assert!(bisect_threshold(2, &vis(1, 1), &vis(1, 1), 3, 6).is_err());
}

#[test]
fn infeasible_lower_end_is_rejected() {
    let err = bisect_threshold(2, &vis(95, 100), &vis(1, 1), 4, 6).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn level_three_is_construction_only() {
    let s = build_scenario(3).unwrap();
    assert_eq!(s.party_count(), 27);
    let t = exact_w_target(&vis(1, 2));
    assert!(matches!(assemble_reduced_lp(&s, &t, 6), Err(Error::ScaleGuard(_))));
    assert!(matches!(assemble_lp(&s, &t, 6), Err(Error::ScaleGuard(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn product_distributions_are_feasible(pa in 0.0f64..1.0, pb in 0.0f64..1.0, pc in 0.0f64..1.0) {
        let lp = reduced(2, &exact_target(&product(pa, pb, pc)));
        feasible_point(&lp);
    }

    #[test]
    fn level_one_is_always_feasible(raw in proptest::array::uniform8(0.0f64..1.0)) {
        let s: f64 = raw.iter().sum::<f64>() + 1e-3;
        let p = TripartiteDistribution::new(raw.map(|x| (x + 1e-3 / 8.0) / s)).unwrap();
        let lp = reduced(1, &exact_target(&p));
        let x = feasible_point(&lp);
        for (a, b) in x.iter().zip(p.probs()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
