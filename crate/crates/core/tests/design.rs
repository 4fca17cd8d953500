use std::f64::consts::PI;

use barrier_cpg::design::{
    assign_by_gains, assign_by_phase_bias, assign_by_weights_and_gains, construct_multi_pattern_couplings,
    designate_candidate_edges, design_weights, excluded_classes, minimal_edge_subgraph, multi_pattern_feasible,
    saturate_for_uniqueness, search_weights_for_sign, DesignChoice, DesignError, TargetPattern,
    DEFAULT_MAX_ALPHA,
};
use barrier_cpg::pattern::{PatternAnalyzer, DEFAULT_BUDGET};
use barrier_cpg::{presets, BarrierFunction, Digraph, NetworkModel};
use proptest::prelude::*;

fn edge_list(g: &Digraph) -> Vec<(usize, usize)> {
    g.edges().iter().map(|e| (e.src, e.dst)).collect()
}

#[test]
fn gains_for_nine_node_target() {
    let m = presets::nine_node().unwrap();
    let sol = assign_by_gains(
        m.graph(),
        m.omega(),
        m.phi(),
        &BarrierFunction::prototype(),
        &presets::nine_node_target(),
    )
    .unwrap();
    let DesignChoice::Gains(g) = &sol.chosen else { panic!("expected gains") };
    let g1 = 1.0 / (PI / 2.0 - 1.0 / 40.0).tan();
    let g2 = 1.0 / (PI / 2.0 - 1.0 / 200.0).tan();
    assert!((g[0] - g1).abs() < 1e-12 * g1, "{} vs {}", g[0], g1);
    assert!((g[1] - g2).abs() < 1e-10 * g2, "{} vs {}", g[1], g2);
    assert!(sol.max_residual() < 1e-10);
}

#[test]
fn gains_reject_sign_mismatch() {
    let g = Digraph::unweighted(2, [(1, 2), (2, 1)]).unwrap();
    let target = TargetPattern::new(1.0, vec![0.0, 0.0]);
    // node 1 needs a positive input but its argument is −0.5
    let err = assign_by_gains(&g, &[0.0, 1.0], &[-0.5, 0.0], &BarrierFunction::prototype(), &target).unwrap_err();
    assert_eq!(err, DesignError::SignMismatch(vec![1]));
    // ω̄ = ω_i with a zero argument is accepted with unit gain
    let ok = assign_by_gains(&g, &[1.0, 1.0], &[0.0, 0.0], &BarrierFunction::prototype(), &target).unwrap();
    assert_eq!(ok.chosen, DesignChoice::Gains(vec![1.0, 1.0]));
}

#[test]
fn weights_for_nine_node_target() {
    let base = presets::nine_node().unwrap();
    let unit = base.graph().with_weights(&[(1, 2, 1)]).unwrap();
    let target = presets::nine_node_target();
    let proto = BarrierFunction::prototype();
    let candidates = designate_candidate_edges(&unit, &target);
    let g = design_weights(&unit, base.omega(), base.phi(), &proto, &target, &candidates, DEFAULT_MAX_ALPHA).unwrap();
    assert_eq!(g.weight(1, 2), Some(2));
    assert_eq!(g.weight(2, 1), Some(1));
    assert!(g.edges().iter().filter(|e| e.src != 1 || e.dst != 2).all(|e| e.weight == 1));
    let sol = assign_by_weights_and_gains(&unit, base.omega(), base.phi(), &proto, &target, 10).unwrap();
    assert!(sol.max_residual() < 1e-10);
}

#[test]
fn weight_search_edge_cases() {
    let proto = BarrierFunction::prototype();
    assert_eq!(search_weights_for_sign(1, 2, 0.3, 0.0, &proto, 1, 10), Ok(1));
    assert!(matches!(search_weights_for_sign(1, 2, 0.3, 0.0, &proto, 0, 10), Err(DesignError::Infeasible(_))));
    // a rational difference of 2π·(1/4) cycles through four arguments only
    let r = search_weights_for_sign(1, 2, PI / 2.0, 0.1, &proto, -1, 1000);
    assert_eq!(r, Ok(2));
    assert!(matches!(
        search_weights_for_sign(1, 2, 2.0 * PI, 0.1, &proto, -1, 50),
        Err(DesignError::BoundExhausted { max_alpha: 50, .. })
    ));
}

#[test]
fn phase_bias_recovers_single_pattern_variant() {
    let m = presets::nine_node_single_pattern().unwrap();
    let sol = assign_by_phase_bias(m.graph(), m.omega(), m.coupling(), &presets::nine_node_target()).unwrap();
    let DesignChoice::PhaseBiases(phi) = &sol.chosen else { panic!() };
    for (a, b) in phi.iter().zip(m.phi()) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert!(sol.max_residual() < 1e-10);
    let g = Digraph::unweighted(2, [(1, 2), (2, 1)]).unwrap();
    let f = vec![BarrierFunction::prototype(); 2];
    let sol = assign_by_phase_bias(&g, &[1.0, 1.0], &f, &TargetPattern::new(1.0, vec![0.0, 0.0])).unwrap();
    assert_eq!(sol.chosen, DesignChoice::PhaseBiases(vec![0.0, 0.0]));
}

#[test]
fn candidate_edges_and_subgraph() {
    let (g, target) = presets::subgraph_example();
    let e = designate_candidate_edges(&g, &target);
    let mut sorted = e.clone();
    sorted.sort();
    assert_eq!(sorted, vec![(1, 2), (1, 6), (2, 1), (2, 3), (2, 5), (6, 4), (7, 8), (8, 7)]);
    let sub = minimal_edge_subgraph(&g, &e).unwrap();
    assert_eq!(
        edge_list(&sub),
        vec![(1, 2), (1, 6), (2, 1), (2, 3), (2, 5), (6, 4), (6, 7), (7, 8), (8, 7), (8, 9)]
    );
    assert!(sub.is_connected());
}

#[test]
fn subgraph_trivial_cases() {
    let g = Digraph::unweighted(4, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (2, 4)]).unwrap();
    let tree = vec![(1, 2), (2, 3), (3, 4)];
    assert_eq!(edge_list(&minimal_edge_subgraph(&g, &tree).unwrap()), tree);
    let any = minimal_edge_subgraph(&g, &[]).unwrap();
    assert_eq!(any.edges().len(), 3);
    assert!(any.is_connected());
}

#[test]
fn multi_pattern_ordering() {
    let m = presets::three_ring().unwrap();
    let pats = presets::three_ring_patterns();
    assert!(multi_pattern_feasible(m.graph(), m.phi(), &pats).unwrap().feasible);
    assert!(multi_pattern_feasible(m.graph(), m.phi(), &[pats[0].clone(), pats[0].clone()]).unwrap().feasible);
    let swapped = [
        TargetPattern::new(pats[0].omega_bar, pats[1].delta.clone()),
        TargetPattern::new(pats[1].omega_bar, pats[0].delta.clone()),
    ];
    let report = multi_pattern_feasible(m.graph(), m.phi(), &swapped).unwrap();
    assert!(!report.feasible);
    assert!(matches!(
        construct_multi_pattern_couplings(m.graph(), m.phi(), m.omega(), &swapped),
        Err(DesignError::InfeasibleOrdering { .. })
    ));
}

#[test]
fn multi_pattern_couplings_match_closed_forms() {
    let m = presets::three_ring().unwrap();
    let pats = presets::three_ring_patterns();
    let fitted = construct_multi_pattern_couplings(m.graph(), m.phi(), m.omega(), &pats).unwrap();
    for p in &pats {
        for i in 1..=3 {
            let arg = p.coupling_arg(m.graph(), i, m.phi()[i - 1]);
            let a = fitted[i - 1].eval(arg).unwrap();
            let b = m.coupling()[i - 1].eval(arg).unwrap();
            assert!((a - b).abs() < 1e-12, "node {i}: {a} vs {b}");
            assert!((a - (p.omega_bar - m.omega()[i - 1])).abs() < 1e-12);
        }
    }
    // hub of the star: a·tan(−4π/9) + b = 0 and a·tan(4π/9) + b = 1
    let star = presets::star(9).unwrap();
    let f1 = &star.coupling()[0];
    let t = (4.0 * PI / 9.0).tan();
    let (a, b) = (0.5 / t, 0.5);
    for s in [-1.0, 0.0, 0.7] {
        assert!((f1.eval(s).unwrap() - (a * (s / 2.0).tan() + b)).abs() < 1e-12);
    }
}

#[test]
fn three_point_fit_is_piecewise() {
    // on a directed 4-ring with zero biases, offsets (i−1)·k·π/2 give every
    // node the argument −k·π/2
    let g = Digraph::unweighted(4, [(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
    let spread = |k: f64| (0..4).map(|i| barrier_cpg::angle::wrap_positive(k * i as f64 * PI / 2.0)).collect();
    let pats = [
        TargetPattern::new(-1.0, spread(1.0)),
        TargetPattern::new(0.0, spread(0.0)),
        TargetPattern::new(2.0, spread(-1.0)),
    ];
    let phi = [0.0; 4];
    let report = multi_pattern_feasible(&g, &phi, &pats).unwrap();
    assert!(report.feasible, "{report:?}");
    let reversed = [pats[2].clone(), pats[1].clone(), TargetPattern::new(3.0, pats[0].delta.clone())];
    assert!(!multi_pattern_feasible(&g, &phi, &reversed).unwrap().feasible);

    let fs = construct_multi_pattern_couplings(&g, &phi, &[0.0; 4], &pats).unwrap();
    for p in &pats {
        for i in 1..=4 {
            let arg = p.coupling_arg(&g, i, 0.0);
            assert!((fs[i - 1].eval(arg).unwrap() - p.omega_bar).abs() < 1e-12);
        }
    }
    for k in 1..4000 {
        let s = -PI + 2.0 * PI * f64::from(k) / 4000.0;
        assert!(fs[0].derivative(s).unwrap() > 0.0);
    }
    // a node without inputs cannot take part in patterns of different frequency
    let one_way = Digraph::unweighted(2, [(2, 1)]).unwrap();
    let two = [TargetPattern::new(0.0, vec![0.0, 0.5]), TargetPattern::new(1.0, vec![0.0, 1.0])];
    assert!(matches!(
        construct_multi_pattern_couplings(&one_way, &[0.0; 2], &[0.0; 2], &two),
        Err(DesignError::InfeasibleOrdering { node: 2 })
    ));
}

#[test]
fn saturation_excludes_far_classes() {
    let base = presets::nine_node().unwrap();
    let atlas = PatternAnalyzer::new(&base).unwrap().enumerate_classes(DEFAULT_BUDGET).unwrap();
    let sat = presets::nine_node_saturated().unwrap();
    let excluded: Vec<(i64, i64)> = excluded_classes(&sat, &atlas).iter().map(|s| (s.0[0], s.0[1])).collect();
    assert_eq!(excluded, vec![(-1, 2), (0, 2)]);
    // the saturated model itself realizes a single class
    let sat_atlas = PatternAnalyzer::new(&sat).unwrap().enumerate_classes(DEFAULT_BUDGET).unwrap();
    let realized: Vec<_> = sat_atlas.classes.iter().filter(|c| c.pattern.is_some()).collect();
    assert_eq!(realized.len(), 1);
    assert!((realized[0].pattern.as_ref().unwrap().omega_bar - 1.0).abs() < 1e-9);

    let report = saturate_for_uniqueness(&base, &presets::nine_node_target(), 0.5).unwrap();
    assert_eq!(report.retained, vec![]);
    assert_eq!(report.excluded.len(), 2);
    assert_eq!((report.kept.0[0], report.kept.0[1]), (0, 1));

    let tree = presets::tree().unwrap();
    let only = PatternAnalyzer::new(&tree).unwrap().enumerate_classes(DEFAULT_BUDGET).unwrap();
    let keep = TargetPattern::from(only.classes[0].pattern.as_ref().unwrap());
    let r = saturate_for_uniqueness(&tree, &keep, 0.1).unwrap();
    assert!(r.excluded.is_empty() && r.retained.is_empty());
    assert!(r.model.coupling().iter().all(BarrierFunction::is_saturated));
}

#[test]
fn saturation_cannot_separate_equal_frequencies() {
    // a directed 4-ring with zero biases has patterns at distinct frequencies,
    // but a margin wider than their spread keeps all of them
    let m = presets::ring(4, vec![0.0, 0.1, 0.2, 0.3], vec![0.0; 4]).unwrap();
    let atlas = PatternAnalyzer::new(&m).unwrap().enumerate_classes(DEFAULT_BUDGET).unwrap();
    let keep = TargetPattern::from(atlas.classes[0].pattern.as_ref().unwrap());
    assert!(matches!(saturate_for_uniqueness(&m, &keep, 1e3), Err(DesignError::CannotSeparate(_))));
}

fn arb_model() -> impl Strategy<Value = (Digraph, Vec<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n * n),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-3.0f64..3.0, n),
        )
            .prop_map(|(n, mask, omega, phi)| {
                let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i, i + 1)).collect();
                for s in 1..=n {
                    for d in 1..=n {
                        if s != d && d != s + 1 && mask[(s - 1) * n + d - 1] {
                            edges.push((s, d));
                        }
                    }
                }
                (Digraph::unweighted(n, edges).unwrap(), omega, phi)
            })
    })
}

proptest! {
    #[test]
    fn phase_bias_certificate((g, omega, _phi) in arb_model(), w in -1.0f64..1.0, raw in prop::collection::vec(0.0f64..6.28, 5)) {
        let n = g.node_count();
        let mut delta = raw[..n].to_vec();
        delta[0] = 0.0;
        let target = TargetPattern::new(w, delta);
        let f = vec![BarrierFunction::tan_half(1.5, 0.2).unwrap(); n];
        let sol = assign_by_phase_bias(&g, &omega, &f, &target).unwrap();
        prop_assert!(sol.max_residual() < 1e-10);
    }

    #[test]
    fn gains_succeed_iff_sign_condition((g, omega, phi) in arb_model(), w in -2.0f64..2.0, raw in prop::collection::vec(0.0f64..6.28, 5)) {
        let n = g.node_count();
        let mut delta = raw[..n].to_vec();
        delta[0] = 0.0;
        let target = TargetPattern::new(w, delta);
        let proto = BarrierFunction::prototype();
        let phi: Vec<f64> = phi.iter().map(|p| barrier_cpg::angle::wrap(*p)).collect();
        let holds = (1..=n).all(|i| {
            let v = proto.eval(target.coupling_arg(&g, i, phi[i - 1])).unwrap();
            (v > 0.0) == (w - omega[i - 1] > 0.0) && (v < 0.0) == (w - omega[i - 1] < 0.0)
        });
        match assign_by_gains(&g, &omega, &phi, &proto, &target) {
            Ok(sol) => {
                prop_assert!(holds);
                prop_assert!(sol.max_residual() < 1e-10);
            }
            Err(DesignError::SignMismatch(nodes)) => {
                prop_assert!(!holds);
                prop_assert!(!nodes.is_empty());
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn subgraph_invariants((g, _o, _p) in arb_model(), picks in prop::collection::vec(any::<bool>(), 25)) {
        let required: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .zip(picks.iter().cycle())
            .filter(|(_, &keep)| keep)
            .map(|(e, _)| (e.src, e.dst))
            .collect();
        let sub = minimal_edge_subgraph(&g, &required).unwrap();
        prop_assert!(sub.is_connected());
        for e in &required {
            prop_assert!(sub.weight(e.0, e.1).is_some());
        }
        // each added edge reaches at least one new strongly connected component
        let s: Vec<usize> = g.independent_sccs()[0].clone();
        let inside = |e: &(usize, usize)| s.contains(&e.0) && s.contains(&e.1);
        let stage1 = {
            let idx = |v: usize| s.iter().position(|&x| x == v).unwrap() + 1;
            let h = Digraph::unweighted(s.len(), required.iter().filter(|e| inside(e)).map(|e| (idx(e.0), idx(e.1)))).unwrap();
            h.strongly_connected_components().len()
        };
        let stage1_added = sub.edges().iter().filter(|e| inside(&(e.src, e.dst)) && !required.contains(&(e.src, e.dst))).count();
        prop_assert!(stage1_added < stage1.max(1));
        let stage2_graph = Digraph::unweighted(
            g.node_count(),
            sub.edges().iter().filter(|e| required.contains(&(e.src, e.dst)) || inside(&(e.src, e.dst))).map(|e| (e.src, e.dst)),
        ).unwrap();
        let stage2 = stage2_graph.strongly_connected_components().len();
        prop_assert!(sub.edges().len() <= required.len() + (stage1 - 1) + (stage2 - 1));
    }
}

#[test]
fn design_solution_round_trips() {
    let m: NetworkModel = presets::nine_node().unwrap();
    let text = serde_json::to_string_pretty(&m).unwrap();
    let back: NetworkModel = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
}
