use std::collections::BTreeSet;
use std::f64::consts::PI;

use barrier_cpg::angle::wrap;
use barrier_cpg::pattern::{PatternAnalyzer, SequenceIndex, DEFAULT_BUDGET};
use barrier_cpg::{BarrierFunction, Digraph, NetworkModel};
use proptest::prelude::*;

/// Directed ring backbone plus at most one extra unit in-edge per node, so
/// every in-degree is at most 2.
fn arb_model(max_n: usize) -> impl Strategy<Value = NetworkModel> {
    (2usize..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(0usize..8, n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-PI..PI, n),
            prop::collection::vec((0.5f64..2.0, -0.5f64..0.5), n),
        )
            .prop_map(|(n, extra, omega, phi, params)| {
                let mut edges: Vec<(usize, usize)> = (1..=n).map(|i| (i, i % n + 1)).collect();
                for (d, pick) in extra.iter().enumerate() {
                    let dst = d + 1;
                    let src = pick % n + 1;
                    if src != dst && !edges.contains(&(src, dst)) {
                        edges.push((src, dst));
                    }
                }
                let g = Digraph::unweighted(n, edges).unwrap();
                let f = params.iter().map(|&(a, b)| BarrierFunction::tan_half(a, b).unwrap()).collect();
                NetworkModel::new(g, omega, phi, f).unwrap()
            })
    })
}

fn box_cells(degrees: &[i64]) -> Vec<SequenceIndex> {
    let mut out = vec![Vec::new()];
    for &d in degrees {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (-d..=d).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(SequenceIndex).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solved_patterns_are_phase_locked(m in arb_model(4)) {
        let a = PatternAnalyzer::new(&m).unwrap();
        for n in box_cells(a.degrees()).iter().filter(|n| a.admissible_extended(n)) {
            let p = a.solve_pattern(n).unwrap();
            // every agent moves at the common frequency when started at the offsets
            let v = m.velocity(&p.delta).unwrap();
            for vi in v {
                prop_assert!((vi - p.omega_bar).abs() < 1e-8, "{} vs {}", vi, p.omega_bar);
            }
            prop_assert_eq!(&a.lifted_cell(&p.delta_lifted).unwrap(), n);
            prop_assert!(p.delta.iter().all(|d| (0.0..2.0 * PI).contains(d)));
        }
    }

    #[test]
    fn frequency_function_increases(m in arb_model(4), ws in prop::collection::vec(-20.0f64..20.0, 12)) {
        let a = PatternAnalyzer::new(&m).unwrap();
        let n = SequenceIndex::zeros(m.node_count());
        let mut ws = ws;
        ws.sort_by(f64::total_cmp);
        let values: Vec<f64> = ws.iter().map(|&w| a.frequency_function(&n, w)).collect();
        for pair in values.windows(2) {
            prop_assert!(pair[0] <= pair[1] + 1e-12);
        }
    }

    #[test]
    fn classes_have_distinct_patterns(m in arb_model(4)) {
        let a = PatternAnalyzer::new(&m).unwrap();
        let atlas = a.enumerate_classes(DEFAULT_BUDGET).unwrap();
        let zeta = &a.left_null_vector().zeta;
        let weighted = |n: &SequenceIndex| n.0.iter().zip(zeta).map(|(x, z)| x * z).sum::<i64>();
        let pats: Vec<_> = atlas.classes.iter().map(|c| c.pattern.clone().unwrap()).collect();
        for (i, ci) in atlas.classes.iter().enumerate() {
            for (j, cj) in atlas.classes.iter().enumerate().skip(i + 1) {
                prop_assert!(!pats[i].matches(&pats[j], 1e-9, 1e-7));
                if weighted(&ci.id) != weighted(&cj.id) {
                    prop_assert!((pats[i].omega_bar - pats[j].omega_bar).abs() > 1e-12);
                }
            }
        }
        let count: usize = atlas.classes.iter().map(|c| c.members.len()).sum();
        prop_assert_eq!(count, atlas.admissible.len());
    }

    #[test]
    fn equivalence_matches_solved_patterns(m in arb_model(4)) {
        // oracle: two cells are equivalent exactly when they produce the same pattern
        let a = PatternAnalyzer::new(&m).unwrap();
        let cells: Vec<SequenceIndex> =
            box_cells(a.degrees()).into_iter().filter(|n| a.admissible_extended(n)).collect();
        let pats: Vec<_> = cells.iter().map(|n| a.solve_pattern(n).unwrap()).collect();
        for i in 0..cells.len() {
            for j in i..cells.len() {
                let same = pats[i].matches(&pats[j], 1e-9, 1e-7);
                prop_assert_eq!(a.equivalent(&cells[i], &cells[j]), same, "{} vs {}", &cells[i], &cells[j]);
            }
        }
    }

    #[test]
    fn small_perturbations_move_patterns_little(m in arb_model(4), k in 0usize..4, eta in -1e-6f64..1e-6) {
        let a = PatternAnalyzer::new(&m).unwrap();
        let atlas = a.enumerate_classes(DEFAULT_BUDGET).unwrap();
        let mut omega = m.omega().to_vec();
        let k = k % omega.len();
        omega[k] += eta;
        let shifted = m.with_omega(omega).unwrap();
        let b = PatternAnalyzer::new(&shifted).unwrap();
        for c in &atlas.classes {
            let p = c.pattern.as_ref().unwrap();
            let q = b.solve_pattern(&c.id).unwrap();
            prop_assert!((p.omega_bar - q.omega_bar).abs() <= 2.0 * eta.abs() + 1e-12);
            prop_assert!(p.matches(&q, 1e-5, 1e-4));
        }
    }
}

/// All cells met by `θ` on a regular grid of spacing `2π/steps` inside the
/// box, keeping only points whose coupling arguments stay `margin` away from
/// the cell boundaries (a tiny margin keeps every point off a boundary).
fn grid_cells(m: &NetworkModel, a: &PatternAnalyzer<'_>, steps: usize, margin: f64, box_eps: f64) -> BTreeSet<Vec<i64>> {
    let n = m.node_count();
    let h = 2.0 * PI / steps as f64;
    let coords: Vec<f64> =
        (0..steps).map(|k| -PI + h * k as f64).filter(|x| *x >= -PI + box_eps && *x <= PI - box_eps).collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; n];
    loop {
        let theta: Vec<f64> = idx.iter().map(|&k| coords[k]).collect();
        let args = m.coupling_args(&theta);
        let inside = args.iter().all(|s| {
            let r = wrap(*s);
            r > -PI + margin && r < PI - margin
        });
        if inside {
            out.insert(a.lifted_cell(&theta).unwrap().0);
        }
        let mut p = 0;
        loop {
            if p == n {
                return out;
            }
            idx[p] += 1;
            if idx[p] < coords.len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn torus_admissibility_agrees_with_grid(m in arb_model(3)) {
        let a = PatternAnalyzer::new(&m).unwrap();
        let cells = box_cells(a.degrees());
        // every grid point safely inside a cell certifies it
        for c in grid_cells(&m, &a, 100, 0.2, 1e-5) {
            prop_assert!(a.admissible_torus(&SequenceIndex(c.clone()), 1e-6), "{:?}", c);
        }
        // a witness with margin 0.3 rounds to a grid point in the same cell
        let loose = grid_cells(&m, &a, 100, 1e-8, 0.0);
        for n in &cells {
            if a.admissible_torus(n, 0.3) {
                prop_assert!(loose.contains(&n.0), "{}", n);
            }
        }
    }
}
