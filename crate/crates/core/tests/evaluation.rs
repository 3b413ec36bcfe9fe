use neurols::evaluation::{analyze, evaluate_ood, evaluate_testset, export_response, replay_with_diagnostics, welch_t};
use neurols::instances::{Family, InstanceSet, PuboiParams, Role};
use neurols::policies::{BestImprovement, FirstImprovement, NeuroLsPolicy, OneCommaLambda, Strategy};
use neurols::search::TRACE_COLUMNS;
use neurols::training::score_vector;
use neurols::ObservationKind;

fn theta(len: usize) -> Vec<f64> {
    (0..len).map(|i| ((i * 37 % 17) as f64 - 8.0) / 6.0).collect()
}

#[test]
fn identical_strategies_give_zero_t() {
    let set = InstanceSet::generate_nk(Role::Test, 16, 2, 10, 1, 3).unwrap();
    let p = NeuroLsPolicy::standard(ObservationKind::O4, theta(91)).unwrap();
    let strategies = vec![
        Strategy::learned("a", p.clone()),
        Strategy::baseline(BestImprovement),
        Strategy {
            name: "copy".into(),
            class: neurols::policies::StrategyClass::Baseline,
            policy: Box::new(p),
        },
    ];
    let rep = evaluate_testset(&strategies, &set, None).unwrap();
    assert_eq!(rep.get("a").unwrap().scores, rep.get("copy").unwrap().scores);
    let w = rep.comparison("a", "copy").unwrap();
    assert_eq!((w.t, w.p), (0.0, 1.0));
    assert!(!rep.underline("a"));
    assert_eq!(rep.decimals, 3);
    assert!(rep.strategies.iter().all(|s| s.scores.len() == 10));
}

#[test]
fn reports_are_reproducible_and_exportable() {
    let set = InstanceSet::generate_nk(Role::Test, 16, 2, 6, 1, 3).unwrap();
    let make = || {
        vec![
            Strategy::learned("n", NeuroLsPolicy::standard(ObservationKind::O3, theta(81)).unwrap()),
            Strategy::baseline(BestImprovement),
            Strategy::baseline(FirstImprovement),
            Strategy::baseline(OneCommaLambda::new(4)),
        ]
    };
    let a = evaluate_testset(&make(), &set, None).unwrap();
    let b = evaluate_testset(&make(), &set, None).unwrap();
    assert_eq!(a, b);
    let mut csv = Vec::new();
    a.write_summary_csv(&mut csv, Some("h")).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("# provenance h\nstrategy,class,mean,bold,underline\n"));
    assert_eq!(text.lines().count(), 6);
    assert_eq!(a.comparisons.len(), 3);
    let bold: Vec<_> = a.strategies.iter().filter(|s| a.bold(&s.name)).collect();
    assert!(!bold.is_empty());
    assert!(a.to_table().contains("strategy"));
}

#[test]
fn bhc_takes_rank_one_while_improving() {
    let set = InstanceSet::generate_nk(Role::Test, 32, 4, 3, 1, 5).unwrap();
    for i in 0..3 {
        let rows = replay_with_diagnostics(&BestImprovement, &set.instances[i], &set.start_points[i][0], 64, 1).unwrap();
        assert_eq!(rows.len(), 64);
        for r in &rows {
            assert!((1..=32).contains(&r.chosen_rank));
            if r.n_improving > 0 {
                assert_eq!(r.chosen_rank, 1);
                assert!(r.delta_of_chosen < 0.0);
            }
        }
    }
}

#[test]
fn random_start_has_about_half_improving_moves() {
    let set = InstanceSet::generate_nk(Role::Test, 64, 8, 50, 1, 6).unwrap();
    let mut total = 0;
    for i in 0..50 {
        let rows = replay_with_diagnostics(&BestImprovement, &set.instances[i], &set.start_points[i][0], 1, 1).unwrap();
        total += rows[0].n_improving;
    }
    let mean = total as f64 / 50.0;
    assert!((24.0..=40.0).contains(&mean), "{mean}");
}

#[test]
fn response_curve_bookkeeping() {
    let set = InstanceSet::generate_nk(Role::Test, 16, 2, 4, 1, 7).unwrap();
    let zero = NeuroLsPolicy::standard(ObservationKind::O3, vec![0.0; 81]).unwrap();
    let curve = export_response(&zero, &set, 3, None).unwrap();
    assert_eq!(curve.len(), 3 * 32 * 16);
    assert!(curve.outputs.iter().all(|&g| g == 0.0));
    assert_eq!(curve.columns(), vec!["x", "g"]);

    let p = NeuroLsPolicy::standard(ObservationKind::O4, theta(91)).unwrap();
    let a = analyze(&p, &set, 10, None).unwrap();
    // only four pairs exist
    assert_eq!(a.traces.len(), 4);
    assert_eq!(a.response.columns(), vec!["x1", "x2", "g"]);
    let mut buf = Vec::new();
    neurols::search::write_trace_csv_rows(&mut buf, &a.traces[0], None).unwrap();
    let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, TRACE_COLUMNS.join(","));
    assert!(analyze(&NeuroLsPolicy::standard(ObservationKind::O1, vec![0.0; 81]).unwrap(), &set, 1, None).is_ok());
}

#[test]
fn qubo_rescaling_keeps_rank_policy_scores() {
    let params = PuboiParams::from_family(32, 0.2, Family::Important);
    let set = InstanceSet::generate_qubo(Role::Test, &params, Some(Family::Important), 5, 1, 1).unwrap();
    let mut scaled = set.clone();
    for inst in &mut scaled.instances {
        if let neurols::Instance::Qubo(q) = inst {
            *q = q.scaled(1000.0);
        }
    }
    let p = NeuroLsPolicy::standard(ObservationKind::O3, theta(81)).unwrap();
    let a = score_vector(&p, &set, None).unwrap();
    let b = score_vector(&p, &scaled, None).unwrap();
    let a1000: Vec<f64> = a.iter().map(|v| v * 1000.0).collect();
    assert_eq!(a1000, b);
}

#[test]
fn ood_reports_use_one_decimal() {
    let mut sets = Vec::new();
    for n in [16, 24] {
        let params = PuboiParams::from_family(n, 0.2, Family::Uniform);
        sets.push((format!("n{n}"), InstanceSet::generate_qubo(Role::Test, &params, None, 4, 1, 2).unwrap()));
    }
    let strategies = vec![
        Strategy::learned("o4", NeuroLsPolicy::standard(ObservationKind::O4, theta(91)).unwrap()),
        Strategy::baseline(BestImprovement),
    ];
    let reps = evaluate_ood(&strategies, &sets).unwrap();
    assert_eq!(reps.len(), 2);
    assert!(reps.iter().all(|(_, r)| r.decimals == 1));
}

#[test]
fn welch_reference_values() {
    let w = welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    assert!((w.t + 1.0).abs() < 1e-12 && (w.df - 8.0).abs() < 1e-12);
    assert!((w.p - 0.346_593_9).abs() < 1e-6);
    let far: Vec<f64> = [2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|v| v + 100.0).collect();
    assert!(welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &far).unwrap().p < 1e-10);
}
