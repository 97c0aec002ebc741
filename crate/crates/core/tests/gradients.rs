use selfreg::oracle::suite::{gradient_suite, random_grad_case, GRAD_TOLERANCE, MAX_CASE_PARAMS};

#[test]
fn fifty_random_networks_match_finite_differences() {
    let report = gradient_suite(50).unwrap();
    assert_eq!(report.cases.len(), 50);
    for case in &report.cases {
        assert!(case.num_params <= MAX_CASE_PARAMS);
        assert!(
            case.max_rel_error <= GRAD_TOLERANCE,
            "case {} ({} params, head {}, embedding {}): {:e}",
            case.seed,
            case.num_params,
            case.has_head,
            case.has_embedding,
            case.max_rel_error
        );
    }
    assert!(report.cases.iter().filter(|c| c.has_head).count() >= 20);
    assert!(report.cases.iter().filter(|c| !c.has_head).count() >= 20);
    assert!(report.cases.iter().any(|c| c.has_embedding));
}

#[test]
fn cases_include_multi_layer_targets() {
    let multi = (0..50)
        .map(|s| random_grad_case(s).unwrap())
        .filter(|c| c.selfmodel.target_layers.len() > 1)
        .count();
    assert!(multi >= 3, "{multi}");
}
