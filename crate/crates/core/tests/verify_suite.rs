use covlab_core::verify::{verify_suite, CheckStatus, VerifyOptions};

#[test]
fn fresh_suite_passes() {
    let summary = verify_suite(&VerifyOptions::default());
    for c in &summary.checks {
        println!("{:<30} {:?} {:.2}s {}", c.name, c.status, c.seconds, c.detail);
    }
    assert!(summary.all_passed());
    assert_eq!(summary.count(CheckStatus::Skipped), 0);
}

#[test]
fn seeded_perturbation_is_detected() {
    let summary = verify_suite(&VerifyOptions { perturb_exact_1d: Some(7), ..Default::default() });
    assert_eq!(summary.get("covering_monotonicity").unwrap().status, CheckStatus::Fail);
    assert!(!summary.all_passed());
}

#[test]
fn budget_limits_skip_instead_of_failing() {
    let summary = verify_suite(&VerifyOptions { brute_force_limit: 100.0, ..Default::default() });
    assert!(summary.count(CheckStatus::Skipped) >= 2);
    assert!(summary.all_passed());
}
