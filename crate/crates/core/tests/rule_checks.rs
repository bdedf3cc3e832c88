use search_game::markov::MarkovUserModel;
use search_game::rules::{
    check_convex, check_cross_concave, check_monotone, check_non_indifferent, default_epsilons,
    second_differences, CheckOptions, RuleKind, SelectionRule, SelectionRuleSpec,
};
use search_game::{PropertyStatus, Result};

#[derive(Debug)]
struct Constant(usize);

impl SelectionRule for Constant {
    fn engines(&self) -> usize {
        self.0
    }
    fn evaluate(&self, _q: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0 / self.0 as f64; self.0])
    }
    fn name(&self) -> &str {
        "constant"
    }
}

/// `f_1 = 1 − q_1`: decreasing in its own coordinate.
#[derive(Debug)]
struct Backwards;

impl SelectionRule for Backwards {
    fn engines(&self) -> usize {
        2
    }
    fn evaluate(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0 - q[0], q[0]])
    }
    fn name(&self) -> &str {
        "backwards"
    }
}

fn rule(kind: RuleKind, k: usize) -> SelectionRuleSpec {
    SelectionRuleSpec::new(kind, k).unwrap()
}

fn opts() -> CheckOptions {
    CheckOptions::default()
}

#[test]
fn monotone_examples() {
    assert!(check_monotone(&rule(RuleKind::Proportional, 2), &opts()).passed());
    assert!(check_monotone(&rule(RuleKind::Majority, 3), &opts()).passed());
    let r = check_monotone(&Backwards, &opts());
    assert_eq!(r.status, PropertyStatus::Fail);
    let w = r.witness.unwrap();
    assert_eq!(w.engine, 0);
}

#[test]
fn gamma_power_rewards_a_rival_catching_up() {
    let g = rule(RuleKind::GammaPower, 3);
    let low = g.evaluate(&[1.0, 0.0, 1.0]).unwrap()[0];
    let high = g.evaluate(&[1.0, 1.0 / 16.0, 1.0]).unwrap()[0];
    assert!((low - 0.2).abs() < 1e-15 && high > low);
    let r = check_monotone(&g, &opts());
    assert_eq!(r.status, PropertyStatus::Fail);
    assert!(check_non_indifferent(&g, &opts()).passed());
}

#[test]
fn non_indifference_examples() {
    assert!(check_non_indifferent(&rule(RuleKind::Proportional, 3), &opts()).passed());
    assert!(check_non_indifferent(&rule(RuleKind::Majority, 2), &opts()).passed());
    assert!(check_non_indifferent(&rule(RuleKind::Markovian, 3), &opts()).passed());
    let r = check_non_indifferent(&rule(RuleKind::TruncatedIndifferent(4), 5), &opts());
    assert_eq!(r.status, PropertyStatus::Fail);
    assert!(r.witness.is_some());
}

#[test]
fn convexity_examples() {
    let prop = rule(RuleKind::Proportional, 2);
    let d2 = second_differences(&prop, 0, &[0.5], 1.0 / 16.0).unwrap();
    assert!(d2.iter().all(|&(_, d)| d < 0.0));
    assert_eq!(check_convex(&prop, &opts()).status, PropertyStatus::Fail);

    let c = check_convex(&Constant(3), &opts());
    assert!(c.passed());
    assert_eq!(c.strict, Some(false));

    let model = MarkovUserModel::new(
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        vec![vec![0.3, 0.7], vec![0.5, 0.5]],
    )
    .unwrap();
    let r = check_convex(&rule(RuleKind::InducedMarkov(model), 2), &opts());
    assert!(r.passed());
    assert_eq!(r.strict, Some(true));
    assert!(r.measure.unwrap() > 0.0);

    let basic = check_convex(&rule(RuleKind::Markovian, 3), &opts());
    assert!(basic.passed());
}

#[test]
fn cross_concavity_examples() {
    let eps = default_epsilons();
    let r = check_cross_concave(&rule(RuleKind::Proportional, 2), &eps, None, &opts());
    assert!(r.passed(), "{:?}", r.witness);
    assert!(r.measure.is_some());
    let r = check_cross_concave(&rule(RuleKind::Proportional, 3), &eps, Some(&[0.5]), &opts());
    assert!(r.passed(), "{:?}", r.witness);
    assert_eq!(
        check_cross_concave(&Constant(2), &eps, None, &opts()).status,
        PropertyStatus::Fail
    );
}
