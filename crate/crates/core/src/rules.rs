//! Selection rules and sampled checks of their structural properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{self, MarkovUserModel};
use crate::report::{PropertyReport, Witness};

/// Maps a satisfaction profile to the probability the user picks each engine.
pub trait SelectionRule: std::fmt::Debug + Send + Sync {
    fn engines(&self) -> usize;

    fn evaluate(&self, q: &[f64]) -> Result<Vec<f64>>;

    fn evaluate_engine(&self, engine: usize, q: &[f64]) -> Result<f64> {
        Ok(self.evaluate(q)?[engine])
    }

    fn name(&self) -> &str {
        "custom"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    Proportional,
    Markovian,
    Majority,
    WeightedProportional(Vec<f64>),
    GammaPower,
    /// Parameter is the number of ordinary engines `N`; the rule has `N+1` engines.
    TruncatedIndifferent(usize),
    InducedMarkov(MarkovUserModel),
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::Proportional => "proportional",
            RuleKind::Markovian => "markovian",
            RuleKind::Majority => "majority",
            RuleKind::WeightedProportional(_) => "weighted_proportional",
            RuleKind::GammaPower => "gamma_power",
            RuleKind::TruncatedIndifferent(_) => "truncated_indifferent",
            RuleKind::InducedMarkov(_) => "induced_markov",
        }
    }

    /// Whether permuting `q` permutes the output identically.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            RuleKind::Proportional | RuleKind::Markovian | RuleKind::Majority
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRuleSpec {
    kind: RuleKind,
    engines: usize,
}

impl SelectionRuleSpec {
    pub fn new(kind: RuleKind, engines: usize) -> Result<Self> {
        if engines == 0 {
            return Err(Error::Configuration("a rule needs at least one engine".into()));
        }
        match &kind {
            RuleKind::WeightedProportional(w) => {
                if w.len() != engines {
                    return Err(Error::Configuration(format!(
                        "{} weights for {engines} engines",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::Configuration("weights must be positive".into()));
                }
            }
            RuleKind::GammaPower if engines != 3 => {
                return Err(Error::Configuration(format!(
                    "gamma_power is defined for 3 engines, got {engines}"
                )));
            }
            RuleKind::TruncatedIndifferent(n) if *n + 1 != engines || *n < 2 => {
                return Err(Error::Configuration(format!(
                    "truncated_indifferent with {n} pages needs {} engines and N >= 2, got {engines}",
                    n + 1
                )));
            }
            RuleKind::InducedMarkov(m) if m.engines() != engines => {
                return Err(Error::Configuration(format!(
                    "markov model has {} states for {engines} engines",
                    m.engines()
                )));
            }
            _ => {}
        }
        Ok(SelectionRuleSpec { kind, engines })
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    /// Whether the rule is known to violate non-indifference, so that
    /// coverage welfare only bounds the achievable welfare from above.
    pub fn known_indifferent(&self) -> bool {
        matches!(self.kind, RuleKind::TruncatedIndifferent(_))
    }
}

pub fn check_profile(q: &[f64], engines: usize) -> Result<()> {
    if q.len() != engines {
        return Err(Error::EngineCountMismatch {
            expected: engines,
            actual: q.len(),
        });
    }
    for (engine, &value) in q.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain { engine, value });
        }
    }
    Ok(())
}

fn uniform_over(mask: impl Iterator<Item = bool> + Clone) -> Vec<f64> {
    let count = mask.clone().filter(|&b| b).count() as f64;
    mask.map(|b| if b { 1.0 / count } else { 0.0 }).collect()
}

fn gamma_weights(q: &[f64]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        g[i] = q[i] * 2f64.powf(q[(i + 1) % 3] - q[(i + 2) % 3]);
    }
    g
}

fn truncated(q: &[f64], n: usize) -> Vec<f64> {
    let positive: Vec<usize> = (0..n).filter(|&j| q[j] > 0.0).collect();
    let mut f = vec![0.0; n + 1];
    if positive.len() == 1 {
        f[positive[0]] = 1.0;
        return f;
    }
    let total: f64 = q[..n].iter().sum();
    let cap = 1.0 / n as f64;
    for i in 0..n {
        let others = total - q[i];
        f[i] = (0.5 * (1.0 - others)).clamp(0.0, cap);
    }
    let used: f64 = f[..n].iter().sum();
    f[n] = (1.0 - used).max(0.0);
    f
}

impl SelectionRule for SelectionRuleSpec {
    fn engines(&self) -> usize {
        self.engines
    }

    fn name(&self) -> &str {
        self.kind.name()
    }

    fn evaluate(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_profile(q, self.engines)?;
        let k = self.engines as f64;
        Ok(match &self.kind {
            RuleKind::Proportional => {
                let s: f64 = q.iter().sum();
                if s == 0.0 {
                    vec![1.0 / k; self.engines]
                } else {
                    q.iter().map(|x| x / s).collect()
                }
            }
            RuleKind::Markovian => {
                if q.contains(&1.0) {
                    uniform_over(q.iter().map(|&x| x == 1.0))
                } else {
                    let b: Vec<f64> = q.iter().map(|x| 1.0 / (1.0 - x)).collect();
                    let s: f64 = b.iter().sum();
                    b.into_iter().map(|x| x / s).collect()
                }
            }
            RuleKind::Majority => {
                let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                uniform_over(q.iter().map(|&x| x == max))
            }
            RuleKind::WeightedProportional(w) => {
                let s: f64 = w.iter().zip(q).map(|(w, x)| w * x).sum();
                if s == 0.0 {
                    let ws: f64 = w.iter().sum();
                    w.iter().map(|x| x / ws).collect()
                } else {
                    w.iter().zip(q).map(|(w, x)| w * x / s).collect()
                }
            }
            RuleKind::GammaPower => {
                let g = gamma_weights(q);
                let s: f64 = g.iter().sum();
                if s == 0.0 {
                    vec![1.0 / 3.0; 3]
                } else {
                    g.iter().map(|x| x / s).collect()
                }
            }
            RuleKind::TruncatedIndifferent(n) => truncated(q, *n),
            RuleKind::InducedMarkov(model) => markov::stationary(model, q)?,
        })
    }

    fn evaluate_engine(&self, engine: usize, q: &[f64]) -> Result<f64> {
        check_profile(q, self.engines)?;
        if engine >= self.engines {
            return Err(Error::Configuration(format!(
                "engine {engine} out of range for {} engines",
                self.engines
            )));
        }
        let k = self.engines as f64;
        Ok(match &self.kind {
            RuleKind::Proportional => {
                let s: f64 = q.iter().sum();
                if s == 0.0 {
                    1.0 / k
                } else {
                    q[engine] / s
                }
            }
            RuleKind::Markovian => {
                if q.contains(&1.0) {
                    if q[engine] == 1.0 {
                        1.0 / q.iter().filter(|&&x| x == 1.0).count() as f64
                    } else {
                        0.0
                    }
                } else {
                    let s: f64 = q.iter().map(|x| 1.0 / (1.0 - x)).sum();
                    1.0 / (1.0 - q[engine]) / s
                }
            }
            RuleKind::Majority => {
                let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if q[engine] == max {
                    1.0 / q.iter().filter(|&&x| x == max).count() as f64
                } else {
                    0.0
                }
            }
            RuleKind::WeightedProportional(w) => {
                let s: f64 = w.iter().zip(q).map(|(w, x)| w * x).sum();
                if s == 0.0 {
                    w[engine] / w.iter().sum::<f64>()
                } else {
                    w[engine] * q[engine] / s
                }
            }
            RuleKind::GammaPower => {
                let g = gamma_weights(q);
                let s: f64 = g.iter().sum();
                if s == 0.0 {
                    1.0 / 3.0
                } else {
                    g[engine] / s
                }
            }
            RuleKind::TruncatedIndifferent(n) => truncated(q, *n)[engine],
            RuleKind::InducedMarkov(model) => markov::stationary(model, q)?[engine],
        })
    }
}

/// Sampling parameters shared by the property checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub grid_step: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            grid_step: 1.0 / 16.0,
            samples: 200,
            seed: 42,
        }
    }
}

const GRID_LIMIT: usize = 20_000;
const MONOTONE_SLACK: f64 = 1e-10;
const INDIFFERENCE_TOL: f64 = 1e-12;
const CONVEX_SLACK: f64 = 1e-8;
const STRICT_CONVEX_MIN: f64 = 1e-10;

fn grid_levels(step: f64) -> Vec<f64> {
    let m = (1.0 / step).round().max(1.0) as usize;
    (0..=m).map(|j| (j as f64 * step).min(1.0)).collect()
}

/// Random coordinate in [0, 1] with atoms at both endpoints.
fn random_coordinate(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    if u < 0.15 {
        0.0
    } else if u < 0.3 {
        1.0
    } else {
        rng.gen()
    }
}

/// Full grid when small enough, plus `samples` random profiles.
fn sample_profiles(k: usize, opts: &CheckOptions) -> Vec<Vec<f64>> {
    let levels = grid_levels(opts.grid_step);
    let mut out = Vec::new();
    let grid_size = (levels.len() as f64).powi(k as i32);
    if grid_size <= GRID_LIMIT as f64 {
        let mut idx = vec![0usize; k];
        loop {
            out.push(idx.iter().map(|&j| levels[j]).collect());
            let mut pos = 0;
            while pos < k {
                idx[pos] += 1;
                if idx[pos] < levels.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.samples {
        out.push((0..k).map(|_| random_coordinate(&mut rng)).collect());
    }
    out
}

fn with_coord(q: &[f64], i: usize, x: f64) -> Vec<f64> {
    let mut v = q.to_vec();
    v[i] = x;
    v
}

fn eval_or_witness(
    rule: &dyn SelectionRule,
    q: &[f64],
) -> std::result::Result<Vec<f64>, Witness> {
    rule.evaluate(q).map_err(|e| Witness {
        q: q.to_vec(),
        engine: 0,
        detail: format!("evaluation failed: {e}"),
        value: f64::NAN,
    })
}

/// `f_i` non-decreasing in `q_i` and non-increasing in every `q_j`, `j ≠ i`.
pub fn check_monotone(rule: &dyn SelectionRule, opts: &CheckOptions) -> PropertyReport {
    let k = rule.engines();
    let profiles = sample_profiles(k, opts);
    let mut witness = None;
    'outer: for q in &profiles {
        let f = match eval_or_witness(rule, q) {
            Ok(f) => f,
            Err(w) => {
                witness = Some(w);
                break;
            }
        };
        for j in 0..k {
            if q[j] + opts.grid_step > 1.0 {
                continue;
            }
            let up = with_coord(q, j, q[j] + opts.grid_step);
            let g = match eval_or_witness(rule, &up) {
                Ok(g) => g,
                Err(w) => {
                    witness = Some(w);
                    break 'outer;
                }
            };
            for i in 0..k {
                let delta = g[i] - f[i];
                let bad = if i == j {
                    delta < -MONOTONE_SLACK
                } else {
                    delta > MONOTONE_SLACK
                };
                if bad {
                    let detail = if i == j {
                        format!("raising q_{j} lowered f_{i} by {}", -delta)
                    } else {
                        format!("raising q_{j} raised f_{i} by {delta}")
                    };
                    witness = Some(Witness {
                        q: q.clone(),
                        engine: i,
                        detail,
                        value: delta,
                    });
                    break 'outer;
                }
            }
        }
    }
    PropertyReport::from_witness("monotone", profiles.len(), witness)
}

/// Both clauses of non-indifference on sampled profiles.
pub fn check_non_indifferent(rule: &dyn SelectionRule, opts: &CheckOptions) -> PropertyReport {
    let k = rule.engines();
    let profiles = sample_profiles(k, opts);
    let mut witness = None;
    'outer: for q in &profiles {
        let f = match eval_or_witness(rule, q) {
            Ok(f) => f,
            Err(w) => {
                witness = Some(w);
                break;
            }
        };
        let support: Vec<usize> = (0..k).filter(|&i| q[i] > 0.0).collect();
        if support.len() >= 2 && support.iter().any(|&j| q[j] < 1.0) {
            let mut improves = false;
            for &i in &support {
                let raised = match eval_or_witness(rule, &with_coord(q, i, 1.0)) {
                    Ok(g) => g[i],
                    Err(w) => {
                        witness = Some(w);
                        break 'outer;
                    }
                };
                if f[i] < raised - INDIFFERENCE_TOL {
                    improves = true;
                    break;
                }
            }
            if !improves {
                witness = Some(Witness {
                    q: q.clone(),
                    engine: support[0],
                    detail: "no supporting engine gains share by raising its satisfaction to 1"
                        .into(),
                    value: 0.0,
                });
                break;
            }
        }
        if q.contains(&1.0) {
            if let Some(j) = (0..k).find(|&j| q[j] == 0.0 && f[j] > INDIFFERENCE_TOL) {
                witness = Some(Witness {
                    q: q.clone(),
                    engine: j,
                    detail: format!(
                        "engine {j} cannot satisfy the user yet is chosen with probability {}",
                        f[j]
                    ),
                    value: f[j],
                });
                break;
            }
        }
    }
    PropertyReport::from_witness("non_indifferent", profiles.len(), witness)
}

/// Central second differences of `f_engine` along its own coordinate, with
/// `others` filling the remaining coordinates in engine order.
pub fn second_differences(
    rule: &dyn SelectionRule,
    engine: usize,
    others: &[f64],
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    let k = rule.engines();
    if others.len() + 1 != k {
        return Err(Error::EngineCountMismatch {
            expected: k - 1,
            actual: others.len(),
        });
    }
    let mut q: Vec<f64> = others.to_vec();
    q.insert(engine, 0.0);
    let m = (1.0 / step).round() as usize;
    let mut f = Vec::with_capacity(m + 1);
    for j in 0..=m {
        q[engine] = (j as f64 * step).min(1.0);
        f.push(rule.evaluate_engine(engine, &q)?);
    }
    Ok((1..m)
        .map(|j| (j as f64 * step, f[j + 1] - 2.0 * f[j] + f[j - 1]))
        .collect())
}

/// Convexity of `f_i` in `q_i`, other coordinates at sampled values.
pub fn check_convex(rule: &dyn SelectionRule, opts: &CheckOptions) -> PropertyReport {
    let k = rule.engines();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut others_list: Vec<Vec<f64>> = Vec::new();
    if k >= 2 {
        let levels = grid_levels(opts.grid_step.max(0.25));
        let size = (levels.len() as f64).powi(k as i32 - 1);
        if size <= 1000.0 {
            let mut idx = vec![0usize; k - 1];
            loop {
                others_list.push(idx.iter().map(|&j| levels[j]).collect());
                let mut pos = 0;
                while pos < k - 1 {
                    idx[pos] += 1;
                    if idx[pos] < levels.len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == k - 1 {
                    break;
                }
            }
        }
    }
    for _ in 0..opts.samples {
        others_list.push((0..k.saturating_sub(1)).map(|_| rng.gen()).collect());
    }

    let mut min_d2 = f64::INFINITY;
    let mut min_at: Option<Witness> = None;
    let mut points = 0;
    let mut witness = None;
    'outer: for i in 0..k {
        for others in &others_list {
            let d2 = match second_differences(rule, i, others, opts.grid_step) {
                Ok(d) => d,
                Err(e) => {
                    let mut q = others.clone();
                    q.insert(i, 0.0);
                    witness = Some(Witness {
                        q,
                        engine: i,
                        detail: format!("evaluation failed: {e}"),
                        value: f64::NAN,
                    });
                    break 'outer;
                }
            };
            for (x, d) in d2 {
                points += 1;
                if d < min_d2 {
                    min_d2 = d;
                    let mut q = others.clone();
                    q.insert(i, x);
                    min_at = Some(Witness {
                        q,
                        engine: i,
                        detail: format!("second difference {d} in q_{i}"),
                        value: d,
                    });
                }
            }
        }
    }
    if witness.is_none() && min_d2 < -CONVEX_SLACK {
        witness = min_at.clone();
    }
    let failed = witness.is_some();
    let mut report = PropertyReport::from_witness("convex", points, witness);
    report.strict = Some(!failed && min_d2 > STRICT_CONVEX_MIN);
    report.measure = Some(min_d2);
    if !failed {
        report.note = format!(
            "no violation found in {points} sampled points; smallest second difference {min_d2:e}"
        );
    }
    report
}

/// Default shift grid for [`check_cross_concave`].
pub fn default_epsilons() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 5e-2]
}

/// Cross-concavity of `f_1` in the first two coordinates: catching up is
/// worth more than extending a lead. `rest` fixes coordinates 3..k; when
/// `None` they are sampled.
pub fn check_cross_concave(
    rule: &dyn SelectionRule,
    epsilons: &[f64],
    rest: Option<&[f64]>,
    opts: &CheckOptions,
) -> PropertyReport {
    let k = rule.engines();
    let mut eps: Vec<f64> = epsilons.iter().copied().filter(|e| *e > 0.0).collect();
    eps.sort_by(f64::total_cmp);
    if k < 2 || eps.is_empty() {
        let mut r = PropertyReport::from_witness("cross_concave", 0, None);
        r.note = "needs at least two engines and a positive shift".into();
        return r;
    }
    if let Some(r) = rest {
        if r.len() + 2 != k {
            return PropertyReport::from_witness(
                "cross_concave",
                0,
                Some(Witness {
                    q: r.to_vec(),
                    engine: 0,
                    detail: format!("rest has {} coordinates, expected {}", r.len(), k - 2),
                    value: f64::NAN,
                }),
            );
        }
    }
    let min_gap = 10.0 * eps[0];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let f0 = |q: &[f64]| rule.evaluate_engine(0, q);
    let mut witness = None;
    let mut smallest_delta = f64::INFINITY;
    let mut points = 0;
    'outer: for _ in 0..opts.samples {
        let (x, y) = loop {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            if (a - b).abs() > min_gap {
                break (a.min(b), a.max(b));
            }
        };
        let tail: Vec<f64> = match rest {
            Some(r) => r.to_vec(),
            None => (2..k).map(|_| rng.gen()).collect(),
        };
        let q = |a: f64, b: f64| {
            let mut v = vec![a, b];
            v.extend_from_slice(&tail);
            v
        };
        let mut delta = 0.0;
        for &e in &eps {
            if x + e > 1.0 || y - e < 0.0 {
                break;
            }
            let vals = (|| -> Result<(f64, f64)> {
                let lhs = f0(&q(x + e, y))? - f0(&q(x, y))?;
                let rhs = f0(&q(y, x))? - f0(&q(y - e, x))?;
                Ok((lhs, rhs))
            })();
            let (lhs, rhs) = match vals {
                Ok(v) => v,
                Err(err) => {
                    witness = Some(Witness {
                        q: q(x, y),
                        engine: 0,
                        detail: format!("evaluation failed: {err}"),
                        value: f64::NAN,
                    });
                    break 'outer;
                }
            };
            points += 1;
            if lhs > rhs {
                delta = e;
            } else {
                if e == eps[0] {
                    witness = Some(Witness {
                        q: q(x, y),
                        engine: 0,
                        detail: format!(
                            "shift {e}: gain from catching up {lhs} does not exceed gain from leading {rhs}"
                        ),
                        value: lhs - rhs,
                    });
                    break 'outer;
                }
                break;
            }
        }
        if delta > 0.0 {
            smallest_delta = smallest_delta.min(delta);
        }
    }
    let mut report = PropertyReport::from_witness("cross_concave", points, witness);
    if report.passed() && smallest_delta.is_finite() {
        report.measure = Some(smallest_delta);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: RuleKind, k: usize) -> SelectionRuleSpec {
        SelectionRuleSpec::new(kind, k).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn evaluation_examples() {
        let f = spec(RuleKind::Proportional, 2).evaluate(&[0.5, 0.25]).unwrap();
        assert!(close(&f, &[2.0 / 3.0, 1.0 / 3.0]));
        let f = spec(RuleKind::Markovian, 2).evaluate(&[0.5, 0.0]).unwrap();
        assert!(close(&f, &[2.0 / 3.0, 1.0 / 3.0]));
        let f = spec(RuleKind::Majority, 3).evaluate(&[0.7, 0.7, 0.2]).unwrap();
        assert_eq!(f, vec![0.5, 0.5, 0.0]);
        let g = spec(RuleKind::GammaPower, 3);
        assert!((g.evaluate(&[1.0, 1.0, 0.0]).unwrap()[0] - 0.8).abs() < 1e-15);
        assert!((g.evaluate(&[1.0, 0.0, 1.0]).unwrap()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn boundary_conventions() {
        let f = spec(RuleKind::Proportional, 3).evaluate(&[0.0; 3]).unwrap();
        assert!(close(&f, &[1.0 / 3.0; 3]));
        let f = spec(RuleKind::Markovian, 3).evaluate(&[1.0, 0.3, 1.0]).unwrap();
        assert_eq!(f, vec![0.5, 0.0, 0.5]);
        let w = spec(RuleKind::WeightedProportional(vec![3.0, 1.0]), 2);
        assert_eq!(w.evaluate(&[0.0, 0.0]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(
            spec(RuleKind::GammaPower, 3).evaluate(&[0.0; 3]).unwrap(),
            vec![1.0 / 3.0; 3]
        );
    }

    #[test]
    fn truncated_indifferent_values() {
        let r = spec(RuleKind::TruncatedIndifferent(4), 5);
        let f = r.evaluate(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(close(&f, &[0.25, 0.25, 0.25, 0.25, 0.0]));
        let f = r.evaluate(&[0.6, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        // each ordinary engine: min(1/4, (1 - 0.9)/2) = 0.05
        let f = r.evaluate(&[0.3, 0.3, 0.3, 0.3, 0.0]).unwrap();
        assert!(close(&f, &[0.05, 0.05, 0.05, 0.05, 0.8]));
    }

    #[test]
    fn domain_and_configuration_errors() {
        let p = spec(RuleKind::Proportional, 2);
        assert!(matches!(p.evaluate(&[1.2, 0.0]), Err(Error::Domain { engine: 0, .. })));
        assert!(matches!(p.evaluate(&[0.5]), Err(Error::EngineCountMismatch { .. })));
        assert!(SelectionRuleSpec::new(RuleKind::GammaPower, 2).is_err());
        assert!(SelectionRuleSpec::new(RuleKind::TruncatedIndifferent(3), 3).is_err());
        assert!(SelectionRuleSpec::new(RuleKind::WeightedProportional(vec![1.0, 0.0]), 2).is_err());
    }

    #[test]
    fn evaluate_engine_agrees_with_evaluate() {
        let rules = [
            spec(RuleKind::Proportional, 3),
            spec(RuleKind::Markovian, 3),
            spec(RuleKind::Majority, 3),
            spec(RuleKind::WeightedProportional(vec![1.0, 2.0, 5.0]), 3),
            spec(RuleKind::GammaPower, 3),
        ];
        let qs = [[0.0, 0.0, 0.0], [0.2, 0.5, 0.5], [1.0, 0.4, 1.0], [0.9, 0.0, 0.3]];
        for r in &rules {
            for q in &qs {
                let f = r.evaluate(q).unwrap();
                for i in 0..3 {
                    assert!((r.evaluate_engine(i, q).unwrap() - f[i]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn concave_proportional_second_differences() {
        let p = spec(RuleKind::Proportional, 2);
        let d = second_differences(&p, 0, &[0.5], 1.0 / 16.0).unwrap();
        assert!(d.iter().all(|(_, v)| *v < 0.0));
    }
}
