//! Markovian user model: the user keeps or switches engines after each query
//! depending on whether it was satisfied.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{PropertyReport, Witness};
use crate::rules::check_profile;

const ROW_TOLERANCE: f64 = 1e-12;
pub const POWER_TOLERANCE: f64 = 1e-14;
pub const POWER_MAX_ITER: usize = 1_000_000;

/// Success and failure transition matrices over engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovUserModel {
    success: Vec<Vec<f64>>,
    failure: Vec<Vec<f64>>,
}

impl MarkovUserModel {
    pub fn new(success: Vec<Vec<f64>>, failure: Vec<Vec<f64>>) -> Result<Self> {
        let k = success.len();
        if k == 0 || failure.len() != k {
            return Err(Error::Configuration(format!(
                "transition matrices have {k} and {} rows",
                failure.len()
            )));
        }
        for (name, m) in [("success", &success), ("failure", &failure)] {
            for (i, row) in m.iter().enumerate() {
                if row.len() != k {
                    return Err(Error::Configuration(format!(
                        "{name} row {i} has {} entries, expected {k}",
                        row.len()
                    )));
                }
                if row.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::Configuration(format!(
                        "{name} row {i} has an entry outside [0, 1]"
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::Configuration(format!(
                        "{name} row {i} sums to {s}"
                    )));
                }
            }
        }
        let model = MarkovUserModel { success, failure };
        let half = vec![0.5; k];
        let classes = strongly_connected(&model.transition(&half));
        if classes.len() > 1 {
            return Err(Error::Reducible {
                q: half,
                classes,
            });
        }
        Ok(model)
    }

    /// Stays after success; switches uniformly to another engine after failure.
    pub fn markovian_basic(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Configuration("need at least two engines".into()));
        }
        let success = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let other = 1.0 / (k - 1) as f64;
        let failure = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { other }).collect())
            .collect();
        Self::new(success, failure)
    }

    pub fn engines(&self) -> usize {
        self.success.len()
    }

    pub fn success(&self) -> &[Vec<f64>] {
        &self.success
    }

    pub fn failure(&self) -> &[Vec<f64>] {
        &self.failure
    }

    pub fn exit_success(&self, i: usize) -> f64 {
        1.0 - self.success[i][i]
    }

    pub fn exit_failure(&self, i: usize) -> f64 {
        1.0 - self.failure[i][i]
    }

    /// `P(q) = diag(q)·T^s + diag(1−q)·T^f`.
    pub fn transition(&self, q: &[f64]) -> Vec<Vec<f64>> {
        let k = self.engines();
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| q[i] * self.success[i][j] + (1.0 - q[i]) * self.failure[i][j])
                    .collect()
            })
            .collect()
    }
}

fn reach(p: &[Vec<f64>], from: usize) -> Vec<bool> {
    let k = p.len();
    let mut seen = vec![false; k];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if p[i][j] > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Communicating classes of the chain, in order of their smallest state.
fn strongly_connected(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let k = p.len();
    let reachable: Vec<Vec<bool>> = (0..k).map(|i| reach(p, i)).collect();
    let mut assigned = vec![false; k];
    let mut classes = Vec::new();
    for i in 0..k {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..k)
            .filter(|&j| reachable[i][j] && reachable[j][i])
            .collect();
        for &j in &class {
            assigned[j] = true;
        }
        classes.push(class);
    }
    classes
}

/// Classes that the chain cannot leave.
fn closed_classes(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
    strongly_connected(p)
        .into_iter()
        .filter(|class| {
            class
                .iter()
                .all(|&i| (0..p.len()).all(|j| p[i][j] == 0.0 || class.contains(&j)))
        })
        .collect()
}

fn require_unique(model: &MarkovUserModel, q: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_profile(q, model.engines())?;
    let p = model.transition(q);
    let closed = closed_classes(&p);
    if closed.len() != 1 {
        return Err(Error::Reducible {
            q: q.to_vec(),
            classes: closed,
        });
    }
    Ok(p)
}

fn clean_distribution(mut pi: Vec<f64>) -> Result<Vec<f64>> {
    for x in pi.iter_mut() {
        if !x.is_finite() {
            return Err(Error::Numeric("stationary solve produced a non-finite value".into()));
        }
        *x = x.max(0.0);
    }
    let s: f64 = pi.iter().sum();
    if s <= 0.0 {
        return Err(Error::Numeric("stationary solve produced a zero vector".into()));
    }
    Ok(pi.into_iter().map(|x| x / s).collect())
}

/// Stationary distribution by a direct linear solve.
pub fn stationary(model: &MarkovUserModel, q: &[f64]) -> Result<Vec<f64>> {
    let p = require_unique(model, q)?;
    let k = p.len();
    // rows of (P^T − I), last balance equation replaced by Σπ = 1
    let a = DMatrix::from_fn(k, k, |r, c| {
        if r == k - 1 {
            1.0
        } else {
            p[c][r] - if r == c { 1.0 } else { 0.0 }
        }
    });
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numeric("singular stationary system".into()))?;
    clean_distribution(pi.iter().copied().collect())
}

/// Stationary distribution by power iteration on the lazy chain `(P+I)/2`.
pub fn stationary_power(
    model: &MarkovUserModel,
    q: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let p = require_unique(model, q)?;
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..max_iter {
        for j in 0..k {
            next[j] = 0.5 * pi[j];
        }
        for i in 0..k {
            for j in 0..k {
                next[j] += 0.5 * pi[i] * p[i][j];
            }
        }
        let diff = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            return clean_distribution(pi);
        }
    }
    Err(Error::Numeric(format!(
        "power iteration did not reach {tol} in {max_iter} iterations"
    )))
}

/// Expected rounds until the user is back at engine `i`, after leaving it
/// following a success (`success`) or a failure (`failure`).
///
/// `None` means the corresponding exit probability is zero, so the value is
/// never used. `f64::INFINITY` means the user may never come back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnTimes {
    pub success: Option<f64>,
    pub failure: Option<f64>,
}

/// Expected hitting time of `target` from every state (0 for the target).
fn hitting_times(p: &[Vec<f64>], target: usize) -> Result<Vec<f64>> {
    let k = p.len();
    // states that reach the target with probability one
    let mut sure: Vec<bool> = {
        let mut back = vec![false; k];
        back[target] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..k {
                if !back[i] && (0..k).any(|j| p[i][j] > 0.0 && back[j]) {
                    back[i] = true;
                    changed = true;
                }
            }
        }
        back
    };
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..k {
            if i != target && sure[i] && (0..k).any(|j| p[i][j] > 0.0 && !sure[j]) {
                sure[i] = false;
                changed = true;
            }
        }
    }
    let idx: Vec<usize> = (0..k).filter(|&i| i != target && sure[i]).collect();
    let mut h = vec![f64::INFINITY; k];
    h[target] = 0.0;
    if !idx.is_empty() {
        let m = idx.len();
        let a = DMatrix::from_fn(m, m, |r, c| {
            let v = -p[idx[r]][idx[c]];
            if r == c {
                1.0 + v
            } else {
                v
            }
        });
        let b = DVector::from_element(m, 1.0);
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numeric("singular hitting-time system".into()))?;
        for (r, &i) in idx.iter().enumerate() {
            h[i] = sol[r];
        }
    }
    Ok(h)
}

fn post_exit_return(row: &[f64], i: usize, h: &[f64]) -> Option<f64> {
    let exit = 1.0 - row[i];
    if exit <= 0.0 {
        return None;
    }
    let mut r = 0.0;
    for (j, &t) in row.iter().enumerate() {
        if j != i && t > 0.0 {
            r += t * h[j];
        }
    }
    Some(r / exit)
}

pub fn return_times(model: &MarkovUserModel, q: &[f64], i: usize) -> Result<ReturnTimes> {
    check_profile(q, model.engines())?;
    if i >= model.engines() {
        return Err(Error::Configuration(format!("engine {i} out of range")));
    }
    let h = hitting_times(&model.transition(q), i)?;
    Ok(ReturnTimes {
        success: post_exit_return(&model.success[i], i, &h),
        failure: post_exit_return(&model.failure[i], i, &h),
    })
}

/// `e·r`, with an unused return time contributing exactly zero.
fn exit_weight(exit: f64, r: Option<f64>) -> f64 {
    match r {
        None => 0.0,
        Some(r) => exit * r,
    }
}

/// `q·w`, with `0·∞ = 0`.
fn scaled(q: f64, w: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        q * w
    }
}

/// Stationary distribution from stay lengths and return times.
pub fn closed_form_stationary(model: &MarkovUserModel, q: &[f64]) -> Result<Vec<f64>> {
    require_unique(model, q)?;
    let k = model.engines();
    let mut pi = Vec::with_capacity(k);
    for i in 0..k {
        let r = return_times(model, q, i)?;
        let ws = exit_weight(model.exit_success(i), r.success);
        let wf = exit_weight(model.exit_failure(i), r.failure);
        let d = 1.0 + scaled(q[i], ws) + scaled(1.0 - q[i], wf);
        pi.push(1.0 / d);
    }
    let s: f64 = pi.iter().sum();
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Numeric("closed form produced no mass".into()));
    }
    Ok(pi.into_iter().map(|x| x / s).collect())
}

/// First and second derivative of the unnormalized closed form
/// `1 / (1 + q_i e^s r^s + (1−q_i) e^f r^f)` in `q_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryDerivatives {
    pub first: f64,
    pub second: f64,
}

pub fn stationary_derivatives(
    model: &MarkovUserModel,
    q: &[f64],
    i: usize,
) -> Result<StationaryDerivatives> {
    require_unique(model, q)?;
    let r = return_times(model, q, i)?;
    let ws = exit_weight(model.exit_success(i), r.success);
    let wf = exit_weight(model.exit_failure(i), r.failure);
    if !(ws.is_finite() && wf.is_finite()) {
        return Err(Error::Numeric(format!(
            "engine {i} is not revisited almost surely; derivative undefined"
        )));
    }
    let c = wf - ws;
    let d = 1.0 + wf * (1.0 - q[i]) + ws * q[i];
    Ok(StationaryDerivatives {
        first: c / (d * d),
        second: 2.0 * c * c / (d * d * d),
    })
}

const RETURN_SLACK: f64 = 1e-10;

/// Leaving after a success is never more likely than after a failure, and
/// the user returns no slower after a success.
pub fn check_markov_monotone(model: &MarkovUserModel, samples: usize, seed: u64) -> PropertyReport {
    let k = model.engines();
    for i in 0..k {
        let (s, f) = (model.success[i][i], model.failure[i][i]);
        if s < f {
            let mut report = PropertyReport::from_witness(
                "markov_monotone",
                0,
                Some(Witness {
                    q: vec![],
                    engine: i,
                    detail: format!("stay probability after success {s} below {f} after failure"),
                    value: s - f,
                }),
            );
            report.strict = Some(false);
            return report;
        }
    }
    let strict = (0..k).all(|i| model.success[i][i] > model.failure[i][i]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witness = None;
    let mut points = 0;
    'outer: for _ in 0..samples {
        let q: Vec<f64> = (0..k).map(|_| rng.gen()).collect();
        for i in 0..k {
            points += 1;
            match return_times(model, &q, i) {
                Ok(ReturnTimes {
                    success: Some(rs),
                    failure: Some(rf),
                }) => {
                    if rs > rf + RETURN_SLACK {
                        witness = Some(Witness {
                            q: q.clone(),
                            engine: i,
                            detail: format!("return time after success {rs} exceeds {rf}"),
                            value: rs - rf,
                        });
                        break 'outer;
                    }
                }
                Ok(_) => {}
                Err(e) => {
                    witness = Some(Witness {
                        q: q.clone(),
                        engine: i,
                        detail: format!("return times failed: {e}"),
                        value: f64::NAN,
                    });
                    break 'outer;
                }
            }
        }
    }
    let failed = witness.is_some();
    let mut report = PropertyReport::from_witness("markov_monotone", points, witness);
    report.strict = Some(!failed && strict);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_swap() -> MarkovUserModel {
        MarkovUserModel::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn stationary_examples() {
        let m = identity_swap();
        assert!(close(&stationary(&m, &[0.3, 0.3]).unwrap(), &[0.5, 0.5], 1e-14));
        assert!(close(&stationary(&m, &[0.5, 0.0]).unwrap(), &[2.0 / 3.0, 1.0 / 3.0], 1e-14));
        let m3 = MarkovUserModel::markovian_basic(3).unwrap();
        assert!(close(&stationary(&m3, &[0.0; 3]).unwrap(), &[1.0 / 3.0; 3], 1e-14));
    }

    #[test]
    fn power_iteration_agrees() {
        let m = identity_swap();
        let q = [0.5, 0.0];
        let a = stationary(&m, &q).unwrap();
        let b = stationary_power(&m, &q, POWER_TOLERANCE, POWER_MAX_ITER).unwrap();
        assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn two_absorbing_engines_are_reported() {
        let m = identity_swap();
        match stationary(&m, &[1.0, 1.0]) {
            Err(Error::Reducible { classes, .. }) => assert_eq!(classes, vec![vec![0], vec![1]]),
            other => panic!("expected reducible, got {other:?}"),
        }
    }

    #[test]
    fn single_absorbing_engine_is_fine() {
        let m = identity_swap();
        assert_eq!(stationary(&m, &[1.0, 0.4]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn reducible_model_rejected_at_construction() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            MarkovUserModel::new(id.clone(), id),
            Err(Error::Reducible { .. })
        ));
    }

    #[test]
    fn return_time_examples() {
        let m = identity_swap();
        let r = return_times(&m, &[0.3, 0.0], 0).unwrap();
        assert_eq!(r.success, None);
        assert!((r.failure.unwrap() - 1.0).abs() < 1e-14);
        let r = return_times(&m, &[0.3, 0.5], 0).unwrap();
        assert!((r.failure.unwrap() - 2.0).abs() < 1e-14);

        // from engine j ≠ i the user switches to i w.p. 1/2 each round
        let m3 = MarkovUserModel::markovian_basic(3).unwrap();
        for i in 0..3 {
            let r = return_times(&m3, &[0.0; 3], i).unwrap();
            assert!((r.failure.unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_examples() {
        let m = identity_swap();
        let q = [0.5, 0.0];
        assert!(close(
            &closed_form_stationary(&m, &q).unwrap(),
            &[2.0 / 3.0, 1.0 / 3.0],
            1e-12
        ));
    }

    #[test]
    fn derivatives_vanish_when_exit_weights_match() {
        let t = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let m = MarkovUserModel::new(t.clone(), t).unwrap();
        let d = stationary_derivatives(&m, &[0.3, 0.6], 0).unwrap();
        assert_eq!((d.first, d.second), (0.0, 0.0));
    }

    #[test]
    fn monotonicity_examples() {
        let r = check_markov_monotone(&identity_swap(), 50, 42);
        assert!(r.passed());
        assert_eq!(r.strict, Some(true));

        let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let m = MarkovUserModel::new(swap.clone(), swap.clone()).unwrap();
        let r = check_markov_monotone(&m, 50, 42);
        assert!(r.passed());
        assert_eq!(r.strict, Some(false));

        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = MarkovUserModel::new(swap, id).unwrap();
        assert!(!check_markov_monotone(&m, 50, 42).passed());
    }
}
