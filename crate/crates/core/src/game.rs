//! Game data model: user types, the type distribution, engine strategies,
//! and evaluation of satisfaction probabilities, engine payoffs and searcher
//! welfare.
//!
//! An engine's strategy is a distribution over page orderings. Two orderings
//! that agree on the first `max_threshold` slots satisfy exactly the same
//! users, so orderings are represented by their truncated prefix: a *chain*
//! `[p_1, .., p_T]` of distinct pages, where the top `t` slots hold
//! `{p_1, .., p_t}`. When every user looks at a single slot the chain is a
//! single page and the dense [`SingletonStrategy`] is used instead.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::SelectionRule;

/// Tolerance for "sums to one" checks on probability vectors.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Largest support for which general position is checked exactly.
pub const GENERAL_POSITION_MAX_SUPPORT: usize = 20;

/// A user's desired page set and patience threshold.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserType {
    pages: Vec<usize>,
    threshold: usize,
}

impl UserType {
    pub fn new(pages: impl IntoIterator<Item = usize>, threshold: usize) -> Result<Self> {
        let mut pages: Vec<usize> = pages.into_iter().collect();
        pages.sort_unstable();
        pages.dedup();
        if pages.is_empty() {
            return Err(Error::InvalidType("desired page set is empty".into()));
        }
        if threshold == 0 {
            return Err(Error::InvalidType("threshold must be at least 1".into()));
        }
        Ok(UserType { pages, threshold })
    }

    /// A user who wants exactly `page` and only looks at the first slot.
    pub fn singleton(page: usize) -> Self {
        UserType {
            pages: vec![page],
            threshold: 1,
        }
    }

    pub fn pages(&self) -> &[usize] {
        &self.pages
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn contains(&self, page: usize) -> bool {
        self.pages.binary_search(&page).is_ok()
    }

    /// Whether the top `threshold` pages of `chain` include a desired page.
    pub fn satisfied_by(&self, chain: &[usize]) -> bool {
        chain
            .iter()
            .take(self.threshold)
            .any(|&p| self.contains(p))
    }
}

/// The commonly known distribution over user types.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    entries: Vec<(UserType, f64)>,
    num_pages: usize,
}

impl TypeDistribution {
    /// Validates without touching the probabilities.
    pub fn new(num_pages: usize, entries: Vec<(UserType, f64)>) -> Result<Self> {
        if num_pages == 0 {
            return Err(Error::InvalidDistribution("need at least one page".into()));
        }
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("no user types".into()));
        }
        let mut seen = BTreeMap::new();
        let mut covered = vec![false; num_pages];
        for (idx, (ty, p)) in entries.iter().enumerate() {
            if !p.is_finite() || *p <= 0.0 || *p > 1.0 {
                return Err(Error::InvalidDistribution(format!(
                    "type {idx} has probability {p}, expected a value in (0, 1]"
                )));
            }
            for &page in ty.pages() {
                if page >= num_pages {
                    return Err(Error::InvalidType(format!(
                        "type {idx} desires page {page} but there are only {num_pages} pages"
                    )));
                }
                covered[page] = true;
            }
            if let Some(prev) = seen.insert(ty.clone(), idx) {
                return Err(Error::InvalidDistribution(format!(
                    "types {prev} and {idx} are identical"
                )));
            }
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        if let Some(page) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidDistribution(format!(
                "page {page} is not desired by any type"
            )));
        }
        Ok(TypeDistribution { entries, num_pages })
    }

    /// Rescales positive weights to sum to one, then validates.
    pub fn normalized(num_pages: usize, mut entries: Vec<(UserType, f64)>) -> Result<Self> {
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        for (_, w) in entries.iter_mut() {
            *w /= total;
        }
        Self::new(num_pages, entries)
    }

    /// Singleton game: page `n` is wanted by a slot-1 user with probability `probs[n]`.
    pub fn singleton(probs: &[f64]) -> Result<Self> {
        Self::new(probs.len(), singleton_entries(probs))
    }

    pub fn singleton_normalized(weights: &[f64]) -> Result<Self> {
        Self::normalized(weights.len(), singleton_entries(weights))
    }

    pub fn entries(&self) -> &[(UserType, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_pages(&self) -> usize {
        self.num_pages
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, p)| *p).collect()
    }

    pub fn max_threshold(&self) -> usize {
        self.entries
            .iter()
            .map(|(t, _)| t.threshold())
            .max()
            .unwrap_or(1)
    }

    /// Every user wants a single page and looks at a single slot.
    pub fn is_singleton_game(&self) -> bool {
        self.entries
            .iter()
            .all(|(t, _)| t.threshold() == 1 && t.pages().len() == 1)
    }

    /// `Γ(n)` indexed by page, for singleton games.
    pub fn page_probabilities(&self) -> Option<Vec<f64>> {
        if !self.is_singleton_game() {
            return None;
        }
        let mut probs = vec![0.0; self.num_pages];
        for (ty, p) in &self.entries {
            probs[ty.pages()[0]] += p;
        }
        Some(probs)
    }
}

fn singleton_entries(probs: &[f64]) -> Vec<(UserType, f64)> {
    probs
        .iter()
        .enumerate()
        .map(|(n, &p)| (UserType::singleton(n), p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    pub beta: f64,
    pub engines: usize,
    pub pages: usize,
    pub max_threshold: usize,
}

impl GameConfig {
    pub fn new(beta: f64, engines: usize, pages: usize, max_threshold: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Configuration(format!("beta = {beta} is outside [0, 1]")));
        }
        if engines < 2 {
            return Err(Error::Configuration(format!(
                "need at least two engines, got {engines}"
            )));
        }
        if pages == 0 {
            return Err(Error::Configuration("need at least one page".into()));
        }
        if max_threshold == 0 || max_threshold > pages {
            return Err(Error::Configuration(format!(
                "max_threshold = {max_threshold} must lie in 1..={pages}"
            )));
        }
        Ok(GameConfig {
            beta,
            engines,
            pages,
            max_threshold,
        })
    }

    /// Singleton-game configuration for `gamma`.
    pub fn singleton(beta: f64, engines: usize, gamma: &TypeDistribution) -> Result<Self> {
        Self::new(beta, engines, gamma.num_pages(), 1)
    }

    pub fn check_types(&self, gamma: &TypeDistribution) -> Result<()> {
        if gamma.num_pages() != self.pages {
            return Err(Error::Configuration(format!(
                "type distribution has {} pages, configuration has {}",
                gamma.num_pages(),
                self.pages
            )));
        }
        if gamma.max_threshold() > self.max_threshold {
            return Err(Error::InvalidType(format!(
                "a type has threshold {} above max_threshold {}",
                gamma.max_threshold(),
                self.max_threshold
            )));
        }
        Ok(())
    }
}

/// Anything that assigns a satisfaction probability to a user type.
pub trait Strategy {
    fn satisfaction(&self, ty: &UserType) -> Result<f64>;
}

/// Dense slot-1 page distribution used when every threshold is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletonStrategy {
    #[serde(with = "crate::canonical::prob_vec")]
    probs: Vec<f64>,
}

impl SingletonStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty page distribution".into()));
        }
        if let Some((n, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::InvalidStrategy(format!(
                "page {n} has probability {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidStrategy(format!(
                "page probabilities sum to {total}"
            )));
        }
        Ok(SingletonStrategy { probs })
    }

    /// Clamps negatives to zero and rescales to sum to one.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return Err(Error::InvalidStrategy("non-finite weight".into()));
            }
            *w = w.max(0.0);
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidStrategy("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn deterministic(page: usize, num_pages: usize) -> Self {
        let mut probs = vec![0.0; num_pages];
        probs[page] = 1.0;
        SingletonStrategy { probs }
    }

    pub fn uniform(num_pages: usize) -> Self {
        SingletonStrategy {
            probs: vec![1.0 / num_pages as f64; num_pages],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_pages(&self) -> usize {
        self.probs.len()
    }

    /// The page played with certainty, if any.
    pub fn deterministic_page(&self) -> Option<usize> {
        self.probs.iter().position(|&p| p == 1.0)
    }

    pub fn max_abs_diff(&self, other: &SingletonStrategy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Strategy for SingletonStrategy {
    fn satisfaction(&self, ty: &UserType) -> Result<f64> {
        if ty.threshold() != 1 {
            return Err(Error::InvalidType(format!(
                "threshold {} exceeds the single displayed slot",
                ty.threshold()
            )));
        }
        let mut q = 0.0;
        for &page in ty.pages() {
            q += self.probs.get(page).ok_or_else(|| {
                Error::InvalidType(format!("page {page} outside the strategy's {} pages", self.probs.len()))
            })?;
        }
        Ok(q.min(1.0))
    }
}

/// One chain of a [`PrefixChainStrategy`] together with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAtom {
    pub pages: Vec<usize>,
    #[serde(with = "crate::canonical::prob")]
    pub weight: f64,
}

/// Distribution over prefix chains of length `max_threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixChainStrategy {
    chains: Vec<ChainAtom>,
}

impl PrefixChainStrategy {
    /// Validates chain shape and weights; duplicate chains are merged.
    pub fn new(num_pages: usize, atoms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let Some(len) = atoms.first().map(|(c, _)| c.len()) else {
            return Err(Error::InvalidStrategy("no chains".into()));
        };
        if len == 0 {
            return Err(Error::InvalidStrategy("chains must be non-empty".into()));
        }
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (chain, w) in atoms {
            if chain.len() != len {
                return Err(Error::InvalidStrategy(format!(
                    "chain {chain:?} has length {}, expected {len}",
                    chain.len()
                )));
            }
            let mut sorted = chain.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != chain.len() || sorted.last().is_some_and(|&p| p >= num_pages) {
                return Err(Error::InvalidStrategy(format!(
                    "chain {chain:?} must hold distinct pages below {num_pages}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidStrategy(format!(
                    "chain {chain:?} has weight {w}"
                )));
            }
            *merged.entry(chain).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidStrategy(format!(
                "chain weights sum to {total}"
            )));
        }
        Ok(PrefixChainStrategy {
            chains: merged
                .into_iter()
                .map(|(pages, weight)| ChainAtom { pages, weight })
                .collect(),
        })
    }

    pub fn deterministic(chain: Vec<usize>) -> Self {
        PrefixChainStrategy {
            chains: vec![ChainAtom {
                pages: chain,
                weight: 1.0,
            }],
        }
    }

    pub fn atoms(&self) -> &[ChainAtom] {
        &self.chains
    }

    pub fn chain_len(&self) -> usize {
        self.chains[0].pages.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.chains.len() == 1
    }

    /// `w·self + (1−w)·other`.
    pub fn mixture(&self, other: &Self, w: f64, num_pages: usize) -> Result<Self> {
        let atoms = self
            .chains
            .iter()
            .map(|a| (a.pages.clone(), a.weight * w))
            .chain(other.chains.iter().map(|a| (a.pages.clone(), a.weight * (1.0 - w))))
            .filter(|(_, weight)| *weight > 0.0)
            .collect();
        Self::new(num_pages, atoms)
    }
}

impl Strategy for PrefixChainStrategy {
    fn satisfaction(&self, ty: &UserType) -> Result<f64> {
        if ty.threshold() > self.chain_len() {
            return Err(Error::InvalidType(format!(
                "threshold {} exceeds max_threshold {}",
                ty.threshold(),
                self.chain_len()
            )));
        }
        let q: f64 = self
            .chains
            .iter()
            .filter(|a| ty.satisfied_by(&a.pages))
            .map(|a| a.weight)
            .sum();
        Ok(q.min(1.0))
    }
}

/// Either strategy representation; the form stored in profile files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EngineStrategy {
    Singleton(SingletonStrategy),
    Chains(PrefixChainStrategy),
}

impl EngineStrategy {
    pub fn is_deterministic(&self) -> bool {
        match self {
            EngineStrategy::Singleton(s) => s.deterministic_page().is_some(),
            EngineStrategy::Chains(c) => c.is_deterministic(),
        }
    }
}

impl Strategy for EngineStrategy {
    fn satisfaction(&self, ty: &UserType) -> Result<f64> {
        match self {
            EngineStrategy::Singleton(s) => s.satisfaction(ty),
            EngineStrategy::Chains(c) => c.satisfaction(ty),
        }
    }
}

impl From<SingletonStrategy> for EngineStrategy {
    fn from(s: SingletonStrategy) -> Self {
        EngineStrategy::Singleton(s)
    }
}

impl From<PrefixChainStrategy> for EngineStrategy {
    fn from(s: PrefixChainStrategy) -> Self {
        EngineStrategy::Chains(s)
    }
}

/// Per-engine satisfaction probabilities for one user type.
#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionProfile(Vec<f64>);

impl SatisfactionProfile {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        for (engine, &value) in q.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Domain { engine, value });
            }
        }
        Ok(SatisfactionProfile(q))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for SatisfactionProfile {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn satisfaction_probability<S: Strategy + ?Sized>(strategy: &S, ty: &UserType) -> Result<f64> {
    strategy.satisfaction(ty)
}

pub fn profile_satisfaction<S: Strategy>(
    profile: &[S],
    ty: &UserType,
    engines: usize,
) -> Result<SatisfactionProfile> {
    if profile.len() != engines {
        return Err(Error::EngineCountMismatch {
            expected: engines,
            actual: profile.len(),
        });
    }
    let q = profile
        .iter()
        .map(|s| s.satisfaction(ty))
        .collect::<Result<Vec<_>>>()?;
    SatisfactionProfile::new(q)
}

/// Payoffs and welfare of one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub payoffs: Vec<f64>,
    pub welfare: f64,
}

/// A game instance viewed through a (possibly custom) selection rule.
#[derive(Debug, Clone, Copy)]
pub struct Game<'a> {
    pub config: &'a GameConfig,
    pub types: &'a TypeDistribution,
    pub rule: &'a dyn SelectionRule,
}

impl<'a> Game<'a> {
    pub fn new(
        config: &'a GameConfig,
        types: &'a TypeDistribution,
        rule: &'a dyn SelectionRule,
    ) -> Result<Self> {
        config.check_types(types)?;
        if rule.engines() != config.engines {
            return Err(Error::EngineCountMismatch {
                expected: config.engines,
                actual: rule.engines(),
            });
        }
        Ok(Game {
            config,
            types,
            rule,
        })
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn engines(&self) -> usize {
        self.config.engines
    }

    /// Satisfaction matrix: `q[type][engine]`.
    pub fn satisfaction_matrix<S: Strategy>(&self, profile: &[S]) -> Result<Vec<Vec<f64>>> {
        self.types
            .entries()
            .iter()
            .map(|(ty, _)| profile_satisfaction(profile, ty, self.engines()).map(|q| q.into_vec()))
            .collect()
    }

    pub fn outcome<S: Strategy>(&self, profile: &[S]) -> Result<Outcome> {
        let sat = self.satisfaction_matrix(profile)?;
        self.outcome_from_satisfaction(&sat)
    }

    pub(crate) fn outcome_from_satisfaction(&self, sat: &[Vec<f64>]) -> Result<Outcome> {
        let beta = self.beta();
        let mut payoffs = vec![0.0; self.engines()];
        let mut welfare = 0.0;
        for ((_, gamma), q) in self.types.entries().iter().zip(sat) {
            let f = self.rule.evaluate(q)?;
            for i in 0..payoffs.len() {
                payoffs[i] += gamma * f[i] * (beta + (1.0 - beta) * q[i]);
                welfare += gamma * f[i] * q[i];
            }
        }
        Ok(Outcome { payoffs, welfare })
    }

    pub fn payoffs<S: Strategy>(&self, profile: &[S]) -> Result<Vec<f64>> {
        Ok(self.outcome(profile)?.payoffs)
    }

    pub fn welfare<S: Strategy>(&self, profile: &[S]) -> Result<f64> {
        Ok(self.outcome(profile)?.welfare)
    }
}

/// `payoff_i = Σ Γ(S,t) · f_i(q(S,t)) · (β + (1−β)·q_i(S,t))`.
pub fn engine_payoffs<S: Strategy>(
    profile: &[S],
    rule: &dyn SelectionRule,
    config: &GameConfig,
    gamma: &TypeDistribution,
) -> Result<Vec<f64>> {
    Game::new(config, gamma, rule)?.payoffs(profile)
}

/// Probability that a user drawn from `gamma` is satisfied by the engine he picks.
pub fn welfare<S: Strategy>(
    profile: &[S],
    rule: &dyn SelectionRule,
    config: &GameConfig,
    gamma: &TypeDistribution,
) -> Result<f64> {
    Game::new(config, gamma, rule)?.welfare(profile)
}

/// Result of the general-position check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeneralPosition {
    General,
    /// Two distinct index sets with equal total probability.
    Degenerate { left: Vec<usize>, right: Vec<usize> },
    /// Support too large for the exact subset-sum comparison.
    Unchecked { support: usize },
}

impl GeneralPosition {
    pub fn is_general(&self) -> bool {
        matches!(self, GeneralPosition::General)
    }
}

pub fn is_general_position(gamma: &TypeDistribution) -> GeneralPosition {
    general_position_of(&gamma.probabilities())
}

/// Compares all `2^n` subset sums of `probs`.
pub fn general_position_of(probs: &[f64]) -> GeneralPosition {
    let n = probs.len();
    if n > GENERAL_POSITION_MAX_SUPPORT {
        return GeneralPosition::Unchecked { support: n };
    }
    let mut sums: Vec<(f64, u32)> = Vec::with_capacity(1 << n);
    sums.push((0.0, 0));
    for (bit, &p) in probs.iter().enumerate() {
        let len = sums.len();
        for j in 0..len {
            let (s, mask) = sums[j];
            sums.push((s + p, mask | (1 << bit)));
        }
    }
    sums.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sums.windows(2) {
        if (w[1].0 - w[0].0).abs() <= PROB_TOLERANCE {
            let bits = |m: u32| (0..n).filter(|b| m & (1 << b) != 0).collect();
            return GeneralPosition::Degenerate {
                left: bits(w[0].1),
                right: bits(w[1].1),
            };
        }
    }
    GeneralPosition::General
}

/// Adds seeded uniform noise in `[-scale, scale]` to each probability,
/// renormalizes, and re-checks general position.
pub fn perturb_general_position(
    gamma: &TypeDistribution,
    scale: f64,
    seed: u64,
) -> Result<(TypeDistribution, GeneralPosition)> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(Error::InvalidDistribution(format!("perturbation scale {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<(UserType, f64)> = gamma
        .entries()
        .iter()
        .map(|(t, p)| (t.clone(), p + scale * rng.gen_range(-1.0..=1.0)))
        .collect();
    if let Some((t, p)) = entries.iter().find(|(_, p)| *p <= 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "perturbation drove type {t:?} to {p}; use a smaller scale"
        )));
    }
    let perturbed = TypeDistribution::normalized(gamma.num_pages(), entries)?;
    let status = is_general_position(&perturbed);
    Ok((perturbed, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{RuleKind, SelectionRuleSpec};

    fn ty(pages: &[usize], t: usize) -> UserType {
        UserType::new(pages.iter().copied(), t).unwrap()
    }

    #[test]
    fn deterministic_chain_indicator() {
        let s = PrefixChainStrategy::deterministic(vec![0]);
        assert_eq!(s.satisfaction(&ty(&[0], 1)).unwrap(), 1.0);
        assert_eq!(s.satisfaction(&ty(&[1], 1)).unwrap(), 0.0);
    }

    #[test]
    fn even_mixture_of_two_pages() {
        let s = PrefixChainStrategy::new(2, vec![(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        assert_eq!(s.satisfaction(&ty(&[0], 1)).unwrap(), 0.5);
    }

    #[test]
    fn second_slot_counts_for_patient_users() {
        // pages a,b,c,d = 0,1,2,3
        let s = PrefixChainStrategy::new(4, vec![(vec![0, 1], 0.3), (vec![2, 3], 0.7)]).unwrap();
        assert!((s.satisfaction(&ty(&[1], 2)).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(s.satisfaction(&ty(&[1], 1)).unwrap(), 0.0);
    }

    #[test]
    fn threshold_above_chain_length_is_rejected() {
        let s = PrefixChainStrategy::deterministic(vec![0]);
        assert!(matches!(s.satisfaction(&ty(&[0], 2)), Err(Error::InvalidType(_))));
        let s = SingletonStrategy::deterministic(0, 2);
        assert!(matches!(s.satisfaction(&ty(&[0], 2)), Err(Error::InvalidType(_))));
    }

    #[test]
    fn profile_satisfaction_examples() {
        let a = PrefixChainStrategy::deterministic(vec![0]);
        let q = profile_satisfaction(&[a.clone(), a.clone()], &ty(&[0], 1), 2).unwrap();
        assert_eq!(q.as_slice(), &[1.0, 1.0]);
        let b = PrefixChainStrategy::deterministic(vec![1]);
        let q = profile_satisfaction(&[a.clone(), b], &ty(&[0], 1), 2).unwrap();
        assert_eq!(q.as_slice(), &[1.0, 0.0]);

        let mixed = PrefixChainStrategy::new(4, vec![(vec![0, 1], 0.3), (vec![2, 3], 0.7)]).unwrap();
        let det = PrefixChainStrategy::deterministic(vec![1, 2]);
        let q = profile_satisfaction(&[mixed, det], &ty(&[1], 2), 2).unwrap();
        assert!((q[0] - 0.3).abs() < 1e-15);
        assert_eq!(q[1], 1.0);

        assert!(matches!(
            profile_satisfaction(&[a], &ty(&[0], 1), 2),
            Err(Error::EngineCountMismatch { expected: 2, actual: 1 })
        ));
    }

    fn tight_k2(beta: f64) -> (GameConfig, TypeDistribution) {
        let gamma = TypeDistribution::singleton(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        (GameConfig::singleton(beta, 2, &gamma).unwrap(), gamma)
    }

    #[test]
    fn payoffs_on_the_tight_instance() {
        let rule = SelectionRuleSpec::new(RuleKind::Proportional, 2).unwrap();
        let both_first = vec![SingletonStrategy::deterministic(0, 2); 2];

        let (config, gamma) = tight_k2(0.0);
        let p = engine_payoffs(&both_first, &rule, &config, &gamma).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let w = welfare(&both_first, &rule, &config, &gamma).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-15);

        let (config, gamma) = tight_k2(1.0);
        let p = engine_payoffs(&both_first, &rule, &config, &gamma).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        let both_second = vec![SingletonStrategy::deterministic(1, 2); 2];
        let (config, gamma) = tight_k2(0.0);
        let w = welfare(&both_second, &rule, &config, &gamma).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn distinct_pages_satisfy_everyone_under_a_non_indifferent_rule() {
        let gamma = TypeDistribution::singleton(&[0.5, 0.5]).unwrap();
        let config = GameConfig::singleton(0.0, 2, &gamma).unwrap();
        let rule = SelectionRuleSpec::new(RuleKind::Majority, 2).unwrap();
        let profile = [
            SingletonStrategy::deterministic(0, 2),
            SingletonStrategy::deterministic(1, 2),
        ];
        assert_eq!(welfare(&profile, &rule, &config, &gamma).unwrap(), 1.0);
    }

    #[test]
    fn distribution_validation() {
        assert!(TypeDistribution::singleton(&[0.5, 0.4]).is_err());
        assert!(TypeDistribution::singleton(&[1.0, 0.0]).is_err());
        let dup = vec![(ty(&[0], 1), 0.5), (ty(&[0], 1), 0.5)];
        assert!(TypeDistribution::new(1, dup).is_err());
        let uncovered = vec![(ty(&[0], 1), 1.0)];
        assert!(TypeDistribution::new(2, uncovered).is_err());
        let g = TypeDistribution::singleton_normalized(&[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.page_probabilities().unwrap(), vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn general_position_examples() {
        let g = TypeDistribution::singleton(&[0.5, 0.3, 0.2]).unwrap();
        assert!(!is_general_position(&g).is_general());
        let (p, status) = perturb_general_position(&g, 1e-6, 42).unwrap();
        assert!(status.is_general());
        assert_eq!(is_general_position(&p), GeneralPosition::General);

        let g = TypeDistribution::singleton(&[0.6, 0.4]).unwrap();
        assert!(is_general_position(&g).is_general());

        let big = TypeDistribution::singleton_normalized(&[1.0; 21]).unwrap();
        assert_eq!(is_general_position(&big), GeneralPosition::Unchecked { support: 21 });
    }
}
