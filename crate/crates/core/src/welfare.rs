//! Social optimum, price of anarchy / stability, and welfare structure checks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{EngineStrategy, Game, GameConfig, PrefixChainStrategy, SingletonStrategy, TypeDistribution};
use crate::report::{PropertyReport, Witness};
use crate::rules::{SelectionRule, SelectionRuleSpec};

pub const MAX_EXHAUSTIVE_PROFILES: u128 = 1_000_000;
const STRUCTURE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumMode {
    Exhaustive,
    TopK,
    Greedy,
}

impl std::str::FromStr for OptimumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(OptimumMode::Exhaustive),
            "top_k" | "top-k" => Ok(OptimumMode::TopK),
            "greedy" => Ok(OptimumMode::Greedy),
            other => Err(Error::Configuration(format!("unknown optimum mode `{other}`"))),
        }
    }
}

/// What the reported welfare means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WelfareBound {
    /// Attained by the returned profile.
    Exact,
    /// Coverage only; the rule may send users to engines that fail them.
    CoverageUpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumResult {
    /// One deterministic chain per engine.
    pub chains: Vec<Vec<usize>>,
    pub welfare: f64,
    pub method: OptimumMode,
    pub approximate: bool,
    pub bound: WelfareBound,
}

impl OptimumResult {
    /// Marks the welfare as a coverage upper bound for rules known to
    /// violate non-indifference.
    pub fn for_rule(mut self, rule: &SelectionRuleSpec) -> Self {
        if rule.known_indifferent() {
            self.bound = WelfareBound::CoverageUpperBound;
        }
        self
    }

    pub fn profile(&self) -> Vec<EngineStrategy> {
        self.chains
            .iter()
            .map(|c| PrefixChainStrategy::deterministic(c.clone()).into())
            .collect()
    }

    pub fn singleton_profile(&self, num_pages: usize) -> Vec<SingletonStrategy> {
        self.chains
            .iter()
            .map(|c| SingletonStrategy::deterministic(c[0], num_pages))
            .collect()
    }
}

/// Satisfied mass when a user is satisfied as soon as any chain covers him.
pub fn coverage_welfare(gamma: &TypeDistribution, chains: &[Vec<usize>]) -> f64 {
    gamma
        .entries()
        .iter()
        .filter(|(ty, _)| chains.iter().any(|c| ty.satisfied_by(c)))
        .map(|(_, p)| p)
        .sum()
}

struct ChainUniverse {
    chains: Vec<Vec<usize>>,
    covers: Vec<Vec<usize>>,
}

impl ChainUniverse {
    fn new(gamma: &TypeDistribution, config: &GameConfig) -> Result<Self> {
        let n = config.pages;
        let t = config.max_threshold;
        let count: u128 = (0..t).map(|j| (n - j) as u128).product();
        if count > crate::equilibrium::MAX_CHAINS {
            return Err(Error::TooLarge {
                what: "prefix chains",
                count,
                limit: crate::equilibrium::MAX_CHAINS,
            });
        }
        let mut chains = Vec::new();
        let mut cur = Vec::new();
        let mut used = vec![false; n];
        fn rec(n: usize, t: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if cur.len() == t {
                out.push(cur.clone());
                return;
            }
            for p in 0..n {
                if !used[p] {
                    used[p] = true;
                    cur.push(p);
                    rec(n, t, cur, used, out);
                    cur.pop();
                    used[p] = false;
                }
            }
        }
        rec(n, t, &mut cur, &mut used, &mut chains);
        let covers = chains
            .iter()
            .map(|c| {
                gamma
                    .entries()
                    .iter()
                    .enumerate()
                    .filter(|(_, (ty, _))| ty.satisfied_by(c))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Ok(ChainUniverse { chains, covers })
    }
}

fn multiset_count(items: u128, k: u128) -> u128 {
    let n = items + k - 1;
    let r = k.min(n - k);
    (0..r).fold(1u128, |acc, j| acc.saturating_mul(n - j) / (j + 1))
}

fn exhaustive(gamma: &TypeDistribution, config: &GameConfig) -> Result<OptimumResult> {
    let uni = ChainUniverse::new(gamma, config)?;
    let k = config.engines;
    let count = multiset_count(uni.chains.len() as u128, k as u128);
    if count > MAX_EXHAUSTIVE_PROFILES {
        return Err(Error::TooLarge {
            what: "deterministic profiles",
            count,
            limit: MAX_EXHAUSTIVE_PROFILES,
        });
    }
    let probs = gamma.probabilities();
    struct Search<'a> {
        uni: &'a ChainUniverse,
        probs: &'a [f64],
        hits: Vec<u32>,
        current: Vec<usize>,
        value: f64,
        best: Option<(f64, Vec<usize>)>,
        k: usize,
    }
    impl Search<'_> {
        fn run(&mut self, start: usize) {
            if self.current.len() == self.k {
                if self.best.as_ref().is_none_or(|(b, _)| self.value > *b + 1e-15) {
                    self.best = Some((self.value, self.current.clone()));
                }
                return;
            }
            for c in start..self.uni.chains.len() {
                let mut gained = 0.0;
                for &t in &self.uni.covers[c] {
                    if self.hits[t] == 0 {
                        gained += self.probs[t];
                    }
                    self.hits[t] += 1;
                }
                self.value += gained;
                self.current.push(c);
                self.run(c);
                self.current.pop();
                self.value -= gained;
                for &t in &self.uni.covers[c] {
                    self.hits[t] -= 1;
                }
            }
        }
    }
    let mut s = Search {
        uni: &uni,
        probs: &probs,
        hits: vec![0; probs.len()],
        current: Vec::new(),
        value: 0.0,
        best: None,
        k,
    };
    s.run(0);
    let (_, picks) = s.best.expect("non-empty search");
    let chains: Vec<Vec<usize>> = picks.iter().map(|&c| uni.chains[c].clone()).collect();
    Ok(OptimumResult {
        welfare: coverage_welfare(gamma, &chains),
        chains,
        method: OptimumMode::Exhaustive,
        approximate: false,
        bound: WelfareBound::Exact,
    })
}

#[derive(PartialEq)]
struct Gain(f64, usize);

impl Eq for Gain {}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

fn greedy(gamma: &TypeDistribution, config: &GameConfig) -> Result<OptimumResult> {
    let uni = ChainUniverse::new(gamma, config)?;
    let probs = gamma.probabilities();
    let mut covered = vec![false; probs.len()];
    let marginal = |c: usize, covered: &[bool]| -> f64 {
        uni.covers[c].iter().filter(|&&t| !covered[t]).map(|&t| probs[t]).sum()
    };
    let mut heap: BinaryHeap<Gain> = (0..uni.chains.len())
        .map(|c| Gain(marginal(c, &covered), c))
        .collect();
    let mut picks = Vec::new();
    while picks.len() < config.engines {
        let Some(Gain(_, c)) = heap.pop() else { break };
        let fresh = marginal(c, &covered);
        if heap.peek().is_none_or(|top| fresh >= top.0) {
            for &t in &uni.covers[c] {
                covered[t] = true;
            }
            picks.push(c);
            heap.push(Gain(0.0, c));
        } else {
            heap.push(Gain(fresh, c));
        }
    }
    let chains: Vec<Vec<usize>> = picks.iter().map(|&c| uni.chains[c].clone()).collect();
    Ok(OptimumResult {
        welfare: coverage_welfare(gamma, &chains),
        chains,
        method: OptimumMode::Greedy,
        approximate: true,
        bound: WelfareBound::Exact,
    })
}

fn top_k(gamma: &TypeDistribution, config: &GameConfig) -> Result<OptimumResult> {
    let p = gamma.page_probabilities().ok_or_else(|| {
        Error::WrongGame("top_k optimum needs a singleton game".into())
    })?;
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    // engines beyond the number of pages duplicate the top page
    let chains: Vec<Vec<usize>> = (0..config.engines)
        .map(|i| vec![if i < order.len() { order[i] } else { order[0] }])
        .collect();
    Ok(OptimumResult {
        welfare: coverage_welfare(gamma, &chains),
        chains,
        method: OptimumMode::TopK,
        approximate: false,
        bound: WelfareBound::Exact,
    })
}

/// Welfare-maximizing deterministic profile, with welfare measured as
/// coverage (exact for non-indifferent rules).
pub fn social_optimum(
    gamma: &TypeDistribution,
    config: &GameConfig,
    mode: OptimumMode,
) -> Result<OptimumResult> {
    config.check_types(gamma)?;
    match mode {
        OptimumMode::Exhaustive => exhaustive(gamma, config),
        OptimumMode::Greedy => greedy(gamma, config),
        OptimumMode::TopK => top_k(gamma, config),
    }
}

/// Top-k for singleton games, exhaustive when small enough, greedy otherwise.
pub fn default_optimum(gamma: &TypeDistribution, config: &GameConfig) -> Result<OptimumResult> {
    if gamma.is_singleton_game() {
        return social_optimum(gamma, config, OptimumMode::TopK);
    }
    match social_optimum(gamma, config, OptimumMode::Exhaustive) {
        Err(Error::TooLarge { .. }) => social_optimum(gamma, config, OptimumMode::Greedy),
        other => other,
    }
}

fn check_ratio_inputs(opt: f64, welfares: &[f64]) -> Result<()> {
    if welfares.is_empty() {
        return Err(Error::NoEquilibrium);
    }
    if !opt.is_finite() || welfares.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Numeric("welfare values must be finite and nonnegative".into()));
    }
    Ok(())
}

/// `OPT / min equilibrium welfare`.
pub fn price_of_anarchy(opt: f64, equilibrium_welfares: &[f64]) -> Result<f64> {
    check_ratio_inputs(opt, equilibrium_welfares)?;
    let worst = equilibrium_welfares.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(opt / worst)
}

/// `OPT / max equilibrium welfare`.
pub fn price_of_stability(opt: f64, equilibrium_welfares: &[f64]) -> Result<f64> {
    check_ratio_inputs(opt, equilibrium_welfares)?;
    let best = equilibrium_welfares.iter().copied().fold(0.0, f64::max);
    Ok(opt / best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnarchyReport {
    pub optimum: OptimumResult,
    pub equilibrium_welfares: Vec<f64>,
    pub poa: f64,
    pub pos: f64,
}

pub fn anarchy_report(
    game: &Game,
    optimum: OptimumResult,
    equilibria: &[Vec<EngineStrategy>],
) -> Result<AnarchyReport> {
    let welfares = equilibria
        .iter()
        .map(|p| game.welfare(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnarchyReport {
        poa: price_of_anarchy(optimum.welfare, &welfares)?,
        pos: price_of_stability(optimum.welfare, &welfares)?,
        optimum,
        equilibrium_welfares: welfares,
    })
}

/// Deterministic partial profile: `slots[engine][slot]` is the page shown, if any.
pub type SlotAssignment = Vec<Vec<Option<usize>>>;

/// Welfare of a partial deterministic profile: engine `i` satisfies type
/// `(S, t)` when one of its first `t` slots holds a page of `S`.
pub fn assignment_welfare(
    gamma: &TypeDistribution,
    rule: &dyn SelectionRule,
    assignment: &SlotAssignment,
) -> Result<f64> {
    let mut w = 0.0;
    for (ty, p) in gamma.entries() {
        let q: Vec<f64> = assignment
            .iter()
            .map(|slots| {
                let hit = slots
                    .iter()
                    .take(ty.threshold())
                    .any(|s| s.is_some_and(|page| ty.contains(page)));
                if hit {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let f = rule.evaluate(&q)?;
        w += p * f.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(w)
}

fn free_elements(config: &GameConfig, a: &SlotAssignment) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (e, slots) in a.iter().enumerate() {
        for (s, cell) in slots.iter().enumerate() {
            if cell.is_some() {
                continue;
            }
            for p in 0..config.pages {
                if !slots.contains(&Some(p)) {
                    out.push((e, s, p));
                }
            }
        }
    }
    out
}

fn with_element(a: &SlotAssignment, (e, s, p): (usize, usize, usize)) -> SlotAssignment {
    let mut b = a.clone();
    b[e][s] = Some(p);
    b
}

/// Welfare monotone under adding (engine, slot, page) elements and
/// submodular across nested partial profiles, on sampled triples.
pub fn check_welfare_structure(
    gamma: &TypeDistribution,
    config: &GameConfig,
    rule: &dyn SelectionRule,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    config.check_types(gamma)?;
    if rule.engines() != config.engines {
        return Err(Error::EngineCountMismatch {
            expected: config.engines,
            actual: rule.engines(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empty: SlotAssignment = vec![vec![None; config.max_threshold]; config.engines];
    let mut checked = 0;
    for _ in 0..samples {
        // grow a random chain of sets: empty ⊆ A ⊆ B
        let mut small = empty.clone();
        let steps_a = rng.gen_range(0..=config.engines * config.max_threshold);
        for _ in 0..steps_a {
            let free = free_elements(config, &small);
            if let Some(&x) = free.choose(&mut rng) {
                small = with_element(&small, x);
            }
        }
        let mut big = small.clone();
        let steps_b = rng.gen_range(0..=config.engines * config.max_threshold);
        for _ in 0..steps_b {
            let free = free_elements(config, &big);
            if let Some(&x) = free.choose(&mut rng) {
                big = with_element(&big, x);
            }
        }
        let candidates = free_elements(config, &big);
        let Some(&x) = candidates.choose(&mut rng) else {
            continue;
        };
        let wa = assignment_welfare(gamma, rule, &small)?;
        let wb = assignment_welfare(gamma, rule, &big)?;
        let wax = assignment_welfare(gamma, rule, &with_element(&small, x))?;
        let wbx = assignment_welfare(gamma, rule, &with_element(&big, x))?;
        checked += 1;
        let flat = |a: &SlotAssignment| -> Vec<f64> {
            a.iter()
                .flat_map(|s| s.iter().map(|c| c.map_or(-1.0, |p| p as f64)))
                .collect()
        };
        if wb < wa - STRUCTURE_TOLERANCE || wax < wa - STRUCTURE_TOLERANCE {
            return Ok(PropertyReport::from_witness(
                "welfare_structure",
                checked,
                Some(Witness {
                    q: flat(&big),
                    engine: x.0,
                    detail: format!("welfare fell from {wa} when adding elements"),
                    value: wb.min(wax) - wa,
                }),
            ));
        }
        if (wax - wa) < (wbx - wb) - STRUCTURE_TOLERANCE {
            return Ok(PropertyReport::from_witness(
                "welfare_structure",
                checked,
                Some(Witness {
                    q: flat(&big),
                    engine: x.0,
                    detail: format!(
                        "adding (engine {}, slot {}, page {}) gains {} on the larger profile but {} on the smaller",
                        x.0,
                        x.1,
                        x.2,
                        wbx - wb,
                        wax - wa
                    ),
                    value: (wbx - wb) - (wax - wa),
                }),
            ));
        }
    }
    Ok(PropertyReport::from_witness("welfare_structure", checked, None))
}
