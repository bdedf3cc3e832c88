//! Best responses, ε-Nash verification, closed-form symmetric equilibria and
//! a grid oracle for equilibrium search.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    EngineStrategy, Game, PrefixChainStrategy, SingletonStrategy, TypeDistribution,
};
use crate::simplex::{maximize_on_simplex, AscentOptions, SimplexObjective};

/// Largest number of prefix chains enumerated.
pub const MAX_CHAINS: u128 = 1_000_000;
/// Largest number of grid profiles enumerated by the brute-force oracle.
pub const MAX_GRID_PROFILES: u128 = 1_000_000;
/// Largest grid denominator for the brute-force oracle.
pub const MAX_GRID_M: usize = 20;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_GRID_M: usize = 12;
/// Gain a deviation needs before it counts as improving.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-9;
const TIE_TOLERANCE: f64 = 1e-14;
const GRADIENT_STEP: f64 = 1e-7;

/// The pure strategies one engine can play: pages when every threshold is 1,
/// otherwise prefix chains of length `max_threshold`.
#[derive(Debug, Clone)]
pub struct AtomSpace {
    num_pages: usize,
    chains: Option<Vec<Vec<usize>>>,
    /// Atoms satisfying each type.
    type_atoms: Vec<Vec<usize>>,
    /// Types satisfied by each atom.
    atom_types: Vec<Vec<usize>>,
}

fn chain_count(n: usize, t: usize) -> u128 {
    (0..t).map(|j| (n - j) as u128).product()
}

fn enumerate_chains(n: usize, t: usize) -> Vec<Vec<usize>> {
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
    let mut out = Vec::new();
    rec(n, t, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

impl AtomSpace {
    pub fn new(game: &Game) -> Result<Self> {
        let n = game.config.pages;
        let t = game.config.max_threshold;
        let types = game.types.entries();
        if t == 1 {
            let type_atoms: Vec<Vec<usize>> = types.iter().map(|(ty, _)| ty.pages().to_vec()).collect();
            let mut atom_types = vec![Vec::new(); n];
            for (ti, atoms) in type_atoms.iter().enumerate() {
                for &a in atoms {
                    atom_types[a].push(ti);
                }
            }
            return Ok(AtomSpace {
                num_pages: n,
                chains: None,
                type_atoms,
                atom_types,
            });
        }
        let count = chain_count(n, t);
        if count > MAX_CHAINS {
            return Err(Error::TooLarge {
                what: "prefix chains",
                count,
                limit: MAX_CHAINS,
            });
        }
        let chains = enumerate_chains(n, t);
        let mut type_atoms = vec![Vec::new(); types.len()];
        let mut atom_types = vec![Vec::new(); chains.len()];
        for (a, chain) in chains.iter().enumerate() {
            for (ti, (ty, _)) in types.iter().enumerate() {
                if ty.satisfied_by(chain) {
                    type_atoms[ti].push(a);
                    atom_types[a].push(ti);
                }
            }
        }
        Ok(AtomSpace {
            num_pages: n,
            chains: Some(chains),
            type_atoms,
            atom_types,
        })
    }

    pub fn len(&self) -> usize {
        self.atom_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_types.is_empty()
    }

    /// The chain an atom stands for (a single page in singleton spaces).
    pub fn chain(&self, a: usize) -> Vec<usize> {
        match &self.chains {
            None => vec![a],
            Some(c) => c[a].clone(),
        }
    }

    pub fn weights_of(&self, s: &EngineStrategy) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.len()];
        match (s, &self.chains) {
            (EngineStrategy::Singleton(s), None) => {
                if s.num_pages() != self.num_pages {
                    return Err(Error::InvalidStrategy(format!(
                        "strategy covers {} pages, game has {}",
                        s.num_pages(),
                        self.num_pages
                    )));
                }
                w.copy_from_slice(s.probs());
            }
            (EngineStrategy::Chains(c), None) => {
                for atom in c.atoms() {
                    if atom.pages.len() != 1 || atom.pages[0] >= self.num_pages {
                        return Err(Error::InvalidStrategy(format!(
                            "chain {:?} does not fit a single-slot game",
                            atom.pages
                        )));
                    }
                    w[atom.pages[0]] += atom.weight;
                }
            }
            (EngineStrategy::Chains(c), Some(chains)) => {
                let index: HashMap<&[usize], usize> =
                    chains.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
                for atom in c.atoms() {
                    let a = index.get(atom.pages.as_slice()).ok_or_else(|| {
                        Error::InvalidStrategy(format!(
                            "chain {:?} is not a prefix chain of length {}",
                            atom.pages,
                            chains[0].len()
                        ))
                    })?;
                    w[*a] += atom.weight;
                }
            }
            (EngineStrategy::Singleton(_), Some(chains)) => {
                return Err(Error::InvalidStrategy(format!(
                    "page distribution given where chains of length {} are required",
                    chains[0].len()
                )));
            }
        }
        Ok(w)
    }

    pub fn strategy_from(&self, weights: &[f64]) -> Result<EngineStrategy> {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        let w: Vec<f64> = weights.iter().map(|x| x.max(0.0) / total).collect();
        match &self.chains {
            None => Ok(SingletonStrategy::normalized(w)?.into()),
            Some(chains) => Ok(PrefixChainStrategy::new(
                self.num_pages,
                chains
                    .iter()
                    .zip(&w)
                    .filter(|(_, &x)| x > 0.0)
                    .map(|(c, &x)| (c.clone(), x))
                    .collect(),
            )?
            .into()),
        }
    }

    pub fn vertex(&self, a: usize) -> EngineStrategy {
        match &self.chains {
            None => SingletonStrategy::deterministic(a, self.num_pages).into(),
            Some(c) => PrefixChainStrategy::deterministic(c[a].clone()).into(),
        }
    }

    /// Own satisfaction of type `t` under atom weights `w`.
    fn satisfaction(&self, w: &[f64], t: usize) -> f64 {
        self.type_atoms[t].iter().map(|&a| w[a]).sum::<f64>().min(1.0)
    }
}

/// Engine `engine`'s payoff as a function of its own atom weights, with
/// every other engine held fixed.
struct Deviation<'a> {
    game: &'a Game<'a>,
    space: &'a AtomSpace,
    engine: usize,
    gammas: Vec<f64>,
    /// Satisfaction profile per type; the engine's own slot is overwritten.
    others: Vec<Vec<f64>>,
}

impl<'a> Deviation<'a> {
    fn new(game: &'a Game<'a>, space: &'a AtomSpace, weights: &[Vec<f64>], engine: usize) -> Self {
        let others = (0..game.types.len())
            .map(|t| weights.iter().map(|w| space.satisfaction(w, t)).collect())
            .collect();
        Deviation {
            game,
            space,
            engine,
            gammas: game.types.probabilities(),
            others,
        }
    }

    /// Contribution of type `t` when the engine satisfies it with probability `x`.
    fn phi(&self, t: usize, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut q = self.others[t].clone();
        q[self.engine] = x;
        let beta = self.game.beta();
        match self.game.rule.evaluate_engine(self.engine, &q) {
            Ok(f) => self.gammas[t] * f * (beta + (1.0 - beta) * x),
            Err(_) => f64::NAN,
        }
    }

    fn phi_table(&self, levels: usize) -> Vec<Vec<f64>> {
        (0..self.gammas.len())
            .map(|t| {
                (0..=levels)
                    .map(|c| self.phi(t, c as f64 / levels as f64))
                    .collect()
            })
            .collect()
    }

    /// Payoff of every pure strategy.
    fn vertex_values(&self) -> Vec<f64> {
        let table = self.phi_table(1);
        let base: f64 = table.iter().map(|r| r[0]).sum();
        (0..self.space.len())
            .map(|a| {
                base + self.space.atom_types[a]
                    .iter()
                    .map(|&t| table[t][1] - table[t][0])
                    .sum::<f64>()
            })
            .collect()
    }
}

impl SimplexObjective for Deviation<'_> {
    fn dim(&self) -> usize {
        self.space.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        (0..self.gammas.len())
            .map(|t| self.phi(t, self.space.satisfaction(w, t)))
            .sum()
    }

    fn gradient(&self, w: &[f64], out: &mut [f64]) {
        let slopes: Vec<f64> = (0..self.gammas.len())
            .map(|t| {
                let x = self.space.satisfaction(w, t);
                let up = (x + GRADIENT_STEP).min(1.0);
                let down = (x - GRADIENT_STEP).max(0.0);
                (self.phi(t, up) - self.phi(t, down)) / (up - down)
            })
            .collect();
        for (a, g) in out.iter_mut().enumerate() {
            *g = self.space.atom_types[a].iter().map(|&t| slopes[t]).sum();
        }
    }

    fn transfer_value(&self, w: &[f64], base: f64, from: usize, to: usize, amount: f64) -> f64 {
        let mut delta = 0.0;
        let mut touched: Vec<usize> = self.space.atom_types[from].clone();
        touched.extend(&self.space.atom_types[to]);
        touched.sort_unstable();
        touched.dedup();
        for t in touched {
            let old = self.space.satisfaction(w, t);
            let mut new = old;
            if self.space.type_atoms[t].contains(&from) {
                new -= amount;
            }
            if self.space.type_atoms[t].contains(&to) {
                new += amount;
            }
            delta += self.phi(t, new.clamp(0.0, 1.0)) - self.phi(t, old);
        }
        base + delta
    }
}

fn profile_weights(space: &AtomSpace, profile: &[EngineStrategy], engines: usize) -> Result<Vec<Vec<f64>>> {
    if profile.len() != engines {
        return Err(Error::EngineCountMismatch {
            expected: engines,
            actual: profile.len(),
        });
    }
    profile.iter().map(|s| space.weights_of(s)).collect()
}

/// Settings for the continuous best-response search.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random starts on top of vertices, `Γ` and the current strategy.
    pub random_starts: usize,
    /// Vertex starts are capped at this many (the best ones).
    pub max_vertex_starts: usize,
    /// Skip the continuous search when the atom space is larger than this.
    pub continuous_limit: usize,
    pub ascent: AscentOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 42,
            random_starts: 1,
            max_vertex_starts: 64,
            continuous_limit: 5_000,
            ascent: AscentOptions::default(),
        }
    }
}

/// A best response and the payoff it earns.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub strategy: EngineStrategy,
    pub payoff: f64,
}

fn deterministic_from(dev: &Deviation) -> (usize, f64) {
    let values = dev.vertex_values();
    let max = values
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    let a = values
        .iter()
        .position(|&v| v >= max - TIE_TOLERANCE)
        .unwrap_or(0);
    (a, values[a])
}

fn continuous_from(dev: &Deviation, current: &[f64], opts: &VerifyOptions) -> (Vec<f64>, f64) {
    let n = dev.space.len();
    let values = dev.vertex_values();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut starts: Vec<Vec<f64>> = order
        .iter()
        .take(opts.max_vertex_starts)
        .map(|&a| {
            let mut v = vec![0.0; n];
            v[a] = 1.0;
            v
        })
        .collect();
    let gamma_start: Vec<f64> = match (&dev.space.chains, dev.game.types.page_probabilities()) {
        (None, Some(p)) => p,
        _ => vec![1.0 / n as f64; n],
    };
    starts.push(gamma_start);
    starts.push(current.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (dev.engine as u64).wrapping_mul(0x9e37_79b9));
    for _ in 0..opts.random_starts {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        starts.push(e.into_iter().map(|x| x / s).collect());
    }
    let r = maximize_on_simplex(dev, &starts, &opts.ascent);
    (r.point, r.value)
}

/// Exact best pure response: the lowest-index maximizing page or chain.
pub fn best_response_deterministic(
    game: &Game,
    profile: &[EngineStrategy],
    engine: usize,
) -> Result<(Vec<usize>, f64)> {
    let space = AtomSpace::new(game)?;
    let weights = profile_weights(&space, profile, game.engines())?;
    check_engine(game, engine)?;
    let dev = Deviation::new(game, &space, &weights, engine);
    let (a, v) = deterministic_from(&dev);
    Ok((space.chain(a), v))
}

fn check_engine(game: &Game, engine: usize) -> Result<()> {
    if engine >= game.engines() {
        return Err(Error::Configuration(format!(
            "engine {engine} out of range for {} engines",
            game.engines()
        )));
    }
    Ok(())
}

/// Heuristic best response over page distributions in a singleton game.
/// The engine's own entry of `profile` only serves as a starting point.
pub fn best_response_singleton(
    game: &Game,
    profile: &[SingletonStrategy],
    engine: usize,
    opts: &VerifyOptions,
) -> Result<BestResponse> {
    if !game.types.is_singleton_game() {
        return Err(Error::WrongGame(
            "best_response_singleton needs every user to want one page in slot 1".into(),
        ));
    }
    check_engine(game, engine)?;
    let profile: Vec<EngineStrategy> = profile.iter().cloned().map(Into::into).collect();
    let space = AtomSpace::new(game)?;
    let weights = profile_weights(&space, &profile, game.engines())?;
    let dev = Deviation::new(game, &space, &weights, engine);
    let (point, value) = continuous_from(&dev, &weights[engine], opts);
    let (a, vertex) = deterministic_from(&dev);
    if vertex > value {
        return Ok(BestResponse {
            strategy: space.vertex(a),
            payoff: vertex,
        });
    }
    Ok(BestResponse {
        strategy: space.strategy_from(&point)?,
        payoff: value,
    })
}

/// An improving unilateral deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationWitness {
    pub engine: usize,
    pub strategy: EngineStrategy,
    pub payoff: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub payoffs: Vec<f64>,
    pub best_response_payoffs: Vec<f64>,
    pub regrets: Vec<f64>,
    pub witnesses: Vec<Option<DeviationWitness>>,
    pub epsilon: f64,
    pub is_equilibrium: bool,
    pub welfare: f64,
    /// False when the atom space was too large for the continuous search.
    pub continuous_checked: bool,
}

impl EquilibriumReport {
    pub fn max_regret(&self) -> f64 {
        self.regrets.iter().copied().fold(0.0, f64::max)
    }
}

/// Regret of every engine, from the better of the continuous and the exact
/// pure best response.
pub fn verify_epsilon_nash(
    game: &Game,
    profile: &[EngineStrategy],
    epsilon: f64,
    opts: &VerifyOptions,
) -> Result<EquilibriumReport> {
    let space = AtomSpace::new(game)?;
    let weights = profile_weights(&space, profile, game.engines())?;
    let outcome = game.outcome(profile)?;
    let continuous = space.len() <= opts.continuous_limit;
    let mut best_payoffs = Vec::new();
    let mut regrets = Vec::new();
    let mut witnesses = Vec::new();
    let mut payoffs = Vec::new();
    for engine in 0..game.engines() {
        let dev = Deviation::new(game, &space, &weights, engine);
        let current = dev.value(&weights[engine]);
        let (a, vertex) = deterministic_from(&dev);
        let (mut best, mut best_strategy) = (vertex, space.vertex(a));
        if continuous {
            let (point, value) = continuous_from(&dev, &weights[engine], opts);
            if value > best {
                best = value;
                best_strategy = space.strategy_from(&point)?;
            }
        }
        let regret = (best - current).max(0.0);
        witnesses.push((regret > epsilon).then_some(DeviationWitness {
            engine,
            strategy: best_strategy,
            payoff: best,
            gain: regret,
        }));
        payoffs.push(current);
        best_payoffs.push(best.max(current));
        regrets.push(regret);
    }
    let is_equilibrium = regrets.iter().all(|&r| r <= epsilon);
    Ok(EquilibriumReport {
        payoffs,
        best_response_payoffs: best_payoffs,
        regrets,
        witnesses,
        epsilon,
        is_equilibrium,
        welfare: outcome.welfare,
        continuous_checked: continuous,
    })
}

/// Every engine plays `Γ`: the symmetric equilibrium when `β = 1` under the
/// proportional rule.
pub fn symmetric_equilibrium_beta1_proportional(gamma: &TypeDistribution) -> Result<SingletonStrategy> {
    let p = gamma.page_probabilities().ok_or_else(|| {
        Error::WrongGame("closed-form equilibrium needs a singleton game".into())
    })?;
    SingletonStrategy::new(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSolverState {
    pub z: f64,
    pub lambda_prime: f64,
    pub page_probs: SingletonStrategy,
    /// `Σ_n Γ(n)/(λ′ − zΓ(n)) − 1` at the returned root.
    pub residual: f64,
    pub iterations: usize,
}

/// Sign information on the diagonal of an engine's payoff Hessian at the
/// symmetric point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianCertificate {
    /// `∂²u_i/∂q_n²` for each page.
    pub diagonal: Vec<f64>,
    pub all_negative: bool,
    /// `β > 1 − 1/k`: payoffs are concave for every opponent strategy.
    pub global_concavity: bool,
    /// Each page term `x ↦ Γ x(β + (1−β)x)/(x + s)` is concave for the
    /// opponents' mass `s = (k−1)q̄_n`, so the symmetric point is a global
    /// best response for this instance.
    pub instance_concavity: bool,
}

pub const SYMMETRIC_TOLERANCE: f64 = 1e-12;

/// Solves `Σ_n Γ(n)/(λ′ − zΓ(n)) = 1` for `λ′ > z·max Γ` by bisection.
pub fn symmetric_equilibrium_proportional(
    gamma: &TypeDistribution,
    beta: f64,
    k: usize,
) -> Result<(SymmetricSolverState, HessianCertificate)> {
    let g = gamma.page_probabilities().ok_or_else(|| {
        Error::WrongGame("closed-form equilibrium needs a singleton game".into())
    })?;
    if k < 2 {
        return Err(Error::Configuration("need at least two engines".into()));
    }
    if beta == 0.0 {
        return Err(Error::NotApplicable(
            "beta = 0 has no interior symmetric solution; deterministic equilibria apply".into(),
        ));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Configuration(format!("beta = {beta} is outside [0, 1]")));
    }
    let kf = k as f64;
    let z = (2.0 * kf - 1.0) * (1.0 - beta) / ((kf - 1.0) * beta);
    let gmax = g.iter().copied().fold(0.0, f64::max);
    let excess = |lambda: f64| g.iter().map(|&x| x / (lambda - z * x)).sum::<f64>() - 1.0;

    let mut lo = z * gmax;
    let mut hi = z * gmax + 1.0;
    if excess(hi) > SYMMETRIC_TOLERANCE {
        return Err(Error::Numeric(format!(
            "bracket [{lo}, {hi}] does not contain the root: excess {} at the upper end",
            excess(hi)
        )));
    }
    let mut iterations = 0;
    while iterations < 2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let lambda = hi;
    let residual = excess(lambda);
    if residual.abs() > SYMMETRIC_TOLERANCE {
        return Err(Error::Numeric(format!(
            "bisection stalled at lambda' = {lambda} after {iterations} steps with residual {residual}"
        )));
    }
    let q: Vec<f64> = g.iter().map(|&x| x / (lambda - z * x)).collect();

    let diagonal: Vec<f64> = g
        .iter()
        .zip(&q)
        .map(|(&gn, &qn)| {
            let s = (kf - 1.0) * qn;
            -2.0 * gn * s * (beta - (1.0 - beta) * s) / (qn + s).powi(3)
        })
        .collect();
    let all_negative = diagonal.iter().all(|&h| h < 0.0);
    let instance_concavity = q.iter().all(|&qn| beta - (1.0 - beta) * (kf - 1.0) * qn >= 0.0);
    let certificate = HessianCertificate {
        diagonal,
        all_negative,
        global_concavity: beta > 1.0 - 1.0 / kf,
        instance_concavity,
    };
    let page_probs = SingletonStrategy::new(q)
        .map_err(|e| Error::Numeric(format!("symmetric solution is not a distribution: {e}")))?;
    Ok((
        SymmetricSolverState {
            z,
            lambda_prime: lambda,
            page_probs,
            residual,
            iterations,
        },
        certificate,
    ))
}

/// A grid profile that survived the grid-level equilibrium test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceCandidate {
    pub profile: Vec<EngineStrategy>,
    /// Mass on each atom in units of `1/grid_m`, per engine.
    pub grid_counts: Vec<Vec<usize>>,
    /// Regret against grid deviations only.
    pub grid_regrets: Vec<f64>,
    /// Regret against unrestricted deviations.
    pub report: EquilibriumReport,
}

fn compositions(m: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(left - c, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, parts, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, j| acc.saturating_mul(n - j) / (j + 1))
}

/// Every profile of grid strategies (mass in multiples of `1/grid_m`) that is
/// an `epsilon`-equilibrium against grid deviations, each refined by
/// [`verify_epsilon_nash`]. With `grid_m = 1` this enumerates pure profiles.
pub fn brute_force_equilibria(
    game: &Game,
    grid_m: usize,
    epsilon: f64,
    opts: &VerifyOptions,
) -> Result<Vec<BruteForceCandidate>> {
    if grid_m == 0 || grid_m > MAX_GRID_M {
        return Err(Error::Configuration(format!(
            "grid_m = {grid_m} must lie in 1..={MAX_GRID_M}"
        )));
    }
    let space = AtomSpace::new(game)?;
    let atoms = space.len();
    let per_engine = binomial((grid_m + atoms - 1) as u128, (atoms - 1) as u128);
    let k = game.engines();
    let count = per_engine.saturating_pow(k as u32);
    if count > MAX_GRID_PROFILES {
        return Err(Error::TooLarge {
            what: "grid profiles",
            count,
            limit: MAX_GRID_PROFILES,
        });
    }
    let grid = compositions(grid_m, atoms);
    let m = grid_m as f64;
    let grid_weights: Vec<Vec<f64>> = grid
        .iter()
        .map(|c| c.iter().map(|&x| x as f64 / m).collect())
        .collect();
    // own satisfaction level (in grid units) of each type under each grid point
    let levels: Vec<Vec<usize>> = grid
        .iter()
        .map(|c| {
            (0..game.types.len())
                .map(|t| space.type_atoms[t].iter().map(|&a| c[a]).sum::<usize>().min(grid_m))
                .collect()
        })
        .collect();

    let mut memo: HashMap<(usize, Vec<usize>), (Vec<f64>, f64)> = HashMap::new();
    let mut values_for = |engine: usize, idx: &[usize]| -> (Vec<f64>, f64) {
        let mut key: Vec<usize> = idx.to_vec();
        key[engine] = usize::MAX;
        memo.entry((engine, key))
            .or_insert_with(|| {
                let weights: Vec<Vec<f64>> = idx.iter().map(|&g| grid_weights[g].clone()).collect();
                let dev = Deviation::new(game, &space, &weights, engine);
                let table = dev.phi_table(grid_m);
                let values: Vec<f64> = levels
                    .iter()
                    .map(|lv| lv.iter().enumerate().map(|(t, &c)| table[t][c]).sum())
                    .collect();
                let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (values, best)
            })
            .clone()
    };

    let mut found = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        let mut regrets = Vec::with_capacity(k);
        let mut ok = true;
        for engine in 0..k {
            let (values, best) = values_for(engine, &idx);
            let r = (best - values[idx[engine]]).max(0.0);
            if r > epsilon {
                ok = false;
                break;
            }
            regrets.push(r);
        }
        if ok {
            let profile = idx
                .iter()
                .map(|&g| space.strategy_from(&grid_weights[g]))
                .collect::<Result<Vec<_>>>()?;
            let report = verify_epsilon_nash(game, &profile, epsilon, opts)?;
            found.push(BruteForceCandidate {
                profile,
                grid_counts: idx.iter().map(|&g| grid[g].clone()).collect(),
                grid_regrets: regrets,
                report,
            });
        }
        let mut pos = 0;
        while pos < k {
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    Ok(found)
}

/// Unilateral deviation that improves an engine's payoff by more than
/// [`IMPROVEMENT_THRESHOLD`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovingDeviation {
    pub engine: usize,
    pub strategy: EngineStrategy,
    pub gain: f64,
}

/// Shift sizes tried after pure deviations.
pub const SHIFT_SIZES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// First improving deviation among pure strategies, then among shifts of
/// mass between two atoms, restricted to `engines`.
pub fn find_improving_deviation_among(
    game: &Game,
    profile: &[EngineStrategy],
    engines: &[usize],
) -> Result<Option<ImprovingDeviation>> {
    let space = AtomSpace::new(game)?;
    let weights = profile_weights(&space, profile, game.engines())?;
    for &engine in engines {
        check_engine(game, engine)?;
    }
    let devs: Vec<Deviation> = engines
        .iter()
        .map(|&e| Deviation::new(game, &space, &weights, e))
        .collect();
    let currents: Vec<f64> = devs
        .iter()
        .zip(engines)
        .map(|(d, &e)| d.value(&weights[e]))
        .collect();
    for (dev, &current) in devs.iter().zip(&currents) {
        for (a, v) in dev.vertex_values().into_iter().enumerate() {
            if v - current > IMPROVEMENT_THRESHOLD {
                return Ok(Some(ImprovingDeviation {
                    engine: dev.engine,
                    strategy: space.vertex(a),
                    gain: v - current,
                }));
            }
        }
    }
    for eps in SHIFT_SIZES {
        for (dev, &current) in devs.iter().zip(&currents) {
            let w = &weights[dev.engine];
            for from in 0..space.len() {
                if w[from] < eps {
                    continue;
                }
                for to in 0..space.len() {
                    if to == from {
                        continue;
                    }
                    let v = dev.transfer_value(w, current, from, to, eps);
                    if v - current > IMPROVEMENT_THRESHOLD {
                        let mut shifted = w.clone();
                        shifted[from] -= eps;
                        shifted[to] += eps;
                        return Ok(Some(ImprovingDeviation {
                            engine: dev.engine,
                            strategy: space.strategy_from(&shifted)?,
                            gain: v - current,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

pub fn find_improving_deviation(
    game: &Game,
    profile: &[EngineStrategy],
) -> Result<Option<ImprovingDeviation>> {
    let all: Vec<usize> = (0..game.engines()).collect();
    find_improving_deviation_among(game, profile, &all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub profile: Vec<EngineStrategy>,
    pub rounds: usize,
    pub converged: bool,
    pub report: EquilibriumReport,
}

/// Round-robin best-response dynamics: each engine in turn switches to its
/// best response when that gains more than `epsilon`.
pub fn best_response_dynamics(
    game: &Game,
    start: Vec<EngineStrategy>,
    max_rounds: usize,
    epsilon: f64,
    opts: &VerifyOptions,
) -> Result<DynamicsResult> {
    let space = AtomSpace::new(game)?;
    let mut profile = start;
    let mut weights = profile_weights(&space, &profile, game.engines())?;
    let mut rounds = 0;
    let mut converged = false;
    while rounds < max_rounds {
        rounds += 1;
        let mut changed = false;
        for engine in 0..game.engines() {
            let dev = Deviation::new(game, &space, &weights, engine);
            let current = dev.value(&weights[engine]);
            let (a, vertex) = deterministic_from(&dev);
            let (point, value) = if space.len() <= opts.continuous_limit {
                continuous_from(&dev, &weights[engine], opts)
            } else {
                (weights[engine].clone(), current)
            };
            let (best, next) = if vertex >= value {
                let mut v = vec![0.0; space.len()];
                v[a] = 1.0;
                (vertex, v)
            } else {
                (value, point)
            };
            if best - current > epsilon {
                profile[engine] = space.strategy_from(&next)?;
                weights[engine] = space.weights_of(&profile[engine])?;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let report = verify_epsilon_nash(game, &profile, epsilon, opts)?;
    Ok(DynamicsResult {
        profile,
        rounds,
        converged,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameConfig, UserType};
    use crate::rules::{RuleKind, SelectionRuleSpec};

    fn singleton_game(probs: &[f64], beta: f64, k: usize, kind: RuleKind) -> (GameConfig, TypeDistribution, SelectionRuleSpec) {
        let gamma = TypeDistribution::singleton(probs).unwrap();
        let config = GameConfig::singleton(beta, k, &gamma).unwrap();
        (config, gamma, SelectionRuleSpec::new(kind, k).unwrap())
    }

    fn det(page: usize, n: usize) -> EngineStrategy {
        SingletonStrategy::deterministic(page, n).into()
    }

    #[test]
    fn best_response_against_concentrated_opponent() {
        let (c, g, r) = singleton_game(&[0.9, 0.1], 0.0, 2, RuleKind::Proportional);
        let game = Game::new(&c, &g, &r).unwrap();
        let (chain, v) = best_response_deterministic(&game, &[det(0, 2), det(0, 2)], 1).unwrap();
        assert_eq!(chain, vec![0]);
        assert!((v - 0.45).abs() < 1e-15);
    }

    #[test]
    fn best_response_on_tight_instance_ties_at_one_third() {
        let (c, g, r) = singleton_game(&[2.0 / 3.0, 1.0 / 3.0], 0.0, 2, RuleKind::Markovian);
        let game = Game::new(&c, &g, &r).unwrap();
        let profile = [SingletonStrategy::deterministic(0, 2), SingletonStrategy::deterministic(0, 2)];
        let br = best_response_singleton(&game, &profile, 1, &VerifyOptions::default()).unwrap();
        assert!((br.payoff - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn best_response_to_gamma_at_beta_one() {
        let (c, g, r) = singleton_game(&[0.5, 0.3, 0.2], 1.0, 2, RuleKind::Proportional);
        let game = Game::new(&c, &g, &r).unwrap();
        let s = SingletonStrategy::new(vec![0.5, 0.3, 0.2]).unwrap();
        let profile = [s.clone(), s.clone()];
        let own = game.payoffs(&profile).unwrap()[1];
        let br = best_response_singleton(&game, &profile, 1, &VerifyOptions::default()).unwrap();
        assert!((br.payoff - own).abs() < 1e-8);
    }

    #[test]
    fn chain_best_response_covers_the_open_page() {
        // pages a, b, c = 0, 1, 2; patient users (t = 2) want one page each
        let types = TypeDistribution::new(
            3,
            vec![
                (UserType::new([0], 2).unwrap(), 0.3),
                (UserType::new([1], 2).unwrap(), 0.3),
                (UserType::new([2], 2).unwrap(), 0.4),
            ],
        )
        .unwrap();
        let config = GameConfig::new(0.0, 2, 3, 2).unwrap();
        let rule = SelectionRuleSpec::new(RuleKind::Majority, 2).unwrap();
        let game = Game::new(&config, &types, &rule).unwrap();
        let opp: EngineStrategy = PrefixChainStrategy::deterministic(vec![0, 1]).into();
        let (chain, payoff) = best_response_deterministic(&game, &[opp.clone(), opp], 1).unwrap();
        // page c alone earns 0.4; sharing a or b at majority adds half of 0.3.
        // Slot order does not matter at t = 2, so the lowest chain wins the tie.
        assert_eq!(chain, vec![0, 2]);
        assert!((payoff - 0.55).abs() < 1e-12);
    }

    #[test]
    fn symmetric_solver_examples() {
        let g = TypeDistribution::singleton(&[0.6, 0.4]).unwrap();
        let (s, cert) = symmetric_equilibrium_proportional(&g, 0.9, 2).unwrap();
        assert!((s.z - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.lambda_prime - 1.174).abs() < 1e-3);
        assert!((s.page_probs.probs()[0] - 0.616).abs() < 1e-3);
        assert!(cert.global_concavity && cert.all_negative);

        let (s, _) = symmetric_equilibrium_proportional(&g, 1.0, 3).unwrap();
        assert_eq!(s.z, 0.0);
        assert!(s.page_probs.max_abs_diff(&SingletonStrategy::new(vec![0.6, 0.4]).unwrap()) < 1e-12);

        let u = TypeDistribution::singleton(&[0.5, 0.5]).unwrap();
        let (s, _) = symmetric_equilibrium_proportional(&u, 0.9, 2).unwrap();
        assert!((s.page_probs.probs()[0] - 0.5).abs() < 1e-12);

        assert!(matches!(
            symmetric_equilibrium_proportional(&g, 0.0, 2),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(12, 3).len(), 91);
        assert_eq!(binomial(14, 2), 91);
        assert_eq!(compositions(1, 4).len(), 4);
    }
}
