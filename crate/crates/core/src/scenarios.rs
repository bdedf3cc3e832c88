//! Named, seeded instance families with the quantities each one is known to
//! exhibit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::symmetric_equilibrium_proportional;
use crate::error::{Error, Result};
use crate::game::{
    is_general_position, perturb_general_position, EngineStrategy, GameConfig, GeneralPosition,
    SingletonStrategy, TypeDistribution,
};
use crate::instance::Instance;
use crate::rules::{RuleKind, SelectionRuleSpec};
use crate::welfare::{social_optimum, OptimumMode};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
    pub scale: Option<f64>,
}

/// Parameters after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub k: usize,
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    pub scale: f64,
}

/// Quantities a scenario is constructed to exhibit. Every field is optional;
/// only what is known in closed form or by construction is filled in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Claims {
    /// A profile that should verify as an equilibrium.
    pub equilibrium: Option<Vec<EngineStrategy>>,
    pub equilibrium_epsilon: Option<f64>,
    pub equilibrium_welfare: Option<f64>,
    pub opt_welfare: Option<f64>,
    /// `opt_welfare / equilibrium_welfare`: a lower bound on the PoA.
    pub poa_at_least: Option<f64>,
    /// Exact PoS when the equilibrium is unique.
    pub pos: Option<f64>,
    pub pure_equilibria: Option<usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ResolvedParams,
    pub instance: Instance,
    pub general_position: GeneralPosition,
    pub claims: Claims,
}

pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "tight_poa",
        summary: "N = k pages, one heavy page; all engines on page 1 is an equilibrium with PoA (2k-1-beta)/(k-beta)",
        defaults: "k=2 beta=0, markovian rule",
    },
    CatalogEntry {
        name: "pos_linear",
        summary: "beta = 1 proportional; k head pages of mass 1/(k+1) and a light uniform tail; PoS close to k",
        defaults: "k=8 n=64 scale=1e-9",
    },
    CatalogEntry {
        name: "pos_sqrt",
        summary: "beta = 1 proportional, two engines; two head pages of mass 1/sqrt(N); PoS grows like sqrt(N)",
        defaults: "n=400 scale=1e-9",
    },
    CatalogEntry {
        name: "intermediate_uniform",
        summary: "proportional rule with nearly uniform pages; symmetric equilibrium with PoA of order k; needs beta > 2k/(N+2k)",
        defaults: "k=2 n=64 beta=0.9",
    },
    CatalogEntry {
        name: "intermediate_sqrt",
        summary: "proportional rule, two engines, two head pages of mass 1/sqrt(N); symmetric equilibrium with PoA of order sqrt(N); needs beta >= 6/sqrt(N)",
        defaults: "n=100 beta=0.6 scale=1e-9",
    },
    CatalogEntry {
        name: "nonexistence",
        summary: "three engines, two pages, gamma-power rule at beta = 0; no pure equilibrium",
        defaults: "scale=1e-6",
    },
    CatalogEntry {
        name: "non_indifference",
        summary: "k = N+1 engines under a truncated rule that ignores own satisfaction; equilibrium welfare O(1/N) against OPT = 1",
        defaults: "n=6",
    },
    CatalogEntry {
        name: "general_position_fail",
        summary: "uniform pages with a heavily favoured engine; equilibrium welfare 2/k against OPT = 1",
        defaults: "k=3",
    },
    CatalogEntry {
        name: "random_singleton",
        summary: "random general-position singleton instance under the proportional rule",
        defaults: "k=2 n=5 beta=1",
    },
];

pub fn names() -> Vec<&'static str> {
    CATALOG.iter().map(|c| c.name).collect()
}

fn range(name: &str, condition: impl Into<String>) -> Error {
    Error::ScenarioRange {
        name: name.into(),
        condition: condition.into(),
    }
}

fn resolve(p: &ScenarioParams, k: usize, n: usize, beta: f64, scale: f64) -> ResolvedParams {
    ResolvedParams {
        k: p.k.unwrap_or(k),
        n: p.n.unwrap_or(n),
        beta: p.beta.unwrap_or(beta),
        seed: p.seed.unwrap_or(DEFAULT_SEED),
        scale: p.scale.unwrap_or(scale),
    }
}

fn require(cond: bool, name: &str, condition: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(range(name, condition))
    }
}

fn fixed(p: &ScenarioParams, name: &str, k: Option<usize>, beta: Option<f64>) -> Result<()> {
    if let (Some(want), Some(got)) = (k, p.k) {
        require(want == got, name, &format!("requires k = {want}"))?;
    }
    if let (Some(want), Some(got)) = (beta, p.beta) {
        require(want == got, name, &format!("requires beta = {want}"))?;
    }
    Ok(())
}

fn check_beta(name: &str, beta: f64) -> Result<()> {
    require((0.0..=1.0).contains(&beta), name, "requires beta in [0, 1]")
}

fn singleton_instance(probs: &[f64], beta: f64, k: usize, kind: RuleKind) -> Result<Instance> {
    let types = TypeDistribution::singleton(probs)?;
    let config = GameConfig::singleton(beta, k, &types)?;
    Instance::new(config, types, SelectionRuleSpec::new(kind, k)?)
}

/// Adds `scale·U(−1, 1)` to each value and recentres so the sum is unchanged.
fn jitter(values: &mut [f64], scale: f64, rng: &mut ChaCha8Rng) {
    if values.is_empty() || scale == 0.0 {
        return;
    }
    let noise: Vec<f64> = values.iter().map(|_| scale * rng.gen_range(-1.0..=1.0)).collect();
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    for (v, e) in values.iter_mut().zip(noise) {
        *v += e - mean;
    }
}

/// `heads` exact values, then a uniform tail of the remaining mass with
/// jitter; the last head is lifted by `scale/2` so heads are distinct.
fn head_tail(heads: &[f64], n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut probs: Vec<f64> = heads.to_vec();
    for (j, h) in probs.iter_mut().enumerate() {
        *h += scale * (heads.len() - 1 - j) as f64 / heads.len() as f64;
    }
    let head_mass: f64 = probs.iter().sum();
    let tail_len = n - heads.len();
    let mut tail = vec![(1.0 - head_mass) / tail_len as f64; tail_len];
    jitter(&mut tail, scale, rng);
    probs.extend(tail);
    probs
}

fn symmetric_profile(s: &SingletonStrategy, k: usize) -> Vec<EngineStrategy> {
    vec![EngineStrategy::Singleton(s.clone()); k]
}

pub fn generate(name: &str, params: &ScenarioParams) -> Result<Scenario> {
    let (params, instance, claims) = match name {
        "tight_poa" => tight_poa(params)?,
        "pos_linear" => pos_linear(params)?,
        "pos_sqrt" => pos_sqrt(params)?,
        "intermediate_uniform" => intermediate_uniform(params)?,
        "intermediate_sqrt" => intermediate_sqrt(params)?,
        "nonexistence" => nonexistence(params)?,
        "non_indifference" => non_indifference(params)?,
        "general_position_fail" => general_position_fail(params)?,
        "random_singleton" => random_singleton(params)?,
        other => return Err(Error::UnknownScenario(other.into())),
    };
    let general_position = is_general_position(&instance.types);
    Ok(Scenario {
        name: name.into(),
        params,
        instance,
        general_position,
        claims,
    })
}

type Generated = (ResolvedParams, Instance, Claims);

fn tight_poa(p: &ScenarioParams) -> Result<Generated> {
    let name = "tight_poa";
    let r = resolve(p, 2, 0, 0.0, 0.0);
    let r = ResolvedParams { n: r.k, ..r };
    require(r.k >= 2, name, "requires k >= 2")?;
    require(p.n.is_none_or(|n| n == r.k), name, "uses N = k pages")?;
    check_beta(name, r.beta)?;
    let (k, beta) = (r.k as f64, r.beta);
    let denom = 2.0 * k - 1.0 - beta;
    let mut probs = vec![1.0 / denom; r.k];
    probs[0] = (k - beta) / denom;
    let instance = singleton_instance(&probs, beta, r.k, RuleKind::Markovian)?;
    let profile = vec![EngineStrategy::Singleton(SingletonStrategy::deterministic(0, r.k)); r.k];
    let eq_welfare = probs[0];
    Ok((
        r,
        instance,
        Claims {
            equilibrium: Some(profile),
            equilibrium_epsilon: Some(1e-9),
            equilibrium_welfare: Some(eq_welfare),
            opt_welfare: Some(1.0),
            poa_at_least: Some(denom / (k - beta)),
            notes: vec!["deviating to any other page ties exactly with staying".into()],
            ..Claims::default()
        },
    ))
}

fn beta_one_claims(instance: &Instance, k: usize) -> Result<Claims> {
    let g = instance.types.page_probabilities().expect("singleton");
    let s = SingletonStrategy::new(g.clone())?;
    let eq_welfare: f64 = g.iter().map(|x| x * x).sum();
    let opt = social_optimum(&instance.types, &instance.config, OptimumMode::TopK)?.welfare;
    Ok(Claims {
        equilibrium: Some(symmetric_profile(&s, k)),
        equilibrium_epsilon: Some(1e-6),
        equilibrium_welfare: Some(eq_welfare),
        opt_welfare: Some(opt),
        poa_at_least: Some(opt / eq_welfare),
        pos: Some(opt / eq_welfare),
        ..Claims::default()
    })
}

fn pos_linear(p: &ScenarioParams) -> Result<Generated> {
    let name = "pos_linear";
    fixed(p, name, None, Some(1.0))?;
    let r = resolve(p, 8, 64, 1.0, 1e-9);
    require(r.k >= 2, name, "requires k >= 2")?;
    require(r.n > r.k, name, "requires N > k")?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let heads = vec![1.0 / (r.k as f64 + 1.0); r.k];
    let probs = head_tail(&heads, r.n, r.scale, &mut rng);
    require(
        probs[r.k..].iter().all(|&x| x > 0.0 && x < probs[r.k - 1]),
        name,
        "tail pages must stay below the head pages; lower the scale",
    )?;
    let instance = singleton_instance(&probs, 1.0, r.k, RuleKind::Proportional)?;
    let mut claims = beta_one_claims(&instance, r.k)?;
    claims.notes.push("the symmetric equilibrium is the unique one, so PoA = PoS".into());
    Ok((r, instance, claims))
}

fn pos_sqrt(p: &ScenarioParams) -> Result<Generated> {
    let name = "pos_sqrt";
    fixed(p, name, Some(2), Some(1.0))?;
    let r = resolve(p, 2, 400, 1.0, 1e-9);
    require(r.n >= 5, name, "requires N >= 5")?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let h = 1.0 / (r.n as f64).sqrt();
    let probs = head_tail(&[h, h], r.n, r.scale, &mut rng);
    let instance = singleton_instance(&probs, 1.0, 2, RuleKind::Proportional)?;
    let claims = beta_one_claims(&instance, 2)?;
    Ok((r, instance, claims))
}

fn symmetric_claims(instance: &Instance, k: usize) -> Result<Claims> {
    let (state, cert) = symmetric_equilibrium_proportional(&instance.types, instance.config.beta, k)?;
    let profile = symmetric_profile(&state.page_probs, k);
    let eq_welfare = instance.game().welfare(&profile)?;
    let opt = social_optimum(&instance.types, &instance.config, OptimumMode::TopK)?.welfare;
    let mut notes = vec![format!(
        "lambda' = {}, z = {}; every page term of the payoff is concave: {}",
        state.lambda_prime, state.z, cert.instance_concavity
    )];
    if !cert.global_concavity {
        notes.push("other, asymmetric equilibria are not ruled out; the ratio bounds the PoA from below".into());
    }
    Ok(Claims {
        equilibrium: Some(profile),
        equilibrium_epsilon: Some(1e-6),
        equilibrium_welfare: Some(eq_welfare),
        opt_welfare: Some(opt),
        poa_at_least: Some(opt / eq_welfare),
        notes,
        ..Claims::default()
    })
}

fn intermediate_uniform(p: &ScenarioParams) -> Result<Generated> {
    let name = "intermediate_uniform";
    let r = resolve(p, 2, 64, 0.9, 0.0);
    require(r.k >= 2, name, "requires k >= 2")?;
    require(r.n > r.k, name, "requires N > k")?;
    check_beta(name, r.beta)?;
    let (k, n) = (r.k as f64, r.n as f64);
    require(
        r.beta > 2.0 * k / (n + 2.0 * k),
        name,
        &format!("requires beta > 2k/(N+2k) = {}", 2.0 * k / (n + 2.0 * k)),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut u: Vec<f64> = (0..r.n).map(|_| rng.gen_range(-0.45..=0.45)).collect();
    let mean = u.iter().sum::<f64>() / n;
    for x in u.iter_mut() {
        *x -= mean;
    }
    let probs: Vec<f64> = u.iter().map(|x| 1.0 / n + x / (n * n)).collect();
    let instance = singleton_instance(&probs, r.beta, r.k, RuleKind::Proportional)?;
    let claims = symmetric_claims(&instance, r.k)?;
    Ok((r, instance, claims))
}

fn intermediate_sqrt(p: &ScenarioParams) -> Result<Generated> {
    let name = "intermediate_sqrt";
    fixed(p, name, Some(2), None)?;
    let r = resolve(p, 2, 100, 0.6, 1e-9);
    check_beta(name, r.beta)?;
    require(r.n >= 5, name, "requires N >= 5")?;
    let n = r.n as f64;
    let sqrt_n = n.sqrt();
    require(
        r.beta >= 6.0 / sqrt_n,
        name,
        &format!("requires beta >= 6/sqrt(N) = {}", 6.0 / sqrt_n),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let h = 1.0 / sqrt_n;
    let probs = head_tail(&[h, h], r.n, r.scale, &mut rng);
    let (lo, hi) = (1.0 / (n - 2.0) - 4.0 / n.powf(1.5), 2.0 / n);
    require(
        probs[2..].iter().all(|&x| x >= lo && x <= hi),
        name,
        &format!("tail pages must lie in [{lo}, {hi}]"),
    )?;
    require(
        probs[..2].iter().all(|&x| x >= h && x <= 2.0 * h),
        name,
        "head pages must lie in [1/sqrt(N), 2/sqrt(N)]",
    )?;
    let instance = singleton_instance(&probs, r.beta, 2, RuleKind::Proportional)?;
    let claims = symmetric_claims(&instance, 2)?;
    Ok((r, instance, claims))
}

fn nonexistence(p: &ScenarioParams) -> Result<Generated> {
    let name = "nonexistence";
    fixed(p, name, Some(3), Some(0.0))?;
    require(p.n.is_none_or(|n| n == 2), name, "uses N = 2 pages")?;
    let r = resolve(p, 3, 2, 0.0, 1e-6);
    let base = TypeDistribution::singleton(&[0.55, 0.45])?;
    let (types, _) = perturb_general_position(&base, r.scale, r.seed)?;
    let g = types.page_probabilities().expect("singleton");
    require(
        g.iter().all(|&x| x > 1.0 / 3.0 && x < 2.0 / 3.0),
        name,
        "both pages need probability in (1/3, 2/3)",
    )?;
    let config = GameConfig::singleton(0.0, 3, &types)?;
    let instance = Instance::new(config, types, SelectionRuleSpec::new(RuleKind::GammaPower, 3)?)?;
    Ok((
        r,
        instance,
        Claims {
            pure_equilibria: Some(0),
            opt_welfare: Some(1.0),
            notes: vec![
                "three engines on one page: each earns Gamma(n)/3 but a switch earns Gamma(n')".into(),
                "a 2-1 split: a follower earns Gamma(n)/5 but switching earns 4 Gamma(n')/5".into(),
            ],
            ..Claims::default()
        },
    ))
}

fn non_indifference(p: &ScenarioParams) -> Result<Generated> {
    let name = "non_indifference";
    let r = resolve(p, 0, 6, 0.0, 0.0);
    let r = ResolvedParams { k: r.n + 1, ..r };
    require(r.n >= 2, name, "requires N >= 2")?;
    require(p.k.is_none_or(|k| k == r.n + 1), name, "uses k = N + 1 engines")?;
    fixed(p, name, None, Some(0.0))?;
    let n = r.n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut u: Vec<f64> = (0..r.n).map(|_| rng.gen_range(-0.45..=0.45)).collect();
    let mean = u.iter().sum::<f64>() / n;
    for x in u.iter_mut() {
        *x -= mean;
    }
    let probs: Vec<f64> = u.iter().map(|x| (1.0 + x / 3.0) / n).collect();
    require(
        probs.iter().all(|&x| x >= 2.0 / (3.0 * n) && x <= 4.0 / (3.0 * n)),
        name,
        "page probabilities must lie in [2/(3N), 4/(3N)]",
    )?;
    let instance = singleton_instance(&probs, 0.0, r.k, RuleKind::TruncatedIndifferent(r.n))?;
    let x = 1.0 / probs.iter().map(|g| 1.0 / g).sum::<f64>();
    let rho: Vec<f64> = probs.iter().map(|g| (g - x) / (g * (n - 1.0))).collect();
    let rho = SingletonStrategy::normalized(rho)?;
    let top = (0..r.n)
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
        .expect("pages");
    let mut profile = symmetric_profile(&rho, r.n);
    profile.push(SingletonStrategy::deterministic(top, r.n).into());
    let eq_welfare = instance.game().welfare(&profile)?;
    Ok((
        r,
        instance,
        Claims {
            equilibrium: Some(profile),
            equilibrium_epsilon: Some(1e-9),
            equilibrium_welfare: Some(eq_welfare),
            opt_welfare: Some(1.0),
            poa_at_least: Some(1.0 / eq_welfare),
            notes: vec![
                format!("X = {x}; engines 1..N earn X/2 whatever they play"),
                "the last engine plays the most requested page".into(),
            ],
            ..Claims::default()
        },
    ))
}

fn general_position_fail(p: &ScenarioParams) -> Result<Generated> {
    let name = "general_position_fail";
    let r = resolve(p, 3, 0, 0.0, 0.0);
    let r = ResolvedParams { n: r.k, ..r };
    require(r.k >= 3, name, "requires k >= 3")?;
    require(p.n.is_none_or(|n| n == r.k), name, "uses N = k pages")?;
    fixed(p, name, None, Some(0.0))?;
    let k = r.k;
    let probs = vec![1.0 / k as f64; k];
    let mut weights = vec![1.0; k];
    weights[0] = (k * k) as f64;
    let instance = singleton_instance(&probs, 0.0, k, RuleKind::WeightedProportional(weights))?;
    let mut first = vec![1.0 / (k - 1) as f64; k];
    first[k - 1] = 0.0;
    let mut profile = vec![EngineStrategy::Singleton(SingletonStrategy::normalized(first)?)];
    for _ in 1..k {
        profile.push(SingletonStrategy::deterministic(k - 1, k).into());
    }
    Ok((
        r,
        instance,
        Claims {
            equilibrium: Some(profile),
            equilibrium_epsilon: Some(1e-9),
            equilibrium_welfare: Some(2.0 / k as f64),
            opt_welfare: Some(1.0),
            poa_at_least: Some(k as f64 / 2.0),
            ..Claims::default()
        },
    ))
}

fn random_singleton(p: &ScenarioParams) -> Result<Generated> {
    let name = "random_singleton";
    let r = resolve(p, 2, 5, 1.0, 1e-9);
    require(r.k >= 2, name, "requires k >= 2")?;
    require(r.n >= 1, name, "requires N >= 1")?;
    check_beta(name, r.beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let weights: Vec<f64> = (0..r.n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut types = TypeDistribution::singleton_normalized(&weights)?;
    if matches!(is_general_position(&types), GeneralPosition::Degenerate { .. }) {
        types = perturb_general_position(&types, r.scale.max(1e-12), r.seed)?.0;
    }
    let config = GameConfig::singleton(r.beta, r.k, &types)?;
    let instance = Instance::new(config, types, SelectionRuleSpec::new(RuleKind::Proportional, r.k)?)?;
    let claims = if r.beta == 1.0 {
        beta_one_claims(&instance, r.k)?
    } else {
        Claims::default()
    };
    Ok((r, instance, claims))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_instance_for_two_engines() {
        let s = generate("tight_poa", &ScenarioParams::default()).unwrap();
        let g = s.instance.types.page_probabilities().unwrap();
        assert!((g[0] - 2.0 / 3.0).abs() < 1e-15 && (g[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.claims.poa_at_least.unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn pos_sqrt_heads() {
        let s = generate("pos_sqrt", &ScenarioParams::default()).unwrap();
        let g = s.instance.types.page_probabilities().unwrap();
        assert!((g[0] - 0.05).abs() < 1e-8 && (g[1] - 0.05).abs() < 1e-8);
        assert!((g[2] - 0.9 / 398.0).abs() < 1e-8);
        assert!((s.claims.pos.unwrap() - 14.2).abs() < 0.1);
    }

    #[test]
    fn general_position_fail_weights() {
        let s = generate(
            "general_position_fail",
            &ScenarioParams {
                k: Some(5),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            s.instance.rule.kind(),
            &RuleKind::WeightedProportional(vec![25.0, 1.0, 1.0, 1.0, 1.0])
        );
        assert_eq!(s.claims.equilibrium_welfare, Some(0.4));
    }

    #[test]
    fn validity_ranges() {
        let low = ScenarioParams {
            n: Some(100),
            beta: Some(0.5),
            ..Default::default()
        };
        assert!(matches!(
            generate("intermediate_sqrt", &low),
            Err(Error::ScenarioRange { .. })
        ));
        let low = ScenarioParams {
            k: Some(2),
            n: Some(64),
            beta: Some(0.05),
            ..Default::default()
        };
        assert!(generate("intermediate_uniform", &low).is_err());
        assert!(matches!(generate("nope", &low), Err(Error::UnknownScenario(_))));
    }
}
