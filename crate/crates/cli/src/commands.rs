use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use search_game::canonical::{format_sig17, to_canonical_string};
use search_game::equilibrium::{
    best_response_dynamics, brute_force_equilibria, symmetric_equilibrium_beta1_proportional,
    symmetric_equilibrium_proportional, verify_epsilon_nash, EquilibriumReport, VerifyOptions,
    DEFAULT_GRID_M,
};
use search_game::instance::{parse_profile, profile_to_json, rule_from_parts, rule_to_value, Instance};
use search_game::markov::{
    check_markov_monotone, closed_form_stationary, return_times, stationary, stationary_derivatives,
    stationary_power, MarkovUserModel, POWER_MAX_ITER, POWER_TOLERANCE,
};
use search_game::rules::{
    check_convex, check_cross_concave, check_monotone, check_non_indifferent, default_epsilons,
    CheckOptions, RuleKind, SelectionRuleSpec,
};
use search_game::scenarios::{generate, ScenarioParams, CATALOG};
use search_game::welfare::{default_optimum, price_of_anarchy, price_of_stability, social_optimum, OptimumMode, OptimumResult};
use search_game::{EngineStrategy, PropertyReport, SelectionRule};

use crate::report::{digest, RunReport};
use crate::{
    Failure, Format, MarkovArgs, Method, Output, PoaArgs, RulecheckArgs, ScenarioArgs, SolveArgs,
    VerifyArgs, EXIT_SOLVER,
};

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Prefixes library errors with the file they came from.
fn in_file<T>(path: &Path, r: search_game::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    in_file(path, Instance::from_json(&read(path)?))
}

fn load_profile(path: &Path, pages: usize) -> Result<Vec<EngineStrategy>, Failure> {
    in_file(path, parse_profile(&read(path)?, pages))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn emit(text: &str, output: &Output) -> Result<(), Failure> {
    match &output.out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_only(format: Format, command: &str) -> Result<(), Failure> {
    if format != Format::Json {
        return Err(Failure::invalid(format!("{command} only writes JSON")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<(), Failure> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Failure::invalid(format!("--epsilon {epsilon} must be a nonnegative number")));
    }
    Ok(())
}

fn verify_options(seed: u64) -> VerifyOptions {
    VerifyOptions {
        seed,
        ..VerifyOptions::default()
    }
}

fn report(command: &str, argv: &[String], digest: Option<String>, results: Value) -> String {
    RunReport {
        command: command.into(),
        args: argv.to_vec(),
        digest,
        results,
    }
    .to_json()
}

pub fn scenario(a: ScenarioArgs, argv: &[String]) -> Outcome {
    if a.list {
        if a.format == Format::Text {
            let width = CATALOG.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in CATALOG {
                println!("{:width$}  {}  [{}]", c.name, c.summary, c.defaults);
            }
            return Ok(0);
        }
        json_only(a.format, "scenario --list")?;
        let list: Vec<Value> = CATALOG
            .iter()
            .map(|c| json!({ "name": c.name, "summary": c.summary, "defaults": c.defaults }))
            .collect();
        print!("{}", report("scenario", argv, None, Value::Array(list)));
        return Ok(0);
    }
    json_only(a.format, "scenario")?;
    let name = a.name.expect("clap requires --name");
    let params = ScenarioParams {
        k: a.k,
        n: a.n,
        beta: a.beta,
        seed: Some(a.seed),
        scale: a.scale,
    };
    let s = generate(&name, &params)?;
    let text = s.instance.to_json();
    if let Some(path) = &a.out {
        write(path, &text)?;
    }
    let mut profile_written = false;
    if let (Some(path), Some(profile)) = (&a.profile_out, &s.claims.equilibrium) {
        write(path, &profile_to_json(profile)?)?;
        profile_written = true;
    }
    let results = json!({
        "name": s.name,
        "params": to_value(&s.params),
        "general_position": to_value(&s.general_position),
        "claims": to_value(&s.claims),
        "instance": s.instance.to_value(),
        "profile_written": profile_written,
    });
    print!("{}", report("scenario", argv, Some(digest(&text)), results));
    Ok(0)
}

fn is_proportional_singleton(inst: &Instance) -> bool {
    matches!(inst.rule.kind(), RuleKind::Proportional) && inst.types.is_singleton_game()
}

fn report_value(r: &EquilibriumReport) -> Value {
    let mut v = to_value(r);
    v["max_regret"] = json!(r.max_regret());
    v
}

fn closed_form(inst: &Instance, epsilon: f64, opts: &VerifyOptions) -> Result<(Value, Option<Vec<EngineStrategy>>), Failure> {
    if !is_proportional_singleton(inst) {
        return Err(Failure::invalid(
            "closed-form needs the proportional rule on a singleton game",
        ));
    }
    let beta = inst.config.beta;
    let k = inst.config.engines;
    let (state, certificate) = symmetric_equilibrium_proportional(&inst.types, beta, k)?;
    let strategy = if beta == 1.0 {
        symmetric_equilibrium_beta1_proportional(&inst.types)?
    } else {
        state.page_probs.clone()
    };
    let profile = vec![EngineStrategy::from(strategy.clone()); k];
    let r = verify_epsilon_nash(&inst.game(), &profile, epsilon, opts)?;
    let verified = r.is_equilibrium;
    let results = json!({
        "method": "closed-form",
        "z": state.z,
        "lambda_prime": state.lambda_prime,
        "residual": state.residual,
        "iterations": state.iterations,
        "certificate": to_value(&certificate),
        "strategy": to_value(&strategy),
        "verification": report_value(&r),
    });
    Ok((results, verified.then_some(profile)))
}

fn brute_force(inst: &Instance, grid: usize, epsilon: f64, opts: &VerifyOptions) -> Result<(Value, Vec<Vec<EngineStrategy>>), Failure> {
    let found = brute_force_equilibria(&inst.game(), grid, epsilon, opts)?;
    let verified: Vec<Vec<EngineStrategy>> = found
        .iter()
        .filter(|c| c.report.is_equilibrium)
        .map(|c| c.profile.clone())
        .collect();
    let candidates: Vec<Value> = found
        .iter()
        .map(|c| {
            json!({
                "grid_counts": c.grid_counts,
                "grid_regrets": c.grid_regrets,
                "profile": to_value(&c.profile),
                "verified": c.report.is_equilibrium,
                "max_regret": c.report.max_regret(),
                "welfare": c.report.welfare,
            })
        })
        .collect();
    let results = json!({
        "method": "brute-force",
        "grid": grid,
        "candidates": candidates,
        "equilibria_found": verified.len(),
    });
    Ok((results, verified))
}

fn optimum_start(inst: &Instance) -> Result<Vec<EngineStrategy>, Failure> {
    let opt = default_optimum(&inst.types, &inst.config)?;
    Ok(if inst.types.is_singleton_game() {
        opt.singleton_profile(inst.config.pages)
            .into_iter()
            .map(Into::into)
            .collect()
    } else {
        opt.profile()
    })
}

fn check_grid(grid: usize) -> Result<(), Failure> {
    if grid == 0 || grid > search_game::equilibrium::MAX_GRID_M {
        return Err(Failure::invalid(format!(
            "--grid {grid} must lie in 1..={}",
            search_game::equilibrium::MAX_GRID_M
        )));
    }
    Ok(())
}

pub fn solve(a: SolveArgs, argv: &[String]) -> Outcome {
    json_only(a.output.format, "solve")?;
    check_epsilon(a.epsilon)?;
    if let Some(g) = a.grid {
        check_grid(g)?;
    }
    let inst = load_instance(&a.instance)?;
    let opts = verify_options(a.seed);
    let method = match a.method {
        Method::Auto if is_proportional_singleton(&inst) && inst.config.beta > 0.0 => Method::ClosedForm,
        Method::Auto => Method::BruteForce,
        m => m,
    };
    let mut code = 0;
    let (results, equilibria) = match method {
        Method::ClosedForm => {
            let (v, p) = closed_form(&inst, a.epsilon, &opts)?;
            if p.is_none() {
                code = EXIT_SOLVER;
            }
            (v, p.into_iter().collect())
        }
        Method::BruteForce => {
            let grid = a.grid.unwrap_or(if a.method == Method::Auto { 1 } else { DEFAULT_GRID_M });
            brute_force(&inst, grid, a.epsilon, &opts)?
        }
        Method::BestResponse => {
            let start = optimum_start(&inst)?;
            let r = best_response_dynamics(&inst.game(), start, a.max_rounds, a.epsilon, &opts)?;
            if !r.converged {
                code = EXIT_SOLVER;
            }
            let v = json!({
                "method": "best-response",
                "rounds": r.rounds,
                "converged": r.converged,
                "profile": to_value(&r.profile),
                "verification": report_value(&r.report),
            });
            (v, if r.report.is_equilibrium { vec![r.profile] } else { vec![] })
        }
        Method::Auto => unreachable!("resolved above"),
    };
    if let (Some(path), Some(first)) = (&a.profile_out, equilibria.first()) {
        write(path, &profile_to_json(first)?)?;
    }
    let text = report("solve", argv, Some(digest(&inst.to_json())), results);
    emit(&text, &a.output)?;
    if code != 0 {
        eprintln!("error: no verified equilibrium");
    }
    Ok(code)
}

pub fn verify(a: VerifyArgs, argv: &[String]) -> Outcome {
    json_only(a.output.format, "verify")?;
    check_epsilon(a.epsilon)?;
    let inst = load_instance(&a.instance)?;
    let profile = load_profile(&a.profile, inst.config.pages)?;
    let r = verify_epsilon_nash(&inst.game(), &profile, a.epsilon, &verify_options(a.seed))?;
    let text = report("verify", argv, Some(digest(&inst.to_json())), report_value(&r));
    emit(&text, &a.output)?;
    Ok(0)
}

fn parse_equilibria(path: &Path, pages: usize) -> Result<Vec<Vec<EngineStrategy>>, Failure> {
    let text = read(path)?;
    let value: Value = in_file(path, serde_json::from_str(&text).map_err(Into::into))?;
    let items = match value {
        Value::Array(items) => items,
        single => vec![single],
    };
    items
        .iter()
        .map(|v| in_file(path, parse_profile(&v.to_string(), pages)))
        .collect()
}

fn optimum_for(inst: &Instance, mode: Option<&str>) -> Result<OptimumResult, Failure> {
    let opt = match mode {
        Some(m) => {
            let mode: OptimumMode = m.parse()?;
            social_optimum(&inst.types, &inst.config, mode)?
        }
        None => default_optimum(&inst.types, &inst.config)?,
    };
    Ok(opt.for_rule(&inst.rule))
}

struct AnarchyRow {
    scenario: String,
    k: usize,
    n: usize,
    beta: f64,
    opt: f64,
    welfares: Vec<f64>,
}

impl AnarchyRow {
    const HEADER: &'static str = "scenario,k,n,beta,opt_welfare,worst_equilibrium_welfare,best_equilibrium_welfare,poa,pos,equilibria";

    fn csv(&self) -> Result<String, Failure> {
        let worst = self.welfares.iter().copied().fold(f64::INFINITY, f64::min);
        let best = self.welfares.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (poa, pos) = if self.welfares.is_empty() {
            (String::new(), String::new())
        } else {
            (
                format_sig17(price_of_anarchy(self.opt, &self.welfares)?),
                format_sig17(price_of_stability(self.opt, &self.welfares)?),
            )
        };
        let num = |x: f64| if x.is_finite() { format_sig17(x) } else { String::new() };
        Ok(format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.k,
            self.n,
            format_sig17(self.beta),
            format_sig17(self.opt),
            num(worst),
            num(best),
            poa,
            pos,
            self.welfares.len()
        ))
    }
}

pub fn poa(a: PoaArgs, argv: &[String]) -> Outcome {
    check_epsilon(a.epsilon)?;
    check_grid(a.grid)?;
    if a.output.format == Format::Text {
        return Err(Failure::invalid("poa writes JSON or CSV"));
    }
    if let Some(name) = &a.scenario {
        return poa_sweep(name, &a, argv);
    }
    let path = a.instance.as_ref().expect("clap requires --instance");
    let inst = load_instance(path)?;
    let game = inst.game();
    let opts = verify_options(a.seed);
    let (source, profiles) = match &a.equilibria {
        Some(p) => {
            let profiles = parse_equilibria(p, inst.config.pages)?;
            for (j, profile) in profiles.iter().enumerate() {
                let r = verify_epsilon_nash(&game, profile, a.epsilon, &opts)?;
                if !r.is_equilibrium {
                    return Err(Failure::invalid(format!(
                        "{}: profile {j} is not an epsilon-equilibrium (regret {})",
                        p.display(),
                        r.max_regret()
                    )));
                }
            }
            ("file".to_string(), profiles)
        }
        None if is_proportional_singleton(&inst) && inst.config.beta > 0.0 => {
            let (_, p) = closed_form(&inst, a.epsilon, &opts)?;
            ("closed-form".to_string(), p.into_iter().collect())
        }
        None => {
            let (_, p) = brute_force(&inst, a.grid, a.epsilon, &opts)?;
            (format!("brute-force grid {}", a.grid), p)
        }
    };
    let optimum = optimum_for(&inst, a.optimum.as_deref())?;
    let welfares = profiles
        .iter()
        .map(|p| game.welfare(p))
        .collect::<search_game::Result<Vec<f64>>>()?;
    let inst_digest = digest(&inst.to_json());
    if a.output.format == Format::Csv {
        let row = AnarchyRow {
            scenario: String::new(),
            k: inst.config.engines,
            n: inst.config.pages,
            beta: inst.config.beta,
            opt: optimum.welfare,
            welfares,
        };
        emit(&format!("{}\n{}\n", AnarchyRow::HEADER, row.csv()?), &a.output)?;
        return Ok(0);
    }
    let results = if welfares.is_empty() {
        json!({
            "status": "no_equilibrium",
            "source": source,
            "optimum": to_value(&optimum),
        })
    } else {
        json!({
            "status": "ok",
            "source": source,
            "optimum": to_value(&optimum),
            "equilibrium_welfares": welfares,
            "poa": price_of_anarchy(optimum.welfare, &welfares)?,
            "pos": price_of_stability(optimum.welfare, &welfares)?,
        })
    };
    emit(&report("poa", argv, Some(inst_digest), results), &a.output)?;
    Ok(0)
}

fn poa_sweep(name: &str, a: &PoaArgs, argv: &[String]) -> Outcome {
    let ks: Vec<Option<usize>> = if a.k_values.is_empty() {
        vec![None]
    } else {
        a.k_values.iter().copied().map(Some).collect()
    };
    let ns: Vec<Option<usize>> = if a.n_values.is_empty() {
        vec![None]
    } else {
        a.n_values.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::new();
    let mut digests = Vec::new();
    for &k in &ks {
        for &n in &ns {
            let params = ScenarioParams {
                k,
                n,
                beta: a.beta,
                seed: Some(a.seed),
                scale: a.scale,
            };
            let s = generate(name, &params)?;
            let profile = s.claims.equilibrium.clone().ok_or_else(|| {
                Failure::invalid(format!("scenario `{name}` has no equilibrium to sweep"))
            })?;
            let eps = s.claims.equilibrium_epsilon.unwrap_or(a.epsilon);
            let game = s.instance.game();
            let r = verify_epsilon_nash(&game, &profile, eps, &verify_options(a.seed))?;
            if !r.is_equilibrium {
                return Err(Failure {
                    code: EXIT_SOLVER,
                    message: format!("{name} k={k:?} n={n:?}: claimed equilibrium has regret {}", r.max_regret()),
                });
            }
            let optimum = optimum_for(&s.instance, a.optimum.as_deref())?;
            digests.push(digest(&s.instance.to_json()));
            rows.push(AnarchyRow {
                scenario: name.to_string(),
                k: s.instance.config.engines,
                n: s.instance.config.pages,
                beta: s.instance.config.beta,
                opt: optimum.welfare,
                welfares: vec![r.welfare],
            });
        }
    }
    if a.output.format == Format::Csv {
        let mut text = format!("{}\n", AnarchyRow::HEADER);
        for row in &rows {
            text.push_str(&row.csv()?);
            text.push('\n');
        }
        emit(&text, &a.output)?;
        return Ok(0);
    }
    let entries = rows
        .iter()
        .map(|r| {
            Ok(json!({
                "k": r.k,
                "n": r.n,
                "beta": r.beta,
                "opt_welfare": r.opt,
                "equilibrium_welfare": r.welfares[0],
                "poa": price_of_anarchy(r.opt, &r.welfares)?,
                "pos": price_of_stability(r.opt, &r.welfares)?,
            }))
        })
        .collect::<Result<Vec<Value>, Failure>>()?;
    let combined = digest(&digests.join("\n"));
    emit(&report("poa", argv, Some(combined), json!({ "scenario": name, "sweep": entries })), &a.output)?;
    Ok(0)
}

#[derive(serde::Deserialize)]
struct ModelFile {
    success: Vec<Vec<f64>>,
    failure: Vec<Vec<f64>>,
}

fn load_model(path: &Path) -> Result<MarkovUserModel, Failure> {
    let file: ModelFile = in_file(path, serde_json::from_str(&read(path)?).map_err(Into::into))?;
    in_file(path, MarkovUserModel::new(file.success, file.failure))
}

fn model_value(m: &MarkovUserModel) -> Value {
    json!({ "success": m.success(), "failure": m.failure() })
}

pub fn markov(a: MarkovArgs, argv: &[String]) -> Outcome {
    let model = match (&a.model, &a.instance) {
        (Some(p), _) => load_model(p)?,
        (None, Some(p)) => match load_instance(p)?.rule.kind() {
            RuleKind::InducedMarkov(m) => m.clone(),
            other => {
                return Err(Failure::invalid(format!(
                    "{}: rule `{}` has no Markov model",
                    p.display(),
                    other.name()
                )))
            }
        },
        (None, None) => unreachable!("clap requires --model or --instance"),
    };
    let k = model.engines();
    if a.q.len() != k {
        return Err(Failure::invalid(format!("--q has {} entries, the model has {k} engines", a.q.len())));
    }
    let q = &a.q;
    let pi = stationary(&model, q)?;
    let power = stationary_power(&model, q, POWER_TOLERANCE, POWER_MAX_ITER)?;
    let closed = closed_form_stationary(&model, q)?;
    let mut engines = Vec::new();
    for i in 0..k {
        let r = return_times(&model, q, i)?;
        let d = stationary_derivatives(&model, q, i);
        engines.push((i, r, d));
    }
    let monotone = check_markov_monotone(&model, a.samples, a.seed);
    let rule = SelectionRuleSpec::new(RuleKind::InducedMarkov(model.clone()), k)?;
    let opts = CheckOptions {
        samples: a.samples,
        seed: a.seed,
        ..CheckOptions::default()
    };
    let convex = check_convex(&rule, &opts);
    let opt_num = |x: Option<f64>| x.map(format_sig17).unwrap_or_else(|| "-".into());

    match a.output.format {
        Format::Json => {
            let rows: Vec<Value> = engines
                .iter()
                .map(|(i, r, d)| {
                    let mut v = json!({
                        "engine": i,
                        "return_time_success": r.success,
                        "return_time_failure": r.failure,
                    });
                    match d {
                        Ok(d) => v["derivatives"] = to_value(d),
                        Err(e) => v["derivatives_error"] = json!(e.to_string()),
                    }
                    v
                })
                .collect();
            let results = json!({
                "q": q,
                "stationary": pi,
                "stationary_power": power,
                "closed_form": closed,
                "engines": rows,
                "monotone": to_value(&monotone),
                "convex": to_value(&convex),
            });
            let d = digest(&to_canonical_string(&model_value(&model)));
            emit(&report("markov", argv, Some(d), results), &a.output)?;
        }
        Format::Csv | Format::Text => {
            let header = ["engine", "q", "pi", "pi_power", "pi_closed_form", "r_success", "r_failure", "d1", "d2"];
            let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
            for (i, r, d) in &engines {
                let (d1, d2) = match d {
                    Ok(d) => (format_sig17(d.first), format_sig17(d.second)),
                    Err(_) => ("-".into(), "-".into()),
                };
                table.push(vec![
                    i.to_string(),
                    format_sig17(q[*i]),
                    format_sig17(pi[*i]),
                    format_sig17(power[*i]),
                    format_sig17(closed[*i]),
                    opt_num(r.success),
                    opt_num(r.failure),
                    d1,
                    d2,
                ]);
            }
            let mut text = String::new();
            if a.output.format == Format::Csv {
                for row in &table {
                    text.push_str(&row.join(","));
                    text.push('\n');
                }
            } else {
                text = aligned(&table);
                for r in [&monotone, &convex] {
                    text.push_str(&report_line(r));
                }
            }
            emit(&text, &a.output)?;
        }
    }
    Ok(0)
}

fn aligned(table: &[Vec<String>]) -> String {
    let cols = table[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in table {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn report_line(r: &PropertyReport) -> String {
    let strict = match r.strict {
        Some(true) => " (strict)",
        _ => "",
    };
    let status = if r.passed() { "pass" } else { "fail" };
    let mut line = format!("{}: {status}{strict}, {} points", r.property, r.points_checked);
    if let Some(w) = &r.witness {
        line.push_str(&format!("; witness engine {} at q = {:?}: {}", w.engine, w.q, w.detail));
    }
    line.push('\n');
    line
}

pub fn rulecheck(a: RulecheckArgs, argv: &[String]) -> Outcome {
    if !(a.grid_step > 0.0 && a.grid_step <= 0.5) {
        return Err(Failure::invalid(format!("--grid-step {} must lie in (0, 0.5]", a.grid_step)));
    }
    if a.output.format == Format::Csv {
        return Err(Failure::invalid("rulecheck writes JSON or text"));
    }
    let (rule, inst_digest) = match (&a.instance, &a.rule) {
        (Some(p), _) => {
            let inst = load_instance(p)?;
            let d = digest(&inst.to_json());
            (inst.rule, Some(d))
        }
        (None, Some(name)) => {
            let model = match &a.model {
                Some(p) => Some(load_model(p)?),
                None => None,
            };
            let k = a
                .k
                .or_else(|| model.as_ref().map(|m| m.engines()))
                .or_else(|| a.pages.map(|n| n + 1))
                .ok_or_else(|| Failure::invalid("--k is required for this rule"))?;
            let matrices = model.map(|m| (m.success().to_vec(), m.failure().to_vec()));
            (rule_from_parts(name, k, a.weights.clone(), a.pages, matrices)?, None)
        }
        (None, None) => unreachable!("clap requires --rule or --instance"),
    };
    let k = rule.engines();
    if let Some(rest) = &a.rest {
        if rest.len() + 2 != k {
            return Err(Failure::invalid(format!("--rest needs {} values", k.saturating_sub(2))));
        }
    }
    let opts = CheckOptions {
        grid_step: a.grid_step,
        samples: a.samples,
        seed: a.seed,
    };
    let eps = a.epsilons.clone().unwrap_or_else(default_epsilons);
    let reports = [
        check_monotone(&rule, &opts),
        check_non_indifferent(&rule, &opts),
        check_convex(&rule, &opts),
        check_cross_concave(&rule, &eps, a.rest.as_deref(), &opts),
    ];
    if a.output.format == Format::Text {
        let text: String = reports.iter().map(report_line).collect();
        emit(&text, &a.output)?;
        return Ok(0);
    }
    let results = json!({
        "rule": rule_to_value(&rule),
        "engines": k,
        "reports": reports.iter().map(to_value).collect::<Vec<_>>(),
    });
    emit(&report("rulecheck", argv, inst_digest, results), &a.output)?;
    Ok(0)
}
