//! Method registry: every solver behind one string identifier, with a
//! parameter schema and a single dispatch entry point.

use serde::Serialize;
use serde_json::{json, Map, Value};
use web_time::Instant;

use crate::budget::Budget;
use crate::construct::{
    christofides_with, double_tree, greedy_edge, insertion, nearest_neighbor, savings, ChristofidesOptions,
    InsertionStrategy, MatchingMode, Scope, Selector,
};
use crate::error::{param, Error, Result};
use crate::exact::held_karp;
use crate::geo::DistanceMatrix;
use crate::localsearch::{
    default_tenure, guided_local_search, hill_climb, simulated_annealing, tabu_search, AnnealSchedule,
    Neighborhood, SearchResult, DEFAULT_LAMBDA_FACTOR,
};
use crate::rl::{train_double_q, train_q, DecayMode, RewardMode, RlConfig};
use crate::tour::{SolveTrace, Tour};

/// Iteration and wall-clock caps applied when a metaheuristic is called
/// with an unlimited budget.
pub const DEFAULT_ITERATIONS: u64 = 10_000;
pub const DEFAULT_TIME_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Construction,
    Metaheuristic,
    Rl,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Number,
    Integer,
    String,
}

/// One tunable parameter. A `null` default means "derived from the instance".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub default: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choices: Option<&'static [&'static str]>,
    pub description: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodInfo {
    pub id: &'static str,
    pub kind: MethodKind,
    pub stochastic: bool,
    pub aliases: &'static [&'static str],
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
}

const NEIGHBORHOODS: &[&str] = &["two_opt", "adjacent_swap", "or_opt"];
const SCOPES: &[&str] = &["sequential", "parallel"];
const MATCHINGS: &[&str] = &["auto", "exact", "greedy"];
const DECAYS: &[&str] = &["per_step", "per_episode"];
const REWARDS: &[&str] = &["negative_distance", "inverse_distance"];

fn p(name: &'static str, ty: ParamType, default: Value, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        default,
        choices: None,
        description,
    }
}

fn choice(name: &'static str, default: &str, choices: &'static [&'static str], description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty: ParamType::String,
        default: json!(default),
        choices: Some(choices),
        description,
    }
}

fn first_solution() -> ParamSpec {
    p("first_solution", ParamType::String, json!("nn"), "construction method for the seed tour")
}

fn rl_params() -> Vec<ParamSpec> {
    use ParamType::*;
    vec![
        p("alpha", Number, json!(0.01), "learning rate"),
        p("gamma", Number, json!(0.95), "discount factor"),
        p("epsilon", Number, json!(0.99), "initial exploration rate"),
        p("epsilon_min", Number, json!(0.01), "exploration floor"),
        p("epsilon_decay", Number, json!(0.995), "multiplicative exploration decay"),
        p("episodes", Integer, Value::Null, "training episodes (default 100 per city)"),
        choice("decay_mode", "per_step", DECAYS, "when epsilon decays"),
        choice("reward_mode", "negative_distance", REWARDS, "reward for a move of length d"),
    ]
}

/// The full roster, in a stable order.
pub fn methods() -> Vec<MethodInfo> {
    use MethodKind::*;
    use ParamType::*;
    let insertion = |id, aliases, description| MethodInfo {
        id,
        kind: Construction,
        stochastic: false,
        aliases,
        description,
        params: vec![choice("scope", "sequential", SCOPES, "grow from the start city or from the cheapest edge")],
    };
    vec![
        MethodInfo {
            id: "nn",
            kind: Construction,
            stochastic: false,
            aliases: &["PATH_CHEAPEST_ARC", "LOCAL_CHEAPEST_ARC", "nearest_neighbor"],
            description: "nearest neighbour from the start city",
            params: vec![],
        },
        MethodInfo {
            id: "greedy_edge",
            kind: Construction,
            stochastic: false,
            aliases: &["GLOBAL_CHEAPEST_ARC"],
            description: "cheapest edges first, no early cycles",
            params: vec![],
        },
        insertion(
            "insertion:cheapest",
            &["LOCAL_CHEAPEST_INSERTION", "PARALLEL_CHEAPEST_INSERTION"],
            "cheapest insertion",
        ),
        insertion("insertion:nearest", &[], "nearest insertion"),
        insertion("insertion:farthest", &[], "farthest insertion"),
        MethodInfo {
            id: "savings",
            kind: Construction,
            stochastic: false,
            aliases: &["SAVINGS"],
            description: "Clarke-Wright savings with the start city as depot",
            params: vec![],
        },
        MethodInfo {
            id: "double_tree",
            kind: Construction,
            stochastic: false,
            aliases: &[],
            description: "shortcut walk around a doubled minimum spanning tree",
            params: vec![],
        },
        MethodInfo {
            id: "christofides",
            kind: Construction,
            stochastic: false,
            aliases: &["CHRISTOFIDES"],
            description: "spanning tree plus minimum odd-vertex matching",
            params: vec![choice("matching", "auto", MATCHINGS, "exact matching, greedy, or exact when small")],
        },
        MethodInfo {
            id: "hc",
            kind: Metaheuristic,
            stochastic: false,
            aliases: &["GREEDY_DESCENT", "hill_climb"],
            description: "best-improvement descent",
            params: vec![
                choice("neighborhood", "two_opt", NEIGHBORHOODS, "move set"),
                first_solution(),
            ],
        },
        MethodInfo {
            id: "sa",
            kind: Metaheuristic,
            stochastic: true,
            aliases: &["SIMULATED_ANNEALING"],
            description: "simulated annealing with geometric cooling",
            params: vec![
                p("T0", Number, json!(1.0), "initial temperature, relative to the seed tour length"),
                p("alpha", Number, json!(0.99), "cooling factor per temperature step"),
                p("proposals_per_step", Integer, Value::Null, "proposals per temperature step (default n)"),
                choice("neighborhood", "two_opt", NEIGHBORHOODS, "move set"),
                first_solution(),
            ],
        },
        MethodInfo {
            id: "tabu",
            kind: Metaheuristic,
            stochastic: true,
            aliases: &["TABU_SEARCH", "GENERIC_TABU_SEARCH"],
            description: "2-opt tabu search with aspiration",
            params: vec![
                p("tenure", Integer, Value::Null, "iterations a removed edge stays tabu (default max(10, n/4))"),
                first_solution(),
            ],
        },
        MethodInfo {
            id: "gls",
            kind: Metaheuristic,
            stochastic: false,
            aliases: &["GUIDED_LOCAL_SEARCH"],
            description: "guided local search with edge penalties",
            params: vec![
                p("lambda_factor", Number, json!(DEFAULT_LAMBDA_FACTOR), "penalty weight per unit of mean edge length"),
                first_solution(),
            ],
        },
        MethodInfo {
            id: "ql",
            kind: Rl,
            stochastic: true,
            aliases: &["q_learning"],
            description: "tabular Q-learning",
            params: rl_params(),
        },
        MethodInfo {
            id: "dql",
            kind: Rl,
            stochastic: true,
            aliases: &["double_q_learning"],
            description: "tabular double Q-learning",
            params: rl_params(),
        },
        MethodInfo {
            id: "held_karp",
            kind: Exact,
            stochastic: false,
            aliases: &["exact"],
            description: "exact dynamic program, up to 18 cities",
            params: vec![],
        },
    ]
}

/// Finds a method by id or alias (aliases are case-insensitive).
pub fn lookup(name: &str) -> Result<MethodInfo> {
    methods()
        .into_iter()
        .find(|m| m.id == name || m.aliases.iter().any(|a| a.eq_ignore_ascii_case(name)))
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

/// Parameters implied by an alias, e.g. parallel scope for
/// `PARALLEL_CHEAPEST_INSERTION`.
fn alias_params(name: &str) -> Map<String, Value> {
    let mut m = Map::new();
    if name.eq_ignore_ascii_case("PARALLEL_CHEAPEST_INSERTION") {
        m.insert("scope".into(), json!("parallel"));
    }
    m
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveOptions {
    pub rng_seed: u64,
    /// City the returned tour starts from; also the RL start and savings depot.
    pub start: usize,
    pub budget: Budget,
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Canonical method id.
    pub method: &'static str,
    pub tour: Tour,
    pub trace: SolveTrace,
    pub elapsed_ms: f64,
}

struct Params<'a> {
    info: &'a MethodInfo,
    values: Map<String, Value>,
}

impl<'a> Params<'a> {
    fn new(info: &'a MethodInfo, alias: &str, given: &Map<String, Value>) -> Result<Self> {
        let mut values = alias_params(alias);
        for (k, v) in given {
            let Some(spec) = info.params.iter().find(|s| s.name == k) else {
                return Err(param("params", format!("`{}` does not take parameter `{k}`", info.id)));
            };
            let ok = match spec.ty {
                _ if v.is_null() => true,
                ParamType::Number => v.is_number(),
                ParamType::Integer => v.is_u64(),
                ParamType::String => v.as_str().is_some_and(|s| spec.choices.is_none_or(|c| c.contains(&s))),
            };
            if !ok {
                let expect = match (spec.ty, spec.choices) {
                    (ParamType::String, Some(c)) => format!("one of {}", c.join(", ")),
                    (ParamType::String, None) => "a string".into(),
                    (ParamType::Number, _) => "a number".into(),
                    (ParamType::Integer, _) => "a non-negative integer".into(),
                };
                return Err(param("params", format!("`{k}` must be {expect}, got {v}")));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Params { info, values })
    }

    fn get(&self, name: &str) -> &Value {
        match self.values.get(name) {
            Some(v) if !v.is_null() => v,
            _ => {
                &self.info.params.iter().find(|s| s.name == name).expect("declared parameter").default
            }
        }
    }

    fn f64(&self, name: &str) -> f64 {
        self.get(name).as_f64().expect("validated number")
    }

    fn opt_u64(&self, name: &str) -> Option<u64> {
        self.get(name).as_u64()
    }

    fn str(&self, name: &str) -> &str {
        self.get(name).as_str().expect("validated string")
    }
}

fn effective_budget(b: Budget) -> Budget {
    if b.max_iters.is_none() && b.time_ms.is_none() {
        Budget {
            max_iters: Some(DEFAULT_ITERATIONS),
            time_ms: Some(DEFAULT_TIME_MS),
        }
    } else {
        b
    }
}

fn construct(id: &str, p: &Params, d: &DistanceMatrix, start: usize) -> Result<Tour> {
    let strategy = |selector| -> Result<InsertionStrategy> {
        Ok(InsertionStrategy::new(selector, p.str("scope").parse::<Scope>()?))
    };
    match id {
        "nn" => nearest_neighbor(d, start),
        "greedy_edge" => greedy_edge(d),
        "insertion:cheapest" => insertion(d, strategy(Selector::Cheapest)?, start),
        "insertion:nearest" => insertion(d, strategy(Selector::Nearest)?, start),
        "insertion:farthest" => insertion(d, strategy(Selector::Farthest)?, start),
        "savings" => savings(d, start),
        "double_tree" => double_tree(d),
        "christofides" => {
            let matching = match p.str("matching") {
                "exact" => MatchingMode::Exact,
                "greedy" => MatchingMode::Greedy,
                _ => MatchingMode::Auto,
            };
            let opts = ChristofidesOptions {
                matching,
                ..ChristofidesOptions::for_matrix(d)
            };
            Ok(christofides_with(d, opts)?.tour)
        }
        "held_karp" => held_karp(d),
        other => Err(Error::UnknownMethod(other.to_string())),
    }
}

/// Builds the seed tour for a metaheuristic from its `first_solution` parameter.
fn seed_tour(p: &Params, d: &DistanceMatrix, start: usize) -> Result<Tour> {
    let name = p.str("first_solution");
    let info = lookup(name)?;
    if info.kind != MethodKind::Construction {
        return Err(param("first_solution", format!("`{name}` is not a construction method")));
    }
    let inner = Params::new(&info, name, &Map::new())?;
    construct(info.id, &inner, d, start)
}

fn rl_config(p: &Params, n: usize, budget: Budget) -> Result<RlConfig> {
    let mut cfg = RlConfig::for_size(n);
    cfg.alpha = p.f64("alpha");
    cfg.gamma = p.f64("gamma");
    cfg.epsilon = p.f64("epsilon");
    cfg.epsilon_min = p.f64("epsilon_min");
    cfg.epsilon_decay = p.f64("epsilon_decay");
    if let Some(e) = p.opt_u64("episodes").or(budget.max_iters) {
        cfg.episodes = e;
    }
    cfg.decay_mode = if p.str("decay_mode") == "per_episode" {
        DecayMode::PerEpisode
    } else {
        DecayMode::PerStep
    };
    cfg.reward_mode = if p.str("reward_mode") == "inverse_distance" {
        RewardMode::InverseDistance
    } else {
        RewardMode::NegativeDistance
    };
    cfg.time_budget_ms = budget.time_ms;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `method` (id or alias) on `d`. The returned tour starts at
/// `opts.start`. For RL methods an iteration budget sets the episode count
/// unless `episodes` is given.
pub fn solve(d: &DistanceMatrix, method: &str, opts: &SolveOptions) -> Result<Solution> {
    let info = lookup(method)?;
    let p = Params::new(&info, method, &opts.params)?;
    let n = d.n();
    crate::construct::check_index(opts.start, n)?;
    let started = Instant::now();
    let elapsed = || started.elapsed().as_secs_f64() * 1e3;

    let (tour, trace) = if n == 2 {
        // every method agrees on the only tour
        let t = Tour::new(vec![0, 1], d)?;
        let mut tr = SolveTrace::default();
        tr.record(elapsed(), 0, t.length_m());
        (t, tr)
    } else {
        match info.kind {
            MethodKind::Construction | MethodKind::Exact => {
                let t = construct(info.id, &p, d, opts.start)?;
                let mut tr = SolveTrace::default();
                tr.record(elapsed(), 0, t.length_m());
                (t, tr)
            }
            MethodKind::Metaheuristic => {
                let seed = seed_tour(&p, d, opts.start)?;
                let budget = effective_budget(opts.budget);
                let r: SearchResult = match info.id {
                    "hc" => hill_climb(&seed, d, p.str("neighborhood").parse::<Neighborhood>()?, budget)?,
                    "sa" => {
                        let schedule = AnnealSchedule {
                            t0: p.f64("T0"),
                            alpha: p.f64("alpha"),
                            proposals_per_step: p.opt_u64("proposals_per_step"),
                        };
                        let nb = p.str("neighborhood").parse::<Neighborhood>()?;
                        simulated_annealing(&seed, d, schedule, nb, opts.rng_seed, budget)?
                    }
                    "tabu" => {
                        let tenure = p.opt_u64("tenure").map_or(default_tenure(n), |t| t as usize);
                        tabu_search(&seed, d, tenure, opts.rng_seed, budget)?
                    }
                    "gls" => guided_local_search(&seed, d, p.f64("lambda_factor"), opts.rng_seed, budget)?,
                    other => return Err(Error::UnknownMethod(other.to_string())),
                };
                (r.tour, r.trace)
            }
            MethodKind::Rl => {
                let cfg = rl_config(&p, n, opts.budget)?;
                let t = if info.id == "dql" {
                    train_double_q(d, &cfg, opts.start, opts.rng_seed)?
                } else {
                    train_q(d, &cfg, opts.start, opts.rng_seed)?
                };
                (t.tour, t.trace)
            }
        }
    };
    Ok(Solution {
        method: info.id,
        tour: tour.rotated_to(opts.start),
        trace,
        elapsed_ms: elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fixtures::*;
    use crate::tour::validate_order;

    fn opts() -> SolveOptions {
        SolveOptions {
            budget: Budget::iterations(2_000),
            ..SolveOptions::default()
        }
    }

    #[test]
    fn every_method_solves_and_starts_at_start() {
        let d = random(12, 3);
        for m in methods() {
            for start in [0, 5] {
                let s = solve(&d, m.id, &SolveOptions { start, ..opts() }).unwrap();
                validate_order(s.tour.order(), 12).unwrap();
                assert_eq!(s.tour.order()[0], start, "{}", m.id);
                assert_eq!(s.method, m.id);
                assert!(s.trace.is_monotone());
            }
        }
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(lookup("PATH_CHEAPEST_ARC").unwrap().id, "nn");
        assert_eq!(lookup("guided_local_search").unwrap().id, "gls");
        assert_eq!(lookup("GENERIC_TABU_SEARCH").unwrap().id, "tabu");
        assert!(matches!(lookup("foo"), Err(Error::UnknownMethod(_))));
        let d = random(15, 8);
        let par = solve(&d, "PARALLEL_CHEAPEST_INSERTION", &opts()).unwrap();
        let mut o = opts();
        o.params.insert("scope".into(), json!("parallel"));
        assert_eq!(par.tour, solve(&d, "insertion:cheapest", &o).unwrap().tour);
    }

    #[test]
    fn sa_schema_defaults() {
        let sa = lookup("sa").unwrap();
        let get = |n: &str| sa.params.iter().find(|p| p.name == n).unwrap().default.clone();
        assert_eq!(get("T0"), json!(1.0));
        assert_eq!(get("alpha"), json!(0.99));
    }

    #[test]
    fn params_are_checked() {
        let d = random(6, 1);
        let with = |k: &str, v: Value| {
            let mut o = opts();
            o.params.insert(k.into(), v);
            o
        };
        assert!(solve(&d, "nn", &with("T0", json!(2))).is_err());
        assert!(solve(&d, "sa", &with("T0", json!("hot"))).is_err());
        assert!(solve(&d, "sa", &with("neighborhood", json!("3opt"))).is_err());
        assert!(solve(&d, "tabu", &with("tenure", json!(-1))).is_err());
        assert!(solve(&d, "hc", &with("first_solution", json!("sa"))).is_err());
        assert!(solve(&d, "sa", &with("T0", json!(-1.0))).is_err());
        assert!(solve(&d, "ql", &with("alpha", json!(2.0))).is_err());
        assert!(solve(&d, "hc", &with("first_solution", json!("christofides"))).is_ok());
        assert!(solve(&d, "sa", &with("T0", Value::Null)).is_ok());
    }

    #[test]
    fn stochastic_methods_repeat_under_a_seed() {
        let d = random(14, 2);
        for m in methods().into_iter().filter(|m| m.stochastic) {
            let o = SolveOptions { rng_seed: 11, ..opts() };
            let a = solve(&d, m.id, &o).unwrap();
            let b = solve(&d, m.id, &o).unwrap();
            assert_eq!(a.tour, b.tour, "{}", m.id);
        }
    }

    #[test]
    fn two_points() {
        let d = planar(&[(0.0, 0.0), (3.0, 4.0)]);
        for m in methods() {
            let s = solve(&d, m.id, &SolveOptions { start: 1, ..opts() }).unwrap();
            assert_eq!(s.tour.order(), &[1, 0]);
            assert_eq!(s.tour.length_m(), 10.0);
        }
    }

    #[test]
    fn christofides_square() {
        let s = solve(&square(), "christofides", &opts()).unwrap();
        assert_eq!(s.tour.length_m(), 4.0);
    }
}
