//! Tabular Q-learning and double Q-learning for tour construction.
//!
//! The state is the current city; a visited mask restricts the actions, so a
//! table is `n x n`. Each episode walks a full tour from the start city and
//! closes it, and every move is rewarded with the negative distance travelled.
//! An episode's total reward is therefore minus its tour length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::construct::check_index;
use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;
use crate::tour::{SolveTrace, Tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// `-d`, so maximising return minimises tour length.
    #[default]
    NegativeDistance,
    /// `1 / d` (zero-length moves earn nothing).
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    #[default]
    PerStep,
    PerEpisode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    pub episodes: u64,
    #[serde(default)]
    pub decay_mode: DecayMode,
    #[serde(default)]
    pub reward_mode: RewardMode,
    /// Stops training early once exceeded; at least one episode always runs
    /// unless the limit is already spent when training starts.
    #[serde(default)]
    pub time_budget_ms: Option<u64>,
}

impl RlConfig {
    /// Learning rate 0.01, discount 0.95, epsilon 0.99 decaying by 0.995,
    /// floor 0.01, and `100 * n` episodes.
    pub fn for_size(n: usize) -> Self {
        RlConfig {
            alpha: 0.01,
            gamma: 0.95,
            epsilon: 0.99,
            epsilon_min: 0.01,
            epsilon_decay: 0.995,
            episodes: 100 * n as u64,
            decay_mode: DecayMode::PerStep,
            reward_mode: RewardMode::NegativeDistance,
            time_budget_ms: None,
        }
    }

    pub fn with_episodes(mut self, episodes: u64) -> Self {
        self.episodes = episodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, v: f64| Err(crate::error::param(name, format!("out of range: {v}")));
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return bad("alpha", self.alpha);
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", self.gamma);
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon", self.epsilon);
        }
        if !(self.epsilon_min >= 0.0 && self.epsilon_min <= 1.0) {
            return bad("epsilon_min", self.epsilon_min);
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return bad("epsilon_decay", self.epsilon_decay);
        }
        if self.episodes == 0 {
            return Err(crate::error::param("episodes", "must be >= 1"));
        }
        Ok(())
    }
}

/// `n x n` action values, zero-initialised.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n: usize,
    q: Vec<f64>,
}

impl QTable {
    pub fn zeros(n: usize) -> Self {
        QTable { n, q: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.q[s * self.n + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n..(s + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        for &i in idx {
            check_index(i, self.n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub reward: f64,
    pub tour_len_m: f64,
    /// Exploration rate after this episode's decay.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub records: Vec<EpisodeRecord>,
}

impl EpisodeLog {
    /// CSV with header `episode,reward,tour_len_m,epsilon`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,reward,tour_len_m,epsilon\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.episode, r.reward, r.tour_len_m, r.epsilon));
        }
        out
    }

    /// Best tour length seen up to each episode.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.min(r.tour_len_m);
                best
            })
            .collect()
    }
}

pub fn reward(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(crate::error::param("distance", format!("must be >= 0, got {d}")));
    }
    Ok(-d)
}

fn reward_for(mode: RewardMode, d: f64) -> f64 {
    match mode {
        RewardMode::NegativeDistance => -d,
        RewardMode::InverseDistance if d > 0.0 => 1.0 / d,
        RewardMode::InverseDistance => 0.0,
    }
}

/// What the next state is worth when bootstrapping an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bootstrap {
    /// Best value over the unvisited actions of the next state; when nothing
    /// is left unvisited, the value of returning to `start`.
    Unvisited { start: usize },
    /// Episode over: no future value.
    Terminal,
}

fn argmax_unvisited(row: &[f64], visited: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (a, &v) in row.iter().enumerate() {
        if !visited[a] && best.is_none_or(|b| v > row[b]) {
            best = Some(a);
        }
    }
    best
}

fn next_value(q: &QTable, s_next: usize, visited: &[bool], boot: Bootstrap) -> f64 {
    match boot {
        Bootstrap::Terminal => 0.0,
        Bootstrap::Unvisited { start } => match argmax_unvisited(q.row(s_next), visited) {
            Some(a) => q.get(s_next, a),
            None => q.get(s_next, start),
        },
    }
}

/// `q[s][a] <- (1 - alpha) q[s][a] + alpha (r + gamma * value(s_next))`.
/// Returns the new entry.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    visited: &[bool],
    boot: Bootstrap,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    q.check(&[s, a, s_next])?;
    if visited.len() != q.n() {
        return Err(crate::error::param("visited", "mask length differs from table size"));
    }
    let target = r + gamma * next_value(q, s_next, visited, boot);
    let v = (1.0 - alpha) * q.get(s, a) + alpha * target;
    q.set(s, a, v);
    Ok(v)
}

/// Which table a double Q-learning step updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coin {
    A,
    B,
}

/// Double Q-learning step: the updated table picks the best next action, the
/// other table values it. Returns the new entry of the updated table.
#[allow(clippy::too_many_arguments)]
pub fn double_q_update(
    qa: &mut QTable,
    qb: &mut QTable,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    visited: &[bool],
    boot: Bootstrap,
    alpha: f64,
    gamma: f64,
    coin: Coin,
) -> Result<f64> {
    qa.check(&[s, a, s_next])?;
    if qb.n() != qa.n() || visited.len() != qa.n() {
        return Err(crate::error::param("tables", "size mismatch"));
    }
    let (upd, other) = match coin {
        Coin::A => (qa, &*qb),
        Coin::B => (qb, &*qa),
    };
    let future = match boot {
        Bootstrap::Terminal => 0.0,
        Bootstrap::Unvisited { start } => {
            let pick = argmax_unvisited(upd.row(s_next), visited).unwrap_or(start);
            other.get(s_next, pick)
        }
    };
    let old = upd.get(s, a);
    let v = old + alpha * (r + gamma * future - old);
    upd.set(s, a, v);
    Ok(v)
}

/// Explore with probability `epsilon` (uniform over unvisited actions),
/// otherwise take the best unvisited action, lowest index on ties.
pub fn epsilon_greedy<R: Rng>(row: &[f64], visited: &[bool], epsilon: f64, rng: &mut R) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(crate::error::param("epsilon", format!("must be in [0, 1], got {epsilon}")));
    }
    let open = visited.iter().filter(|&&v| !v).count();
    if open == 0 {
        return Err(Error::Empty("action set"));
    }
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        let k = rng.gen_range(0..open);
        Ok(visited
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v)
            .nth(k)
            .map(|(i, _)| i)
            .expect("k < open"))
    } else {
        Ok(argmax_unvisited(row, visited).expect("open > 0"))
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub tour: Tour,
    pub log: EpisodeLog,
    /// Best tour length over wall-clock time, one sample per improving episode.
    pub trace: SolveTrace,
    /// Final table (for double Q-learning, the sum of both tables).
    pub q: QTable,
}

enum Tables {
    Single(QTable),
    Double(QTable, QTable),
}

impl Tables {
    fn policy_row(&self, s: usize) -> std::borrow::Cow<'_, [f64]> {
        match self {
            Tables::Single(q) => std::borrow::Cow::Borrowed(q.row(s)),
            Tables::Double(a, b) => {
                std::borrow::Cow::Owned(a.row(s).iter().zip(b.row(s)).map(|(x, y)| x + y).collect())
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update<R: Rng>(
        &mut self,
        s: usize,
        a: usize,
        r: f64,
        s_next: usize,
        visited: &[bool],
        boot: Bootstrap,
        cfg: &RlConfig,
        rng: &mut R,
    ) -> Result<()> {
        match self {
            Tables::Single(q) => q_update(q, s, a, r, s_next, visited, boot, cfg.alpha, cfg.gamma).map(|_| ()),
            Tables::Double(qa, qb) => {
                let coin = if rng.gen::<f64>() < 0.5 { Coin::A } else { Coin::B };
                double_q_update(qa, qb, s, a, r, s_next, visited, boot, cfg.alpha, cfg.gamma, coin).map(|_| ())
            }
        }
    }

    fn into_table(self) -> QTable {
        match self {
            Tables::Single(q) => q,
            Tables::Double(a, b) => QTable {
                n: a.n,
                q: a.q.iter().zip(&b.q).map(|(x, y)| x + y).collect(),
            },
        }
    }
}

fn greedy_rollout(tables: &Tables, start: usize, n: usize) -> Vec<usize> {
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut order = vec![start];
    let mut s = start;
    while order.len() < n {
        let row = tables.policy_row(s);
        let a = argmax_unvisited(&row, &visited).expect("unvisited city remains");
        visited[a] = true;
        order.push(a);
        s = a;
    }
    order
}

fn train(d: &DistanceMatrix, cfg: &RlConfig, start: usize, rng_seed: u64, mut tables: Tables) -> Result<Trained> {
    cfg.validate()?;
    let n = d.n();
    if n < 3 {
        return Err(Error::SizeOutOfRange { n, min: 3, max: usize::MAX });
    }
    check_index(start, n)?;
    let started = Instant::now();
    let elapsed_ms = || started.elapsed().as_secs_f64() * 1e3;
    let over_budget = || cfg.time_budget_ms.is_some_and(|ms| elapsed_ms() >= ms as f64);
    let mut trace = SolveTrace::default();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut epsilon = cfg.epsilon;
    let mut log = EpisodeLog::default();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let decay = |eps: &mut f64| {
        if *eps > cfg.epsilon_min {
            *eps = (*eps * cfg.epsilon_decay).max(cfg.epsilon_min);
        }
    };

    for episode in 0..cfg.episodes {
        if over_budget() {
            break;
        }
        visited.iter_mut().for_each(|v| *v = false);
        order.clear();
        visited[start] = true;
        order.push(start);
        let mut s = start;
        let mut total_reward = 0.0;
        let mut length = 0.0;
        while order.len() < n {
            let row = tables.policy_row(s);
            let a = epsilon_greedy(&row, &visited, epsilon, &mut rng)?;
            let dist = d.get(s, a);
            let r = reward_for(cfg.reward_mode, dist);
            visited[a] = true;
            order.push(a);
            tables.update(s, a, r, a, &visited, Bootstrap::Unvisited { start }, cfg, &mut rng)?;
            total_reward += r;
            length += dist;
            s = a;
            if cfg.decay_mode == DecayMode::PerStep {
                decay(&mut epsilon);
            }
        }
        // closing leg back to the start ends the episode
        let dist = d.get(s, start);
        let r = reward_for(cfg.reward_mode, dist);
        tables.update(s, start, r, start, &visited, Bootstrap::Terminal, cfg, &mut rng)?;
        total_reward += r;
        length += dist;
        if cfg.decay_mode == DecayMode::PerEpisode {
            decay(&mut epsilon);
        }

        let exact_len = crate::localsearch::moves::cycle_cost(&order, d);
        if best.as_ref().is_none_or(|b| exact_len < b.1) {
            best = Some((order.clone(), exact_len));
            trace.record(elapsed_ms(), episode + 1, exact_len);
        }
        let tour_len_m = if cfg.reward_mode == RewardMode::NegativeDistance {
            -total_reward
        } else {
            length
        };
        log.records.push(EpisodeRecord {
            episode,
            reward: total_reward,
            tour_len_m,
            epsilon,
        });
    }

    let Some((best_order, best_len)) = best else {
        return Err(Error::BudgetExceeded);
    };
    let greedy = greedy_rollout(&tables, start, n);
    let greedy_len = crate::localsearch::moves::cycle_cost(&greedy, d);
    let episodes = log.records.len() as u64;
    let order = if greedy_len < best_len {
        trace.record(elapsed_ms(), episodes, greedy_len);
        greedy
    } else {
        best_order
    };
    trace.finish(elapsed_ms(), episodes);
    Ok(Trained {
        tour: Tour::from_valid(order, d),
        log,
        trace,
        q: tables.into_table(),
    })
}

/// Q-learning; returns the shorter of the best episode tour and the final
/// greedy rollout.
pub fn train_q(d: &DistanceMatrix, cfg: &RlConfig, start: usize, rng_seed: u64) -> Result<Trained> {
    train(d, cfg, start, rng_seed, Tables::Single(QTable::zeros(d.n())))
}

/// Double Q-learning; actions are chosen on the sum of the two tables.
pub fn train_double_q(d: &DistanceMatrix, cfg: &RlConfig, start: usize, rng_seed: u64) -> Result<Trained> {
    let n = d.n();
    train(d, cfg, start, rng_seed, Tables::Double(QTable::zeros(n), QTable::zeros(n)))
}
