//! Monte-Carlo ground truth on lazily grown Galton-Watson trees.
//!
//! Two engines produce the same observable, the realized rumor range:
//!
//! * `generation` iterates the embedded branching recursion level by level,
//!   drawing each vertex's spreader count by literally replaying its contact
//!   sequence (uniform neighbor per contact, stop on the first informed hit);
//! * `ctmc` runs the continuous-time dynamics event by event: every spreader
//!   carries an exponential contact clock with total rate equal to its
//!   degree, and the tree is materialized only where the rumor arrives.
//!
//! Ignorant vertices hold no clocks: an ignorant's infection rate is exactly
//! the sum of contact rates its spreader neighbors direct at it, which the
//! spreader-side clocks already realize. The source vertex attached to the
//! root is not simulated either; its only role, keeping the root's neighbor
//! count at ξ+1 with one permanently informed slot, is played by the root's
//! parent slot. Vertices at the depth cap are recorded as informed but get
//! neither clocks nor children: their contacts could only influence strictly
//! deeper vertices, which are outside every observable.
//!
//! Each replica consumes its own counter-based random stream, so outcomes
//! are a pure function of (seed, replicaIndex) and aggregation order is
//! fixed regardless of how many threads run the replicas.

use crate::error::{Error, Result};
use crate::offspring::{OffspringLaw, Sampler};
use crate::special::CompensatedSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// z for a central 95% normal interval, frozen to full precision.
const WILSON_Z: f64 = 1.959963984540054;

/// Per-replica cap on materialized vertices in the ctmc engine, relative to
/// the event budget; hitting it flags the replica truncated.
const VERTEX_BUDGET_FACTOR: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Ctmc,
    Generation,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Ctmc => "ctmc",
            Engine::Generation => "generation",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub law: OffspringLaw,
    pub engine: Engine,
    /// Realized ranges are capped here; also the lazy materialization depth.
    pub max_depth: u32,
    pub replicas: u64,
    pub seed: u64,
    /// Contact budget per replica; exhausting it flags the outcome truncated.
    pub max_events: u64,
    /// A replica "survives" when the rumor reaches this depth.
    pub survival_depth: u32,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.replicas < 1 || self.replicas > 1_000_000_000 {
            return bad(format!("replicas = {} outside [1, 1e9]", self.replicas));
        }
        if self.max_depth < 1 || self.max_depth > 60_000 {
            return bad(format!("max_depth = {} outside [1, 60000]", self.max_depth));
        }
        if self.survival_depth > self.max_depth {
            return bad(format!(
                "survival_depth = {} exceeds max_depth = {}",
                self.survival_depth, self.max_depth
            ));
        }
        if self.max_events < 1 || self.max_events > 100_000_000 {
            return bad(format!(
                "max_events = {} outside [1, 1e8]",
                self.max_events
            ));
        }
        Ok(())
    }

    fn replica_rng(&self, replica_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica_index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaOutcome {
    /// Realized rumor range, capped at max_depth.
    pub reached_depth: u32,
    pub survived_proxy: bool,
    /// generation_counts[n] = number of vertices at distance n+1 that ever
    /// spread; exactly reached_depth entries, all positive.
    pub generation_counts: Vec<u64>,
    /// Contacts simulated (both engines count individual contacts).
    pub events_processed: u64,
    /// Contact or vertex budget ran out before the dynamics settled.
    pub truncated: bool,
}

impl ReplicaOutcome {
    fn close(
        reached_depth: u32,
        mut generation_counts: Vec<u64>,
        events_processed: u64,
        truncated: bool,
        survival_depth: u32,
    ) -> Self {
        generation_counts.truncate(reached_depth as usize);
        debug_assert!(generation_counts.iter().all(|&c| c > 0));
        ReplicaOutcome {
            reached_depth,
            survived_proxy: reached_depth >= survival_depth,
            generation_counts,
            events_processed,
            truncated,
        }
    }
}

/// Replay one spreader's contact sequence: d+1 uniform targets per contact
/// (one permanently informed parent plus d children), stop on the first
/// informed target. Children are exchangeable, so tracking how many are
/// informed is equivalent to tracking which.
fn draw_spreader_count<R: Rng + ?Sized>(rng: &mut R, d: u64, events: &mut u64) -> u64 {
    let mut informed = 0u64;
    loop {
        *events += 1;
        let target = rng.random_range(0..=d);
        if target < informed + 1 {
            return informed;
        }
        informed += 1;
    }
}

/// Level-by-level replay of the embedded branching recursion.
pub fn simulate_generation(cfg: &SimConfig, replica_index: u64) -> ReplicaOutcome {
    debug_assert!(cfg.validate().is_ok());
    let mut rng = cfg.replica_rng(replica_index);
    let sampler = cfg.law.sampler();
    let mut counts: Vec<u64> = Vec::new();
    let mut current: u64 = 1;
    let mut events: u64 = 0;
    let mut reached: u32 = 0;
    let mut truncated = false;
    'levels: for level in 1..=cfg.max_depth {
        let mut next: u64 = 0;
        for _ in 0..current {
            if events >= cfg.max_events {
                // Abandon the partially resolved level; the outcome reports
                // the last fully settled one.
                truncated = true;
                break 'levels;
            }
            let d = sampler.sample(&mut rng);
            next += draw_spreader_count(&mut rng, d, &mut events);
        }
        if next == 0 {
            break;
        }
        counts.push(next);
        reached = level;
        current = next;
    }
    ReplicaOutcome::close(reached, counts, events, truncated, cfg.survival_depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Ignorant,
    Spreader,
    Stifler,
}

struct Vertex {
    first_child: u32,
    child_count: u32,
    informed_children: u32,
    depth: u16,
    state: State,
}

/// Pending contact of one spreader. Min-ordered by time with the vertex id
/// as a deterministic tiebreak.
#[derive(PartialEq)]
struct Contact {
    time: f64,
    vertex: u32,
}

impl Eq for Contact {}

impl Ord for Contact {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.vertex.cmp(&other.vertex))
    }
}

impl PartialOrd for Contact {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct CtmcRun<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    sampler: Sampler,
    vertices: Vec<Vertex>,
    queue: BinaryHeap<Reverse<Contact>>,
    counts: Vec<u64>,
    reached: u32,
    events: u64,
    truncated: bool,
}

impl CtmcRun<'_> {
    fn vertex_budget(&self) -> u64 {
        self.cfg.max_events.saturating_mul(VERTEX_BUDGET_FACTOR) + 16
    }

    /// Turn an ignorant vertex into a spreader at `time`: record it in the
    /// per-depth counts, materialize its children, start its contact clock.
    fn spawn(&mut self, v: u32, time: f64) {
        let depth = u32::from(self.vertices[v as usize].depth);
        debug_assert_eq!(self.vertices[v as usize].state, State::Ignorant);
        self.vertices[v as usize].state = State::Spreader;
        if depth > 0 {
            self.counts[depth as usize - 1] += 1;
            self.reached = self.reached.max(depth);
        }
        if depth >= self.cfg.max_depth {
            // Depth-capped spreaders are recorded but inert: their contacts
            // could only reach strictly deeper vertices.
            return;
        }
        let d = self.sampler.sample(&mut self.rng);
        if self.vertices.len() as u64 + d >= self.vertex_budget() {
            self.truncated = true;
            return;
        }
        let first = self.vertices.len() as u32;
        for _ in 0..d {
            self.vertices.push(Vertex {
                first_child: 0,
                child_count: 0,
                informed_children: 0,
                depth: (depth + 1) as u16,
                state: State::Ignorant,
            });
        }
        let vertex = &mut self.vertices[v as usize];
        vertex.first_child = first;
        vertex.child_count = d as u32;
        self.schedule(v, time);
    }

    /// Next contact after `now` for a spreader of degree child_count + 1.
    fn schedule(&mut self, v: u32, now: f64) {
        let degree = f64::from(self.vertices[v as usize].child_count) + 1.0;
        let dt: f64 = self.rng.sample(Exp1);
        self.queue.push(Reverse(Contact {
            time: now + dt / degree,
            vertex: v,
        }));
    }

    fn run(mut self) -> ReplicaOutcome {
        self.vertices.push(Vertex {
            first_child: 0,
            child_count: 0,
            informed_children: 0,
            depth: 0,
            state: State::Ignorant,
        });
        self.spawn(0, 0.0);
        while let Some(Reverse(Contact { time, vertex })) = self.queue.pop() {
            if self.truncated {
                break;
            }
            if self.events >= self.cfg.max_events {
                self.truncated = true;
                break;
            }
            self.events += 1;
            // A spreader stifles only at its own contact, so every queued
            // contact belongs to a live spreader: no stale events exist.
            debug_assert_eq!(self.vertices[vertex as usize].state, State::Spreader);
            let Vertex {
                first_child,
                child_count,
                ..
            } = self.vertices[vertex as usize];
            let target = self.rng.random_range(0..=u64::from(child_count));
            if target == 0 {
                // Parent slot: informed by construction (for the root this
                // is the source vertex). The contacting spreader stifles.
                self.vertices[vertex as usize].state = State::Stifler;
                continue;
            }
            let child = first_child + target as u32 - 1;
            match self.vertices[child as usize].state {
                State::Ignorant => {
                    self.vertices[vertex as usize].informed_children += 1;
                    self.spawn(child, time);
                    self.schedule(vertex, time);
                }
                State::Spreader | State::Stifler => {
                    self.vertices[vertex as usize].state = State::Stifler;
                }
            }
        }
        #[cfg(debug_assertions)]
        self.assert_branching_recursion();
        ReplicaOutcome::close(
            self.reached,
            self.counts,
            self.events,
            self.truncated,
            self.cfg.survival_depth,
        )
    }

    /// The per-depth informed counts must equal the sums of the parents'
    /// realized spreader counts: the branching recursion holds sample-wise.
    #[cfg(debug_assertions)]
    fn assert_branching_recursion(&self) {
        let mut from_parents = vec![0u64; self.counts.len()];
        for v in &self.vertices {
            if v.state == State::Ignorant || usize::from(v.depth) >= from_parents.len() {
                continue;
            }
            from_parents[usize::from(v.depth)] += u64::from(v.informed_children);
        }
        for (level, (&counted, &summed)) in
            self.counts.iter().zip(from_parents.iter()).enumerate()
        {
            assert_eq!(
                counted, summed,
                "generation {level}: counted {counted} vs parent-sum {summed}"
            );
        }
    }
}

/// Event-driven continuous-time run: spreader clocks at rate deg, uniform
/// targets, lazy tree growth.
pub fn simulate_ctmc(cfg: &SimConfig, replica_index: u64) -> ReplicaOutcome {
    debug_assert!(cfg.validate().is_ok());
    CtmcRun {
        cfg,
        rng: cfg.replica_rng(replica_index),
        sampler: cfg.law.sampler(),
        vertices: Vec::new(),
        queue: BinaryHeap::new(),
        counts: vec![0; cfg.max_depth as usize],
        reached: 0,
        events: 0,
        truncated: false,
    }
    .run()
}

pub fn simulate_replica(cfg: &SimConfig, replica_index: u64) -> ReplicaOutcome {
    match cfg.engine {
        Engine::Ctmc => simulate_ctmc(cfg, replica_index),
        Engine::Generation => simulate_generation(cfg, replica_index),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimSummary {
    /// Fraction of replicas whose rumor reached survival_depth.
    pub survival_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_range: f64,
    pub se_range: f64,
    pub replicas: u64,
    pub engine: Engine,
    pub truncated_count: u64,
}

#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub summary: SimSummary,
    /// Histogram of reached_depth over replicas; index = depth, length
    /// max_depth + 1.
    pub depth_counts: Vec<u64>,
}

impl EstimateResult {
    /// Empirical tail P(R ≥ depth) for depth = 0..=max_depth.
    pub fn depth_tail(&self) -> Vec<f64> {
        let n: u64 = self.depth_counts.iter().sum();
        let mut tail = vec![0.0; self.depth_counts.len()];
        let mut at_least = 0u64;
        for depth in (0..self.depth_counts.len()).rev() {
            at_least += self.depth_counts[depth];
            tail[depth] = at_least as f64 / n as f64;
        }
        tail
    }
}

/// Wilson 95% score interval for k successes out of n.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    let z = WILSON_Z;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // Degenerate counts hit the exact endpoints; the algebra only gets there
    // up to rounding, so snap them.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Run every replica (in parallel when a rayon pool is available) and reduce
/// in replica order, so the result is identical for any thread count.
pub fn estimate(cfg: &SimConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let per_replica: Vec<(u32, bool)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|idx| {
            let outcome = simulate_replica(cfg, idx);
            (outcome.reached_depth, outcome.truncated)
        })
        .collect();
    let mut depth_counts = vec![0u64; cfg.max_depth as usize + 1];
    let mut truncated_count = 0u64;
    let mut survivors = 0u64;
    let mut sum = CompensatedSum::new();
    for &(depth, truncated) in &per_replica {
        depth_counts[depth as usize] += 1;
        truncated_count += u64::from(truncated);
        survivors += u64::from(depth >= cfg.survival_depth);
        sum.add(f64::from(depth));
    }
    let n = cfg.replicas as f64;
    let mean_range = sum.total() / n;
    let mut var = CompensatedSum::new();
    for &(depth, _) in &per_replica {
        let d = f64::from(depth) - mean_range;
        var.add(d * d);
    }
    let se_range = if cfg.replicas > 1 {
        (var.total() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    let (ci_low, ci_high) = wilson_interval(survivors, cfg.replicas);
    Ok(EstimateResult {
        summary: SimSummary {
            survival_estimate: survivors as f64 / n,
            ci_low,
            ci_high,
            mean_range,
            se_range,
            replicas: cfg.replicas,
            engine: cfg.engine,
            truncated_count,
        },
        depth_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spreader::conditional_pmf;

    fn config(law: OffspringLaw, engine: Engine, max_depth: u32, replicas: u64) -> SimConfig {
        SimConfig {
            law,
            engine,
            max_depth,
            replicas,
            seed: 20260814,
            max_events: 5_000_000,
            survival_depth: max_depth,
        }
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let mut cfg = config(OffspringLaw::fixed(2).unwrap(), Engine::Ctmc, 10, 100);
        assert!(cfg.validate().is_ok());
        cfg.survival_depth = 11;
        assert!(cfg.validate().is_err());
        cfg.survival_depth = 10;
        cfg.replicas = 0;
        assert!(cfg.validate().is_err());
        cfg.replicas = 100;
        cfg.max_depth = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn childless_root_dies_immediately() {
        let cfg = config(OffspringLaw::fixed(0).unwrap(), Engine::Generation, 10, 1);
        for engine in [Engine::Generation, Engine::Ctmc] {
            let cfg = SimConfig { engine, ..cfg.clone() };
            let out = simulate_replica(&cfg, 0);
            assert_eq!(out.reached_depth, 0);
            assert!(!out.survived_proxy);
            assert!(out.generation_counts.is_empty());
            assert!(!out.truncated);
        }
    }

    #[test]
    fn replicas_are_deterministic_and_distinct() {
        for engine in [Engine::Generation, Engine::Ctmc] {
            let cfg = config(OffspringLaw::binomial(3, 0.9).unwrap(), engine, 16, 1);
            let a = simulate_replica(&cfg, 7);
            let b = simulate_replica(&cfg, 7);
            assert_eq!(a, b, "same (seed, index) must reproduce exactly");
            let depths: Vec<u32> = (0..64)
                .map(|idx| simulate_replica(&cfg, idx).reached_depth)
                .collect();
            assert!(
                depths.iter().any(|&d| d != depths[0]),
                "replica streams look identical across indices"
            );
        }
    }

    #[test]
    fn outcome_structure_is_consistent() {
        for engine in [Engine::Generation, Engine::Ctmc] {
            let cfg = config(OffspringLaw::binomial(3, 0.9).unwrap(), engine, 8, 1);
            for idx in 0..200 {
                let out = simulate_replica(&cfg, idx);
                assert_eq!(out.generation_counts.len(), out.reached_depth as usize);
                assert!(out.generation_counts.iter().all(|&c| c > 0));
                assert_eq!(out.survived_proxy, out.reached_depth >= 8);
                assert!(out.events_processed > 0);
            }
        }
    }

    #[test]
    fn line_tree_range_is_geometric() {
        // Fixed(1): every X is Bernoulli(1/2), so P(R >= k) = 2^{-k}.
        let cfg = config(OffspringLaw::fixed(1).unwrap(), Engine::Generation, 30, 40_000);
        let est = estimate(&cfg).unwrap();
        let tail = est.depth_tail();
        for k in [1usize, 2, 3, 4] {
            let expect = 0.5f64.powi(k as i32);
            let se = (expect * (1.0 - expect) / cfg.replicas as f64).sqrt();
            assert!(
                (tail[k] - expect).abs() < 4.0 * se + 1e-9,
                "k={k}: {} vs {expect}",
                tail[k]
            );
        }
    }

    #[test]
    fn engines_agree_on_mean_range() {
        let base = config(OffspringLaw::fixed(2).unwrap(), Engine::Generation, 8, 20_000);
        let gen = estimate(&base).unwrap().summary;
        let ctmc = estimate(&SimConfig {
            engine: Engine::Ctmc,
            ..base
        })
        .unwrap()
        .summary;
        let gap = (gen.mean_range - ctmc.mean_range).abs();
        let se = (gen.se_range.powi(2) + ctmc.se_range.powi(2)).sqrt();
        assert!(gap < 4.0 * se, "means {} vs {}", gen.mean_range, ctmc.mean_range);
    }

    #[test]
    fn ctmc_root_spreader_count_matches_conditional_law() {
        // With max_depth = 1 the root's realized spreader count is exact.
        let cfg = config(OffspringLaw::fixed(3).unwrap(), Engine::Ctmc, 1, 50_000);
        let mut counts = [0u64; 4];
        for idx in 0..cfg.replicas {
            let out = simulate_ctmc(&cfg, idx);
            let x = out.generation_counts.first().copied().unwrap_or(0);
            counts[x as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let expect = conditional_pmf(i as u32, 3) * cfg.replicas as f64;
            let se = (expect * (1.0 - conditional_pmf(i as u32, 3))).sqrt();
            assert!(
                (c as f64 - expect).abs() < 4.5 * se,
                "X={i}: observed {c}, expected {expect}"
            );
        }
    }

    #[test]
    fn event_budget_truncates_and_is_reported() {
        let mut cfg = config(OffspringLaw::fixed(5).unwrap(), Engine::Ctmc, 40, 300);
        cfg.max_events = 60;
        let est = estimate(&cfg).unwrap();
        assert!(est.summary.truncated_count > 0);
        let one = simulate_ctmc(&cfg, 0);
        assert!(one.events_processed <= 60 + 1);
        cfg.engine = Engine::Generation;
        let est = estimate(&cfg).unwrap();
        assert!(est.summary.truncated_count > 0);
    }

    #[test]
    fn wilson_interval_behaves() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.40383).abs() < 1e-4, "{lo}");
        assert!((hi - 0.59617).abs() < 1e-4, "{hi}");
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
        let (lo, _) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        let (_, hi) = wilson_interval(100, 100);
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(1, 100);
        assert!(lo > 0.0 && hi < 0.06);
    }

    #[test]
    fn subcritical_estimate_interval_near_zero() {
        let cfg = config(OffspringLaw::fixed(2).unwrap(), Engine::Generation, 40, 5_000);
        let est = estimate(&cfg).unwrap();
        assert!(est.summary.ci_high < 0.01 || est.summary.ci_low == 0.0);
        assert!(est.summary.mean_range > 0.5);
        assert_eq!(est.summary.truncated_count, 0);
        let tail = est.depth_tail();
        assert_eq!(tail[0], 1.0);
        assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn summary_serializes_with_contract_fields() {
        let cfg = config(OffspringLaw::fixed(2).unwrap(), Engine::Ctmc, 5, 50);
        let est = estimate(&cfg).unwrap();
        let value = serde_json::to_value(est.summary).unwrap();
        let obj = value.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut expected = vec![
            "survivalEstimate",
            "ciLow",
            "ciHigh",
            "meanRange",
            "seRange",
            "replicas",
            "engine",
            "truncatedCount",
        ];
        expected.sort_unstable();
        assert_eq!(keys, expected);
        assert_eq!(obj["engine"], "ctmc");
    }

    #[test]
    fn estimate_identical_across_thread_counts() {
        let cfg = config(OffspringLaw::binomial(3, 0.9).unwrap(), Engine::Generation, 12, 2_000);
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let est = estimate(&cfg).unwrap();
                (serde_json::to_string(&est.summary).unwrap(), est.depth_counts)
            })
        };
        let single = run_with(1);
        let quad = run_with(4);
        assert_eq!(single, quad);
    }
}
