//! The fuzzing campaign: paired scheduling and seed particles per thread,
//! simulation, fitness accounting, the reset monitor, swarm updates, seed
//! regeneration and mutation, with variant selection, budgets, persistence
//! and reporting.
//!
//! Each iteration every thread contributes one test. Simulation yields the
//! coverage feedback; a thread's scheduler fitness is the size of its
//! cumulative coverage union (cleared when its particle resets), so the
//! stagnation counter ticks exactly on iterations that bring the thread no
//! new points. Threads whose scheduling particle was reset regenerate their
//! seed; everyone else mutates their most recent interesting test, falling
//! back to the seed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bugs::BugId;
use crate::coverage::{self, CoverageMap};
use crate::detector::{compare_traces, Mismatch};
use crate::dut::{golden_execute, simulate};
use crate::error::Error;
use crate::isa::{TestProgram, INSTR_TYPES};
use crate::mutation::{mutate, random_program, OPERATORS};
use crate::pso::Swarm;
use crate::seed::{gen_seed, survival_fitness};

/// Scheduling policy variants, from the static baseline to the full
/// swarm-driven formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Static uniform operator weights and static random seeds.
    Baseline,
    /// Swarm-scheduled operator weights, no resets, static random seeds.
    Pso,
    /// Adds the reset monitor; reset threads get fresh static random seeds.
    PsoReset,
    /// Adds swarm-driven seed generation on top of the resets.
    Psofuzz,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Baseline,
        Variant::Pso,
        Variant::PsoReset,
        Variant::Psofuzz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Pso => "pso",
            Variant::PsoReset => "pso-reset",
            Variant::Psofuzz => "psofuzz",
        }
    }

    fn policy(self) -> Policy {
        match self {
            Variant::Baseline => Policy {
                swarm_updates: false,
                resets: false,
                seed_pso: false,
            },
            Variant::Pso => Policy {
                swarm_updates: true,
                resets: false,
                seed_pso: false,
            },
            Variant::PsoReset => Policy {
                swarm_updates: true,
                resets: true,
                seed_pso: false,
            },
            Variant::Psofuzz => Policy {
                swarm_updates: true,
                resets: true,
                seed_pso: true,
            },
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

/// Which mechanisms a variant enables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Policy {
    swarm_updates: bool,
    resets: bool,
    seed_pso: bool,
}

/// Coverage goal: an absolute point count or a fraction of the registry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TargetCoverage {
    Count(usize),
    Fraction(f64),
}

impl TargetCoverage {
    pub fn resolve(self, total_points: usize) -> usize {
        match self {
            TargetCoverage::Count(n) => n,
            TargetCoverage::Fraction(f) => (f * total_points as f64).ceil() as usize,
        }
    }
}

impl FromStr for TargetCoverage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.contains('.') {
            let f: f64 = s
                .parse()
                .map_err(|e| Error::Config(format!("bad coverage fraction `{s}`: {e}")))?;
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "coverage fraction {f} outside [0, 1]"
                )));
            }
            Ok(TargetCoverage::Fraction(f))
        } else {
            let n: usize = s
                .parse()
                .map_err(|e| Error::Config(format!("bad coverage count `{s}`: {e}")))?;
            Ok(TargetCoverage::Count(n))
        }
    }
}

/// Everything a campaign run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub variant: Variant,
    /// Fuzzer threads, and therefore particles per swarm.
    pub particles: usize,
    /// Instructions per test program.
    pub program_len: usize,
    /// Velocity inertia.
    pub k: f64,
    /// Reset threshold for scheduling particles.
    pub beta_m: u32,
    /// Reset threshold for seed particles.
    pub beta_t: u32,
    pub target_coverage: Option<TargetCoverage>,
    pub max_tests: Option<u64>,
    pub time_limit_secs: Option<u64>,
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    /// Write `checkpoint.bin` into `out_dir` every this many iterations.
    pub checkpoint_every: Option<u64>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Psofuzz,
            particles: 10,
            program_len: 20,
            k: 0.5,
            beta_m: 3,
            beta_t: 3,
            target_coverage: None,
            max_tests: Some(5000),
            time_limit_secs: None,
            rng_seed: 0,
            out_dir: PathBuf::from("swarmfuzz-out"),
            checkpoint_every: None,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.particles == 0 {
            return Err(Error::Config("particles must be at least 1".into()));
        }
        if self.program_len == 0 {
            return Err(Error::Config("seed length must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.k) {
            return Err(Error::Config(format!("k must be in [0, 1], got {}", self.k)));
        }
        if self.beta_m == 0 || self.beta_t == 0 {
            return Err(Error::Config("beta thresholds must be at least 1".into()));
        }
        if self.max_tests.is_none() && self.time_limit_secs.is_none() && self.target_coverage.is_none()
        {
            return Err(Error::Config(
                "no stopping condition: set max tests, a time limit or a coverage target".into(),
            ));
        }
        Ok(())
    }
}

/// One `campaign.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: u64,
    pub tests_total: u64,
    pub coverage: usize,
    pub new_points: usize,
    pub resets_m: usize,
    pub resets_t: usize,
    pub gbest_fitness: f64,
}

/// A scheduling particle's survival span, logged when it resets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalEvent {
    pub iter: u64,
    pub thread: usize,
    pub iterations_survived: u64,
}

/// Final state of a finished (or stopped) campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub iterations: u64,
    pub tests_total: u64,
    pub coverage: CoverageMap,
    pub records: Vec<IterationRecord>,
    pub mismatches: Vec<Mismatch>,
    /// Cumulative test count at which each bug was first detected.
    pub bug_detections: BTreeMap<BugId, u64>,
    /// Per-iteration velocity norms of the scheduling particles.
    pub velocity_norms: Vec<Vec<f64>>,
    pub survival_log: Vec<SurvivalEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ThreadState {
    rng: ChaCha8Rng,
    seed_program: TestProgram,
    current_test: TestProgram,
    last_interesting: Option<TestProgram>,
    /// Union of points this thread covered since its particle's last reset.
    thread_coverage: CoverageMap,
    created_at_iter: u64,
}

/// Serializable whole-campaign state; checkpoints capture exactly this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct CampaignState {
    config: CampaignConfig,
    iter: u64,
    tests_total: u64,
    elapsed_secs: f64,
    swarm_m: Swarm,
    swarm_t: Option<Swarm>,
    rng_m: ChaCha8Rng,
    rng_t: ChaCha8Rng,
    threads: Vec<ThreadState>,
    global_coverage: CoverageMap,
    records: Vec<IterationRecord>,
    mismatches: Vec<Mismatch>,
    bug_detections: BTreeMap<BugId, u64>,
    velocity_norms: Vec<Vec<f64>>,
    survival_log: Vec<SurvivalEvent>,
}

/// A running campaign; step it manually or drive it to completion with
/// [`Campaign::run`].
pub struct Campaign {
    state: CampaignState,
    started: Instant,
}

// Derived rng streams: the scheduling swarm, the seed swarm, then one
// stream per thread.
const STREAM_SWARM_M: u64 = 0;
const STREAM_SWARM_T: u64 = 1;
const STREAM_THREADS: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Campaign {
    pub fn new(config: CampaignConfig) -> Result<Self, Error> {
        config.validate()?;
        let policy = config.variant.policy();
        let n = config.particles;
        let mut rng_m = stream_rng(config.rng_seed, STREAM_SWARM_M);
        let mut rng_t = stream_rng(config.rng_seed, STREAM_SWARM_T);

        let swarm_m = if policy.swarm_updates {
            Swarm::random(n, 1, OPERATORS.len(), &mut rng_m)
        } else {
            Swarm::uniform(n, 1, OPERATORS.len())
        };
        let swarm_t = policy
            .seed_pso
            .then(|| Swarm::random(n, config.program_len, INSTR_TYPES.len(), &mut rng_t));

        let threads = (0..n)
            .map(|i| {
                let mut rng = stream_rng(config.rng_seed, STREAM_THREADS + i as u64);
                let id = format!("i000000-t{i:02}-seed");
                let seed_program = match &swarm_t {
                    Some(st) => gen_seed(&st.particles[i].position, id, &mut rng),
                    None => random_program(config.program_len, id, &mut rng),
                };
                ThreadState {
                    rng,
                    current_test: seed_program.clone(),
                    seed_program,
                    last_interesting: None,
                    thread_coverage: CoverageMap::new(),
                    created_at_iter: 0,
                }
            })
            .collect();

        Ok(Self {
            state: CampaignState {
                config,
                iter: 0,
                tests_total: 0,
                elapsed_secs: 0.0,
                swarm_m,
                swarm_t,
                rng_m,
                rng_t,
                threads,
                global_coverage: CoverageMap::new(),
                records: Vec::new(),
                mismatches: Vec::new(),
                bug_detections: BTreeMap::new(),
                velocity_norms: Vec::new(),
                survival_log: Vec::new(),
            },
            started: Instant::now(),
        })
    }

    pub(crate) fn from_state(state: CampaignState) -> Self {
        Self {
            state,
            started: Instant::now(),
        }
    }

    #[cfg(test)]
    pub(crate) fn state(&self) -> &CampaignState {
        &self.state
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.state.config
    }

    pub fn iterations(&self) -> u64 {
        self.state.iter
    }

    fn elapsed_secs(&self) -> f64 {
        self.state.elapsed_secs + self.started.elapsed().as_secs_f64()
    }

    /// The main-loop guard: true while another iteration may begin.
    pub fn should_continue(&self) -> bool {
        let s = &self.state;
        if let Some(tc) = s.config.target_coverage {
            if s.global_coverage.count() >= tc.resolve(coverage::point_count()) {
                return false;
            }
        }
        if let Some(max_tests) = s.config.max_tests {
            if s.tests_total + s.config.particles as u64 > max_tests {
                return false;
            }
        }
        if let Some(limit) = s.config.time_limit_secs {
            if self.elapsed_secs() >= limit as f64 {
                return false;
            }
        }
        true
    }

    /// Run one iteration. Returns false (without running) once a stopping
    /// condition holds.
    pub fn step(&mut self) -> Result<bool, Error> {
        if !self.should_continue() {
            return Ok(false);
        }
        let policy = self.state.config.variant.policy();
        let s = &mut self.state;
        s.iter += 1;
        let iter = s.iter;
        let n = s.config.particles;

        // Simulate every thread's pending test on the DUT and the golden
        // model. Threads share nothing; any execution order gives the same
        // per-thread results.
        let mut fitness_m: Vec<Option<f64>> = vec![None; n];
        let mut new_points_iter = 0usize;
        for (i, thread) in s.threads.iter_mut().enumerate() {
            let (cov, dut_trace) = simulate(&thread.current_test);
            let golden_trace = golden_execute(&thread.current_test);
            s.tests_total += 1;

            let newly_global = s.global_coverage.union_with(&cov);
            new_points_iter += newly_global;
            if newly_global > 0 {
                thread.last_interesting = Some(thread.current_test.clone());
            }
            thread.thread_coverage.union_with(&cov);
            fitness_m[i] = Some(thread.thread_coverage.count() as f64);

            let found = compare_traces(&dut_trace, &golden_trace)?;
            if !found.is_empty() {
                let mut first_detection = false;
                for m in &found {
                    if m.cascading {
                        continue;
                    }
                    if let Some(bug) = m.matched_bug {
                        if !s.bug_detections.contains_key(&bug) {
                            s.bug_detections.insert(bug, s.tests_total);
                            first_detection = true;
                        }
                    }
                }
                // Keep the full divergence report for tests that first
                // expose a bug; otherwise only the primary mismatch, since
                // everything after it describes tainted state.
                if first_detection {
                    s.mismatches.extend(found);
                } else {
                    s.mismatches.extend(found.into_iter().take(1));
                }
            }
        }

        // Reset monitor over the scheduling swarm.
        let monitored = s.swarm_m.monitor(s.config.beta_m, &fitness_m);
        let reset_m = if policy.resets { monitored } else { Vec::new() };

        // Seed swarm: evaluated only on iterations with scheduler resets.
        let mut resets_t = 0usize;
        if policy.seed_pso && !reset_m.is_empty() {
            let mut fitness_t: Vec<Option<f64>> = vec![None; n];
            for &i in &reset_m {
                let survived =
                    survival_fitness(&reset_m, i, s.threads[i].created_at_iter, iter)?;
                s.survival_log.push(SurvivalEvent {
                    iter,
                    thread: i,
                    iterations_survived: survived.iterations_survived,
                });
                fitness_t[i] = Some(survived.iterations_survived as f64);
            }
            let swarm_t = s.swarm_t.as_mut().expect("seed swarm exists under seed_pso");
            let reset_t = swarm_t.monitor(s.config.beta_t, &fitness_t);
            swarm_t.update(s.config.k, &reset_t, &mut s.rng_t)?;
            resets_t = reset_t.len();
        } else if policy.resets && !reset_m.is_empty() {
            // Without the seed swarm, survival spans are still worth logging.
            for &i in &reset_m {
                let survived =
                    survival_fitness(&reset_m, i, s.threads[i].created_at_iter, iter)?;
                s.survival_log.push(SurvivalEvent {
                    iter,
                    thread: i,
                    iterations_survived: survived.iterations_survived,
                });
            }
        }

        // Velocity/position step for the scheduling swarm.
        if policy.swarm_updates {
            s.swarm_m.update(s.config.k, &reset_m, &mut s.rng_m)?;
        }
        s.velocity_norms.push(
            s.swarm_m
                .particles
                .iter()
                .map(|p| p.velocity_norm())
                .collect(),
        );

        // New tests: fresh seeds for reset threads, mutations for the rest.
        for i in 0..n {
            if reset_m.contains(&i) {
                let thread = &mut s.threads[i];
                thread.thread_coverage = CoverageMap::new();
                thread.created_at_iter = iter;
                thread.last_interesting = None;
                let id = format!("i{iter:06}-t{i:02}-seed");
                let seed = match &s.swarm_t {
                    Some(st) => gen_seed(&st.particles[i].position, id, &mut thread.rng),
                    None => random_program(s.config.program_len, id, &mut thread.rng),
                };
                thread.current_test = seed.clone();
                thread.seed_program = seed;
            } else {
                let weights = s.swarm_m.particles[i].position.row(0).clone();
                let thread = &mut s.threads[i];
                let base = thread
                    .last_interesting
                    .clone()
                    .unwrap_or_else(|| thread.seed_program.clone());
                let id = format!("i{iter:06}-t{i:02}-mut");
                let (test, _record) = mutate(&base, &weights, &mut thread.rng, id);
                thread.current_test = test;
            }
        }

        s.records.push(IterationRecord {
            iter,
            tests_total: s.tests_total,
            coverage: s.global_coverage.count(),
            new_points: new_points_iter,
            resets_m: reset_m.len(),
            resets_t,
            gbest_fitness: s.swarm_m.global_best_fitness.unwrap_or(0.0),
        });
        Ok(true)
    }

    /// Drive the campaign to a stopping condition, honoring the periodic
    /// checkpoint setting, then write all artifacts into the out directory.
    pub fn run(&mut self) -> Result<CampaignResult, Error> {
        loop {
            if !self.step()? {
                break;
            }
            if let Some(every) = self.state.config.checkpoint_every {
                if every > 0 && self.state.iter % every == 0 {
                    self.state.elapsed_secs = self.elapsed_secs();
                    self.started = Instant::now();
                    let path = self.state.config.out_dir.join("checkpoint.bin");
                    std::fs::create_dir_all(&self.state.config.out_dir)?;
                    crate::checkpoint::save(&self.state, &path)?;
                }
            }
        }
        self.write_outputs()?;
        Ok(self.result())
    }

    /// Snapshot the result without writing anything.
    pub fn result(&self) -> CampaignResult {
        let s = &self.state;
        CampaignResult {
            config: s.config.clone(),
            iterations: s.iter,
            tests_total: s.tests_total,
            coverage: s.global_coverage.clone(),
            records: s.records.clone(),
            mismatches: s.mismatches.clone(),
            bug_detections: s.bug_detections.clone(),
            velocity_norms: s.velocity_norms.clone(),
            survival_log: s.survival_log.clone(),
        }
    }

    /// Write `campaign.csv`, `bugs.csv` and `mismatches.jsonl`.
    pub fn write_outputs(&self) -> Result<(), Error> {
        let dir = &self.state.config.out_dir;
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("campaign.csv"), campaign_csv(&self.state.records))?;
        std::fs::write(dir.join("bugs.csv"), bugs_csv(&self.state.bug_detections))?;
        std::fs::write(
            dir.join("mismatches.jsonl"),
            mismatches_jsonl(&self.state.mismatches)?,
        )?;
        Ok(())
    }

    /// Persist the full campaign state.
    pub fn write_checkpoint(&mut self, path: &Path) -> Result<(), Error> {
        self.state.elapsed_secs = self.elapsed_secs();
        self.started = Instant::now();
        crate::checkpoint::save(&self.state, path)
    }

    /// Resume a campaign from a checkpoint file.
    pub fn from_checkpoint(path: &Path) -> Result<Self, Error> {
        Ok(Self::from_state(crate::checkpoint::load(path)?))
    }
}

/// Render the per-iteration table.
pub fn campaign_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iter,tests_total,coverage,new_points,resets_m,resets_t,gbest_fitness\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iter, r.tests_total, r.coverage, r.new_points, r.resets_m, r.resets_t, r.gbest_fitness
        ));
    }
    out
}

/// Render the per-bug first-detection table; undetected bugs print `N.D.`.
pub fn bugs_csv(detections: &BTreeMap<BugId, u64>) -> String {
    let mut out = String::from("bug,first_detected_test\n");
    for bug in crate::bugs::BUGS {
        match detections.get(&bug) {
            Some(t) => out.push_str(&format!("{bug},{t}\n")),
            None => out.push_str(&format!("{bug},N.D.\n")),
        }
    }
    out
}

/// One JSON object per mismatch.
pub fn mismatches_jsonl(mismatches: &[Mismatch]) -> Result<String, Error> {
    let mut out = String::new();
    for m in mismatches {
        out.push_str(&serde_json::to_string(m)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config(variant: Variant, max_tests: u64, seed: u64) -> CampaignConfig {
        CampaignConfig {
            variant,
            max_tests: Some(max_tests),
            rng_seed: seed,
            out_dir: std::env::temp_dir().join(format!("swarmfuzz-test-{seed}-{variant}")),
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn zero_coverage_target_stops_before_any_iteration() {
        let cfg = CampaignConfig {
            target_coverage: Some(TargetCoverage::Count(0)),
            ..quick_config(Variant::Psofuzz, 1000, 1)
        };
        let mut campaign = Campaign::new(cfg).unwrap();
        assert!(!campaign.step().unwrap());
        assert_eq!(campaign.iterations(), 0);
    }

    #[test]
    fn coverage_is_monotone_and_budget_is_exact() {
        let mut campaign = Campaign::new(quick_config(Variant::Psofuzz, 200, 2)).unwrap();
        while campaign.step().unwrap() {}
        let result = campaign.result();
        assert_eq!(result.tests_total, 200);
        assert_eq!(result.iterations, 20);
        let covs: Vec<usize> = result.records.iter().map(|r| r.coverage).collect();
        assert!(covs.windows(2).all(|w| w[0] <= w[1]), "{covs:?}");
        let tests: Vec<u64> = result.records.iter().map(|r| r.tests_total).collect();
        assert!(tests.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn identical_configs_are_bit_identical() {
        let run = |seed| {
            let mut c = Campaign::new(quick_config(Variant::Psofuzz, 300, seed)).unwrap();
            while c.step().unwrap() {}
            c.result()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(campaign_csv(&a.records), campaign_csv(&b.records));
        assert_eq!(a.bug_detections, b.bug_detections);
        assert_eq!(a.mismatches, b.mismatches);
        assert_ne!(run(8).records, a.records, "different seeds diverge");
    }

    #[test]
    fn baseline_never_moves_positions_or_resets() {
        let mut campaign = Campaign::new(quick_config(Variant::Baseline, 300, 3)).unwrap();
        while campaign.step().unwrap() {}
        let result = campaign.result();
        assert!(result.records.iter().all(|r| r.resets_m == 0 && r.resets_t == 0));
        assert!(result
            .velocity_norms
            .iter()
            .all(|norms| norms.iter().all(|&v| v == 0.0)));
        let uniform = 1.0 / OPERATORS.len() as f64;
        for p in &campaign.state.swarm_m.particles {
            for &w in p.position.row(0).weights() {
                assert_eq!(w, uniform);
            }
        }
    }

    #[test]
    fn pso_variant_never_populates_the_reset_set() {
        let mut campaign = Campaign::new(quick_config(Variant::Pso, 600, 4)).unwrap();
        while campaign.step().unwrap() {}
        let result = campaign.result();
        assert!(result.records.iter().all(|r| r.resets_m == 0));
        assert!(result.survival_log.is_empty());
    }

    #[test]
    fn reset_variants_regenerate_seeds_and_log_survival() {
        let mut campaign = Campaign::new(quick_config(Variant::PsoReset, 1500, 5)).unwrap();
        while campaign.step().unwrap() {}
        let result = campaign.result();
        let resets: usize = result.records.iter().map(|r| r.resets_m).sum();
        assert!(resets > 0, "expected at least one reset in 150 iterations");
        assert_eq!(result.survival_log.len(), resets);
        // Survival spans and reset iterations line up.
        for ev in &result.survival_log {
            assert!(ev.iterations_survived >= 1);
            assert!(ev.iter <= result.iterations);
        }
        // Seed-swarm machinery stays off.
        assert!(result.records.iter().all(|r| r.resets_t == 0));
    }

    #[test]
    fn one_test_per_thread_per_iteration() {
        let mut campaign = Campaign::new(quick_config(Variant::Psofuzz, 100, 6)).unwrap();
        let mut prev = 0;
        while campaign.step().unwrap() {
            let r = campaign.result();
            assert_eq!(r.tests_total - prev, 10);
            prev = r.tests_total;
        }
    }

    #[test]
    fn seed_swarm_updates_only_on_reset_iterations() {
        let mut campaign = Campaign::new(quick_config(Variant::Psofuzz, 1500, 9)).unwrap();
        let mut positions = campaign
            .state
            .swarm_t
            .as_ref()
            .unwrap()
            .particles
            .iter()
            .map(|p| p.position.clone())
            .collect::<Vec<_>>();
        while campaign.step().unwrap() {
            let r = campaign.state.records.last().unwrap();
            let now: Vec<_> = campaign
                .state
                .swarm_t
                .as_ref()
                .unwrap()
                .particles
                .iter()
                .map(|p| p.position.clone())
                .collect();
            if r.resets_m == 0 {
                assert_eq!(now, positions, "iter {}: seed swarm moved without resets", r.iter);
            }
            positions = now;
        }
    }

    #[test]
    fn campaign_csv_format_is_stable() {
        let records = vec![IterationRecord {
            iter: 1,
            tests_total: 10,
            coverage: 57,
            new_points: 57,
            resets_m: 0,
            resets_t: 0,
            gbest_fitness: 42.0,
        }];
        assert_eq!(
            campaign_csv(&records),
            "iter,tests_total,coverage,new_points,resets_m,resets_t,gbest_fitness\n1,10,57,57,0,0,42\n"
        );
    }

    #[test]
    fn bugs_csv_marks_undetected_bugs() {
        let mut detections = BTreeMap::new();
        detections.insert(BugId::B2, 137u64);
        let csv = bugs_csv(&detections);
        assert!(csv.contains("B2,137\n"));
        assert!(csv.contains("B1,N.D.\n"));
    }

    #[test]
    fn unknown_variant_string_is_a_config_error() {
        assert!(matches!(
            "bogus".parse::<Variant>(),
            Err(Error::Config(_))
        ));
        assert_eq!("pso-reset".parse::<Variant>().unwrap(), Variant::PsoReset);
    }

    #[test]
    fn config_validation_catches_nonsense() {
        let bad = CampaignConfig {
            particles: 0,
            ..CampaignConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CampaignConfig {
            k: 1.5,
            ..CampaignConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CampaignConfig {
            max_tests: None,
            ..CampaignConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn target_coverage_parses_counts_and_fractions() {
        assert_eq!(
            "150".parse::<TargetCoverage>().unwrap(),
            TargetCoverage::Count(150)
        );
        assert_eq!(
            "0.8".parse::<TargetCoverage>().unwrap(),
            TargetCoverage::Fraction(0.8)
        );
        assert!("1.7".parse::<TargetCoverage>().is_err());
        assert_eq!(TargetCoverage::Fraction(0.5).resolve(206), 103);
    }
}
