//! (mu, lambda) evolution strategy for the placement problem.
//!
//! Each generation draws mu parents uniformly (with replacement) from the
//! current population, and each parent emits lambda Gaussian offspring.
//! Offspring must be feasible: out-of-box coordinates are projected onto
//! the box (or redrawn, see [`BoundaryPolicy`]) and constraint violators are
//! redrawn up to `resample_cap` times before falling back to a copy of the
//! parent. The best mu of the mu x lambda pool become the next population;
//! parents never survive on their own. The step size, a fraction of each
//! coordinate's bound width, follows the 1/5 success rule.
//!
//! Every random draw comes from a stream keyed by (generation, parent,
//! offspring), so evaluation order never changes the result.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::PlacementSetting;
use crate::error::{Error, Result};
use crate::nlp::{Bounds, Evaluation, Feasibility, NlpProblem};
use crate::rng::{self, StreamRng};

/// What to do with an offspring coordinate that leaves the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Clamp onto the nearest bound, then check the predictor constraints.
    #[default]
    Project,
    /// Treat it like any other infeasible draw and redraw.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsConfig {
    pub mu: usize,
    pub lambda_offspring: usize,
    /// Initial step as a fraction of each bound width.
    pub sigma0: f64,
    pub generations: usize,
    pub success_factor: f64,
    pub resample_cap: usize,
    pub seed: u64,
    pub boundary: BoundaryPolicy,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            mu: 5,
            lambda_offspring: 10,
            sigma0: 0.5,
            generations: 10,
            success_factor: 0.85,
            resample_cap: 100,
            seed: 42,
            boundary: BoundaryPolicy::Project,
        }
    }
}

const INDEX_LIMIT: usize = 1 << 20;
const SIGMA_CEILING: f64 = 1e3;

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 || self.lambda_offspring == 0 {
            return Err(Error::Config("es mu and lambda_offspring must be >= 1"));
        }
        if self.mu >= INDEX_LIMIT
            || self.lambda_offspring >= INDEX_LIMIT
            || self.generations >= INDEX_LIMIT
        {
            return Err(Error::Config(
                "es mu, lambda_offspring and generations must be < 2^20",
            ));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::Config("es sigma0 must be positive and finite"));
        }
        if !(self.success_factor > 0.0 && self.success_factor < 1.0) {
            return Err(Error::Config("es success_factor must lie in (0, 1)"));
        }
        if self.resample_cap == 0 {
            return Err(Error::Config("es resample_cap must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub chi: PlacementSetting,
    pub objective_value: f64,
    pub feasible: bool,
    /// 0 for the initial population.
    pub generation_found: usize,
    pub feasibility: Feasibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best objective seen so far (non-increasing).
    pub best: f64,
    /// Best objective in this generation's selected population.
    pub population_best: f64,
    /// Mean objective over the offspring pool.
    pub mean: f64,
    /// Step fraction used for this generation's mutations.
    pub sigma_frac: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsOutcome {
    /// Best solution seen in any generation.
    pub best: Solution,
    /// Best member of the last population.
    pub final_population_best: Solution,
    pub trace: Vec<GenerationStats>,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Member {
    eval: Evaluation,
    objective: f64,
    generation: usize,
}

impl Member {
    fn solution(&self) -> Solution {
        Solution {
            chi: self.eval.chi,
            objective_value: self.objective,
            feasible: self.eval.feasibility.feasible,
            generation_found: self.generation,
            feasibility: self.eval.feasibility,
        }
    }
}

#[derive(Clone, Copy)]
enum Draw {
    Init = 0,
    Select = 1,
    Mutate = 2,
}

fn draw_stream(seed: u64, draw: Draw, generation: usize, parent: usize, child: usize) -> StreamRng {
    let id = rng::ES_STREAM_BASE
        + ((draw as u64) << 60)
        + ((generation as u64) << 40)
        + ((parent as u64) << 20)
        + child as u64;
    rng::stream(seed, id)
}

/// `parent_d + N(0, sigma_frac * (U_d - L_d))` independently per
/// coordinate. The result is not checked against anything.
pub fn mutate<R: Rng + ?Sized>(
    parent: &PlacementSetting,
    sigma_frac: f64,
    bounds: &Bounds,
    rng: &mut R,
) -> PlacementSetting {
    let p = parent.to_array();
    let widths = bounds.widths();
    PlacementSetting::from_array(core::array::from_fn(|d| {
        let z: f64 = StandardNormal.sample(rng);
        p[d] + sigma_frac * widths[d] * z
    }))
}

fn uniform_in<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> PlacementSetting {
    let widths = bounds.widths();
    PlacementSetting::from_array(core::array::from_fn(|d| {
        bounds.lower[d] + widths[d] * rng.random::<f64>()
    }))
}

fn feasible_member(eval: Evaluation, generation: usize) -> Option<Member> {
    match (eval.feasibility.feasible, eval.objective) {
        (true, Some(objective)) => Some(Member {
            eval,
            objective,
            generation,
        }),
        _ => None,
    }
}

/// 1/5 success rule: widen above, narrow below, keep at exactly 1/5.
fn adapt_sigma(sigma: f64, successes: usize, trials: usize, factor: f64) -> f64 {
    let next = match (5 * successes).cmp(&trials) {
        core::cmp::Ordering::Greater => sigma / factor,
        core::cmp::Ordering::Less => sigma * factor,
        core::cmp::Ordering::Equal => sigma,
    };
    next.clamp(f64::MIN_POSITIVE, SIGMA_CEILING)
}

/// Runs the strategy and returns the best feasible placement found with a
/// per-generation trace.
///
/// Fails with [`Error::Infeasible`] when some initial individual cannot be
/// drawn feasibly within `resample_cap` uniform draws over the box.
pub fn optimize(problem: &NlpProblem<'_>, config: &EsConfig) -> Result<EsOutcome> {
    config.validate()?;
    problem.bounds.validate()?;
    let bounds = &problem.bounds;
    let mut evaluations = 0usize;

    let mut population: Vec<Member> = Vec::with_capacity(config.mu);
    for k in 0..config.mu {
        let mut rng = draw_stream(config.seed, Draw::Init, 0, k, 0);
        let mut closest: Option<Feasibility> = None;
        let mut found = None;
        for _ in 0..config.resample_cap {
            let eval = problem.evaluate(&uniform_in(bounds, &mut rng))?;
            evaluations += 1;
            if let Some(m) = feasible_member(eval, 0) {
                found = Some(m);
                break;
            }
            if closest.is_none_or(|c| eval.feasibility.worst().1 > c.worst().1) {
                closest = Some(eval.feasibility);
            }
        }
        match found {
            Some(m) => population.push(m),
            None => {
                let (constraint, worst_slack) = closest.expect("at least one draw").worst();
                return Err(Error::Infeasible {
                    attempts: config.resample_cap,
                    constraint: constraint.name(),
                    worst_slack,
                });
            }
        }
    }

    let by_objective = |a: &Member, b: &Member| a.objective.total_cmp(&b.objective);
    population.sort_by(by_objective);
    let mut best = population[0];
    let mut sigma = config.sigma0;
    let mut trace = Vec::with_capacity(config.generations);
    let pool_size = config.mu * config.lambda_offspring;

    for g in 1..=config.generations {
        let mut pool: Vec<Member> = Vec::with_capacity(pool_size);
        let mut successes = 0;
        for m in 0..config.mu {
            let pick = draw_stream(config.seed, Draw::Select, g, m, 0).random_range(0..config.mu);
            let parent = population[pick];
            for o in 0..config.lambda_offspring {
                let mut rng = draw_stream(config.seed, Draw::Mutate, g, m, o);
                let mut child = None;
                for _ in 0..config.resample_cap {
                    let mut chi = mutate(&parent.eval.chi, sigma, bounds, &mut rng);
                    if config.boundary == BoundaryPolicy::Project {
                        chi = bounds.project(&chi);
                    }
                    let eval = problem.evaluate(&chi)?;
                    evaluations += 1;
                    if let Some(c) = feasible_member(eval, g) {
                        child = Some(c);
                        break;
                    }
                }
                let child = match child {
                    Some(c) => {
                        if c.objective < parent.objective {
                            successes += 1;
                        }
                        c
                    }
                    None => Member {
                        generation: g,
                        ..parent
                    },
                };
                pool.push(child);
            }
        }

        let mean = pool.iter().map(|c| c.objective).sum::<f64>() / pool.len() as f64;
        pool.sort_by(by_objective);
        pool.truncate(config.mu);
        population = pool;
        if population[0].objective < best.objective {
            best = population[0];
        }
        let success_rate = successes as f64 / pool_size as f64;
        trace.push(GenerationStats {
            generation: g,
            best: best.objective,
            population_best: population[0].objective,
            mean,
            sigma_frac: sigma,
            success_rate,
        });
        sigma = adapt_sigma(sigma, successes, pool_size, config.success_factor);
    }

    Ok(EsOutcome {
        best: best.solution(),
        final_population_best: population[0].solution(),
        trace,
        evaluations,
    })
}
