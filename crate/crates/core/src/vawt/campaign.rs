//! The array design-mining loop: seeded CGA-b generations, then surrogate
//! generations run twice from the same state, once on the whole archive and
//! once on the current populations only.

use super::protocol::FileEvaluator;
use super::energy::MockEvaluator;
use super::{VawtGenome, VawtOps};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::evolution::{Coevolution, EaParams, Evaluator, Init, RunTrace, Scheme};
use crate::rng::{label, stream};
use crate::surrogate::{run_surrogate_phase, SurrogateParams, TargetScale, Variant, WindowMode};

/// Evaluators that can be told a run has forked.
pub trait Branching {
    fn branch(&mut self, _name: &str) {}
}

impl Branching for MockEvaluator {}

impl Branching for FileEvaluator {
    fn branch(&mut self, name: &str) {
        self.label = name.to_string();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub n_species: usize,
    pub ea: EaParams,
    pub ops: VawtOps,
    /// Evaluations before the surrogate takes over, initialization included.
    pub warmup: usize,
    pub surrogate_generations: usize,
    pub surrogate: SurrogateParams,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            n_species: 6,
            ea: EaParams {
                pop_size: 20,
                mutation_rate: 0.25,
                crossover_rate: 0.0,
                scheme: Scheme::Best,
                ..EaParams::default()
            },
            ops: VawtOps::default(),
            warmup: 360,
            surrogate_generations: 1,
            surrogate: SurrogateParams {
                lambda_m: 1000,
                epochs: 1000,
                learning_rate: 0.1,
                hidden: 10,
                variant: Variant::Basic,
                window: 20,
                window_mode: WindowMode::Population,
                target_scale: TargetScale::MinMax,
            },
            seed: 1,
        }
    }
}

pub const CAMPAIGN_KEYS: &[&str] = &[
    "s", "pop_size", "tournament", "mutation", "crossover", "sigma_coord", "sigma_twist", "warmup",
    "generations", "lambda_m", "epochs", "beta", "hidden", "seed",
];

impl CampaignConfig {
    /// Evaluations in one generation.
    pub fn generation(&self) -> usize {
        self.n_species * self.ea.pop_size
    }

    pub fn budget(&self) -> usize {
        self.warmup + self.surrogate_generations * self.generation()
    }

    pub fn validate(&self) -> Result<()> {
        self.ea.validate()?;
        self.surrogate.validate()?;
        self.ops.consts.validate()?;
        if self.n_species == 0 {
            return Err(Error::InvalidConfig("at least one species is required".into()));
        }
        if self.warmup < self.generation() {
            return Err(Error::InvalidConfig(format!(
                "warmup {} does not cover the {} initial evaluations",
                self.warmup,
                self.generation()
            )));
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        kv.check_keys(CAMPAIGN_KEYS)?;
        let d = CampaignConfig::default();
        let cfg = CampaignConfig {
            n_species: kv.get_or("s", d.n_species)?,
            ea: EaParams {
                pop_size: kv.get_or("pop_size", d.ea.pop_size)?,
                tournament_size: kv.get_or("tournament", d.ea.tournament_size)?,
                mutation_rate: kv.get_or("mutation", d.ea.mutation_rate)?,
                crossover_rate: kv.get_or("crossover", d.ea.crossover_rate)?,
                scheme: Scheme::Best,
            },
            ops: VawtOps {
                sigma_coord: kv.get_or("sigma_coord", d.ops.sigma_coord)?,
                sigma_twist: kv.get_or("sigma_twist", d.ops.sigma_twist)?,
                ..d.ops.clone()
            },
            warmup: kv.get_or("warmup", d.warmup)?,
            surrogate_generations: kv.get_or("generations", d.surrogate_generations)?,
            surrogate: SurrogateParams {
                lambda_m: kv.get_or("lambda_m", d.surrogate.lambda_m)?,
                epochs: kv.get_or("epochs", d.surrogate.epochs)?,
                learning_rate: kv.get_or("beta", d.surrogate.learning_rate)?,
                hidden: kv.get_or("hidden", d.surrogate.hidden)?,
                ..d.surrogate.clone()
            },
            seed: kv.get_or("seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        kv.set("s", self.n_species);
        kv.set("pop_size", self.ea.pop_size);
        kv.set("tournament", self.ea.tournament_size);
        kv.set("mutation", self.ea.mutation_rate);
        kv.set("crossover", self.ea.crossover_rate);
        kv.set("sigma_coord", self.ops.sigma_coord);
        kv.set("sigma_twist", self.ops.sigma_twist);
        kv.set("warmup", self.warmup);
        kv.set("generations", self.surrogate_generations);
        kv.set("lambda_m", self.surrogate.lambda_m);
        kv.set("epochs", self.surrogate.epochs);
        kv.set("beta", self.surrogate.learning_rate);
        kv.set("hidden", self.surrogate.hidden);
        kv.set("seed", self.seed);
        kv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignBranch {
    pub name: String,
    /// Full trace, warm-up included.
    pub trace: RunTrace,
    pub best_team: Vec<VawtGenome>,
}

impl CampaignBranch {
    /// Best array fitness after each completed generation.
    pub fn generation_best(&self, generation: usize) -> Vec<f64> {
        (1..=self.trace.len() / generation)
            .filter_map(|g| self.trace.best_at(g * generation))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub archive: CampaignBranch,
    pub windowed: CampaignBranch,
}

/// Runs the campaign with `evaluator`; the windowed branch starts from a
/// clone of the warmed-up state.
pub fn run_campaign<E>(cfg: &CampaignConfig, evaluator: E) -> Result<CampaignResult>
where
    E: Evaluator<VawtGenome> + Branching + Clone,
{
    cfg.validate()?;
    let mut init_rng = stream(cfg.seed, &[label("vawt-init")]);
    let mut rng = stream(cfg.seed, &[label("vawt-evolve")]);
    let seeds = vec![VawtGenome::seed(); cfg.n_species];
    let mut warm = Coevolution::initialize(
        cfg.ea.clone(),
        cfg.ops.clone(),
        evaluator,
        cfg.n_species,
        Init::Seeded(seeds),
        cfg.warmup,
        &mut init_rng,
    )?;
    warm.run(&mut rng)?;
    let branch = |name: &str, variant: Variant| -> Result<CampaignBranch> {
        let mut run = warm.clone();
        run.evaluator_mut().branch(name);
        run.set_budget(cfg.budget());
        let params = SurrogateParams {
            variant,
            ..cfg.surrogate.clone()
        };
        let mut rng = stream(cfg.seed, &[label(name)]);
        run_surrogate_phase(&mut run, &params, cfg.warmup, &mut rng)?;
        Ok(CampaignBranch {
            name: name.to_string(),
            best_team: run.best_team().map(<[_]>::to_vec).unwrap_or_default(),
            trace: run.into_trace(),
        })
    };
    Ok(CampaignResult {
        archive: branch("SCGA-b", Variant::Basic)?,
        windowed: branch("SCGA-bw", Variant::Windowed)?,
    })
}
