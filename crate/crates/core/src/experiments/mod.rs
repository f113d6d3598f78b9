//! Batched comparative NKCS suites.
//!
//! A suite runs every configured algorithm on every `(K, C)` cell of a grid,
//! `instances` random landscapes per cell and `runs` runs per landscape.
//! Landscapes and initial populations are shared between algorithms, so the
//! samples compared for one cell are paired. Results are reduced in the fixed
//! order (algorithm, cell, instance, run) regardless of how jobs are
//! scheduled.

pub mod stats;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::evolution::{run_cga, EaParams, RunTrace, Scheme};
use crate::nkcs::{NkcsConfig, NkcsModel, Topology};
use crate::rng;
use crate::surrogate::{run_scga, SurrogateParams, Variant, WindowMode};

pub use stats::{mann_whitney_u, MannWhitney};

/// Significance level for the comparison tables.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Cga(Scheme),
    Scga(Variant),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Cga(s) => write!(f, "CGA-{s}"),
            Algorithm::Scga(v) => write!(f, "SCGA-{v}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("SCGA-") {
            return rest.parse().map(Algorithm::Scga);
        }
        if let Some(rest) = s.strip_prefix("CGA-") {
            return rest.parse().map(Algorithm::Cga);
        }
        Err(Error::Unknown {
            kind: "algorithm",
            name: s.to_string(),
        })
    }
}

/// Everything needed to run one algorithm on one landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub ea: EaParams,
    pub surrogate: SurrogateParams,
    pub budget: usize,
    /// Evaluations spent before the surrogate takes over.
    pub warmup: usize,
}

impl RunSpec {
    pub fn execute(&self, model: &NkcsModel, init_rng: &mut rng::Rng, rng: &mut rng::Rng) -> Result<RunTrace> {
        match self.algorithm {
            Algorithm::Cga(scheme) => {
                let ea = EaParams { scheme, ..self.ea.clone() };
                run_cga(model, ea, self.budget, init_rng, rng)
            }
            Algorithm::Scga(variant) => {
                let ea = EaParams { scheme: Scheme::Best, ..self.ea.clone() };
                let params = SurrogateParams { variant, ..self.surrogate.clone() };
                run_scga(model, ea, &params, self.budget, self.warmup, init_rng, rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub algorithms: Vec<Algorithm>,
    pub k_values: Vec<usize>,
    pub c_values: Vec<usize>,
    pub instances: usize,
    pub runs: usize,
    pub budget: usize,
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
    pub n_genes: usize,
    pub n_species: usize,
    pub topology: Topology,
    pub ea: EaParams,
    pub surrogate: SurrogateParams,
    /// Warm-up for surrogate variants; `None` means `S * P`.
    pub warmup: Option<usize>,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            algorithms: Scheme::ALL.iter().map(|&s| Algorithm::Cga(s)).collect(),
            k_values: vec![2, 6],
            c_values: vec![2, 8],
            instances: 10,
            runs: 10,
            budget: 3600,
            checkpoints: vec![480, 3600],
            master_seed: 1,
            n_genes: 20,
            n_species: 6,
            topology: Topology::Chain,
            ea: EaParams::default(),
            surrogate: SurrogateParams::nkcs(Variant::Basic, 6),
            warmup: None,
            workers: None,
        }
    }
}

pub const SUITE_KEYS: &[&str] = &[
    "algorithms", "k", "c", "instances", "runs", "budget", "checkpoints", "seed", "n", "s",
    "topology", "pop_size", "tournament", "mutation", "crossover", "lambda_m", "epochs", "beta",
    "hidden", "window", "window_mode", "warmup", "workers",
];

impl SuiteConfig {
    pub fn experiments_per_cell(&self) -> usize {
        self.instances * self.runs
    }

    /// `(K, C)` cells in grid order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.k_values
            .iter()
            .flat_map(|&k| self.c_values.iter().map(move |&c| (k, c)))
            .collect()
    }

    pub fn warmup(&self) -> usize {
        self.warmup.unwrap_or(self.n_species * self.ea.pop_size)
    }

    pub fn run_spec(&self, algorithm: Algorithm) -> RunSpec {
        RunSpec {
            algorithm,
            ea: self.ea.clone(),
            surrogate: self.surrogate.clone(),
            budget: self.budget,
            warmup: self.warmup(),
        }
    }

    pub fn nkcs_config(&self, k: usize, c: usize, instance: usize) -> NkcsConfig {
        NkcsConfig {
            n_genes: self.n_genes,
            k_intra: k,
            c_inter: c,
            n_species: self.n_species,
            topology: self.topology.clone(),
            seed: rng::derive_seed(self.master_seed, &[rng::label("landscape"), k as u64, c as u64, instance as u64]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.algorithms.is_empty() {
            return bad("no algorithms".into());
        }
        if self.instances == 0 || self.runs == 0 {
            return bad("instances and runs must be positive".into());
        }
        if let Some(&cp) = self.checkpoints.iter().find(|&&cp| cp == 0 || cp > self.budget) {
            return bad(format!("checkpoint {cp} outside 1..={}", self.budget));
        }
        self.ea.validate()?;
        self.surrogate.validate()?;
        for (k, c) in self.cells() {
            self.nkcs_config(k, c, 0).validate()?;
        }
        Ok(())
    }

    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        cfg.check_keys(SUITE_KEYS)?;
        let d = SuiteConfig::default();
        let algorithms = match cfg.get_str("algorithms") {
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<_>>>()?,
            None => d.algorithms,
        };
        let n_species = cfg.get_or("s", d.n_species)?;
        let ea = EaParams {
            pop_size: cfg.get_or("pop_size", d.ea.pop_size)?,
            tournament_size: cfg.get_or("tournament", d.ea.tournament_size)?,
            mutation_rate: cfg.get_or("mutation", d.ea.mutation_rate)?,
            crossover_rate: cfg.get_or("crossover", d.ea.crossover_rate)?,
            scheme: Scheme::Best,
        };
        let mut surrogate = SurrogateParams::nkcs(Variant::Basic, n_species);
        surrogate.lambda_m = cfg.get_or("lambda_m", surrogate.lambda_m)?;
        surrogate.epochs = cfg.get_or("epochs", surrogate.epochs)?;
        surrogate.learning_rate = cfg.get_or("beta", surrogate.learning_rate)?;
        surrogate.hidden = cfg.get_or("hidden", surrogate.hidden)?;
        surrogate.window = cfg.get_or("window", ea.pop_size)?;
        surrogate.window_mode = cfg.get_or("window_mode", WindowMode::Archive)?;
        let config = SuiteConfig {
            algorithms,
            k_values: cfg.get_list("k")?.unwrap_or(d.k_values),
            c_values: cfg.get_list("c")?.unwrap_or(d.c_values),
            instances: cfg.get_or("instances", d.instances)?,
            runs: cfg.get_or("runs", d.runs)?,
            budget: cfg.get_or("budget", d.budget)?,
            checkpoints: cfg.get_list("checkpoints")?.unwrap_or(d.checkpoints),
            master_seed: cfg.get_or("seed", d.master_seed)?,
            n_genes: cfg.get_or("n", d.n_genes)?,
            n_species,
            topology: cfg.get_or("topology", Topology::Chain)?,
            ea,
            surrogate,
            warmup: cfg.get("warmup")?,
            workers: cfg.get("workers")?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Fully resolved settings; loading this back reproduces the suite.
    /// Worker count is omitted since it cannot change results.
    pub fn to_kv(&self) -> KvConfig {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut cfg = KvConfig::new();
        cfg.set(
            "algorithms",
            self.algorithms.iter().map(Algorithm::to_string).collect::<Vec<_>>().join(","),
        );
        cfg.set("k", join(&self.k_values));
        cfg.set("c", join(&self.c_values));
        cfg.set("instances", self.instances);
        cfg.set("runs", self.runs);
        cfg.set("budget", self.budget);
        cfg.set("checkpoints", join(&self.checkpoints));
        cfg.set("seed", self.master_seed);
        cfg.set("n", self.n_genes);
        cfg.set("s", self.n_species);
        cfg.set("topology", &self.topology);
        cfg.set("pop_size", self.ea.pop_size);
        cfg.set("tournament", self.ea.tournament_size);
        cfg.set("mutation", self.ea.mutation_rate);
        cfg.set("crossover", self.ea.crossover_rate);
        cfg.set("lambda_m", self.surrogate.lambda_m);
        cfg.set("epochs", self.surrogate.epochs);
        cfg.set("beta", self.surrogate.learning_rate);
        cfg.set("hidden", self.surrogate.hidden);
        cfg.set("window", self.surrogate.window);
        cfg.set("window_mode", self.surrogate.window_mode);
        cfg.set("warmup", self.warmup());
        cfg
    }
}

/// Best-so-far curves of every experiment of one algorithm on one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub algorithm: Algorithm,
    pub k: usize,
    pub c: usize,
    /// `curves[experiment][ordinal - 1]`, experiments ordered by
    /// `(instance, run)`.
    pub curves: Vec<Vec<f64>>,
}

impl CellResult {
    /// Best-so-far of every experiment after `ordinal` evaluations.
    pub fn at(&self, ordinal: usize) -> Vec<f64> {
        self.curves
            .iter()
            .map(|c| c[ordinal.min(c.len()) - 1])
            .collect()
    }

    /// Mean and sample standard deviation per ordinal.
    pub fn mean_curve(&self) -> Vec<(f64, f64)> {
        let len = self.curves.iter().map(Vec::len).max().unwrap_or(0);
        (1..=len).map(|o| mean_sd(&self.at(o))).collect()
    }
}

/// Mean and sample (n - 1) standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub config: SuiteConfig,
    /// Ordered by algorithm, then cell.
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub c: usize,
    pub checkpoint: usize,
    pub mean: f64,
    pub sd: f64,
    /// Test against the baseline; `None` for the baseline itself.
    pub test: Option<MannWhitney>,
}

impl SignificanceRow {
    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.significant(ALPHA))
    }
}

impl SuiteResult {
    pub fn cell(&self, algorithm: Algorithm, k: usize, c: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|r| r.algorithm == algorithm && r.k == k && r.c == c)
    }

    /// Checkpoint statistics for every algorithm, each compared against
    /// `baseline` on the same cell and checkpoint.
    pub fn significance_table(&self, baseline: Algorithm) -> Result<Vec<SignificanceRow>> {
        if !self.config.algorithms.contains(&baseline) {
            return Err(Error::Unknown {
                kind: "baseline algorithm",
                name: baseline.to_string(),
            });
        }
        let mut rows = Vec::new();
        for (k, c) in self.config.cells() {
            let base = self.cell(baseline, k, c).expect("every cell was run");
            for &checkpoint in &self.config.checkpoints {
                let base_values = base.at(checkpoint);
                for &algorithm in &self.config.algorithms {
                    let values = self.cell(algorithm, k, c).expect("every cell was run").at(checkpoint);
                    let (mean, sd) = mean_sd(&values);
                    let test = (algorithm != baseline).then(|| mann_whitney_u(&values, &base_values));
                    rows.push(SignificanceRow { algorithm, k, c, checkpoint, mean, sd, test });
                }
            }
        }
        Ok(rows)
    }

    /// One CSV per (algorithm, cell): `eval_ordinal,mean_best,sd_best`,
    /// named `curve_<algorithm>_K<k>C<c>.csv`.
    pub fn export_curves(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for cell in &self.cells {
            let path = dir.join(format!("curve_{}_K{}C{}.csv", cell.algorithm, cell.k, cell.c));
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
            w.write_record(["eval_ordinal", "mean_best", "sd_best"])?;
            for (i, (mean, sd)) in cell.mean_curve().into_iter().enumerate() {
                w.write_record([(i + 1).to_string(), format!("{mean:.17}"), format!("{sd:.17}")])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// CSV: `algorithm,K,C,checkpoint,mean,sd,U,p,significant`. The baseline's
/// own rows leave `U` and `p` empty.
pub fn write_significance_csv<W: Write>(rows: &[SignificanceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "K", "C", "checkpoint", "mean", "sd", "U", "p", "significant"])?;
    for r in rows {
        let (u, p) = match r.test {
            Some(t) => (format!("{}", t.u), format!("{:.6e}", t.p)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.algorithm.to_string(),
            r.k.to_string(),
            r.c.to_string(),
            r.checkpoint.to_string(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.sd),
            u,
            p,
            r.significant().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<significance>", e))?;
    Ok(())
}

/// Seeds of one experiment: `(initial populations, evolution)`. The initial
/// stream does not depend on the algorithm.
pub fn experiment_seeds(master: u64, algorithm: Algorithm, k: usize, c: usize, instance: usize, run: usize) -> (u64, u64) {
    let cell = [k as u64, c as u64, instance as u64, run as u64];
    let init = rng::derive_seed(master, &[&[rng::label("init")][..], &cell].concat());
    let evolve = rng::derive_seed(
        master,
        &[&[rng::label("evolve"), rng::label(&algorithm.to_string())][..], &cell].concat(),
    );
    (init, evolve)
}

/// One experiment of the suite on an already generated landscape.
pub fn run_experiment(
    config: &SuiteConfig,
    model: &NkcsModel,
    algorithm: Algorithm,
    instance: usize,
    run: usize,
) -> Result<RunTrace> {
    let c = model.config();
    let (init_seed, evolve_seed) = experiment_seeds(config.master_seed, algorithm, c.k_intra, c.c_inter, instance, run);
    let mut init_rng = rng::stream(init_seed, &[]);
    let mut evo_rng = rng::stream(evolve_seed, &[]);
    config.run_spec(algorithm).execute(model, &mut init_rng, &mut evo_rng)
}

/// Runs every experiment of the suite. Jobs run on `config.workers` threads.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteResult> {
    config.validate()?;
    let cells = config.cells();
    let models: Vec<Vec<NkcsModel>> = cells
        .iter()
        .map(|&(k, c)| {
            (0..config.instances)
                .map(|i| NkcsModel::generate(config.nkcs_config(k, c, i)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (a, _) in config.algorithms.iter().enumerate() {
        for (ci, _) in cells.iter().enumerate() {
            for instance in 0..config.instances {
                for run in 0..config.runs {
                    jobs.push((a, ci, instance, run));
                }
            }
        }
    }

    let execute = |&(a, ci, instance, run): &(usize, usize, usize, usize)| -> Result<Vec<f64>> {
        let trace = run_experiment(config, &models[ci][instance], config.algorithms[a], instance, run)?;
        Ok(trace.records.iter().map(|r| r.best_so_far).collect())
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    // par_iter().collect() keeps job order
    let curves: Vec<Vec<f64>> = pool.install(|| jobs.par_iter().map(execute).collect::<Result<_>>())?;

    let per_cell = config.experiments_per_cell();
    let mut chunks = curves.into_iter();
    let mut results = Vec::new();
    for &algorithm in &config.algorithms {
        for &(k, c) in &cells {
            results.push(CellResult {
                algorithm,
                k,
                c,
                curves: chunks.by_ref().take(per_cell).collect(),
            });
        }
    }
    Ok(SuiteResult {
        config: config.clone(),
        cells: results,
    })
}
