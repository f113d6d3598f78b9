//! Command-line front end.
//!
//! Every command that produces results writes `manifest.cfg` into its output
//! directory. The manifest is a valid `--config` file for the same command,
//! so rerunning with it reproduces the outputs byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::evolution::RunTrace;
use crate::experiments::stats::mann_whitney_u;
use crate::experiments::{
    run_experiment, run_suite, write_significance_csv, Algorithm, SuiteConfig, SuiteResult, ALPHA, SUITE_KEYS,
};
use crate::nkcs::{NkcsConfig, NkcsModel};
use crate::vawt::campaign::CAMPAIGN_KEYS;
use crate::vawt::geometry::DEFAULT_RESOLUTION;
use crate::vawt::energy::PLA_DENSITY;
use crate::vawt::{
    build_turbine, export_stl, read_genomes_csv, run_campaign, write_genomes_csv, CampaignBranch, CampaignConfig,
    FileEvaluator, MockEvaluator, RoundOptions, TurbineConstants, VawtGenome, GENE_NAMES,
};

pub const MANIFEST: &str = "manifest.cfg";

#[derive(Debug, Parser)]
#[command(name = "scgalab", version, about = "Surrogate-assisted cooperative coevolution experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// key = value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Batch NKCS suite: curves, per-experiment samples and significance table
    Suite {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the available parallelism
        #[arg(long)]
        workers: Option<usize>,
    },
    /// One NKCS run, identical to the matching experiment of a suite
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Compile turbine genomes into binary STL files
    VawtCompile {
        /// CSV with one genome per row; the seed design when omitted
        #[arg(long)]
        genome: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Turbine array design loop: CGA-b warm-up, then SCGA-b and SCGA-bw
    VawtLoop {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = EvaluatorMode::Mock)]
        evaluator: EvaluatorMode,
        /// Round directories for the file evaluator
        #[arg(long)]
        workspace: Option<PathBuf>,
        /// Seconds to wait for each round's measurements
        #[arg(long, default_value_t = 3600)]
        timeout: u64,
        /// Milliseconds between checks for the ready marker
        #[arg(long, default_value_t = 500)]
        poll_ms: u64,
    },
    /// Mann-Whitney U test on two samples (first CSV column)
    Stats {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = ALPHA)]
        alpha: f64,
    },
    /// Write every fitness table of a small NKCS landscape as CSV
    DumpTables {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvaluatorMode {
    Mock,
    File,
}

fn load(path: Option<&Path>) -> Result<KvConfig> {
    path.map_or_else(|| Ok(KvConfig::new()), KvConfig::load)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_manifest(dir: &Path, command: &str, kv: &KvConfig) -> Result<()> {
    let path = dir.join(MANIFEST);
    let text = format!("# scgalab {command}\n{kv}");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn csv_file(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    trace.write_csv(std::io::BufWriter::new(file))
}

/// `algorithm,K,C,checkpoint,experiment,best`: the raw samples behind the
/// significance table.
fn write_samples(path: &Path, result: &SuiteResult) -> Result<()> {
    let mut w = csv_file(path)?;
    w.write_record(["algorithm", "K", "C", "checkpoint", "experiment", "best"])?;
    for cell in &result.cells {
        for &cp in &result.config.checkpoints {
            for (i, v) in cell.at(cp).iter().enumerate() {
                w.write_record([
                    cell.algorithm.to_string(),
                    cell.k.to_string(),
                    cell.c.to_string(),
                    cp.to_string(),
                    i.to_string(),
                    format!("{v:.17}"),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn suite(common: &Common, workers: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let mut kv = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        kv.set("seed", seed);
    }
    if let Some(w) = workers {
        kv.set("workers", w);
    }
    let config = SuiteConfig::from_kv(&kv)?;
    create_dir(&common.out)?;
    write_manifest(&common.out, "suite", &config.to_kv())?;
    let result = run_suite(&config)?;
    let baseline = config.algorithms[0];
    let rows = result.significance_table(baseline)?;
    let path = common.out.join("significance.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_significance_csv(&rows, file)?;
    write_samples(&common.out.join("samples.csv"), &result)?;
    result.export_curves(&common.out.join("curves"))?;
    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "baseline {baseline}; * marks p < {ALPHA}").map_err(io)?;
    for r in &rows {
        writeln!(
            out,
            "{:<8} K{}C{} @{:<5} mean {:.4} sd {:.4}{}",
            r.algorithm.to_string(),
            r.k,
            r.c,
            r.checkpoint,
            r.mean,
            r.sd,
            if r.significant() { " *" } else { "" }
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Suite keys plus the experiment coordinates.
const RUN_EXTRA: &[&str] = &["algorithm", "instance", "run"];

fn run_one(common: &Common, out: &mut dyn Write) -> Result<()> {
    let mut kv = load(common.config.as_deref())?;
    let known: Vec<&str> = SUITE_KEYS.iter().chain(RUN_EXTRA).copied().filter(|k| *k != "algorithms").collect();
    kv.check_keys(&known)?;
    if let Some(seed) = common.seed {
        kv.set("seed", seed);
    }
    let algorithm: Algorithm = kv.get_or("algorithm", Algorithm::Cga(crate::evolution::Scheme::Best))?;
    let instance: usize = kv.get_or("instance", 0)?;
    let run: usize = kv.get_or("run", 0)?;
    let mut suite_kv = KvConfig::new();
    for key in kv.keys().filter(|k| !RUN_EXTRA.contains(k)) {
        suite_kv.set(key, kv.get_str(key).unwrap_or_default());
    }
    suite_kv.set("algorithms", algorithm);
    for (key, default) in [("k", "2"), ("c", "2")] {
        if suite_kv.get_str(key).is_none() {
            suite_kv.set(key, default);
        }
    }
    if suite_kv.get_str("checkpoints").is_none() {
        let budget = suite_kv.get_or("budget", SuiteConfig::default().budget)?;
        suite_kv.set("checkpoints", budget);
    }
    let config = SuiteConfig::from_kv(&suite_kv)?;
    if config.k_values.len() != 1 || config.c_values.len() != 1 {
        return Err(Error::InvalidConfig("a single run takes exactly one k and one c".into()));
    }
    if instance >= config.instances || run >= config.runs {
        return Err(Error::InvalidConfig(format!(
            "instance {instance} / run {run} outside the configured {} x {}",
            config.instances, config.runs
        )));
    }
    let (k, c) = (config.k_values[0], config.c_values[0]);
    let model = NkcsModel::generate(config.nkcs_config(k, c, instance))?;
    create_dir(&common.out)?;
    let mut manifest = config.to_kv();
    manifest.set("algorithm", algorithm);
    manifest.set("instance", instance);
    manifest.set("run", run);
    let mut clean = KvConfig::new();
    for key in manifest.keys().filter(|k| *k != "algorithms") {
        clean.set(key, manifest.get_str(key).unwrap_or_default());
    }
    write_manifest(&common.out, "run", &clean)?;
    let trace = run_experiment(&config, &model, algorithm, instance, run)?;
    write_trace(&common.out.join("trace.csv"), &trace)?;
    writeln!(
        out,
        "{algorithm} K{k}C{c} instance {instance} run {run}: best {:.6} after {} evaluations",
        trace.best().unwrap_or(f64::NAN),
        trace.len()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn vawt_compile(genome: Option<&Path>, dir: &Path, resolution: usize, out: &mut dyn Write) -> Result<()> {
    let genomes = match genome {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            read_genomes_csv(file, path)?
        }
        None => vec![VawtGenome::seed()],
    };
    if genomes.is_empty() {
        return Err(Error::InvalidConfig("genome file has no rows".into()));
    }
    let consts = TurbineConstants::default();
    create_dir(dir)?;
    let copy = dir.join("genomes.csv");
    write_genomes_csv(fs::File::create(&copy).map_err(|e| Error::io(&copy, e))?, &genomes)?;
    let mut kv = KvConfig::new();
    kv.set("resolution", resolution);
    write_manifest(dir, "vawt-compile --genome genomes.csv", &kv)?;
    let summary = dir.join("summary.csv");
    let mut w = csv_file(&summary)?;
    w.write_record(["row", "id", "stl", "triangles", "volume_mm3", "mass_g", "max_radius_mm", "height_mm"])?;
    for (i, g) in genomes.iter().enumerate() {
        let mesh = build_turbine(g, &consts, resolution)?;
        let name = format!("turbine_{i}.stl");
        export_stl(&mesh, &dir.join(&name))?;
        let (z0, z1) = mesh.z_range();
        let volume = mesh.volume();
        w.write_record([
            i.to_string(),
            g.id(),
            name.clone(),
            mesh.triangle_count().to_string(),
            format!("{volume:.6}"),
            format!("{:.6}", volume * PLA_DENSITY),
            format!("{:.6}", mesh.max_radius()),
            format!("{:.6}", z1 - z0),
        ])?;
        writeln!(out, "{name}: {} triangles", mesh.triangle_count()).map_err(|e| Error::io("<stdout>", e))?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))
}

fn write_branch(dir: &Path, branch: &CampaignBranch) -> Result<()> {
    write_trace(&dir.join(format!("trace_{}.csv", branch.name)), &branch.trace)
}

fn vawt_loop(
    common: &Common,
    mode: EvaluatorMode,
    workspace: Option<&Path>,
    timeout: Duration,
    poll: Duration,
    out: &mut dyn Write,
) -> Result<()> {
    let mut kv = load(common.config.as_deref())?;
    kv.check_keys(CAMPAIGN_KEYS)?;
    if let Some(seed) = common.seed {
        kv.set("seed", seed);
    }
    let cfg = CampaignConfig::from_kv(&kv)?;
    create_dir(&common.out)?;
    write_manifest(&common.out, "vawt-loop", &cfg.to_kv())?;
    let result = match mode {
        EvaluatorMode::Mock => run_campaign(&cfg, MockEvaluator::new(cfg.n_species))?,
        EvaluatorMode::File => {
            let ws = workspace.map_or_else(|| common.out.join("workspace"), Path::to_path_buf);
            let options = RoundOptions {
                timeout,
                poll,
                ..RoundOptions::default()
            };
            run_campaign(&cfg, FileEvaluator::new(ws, options))?
        }
    };
    let generation = cfg.generation();
    let path = common.out.join("generations.csv");
    let mut w = csv_file(&path)?;
    w.write_record(["branch", "generation", "evaluations", "best_fitness"])?;
    let mut teams = csv_file(&common.out.join("best_teams.csv"))?;
    let mut header = vec!["branch", "species"];
    header.extend(GENE_NAMES);
    teams.write_record(&header)?;
    for branch in [&result.archive, &result.windowed] {
        write_branch(&common.out, branch)?;
        for (g, best) in branch.generation_best(generation).iter().enumerate() {
            w.write_record([
                branch.name.clone(),
                g.to_string(),
                ((g + 1) * generation).to_string(),
                format!("{best:.17}"),
            ])?;
        }
        for (s, genome) in branch.best_team.iter().enumerate() {
            let mut rec = vec![branch.name.clone(), s.to_string()];
            rec.extend(genome.genes.iter().map(|v| v.to_string()));
            teams.write_record(&rec)?;
        }
        writeln!(
            out,
            "{}: best {:.6e} J after {} evaluations",
            branch.name,
            branch.trace.best().unwrap_or(f64::NAN),
            branch.trace.len()
        )
        .map_err(|e| Error::io("<stdout>", e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    teams.flush().map_err(|e| Error::io(&path, e))
}

/// Numbers in the first column; a non-numeric first row is a header.
pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(0).unwrap_or("");
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    field: "value".into(),
                    message: format!("`{raw}` is not a number"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{}: sample is empty", path.display())));
    }
    Ok(values)
}

fn stats(a: &Path, b: &Path, alpha: f64, out: &mut dyn Write) -> Result<()> {
    let (xa, xb) = (read_sample(a)?, read_sample(b)?);
    let t = mann_whitney_u(&xa, &xb);
    writeln!(
        out,
        "n_a={} n_b={} U={} p={:.6} method={} significant={}",
        xa.len(),
        xb.len(),
        t.u,
        t.p,
        if t.exact { "exact" } else { "normal" },
        if t.significant(alpha) { "yes" } else { "no" }
    )
    .map_err(|e| Error::io("<stdout>", e))
}

fn dump_tables(common: &Common, out: &mut dyn Write) -> Result<()> {
    let mut kv = load(common.config.as_deref())?;
    kv.check_keys(&["n", "k", "c", "s", "topology", "seed"])?;
    if let Some(seed) = common.seed {
        kv.set("seed", seed);
    }
    let config = NkcsConfig::from_kv(&kv)?;
    let model = NkcsModel::generate(config.clone())?;
    create_dir(&common.out)?;
    let mut manifest = KvConfig::new();
    config.to_kv(&mut manifest);
    write_manifest(&common.out, "dump-tables", &manifest)?;
    let path = common.out.join("tables.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    model.write_tables_csv(std::io::BufWriter::new(file))?;
    writeln!(out, "wrote {}", path.display()).map_err(|e| Error::io("<stdout>", e))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Suite { common, workers } => suite(common, *workers, out),
        Command::Run { common } => run_one(common, out),
        Command::VawtCompile { genome, out: dir, resolution } => vawt_compile(genome.as_deref(), dir, *resolution, out),
        Command::VawtLoop {
            common,
            evaluator,
            workspace,
            timeout,
            poll_ms,
        } => vawt_loop(
            common,
            *evaluator,
            workspace.as_deref(),
            Duration::from_secs(*timeout),
            Duration::from_millis(*poll_ms),
            out,
        ),
        Command::Stats { a, b, alpha } => stats(a, b, *alpha, out),
        Command::DumpTables { common } => dump_tables(common, out),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 for runtime failures, 2 for usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            1
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
