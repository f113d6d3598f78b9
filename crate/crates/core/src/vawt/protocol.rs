//! File exchange with an external measurement rig.
//!
//! Each round gets its own directory holding one STL per species and a
//! `manifest.csv`. The round is complete once the operator has written
//! `measurements.csv` and then created the empty marker `measurements.ready`.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use super::energy::{array_fitness, Measurement, MockEvaluator};
use super::geometry::{build_turbine, export_stl, DEFAULT_RESOLUTION};
use super::{TurbineConstants, VawtGenome, GENE_NAMES, N_GENES};
use crate::error::{Error, Result};
use crate::evolution::Evaluator;

pub const MANIFEST: &str = "manifest.csv";
pub const MEASUREMENTS: &str = "measurements.csv";
pub const READY: &str = "measurements.ready";
pub const MEASUREMENT_HEADER: [&str; 5] = ["species", "individual", "rpm", "mass_g", "radius_mm"];

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOptions {
    pub consts: TurbineConstants,
    pub resolution: usize,
    pub poll: Duration,
    pub timeout: Duration,
}

impl Default for RoundOptions {
    fn default() -> Self {
        RoundOptions {
            consts: TurbineConstants::default(),
            resolution: DEFAULT_RESOLUTION,
            poll: Duration::from_millis(200),
            timeout: Duration::from_secs(3600),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub fitness: f64,
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub species: usize,
    pub individual: String,
    pub stl: String,
    pub genome: VawtGenome,
}

/// Writes the STLs and the manifest for one team into `dir`.
pub fn write_round(team: &[&VawtGenome], dir: &Path, opts: &RoundOptions) -> Result<Vec<ManifestRow>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rows = Vec::with_capacity(team.len());
    for (species, g) in team.iter().enumerate() {
        let individual = g.id();
        let stl = format!("s{species}_{individual}.stl");
        let mesh = build_turbine(g, &opts.consts, opts.resolution)?;
        export_stl(&mesh, &dir.join(&stl))?;
        rows.push(ManifestRow {
            species,
            individual,
            stl,
            genome: **g,
        });
    }
    let path = dir.join(MANIFEST);
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["species", "individual", "stl"];
    header.extend(GENE_NAMES);
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![r.species.to_string(), r.individual.clone(), r.stl.clone()];
        rec.extend(r.genome.genes.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestRow>> {
    let path = dir.join(MANIFEST);
    let mut r = csv::Reader::from_path(&path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<&str> {
            rec.get(i).ok_or_else(|| Error::Parse {
                path: path.clone(),
                line,
                field: name.into(),
                message: "missing value".into(),
            })
        };
        let species = field(0, "species")?.parse().map_err(|_| Error::Parse {
            path: path.clone(),
            line,
            field: "species".into(),
            message: "not an index".into(),
        })?;
        let mut genes = [0.0; N_GENES];
        for (k, g) in genes.iter_mut().enumerate() {
            let raw = field(3 + k, GENE_NAMES[k])?;
            *g = raw.parse().map_err(|_| Error::Parse {
                path: path.clone(),
                line,
                field: GENE_NAMES[k].into(),
                message: format!("`{raw}` is not a number"),
            })?;
        }
        rows.push(ManifestRow {
            species,
            individual: field(1, "individual")?.to_string(),
            stl: field(2, "stl")?.to_string(),
            genome: VawtGenome::new(genes),
        });
    }
    Ok(rows)
}

/// Parses a measurements file; a blank radius means the plate radius.
pub fn parse_measurements(path: &Path, default_radius_mm: f64) -> Result<Vec<Measurement>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let err = |line: usize, field: &str, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        field: field.into(),
        message,
    };
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != MEASUREMENT_HEADER {
        return Err(err(1, "header", format!("expected `{}`", MEASUREMENT_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != MEASUREMENT_HEADER.len() {
            return Err(err(line, "row", format!("expected 5 fields, found {}", rec.len())));
        }
        let number = |i: usize| -> Result<f64> {
            let raw = &rec[i];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, MEASUREMENT_HEADER[i], format!("`{raw}` is not a number")))
        };
        let species = rec[0]
            .parse::<usize>()
            .map_err(|_| err(line, "species", format!("`{}` is not an index", &rec[0])))?;
        let rpm = number(2)?;
        if rpm < 0.0 {
            return Err(err(line, "rpm", format!("{rpm} is negative")));
        }
        let mass_g = number(3)?;
        if mass_g <= 0.0 {
            return Err(err(line, "mass_g", format!("{mass_g} is not positive")));
        }
        let radius_mm = if rec[4].is_empty() { default_radius_mm } else { number(4)? };
        if radius_mm <= 0.0 {
            return Err(err(line, "radius_mm", format!("{radius_mm} is not positive")));
        }
        out.push(Measurement::from_bench(species, &rec[1], rpm, mass_g, radius_mm));
    }
    Ok(out)
}

pub fn write_measurements(path: &Path, measurements: &[Measurement]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MEASUREMENT_HEADER)?;
    for m in measurements {
        w.write_record([
            m.species.to_string(),
            m.individual.clone(),
            m.rpm.to_string(),
            (m.mass_kg * 1000.0).to_string(),
            (m.radius_m * 1000.0).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn wait_for(marker: &Path, opts: &RoundOptions) -> Result<()> {
    let start = Instant::now();
    while !marker.exists() {
        if start.elapsed() >= opts.timeout {
            return Err(Error::Timeout(opts.timeout, marker.to_path_buf()));
        }
        thread::sleep(opts.poll);
    }
    Ok(())
}

/// Publishes `team` in `dir`, blocks until measurements are ready and
/// returns the array's kinetic energy.
pub fn external_evaluation_round(team: &[&VawtGenome], dir: &Path, opts: &RoundOptions) -> Result<RoundResult> {
    let rows = write_round(team, dir, opts)?;
    wait_for(&dir.join(READY), opts)?;
    let measurements = parse_measurements(&dir.join(MEASUREMENTS), opts.consts.plate_radius())?;
    let fitness = array_fitness(&measurements, team.len())?;
    for m in &measurements {
        let expected = &rows[m.species].individual;
        if &m.individual != expected {
            return Err(Error::InvalidMeasurement(format!(
                "species {} measured individual `{}` but the manifest lists `{expected}`",
                m.species, m.individual
            )));
        }
    }
    Ok(RoundResult { fitness, measurements })
}

/// Answers a published round with mock measurements.
pub fn respond_with_mock(dir: &Path, mock: &MockEvaluator) -> Result<()> {
    let mut rows = read_manifest(dir)?;
    rows.sort_by_key(|r| r.species);
    let team: Vec<&VawtGenome> = rows.iter().map(|r| &r.genome).collect();
    write_measurements(&dir.join(MEASUREMENTS), &mock.measure(&team)?)?;
    fs::write(dir.join(READY), b"").map_err(|e| Error::io(dir, e))
}

/// Evaluates every team through a fresh round directory under `workspace`.
#[derive(Debug, Clone)]
pub struct FileEvaluator {
    pub workspace: PathBuf,
    pub options: RoundOptions,
    /// Prefix of round directory names.
    pub label: String,
    round: usize,
}

impl FileEvaluator {
    pub fn new(workspace: impl Into<PathBuf>, options: RoundOptions) -> Self {
        FileEvaluator {
            workspace: workspace.into(),
            options,
            label: "round".into(),
            round: 0,
        }
    }

    /// Directory the next round will use.
    pub fn next_dir(&self) -> PathBuf {
        self.workspace.join(format!("{}_{:05}", self.label, self.round))
    }

    pub fn rounds(&self) -> usize {
        self.round
    }
}

impl Evaluator<VawtGenome> for FileEvaluator {
    fn evaluate(&mut self, team: &[&VawtGenome]) -> Result<f64> {
        let dir = self.next_dir();
        self.round += 1;
        Ok(external_evaluation_round(team, &dir, &self.options)?.fitness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join(MEASUREMENTS);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_and_defaults_radius() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "species,individual,rpm,mass_g,radius_mm\n0,a,2332,7,\n1,b,100,8,20\n");
        let ms = parse_measurements(&p, 17.5).unwrap();
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].radius_m, 0.0175);
        assert_eq!(ms[1].radius_m, 0.02);
        assert_eq!(ms[0].mass_kg, 0.007);
    }

    #[test]
    fn errors_name_line_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "species,individual,rpm,mass_g,radius_mm\n0,a,2332,7,\n1,b,fast,8,\n");
        match parse_measurements(&p, 17.5).unwrap_err() {
            Error::Parse { line, field, .. } => assert_eq!((line, field.as_str()), (3, "rpm")),
            e => panic!("{e}"),
        }
        let p = write(dir.path(), "species,individual,rpm,mass_g,radius_mm\n0,a,10,-1,\n");
        match parse_measurements(&p, 17.5).unwrap_err() {
            Error::Parse { line, field, .. } => assert_eq!((line, field.as_str()), (2, "mass_g")),
            e => panic!("{e}"),
        }
        let p = write(dir.path(), "species,rpm\n0,1\n");
        assert!(matches!(parse_measurements(&p, 17.5), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn times_out_without_marker() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RoundOptions {
            poll: Duration::from_millis(5),
            timeout: Duration::from_millis(30),
            resolution: 4,
            ..RoundOptions::default()
        };
        let seed = VawtGenome::seed();
        let err = external_evaluation_round(&[&seed], dir.path(), &opts).unwrap_err();
        assert!(matches!(err, Error::Timeout(..)), "{err}");
        let rows = read_manifest(dir.path()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].genome, seed);
        assert!(dir.path().join(&rows[0].stl).exists());
    }
}
