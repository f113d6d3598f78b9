//! Two-stage, two-blade vertical-axis wind turbines described by 17 genes.
//!
//! Profile coordinates live on a square grid whose centre coincides with the
//! centre of the end plates, so a point `(x, y)` is on the plate when
//! `(x - R)^2 + (y - R)^2 <= R^2` for plate radius `R`. Lengths are in
//! millimetres and angles in degrees; [`energy`] converts to SI.

pub mod campaign;
pub mod energy;
pub mod geometry;
pub mod protocol;

use std::fmt;
use std::io::{Read, Write};

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::evolution::Variation;
use crate::rng::Rng;

pub use campaign::{run_campaign, CampaignBranch, CampaignConfig, CampaignResult};
pub use energy::{array_fitness, kinetic_energy, Measurement, MockEvaluator};
pub use geometry::{blade_profile, build_turbine, check_sweep, export_stl, read_stl, write_stl, z_offset, Mesh, Shell};
pub use protocol::{external_evaluation_round, FileEvaluator, RoundOptions, RoundResult};

pub const N_GENES: usize = 17;

pub const GENE_NAMES: [&str; N_GENES] = [
    "x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4", "x5", "y5", "zx1", "zx2", "zy1", "zy2", "z1", "z2", "r1",
];

pub const ZX1: usize = 10;
pub const ZX2: usize = 11;
pub const ZY1: usize = 12;
pub const ZY2: usize = 13;
pub const Z1: usize = 14;
pub const Z2: usize = 15;
pub const R1: usize = 16;

/// Upper bound of the twist gene, degrees.
pub const MAX_TWIST: f64 = 180.0;

/// Fixed turbine dimensions, millimetres and degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbineConstants {
    pub plate_diameter: f64,
    pub plate_thickness: f64,
    pub shaft_height: f64,
    pub shaft_thickness: f64,
    pub shaft_hollow_diameter: f64,
    pub blade_thickness: f64,
    pub blades_per_stage: usize,
    pub stages: usize,
    pub stage_rotation: f64,
}

impl Default for TurbineConstants {
    fn default() -> Self {
        TurbineConstants {
            plate_diameter: 35.0,
            plate_thickness: 1.0,
            shaft_height: 70.0,
            shaft_thickness: 1.0,
            shaft_hollow_diameter: 1.0,
            blade_thickness: 1.0,
            blades_per_stage: 2,
            stages: 2,
            stage_rotation: 90.0,
        }
    }
}

impl TurbineConstants {
    pub fn plate_radius(&self) -> f64 {
        self.plate_diameter / 2.0
    }

    /// Clear height between two plates.
    pub fn blade_height(&self) -> f64 {
        let plates = (self.stages + 1) as f64 * self.plate_thickness;
        (self.shaft_height - plates) / self.stages as f64
    }

    /// Height of the bottom of stage `stage`'s blades.
    pub fn stage_base(&self, stage: usize) -> f64 {
        self.plate_thickness + stage as f64 * (self.blade_height() + self.plate_thickness)
    }

    /// Bound on `|zx|` and `|zy|`.
    pub fn offset_limit(&self) -> f64 {
        self.plate_radius()
    }

    /// `(lower, upper)` for gene `i`.
    pub fn gene_bounds(&self, i: usize) -> (f64, f64) {
        match i {
            0..=9 => (0.0, self.plate_diameter),
            ZX1..=ZY2 => (-self.offset_limit(), self.offset_limit()),
            Z1 | Z2 => (0.0, self.blade_height()),
            _ => (0.0, MAX_TWIST),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.plate_diameter,
            self.plate_thickness,
            self.shaft_height,
            self.shaft_thickness,
            self.blade_thickness,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.shaft_hollow_diameter < 0.0 {
            return Err(Error::InvalidConfig("turbine dimensions must be positive".into()));
        }
        if self.stages == 0 || self.blades_per_stage == 0 {
            return Err(Error::InvalidConfig("turbine needs at least one stage and one blade".into()));
        }
        if self.blade_height() <= 0.0 {
            return Err(Error::InvalidConfig("plates leave no room for blades".into()));
        }
        if self.shaft_hollow_diameter / 2.0 + self.shaft_thickness > self.plate_radius() {
            return Err(Error::InvalidConfig("shaft is wider than the plates".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VawtGenome {
    pub genes: [f64; N_GENES],
}

impl VawtGenome {
    pub fn new(genes: [f64; N_GENES]) -> Self {
        VawtGenome { genes }
    }

    /// The hand-made starting design.
    pub fn seed() -> Self {
        VawtGenome::new([
            15.1, 15.1, 22.1, 15.1, 25.7, 15.9, 32.1, 16.1, 32.1, 27.1, 0.0, 0.0, 0.0, 0.0, 20.0, 27.2, 0.0,
        ])
    }

    /// Profile point `i` in `0..5`, grid frame.
    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.genes[2 * i], self.genes[2 * i + 1]]
    }

    pub fn twist(&self) -> f64 {
        self.genes[R1]
    }

    /// Stable identifier derived from the gene bit patterns.
    pub fn id(&self) -> String {
        let h = self
            .genes
            .iter()
            .flat_map(|g| g.to_bits().to_le_bytes())
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3));
        format!("{h:016x}")
    }

    /// Checks the gene-level invariants; sweeps are checked by
    /// [`geometry::check_sweep`].
    pub fn validate(&self, consts: &TurbineConstants) -> Result<()> {
        if let Some(i) = self.genes.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidParams(format!("gene {} is not finite", GENE_NAMES[i])));
        }
        let r = consts.plate_radius();
        for i in 0..5 {
            let [x, y] = self.point(i);
            let d = (x - r).hypot(y - r);
            if d > r + 1e-9 {
                return Err(Error::OutOfDisc(format!(
                    "profile point {} at ({x}, {y}) is {d:.3} mm from the plate centre",
                    i + 1
                )));
            }
        }
        for i in ZX1..N_GENES {
            let (lo, hi) = consts.gene_bounds(i);
            let g = self.genes[i];
            if g < lo || g > hi {
                return Err(Error::InvalidParams(format!(
                    "gene {} = {g} outside [{lo}, {hi}]",
                    GENE_NAMES[i]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for VawtGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, g)) in GENE_NAMES.iter().zip(&self.genes).enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{name}={g}")?;
        }
        Ok(())
    }
}

/// One genome per row under a header of gene names.
pub fn write_genomes_csv<W: Write>(out: W, genomes: &[VawtGenome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GENE_NAMES)?;
    for g in genomes {
        w.write_record(g.genes.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<genomes>", e))?;
    Ok(())
}

pub fn read_genomes_csv<R: Read>(input: R, origin: &std::path::Path) -> Result<Vec<VawtGenome>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let columns: Vec<usize> = GENE_NAMES
        .iter()
        .map(|name| {
            header.iter().position(|h| h == *name).ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                field: name.to_string(),
                message: "missing column".into(),
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut genes = [0.0; N_GENES];
        for (i, &c) in columns.iter().enumerate() {
            let raw = record.get(c).unwrap_or("");
            genes[i] = raw.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line,
                field: GENE_NAMES[i].to_string(),
                message: format!("`{raw}` is not a number"),
            })?;
        }
        out.push(VawtGenome::new(genes));
    }
    Ok(out)
}

fn clamp_to_disc(x: &mut f64, y: &mut f64, r: f64) {
    let (dx, dy) = (*x - r, *y - r);
    let d = dx.hypot(dy);
    if d > r {
        *x = r + dx * r / d;
        *y = r + dy * r / d;
    }
}

/// Perturbs each gene with probability `rate`: Gaussian steps of SD
/// `sigma_coord` for lengths and `sigma_twist` for the twist, then clamps.
pub fn mutate_vawt(
    genome: &VawtGenome,
    rate: f64,
    sigma_coord: f64,
    sigma_twist: f64,
    consts: &TurbineConstants,
    rng: &mut Rng,
) -> VawtGenome {
    let mut g = *genome;
    for (i, v) in g.genes.iter_mut().enumerate() {
        if rng.random::<f64>() < rate {
            let sigma = if i == R1 { sigma_twist } else { sigma_coord };
            let step: f64 = rng.sample(StandardNormal);
            *v += sigma * step;
        }
    }
    let r = consts.plate_radius();
    for i in 0..5 {
        let (a, b) = g.genes.split_at_mut(2 * i + 1);
        clamp_to_disc(&mut a[2 * i], &mut b[0], r);
    }
    for i in ZX1..N_GENES {
        let (lo, hi) = consts.gene_bounds(i);
        g.genes[i] = g.genes[i].clamp(lo, hi);
    }
    g
}

/// Variation operators that only ever return buildable designs.
#[derive(Debug, Clone, PartialEq)]
pub struct VawtOps {
    pub consts: TurbineConstants,
    pub sigma_coord: f64,
    pub sigma_twist: f64,
    /// Redraws before falling back to a copy of the parent.
    pub max_attempts: usize,
}

impl Default for VawtOps {
    fn default() -> Self {
        VawtOps {
            consts: TurbineConstants::default(),
            sigma_coord: 3.6,
            sigma_twist: 18.0,
            max_attempts: 100,
        }
    }
}

impl VawtOps {
    pub fn is_buildable(&self, g: &VawtGenome) -> bool {
        g.validate(&self.consts).is_ok() && check_sweep(g, &self.consts).is_ok()
    }

    fn first_buildable(&self, fallback: &VawtGenome, mut draw: impl FnMut() -> VawtGenome) -> VawtGenome {
        (0..self.max_attempts)
            .map(|_| draw())
            .find(|g| self.is_buildable(g))
            .unwrap_or(*fallback)
    }
}

impl Variation<VawtGenome> for VawtOps {
    fn random(&self, rng: &mut Rng) -> VawtGenome {
        let seed = VawtGenome::seed();
        self.first_buildable(&seed, || {
            let mut genes = [0.0; N_GENES];
            for (i, v) in genes.iter_mut().enumerate() {
                let (lo, hi) = self.consts.gene_bounds(i);
                *v = rng.random_range(lo..=hi);
            }
            let r = self.consts.plate_radius();
            for i in 0..5 {
                let (a, b) = genes.split_at_mut(2 * i + 1);
                clamp_to_disc(&mut a[2 * i], &mut b[0], r);
            }
            VawtGenome::new(genes)
        })
    }

    fn mutate(&self, genome: &VawtGenome, rate: f64, rng: &mut Rng) -> VawtGenome {
        self.first_buildable(genome, || {
            mutate_vawt(genome, rate, self.sigma_coord, self.sigma_twist, &self.consts, rng)
        })
    }

    fn crossover(&self, a: &VawtGenome, b: &VawtGenome, rng: &mut Rng) -> VawtGenome {
        self.first_buildable(a, || {
            let mut child = *a;
            for (c, &v) in child.genes.iter_mut().zip(&b.genes) {
                if rng.random_bool(0.5) {
                    *c = v;
                }
            }
            child
        })
    }

    fn encoded_width(&self) -> usize {
        N_GENES
    }

    fn encode(&self, genome: &VawtGenome, out: &mut Vec<f64>) {
        out.extend(genome.genes.iter().enumerate().map(|(i, &g)| {
            let (lo, hi) = self.consts.gene_bounds(i);
            (g - lo) / (hi - lo)
        }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn seed_genome_is_valid() {
        let consts = TurbineConstants::default();
        let seed = VawtGenome::seed();
        seed.validate(&consts).unwrap();
        assert_eq!(seed.point(4), [32.1, 27.1]);
        assert_eq!(consts.blade_height(), 33.5);
        assert_eq!(consts.stage_base(1), 35.5);
    }

    #[test]
    fn zero_rate_is_identity() {
        let consts = TurbineConstants::default();
        let mut r = rng::stream(3, &[]);
        let g = VawtGenome::seed();
        assert_eq!(mutate_vawt(&g, 0.0, 3.6, 18.0, &consts, &mut r), g);
    }

    #[test]
    fn full_rate_moves_every_gene() {
        let consts = TurbineConstants::default();
        let mut r = rng::stream(4, &[]);
        let mut g = VawtGenome::seed();
        // interior values so that no clamp can pin a gene in place
        g.genes[ZX1..ZY2 + 1].copy_from_slice(&[1.0, -1.0, 2.0, -2.0]);
        g.genes[R1] = 90.0;
        for _ in 0..200 {
            let m = mutate_vawt(&g, 1.0, 3.6, 18.0, &consts, &mut r);
            for i in 0..N_GENES {
                assert_ne!(m.genes[i], g.genes[i], "gene {}", GENE_NAMES[i]);
            }
            m.validate(&consts).unwrap();
        }
    }

    #[test]
    fn mutants_stay_in_bounds() {
        let consts = TurbineConstants::default();
        let mut r = rng::stream(5, &[]);
        let mut g = VawtGenome::seed();
        for _ in 0..2000 {
            g = mutate_vawt(&g, 1.0, 20.0, 90.0, &consts, &mut r);
            g.validate(&consts).unwrap();
        }
    }

    #[test]
    fn ops_return_buildable_designs() {
        let ops = VawtOps::default();
        let mut r = rng::stream(6, &[]);
        let seed = VawtGenome::seed();
        for _ in 0..50 {
            let m = ops.mutate(&seed, 1.0, &mut r);
            assert!(ops.is_buildable(&m));
            assert!(ops.is_buildable(&ops.random(&mut r)));
        }
        let mut x = Vec::new();
        ops.encode(&seed, &mut x);
        assert_eq!(x.len(), N_GENES);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn genome_csv_round_trip() {
        let mut a = VawtGenome::seed();
        a.genes[R1] = 12.345678901234567;
        let mut buf = Vec::new();
        write_genomes_csv(&mut buf, &[a, VawtGenome::seed()]).unwrap();
        let back = read_genomes_csv(&buf[..], std::path::Path::new("t.csv")).unwrap();
        assert_eq!(back, vec![a, VawtGenome::seed()]);
    }

    #[test]
    fn genome_csv_reports_bad_field() {
        let mut text = GENE_NAMES.join(",");
        text.push('\n');
        text.push_str(&["1"; 16].join(","));
        text.push_str(",abc\n");
        let err = read_genomes_csv(text.as_bytes(), std::path::Path::new("g.csv")).unwrap_err();
        match err {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "r1");
            }
            other => panic!("{other}"),
        }
    }
}
