//! Angular kinetic energy of measured turbines and a deterministic stand-in
//! for the wind tunnel.

use std::f64::consts::PI;

use super::geometry::{blade_profile, build_turbine, z_offset};
use super::{TurbineConstants, VawtGenome, MAX_TWIST};
use crate::error::{Error, Result};
use crate::evolution::Evaluator;

/// Density of PLA, g/mm³.
pub const PLA_DENSITY: f64 = 1.25e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub species: usize,
    pub individual: String,
    pub rpm: f64,
    pub mass_kg: f64,
    pub radius_m: f64,
}

impl Measurement {
    /// From bench units: grams and millimetres.
    pub fn from_bench(species: usize, individual: impl Into<String>, rpm: f64, mass_g: f64, radius_mm: f64) -> Self {
        Measurement {
            species,
            individual: individual.into(),
            rpm,
            mass_kg: mass_g / 1000.0,
            radius_m: radius_mm / 1000.0,
        }
    }
}

/// `KE = I w^2 / 2` with `I = m r^2 / 2` (solid disc), joules.
pub fn kinetic_energy(m: &Measurement) -> Result<f64> {
    if !(m.mass_kg.is_finite() && m.mass_kg > 0.0) {
        return Err(Error::InvalidMeasurement(format!("mass {} kg is not positive", m.mass_kg)));
    }
    if !(m.radius_m.is_finite() && m.radius_m > 0.0) {
        return Err(Error::InvalidMeasurement(format!("radius {} m is not positive", m.radius_m)));
    }
    if !(m.rpm.is_finite() && m.rpm >= 0.0) {
        return Err(Error::InvalidMeasurement(format!("rpm {} is negative", m.rpm)));
    }
    let inertia = 0.5 * m.mass_kg * m.radius_m * m.radius_m;
    let omega = m.rpm / 60.0 * 2.0 * PI;
    Ok(0.5 * inertia * omega * omega)
}

/// Total kinetic energy of an array; needs exactly one measurement for each
/// of `n_species` positions.
pub fn array_fitness(measurements: &[Measurement], n_species: usize) -> Result<f64> {
    let mut seen = vec![false; n_species];
    for m in measurements {
        match seen.get_mut(m.species) {
            Some(true) => return Err(Error::DuplicateSpecies(m.species)),
            Some(slot) => *slot = true,
            None => {
                return Err(Error::InvalidMeasurement(format!(
                    "species {} is outside 0..{n_species}",
                    m.species
                )))
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::MissingSpecies(missing));
    }
    let mut sorted: Vec<&Measurement> = measurements.iter().collect();
    sorted.sort_by_key(|m| m.species);
    sorted.into_iter().map(kinetic_energy).sum()
}

/// Scores arrays from geometry alone: rpm is a smooth function of blade
/// reach, chord, camber, twist and lean, scaled by a per-position gain and
/// damped by the upstream neighbour's blockage. Mass is the printed volume.
#[derive(Debug, Clone, PartialEq)]
pub struct MockEvaluator {
    pub consts: TurbineConstants,
    /// Mesh resolution for the mass estimate.
    pub resolution: usize,
    pub position_gain: Vec<f64>,
    /// Array rpm the seed design would get with unit gains.
    pub base_rpm: f64,
}

impl MockEvaluator {
    pub fn new(n_species: usize) -> Self {
        MockEvaluator {
            consts: TurbineConstants::default(),
            resolution: 8,
            position_gain: (0..n_species).map(|i| 0.9 + 0.1 * (2.4 * i as f64).cos()).collect(),
            base_rpm: 2332.0,
        }
    }

    fn shape(&self, g: &VawtGenome) -> (f64, f64) {
        let r = self.consts.plate_radius();
        let pts: Vec<[f64; 2]> = blade_profile(g, 16).into_iter().map(|[x, y]| [x - r, y - r]).collect();
        let reach = pts.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max) / r;
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        let chord = (b[0] - a[0]).hypot(b[1] - a[1]) / (2.0 * r);
        let n = pts.len();
        let camber = (0..n)
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
            .abs()
            / (2.0 * r * r);
        let twist = g.twist() / MAX_TWIST;
        let (dx, dy) = z_offset(g, &self.consts, 0.5);
        let lean = (dx.hypot(dy) / r).min(1.0);
        let drive = (0.55 + 0.9 * reach * chord + 3.0 * camber) * (1.0 + 0.35 * (PI * twist).sin()) * (1.0 - 0.25 * lean);
        (drive, chord * reach)
    }

    pub fn measure(&self, team: &[&VawtGenome]) -> Result<Vec<Measurement>> {
        if team.len() != self.position_gain.len() {
            return Err(Error::Dimension {
                expected: self.position_gain.len(),
                got: team.len(),
            });
        }
        let (seed_drive, _) = self.shape(&VawtGenome::seed());
        let per_turbine = self.base_rpm / team.len() as f64 / seed_drive;
        let shapes: Vec<(f64, f64)> = team.iter().map(|g| self.shape(g)).collect();
        team.iter()
            .enumerate()
            .map(|(i, g)| {
                let blockage = if i > 0 { shapes[i - 1].1 } else { 0.0 };
                let rpm = (per_turbine * self.position_gain[i] * shapes[i].0 * (1.0 - 0.12 * blockage)).max(0.0);
                let mass_g = build_turbine(g, &self.consts, self.resolution)?.volume() * PLA_DENSITY;
                Ok(Measurement::from_bench(i, g.id(), rpm, mass_g, self.consts.plate_radius()))
            })
            .collect()
    }
}

impl Evaluator<VawtGenome> for MockEvaluator {
    fn evaluate(&mut self, team: &[&VawtGenome]) -> Result<f64> {
        array_fitness(&self.measure(team)?, team.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench(species: usize, rpm: f64) -> Measurement {
        Measurement::from_bench(species, "x", rpm, 7.0, 17.5)
    }

    #[test]
    fn scaling_laws() {
        let base = kinetic_energy(&bench(0, 1000.0)).unwrap();
        assert_eq!(kinetic_energy(&bench(0, 0.0)).unwrap(), 0.0);
        assert!((kinetic_energy(&bench(0, 2000.0)).unwrap() / base - 4.0).abs() < 1e-12);
        let heavy = Measurement::from_bench(0, "x", 1000.0, 14.0, 17.5);
        assert!((kinetic_energy(&heavy).unwrap() / base - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_measurements() {
        let mut m = bench(0, 10.0);
        m.mass_kg = 0.0;
        assert!(kinetic_energy(&m).is_err());
        let mut m = bench(0, 10.0);
        m.radius_m = -1.0;
        assert!(kinetic_energy(&m).is_err());
    }

    #[test]
    fn array_contract() {
        let five: Vec<_> = (0..5).map(|s| bench(s, 100.0)).collect();
        assert!(matches!(array_fitness(&five, 6), Err(Error::MissingSpecies(5))));
        let mut dup = five.clone();
        dup.push(bench(4, 1.0));
        assert!(matches!(array_fitness(&dup, 6), Err(Error::DuplicateSpecies(4))));
        let mut six: Vec<_> = (0..6).map(|s| bench(s, 100.0 * (s + 1) as f64)).collect();
        let f = array_fitness(&six, 6).unwrap();
        six.reverse();
        assert_eq!(array_fitness(&six, 6).unwrap(), f);
        six[0].rpm = 0.0;
        assert!(array_fitness(&six, 6).unwrap() < f);
    }

    #[test]
    fn mock_is_deterministic_and_positive() {
        let mut mock = MockEvaluator::new(6);
        let seed = VawtGenome::seed();
        let team = vec![&seed; 6];
        let a = mock.evaluate(&team).unwrap();
        let b = mock.evaluate(&team).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
        let ms = mock.measure(&team).unwrap();
        let total: f64 = ms.iter().map(|m| m.rpm).sum();
        assert!(total > 1000.0 && total < 4000.0, "{total}");
        for m in &ms {
            assert!(m.mass_kg > 0.004 && m.mass_kg < 0.012, "{}", m.mass_kg);
        }
    }
}
