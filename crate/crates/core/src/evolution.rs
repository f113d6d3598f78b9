//! Steady-state cooperative coevolutionary GA.
//!
//! One population per species. Individuals are only ever scored as members
//! of a team, and each keeps the best team fitness it has been part of
//! (the max rule). Every call into the [`Evaluator`] consumes one unit of
//! budget and is logged in the [`RunTrace`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::nkcs::{BinaryGenome, NkcsModel};
use crate::rng::Rng;

/// Scores a team holding one genome per species.
pub trait Evaluator<G> {
    fn evaluate(&mut self, team: &[&G]) -> Result<f64>;
}

impl Evaluator<BinaryGenome> for &NkcsModel {
    fn evaluate(&mut self, team: &[&BinaryGenome]) -> Result<f64> {
        self.team_fitness(team)
    }
}

impl<G, F> Evaluator<G> for F
where
    F: FnMut(&[&G]) -> Result<f64>,
{
    fn evaluate(&mut self, team: &[&G]) -> Result<f64> {
        self(team)
    }
}

/// Genetic operators and surrogate encoding for a genome type.
pub trait Variation<G> {
    fn random(&self, rng: &mut Rng) -> G;
    /// Perturbs each gene independently with probability `rate`.
    fn mutate(&self, genome: &G, rate: f64, rng: &mut Rng) -> G;
    fn crossover(&self, a: &G, b: &G, rng: &mut Rng) -> G;
    /// Number of values [`Variation::encode`] appends.
    fn encoded_width(&self) -> usize;
    /// Appends the genome as surrogate inputs in `[0, 1]`.
    fn encode(&self, genome: &G, out: &mut Vec<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryOps {
    pub n_genes: usize,
}

impl Variation<BinaryGenome> for BinaryOps {
    fn random(&self, rng: &mut Rng) -> BinaryGenome {
        BinaryGenome::random(self.n_genes, rng)
    }

    fn mutate(&self, genome: &BinaryGenome, rate: f64, rng: &mut Rng) -> BinaryGenome {
        mutate_binary(genome, rate, rng)
    }

    fn crossover(&self, a: &BinaryGenome, b: &BinaryGenome, rng: &mut Rng) -> BinaryGenome {
        BinaryGenome::new(
            a.bits()
                .iter()
                .zip(b.bits())
                .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
                .collect(),
        )
    }

    fn encoded_width(&self) -> usize {
        self.n_genes
    }

    fn encode(&self, genome: &BinaryGenome, out: &mut Vec<f64>) {
        out.extend(genome.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }));
    }
}

/// Flips each bit independently with probability `rate`.
pub fn mutate_binary(genome: &BinaryGenome, rate: f64, rng: &mut Rng) -> BinaryGenome {
    let mut child = genome.clone();
    for bit in child.bits_mut() {
        if rng.random::<f64>() < rate {
            *bit = !*bit;
        }
    }
    child
}

/// Collaboration scheme used when evaluating offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Partner with the elite of every other species.
    Best,
    /// As `Best`, plus a second team of random partners.
    BestRandom,
    /// As `Best`; on a new global best, re-evaluate every other population
    /// against the current elites.
    Reevaluate,
    /// Every species breeds at once and the offspring form one team.
    Offspring,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Best, Scheme::BestRandom, Scheme::Reevaluate, Scheme::Offspring];

    /// Evaluations a turn needs before it may start.
    pub fn base_cost(self) -> usize {
        match self {
            Scheme::BestRandom => 2,
            _ => 1,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Scheme::Best => "b",
            Scheme::BestRandom => "br",
            Scheme::Reevaluate => "re",
            Scheme::Offspring => "o",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" => Ok(Scheme::Best),
            "br" => Ok(Scheme::BestRandom),
            "re" => Ok(Scheme::Reevaluate),
            "o" => Ok(Scheme::Offspring),
            _ => Err(Error::Unknown {
                kind: "collaboration scheme",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EaParams {
    pub pop_size: usize,
    pub tournament_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub scheme: Scheme,
}

impl Default for EaParams {
    fn default() -> Self {
        EaParams {
            pop_size: 20,
            tournament_size: 3,
            mutation_rate: 0.05,
            crossover_rate: 0.0,
            scheme: Scheme::Best,
        }
    }
}

impl EaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.tournament_size == 0 || self.tournament_size > self.pop_size {
            return bad(format!(
                "tournament size {} must be in 1..={}",
                self.tournament_size, self.pop_size
            ));
        }
        // replacement samples from the P-1 non-elite members
        if self.pop_size <= self.tournament_size {
            return bad(format!(
                "population of {} cannot protect its elite and sample {} for replacement",
                self.pop_size, self.tournament_size
            ));
        }
        for (name, p) in [("mutation", self.mutation_rate), ("crossover", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} rate {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<G> {
    pub genome: G,
    /// Best team fitness seen; `None` until first evaluated.
    pub fitness: Option<f64>,
    pub eval_count: u32,
}

impl<G> Individual<G> {
    pub fn new(genome: G) -> Self {
        Individual {
            genome,
            fitness: None,
            eval_count: 0,
        }
    }

    /// Applies the max rule for one team evaluation.
    pub fn record(&mut self, team_fitness: f64) {
        self.eval_count += 1;
        self.fitness = Some(match self.fitness {
            Some(f) => f.max(team_fitness),
            None => team_fitness,
        });
    }

    fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::NEG_INFINITY)
    }
}

/// One evaluation as seen by the evaluated species.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry<G> {
    /// The full team, indexed by species; includes the archived genome.
    pub team: Vec<G>,
    pub species: usize,
    pub team_fitness: f64,
    pub ordinal: usize,
}

impl<G> ArchiveEntry<G> {
    pub fn genome(&self) -> &G {
        &self.team[self.species]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesPopulation<G> {
    pub members: Vec<Individual<G>>,
    elite: usize,
    pub archive: Vec<ArchiveEntry<G>>,
}

impl<G> SpeciesPopulation<G> {
    pub fn new(members: Vec<Individual<G>>) -> Self {
        let mut pop = SpeciesPopulation {
            members,
            elite: 0,
            archive: Vec::new(),
        };
        pop.refresh_elite();
        pop
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn elite_index(&self) -> usize {
        self.elite
    }

    pub fn elite(&self) -> &Individual<G> {
        &self.members[self.elite]
    }

    /// Fittest member, lowest index on ties.
    pub fn refresh_elite(&mut self) {
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate().skip(1) {
            if m.score() > self.members[best].score() {
                best = i;
            }
        }
        self.elite = best;
    }

    /// Highest fitness among `size` distinct uniformly sampled members; ties
    /// go to the lowest member index.
    pub fn tournament(&self, size: usize, rng: &mut Rng) -> usize {
        let sample = index::sample(rng, self.members.len(), size);
        self.tournament_among(sample.iter())
    }

    pub fn tournament_among(&self, sample: impl IntoIterator<Item = usize>) -> usize {
        sample
            .into_iter()
            .reduce(|a, b| {
                let (fa, fb) = (self.members[a].score(), self.members[b].score());
                if fb > fa || (fb == fa && b < a) {
                    b
                } else {
                    a
                }
            })
            .expect("tournament needs at least one entrant")
    }

    /// Overwrites the least fit of `size` distinct non-elite members with
    /// `offspring` and returns the slot it took.
    pub fn replace(&mut self, offspring: Individual<G>, size: usize, rng: &mut Rng) -> Result<usize> {
        if self.members.len() <= size {
            return Err(Error::InvalidParams(format!(
                "population of {} cannot protect its elite and sample {size}",
                self.members.len()
            )));
        }
        let elite = self.elite;
        let sample: Vec<usize> = index::sample(rng, self.members.len() - 1, size)
            .into_iter()
            .map(|i| if i >= elite { i + 1 } else { i })
            .collect();
        Ok(self.replace_among(offspring, &sample))
    }

    /// Replacement with a given sample; lowest fitness loses, ties go to the
    /// highest member index. The elite must not be in `sample`.
    pub fn replace_among(&mut self, offspring: Individual<G>, sample: &[usize]) -> usize {
        debug_assert!(!sample.contains(&self.elite));
        let victim = sample
            .iter()
            .copied()
            .reduce(|a, b| {
                let (fa, fb) = (self.members[a].score(), self.members[b].score());
                if fb < fa || (fb == fa && b > a) {
                    b
                } else {
                    a
                }
            })
            .expect("replacement needs a non-empty sample");
        self.members[victim] = offspring;
        self.refresh_elite();
        victim
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based evaluation ordinal.
    pub ordinal: usize,
    /// Species whose turn produced the evaluation; `None` when every species
    /// acted at once.
    pub species: Option<usize>,
    pub team_fitness: f64,
    pub best_so_far: f64,
}

/// Every evaluation of a run, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }

    /// Best-so-far after `ordinal` evaluations, or after the last one if the
    /// run stopped earlier.
    pub fn best_at(&self, ordinal: usize) -> Option<f64> {
        if ordinal == 0 || self.records.is_empty() {
            return None;
        }
        let i = ordinal.min(self.records.len()) - 1;
        Some(self.records[i].best_so_far)
    }

    fn push(&mut self, species: Option<usize>, team_fitness: f64) -> usize {
        let best = match self.records.last() {
            Some(r) => r.best_so_far.max(team_fitness),
            None => team_fitness,
        };
        let ordinal = self.records.len() + 1;
        self.records.push(TraceRecord {
            ordinal,
            species,
            team_fitness,
            best_so_far: best,
        });
        ordinal
    }

    /// CSV with columns `eval_ordinal,species,team_fitness,best_so_far`.
    /// Species is 0-based and left empty for whole-system turns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eval_ordinal", "species", "team_fitness", "best_so_far"])?;
        for r in &self.records {
            w.write_record([
                r.ordinal.to_string(),
                r.species.map(|s| s.to_string()).unwrap_or_default(),
                format!("{:.17}", r.team_fitness),
                format!("{:.17}", r.best_so_far),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

/// How the initial populations are filled.
#[derive(Debug, Clone)]
pub enum Init<G> {
    /// Random genomes; each species' initial sweep partners with one random
    /// representative of every other species.
    Random,
    /// Member 0 of species `s` is `seeds[s]`, the rest are copies mutated at
    /// rate 1; initial sweeps partner with the seeds.
    Seeded(Vec<G>),
}

/// Who fills one species' slot in a team.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Member(usize),
    /// Index into the pending offspring list.
    Pending(usize),
}

/// A coevolutionary run: the populations, the evaluator and the budget.
#[derive(Debug, Clone)]
pub struct Coevolution<G, V, E> {
    params: EaParams,
    ops: V,
    evaluator: E,
    pops: Vec<SpeciesPopulation<G>>,
    trace: RunTrace,
    budget: usize,
    best_team: Option<Vec<G>>,
    turns: usize,
}

impl<G, V, E> Coevolution<G, V, E>
where
    G: Clone,
    V: Variation<G>,
    E: Evaluator<G>,
{
    /// Creates and evaluates the initial populations, consuming `S * P`
    /// evaluations of `budget`.
    pub fn initialize(
        params: EaParams,
        ops: V,
        evaluator: E,
        n_species: usize,
        init: Init<G>,
        budget: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        params.validate()?;
        let p = params.pop_size;
        if n_species == 0 {
            return Err(Error::InvalidParams("at least one species is required".into()));
        }
        if budget < n_species * p {
            return Err(Error::InvalidParams(format!(
                "budget {budget} is below the {} evaluations initialization needs",
                n_species * p
            )));
        }
        let pops = match &init {
            Init::Random => (0..n_species)
                .map(|_| {
                    SpeciesPopulation::new((0..p).map(|_| Individual::new(ops.random(rng))).collect())
                })
                .collect(),
            Init::Seeded(seeds) => {
                if seeds.len() != n_species {
                    return Err(Error::Dimension {
                        expected: n_species,
                        got: seeds.len(),
                    });
                }
                seeds
                    .iter()
                    .map(|seed| {
                        let mut members = vec![Individual::new(seed.clone())];
                        members.extend((1..p).map(|_| Individual::new(ops.mutate(seed, 1.0, rng))));
                        SpeciesPopulation::new(members)
                    })
                    .collect()
            }
        };
        let mut run = Coevolution {
            params,
            ops,
            evaluator,
            pops,
            trace: RunTrace::default(),
            budget,
            best_team: None,
            turns: 0,
        };
        for s in 0..n_species {
            let reps: Vec<usize> = (0..n_species)
                .map(|_| match init {
                    Init::Random => rng.random_range(0..p),
                    Init::Seeded(_) => 0,
                })
                .collect();
            for i in 0..p {
                let slots: Vec<Slot> = (0..n_species)
                    .map(|t| Slot::Member(if t == s { i } else { reps[t] }))
                    .collect();
                run.evaluate(Some(s), &slots, &mut [], &[s])?;
            }
        }
        Ok(run)
    }

    pub fn params(&self) -> &EaParams {
        &self.params
    }

    pub fn ops(&self) -> &V {
        &self.ops
    }

    pub fn populations(&self) -> &[SpeciesPopulation<G>] {
        &self.pops
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }

    pub fn evaluator(&self) -> &E {
        &self.evaluator
    }

    pub fn evaluator_mut(&mut self) -> &mut E {
        &mut self.evaluator
    }

    pub fn n_species(&self) -> usize {
        self.pops.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.budget = budget;
    }

    pub fn used(&self) -> usize {
        self.trace.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.trace.len())
    }

    /// Team holding the best fitness found so far.
    pub fn best_team(&self) -> Option<&[G]> {
        self.best_team.as_deref()
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.trace.best()
    }

    /// Species whose turn is next in round-robin order.
    pub fn next_species(&self) -> usize {
        self.turns % self.pops.len()
    }

    /// Evaluates the team described by `slots`, logs it, applies the max rule
    /// to every member and archives it for each species in `subjects`.
    fn evaluate(
        &mut self,
        actor: Option<usize>,
        slots: &[Slot],
        pending: &mut [Individual<G>],
        subjects: &[usize],
    ) -> Result<f64> {
        let ordinal = self.trace.len() + 1;
        let fitness = {
            let team: Vec<&G> = slots
                .iter()
                .enumerate()
                .map(|(s, slot)| match *slot {
                    Slot::Member(i) => &self.pops[s].members[i].genome,
                    Slot::Pending(k) => &pending[k].genome,
                })
                .collect();
            self.evaluator.evaluate(&team).map_err(|e| Error::Evaluation {
                ordinal,
                source: Box::new(e),
            })?
        };
        let team: Vec<G> = slots
            .iter()
            .enumerate()
            .map(|(s, slot)| match *slot {
                Slot::Member(i) => self.pops[s].members[i].genome.clone(),
                Slot::Pending(k) => pending[k].genome.clone(),
            })
            .collect();
        let prev_best = self.trace.best();
        self.trace.push(actor, fitness);
        if prev_best.is_none_or(|b| fitness > b) {
            self.best_team = Some(team.clone());
        }
        for (s, slot) in slots.iter().enumerate() {
            match *slot {
                Slot::Member(i) => {
                    self.pops[s].members[i].record(fitness);
                    self.pops[s].refresh_elite();
                }
                Slot::Pending(k) => pending[k].record(fitness),
            }
        }
        for &s in subjects {
            self.pops[s].archive.push(ArchiveEntry {
                team: team.clone(),
                species: s,
                team_fitness: fitness,
                ordinal,
            });
        }
        Ok(fitness)
    }

    /// Tournament parent(s), optional uniform crossover, then mutation.
    pub fn breed(&self, species: usize, rng: &mut Rng) -> G {
        let pop = &self.pops[species];
        let parent = &pop.members[pop.tournament(self.params.tournament_size, rng)].genome;
        let child = if self.params.crossover_rate > 0.0 && rng.random::<f64>() < self.params.crossover_rate {
            let mate = &pop.members[pop.tournament(self.params.tournament_size, rng)].genome;
            self.ops.crossover(parent, mate, rng)
        } else {
            parent.clone()
        };
        self.ops.mutate(&child, self.params.mutation_rate, rng)
    }

    fn elite_slots(&self) -> Vec<Slot> {
        self.pops.iter().map(|p| Slot::Member(p.elite_index())).collect()
    }

    /// Evaluates `child` for `species` alongside the other species' elites,
    /// then places it by replacement. Returns the team fitness. Consumes one
    /// evaluation.
    pub fn evaluate_with_elites(&mut self, species: usize, child: G, rng: &mut Rng) -> Result<f64> {
        let mut pending = [Individual::new(child)];
        let mut slots = self.elite_slots();
        slots[species] = Slot::Pending(0);
        let f = self.evaluate(Some(species), &slots, &mut pending, &[species])?;
        let [child] = pending;
        self.pops[species].replace(child, self.params.tournament_size, rng)?;
        Ok(f)
    }

    /// One turn of the configured scheme. Returns the evaluations consumed,
    /// or `None` if the remaining budget cannot pay for the turn.
    pub fn step(&mut self, rng: &mut Rng) -> Result<Option<usize>> {
        let scheme = self.params.scheme;
        if self.remaining() < scheme.base_cost() {
            return Ok(None);
        }
        let before = self.used();
        match scheme {
            Scheme::Offspring => self.step_simultaneous(rng)?,
            _ => {
                let s = self.next_species();
                self.step_species(s, scheme, rng)?;
            }
        }
        self.turns += 1;
        Ok(Some(self.used() - before))
    }

    fn step_species(&mut self, s: usize, scheme: Scheme, rng: &mut Rng) -> Result<()> {
        let child = self.breed(s, rng);
        let prev_best = self.trace.best();
        let mut pending = [Individual::new(child)];
        let mut slots = self.elite_slots();
        slots[s] = Slot::Pending(0);
        let f = self.evaluate(Some(s), &slots, &mut pending, &[s])?;
        if scheme == Scheme::BestRandom {
            let mut random_slots: Vec<Slot> = self
                .pops
                .iter()
                .map(|p| Slot::Member(rng.random_range(0..p.len())))
                .collect();
            random_slots[s] = Slot::Pending(0);
            self.evaluate(Some(s), &random_slots, &mut pending, &[s])?;
        }
        let [child] = pending;
        self.pops[s].replace(child, self.params.tournament_size, rng)?;
        if scheme == Scheme::Reevaluate && prev_best.is_some_and(|b| f > b) {
            self.refresh_others(s)?;
        }
        Ok(())
    }

    /// Re-evaluates every member of every species other than `s` with the
    /// elites current at the time of each evaluation. Stops when the budget
    /// runs out.
    fn refresh_others(&mut self, s: usize) -> Result<()> {
        for t in (0..self.pops.len()).filter(|&t| t != s) {
            for i in 0..self.pops[t].len() {
                if self.remaining() == 0 {
                    return Ok(());
                }
                let mut slots = self.elite_slots();
                slots[t] = Slot::Member(i);
                self.evaluate(Some(t), &slots, &mut [], &[t])?;
            }
        }
        Ok(())
    }

    fn step_simultaneous(&mut self, rng: &mut Rng) -> Result<()> {
        let n = self.pops.len();
        let mut pending: Vec<Individual<G>> =
            (0..n).map(|s| Individual::new(self.breed(s, rng))).collect();
        let slots: Vec<Slot> = (0..n).map(Slot::Pending).collect();
        let subjects: Vec<usize> = (0..n).collect();
        self.evaluate(None, &slots, &mut pending, &subjects)?;
        for (s, child) in pending.into_iter().enumerate() {
            self.pops[s].replace(child, self.params.tournament_size, rng)?;
        }
        Ok(())
    }

    /// Runs turns until the next one would not fit in the budget.
    pub fn run(&mut self, rng: &mut Rng) -> Result<()> {
        while self.step(rng)?.is_some() {}
        Ok(())
    }

    /// Counts a surrogate-driven turn so round-robin order is kept.
    pub(crate) fn advance_turn(&mut self) {
        self.turns += 1;
    }
}

/// Initializes and runs a CGA on an NKCS model until `budget` is spent.
/// `init_rng` builds the initial populations; `rng` drives evolution.
pub fn run_cga(
    model: &NkcsModel,
    params: EaParams,
    budget: usize,
    init_rng: &mut Rng,
    rng: &mut Rng,
) -> Result<RunTrace> {
    let ops = BinaryOps {
        n_genes: model.config().n_genes,
    };
    let mut run = Coevolution::initialize(
        params,
        ops,
        model,
        model.config().n_species,
        Init::Random,
        budget,
        init_rng,
    )?;
    run.run(rng)?;
    Ok(run.into_trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nkcs::NkcsConfig;
    use crate::rng;

    fn pop_with(fitness: &[f64]) -> SpeciesPopulation<u32> {
        SpeciesPopulation::new(
            fitness
                .iter()
                .enumerate()
                .map(|(i, &f)| Individual {
                    genome: i as u32,
                    fitness: Some(f),
                    eval_count: 1,
                })
                .collect(),
        )
    }

    #[derive(Clone, Copy)]
    struct Counter;

    impl Variation<u32> for Counter {
        fn random(&self, rng: &mut Rng) -> u32 {
            rng.random_range(0..1000)
        }
        fn mutate(&self, g: &u32, rate: f64, rng: &mut Rng) -> u32 {
            if rng.random::<f64>() < rate {
                g + 1
            } else {
                *g
            }
        }
        fn crossover(&self, a: &u32, _: &u32, _: &mut Rng) -> u32 {
            *a
        }
        fn encoded_width(&self) -> usize {
            1
        }
        fn encode(&self, g: &u32, out: &mut Vec<f64>) {
            out.push(*g as f64);
        }
    }

    fn constant(v: f64) -> impl FnMut(&[&u32]) -> Result<f64> + Clone {
        move |_| Ok(v)
    }

    #[test]
    fn tournament_rules() {
        let pop = pop_with(&[1.0, 5.0, 3.0, 5.0, 2.0]);
        assert_eq!(pop.tournament_among([0, 2, 4]), 2);
        assert_eq!(pop.tournament_among([3, 1]), 1);
        let mut r = rng::stream(1, &[]);
        for _ in 0..50 {
            assert_eq!(pop.tournament(5, &mut r), pop.elite_index());
        }
        assert_eq!(pop.elite_index(), 1);
        let flat = pop_with(&[2.0; 6]);
        assert_eq!(flat.tournament_among([4, 2, 5]), 2);
    }

    #[test]
    fn replacement_rules() {
        let mut pop = pop_with(&[5.0, 1.0, 2.0, 3.0, 4.0]);
        let slot = pop.replace_among(Individual::new(99), &[1, 2, 3]);
        assert_eq!(slot, 1);
        assert_eq!(pop.members[1].genome, 99);
        let mut tied = pop_with(&[5.0, 1.0, 1.0, 3.0]);
        assert_eq!(tied.replace_among(Individual::new(7), &[1, 2, 3]), 2);
    }

    #[test]
    fn strong_offspring_becomes_elite() {
        let mut pop = pop_with(&[5.0, 1.0, 2.0, 3.0, 4.0]);
        let mut r = rng::stream(2, &[]);
        let child = Individual { genome: 50, fitness: Some(9.0), eval_count: 1 };
        let slot = pop.replace(child, 3, &mut r).unwrap();
        assert_eq!(pop.elite_index(), slot);
    }

    #[test]
    fn elite_survives_replacement() {
        let mut pop = pop_with(&[0.5, 0.1, 0.9, 0.3, 0.2, 0.4]);
        let mut r = rng::stream(3, &[]);
        for _ in 0..10_000 {
            let elite_genome = pop.elite().genome;
            let elite_fit = pop.elite().fitness;
            let f = r.random::<f64>();
            pop.replace(Individual { genome: 1000, fitness: Some(f), eval_count: 1 }, 3, &mut r).unwrap();
            assert!(pop.members.iter().any(|m| m.genome == elite_genome && m.fitness == elite_fit));
            assert!(pop.elite().fitness >= elite_fit);
        }
    }

    #[test]
    fn small_population_cannot_replace() {
        let mut pop = pop_with(&[1.0, 2.0, 3.0]);
        let mut r = rng::stream(4, &[]);
        assert!(matches!(pop.replace(Individual::new(0), 3, &mut r), Err(Error::InvalidParams(_))));
        let params = EaParams { pop_size: 3, ..EaParams::default() };
        assert!(params.validate().is_err());
    }

    #[test]
    fn binary_mutation_extremes() {
        let mut r = rng::stream(5, &[]);
        let g = BinaryGenome::random(20, &mut r);
        assert_eq!(mutate_binary(&g, 0.0, &mut r), g);
        let flipped = mutate_binary(&g, 1.0, &mut r);
        assert!(g.bits().iter().zip(flipped.bits()).all(|(a, b)| a != b));
    }

    #[test]
    fn binary_mutation_rate() {
        let mut r = rng::stream(6, &[]);
        let g = BinaryGenome::zeros(20);
        let trials = 100_000;
        let flips: usize = (0..trials)
            .map(|_| mutate_binary(&g, 0.05, &mut r).bits().iter().filter(|&&b| b).count())
            .sum();
        let mean = flips as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn initialization_accounting() {
        let mut r = rng::stream(7, &[]);
        let run = Coevolution::initialize(EaParams::default(), Counter, constant(2.5), 6, Init::Random, 500, &mut r).unwrap();
        assert_eq!(run.used(), 120);
        for pop in run.populations() {
            assert!(pop.members.iter().all(|m| m.fitness == Some(2.5)));
            assert_eq!(pop.archive.len(), 20);
        }
    }

    #[test]
    fn initial_representatives_are_fixed_per_species() {
        let mut seen: Vec<Vec<u32>> = Vec::new();
        let recorder = |team: &[&u32]| -> Result<f64> {
            seen.push(team.iter().map(|&&g| g).collect());
            Ok(1.0)
        };
        let mut r = rng::stream(8, &[]);
        Coevolution::initialize(EaParams::default(), Counter, recorder, 6, Init::Random, 120, &mut r).unwrap();
        for s in 0..6 {
            let block = &seen[s * 20..(s + 1) * 20];
            for t in (0..6).filter(|&t| t != s) {
                assert!(block.iter().all(|team| team[t] == block[0][t]));
            }
        }
    }

    #[test]
    fn evaluator_failure_reports_ordinal() {
        let mut calls = 0;
        let failing = |_: &[&u32]| -> Result<f64> {
            calls += 1;
            if calls == 7 {
                Err(Error::InvalidMeasurement("boom".into()))
            } else {
                Ok(1.0)
            }
        };
        let mut r = rng::stream(9, &[]);
        let Err(err) = Coevolution::initialize(EaParams::default(), Counter, failing, 2, Init::Random, 100, &mut r) else {
            panic!("evaluation failure must abort initialization");
        };
        assert!(matches!(err, Error::Evaluation { ordinal: 7, .. }), "{err}");
    }

    fn cycle_cost(scheme: Scheme) -> usize {
        let model = NkcsModel::generate(NkcsConfig::chain6(2, 2, 1)).unwrap();
        let params = EaParams { scheme, ..EaParams::default() };
        let mut r = rng::stream(10, &[]);
        let mut run = Coevolution::initialize(params, BinaryOps { n_genes: 20 }, &model, 6, Init::Random, 10_000, &mut r).unwrap();
        let turns = if scheme == Scheme::Offspring { 1 } else { 6 };
        (0..turns).map(|_| run.step(&mut r).unwrap().unwrap()).sum()
    }

    #[test]
    fn cycle_costs() {
        assert_eq!(cycle_cost(Scheme::Best), 6);
        assert_eq!(cycle_cost(Scheme::BestRandom), 12);
        assert_eq!(cycle_cost(Scheme::Offspring), 1);
    }

    #[test]
    fn reevaluation_sweep_costs_every_other_member() {
        // new best exactly on the first offspring evaluation
        let mut n = 0;
        let eval = |_: &[&u32]| -> Result<f64> {
            n += 1;
            Ok(if n == 121 { 10.0 } else { 1.0 })
        };
        let params = EaParams { scheme: Scheme::Reevaluate, ..EaParams::default() };
        let mut r = rng::stream(11, &[]);
        let mut run = Coevolution::initialize(params, Counter, eval, 6, Init::Random, 10_000, &mut r).unwrap();
        assert_eq!(run.step(&mut r).unwrap(), Some(1 + 5 * 20));
        assert_eq!(run.step(&mut r).unwrap(), Some(1));
    }

    #[test]
    fn turns_that_do_not_fit_are_not_started() {
        let params = EaParams { scheme: Scheme::BestRandom, ..EaParams::default() };
        let mut r = rng::stream(12, &[]);
        let mut run = Coevolution::initialize(params, Counter, constant(1.0), 6, Init::Random, 125, &mut r).unwrap();
        run.run(&mut r).unwrap();
        assert_eq!(run.used(), 124);
    }

    #[test]
    fn budget_of_initialization_only() {
        let model = NkcsModel::generate(NkcsConfig::chain6(2, 2, 4)).unwrap();
        let mut a = rng::stream(13, &[]);
        let mut b = rng::stream(14, &[]);
        let trace = run_cga(&model, EaParams::default(), 120, &mut a, &mut b).unwrap();
        assert_eq!(trace.len(), 120);
        let best_init = trace.records.iter().map(|r| r.team_fitness).fold(f64::MIN, f64::max);
        assert_eq!(trace.best(), Some(best_init));
    }

    #[test]
    fn budget_below_initialization_is_rejected() {
        let mut r = rng::stream(15, &[]);
        let err = Coevolution::initialize(EaParams::default(), Counter, constant(1.0), 6, Init::Random, 119, &mut r);
        assert!(err.is_err());
    }

    #[test]
    fn trace_csv_columns() {
        let model = NkcsModel::generate(NkcsConfig::chain6(2, 2, 4)).unwrap();
        let mut a = rng::stream(16, &[]);
        let mut b = rng::stream(17, &[]);
        let trace = run_cga(&model, EaParams { scheme: Scheme::Offspring, ..EaParams::default() }, 122, &mut a, &mut b).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "eval_ordinal,species,team_fitness,best_so_far");
        assert_eq!(lines.len(), 123);
        assert!(lines[1].starts_with("1,0,"));
        assert!(lines[122].starts_with("122,,"));
    }
}
