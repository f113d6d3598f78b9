//! Per-species MLP surrogates and the surrogate-assisted coevolutionary GA.
//!
//! After a warm-up of plain round-robin turns, every turn of species `s`
//! trains a freshly initialized network on `s`'s archive, screens `lambda_m`
//! candidate offspring with it, and spends one real evaluation on the
//! candidate with the highest prediction. Predictions never touch the trace
//! or any individual's fitness.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::evolution::{BinaryOps, Coevolution, EaParams, Evaluator, Init, RunTrace, Scheme, Variation};
use crate::nkcs::NkcsModel;
use crate::rng::Rng;

/// Half-width of the uniform weight initialization range.
pub const INIT_RANGE: f64 = 0.5;

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Anything that can score an encoded genome.
pub trait FitnessModel {
    fn predict_encoded(&self, input: &[f64]) -> f64;
}

/// Fully connected input-hidden-output perceptron with logistic units.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_width: usize,
    hidden_width: usize,
    /// Row-major `hidden x input`.
    w_hidden: Vec<f64>,
    b_hidden: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

impl Mlp {
    /// Weights drawn i.i.d. from `U(-0.5, 0.5)` in parameter order.
    pub fn init(input_width: usize, hidden_width: usize, rng: &mut Rng) -> Result<Self> {
        if input_width == 0 || hidden_width == 0 {
            return Err(Error::InvalidParams("MLP layer widths must be at least 1".into()));
        }
        let mut draw = || rng.random_range(-INIT_RANGE..INIT_RANGE);
        let w_hidden = (0..input_width * hidden_width).map(|_| draw()).collect();
        let b_hidden = (0..hidden_width).map(|_| draw()).collect();
        let w_out = (0..hidden_width).map(|_| draw()).collect();
        let b_out = draw();
        Ok(Mlp {
            input_width,
            hidden_width,
            w_hidden,
            b_hidden,
            w_out,
            b_out,
        })
    }

    pub fn zeros(input_width: usize, hidden_width: usize) -> Self {
        Mlp {
            input_width,
            hidden_width,
            w_hidden: vec![0.0; input_width * hidden_width],
            b_hidden: vec![0.0; hidden_width],
            w_out: vec![0.0; hidden_width],
            b_out: 0.0,
        }
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn param_count(&self) -> usize {
        self.w_hidden.len() + self.b_hidden.len() + self.w_out.len() + 1
    }

    /// Parameters flattened as `w_hidden, b_hidden, w_out, b_out`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.w_hidden);
        p.extend_from_slice(&self.b_hidden);
        p.extend_from_slice(&self.w_out);
        p.push(self.b_out);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                got: p.len(),
            });
        }
        let (wh, rest) = p.split_at(self.w_hidden.len());
        let (bh, rest) = rest.split_at(self.hidden_width);
        let (wo, bo) = rest.split_at(self.hidden_width);
        self.w_hidden.copy_from_slice(wh);
        self.b_hidden.copy_from_slice(bh);
        self.w_out.copy_from_slice(wo);
        self.b_out = bo[0];
        Ok(())
    }

    fn hidden(&self, input: &[f64], out: &mut [f64]) {
        for (j, h) in out.iter_mut().enumerate() {
            let row = &self.w_hidden[j * self.input_width..(j + 1) * self.input_width];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.b_hidden[j];
            *h = logistic(z);
        }
    }

    fn output(&self, hidden: &[f64]) -> f64 {
        let z: f64 = self.w_out.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>() + self.b_out;
        logistic(z)
    }

    /// Forward pass; the result lies in `(0, 1)`.
    pub fn predict(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.input_width {
            return Err(Error::Dimension {
                expected: self.input_width,
                got: input.len(),
            });
        }
        Ok(self.predict_encoded(input))
    }

    /// Squared-error loss `0.5 * (y - target)^2`.
    pub fn loss(&self, input: &[f64], target: f64) -> f64 {
        let y = self.predict_encoded(input);
        0.5 * (y - target) * (y - target)
    }

    /// Gradient of [`Mlp::loss`] in [`Mlp::params`] order.
    pub fn gradient(&self, input: &[f64], target: f64) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden_width];
        self.hidden(input, &mut h);
        let y = self.output(&h);
        let delta_out = (y - target) * y * (1.0 - y);
        let mut g = vec![0.0; self.param_count()];
        let (gwh, rest) = g.split_at_mut(self.w_hidden.len());
        let (gbh, rest) = rest.split_at_mut(self.hidden_width);
        let (gwo, gbo) = rest.split_at_mut(self.hidden_width);
        for j in 0..self.hidden_width {
            gwo[j] = delta_out * h[j];
            let delta = delta_out * self.w_out[j] * h[j] * (1.0 - h[j]);
            gbh[j] = delta;
            for (k, x) in input.iter().enumerate() {
                gwh[j * self.input_width + k] = delta * x;
            }
        }
        gbo[0] = delta_out;
        g
    }

    /// One online gradient-descent update.
    fn sgd_step(&mut self, input: &[f64], target: f64, rate: f64, h: &mut [f64]) {
        self.hidden(input, h);
        let y = self.output(h);
        let delta_out = (y - target) * y * (1.0 - y);
        for j in 0..self.hidden_width {
            let delta = delta_out * self.w_out[j] * h[j] * (1.0 - h[j]);
            self.w_out[j] -= rate * delta_out * h[j];
            self.b_hidden[j] -= rate * delta;
            let row = &mut self.w_hidden[j * self.input_width..(j + 1) * self.input_width];
            for (w, x) in row.iter_mut().zip(input) {
                *w -= rate * delta * x;
            }
        }
        self.b_out -= rate * delta_out;
    }

    /// `epochs` passes of online backpropagation, each visiting every sample
    /// once in a fresh random order. Returns the number of updates made.
    pub fn train(&mut self, samples: &[Sample], epochs: usize, rate: f64, rng: &mut Rng) -> Result<usize> {
        if samples.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if let Some(s) = samples.iter().find(|s| s.input.len() != self.input_width) {
            return Err(Error::Dimension {
                expected: self.input_width,
                got: s.input.len(),
            });
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut h = vec![0.0; self.hidden_width];
        let mut updates = 0;
        for _ in 0..epochs {
            order.shuffle(rng);
            for &i in &order {
                self.sgd_step(&samples[i].input, samples[i].target, rate, &mut h);
                updates += 1;
            }
        }
        Ok(updates)
    }
}

impl FitnessModel for Mlp {
    fn predict_encoded(&self, input: &[f64]) -> f64 {
        // hidden widths are small; a stack buffer avoids an allocation per call
        let mut buf = [0.0f64; 64];
        if self.hidden_width <= buf.len() {
            let h = &mut buf[..self.hidden_width];
            self.hidden(input, h);
            self.output(h)
        } else {
            let mut h = vec![0.0; self.hidden_width];
            self.hidden(input, &mut h);
            self.output(&h)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: f64,
}

/// Which surrogate-assisted variant drives the turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Own-genome model, `lambda_m` mutants of one tournament parent.
    Basic,
    /// Model sees the whole team (`N * S` inputs).
    AllPartners,
    /// `lambda_m` tournaments, one mutant each.
    Parents,
    /// Like `Basic`, trained on a window of recent data.
    Windowed,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Basic, Variant::AllPartners, Variant::Parents, Variant::Windowed];

    pub fn suffix(self) -> &'static str {
        match self {
            Variant::Basic => "b",
            Variant::AllPartners => "a",
            Variant::Parents => "p",
            Variant::Windowed => "bw",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" => Ok(Variant::Basic),
            "a" => Ok(Variant::AllPartners),
            "p" => Ok(Variant::Parents),
            "bw" => Ok(Variant::Windowed),
            _ => Err(Error::Unknown {
                kind: "surrogate variant",
                name: s.to_string(),
            }),
        }
    }
}

/// Training data used by [`Variant::Windowed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// The most recent `window` archive entries.
    Archive,
    /// The current population members with their assigned fitness.
    Population,
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "archive" => Ok(WindowMode::Archive),
            "population" => Ok(WindowMode::Population),
            _ => Err(Error::Unknown {
                kind: "window mode",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowMode::Archive => "archive",
            WindowMode::Population => "population",
        })
    }
}

/// Maps team fitness onto the `[0, 1]` output range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetScale {
    /// Divide by a known upper bound (the species count for NKCS).
    Divide(f64),
    /// Min-max over the training set; used when fitness is unbounded.
    MinMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    pub lambda_m: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub variant: Variant,
    pub window: usize,
    pub window_mode: WindowMode,
    pub target_scale: TargetScale,
}

impl SurrogateParams {
    /// Settings of the NKCS experiments for `n_species` species.
    pub fn nkcs(variant: Variant, n_species: usize) -> Self {
        SurrogateParams {
            lambda_m: 1000,
            epochs: 50,
            learning_rate: 0.1,
            hidden: 10,
            variant,
            window: 20,
            window_mode: WindowMode::Archive,
            target_scale: TargetScale::Divide(n_species as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.lambda_m == 0 {
            return bad("lambda_m must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden width must be at least 1");
        }
        if let TargetScale::Divide(d) = self.target_scale {
            if d <= 0.0 {
                return bad("target divisor must be positive");
            }
        }
        Ok(())
    }

    /// Model input width for genomes of `genome_width` encoded values.
    pub fn input_width(&self, genome_width: usize, n_species: usize) -> usize {
        match self.variant {
            Variant::AllPartners => genome_width * n_species,
            _ => genome_width,
        }
    }
}

fn scale_targets(raw: &[f64], scale: TargetScale) -> Vec<f64> {
    match scale {
        TargetScale::Divide(d) => raw.iter().map(|t| (t / d).clamp(0.0, 1.0)).collect(),
        TargetScale::MinMax => {
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                raw.iter().map(|t| (t - lo) / (hi - lo)).collect()
            } else {
                vec![0.5; raw.len()]
            }
        }
    }
}

/// Training samples for `species` under the configured variant.
pub fn build_training_set<G, V, E>(run: &Coevolution<G, V, E>, species: usize, params: &SurrogateParams) -> Vec<Sample>
where
    G: Clone,
    V: Variation<G>,
    E: Evaluator<G>,
{
    let ops = run.ops();
    let pop = &run.populations()[species];
    let (inputs, raw): (Vec<Vec<f64>>, Vec<f64>) = match (params.variant, params.window_mode) {
        (Variant::Windowed, WindowMode::Population) => pop
            .members
            .iter()
            .filter_map(|m| {
                m.fitness.map(|f| {
                    let mut x = Vec::with_capacity(ops.encoded_width());
                    ops.encode(&m.genome, &mut x);
                    (x, f)
                })
            })
            .unzip(),
        (variant, _) => {
            let skip = match variant {
                Variant::Windowed => pop.archive.len().saturating_sub(params.window),
                _ => 0,
            };
            pop.archive[skip..]
                .iter()
                .map(|e| {
                    let mut x = Vec::new();
                    if variant == Variant::AllPartners {
                        for g in &e.team {
                            ops.encode(g, &mut x);
                        }
                    } else {
                        ops.encode(e.genome(), &mut x);
                    }
                    (x, e.team_fitness)
                })
                .unzip()
        }
    };
    inputs
        .into_iter()
        .zip(scale_targets(&raw, params.target_scale))
        .map(|(input, target)| Sample { input, target })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<G> {
    pub genome: G,
    /// Position among the generated candidates.
    pub index: usize,
    pub predicted: f64,
}

/// Generates `lambda_m` candidates for `species` and returns the one the
/// model rates highest (earliest on ties).
pub fn propose_offspring<G, V, E, M>(
    run: &Coevolution<G, V, E>,
    species: usize,
    model: &M,
    params: &SurrogateParams,
    rng: &mut Rng,
) -> Proposal<G>
where
    G: Clone,
    V: Variation<G>,
    E: Evaluator<G>,
    M: FitnessModel + ?Sized,
{
    let ops = run.ops();
    let pop = &run.populations()[species];
    let ea = run.params();
    let width = ops.encoded_width();

    // team context for whole-team models: elites, own slot overwritten
    let mut input = Vec::with_capacity(params.input_width(width, run.n_species()));
    let own_offset = if params.variant == Variant::AllPartners {
        for (s, p) in run.populations().iter().enumerate() {
            if s == species {
                input.extend(std::iter::repeat_n(0.0, width));
            } else {
                ops.encode(&p.elite().genome, &mut input);
            }
        }
        species * width
    } else {
        input.resize(width, 0.0);
        0
    };
    let mut scratch = Vec::with_capacity(width);
    let mut score = |g: &G| {
        scratch.clear();
        ops.encode(g, &mut scratch);
        input[own_offset..own_offset + width].copy_from_slice(&scratch);
        model.predict_encoded(&input)
    };

    let fixed_parent = match params.variant {
        Variant::Parents => None,
        _ => Some(pop.tournament(ea.tournament_size, rng)),
    };
    let mut best: Option<Proposal<G>> = None;
    for index in 0..params.lambda_m {
        let candidate = match fixed_parent {
            Some(p) => ops.mutate(&pop.members[p].genome, ea.mutation_rate, rng),
            None => run.breed(species, rng),
        };
        let predicted = score(&candidate);
        if best.as_ref().is_none_or(|b| predicted > b.predicted) {
            best = Some(Proposal {
                genome: candidate,
                index,
                predicted,
            });
        }
    }
    best.expect("lambda_m is at least 1")
}

/// One surrogate-assisted turn for the next species in round-robin order.
/// Consumes exactly one real evaluation.
pub fn scga_turn<G, V, E>(run: &mut Coevolution<G, V, E>, params: &SurrogateParams, rng: &mut Rng) -> Result<f64>
where
    G: Clone,
    V: Variation<G>,
    E: Evaluator<G>,
{
    let s = run.next_species();
    let samples = build_training_set(run, s, params);
    let width = params.input_width(run.ops().encoded_width(), run.n_species());
    let mut mlp = Mlp::init(width, params.hidden, rng)?;
    mlp.train(&samples, params.epochs, params.learning_rate, rng)?;
    let proposal = propose_offspring(run, s, &mlp, params, rng);
    let f = run.evaluate_with_elites(s, proposal.genome, rng)?;
    run.advance_turn();
    Ok(f)
}

/// Plain round-robin turns until `warmup` evaluations are used, then
/// surrogate-assisted turns until the run's budget is spent.
pub fn run_surrogate_phase<G, V, E>(
    run: &mut Coevolution<G, V, E>,
    params: &SurrogateParams,
    warmup: usize,
    rng: &mut Rng,
) -> Result<()>
where
    G: Clone,
    V: Variation<G>,
    E: Evaluator<G>,
{
    params.validate()?;
    if run.params().scheme != Scheme::Best {
        return Err(Error::InvalidParams(
            "surrogate-assisted runs partner with elites; scheme must be `b`".into(),
        ));
    }
    let budget = run.budget();
    if warmup > run.used() {
        run.set_budget(warmup.min(budget));
        run.run(rng)?;
        run.set_budget(budget);
    }
    while run.remaining() >= 1 {
        scga_turn(run, params, rng)?;
    }
    Ok(())
}

/// Surrogate-assisted run on an NKCS model. `warmup` must cover the
/// initialization (`S * P` evaluations).
pub fn run_scga(
    model: &NkcsModel,
    ea: EaParams,
    params: &SurrogateParams,
    budget: usize,
    warmup: usize,
    init_rng: &mut Rng,
    rng: &mut Rng,
) -> Result<RunTrace> {
    let s = model.config().n_species;
    if warmup < s * ea.pop_size {
        return Err(Error::InvalidParams(format!(
            "warm-up of {warmup} evaluations does not cover the {} initial evaluations",
            s * ea.pop_size
        )));
    }
    let ops = BinaryOps {
        n_genes: model.config().n_genes,
    };
    let mut run = Coevolution::initialize(ea, ops, model, s, Init::Random, budget, init_rng)?;
    run_surrogate_phase(&mut run, params, warmup, rng)?;
    Ok(run.into_trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nkcs::NkcsConfig;
    use crate::rng;

    #[test]
    fn parameter_counts() {
        let mut r = rng::stream(1, &[]);
        assert_eq!(Mlp::init(20, 10, &mut r).unwrap().param_count(), 221);
        assert_eq!(Mlp::init(120, 10, &mut r).unwrap().param_count(), 1221);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::init(20, 10, &mut rng::stream(2, &[])).unwrap();
        let b = Mlp::init(20, 10, &mut rng::stream(2, &[])).unwrap();
        assert_eq!(a, b);
        assert!(a.params().iter().all(|w| w.abs() <= INIT_RANGE));
    }

    #[test]
    fn zero_network_predicts_half() {
        let m = Mlp::zeros(5, 3);
        assert_eq!(m.predict(&[1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(m.predict(&[1.0]), Err(Error::Dimension { expected: 5, got: 1 })));
    }

    #[test]
    fn set_params_round_trips() {
        let mut r = rng::stream(3, &[]);
        let a = Mlp::init(4, 3, &mut r).unwrap();
        let mut b = Mlp::zeros(4, 3);
        b.set_params(&a.params()).unwrap();
        assert_eq!(a, b);
        assert!(b.set_params(&[0.0; 3]).is_err());
    }

    #[test]
    fn single_sample_fit() {
        let mut r = rng::stream(4, &[]);
        let mut m = Mlp::init(6, 10, &mut r).unwrap();
        let x = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        m.train(&[Sample { input: x.clone(), target: 0.5 }], 2000, 0.1, &mut r).unwrap();
        assert!((m.predict(&x).unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn update_count_and_empty_set() {
        let mut r = rng::stream(5, &[]);
        let mut m = Mlp::init(3, 4, &mut r).unwrap();
        let samples: Vec<Sample> = (0..60)
            .map(|i| Sample { input: vec![(i % 2) as f64, 0.5, 1.0], target: 0.3 })
            .collect();
        assert_eq!(m.train(&samples, 50, 0.1, &mut r).unwrap(), 3000);
        assert!(matches!(m.train(&[], 5, 0.1, &mut r), Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn separable_toy_set_keeps_order() {
        let mut r = rng::stream(6, &[]);
        let mut m = Mlp::init(2, 10, &mut r).unwrap();
        let data = [([0.0, 0.0], 0.1), ([0.0, 1.0], 0.4), ([1.0, 0.0], 0.6), ([1.0, 1.0], 0.9)];
        let samples: Vec<Sample> = data.iter().map(|(x, t)| Sample { input: x.to_vec(), target: *t }).collect();
        m.train(&samples, 5000, 0.5, &mut r).unwrap();
        let preds: Vec<f64> = data.iter().map(|(x, _)| m.predict(x).unwrap()).collect();
        assert!(preds.windows(2).all(|w| w[0] < w[1]), "{preds:?}");
    }

    #[test]
    fn min_max_targets() {
        assert_eq!(scale_targets(&[2.0, 4.0, 3.0], TargetScale::MinMax), vec![0.0, 1.0, 0.5]);
        assert_eq!(scale_targets(&[2.0, 2.0], TargetScale::MinMax), vec![0.5, 0.5]);
        assert_eq!(scale_targets(&[3.0, 6.0], TargetScale::Divide(6.0)), vec![0.5, 1.0]);
    }

    fn nkcs_run(seed: u64, variant: Variant) -> (NkcsModel, SurrogateParams) {
        let model = NkcsModel::generate(NkcsConfig::chain6(2, 2, seed)).unwrap();
        (model, SurrogateParams::nkcs(variant, 6))
    }

    #[test]
    fn training_set_shapes() {
        let (model, mut params) = nkcs_run(7, Variant::Basic);
        let mut r = rng::stream(7, &[]);
        let mut run = Coevolution::initialize(
            EaParams::default(), BinaryOps { n_genes: 20 }, &model, 6, Init::Random, 10_000, &mut r,
        ).unwrap();
        let set = build_training_set(&run, 2, &params);
        assert_eq!(set.len(), 20);
        assert!(set.iter().all(|s| s.input.len() == 20 && (0.0..=1.0).contains(&s.target)));

        params.variant = Variant::AllPartners;
        let set = build_training_set(&run, 2, &params);
        assert!(set.iter().all(|s| s.input.len() == 120));

        // 40 more turns for species 0 via round-robin: 60 archived in total
        run.set_budget(120 + 6 * 40);
        run.run(&mut r).unwrap();
        params.variant = Variant::Windowed;
        let set = build_training_set(&run, 0, &params);
        let archive = &run.populations()[0].archive;
        assert_eq!(archive.len(), 60);
        let mut expected = Vec::new();
        for e in &archive[40..] {
            let mut x = Vec::new();
            run.ops().encode(e.genome(), &mut x);
            expected.push(x);
        }
        assert_eq!(set.iter().map(|s| s.input.clone()).collect::<Vec<_>>(), expected);
        assert!(archive.windows(2).all(|w| w[0].ordinal < w[1].ordinal));

        params.window_mode = WindowMode::Population;
        assert_eq!(build_training_set(&run, 0, &params).len(), 20);
    }

    struct Constant;
    impl FitnessModel for Constant {
        fn predict_encoded(&self, _: &[f64]) -> f64 {
            0.25
        }
    }

    #[test]
    fn ties_go_to_first_candidate() {
        let (model, params) = nkcs_run(8, Variant::Basic);
        let mut r = rng::stream(8, &[]);
        let run = Coevolution::initialize(
            EaParams::default(), BinaryOps { n_genes: 20 }, &model, 6, Init::Random, 1000, &mut r,
        ).unwrap();
        let p = propose_offspring(&run, 0, &Constant, &params, &mut r);
        assert_eq!(p.index, 0);
    }

    #[test]
    fn single_candidate_matches_plain_breeding() {
        let (model, mut params) = nkcs_run(9, Variant::Parents);
        params.lambda_m = 1;
        let mut r = rng::stream(9, &[]);
        let run = Coevolution::initialize(
            EaParams::default(), BinaryOps { n_genes: 20 }, &model, 6, Init::Random, 1000, &mut r,
        ).unwrap();
        let mut a = r.clone();
        let mut b = r.clone();
        let p = propose_offspring(&run, 3, &Constant, &params, &mut a);
        assert_eq!(p.genome, run.breed(3, &mut b));
        params.variant = Variant::Basic;
        let mut a = r.clone();
        let mut b = r.clone();
        let p = propose_offspring(&run, 3, &Constant, &params, &mut a);
        assert_eq!(p.genome, run.breed(3, &mut b));
    }

    #[test]
    fn surrogate_accounting() {
        let (model, mut params) = nkcs_run(10, Variant::Basic);
        params.lambda_m = 20;
        params.epochs = 2;
        let trace = run_scga(&model, EaParams::default(), &params, 480, 360, &mut rng::stream(1, &[]), &mut rng::stream(2, &[])).unwrap();
        assert_eq!(trace.len(), 480);
        assert!(run_scga(&model, EaParams::default(), &params, 480, 100, &mut rng::stream(1, &[]), &mut rng::stream(2, &[])).is_err());
    }

    #[test]
    fn round_robin_continues_through_surrogate_turns() {
        let (model, mut params) = nkcs_run(11, Variant::Basic);
        params.lambda_m = 5;
        params.epochs = 1;
        let mut r = rng::stream(11, &[]);
        let mut run = Coevolution::initialize(
            EaParams::default(), BinaryOps { n_genes: 20 }, &model, 6, Init::Random, 120 + 14, &mut r,
        ).unwrap();
        run_surrogate_phase(&mut run, &params, 126, &mut r).unwrap();
        let species: Vec<usize> = run.trace().records[120..].iter().map(|t| t.species.unwrap()).collect();
        assert_eq!(species, vec![0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5, 0, 1]);
    }
}
