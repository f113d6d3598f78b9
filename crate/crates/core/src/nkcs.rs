//! NKCS coevolutionary fitness landscapes.
//!
//! Each of `S` species owns a genome of `N` binary genes. Every gene depends
//! on `K` other genes of its own genome and on `C` genes of each of the `X`
//! species adjacent to it in the topology. The gene's fitness contribution is
//! looked up in an implicit table of `2^(K + X*C + 1)` rows, and a species'
//! fitness is the mean contribution over its genes.
//!
//! Tables are never stored for generated models: a row is produced on demand
//! by hashing `(seed, species, gene, context)` into `[0, 1)`. The
//! [`TableOracle::Materialized`] form exists for small fixtures and for
//! cross-checking the hash oracle.
//!
//! # Context layout
//!
//! The context of gene `g` in species `s` is an integer whose most
//! significant bit is the gene's own allele, followed by the `K` intra-linked
//! alleles in ascending gene index, followed by each neighbour species in
//! ascending species index contributing its `C` linked alleles in ascending
//! gene index. The least significant bit is the last inter-linked allele.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::rng::{self, mix64, unit_interval};

/// Widest context the hash oracle accepts.
pub const MAX_CONTEXT_BITS: usize = 64;
/// Widest context that [`NkcsModel::materialize`] will expand.
pub const MAX_MATERIALIZED_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    /// Species in a row; the two ends have one neighbour, the rest two.
    Chain,
    Ring,
    /// Every species interacts with every other species.
    Full,
}

impl Topology {
    pub fn neighbors(&self, n_species: usize) -> Vec<Vec<usize>> {
        (0..n_species)
            .map(|s| match self {
                Topology::Chain => {
                    let mut v = Vec::with_capacity(2);
                    if s > 0 {
                        v.push(s - 1);
                    }
                    if s + 1 < n_species {
                        v.push(s + 1);
                    }
                    v
                }
                Topology::Ring => {
                    let mut v = vec![(s + n_species - 1) % n_species, (s + 1) % n_species];
                    v.sort_unstable();
                    v.dedup();
                    v.retain(|&t| t != s);
                    v
                }
                Topology::Full => (0..n_species).filter(|&t| t != s).collect(),
            })
            .collect()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Chain => "chain",
            Topology::Ring => "ring",
            Topology::Full => "full",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Topology::Chain),
            "ring" => Ok(Topology::Ring),
            "full" => Ok(Topology::Full),
            _ => Err(Error::Unknown {
                kind: "topology",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NkcsConfig {
    pub n_genes: usize,
    pub k_intra: usize,
    pub c_inter: usize,
    pub n_species: usize,
    pub topology: Topology,
    pub seed: u64,
}

impl NkcsConfig {
    /// Six species in a chain with `N = 20`, the layout used throughout the
    /// NKCS experiments.
    pub fn chain6(k_intra: usize, c_inter: usize, seed: u64) -> Self {
        NkcsConfig {
            n_genes: 20,
            k_intra,
            c_inter,
            n_species: 6,
            topology: Topology::Chain,
            seed,
        }
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        self.topology.neighbors(self.n_species)
    }

    /// Bit width of a gene's context in `species`: `K + X*C + 1`.
    pub fn context_width(&self, species: usize) -> usize {
        let x = self.topology.neighbors(self.n_species)[species].len();
        self.k_intra + x * self.c_inter + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_genes == 0 {
            return bad("N must be at least 1".into());
        }
        if self.n_species == 0 {
            return bad("S must be at least 1".into());
        }
        if self.k_intra > self.n_genes - 1 {
            return bad(format!("K={} exceeds N-1={}", self.k_intra, self.n_genes - 1));
        }
        if self.c_inter > self.n_genes {
            return bad(format!("C={} exceeds N={}", self.c_inter, self.n_genes));
        }
        let widest = (0..self.n_species)
            .map(|s| self.context_width(s))
            .max()
            .unwrap_or(0);
        if widest > MAX_CONTEXT_BITS {
            return bad(format!(
                "context width {widest} exceeds {MAX_CONTEXT_BITS} bits"
            ));
        }
        Ok(())
    }

    pub fn to_kv(&self, cfg: &mut KvConfig) {
        cfg.set("n", self.n_genes);
        cfg.set("k", self.k_intra);
        cfg.set("c", self.c_inter);
        cfg.set("s", self.n_species);
        cfg.set("topology", &self.topology);
        cfg.set("seed", self.seed);
    }

    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let topology = cfg
            .get_str("topology")
            .map(str::parse)
            .transpose()?
            .unwrap_or(Topology::Chain);
        let config = NkcsConfig {
            n_genes: cfg.get_or("n", 20)?,
            k_intra: cfg.require("k")?,
            c_inter: cfg.require("c")?,
            n_species: cfg.get_or("s", 6)?,
            topology,
            seed: cfg.get_or("seed", 0)?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// An ordered sequence of binary alleles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryGenome(Vec<bool>);

impl BinaryGenome {
    pub fn new(bits: Vec<bool>) -> Self {
        BinaryGenome(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BinaryGenome(vec![false; len])
    }

    pub fn random<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BinaryGenome((0..len).map(|_| rng.random_bool(0.5)).collect())
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidConfig(format!("`{c}` is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BinaryGenome)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }
}

impl fmt::Display for BinaryGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Source of gene fitness values for a given context.
#[derive(Debug, Clone, PartialEq)]
pub enum TableOracle {
    /// Stable hash of `(seed, species, gene, context)` mapped into `[0, 1)`.
    Hashed { seed: u64 },
    /// Explicit tables indexed `[species][gene][context]`.
    Materialized(Vec<Vec<Vec<f64>>>),
    Constant(f64),
}

impl TableOracle {
    #[inline]
    pub fn value(&self, species: usize, gene: usize, context: u64) -> f64 {
        match self {
            TableOracle::Hashed { seed } => {
                let mut h = mix64(*seed);
                h = mix64(h ^ species as u64);
                h = mix64(h ^ gene as u64);
                h = mix64(h ^ context);
                unit_interval(h)
            }
            TableOracle::Materialized(t) => t[species][gene][context as usize],
            TableOracle::Constant(v) => *v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NkcsModel {
    config: NkcsConfig,
    neighbors: Vec<Vec<usize>>,
    /// `[species][gene]` -> K linked gene indices, ascending.
    intra_links: Vec<Vec<Vec<usize>>>,
    /// `[species][gene][neighbor position]` -> C linked gene indices of that
    /// neighbour, ascending. Neighbour positions follow `neighbors[species]`.
    inter_links: Vec<Vec<Vec<Vec<usize>>>>,
    oracle: TableOracle,
}

/// Label of the stream used to draw epistatic links.
const LINK_STREAM: &str = "nkcs-links";

impl NkcsModel {
    /// Draws links from a stream seeded by `config.seed` and uses the hash
    /// oracle keyed by the same seed.
    pub fn generate(config: NkcsConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_genes;
        let neighbors = config.neighbors();
        let mut rng = rng::stream(config.seed, &[rng::label(LINK_STREAM)]);
        let mut intra_links = Vec::with_capacity(config.n_species);
        let mut inter_links = Vec::with_capacity(config.n_species);
        for s in 0..config.n_species {
            let mut intra_s = Vec::with_capacity(n);
            let mut inter_s = Vec::with_capacity(n);
            for g in 0..n {
                // sample from the N-1 other genes, then skip over g
                let mut links: Vec<usize> = index::sample(&mut rng, n - 1, config.k_intra)
                    .into_iter()
                    .map(|i| if i >= g { i + 1 } else { i })
                    .collect();
                links.sort_unstable();
                intra_s.push(links);
                let per_neighbor = neighbors[s]
                    .iter()
                    .map(|_| {
                        let mut links = index::sample(&mut rng, n, config.c_inter).into_vec();
                        links.sort_unstable();
                        links
                    })
                    .collect();
                inter_s.push(per_neighbor);
            }
            intra_links.push(intra_s);
            inter_links.push(inter_s);
        }
        let oracle = TableOracle::Hashed { seed: config.seed };
        Ok(NkcsModel {
            config,
            neighbors,
            intra_links,
            inter_links,
            oracle,
        })
    }

    /// Assembles a model from explicit links and oracle, e.g. a hand-drawn
    /// fixture. Links are used in the order given.
    pub fn from_parts(
        config: NkcsConfig,
        intra_links: Vec<Vec<Vec<usize>>>,
        inter_links: Vec<Vec<Vec<Vec<usize>>>>,
        oracle: TableOracle,
    ) -> Result<Self> {
        config.validate()?;
        let neighbors = config.neighbors();
        let (n, s_count) = (config.n_genes, config.n_species);
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if intra_links.len() != s_count || inter_links.len() != s_count {
            return bad("link lists must cover every species".into());
        }
        for s in 0..s_count {
            if intra_links[s].len() != n || inter_links[s].len() != n {
                return bad(format!("species {s}: link lists must cover every gene"));
            }
            for g in 0..n {
                let intra = &intra_links[s][g];
                if intra.len() != config.k_intra
                    || intra.iter().any(|&i| i >= n || i == g)
                    || has_duplicates(intra)
                {
                    return bad(format!("species {s} gene {g}: bad intra links {intra:?}"));
                }
                let inter = &inter_links[s][g];
                if inter.len() != neighbors[s].len() {
                    return bad(format!("species {s} gene {g}: one inter list per neighbour"));
                }
                for links in inter {
                    if links.len() != config.c_inter
                        || links.iter().any(|&i| i >= n)
                        || has_duplicates(links)
                    {
                        return bad(format!("species {s} gene {g}: bad inter links {links:?}"));
                    }
                }
            }
        }
        if let TableOracle::Materialized(tables) = &oracle {
            for s in 0..s_count {
                let rows = 1usize << config.context_width(s);
                if tables.len() != s_count
                    || tables[s].len() != n
                    || tables[s].iter().any(|t| t.len() != rows)
                {
                    return bad(format!("species {s}: every table needs {rows} rows"));
                }
            }
        }
        Ok(NkcsModel {
            config,
            neighbors,
            intra_links,
            inter_links,
            oracle,
        })
    }

    /// Replaces the fitness oracle, keeping the links.
    pub fn with_oracle(mut self, oracle: TableOracle) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn config(&self) -> &NkcsConfig {
        &self.config
    }

    pub fn oracle(&self) -> &TableOracle {
        &self.oracle
    }

    pub fn neighbors(&self, species: usize) -> &[usize] {
        &self.neighbors[species]
    }

    pub fn intra_links(&self, species: usize, gene: usize) -> &[usize] {
        &self.intra_links[species][gene]
    }

    /// Linked genes of the `pos`-th neighbour of `species`.
    pub fn inter_links(&self, species: usize, gene: usize, pos: usize) -> &[usize] {
        &self.inter_links[species][gene][pos]
    }

    pub fn context_width(&self, species: usize) -> usize {
        self.config.context_width(species)
    }

    fn check_team(&self, team: &[&BinaryGenome]) -> Result<()> {
        if team.len() != self.config.n_species {
            return Err(Error::Dimension {
                expected: self.config.n_species,
                got: team.len(),
            });
        }
        for g in team {
            if g.len() != self.config.n_genes {
                return Err(Error::Dimension {
                    expected: self.config.n_genes,
                    got: g.len(),
                });
            }
        }
        Ok(())
    }

    /// Context integer for `gene` of `species` (layout in the module docs).
    pub fn context(&self, species: usize, gene: usize, team: &[&BinaryGenome]) -> u64 {
        let own = team[species];
        let mut ctx = own.get(gene) as u64;
        for &i in &self.intra_links[species][gene] {
            ctx = (ctx << 1) | own.get(i) as u64;
        }
        for (pos, &t) in self.neighbors[species].iter().enumerate() {
            let other = team[t];
            for &i in &self.inter_links[species][gene][pos] {
                ctx = (ctx << 1) | other.get(i) as u64;
            }
        }
        ctx
    }

    /// Mean gene fitness of `species` within `team`; lies in `[0, 1]`.
    pub fn species_fitness(&self, species: usize, team: &[&BinaryGenome]) -> Result<f64> {
        self.check_team(team)?;
        if species >= self.config.n_species {
            return Err(Error::Dimension {
                expected: self.config.n_species,
                got: species,
            });
        }
        Ok(self.species_fitness_unchecked(species, team))
    }

    fn species_fitness_unchecked(&self, species: usize, team: &[&BinaryGenome]) -> f64 {
        let n = self.config.n_genes;
        let sum: f64 = (0..n)
            .map(|g| self.oracle.value(species, g, self.context(species, g, team)))
            .sum();
        sum / n as f64
    }

    /// Sum of all species' fitnesses; lies in `[0, S]`.
    pub fn team_fitness(&self, team: &[&BinaryGenome]) -> Result<f64> {
        self.check_team(team)?;
        Ok((0..self.config.n_species)
            .map(|s| self.species_fitness_unchecked(s, team))
            .sum())
    }

    /// Expands every gene table. Fails when a context is wider than
    /// [`MAX_MATERIALIZED_BITS`].
    pub fn materialize(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        (0..self.config.n_species)
            .map(|s| {
                let width = self.context_width(s);
                if width > MAX_MATERIALIZED_BITS {
                    return Err(Error::InvalidConfig(format!(
                        "species {s}: {width}-bit context too wide to materialize"
                    )));
                }
                Ok((0..self.config.n_genes)
                    .map(|g| {
                        (0..1u64 << width)
                            .map(|ctx| self.oracle.value(s, g, ctx))
                            .collect()
                    })
                    .collect())
            })
            .collect()
    }

    /// Names of the alleles forming a gene's context, most significant first,
    /// as `s<species>n<gene>` with 1-based indices.
    pub fn context_inputs(&self, species: usize, gene: usize) -> Vec<String> {
        let name = |s: usize, g: usize| format!("s{}n{}", s + 1, g + 1);
        let mut out = vec![name(species, gene)];
        out.extend(self.intra_links[species][gene].iter().map(|&i| name(species, i)));
        for (pos, &t) in self.neighbors[species].iter().enumerate() {
            out.extend(self.inter_links[species][gene][pos].iter().map(|&i| name(t, i)));
        }
        out
    }

    /// Writes every table row as CSV: `species,gene,inputs,pattern,fitness`.
    /// Species and gene are 0-based; `pattern` lists the context bits in the
    /// same order as `inputs`.
    pub fn write_tables_csv<W: Write>(&self, out: W) -> Result<()> {
        let tables = self.materialize()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["species", "gene", "inputs", "pattern", "fitness"])?;
        for (s, genes) in tables.iter().enumerate() {
            let width = self.context_width(s);
            for (g, rows) in genes.iter().enumerate() {
                let inputs = self.context_inputs(s, g).join(" ");
                for (ctx, v) in rows.iter().enumerate() {
                    let pattern = format!("{ctx:0width$b}");
                    w.write_record([
                        s.to_string(),
                        g.to_string(),
                        inputs.clone(),
                        pattern,
                        format!("{v:.17}"),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<tables>", e))?;
        Ok(())
    }
}

fn has_duplicates(v: &[usize]) -> bool {
    v.iter()
        .enumerate()
        .any(|(i, a)| v[i + 1..].contains(a))
}

/// The two-species, three-gene landscape drawn in the NKCS model figure,
/// with species `s1`'s tables as printed. Species `s2`'s links follow the
/// figure; its tables are not printed there, so they are filled from the
/// hash oracle with seed 0.
pub fn worked_example() -> NkcsModel {
    let config = NkcsConfig {
        n_genes: 3,
        k_intra: 1,
        c_inter: 1,
        n_species: 2,
        topology: Topology::Chain,
        seed: 0,
    };
    // s1: n1 <- n3, n2 <- n1, n3 <- n2; s2: n1 <- n2, n2 <- n1, n3 <- n2
    let intra = vec![
        vec![vec![2], vec![0], vec![1]],
        vec![vec![1], vec![0], vec![1]],
    ];
    // s1: n1 <- s2n1, n2 <- s2n3, n3 <- s2n3; s2: n1 <- s1n2, n2 <- s1n1, n3 <- s1n3
    let inter = vec![
        vec![vec![vec![0]], vec![vec![2]], vec![vec![2]]],
        vec![vec![vec![1]], vec![vec![0]], vec![vec![2]]],
    ];
    let s1 = vec![
        vec![0.57, 0.12, 0.09, 0.16, 0.44, 0.66, 0.33, 0.44],
        vec![0.11, 0.32, 0.68, 0.30, 0.19, 0.77, 0.21, 0.23],
        vec![0.75, 0.42, 0.25, 0.28, 0.13, 0.58, 0.66, 0.91],
    ];
    let filler = TableOracle::Hashed { seed: 0 };
    let s2 = (0..3)
        .map(|g| (0..8).map(|ctx| filler.value(1, g, ctx)).collect())
        .collect();
    NkcsModel::from_parts(config, intra, inter, TableOracle::Materialized(vec![s1, s2]))
        .expect("fixture is well formed")
}

/// Uniformly random team for `model`.
pub fn random_team<R: rand::Rng + ?Sized>(model: &NkcsModel, rng: &mut R) -> Vec<BinaryGenome> {
    let c = model.config();
    (0..c.n_species)
        .map(|_| BinaryGenome::random(c.n_genes, rng))
        .collect()
}
