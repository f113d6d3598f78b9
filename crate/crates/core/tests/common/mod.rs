#![allow(dead_code)]

use std::collections::HashMap;

use scgalab::nkcs::{BinaryGenome, NkcsModel};
use scgalab::vawt::Shell;

/// Gene table lookups with the context assembled independently of the
/// library: own allele first, then intra links, then each neighbour's links.
pub fn table_fitness(model: &NkcsModel, species: usize, team: &[&BinaryGenome]) -> f64 {
    let n = model.config().n_genes;
    let mut total = 0.0;
    for g in 0..n {
        let mut bits = vec![team[species].get(g)];
        bits.extend(model.intra_links(species, g).iter().map(|&i| team[species].get(i)));
        let mut neighbours = model.neighbors(species).to_vec();
        neighbours.sort_unstable();
        for (pos, &t) in neighbours.iter().enumerate() {
            bits.extend(model.inter_links(species, g, pos).iter().map(|&i| team[t].get(i)));
        }
        let ctx = bits.iter().fold(0u64, |acc, &b| acc * 2 + b as u64);
        total += model.oracle().value(species, g, ctx);
    }
    total / n as f64
}

pub fn genome_from_index(index: usize, n: usize) -> BinaryGenome {
    BinaryGenome::new((0..n).map(|i| index >> (n - 1 - i) & 1 == 1).collect())
}

/// Global optimum of a chain landscape by enumerating every team.
/// Only meant for tiny instances (`S * N <= 24`).
pub fn exhaustive_optimum(model: &NkcsModel) -> f64 {
    let cfg = model.config();
    let (n, s) = (cfg.n_genes, cfg.n_species);
    assert!(n * s <= 24, "instance too large to enumerate");
    let m = 1usize << n;
    let genomes: Vec<BinaryGenome> = (0..m).map(|i| genome_from_index(i, n)).collect();
    let zero = BinaryGenome::zeros(n);
    // table[s][own][left][right], neighbours outside the chain held at zero
    let tables: Vec<Vec<f64>> = (0..s)
        .map(|sp| {
            let mut t = vec![0.0; m * m * m];
            for own in 0..m {
                for left in 0..m {
                    for right in 0..m {
                        if (sp == 0 && left > 0) || (sp == s - 1 && right > 0) {
                            continue;
                        }
                        let mut team = vec![&zero; s];
                        team[sp] = &genomes[own];
                        if sp > 0 {
                            team[sp - 1] = &genomes[left];
                        }
                        if sp + 1 < s {
                            team[sp + 1] = &genomes[right];
                        }
                        t[(own * m + left) * m + right] = table_fitness(model, sp, &team);
                    }
                }
            }
            t
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; s];
    let total = m.pow(s as u32);
    for code in 0..total {
        let mut c = code;
        for slot in idx.iter_mut().rev() {
            *slot = c % m;
            c /= m;
        }
        let mut f = 0.0;
        for sp in 0..s {
            let left = if sp > 0 { idx[sp - 1] } else { 0 };
            let right = if sp + 1 < s { idx[sp + 1] } else { 0 };
            f += tables[sp][(idx[sp] * m + left) * m + right];
        }
        if f > best {
            best = f;
        }
    }
    best
}

/// Every undirected edge used by exactly two triangles, once in each
/// direction.
pub fn is_watertight(shell: &Shell) -> bool {
    let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
    for t in &shell.triangles {
        for k in 0..3 {
            *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &count)| count == 1 && directed.get(&(b, a)) == Some(&1))
}

/// Independent cubic Bernstein evaluation.
pub fn bernstein3(c: [f64; 4], t: f64) -> f64 {
    let binom = [1.0, 3.0, 3.0, 1.0];
    (0..4)
        .map(|i| binom[i] * t.powi(i as i32) * (1.0 - t).powi(3 - i as i32) * c[i])
        .sum()
}

pub fn bernstein2(p: [[f64; 2]; 3], t: f64) -> [f64; 2] {
    let w = [(1.0 - t).powi(2), 2.0 * t * (1.0 - t), t.powi(2)];
    [
        (0..3).map(|i| w[i] * p[i][0]).sum(),
        (0..3).map(|i| w[i] * p[i][1]).sum(),
    ]
}

/// `KE = (1/2) * (1/2) m r^2 * (2 pi rpm / 60)^2`, bench units in.
pub fn hand_ke(mass_g: f64, radius_mm: f64, rpm: f64) -> f64 {
    let m = mass_g * 1e-3;
    let r = radius_mm * 1e-3;
    let w = rpm * std::f64::consts::PI / 30.0;
    m * r * r * w * w / 4.0
}
