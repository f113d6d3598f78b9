mod common;

use scgalab::evolution::{run_cga, EaParams, Scheme};
use scgalab::nkcs::{random_team, worked_example, BinaryGenome, NkcsConfig, NkcsModel, Topology};
use scgalab::rng;

#[test]
fn worked_example_species_fitness() {
    let model = worked_example();
    let a = BinaryGenome::from_bits("101").unwrap();
    let b = BinaryGenome::from_bits("110").unwrap();
    let f = model.species_fitness(0, &[&a, &b]).unwrap();
    assert!((f - 1.25 / 3.0).abs() < 1e-9, "{f}");
    assert!((common::table_fitness(&model, 0, &[&a, &b]) - f).abs() < 1e-15);
}

#[test]
fn library_matches_table_oracle() {
    for (k, c) in [(2, 2), (2, 8), (6, 2), (6, 8)] {
        let model = NkcsModel::generate(NkcsConfig::chain6(k, c, 40 + k as u64 * 10 + c as u64)).unwrap();
        let mut r = rng::stream(9, &[k as u64, c as u64]);
        for _ in 0..20 {
            let team = random_team(&model, &mut r);
            let refs: Vec<&BinaryGenome> = team.iter().collect();
            for s in 0..6 {
                let lib = model.species_fitness(s, &refs).unwrap();
                let oracle = common::table_fitness(&model, s, &refs);
                assert!((lib - oracle).abs() < 1e-12, "K{k}C{c} species {s}");
            }
        }
    }
}

#[test]
fn cga_never_beats_enumerated_optimum() {
    for inst in 0..3u64 {
        let cfg = NkcsConfig {
            n_genes: 4,
            k_intra: 1,
            c_inter: 1,
            n_species: 6,
            topology: Topology::Chain,
            seed: 700 + inst,
        };
        let model = NkcsModel::generate(cfg).unwrap();
        let optimum = common::exhaustive_optimum(&model);
        for scheme in Scheme::ALL {
            let ea = EaParams {
                scheme,
                ..EaParams::default()
            };
            let mut init = rng::stream(inst, &[1]);
            let mut evo = rng::stream(inst, &[2]);
            let best = run_cga(&model, ea, 1200, &mut init, &mut evo).unwrap().best().unwrap();
            assert!(best <= optimum + 1e-12, "{scheme}: {best} > {optimum}");
        }
    }
}
