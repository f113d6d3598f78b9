//! WebAssembly bindings for the static page in `www/`.

use scgalab::evolution::{run_cga, EaParams, Scheme};
use scgalab::nkcs::{NkcsConfig, NkcsModel};
use scgalab::rng;
use scgalab::vawt::energy::PLA_DENSITY;
use scgalab::vawt::{blade_profile, build_turbine, kinetic_energy, Measurement, TurbineConstants, VawtGenome, GENE_NAMES, N_GENES};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub fn gene_names() -> Vec<String> {
    GENE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// The seed genome, for filling the form.
#[wasm_bindgen]
pub fn seed_genes() -> Vec<f64> {
    VawtGenome::seed().genes.to_vec()
}

fn genome(genes: &[f64]) -> Result<VawtGenome, String> {
    let arr: [f64; N_GENES] = genes
        .try_into()
        .map_err(|_| format!("expected {N_GENES} genes, got {}", genes.len()))?;
    let g = VawtGenome::new(arr);
    g.validate(&TurbineConstants::default()).map_err(|e| e.to_string())?;
    Ok(g)
}

/// Blade outline as `[x0, y0, x1, y1, ...]`, then `[triangles, volume_mm3,
/// mass_g, max_radius_mm]` of the compiled turbine.
pub fn profile_and_summary(genes: &[f64], samples: usize) -> Result<(Vec<f64>, Vec<f64>), String> {
    let g = genome(genes)?;
    let outline = blade_profile(&g, samples.max(1)).into_iter().flatten().collect();
    let mesh = build_turbine(&g, &TurbineConstants::default(), 12).map_err(|e| e.to_string())?;
    let volume = mesh.volume();
    Ok((
        outline,
        vec![mesh.triangle_count() as f64, volume, volume * PLA_DENSITY, mesh.max_radius()],
    ))
}

#[wasm_bindgen]
pub fn blade_outline(genes: &[f64], samples: usize) -> Result<Vec<f64>, JsError> {
    profile_and_summary(genes, samples).map(|p| p.0).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn turbine_summary(genes: &[f64]) -> Result<Vec<f64>, JsError> {
    profile_and_summary(genes, 1).map(|p| p.1).map_err(|e| JsError::new(&e))
}

/// Best-so-far fitness after every evaluation of one CGA run on a six-species
/// chain landscape with N = 20.
pub fn best_curve(k: usize, c: usize, scheme: &str, budget: usize, seed: u64) -> Result<Vec<f64>, String> {
    let scheme: Scheme = scheme.parse().map_err(|e: scgalab::Error| e.to_string())?;
    let model = NkcsModel::generate(NkcsConfig::chain6(k, c, seed)).map_err(|e| e.to_string())?;
    let ea = EaParams { scheme, ..EaParams::default() };
    let mut init = rng::stream(seed, &[1]);
    let mut evo = rng::stream(seed, &[2]);
    let trace = run_cga(&model, ea, budget, &mut init, &mut evo).map_err(|e| e.to_string())?;
    Ok(trace.records.iter().map(|r| r.best_so_far).collect())
}

#[wasm_bindgen]
pub fn nkcs_best_curve(k: usize, c: usize, scheme: &str, budget: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    best_curve(k, c, scheme, budget, seed).map_err(|e| JsError::new(&e))
}

/// Rotational kinetic energy in millijoules.
pub fn energy_mj(rpm: f64, mass_g: f64, radius_mm: f64) -> Result<f64, String> {
    kinetic_energy(&Measurement::from_bench(0, "", rpm, mass_g, radius_mm))
        .map(|j| j * 1e3)
        .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn kinetic_energy_mj(rpm: f64, mass_g: f64, radius_mm: f64) -> Result<f64, JsError> {
    energy_mj(rpm, mass_g, radius_mm).map_err(|e| JsError::new(&e))
}
