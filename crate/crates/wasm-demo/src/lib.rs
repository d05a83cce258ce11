//! Browser bindings for three interactive views: SConES on a lattice,
//! lasso and Grace paths, and greedy module search. Results cross the
//! boundary as JSON strings.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json(v: &impl serde::Serialize) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(js_err)
}

#[wasm_bindgen]
pub struct GridDemo {
    inner: demo::GridScones,
}

#[wasm_bindgen]
impl GridDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(side: usize, n: usize, module_size: usize, effect: f64, seed: u32) -> Result<GridDemo, JsError> {
        demo::GridScones::new(side, n, module_size, effect, seed as u64)
            .map(|inner| GridDemo { inner })
            .map_err(js_err)
    }

    /// Median positive relevance, the centre of the slider scales.
    pub fn scale(&self) -> f64 {
        self.inner.scale
    }

    pub fn solve(&self, eta: f64, lambda: f64) -> Result<String, JsError> {
        to_json(&self.inner.solve(eta, lambda).map_err(js_err)?)
    }
}

#[wasm_bindgen]
pub fn regularization_paths(n: usize, m: usize, module_size: usize, effect: f64, lambda2: f64, seed: u32) -> Result<String, JsError> {
    to_json(&demo::regularization_paths(n, m, module_size, effect, lambda2, seed as u64).map_err(js_err)?)
}

#[wasm_bindgen]
pub fn planted_modules(
    n_nodes: usize,
    edge_prob: f64,
    clique_size: usize,
    clique_z: f64,
    noise: f64,
    r: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_json(&demo::planted_modules(n_nodes, edge_prob, clique_size, clique_z, noise, r, seed as u64).map_err(js_err)?)
}
