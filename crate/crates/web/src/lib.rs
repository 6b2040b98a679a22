//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The page offers three operations: fit an amplitude loader to an image and
//! show the reconstruction, measure the shot-noise deviation of the prepared
//! state, and plot the random-guess accuracy distribution. Each has a plain
//! Rust entry point (tested natively) and a thin `wasm_bindgen` wrapper.

use qscene::data::{decode_image, preprocess, smooth_blob};
use qscene::encoders::{fit_loader, image_to_target, loader_ansatz, LoaderConfig};
use qscene::hwio::{binomial_pmf, random_baseline_quantile, DeviationReport};
use qscene::simulator::sample_shots;
use qscene::{ImageTensor, QsError, Result, Statevector};
use wasm_bindgen::prelude::*;

/// Largest register the page accepts; keeps a loader fit interactive.
pub const MAX_QUBITS: usize = 10;

/// Image side lengths `(2^floor(n/2), 2^ceil(n/2))` for an `n`-qubit register.
pub fn image_dims(qubits: usize) -> (usize, usize) {
    (1 << (qubits / 2), 1 << (qubits - qubits / 2))
}

#[wasm_bindgen]
pub struct Reconstruction {
    height: usize,
    width: usize,
    target: Vec<f64>,
    prepared: Vec<f64>,
    fidelity: f64,
    loss_history: Vec<f64>,
    state: Statevector,
}

#[wasm_bindgen]
impl Reconstruction {
    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    /// Downsampled input, row-major, in `[0, 1]`.
    #[wasm_bindgen(getter)]
    pub fn target(&self) -> Vec<f64> {
        self.target.clone()
    }

    /// `|amplitude|` of the loaded state, scaled so the largest is 1.
    #[wasm_bindgen(getter)]
    pub fn prepared(&self) -> Vec<f64> {
        self.prepared.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    #[wasm_bindgen(getter)]
    pub fn loss_history(&self) -> Vec<f64> {
        self.loss_history.clone()
    }

    /// Mean L1 deviation of sampled per-qubit `P(0)` from the exact values,
    /// averaged over `repeats` seeds, for each shot count.
    #[wasm_bindgen(js_name = shotNoise)]
    pub fn shot_noise_js(&self, shots: Vec<u32>, repeats: u32, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
        let shots: Vec<u64> = shots.into_iter().map(u64::from).collect();
        shot_noise(&self.state, &shots, repeats as usize, seed as u64).map_err(js)
    }
}

impl Reconstruction {
    pub fn state(&self) -> &Statevector {
        &self.state
    }
}

fn js(e: QsError) -> JsError {
    JsError::new(&e.to_string())
}

/// Downsamples `image` to the register's grid and fits a loader to it.
pub fn reconstruct(image: &ImageTensor, qubits: usize, steps: usize, seed: u64) -> Result<Reconstruction> {
    if !(2..=MAX_QUBITS).contains(&qubits) {
        return Err(QsError::Contract(format!("qubits must lie in 2..={MAX_QUBITS}")));
    }
    let (height, width) = image_dims(qubits);
    let small = preprocess(image, (height, width))?;
    let target = image_to_target(&small)?;
    let config = LoaderConfig { steps, seed, ..LoaderConfig::default() };
    let report = fit_loader(&target, &config)?;
    let state = loader_ansatz(qubits, config.layers).run(&report.params)?;
    let mags: Vec<f64> = state.amplitudes().iter().map(|a| a.norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    Ok(Reconstruction {
        height,
        width,
        target: small.pixels().to_vec(),
        prepared: mags.iter().map(|m| if max > 0.0 { m / max } else { 0.0 }).collect(),
        fidelity: report.fidelity,
        loss_history: report.loss_history,
        state,
    })
}

pub fn shot_noise(state: &Statevector, shots: &[u64], repeats: usize, seed: u64) -> Result<Vec<f64>> {
    if repeats == 0 {
        return Err(QsError::Contract("repeats must be at least 1".into()));
    }
    let qubits: Vec<usize> = (0..state.n_qubits()).collect();
    let p_sim = qubits.iter().map(|&q| state.prob_zero(q)).collect::<Result<Vec<_>>>()?;
    shots
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            for r in 0..repeats as u64 {
                let zeros = sample_shots(state, &qubits, n, seed.wrapping_add(r))?;
                let p_expt = zeros.iter().map(|&z| z as f64 / n as f64).collect();
                total += DeviationReport::new(p_sim.clone(), p_expt, n)?.l1;
            }
            Ok(total / repeats as f64)
        })
        .collect()
}

/// Loader fit on an uploaded PNG, BMP or PNM file.
#[wasm_bindgen(js_name = reconstructImage)]
pub fn reconstruct_image_js(bytes: &[u8], qubits: usize, steps: usize, seed: u32) -> std::result::Result<Reconstruction, JsError> {
    let image = decode_image(bytes, 0, "upload").map_err(js)?;
    reconstruct(&image, qubits, steps, seed as u64).map_err(js)
}

/// Loader fit on the built-in smooth test image.
#[wasm_bindgen(js_name = reconstructDemo)]
pub fn reconstruct_demo_js(qubits: usize, steps: usize, seed: u32) -> std::result::Result<Reconstruction, JsError> {
    let (h, w) = image_dims(qubits.min(MAX_QUBITS));
    reconstruct(&smooth_blob(h, w), qubits, steps, seed as u64).map_err(js)
}

#[wasm_bindgen]
pub struct Baseline {
    exact: f64,
    monte_carlo: f64,
    pmf: Vec<f64>,
}

#[wasm_bindgen]
impl Baseline {
    /// Accuracy threshold from exact CDF inversion.
    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> f64 {
        self.exact
    }

    #[wasm_bindgen(getter, js_name = monteCarlo)]
    pub fn monte_carlo(&self) -> f64 {
        self.monte_carlo
    }

    /// `P(k correct)` for `k = 0..=n`.
    #[wasm_bindgen(getter)]
    pub fn pmf(&self) -> Vec<f64> {
        self.pmf.clone()
    }
}

pub fn baseline(n: u64, p: f64, q: f64, trials: usize, seed: u64) -> Result<Baseline> {
    let b = random_baseline_quantile(n, p, q, trials, seed)?;
    Ok(Baseline { exact: b.exact, monte_carlo: b.monte_carlo, pmf: binomial_pmf(n, p)? })
}

#[wasm_bindgen(js_name = randomBaseline)]
pub fn baseline_js(n: u32, p: f64, q: f64, trials: u32, seed: u32) -> std::result::Result<Baseline, JsError> {
    baseline(n as u64, p, q, trials as usize, seed as u64).map_err(js)
}
