//! Finite-shot inference and deviation from exact probabilities.

use crate::model::{argmax, softmax, EncodedInput, ModelSpec, TrainableParams};
use crate::simulator::sample_shots;
use crate::train::csv_err;
use crate::{QsError, Result};

/// Per measured qubit: exact and estimated probability of reading 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationReport {
    pub p_sim: Vec<f64>,
    pub p_expt: Vec<f64>,
    /// `Σ |p_sim − p_expt|`.
    pub l1: f64,
    pub shots: u64,
}

impl DeviationReport {
    pub fn new(p_sim: Vec<f64>, p_expt: Vec<f64>, shots: u64) -> Result<Self> {
        if p_sim.len() != p_expt.len() {
            return Err(QsError::contract("probability vectors differ in length"));
        }
        let l1 = p_sim.iter().zip(&p_expt).map(|(a, b)| (a - b).abs()).sum();
        Ok(Self { p_sim, p_expt, l1, shots })
    }

    /// `qubit,p_sim,p_expt` rows; `qubits` labels the rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W, qubits: &[usize]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["qubit", "p_sim", "p_expt"]).map_err(csv_err)?;
        for ((q, s), e) in qubits.iter().zip(&self.p_sim).zip(&self.p_expt) {
            w.write_record([q.to_string(), format!("{s:?}"), format!("{e:?}")]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotInference {
    pub report: DeviationReport,
    /// Class probabilities from the shot estimates.
    pub probs: Vec<f64>,
    pub predicted: usize,
}

/// Samples every register with its own stream (`seed + register`), estimates
/// `P(0)` per measured qubit and feeds `2P − 1` through the readout head.
pub fn shot_inference(model: &ModelSpec, input: &EncodedInput, params: &TrainableParams, shots: u64, seed: u64) -> Result<ShotInference> {
    if shots == 0 {
        return Err(QsError::contract("shots must be at least 1"));
    }
    let states = model.register_states(input, params)?;
    let locations = model.measured_locations();
    let mut p_sim = vec![0.0; locations.len()];
    let mut p_expt = vec![0.0; locations.len()];
    for (r, state) in states.iter().enumerate() {
        let idx: Vec<usize> = (0..locations.len()).filter(|&i| locations[i].0 == r).collect();
        if idx.is_empty() {
            continue;
        }
        let qubits: Vec<usize> = idx.iter().map(|&i| locations[i].1).collect();
        let zeros = sample_shots(state, &qubits, shots, seed.wrapping_add(r as u64))?;
        for ((&i, &q), z) in idx.iter().zip(&qubits).zip(zeros) {
            p_sim[i] = state.prob_zero(q)?;
            p_expt[i] = z as f64 / shots as f64;
        }
    }
    let e: Vec<f64> = p_expt.iter().map(|p| 2.0 * p - 1.0).collect();
    let probs = softmax(&model.logits(&e, params));
    Ok(ShotInference { predicted: argmax(&probs), probs, report: DeviationReport::new(p_sim, p_expt, shots)? })
}
