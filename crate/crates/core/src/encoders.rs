//! Turning images into circuit loading segments.
//!
//! * Amplitude encoding (AAE): the normalized, row-major pixel vector is the
//!   target state; a shallow RY+CX ansatz is trained against it by minimising
//!   `KL(p_target ‖ p_prepared)` over squared amplitudes, staged from the most
//!   significant qubits down.
//! * Block amplitude encoding (BAE): the image is cut into a grid of blocks,
//!   each amplitude-encoded on its own register; the global state is the
//!   product of the block states.
//! * Piecewise angle encoding (PAE): pixels become RY-RZ-RY rotation angles,
//!   spread over uploading layers that interleave with processing layers.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::ImageTensor;
use crate::simulator::{backward_sweep, Angle, CircuitProgram, Gate, Observable, Statevector, MAX_QUBITS};
use crate::train::{Adam, AdamConfig};
use crate::{QsError, Result};

/// Floor applied to prepared probabilities inside the KL logarithm.
pub const KL_EPSILON: f64 = 1e-12;

/// Nonnegative unit-norm amplitudes of length `2^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetAmplitudes {
    values: Vec<f64>,
    pub source_shape: (usize, usize),
}

impl TargetAmplitudes {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_qubits(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    pub fn to_state(&self) -> Result<Statevector> {
        Statevector::from_real(&self.values)
    }

    /// `|⟨target|ψ⟩|²`.
    pub fn fidelity(&self, state: &Statevector) -> Result<f64> {
        if state.dim() != self.values.len() {
            return Err(QsError::contract("fidelity against a state of different size"));
        }
        let overlap: num_complex::Complex64 =
            self.values.iter().zip(state.amplitudes()).map(|(t, a)| a * *t).sum();
        Ok(overlap.norm_sqr())
    }
}

/// Qubits needed to hold `len` amplitudes (at least one).
pub fn required_qubits(len: usize) -> usize {
    (len.max(2).next_power_of_two().trailing_zeros()) as usize
}

/// Zero-pads `v` to the next power of two and scales it to unit norm.
pub fn normalize_vector(v: &[f64]) -> Result<TargetAmplitudes> {
    if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(QsError::contract(format!("entry {i} = {} is not a finite nonnegative value", v[i])));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(QsError::Degenerate("cannot normalize an all-zero vector".into()));
    }
    let n = required_qubits(v.len());
    if n > MAX_QUBITS {
        return Err(QsError::Capacity(format!("{} entries need {n} qubits", v.len())));
    }
    let mut values = vec![0.0; 1 << n];
    for (o, x) in values.iter_mut().zip(v) {
        *o = x / norm;
    }
    Ok(TargetAmplitudes { values, source_shape: (1, v.len()) })
}

/// Amplitude-encoding target of a whole image (row-major flatten).
pub fn image_to_target(image: &ImageTensor) -> Result<TargetAmplitudes> {
    let mut t = normalize_vector(image.pixels())
        .map_err(|e| match e {
            QsError::Degenerate(_) => QsError::Degenerate(format!("{} is entirely black", image.source_id)),
            other => other,
        })?;
    t.source_shape = image.shape();
    Ok(t)
}

/// Grid of equally sized blocks, each holding `2^q` pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub grid: (usize, usize),
    pub qubits_per_block: usize,
    pub n_blocks: usize,
    pub block_shape: (usize, usize),
}

impl BlockPartition {
    /// Partition arithmetic for an image of `shape` cut into `grid = (rows, cols)`.
    pub fn for_shape(shape: (usize, usize), grid: (usize, usize)) -> Result<Self> {
        let ((h, w), (rows, cols)) = (shape, grid);
        if rows == 0 || cols == 0 || h % rows != 0 || w % cols != 0 {
            return Err(QsError::contract(format!("{h}x{w} image does not divide into a {rows}x{cols} grid")));
        }
        let block_shape = (h / rows, w / cols);
        let pixels = block_shape.0 * block_shape.1;
        if !pixels.is_power_of_two() || pixels < 2 {
            return Err(QsError::contract(format!(
                "blocks of {}x{} hold {pixels} pixels, not a power of two >= 2",
                block_shape.0, block_shape.1
            )));
        }
        Ok(Self {
            grid,
            qubits_per_block: pixels.trailing_zeros() as usize,
            n_blocks: rows * cols,
            block_shape,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.qubits_per_block * self.n_blocks
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.grid.0 * self.block_shape.0, self.grid.1 * self.block_shape.1)
    }
}

/// Splits `image` into blocks (row-major over the grid) and normalizes each.
pub fn partition_blocks(image: &ImageTensor, grid: (usize, usize)) -> Result<(BlockPartition, Vec<TargetAmplitudes>)> {
    let part = BlockPartition::for_shape(image.shape(), grid)?;
    let (bh, bw) = part.block_shape;
    let mut targets = Vec::with_capacity(part.n_blocks);
    for br in 0..grid.0 {
        for bc in 0..grid.1 {
            let pixels = image.window(br * bh, bc * bw, bh, bw);
            let mut t = normalize_vector(&pixels).map_err(|e| match e {
                QsError::Degenerate(_) => {
                    QsError::Degenerate(format!("block ({br}, {bc}) of {} is entirely black", image.source_id))
                }
                other => other,
            })?;
            t.source_shape = part.block_shape;
            targets.push(t);
        }
    }
    Ok((part, targets))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stage {
    pub active_qubits: usize,
    pub epochs: usize,
}

/// Staged loader training: each stage trains the gates living entirely on the
/// `active_qubits` most significant qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchicalSchedule {
    pub stages: Vec<Stage>,
}

impl HierarchicalSchedule {
    pub fn n_qubits(&self) -> usize {
        self.stages.last().map_or(0, |s| s.active_qubits)
    }

    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs).sum()
    }
}

/// Stage `k` of `n_stages` activates `ceil(k · n_qubits / n_stages)` qubits.
pub fn build_hierarchical_schedule(n_qubits: usize, n_stages: usize, epochs_per_stage: usize) -> Result<HierarchicalSchedule> {
    if n_stages == 0 || n_stages > n_qubits {
        return Err(QsError::contract(format!("{n_stages} stages for {n_qubits} qubits")));
    }
    let stages = (1..=n_stages)
        .map(|k| Stage { active_qubits: (k * n_qubits).div_ceil(n_stages), epochs: epochs_per_stage })
        .collect();
    Ok(HierarchicalSchedule { stages })
}

/// `ceil(n/4)` stages sharing `total_epochs` evenly.
pub fn default_schedule(n_qubits: usize, total_epochs: usize) -> Result<HierarchicalSchedule> {
    let n_stages = n_qubits.div_ceil(4).max(1);
    build_hierarchical_schedule(n_qubits, n_stages, total_epochs.div_ceil(n_stages))
}

/// Loader ansatz and optimiser settings for AAE/BAE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoaderConfig {
    pub layers: usize,
    /// Number of hierarchical stages; `None` picks `ceil(n/4)`.
    pub stages: Option<usize>,
    /// Total Adam steps across all stages.
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for LoaderConfig {
    fn default() -> Self {
        Self { layers: 8, stages: None, steps: 500, lr: 0.05, seed: 0 }
    }
}

impl LoaderConfig {
    pub fn schedule(&self, n_qubits: usize) -> Result<HierarchicalSchedule> {
        match self.stages {
            None => default_schedule(n_qubits, self.steps),
            Some(s) => build_hierarchical_schedule(n_qubits, s, self.steps.div_ceil(s.max(1))),
        }
    }
}

/// `layers` × (RY on every qubit, then a CX chain `q → q+1`). Slot of the RY
/// on qubit `q` in layer `l` is `l·n + q`.
pub fn loader_ansatz(n_qubits: usize, layers: usize) -> CircuitProgram {
    let mut p = CircuitProgram::new(n_qubits);
    for _ in 0..layers {
        for q in 0..n_qubits {
            let a = p.new_slot();
            p.push(Gate::ry(q, a));
        }
        for q in 0..n_qubits.saturating_sub(1) {
            p.push(Gate::cx(q, q + 1));
        }
    }
    p
}

/// First layer at `π/2` (uniform superposition, invariant under the CX chain),
/// later layers uniform in `[-0.1, 0.1]`.
pub fn init_loader_params(n_qubits: usize, layers: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_qubits * layers)
        .map(|i| if i < n_qubits { FRAC_PI_2 } else { rng.random_range(-0.1..=0.1) })
        .collect()
}

/// `Σ_i t_i ln(t_i / max(p_i, ε))`, skipping `t_i = 0` terms.
pub fn kl_divergence(target: &[f64], prepared: &[f64]) -> f64 {
    target
        .iter()
        .zip(prepared)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| t * (t / p.max(KL_EPSILON)).ln())
        .sum()
}

fn marginal_top(probs: &[f64], n_qubits: usize, active: usize) -> Vec<f64> {
    let shift = n_qubits - active;
    let mut out = vec![0.0; 1 << active];
    for (i, p) in probs.iter().enumerate() {
        out[i >> shift] += p;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoaderReport {
    /// Best parameters found in the final (all-qubit) stage.
    pub params: Vec<f64>,
    /// Objective of every step; during stage `k` this is the KL between the
    /// marginals over the active qubits.
    pub loss_history: Vec<f64>,
    /// Index in `loss_history` where each stage starts.
    pub stage_starts: Vec<usize>,
    /// Full KL at `params`.
    pub best_loss: f64,
    /// Optimiser updates performed across all stages.
    pub adam_steps: usize,
    pub fidelity: f64,
}

impl LoaderReport {
    /// Running minimum over the final stage.
    pub fn best_so_far(&self) -> Vec<f64> {
        let start = self.stage_starts.last().copied().unwrap_or(0);
        self.loss_history[start..]
            .iter()
            .scan(f64::INFINITY, |best, &l| {
                *best = best.min(l);
                Some(*best)
            })
            .collect()
    }
}

/// KL of the state prepared by `ansatz(params)` against `target`.
pub fn loader_loss(target: &TargetAmplitudes, ansatz: &CircuitProgram, params: &[f64]) -> Result<f64> {
    let psi = ansatz.run(params)?;
    Ok(kl_divergence(&target.probabilities(), &psi.probabilities()))
}

/// Trains `ansatz` to prepare `target` following `schedule`, starting at `init`.
/// Gates touching inactive qubits act as identity and their parameters stay
/// fixed. Gradients flow through the KL loss via the adjoint engine.
pub fn train_loader(
    target: &TargetAmplitudes,
    ansatz: &CircuitProgram,
    schedule: &HierarchicalSchedule,
    adam: AdamConfig,
    init: &[f64],
) -> Result<LoaderReport> {
    let n = ansatz.n_qubits;
    if target.n_qubits() != n || schedule.n_qubits() != n {
        return Err(QsError::contract(format!(
            "target has {} qubits, ansatz {n}, schedule {}",
            target.n_qubits(),
            schedule.n_qubits()
        )));
    }
    ansatz.validate()?;
    if init.len() != ansatz.n_params {
        return Err(QsError::contract(format!("{} initial parameters for {} slots", init.len(), ansatz.n_params)));
    }
    let target_probs = target.probabilities();
    let mut params = init.to_vec();
    let mut optimizer = Adam::new(params.len(), adam);
    let mut history = Vec::with_capacity(schedule.total_epochs() + 1);
    let mut stage_starts = Vec::with_capacity(schedule.stages.len());
    let mut best = (f64::INFINITY, params.clone());
    let mut grad = vec![0.0; params.len()];

    for (si, stage) in schedule.stages.iter().enumerate() {
        let active = stage.active_qubits;
        let last_stage = si + 1 == schedule.stages.len();
        let mut stage_prog = CircuitProgram::new(n);
        stage_prog.n_params = ansatz.n_params;
        stage_prog.gates = ansatz.gates.iter().filter(|g| g.targets.iter().all(|&q| q < active)).cloned().collect();
        let mut trainable = vec![false; params.len()];
        for s in stage_prog.gates.iter().filter_map(|g| g.slot()) {
            trainable[s] = true;
        }
        let marg_target = marginal_top(&target_probs, n, active);
        let shift = n - active;
        stage_starts.push(history.len());

        // One extra evaluation in the last stage scores the final update.
        let evaluations = stage.epochs + usize::from(last_stage);
        for step in 0..evaluations {
            let psi = stage_prog.run(&params)?;
            let marg = marginal_top(&psi.probabilities(), n, active);
            let loss = kl_divergence(&marg_target, &marg);
            if !loss.is_finite() {
                return Err(QsError::Numerical {
                    index: history.len(),
                    message: format!("loader loss {loss} at stage {si} step {step}"),
                });
            }
            history.push(loss);
            if last_stage && loss < best.0 {
                best = (loss, params.clone());
            }
            if step == stage.epochs {
                break;
            }
            let diag: Vec<f64> = (0..psi.dim())
                .map(|i| {
                    let j = i >> shift;
                    if marg[j] >= KL_EPSILON { -marg_target[j] / marg[j] } else { 0.0 }
                })
                .collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            backward_sweep(&stage_prog, &params, psi, Observable::Diagonal(&diag), &mut grad);
            optimizer
                .step_masked(&mut params, &grad, Some(&trainable))
                .map_err(|e| match e {
                    QsError::Numerical { index, message } => QsError::Numerical {
                        index: history.len() - 1,
                        message: format!("parameter {index}: {message}"),
                    },
                    other => other,
                })?;
        }
    }

    let (best_loss, params) = best;
    let fidelity = target.fidelity(&ansatz.run(&params)?)?;
    Ok(LoaderReport { params, loss_history: history, stage_starts, best_loss, adam_steps: optimizer.step as usize, fidelity })
}

/// Builds the ansatz, schedule and initial point from `config` and trains a
/// loader for `target`.
pub fn fit_loader(target: &TargetAmplitudes, config: &LoaderConfig) -> Result<LoaderReport> {
    let n = target.n_qubits();
    let ansatz = loader_ansatz(n, config.layers);
    let schedule = config.schedule(n)?;
    let init = init_loader_params(n, config.layers, config.seed);
    train_loader(target, &ansatz, &schedule, AdamConfig::with_lr(config.lr), &init)
}

/// Trains one loader per block; blocks are independent and run in parallel.
pub fn fit_block_loaders(targets: &[TargetAmplitudes], config: &LoaderConfig) -> Result<Vec<LoaderReport>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        targets.par_iter().map(|t| fit_loader(t, config)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        targets.iter().map(|t| fit_loader(t, config)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RotationPosition {
    Ry1,
    Rz,
    Ry2,
}

/// How pixel values map to rotation angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelScaling {
    /// `angle = π · pixel`; pixels are already in `[0, 1]`.
    Unit,
    /// Per-image min-max stretch to `[0, 1]` first.
    MinMax,
}

/// Placement of pixels onto RY-RZ-RY uploading rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct PaePlan {
    pub n_qubits: usize,
    pub n_upload_layers: usize,
    pub pixel_count: usize,
    pub angle_scale: f64,
    pub scaling: PixelScaling,
}

/// `ceil(pixel_count / (3 · n_qubits))` uploading layers, filled row-major:
/// layer by layer, qubit by qubit, positions RY → RZ → RY.
pub fn pae_plan(pixel_count: usize, n_qubits: usize) -> Result<PaePlan> {
    if pixel_count == 0 || n_qubits == 0 {
        return Err(QsError::contract("PAE needs at least one pixel and one qubit"));
    }
    Ok(PaePlan {
        n_qubits,
        n_upload_layers: pixel_count.div_ceil(3 * n_qubits),
        pixel_count,
        angle_scale: PI,
        scaling: PixelScaling::Unit,
    })
}

impl PaePlan {
    pub fn with_scaling(mut self, scaling: PixelScaling) -> Self {
        self.scaling = scaling;
        self
    }

    /// `(layer, qubit, position)` of pixel `index`.
    pub fn assignment(&self, index: usize) -> Option<(usize, usize, RotationPosition)> {
        if index >= self.pixel_count {
            return None;
        }
        let per_layer = 3 * self.n_qubits;
        let rem = index % per_layer;
        let pos = [RotationPosition::Ry1, RotationPosition::Rz, RotationPosition::Ry2][rem % 3];
        Some((index / per_layer, rem / 3, pos))
    }

    /// Angles for every uploading rotation, indexed `[layer][qubit][position]`;
    /// unfilled positions are 0.
    pub fn angles(&self, pixels: &[f64]) -> Result<Vec<Vec<[f64; 3]>>> {
        if pixels.len() != self.pixel_count {
            return Err(QsError::contract(format!(
                "plan expects {} pixels, got {}",
                self.pixel_count,
                pixels.len()
            )));
        }
        let (lo, hi) = match self.scaling {
            PixelScaling::Unit => (0.0, 1.0),
            PixelScaling::MinMax => pixels
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p))),
        };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = vec![vec![[0.0; 3]; self.n_qubits]; self.n_upload_layers];
        for (i, p) in pixels.iter().enumerate() {
            let (layer, qubit, pos) = self.assignment(i).expect("index within plan");
            out[layer][qubit][pos as usize] = self.angle_scale * (p - lo) / span;
        }
        Ok(out)
    }

    /// Appends uploading layer `layer` with the given bound angles.
    pub fn push_upload_layer(&self, program: &mut CircuitProgram, angles: &[[f64; 3]]) {
        for (q, a) in angles.iter().enumerate() {
            program.push(Gate::ry(q, Angle::Fixed(a[0])));
            program.push(Gate::rz(q, Angle::Fixed(a[1])));
            program.push(Gate::ry(q, Angle::Fixed(a[2])));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::GateKind;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_vector(&[1.0, 0.0, 0.0, 0.0]).unwrap().values(), &[1.0, 0.0, 0.0, 0.0]);
        let t = normalize_vector(&[3.0, 4.0]).unwrap();
        assert!((t.values()[0] - 0.6).abs() < 1e-15 && (t.values()[1] - 0.8).abs() < 1e-15);
        let t = normalize_vector(&[1.0, 1.0, 1.0]).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_eq!(t.values().len(), 4);
        for (v, e) in t.values().iter().zip([r, r, r, 0.0]) {
            assert!((v - e).abs() < 1e-15);
        }
        assert!(matches!(normalize_vector(&[0.0, 0.0]), Err(QsError::Degenerate(_))));
    }

    #[test]
    fn image_targets() {
        let img = ImageTensor::new(2, 2, vec![1.0, 0.0, 0.0, 0.0], 0, "x").unwrap();
        let t = image_to_target(&img).unwrap();
        assert_eq!(t.values(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.n_qubits(), 2);
        let img = ImageTensor::from_fn(3, 3, 0, "x", |r, c| (r * 3 + c + 1) as f64 / 9.0).unwrap();
        let t = image_to_target(&img).unwrap();
        assert_eq!((t.values().len(), t.n_qubits()), (16, 4));
        // Row-major flatten then pad.
        let norm: f64 = (1..=9).map(|k| (k * k) as f64).sum::<f64>().sqrt();
        for k in 0..9 {
            assert!((t.values()[k] - (k + 1) as f64 / norm).abs() < 1e-15);
        }
        assert!(t.values()[9..].iter().all(|&v| v == 0.0));
        let black = ImageTensor::from_fn(2, 2, 0, "b", |_, _| 0.0).unwrap();
        assert!(matches!(image_to_target(&black), Err(QsError::Degenerate(_))));
        assert_eq!(required_qubits(2048 * 1024), 21);
    }

    #[test]
    fn partition_arithmetic() {
        let p = BlockPartition::for_shape((2048, 1024), (4, 2)).unwrap();
        assert_eq!((p.qubits_per_block, p.total_qubits()), (18, 144));
        let img = ImageTensor::from_fn(4, 4, 0, "x", |r, c| ((r * 4 + c) % 5 + 1) as f64 / 5.0).unwrap();
        let (p, targets) = partition_blocks(&img, (2, 2)).unwrap();
        assert_eq!((p.n_blocks, p.qubits_per_block, p.block_shape), (4, 2, (2, 2)));
        assert_eq!(targets.len(), 4);
        // Block (0,1) is pixels (0,2),(0,3),(1,2),(1,3).
        let raw = [img.pixel(0, 2), img.pixel(0, 3), img.pixel(1, 2), img.pixel(1, 3)];
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (v, r) in targets[1].values().iter().zip(raw) {
            assert!((v - r / norm).abs() < 1e-15);
        }
        let p = BlockPartition::for_shape((32, 32), (2, 2)).unwrap();
        assert_eq!((p.block_shape, p.qubits_per_block, p.total_qubits()), ((16, 16), 8, 32));
        assert!(BlockPartition::for_shape((6, 4), (4, 2)).is_err());
        assert!(BlockPartition::for_shape((6, 6), (2, 2)).is_err());
    }

    #[test]
    fn black_block_is_degenerate() {
        let img = ImageTensor::from_fn(4, 4, 0, "x", |r, _| if r < 2 { 0.5 } else { 0.0 }).unwrap();
        assert!(matches!(partition_blocks(&img, (2, 2)), Err(QsError::Degenerate(_))));
    }

    #[test]
    fn schedules() {
        let s = build_hierarchical_schedule(8, 1, 10).unwrap();
        assert_eq!(s.stages, vec![Stage { active_qubits: 8, epochs: 10 }]);
        let active = |n, k| {
            build_hierarchical_schedule(n, k, 1).unwrap().stages.iter().map(|s| s.active_qubits).collect::<Vec<_>>()
        };
        assert_eq!(active(8, 4), vec![2, 4, 6, 8]);
        assert_eq!(active(21, 3), vec![7, 14, 21]);
        assert!(build_hierarchical_schedule(3, 4, 1).is_err());
        assert_eq!(default_schedule(8, 500).unwrap().stages.len(), 2);
    }

    #[test]
    fn kl_basics() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[0.9, 0.1]) > 0.0);
        // Target zeros contribute nothing; prepared zeros are floored.
        assert_eq!(kl_divergence(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_finite());
    }

    #[test]
    fn ground_target_zero_loss_at_zero_params() {
        let target = normalize_vector(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let ansatz = loader_ansatz(3, 2);
        assert_eq!(loader_loss(&target, &ansatz, &[0.0; 6]).unwrap(), 0.0);
        let schedule = build_hierarchical_schedule(3, 1, 5).unwrap();
        let r = train_loader(&target, &ansatz, &schedule, AdamConfig::default(), &[0.0; 6]).unwrap();
        assert_eq!(r.loss_history[0], 0.0);
        assert!((r.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ansatz_shape() {
        let a = loader_ansatz(4, 3);
        assert_eq!(a.n_params, 12);
        assert_eq!(a.gates.iter().filter(|g| g.kind == GateKind::Cx).count(), 9);
        assert_eq!(a.gates[0].slot(), Some(0));
    }

    #[test]
    fn pae_layer_counts() {
        assert_eq!(pae_plan(16 * 24, 16).unwrap().n_upload_layers, 8);
        let p = pae_plan(3, 1).unwrap();
        assert_eq!(p.n_upload_layers, 1);
        let a = p.angles(&[0.1, 0.2, 0.3]).unwrap();
        assert!((a[0][0][2] - 0.3 * PI).abs() < 1e-15);
        let p = pae_plan(4, 1).unwrap();
        assert_eq!(p.n_upload_layers, 2);
        assert_eq!(p.assignment(3), Some((1, 0, RotationPosition::Ry1)));
        let a = p.angles(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a[1][0], [PI, 0.0, 0.0]);
        assert!(pae_plan(0, 3).is_err());
    }

    #[test]
    fn pae_minmax_scaling() {
        let p = pae_plan(3, 1).unwrap().with_scaling(PixelScaling::MinMax);
        let a = p.angles(&[0.2, 0.4, 0.6]).unwrap();
        assert!((a[0][0][0]).abs() < 1e-15);
        assert!((a[0][0][1] - PI / 2.0).abs() < 1e-12);
        assert!((a[0][0][2] - PI).abs() < 1e-12);
    }
}
