//! Processing circuits, classifier assembly and the classical readout head.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::ImageTensor;
use crate::encoders::{
    fit_block_loaders, fit_loader, image_to_target, loader_ansatz, pae_plan, partition_blocks,
    BlockPartition, LoaderConfig, PaePlan, PixelScaling, TargetAmplitudes,
};
use crate::simulator::{backward_sweep, CircuitProgram, Gate, GateKind, Observable, Statevector};
use crate::{QsError, Result};

/// Floor on the true-class probability inside the cross-entropy logarithm.
pub const PROB_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Aae,
    Bae,
    Pae,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Aae => "aae",
            Scheme::Bae => "bae",
            Scheme::Pae => "pae",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = QsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aae" => Ok(Scheme::Aae),
            "bae" => Ok(Scheme::Bae),
            "pae" => Ok(Scheme::Pae),
            _ => Err(QsError::contract(format!("unknown scheme `{s}` (aae, bae, pae)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectivityKind {
    AllToAll,
    Ring,
    Line,
}

impl FromStr for ConnectivityKind {
    type Err = QsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "all_to_all" | "all" => Ok(ConnectivityKind::AllToAll),
            "ring" => Ok(ConnectivityKind::Ring),
            "line" => Ok(ConnectivityKind::Line),
            _ => Err(QsError::contract(format!("unknown connectivity `{s}` (all_to_all, ring, line)"))),
        }
    }
}

impl fmt::Display for ConnectivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectivityKind::AllToAll => "all_to_all",
            ConnectivityKind::Ring => "ring",
            ConnectivityKind::Line => "line",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Connectivity {
    pub kind: ConnectivityKind,
    pub n_qubits: usize,
}

impl Connectivity {
    pub fn new(kind: ConnectivityKind, n_qubits: usize) -> Result<Self> {
        if kind == ConnectivityKind::Ring && n_qubits < 3 {
            return Err(QsError::contract(format!("ring connectivity needs 3+ qubits, got {n_qubits}")));
        }
        Ok(Self { kind, n_qubits })
    }

    /// Edge list; for a ring the closing edge `(n-1, 0)` comes last.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        match self.kind {
            ConnectivityKind::Line => (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            ConnectivityKind::Ring => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            ConnectivityKind::AllToAll => {
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entangler {
    Cx,
    Cz,
    Rzz,
}

impl Entangler {
    pub fn kind(self) -> GateKind {
        match self {
            Entangler::Cx => GateKind::Cx,
            Entangler::Cz => GateKind::Cz,
            Entangler::Rzz => GateKind::Rzz,
        }
    }
}

impl FromStr for Entangler {
    type Err = QsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cx" | "cnot" => Ok(Entangler::Cx),
            "cz" => Ok(Entangler::Cz),
            "rzz" => Ok(Entangler::Rzz),
            _ => Err(QsError::contract(format!("unknown entangler `{s}` (cx, cz, rzz)"))),
        }
    }
}

impl fmt::Display for Entangler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())
    }
}

/// Hardware-efficient processing circuit settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProcessingConfig {
    pub layers: usize,
    pub connectivity: ConnectivityKind,
    pub entangler: Entangler,
    pub brickwork: bool,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self { layers: 3, connectivity: ConnectivityKind::Line, entangler: Entangler::Cx, brickwork: false }
    }
}

/// Appends HEA layer `layer`: RY then RZ on every qubit, then entanglers on the
/// connectivity edges. With `brickwork`, only edges whose index parity matches
/// the layer parity are used.
fn push_hea_layer(program: &mut CircuitProgram, layer: usize, edges: &[(usize, usize)], entangler: Entangler, brickwork: bool) {
    for q in 0..program.n_qubits {
        let a = program.new_slot();
        program.push(Gate::ry(q, a));
        let b = program.new_slot();
        program.push(Gate::rz(q, b));
    }
    for (i, &(a, b)) in edges.iter().enumerate() {
        if brickwork && i % 2 != layer % 2 {
            continue;
        }
        let angle = (entangler == Entangler::Rzz).then(|| program.new_slot());
        program.push(Gate::two_qubit(entangler.kind(), a, b, angle));
    }
}

pub fn build_hea(
    n_qubits: usize,
    layers: usize,
    connectivity: Connectivity,
    entangler: Entangler,
    brickwork: bool,
) -> Result<CircuitProgram> {
    if layers == 0 {
        return Err(QsError::contract("an HEA needs at least one layer"));
    }
    if connectivity.n_qubits != n_qubits {
        return Err(QsError::contract("connectivity size differs from register size"));
    }
    let edges = connectivity.edges();
    let mut p = CircuitProgram::new(n_qubits);
    for l in 0..layers {
        push_hea_layer(&mut p, l, &edges, entangler, brickwork);
    }
    Ok(p)
}

/// How images become quantum states.
#[derive(Clone, Debug, PartialEq)]
pub enum Loading {
    /// Whole image amplitude-encoded on `n_qubits`.
    Amplitude { n_qubits: usize, loader: LoaderConfig },
    /// One amplitude-encoded register per block.
    Block { partition: BlockPartition, loader: LoaderConfig },
    /// Pixels as rotation angles interleaved with processing layers.
    Angle { plan: PaePlan },
}

/// A fully assembled classifier: loading, processing, measurement and readout
/// shapes. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    loading: Loading,
    processing: ProcessingConfig,
    image_shape: (usize, usize),
    measured_qubits: Vec<usize>,
    n_classes: usize,
    /// Processing circuit of one register (AAE: all qubits, BAE: one block).
    /// Unused for PAE, whose programs depend on the image.
    template: CircuitProgram,
    n_quantum: usize,
}

/// Input state or program for one image; loader parameters are frozen here.
#[derive(Clone, Debug, PartialEq)]
pub enum EncodedInput {
    Amplitude { loader_params: Vec<f64>, state: Statevector, fidelity: f64 },
    Blocks { loader_params: Vec<Vec<f64>>, states: Vec<Statevector>, fidelities: Vec<f64> },
    Angles { program: CircuitProgram },
}

impl EncodedInput {
    /// Loader parameters per register (empty for angle encoding).
    pub fn loader_params(&self) -> Vec<Vec<f64>> {
        match self {
            EncodedInput::Amplitude { loader_params, .. } => vec![loader_params.clone()],
            EncodedInput::Blocks { loader_params, .. } => loader_params.clone(),
            EncodedInput::Angles { .. } => Vec::new(),
        }
    }

    /// Mean loading fidelity (1 for angle encoding).
    pub fn fidelity(&self) -> f64 {
        match self {
            EncodedInput::Amplitude { fidelity, .. } => *fidelity,
            EncodedInput::Blocks { fidelities, .. } => fidelities.iter().sum::<f64>() / fidelities.len() as f64,
            EncodedInput::Angles { .. } => 1.0,
        }
    }
}

/// An encoded image with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSample {
    pub input: EncodedInput,
    pub label: usize,
    pub source_id: String,
}

/// Processing angles plus readout weights (`n_classes × n_measured`,
/// row-major) and biases.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainableParams {
    pub quantum: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl TrainableParams {
    pub fn zeros(model: &ModelSpec) -> Self {
        Self {
            quantum: vec![0.0; model.n_quantum_params()],
            weights: vec![0.0; model.n_classes * model.n_measured()],
            bias: vec![0.0; model.n_classes],
        }
    }

    /// Quantum angles uniform in `[-0.1, 0.1]`, weights uniform in
    /// `[-0.5, 0.5]`, zero bias.
    pub fn init(model: &ModelSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(model);
        p.quantum.iter_mut().for_each(|x| *x = rng.random_range(-0.1..=0.1));
        p.weights.iter_mut().for_each(|x| *x = rng.random_range(-0.5..=0.5));
        p
    }

    pub fn len(&self) -> usize {
        self.quantum.len() + self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `quantum ‖ weights ‖ bias`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.quantum);
        v.extend_from_slice(&self.weights);
        v.extend_from_slice(&self.bias);
        v
    }

    pub fn from_flat(model: &ModelSpec, flat: &[f64]) -> Result<Self> {
        let shape = Self::zeros(model);
        if flat.len() != shape.len() {
            return Err(QsError::contract(format!("{} values for {} parameters", flat.len(), shape.len())));
        }
        let (q, rest) = flat.split_at(shape.quantum.len());
        let (w, b) = rest.split_at(shape.weights.len());
        Ok(Self { quantum: q.to_vec(), weights: w.to_vec(), bias: b.to_vec() })
    }

    pub fn check(&self, model: &ModelSpec) -> Result<()> {
        let shape = Self::zeros(model);
        if self.quantum.len() != shape.quantum.len()
            || self.weights.len() != shape.weights.len()
            || self.bias.len() != shape.bias.len()
        {
            return Err(QsError::contract(format!(
                "parameter shapes ({}, {}, {}) do not match model ({}, {}, {})",
                self.quantum.len(),
                self.weights.len(),
                self.bias.len(),
                shape.quantum.len(),
                shape.weights.len(),
                shape.bias.len()
            )));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln p_label` with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = *probs
        .get(label)
        .ok_or_else(|| QsError::contract(format!("label {label} out of range for {} classes", probs.len())))?;
    let clamped = p.max(PROB_FLOOR);
    if !(clamped > 0.0) || !clamped.is_finite() {
        return Err(QsError::Numerical { index: label, message: format!("class probability {p}") });
    }
    Ok(-clamped.ln())
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// One simulated register: its input state, processing program, parameter
/// range and measured qubits.
struct Register<'a> {
    initial: Option<&'a Statevector>,
    program: &'a CircuitProgram,
    param_range: std::ops::Range<usize>,
    /// `(local qubit, index into the expectation vector)`.
    measured: Vec<(usize, usize)>,
}

impl ModelSpec {
    /// Amplitude-encoded classifier on `n_qubits` for images of `image_shape`.
    pub fn aae(
        n_qubits: usize,
        image_shape: (usize, usize),
        loader: LoaderConfig,
        processing: ProcessingConfig,
        n_classes: usize,
    ) -> Result<Self> {
        Self::assemble(Loading::Amplitude { n_qubits, loader }, image_shape, processing, n_classes)
    }

    pub fn bae(partition: BlockPartition, loader: LoaderConfig, processing: ProcessingConfig, n_classes: usize) -> Result<Self> {
        Self::assemble(Loading::Block { partition, loader }, partition.image_shape(), processing, n_classes)
    }

    pub fn pae(n_qubits: usize, image_shape: (usize, usize), processing: ProcessingConfig, n_classes: usize) -> Result<Self> {
        let plan = pae_plan(image_shape.0 * image_shape.1, n_qubits)?;
        Self::assemble(Loading::Angle { plan }, image_shape, processing, n_classes)
    }

    /// Validates the pieces and fills in default measured qubits: the first two
    /// qubits for AAE/PAE, the most significant qubit of each block for BAE.
    pub fn assemble(loading: Loading, image_shape: (usize, usize), processing: ProcessingConfig, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(QsError::contract(format!("need at least 2 classes, got {n_classes}")));
        }
        if processing.layers == 0 {
            return Err(QsError::contract("processing needs at least one layer"));
        }
        let pixels = image_shape.0 * image_shape.1;
        let (register_qubits, measured) = match &loading {
            Loading::Amplitude { n_qubits, .. } => {
                if *n_qubits == 0 || pixels > 1usize.checked_shl(*n_qubits as u32).unwrap_or(usize::MAX) {
                    return Err(QsError::contract(format!("{pixels} pixels do not fit in {n_qubits} qubits")));
                }
                (*n_qubits, (0..(*n_qubits).min(2)).collect())
            }
            Loading::Block { partition, .. } => {
                if partition.image_shape() != image_shape {
                    return Err(QsError::contract("block partition does not match image shape"));
                }
                let q = partition.qubits_per_block;
                (q, (0..partition.n_blocks).map(|b| b * q).collect())
            }
            Loading::Angle { plan } => {
                if plan.pixel_count != pixels {
                    return Err(QsError::contract("PAE plan does not match image shape"));
                }
                if processing.layers < plan.n_upload_layers {
                    return Err(QsError::contract(format!(
                        "{} processing layers cannot interleave {} uploading layers",
                        processing.layers, plan.n_upload_layers
                    )));
                }
                (plan.n_qubits, (0..plan.n_qubits.min(2)).collect())
            }
        };
        let connectivity = Connectivity::new(processing.connectivity, register_qubits)?;
        let template = build_hea(register_qubits, processing.layers, connectivity, processing.entangler, processing.brickwork)?;
        let n_quantum = match &loading {
            Loading::Block { partition, .. } => template.n_params * partition.n_blocks,
            _ => template.n_params,
        };
        Ok(Self { loading, processing, image_shape, measured_qubits: measured, n_classes, template, n_quantum })
    }

    /// Overrides the measured qubits (distinct, in range; BAE needs one per block).
    pub fn with_measured(mut self, measured: Vec<usize>) -> Result<Self> {
        let mut sorted = measured.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != measured.len() || measured.is_empty() {
            return Err(QsError::contract("measured qubits must be distinct and non-empty"));
        }
        if let Some(&q) = measured.iter().find(|&&q| q >= self.n_qubits()) {
            return Err(QsError::contract(format!("measured qubit {q} outside {} qubits", self.n_qubits())));
        }
        if let Loading::Block { partition, .. } = &self.loading {
            let mut blocks: Vec<usize> = measured.iter().map(|q| q / partition.qubits_per_block).collect();
            blocks.sort_unstable();
            if blocks != (0..partition.n_blocks).collect::<Vec<_>>() {
                return Err(QsError::contract("BAE measures exactly one qubit per block"));
            }
        }
        self.measured_qubits = measured;
        Ok(self)
    }

    pub fn scheme(&self) -> Scheme {
        match self.loading {
            Loading::Amplitude { .. } => Scheme::Aae,
            Loading::Block { .. } => Scheme::Bae,
            Loading::Angle { .. } => Scheme::Pae,
        }
    }

    pub fn loading(&self) -> &Loading {
        &self.loading
    }

    pub fn processing(&self) -> &ProcessingConfig {
        &self.processing
    }

    pub fn image_shape(&self) -> (usize, usize) {
        self.image_shape
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.measured_qubits
    }

    pub fn n_measured(&self) -> usize {
        self.measured_qubits.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_qubits(&self) -> usize {
        match &self.loading {
            Loading::Block { partition, .. } => partition.total_qubits(),
            _ => self.template.n_qubits,
        }
    }

    pub fn n_quantum_params(&self) -> usize {
        self.n_quantum
    }

    /// Trainable parameter count: processing angles plus readout weights and biases.
    pub fn n_params(&self) -> usize {
        self.n_quantum + self.n_classes * self.n_measured() + self.n_classes
    }

    /// `(register, local qubit)` of every measured qubit. BAE registers are the
    /// blocks; AAE and PAE have a single register.
    pub fn measured_locations(&self) -> Vec<(usize, usize)> {
        match &self.loading {
            Loading::Block { partition, .. } => {
                let q = partition.qubits_per_block;
                self.measured_qubits.iter().map(|&m| (m / q, m % q)).collect()
            }
            _ => self.measured_qubits.iter().map(|&m| (0, m)).collect(),
        }
    }

    /// Processing circuit of a single register.
    pub fn processing_template(&self) -> &CircuitProgram {
        &self.template
    }

    fn check_image(&self, image: &ImageTensor) -> Result<()> {
        if image.shape() != self.image_shape {
            return Err(QsError::contract(format!(
                "image {} is {:?}, model expects {:?}",
                image.source_id,
                image.shape(),
                self.image_shape
            )));
        }
        Ok(())
    }

    fn amplitude_target(&self, image: &ImageTensor, n_qubits: usize) -> Result<TargetAmplitudes> {
        let t = image_to_target(image)?;
        if t.n_qubits() == n_qubits {
            return Ok(t);
        }
        let mut padded = t.values().to_vec();
        padded.resize(1 << n_qubits, 0.0);
        let mut out = crate::encoders::normalize_vector(&padded)?;
        out.source_shape = image.shape();
        Ok(out)
    }

    /// Encodes an image: trains loaders (AAE/BAE) or binds upload angles (PAE).
    pub fn encode(&self, image: &ImageTensor) -> Result<EncodedInput> {
        self.check_image(image)?;
        match &self.loading {
            Loading::Amplitude { n_qubits, loader } => {
                let target = self.amplitude_target(image, *n_qubits)?;
                let report = fit_loader(&target, loader)?;
                self.encode_with_loader_params(image, vec![report.params])
            }
            Loading::Block { loader, .. } => {
                let (_, targets) = partition_blocks(image, self.grid())?;
                let reports = fit_block_loaders(&targets, loader)?;
                self.encode_with_loader_params(image, reports.into_iter().map(|r| r.params).collect())
            }
            Loading::Angle { plan } => Ok(EncodedInput::Angles { program: self.pae_program(plan, image)? }),
        }
    }

    fn grid(&self) -> (usize, usize) {
        match &self.loading {
            Loading::Block { partition, .. } => partition.grid,
            _ => (1, 1),
        }
    }

    /// Rebuilds the encoded input from previously trained loader parameters
    /// (one vector per register); no training happens.
    pub fn encode_with_loader_params(&self, image: &ImageTensor, loader_params: Vec<Vec<f64>>) -> Result<EncodedInput> {
        self.check_image(image)?;
        match &self.loading {
            Loading::Amplitude { n_qubits, loader } => {
                let [params]: [Vec<f64>; 1] = loader_params
                    .try_into()
                    .map_err(|_| QsError::contract("AAE expects a single loader parameter vector"))?;
                let target = self.amplitude_target(image, *n_qubits)?;
                let state = loader_ansatz(*n_qubits, loader.layers).run(&params)?;
                let fidelity = target.fidelity(&state)?;
                Ok(EncodedInput::Amplitude { loader_params: params, state, fidelity })
            }
            Loading::Block { partition, loader } => {
                if loader_params.len() != partition.n_blocks {
                    return Err(QsError::contract(format!(
                        "{} loader vectors for {} blocks",
                        loader_params.len(),
                        partition.n_blocks
                    )));
                }
                let (_, targets) = partition_blocks(image, partition.grid)?;
                let ansatz = loader_ansatz(partition.qubits_per_block, loader.layers);
                let states = loader_params.iter().map(|p| ansatz.run(p)).collect::<Result<Vec<_>>>()?;
                let fidelities = targets.iter().zip(&states).map(|(t, s)| t.fidelity(s)).collect::<Result<Vec<_>>>()?;
                Ok(EncodedInput::Blocks { loader_params, states, fidelities })
            }
            Loading::Angle { plan } => {
                if !loader_params.is_empty() {
                    return Err(QsError::contract("PAE has no loader parameters"));
                }
                Ok(EncodedInput::Angles { program: self.pae_program(plan, image)? })
            }
        }
    }

    /// `U₁P₁U₂P₂…` with trailing processing layers once uploads run out.
    fn pae_program(&self, plan: &PaePlan, image: &ImageTensor) -> Result<CircuitProgram> {
        let angles = plan.angles(image.pixels())?;
        let connectivity = Connectivity::new(self.processing.connectivity, plan.n_qubits)?;
        let edges = connectivity.edges();
        let mut p = CircuitProgram::new(plan.n_qubits);
        for l in 0..self.processing.layers {
            if let Some(layer) = angles.get(l) {
                plan.push_upload_layer(&mut p, layer);
            }
            push_hea_layer(&mut p, l, &edges, self.processing.entangler, self.processing.brickwork);
        }
        Ok(p)
    }

    fn registers<'a>(&'a self, input: &'a EncodedInput) -> Result<Vec<Register<'a>>> {
        let all_measured = |n: usize| -> Vec<(usize, usize)> {
            self.measured_qubits.iter().enumerate().filter(|(_, &q)| q < n).map(|(i, &q)| (q, i)).collect()
        };
        match (&self.loading, input) {
            (Loading::Amplitude { .. }, EncodedInput::Amplitude { state, .. }) => Ok(vec![Register {
                initial: Some(state),
                program: &self.template,
                param_range: 0..self.n_quantum,
                measured: all_measured(self.template.n_qubits),
            }]),
            (Loading::Block { partition, .. }, EncodedInput::Blocks { states, .. }) => {
                let q = partition.qubits_per_block;
                let per = self.template.n_params;
                Ok(states
                    .iter()
                    .enumerate()
                    .map(|(b, s)| Register {
                        initial: Some(s),
                        program: &self.template,
                        param_range: b * per..(b + 1) * per,
                        measured: self
                            .measured_qubits
                            .iter()
                            .enumerate()
                            .filter(|(_, &m)| m / q == b)
                            .map(|(i, &m)| (m % q, i))
                            .collect(),
                    })
                    .collect())
            }
            (Loading::Angle { plan }, EncodedInput::Angles { program }) => {
                if program.n_params != self.n_quantum || program.n_qubits != plan.n_qubits {
                    return Err(QsError::contract("PAE program does not belong to this model"));
                }
                Ok(vec![Register {
                    initial: None,
                    program,
                    param_range: 0..self.n_quantum,
                    measured: all_measured(plan.n_qubits),
                }])
            }
            _ => Err(QsError::contract(format!("encoded input does not match a {} model", self.scheme()))),
        }
    }

    fn register_state(reg: &Register<'_>, quantum: &[f64]) -> Result<Statevector> {
        let params = &quantum[reg.param_range.clone()];
        match reg.initial {
            Some(s) => reg.program.run_from(s.clone(), params),
            None => reg.program.run(params),
        }
    }

    /// Final states of every register (one for AAE/PAE, one per block for BAE).
    pub fn register_states(&self, input: &EncodedInput, params: &TrainableParams) -> Result<Vec<Statevector>> {
        params.check(self)?;
        self.registers(input)?.iter().map(|r| Self::register_state(r, &params.quantum)).collect()
    }

    /// `⟨Z_q⟩` for every measured qubit, in `measured_qubits` order.
    pub fn expectations(&self, input: &EncodedInput, params: &TrainableParams) -> Result<Vec<f64>> {
        params.check(self)?;
        let mut e = vec![0.0; self.n_measured()];
        for reg in self.registers(input)? {
            let state = Self::register_state(&reg, &params.quantum)?;
            for &(local, idx) in &reg.measured {
                e[idx] = state.expectation_z(local)?;
            }
        }
        Ok(e)
    }

    /// `W·e + b`.
    pub fn logits(&self, expectations: &[f64], params: &TrainableParams) -> Vec<f64> {
        let m = self.n_measured();
        (0..self.n_classes)
            .map(|c| params.bias[c] + params.weights[c * m..(c + 1) * m].iter().zip(expectations).map(|(w, e)| w * e).sum::<f64>())
            .collect()
    }

    /// Class probabilities for an encoded input.
    pub fn forward(&self, input: &EncodedInput, params: &TrainableParams) -> Result<Vec<f64>> {
        let e = self.expectations(input, params)?;
        Ok(softmax(&self.logits(&e, params)))
    }

    /// Encodes `image` and runs [`ModelSpec::forward`].
    pub fn forward_image(&self, image: &ImageTensor, params: &TrainableParams) -> Result<Vec<f64>> {
        self.forward(&self.encode(image)?, params)
    }

    pub fn predict(&self, input: &EncodedInput, params: &TrainableParams) -> Result<usize> {
        Ok(argmax(&self.forward(input, params)?))
    }

    /// Cross-entropy loss and gradients with respect to the processing angles
    /// and readout. Loader parameters are constants here.
    pub fn loss_and_gradients(&self, input: &EncodedInput, label: usize, params: &TrainableParams) -> Result<(f64, TrainableParams)> {
        if label >= self.n_classes {
            return Err(QsError::contract(format!("label {label} out of range for {} classes", self.n_classes)));
        }
        params.check(self)?;
        let registers = self.registers(input)?;
        let mut states = Vec::with_capacity(registers.len());
        let mut e = vec![0.0; self.n_measured()];
        for reg in &registers {
            let s = Self::register_state(reg, &params.quantum)?;
            for &(local, idx) in &reg.measured {
                e[idx] = s.expectation_z(local)?;
            }
            states.push(s);
        }
        let probs = softmax(&self.logits(&e, params));
        let loss = cross_entropy(&probs, label)?;

        let m = self.n_measured();
        let mut grads = TrainableParams::zeros(self);
        let mut d_e = vec![0.0; m];
        for (c, &p) in probs.iter().enumerate() {
            let d_logit = p - if c == label { 1.0 } else { 0.0 };
            grads.bias[c] = d_logit;
            for j in 0..m {
                grads.weights[c * m + j] = d_logit * e[j];
                d_e[j] += d_logit * params.weights[c * m + j];
            }
        }
        for (reg, state) in registers.iter().zip(states) {
            if reg.measured.is_empty() {
                continue;
            }
            let terms: Vec<(usize, f64)> = reg.measured.iter().map(|&(local, idx)| (local, d_e[idx])).collect();
            backward_sweep(
                reg.program,
                &params.quantum[reg.param_range.clone()],
                state,
                Observable::WeightedZ(&terms),
                &mut grads.quantum[reg.param_range.clone()],
            );
        }
        Ok((loss, grads))
    }

    /// The complete circuit for one input with every loading angle bound:
    /// loaders (AAE/BAE) precede processing; PAE interleaves. BAE registers are
    /// laid out block after block. Returns the program and its slot values.
    pub fn full_program(&self, input: &EncodedInput, params: &TrainableParams) -> Result<(CircuitProgram, Vec<f64>)> {
        params.check(self)?;
        match (&self.loading, input) {
            (Loading::Amplitude { n_qubits, loader }, EncodedInput::Amplitude { loader_params, .. }) => {
                let mut p = loader_ansatz(*n_qubits, loader.layers).bind(loader_params)?;
                p.mark_loading_boundary();
                p.extend_shifted(&self.template, 0, 0);
                Ok((p, params.quantum.clone()))
            }
            (Loading::Block { partition, loader }, EncodedInput::Blocks { loader_params, .. }) => {
                let q = partition.qubits_per_block;
                let ansatz = loader_ansatz(q, loader.layers);
                let mut p = CircuitProgram::new(partition.total_qubits());
                for (b, lp) in loader_params.iter().enumerate() {
                    p.extend_shifted(&ansatz.bind(lp)?, b * q, 0);
                }
                p.mark_loading_boundary();
                for b in 0..partition.n_blocks {
                    p.extend_shifted(&self.template, b * q, b * self.template.n_params);
                }
                Ok((p, params.quantum.clone()))
            }
            (Loading::Angle { .. }, EncodedInput::Angles { program }) => Ok((program.clone(), params.quantum.clone())),
            _ => Err(QsError::contract(format!("encoded input does not match a {} model", self.scheme()))),
        }
    }

    /// Processing-only circuit; PAE uploads are bound to zero angles.
    pub fn processing_program(&self) -> Result<CircuitProgram> {
        match &self.loading {
            Loading::Block { partition, .. } => {
                let q = partition.qubits_per_block;
                let mut p = CircuitProgram::new(partition.total_qubits());
                for b in 0..partition.n_blocks {
                    p.extend_shifted(&self.template, b * q, b * self.template.n_params);
                }
                Ok(p)
            }
            Loading::Angle { plan } => {
                let blank = ImageTensor::new(self.image_shape.0, self.image_shape.1, vec![0.0; plan.pixel_count], 0, "blank")?;
                self.pae_program(&PaePlan { scaling: PixelScaling::Unit, ..plan.clone() }, &blank)
            }
            Loading::Amplitude { .. } => Ok(self.template.clone()),
        }
    }
}
