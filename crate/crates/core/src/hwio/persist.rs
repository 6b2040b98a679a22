//! Versioned text artifacts for trained models and trained loaders.
//!
//! Both formats are UTF-8, one `key value` record per line, and end with
//! `checksum sha256 <hex>` over every preceding byte (newlines included).
//! Reals are written in shortest round-trip decimal form, so reloading is
//! exact.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::encoders::{pae_plan, BlockPartition, LoaderConfig, PixelScaling};
use crate::model::{EncodedSample, Loading, ModelSpec, ProcessingConfig, Scheme, TrainableParams};
use crate::{QsError, Result};

pub const MODEL_MAGIC: &str = "qscene-model";
pub const MODEL_VERSION: u32 = 1;
pub const LOADERS_MAGIC: &str = "qscene-loaders";
pub const LOADERS_VERSION: u32 = 1;

/// A trained classifier as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelArtifact {
    pub model: ModelSpec,
    pub params: TrainableParams,
    pub class_names: Vec<String>,
    /// Seed of the classifier training run.
    pub seed: u64,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn seal(body: String) -> String {
    let digest = hex(&Sha256::digest(body.as_bytes()));
    format!("{body}checksum sha256 {digest}\n")
}

/// Checks magic, version and checksum; returns the body lines after the header.
fn unseal<'a>(text: &'a str, magic: &str, version: u32) -> Result<Vec<&'a str>> {
    let first = text.lines().next().unwrap_or("");
    let Some(found) = first.strip_prefix(magic).and_then(|r| r.strip_prefix(' ')) else {
        return Err(QsError::Corrupt(format!("missing `{magic}` header")));
    };
    if found.trim() != version.to_string() {
        return Err(QsError::Version { found: found.trim().to_string(), expected: version.to_string() });
    }
    let body_end = text.trim_end_matches('\n').rfind('\n').map(|i| i + 1).unwrap_or(0);
    let (body, tail) = text.split_at(body_end);
    let Some(expected) = tail.trim_end().strip_prefix("checksum sha256 ") else {
        return Err(QsError::Corrupt("missing checksum line (file truncated?)".into()));
    };
    if hex(&Sha256::digest(body.as_bytes())) != expected {
        return Err(QsError::Corrupt("checksum mismatch".into()));
    }
    Ok(body.lines().skip(1).collect())
}

/// Sequential `key value` reader.
struct Fields<'a> {
    lines: std::iter::Peekable<std::vec::IntoIter<&'a str>>,
}

impl<'a> Fields<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.lines.next().ok_or_else(|| QsError::Corrupt("unexpected end of artifact".into()))
    }

    fn get(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            None if line == key => Ok(""),
            _ => Err(QsError::Corrupt(format!("expected `{key}`, found `{line}`"))),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.trim().parse().map_err(|_| QsError::Corrupt(format!("bad value `{v}` for `{key}`")))
    }

    fn pair(&mut self, key: &str) -> Result<(usize, usize)> {
        let v = self.get(key)?;
        let nums: Vec<usize> = parse_list(v, key)?;
        match nums[..] {
            [a, b] => Ok((a, b)),
            _ => Err(QsError::Corrupt(format!("`{key}` needs two integers"))),
        }
    }

    fn block(&mut self, key: &str) -> Result<Vec<f64>> {
        let n: usize = self.parse(key)?;
        (0..n)
            .map(|_| {
                let l = self.next_line()?;
                l.parse().map_err(|_| QsError::Corrupt(format!("bad real `{l}` in `{key}`")))
            })
            .collect()
    }
}

fn parse_list<T: std::str::FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    v.split_whitespace()
        .map(|x| x.parse().map_err(|_| QsError::Corrupt(format!("bad value `{x}` in `{key}`"))))
        .collect()
}

fn push_block(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(&format!("{key} {}\n", values.len()));
    for v in values {
        out.push_str(&format!("{v:?}\n"));
    }
}

fn write_loader(out: &mut String, c: &LoaderConfig) {
    out.push_str(&format!("loader_layers {}\n", c.layers));
    out.push_str(&format!("loader_stages {}\n", c.stages.map(|s| s.to_string()).unwrap_or_else(|| "auto".into())));
    out.push_str(&format!("loader_steps {}\nloader_lr {:?}\nloader_seed {}\n", c.steps, c.lr, c.seed));
}

fn read_loader(f: &mut Fields<'_>) -> Result<LoaderConfig> {
    let layers = f.parse("loader_layers")?;
    let stages = match f.get("loader_stages")? {
        "auto" => None,
        s => Some(s.parse().map_err(|_| QsError::Corrupt(format!("bad loader_stages `{s}`")))?),
    };
    Ok(LoaderConfig { layers, stages, steps: f.parse("loader_steps")?, lr: f.parse("loader_lr")?, seed: f.parse("loader_seed")? })
}

pub fn model_to_string(a: &ModelArtifact) -> Result<String> {
    let m = &a.model;
    a.params.check(m)?;
    if a.class_names.len() != m.n_classes() {
        return Err(QsError::contract(format!("{} class names for {} classes", a.class_names.len(), m.n_classes())));
    }
    if let Some(n) = a.class_names.iter().find(|n| n.contains('\n') || n.is_empty()) {
        return Err(QsError::contract(format!("class name {n:?} cannot be stored")));
    }
    let mut out = format!("{MODEL_MAGIC} {MODEL_VERSION}\n");
    out.push_str("convention qubit0=msb rotation=exp(-i*theta*P/2) readout=softmax(W*<Z>+b)\n");
    out.push_str(&format!("scheme {}\n", m.scheme()));
    let (h, w) = m.image_shape();
    out.push_str(&format!("image_shape {h} {w}\n"));
    match m.loading() {
        Loading::Amplitude { n_qubits, loader } => {
            out.push_str(&format!("n_qubits {n_qubits}\n"));
            write_loader(&mut out, loader);
        }
        Loading::Block { partition, loader } => {
            out.push_str(&format!("grid {} {}\n", partition.grid.0, partition.grid.1));
            write_loader(&mut out, loader);
        }
        Loading::Angle { plan } => {
            out.push_str(&format!("n_qubits {}\n", plan.n_qubits));
            let s = match plan.scaling {
                PixelScaling::Unit => "unit",
                PixelScaling::MinMax => "minmax",
            };
            out.push_str(&format!("pixel_scaling {s}\n"));
        }
    }
    let p = m.processing();
    out.push_str(&format!(
        "layers {}\nconnectivity {}\nentangler {}\nbrickwork {}\n",
        p.layers, p.connectivity, p.entangler, p.brickwork
    ));
    out.push_str(&format!("n_classes {}\n", m.n_classes()));
    for (i, n) in a.class_names.iter().enumerate() {
        out.push_str(&format!("class {i} {n}\n"));
    }
    let measured: Vec<String> = m.measured_qubits().iter().map(|q| q.to_string()).collect();
    out.push_str(&format!("measured {}\n", measured.join(" ")));
    out.push_str(&format!("seed {}\n", a.seed));
    push_block(&mut out, "quantum", &a.params.quantum);
    push_block(&mut out, "weights", &a.params.weights);
    push_block(&mut out, "bias", &a.params.bias);
    Ok(seal(out))
}

pub fn model_from_str(text: &str) -> Result<ModelArtifact> {
    let lines = unseal(text, MODEL_MAGIC, MODEL_VERSION)?;
    let mut f = Fields { lines: lines.into_iter().peekable() };
    f.get("convention")?;
    let scheme: Scheme = f.get("scheme")?.parse().map_err(|_| QsError::Corrupt("unknown scheme".into()))?;
    let image_shape = f.pair("image_shape")?;
    let loading = match scheme {
        Scheme::Aae => Loading::Amplitude { n_qubits: f.parse("n_qubits")?, loader: read_loader(&mut f)? },
        Scheme::Bae => {
            let grid = f.pair("grid")?;
            Loading::Block { partition: BlockPartition::for_shape(image_shape, grid)?, loader: read_loader(&mut f)? }
        }
        Scheme::Pae => {
            let n: usize = f.parse("n_qubits")?;
            let scaling = match f.get("pixel_scaling")? {
                "unit" => PixelScaling::Unit,
                "minmax" => PixelScaling::MinMax,
                s => return Err(QsError::Corrupt(format!("unknown pixel_scaling `{s}`"))),
            };
            Loading::Angle { plan: pae_plan(image_shape.0 * image_shape.1, n)?.with_scaling(scaling) }
        }
    };
    let bad = |k: &str| QsError::Corrupt(format!("bad `{k}`"));
    let processing = ProcessingConfig {
        layers: f.parse("layers")?,
        connectivity: f.get("connectivity")?.parse().map_err(|_| bad("connectivity"))?,
        entangler: f.get("entangler")?.parse().map_err(|_| bad("entangler"))?,
        brickwork: f.parse("brickwork")?,
    };
    let n_classes: usize = f.parse("n_classes")?;
    let mut class_names = Vec::with_capacity(n_classes);
    for i in 0..n_classes {
        let v = f.get("class")?;
        match v.split_once(' ') {
            Some((idx, name)) if idx == i.to_string() => class_names.push(name.to_string()),
            _ => return Err(bad("class")),
        }
    }
    let measured = parse_list(f.get("measured")?, "measured")?;
    let seed = f.parse("seed")?;
    let model = ModelSpec::assemble(loading, image_shape, processing, n_classes)?.with_measured(measured)?;
    let params = TrainableParams { quantum: f.block("quantum")?, weights: f.block("weights")?, bias: f.block("bias")? };
    if let Some(extra) = f.lines.next() {
        return Err(QsError::Corrupt(format!("trailing line `{extra}`")));
    }
    params.check(&model).map_err(|e| QsError::Corrupt(e.to_string()))?;
    Ok(ModelArtifact { model, params, class_names, seed })
}

fn file_err(path: &Path, e: std::io::Error) -> QsError {
    QsError::File { path: path.to_path_buf(), message: e.to_string() }
}

pub fn save_model(path: &Path, artifact: &ModelArtifact) -> Result<()> {
    fs::write(path, model_to_string(artifact)?).map_err(|e| file_err(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    model_from_str(&fs::read_to_string(path).map_err(|e| file_err(path, e))?)
}

/// [`load_model`], failing with a scheme mismatch unless the file holds `expected`.
pub fn load_model_expect(path: &Path, expected: Scheme) -> Result<ModelArtifact> {
    let a = load_model(path)?;
    if a.model.scheme() != expected {
        return Err(QsError::SchemeMismatch { found: a.model.scheme().to_string(), expected: expected.to_string() });
    }
    Ok(a)
}

/// Trained loader parameters per image, keyed by source id.
#[derive(Clone, Debug, PartialEq)]
pub struct LoaderArtifact {
    pub scheme: Scheme,
    pub image_shape: (usize, usize),
    /// Qubits per register (AAE: all, BAE: per block).
    pub register_qubits: usize,
    pub layers: usize,
    pub entries: Vec<LoaderEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoaderEntry {
    pub source_id: String,
    pub label: usize,
    pub fidelity: f64,
    pub registers: Vec<Vec<f64>>,
}

impl LoaderArtifact {
    /// Collects the frozen loader parameters of encoded samples.
    pub fn from_samples(model: &ModelSpec, samples: &[EncodedSample]) -> Result<Self> {
        let (register_qubits, layers) = match model.loading() {
            Loading::Amplitude { n_qubits, loader } => (*n_qubits, loader.layers),
            Loading::Block { partition, loader } => (partition.qubits_per_block, loader.layers),
            Loading::Angle { .. } => return Err(QsError::contract("angle encoding has no trained loaders")),
        };
        Ok(Self {
            scheme: model.scheme(),
            image_shape: model.image_shape(),
            register_qubits,
            layers,
            entries: samples
                .iter()
                .map(|s| LoaderEntry {
                    source_id: s.source_id.clone(),
                    label: s.label,
                    fidelity: s.input.fidelity(),
                    registers: s.input.loader_params(),
                })
                .collect(),
        })
    }

    pub fn find(&self, source_id: &str) -> Option<&LoaderEntry> {
        self.entries.iter().find(|e| e.source_id == source_id)
    }

    /// Fails unless these loaders were trained for `model`'s loading layout.
    pub fn check_compatible(&self, model: &ModelSpec) -> Result<()> {
        let other = LoaderArtifact::from_samples(model, &[])?;
        if (self.scheme, self.image_shape, self.register_qubits, self.layers)
            != (other.scheme, other.image_shape, other.register_qubits, other.layers)
        {
            if self.scheme != other.scheme {
                return Err(QsError::SchemeMismatch { found: self.scheme.to_string(), expected: other.scheme.to_string() });
            }
            return Err(QsError::contract("loader artifact was trained for a different image shape or loader depth"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = format!("{LOADERS_MAGIC} {LOADERS_VERSION}\n");
        out.push_str(&format!("scheme {}\n", self.scheme));
        out.push_str(&format!("image_shape {} {}\n", self.image_shape.0, self.image_shape.1));
        out.push_str(&format!("register_qubits {}\nlayers {}\nsamples {}\n", self.register_qubits, self.layers, self.entries.len()));
        for e in &self.entries {
            if e.source_id.contains('\n') {
                return Err(QsError::contract(format!("source id {:?} cannot be stored", e.source_id)));
            }
            out.push_str(&format!("sample {} {} {:?} {}\n", e.label, e.registers.len(), e.fidelity, e.source_id));
            for r in &e.registers {
                let vals: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&format!("r {} {}\n", r.len(), vals.join(" ")));
            }
        }
        Ok(seal(out))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines = unseal(text, LOADERS_MAGIC, LOADERS_VERSION)?;
        let mut f = Fields { lines: lines.into_iter().peekable() };
        let scheme: Scheme = f.get("scheme")?.parse().map_err(|_| QsError::Corrupt("unknown scheme".into()))?;
        let image_shape = f.pair("image_shape")?;
        let register_qubits = f.parse("register_qubits")?;
        let layers = f.parse("layers")?;
        let n: usize = f.parse("samples")?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let v = f.get("sample")?;
            let mut parts = v.splitn(4, ' ');
            let mut next = || parts.next().ok_or_else(|| QsError::Corrupt(format!("short sample line `{v}`")));
            let label = next()?.parse().map_err(|_| QsError::Corrupt("bad sample label".into()))?;
            let n_reg: usize = next()?.parse().map_err(|_| QsError::Corrupt("bad register count".into()))?;
            let fidelity = next()?.parse().map_err(|_| QsError::Corrupt("bad fidelity".into()))?;
            let source_id = next()?.to_string();
            let mut registers = Vec::with_capacity(n_reg);
            for _ in 0..n_reg {
                let vals: Vec<f64> = parse_list(f.get("r")?, "r")?;
                match vals.split_first() {
                    Some((&len, rest)) if len as usize == rest.len() => registers.push(rest.to_vec()),
                    _ => return Err(QsError::Corrupt("register length mismatch".into())),
                }
            }
            entries.push(LoaderEntry { source_id, label, fidelity, registers });
        }
        if let Some(extra) = f.lines.next() {
            return Err(QsError::Corrupt(format!("trailing line `{extra}`")));
        }
        Ok(Self { scheme, image_shape, register_qubits, layers, entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()?).map_err(|e| file_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| file_err(path, e))?)
    }
}
