use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use log::{info, warn};
use qscene::data::{ingest_directory, load_image, make_synthetic, preprocess, read_cache, save_png, write_cache, SyntheticKind};
use qscene::encoders::{BlockPartition, LoaderConfig};
use qscene::hwio::persist::LoaderArtifact;
use qscene::hwio::{export_qasm, gate_stats, load_model, random_baseline_quantile, save_model, shot_inference, ModelArtifact};
use qscene::model::{ConnectivityKind, EncodedSample, Entangler, ProcessingConfig};
use qscene::train::{encode_dataset, evaluate_encoded, fit_encoded, write_history_csv, Metrics, TrainConfig};
use qscene::{Dataset, ImageTensor, ModelSpec, QsError, Scheme};

use crate::config::{CliError, CliResult, Dims, Settings};
use crate::svg::{line_chart, Chart, Series};

fn out_dir(s: &mut Settings, default: &str) -> CliResult<PathBuf> {
    let dir = PathBuf::from(s.resolve("out", default.to_string())?);
    fs::create_dir_all(&dir).map_err(|e| CliError::config("out", format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Core(QsError::Corrupt(format!("csv: {e}")))
}

fn written(path: &Path) {
    println!("wrote {}", path.display());
}

/// A tensor cache as stored, or a `root/<class>/*` tree.
fn read_dataset(path: &Path) -> CliResult<(Dataset, bool)> {
    if path.is_dir() {
        let report = ingest_directory(path, None)?;
        for f in &report.failures {
            warn!("skipped {f}");
        }
        Ok((report.dataset, true))
    } else {
        Ok((read_cache(path)?, false))
    }
}

/// Directory images are always preprocessed; cached tensors only when their
/// shape differs from the model input.
fn conform(ds: Dataset, shape: (usize, usize), from_dir: bool) -> CliResult<Dataset> {
    if ds.is_empty() {
        return Err(QsError::Contract("dataset is empty".into()).into());
    }
    if !from_dir && ds.samples.iter().all(|s| s.shape() == shape) {
        return Ok(ds);
    }
    Ok(ds.preprocessed(shape)?)
}

pub fn build_model(s: &mut Settings, n_classes: usize) -> CliResult<ModelSpec> {
    let scheme: Scheme = s.resolve("scheme", Scheme::Pae)?;
    let d = ProcessingConfig::default();
    let processing = ProcessingConfig {
        layers: s.resolve("layers", d.layers)?,
        connectivity: s.resolve::<ConnectivityKind>("connectivity", d.connectivity)?,
        entangler: s.resolve::<Entangler>("entangler", d.entangler)?,
        brickwork: s.resolve("brickwork", d.brickwork)?,
    };
    let dl = LoaderConfig::default();
    let stages = match s.raw("loader_stages") {
        None | Some("auto") => {
            s.set("loader_stages", Some("auto"));
            None
        }
        Some(_) => Some(s.get::<usize>("loader_stages", 0)?),
    };
    let loader = LoaderConfig {
        layers: s.resolve("loader_layers", dl.layers)?,
        stages,
        steps: s.resolve("loader_steps", dl.steps)?,
        lr: s.resolve("loader_lr", dl.lr)?,
        seed: s.resolve("seed", 0u64)?,
    };
    let field = |key: &'static str| move |e: QsError| CliError::config(key, e.to_string());
    let model = match scheme {
        Scheme::Aae => {
            let q: usize = s.resolve("qubits", 10)?;
            let image = s.resolve("image", Dims(1 << (q / 2), 1 << (q - q / 2)))?;
            ModelSpec::aae(q, (image.0, image.1), loader, processing, n_classes).map_err(field("qubits"))?
        }
        Scheme::Bae => {
            let image = s.resolve("image", Dims(16, 16))?;
            let grid = s.resolve("grid", Dims(2, 2))?;
            let part = BlockPartition::for_shape((image.0, image.1), (grid.0, grid.1)).map_err(field("grid"))?;
            ModelSpec::bae(part, loader, processing, n_classes).map_err(field("layers"))?
        }
        Scheme::Pae => {
            let q: usize = s.resolve("qubits", 10)?;
            let image = s.resolve("image", Dims(8, 8))?;
            ModelSpec::pae(q, (image.0, image.1), processing, n_classes).map_err(field("layers"))?
        }
    };
    match s.raw("measured").map(str::to_string) {
        None => Ok(model),
        Some(list) => {
            let qubits = list
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::config("measured", format!("`{list}`: {e}")))?;
            model.with_measured(qubits).map_err(field("measured"))
        }
    }
}

/// Encodes samples, reusing stored loaders where the source id matches.
fn encode(model: &ModelSpec, ds: &Dataset, loaders: Option<&LoaderArtifact>) -> CliResult<Vec<EncodedSample>> {
    let Some(art) = loaders else {
        return Ok(encode_dataset(model, ds)?);
    };
    art.check_compatible(model)?;
    let mut out: Vec<Option<EncodedSample>> = Vec::with_capacity(ds.len());
    let mut missing = Vec::new();
    for img in &ds.samples {
        match art.find(&img.source_id) {
            Some(entry) => out.push(Some(EncodedSample {
                input: model.encode_with_loader_params(img, entry.registers.clone())?,
                label: img.label,
                source_id: img.source_id.clone(),
            })),
            None => {
                out.push(None);
                missing.push(img.clone());
            }
        }
    }
    info!("reused {} stored loaders, fitting {}", ds.len() - missing.len(), missing.len());
    let mut fresh = if missing.is_empty() {
        Vec::new()
    } else {
        encode_dataset(model, &Dataset { samples: missing, ..ds.clone() })?
    }
    .into_iter();
    Ok(out.into_iter().map(|o| o.or_else(|| fresh.next()).expect("one fresh encoding per missing sample")).collect())
}

fn load_loaders(s: &Settings) -> CliResult<Option<LoaderArtifact>> {
    match s.raw("loaders") {
        None => Ok(None),
        Some(_) => Ok(Some(LoaderArtifact::load(&s.existing("loaders", "")?)?)),
    }
}

pub fn synth_data(s: &mut Settings) -> CliResult<()> {
    let kind: SyntheticKind = s.resolve("kind", SyntheticKind::BrightVsDark)?;
    let n: usize = s.resolve("n", 50)?;
    let n_test: usize = s.resolve("n_test", n.div_ceil(2))?;
    let image = s.resolve("image", Dims(8, 8))?;
    let noise: f64 = s.resolve("noise", 0.1)?;
    let seed: u64 = s.resolve("seed", 0)?;
    let png: bool = s.resolve("png", false)?;
    if n == 0 || n_test == 0 {
        return Err(CliError::config(if n == 0 { "n" } else { "n_test" }, "must be at least 1"));
    }
    let out = out_dir(s, "data")?;
    let shape = (image.0, image.1);
    let sets = [
        ("train", make_synthetic(kind, n, shape, noise, seed).map_err(|e| CliError::config("noise", e.to_string()))?),
        ("test", make_synthetic(kind, n_test, shape, noise, seed.wrapping_add(1))?),
    ];
    for (name, ds) in &sets {
        let path = out.join(format!("{name}.qtns"));
        write_cache(&path, ds)?;
        written(&path);
        if png {
            for img in &ds.samples {
                let p = out.join(name).join(format!("{}.png", img.source_id));
                fs::create_dir_all(p.parent().expect("class directory"))?;
                save_png(img, &p)?;
            }
            written(&out.join(name));
        }
    }
    Ok(())
}

pub fn train_loader(s: &mut Settings) -> CliResult<()> {
    let data = s.existing("train_data", "data/train.qtns")?;
    let (raw, from_dir) = read_dataset(&data)?;
    let model = build_model(s, raw.n_classes())?;
    if model.scheme() == Scheme::Pae {
        return Err(CliError::config("scheme", "pae has no trained loaders"));
    }
    let ds = conform(raw, model.image_shape(), from_dir)?;
    let out = out_dir(s, "out")?;
    let encoded = encode_dataset(&model, &ds)?;
    let artifact = LoaderArtifact::from_samples(&model, &encoded)?;
    let path = out.join("loaders.qld");
    artifact.save(&path)?;
    written(&path);

    let path = out.join("loader_fidelity.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["source_id", "label", "fidelity"]).map_err(csv_err)?;
    for e in &encoded {
        w.write_record([e.source_id.clone(), e.label.to_string(), format!("{:?}", e.input.fidelity())]).map_err(csv_err)?;
    }
    w.flush()?;
    written(&path);
    let mean = encoded.iter().map(|e| e.input.fidelity()).sum::<f64>() / encoded.len() as f64;
    let min = encoded.iter().map(|e| e.input.fidelity()).fold(f64::INFINITY, f64::min);
    println!("loaders samples={} mean_fidelity={mean:.6} min_fidelity={min:.6}", encoded.len());
    Ok(())
}

fn write_metrics(path: &Path, m: &Metrics, names: &[String]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["class", "name", "count", "accuracy"]).map_err(csv_err)?;
    for (c, name) in names.iter().enumerate() {
        let count = m.class_counts.get(c).copied().unwrap_or(0);
        let acc = m.per_class_accuracy.get(c).copied().unwrap_or(0.0);
        w.write_record([c.to_string(), name.clone(), count.to_string(), format!("{acc:?}")]).map_err(csv_err)?;
    }
    let total: usize = m.class_counts.iter().sum();
    w.write_record(["all".to_string(), String::new(), total.to_string(), format!("{:?}", m.accuracy)]).map_err(csv_err)?;
    w.flush()?;
    written(path);
    Ok(())
}

pub fn train(s: &mut Settings) -> CliResult<()> {
    let data = s.existing("train_data", "data/train.qtns")?;
    let (raw, from_dir) = read_dataset(&data)?;
    let model = build_model(s, raw.n_classes())?;
    let ds = conform(raw, model.image_shape(), from_dir)?;
    let d = TrainConfig::default();
    let config = TrainConfig {
        epochs: s.resolve("epochs", d.epochs)?,
        batch_size: s.resolve("batch_size", d.batch_size)?,
        lr: s.resolve("lr", d.lr)?,
        seed: s.resolve("seed", d.seed)?,
        val_fraction: s.resolve("val_fraction", d.val_fraction)?,
    };
    if config.epochs == 0 {
        return Err(CliError::config("epochs", "must be at least 1"));
    }
    if config.batch_size == 0 {
        return Err(CliError::config("batch_size", "must be at least 1"));
    }
    if !(config.lr > 0.0 && config.lr.is_finite()) {
        return Err(CliError::config("lr", "must be positive"));
    }
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(CliError::config("val_fraction", "must lie in [0, 1)"));
    }
    let loaders = load_loaders(s)?;
    let out = out_dir(s, "out")?;
    info!("{} model: {} qubits, {} parameters, {} samples", model.scheme(), model.n_qubits(), model.n_params(), ds.len());
    let encoded = encode(&model, &ds, loaders.as_ref())?;
    let report = fit_encoded(&model, &encoded, &config, None)?;

    let artifact = ModelArtifact { model, params: report.params.clone(), class_names: ds.class_names.clone(), seed: config.seed };
    let path = out.join("model.qmod");
    save_model(&path, &artifact)?;
    written(&path);
    let path = out.join("history.csv");
    write_history_csv(File::create(&path)?, &report.history)?;
    written(&path);
    write_metrics(&out.join("metrics.csv"), &report.metrics, &ds.class_names)?;
    let path = out.join("run.cfg");
    fs::write(&path, s.to_text())?;
    written(&path);
    println!(
        "train n_train={} n_val={} best_epoch={} best_val_loss={:.6} val_accuracy={:.4}",
        report.n_train, report.n_val, report.best_epoch, report.best_val_loss, report.metrics.accuracy
    );
    Ok(())
}

pub fn eval(s: &mut Settings) -> CliResult<()> {
    let model_path = s.existing("model", "out/model.qmod")?;
    let data = s.existing("test_data", "data/test.qtns")?;
    let art = load_model(&model_path)?;
    let (raw, from_dir) = read_dataset(&data)?;
    if raw.class_names != art.class_names {
        warn!("dataset classes {:?} differ from model classes {:?}", raw.class_names, art.class_names);
    }
    let ds = conform(raw, art.model.image_shape(), from_dir)?;
    let loaders = load_loaders(s)?;
    let out = out_dir(s, "out")?;
    let encoded = encode(&art.model, &ds, loaders.as_ref())?;
    let m = evaluate_encoded(&art.model, &art.params, &encoded)?;

    let path = out.join("eval.csv");
    let fresh = !path.exists();
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(["model", "data", "scheme", "n_qubits", "layers", "n_params", "n_samples", "accuracy", "mean_loss"])
            .map_err(csv_err)?;
    }
    let mm = &art.model;
    w.write_record([
        model_path.display().to_string(),
        data.display().to_string(),
        mm.scheme().to_string(),
        mm.n_qubits().to_string(),
        mm.processing().layers.to_string(),
        mm.n_params().to_string(),
        ds.len().to_string(),
        format!("{:?}", m.accuracy),
        format!("{:?}", m.loss_history[0]),
    ])
    .map_err(csv_err)?;
    w.flush()?;
    written(&path);

    let path = out.join("confusion.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["true\\predicted".to_string()];
    header.extend(art.class_names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (name, row) in art.class_names.iter().zip(&m.confusion) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    written(&path);
    println!("eval samples={} accuracy={:.4} mean_loss={:.6}", ds.len(), m.accuracy, m.loss_history[0]);
    Ok(())
}

/// The image named by `input`, or sample `index` of `test_data`.
fn pick_image(s: &mut Settings, art: &ModelArtifact) -> CliResult<ImageTensor> {
    let shape = art.model.image_shape();
    if s.raw("input").is_some() {
        let path = s.existing("input", "")?;
        let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(preprocess(&load_image(&path, 0, id)?, shape)?);
    }
    let data = s.existing("test_data", "data/test.qtns")?;
    let index: usize = s.resolve("index", 0)?;
    let (raw, from_dir) = read_dataset(&data)?;
    let mut ds = conform(raw, shape, from_dir)?;
    if index >= ds.len() {
        return Err(CliError::config("index", format!("{index} out of range for {} samples", ds.len())));
    }
    Ok(ds.samples.swap_remove(index))
}

pub fn infer(s: &mut Settings) -> CliResult<()> {
    let art = load_model(&s.existing("model", "out/model.qmod")?)?;
    let image = pick_image(s, &art)?;
    let shots_list = s.resolve("shots", "1000".to_string())?;
    let shots = shots_list
        .split(',')
        .map(|v| v.trim().parse::<u64>().ok().filter(|&n| n > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::config("shots", format!("`{shots_list}` is not a list of positive integers")))?;
    let seeds: usize = s.resolve("seeds", 1)?;
    let seed: u64 = s.resolve("seed", 0)?;
    if seeds == 0 {
        return Err(CliError::config("seeds", "must be at least 1"));
    }
    let out = out_dir(s, "out")?;
    let model = &art.model;
    let enc = model.encode(&image)?;
    let probs = model.forward(&enc, &art.params)?;
    let predicted = qscene::model::argmax(&probs);
    let name = |c: usize| art.class_names.get(c).cloned().unwrap_or_else(|| c.to_string());
    let listed: Vec<String> = probs.iter().enumerate().map(|(c, p)| format!("{}={p:.4}", name(c))).collect();
    println!("infer source={} label={} predicted={} probs {}", image.source_id, name(image.label), name(predicted), listed.join(" "));

    let path = out.join("shots.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["shots", "seed", "l1", "predicted"]).map_err(csv_err)?;
    let mut first = None;
    for &n in &shots {
        let mut l1 = 0.0;
        for k in 0..seeds as u64 {
            let r = shot_inference(model, &enc, &art.params, n, seed.wrapping_add(k * 1_000_003))?;
            w.write_record([n.to_string(), k.to_string(), format!("{:?}", r.report.l1), name(r.predicted)]).map_err(csv_err)?;
            l1 += r.report.l1;
            first.get_or_insert(r);
        }
        println!("shots={n} mean_l1={:.6}", l1 / seeds as f64);
    }
    w.flush()?;
    written(&path);
    let path = out.join("deviation.csv");
    first.expect("at least one shot count").report.write_csv(File::create(&path)?, model.measured_qubits())?;
    written(&path);
    Ok(())
}

pub fn export(s: &mut Settings) -> CliResult<()> {
    let art = load_model(&s.existing("model", "out/model.qmod")?)?;
    let with_input = s.raw("input").is_some() || s.raw("index").is_some() || s.raw("test_data").is_some();
    let (program, values) = if with_input {
        let image = pick_image(s, &art)?;
        let enc = art.model.encode(&image)?;
        art.model.full_program(&enc, &art.params)?
    } else {
        (art.model.processing_program()?, art.params.quantum.clone())
    };
    let path = PathBuf::from(s.resolve("out", "circuit.qasm".to_string())?);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, export_qasm(&program, &values)?)?;
    written(&path);
    let st = gate_stats(&program);
    let kinds: Vec<String> = st.per_kind.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("circuit qubits={} gates_1q={} gates_2q={} depth={} {}", program.n_qubits, st.n_1q, st.n_2q, st.depth, kinds.join(" "));
    Ok(())
}

pub fn baseline(s: &mut Settings) -> CliResult<()> {
    let n: u64 = s.resolve("n", 100)?;
    let p: f64 = s.resolve("p", 0.5)?;
    let q: f64 = s.resolve("q", 0.99)?;
    let trials: usize = s.resolve("trials", 100_000)?;
    let seed: u64 = s.resolve("seed", 0)?;
    for (key, bad) in [("n", n == 0), ("p", !(p > 0.0 && p < 1.0)), ("q", !(q > 0.0 && q < 1.0)), ("trials", trials == 0)] {
        if bad {
            return Err(CliError::config(key, "out of range"));
        }
    }
    let b = random_baseline_quantile(n, p, q, trials, seed)?;
    println!("baseline n={n} p={p} q={q} trials={trials}");
    println!("threshold_exact={}", b.exact);
    println!("threshold_monte_carlo={}", b.monte_carlo);
    if s.raw("out").is_some() {
        let out = out_dir(s, "out")?;
        let path = out.join("baseline.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(["n_images", "p_success", "quantile", "trials", "exact", "monte_carlo"]).map_err(csv_err)?;
        w.write_record([n.to_string(), format!("{p:?}"), format!("{q:?}"), trials.to_string(), format!("{:?}", b.exact), format!("{:?}", b.monte_carlo)])
            .map_err(csv_err)?;
        w.flush()?;
        written(&path);
    }
    Ok(())
}

/// Named columns of a CSV file, as strings.
fn read_columns(path: &Path, names: &[&str]) -> CliResult<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let idx = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| CliError::Core(QsError::Corrupt(format!("{}: missing column `{n}`", path.display()))))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(idx.iter().map(|&i| rec.get(i).unwrap_or("").to_string()).collect());
    }
    Ok(rows)
}

fn num(path: &Path, v: &str) -> CliResult<f64> {
    v.parse().map_err(|_| CliError::Core(QsError::Corrupt(format!("{}: `{v}` is not a number", path.display()))))
}

fn write_svg(path: &Path, chart: &Chart, series: &[Series]) -> CliResult<()> {
    fs::write(path, line_chart(chart, series))?;
    written(path);
    Ok(())
}

/// `(x, mean y, count)` per distinct x.
type Averaged = Vec<(f64, f64, usize)>;

/// Groups `(key, x, y)` rows into per-key series of mean y at each x.
fn mean_series(rows: Vec<(String, f64, f64)>) -> Vec<(String, Averaged)> {
    let mut groups: BTreeMap<String, Averaged> = BTreeMap::new();
    for (key, x, y) in rows {
        let pts = groups.entry(key).or_default();
        match pts.iter_mut().find(|p| p.0 == x) {
            Some(p) => {
                p.1 += y;
                p.2 += 1;
            }
            None => pts.push((x, y, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(k, mut pts)| {
            pts.iter_mut().for_each(|p| p.1 /= p.2 as f64);
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (k, pts)
        })
        .collect()
}

/// Reads only CSV artifacts; no simulation happens here.
pub fn report(s: &mut Settings) -> CliResult<()> {
    let dir = s.existing("dir", "out")?;
    let dir_str = dir.display().to_string();
    let out = out_dir(s, &dir_str)?;
    let mut produced = 0;

    let history = dir.join("history.csv");
    if history.exists() {
        let rows = read_columns(&history, &["epoch", "train_loss", "val_loss", "val_acc"])?;
        let mut series = vec![Series { name: "train".into(), points: vec![] }, Series { name: "validation".into(), points: vec![] }];
        let mut acc = vec![Series { name: "validation".into(), points: vec![] }];
        for r in &rows {
            let e = num(&history, &r[0])?;
            series[0].points.push((e, num(&history, &r[1])?));
            series[1].points.push((e, num(&history, &r[2])?));
            acc[0].points.push((e, num(&history, &r[3])?));
        }
        let chart = Chart { title: "Cross-entropy loss", x_label: "epoch", y_label: "loss", log_x: false, log_y: false };
        write_svg(&out.join("loss.svg"), &chart, &series)?;
        let chart = Chart { title: "Validation accuracy", x_label: "epoch", y_label: "accuracy", log_x: false, log_y: false };
        write_svg(&out.join("accuracy.svg"), &chart, &acc)?;
        produced += 1;
    }

    let eval = dir.join("eval.csv");
    if eval.exists() {
        let rows = read_columns(&eval, &["scheme", "layers", "accuracy"])?;
        let parsed = rows.iter().map(|r| Ok((r[0].clone(), num(&eval, &r[1])?, num(&eval, &r[2])?))).collect::<CliResult<Vec<_>>>()?;
        let grouped = mean_series(parsed);
        let path = out.join("accuracy_vs_layers.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(["scheme", "layers", "runs", "mean_accuracy"]).map_err(csv_err)?;
        for (scheme, pts) in &grouped {
            for (x, y, n) in pts {
                w.write_record([scheme.clone(), x.to_string(), n.to_string(), format!("{y:?}")]).map_err(csv_err)?;
            }
        }
        w.flush()?;
        written(&path);
        let series: Vec<Series> =
            grouped.into_iter().map(|(k, pts)| Series { name: k, points: pts.into_iter().map(|p| (p.0, p.1)).collect() }).collect();
        let chart = Chart { title: "Test accuracy vs processing depth", x_label: "layers", y_label: "accuracy", log_x: false, log_y: false };
        write_svg(&out.join("accuracy_vs_layers.svg"), &chart, &series)?;
        produced += 1;
    }

    let shots = dir.join("shots.csv");
    if shots.exists() {
        let rows = read_columns(&shots, &["shots", "l1"])?;
        let parsed =
            rows.iter().map(|r| Ok(("mean L1".to_string(), num(&shots, &r[0])?, num(&shots, &r[1])?))).collect::<CliResult<Vec<_>>>()?;
        let grouped = mean_series(parsed);
        let path = out.join("shots_l1.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(["shots", "runs", "mean_l1"]).map_err(csv_err)?;
        let mut series = Vec::new();
        for (name, pts) in grouped {
            for (x, y, n) in &pts {
                w.write_record([x.to_string(), n.to_string(), format!("{y:?}")]).map_err(csv_err)?;
            }
            // 1/sqrt(shots) reference anchored at the first point.
            if let Some(&(x0, y0, _)) = pts.first() {
                let reference = pts.iter().map(|p| (p.0, y0 * (x0 / p.0).sqrt())).collect();
                series.push(Series { name: "1/sqrt(shots)".into(), points: reference });
            }
            series.insert(0, Series { name, points: pts.into_iter().map(|p| (p.0, p.1)).collect() });
        }
        w.flush()?;
        written(&path);
        let chart = Chart { title: "Shot-noise deviation", x_label: "shots", y_label: "L1", log_x: true, log_y: true };
        write_svg(&out.join("shots.svg"), &chart, &series)?;
        produced += 1;
    }

    if produced == 0 {
        return Err(CliError::config("dir", format!("no history.csv, eval.csv or shots.csv in {}", dir.display())));
    }
    Ok(())
}
