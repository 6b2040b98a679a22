//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qscene::data::{make_synthetic, smooth_blob, SyntheticKind};
use qscene::encoders::{fit_loader, image_to_target, pae_plan, BlockPartition, LoaderConfig};
use qscene::hwio::{export_qasm, import_qasm, load_model, random_baseline_quantile, save_model, shot_inference, ModelArtifact};
use qscene::model::{cross_entropy, softmax, ConnectivityKind, EncodedSample, Entangler, ModelSpec, ProcessingConfig};
use qscene::simulator::{adjoint_gradient, Observable};
use qscene::train::{encode_dataset, evaluate_encoded, fit, fit_encoded, evaluate, FitReport, TrainConfig};
use qscene::Dataset;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let start = Instant::now();
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let n_gates = rng.random_range(1..=80);
        let max_params = rng.random_range(1..=60);
        let program = common::random_program(&mut rng, n, n_gates, max_params, &common::MIXED);
        let params = common::random_params(&mut rng, program.n_params);
        let q = rng.random_range(0..n);
        let f = |p: &[f64]| program.run(p).unwrap().expectation_z(q).unwrap();
        let (_, grad) = adjoint_gradient(&program, &params, None, Observable::Z(q)).unwrap();
        for k in 0..params.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            worst = worst.max((fd - grad[k]).abs());
        }
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-6 && elapsed < Duration::from_secs(120),
        format!("max |adjoint - central FD| = {worst:.2e} (< 1e-6) over 100 circuits in {elapsed:.1?}"),
    )
}

fn c2_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let n_gates = rng.random_range(0..=40);
        let program = common::random_program(&mut rng, n, n_gates, 30, &common::ALL);
        let params = common::random_params(&mut rng, program.n_params);
        let ours = program.run(&params).unwrap();
        let oracle = common::dense_run(&program, &params);
        worst = worst.max(common::distance(ours.amplitudes(), &oracle));
    }
    check(worst < 1e-10, format!("max statevector distance to dense oracle = {worst:.2e} (< 1e-10) over 50 programs"))
}

fn c3_loader() -> Outcome {
    let target = image_to_target(&smooth_blob(16, 16)).unwrap();
    let config = LoaderConfig::default();
    let report = fit_loader(&target, &config).unwrap();
    let steps = report.adam_steps;
    let best = report.best_so_far();
    let monotone = best.windows(2).all(|w| w[1] <= w[0]);
    let consistent = (report.best_loss - best.last().copied().unwrap()).abs() < 1e-12;
    check(
        target.n_qubits() == 8 && report.fidelity >= 0.99 && steps <= 500 && monotone && consistent,
        format!(
            "8-qubit loader fidelity {:.5} (>= 0.99) after {steps} steps, best KL {:.3e}, best-loss monotone: {monotone}",
            report.fidelity, report.best_loss
        ),
    )
}

fn c4_bae() -> Outcome {
    // 3 blocks of 4 qubits: q·b = 12.
    let image = qscene::ImageTensor::from_fn(4, 12, 0, "bae", |r, c| 0.1 + 0.8 * ((r * 12 + c) as f64 * 0.37).sin().abs()).unwrap();
    let partition = BlockPartition::for_shape((4, 12), (1, 3)).unwrap();
    let loader = LoaderConfig { steps: 200, layers: 4, ..Default::default() };
    let processing = ProcessingConfig { layers: 2, connectivity: ConnectivityKind::Ring, ..Default::default() };
    let model = ModelSpec::bae(partition, loader, processing, 2).unwrap();
    let params = qscene::TrainableParams::init(&model, 4);
    let enc = model.encode(&image).unwrap();
    let blocks = model.register_states(&enc, &params).unwrap();
    let product = blocks.iter().skip(1).fold(blocks[0].clone(), |acc, s| acc.kron(s).unwrap());
    let (joint, values) = model.full_program(&enc, &params).unwrap();
    let joint_state = joint.run(&values).unwrap();
    let fidelity = product.fidelity(&joint_state).unwrap();

    let cases = [((1024, 2048), (1, 1), 1, 21, 21), ((1024, 2048), (2, 4), 8, 18, 144), ((1024, 2048), (4, 8), 32, 16, 512)];
    let arithmetic = cases.iter().all(|&(shape, grid, blocks, q, total)| {
        let p = BlockPartition::for_shape(shape, grid).unwrap();
        (p.n_blocks, p.qubits_per_block, p.total_qubits()) == (blocks, q, total)
    });
    check(
        1.0 - fidelity < 1e-8 && arithmetic,
        format!("product-vs-joint fidelity 1 - {:.1e} (12 qubits); partitions 21 / 8x18=144 / 32x16=512: {arithmetic}", 1.0 - fidelity),
    )
}

fn c5_pae_plan() -> Outcome {
    let base = pae_plan(384, 16).unwrap().n_upload_layers;
    // PAE rows of the four-class comparison: 16×24 input on 20 and 16 qubits.
    let rows = [(384, 20), (384, 16), (384, 16)];
    let layers: Vec<usize> = rows.iter().map(|&(px, n)| pae_plan(px, n).unwrap().n_upload_layers).collect();
    let at_20 = pae_plan(384, 20).unwrap().n_upload_layers;
    check(
        base == 8 && layers.iter().all(|&l| l <= 10) && at_20 <= 10,
        format!("384 px on 16 qubits -> {base} layers (8); comparison-table PAE configs -> {layers:?} (<= 10)"),
    )
}

struct Trained {
    model: ModelSpec,
    train: Vec<EncodedSample>,
    test: Vec<EncodedSample>,
    test_images: Dataset,
    report: FitReport,
    loaders_before: Vec<Vec<Vec<u64>>>,
    elapsed: Duration,
}

fn bits(samples: &[EncodedSample]) -> Vec<Vec<Vec<u64>>> {
    samples.iter().map(|s| s.input.loader_params().iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect()).collect()
}

/// BAE 4 blocks × 6 qubits on the four ramp classes (16×16 images, 2×2 grid).
fn bae_run() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let train_ds = make_synthetic(SyntheticKind::Gradient4Class, 25, (16, 16), 0.1, 3).unwrap();
        let test_ds = make_synthetic(SyntheticKind::Gradient4Class, 12, (16, 16), 0.1, 4).unwrap();
        let partition = BlockPartition::for_shape((16, 16), (2, 2)).unwrap();
        let loader = LoaderConfig { steps: 200, ..Default::default() };
        let processing = ProcessingConfig { layers: 3, connectivity: ConnectivityKind::Ring, entangler: Entangler::Cx, brickwork: false };
        let model = ModelSpec::bae(partition, loader, processing, 4).unwrap();
        let train = encode_dataset(&model, &train_ds).unwrap();
        let test = encode_dataset(&model, &test_ds).unwrap();
        let loaders_before = bits(&train);
        let config = TrainConfig { epochs: 30, lr: 0.1, seed: 7, ..Default::default() };
        let report = fit_encoded(&model, &train, &config, None).unwrap();
        Trained { model, train, test, test_images: test_ds, report, loaders_before, elapsed: start.elapsed() }
    })
}

fn c6_learning() -> Outcome {
    let start = Instant::now();
    let train = make_synthetic(SyntheticKind::BrightVsDark, 50, (8, 8), 0.2, 1).unwrap();
    let test = make_synthetic(SyntheticKind::BrightVsDark, 25, (8, 8), 0.2, 2).unwrap();
    let model = ModelSpec::pae(10, (8, 8), ProcessingConfig { layers: 3, ..Default::default() }, 2).unwrap();
    let report = fit(&model, &train, &TrainConfig { epochs: 30, lr: 0.1, seed: 0, ..Default::default() }).unwrap();
    let pae = evaluate(&model, &report.params, &test).unwrap();
    let pae_time = start.elapsed();

    let run = bae_run();
    let bae = evaluate_encoded(&run.model, &run.report.params, &run.test).unwrap();
    check(
        train.len() == 100 && test.len() == 50 && pae.accuracy >= 0.95 && pae_time < Duration::from_secs(300) && bae.accuracy >= 0.85,
        format!(
            "PAE-10 bright/dark test acc {:.3} (>= 0.95, 30 epochs, {pae_time:.1?}); BAE 4x6 four-ramp test acc {:.3} (>= 0.85, {:.1?})",
            pae.accuracy, bae.accuracy, run.elapsed
        ),
    )
}

fn c7_freezing() -> Outcome {
    let run = bae_run();
    let after = bits(&run.train);
    // Re-encoding from the stored parameters reproduces the same input states.
    let image = &run.test_images.samples[0];
    let re = run.model.encode_with_loader_params(image, run.test[0].input.loader_params()).unwrap();
    check(
        after == run.loaders_before && re == run.test[0].input,
        format!("{} samples x 4 blocks of loader parameters bit-identical after classifier training", run.train.len()),
    )
}

fn c8_shot_noise() -> Outcome {
    let run = bae_run();
    let input = &run.test[0].input;
    let shots_list = [100u64, 400, 1600, 6400];
    let means: Vec<f64> = shots_list
        .iter()
        .map(|&shots| {
            (0..50u64).map(|s| shot_inference(&run.model, input, &run.report.params, shots, 1_000 * s + 17).unwrap().report.l1).sum::<f64>() / 50.0
        })
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let scaled: Vec<f64> = means.iter().zip(shots_list).map(|(m, s)| m * (s as f64).sqrt()).collect();
    let ratio = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
    let fmt: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    check(
        decreasing && ratio <= 1.5,
        format!("mean L1 at 100/400/1600/6400 shots = [{}]; L1*sqrt(shots) spread x{ratio:.3} (<= 1.5)", fmt.join(", ")),
    )
}

/// Smallest k with P(X <= k) >= 0.99 for Binomial(100, 1/2), in exact integers.
fn exact_binomial_oracle() -> u64 {
    let n = 100u64;
    let total = BigUint::from(1u8) << n as usize;
    let mut coeff = BigUint::from(1u8);
    let mut cum = BigUint::from(0u8);
    for k in 0..=n {
        cum += &coeff;
        if &cum * 100u32 >= &total * 99u32 {
            return k;
        }
        coeff = coeff * (n - k) / (k + 1);
    }
    n
}

fn c9_baseline() -> Outcome {
    let r = random_baseline_quantile(100, 0.5, 0.99, 200_000, 99).unwrap();
    let oracle = exact_binomial_oracle() as f64 / 100.0;
    check(
        (r.monte_carlo - r.exact).abs() <= 0.01 && r.exact == oracle,
        format!(
            "99th percentile of Binomial(100, 0.5)/100: Monte Carlo {:.2}, exact {:.2} (integer oracle {oracle:.2}), published 0.65, gap {:+.2}",
            r.monte_carlo,
            r.exact,
            0.65 - r.exact
        ),
    )
}

fn c10_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=8);
        let n_gates = rng.random_range(0..=60);
        let program = common::random_program(&mut rng, n, n_gates, 40, &common::ALL);
        let params = common::random_params(&mut rng, program.n_params);
        let back = import_qasm(&export_qasm(&program, &params).unwrap()).unwrap();
        let f = program.run(&params).unwrap().fidelity(&back.run(&[]).unwrap()).unwrap();
        worst = worst.max(1.0 - f);
    }

    let run = bae_run();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bae.qmod");
    let names = SyntheticKind::Gradient4Class.class_names();
    save_model(&path, &ModelArtifact { model: run.model.clone(), params: run.report.params.clone(), class_names: names, seed: 7 }).unwrap();
    let loaded = load_model(&path).unwrap();
    let mut drift: f64 = 0.0;
    for s in run.test.iter().take(10) {
        let a = run.model.forward(&s.input, &run.report.params).unwrap();
        let b = loaded.model.forward(&s.input, &loaded.params).unwrap();
        drift = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(drift, f64::max);
    }
    check(
        worst <= 1e-10 && drift < 1e-12,
        format!("QASM round trip worst infidelity {worst:.1e} (<= 1e-10) over 50 programs; save/load max |dprob| {drift:.1e} (< 1e-12)"),
    )
}

fn c11_softmax() -> Outcome {
    let uniform = cross_entropy(&softmax(&[0.0; 4]), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=10);
        let logits: Vec<f64> = (0..k).map(|_| rng.random_range(-50.0..50.0)).collect();
        worst = worst.max((softmax(&logits).iter().sum::<f64>() - 1.0).abs());
    }
    let err = (uniform - 4f64.ln()).abs();
    check(err < 1e-12 && worst < 1e-12, format!("uniform 4-class loss - ln 4 = {err:.1e}; max |sum p - 1| = {worst:.1e} over 1000 vectors"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 gradient correctness", c1_gradients),
        ("2 simulator oracle equivalence", c2_oracle),
        ("3 AAE loading quality", c3_loader),
        ("4 BAE factorization", c4_bae),
        ("5 PAE plan arithmetic", c5_pae_plan),
        ("6 end-to-end learning", c6_learning),
        ("7 two-stage freezing", c7_freezing),
        ("8 shot-noise metric", c8_shot_noise),
        ("9 random baseline", c9_baseline),
        ("10 QASM and model round trip", c10_round_trip),
        ("11 softmax / cross-entropy identities", c11_softmax),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{took:.1?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{took:.1?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
