use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::Statevector;
use crate::{QsError, Result};

/// Draws `shots` computational-basis samples from `|amplitudes|²` and returns,
/// for each requested qubit, how many samples read 0. Deterministic in `seed`.
pub fn sample_shots(
    state: &Statevector,
    qubits: &[usize],
    shots: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(QsError::contract("shots must be at least 1"));
    }
    if let Some(&q) = qubits.iter().find(|&&q| q >= state.n_qubits()) {
        return Err(QsError::contract(format!(
            "qubit {q} out of range for {} qubits",
            state.n_qubits()
        )));
    }
    let mut cumulative = Vec::with_capacity(state.dim());
    let mut acc = 0.0;
    for a in state.amplitudes() {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let last = cumulative.len() - 1;
    let masks: Vec<usize> = qubits.iter().map(|&q| state.mask(q)).collect();
    let mut zeros = vec![0u64; qubits.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(last);
        for (count, &m) in zeros.iter_mut().zip(&masks) {
            if idx & m == 0 {
                *count += 1;
            }
        }
    }
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{Angle, Gate};

    #[test]
    fn deterministic_state() {
        let s = Statevector::new(1).unwrap();
        assert_eq!(sample_shots(&s, &[0], 400, 3).unwrap(), vec![400]);
    }

    #[test]
    fn plus_state_concentrates() {
        let mut s = Statevector::new(1).unwrap();
        s.apply(&Gate::h(0), None).unwrap();
        let shots = 1_000_000;
        let c = sample_shots(&s, &[0], shots, 11).unwrap();
        let p = c[0] as f64 / shots as f64;
        assert!((p - 0.5).abs() < 0.01, "{p}");
    }

    #[test]
    fn seeded_repeatability() {
        let mut s = Statevector::new(3).unwrap();
        for q in 0..3 {
            s.apply(&Gate::ry(q, Angle::Fixed(0.4 + q as f64)), Some(0.4 + q as f64)).unwrap();
        }
        let a = sample_shots(&s, &[0, 2], 500, 99).unwrap();
        let b = sample_shots(&s, &[0, 2], 500, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_shots_rejected() {
        let s = Statevector::new(1).unwrap();
        assert!(matches!(sample_shots(&s, &[0], 0, 1), Err(QsError::Contract(_))));
    }
}
