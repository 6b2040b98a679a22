//! Adjoint-mode differentiation of diagonal observables.
//!
//! One forward pass produces `|ψ⟩`; the backward sweep walks the gate list in
//! reverse, un-applying each gate to both `|ψ⟩` and `|λ⟩ = O|ψ⟩`. For a gate
//! `U = exp(-iθG/2)` the contribution is `Im⟨λ|G|ψ_k⟩`, where `ψ_k` is the
//! state right after the gate. Memory is three statevectors.

use num_complex::Complex64 as C64;

use super::circuit::{Angle, CircuitProgram};
use super::state::Statevector;
use crate::{QsError, Result};

/// Observables the adjoint engine can differentiate. All are diagonal in the
/// computational basis.
#[derive(Clone, Copy, Debug)]
pub enum Observable<'a> {
    /// `Z` on one qubit.
    Z(usize),
    /// `Σ w_q Z_q`.
    WeightedZ(&'a [(usize, f64)]),
    /// Arbitrary real diagonal, one entry per basis state.
    Diagonal(&'a [f64]),
}

impl Observable<'_> {
    fn check(&self, n_qubits: usize) -> Result<()> {
        let bad_qubit = |q: usize| {
            QsError::contract(format!("observable qubit {q} out of range for {n_qubits} qubits"))
        };
        match *self {
            Observable::Z(q) if q >= n_qubits => Err(bad_qubit(q)),
            Observable::WeightedZ(terms) => match terms.iter().find(|(q, _)| *q >= n_qubits) {
                Some(&(q, _)) => Err(bad_qubit(q)),
                None => Ok(()),
            },
            Observable::Diagonal(d) if d.len() != 1 << n_qubits => Err(QsError::contract(format!(
                "diagonal observable has {} entries, state has {}",
                d.len(),
                1usize << n_qubits
            ))),
            _ => Ok(()),
        }
    }

    /// `O|ψ⟩` and `⟨ψ|O|ψ⟩`.
    fn apply(&self, state: &Statevector) -> (Statevector, f64) {
        let mut out = state.clone();
        let n = state.n_qubits();
        let weight = |i: usize| -> f64 {
            match *self {
                Observable::Z(q) => {
                    if i & (1 << (n - 1 - q)) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Observable::WeightedZ(terms) => terms
                    .iter()
                    .map(|&(q, w)| if i & (1 << (n - 1 - q)) == 0 { w } else { -w })
                    .sum(),
                Observable::Diagonal(d) => d[i],
            }
        };
        let mut expectation = 0.0;
        for (i, a) in out.amplitudes_mut().iter_mut().enumerate() {
            let w = weight(i);
            expectation += w * a.norm_sqr();
            *a *= w;
        }
        (out, expectation)
    }
}

fn check_generators(program: &CircuitProgram) -> Result<()> {
    for (i, g) in program.gates.iter().enumerate() {
        if g.slot().is_some() && !g.kind.is_parameterized() {
            return Err(QsError::UnsupportedGate(format!(
                "gate {i} ({}) carries a parameter slot but has no generator",
                g.kind
            )));
        }
    }
    Ok(())
}

/// Gradient of `⟨O⟩` with respect to every parameter slot, starting the
/// circuit from `initial` (or `|0...0⟩`). Returns `(⟨O⟩, gradient)`.
pub fn adjoint_gradient(
    program: &CircuitProgram,
    params: &[f64],
    initial: Option<&Statevector>,
    observable: Observable<'_>,
) -> Result<(f64, Vec<f64>)> {
    check_generators(program)?;
    observable.check(program.n_qubits)?;
    let start = match initial {
        Some(s) => s.clone(),
        None => Statevector::new(program.n_qubits)?,
    };
    let psi = program.run_from(start, params)?;
    let mut grad = vec![0.0; program.n_params];
    let expectation = backward_sweep(program, params, psi, observable, &mut grad);
    Ok((expectation, grad))
}

/// Jacobian `∂⟨Z_q⟩/∂θ_k`, one row per observed qubit. The forward pass runs
/// once; each observable gets its own backward sweep.
pub fn adjoint_gradients(
    program: &CircuitProgram,
    params: &[f64],
    observed_qubits: &[usize],
) -> Result<Vec<Vec<f64>>> {
    check_generators(program)?;
    for &q in observed_qubits {
        Observable::Z(q).check(program.n_qubits)?;
    }
    let psi = program.run(params)?;
    Ok(observed_qubits
        .iter()
        .map(|&q| {
            let mut grad = vec![0.0; program.n_params];
            backward_sweep(program, params, psi.clone(), Observable::Z(q), &mut grad);
            grad
        })
        .collect())
}

pub(crate) fn backward_sweep(
    program: &CircuitProgram,
    params: &[f64],
    mut psi: Statevector,
    observable: Observable<'_>,
    grad: &mut [f64],
) -> f64 {
    let (mut lambda, expectation) = observable.apply(&psi);
    let mut scratch = psi.clone();
    for (k, g) in program.gates.iter().enumerate().rev() {
        let theta = match g.angle {
            Some(Angle::Slot(s)) => params[s],
            Some(Angle::Fixed(a)) => a,
            None => 0.0,
        };
        if let Some(slot) = g.slot() {
            scratch.amplitudes_mut().copy_from_slice(psi.amplitudes());
            scratch.apply_generator(g.kind, &g.targets);
            let overlap: C64 = lambda
                .amplitudes()
                .iter()
                .zip(scratch.amplitudes())
                .map(|(l, s)| l.conj() * s)
                .sum();
            grad[slot] += overlap.im;
        }
        if k > 0 {
            psi.apply_unchecked(g.kind, &g.targets, -theta);
            lambda.apply_unchecked(g.kind, &g.targets, -theta);
        }
    }
    expectation
}
