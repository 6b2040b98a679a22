use std::fmt;

use super::state::Statevector;
use crate::{QsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Rzz,
    H,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Rzz => 2,
            _ => 1,
        }
    }

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rzz)
    }

    /// Lower-case OpenQASM mnemonic.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Rzz => "rzz",
            GateKind::H => "h",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "cx" | "CX" => GateKind::Cx,
            "cz" => GateKind::Cz,
            "rzz" => GateKind::Rzz,
            "h" => GateKind::H,
            _ => return None,
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a rotation gate gets its angle from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    /// Index into the trainable parameter vector.
    Slot(usize),
    /// Angle bound at construction time (data or frozen loader parameters).
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// Qubit operands; for `Cx` the first entry is the control.
    pub targets: Vec<usize>,
    pub angle: Option<Angle>,
}

impl Gate {
    pub fn rx(q: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Rx, targets: vec![q], angle: Some(angle) }
    }

    pub fn ry(q: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Ry, targets: vec![q], angle: Some(angle) }
    }

    pub fn rz(q: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Rz, targets: vec![q], angle: Some(angle) }
    }

    pub fn rzz(a: usize, b: usize, angle: Angle) -> Self {
        Self { kind: GateKind::Rzz, targets: vec![a, b], angle: Some(angle) }
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, targets: vec![q], angle: None }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cx, targets: vec![control, target], angle: None }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self { kind: GateKind::Cz, targets: vec![a, b], angle: None }
    }

    /// Rotation of `kind` with a bound angle.
    pub fn fixed(kind: GateKind, targets: &[usize], angle: f64) -> Self {
        Self { kind, targets: targets.to_vec(), angle: Some(Angle::Fixed(angle)) }
    }

    /// Two-qubit gate of `kind`; rotations take `angle`, others ignore it.
    pub fn two_qubit(kind: GateKind, a: usize, b: usize, angle: Option<Angle>) -> Self {
        let angle = if kind.is_parameterized() { angle } else { None };
        Self { kind, targets: vec![a, b], angle }
    }

    pub fn slot(&self) -> Option<usize> {
        match self.angle {
            Some(Angle::Slot(s)) => Some(s),
            _ => None,
        }
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        if self.targets.len() != self.kind.arity() {
            return Err(QsError::contract(format!(
                "{} expects {} target(s), got {}",
                self.kind,
                self.kind.arity(),
                self.targets.len()
            )));
        }
        if self.targets.len() == 2 && self.targets[0] == self.targets[1] {
            return Err(QsError::contract(format!(
                "{} on duplicate qubit {}",
                self.kind, self.targets[0]
            )));
        }
        Ok(())
    }

    /// Resolves the rotation angle against a parameter vector.
    pub fn resolve(&self, params: &[f64]) -> Result<Option<f64>> {
        match self.angle {
            None => Ok(None),
            Some(Angle::Fixed(a)) => Ok(Some(a)),
            Some(Angle::Slot(s)) => params.get(s).copied().map(Some).ok_or_else(|| {
                QsError::contract(format!("parameter slot {s} out of range ({})", params.len()))
            }),
        }
    }

    pub fn touches(&self, qubit: usize) -> bool {
        self.targets.contains(&qubit)
    }
}

/// Ordered gate list over a fixed register with trainable parameter slots.
///
/// Gates before `loading_boundary` form the data-loading segment, the rest the
/// processing segment.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitProgram {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub n_params: usize,
    pub loading_boundary: usize,
}

impl CircuitProgram {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), n_params: 0, loading_boundary: 0 }
    }

    /// Reserves a fresh parameter slot.
    pub fn new_slot(&mut self) -> Angle {
        let slot = self.n_params;
        self.n_params += 1;
        Angle::Slot(slot)
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    /// Marks everything pushed so far as the loading segment.
    pub fn mark_loading_boundary(&mut self) {
        self.loading_boundary = self.gates.len();
    }

    pub fn validate(&self) -> Result<()> {
        if self.loading_boundary > self.gates.len() {
            return Err(QsError::contract("loading boundary beyond gate list"));
        }
        for (i, g) in self.gates.iter().enumerate() {
            g.check_shape()
                .map_err(|e| QsError::contract(format!("gate {i}: {e}")))?;
            if let Some(&q) = g.targets.iter().find(|&&q| q >= self.n_qubits) {
                return Err(QsError::contract(format!(
                    "gate {i} targets qubit {q}, register has {}",
                    self.n_qubits
                )));
            }
            match (g.kind.is_parameterized(), g.angle) {
                (true, None) => {
                    return Err(QsError::contract(format!("gate {i} ({}) has no angle", g.kind)))
                }
                (false, Some(_)) => {
                    return Err(QsError::contract(format!(
                        "gate {i} ({}) is not parameterized",
                        g.kind
                    )))
                }
                (_, Some(Angle::Slot(s))) if s >= self.n_params => {
                    return Err(QsError::contract(format!(
                        "gate {i} uses slot {s}, program has {} parameters",
                        self.n_params
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(QsError::contract(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }

    /// Runs the program from `|0...0⟩`.
    pub fn run(&self, params: &[f64]) -> Result<Statevector> {
        let state = Statevector::new(self.n_qubits)?;
        self.run_from(state, params)
    }

    /// Runs the program from an arbitrary initial state.
    pub fn run_from(&self, mut state: Statevector, params: &[f64]) -> Result<Statevector> {
        self.validate()?;
        self.check_params(params)?;
        if state.n_qubits() != self.n_qubits {
            return Err(QsError::contract(format!(
                "initial state has {} qubits, program has {}",
                state.n_qubits(),
                self.n_qubits
            )));
        }
        self.apply_gates(&mut state, params, |_| true);
        Ok(state)
    }

    /// Applies the subset of gates selected by `keep`; assumes a validated program.
    pub(crate) fn apply_gates(
        &self,
        state: &mut Statevector,
        params: &[f64],
        keep: impl Fn(&Gate) -> bool,
    ) {
        for g in self.gates.iter().filter(|g| keep(g)) {
            let theta = match g.angle {
                Some(Angle::Slot(s)) => params[s],
                Some(Angle::Fixed(a)) => a,
                None => 0.0,
            };
            state.apply_unchecked(g.kind, &g.targets, theta);
        }
    }

    /// Copy with every slot replaced by its value from `params`.
    pub fn bind(&self, params: &[f64]) -> Result<CircuitProgram> {
        self.check_params(params)?;
        let gates = self
            .gates
            .iter()
            .map(|g| {
                Ok(Gate {
                    kind: g.kind,
                    targets: g.targets.clone(),
                    angle: g.resolve(params)?.map(Angle::Fixed),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CircuitProgram {
            n_qubits: self.n_qubits,
            gates,
            n_params: 0,
            loading_boundary: self.loading_boundary,
        })
    }

    /// Appends `other` with its qubits shifted by `qubit_offset` and its slots
    /// shifted by `slot_offset`. Grows `n_params` to cover the shifted slots.
    pub fn extend_shifted(&mut self, other: &CircuitProgram, qubit_offset: usize, slot_offset: usize) {
        for g in &other.gates {
            let angle = match g.angle {
                Some(Angle::Slot(s)) => Some(Angle::Slot(s + slot_offset)),
                a => a,
            };
            self.gates.push(Gate {
                kind: g.kind,
                targets: g.targets.iter().map(|q| q + qubit_offset).collect(),
                angle,
            });
        }
        self.n_params = self.n_params.max(slot_offset + other.n_params);
    }

    pub fn parameterized_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.slot().is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn empty_program_is_identity() {
        let s = CircuitProgram::new(3).run(&[]).unwrap();
        assert_eq!(s.probabilities()[0], 1.0);
        assert_eq!(s.dim(), 8);
    }

    #[test]
    fn single_ry_half_pi() {
        let mut p = CircuitProgram::new(1);
        let a = p.new_slot();
        p.push(Gate::ry(0, a));
        let s = p.run(&[FRAC_PI_2]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - r).abs() < 1e-12);
        assert!((s.amplitudes()[1].re - r).abs() < 1e-12);
    }

    #[test]
    fn param_length_mismatch() {
        let mut p = CircuitProgram::new(1);
        let a = p.new_slot();
        p.push(Gate::ry(0, a));
        assert!(matches!(p.run(&[]), Err(QsError::Contract(_))));
        assert!(p.run(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn validation_rejects_bad_gates() {
        let mut p = CircuitProgram::new(2);
        p.push(Gate::ry(0, Angle::Slot(3)));
        assert!(p.validate().is_err());
        let mut p = CircuitProgram::new(2);
        p.push(Gate::cx(0, 5));
        assert!(p.validate().is_err());
        let mut p = CircuitProgram::new(2);
        p.push(Gate { kind: GateKind::H, targets: vec![0], angle: Some(Angle::Fixed(1.0)) });
        assert!(p.validate().is_err());
    }

    #[test]
    fn bind_freezes_slots() {
        let mut p = CircuitProgram::new(2);
        let a = p.new_slot();
        p.push(Gate::ry(0, a));
        p.push(Gate::cx(0, 1));
        let b = p.bind(&[0.4]).unwrap();
        assert_eq!(b.n_params, 0);
        assert_eq!(b.gates[0].angle, Some(Angle::Fixed(0.4)));
        let s1 = p.run(&[0.4]).unwrap();
        let s2 = b.run(&[]).unwrap();
        assert_eq!(s1, s2);
    }
}
