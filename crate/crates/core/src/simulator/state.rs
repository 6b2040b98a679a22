use num_complex::Complex64 as C64;

use super::circuit::{Gate, GateKind};
use crate::{QsError, Result};

/// Largest register a single [`Statevector`] may hold.
pub const MAX_QUBITS: usize = 30;

/// Pure state of `n_qubits` qubits as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0...0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsError::Capacity(format!(
                "{n_qubits} qubits requested, supported range is 1..={MAX_QUBITS}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps an explicit amplitude vector. The length must be a power of two;
    /// the vector is not renormalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsError::contract(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(QsError::Capacity(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Real nonnegative amplitudes, e.g. an encoding target.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(QsError::contract(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product `self ⊗ other`; `self` supplies the most significant qubits.
    pub fn kron(&self, other: &Statevector) -> Result<Statevector> {
        let n = self.n_qubits + other.n_qubits;
        if n > MAX_QUBITS {
            return Err(QsError::Capacity(format!("{n} qubits exceeds {MAX_QUBITS}")));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Statevector { n_qubits: n, amps })
    }

    #[inline]
    pub(crate) fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(QsError::contract(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// `⟨Z_q⟩ = P(0) - P(1)` for the given qubit.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// Probability of reading 0 on `qubit`.
    pub fn prob_zero(&self, qubit: usize) -> Result<f64> {
        Ok((self.expectation_z(qubit)? + 1.0) / 2.0)
    }

    /// Applies `gate` with the resolved rotation `angle` (required exactly for
    /// parameterized kinds).
    pub fn apply(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        gate.check_shape()?;
        for &q in &gate.targets {
            self.check_qubit(q)?;
        }
        match (gate.kind.is_parameterized(), angle) {
            (true, None) => {
                return Err(QsError::contract(format!("{:?} needs an angle", gate.kind)))
            }
            (false, Some(_)) => {
                return Err(QsError::contract(format!("{:?} takes no angle", gate.kind)))
            }
            _ => {}
        }
        self.apply_unchecked(gate.kind, &gate.targets, angle.unwrap_or(0.0));
        Ok(())
    }

    /// Applies the inverse of `gate` (rotations negate the angle).
    pub fn apply_inverse(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        self.apply(gate, angle.map(|a| -a))
    }

    pub(crate) fn apply_unchecked(&mut self, kind: GateKind, targets: &[usize], theta: f64) {
        match kind {
            GateKind::Rx => {
                let (s, c) = (theta / 2.0).sin_cos();
                let ms = C64::new(0.0, -s);
                self.apply_1q(targets[0], [[C64::new(c, 0.0), ms], [ms, C64::new(c, 0.0)]]);
            }
            GateKind::Ry => self.apply_ry(targets[0], theta),
            GateKind::Rz => {
                let half = theta / 2.0;
                let lo = C64::from_polar(1.0, -half);
                let hi = C64::from_polar(1.0, half);
                let mask = self.mask(targets[0]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & mask == 0 { lo } else { hi };
                }
            }
            GateKind::H => {
                let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                self.apply_1q(targets[0], [[r, r], [r, -r]]);
            }
            GateKind::Cx => {
                let (cm, tm) = (self.mask(targets[0]), self.mask(targets[1]));
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
            GateKind::Cz => {
                let both = self.mask(targets[0]) | self.mask(targets[1]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & both == both {
                        *a = -*a;
                    }
                }
            }
            GateKind::Rzz => {
                let (m0, m1) = (self.mask(targets[0]), self.mask(targets[1]));
                let half = theta / 2.0;
                let same = C64::from_polar(1.0, -half);
                let diff = C64::from_polar(1.0, half);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    let odd = (i & m0 != 0) != (i & m1 != 0);
                    *a *= if odd { diff } else { same };
                }
            }
        }
    }

    fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let mask = self.mask(qubit);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + mask {
                let a0 = self.amps[i];
                let a1 = self.amps[i + mask];
                self.amps[i] = a0 * c - a1 * s;
                self.amps[i + mask] = a0 * s + a1 * c;
            }
            base += mask << 1;
        }
    }

    fn apply_1q(&mut self, qubit: usize, m: [[C64; 2]; 2]) {
        let mask = self.mask(qubit);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + mask {
                let a0 = self.amps[i];
                let a1 = self.amps[i + mask];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + mask] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += mask << 1;
        }
    }

    /// Multiplies the state by the Pauli generator `G` of a rotation gate
    /// (`X`, `Y`, `Z` or `Z⊗Z`). Not unitary evolution; used by the adjoint sweep.
    pub(crate) fn apply_generator(&mut self, kind: GateKind, targets: &[usize]) -> bool {
        match kind {
            GateKind::Rx => {
                let mask = self.mask(targets[0]);
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        self.amps.swap(i, i | mask);
                    }
                }
            }
            GateKind::Ry => {
                let mask = self.mask(targets[0]);
                let i_unit = C64::new(0.0, 1.0);
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        let a0 = self.amps[i];
                        let a1 = self.amps[i | mask];
                        self.amps[i] = -i_unit * a1;
                        self.amps[i | mask] = i_unit * a0;
                    }
                }
            }
            GateKind::Rz => {
                let mask = self.mask(targets[0]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask != 0 {
                        *a = -*a;
                    }
                }
            }
            GateKind::Rzz => {
                let (m0, m1) = (self.mask(targets[0]), self.mask(targets[1]));
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if (i & m0 != 0) != (i & m1 != 0) {
                        *a = -*a;
                    }
                }
            }
            GateKind::H | GateKind::Cx | GateKind::Cz => return false,
        }
        true
    }
}
