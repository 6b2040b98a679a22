//! Test-side helpers: random programs and an independent dense-matrix oracle.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qscene::simulator::{Angle, CircuitProgram, Gate, GateKind};
use rand::Rng;

pub const MIXED: [GateKind; 6] = [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Rzz, GateKind::Cx, GateKind::Cz];
pub const ALL: [GateKind; 7] = [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Rzz, GateKind::Cx, GateKind::Cz, GateKind::H];

/// Random program on `n` qubits; every parameterized gate gets a fresh slot
/// until `max_params` is reached, after which slots are reused.
pub fn random_program<R: Rng>(rng: &mut R, n: usize, n_gates: usize, max_params: usize, kinds: &[GateKind]) -> CircuitProgram {
    let mut p = CircuitProgram::new(n);
    let mut placed = 0;
    while placed < n_gates {
        let kind = kinds[rng.random_range(0..kinds.len())];
        if kind.arity() == 2 && n < 2 {
            continue;
        }
        let a = rng.random_range(0..n);
        let targets = if kind.arity() == 2 {
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            vec![a, b]
        } else {
            vec![a]
        };
        let angle = kind.is_parameterized().then(|| {
            if p.n_params < max_params {
                p.new_slot()
            } else {
                Angle::Slot(rng.random_range(0..max_params))
            }
        });
        p.push(Gate { kind, targets, angle });
        placed += 1;
    }
    p
}

pub fn random_params<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

pub type Matrix = Vec<Vec<C>>;

fn bit(i: usize, q: usize, n: usize) -> usize {
    (i >> (n - 1 - q)) & 1
}

/// Full `2^n × 2^n` matrix of one gate, built entry by entry from the gate's
/// definition with qubit 0 as the most significant index bit.
pub fn gate_matrix(kind: GateKind, targets: &[usize], theta: f64, n: usize) -> Matrix {
    let dim = 1 << n;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = C::new(0.0, 1.0);
    let one_q: [[C; 2]; 2] = match kind {
        GateKind::Rx => [[C::from(c), -i * s], [-i * s, C::from(c)]],
        GateKind::Ry => [[C::from(c), C::from(-s)], [C::from(s), C::from(c)]],
        GateKind::Rz => [[(-i * theta / 2.0).exp(), C::from(0.0)], [C::from(0.0), (i * theta / 2.0).exp()]],
        GateKind::H => {
            let h = C::from(std::f64::consts::FRAC_1_SQRT_2);
            [[h, h], [h, -h]]
        }
        _ => [[C::from(0.0); 2]; 2],
    };
    let mut m = vec![vec![C::from(0.0); dim]; dim];
    for row in 0..dim {
        for col in 0..dim {
            m[row][col] = match kind {
                GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::H => {
                    let q = targets[0];
                    let others_equal = (row ^ col) & !(1 << (n - 1 - q)) == 0;
                    if others_equal { one_q[bit(row, q, n)][bit(col, q, n)] } else { C::from(0.0) }
                }
                GateKind::Cx => {
                    let (ctl, tgt) = (targets[0], targets[1]);
                    let image = if bit(col, ctl, n) == 1 { col ^ (1 << (n - 1 - tgt)) } else { col };
                    C::from(if row == image { 1.0 } else { 0.0 })
                }
                GateKind::Cz => {
                    let sign = if bit(col, targets[0], n) == 1 && bit(col, targets[1], n) == 1 { -1.0 } else { 1.0 };
                    C::from(if row == col { sign } else { 0.0 })
                }
                GateKind::Rzz => {
                    let z = |q| if bit(col, q, n) == 0 { 1.0 } else { -1.0 };
                    if row == col { (-i * theta / 2.0 * z(targets[0]) * z(targets[1])).exp() } else { C::from(0.0) }
                }
            };
        }
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![C::from(0.0); n]; n];
    for r in 0..n {
        for k in 0..n {
            let x = a[r][k];
            if x == C::from(0.0) {
                continue;
            }
            for c in 0..n {
                out[r][c] += x * b[k][c];
            }
        }
    }
    out
}

/// Product of all gate matrices applied to `|0…0⟩`.
pub fn dense_run(program: &CircuitProgram, params: &[f64]) -> Vec<C> {
    let n = program.n_qubits;
    let dim = 1 << n;
    let mut total: Matrix = (0..dim).map(|r| (0..dim).map(|c| C::from(if r == c { 1.0 } else { 0.0 })).collect()).collect();
    for g in &program.gates {
        let theta = match g.angle {
            Some(Angle::Slot(s)) => params[s],
            Some(Angle::Fixed(v)) => v,
            None => 0.0,
        };
        total = matmul(&gate_matrix(g.kind, &g.targets, theta, n), &total);
    }
    total.iter().map(|row| row[0]).collect()
}

pub fn distance(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
