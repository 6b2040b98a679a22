//! Gate counts and greedy logical depth.

use std::collections::BTreeMap;

use crate::simulator::CircuitProgram;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GateStats {
    pub n_1q: usize,
    pub n_2q: usize,
    /// Gates packed as early as possible onto per-qubit timelines.
    pub depth: usize,
    pub per_kind: BTreeMap<&'static str, usize>,
}

impl GateStats {
    pub fn total(&self) -> usize {
        self.n_1q + self.n_2q
    }
}

pub fn gate_stats(program: &CircuitProgram) -> GateStats {
    let mut stats = GateStats::default();
    let mut front = vec![0usize; program.n_qubits];
    for g in &program.gates {
        if g.targets.len() == 2 {
            stats.n_2q += 1;
        } else {
            stats.n_1q += 1;
        }
        *stats.per_kind.entry(g.kind.name()).or_default() += 1;
        let level = g.targets.iter().map(|&q| front[q]).max().unwrap_or(0) + 1;
        for &q in &g.targets {
            front[q] = level;
        }
        stats.depth = stats.depth.max(level);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{Angle, Gate};

    #[test]
    fn empty() {
        assert_eq!(gate_stats(&CircuitProgram::new(3)), GateStats::default());
    }

    #[test]
    fn cx_line_trace() {
        let mut p = CircuitProgram::new(3);
        p.push(Gate::cx(0, 1));
        p.push(Gate::cx(1, 2));
        p.push(Gate::cx(0, 1));
        let s = gate_stats(&p);
        assert_eq!((s.n_2q, s.depth, s.per_kind["cx"]), (3, 3, 3));
    }

    #[test]
    fn disjoint_pairs_pack() {
        let mut p = CircuitProgram::new(4);
        p.push(Gate::cx(0, 1));
        p.push(Gate::cz(2, 3));
        assert_eq!(gate_stats(&p).depth, 1);
    }

    #[test]
    fn single_qubit_chain_depth_is_count() {
        let mut p = CircuitProgram::new(2);
        for i in 0..5 {
            p.push(Gate::rx(1, Angle::Fixed(i as f64)));
        }
        let s = gate_stats(&p);
        assert_eq!((s.n_1q, s.depth, s.total()), (5, 5, 5));
    }
}
