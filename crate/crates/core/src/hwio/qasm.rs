//! OpenQASM 2.0 export and a parser for the exported subset.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::simulator::{Angle, CircuitProgram, Gate, GateKind};
use crate::{QsError, Result};

const HEADER: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";

/// Writes `program` with every angle bound from `params`. Angles are printed in
/// the shortest decimal form that parses back to the same `f64`.
pub fn export_qasm(program: &CircuitProgram, params: &[f64]) -> Result<String> {
    program.validate()?;
    if params.len() != program.n_params {
        return Err(QsError::contract(format!("{} values for {} parameter slots", params.len(), program.n_params)));
    }
    let mut out = String::from(HEADER);
    out.push_str("// qubit 0 is the most significant bit of the basis-state index\n");
    out.push_str("// rx/ry/rz(t) = exp(-i t P/2), rzz(t) = exp(-i t Z(x)Z/2)\n");
    let _ = writeln!(out, "qreg q[{}];", program.n_qubits);
    for gate in &program.gates {
        let name = gate.kind.name();
        let angle = gate.resolve(params)?;
        match angle {
            Some(a) => {
                if !a.is_finite() {
                    return Err(QsError::contract(format!("non-finite angle {a} on {name}")));
                }
                let _ = write!(out, "{name}({a:?}) ");
            }
            None => {
                let _ = write!(out, "{name} ");
            }
        }
        let targets: Vec<String> = gate.targets.iter().map(|t| format!("q[{t}]")).collect();
        let _ = writeln!(out, "{};", targets.join(","));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

struct Lexer {
    line: usize,
    /// `(1-based column, char)`.
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Lexer {
    fn new(line: usize, src: &str) -> Self {
        Self { line, chars: src.chars().enumerate().map(|(i, c)| (i + 1, c)).collect(), pos: 0 }
    }

    fn err(&self, column: usize, message: String) -> QsError {
        QsError::Parse { line: self.line, column, message }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>> {
        let mut out = Vec::new();
        while self.pos < self.chars.len() {
            let (col, c) = self.chars[self.pos];
            if c.is_whitespace() {
                self.pos += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = self.pos;
                while self.pos < self.chars.len() {
                    let ch = self.chars[self.pos].1;
                    let prev = if self.pos > start { self.chars[self.pos - 1].1 } else { ' ' };
                    let sign_in_exp = (ch == '-' || ch == '+') && (prev == 'e' || prev == 'E');
                    if ch.is_ascii_alphanumeric() || ch == '.' || sign_in_exp {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                let v = text.parse::<f64>().map_err(|_| self.err(col, format!("malformed number `{text}`")))?;
                out.push((col, Tok::Num(v)));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = self.pos;
                while self.pos < self.chars.len() && (self.chars[self.pos].1.is_ascii_alphanumeric() || self.chars[self.pos].1 == '_') {
                    self.pos += 1;
                }
                out.push((col, Tok::Ident(self.chars[start..self.pos].iter().map(|&(_, c)| c).collect())));
            } else if c == '"' {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.chars.len() && self.chars[self.pos].1 != '"' {
                    self.pos += 1;
                }
                if self.pos == self.chars.len() {
                    return Err(self.err(col, "unterminated string".into()));
                }
                self.pos += 1;
                out.push((col, Tok::Ident(self.chars[start..self.pos].iter().map(|&(_, c)| c).collect())));
            } else if "()[],;+-*/".contains(c) {
                out.push((col, Tok::Sym(c)));
                self.pos += 1;
            } else {
                return Err(self.err(col, format!("unexpected character `{c}`")));
            }
        }
        Ok(out)
    }
}

/// Recursive-descent parser over the tokens of one statement.
struct Parser {
    line: usize,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end_col)
    }

    fn err(&self, message: String) -> QsError {
        QsError::Parse { line: self.line, column: self.col(), message }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of statement".into(),
            Some(Tok::Num(v)) => format!("`{v}`"),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Sym(c)) => format!("`{c}`"),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`, found {}", self.describe())))
        }
    }

    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        while let Some(Tok::Sym(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let r = self.term()?;
            v = if c == '+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.unary()?;
        while let Some(Tok::Sym(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let r = self.unary()?;
            v = if c == '*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<f64> {
        match self.peek().cloned() {
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Sym('+')) => {
                self.pos += 1;
                self.unary()
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Tok::Ident(s)) if s == "pi" => {
                self.pos += 1;
                Ok(PI)
            }
            _ => Err(self.err(format!("malformed angle: unexpected {}", self.describe()))),
        }
    }

    fn qubit(&mut self, reg: &str, n: usize) -> Result<usize> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s == reg => self.pos += 1,
            _ => return Err(self.err(format!("expected register `{reg}`, found {}", self.describe()))),
        }
        self.expect_sym('[')?;
        let idx = match self.peek().cloned() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v >= 0.0 && (v as usize) < n => v as usize,
            _ => return Err(self.err(format!("invalid qubit index {}", self.describe()))),
        };
        self.pos += 1;
        self.expect_sym(']')?;
        Ok(idx)
    }

    fn done(&self) -> Result<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {} after statement", self.describe())))
        }
    }
}

/// Splits source into `(line, column offset, statement)` triples on `;`,
/// dropping `//` comments.
fn statements(text: &str) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        let mut offset = 0;
        for piece in line.split(';') {
            if !piece.trim().is_empty() {
                out.push((i + 1, offset, piece.to_string()));
            }
            offset += piece.chars().count() + 1;
        }
    }
    out
}

const UNSUPPORTED: &[&str] = &["measure", "creg", "reset", "if", "barrier", "gate", "opaque", "U", "CX"];

/// Parses the subset written by [`export_qasm`]. Every angle comes back as a
/// fixed value; the program has no parameter slots.
pub fn import_qasm(text: &str) -> Result<CircuitProgram> {
    let mut program: Option<(String, CircuitProgram)> = None;
    let mut saw_version = false;
    for (line, offset, stmt) in statements(text) {
        let first: String = stmt.trim_start().chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '_').collect();
        if UNSUPPORTED.contains(&first.as_str()) {
            return Err(QsError::UnsupportedFeature { line, feature: first });
        }
        let toks = Lexer::new(line, &stmt).tokens()?.into_iter().map(|(c, t)| (c + offset, t)).collect::<Vec<_>>();
        let end_col = offset + stmt.chars().count() + 1;
        let mut p = Parser { line, toks, pos: 0, end_col };
        let head = match p.peek().cloned() {
            Some(Tok::Ident(s)) => s,
            _ => return Err(p.err(format!("expected a statement, found {}", p.describe()))),
        };
        p.pos += 1;
        match head.as_str() {
            "OPENQASM" => {
                match p.peek() {
                    Some(Tok::Num(v)) if *v == 2.0 => p.pos += 1,
                    _ => return Err(QsError::UnsupportedFeature { line, feature: format!("OPENQASM version {}", p.describe()) }),
                }
                p.done()?;
                saw_version = true;
            }
            "include" => {
                match p.peek() {
                    Some(Tok::Ident(s)) if s == "\"qelib1.inc\"" => p.pos += 1,
                    _ => return Err(QsError::UnsupportedFeature { line, feature: format!("include {}", p.describe()) }),
                }
                p.done()?;
            }
            "qreg" => {
                if program.is_some() {
                    return Err(QsError::UnsupportedFeature { line, feature: "multiple qreg".into() });
                }
                let name = match p.peek().cloned() {
                    Some(Tok::Ident(s)) => s,
                    _ => return Err(p.err(format!("expected register name, found {}", p.describe()))),
                };
                p.pos += 1;
                p.expect_sym('[')?;
                let n = match p.peek().cloned() {
                    Some(Tok::Num(v)) if v.fract() == 0.0 && v >= 1.0 => v as usize,
                    _ => return Err(p.err(format!("invalid register size {}", p.describe()))),
                };
                p.pos += 1;
                p.expect_sym(']')?;
                p.done()?;
                program = Some((name, CircuitProgram::new(n)));
            }
            name => {
                let kind = GateKind::from_name(name).ok_or_else(|| QsError::UnsupportedFeature { line, feature: format!("gate `{name}`") })?;
                let Some((reg, prog)) = program.as_mut() else {
                    return Err(QsError::Parse { line, column: offset + 1, message: "gate before qreg declaration".into() });
                };
                let angle = if kind.is_parameterized() {
                    p.expect_sym('(')?;
                    let a = p.expr()?;
                    p.expect_sym(')')?;
                    Some(a)
                } else {
                    None
                };
                let mut targets = vec![p.qubit(reg, prog.n_qubits)?];
                for _ in 1..kind.arity() {
                    p.expect_sym(',')?;
                    targets.push(p.qubit(reg, prog.n_qubits)?);
                }
                p.done()?;
                let gate = Gate { kind, targets, angle: angle.map(Angle::Fixed) };
                gate.check_shape().map_err(|e| QsError::Parse { line, column: offset + 1, message: e.to_string() })?;
                prog.push(gate);
            }
        }
    }
    if !saw_version {
        return Err(QsError::Parse { line: 1, column: 1, message: "missing `OPENQASM 2.0;` header".into() });
    }
    program.map(|(_, p)| p).ok_or_else(|| QsError::Parse { line: 1, column: 1, message: "no qreg declaration".into() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ry_half_pi_text() {
        let mut p = CircuitProgram::new(1);
        let a = p.new_slot();
        p.push(Gate::ry(0, a));
        let text = export_qasm(&p, &[PI / 2.0]).unwrap();
        assert!(text.contains("ry(1.5707963267948966) q[0];"), "{text}");
    }

    #[test]
    fn empty_program_round_trips() {
        let p = CircuitProgram::new(3);
        let text = export_qasm(&p, &[]).unwrap();
        assert!(text.contains("qreg q[3];"));
        let back = import_qasm(&text).unwrap();
        assert_eq!((back.n_qubits, back.gates.len()), (3, 0));
    }

    #[test]
    fn structural_round_trip() {
        let mut p = CircuitProgram::new(3);
        let a = p.new_slot();
        let b = p.new_slot();
        p.push(Gate::rx(0, a));
        p.push(Gate::h(1));
        p.push(Gate::cx(0, 2));
        p.push(Gate::cz(2, 1));
        p.push(Gate::rzz(1, 2, b));
        p.push(Gate::fixed(GateKind::Rz, &[2], -1e-7));
        let params = [0.1 + 0.2, -3.25];
        let back = import_qasm(&export_qasm(&p, &params).unwrap()).unwrap();
        assert_eq!(back.gates, p.bind(&params).unwrap().gates);
    }

    #[test]
    fn measure_is_unsupported() {
        let text = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\ncreg c[1];\nmeasure q[0] -> c[0];\n";
        assert!(matches!(import_qasm(text), Err(QsError::UnsupportedFeature { line: 4, .. })));
        let text = "OPENQASM 2.0;\nqreg q[1];\nmeasure q[0] -> c[0];\n";
        match import_qasm(text) {
            Err(QsError::UnsupportedFeature { line, feature }) => assert_eq!((line, feature.as_str()), (3, "measure")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_angle_names_token() {
        let text = "OPENQASM 2.0;\nqreg q[2];\nry(1.2.3) q[0];\n";
        match import_qasm(text) {
            Err(QsError::Parse { line, column, message }) => {
                assert_eq!((line, column), (3, 4));
                assert!(message.contains("1.2.3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let text = "OPENQASM 2.0;\nqreg q[2];\nrz(abc) q[1];\n";
        match import_qasm(text) {
            Err(QsError::Parse { message, .. }) => assert!(message.contains("abc"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pi_expressions() {
        let text = "OPENQASM 2.0;\nqreg q[1];\nrx(-pi/4) q[0]; ry(2*(pi - 1)) q[0];\n";
        let p = import_qasm(text).unwrap();
        assert_eq!(p.gates[0].angle, Some(Angle::Fixed(-PI / 4.0)));
        assert_eq!(p.gates[1].angle, Some(Angle::Fixed(2.0 * (PI - 1.0))));
    }

    #[test]
    fn bad_targets_rejected() {
        assert!(matches!(import_qasm("OPENQASM 2.0;\nqreg q[2];\ncx q[0],q[0];\n"), Err(QsError::Parse { line: 3, .. })));
        assert!(matches!(import_qasm("OPENQASM 2.0;\nqreg q[2];\nh q[2];\n"), Err(QsError::Parse { line: 3, .. })));
        assert!(matches!(import_qasm("OPENQASM 2.0;\nqreg q[2];\nu3(1,2,3) q[0];\n"), Err(QsError::UnsupportedFeature { .. })));
    }
}
