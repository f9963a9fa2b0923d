//! Boolean circuits, a small formula language, and compilation of circuits
//! into equivalent ReLU networks.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::models::mlp::{Activation, Layer, Mlp};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    /// Reads 1-based input feature.
    Input(usize),
    Not,
    And,
    Or,
}

impl GateKind {
    fn arity(self) -> usize {
        match self {
            GateKind::Input(_) => 0,
            GateKind::Not => 1,
            GateKind::And | GateKind::Or => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub id: u64,
    pub kind: GateKind,
    pub operands: Vec<u64>,
}

/// Gates are listed in topological order: operands always precede their users.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolCircuit {
    num_inputs: usize,
    gates: Vec<Gate>,
    output: u64,
    // operand positions, resolved once
    resolved: Vec<Vec<usize>>,
    output_pos: usize,
}

impl BoolCircuit {
    pub fn new(num_inputs: usize, gates: Vec<Gate>, output: u64) -> Result<Self> {
        let mut pos: HashMap<u64, usize> = HashMap::new();
        let mut resolved = Vec::with_capacity(gates.len());
        for (k, g) in gates.iter().enumerate() {
            if g.operands.len() != g.kind.arity() {
                return Err(Error::InvalidModel(format!(
                    "gate {}: {:?} takes {} operands, found {}",
                    g.id,
                    g.kind,
                    g.kind.arity(),
                    g.operands.len()
                )));
            }
            if let GateKind::Input(i) = g.kind {
                if i == 0 || i > num_inputs {
                    return Err(Error::InvalidModel(format!("gate {} reads input {i} outside 1..={num_inputs}", g.id)));
                }
            }
            let ops = g
                .operands
                .iter()
                .map(|op| {
                    pos.get(op).copied().ok_or_else(|| {
                        Error::InvalidModel(format!("gate {} uses {op}, which is not an earlier gate", g.id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if pos.insert(g.id, k).is_some() {
                return Err(Error::InvalidModel(format!("duplicate gate id {}", g.id)));
            }
            resolved.push(ops);
        }
        let output_pos = *pos
            .get(&output)
            .ok_or_else(|| Error::InvalidModel(format!("output gate {output} does not exist")))?;
        Ok(BoolCircuit { num_inputs, gates, output, resolved, output_pos })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn evaluate_bits(&self, bits: &[bool]) -> bool {
        let mut wire = vec![false; self.gates.len()];
        for (k, g) in self.gates.iter().enumerate() {
            let ops = &self.resolved[k];
            wire[k] = match g.kind {
                GateKind::Input(i) => bits[i - 1],
                GateKind::Not => !wire[ops[0]],
                GateKind::And => wire[ops[0]] && wire[ops[1]],
                GateKind::Or => wire[ops[0]] || wire[ops[1]],
            };
        }
        wire[self.output_pos]
    }
}

/// Affine expression over the previous layer's units.
#[derive(Clone, Debug, Default)]
struct Affine {
    terms: Vec<(usize, i64)>,
    constant: i64,
}

impl Affine {
    fn unit(k: usize) -> Self {
        Affine { terms: vec![(k, 1)], constant: 0 }
    }

    fn scaled_plus(&self, scale: i64, other: &Affine, constant: i64) -> Affine {
        // scale * self + other + constant
        let mut terms: Vec<(usize, i64)> = self.terms.iter().map(|&(k, c)| (k, c * scale)).collect();
        terms.extend(other.terms.iter().copied());
        Affine { terms, constant: self.constant * scale + other.constant + constant }
    }

    fn negated_plus(&self, constant: i64) -> Affine {
        Affine {
            terms: self.terms.iter().map(|&(k, c)| (k, -c)).collect(),
            constant: constant - self.constant,
        }
    }

    fn dense(&self, width: usize) -> Vec<Rational> {
        let mut row = vec![0i64; width];
        for &(k, c) in &self.terms {
            row[k] += c;
        }
        row.into_iter().map(Rational::integer).collect()
    }
}

/// Compile a circuit into an MLP that agrees with it on every input.
///
/// Each gate becomes one ReLU unit at its depth, on 0/1 wires:
/// `NOT v = relu(1 - v)`, `AND(u, v) = relu(u + v - 1)`,
/// `OR(u, v) = 1 - relu(1 - u - v)` (the outer affine part folds into the
/// next layer). Wires needed deeper are carried forward as `relu(w) = w`.
pub fn circuit_to_mlp(c: &BoolCircuit) -> Result<Mlp> {
    let n = c.num_inputs;
    let g = c.gates.len();
    // cone of influence of the output
    let mut live = vec![false; g];
    live[c.output_pos] = true;
    for k in (0..g).rev() {
        if live[k] {
            for &op in &c.resolved[k] {
                live[op] = true;
            }
        }
    }
    let mut depth = vec![0usize; g];
    for k in 0..g {
        depth[k] = match c.gates[k].kind {
            GateKind::Input(_) => 0,
            _ => 1 + c.resolved[k].iter().map(|&op| depth[op]).max().unwrap_or(0),
        };
    }
    let total_depth = depth[c.output_pos];
    let mut last_use = vec![0usize; g];
    for k in 0..g {
        if live[k] {
            for &op in &c.resolved[k] {
                last_use[op] = last_use[op].max(depth[k]);
            }
        }
    }
    last_use[c.output_pos] = total_depth + 1;

    // wire value as affine expression over the current layer's outputs
    let mut expr: Vec<Option<Affine>> = vec![None; g];
    for k in 0..g {
        if let (true, GateKind::Input(i)) = (live[k], c.gates[k].kind) {
            expr[k] = Some(Affine::unit(i - 1));
        }
    }
    let mut width = n;
    let mut layers = Vec::new();
    for level in 1..=total_depth {
        let mut rows: Vec<Affine> = Vec::new();
        let mut next: Vec<Option<Affine>> = vec![None; g];
        for k in 0..g {
            if !live[k] {
                continue;
            }
            if depth[k] == level {
                let ops: Vec<&Affine> =
                    c.resolved[k].iter().map(|&op| expr[op].as_ref().expect("operand available")).collect();
                let unit = rows.len();
                let (pre, wire) = match c.gates[k].kind {
                    GateKind::Not => (ops[0].negated_plus(1), Affine::unit(unit)),
                    GateKind::And => (ops[0].scaled_plus(1, ops[1], -1), Affine::unit(unit)),
                    GateKind::Or => {
                        let sum = ops[0].scaled_plus(1, ops[1], 0);
                        (sum.negated_plus(1), Affine::unit(unit).negated_plus(1))
                    }
                    GateKind::Input(_) => unreachable!("inputs sit at depth 0"),
                };
                rows.push(pre);
                next[k] = Some(wire);
            } else if depth[k] < level && last_use[k] > level {
                let unit = rows.len();
                rows.push(expr[k].clone().expect("carried wire"));
                next[k] = Some(Affine::unit(unit));
            }
        }
        layers.push(Layer {
            weights: rows.iter().map(|a| a.dense(width)).collect(),
            bias: rows.iter().map(|a| Rational::integer(a.constant)).collect(),
            activation: Activation::Relu,
        });
        width = rows.len();
        expr = next;
    }
    let out = expr[c.output_pos].clone().expect("output wire");
    layers.push(Layer {
        weights: vec![out.dense(width)],
        bias: vec![Rational::integer(out.constant)],
        activation: Activation::Step,
    });
    Mlp::new(n, layers)
}

/// Propositional formula over variables `x1..xn`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(i: usize) -> Formula {
        Formula::Var(i)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// Largest variable index mentioned.
    pub fn max_var(&self) -> usize {
        match self {
            Formula::Var(i) => *i,
            Formula::Not(a) => a.max_var(),
            Formula::And(a, b) | Formula::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn evaluate(&self, bits: &[bool]) -> bool {
        match self {
            Formula::Var(i) => bits[i - 1],
            Formula::Not(a) => !a.evaluate(bits),
            Formula::And(a, b) => a.evaluate(bits) && b.evaluate(bits),
            Formula::Or(a, b) => a.evaluate(bits) || b.evaluate(bits),
        }
    }

    /// Grammar: `or := and ('|' and)*`, `and := unary ('&' unary)*`,
    /// `unary := '!' unary | '(' or ')' | 'x' digits`. `~ ¬ ∧ ∨` are accepted too.
    pub fn parse(text: &str) -> Result<Formula> {
        let tokens: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = FormulaParser { tokens, at: 0 };
        let f = p.or()?;
        if p.at != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected {:?} at position {}", p.tokens[p.at], p.at)));
        }
        Ok(f)
    }

    pub fn to_circuit(&self, num_inputs: usize) -> Result<BoolCircuit> {
        fn emit(f: &Formula, gates: &mut Vec<Gate>) -> u64 {
            let (kind, operands) = match f {
                Formula::Var(i) => (GateKind::Input(*i), vec![]),
                Formula::Not(a) => (GateKind::Not, vec![emit(a, gates)]),
                Formula::And(a, b) => (GateKind::And, vec![emit(a, gates), emit(b, gates)]),
                Formula::Or(a, b) => (GateKind::Or, vec![emit(a, gates), emit(b, gates)]),
            };
            let id = gates.len() as u64;
            gates.push(Gate { id, kind, operands });
            id
        }
        let mut gates = Vec::new();
        let out = emit(self, &mut gates);
        BoolCircuit::new(num_inputs, gates, out)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Var(i) => write!(f, "x{i}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

struct FormulaParser {
    tokens: Vec<char>,
    at: usize,
}

impl FormulaParser {
    fn peek(&self) -> Option<char> {
        self.tokens.get(self.at).copied()
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while matches!(self.peek(), Some('|' | '∨')) {
            self.at += 1;
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while matches!(self.peek(), Some('&' | '∧')) {
            self.at += 1;
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some('!' | '~' | '¬') => {
                self.at += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some('(') => {
                self.at += 1;
                let inner = self.or()?;
                if self.peek() != Some(')') {
                    return Err(Error::Parse(format!("expected ')' at position {}", self.at)));
                }
                self.at += 1;
                Ok(inner)
            }
            Some('x') => {
                self.at += 1;
                let start = self.at;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.at += 1;
                }
                let digits: String = self.tokens[start..self.at].iter().collect();
                match digits.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(Formula::Var(i)),
                    _ => Err(Error::Parse(format!("bad variable at position {start}"))),
                }
            }
            Some(c) => Err(Error::Parse(format!("unexpected {c:?} at position {}", self.at))),
            None => Err(Error::Parse("unexpected end of formula".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agrees(formula: &str) -> Mlp {
        let f = Formula::parse(formula).unwrap();
        let n = f.max_var();
        let c = f.to_circuit(n).unwrap();
        let m = circuit_to_mlp(&c).unwrap();
        for mask in 0u64..1 << n {
            let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            assert_eq!(m.evaluate_bits(&bits), f.evaluate(&bits), "{formula} at {mask:b}");
            assert_eq!(c.evaluate_bits(&bits), f.evaluate(&bits));
        }
        m
    }

    #[test]
    fn negation_compiles() {
        let m = agrees("!x1");
        assert!(m.evaluate_bits(&[false]));
        assert!(!m.evaluate_bits(&[true]));
    }

    #[test]
    fn conjunction_and_tautology_compile() {
        agrees("x1 & x2");
        let m = agrees("x1 | !x1");
        assert!(m.evaluate_bits(&[false]) && m.evaluate_bits(&[true]));
        agrees("(x1 | x2) | (!x1 & !x2)");
        agrees("x3");
        agrees("((x1 & !x2) | (x3 & x1)) & !(x2 | x4)");
    }

    #[test]
    fn parser_errors() {
        assert!(Formula::parse("x1 &").is_err());
        assert!(Formula::parse("(x1").is_err());
        assert!(Formula::parse("x0").is_err());
        assert!(Formula::parse("y1").is_err());
        assert_eq!(Formula::parse("x1∨¬x1").unwrap().to_string(), "(x1 | !x1)");
    }

    #[test]
    fn malformed_circuits_are_rejected() {
        let bad_arity = vec![Gate { id: 0, kind: GateKind::Not, operands: vec![] }];
        assert!(BoolCircuit::new(1, bad_arity, 0).is_err());
        let forward_ref = vec![
            Gate { id: 0, kind: GateKind::Not, operands: vec![1] },
            Gate { id: 1, kind: GateKind::Input(1), operands: vec![] },
        ];
        assert!(BoolCircuit::new(1, forward_ref, 0).is_err());
        let bad_input = vec![Gate { id: 0, kind: GateKind::Input(3), operands: vec![] }];
        assert!(BoolCircuit::new(2, bad_input, 0).is_err());
    }
}
