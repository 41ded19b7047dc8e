//! Native operations (two-level rotations and the pair entangler) and the
//! compiler from logical gates to native sequences.
//!
//! Every sequence assumes the +i entangler. [`repair_phase_branch`] adapts a
//! sequence for hardware realizing the -i variant.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::RotState;
use crate::dynamics::PhaseBranch;
use crate::encodings::{physical_index, Encoding, ANC, L0, L00, L01, L1, L10, L11};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    /// exp(-iσθ/2) on the span of `pair`, with σ = |a><b| + h.c. (x) or
    /// -i|a><b| + i|b><a| (y).
    Rotation {
        axis: Axis,
        qudit: usize,
        pair: (RotState, RotState),
        angle: f64,
    },
    /// The pair entangler raised to `power`.
    Entangler { qudits: (usize, usize), power: u32 },
}

impl GateOp {
    pub fn rx(qudit: usize, a: RotState, b: RotState, angle: f64) -> Self {
        GateOp::Rotation {
            axis: Axis::X,
            qudit,
            pair: (a, b),
            angle,
        }
    }

    pub fn ry(qudit: usize, a: RotState, b: RotState, angle: f64) -> Self {
        GateOp::Rotation {
            axis: Axis::Y,
            qudit,
            pair: (a, b),
            angle,
        }
    }

    pub fn u(a: usize, b: usize) -> Self {
        GateOp::Entangler { qudits: (a, b), power: 1 }
    }

    pub fn u_pow(a: usize, b: usize, power: u32) -> Self {
        GateOp::Entangler { qudits: (a, b), power }
    }

    pub fn qudits(&self) -> Vec<usize> {
        match *self {
            GateOp::Rotation { qudit, .. } => vec![qudit],
            GateOp::Entangler { qudits: (a, b), .. } => vec![a, b],
        }
    }

    /// Entangler applications this op stands for.
    pub fn entangler_count(&self) -> usize {
        match *self {
            GateOp::Rotation { .. } => 0,
            GateOp::Entangler { power, .. } => power as usize,
        }
    }

    pub fn validate(&self, num_qudits: usize) -> Result<()> {
        match *self {
            GateOp::Rotation { qudit, pair, angle, .. } => {
                if qudit >= num_qudits {
                    return Err(Error::domain(format!("qudit {qudit} out of range for {num_qudits} qudits")));
                }
                if pair.0 == pair.1 {
                    return Err(Error::domain(format!("rotation pair repeats level {}", pair.0)));
                }
                physical_index(pair.0)?;
                physical_index(pair.1)?;
                if !angle.is_finite() {
                    return Err(Error::domain("rotation angle must be finite"));
                }
            }
            GateOp::Entangler { qudits: (a, b), power } => {
                if a >= num_qudits || b >= num_qudits {
                    return Err(Error::domain(format!("entangler ({a}, {b}) out of range for {num_qudits} qudits")));
                }
                if a == b {
                    return Err(Error::domain("entangler needs two distinct qudits"));
                }
                if power == 0 {
                    return Err(Error::domain("entangler power must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateOp::Rotation { axis, qudit, pair, angle } => {
                let tag = match axis {
                    Axis::X => "RX",
                    Axis::Y => "RY",
                };
                write!(f, "{tag} {qudit} {} {} {angle:?}", pair.0, pair.1)
            }
            GateOp::Entangler { qudits: (a, b), power } => write!(f, "U {a} {b} {power}"),
        }
    }
}

fn parse_op(line: &str, lineno: usize) -> Result<GateOp> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let index = |t: &str| t.parse::<usize>().map_err(|_| err(format!("bad qudit index `{t}`")));
    let level = |t: &str| t.parse::<RotState>().map_err(|e| err(format!("bad level `{t}`: {e}")));
    match tokens.as_slice() {
        [tag @ ("RX" | "RY"), q, a, b, angle] => {
            let angle: f64 = angle.parse().map_err(|_| err(format!("bad angle `{angle}`")))?;
            let axis = if *tag == "RX" { Axis::X } else { Axis::Y };
            Ok(GateOp::Rotation {
                axis,
                qudit: index(q)?,
                pair: (level(a)?, level(b)?),
                angle,
            })
        }
        ["U", a, b, p] => Ok(GateOp::Entangler {
            qudits: (index(a)?, index(b)?),
            power: p.parse().map_err(|_| err(format!("bad power `{p}`")))?,
        }),
        _ => Err(err(format!("unrecognized op `{line}`"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuditCircuit {
    pub num_qudits: usize,
    pub encoding: Encoding,
    pub ops: Vec<GateOp>,
}

impl QuditCircuit {
    pub fn new(num_qudits: usize, encoding: Encoding) -> Self {
        QuditCircuit {
            num_qudits,
            encoding,
            ops: Vec::new(),
        }
    }

    pub fn with_ops(num_qudits: usize, encoding: Encoding, ops: Vec<GateOp>) -> Result<Self> {
        let c = QuditCircuit {
            num_qudits,
            encoding,
            ops,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn dimension(&self) -> usize {
        self.encoding.dimension()
    }

    pub fn validate(&self) -> Result<()> {
        self.ops.iter().try_for_each(|op| op.validate(self.num_qudits))
    }

    pub fn push(&mut self, op: GateOp) {
        self.ops.push(op);
    }

    pub fn extend(&mut self, ops: impl IntoIterator<Item = GateOp>) {
        self.ops.extend(ops);
    }

    pub fn entangler_count(&self) -> usize {
        self.ops.iter().map(GateOp::entangler_count).sum()
    }

    pub fn entangler_lines(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, GateOp::Entangler { .. })).count()
    }

    /// Number of layers when every op starts as early as its qudits allow.
    pub fn depth(&self) -> usize {
        self.layered_depth(|_| true)
    }

    /// Depth counting entangler ops only.
    pub fn entangler_depth(&self) -> usize {
        self.layered_depth(|op| matches!(op, GateOp::Entangler { .. }))
    }

    fn layered_depth(&self, counts: impl Fn(&GateOp) -> bool) -> usize {
        let mut front = vec![0usize; self.num_qudits];
        for op in &self.ops {
            let qs = op.qudits();
            let start = qs.iter().map(|&q| front[q]).max().unwrap_or(0);
            let end = start + usize::from(counts(op));
            for q in qs {
                front[q] = end;
            }
        }
        front.into_iter().max().unwrap_or(0)
    }

    /// The inverse sequence.
    pub fn inverse(&self) -> QuditCircuit {
        QuditCircuit {
            num_qudits: self.num_qudits,
            encoding: self.encoding,
            ops: invert(&self.ops),
        }
    }

    /// Text form: two header comments, then one op per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# encoding {}\n# qudits {}\n", self.encoding, self.num_qudits);
        for op in &self.ops {
            s.push_str(&op.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses [`QuditCircuit::to_text`] output. Missing headers fall back to
    /// `default_encoding` and the smallest register holding every op.
    pub fn from_text(text: &str, default_encoding: Encoding) -> Result<Self> {
        let mut encoding = None;
        let mut num_qudits = None;
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                match (words.next(), words.next()) {
                    (Some("encoding"), Some(e)) => {
                        encoding = Some(e.parse().map_err(|e: Error| Error::Parse {
                            line: lineno,
                            msg: e.to_string(),
                        })?)
                    }
                    (Some("qudits"), Some(n)) => {
                        num_qudits = Some(n.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad qudit count `{n}`"),
                        })?)
                    }
                    _ => {}
                }
                continue;
            }
            ops.push(parse_op(line, lineno)?);
        }
        let needed = ops.iter().flat_map(GateOp::qudits).max().map_or(0, |m| m + 1);
        let num_qudits = num_qudits.unwrap_or(needed.max(1));
        QuditCircuit::with_ops(num_qudits, encoding.unwrap_or(default_encoding), ops)
    }
}

/// Reverses a sequence. The inverse of an odd entangler power is the same
/// power conjugated by a phase flip of |1,0> on its first qudit.
pub fn invert(ops: &[GateOp]) -> Vec<GateOp> {
    let mut out = Vec::with_capacity(ops.len());
    for op in ops.iter().rev() {
        match *op {
            GateOp::Rotation { axis, qudit, pair, angle } => out.push(GateOp::Rotation {
                axis,
                qudit,
                pair,
                angle: -angle,
            }),
            GateOp::Entangler { qudits, power } => {
                let p = power % 4;
                if p % 2 == 1 {
                    out.push(branch_flip(qudits.0));
                    out.push(*op);
                    out.push(branch_flip(qudits.0));
                } else {
                    out.push(*op);
                }
            }
        }
    }
    out
}

/// Sign flip on level (1,0) of one qudit, borrowing (3,0). Conjugating the
/// entangler with it exchanges the ±i variants exactly on all levels.
pub fn branch_flip(qudit: usize) -> GateOp {
    GateOp::rx(qudit, L1, ANC, 2.0 * PI)
}

/// Adapts a +i sequence for hardware whose entangler has `physical` phase.
pub fn repair_phase_branch(circuit: &QuditCircuit, physical: PhaseBranch) -> QuditCircuit {
    if physical == PhaseBranch::PlusI {
        return circuit.clone();
    }
    let mut ops = Vec::with_capacity(circuit.ops.len());
    for op in &circuit.ops {
        match *op {
            GateOp::Entangler { qudits, power } if power % 2 == 1 => {
                ops.push(branch_flip(qudits.0));
                ops.push(*op);
                ops.push(branch_flip(qudits.0));
            }
            _ => ops.push(*op),
        }
    }
    QuditCircuit {
        num_qudits: circuit.num_qudits,
        encoding: circuit.encoding,
        ops: cancel_adjacent(ops),
    }
}

/// Drops neighbouring rotations on the same pair whose angles sum to a
/// multiple of 4π.
pub fn cancel_adjacent(ops: Vec<GateOp>) -> Vec<GateOp> {
    let mut out: Vec<GateOp> = Vec::with_capacity(ops.len());
    for op in ops {
        if let (
            Some(GateOp::Rotation { axis: a1, qudit: q1, pair: p1, angle: t1 }),
            GateOp::Rotation { axis: a2, qudit: q2, pair: p2, angle: t2 },
        ) = (out.last().copied(), op)
        {
            let turns = (t1 + t2) / (4.0 * PI);
            if a1 == a2 && q1 == q2 && p1 == p2 && (turns - turns.round()).abs() < 1e-12 {
                out.pop();
                continue;
            }
        }
        out.push(op);
    }
    out
}

/// 5×5 matrix of a two-level rotation over the qudit levels.
pub fn rotation_matrix(axis: Axis, pair: (RotState, RotState), angle: f64) -> Result<DMatrix<Complex64>> {
    rotation_matrix_on(axis, pair, angle, &crate::encodings::PHYSICAL_LEVELS)
}

/// Rotation over an arbitrary ordered level list.
pub fn rotation_matrix_on(
    axis: Axis,
    pair: (RotState, RotState),
    angle: f64,
    levels: &[RotState],
) -> Result<DMatrix<Complex64>> {
    if pair.0 == pair.1 {
        return Err(Error::domain(format!("rotation pair repeats level {}", pair.0)));
    }
    let find = |s: RotState| {
        levels
            .iter()
            .position(|&x| x == s)
            .ok_or_else(|| Error::domain(format!("level {s} not among the rotation levels")))
    };
    let (a, b) = (find(pair.0)?, find(pair.1)?);
    let n = levels.len();
    let mut m = DMatrix::<Complex64>::identity(n, n);
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    m[(a, a)] = Complex64::new(c, 0.0);
    m[(b, b)] = Complex64::new(c, 0.0);
    match axis {
        Axis::X => {
            m[(a, b)] = Complex64::new(0.0, -s);
            m[(b, a)] = Complex64::new(0.0, -s);
        }
        Axis::Y => {
            m[(a, b)] = Complex64::new(-s, 0.0);
            m[(b, a)] = Complex64::new(s, 0.0);
        }
    }
    Ok(m)
}

/// A logical qubit: the qudit holding it and its slot (0 = first qubit of a
/// ququart/ququint, always 0 for one-qubit encodings).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitRef {
    pub qudit: usize,
    pub slot: usize,
}

impl QubitRef {
    pub fn new(qudit: usize, slot: usize) -> Self {
        QubitRef { qudit, slot }
    }

    /// Qubit `k` of a register, first qubit first.
    pub fn nth(encoding: Encoding, k: usize) -> Self {
        let per = encoding.qubits_per_qudit();
        QubitRef {
            qudit: k / per,
            slot: k % per,
        }
    }

    fn check(&self, encoding: Encoding) -> Result<()> {
        if self.slot >= encoding.qubits_per_qudit() {
            return Err(Error::domain(format!(
                "slot {} invalid for the {} encoding",
                self.slot, encoding
            )));
        }
        Ok(())
    }
}

/// Encodings with an ancilla level next to |0_L>, |1_L>. In the ququint these
/// gates act on the (0,0), (1,0), (3,0) sublevels, one qubit per qudit.
pub const ANCILLA_ENCODINGS: &[Encoding] = &[Encoding::QutritAnc, Encoding::Ququint];

fn require(encoding: Encoding, allowed: &[Encoding], what: &str) -> Result<()> {
    if allowed.contains(&encoding) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} is not available in the {encoding} encoding")))
    }
}

fn distinct(qudits: &[usize]) -> Result<()> {
    for (i, q) in qudits.iter().enumerate() {
        if qudits[..i].contains(q) {
            return Err(Error::domain(format!("qudit {q} used twice")));
        }
    }
    Ok(())
}

/// Pauli Z on one logical qubit: a 2π rotation of its |1> level(s) through
/// an unpopulated partner level.
pub fn synth_z(target: QubitRef, encoding: Encoding) -> Result<Vec<GateOp>> {
    target.check(encoding)?;
    let q = target.qudit;
    Ok(match (encoding, target.slot) {
        (Encoding::Qubit, _) => vec![GateOp::rx(q, L1, ANC, 2.0 * PI)],
        (Encoding::QutritAnc, _) => vec![GateOp::rx(q, L1, L10, 2.0 * PI)],
        (_, 0) => vec![GateOp::rx(q, L10, L11, 2.0 * PI)],
        _ => vec![GateOp::rx(q, L01, L11, 2.0 * PI)],
    })
}

/// X on a one-qubit qudit, up to a sign on |1>: maps |0> → |1>, |1> → -|0>.
fn x_gate(q: usize) -> GateOp {
    GateOp::ry(q, L0, L1, PI)
}

/// Hadamard on a one-qubit qudit, up to global phase -i.
fn hadamard(q: usize) -> Vec<GateOp> {
    vec![GateOp::ry(q, L0, L1, FRAC_PI_2), GateOp::rx(q, L0, L1, PI)]
}

/// CNOT from two entanglers and single-qudit rotations on the qubit levels.
pub fn synth_cnot_via_iswaps(control: usize, target: usize, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, &[Encoding::Qubit, Encoding::QutritAnc], "two-entangler CNOT")?;
    distinct(&[control, target])?;
    let (c, t) = (control, target);
    Ok(vec![
        GateOp::rx(c, L0, L1, FRAC_PI_2),
        GateOp::ry(t, L0, L1, FRAC_PI_2),
        GateOp::u(c, t),
        GateOp::rx(t, L0, L1, FRAC_PI_2),
        GateOp::u(c, t),
        GateOp::ry(c, L0, L1, -FRAC_PI_2),
        GateOp::rx(c, L0, L1, FRAC_PI_2),
        GateOp::ry(t, L0, L1, -FRAC_PI_2),
        GateOp::rx(t, L0, L1, -FRAC_PI_2),
    ])
}

/// Cyclic shift |0> → |1> → |anc> → |0> on one qutrit.
pub fn synth_p(qudit: usize, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, ANCILLA_ENCODINGS, "P")?;
    Ok(p_ops(qudit))
}

fn p_ops(q: usize) -> Vec<GateOp> {
    vec![GateOp::ry(q, L0, L1, PI), GateOp::ry(q, L0, ANC, -PI)]
}

/// Exchange |1,1> ↔ |0,anc> with phase i, identity on the other products.
pub fn synth_iswap_0anc(a: usize, b: usize, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, ANCILLA_ENCODINGS, "iSWAP(0,anc)")?;
    distinct(&[a, b])?;
    Ok(iswap_0anc_ops(a, b, 1))
}

fn iswap_0anc_ops(a: usize, b: usize, power: u32) -> Vec<GateOp> {
    let mut ops = invert(&p_ops(b));
    ops.extend(std::iter::repeat_n(GateOp::u(a, b), power as usize));
    ops.extend(p_ops(b));
    ops
}

/// W: |00> → |10>, |01> → i|0,anc>, |10> → |00>, |11> → |01>, up to a
/// global phase.
pub fn synth_w(a: usize, b: usize, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, ANCILLA_ENCODINGS, "W")?;
    distinct(&[a, b])?;
    Ok(w_ops(a, b))
}

fn w_ops(a: usize, b: usize) -> Vec<GateOp> {
    let mut ops = vec![GateOp::rx(a, L0, L1, PI)];
    ops.extend(iswap_0anc_ops(a, b, 1));
    ops
}

/// AND of qubits `a` and `b` written onto `a`; `b` keeps a state that tells
/// the three other inputs apart (possibly the ancilla).
fn and_stage(a: usize, b: usize) -> Vec<GateOp> {
    let mut ops = vec![x_gate(a), x_gate(b)];
    ops.extend(w_ops(a, b));
    ops
}

/// Controlled phase on two qutrits with the second one restricted to qubit
/// values; the spurious sign lands on |0,anc>.
fn cz_qutrit(a: usize, b: usize) -> Vec<GateOp> {
    iswap_0anc_ops(a, b, 2)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Linear,
    #[serde(rename = "tree")]
    BinaryTree,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "chain" => Ok(Layout::Linear),
            "tree" | "binarytree" | "binary-tree" => Ok(Layout::BinaryTree),
            _ => Err(Error::Config(format!("unknown layout `{s}`"))),
        }
    }
}

/// Multi-controlled Z on one qubit per listed qudit.
pub fn synth_cnz(qudits: &[usize], layout: Layout, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, ANCILLA_ENCODINGS, "C^(N-1)Z")?;
    if qudits.len() < 2 {
        return Err(Error::domain(format!("C^(N-1)Z needs N >= 2, got {}", qudits.len())));
    }
    distinct(qudits)?;

    let mut compute = Vec::new();
    let (x, y) = match layout {
        Layout::Linear => {
            let n = qudits.len();
            for k in 1..n - 1 {
                compute.extend(and_stage(qudits[k], qudits[k - 1]));
            }
            (qudits[n - 2], qudits[n - 1])
        }
        Layout::BinaryTree => {
            let mut carriers = qudits.to_vec();
            while carriers.len() > 2 {
                let mut next = Vec::with_capacity(carriers.len().div_ceil(2));
                for chunk in carriers.chunks(2) {
                    match *chunk {
                        [lo, hi] => {
                            compute.extend(and_stage(hi, lo));
                            next.push(hi);
                        }
                        [single] => next.push(single),
                        _ => unreachable!(),
                    }
                }
                carriers = next;
            }
            (carriers[0], carriers[1])
        }
    };

    let mut ops = compute.clone();
    ops.extend(cz_qutrit(x, y));
    ops.extend(invert(&compute));
    Ok(ops)
}

/// Multi-controlled X on the last listed qudit.
pub fn synth_toffoli(qudits: &[usize], layout: Layout, encoding: Encoding) -> Result<Vec<GateOp>> {
    let target = *qudits
        .last()
        .ok_or_else(|| Error::domain("Toffoli needs at least two qudits"))?;
    let h = hadamard(target);
    let mut ops = h.clone();
    ops.extend(synth_cnz(qudits, layout, encoding)?);
    ops.extend(invert(&h));
    Ok(ops)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Reference two-qubit iSWAP (|01> ↔ i|10>).
pub fn iswap_matrix() -> DMatrix<Complex64> {
    let mut m = DMatrix::identity(4, 4);
    m[(1, 1)] = c(0.0, 0.0);
    m[(2, 2)] = c(0.0, 0.0);
    m[(1, 2)] = c(0.0, 1.0);
    m[(2, 1)] = c(0.0, 1.0);
    m
}

/// Distance to `target` after removing the best global phase.
pub fn phase_aligned_distance(actual: &DMatrix<Complex64>, target: &DMatrix<Complex64>) -> f64 {
    let overlap: Complex64 = target.iter().zip(actual.iter()).map(|(t, a)| t.conj() * a).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    actual
        .iter()
        .zip(target.iter())
        .map(|(a, t)| (a - t * phase).norm())
        .fold(0.0, f64::max)
}

fn check_unitary(g: &DMatrix<Complex64>, n: usize) -> Result<()> {
    if g.shape() != (n, n) {
        return Err(Error::domain(format!("expected a {n}×{n} matrix, got {:?}", g.shape())));
    }
    let defect = (g.adjoint() * g - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if defect > 1e-9 {
        return Err(Error::domain(format!("matrix is not unitary (defect {defect:.2e})")));
    }
    Ok(())
}

/// Euler angles (a, b, c) with u = e^{iφ} Ry(a) Rx(b) Ry(c) for a 2×2 unitary.
fn yxy_angles(u: [[Complex64; 2]; 2]) -> (f64, f64, f64) {
    // Cyclic relabelling x→y→z→x turns Y-X-Y into Z-Y-Z.
    let w = [[c(0.5, -0.5), c(-0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]];
    let mul = |p: [[Complex64; 2]; 2], q: [[Complex64; 2]; 2]| {
        let mut r = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
            }
        }
        r
    };
    let wd = [[w[0][0].conj(), w[1][0].conj()], [w[0][1].conj(), w[1][1].conj()]];
    let v = mul(mul(w, u), wd);
    // Remove the determinant phase to land in SU(2).
    let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let s = det.sqrt();
    let (p, q) = (v[0][0] / s, v[1][0] / s);
    let beta = 2.0 * q.norm().atan2(p.norm());
    let sum = if p.norm() > 1e-12 { -2.0 * p.arg() } else { 0.0 };
    let diff = if q.norm() > 1e-12 { 2.0 * q.arg() } else { 0.0 };
    ((sum + diff) / 2.0, beta, (sum - diff) / 2.0)
}

fn push_rot(ops: &mut Vec<GateOp>, axis: Axis, q: usize, pair: (RotState, RotState), angle: f64) {
    let wrapped = angle.rem_euclid(4.0 * PI);
    if wrapped.abs() < 1e-13 || (4.0 * PI - wrapped).abs() < 1e-13 {
        return;
    }
    ops.push(GateOp::Rotation { axis, qudit: q, pair, angle });
}

/// Sequence realizing the SU(2)-part of `u` on `pair`.
fn two_level_ops(q: usize, pair: (RotState, RotState), u: [[Complex64; 2]; 2]) -> Vec<GateOp> {
    let (a, b, g) = yxy_angles(u);
    let mut ops = Vec::new();
    push_rot(&mut ops, Axis::Y, q, pair, g);
    push_rot(&mut ops, Axis::X, q, pair, b);
    push_rot(&mut ops, Axis::Y, q, pair, a);
    ops
}

/// exp(-iφσz/2) on `pair`, built from x and y rotations.
fn rz_ops(q: usize, pair: (RotState, RotState), phi: f64) -> Vec<GateOp> {
    let mut ops = Vec::new();
    if phi.rem_euclid(4.0 * PI).abs() < 1e-13 {
        return ops;
    }
    ops.push(GateOp::rx(q, pair.0, pair.1, FRAC_PI_2));
    ops.push(GateOp::ry(q, pair.0, pair.1, -phi));
    ops.push(GateOp::rx(q, pair.0, pair.1, -FRAC_PI_2));
    ops
}

/// Decomposes a unitary on the listed levels of one qudit into two-level
/// rotations (up to global phase).
pub fn synth_local_unitary(qudit: usize, levels: &[RotState], g: &DMatrix<Complex64>) -> Result<Vec<GateOp>> {
    let n = levels.len();
    check_unitary(g, n)?;
    if phase_aligned_distance(g, &DMatrix::identity(n, n)) < 1e-12 {
        return Ok(Vec::new());
    }

    // Reduce to diagonal with SU(2) Givens rotations: T_k ⋯ T_1 g = D.
    let mut m = g.clone();
    let mut givens: Vec<(usize, usize, [[Complex64; 2]; 2])> = Vec::new();
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let (x, y) = (m[(j, j)], m[(i, j)]);
            if y.norm() < 1e-15 {
                continue;
            }
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let t = [[x.conj() / r, y.conj() / r], [-y / r, x / r]];
            for col in 0..n {
                let (mj, mi) = (m[(j, col)], m[(i, col)]);
                m[(j, col)] = t[0][0] * mj + t[0][1] * mi;
                m[(i, col)] = t[1][0] * mj + t[1][1] * mi;
            }
            givens.push((j, i, t));
        }
    }

    // Time order: D first, then T_k†, ..., T_1†.
    let mut ops = Vec::new();
    let phases: Vec<f64> = (0..n).map(|k| m[(k, k)].arg()).collect();
    let mean = phases.iter().sum::<f64>() / n as f64;
    let mut theta = 0.0;
    for k in 0..n - 1 {
        theta -= 2.0 * (phases[k] - mean);
        ops.extend(rz_ops(qudit, (levels[k], levels[k + 1]), theta));
    }
    for &(j, i, t) in givens.iter().rev() {
        let dag = [[t[0][0].conj(), t[1][0].conj()], [t[0][1].conj(), t[1][1].conj()]];
        ops.extend(two_level_ops(qudit, (levels[j], levels[i]), dag));
    }
    Ok(ops)
}

/// A two-qubit gate on both qubits of one ququart/ququint. iSWAP maps to a
/// single rotation on the |01>, |10> pair.
pub fn synth_intra_qudit_gate(qudit: usize, encoding: Encoding, gate: &DMatrix<Complex64>) -> Result<Vec<GateOp>> {
    require(encoding, &[Encoding::Ququart, Encoding::Ququint], "intra-qudit two-qubit gate")?;
    check_unitary(gate, 4)?;
    if phase_aligned_distance(gate, &iswap_matrix()) < 1e-12 {
        return Ok(vec![GateOp::rx(qudit, L01, L10, -PI)]);
    }
    synth_local_unitary(qudit, &[L00, L01, L10, L11], gate)
}

/// Hadamard on one slot of a two-qubit qudit.
fn slot_hadamard(q: QubitRef) -> Vec<GateOp> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
    let id = DMatrix::<Complex64>::identity(2, 2);
    let g = if q.slot == 0 { h.kronecker(&id) } else { id.kronecker(&h) };
    synth_local_unitary(q.qudit, &[L00, L01, L10, L11], &g).expect("Hadamard is unitary")
}

/// Signed transpositions moving `from[k]` onto `to[k]` on one qudit.
fn permutation_ops(q: usize, from: &[RotState], to: &[RotState]) -> Vec<GateOp> {
    let mut pos: Vec<RotState> = from.to_vec();
    let mut ops = Vec::new();
    for k in 0..from.len() {
        if pos[k] == to[k] {
            continue;
        }
        ops.push(GateOp::ry(q, pos[k], to[k], PI));
        let (moved, dest) = (pos[k], to[k]);
        for p in pos.iter_mut() {
            if *p == dest {
                *p = moved;
            }
        }
        pos[k] = dest;
    }
    ops
}

/// Levels of a two-qubit qudit whose `slot` bit is 1.
fn levels_with_bit(slot: usize) -> [RotState; 2] {
    if slot == 0 {
        [L10, L11]
    } else {
        [L01, L11]
    }
}

/// CZ between a slot of qudit A and a slot of qudit B: two squared
/// entanglers, each dressed by level permutations.
fn inter_cz(control: QubitRef, target: QubitRef) -> Vec<GateOp> {
    let [a1, a2] = levels_with_bit(control.slot);
    let [b1, b2] = levels_with_bit(target.slot);
    let (qa, qb) = (control.qudit, target.qudit);
    let mut ops = Vec::new();
    for (f1, f2) in [(b1, b2), (b2, b1)] {
        let mut dress = permutation_ops(qa, &[a1, a2], &[L00, L01]);
        dress.extend(permutation_ops(qb, &[f1, f2], &[L01, L00]));
        ops.extend(dress.iter().copied());
        ops.push(GateOp::u_pow(qa, qb, 2));
        ops.extend(invert(&dress));
    }
    ops
}

/// CNOT from a slot of one ququart/ququint to a slot of another.
pub fn synth_inter_qudit_cnot(control: QubitRef, target: QubitRef, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, &[Encoding::Ququart, Encoding::Ququint], "inter-qudit CNOT")?;
    control.check(encoding)?;
    target.check(encoding)?;
    distinct(&[control.qudit, target.qudit])?;
    let h = slot_hadamard(target);
    let mut ops = h.clone();
    ops.extend(inter_cz(control, target));
    ops.extend(invert(&h));
    Ok(ops)
}

/// C³Z on the four qubits of two ququints via one squared entangler.
pub fn synth_c3z_ququint(a: usize, b: usize, encoding: Encoding) -> Result<Vec<GateOp>> {
    require(encoding, &[Encoding::Ququint], "C3Z via the squared entangler")?;
    distinct(&[a, b])?;
    let dress = vec![
        GateOp::ry(a, L01, ANC, -PI),
        GateOp::ry(a, L00, L11, -PI),
        GateOp::ry(b, L01, ANC, -PI),
        GateOp::ry(b, L01, L11, -PI),
    ];
    let mut ops = dress.clone();
    ops.push(GateOp::u_pow(a, b, 2));
    ops.extend(invert(&dress));
    Ok(ops)
}

/// Logical gates the compiler knows by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateSpec {
    Identity { num_qudits: usize },
    Z { target: QubitRef },
    Cnot { control: usize, target: usize },
    P { qudit: usize },
    IswapZeroAnc { a: usize, b: usize },
    W { a: usize, b: usize },
    Cnz { qudits: Vec<usize>, layout: Layout },
    Toffoli { qudits: Vec<usize>, layout: Layout },
    IntraIswap { qudit: usize },
    InterCnot { control: QubitRef, target: QubitRef },
    C3zQuquint { a: usize, b: usize },
}

impl GateSpec {
    pub const NAMES: [&'static str; 11] = [
        "identity",
        "z",
        "cnot",
        "p",
        "iswap-0anc",
        "w",
        "cnz",
        "toffoli",
        "intra-iswap",
        "inter-cnot",
        "c3z-ququint",
    ];

    /// Default operands for a gate name: `n` qubits where it is variable.
    pub fn by_name(name: &str, n: usize, layout: Layout) -> Result<Self> {
        let all: Vec<usize> = (0..n).collect();
        Ok(match name.to_ascii_lowercase().as_str() {
            "identity" | "id" => GateSpec::Identity { num_qudits: n.max(1) },
            "z" => GateSpec::Z { target: QubitRef::new(0, 0) },
            "cnot" => GateSpec::Cnot { control: 0, target: 1 },
            "p" => GateSpec::P { qudit: 0 },
            "iswap-0anc" => GateSpec::IswapZeroAnc { a: 0, b: 1 },
            "w" => GateSpec::W { a: 0, b: 1 },
            "cnz" => GateSpec::Cnz { qudits: all, layout },
            "toffoli" => GateSpec::Toffoli { qudits: all, layout },
            "intra-iswap" => GateSpec::IntraIswap { qudit: 0 },
            "inter-cnot" => GateSpec::InterCnot {
                control: QubitRef::new(0, 0),
                target: QubitRef::new(1, 0),
            },
            "c3z-ququint" => GateSpec::C3zQuquint { a: 0, b: 1 },
            _ => return Err(Error::Config(format!("unknown gate `{name}`"))),
        })
    }

    /// Gate with explicit operands. `slots` picks qubits inside two-qubit
    /// qudits (z uses the first entry, inter-cnot the first two) and
    /// defaults to 0.
    pub fn with_operands(name: &str, qudits: &[usize], slots: &[usize], layout: Layout) -> Result<Self> {
        let need = |k: usize| {
            if qudits.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!("gate `{name}` takes {k} qudit indices, got {}", qudits.len())))
            }
        };
        let slot = |k: usize| slots.get(k).copied().unwrap_or(0);
        Ok(match name.to_ascii_lowercase().as_str() {
            "identity" | "id" => GateSpec::Identity {
                num_qudits: qudits.iter().max().map_or(1, |m| m + 1),
            },
            "z" => {
                need(1)?;
                GateSpec::Z { target: QubitRef::new(qudits[0], slot(0)) }
            }
            "cnot" => {
                need(2)?;
                GateSpec::Cnot { control: qudits[0], target: qudits[1] }
            }
            "p" => {
                need(1)?;
                GateSpec::P { qudit: qudits[0] }
            }
            "iswap-0anc" => {
                need(2)?;
                GateSpec::IswapZeroAnc { a: qudits[0], b: qudits[1] }
            }
            "w" => {
                need(2)?;
                GateSpec::W { a: qudits[0], b: qudits[1] }
            }
            "cnz" => GateSpec::Cnz { qudits: qudits.to_vec(), layout },
            "toffoli" => GateSpec::Toffoli { qudits: qudits.to_vec(), layout },
            "intra-iswap" => {
                need(1)?;
                GateSpec::IntraIswap { qudit: qudits[0] }
            }
            "inter-cnot" => {
                need(2)?;
                GateSpec::InterCnot {
                    control: QubitRef::new(qudits[0], slot(0)),
                    target: QubitRef::new(qudits[1], slot(1)),
                }
            }
            "c3z-ququint" => {
                need(2)?;
                GateSpec::C3zQuquint { a: qudits[0], b: qudits[1] }
            }
            _ => return Err(Error::Config(format!("unknown gate `{name}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateSpec::Identity { .. } => "identity",
            GateSpec::Z { .. } => "z",
            GateSpec::Cnot { .. } => "cnot",
            GateSpec::P { .. } => "p",
            GateSpec::IswapZeroAnc { .. } => "iswap-0anc",
            GateSpec::W { .. } => "w",
            GateSpec::Cnz { .. } => "cnz",
            GateSpec::Toffoli { .. } => "toffoli",
            GateSpec::IntraIswap { .. } => "intra-iswap",
            GateSpec::InterCnot { .. } => "inter-cnot",
            GateSpec::C3zQuquint { .. } => "c3z-ququint",
        }
    }

    /// Encoding used when none is requested.
    pub fn default_encoding(&self) -> Encoding {
        match self {
            GateSpec::Identity { .. } | GateSpec::Z { .. } | GateSpec::Cnot { .. } => Encoding::Qubit,
            GateSpec::P { .. }
            | GateSpec::IswapZeroAnc { .. }
            | GateSpec::W { .. }
            | GateSpec::Cnz { .. }
            | GateSpec::Toffoli { .. } => Encoding::QutritAnc,
            GateSpec::IntraIswap { .. } | GateSpec::InterCnot { .. } => Encoding::Ququart,
            GateSpec::C3zQuquint { .. } => Encoding::Ququint,
        }
    }

    /// Qudits touched by the gate's operands.
    pub fn num_qudits(&self) -> usize {
        let max = match self {
            GateSpec::Identity { num_qudits } => num_qudits.saturating_sub(1),
            GateSpec::Z { target } => target.qudit,
            GateSpec::Cnot { control, target } => *control.max(target),
            GateSpec::P { qudit } | GateSpec::IntraIswap { qudit } => *qudit,
            GateSpec::IswapZeroAnc { a, b } | GateSpec::W { a, b } | GateSpec::C3zQuquint { a, b } => *a.max(b),
            GateSpec::Cnz { qudits, .. } | GateSpec::Toffoli { qudits, .. } => qudits.iter().copied().max().unwrap_or(0),
            GateSpec::InterCnot { control, target } => control.qudit.max(target.qudit),
        };
        max + 1
    }
}

/// Options for [`compile`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOptions {
    /// Phase of the hardware entangler; sequences are repaired when it is -i.
    pub physical_branch: PhaseBranch,
}

/// Synthesizes `gate` in `encoding` and adapts it to the hardware branch.
pub fn compile(gate: &GateSpec, encoding: Encoding, options: CompileOptions) -> Result<QuditCircuit> {
    let ops = match gate {
        GateSpec::Identity { .. } => Vec::new(),
        GateSpec::Z { target } => synth_z(*target, encoding)?,
        GateSpec::Cnot { control, target } => synth_cnot_via_iswaps(*control, *target, encoding)?,
        GateSpec::P { qudit } => synth_p(*qudit, encoding)?,
        GateSpec::IswapZeroAnc { a, b } => synth_iswap_0anc(*a, *b, encoding)?,
        GateSpec::W { a, b } => synth_w(*a, *b, encoding)?,
        GateSpec::Cnz { qudits, layout } => synth_cnz(qudits, *layout, encoding)?,
        GateSpec::Toffoli { qudits, layout } => synth_toffoli(qudits, *layout, encoding)?,
        GateSpec::IntraIswap { qudit } => synth_intra_qudit_gate(*qudit, encoding, &iswap_matrix())?,
        GateSpec::InterCnot { control, target } => synth_inter_qudit_cnot(*control, *target, encoding)?,
        GateSpec::C3zQuquint { a, b } => synth_c3z_ququint(*a, *b, encoding)?,
    };
    let circuit = QuditCircuit::with_ops(gate.num_qudits(), encoding, ops)?;
    Ok(repair_phase_branch(&circuit, options.physical_branch))
}
