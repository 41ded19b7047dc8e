//! Dense state-vector simulation of qudit registers, used to check every
//! synthesized sequence against its logical truth table.
//!
//! Each qudit is simulated on all five physical levels, so helper and
//! ancilla levels are tracked even when an encoding does not use them.
//! Register index: qudit 0 is the most significant base-5 digit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::RotState;
use crate::dynamics::{target_gate, PhaseBranch};
use crate::encodings::{physical_index, Encoding, ANC, L0, L1, PHYSICAL_DIM, PHYSICAL_LEVELS};
use crate::error::{Error, Result};
use crate::gates::{compile, Axis, CompileOptions, GateOp, GateSpec, QuditCircuit};

/// Default bound on the dimension of a full circuit unitary (four qudits).
pub const DEFAULT_UNITARY_LIMIT: usize = 625;
/// Bound on state-vector length.
pub const DEFAULT_STATE_LIMIT: usize = 390_625;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn register_dim(num_qudits: usize, limit: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..num_qudits {
        dim = dim.saturating_mul(PHYSICAL_DIM);
        if dim > limit {
            return Err(Error::SizeGuard { dim, limit });
        }
    }
    Ok(dim)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegisterState {
    num_qudits: usize,
    amplitudes: Vec<Complex64>,
}

impl RegisterState {
    /// All qudits in (0,0).
    pub fn new(num_qudits: usize) -> Result<Self> {
        Self::basis(num_qudits, 0)
    }

    pub fn basis(num_qudits: usize, index: usize) -> Result<Self> {
        let dim = register_dim(num_qudits, DEFAULT_STATE_LIMIT)?;
        if index >= dim {
            return Err(Error::domain(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(RegisterState { num_qudits, amplitudes })
    }

    /// Product of the given levels, qudit 0 first.
    pub fn product(levels: &[RotState]) -> Result<Self> {
        let index = levels
            .iter()
            .try_fold(0usize, |acc, &s| Ok::<_, Error>(acc * PHYSICAL_DIM + physical_index(s)?))?;
        Self::basis(levels.len(), index)
    }

    pub fn from_amplitudes(num_qudits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = register_dim(num_qudits, DEFAULT_STATE_LIMIT)?;
        if amplitudes.len() != dim {
            return Err(Error::domain(format!(
                "{num_qudits} qudits need {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let s = RegisterState { num_qudits, amplitudes };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("state not normalized (norm {})", s.norm())));
        }
        Ok(s)
    }

    pub fn num_qudits(&self) -> usize {
        self.num_qudits
    }

    /// Levels per simulated qudit.
    pub fn dimension(&self) -> usize {
        PHYSICAL_DIM
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn stride(&self, qudit: usize) -> usize {
        PHYSICAL_DIM.pow((self.num_qudits - 1 - qudit) as u32)
    }

    fn digit(&self, index: usize, qudit: usize) -> usize {
        (index / self.stride(qudit)) % PHYSICAL_DIM
    }
}

/// Marginal level populations of one qudit, in [`PHYSICAL_LEVELS`] order.
pub fn measure_populations(state: &RegisterState, qudit: usize) -> Result<Vec<f64>> {
    if qudit >= state.num_qudits {
        return Err(Error::domain(format!("qudit {qudit} out of range for {} qudits", state.num_qudits)));
    }
    let mut p = vec![0.0; PHYSICAL_DIM];
    for (i, a) in state.amplitudes.iter().enumerate() {
        p[state.digit(i, qudit)] += a.norm_sqr();
    }
    Ok(p)
}

/// Populations restricted to the levels an encoding maps, in its label order.
pub fn encoded_populations(state: &RegisterState, qudit: usize, encoding: Encoding) -> Result<Vec<f64>> {
    let p = measure_populations(state, qudit)?;
    encoding
        .map()
        .iter()
        .map(|&(_, s)| Ok(p[physical_index(s)?]))
        .collect()
}

/// Applies ops using a fixed two-qudit entangler on the 25 physical pair
/// states (first operand's level most significant).
#[derive(Clone, Debug)]
pub struct Simulator {
    entangler: DMatrix<Complex64>,
}

impl Simulator {
    /// The ideal entangler with the given phase.
    pub fn ideal(branch: PhaseBranch) -> Self {
        Simulator {
            entangler: target_gate(branch),
        }
    }

    /// Uses an arbitrary 25×25 operator, e.g. an evolved one.
    pub fn with_entangler(entangler: DMatrix<Complex64>) -> Result<Self> {
        let n = PHYSICAL_DIM * PHYSICAL_DIM;
        if entangler.shape() != (n, n) {
            return Err(Error::domain(format!(
                "entangler must be {n}×{n}, got {:?}",
                entangler.shape()
            )));
        }
        Ok(Simulator { entangler })
    }

    pub fn entangler(&self) -> &DMatrix<Complex64> {
        &self.entangler
    }

    fn entangler_power(&self, power: u32) -> DMatrix<Complex64> {
        let mut m = self.entangler.clone();
        for _ in 1..power {
            m = &m * &self.entangler;
        }
        m
    }

    pub fn apply(&self, state: &RegisterState, op: &GateOp) -> Result<RegisterState> {
        let mut s = state.clone();
        self.apply_in_place(&mut s, op)?;
        Ok(s)
    }

    pub fn apply_in_place(&self, state: &mut RegisterState, op: &GateOp) -> Result<()> {
        op.validate(state.num_qudits)?;
        match *op {
            GateOp::Rotation { axis, qudit, pair, angle } => {
                let (a, b) = (physical_index(pair.0)?, physical_index(pair.1)?);
                let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                let cc = Complex64::new(c, 0.0);
                // column-major 2x2 block acting on (amp_a, amp_b)
                let (ab, ba) = match axis {
                    Axis::X => (Complex64::new(0.0, -sn), Complex64::new(0.0, -sn)),
                    Axis::Y => (Complex64::new(-sn, 0.0), Complex64::new(sn, 0.0)),
                };
                let stride = state.stride(qudit);
                for i in 0..state.amplitudes.len() {
                    if state.digit(i, qudit) != a {
                        continue;
                    }
                    let j = i + b * stride - a * stride;
                    let (x, y) = (state.amplitudes[i], state.amplitudes[j]);
                    state.amplitudes[i] = cc * x + ab * y;
                    state.amplitudes[j] = ba * x + cc * y;
                }
            }
            GateOp::Entangler { qudits: (qa, qb), power } => {
                let m = self.entangler_power(power);
                let (sa, sb) = (state.stride(qa), state.stride(qb));
                let mut local = [ZERO; 25];
                for base in 0..state.amplitudes.len() {
                    if state.digit(base, qa) != 0 || state.digit(base, qb) != 0 {
                        continue;
                    }
                    let idx = |k: usize| base + (k / PHYSICAL_DIM) * sa + (k % PHYSICAL_DIM) * sb;
                    for (k, slot) in local.iter_mut().enumerate() {
                        *slot = state.amplitudes[idx(k)];
                    }
                    for r in 0..25 {
                        let mut acc = ZERO;
                        for (k, v) in local.iter().enumerate() {
                            acc += m[(r, k)] * v;
                        }
                        state.amplitudes[idx(r)] = acc;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn run(&self, circuit: &QuditCircuit, initial: &RegisterState) -> Result<RegisterState> {
        if initial.num_qudits != circuit.num_qudits {
            return Err(Error::domain(format!(
                "circuit has {} qudits, state has {}",
                circuit.num_qudits, initial.num_qudits
            )));
        }
        let mut s = initial.clone();
        for op in &circuit.ops {
            self.apply_in_place(&mut s, op)?;
        }
        Ok(s)
    }

    /// Columns of the circuit unitary for the listed input basis indices.
    pub fn columns(&self, circuit: &QuditCircuit, inputs: &[usize]) -> Result<DMatrix<Complex64>> {
        let dim = register_dim(circuit.num_qudits, DEFAULT_STATE_LIMIT)?;
        let cols: Vec<Vec<Complex64>> = inputs
            .par_iter()
            .map(|&i| {
                let s = RegisterState::basis(circuit.num_qudits, i)?;
                Ok(self.run(circuit, &s)?.amplitudes)
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(dim, inputs.len(), |r, c| cols[c][r]))
    }

    /// Full unitary over the physical register, guarded by `limit`.
    pub fn circuit_unitary(&self, circuit: &QuditCircuit, limit: usize) -> Result<DMatrix<Complex64>> {
        let dim = register_dim(circuit.num_qudits, limit)?;
        let all: Vec<usize> = (0..dim).collect();
        self.columns(circuit, &all)
    }
}

/// [`Simulator::apply`] with the ideal +i entangler.
pub fn apply(state: &RegisterState, op: &GateOp) -> Result<RegisterState> {
    Simulator::ideal(PhaseBranch::PlusI).apply(state, op)
}

/// Unitary of `circuit` with the ideal +i entangler and the default guard.
pub fn circuit_unitary(circuit: &QuditCircuit) -> Result<DMatrix<Complex64>> {
    Simulator::ideal(PhaseBranch::PlusI).circuit_unitary(circuit, DEFAULT_UNITARY_LIMIT)
}

/// Labels of the register basis, e.g. "0,0;1,0".
pub fn basis_labels(num_qudits: usize) -> Vec<String> {
    let dim = PHYSICAL_DIM.pow(num_qudits as u32);
    (0..dim)
        .map(|mut i| {
            let mut parts = vec![String::new(); num_qudits];
            for k in (0..num_qudits).rev() {
                parts[k] = PHYSICAL_LEVELS[i % PHYSICAL_DIM].to_string();
                i /= PHYSICAL_DIM;
            }
            parts.join(";")
        })
        .collect()
}

/// Expected action of a gate: a map from input basis states (per-qudit level
/// lists `input_levels`) to output states over `output_levels`, which must
/// extend `input_levels`.
#[derive(Clone, Debug)]
pub struct LogicalTarget {
    pub num_qudits: usize,
    /// Physical register indices of the inputs, in logical order.
    pub inputs: Vec<usize>,
    /// Physical register indices allowed to carry amplitude at the end.
    pub outputs: Vec<usize>,
    /// outputs × inputs.
    pub matrix: DMatrix<Complex64>,
}

fn digits_to_index(digits: &[usize], levels: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &d| acc * PHYSICAL_DIM + levels[d])
}

fn enumerate_digits(num_qudits: usize, base: usize) -> Vec<Vec<usize>> {
    (0..base.pow(num_qudits as u32))
        .map(|mut k| {
            let mut d = vec![0; num_qudits];
            for q in (0..num_qudits).rev() {
                d[q] = k % base;
                k /= base;
            }
            d
        })
        .collect()
}

impl LogicalTarget {
    /// Builds a target from `action(digits) -> (digits, amplitude)`; digits
    /// index into the level lists.
    pub fn from_map(
        num_qudits: usize,
        input_levels: &[RotState],
        output_levels: &[RotState],
        action: impl Fn(&[usize]) -> (Vec<usize>, Complex64),
    ) -> Result<Self> {
        if output_levels.len() < input_levels.len() || output_levels[..input_levels.len()] != *input_levels {
            return Err(Error::domain("output levels must extend the input levels"));
        }
        let out_phys: Vec<usize> = output_levels.iter().map(|&s| physical_index(s)).collect::<Result<_>>()?;
        let in_digits = enumerate_digits(num_qudits, input_levels.len());
        let out_digits = enumerate_digits(num_qudits, output_levels.len());
        let inputs: Vec<usize> = in_digits.iter().map(|d| digits_to_index(d, &out_phys)).collect();
        let outputs: Vec<usize> = out_digits.iter().map(|d| digits_to_index(d, &out_phys)).collect();
        let mut matrix = DMatrix::from_element(outputs.len(), inputs.len(), ZERO);
        for (col, d) in in_digits.iter().enumerate() {
            let (to, amp) = action(d);
            let idx = digits_to_index(&to, &out_phys);
            let row = outputs.iter().position(|&o| o == idx).expect("output digits within range");
            matrix[(row, col)] += amp;
        }
        Ok(LogicalTarget {
            num_qudits,
            inputs,
            outputs,
            matrix,
        })
    }

    /// Truth table of a named gate in an encoding.
    pub fn for_gate(gate: &GateSpec, encoding: Encoding) -> Result<Self> {
        let n = gate.num_qudits();
        let logical = encoding.logical_levels();
        let per = encoding.qubits_per_qudit();
        // value of qubit `slot` in a qudit digit
        let bit = move |digit: usize, slot: usize| (digit >> (per - 1 - slot)) & 1;
        let flip = move |digit: usize, slot: usize| digit ^ (1 << (per - 1 - slot));
        let i = Complex64::new(0.0, 1.0);
        let keep = |d: &[usize]| (d.to_vec(), ONE);
        // ancilla-based gates: one qubit per qudit plus the ancilla
        let qutrit = [L0, L1, ANC];

        match gate {
            GateSpec::Identity { .. } => Self::from_map(n, logical, logical, keep),
            GateSpec::Z { target } => Self::from_map(n, logical, logical, |d| {
                let sign = if bit(d[target.qudit], target.slot) == 1 { -ONE } else { ONE };
                (d.to_vec(), sign)
            }),
            GateSpec::Cnot { control, target } => Self::from_map(n, logical, logical, |d| {
                let mut out = d.to_vec();
                if d[*control] == 1 {
                    out[*target] ^= 1;
                }
                (out, ONE)
            }),
            GateSpec::P { qudit } => Self::from_map(n, &qutrit, &qutrit, |d| {
                let mut out = d.to_vec();
                out[*qudit] = (d[*qudit] + 1) % 3;
                (out, ONE)
            }),
            GateSpec::IswapZeroAnc { a, b } => Self::from_map(n, &qutrit, &qutrit, |d| {
                let mut out = d.to_vec();
                match (d[*a], d[*b]) {
                    (1, 1) => {
                        out[*a] = 0;
                        out[*b] = 2;
                        (out, i)
                    }
                    (0, 2) => {
                        out[*a] = 1;
                        out[*b] = 1;
                        (out, i)
                    }
                    _ => (out, ONE),
                }
            }),
            GateSpec::W { a, b } => Self::from_map(n, &qutrit[..2], &qutrit, |d| {
                let mut out = d.to_vec();
                let (to, amp) = match (d[*a], d[*b]) {
                    (0, 0) => ((1, 0), ONE),
                    (0, 1) => ((0, 2), i),
                    (1, 0) => ((0, 0), ONE),
                    _ => ((0, 1), ONE),
                };
                out[*a] = to.0;
                out[*b] = to.1;
                (out, amp)
            }),
            GateSpec::Cnz { qudits, .. } => Self::from_map(n, &qutrit[..2], &qutrit[..2], |d| {
                let all = qudits.iter().all(|&q| d[q] == 1);
                (d.to_vec(), if all { -ONE } else { ONE })
            }),
            GateSpec::Toffoli { qudits, .. } => Self::from_map(n, &qutrit[..2], &qutrit[..2], |d| {
                let (target, controls) = qudits.split_last().expect("non-empty");
                let mut out = d.to_vec();
                if controls.iter().all(|&q| d[q] == 1) {
                    out[*target] ^= 1;
                }
                (out, ONE)
            }),
            GateSpec::IntraIswap { qudit } => Self::from_map(n, logical, logical, |d| {
                let mut out = d.to_vec();
                match d[*qudit] {
                    1 | 2 => {
                        out[*qudit] = 3 - d[*qudit];
                        (out, i)
                    }
                    _ => (out, ONE),
                }
            }),
            GateSpec::InterCnot { control, target } => Self::from_map(n, logical, logical, |d| {
                let mut out = d.to_vec();
                if bit(d[control.qudit], control.slot) == 1 {
                    out[target.qudit] = flip(d[target.qudit], target.slot);
                }
                (out, ONE)
            }),
            GateSpec::C3zQuquint { a, b } => Self::from_map(n, logical, logical, |d| {
                let all = d[*a] == 3 && d[*b] == 3;
                (d.to_vec(), if all { -ONE } else { ONE })
            }),
        }
    }
}

/// Outcome of checking a sequence against a truth table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub gate: String,
    pub encoding: Encoding,
    pub physical_branch: PhaseBranch,
    /// |Tr(T† U)| / n over the logical inputs.
    pub fidelity: f64,
    /// Largest entry-wise deviation after global-phase alignment.
    pub max_deviation: f64,
    /// Largest probability left outside the allowed output levels.
    pub leakage: f64,
    pub entangler_count: usize,
    pub depth: usize,
    pub entangler_depth: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Aligns the global phase on the first nonzero entry of `target`.
pub fn aligned_deviation(actual: &DMatrix<Complex64>, target: &DMatrix<Complex64>) -> f64 {
    let anchor = target
        .iter()
        .zip(actual.iter())
        .find(|(t, _)| t.norm() > 1e-12)
        .map(|(t, a)| if a.norm() > 0.0 { (a / t) / (a / t).norm() } else { ONE })
        .unwrap_or(ONE);
    actual
        .iter()
        .zip(target.iter())
        .map(|(a, t)| (a - t * anchor).norm())
        .fold(0.0, f64::max)
}

/// Simulates `circuit` on every logical input and compares with `target`.
pub fn verify_against(
    circuit: &QuditCircuit,
    target: &LogicalTarget,
    sim: &Simulator,
) -> Result<(f64, f64, f64)> {
    if target.num_qudits != circuit.num_qudits {
        return Err(Error::domain(format!(
            "gate acts on {} qudits, sequence on {}",
            target.num_qudits, circuit.num_qudits
        )));
    }
    let cols = sim.columns(circuit, &target.inputs)?;
    let restricted = DMatrix::from_fn(target.outputs.len(), target.inputs.len(), |r, c| cols[(target.outputs[r], c)]);
    let leakage = (0..target.inputs.len())
        .map(|c| (1.0 - restricted.column(c).norm_squared()).max(0.0))
        .fold(0.0, f64::max);
    let overlap: Complex64 = target
        .matrix
        .iter()
        .zip(restricted.iter())
        .map(|(t, a)| t.conj() * a)
        .sum();
    let fidelity = overlap.norm() / target.inputs.len() as f64;
    let deviation = aligned_deviation(&restricted, &target.matrix);
    Ok((fidelity, deviation, leakage))
}

/// Checks a sequence against a named gate with the given hardware branch.
pub fn verify_circuit(
    circuit: &QuditCircuit,
    gate: &GateSpec,
    physical_branch: PhaseBranch,
    tolerance: f64,
) -> Result<Verification> {
    let target = LogicalTarget::for_gate(gate, circuit.encoding)?;
    let sim = Simulator::ideal(physical_branch);
    let (fidelity, max_deviation, leakage) = verify_against(circuit, &target, &sim)?;
    Ok(Verification {
        gate: gate.name().to_string(),
        encoding: circuit.encoding,
        physical_branch,
        fidelity,
        max_deviation,
        leakage,
        entangler_count: circuit.entangler_count(),
        depth: circuit.depth(),
        entangler_depth: circuit.entangler_depth(),
        tolerance,
        passed: max_deviation <= tolerance && leakage <= tolerance,
    })
}

/// Compiles `gate` for hardware with `physical_branch` and verifies it there.
pub fn compile_and_verify(
    gate: &GateSpec,
    encoding: Encoding,
    physical_branch: PhaseBranch,
    tolerance: f64,
) -> Result<(QuditCircuit, Verification)> {
    let circuit = compile(gate, encoding, CompileOptions { physical_branch })?;
    let v = verify_circuit(&circuit, gate, physical_branch, tolerance)?;
    Ok((circuit, v))
}

/// Probability left on the ancilla level of each qudit.
pub fn ancilla_population(state: &RegisterState) -> Result<f64> {
    let a = physical_index(ANC)?;
    (0..state.num_qudits)
        .map(|q| measure_populations(state, q).map(|p| p[a]))
        .sum()
}
