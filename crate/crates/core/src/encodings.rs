//! Logical encodings of qubits (and an optional ancilla) in the five
//! physical levels of one molecule.
//!
//! Multi-qubit labels list the first qubit first, and that qubit is the most
//! significant bit of every logical index in the crate.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::RotState;
use crate::dynamics::ComputationalSet;
use crate::error::{Error, Result};

/// Physical levels of every simulated qudit, in index order.
pub const PHYSICAL_LEVELS: [RotState; 5] = [
    RotState::new_unchecked(0, 0),
    RotState::new_unchecked(1, 0),
    RotState::new_unchecked(3, -3),
    RotState::new_unchecked(3, 0),
    RotState::new_unchecked(3, 3),
];

pub const PHYSICAL_DIM: usize = PHYSICAL_LEVELS.len();

pub const L0: RotState = RotState::new_unchecked(0, 0);
pub const L1: RotState = RotState::new_unchecked(1, 0);
pub const ANC: RotState = RotState::new_unchecked(3, 0);
pub const L00: RotState = L0;
pub const L01: RotState = L1;
pub const L10: RotState = RotState::new_unchecked(3, -3);
pub const L11: RotState = RotState::new_unchecked(3, 3);

/// Index of `s` among [`PHYSICAL_LEVELS`].
pub fn physical_index(s: RotState) -> Result<usize> {
    PHYSICAL_LEVELS
        .iter()
        .position(|&x| x == s)
        .ok_or_else(|| Error::domain(format!("level {s} is not a qudit level")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoding {
    #[serde(rename = "qubit")]
    Qubit,
    #[serde(rename = "qutrit-anc")]
    QutritAnc,
    #[serde(rename = "ququart")]
    Ququart,
    #[serde(rename = "ququint")]
    Ququint,
}

impl Encoding {
    pub const ALL: [Encoding; 4] = [Encoding::Qubit, Encoding::QutritAnc, Encoding::Ququart, Encoding::Ququint];

    pub fn from_dimension(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Encoding::Qubit),
            3 => Ok(Encoding::QutritAnc),
            4 => Ok(Encoding::Ququart),
            5 => Ok(Encoding::Ququint),
            _ => Err(Error::domain(format!("no encoding of dimension {d}"))),
        }
    }

    pub fn dimension(self) -> usize {
        self.map().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Qubit => "qubit",
            Encoding::QutritAnc => "qutrit-anc",
            Encoding::Ququart => "ququart",
            Encoding::Ququint => "ququint",
        }
    }

    /// Logical qubits carried by one qudit.
    pub fn qubits_per_qudit(self) -> usize {
        match self {
            Encoding::Qubit | Encoding::QutritAnc => 1,
            Encoding::Ququart | Encoding::Ququint => 2,
        }
    }

    pub fn has_ancilla(self) -> bool {
        matches!(self, Encoding::QutritAnc | Encoding::Ququint)
    }

    /// Label → level association in listing order.
    pub fn map(self) -> &'static [(&'static str, RotState)] {
        const QUBIT: [(&str, RotState); 2] = [("0", L0), ("1", L1)];
        const QUTRIT: [(&str, RotState); 3] = [("0", L0), ("1", L1), ("anc", ANC)];
        const QUQUART: [(&str, RotState); 4] = [("00", L00), ("01", L01), ("10", L10), ("11", L11)];
        const QUQUINT: [(&str, RotState); 5] = [("00", L00), ("01", L01), ("10", L10), ("11", L11), ("anc", ANC)];
        match self {
            Encoding::Qubit => &QUBIT,
            Encoding::QutritAnc => &QUTRIT,
            Encoding::Ququart => &QUQUART,
            Encoding::Ququint => &QUQUINT,
        }
    }

    /// Levels holding qubit values, indexed by the qudit's logical value.
    pub fn logical_levels(self) -> &'static [RotState] {
        const ONE: [RotState; 2] = [L0, L1];
        const TWO: [RotState; 4] = [L00, L01, L10, L11];
        match self.qubits_per_qudit() {
            1 => &ONE,
            _ => &TWO,
        }
    }

    pub fn ancilla(self) -> Option<RotState> {
        self.has_ancilla().then_some(ANC)
    }

    /// Level of a label; accepts an optional `_L` suffix.
    pub fn logical_to_physical(self, label: &str) -> Result<RotState> {
        let key = label.trim().trim_end_matches("_L");
        self.map()
            .iter()
            .find(|(l, _)| *l == key)
            .map(|&(_, s)| s)
            .ok_or_else(|| Error::domain(format!("label `{label}` not in the {} encoding", self.name())))
    }

    pub fn physical_to_logical(self, s: RotState) -> Option<&'static str> {
        self.map().iter().find(|(_, x)| *x == s).map(|&(l, _)| l)
    }

    /// Places qubit amplitudes on their levels of a 5-level qudit vector.
    pub fn embed_qubit_state(self, amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
        let levels = self.logical_levels();
        if amplitudes.len() != levels.len() {
            return Err(Error::domain(format!(
                "{} encoding takes {} amplitudes, got {}",
                self.name(),
                levels.len(),
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("amplitudes not normalized (norm² = {norm})")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); PHYSICAL_DIM];
        for (&s, &a) in levels.iter().zip(amplitudes) {
            v[physical_index(s)?] = a;
        }
        Ok(v)
    }

    /// Physical register index of each logical basis state of `num_qudits`
    /// qudits, in logical order (first qubit most significant).
    pub fn logical_basis(self, num_qudits: usize) -> Vec<usize> {
        let levels: Vec<usize> = self
            .logical_levels()
            .iter()
            .map(|&s| physical_index(s).expect("encoding levels are qudit levels"))
            .collect();
        let per = levels.len();
        (0..per.pow(num_qudits as u32))
            .map(|logical| {
                let mut rest = logical;
                let mut digits = vec![0; num_qudits];
                for k in (0..num_qudits).rev() {
                    digits[k] = levels[rest % per];
                    rest /= per;
                }
                digits.iter().fold(0, |acc, &d| acc * PHYSICAL_DIM + d)
            })
            .collect()
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Encoding::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown encoding `{s}`")))
    }
}

/// The physical levels agree with the dynamics computational set.
pub fn physical_levels_match_computational_set() -> bool {
    ComputationalSet::default().states() == PHYSICAL_LEVELS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_examples() {
        assert_eq!(Encoding::Ququart.logical_to_physical("10_L").unwrap(), RotState::new_unchecked(3, -3));
        assert_eq!(Encoding::Qubit.logical_to_physical("0").unwrap(), RotState::new_unchecked(0, 0));
        assert_eq!(Encoding::Ququint.logical_to_physical("anc").unwrap(), RotState::new_unchecked(3, 0));
        assert!(Encoding::Ququart.logical_to_physical("anc").is_err());
        assert!(Encoding::Qubit.logical_to_physical("2").is_err());
    }

    #[test]
    fn maps_are_injective_and_round_trip() {
        for enc in Encoding::ALL {
            let map = enc.map();
            assert_eq!(map.len(), enc.dimension());
            for (i, (label, s)) in map.iter().enumerate() {
                assert!(PHYSICAL_LEVELS.contains(s));
                assert!(map[..i].iter().all(|(_, t)| t != s));
                assert_eq!(enc.physical_to_logical(*s), Some(*label));
            }
        }
        assert!(physical_levels_match_computational_set());
    }

    #[test]
    fn ququint_restricts_to_ququart() {
        assert_eq!(&Encoding::Ququint.map()[..4], Encoding::Ququart.map());
    }

    #[test]
    fn embedding() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let v = Encoding::Qubit.embed_qubit_state(&[one, zero]).unwrap();
        assert_eq!(v[0], one);
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let v = Encoding::Ququart.embed_qubit_state(&[h, zero, zero, h]).unwrap();
        assert_eq!(v[physical_index(L00).unwrap()], h);
        assert_eq!(v[physical_index(L11).unwrap()], h);
        let v = Encoding::Ququint.embed_qubit_state(&[zero, h, h, zero]).unwrap();
        assert_eq!(v[physical_index(ANC).unwrap()], zero);
        assert!(Encoding::Ququart.embed_qubit_state(&[one, zero]).is_err());
    }

    #[test]
    fn logical_basis_order() {
        // qubit pair |10> sits at level (1,0) on qudit 0 and (0,0) on qudit 1
        let b = Encoding::Qubit.logical_basis(2);
        assert_eq!(b, vec![0, 1, 5, 6]);
        let q = Encoding::Ququart.logical_basis(1);
        assert_eq!(q, vec![0, 1, 2, 4]);
        assert_eq!("QUTRIT-ANC".parse::<Encoding>().unwrap(), Encoding::QutritAnc);
    }
}
