//! Interaction-picture propagation of a molecule pair along a trajectory.
//!
//! The pair amplitudes obey
//!
//! ```text
//! dc_Q/dt = -i f(t) Σ_Q' A_QQ' exp(i (E_Q - E_Q') t) c_Q'
//! ```
//!
//! with A the angular-factor matrix and f(t) = d²/(4πε₀ħR(t)³). Time is in μs
//! and frequencies in rad/μs. Only the 25 columns starting in the
//! computational set are propagated; each is confined to a connected block of
//! the coupling graph, so blocks are integrated independently.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::RotState;
use crate::ddi::{build_ddi_matrix, geometry_factor, DdiMatrix, PairState};
use crate::error::{Error, Result};
use crate::molecule::{consts, rot_energy, MoleculeSpec};
use crate::trajectory::TrajectoryProfile;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance for treating two pair energies as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-9;

pub const DEFAULT_J_MAX: u32 = 4;

/// Five single-molecule levels spanning one qudit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComputationalSet(Vec<RotState>);

impl Default for ComputationalSet {
    /// {(0,0), (1,0), (3,-3), (3,0), (3,3)}.
    fn default() -> Self {
        ComputationalSet(vec![
            RotState::new_unchecked(0, 0),
            RotState::new_unchecked(1, 0),
            RotState::new_unchecked(3, -3),
            RotState::new_unchecked(3, 0),
            RotState::new_unchecked(3, 3),
        ])
    }
}

impl ComputationalSet {
    pub const SIZE: usize = 5;
    pub const GROUND: RotState = RotState::new_unchecked(0, 0);
    pub const EXCITED: RotState = RotState::new_unchecked(1, 0);

    pub fn new(states: Vec<RotState>) -> Result<Self> {
        if states.len() != Self::SIZE {
            return Err(Error::Config(format!(
                "computational set needs {} states, got {}",
                Self::SIZE,
                states.len()
            )));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Config(format!("duplicate state {s} in computational set")));
            }
        }
        for s in [Self::GROUND, Self::EXCITED] {
            if !states.contains(&s) {
                return Err(Error::Config(format!("computational set must contain {s}")));
            }
        }
        Ok(ComputationalSet(states))
    }

    /// Reduced set that fits inside J ≤ 2: {(0,0), (1,0), (2,-2), (2,0), (2,2)}.
    pub fn toy() -> Self {
        ComputationalSet(vec![
            RotState::new_unchecked(0, 0),
            RotState::new_unchecked(1, 0),
            RotState::new_unchecked(2, -2),
            RotState::new_unchecked(2, 0),
            RotState::new_unchecked(2, 2),
        ])
    }

    pub fn states(&self) -> &[RotState] {
        &self.0
    }

    pub fn index_of(&self, s: RotState) -> Option<usize> {
        self.0.iter().position(|&x| x == s)
    }

    pub fn max_j(&self) -> u32 {
        self.0.iter().map(|s| s.j).max().unwrap_or(0)
    }

    /// Two-molecule products in row-major order: index 5a + b.
    pub fn pair_states(&self) -> Vec<PairState> {
        self.0
            .iter()
            .flat_map(|&a| self.0.iter().map(move |&b| PairState::new(a, b)))
            .collect()
    }

    pub fn pair_labels(&self) -> Vec<String> {
        self.pair_states().iter().map(ToString::to_string).collect()
    }

    fn flip_flop_indices(&self) -> (usize, usize) {
        let g = self.index_of(Self::GROUND).expect("validated");
        let e = self.index_of(Self::EXCITED).expect("validated");
        (e * Self::SIZE + g, g * Self::SIZE + e)
    }
}

/// Sign of the exchange phase: 𝒰|1,0>|0,0> = ±i|0,0>|1,0>.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseBranch {
    #[default]
    #[serde(rename = "+i")]
    PlusI,
    #[serde(rename = "-i")]
    MinusI,
}

impl PhaseBranch {
    pub fn phase(self) -> Complex64 {
        match self {
            PhaseBranch::PlusI => I,
            PhaseBranch::MinusI => -I,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            PhaseBranch::PlusI => PhaseBranch::MinusI,
            PhaseBranch::MinusI => PhaseBranch::PlusI,
        }
    }
}

impl fmt::Display for PhaseBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseBranch::PlusI => "+i",
            PhaseBranch::MinusI => "-i",
        })
    }
}

impl std::str::FromStr for PhaseBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "+i" | "i" | "plus" | "plusi" => Ok(PhaseBranch::PlusI),
            "-i" | "minus" | "minusi" => Ok(PhaseBranch::MinusI),
            _ => Err(Error::Config(format!("unknown phase branch `{s}`"))),
        }
    }
}

/// The ideal entangler on the default computational set.
pub fn target_gate(branch: PhaseBranch) -> DMatrix<Complex64> {
    target_gate_for(&ComputationalSet::default(), branch)
}

/// iSWAP on the flip-flop pair of `set`, identity on the other 23 products.
pub fn target_gate_for(set: &ComputationalSet, branch: PhaseBranch) -> DMatrix<Complex64> {
    let n = ComputationalSet::SIZE * ComputationalSet::SIZE;
    let mut u = DMatrix::<Complex64>::identity(n, n);
    let (a, b) = set.flip_flop_indices();
    u[(a, a)] = ZERO;
    u[(b, b)] = ZERO;
    u[(a, b)] = branch.phase();
    u[(b, a)] = branch.phase();
    u
}

/// |Tr(u_phys u_target†)| / n.
pub fn fidelity(u_phys: &DMatrix<Complex64>, u_target: &DMatrix<Complex64>) -> f64 {
    assert_eq!(u_phys.shape(), u_target.shape(), "fidelity: shape mismatch");
    let n = u_phys.nrows();
    let tr: Complex64 = u_phys
        .iter()
        .zip(u_target.iter())
        .map(|(a, b)| a * b.conj())
        .sum();
    tr.norm() / n as f64
}

/// Exchange angle of the flip-flop pair in the secular limit: the swap block
/// evolves as exp(-iθσx).
pub fn secular_pulse_area(spec: &MoleculeSpec, profile: &TrajectoryProfile) -> f64 {
    flip_flop_factor().abs() * spec.dipolar_coefficient_um3_per_us() * profile.inverse_cube_integral()
}

/// Angular factor between |0,0>|1,0> and |1,0>|0,0>.
pub fn flip_flop_factor() -> f64 {
    let (g, e) = (ComputationalSet::GROUND, ComputationalSet::EXCITED);
    geometry_factor(&PairState::new(g, e), &PairState::new(e, g))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    /// Keep only couplings between degenerate pair states.
    #[default]
    Secular,
    /// Keep every coupling with its interaction-picture phase.
    Full,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "secular" => Ok(SolverMode::Secular),
            "full" => Ok(SolverMode::Full),
            _ => Err(Error::Config(format!("unknown solver mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    /// Target for the accumulated local error over the whole trajectory.
    pub tolerance: f64,
    /// First trial step as a fraction of τ.
    pub initial_step_fraction: f64,
    /// Steps below this fraction of τ count as underflow.
    pub min_step_fraction: f64,
    pub max_steps: usize,
    /// Largest accepted unitarity defect; `None` picks the mode default.
    pub unitarity_tolerance: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            tolerance: 1e-10,
            initial_step_fraction: 1.0 / 2000.0,
            min_step_fraction: 1e-14,
            max_steps: 50_000_000,
            unitarity_tolerance: None,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tolerance > 0.0
            && self.initial_step_fraction > 0.0
            && self.initial_step_fraction <= 1.0
            && self.min_step_fraction > 0.0
            && self.max_steps > 0
            && self.unitarity_tolerance.is_none_or(|t| t > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid step control {self:?}")))
        }
    }

    fn unitarity_limit(&self, mode: SolverMode) -> f64 {
        self.unitarity_tolerance.unwrap_or(match mode {
            SolverMode::Secular => 1e-8,
            SolverMode::Full => 1e-6,
        })
    }
}

/// Everything `propagate` needs besides the molecule and trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationSettings {
    pub j_max: u32,
    pub mode: SolverMode,
    pub step: StepControl,
    pub computational_set: ComputationalSet,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        PropagationSettings {
            j_max: DEFAULT_J_MAX,
            mode: SolverMode::Secular,
            step: StepControl::default(),
            computational_set: ComputationalSet::default(),
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        let set = ComputationalSet::new(self.computational_set.states().to_vec())?;
        if set.max_j() > self.j_max {
            return Err(Error::Config(format!(
                "J_max = {} does not contain the computational set (needs {})",
                self.j_max,
                set.max_j()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    /// Projected operator on the 25 computational products, row-major 5a + b.
    pub operator: DMatrix<Complex64>,
    pub basis: Vec<PairState>,
    /// max |G - 1| with G the Gram matrix of the propagated columns.
    pub unitarity_defect: f64,
    /// Largest population any column leaves outside the computational products.
    pub leakage: f64,
    pub f_iswap: f64,
    pub f_id: f64,
    pub phase_branch: PhaseBranch,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub pulse_area: f64,
    pub steps: usize,
}

#[derive(Serialize, Deserialize)]
struct EvolutionResultJson {
    basis: Vec<String>,
    operator: Vec<Vec<[f64; 2]>>,
    unitarity_defect: f64,
    leakage: f64,
    f_iswap: f64,
    f_id: f64,
    phase_branch: PhaseBranch,
    fidelity_plus: f64,
    fidelity_minus: f64,
    pulse_area: f64,
    steps: usize,
}

impl Serialize for EvolutionResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let operator = (0..self.operator.nrows())
            .map(|r| {
                (0..self.operator.ncols())
                    .map(|c| {
                        let z = self.operator[(r, c)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        EvolutionResultJson {
            basis: self.basis.iter().map(ToString::to_string).collect(),
            operator,
            unitarity_defect: self.unitarity_defect,
            leakage: self.leakage,
            f_iswap: self.f_iswap,
            f_id: self.f_id,
            phase_branch: self.phase_branch,
            fidelity_plus: self.fidelity_plus,
            fidelity_minus: self.fidelity_minus,
            pulse_area: self.pulse_area,
            steps: self.steps,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EvolutionResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = EvolutionResultJson::deserialize(d)?;
        let n = raw.operator.len();
        if raw.operator.iter().any(|row| row.len() != n) || raw.basis.len() != n {
            return Err(D::Error::custom("operator must be square and match the basis"));
        }
        let basis = raw
            .basis
            .iter()
            .map(|label| {
                let (a, b) = label
                    .split_once(';')
                    .ok_or_else(|| D::Error::custom(format!("bad pair label `{label}`")))?;
                let a: RotState = a.parse().map_err(D::Error::custom)?;
                let b: RotState = b.parse().map_err(D::Error::custom)?;
                Ok(PairState::new(a, b))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        let operator = DMatrix::from_fn(n, n, |r, c| {
            let [re, im] = raw.operator[r][c];
            Complex64::new(re, im)
        });
        Ok(EvolutionResult {
            operator,
            basis,
            unitarity_defect: raw.unitarity_defect,
            leakage: raw.leakage,
            f_iswap: raw.f_iswap,
            f_id: raw.f_id,
            phase_branch: raw.phase_branch,
            fidelity_plus: raw.fidelity_plus,
            fidelity_minus: raw.fidelity_minus,
            pulse_area: raw.pulse_area,
            steps: raw.steps,
        })
    }
}

/// Propagates the 25 computational columns and scores the projected operator.
pub fn propagate(
    spec: &MoleculeSpec,
    profile: &TrajectoryProfile,
    settings: &PropagationSettings,
) -> Result<EvolutionResult> {
    spec.validate()?;
    profile.validate()?;
    settings.validate()?;

    let system = PairSystem::new(spec, settings.j_max, settings.mode);
    let set = &settings.computational_set;
    let comp_idx: Vec<usize> = set
        .pair_states()
        .iter()
        .map(|p| system.ddi.index_of(p).expect("computational set inside truncated basis"))
        .collect();

    let n = comp_idx.len();
    let dim = system.ddi.dim();
    let mut initial = vec![vec![ZERO; dim]; n];
    for (col, &i) in comp_idx.iter().enumerate() {
        initial[col][i] = ONE;
    }
    let (finals, steps) = system.evolve(profile, &initial, &settings.step)?;

    let mut gram_defect = 0.0f64;
    for a in 0..n {
        for b in a..n {
            let g: Complex64 = finals[a].iter().zip(&finals[b]).map(|(x, y)| x.conj() * y).sum();
            let want = if a == b { ONE } else { ZERO };
            gram_defect = gram_defect.max((g - want).norm());
        }
    }
    let limit = settings.step.unitarity_limit(settings.mode);
    if !(gram_defect <= limit) {
        return Err(Error::Integration(format!(
            "unitarity defect {gram_defect:.3e} exceeds {limit:.1e} after {steps} steps"
        )));
    }

    let operator = DMatrix::from_fn(n, n, |r, c| finals[c][comp_idx[r]]);
    let leakage = (0..n)
        .map(|c| {
            let kept: f64 = (0..n).map(|r| operator[(r, c)].norm_sqr()).sum();
            (1.0 - kept).max(0.0)
        })
        .fold(0.0, f64::max);

    let fidelity_plus = fidelity(&operator, &target_gate_for(set, PhaseBranch::PlusI));
    let fidelity_minus = fidelity(&operator, &target_gate_for(set, PhaseBranch::MinusI));
    let (f_iswap, phase_branch) = if fidelity_minus > fidelity_plus {
        (fidelity_minus, PhaseBranch::MinusI)
    } else {
        (fidelity_plus, PhaseBranch::PlusI)
    };
    let f_id = fidelity(&operator, &DMatrix::identity(n, n));

    Ok(EvolutionResult {
        operator,
        basis: set.pair_states(),
        unitarity_defect: gram_defect,
        leakage,
        f_iswap,
        f_id,
        phase_branch,
        fidelity_plus,
        fidelity_minus,
        pulse_area: secular_pulse_area(spec, profile),
        steps,
    })
}

/// Propagates one initial superposition over the computational products and
/// returns its final amplitudes on those products.
pub fn propagate_state(
    spec: &MoleculeSpec,
    profile: &TrajectoryProfile,
    settings: &PropagationSettings,
    amplitudes: &[Complex64],
) -> Result<Vec<Complex64>> {
    settings.validate()?;
    let system = PairSystem::new(spec, settings.j_max, settings.mode);
    let comp_idx: Vec<usize> = settings
        .computational_set
        .pair_states()
        .iter()
        .map(|p| system.ddi.index_of(p).expect("computational set inside truncated basis"))
        .collect();
    if amplitudes.len() != comp_idx.len() {
        return Err(Error::domain(format!(
            "expected {} amplitudes, got {}",
            comp_idx.len(),
            amplitudes.len()
        )));
    }
    let mut initial = vec![ZERO; system.ddi.dim()];
    for (&i, &a) in comp_idx.iter().zip(amplitudes) {
        initial[i] = a;
    }
    let (finals, _) = system.evolve(profile, &[initial], &settings.step)?;
    Ok(comp_idx.iter().map(|&i| finals[0][i]).collect())
}

/// Truncated pair basis with its couplings and level energies.
struct PairSystem {
    ddi: DdiMatrix,
    /// E_Q / B, an integer for a rigid rotor.
    level_index: Vec<u32>,
    /// B in rad/μs.
    b: f64,
    /// d²/(4πε₀ħ) in μm³·rad/μs.
    coupling: f64,
    mode: SolverMode,
}

impl PairSystem {
    fn new(spec: &MoleculeSpec, j_max: u32, mode: SolverMode) -> Self {
        let full = build_ddi_matrix(j_max);
        let energy = |p: &PairState| rot_energy(spec, p.first.j) + rot_energy(spec, p.second.j);
        let ddi = match mode {
            SolverMode::Full => full,
            SolverMode::Secular => {
                let basis = full.basis().to_vec();
                full.filtered(|i, j| {
                    let (ei, ej) = (energy(&basis[i]), energy(&basis[j]));
                    (ei - ej).abs() <= DEGENERACY_RTOL * ei.abs().max(ej.abs())
                })
            }
        };
        let level_index = ddi
            .basis()
            .iter()
            .map(|p| p.first.j * (p.first.j + 1) + p.second.j * (p.second.j + 1))
            .collect();
        PairSystem {
            ddi,
            level_index,
            b: spec.rotational_constant_rad_s() * consts::MICROSECOND,
            coupling: spec.dipolar_coefficient_um3_per_us(),
            mode,
        }
    }

    /// Connected components of the coupling graph.
    fn components(&self) -> Vec<usize> {
        let n = self.ddi.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, j, _) in self.ddi.triplets() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..n).map(|i| find(&mut parent, i)).collect()
    }

    /// Evolves each initial vector over [0, τ]; returns final vectors and the
    /// total number of accepted steps.
    fn evolve(
        &self,
        profile: &TrajectoryProfile,
        initial: &[Vec<Complex64>],
        control: &StepControl,
    ) -> Result<(Vec<Vec<Complex64>>, usize)> {
        let comp = self.components();
        let dim = self.ddi.dim();

        // Group columns whose supports share a component.
        let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (col, v) in initial.iter().enumerate() {
            let mut roots: Vec<usize> = (0..dim).filter(|&i| v[i] != ZERO).map(|i| comp[i]).collect();
            roots.sort_unstable();
            roots.dedup();
            let hits: Vec<usize> = groups
                .iter()
                .enumerate()
                .filter(|(_, (r, _))| r.iter().any(|x| roots.binary_search(x).is_ok()))
                .map(|(g, _)| g)
                .collect();
            let mut merged = (roots, vec![col]);
            for &g in hits.iter().rev() {
                let (r, c) = groups.swap_remove(g);
                merged.0.extend(r);
                merged.1.extend(c);
            }
            merged.0.sort_unstable();
            merged.0.dedup();
            groups.push(merged);
        }

        let blocks: Vec<Block> = groups
            .into_iter()
            .map(|(roots, cols)| {
                let states: Vec<usize> = (0..dim).filter(|&i| roots.binary_search(&comp[i]).is_ok()).collect();
                Block::new(self, states, cols)
            })
            .collect();

        let results: Vec<Result<(Block, Vec<Complex64>, usize)>> = blocks
            .into_par_iter()
            .map(|block| {
                let mut y = block.gather(initial);
                let steps = block.integrate(self, profile, control, &mut y)?;
                Ok((block, y, steps))
            })
            .collect();

        let mut finals = vec![vec![ZERO; dim]; initial.len()];
        let mut steps = 0;
        for r in results {
            let (block, y, s) = r?;
            block.scatter(&y, &mut finals);
            steps += s;
        }
        Ok((finals, steps))
    }
}

/// A closed set of basis states carrying some of the propagated columns.
/// Amplitudes are stored row-major: `y[row * ncols + col]`.
struct Block {
    states: Vec<usize>,
    cols: Vec<usize>,
    row_ptr: Vec<usize>,
    entries: Vec<(usize, f64)>,
    level: Vec<u32>,
    max_level: u32,
    max_gap: u32,
}

impl Block {
    fn new(system: &PairSystem, states: Vec<usize>, cols: Vec<usize>) -> Self {
        let local = |g: usize| states.binary_search(&g).expect("block closed under coupling");
        let mut row_ptr = vec![0];
        let mut entries = Vec::new();
        let mut max_gap = 0;
        for &g in &states {
            for (h, v) in system.ddi.row(g) {
                entries.push((local(h), v));
                max_gap = max_gap.max(system.level_index[g].abs_diff(system.level_index[h]));
            }
            row_ptr.push(entries.len());
        }
        let level: Vec<u32> = states.iter().map(|&g| system.level_index[g]).collect();
        let max_level = level.iter().copied().max().unwrap_or(0);
        Block {
            states,
            cols,
            row_ptr,
            entries,
            level,
            max_level,
            max_gap,
        }
    }

    fn gather(&self, initial: &[Vec<Complex64>]) -> Vec<Complex64> {
        let m = self.cols.len();
        let mut y = vec![ZERO; self.states.len() * m];
        for (r, &g) in self.states.iter().enumerate() {
            for (c, &col) in self.cols.iter().enumerate() {
                y[r * m + c] = initial[col][g];
            }
        }
        y
    }

    fn scatter(&self, y: &[Complex64], finals: &mut [Vec<Complex64>]) {
        let m = self.cols.len();
        for (r, &g) in self.states.iter().enumerate() {
            for (c, &col) in self.cols.iter().enumerate() {
                finals[col][g] = y[r * m + c];
            }
        }
    }

    /// dy/dt at time t, written into `out`. `phase` and `tmp` are scratch.
    fn derivative(
        &self,
        system: &PairSystem,
        profile: &TrajectoryProfile,
        t: f64,
        y: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut Scratch,
    ) {
        let m = self.cols.len();
        let f = system.coupling / profile.separation(t).powi(3);
        let scale = Complex64::new(0.0, -f);

        match system.mode {
            SolverMode::Secular => {
                for r in 0..self.states.len() {
                    let acc = &mut out[r * m..(r + 1) * m];
                    acc.fill(ZERO);
                    for &(k, v) in &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]] {
                        for (a, &x) in acc.iter_mut().zip(&y[k * m..(k + 1) * m]) {
                            *a += x * v;
                        }
                    }
                    for a in acc.iter_mut() {
                        *a *= scale;
                    }
                }
            }
            SolverMode::Full => {
                let powers = &mut scratch.powers;
                let (s, c) = (system.b * t).sin_cos();
                let z = Complex64::new(c, s);
                powers[0] = ONE;
                for k in 1..powers.len() {
                    powers[k] = powers[k - 1] * z;
                }
                let tmp = &mut scratch.tmp;
                for (r, &lvl) in self.level.iter().enumerate() {
                    let ph = powers[lvl as usize].conj();
                    for c in 0..m {
                        tmp[r * m + c] = y[r * m + c] * ph;
                    }
                }
                for (r, &lvl) in self.level.iter().enumerate() {
                    let acc = &mut out[r * m..(r + 1) * m];
                    acc.fill(ZERO);
                    for &(k, v) in &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]] {
                        for (a, &x) in acc.iter_mut().zip(&tmp[k * m..(k + 1) * m]) {
                            *a += x * v;
                        }
                    }
                    let ph = powers[lvl as usize] * scale;
                    for a in acc.iter_mut() {
                        *a *= ph;
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rk4(
        &self,
        system: &PairSystem,
        profile: &TrajectoryProfile,
        t: f64,
        h: f64,
        y: &[Complex64],
        k1: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut Scratch,
    ) {
        let n = y.len();
        let mut stage = std::mem::take(&mut scratch.stage);
        let mut k = std::mem::take(&mut scratch.k);
        let mut acc = std::mem::take(&mut scratch.acc);

        acc.copy_from_slice(k1);
        for i in 0..n {
            stage[i] = y[i] + k1[i] * (h / 2.0);
        }
        self.derivative(system, profile, t + h / 2.0, &stage, &mut k, scratch);
        for i in 0..n {
            acc[i] += k[i] * 2.0;
            stage[i] = y[i] + k[i] * (h / 2.0);
        }
        self.derivative(system, profile, t + h / 2.0, &stage, &mut k, scratch);
        for i in 0..n {
            acc[i] += k[i] * 2.0;
            stage[i] = y[i] + k[i] * h;
        }
        self.derivative(system, profile, t + h, &stage, &mut k, scratch);
        for i in 0..n {
            acc[i] += k[i];
            out[i] = y[i] + acc[i] * (h / 6.0);
        }

        scratch.stage = stage;
        scratch.k = k;
        scratch.acc = acc;
    }

    /// Adaptive RK4 with step doubling over each smooth piece of the profile.
    fn integrate(
        &self,
        system: &PairSystem,
        profile: &TrajectoryProfile,
        control: &StepControl,
        y: &mut [Complex64],
    ) -> Result<usize> {
        if self.entries.is_empty() {
            return Ok(0);
        }
        let n = y.len();
        let tau = profile.tau;
        let mut scratch = Scratch::new(n, self.max_level as usize + 1);
        let mut k1 = vec![ZERO; n];
        let mut k_mid = vec![ZERO; n];
        let mut full = vec![ZERO; n];
        let mut half = vec![ZERO; n];
        let mut two = vec![ZERO; n];

        let mut h = control.initial_step_fraction * tau;
        if system.mode == SolverMode::Full && self.max_gap > 0 {
            h = h.min(0.5 / (system.b * f64::from(self.max_gap)));
        }
        let h_min = control.min_step_fraction * tau;
        let err_per_time = control.tolerance / tau;
        let mut steps = 0usize;

        for w in profile.breakpoints().windows(2) {
            let (mut t, end) = (w[0], w[1]);
            while end - t > h_min * 0.5 {
                let step = h.min(end - t);
                self.derivative(system, profile, t, y, &mut k1, &mut scratch);
                self.rk4(system, profile, t, step, y, &k1, &mut full, &mut scratch);
                self.rk4(system, profile, t, step / 2.0, y, &k1, &mut half, &mut scratch);
                self.derivative(system, profile, t + step / 2.0, &half, &mut k_mid, &mut scratch);
                self.rk4(system, profile, t + step / 2.0, step / 2.0, &half, &k_mid, &mut two, &mut scratch);

                let err = full
                    .iter()
                    .zip(&two)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
                    / 15.0;
                let allowed = err_per_time * step;
                if err <= allowed {
                    for i in 0..n {
                        y[i] = two[i] + (two[i] - full[i]) / 15.0;
                    }
                    t += step;
                    steps += 1;
                    if steps > control.max_steps {
                        return Err(Error::Integration(format!(
                            "exceeded {} steps at t = {t} μs of {tau} μs",
                            control.max_steps
                        )));
                    }
                }
                let factor = if err == 0.0 {
                    2.0
                } else {
                    (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 2.0)
                };
                h = step * factor;
                if h < h_min {
                    return Err(Error::Integration(format!(
                        "step size underflow ({h:.3e} μs) at t = {t} μs, local error {err:.3e}"
                    )));
                }
            }
        }
        Ok(steps)
    }
}

struct Scratch {
    stage: Vec<Complex64>,
    k: Vec<Complex64>,
    acc: Vec<Complex64>,
    tmp: Vec<Complex64>,
    powers: Vec<Complex64>,
}

impl Scratch {
    fn new(n: usize, levels: usize) -> Self {
        Scratch {
            stage: vec![ZERO; n],
            k: vec![ZERO; n],
            acc: vec![ZERO; n],
            tmp: vec![ZERO; n],
            powers: vec![ZERO; levels],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::ProfileKind;

    #[test]
    fn target_gate_structure() {
        for branch in [PhaseBranch::PlusI, PhaseBranch::MinusI] {
            let u = target_gate(branch);
            let unit_diag = (0..25).filter(|&i| u[(i, i)] == ONE).count();
            assert_eq!(unit_diag, 23);
            let off: Vec<_> = u
                .iter()
                .enumerate()
                .filter(|(k, z)| k % 25 != k / 25 && **z != ZERO)
                .collect();
            assert_eq!(off.len(), 2);
            assert!(off.iter().all(|(_, z)| (z.norm() - 1.0).abs() < 1e-15));
            assert_eq!(u.adjoint() * &u, DMatrix::identity(25, 25));
            let sq = &u * &u;
            assert_eq!(sq[(1, 1)], -ONE);
            assert_eq!(sq[(5, 5)], -ONE);
        }
        // |1,0>|0,0> is index 5, |0,0>|1,0> index 1
        assert_eq!(target_gate(PhaseBranch::PlusI)[(1, 5)], I);
    }

    #[test]
    fn fidelity_examples() {
        let u = target_gate(PhaseBranch::PlusI);
        assert!((fidelity(&u, &u) - 1.0).abs() < 1e-15);
        let rotated = &u * Complex64::from_polar(1.0, 0.7);
        assert!((fidelity(&rotated, &u) - 1.0).abs() < 1e-14);
        let id = DMatrix::identity(25, 25);
        assert!((fidelity(&id, &u) - 0.92).abs() < 1e-15);
    }

    #[test]
    fn pulse_area_is_linear_in_tau() {
        let spec = MoleculeSpec::srf();
        let p = TrajectoryProfile::new(ProfileKind::Cosine, 4.85, 5.15, 82.59).unwrap();
        let a = secular_pulse_area(&spec, &p);
        let b = secular_pulse_area(&spec, &p.with_tau(2.0 * 82.59));
        assert!((b / a - 2.0).abs() < 1e-14);
        assert!((a - std::f64::consts::FRAC_PI_2).abs() / std::f64::consts::FRAC_PI_2 < 0.02);
        let no_dipole = MoleculeSpec {
            dipole_moment: 0.0,
            ..spec
        };
        assert_eq!(secular_pulse_area(&no_dipole, &p), 0.0);
    }

    #[test]
    fn settings_validation() {
        let mut s = PropagationSettings::default();
        assert!(s.validate().is_ok());
        s.j_max = 2;
        assert!(s.validate().is_err());
        s.computational_set = ComputationalSet::toy();
        assert!(s.validate().is_ok());
        assert!(ComputationalSet::new(vec![RotState::new_unchecked(0, 0); 5]).is_err());
    }

    #[test]
    fn far_apart_is_identity() {
        let spec = MoleculeSpec::srf();
        let p = TrajectoryProfile::new(ProfileKind::Cosine, 1e-3, 1e3, 50.0).unwrap();
        let r = propagate(&spec, &p, &PropagationSettings::default()).unwrap();
        assert!(r.f_id >= 1.0 - 1e-6, "{}", r.f_id);
        assert!(r.unitarity_defect <= 1e-8);
    }

    #[test]
    fn result_json_round_trip() {
        let spec = MoleculeSpec::srf();
        let p = TrajectoryProfile::new(ProfileKind::Constant, 4.85, 5.15, 10.0).unwrap();
        let r = propagate(&spec, &p, &PropagationSettings::default()).unwrap();
        let back: EvolutionResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
