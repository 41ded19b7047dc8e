//! One-dimensional search over the pulse duration τ that maximizes the
//! entangler fidelity, with α and β fixed by the trap geometry.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, secular_pulse_area, PhaseBranch, PropagationSettings};
use crate::error::{Error, Result};
use crate::molecule::{MoleculeSpec, TrapSpec};
use crate::trajectory::{confinement_timescale, ProfileKind, TrajectoryProfile};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub spec: MoleculeSpec,
    pub trap: TrapSpec,
    pub kind: ProfileKind,
    /// (low, high) in μs.
    pub tau_bounds: (f64, f64),
    /// Minimum ratio τ / t₀.
    pub constraint_factor: f64,
    #[serde(default)]
    pub settings: PropagationSettings,
    /// Bracket width, relative to its midpoint, at which refinement stops.
    #[serde(default = "default_rel_tol")]
    pub relative_tolerance: f64,
    #[serde(default = "default_max_evals")]
    pub max_evaluations: usize,
}

fn default_rel_tol() -> f64 {
    1e-3
}

fn default_max_evals() -> usize {
    200
}

pub const DEFAULT_CONSTRAINT_FACTOR: f64 = 5.0;

impl OptimizationProblem {
    pub fn new(spec: MoleculeSpec, trap: TrapSpec, kind: ProfileKind, tau_bounds: (f64, f64)) -> Self {
        OptimizationProblem {
            spec,
            trap,
            kind,
            tau_bounds,
            constraint_factor: DEFAULT_CONSTRAINT_FACTOR,
            settings: PropagationSettings::default(),
            relative_tolerance: default_rel_tol(),
            max_evaluations: default_max_evals(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.trap.validate()?;
        self.settings.validate()?;
        let (lo, hi) = self.tau_bounds;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config(format!("invalid tau bounds ({lo}, {hi})")));
        }
        if !(self.constraint_factor >= 0.0) {
            return Err(Error::Config(format!(
                "constraint factor must be non-negative, got {}",
                self.constraint_factor
            )));
        }
        if !(self.relative_tolerance > 0.0) || self.max_evaluations == 0 {
            return Err(Error::Config("search needs a positive tolerance and evaluation budget".into()));
        }
        Ok(())
    }

    pub fn confinement_timescale(&self) -> f64 {
        confinement_timescale(&self.spec, &self.trap)
    }

    /// Bounds after raising the lower end to constraint_factor · t₀.
    pub fn effective_bounds(&self) -> (f64, f64) {
        let floor = self.constraint_factor * self.confinement_timescale();
        (self.tau_bounds.0.max(floor), self.tau_bounds.1)
    }

    fn profile(&self, tau: f64) -> Result<TrajectoryProfile> {
        TrajectoryProfile::from_trap(self.kind, &self.trap, tau)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_tau: f64,
    pub best_fidelity: f64,
    pub phase_branch: PhaseBranch,
    pub evaluations: usize,
    /// (τ, fidelity) in evaluation order.
    pub history: Vec<(f64, f64)>,
    pub seed_tau: Option<f64>,
    pub confinement_timescale: f64,
    /// Last bracket containing the maximum.
    pub final_bracket: (f64, f64),
}

impl OptimizationReport {
    /// History as CSV with a `tau_us,fidelity` header.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau_us", "fidelity"])?;
        for &(tau, f) in &self.history {
            w.write_record([tau.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// τ at which the secular exchange angle reaches π/2.
///
/// The angle is proportional to τ for every profile shape, so one evaluation
/// fixes the slope.
pub fn seed_tau_from_pulse_area(problem: &OptimizationProblem) -> Result<f64> {
    let reference = problem.profile(1.0)?;
    let slope = secular_pulse_area(&problem.spec, &reference);
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::domain("pulse area vanishes for this molecule and trap"));
    }
    Ok(FRAC_PI_2 / slope)
}

struct Objective<'a> {
    problem: &'a OptimizationProblem,
    history: Vec<(f64, f64)>,
    best: Option<(f64, f64, PhaseBranch)>,
}

impl Objective<'_> {
    fn eval(&mut self, tau: f64) -> Result<f64> {
        let r = propagate(&self.problem.spec, &self.problem.profile(tau)?, &self.problem.settings)?;
        self.history.push((tau, r.f_iswap));
        if self.best.is_none_or(|(_, f, _)| r.f_iswap > f) {
            self.best = Some((tau, r.f_iswap, r.phase_branch));
        }
        Ok(r.f_iswap)
    }

    fn exhausted(&self) -> bool {
        self.history.len() >= self.problem.max_evaluations
    }
}

/// Warm-started bracketing followed by golden-section refinement.
pub fn optimize_tau(problem: &OptimizationProblem) -> Result<OptimizationReport> {
    problem.validate()?;
    let t0 = problem.confinement_timescale();
    let (lo, hi) = problem.effective_bounds();
    if lo > hi {
        return Err(Error::Search {
            msg: format!(
                "bounds end at {hi} μs, below the confinement limit {lo} μs ({}·t₀)",
                problem.constraint_factor
            ),
            history: Vec::new(),
        });
    }

    let mut obj = Objective {
        problem,
        history: Vec::new(),
        best: None,
    };
    let seed = seed_tau_from_pulse_area(problem).ok();

    let bracket = if hi - lo <= 0.0 {
        obj.eval(lo)?;
        (lo, hi)
    } else {
        let (a, c) = match seed.filter(|s| (lo..=hi).contains(s)) {
            Some(s) => bracket_around(&mut obj, s, lo, hi)?,
            None => grid_bracket(&mut obj, lo, hi)?,
        };
        golden(&mut obj, a, c)?
    };

    let (best_tau, best_fidelity, phase_branch) = obj.best.expect("at least one evaluation");
    if best_fidelity < 0.5 {
        return Err(Error::Search {
            msg: format!(
                "no τ in [{lo}, {hi}] μs reaches fidelity 0.5 (best {best_fidelity:.4} at {best_tau} μs)"
            ),
            history: obj.history,
        });
    }
    let on_bound = |edge: f64| (best_tau - edge).abs() <= problem.relative_tolerance * edge;
    if hi > lo && (on_bound(lo) || on_bound(hi)) {
        return Err(Error::Search {
            msg: format!(
                "fidelity keeps rising toward the bound at {best_tau} μs; [{lo}, {hi}] μs holds no interior optimum"
            ),
            history: obj.history,
        });
    }
    Ok(OptimizationReport {
        best_tau,
        best_fidelity,
        phase_branch,
        evaluations: obj.history.len(),
        history: obj.history,
        seed_tau: seed,
        confinement_timescale: t0,
        final_bracket: bracket,
    })
}

/// Expands a ±5% bracket around `seed` until its middle point is highest.
fn bracket_around(obj: &mut Objective<'_>, seed: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mut step = 0.05 * seed;
    let mut b = seed;
    let mut fb = obj.eval(b)?;
    let mut a = (b - step).max(lo);
    let mut c = (b + step).min(hi);
    let mut fa = if a < b { obj.eval(a)? } else { fb };
    let mut fc = if c > b { obj.eval(c)? } else { fb };

    while !obj.exhausted() {
        if fa > fb && a > lo {
            step *= 1.6;
            (c, fc, b, fb) = (b, fb, a, fa);
            a = (b - step).max(lo);
            fa = obj.eval(a)?;
        } else if fc > fb && c < hi {
            step *= 1.6;
            (a, fa, b, fb) = (b, fb, c, fc);
            c = (b + step).min(hi);
            fc = obj.eval(c)?;
        } else {
            break;
        }
    }
    // Maximum sits on a bound: collapse the bracket against it.
    if fa > fb {
        return Ok((a, b));
    }
    if fc > fb {
        return Ok((b, c));
    }
    Ok((a, c))
}

/// Coarse scan used when the warm start is unavailable or out of bounds.
fn grid_bracket(obj: &mut Objective<'_>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    const POINTS: usize = 16;
    let grid: Vec<f64> = (0..POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64)
        .collect();
    let mut vals = Vec::with_capacity(POINTS);
    for &t in &grid {
        vals.push(obj.eval(t)?);
    }
    let k = (0..POINTS)
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .expect("non-empty grid");
    Ok((grid[k.saturating_sub(1)], grid[(k + 1).min(POINTS - 1)]))
}

/// Golden-section refinement of [a, c]; returns the final bracket.
fn golden(obj: &mut Objective<'_>, mut a: f64, mut c: f64) -> Result<(f64, f64)> {
    let tol = obj.problem.relative_tolerance;
    let narrow = |a: f64, c: f64| (c - a) <= tol * 0.5 * (a + c).abs();
    if narrow(a, c) {
        return Ok((a, c));
    }
    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let mut f1 = obj.eval(x1)?;
    let mut f2 = obj.eval(x2)?;
    while !narrow(a, c) && !obj.exhausted() {
        if f1 >= f2 {
            c = x2;
            (x2, f2) = (x1, f1);
            x1 = c - INV_PHI * (c - a);
            f1 = obj.eval(x1)?;
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + INV_PHI * (c - a);
            f2 = obj.eval(x2)?;
        }
    }
    Ok((a, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srf(kind: ProfileKind, bounds: (f64, f64)) -> OptimizationProblem {
        OptimizationProblem::new(MoleculeSpec::srf(), TrapSpec::reference(), kind, bounds)
    }

    #[test]
    fn seed_matches_reference_durations() {
        let cos = seed_tau_from_pulse_area(&srf(ProfileKind::Cosine, (40.0, 160.0))).unwrap();
        assert!((cos - 82.59).abs() / 82.59 < 0.02, "{cos}");
        let tri = seed_tau_from_pulse_area(&srf(ProfileKind::Triangular, (40.0, 500.0))).unwrap();
        assert!((tri - 354.47).abs() / 354.47 < 0.02, "{tri}");
    }

    #[test]
    fn lower_bound_respects_confinement() {
        let p = srf(ProfileKind::Cosine, (40.0, 160.0));
        let (lo, _) = p.effective_bounds();
        assert!(lo >= 5.0 * p.confinement_timescale());
        assert!(lo > 40.0);
    }

    #[test]
    fn degenerate_bounds_single_evaluation() {
        let r = optimize_tau(&srf(ProfileKind::Cosine, (82.59, 82.59))).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn cosine_search_converges() {
        let r = optimize_tau(&srf(ProfileKind::Cosine, (40.0, 160.0))).unwrap();
        assert!((r.best_tau - 82.59).abs() / 82.59 < 0.02, "{}", r.best_tau);
        assert!(r.best_fidelity >= 0.99);
        assert!(r.evaluations <= 200);
        let running_best = r.history.iter().map(|h| h.1).fold(f64::MIN, f64::max);
        assert_eq!(running_best, r.best_fidelity);
    }

    #[test]
    fn no_solution_in_bounds_fails_with_history() {
        // θ stays far below π/2 this early on
        let err = optimize_tau(&srf(ProfileKind::Cosine, (41.0, 42.0))).unwrap_err();
        match err {
            Error::Search { history, .. } => assert!(!history.is_empty()),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn history_csv() {
        let r = optimize_tau(&srf(ProfileKind::Cosine, (80.0, 85.0))).unwrap();
        let mut buf = Vec::new();
        r.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau_us,fidelity\n"));
        assert_eq!(text.lines().count(), r.history.len() + 1);
    }
}
