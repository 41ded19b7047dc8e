//! Command-line front end: `spectrum`, `evolve`, `optimize`, `compile` and
//! `verify`.
//!
//! A run is described by one JSON [`RunConfig`]; flags override its fields.
//! Exit codes: 0 success, 1 compute failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circuitsim::verify_circuit;
use crate::dynamics::{propagate, PhaseBranch, PropagationSettings, SolverMode};
use crate::encodings::Encoding;
use crate::error::{Error, Result};
use crate::gates::{compile, CompileOptions, GateSpec, Layout, QuditCircuit};
use crate::molecule::{rot_energy, MoleculeSpec, TrapSpec};
use crate::optimize::{optimize_tau, OptimizationProblem, DEFAULT_CONSTRAINT_FACTOR};
use crate::trajectory::{ProfileKind, TrajectoryProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A preset name or an inline molecule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MoleculeRef {
    Preset(String),
    Inline(MoleculeSpec),
}

impl MoleculeRef {
    pub fn resolve(&self) -> Result<MoleculeSpec> {
        match self {
            MoleculeRef::Preset(name) => MoleculeSpec::preset(name),
            MoleculeRef::Inline(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

impl Default for MoleculeRef {
    fn default() -> Self {
        MoleculeRef::Preset("srf".into())
    }
}

/// Trajectory settings; α and β default to the trap geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    #[serde(default)]
    pub tau_us: Option<f64>,
    #[serde(default)]
    pub alpha_um: Option<f64>,
    #[serde(default)]
    pub beta_um: Option<f64>,
    /// Search interval for `optimize`, μs.
    #[serde(default)]
    pub tau_bounds_us: Option<(f64, f64)>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            kind: ProfileKind::Cosine,
            tau_us: None,
            alpha_um: None,
            beta_um: None,
            tau_bounds_us: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub constraint_factor: f64,
    pub relative_tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            constraint_factor: DEFAULT_CONSTRAINT_FACTOR,
            relative_tolerance: 1e-3,
            max_evaluations: 200,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Main JSON (evolve, optimize) or table/sequence file.
    pub result: Option<PathBuf>,
    /// Optimizer history CSV.
    pub history: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub molecule: MoleculeRef,
    pub trap: Option<TrapSpec>,
    pub profile: ProfileConfig,
    pub propagation: PropagationSettings,
    pub optimizer: OptimizerConfig,
    /// Reported next to gate durations; not used in any computation.
    pub coherence_time_us: Option<f64>,
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn trap(&self) -> TrapSpec {
        self.trap.clone().unwrap_or_else(TrapSpec::reference)
    }

    /// Profile at `tau`, with geometry from the trap unless overridden.
    pub fn profile_at(&self, tau: f64) -> Result<TrajectoryProfile> {
        let trap = self.trap();
        TrajectoryProfile::new(
            self.profile.kind,
            self.profile.alpha_um.unwrap_or(trap.alpha()),
            self.profile.beta_um.unwrap_or(trap.beta()),
            tau,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.molecule.resolve()?;
        self.trap().validate()?;
        self.propagation.validate()?;
        if let Some(t) = self.profile.tau_us {
            self.profile_at(t)?;
        }
        if let Some((lo, hi)) = self.profile.tau_bounds_us {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config(format!("bad tau bounds ({lo}, {hi})")));
            }
        }
        if let Some(t) = self.coherence_time_us {
            if !(t > 0.0) {
                return Err(Error::Config(format!("coherence time must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// JSON formatter that writes every float with 17 significant digits.
struct FixedFloatFormatter<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with floats at full round-trip precision.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FixedFloatFormatter(serde_json::ser::PrettyFormatter::with_indent(b"  "));
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Parser, Debug)]
#[command(name = "rotqudit", version, about = "Rotational-state qudit gates in polar molecule pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct PhysicsArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Molecule preset name.
    #[arg(long)]
    pub molecule: Option<String>,
    /// Highest rotational quantum number kept.
    #[arg(long)]
    pub j_max: Option<u32>,
}

#[derive(Args, Debug, Default)]
pub struct TrajectoryArgs {
    /// Profile kind: cosine, triangular, tanh or constant.
    #[arg(long)]
    pub kind: Option<ProfileKind>,
    /// Solver mode: secular or full.
    #[arg(long)]
    pub mode: Option<SolverMode>,
    /// Main output file (JSON).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rotational energies up to J_max.
    Spectrum {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// CSV output file (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Propagate the pair along one trajectory.
    Evolve {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[command(flatten)]
        trajectory: TrajectoryArgs,
        /// Trajectory duration τ in μs.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Search τ maximizing the iSWAP fidelity.
    Optimize {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[command(flatten)]
        trajectory: TrajectoryArgs,
        /// Search interval in μs.
        #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
        bounds: Option<Vec<f64>>,
        /// History CSV file.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Synthesize a gate into native operations.
    Compile {
        /// Gate name (identity, z, cnot, p, iswap-0anc, w, cnz, toffoli,
        /// intra-iswap, inter-cnot, c3z-ququint).
        gate: String,
        #[arg(long)]
        encoding: Option<Encoding>,
        /// Qubit count for cnz/toffoli.
        #[arg(long, short, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value = "linear")]
        layout: Layout,
        /// Explicit qudit operands, comma separated.
        #[arg(long, value_delimiter = ',')]
        qudits: Option<Vec<usize>>,
        /// Qubit slots inside two-qubit qudits, comma separated.
        #[arg(long, value_delimiter = ',')]
        slots: Option<Vec<usize>>,
        /// Phase of the hardware entangler (+i or -i).
        #[arg(long, default_value = "+i", allow_hyphen_values = true)]
        branch: PhaseBranch,
        /// Sequence file (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a sequence file against a gate's truth table.
    Verify {
        sequence: PathBuf,
        /// Expected gate name.
        #[arg(long)]
        gate: String,
        /// Overrides the file's encoding header.
        #[arg(long)]
        encoding: Option<Encoding>,
        #[arg(long, default_value = "linear")]
        layout: Layout,
        #[arg(long, value_delimiter = ',')]
        qudits: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        slots: Option<Vec<usize>>,
        #[arg(long, default_value = "+i", allow_hyphen_values = true)]
        branch: PhaseBranch,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// JSON report file.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn load_config(physics: &PhysicsArgs) -> Result<RunConfig> {
    let mut cfg = match &physics.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &physics.molecule {
        cfg.molecule = MoleculeRef::Preset(m.clone());
    }
    if let Some(j) = physics.j_max {
        cfg.propagation.j_max = j;
    }
    Ok(cfg)
}

fn apply_trajectory(cfg: &mut RunConfig, t: &TrajectoryArgs) {
    if let Some(k) = t.kind {
        cfg.profile.kind = k;
    }
    if let Some(m) = t.mode {
        cfg.propagation.mode = m;
    }
    if let Some(o) = &t.out {
        cfg.output.result = Some(o.clone());
    }
}

/// Error category to exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Json(_) | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_COMPUTE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::Search { history, .. } = &e {
                let _ = writeln!(err, "evaluations: {}", history.len());
            }
            exit_code(&e)
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Spectrum { physics, out: path } => cmd_spectrum(&load_config(&physics)?, path.as_deref(), out),
        Command::Evolve { physics, trajectory, tau } => {
            let mut cfg = load_config(&physics)?;
            apply_trajectory(&mut cfg, &trajectory);
            if let Some(t) = tau {
                cfg.profile.tau_us = Some(t);
            }
            cmd_evolve(&cfg, out)
        }
        Command::Optimize {
            physics,
            trajectory,
            bounds,
            history,
        } => {
            let mut cfg = load_config(&physics)?;
            apply_trajectory(&mut cfg, &trajectory);
            if let Some(b) = bounds {
                cfg.profile.tau_bounds_us = Some((b[0], b[1]));
            }
            if let Some(h) = history {
                cfg.output.history = Some(h);
            }
            cmd_optimize(&cfg, out)
        }
        Command::Compile {
            gate,
            encoding,
            n,
            layout,
            qudits,
            slots,
            branch,
            out: path,
        } => {
            let spec = gate_spec(&gate, n, layout, qudits.as_deref(), slots.as_deref())?;
            let circuit = cmd_compile(&spec, encoding, branch)?;
            write_output(path.as_deref(), &circuit.to_text(), out)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            sequence,
            gate,
            encoding,
            layout,
            qudits,
            slots,
            branch,
            tolerance,
            out: path,
        } => {
            let text = fs::read_to_string(&sequence)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", sequence.display())))?;
            let default_enc = encoding.unwrap_or(Encoding::Qubit);
            let mut circuit = QuditCircuit::from_text(&text, default_enc)?;
            if let Some(e) = encoding {
                circuit.encoding = e;
            }
            let spec = gate_spec(&gate, circuit.num_qudits, layout, qudits.as_deref(), slots.as_deref())?;
            if spec.num_qudits() > circuit.num_qudits {
                circuit.num_qudits = spec.num_qudits();
            }
            let v = verify_circuit(&circuit, &spec, branch, tolerance)?;
            writeln!(
                out,
                "{} {} fidelity={:.17e} deviation={:.3e} leakage={:.3e} entanglers={}",
                if v.passed { "PASS" } else { "FAIL" },
                v.gate,
                v.fidelity,
                v.max_deviation,
                v.leakage,
                v.entangler_count
            )?;
            if let Some(p) = path {
                fs::write(p, to_json_string(&v)?)?;
            }
            Ok(if v.passed { EXIT_OK } else { EXIT_COMPUTE })
        }
    }
}

fn gate_spec(name: &str, n: usize, layout: Layout, qudits: Option<&[usize]>, slots: Option<&[usize]>) -> Result<GateSpec> {
    let base = GateSpec::by_name(name, n, layout)?;
    match (qudits, slots) {
        (None, None) => Ok(base),
        _ => {
            let default: Vec<usize> = match &base {
                GateSpec::Cnz { qudits, .. } | GateSpec::Toffoli { qudits, .. } => qudits.clone(),
                GateSpec::Identity { num_qudits } => (0..*num_qudits).collect(),
                GateSpec::Z { .. } | GateSpec::P { .. } | GateSpec::IntraIswap { .. } => vec![0],
                _ => vec![0, 1],
            };
            GateSpec::with_operands(name, qudits.unwrap_or(&default), slots.unwrap_or(&[]), layout)
        }
    }
}

/// CSV table `J,energy_invcm,energy_rad_s` for J = 0..=J_max.
pub fn spectrum_table(spec: &MoleculeSpec, j_max: u32) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["J", "energy_invcm", "energy_rad_s"])?;
    for j in 0..=j_max {
        let jj = f64::from(j) * f64::from(j + 1);
        w.write_record([
            j.to_string(),
            format!("{:.16e}", spec.rotational_constant * jj),
            format!("{:.16e}", rot_energy(spec, j)),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

pub fn cmd_spectrum(cfg: &RunConfig, path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.molecule.resolve()?;
    let table = spectrum_table(&spec, cfg.propagation.j_max)?;
    write_output(path.or(cfg.output.result.as_deref()), &table, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_evolve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    cfg.validate()?;
    let tau = cfg
        .profile
        .tau_us
        .ok_or_else(|| Error::Config("evolve needs profile.tau_us or --tau".into()))?;
    let spec = cfg.molecule.resolve()?;
    let profile = cfg.profile_at(tau)?;
    let result = propagate(&spec, &profile, &cfg.propagation)?;
    writeln!(out, "f_iswap           {:.17e}", result.f_iswap)?;
    writeln!(out, "f_id              {:.17e}", result.f_id)?;
    writeln!(out, "phase_branch      {}", result.phase_branch)?;
    writeln!(out, "unitarity_defect  {:.3e}", result.unitarity_defect)?;
    writeln!(out, "leakage           {:.3e}", result.leakage)?;
    writeln!(out, "pulse_area        {:.17e}", result.pulse_area)?;
    writeln!(out, "duration_us       {tau}")?;
    if let Some(t2) = cfg.coherence_time_us {
        writeln!(out, "coherence_time_us {t2}")?;
        writeln!(out, "duration/coherence {:.3e}", tau / t2)?;
    }
    if let Some(p) = &cfg.output.result {
        fs::write(p, to_json_string(&result)?)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_optimize(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    cfg.validate()?;
    let spec = cfg.molecule.resolve()?;
    let trap = cfg.trap();
    let bounds = cfg.profile.tau_bounds_us.unwrap_or((1.0, 1.0e4));
    let mut problem = OptimizationProblem::new(spec, trap, cfg.profile.kind, bounds);
    problem.settings = cfg.propagation.clone();
    problem.constraint_factor = cfg.optimizer.constraint_factor;
    problem.relative_tolerance = cfg.optimizer.relative_tolerance;
    problem.max_evaluations = cfg.optimizer.max_evaluations;
    match optimize_tau(&problem) {
        Ok(report) => {
            writeln!(out, "best_tau_us       {:.17e}", report.best_tau)?;
            writeln!(out, "best_fidelity     {:.17e}", report.best_fidelity)?;
            writeln!(out, "phase_branch      {}", report.phase_branch)?;
            writeln!(out, "evaluations       {}", report.evaluations)?;
            writeln!(
                out,
                "final_bracket_us  {:.17e} {:.17e}",
                report.final_bracket.0, report.final_bracket.1
            )?;
            if let Some(p) = &cfg.output.result {
                fs::write(p, to_json_string(&report)?)?;
            }
            if let Some(p) = &cfg.output.history {
                report.write_history_csv(fs::File::create(p)?)?;
            }
            Ok(EXIT_OK)
        }
        Err(Error::Search { msg, history }) => {
            // Keep the failed search on disk so it can be inspected.
            if let Some(p) = &cfg.output.history {
                let mut w = csv::Writer::from_path(p)?;
                w.write_record(["tau_us", "fidelity"])?;
                for (t, f) in &history {
                    w.write_record([format!("{t:.16e}"), format!("{f:.16e}")])?;
                }
                w.flush()?;
            }
            if let Some(p) = &cfg.output.result {
                let failure = serde_json::json!({ "error": msg, "history": history });
                fs::write(p, to_json_string(&failure)?)?;
            }
            Err(Error::Search { msg, history })
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_compile(gate: &GateSpec, encoding: Option<Encoding>, branch: PhaseBranch) -> Result<QuditCircuit> {
    let enc = encoding.unwrap_or_else(|| gate.default_encoding());
    compile(gate, enc, CompileOptions { physical_branch: branch })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with_args(std::iter::once("rotqudit").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn spectrum_rows() {
        let (code, out, _) = run_str(&["spectrum", "--j-max", "3"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().collect();
        assert_eq!(rows.len(), 5);
        let b = MoleculeSpec::srf().rotational_constant;
        let e3: f64 = rows[4].split(',').nth(1).unwrap().parse().unwrap();
        assert!((e3 - 12.0 * b).abs() < 1e-12 * b);
        let (code, out, _) = run_str(&["spectrum", "--j-max", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.0);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["spectrum", "--molecule", "unobtainium"]).0, 2);
        assert_eq!(run_str(&["compile", "frobnicate"]).0, 2);
        assert_eq!(run_str(&["nonsense"]).0, 2);
        assert_eq!(run_str(&["evolve"]).0, 2);
        assert_eq!(run_str(&["--help"]).0, 0);
    }

    #[test]
    fn json_floats_have_17_digits() {
        let s = to_json_string(&serde_json::json!({"x": 0.1, "v": [1.0, -2.5e-300]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn config_defaults_and_rejects_unknown_fields() {
        let cfg = RunConfig::from_json_str(r#"{"molecule": "rbcs", "profile": {"kind": "tanh", "tau_us": 495.73}}"#).unwrap();
        assert_eq!(cfg.molecule.resolve().unwrap().name, MoleculeSpec::rbcs().name);
        assert_eq!(cfg.trap(), TrapSpec::reference());
        cfg.validate().unwrap();
        assert!(RunConfig::from_json_str(r#"{"molecule": "srf", "proflie": {}}"#).is_err());
        let bad = RunConfig::from_json_str(r#"{"profile": {"kind": "cosine", "tau_us": -1}}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn compile_operands() {
        let g = gate_spec("inter-cnot", 3, Layout::Linear, Some(&[1, 0]), Some(&[1, 0])).unwrap();
        assert_eq!(g.num_qudits(), 2);
        assert!(gate_spec("cnot", 3, Layout::Linear, Some(&[0]), None).is_err());
    }
}
