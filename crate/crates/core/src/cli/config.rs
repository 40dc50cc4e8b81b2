//! Run configuration in TOML.
//!
//! ```toml
//! scenario = "discrete"
//!
//! [kernel]
//! pointers = ["a", "b"]
//! rows = [[0.7, 0.3], [0.4, 0.6]]
//! q0 = [0.5, 0.5]
//!
//! [run]
//! steps = 300
//! trajectories = 100
//! seed = 7
//! ```
//!
//! Exactly one model section (`kernel`, `diffusive`, `jump`, `apparatus`)
//! must be present, except for the `calibrate` scenario which reads
//! `[calibrate]` instead. Problems are reported with dotted field paths.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::kernel::{MeasurementKernel, PointerDistribution};
use crate::linalg::{hermiticity_error, CMatrix, ComplexMatrixRepr, ComplexVectorRepr};
use crate::quantum::{DensityMatrix, QuantumApparatus};
use crate::scaling::{DiffusiveModel, JumpModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Discrete,
    Diffusive,
    Jump,
    Quantum,
    BelavkinDiffusive,
    BelavkinJump,
    Validate,
    Calibrate,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Discrete,
        Scenario::Diffusive,
        Scenario::Jump,
        Scenario::Quantum,
        Scenario::BelavkinDiffusive,
        Scenario::BelavkinJump,
        Scenario::Validate,
        Scenario::Calibrate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Discrete => "discrete",
            Scenario::Diffusive => "diffusive",
            Scenario::Jump => "jump",
            Scenario::Quantum => "quantum",
            Scenario::BelavkinDiffusive => "belavkin-diffusive",
            Scenario::BelavkinJump => "belavkin-jump",
            Scenario::Validate => "validate",
            Scenario::Calibrate => "calibrate",
        }
    }

    /// Model sections the scenario accepts.
    fn accepts(self, section: Section) -> bool {
        use Section::*;
        match self {
            Scenario::Discrete => matches!(section, Kernel | Apparatus),
            Scenario::Diffusive => matches!(section, Diffusive | Apparatus),
            Scenario::Jump => matches!(section, Jump | Apparatus),
            Scenario::Quantum | Scenario::BelavkinDiffusive | Scenario::BelavkinJump => {
                section == Apparatus
            }
            Scenario::Validate => true,
            Scenario::Calibrate => false,
        }
    }

    /// Continuous-time scenarios need `horizon` and `dt` rather than `steps`.
    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            Scenario::Diffusive | Scenario::Jump | Scenario::BelavkinDiffusive | Scenario::BelavkinJump
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown scenario `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Kernel,
    Diffusive,
    Jump,
    Apparatus,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Kernel => "kernel",
            Section::Diffusive => "diffusive",
            Section::Jump => "jump",
            Section::Apparatus => "apparatus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<RawKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusive: Option<RawDiffusive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<RawJump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apparatus: Option<RawApparatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<RawCalibrate>,
    #[serde(default)]
    pub run: RawRun,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<RawOutput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKernel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointers: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDiffusive {
    pub p0: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawJump {
    pub star: usize,
    pub outcomes: usize,
    /// Intensities per pointer, over the outcomes other than `star`.
    pub theta: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawApparatus {
    pub energies: Vec<f64>,
    /// One `H_α` per pointer state.
    pub blocks: Vec<ComplexMatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_hamiltonian: Option<ComplexMatrixRepr>,
    pub probe_state: ComplexVectorRepr,
    pub probe_basis: Vec<ComplexVectorRepr>,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<ComplexMatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCalibrate {
    pub runs: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

/// The validated model of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Kernel {
        kernel: MeasurementKernel,
        q0: PointerDistribution,
    },
    Diffusive {
        model: DiffusiveModel,
        q0: PointerDistribution,
    },
    Jump {
        model: JumpModel,
        q0: PointerDistribution,
    },
    Apparatus {
        apparatus: QuantumApparatus,
        rho0: DensityMatrix,
    },
    Calibrate {
        runs: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Predictive,
    Conditioned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub steps: Option<usize>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub trajectories: Option<usize>,
    pub seed: u64,
    pub stride: usize,
    pub mode: Mode,
    pub collapse_threshold: Option<f64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub model: ModelConfig,
    pub run: RunSettings,
    pub output_dir: Option<PathBuf>,
    raw: RawConfig,
}

impl RunConfig {
    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    /// Canonical TOML text of this configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.raw).expect("raw configuration serializes")
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |p| before[p + 1..].chars().count()) + 1;
    (line, col)
}

#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue::new(path, message));
    }
}

fn distribution(issues: &mut Issues, path: &str, weights: Option<&Vec<f64>>, len: usize) -> Option<PointerDistribution> {
    match weights {
        None => Some(PointerDistribution::uniform(len)),
        Some(w) if w.len() != len => {
            issues.push(path, format!("{} weights for {len} pointer states", w.len()));
            None
        }
        Some(w) => match PointerDistribution::new(w.clone()) {
            Ok(d) => Some(d),
            Err(e) => {
                issues.push(path, e.to_string());
                None
            }
        },
    }
}

fn matrix(issues: &mut Issues, path: &str, repr: &ComplexMatrixRepr, n: usize, hermitian: bool) -> Option<CMatrix> {
    let m = match repr.to_matrix() {
        Ok(m) => m,
        Err(e) => {
            issues.push(path, e.to_string());
            return None;
        }
    };
    if m.nrows() != n || m.ncols() != n {
        issues.push(path, format!("is {}×{}, expected {n}×{n}", m.nrows(), m.ncols()));
        return None;
    }
    if hermitian {
        let err = hermiticity_error(&m);
        if err > 1e-12 {
            issues.push(path, format!("not Hermitian (largest |H − H†| entry {err:e})"));
            return None;
        }
    }
    Some(m)
}

fn vector(issues: &mut Issues, path: &str, repr: &ComplexVectorRepr, n: usize) -> Option<crate::linalg::CVector> {
    match repr.to_vector() {
        Ok(v) if v.len() == n => Some(v),
        Ok(v) => {
            issues.push(path, format!("has {} entries, expected {n}", v.len()));
            None
        }
        Err(e) => {
            issues.push(path, e.to_string());
            None
        }
    }
}

fn kernel_section(issues: &mut Issues, raw: &RawKernel) -> Option<ModelConfig> {
    let rows = raw.rows.len();
    let cols = raw.rows.first().map_or(0, Vec::len);
    let mut ok = true;
    if rows == 0 || cols == 0 {
        issues.push("kernel.rows", "must be a non-empty matrix");
        return None;
    }
    for (a, row) in raw.rows.iter().enumerate() {
        if row.len() != cols {
            issues.push(format!("kernel.rows[{a}]"), format!("has {} entries, expected {cols}", row.len()));
            ok = false;
        }
    }
    let pointers = raw.pointers.clone().unwrap_or_else(|| (0..rows).map(|a| a.to_string()).collect());
    if pointers.len() != rows {
        issues.push(
            "kernel.rows",
            format!("{rows} rows, but kernel.pointers lists {} labels", pointers.len()),
        );
        ok = false;
    }
    let outcomes = raw.outcomes.clone().unwrap_or_else(|| (0..cols).map(|i| i.to_string()).collect());
    if outcomes.len() != cols {
        issues.push(
            "kernel.rows",
            format!("{cols} columns, but kernel.outcomes lists {} labels", outcomes.len()),
        );
        ok = false;
    }
    let q0 = distribution(issues, "kernel.q0", raw.q0.as_ref(), rows);
    if !ok {
        return None;
    }
    let kernel = match MeasurementKernel::new(pointers, outcomes, raw.rows.clone()) {
        Ok(k) => k,
        Err(e) => {
            issues.push("kernel.rows", e.to_string());
            return None;
        }
    };
    Some(ModelConfig::Kernel { kernel, q0: q0? })
}

fn diffusive_section(issues: &mut Issues, raw: &RawDiffusive) -> Option<ModelConfig> {
    let q0 = distribution(issues, "diffusive.q0", raw.q0.as_ref(), raw.gamma.len());
    match DiffusiveModel::new(raw.p0.clone(), raw.gamma.clone()) {
        Ok(model) => Some(ModelConfig::Diffusive { model, q0: q0? }),
        Err(e) => {
            issues.push("diffusive.gamma", e.to_string());
            None
        }
    }
}

fn jump_section(issues: &mut Issues, raw: &RawJump) -> Option<ModelConfig> {
    let q0 = distribution(issues, "jump.q0", raw.q0.as_ref(), raw.theta.len());
    match JumpModel::new(raw.star, raw.outcomes, raw.theta.clone()) {
        Ok(model) => Some(ModelConfig::Jump { model, q0: q0? }),
        Err(e) => {
            issues.push("jump.theta", e.to_string());
            None
        }
    }
}

fn apparatus_section(issues: &mut Issues, raw: &RawApparatus) -> Option<ModelConfig> {
    let ds = raw.energies.len();
    let dp = raw.probe_state.re.len();
    if ds == 0 {
        issues.push("apparatus.energies", "must list at least one pointer energy");
    }
    if dp == 0 {
        issues.push("apparatus.probe_state", "must be non-empty");
    }
    if ds == 0 || dp == 0 {
        return None;
    }
    if raw.blocks.len() != ds {
        issues.push(
            "apparatus.blocks",
            format!("{} blocks for {ds} pointer energies", raw.blocks.len()),
        );
    }
    let blocks: Vec<Option<CMatrix>> = raw
        .blocks
        .iter()
        .enumerate()
        .map(|(a, b)| matrix(issues, &format!("apparatus.blocks[{a}]"), b, dp, true))
        .collect();
    let probe_hamiltonian = match &raw.probe_hamiltonian {
        None => Some(CMatrix::zeros(dp, dp)),
        Some(h) => matrix(issues, "apparatus.probe_hamiltonian", h, dp, true),
    };
    let probe_state = vector(issues, "apparatus.probe_state", &raw.probe_state, dp);
    if raw.probe_basis.len() != dp {
        issues.push(
            "apparatus.probe_basis",
            format!("{} vectors for probe dimension {dp}", raw.probe_basis.len()),
        );
    }
    let basis: Vec<Option<_>> = raw
        .probe_basis
        .iter()
        .enumerate()
        .map(|(i, b)| vector(issues, &format!("apparatus.probe_basis[{i}]"), b, dp))
        .collect();
    let rho0 = match (&raw.rho0, &raw.q0) {
        (Some(_), Some(_)) => {
            issues.push("apparatus.q0", "give either rho0 or q0, not both");
            None
        }
        (Some(r), None) => matrix(issues, "apparatus.rho0", r, ds, false).and_then(|m| {
            DensityMatrix::new(m)
                .map_err(|e| issues.push("apparatus.rho0", e.to_string()))
                .ok()
        }),
        (None, q0) => distribution(issues, "apparatus.q0", q0.as_ref(), ds)
            .map(|q| DensityMatrix::from_diagonal(q.weights()).expect("diagonal of a distribution")),
    };
    if raw.blocks.len() != ds || raw.probe_basis.len() != dp {
        return None;
    }
    let blocks: Option<Vec<CMatrix>> = blocks.into_iter().collect();
    let basis: Option<Vec<_>> = basis.into_iter().collect();
    let (blocks, basis, probe_hamiltonian, probe_state) = (blocks?, basis?, probe_hamiltonian?, probe_state?);
    let apparatus = match QuantumApparatus::new(
        raw.energies.clone(),
        blocks,
        probe_hamiltonian,
        probe_state,
        basis,
        raw.delta,
    ) {
        Ok(a) => a,
        Err(e) => {
            issues.push("apparatus", e.to_string());
            return None;
        }
    };
    Some(ModelConfig::Apparatus {
        apparatus,
        rho0: rho0?,
    })
}

fn run_section(issues: &mut Issues, scenario: Scenario, raw: &RawRun) -> RunSettings {
    let mode = match raw.mode.as_deref() {
        None | Some("predictive") => Mode::Predictive,
        Some("conditioned") => Mode::Conditioned,
        Some(other) => {
            issues.push("run.mode", format!("unknown mode `{other}`, expected predictive or conditioned"));
            Mode::Predictive
        }
    };
    if scenario.is_continuous() {
        if raw.horizon.is_none() {
            issues.push("run.horizon", format!("required for the {scenario} scenario"));
        }
        if raw.dt.is_none() {
            issues.push("run.dt", format!("required for the {scenario} scenario"));
        }
        if raw.steps.is_some() {
            issues.push("run.steps", format!("not used by the {scenario} scenario; set run.horizon"));
        }
    } else if matches!(scenario, Scenario::Discrete | Scenario::Quantum) && raw.steps.is_none() {
        issues.push("run.steps", format!("required for the {scenario} scenario"));
    }
    if let Some(h) = raw.horizon {
        if !(h > 0.0) {
            issues.push("run.horizon", "must be positive");
        }
    }
    if let Some(dt) = raw.dt {
        if !(dt > 0.0) {
            issues.push("run.dt", "must be positive");
        } else if let Some(h) = raw.horizon {
            if dt > h {
                issues.push("run.dt", "exceeds run.horizon");
            }
        }
    }
    if raw.steps == Some(0) {
        issues.push("run.steps", "must be at least 1");
    }
    if raw.trajectories == Some(0) {
        issues.push("run.trajectories", "must be at least 1");
    }
    if raw.stride == Some(0) {
        issues.push("run.stride", "must be at least 1");
    }
    if raw.threads == Some(0) {
        issues.push("run.threads", "must be at least 1");
    }
    if let Some(t) = raw.collapse_threshold {
        if !(t > 0.5 && t < 1.0) {
            issues.push("run.collapse_threshold", "must lie in (0.5, 1)");
        }
    }
    RunSettings {
        steps: raw.steps,
        horizon: raw.horizon,
        dt: raw.dt,
        trajectories: raw.trajectories,
        seed: raw.seed.unwrap_or(0),
        stride: raw.stride.unwrap_or(1),
        mode,
        collapse_threshold: raw.collapse_threshold,
        threads: raw.threads,
    }
}

/// Parses and validates a configuration, collecting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let path = match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                format!("{line}:{col}")
            }
            None => "config".to_string(),
        };
        Error::Config(vec![ConfigIssue::new(path, e.message().trim())])
    })?;
    validate_raw(raw)
}

pub fn validate_raw(raw: RawConfig) -> Result<RunConfig> {
    let mut issues = Issues::default();
    let scenario = match raw.scenario.parse::<Scenario>() {
        Ok(s) => s,
        Err(message) => return Err(Error::Config(vec![ConfigIssue::new("scenario", message)])),
    };
    let present: Vec<Section> = [
        (Section::Kernel, raw.kernel.is_some()),
        (Section::Diffusive, raw.diffusive.is_some()),
        (Section::Jump, raw.jump.is_some()),
        (Section::Apparatus, raw.apparatus.is_some()),
    ]
    .into_iter()
    .filter_map(|(s, on)| on.then_some(s))
    .collect();

    let model = if scenario == Scenario::Calibrate {
        for s in &present {
            issues.push(s.name(), "the calibrate scenario takes no model section");
        }
        match &raw.calibrate {
            Some(c) => Some(ModelConfig::Calibrate {
                runs: PathBuf::from(&c.runs),
            }),
            None => {
                issues.push("calibrate.runs", "required for the calibrate scenario");
                None
            }
        }
    } else {
        if raw.calibrate.is_some() {
            issues.push("calibrate", format!("not used by the {scenario} scenario"));
        }
        match present.as_slice() {
            [] => {
                issues.push("scenario", format!("the {scenario} scenario needs a model section"));
                None
            }
            [section] if !scenario.accepts(*section) => {
                issues.push(
                    section.name(),
                    format!("section not accepted by the {scenario} scenario"),
                );
                None
            }
            [section] => match section {
                Section::Kernel => kernel_section(&mut issues, raw.kernel.as_ref().expect("present")),
                Section::Diffusive => diffusive_section(&mut issues, raw.diffusive.as_ref().expect("present")),
                Section::Jump => jump_section(&mut issues, raw.jump.as_ref().expect("present")),
                Section::Apparatus => apparatus_section(&mut issues, raw.apparatus.as_ref().expect("present")),
            },
            many => {
                let names: Vec<&str> = many.iter().map(|s| s.name()).collect();
                issues.push(
                    names[1],
                    format!("ambiguous model: sections [{}] are all present; keep exactly one", names.join(", ")),
                );
                None
            }
        }
    };
    let run = run_section(&mut issues, scenario, &raw.run);
    if let Some(output) = &raw.output {
        if let Some(format) = &output.format {
            if format != "jsonl" {
                issues.push("output.format", format!("unsupported format `{format}`, expected jsonl"));
            }
        }
    }
    if !issues.0.is_empty() {
        return Err(Error::Config(issues.0));
    }
    Ok(RunConfig {
        scenario,
        model: model.expect("no issues implies a model"),
        run,
        output_dir: raw.output.as_ref().and_then(|o| o.dir.as_ref()).map(PathBuf::from),
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const K2: &str = r#"
scenario = "discrete"

[kernel]
pointers = ["a", "b"]
outcomes = ["0", "1"]
rows = [[0.7, 0.3], [0.4, 0.6]]
q0 = [0.5, 0.5]

[run]
steps = 300
trajectories = 100
seed = 7
"#;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(Error::Config(issues)) => issues,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn k2_round_trips() {
        let config = parse_config(K2).unwrap();
        assert_eq!(config.scenario, Scenario::Discrete);
        assert_eq!(config.run.steps, Some(300));
        let again = parse_config(&config.to_toml()).unwrap();
        assert_eq!(again, config);
    }

    #[test]
    fn label_mismatch_names_field() {
        let text = K2.replace("rows = [[0.7, 0.3], [0.4, 0.6]]", "rows = [[0.7, 0.3], [0.4, 0.6], [0.5, 0.5]]");
        let found = issues(&text);
        assert!(found.iter().any(|i| i.path == "kernel.rows" && i.message.contains("2 labels")));
    }

    #[test]
    fn duplicate_model_is_ambiguous() {
        let text = format!("{K2}\n[diffusive]\np0 = [0.5, 0.5]\ngamma = [[1.0, -1.0]]\n");
        let found = issues(&text);
        assert!(found.iter().any(|i| i.message.contains("ambiguous")));
    }

    #[test]
    fn unknown_field_has_location() {
        let text = K2.replace("seed = 7", "seed = 7\nsede = 8");
        let found = issues(&text);
        assert_eq!(found.len(), 1);
        assert!(found[0].path.starts_with("14:"), "{:?}", found[0]);
        assert!(found[0].message.contains("sede"));
    }

    #[test]
    fn non_hermitian_block_is_located() {
        let text = r#"
scenario = "quantum"
[apparatus]
energies = [0.0, 0.0]
blocks = [{ re = [[0.0, 1.0], [0.0, 0.0]] }, { re = [[0.0, 1.0], [1.0, 0.0]] }]
probe_state = { re = [1.0, 0.0] }
probe_basis = [{ re = [1.0, 0.0] }, { re = [0.0, 1.0] }]
delta = 0.01
[run]
steps = 10
"#;
        let found = issues(text);
        assert!(found.iter().any(|i| i.path == "apparatus.blocks[0]"), "{found:?}");
    }

    #[test]
    fn continuous_scenarios_need_horizon() {
        let text = "scenario = \"jump\"\n[jump]\nstar = 0\noutcomes = 2\ntheta = [[1.0], [2.0]]\n";
        let found = issues(text);
        assert!(found.iter().any(|i| i.path == "run.horizon"));
        assert!(found.iter().any(|i| i.path == "run.dt"));
    }
}
