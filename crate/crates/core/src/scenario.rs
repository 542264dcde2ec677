//! Battery case-study configuration and the figure pipelines.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backstepping::{transform, BacksteppingKernel, Direction, KernelParams};
use crate::detector::{
    calibrate_threshold, co_simulate, detect, evaluate_requirements, Calibration, Detection,
    DetectorSettings, FdGrid, Profile, RequirementReport, Scenario, Signal, Uncertainty,
};
use crate::error::{Error, Result};
use crate::lmi::{scan_design, DesignCertificate, InitialBounds, SearchSpace};
use crate::quadrature::max_abs;
use crate::spectral::{forward_solve, ForwardProblem, ModalBasis, ModalCoefficients, SampledSignal};
use crate::stealth::{
    assemble_volterra, perturbation_study, solve_volterra2, write_perturbation_csv, StealthProblem,
};

/// Quadrature nodes used to project profiles onto the cosine basis.
const PROJECTION_NODES: usize = 8193;
/// Snapshot files hold this many time slices.
const SNAPSHOT_SLICES: usize = 10;
const SNAPSHOT_NODES: usize = 101;
/// Floor for the lower bound on `|ψ(1,0)|`.
const BOUNDARY_FLOOR: f64 = 1e-6;
const PERTURBATION_GAMMAS: [f64; 2] = [1e-2, 1e-4];
const PERTURBATION_SIZE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Fig1,
    Fig2,
    Fig3Nominal,
    Fig3Uncertainty,
    Fig3Attack,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Fig1,
        ScenarioKind::Fig2,
        ScenarioKind::Fig3Nominal,
        ScenarioKind::Fig3Uncertainty,
        ScenarioKind::Fig3Attack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Fig1 => "fig1",
            ScenarioKind::Fig2 => "fig2",
            ScenarioKind::Fig3Nominal => "fig3-nominal",
            ScenarioKind::Fig3Uncertainty => "fig3-uncertainty",
            ScenarioKind::Fig3Attack => "fig3-attack",
        }
    }

    pub fn is_detection(self) -> bool {
        matches!(
            self,
            ScenarioKind::Fig3Nominal | ScenarioKind::Fig3Uncertainty | ScenarioKind::Fig3Attack
        )
    }

    fn default_horizon(self) -> f64 {
        if self.is_detection() {
            30.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(unknown_scenario(s)))
    }
}

fn unknown_scenario(s: &str) -> String {
    let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
    format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
}

impl Serialize for ScenarioKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ScenarioKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| serde::de::Error::custom(unknown_scenario(&s)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub magnitude: f64,
    pub rate: f64,
    pub onset: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            magnitude: 0.0015,
            rate: 0.0003,
            onset: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Defaults to 1 for fig1/fig2 and 30 for the detection scenarios.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub dt: f64,
    pub n_modes: usize,
    pub grid_nodes: usize,
    pub record_every: usize,
    pub blend_kappa: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            dt: 1e-3,
            n_modes: 64,
            grid_nodes: 101,
            record_every: 10,
            blend_kappa: crate::stealth::DEFAULT_BLEND_KAPPA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub uncertainty_amplitude: f64,
    pub seed: u64,
    pub calibration_runs: usize,
    pub arm_time: f64,
    pub debounce: usize,
    /// Required by the detection scenarios; relative paths resolve against
    /// the configuration file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PathBuf>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            uncertainty_amplitude: 8e-6,
            seed: 0,
            calibration_runs: 10,
            arm_time: 5.0,
            debounce: crate::detector::DEFAULT_DEBOUNCE,
            certificate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub search: SearchSpace,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            beta1: 4.0,
            beta2: 5.0,
            search: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyConfig {
    pub scenario: ScenarioKind,
    pub output_dir: PathBuf,
    /// Battery gain, `D(x) ≡ K`.
    #[serde(rename = "K", default = "one")]
    pub gain: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Nominal heat generation `q`.
    #[serde(default = "one")]
    pub current: f64,
    #[serde(default = "nominal_temperature")]
    pub initial_temperature: f64,
    #[serde(default = "attacked_temperature")]
    pub attacked_temperature: f64,
    #[serde(default = "observer_temperature")]
    pub observer_temperature: f64,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub design: DesignConfig,
}

fn one() -> f64 {
    1.0
}

fn nominal_temperature() -> f64 {
    298.0
}

fn attacked_temperature() -> f64 {
    290.0
}

fn observer_temperature() -> f64 {
    297.0
}

pub const REQUIRED_KEYS: [&str; 2] = ["scenario", "output_dir"];

impl CaseStudyConfig {
    /// Defaults for every optional key.
    pub fn new(scenario: ScenarioKind, output_dir: impl Into<PathBuf>) -> Self {
        let mut text = toml::Table::new();
        text.insert("scenario".into(), scenario.name().into());
        text.insert(
            "output_dir".into(),
            output_dir.into().to_string_lossy().into_owned().into(),
        );
        Self::from_table(text).expect("default configuration is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !table.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
        }
        let config: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().replace('\n', " ")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn horizon(&self) -> f64 {
        self.numerics.horizon.unwrap_or_else(|| self.scenario.default_horizon())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let positive = [
            ("K", self.gain),
            ("initial_temperature", self.initial_temperature),
            ("attacked_temperature", self.attacked_temperature),
            ("observer_temperature", self.observer_temperature),
            ("numerics.dt", self.numerics.dt),
            ("numerics.blend_kappa", self.numerics.blend_kappa),
            ("design.beta1", self.design.beta1),
            ("design.beta2", self.design.beta2),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{key} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("attack.rate", self.attack.rate),
            ("attack.onset", self.attack.onset),
            ("detector.uncertainty_amplitude", self.detector.uncertainty_amplitude),
            ("detector.arm_time", self.detector.arm_time),
        ];
        for (key, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{key} must be non-negative, got {v}"));
            }
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("current", self.current),
            ("attack.magnitude", self.attack.magnitude),
        ] {
            if !v.is_finite() {
                return bad(format!("{key} must be finite"));
            }
        }
        if let Some(h) = self.numerics.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("numerics.horizon must be positive, got {h}"));
            }
        }
        if self.horizon() < self.numerics.dt {
            return bad("numerics.horizon must be at least one time step".into());
        }
        for (key, v, min) in [
            ("numerics.n_modes", self.numerics.n_modes, 1),
            ("numerics.grid_nodes", self.numerics.grid_nodes, crate::detector::MIN_NODES),
            ("numerics.record_every", self.numerics.record_every, 1),
            ("detector.calibration_runs", self.detector.calibration_runs, 1),
            ("detector.debounce", self.detector.debounce, 1),
        ] {
            if v < min {
                return bad(format!("{key} must be at least {min}, got {v}"));
            }
        }
        if self.numerics.grid_nodes < crate::backstepping::MIN_TRANSFORM_NODES {
            return bad("numerics.grid_nodes too small for the transform".into());
        }
        Ok(())
    }

    pub fn detector_settings(&self) -> DetectorSettings {
        DetectorSettings {
            arm_time: self.detector.arm_time,
            debounce: self.detector.debounce,
            ..DetectorSettings::default()
        }
    }

    pub fn grid(&self) -> Result<FdGrid> {
        FdGrid::new(self.numerics.grid_nodes, self.numerics.dt)
    }

    /// Detection scenario of the given kind with observer gains for `c`.
    pub fn detection_scenario(&self, kind: ScenarioKind, c: f64) -> Scenario {
        let uniform = |value| Profile::Constant { value };
        let noisy = matches!(kind, ScenarioKind::Fig3Uncertainty | ScenarioKind::Fig3Attack);
        Scenario {
            c,
            alpha: self.alpha,
            initial: uniform(self.initial_temperature),
            observer_initial: uniform(self.observer_temperature),
            input: Signal::Constant { value: self.current },
            input_dist: uniform(self.gain),
            attack: if kind == ScenarioKind::Fig3Attack {
                Signal::SaturatingRamp {
                    magnitude: self.attack.magnitude,
                    rate: self.attack.rate,
                    onset: self.attack.onset,
                }
            } else {
                Signal::Zero
            },
            attack_dist: uniform(self.gain),
            uncertainty: if noisy {
                Uncertainty::seeded(self.detector.uncertainty_amplitude, self.detector.seed)
            } else {
                Uncertainty::none()
            },
            horizon: self.horizon(),
            record_every: self.numerics.record_every,
            inject: true,
        }
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<CaseStudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut config = CaseStudyConfig::parse(&text)?;
    if let Some(cert) = &config.detector.certificate {
        if cert.is_relative() {
            if let Some(dir) = path.parent() {
                config.detector.certificate = Some(dir.join(cert));
            }
        }
    }
    Ok(config)
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    fn extend(&mut self, other: RunOutput) {
        self.files.extend(other.files);
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn write_pairs(path: &Path, header: [&str; 2], rows: impl Iterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn basis(config: &CaseStudyConfig) -> Result<ModalBasis> {
    ModalBasis::nonconforming(config.alpha, config.numerics.n_modes)
}

fn uniform(value: f64, config: &CaseStudyConfig) -> Result<ModalCoefficients> {
    ModalCoefficients::from_fn(|_| value, config.numerics.n_modes, PROJECTION_NODES)
}

/// Runs the scenario named in the configuration.
pub fn run_scenario(config: &CaseStudyConfig) -> Result<RunOutput> {
    prepare_dir(&config.output_dir)?;
    match config.scenario {
        ScenarioKind::Fig1 => run_fig1(config),
        ScenarioKind::Fig2 => run_fig2(config),
        kind => {
            let path = config.detector.certificate.as_ref().ok_or_else(|| {
                Error::Config(format!("scenario {kind} needs detector.certificate"))
            })?;
            let cert = DesignCertificate::read(path)?;
            let threshold = calibrate(config, &cert)?;
            run_detection(config, kind, &cert, &threshold)
        }
    }
}

/// Nominal constant-current response: `fig1_snapshots.csv` (`t,x,u`) and
/// `fig1_output.csv` (`t,y`).
pub fn run_fig1(config: &CaseStudyConfig) -> Result<RunOutput> {
    prepare_dir(&config.output_dir)?;
    let horizon = config.horizon();
    let problem = ForwardProblem::free(basis(config)?, uniform(config.initial_temperature, config)?).with_input(
        uniform(config.gain, config)?,
        SampledSignal::constant(config.current, 0.0, horizon, config.numerics.dt)?,
    );
    let traj = forward_solve(&problem, horizon, config.numerics.dt)?;
    let snapshots = config.output_dir.join("fig1_snapshots.csv");
    let stride = (traj.states.len().saturating_sub(1) / SNAPSHOT_SLICES).max(1);
    traj.write_snapshots_csv(&snapshots, stride, SNAPSHOT_NODES)?;
    let output = config.output_dir.join("fig1_output.csv");
    write_pairs(&output, ["t", "y"], traj.times().into_iter().zip(traj.boundary_outputs()))?;
    Ok(RunOutput {
        files: vec![snapshots, output],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StealthSummary {
    pub kappa: f64,
    pub transient_end: f64,
    pub initial_mismatch: f64,
    /// Max `|y_attacked − y_nominal|` for `t > transient_end`.
    pub gap_after_transient: f64,
    pub peak_attack: f64,
}

/// Stealthy pulse: attack synthesized so that the plant started at
/// `attacked_temperature` reproduces the nominal output from
/// `initial_temperature`.
pub fn run_fig2(config: &CaseStudyConfig) -> Result<RunOutput> {
    prepare_dir(&config.output_dir)?;
    let horizon = config.horizon();
    let dt = config.numerics.dt;
    let basis = basis(config)?;
    let d = uniform(config.gain, config)?;
    let q = SampledSignal::constant(config.current, 0.0, horizon, dt)?;

    let free_nominal = forward_solve(
        &ForwardProblem::free(basis.clone(), uniform(config.initial_temperature, config)?),
        horizon,
        dt,
    )?;
    let target = free_nominal.output_signal()?;
    let phi1 = uniform(config.attacked_temperature, config)?;
    let (problem, blend) =
        StealthProblem::blended(basis.clone(), phi1.clone(), &target, d.clone(), config.numerics.blend_kappa)?;
    let sys = assemble_volterra(&problem, dt, horizon)?;
    let delta = solve_volterra2(&sys)?;

    let attacked = forward_solve(
        &ForwardProblem::free(basis.clone(), phi1.clone())
            .with_input(d.clone(), q.clone())
            .with_attack(d.clone(), delta.clone()),
        horizon,
        dt,
    )?;
    let nominal = forward_solve(
        &ForwardProblem::free(basis, uniform(config.initial_temperature, config)?).with_input(d, q),
        horizon,
        dt,
    )?;
    let ya = attacked.boundary_outputs();
    let yn = nominal.boundary_outputs();
    let times = attacked.times();
    let gap = times
        .iter()
        .zip(ya.iter().zip(&yn))
        .filter(|(t, _)| **t > blend.transient_end)
        .fold(0.0f64, |m, (_, (a, b))| m.max((a - b).abs()));

    let dir = &config.output_dir;
    let attack_csv = dir.join("fig2_attack.csv");
    write_pairs(&attack_csv, ["t", "delta"], delta.times().zip(delta.values().iter().copied()))?;
    let attacked_csv = dir.join("fig2_attacked.csv");
    write_pairs(&attacked_csv, ["t", "y"], times.iter().copied().zip(ya.iter().copied()))?;
    let nominal_csv = dir.join("fig2_nominal.csv");
    write_pairs(&nominal_csv, ["t", "y"], nominal.times().into_iter().zip(yn.iter().copied()))?;

    let phi_tilde = phi1.scaled(1.0 + PERTURBATION_SIZE);
    let rows = PERTURBATION_GAMMAS
        .iter()
        .map(|&g| perturbation_study(&problem, &phi_tilde, g, dt, horizon))
        .collect::<Result<Vec<_>>>()?;
    let perturbation_csv = dir.join("fig2_perturbation.csv");
    write_perturbation_csv(&perturbation_csv, &rows)?;

    let summary_path = dir.join("fig2_summary.toml");
    write_toml(
        &summary_path,
        &StealthSummary {
            kappa: blend.kappa,
            transient_end: blend.transient_end,
            initial_mismatch: blend.mismatch,
            gap_after_transient: gap,
            peak_attack: max_abs(delta.values()),
        },
    )?;
    Ok(RunOutput {
        files: vec![attack_csv, attacked_csv, nominal_csv, perturbation_csv, summary_path],
    })
}

/// Initial-condition bounds of the target-coordinate error for observer
/// gain `c`.
pub fn initial_bounds(config: &CaseStudyConfig, c: f64) -> Result<InitialBounds> {
    let kernel = BacksteppingKernel::new(KernelParams::new(c, config.alpha)?)?;
    let err = vec![config.initial_temperature - config.observer_temperature; config.numerics.grid_nodes];
    let psi0 = transform(&err, &kernel, Direction::ToTarget)?;
    InitialBounds::from_profile(&psi0, BOUNDARY_FLOOR)
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignSummary {
    pub candidates: usize,
    pub feasible: usize,
}

/// Scans the configured lattice and re-evaluates the winner with initial
/// bounds computed for its `c`. Writes `certificate.toml`.
pub fn run_design(config: &CaseStudyConfig) -> Result<(DesignCertificate, DesignSummary, PathBuf)> {
    prepare_dir(&config.output_dir)?;
    let provisional = InitialBounds::from_profile(
        &vec![config.initial_temperature - config.observer_temperature; config.numerics.grid_nodes],
        BOUNDARY_FLOOR,
    )?;
    let report = scan_design(
        config.alpha,
        config.design.beta1,
        config.design.beta2,
        &config.design.search,
        &provisional,
    )?;
    let bounds = initial_bounds(config, report.best.params.c)?;
    let cert = DesignCertificate::evaluate(&report.best.params, &bounds)?;
    let path = config.output_dir.join("certificate.toml");
    cert.write(&path)?;
    Ok((
        cert,
        DesignSummary {
            candidates: report.candidates,
            feasible: report.feasible,
        },
        path,
    ))
}

fn check_certificate(config: &CaseStudyConfig, cert: &DesignCertificate) -> Result<()> {
    if !cert.feasible {
        return Err(Error::Config("certificate is not feasible".into()));
    }
    if (cert.params.alpha - config.alpha).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "certificate was designed for alpha = {}, configuration has {}",
            cert.params.alpha, config.alpha
        )));
    }
    Ok(())
}

/// Threshold from attack-free runs with the configured uncertainty.
pub fn calibrate(config: &CaseStudyConfig, cert: &DesignCertificate) -> Result<Calibration> {
    check_certificate(config, cert)?;
    let base = config.detection_scenario(ScenarioKind::Fig3Uncertainty, cert.params.c);
    calibrate_threshold(&base, config.detector.calibration_runs, &config.grid()?, &config.detector_settings())
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionSummary {
    pub scenario: String,
    pub threshold: f64,
    pub calibration_peak: f64,
    pub calibration_seeds: Vec<u64>,
    pub uncertainty: String,
    pub detection: Detection,
    pub requirements: RequirementReport,
}

/// One detection trace `<scenario>.csv` plus `<scenario>_summary.toml`.
pub fn run_detection(
    config: &CaseStudyConfig,
    kind: ScenarioKind,
    cert: &DesignCertificate,
    calibration: &Calibration,
) -> Result<RunOutput> {
    check_certificate(config, cert)?;
    prepare_dir(&config.output_dir)?;
    let scenario = config.detection_scenario(kind, cert.params.c);
    let mut trace = co_simulate(&scenario, &config.grid()?)?;
    let detection = detect(&trace, calibration.threshold, &config.detector_settings());
    trace.mark(&detection);
    let requirements = evaluate_requirements(&trace, cert)?;

    let stem = kind.name().replace('-', "_");
    let trace_path = config.output_dir.join(format!("{stem}.csv"));
    trace.write_csv(&trace_path)?;
    let summary_path = config.output_dir.join(format!("{stem}_summary.toml"));
    write_toml(
        &summary_path,
        &DetectionSummary {
            scenario: kind.name().into(),
            threshold: calibration.threshold,
            calibration_peak: calibration.peak,
            calibration_seeds: calibration.seeds.clone(),
            uncertainty: format!(
                "iid standard normal per node per step, amplitude {}, seed {}",
                scenario.uncertainty.amplitude,
                scenario.uncertainty.seed.map_or("none".into(), |s| s.to_string())
            ),
            detection,
            requirements,
        },
    )?;
    Ok(RunOutput {
        files: vec![trace_path, summary_path],
    })
}

/// Full figure 3 pipeline: design, calibration and the three traces.
pub fn reproduce_fig3(config: &CaseStudyConfig) -> Result<RunOutput> {
    let (cert, _, cert_path) = run_design(config)?;
    let calibration = calibrate(config, &cert)?;
    let runs = [
        ScenarioKind::Fig3Nominal,
        ScenarioKind::Fig3Uncertainty,
        ScenarioKind::Fig3Attack,
    ]
    .par_iter()
    .map(|&kind| run_detection(config, kind, &cert, &calibration))
    .collect::<Result<Vec<_>>>()?;
    let mut out = RunOutput {
        files: vec![cert_path],
    };
    for r in runs {
        out.extend(r);
    }
    Ok(out)
}
