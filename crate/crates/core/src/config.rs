//! Scenario files.
//!
//! Scenarios are TOML documents: top-level keys plus dotted sections.
//!
//! ```toml
//! name = "case1"
//!
//! [model]
//! builtin = "nonlinear-spring"
//! gain = [-20.0, -20.0]
//!
//! [lyapunov]
//! h = [[1.0, 0.0], [0.0, 1.0]]
//! beta = "absorb-input"          # or "full-gradient"
//!
//! [trigger]
//! sigma = 0.95
//! r = 0.0154                     # or: target_r1 = 0.1
//! ledger = "varying"             # or "frozen"
//!
//! [reference]
//! preset = "case1"               # "case1", "case2" or "custom"
//!
//! [initial]
//! x0 = [5.0, -1.0]
//!
//! [sim]
//! dt = 1e-4
//! horizon = 10.0
//! zeno_guard = 50
//! zeno_window = 0.01
//! invariant_checks = true
//!
//! [bounds]
//! samples = 100000
//! seed = 7
//! # r0 = 5.0
//! # p1 = 32.0, p2 = 0.0, p3 = 1.1 (all three or none)
//! ```
//!
//! A custom reference declares its input and its bounds:
//!
//! ```toml
//! [reference]
//! preset = "custom"
//! xd0 = [0.5, 0.0]
//! d = 2.0
//! d1 = 1.5
//! input = { kind = "sine", amplitude = 0.5, frequency = 2.0 }
//! # or { kind = "constant", value = 0.2 }
//! # or { kind = "quantized-sine", amplitude = 1.0, frequency = 1.0, step = 0.1 }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize};

use crate::bounds::ConstantsSource;
use crate::error::{Error, Result};
use crate::lyapunov::{radius_for_ultimate_bound, BetaConvention, LyapunovCertificate};
use crate::sim::{Scenario, SimConfig};
use crate::systems::{
    case1_reference, case2_reference, sine_quantizer_min_dwell, ExogenousInput, JumpDwell,
    LipschitzConstants, NonlinearSpring, Quantizer, ReferenceBounds, ReferenceSignal,
};
use crate::trigger::{LedgerMode, TriggerParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    pub trigger: TriggerSection,
    pub reference: ReferenceSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub builtin: String,
    pub gain: [f64; 2],
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            builtin: "nonlinear-spring".into(),
            gain: [-20.0, -20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSection {
    pub h: Vec<Vec<f64>>,
    #[serde(default)]
    pub beta: BetaConvention,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self {
            h: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            beta: BetaConvention::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSection {
    pub sigma: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub target_r1: Option<f64>,
    /// Overrides the reference's bound on `|x_{d,1}|`.
    #[serde(default)]
    pub d1: Option<f64>,
    #[serde(default, deserialize_with = "ledger_alias")]
    pub ledger: LedgerMode,
}

fn ledger_alias<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<LedgerMode, D::Error> {
    let raw = String::deserialize(de)?;
    parse_ledger(&raw).map_err(serde::de::Error::custom)
}

/// Accepts `varying`/`time-varying` and `frozen`/`frozen-l0`.
pub fn parse_ledger(raw: &str) -> std::result::Result<LedgerMode, String> {
    match raw.to_ascii_lowercase().as_str() {
        "varying" | "time-varying" => Ok(LedgerMode::Varying),
        "frozen" | "frozen-l0" => Ok(LedgerMode::Frozen),
        other => Err(format!("unknown ledger mode `{other}` (expected varying or frozen)")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub preset: String,
    #[serde(default)]
    pub xd0: Option<[f64; 2]>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub d1: Option<f64>,
    #[serde(default)]
    pub input: Option<CustomInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CustomInput {
    Constant { value: f64 },
    /// `v = amplitude·sin(frequency·t)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `amplitude·sin(frequency·t)` rounded to `step·ℤ`.
    QuantizedSine { amplitude: f64, frequency: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    pub zeno_guard: usize,
    pub zeno_window: f64,
    pub invariant_checks: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt: s.dt,
            horizon: s.horizon,
            zeno_guard: s.zeno_guard,
            zeno_window: s.zeno_window,
            invariant_checks: s.invariant_checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub samples: usize,
    pub seed: u64,
    pub r0: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        let c = ConstantsSource::default();
        Self {
            samples: c.samples,
            seed: c.seed,
            r0: None,
            p1: None,
            p2: None,
            p3: None,
        }
    }
}

/// Command-line style overrides applied on top of a file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub ledger: Option<LedgerMode>,
    pub no_checks: bool,
}

/// A scenario plus the bound settings that travel with it.
#[derive(Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub constants: ConstantsSource,
    pub r0: Option<f64>,
    pub config: ScenarioConfig,
}

/// Resolves `path`, trying a `.toml` suffix when the bare path is missing.
pub fn resolve_path(path: &Path) -> Result<PathBuf> {
    if path.is_file() {
        return Ok(path.to_path_buf());
    }
    let with_ext = path.with_extension("toml");
    if path.extension().is_none() && with_ext.is_file() {
        return Ok(with_ext);
    }
    Err(Error::Config(format!("cannot read scenario file {}", path.display())))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let path = resolve_path(path)?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.sim.dt = dt;
        }
        if let Some(h) = o.horizon {
            self.sim.horizon = h;
        }
        if let Some(l) = o.ledger {
            self.trigger.ledger = l;
        }
        if o.no_checks {
            self.sim.invariant_checks = false;
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validates the file and assembles the runnable scenario. Every failure
    /// here is reported as [`Error::Config`].
    pub fn build(&self) -> Result<LoadedScenario> {
        self.build_inner().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn build_inner(&self) -> Result<LoadedScenario> {
        if self.model.builtin != "nonlinear-spring" {
            return Err(Error::Config(format!(
                "unknown builtin model `{}`; other systems are built through the library API",
                self.model.builtin
            )));
        }
        let spring = NonlinearSpring::new(self.model.gain)?;
        let h = matrix_from_rows(&self.lyapunov.h)?;
        let cert = spring.certificate(&h, self.lyapunov.beta)?;

        let r = match (self.trigger.r, self.trigger.target_r1) {
            (Some(r), None) => r,
            (None, Some(r1)) => radius_for_ultimate_bound(r1, cert.alpha1(), cert.alpha2())?,
            _ => {
                return Err(Error::Config(
                    "exactly one of trigger.r and trigger.target_r1 must be given".into(),
                ))
            }
        };
        let params = TriggerParams::new(self.trigger.sigma, r)?;

        let mut reference = self.reference.build()?;
        if let Some(d1) = self.trigger.d1 {
            reference.bounds.d1 = d1;
        }
        let provider = spring.lipschitz_provider(reference.bounds.d1, &cert)?;

        let sim = SimConfig {
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            zeno_guard: self.sim.zeno_guard,
            zeno_window: self.sim.zeno_window,
            invariant_checks: self.sim.invariant_checks,
        };
        sim.validate()?;

        let overrides = match (self.bounds.p1, self.bounds.p2, self.bounds.p3) {
            (None, None, None) => None,
            (Some(p1), Some(p2), Some(p3)) => Some(LipschitzConstants { p1, p2, p3 }),
            _ => {
                return Err(Error::Config(
                    "bounds.p1, bounds.p2 and bounds.p3 must be given together".into(),
                ))
            }
        };
        if overrides.is_none() && self.bounds.samples < 1000 {
            return Err(Error::Config("bounds.samples must be at least 1000".into()));
        }

        let scenario = Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            model: spring.model()?,
            certificate: Arc::new(cert),
            provider,
            reference,
            params,
            x0: DVector::from_column_slice(&self.initial.x0),
            sim,
            ledger: self.trigger.ledger,
        };
        Ok(LoadedScenario {
            scenario,
            constants: ConstantsSource {
                samples: self.bounds.samples,
                seed: self.bounds.seed,
                overrides,
            },
            r0: self.bounds.r0,
            config: self.clone(),
        })
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n != 2 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("lyapunov.h must be 2x2, got {n} rows")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ReferenceSection {
    pub fn build(&self) -> Result<ReferenceSignal> {
        match self.preset.as_str() {
            "case1" | "case2" => {
                let mut reference = if self.preset == "case1" {
                    case1_reference()
                } else {
                    case2_reference()
                };
                if let Some(xd0) = self.xd0 {
                    reference.xd0 = DVector::from_column_slice(&xd0);
                }
                if let Some(d) = self.d {
                    reference.bounds.d = positive("reference.d", d)?;
                }
                if let Some(d1) = self.d1 {
                    reference.bounds.d1 = positive("reference.d1", d1)?;
                }
                if self.input.is_some() {
                    return Err(Error::Config("reference.input is only valid with preset = \"custom\"".into()));
                }
                Ok(reference)
            }
            "custom" => self.build_custom(),
            other => Err(Error::Config(format!(
                "unknown reference preset `{other}` (expected case1, case2 or custom)"
            ))),
        }
    }

    fn build_custom(&self) -> Result<ReferenceSignal> {
        let missing = |k: &str| Error::Config(format!("custom reference needs reference.{k}"));
        let xd0 = self.xd0.ok_or_else(|| missing("xd0"))?;
        let d = positive("reference.d", self.d.ok_or_else(|| missing("d"))?)?;
        let d1 = positive("reference.d1", self.d1.ok_or_else(|| missing("d1"))?)?;
        let input = self.input.clone().ok_or_else(|| missing("input"))?;
        let (input, d_v, rate, jump_dwell) = match input {
            CustomInput::Constant { value } => (
                ExogenousInput::Analytic(Arc::new(move |_| DVector::from_element(1, value))),
                value.abs(),
                Some(0.0),
                None,
            ),
            CustomInput::Sine { amplitude, frequency } => (
                ExogenousInput::Analytic(Arc::new(move |t| {
                    DVector::from_element(1, amplitude * (frequency * t).sin())
                })),
                amplitude.abs(),
                Some((amplitude * frequency).abs()),
                None,
            ),
            CustomInput::QuantizedSine { amplitude, frequency, step } => {
                positive("reference.input.step", step)?;
                positive("reference.input.frequency", frequency)?;
                positive("reference.input.amplitude", amplitude)?;
                let dwell = sine_quantizer_min_dwell(step / amplitude) / frequency;
                let q = Quantizer::new(
                    step,
                    move |t| amplitude * (frequency * t).sin(),
                    move |t| (frequency * t).cos(),
                );
                (
                    ExogenousInput::Quantized(q),
                    amplitude + 0.5 * step,
                    None,
                    Some(JumpDwell { c: 0.0, dwell, jump: step }),
                )
            }
        };
        Ok(ReferenceSignal {
            name: "custom".into(),
            xd0: DVector::from_column_slice(&xd0),
            input,
            bounds: ReferenceBounds { d, d1, d_v, rate, jump_dwell },
        })
    }
}

/// Built-in Case I scenario file contents.
pub fn case1_config() -> ScenarioConfig {
    ScenarioConfig {
        name: Some("case1".into()),
        model: ModelSection::default(),
        lyapunov: LyapunovSection::default(),
        trigger: TriggerSection {
            sigma: 0.95,
            r: Some(0.0154),
            target_r1: None,
            d1: None,
            ledger: LedgerMode::Varying,
        },
        reference: ReferenceSection {
            preset: "case1".into(),
            xd0: None,
            d: None,
            d1: None,
            input: None,
        },
        initial: InitialSection { x0: [5.0, -1.0] },
        sim: SimSection::default(),
        bounds: BoundsSection::default(),
    }
}

/// Built-in Case II scenario file contents.
pub fn case2_config() -> ScenarioConfig {
    let mut cfg = case1_config();
    cfg.name = Some("case2".into());
    cfg.reference.preset = "case2".into();
    cfg
}
