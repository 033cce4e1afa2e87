//! Experiment configuration.
//!
//! A config is a TOML file restricted to flat tables: `[model]`, `[sim]`,
//! `[initial]`, `[task]` and `[output]`, each holding `key = value` lines.
//! Unknown tables or keys are rejected so typos surface as config errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use sdde_core::engine::SimConfig;
use sdde_core::models::{
    jump_linear_with, linear_retarded, neutral_linear, zero_model, DelaySpec, JumpForm, MarkLaw, Matrix, ModelSpec,
};
use sdde_core::paths::{Interp, Segment, SegmentView};

use crate::error::{LabError, LabResult};
use crate::formats;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelSection>,
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub tau: Option<f64>,
    pub dim: Option<usize>,
    pub a: Option<f64>,
    pub b_lag: Option<f64>,
    /// Diffusion: one value per state component, used as a diagonal.
    pub sigma: Option<Sigma>,
    pub kappa: Option<f64>,
    /// `point` (default) or `distributed`.
    pub delay: Option<String>,
    pub lag: Option<f64>,
    /// `[[theta, weight], ...]` for a distributed delay.
    pub atoms: Option<Vec<[f64; 2]>>,
    pub jump_scale: Option<f64>,
    pub intensity: Option<f64>,
    /// `rademacher`, `uniform`, or `normal`.
    pub marks: Option<String>,
    pub mark_low: Option<f64>,
    pub mark_high: Option<f64>,
    pub mark_mean: Option<f64>,
    pub mark_sd: Option<f64>,
    /// `additive`, `delayed`, or `saturating`.
    pub form: Option<String>,
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub segment_points: Option<usize>,
    pub ensemble: Option<usize>,
    pub threads: Option<usize>,
    pub divergence_guard: Option<f64>,
    pub fixed_point_tol: Option<f64>,
    pub fixed_point_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub xi: String,
    pub eta: String,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            xi: "constant:1".into(),
            eta: "constant:-1".into(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    /// Optional; must match the subcommand when present.
    pub name: Option<String>,
    pub path: Option<u64>,
    pub window: Option<[f64; 2]>,
    pub functional: Option<String>,
    pub burn_in: Option<f64>,
    pub stationary_horizon: Option<f64>,
    pub stationary_paths: Option<usize>,
    pub kappa_exp: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub tail_start: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub tau: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
    pub xi_norm: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub p_exp: Option<f64>,
    pub radius: Option<Radius>,
    pub mark_samples: Option<usize>,
    pub resolution: Option<f64>,
    pub refine_rounds: Option<usize>,
    pub max_jumps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Radius {
    Bounded(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Any of `csv`, `json`, `txt`. CSV is always written.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("sdde-out"),
            formats: vec!["csv".into(), "json".into(), "txt".into()],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, format: &str) -> bool {
        format == "csv" || self.formats.iter().any(|f| f == format)
    }
}

pub fn config_error(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

pub fn require<T: Copy>(v: Option<T>, what: &str) -> LabResult<T> {
    v.ok_or_else(|| config_error(format!("missing required key {what}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> LabResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error(format!("config parse error: {}", e.message())))?;
        for f in &cfg.output.formats {
            if !matches!(f.as_str(), "csv" | "json" | "txt") {
                return Err(config_error(format!("unknown output format {f:?}")));
            }
        }
        Ok(cfg)
    }

    pub fn model_section(&self) -> LabResult<&ModelSection> {
        self.model.as_ref().ok_or_else(|| config_error("this task needs a [model] table"))
    }

    pub fn sim_section(&self) -> LabResult<&SimSection> {
        self.sim.as_ref().ok_or_else(|| config_error("this task needs a [sim] table with an explicit seed"))
    }

    pub fn seed(&self) -> Option<u64> {
        self.sim.as_ref().map(|s| s.seed)
    }

    pub fn build_model(&self) -> LabResult<ModelSpec> {
        self.model_section()?.build()
    }

    /// Simulation settings; `step` and `horizon` are required here.
    pub fn sim_config(&self) -> LabResult<SimConfig> {
        let s = self.sim_section()?;
        let mut cfg = SimConfig::new(require(s.step, "sim.step")?, require(s.horizon, "sim.horizon")?);
        cfg.master_seed = s.seed;
        if let Some(p) = s.segment_points {
            cfg.segment_points = p;
        }
        if let Some(m) = s.ensemble {
            cfg.ensemble_size = m;
        }
        if let Some(g) = s.divergence_guard {
            cfg.divergence_guard = g;
        }
        if let Some(t) = s.fixed_point_tol {
            cfg.fixed_point_tol = t;
        }
        if let Some(k) = s.fixed_point_max_iter {
            cfg.fixed_point_max_iter = k;
        }
        Ok(cfg)
    }

    pub fn segment_points(&self) -> usize {
        self.sim.as_ref().and_then(|s| s.segment_points).unwrap_or(101)
    }
}

impl ModelSection {
    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(1.0)
    }

    fn delay(&self) -> LabResult<DelaySpec> {
        let tau = self.tau();
        let d = match self.delay.as_deref().unwrap_or("point") {
            "point" => DelaySpec::point(self.lag.unwrap_or(tau))?,
            "distributed" => {
                let atoms = self.atoms.clone().ok_or_else(|| config_error("distributed delay needs model.atoms"))?;
                DelaySpec::distributed(tau, atoms.into_iter().map(|[t, w]| (t, w)).collect())?
            }
            other => return Err(config_error(format!("unknown delay kind {other:?}"))),
        };
        Ok(d)
    }

    fn sigma(&self) -> Matrix {
        match &self.sigma {
            None => Matrix::scalar(0.0),
            Some(Sigma::Scalar(s)) => match self.dim {
                Some(n) if n > 1 => Matrix::diagonal(&vec![*s; n]),
                _ => Matrix::scalar(*s),
            },
            Some(Sigma::Diagonal(v)) => Matrix::diagonal(v),
        }
    }

    fn marks(&self) -> LabResult<MarkLaw> {
        let law = match self.marks.as_deref().unwrap_or("rademacher") {
            "rademacher" => MarkLaw::Rademacher,
            "uniform" => MarkLaw::Uniform {
                low: self.mark_low.unwrap_or(-1.0),
                high: self.mark_high.unwrap_or(1.0),
            },
            "normal" => MarkLaw::Normal {
                mean: self.mark_mean.unwrap_or(0.0),
                std_dev: self.mark_sd.unwrap_or(1.0),
            },
            other => return Err(config_error(format!("unknown mark law {other:?}"))),
        };
        law.validate()?;
        Ok(law)
    }

    fn form(&self) -> LabResult<JumpForm> {
        Ok(match self.form.as_deref().unwrap_or("additive") {
            "additive" => JumpForm::Additive,
            "delayed" => JumpForm::Delayed,
            "saturating" => JumpForm::Saturating {
                cap: require(self.cap, "model.cap")?,
            },
            other => return Err(config_error(format!("unknown jump form {other:?}"))),
        })
    }

    pub fn build(&self) -> LabResult<ModelSpec> {
        let model = match self.name.as_str() {
            "linear_retarded" => linear_retarded(
                require(self.a, "model.a")?,
                self.b_lag.unwrap_or(0.0),
                self.sigma(),
                self.delay()?,
            )?,
            "neutral_linear" => neutral_linear(
                require(self.kappa, "model.kappa")?,
                self.delay()?,
                require(self.a, "model.a")?,
                self.b_lag.unwrap_or(0.0),
                self.sigma(),
            )?,
            "jump_linear" => jump_linear_with(
                require(self.a, "model.a")?,
                self.b_lag.unwrap_or(0.0),
                require(self.jump_scale, "model.jump_scale")?,
                require(self.intensity, "model.intensity")?,
                self.marks()?,
                self.delay()?,
                self.form()?,
            )?,
            "zero" => zero_model(self.dim.unwrap_or(1), self.tau())?,
            other => return Err(config_error(format!("unknown built-in model {other:?}"))),
        };
        Ok(model)
    }
}

/// Builds an initial segment from a short spec string:
///
/// * `constant:V`
/// * `linear:A:B` for `A + B theta`
/// * `sine:AMP:FREQ` for `AMP sin(FREQ theta)`
/// * `step:V0;T1=V1;T2=V2` for a scalar cadlag step path
/// * `file:PATH`, a segment CSV; relative paths resolve against `base`
pub fn parse_segment(spec: &str, tau: f64, dim: usize, points: usize, base: &Path) -> LabResult<Segment> {
    let bad = || config_error(format!("cannot parse segment spec {spec:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    let seg = match kind.trim() {
        "constant" => Segment::constant(Interp::ContinuousLinear, tau, points, &vec![num(rest)?; dim])?,
        "linear" => {
            let (a, b) = rest.split_once(':').ok_or_else(bad)?;
            let (a, b) = (num(a)?, num(b)?);
            Segment::from_fn(Interp::ContinuousLinear, tau, points, dim, |t, v| v.fill(a + b * t))?
        }
        "sine" => {
            let (amp, freq) = rest.split_once(':').ok_or_else(bad)?;
            let (amp, freq) = (num(amp)?, num(freq)?);
            Segment::from_fn(Interp::ContinuousLinear, tau, points, dim, |t, v| v.fill(amp * (freq * t).sin()))?
        }
        "step" => {
            if dim != 1 {
                return Err(config_error("step segments are scalar"));
            }
            let mut parts = rest.split(';');
            let initial = num(parts.next().ok_or_else(bad)?)?;
            let mut levels = Vec::new();
            for p in parts {
                let (t, v) = p.split_once('=').ok_or_else(bad)?;
                levels.push((num(t)?, num(v)?));
            }
            Segment::step(tau, initial, &levels)?
        }
        "file" => {
            let path = base.join(rest.trim());
            let seg = formats::read_segment_csv(&path)?;
            if seg.dim() != dim {
                return Err(config_error(format!("segment file {} has dimension {}, model needs {dim}", path.display(), seg.dim())));
            }
            seg
        }
        _ => return Err(bad()),
    };
    Ok(seg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::parse(
            r#"
[model]
name = "linear_retarded"
a = 3.0
b_lag = 1.0
sigma = 0.5

[sim]
seed = 7
step = 0.01
horizon = 8.0
ensemble = 200

[task]
window = [1.0, 8.0]
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed(), Some(7));
        assert!(cfg.build_model().is_ok());
        assert_eq!(cfg.sim_config().unwrap().ensemble_size, 200);
    }

    #[test]
    fn rejects_unknown_keys_and_models() {
        assert!(ExperimentConfig::parse("[sim]\nseed = 1\nstpe = 0.1\n").is_err());
        let cfg = ExperimentConfig::parse("[model]\nname = \"banana\"\n").unwrap();
        assert!(matches!(cfg.build_model(), Err(LabError::Config(_))));
    }

    #[test]
    fn segment_specs() {
        let base = Path::new(".");
        let s = parse_segment("linear:1:2", 1.0, 1, 11, base).unwrap();
        assert_eq!(s.evaluate(-0.5).unwrap()[0], 0.0);
        let s = parse_segment("step:0;-0.5=1", 1.0, 1, 11, base).unwrap();
        assert_eq!(s.evaluate(-0.4).unwrap()[0], 1.0);
        assert!(parse_segment("wobble:1", 1.0, 1, 11, base).is_err());
    }
}
