//! Scenario files: a model (inline or by preset name), initial data,
//! integration settings and the list of tasks to run.

use serde::{Deserialize, Serialize};

use crate::analysis::InitialSampler;
use crate::dynamics::{DEFAULT_ATOL, DEFAULT_RTOL};
use crate::entropy::EntropyKernel;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::Model;
use crate::presets::{pert2_shape, preset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Validate,
    Simulate,
    Equilibrium,
    Spectrum,
    Entropy,
    Rates,
    Stability,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumMethod {
    Perron,
    Homotopy,
    Auto,
}

impl std::str::FromStr for EquilibriumMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perron" => Ok(EquilibriumMethod::Perron),
            "homotopy" => Ok(EquilibriumMethod::Homotopy),
            "auto" => Ok(EquilibriumMethod::Auto),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}`; expected perron, homotopy or auto"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub count: usize,
    pub seed: u64,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    State(Vec<f64>),
    Sampler(SamplerSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub amp: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    model: Option<Model>,
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    initial: Option<InitialSpec>,
    #[serde(default)]
    t_end: Option<f64>,
    #[serde(default)]
    rtol: Option<f64>,
    #[serde(default)]
    atol: Option<f64>,
    #[serde(default)]
    record_every: Option<f64>,
    #[serde(default)]
    outputs: Option<String>,
    tasks: Vec<Task>,
    #[serde(default)]
    kernel: Option<String>,
    #[serde(default)]
    method: Option<EquilibriumMethod>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    tail_fraction: Option<f64>,
    #[serde(default)]
    eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    perturbation: Option<PerturbationSpec>,
}

/// A fully resolved scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub model: Model,
    pub initial: InitialSpec,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub record_every: f64,
    pub outputs: Option<String>,
    pub tasks: Vec<Task>,
    pub kernel: EntropyKernel,
    pub method: EquilibriumMethod,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub tail_fraction: f64,
    pub eps_grid: Vec<f64>,
    pub perturbation: PerturbationSpec,
}

pub const DEFAULT_EPS_GRID: [f64; 4] = [1e-4, 4e-4, 1.6e-3, 6.4e-3];

impl Scenario {
    /// Scenario with every setting at its default, for a named preset.
    pub fn from_preset(name: &str) -> Result<Scenario> {
        let p = preset(name)?;
        let n = p.model.n();
        Ok(Scenario {
            initial: InitialSpec::State(p.initial),
            t_end: p.t_end,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            record_every: p.t_end / 500.0,
            outputs: None,
            tasks: vec![Task::Simulate],
            kernel: EntropyKernel::Quadratic,
            method: EquilibriumMethod::Auto,
            samples: 20,
            seed: 0,
            tol: 1e-6,
            tail_fraction: 0.5,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            perturbation: default_perturbation(n),
            model: p.model,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let file: ScenarioFile =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        Scenario::resolve(file)
    }

    fn resolve(f: ScenarioFile) -> Result<Scenario> {
        let mut sc = match (f.model, f.preset) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "give either `model` or `preset`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "scenario needs `model` or `preset`".into(),
                ))
            }
            (None, Some(name)) => Scenario::from_preset(&name)?,
            (Some(model), None) => {
                let n = model.n();
                Scenario {
                    initial: InitialSpec::State(vec![model.big_k() / n as f64 / 2.0; n]),
                    t_end: 100.0,
                    rtol: DEFAULT_RTOL,
                    atol: DEFAULT_ATOL,
                    record_every: 100.0 / 500.0,
                    outputs: None,
                    tasks: vec![],
                    kernel: EntropyKernel::Quadratic,
                    method: EquilibriumMethod::Auto,
                    samples: 20,
                    seed: 0,
                    tol: 1e-6,
                    tail_fraction: 0.5,
                    eps_grid: DEFAULT_EPS_GRID.to_vec(),
                    perturbation: default_perturbation(n),
                    model,
                }
            }
        };
        if f.tasks.is_empty() {
            return Err(Error::InvalidArgument("`tasks` must not be empty".into()));
        }
        sc.tasks = f.tasks;
        if let Some(i) = f.initial {
            sc.initial = i;
        }
        if let Some(t) = f.t_end {
            sc.t_end = t;
            sc.record_every = t / 500.0;
        }
        if let Some(x) = f.rtol {
            sc.rtol = x;
        }
        if let Some(x) = f.atol {
            sc.atol = x;
        }
        if let Some(x) = f.record_every {
            sc.record_every = x;
        }
        sc.outputs = f.outputs;
        if let Some(k) = f.kernel {
            sc.kernel = k.parse()?;
        }
        if let Some(m) = f.method {
            sc.method = m;
        }
        if let Some(x) = f.samples {
            sc.samples = x;
        }
        if let Some(x) = f.seed {
            sc.seed = x;
        }
        if let Some(x) = f.tol {
            sc.tol = x;
        }
        if let Some(x) = f.tail_fraction {
            sc.tail_fraction = x;
        }
        if let Some(x) = f.eps_grid {
            sc.eps_grid = x;
        }
        if let Some(p) = f.perturbation {
            sc.perturbation = p;
        }
        sc.check()?;
        Ok(sc)
    }

    fn check(&self) -> Result<()> {
        let n = self.model.n();
        match &self.initial {
            InitialSpec::State(v) if v.len() != n => {
                return Err(Error::DimensionMismatch(format!(
                    "initial has length {}, expected {n}",
                    v.len()
                )))
            }
            InitialSpec::State(v) if v.iter().any(|x| !x.is_finite() || *x < 0.0) => {
                return Err(Error::InvalidArgument(
                    "initial must be finite and nonnegative".into(),
                ))
            }
            InitialSpec::Sampler(s) => {
                InitialSampler::new(s.seed, s.low, s.high)?;
                if s.count == 0 {
                    return Err(Error::InvalidArgument(
                        "sampler count must be positive".into(),
                    ));
                }
            }
            _ => {}
        }
        for (name, x) in [
            ("t_end", self.t_end),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("record_every", self.record_every),
            ("tol", self.tol),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "`{name}` must be positive, got {x}"
                )));
            }
        }
        if self.perturbation.amp.len() != n {
            return Err(Error::DimensionMismatch("perturbation.amp".into()));
        }
        let w = Mat::from_rows(&self.perturbation.w)?;
        if w.n() != n {
            return Err(Error::DimensionMismatch("perturbation.w".into()));
        }
        Ok(())
    }

    /// Initial states: the given one, or the sampler's draws.
    pub fn initial_states(&self) -> Vec<Vec<f64>> {
        match &self.initial {
            InitialSpec::State(v) => vec![v.clone()],
            InitialSpec::Sampler(s) => {
                let mut sampler = InitialSampler::new(s.seed, s.low, s.high).expect("checked");
                (0..s.count)
                    .map(|_| sampler.sample(self.model.n()))
                    .collect()
            }
        }
    }

    pub fn perturbation_parts(&self) -> (Vec<f64>, Mat) {
        (
            self.perturbation.amp.clone(),
            Mat::from_rows(&self.perturbation.w).expect("checked"),
        )
    }
}

fn default_perturbation(n: usize) -> PerturbationSpec {
    if n == 2 {
        let (amp, w) = pert2_shape();
        PerturbationSpec {
            amp,
            w: w.to_rows(),
        }
    } else {
        PerturbationSpec {
            amp: (0..n)
                .map(|i| if i % 2 == 0 { 1.0 } else { -0.5 })
                .collect(),
            w: Mat::from_fn(n, |i, j| if i == j { 0.1 } else { 0.0 }).to_rows(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_scenario() {
        let s = Scenario::from_json_str(
            r#"{"preset":"sym2","tasks":["simulate","entropy"],"kernel":"linear"}"#,
        )
        .unwrap();
        assert_eq!(s.tasks, vec![Task::Simulate, Task::Entropy]);
        assert_eq!(s.kernel, EntropyKernel::Linear);
        assert_eq!(s.initial, InitialSpec::State(vec![8.0, 2.0]));
        assert_eq!(s.record_every, 60.0 / 500.0);
    }

    #[test]
    fn inline_model_and_sampler() {
        let s = Scenario::from_json_str(
            r#"{"model":{"n":1,"r":[2],"K":1,"mu":[[0]],"interaction":{"kind":"uniform","a":[1]}},
                "initial":{"count":3,"seed":9,"low":0,"high":2},"t_end":5,"tasks":["validate"]}"#,
        )
        .unwrap();
        let v = s.initial_states();
        assert_eq!(v.len(), 3);
        assert_eq!(v, s.initial_states());
        assert_eq!(s.t_end, 5.0);
    }

    #[test]
    fn scenario_errors_name_keys() {
        let e = Scenario::from_json_str(r#"{"preset":"sym2","tasks":["simulate"],"t_end":"x"}"#)
            .unwrap_err();
        assert!(
            matches!(e, Error::Parse { ref path, .. } if path == "t_end"),
            "{e:?}"
        );
        let e = Scenario::from_json_str(r#"{"preset":"sym2","tasks":["fly"]}"#).unwrap_err();
        assert!(
            matches!(e, Error::Parse { ref path, .. } if path.starts_with("tasks")),
            "{e:?}"
        );
        let e = Scenario::from_json_str(r#"{"preset":"sym2","tasks":[]}"#).unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(_)));
        let e = Scenario::from_json_str(r#"{"preset":"zzz","tasks":["simulate"]}"#).unwrap_err();
        assert!(matches!(e, Error::UnknownPreset(_)));
        let e =
            Scenario::from_json_str(r#"{"preset":"sym2","tasks":["simulate"],"initial":[1,2,3]}"#)
                .unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(_)));
        let e = Scenario::from_json_str(r#"{"tasks":["simulate"]}"#).unwrap_err();
        assert!(e.is_usage());
    }
}
