//! Experiment configuration files: flat `key = value` text with dotted
//! sections (`problem.*`, `eval.*`, `method.<i>.*`).

use std::path::PathBuf;

use crate::config::{TauSpec, Variant};
use crate::error::{Error, Result};
use crate::kvfile::{parse_f64_list, parse_usize_list, KvMap};

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Portfolio { n: usize, breakpoints: usize },
    TwoStage { n: usize },
    /// Deterministic quadratic over the simplex, for smoke runs.
    Quadratic { n: usize, target: Option<Vec<f64>> },
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub enum MethodKind {
    Scpb {
        variant: Variant,
        tau_spec: TauSpec,
        lambda: f64,
        rule_constant: f64,
        cycles: usize,
        max_total_iters: Option<usize>,
    },
    Smd {
        iters: usize,
        step_scale: f64,
    },
}

#[derive(Clone, Debug)]
pub struct MethodSpec {
    pub label: String,
    pub kind: MethodKind,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    pub n_eval: usize,
    pub checkpoints: Vec<usize>,
    pub base_seed: u64,
    pub trials: usize,
    /// Output prefix: `<prefix>.csv` (trace) and `<prefix>.summary.csv`.
    pub output: PathBuf,
    pub x0: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = KvMap::from_text(text)?;

        let problem = parse_problem(&mut kv)?;
        let methods = parse_methods(&mut kv)?;

        let n_eval = kv.get_parsed::<usize>("eval.n_eval")?.unwrap_or(1000);
        let checkpoints = match kv.get("eval.checkpoints") {
            Some(v) if !v.is_empty() => parse_usize_list(v)?,
            _ => Vec::new(),
        };
        let base_seed = kv.get_parsed::<u64>("base_seed")?.unwrap_or(0);
        let trials = kv.get_parsed::<usize>("trials")?.unwrap_or(1);
        let output = PathBuf::from(kv.get("output").unwrap_or("results"));
        let x0 = match kv.get("problem.x0") {
            Some(v) => Some(parse_f64_list(v)?),
            None => None,
        };

        kv.reject_unused()?;

        let config = ExperimentConfig {
            problem,
            methods,
            n_eval,
            checkpoints,
            base_seed,
            trials,
            output,
            x0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method block is required".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.n_eval < 1 {
            return Err(Error::Config("eval.n_eval must be at least 1".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("eval.checkpoints must be strictly increasing".into()));
        }
        let mut labels: Vec<&str> = self.methods.iter().map(|m| m.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.methods.len() {
            return Err(Error::Config("method labels must be unique".into()));
        }
        for m in &self.methods {
            if m.label.contains(',') || m.label.contains('\n') {
                return Err(Error::Config(format!("label `{}` must not contain commas", m.label)));
            }
        }
        Ok(())
    }
}

fn parse_problem(kv: &mut KvMap) -> Result<ProblemSpec> {
    if let Some(path) = kv.get("problem.instance_file") {
        return Ok(ProblemSpec::File(PathBuf::from(path)));
    }
    let family = kv.require("problem.family")?.to_string();
    match family.as_str() {
        "portfolio" => Ok(ProblemSpec::Portfolio {
            n: kv.require_parsed("problem.n")?,
            breakpoints: kv.get_parsed("problem.breakpoints")?.unwrap_or(10),
        }),
        "twostage" => Ok(ProblemSpec::TwoStage {
            n: kv.require_parsed("problem.n")?,
        }),
        "quadratic" => {
            let n: usize = kv.require_parsed("problem.n")?;
            let target = match kv.get("problem.z") {
                Some(v) => Some(parse_f64_list(v)?),
                None => None,
            };
            Ok(ProblemSpec::Quadratic { n, target })
        }
        other => Err(Error::Config(format!("unknown problem family `{other}`"))),
    }
}

fn parse_methods(kv: &mut KvMap) -> Result<Vec<MethodSpec>> {
    // Collect the distinct indices appearing as `method.<i>.*`.
    let mut indices: Vec<usize> = kv
        .keys_with_prefix("method")
        .iter()
        .filter_map(|k| k.split('.').nth(1).and_then(|s| s.parse().ok()))
        .collect();
    indices.sort_unstable();
    indices.dedup();

    let mut methods = Vec::with_capacity(indices.len());
    for i in indices {
        let prefix = format!("method.{i}");
        let kind = kv.require(&format!("{prefix}.kind"))?.to_string();
        let spec = match kind.as_str() {
            "scpb" => {
                let variant = match kv.require(&format!("{prefix}.variant"))? {
                    "B1" | "b1" => Variant::B1,
                    "B2" | "b2" => Variant::B2,
                    other => return Err(Error::Config(format!("unknown variant `{other}`"))),
                };
                let tau: Option<f64> = kv.get_parsed(&format!("{prefix}.tau"))?;
                let theta: Option<f64> = kv.get_parsed(&format!("{prefix}.theta"))?;
                let tau_spec = match (tau, theta) {
                    (Some(t), None) => TauSpec::Tau(t),
                    (None, Some(t)) => TauSpec::Theta(t),
                    _ => {
                        return Err(Error::Config(format!(
                            "method {i}: give exactly one of tau or theta"
                        )))
                    }
                };
                let lambda = kv.require_parsed(&format!("{prefix}.lambda"))?;
                let rule_constant = kv.require_parsed(&format!("{prefix}.C"))?;
                let cycles = kv.require_parsed(&format!("{prefix}.K"))?;
                let max_total_iters = kv.get_parsed(&format!("{prefix}.max_total_iters"))?;
                MethodKind::Scpb {
                    variant,
                    tau_spec,
                    lambda,
                    rule_constant,
                    cycles,
                    max_total_iters,
                }
            }
            "smd" => MethodKind::Smd {
                iters: kv.require_parsed(&format!("{prefix}.N"))?,
                step_scale: kv.get_parsed(&format!("{prefix}.theta_smd"))?.unwrap_or(1.0),
            },
            other => return Err(Error::Config(format!("method {i}: unknown kind `{other}`"))),
        };
        let label = kv
            .get(&format!("{prefix}.label"))
            .map(str::to_string)
            .unwrap_or_else(|| default_label(i, &spec));
        methods.push(MethodSpec { label, kind: spec });
    }
    Ok(methods)
}

fn default_label(index: usize, kind: &MethodKind) -> String {
    match kind {
        MethodKind::Scpb { variant, .. } => format!("{variant}-{index}"),
        MethodKind::Smd { .. } => format!("SMD-{index}"),
    }
}
