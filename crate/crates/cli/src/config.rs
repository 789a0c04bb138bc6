//! JSON configuration of the `train` subcommand.

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use pinn_core::experiments::friction_problem;
use pinn_core::operators::{self, Operator, OperatorSpec};
use pinn_core::problem::{advection_problem, heat_problem, Counts, Problem};
use pinn_core::risk::{Lambdas, RiskSpec};
use pinn_core::trainer::{Schedule, TrainConfig};

/// Built-in problems.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum Preset {
    Advection {
        #[serde(default)]
        sigma: f64,
    },
    Heat {
        depth: usize,
        horizon: f64,
    },
    Friction {
        #[serde(default)]
        sigma: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemInput {
    Preset(Preset),
    Explicit(Problem),
}

impl ProblemInput {
    fn build(&self) -> Result<Problem> {
        Ok(match self {
            ProblemInput::Preset(Preset::Advection { sigma }) => advection_problem(*sigma),
            ProblemInput::Preset(Preset::Heat { depth, horizon }) => heat_problem(*depth, *horizon)?,
            ProblemInput::Preset(Preset::Friction { sigma }) => friction_problem(*sigma),
            ProblemInput::Explicit(p) => p.clone(),
        })
    }
}

/// Library operator by name, or a full operator description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorInput {
    Named(String),
    Explicit(OperatorSpec),
}

impl OperatorInput {
    fn build(&self) -> Result<Vec<Operator>> {
        Ok(match self {
            OperatorInput::Named(n) => match n.as_str() {
                "advection" => vec![operators::advection()],
                "heat" => vec![operators::heat()],
                "friction" => vec![operators::friction(1.0, 1.0)],
                "dilation" => vec![operators::dilation()],
                "maxwell" => operators::maxwell(),
                other => bail!(pinn_core::Error::InvalidSpec(format!("unknown operator `{other}`"))),
            },
            OperatorInput::Explicit(s) => vec![Operator::try_from(s.clone())?],
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchInput {
    /// Hidden layers.
    pub h: usize,
    /// Width.
    pub d: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemInput,
    #[serde(default)]
    pub operators: Vec<OperatorInput>,
    pub counts: Counts,
    pub arch: ArchInput,
    #[serde(default = "default_lambdas")]
    pub lambdas: Lambdas,
    #[serde(default = "Schedule::manual")]
    pub schedule: Schedule,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub train: TrainConfig,
}

fn default_lambdas() -> Lambdas {
    Lambdas { d: 1.0, e: 1.0, ridge: 0.0, t: 0.0 }
}

fn default_m() -> usize {
    1
}

impl RunConfig {
    pub fn spec(&self) -> Result<RiskSpec> {
        let problem = self.problem.build()?;
        let mut ops = Vec::new();
        for o in &self.operators {
            ops.extend(o.build()?);
        }
        let max_deg = ops.iter().map(Operator::degree).max().unwrap_or(1);
        let c = self.counts;
        let lambdas = self.schedule.lambdas(self.lambdas, self.arch.h, max_deg, self.m, c.n, c.n_e, c.n_r)?;
        let samples = problem.sample(c, self.seed)?;
        let spec = RiskSpec { lambdas, m: self.m, operators: ops, problem, samples };
        spec.validate()?;
        Ok(spec)
    }
}
