//! Case-study configuration read from TOML.
//!
//! Every key is optional except `benchmark`; missing keys take the
//! benchmark's default case-study settings. The `kappa` and `gkls` tables
//! replace the defaults as a whole, all other tables are merged key by key.
//!
//! ```toml
//! benchmark = "mueller-brown"
//! n-experiments = 10
//! runs-per-experiment = 10
//! solvers = ["ils", "ims", "bnb"]
//! seed = 42
//!
//! [kappa]
//! kind = "fixed"
//! kappa = 2.0
//!
//! [tc]
//! eps-f-abs = 0.5
//!
//! [ims]
//! restarts = 5
//!
//! [bnb]
//! time-limit = 10.0
//! node-cap = 100000
//! ```

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::acquisition::KappaPolicy;
use crate::benchmarks::gkls::GklsParams;
use crate::benchmarks::{self, BenchmarkId};
use crate::bnb::BnbOptions;
use crate::bo::{BenchmarkHandle, SolverKind, SolverSettings, TerminationConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ImsSection {
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BnbSection {
    /// Relative optimality gap each run starts from.
    pub eps_r: f64,
    pub eps_a: f64,
    /// Wall-clock limit per inner solve, in seconds.
    pub time_limit: f64,
    pub node_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CaseStudyConfig {
    pub benchmark: BenchmarkId,
    pub n_init: usize,
    pub kappa: KappaPolicy,
    pub tc: TerminationConfig,
    pub n_experiments: usize,
    /// Runs per experiment of each stochastic solver.
    pub runs_per_experiment: usize,
    pub solvers: Vec<SolverKind>,
    pub seed: u64,
    /// Record a deterministic solver once per experiment and store the other
    /// runs as flagged copies instead of re-executing it.
    pub replicate_deterministic: bool,
    pub ims: ImsSection,
    pub bnb: BnbSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gkls: Option<GklsParams>,
}

impl CaseStudyConfig {
    /// Defaults for `benchmark`: its case-study settings, all three solvers
    /// and seed 0.
    pub fn defaults(benchmark: BenchmarkId) -> Self {
        let d = benchmark.case_defaults();
        let bnb = BnbOptions::default();
        Self {
            benchmark,
            n_init: d.n_init,
            kappa: d.kappa,
            tc: d.tc,
            n_experiments: d.experiments,
            runs_per_experiment: d.runs_per_experiment,
            solvers: SolverKind::ALL.to_vec(),
            seed: 0,
            replicate_deterministic: true,
            ims: ImsSection {
                restarts: SolverSettings::default().ims_restarts,
            },
            bnb: BnbSection {
                eps_r: bnb.eps_r,
                eps_a: bnb.eps_a,
                time_limit: bnb.time_limit.as_secs_f64(),
                node_cap: bnb.node_cap,
            },
            gkls: benchmark.gkls_params(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<toml>", e.message().to_string()))?;
        let benchmark = match user.get("benchmark") {
            Some(toml::Value::String(s)) => s
                .parse::<BenchmarkId>()
                .map_err(|e| Error::config("benchmark", e.to_string()))?,
            Some(_) => return Err(Error::config("benchmark", "must be a string")),
            None => return Err(Error::config("benchmark", "missing required key")),
        };
        let mut merged = toml::Table::try_from(Self::defaults(benchmark))
            .map_err(|e| Error::config("<defaults>", e.to_string()))?;
        merge(&mut merged, user);
        let cfg: Self = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: usize, name: &str| {
            if v == 0 {
                Err(Error::config(name, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        positive(self.n_init, "n-init")?;
        positive(self.n_experiments, "n-experiments")?;
        positive(self.runs_per_experiment, "runs-per-experiment")?;
        positive(self.ims.restarts, "ims.restarts")?;
        positive(self.bnb.node_cap, "bnb.node-cap")?;
        self.tc.validate()?;
        self.kappa
            .validate()
            .map_err(|e| Error::config("kappa", e.to_string()))?;
        if self.solvers.is_empty() {
            return Err(Error::config("solvers", "must list at least one solver"));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return Err(Error::config(format!("solvers[{i}]"), format!("duplicate solver `{s}`")));
            }
        }
        if !(self.bnb.eps_r > 0.0 && self.bnb.eps_r < 1.0) {
            return Err(Error::config("bnb.eps-r", "must lie in (0, 1)"));
        }
        if !(self.bnb.eps_a >= 0.0) {
            return Err(Error::config("bnb.eps-a", "must be non-negative"));
        }
        if !(self.bnb.time_limit > 0.0 && self.bnb.time_limit.is_finite()) {
            return Err(Error::config("bnb.time-limit", "must be a positive number of seconds"));
        }
        match (&self.gkls, self.benchmark.gkls_params()) {
            (Some(_), None) => {
                return Err(Error::config("gkls", format!("{} is not a GKLS benchmark", self.benchmark)))
            }
            (Some(p), Some(d)) if p.dim != d.dim => {
                return Err(Error::config(
                    "gkls.dim",
                    format!("{} needs dimension {}", self.benchmark, d.dim),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// Name shared by every record of this case study.
    pub fn case_study(&self) -> &'static str {
        self.benchmark.name()
    }

    pub fn handle(&self) -> Result<BenchmarkHandle> {
        benchmarks::handle(self.benchmark, self.gkls.as_ref())
    }

    pub fn solver_settings(&self) -> SolverSettings {
        let mut s = SolverSettings {
            ims_restarts: self.ims.restarts,
            ..SolverSettings::default()
        };
        s.bnb.eps_r = self.bnb.eps_r;
        s.bnb.eps_a = self.bnb.eps_a;
        s.bnb.time_limit = Duration::from_secs_f64(self.bnb.time_limit);
        s.bnb.node_cap = self.bnb.node_cap;
        s
    }

    /// Effective runs of `solver` per experiment.
    pub fn executed_runs(&self, solver: SolverKind) -> usize {
        if solver.is_deterministic() && self.replicate_deterministic {
            1
        } else {
            self.runs_per_experiment
        }
    }
}

/// Overlays `user` on `base`; nested tables merge except the ones that
/// select a variant.
fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) if k != "kappa" && k != "gkls" => {
                merge(b, u)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
