//! Experiment and dataset descriptions read from TOML or JSON.

use std::fmt;
use std::str::FromStr;

use cgl_core::dynamics::InputKind;
use cgl_core::graphs::Admissibility;
use cgl_core::{FilterSource, FilterSpec, GraphSpec, Laplacian, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Filter description, resolved against the drawn graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterConfig {
    /// Rates `fractions[t] / λ_max`.
    Relative { fractions: Vec<f64> },
    /// `steps` copies of `fraction / λ_max`.
    Constant { fraction: f64, steps: usize },
    /// Absolute rates.
    Rates { rates: Vec<f64> },
    /// Per-sample random filters.
    RandomPerSample {
        #[serde(default = "default_steps")]
        steps: Vec<usize>,
    },
}

fn default_steps() -> Vec<usize> {
    vec![3, 4, 5]
}

impl FilterConfig {
    pub fn resolve(&self, l: &Laplacian) -> Result<FilterSource, CliError> {
        let lmax = l.lambda_max();
        let filter = match self {
            FilterConfig::Relative { fractions } => FilterSpec::relative_to(lmax, fractions)?,
            FilterConfig::Constant { fraction, steps } => FilterSpec::constant(fraction / lmax, *steps)?,
            FilterConfig::Rates { rates } => FilterSpec::new(rates.clone())?,
            FilterConfig::RandomPerSample { steps } => {
                if steps.is_empty() || steps.contains(&0) {
                    return Err(CliError::Config("random filter steps must be nonempty and positive".into()));
                }
                return Ok(FilterSource::RandomPerSample { steps: steps.clone() });
            }
        };
        filter.check_stable(lmax)?;
        Ok(FilterSource::fixed(filter))
    }
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "inversefilter")]
    InverseFilter,
    #[serde(rename = "nearestcgl")]
    NearestCgl,
    #[serde(rename = "orderedspectemp")]
    OrderedSpecTemp,
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "structglasso")]
    StructGLasso,
    #[serde(rename = "spectemp-leigvec")]
    SpecTempLEigVec,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::InverseFilter, Method::NearestCgl, Method::OrderedSpecTemp, Method::Hybrid, Method::StructGLasso, Method::SpecTempLEigVec];

    pub fn name(self) -> &'static str {
        match self {
            Method::InverseFilter => "inversefilter",
            Method::NearestCgl => "nearestcgl",
            Method::OrderedSpecTemp => "orderedspectemp",
            Method::Hybrid => "hybrid",
            Method::StructGLasso => "structglasso",
            Method::SpecTempLEigVec => "spectemp-leigvec",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Method::StructGLasso | Method::SpecTempLEigVec)
    }

    /// Methods that need the true filter.
    pub fn needs_filter(self) -> bool {
        matches!(self, Method::InverseFilter | Method::NearestCgl | Method::StructGLasso)
    }

    /// Template methods only identify the Laplacian up to scale.
    pub fn default_trace_normalize(self) -> bool {
        matches!(self, Method::OrderedSpecTemp | Method::Hybrid | Method::SpecTempLEigVec)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| CliError::Usage(format!("unknown method {s:?}")))
    }
}

/// One method entry. A bare name is accepted as shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Name(Method),
    Full(MethodSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    /// Name in the results; defaults to the method name.
    #[serde(default)]
    pub label: Option<String>,
    /// Replaces the experiment-wide solver config for this entry.
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub trace_normalize: Option<bool>,
}

impl MethodEntry {
    pub fn spec(&self) -> MethodSpec {
        match self {
            MethodEntry::Name(m) => MethodSpec { method: *m, label: None, solver: None, trace_normalize: None },
            MethodEntry::Full(s) => s.clone(),
        }
    }
}

impl MethodSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.name().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Sample covariance of simulated snapshots.
    #[default]
    Sample,
    /// Exact covariance of the fixed filter; the M grid only labels rows.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub edge_threshold: f64,
    pub success_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { edge_threshold: cgl_core::metrics::EDGE_THRESHOLD, success_threshold: cgl_core::metrics::SUCCESS_THRESHOLD }
    }
}

/// A (method × M × seed) benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub graph: GraphSpec,
    #[serde(default)]
    pub admissibility: Option<Admissibility>,
    pub filter: FilterConfig,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub input: InputKind,
    #[serde(default)]
    pub covariance: CovarianceMode,
    pub m: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodEntry>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ExperimentSpec {
    pub fn validate(&self, allow_baselines: bool) -> Result<(), CliError> {
        if self.m.is_empty() {
            return Err(CliError::Usage("the M grid is empty".into()));
        }
        if self.covariance == CovarianceMode::Sample && self.m.contains(&0) {
            return Err(CliError::Usage("M values must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Usage("no seeds given".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(CliError::Usage("seeds must be distinct".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Usage("no methods given".into()));
        }
        let mut labels = Vec::new();
        for entry in &self.methods {
            let spec = entry.spec();
            if spec.method.is_baseline() && !allow_baselines {
                return Err(CliError::Usage(format!("{} is a baseline; pass --baseline to run it", spec.method)));
            }
            if spec.method == Method::StructGLasso && !cfg!(feature = "structglasso") {
                return Err(CliError::Usage("structglasso support is not compiled in".into()));
            }
            if let Some(s) = &spec.solver {
                s.validate()?;
            }
            labels.push(spec.label());
        }
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Usage("method labels must be unique".into()));
        }
        self.solver.validate()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(CliError::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.covariance == CovarianceMode::Analytic && matches!(self.filter, FilterConfig::RandomPerSample { .. }) {
            return Err(CliError::Config("analytic covariance needs a fixed filter".into()));
        }
        Ok(())
    }
}
